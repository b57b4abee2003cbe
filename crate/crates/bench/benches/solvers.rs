use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use hybridopt_bench::{drop_arc, nominal_ball, two_switch_thermostat};
use hybridopt_core::closeness::log_grid;
use hybridopt_core::optctrl::{solve_ball, solve_thermostat};
use hybridopt_core::reach::forced_schedules;
use hybridopt_core::{
    ball_system, min_eps, reach_sample, simulate, BallParams, Horizon, JumpCommand, OptimizerConfig, SolverConfig,
};

fn simulation(c: &mut Criterion) {
    let sys = ball_system(&BallParams::default());
    let cmds = vec![JumpCommand::forced(vec![5.0]); 4];
    let mut group = c.benchmark_group("simulate_ball");
    for step in [1e-3, 1e-4] {
        let cfg = SolverConfig::default().with_step(step);
        group.bench_with_input(BenchmarkId::from_parameter(step), &cfg, |b, cfg| {
            b.iter(|| simulate(&sys, black_box(&[1.0, 0.0]), &cmds, Horizon::new(6.0, 4), cfg).unwrap())
        });
    }
    group.finish();
}

fn optimal_control(c: &mut Criterion) {
    let cfg = OptimizerConfig::default();
    let ball = nominal_ball();
    c.bench_function("solve_ball_nominal", |b| b.iter(|| solve_ball(black_box(&ball), &cfg).unwrap()));
    let thermo = two_switch_thermostat();
    c.bench_function("solve_thermostat_two_switches", |b| b.iter(|| solve_thermostat(black_box(&thermo), &cfg).unwrap()));
}

fn closeness(c: &mut Criterion) {
    let a = drop_arc(1.0, 1.0, 1, 1e-4);
    let b = drop_arc(1.01, 1.0, 1, 1e-4);
    let grid = log_grid(1e-4, 10.0, 400);
    c.bench_function("min_eps_nearby_drops", |bch| bch.iter(|| min_eps(black_box(&a), &b, 2.0, &grid).unwrap()));
}

fn reachability(c: &mut Criterion) {
    let sys = ball_system(&BallParams::default());
    let inputs: Vec<Vec<f64>> = (0..10).map(|k| vec![1.0 + k as f64]).collect();
    let schedules = forced_schedules(&inputs, 2);
    let cfg = SolverConfig::default();
    c.bench_function("reach_ball_100_schedules", |b| {
        b.iter(|| reach_sample(&sys, black_box(&[1.0, 0.0]), Horizon::new(4.0, 2), &schedules, &cfg).unwrap())
    });
}

criterion_group!(benches, simulation, optimal_control, closeness, reachability);
criterion_main!(benches);
