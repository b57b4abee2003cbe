mod common;

use std::sync::Arc;

use common::*;
use hybridopt_core::optctrl::ball_feasible_window;
use hybridopt_core::reach::{forced_schedules, reach_interval};
use hybridopt_core::*;
use proptest::prelude::*;

fn ball() -> HybridSystem {
    ball_system(&BallParams::default())
}

fn inputs(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|k| vec![1.0 + 9.0 * k as f64 / (n - 1) as f64]).collect()
}

#[test]
fn nominal_reach_inside_perturbed_reach() {
    let delta = 0.05;
    let psys = rho_perturb(&ball(), delta, Arc::new(|_| 1.0), 4).unwrap();
    let horizon = Horizon::new(2.5, 2);
    let cfg = SolverConfig::default();
    let nominal = reach_sample(&ball(), &[1.0, 0.0], horizon, &forced_schedules(&inputs(8), 2), &cfg).unwrap();
    // zero disturbance, jumping on contact with the floor
    let schedules: Vec<Vec<JumpCommand>> = forced_schedules(&inputs(8), 2)
        .into_iter()
        .map(|s| {
            let u: Vec<f64> = s.iter().map(|c| c.param[0]).collect();
            let (t, _) = ball_impacts(GAMMA, LAMBDA, [1.0, 0.0], &u, 2);
            u.iter().zip(t).map(|(&u, t)| JumpCommand::at(t, vec![u, 0.0, 0.0])).collect()
        })
        .collect();
    let perturbed = reach_sample(&psys, &[1.0, 0.0], horizon, &schedules, &cfg).unwrap();
    let report = containment_check(&nominal, &perturbed, 1e-6).unwrap();
    assert!(report.pass, "{report:?}");
    assert_eq!(report.distances.len(), nominal.terminal_states().count());
}

#[test]
fn flights_after_first_impact_always_attained() {
    let t1 = (2.0 / 9.81f64).sqrt();
    let sample = reach_interval(&ball(), &[1.0, 0.0], t1 + 0.1, t1 + 0.2, 1, &forced_schedules(&inputs(5), 1), 4, &SolverConfig::default()).unwrap();
    assert_eq!(sample.points.len(), 20);
    assert!(sample.points.iter().all(|p| p.attained));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sampled_reach_nonempty_exactly_on_the_window(jumps in 1usize..3, frac in 0.01f64..0.99) {
        let w = ball_feasible_window(&BallParams::default(), &[1.0, 0.0], jumps).unwrap().feasibility;
        let cfg = SolverConfig::default();
        let schedules = forced_schedules(&inputs(46), jumps);
        let inside = w.lo + frac * (w.hi - w.lo);
        let constant: Vec<Vec<JumpCommand>> = schedules.into_iter().filter(|s| s.iter().all(|c| c.param == s[0].param)).collect();
        prop_assert!(reach_sample(&ball(), &[1.0, 0.0], Horizon::new(inside, jumps), &constant, &cfg).unwrap().feasible());
        for outside in [w.lo - 0.05, w.hi + 0.05] {
            let r = reach_sample(&ball(), &[1.0, 0.0], Horizon::new(outside, jumps), &constant, &cfg).unwrap();
            prop_assert!(!r.feasible(), "J={jumps} T={outside}");
        }
    }

    #[test]
    fn attained_points_are_arc_values(u in 1.0f64..10.0, t in 0.5f64..1.3) {
        let cfg = SolverConfig::default().with_step(1e-4);
        let r = reach_sample(&ball(), &[1.0, 0.0], Horizon::new(t, 1), &forced_schedules(&[vec![u]], 1), &cfg).unwrap();
        let (times, _) = ball_impacts(GAMMA, LAMBDA, [1.0, 0.0], &[u], 2);
        let expect = times[0] <= t && t <= times[1];
        prop_assert_eq!(r.feasible(), expect);
        if expect {
            let x = r.terminal_states().next().unwrap();
            let o = ball_state(GAMMA, LAMBDA, [1.0, 0.0], &[u], 1, t);
            prop_assert!((x[0] - o[0]).abs() < 1e-6 && (x[1] - o[1]).abs() < 1e-6);
        }
    }
}
