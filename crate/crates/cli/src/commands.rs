//! One runner per experiment command. Runners write their CSV artifacts and
//! return a JSON summary for the manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use hybridopt_core::closeness::log_grid;
use hybridopt_core::optctrl::{
    solve_ball, solve_thermostat, value_sweep, write_sweep_csv, BallProblem, ProblemFamily, SweepPoint, ThermoProblem,
};
use hybridopt_core::reach::{forced_schedules, timed_schedules};
use hybridopt_core::{
    graphical_convergence_report, min_eps, reach_interval, rho_perturb, simulate, BallParams, ExampleSystem, Horizon,
    HybridArc, HybridError, HybridSystem, JumpCommand, SimStatus, ThermoParams,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{ArcSpec, Command, ExperimentConfig};
use crate::exit::Failure;

/// Directions per axis of the sampled perturbation used by `reach`.
const PERTURB_DIR_GRID: usize = 4;

/// Artifact paths derived from the output prefix.
pub struct Output {
    prefix: String,
    pub written: Vec<PathBuf>,
}

impl Output {
    pub fn new(prefix: &str) -> Self {
        Self { prefix: prefix.to_string(), written: Vec::new() }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        if self.prefix.is_empty() || self.prefix.ends_with('/') {
            PathBuf::from(format!("{}{name}", self.prefix))
        } else {
            PathBuf::from(format!("{}_{name}", self.prefix))
        }
    }

    /// Creates the artifact `name`, fills it with `fill` and records it.
    pub fn write(&mut self, name: &str, fill: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<(), Failure> {
        let path = self.path(name);
        let io = |e| Failure::output(e, &path);
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io)?;
        }
        let mut w = BufWriter::new(File::create(&path).map_err(io)?);
        fill(&mut w).and_then(|_| w.flush()).map_err(io)?;
        self.written.push(path);
        Ok(())
    }
}

/// What a runner reports: its summary, plus a failure to raise after the
/// artifacts and manifest are written.
pub struct Report {
    pub summary: Value,
    pub failure: Option<Failure>,
}

impl Report {
    fn ok(summary: Value) -> Self {
        Self { summary, failure: None }
    }
}

pub fn run(cfg: &ExperimentConfig, out: &mut Output, verbose: bool) -> Result<Report, Failure> {
    let log = |msg: String| {
        if verbose {
            eprintln!("[hybridopt] {msg}");
        }
    };
    match cfg.command {
        Command::Simulate => simulate_cmd(cfg, out),
        Command::Sweep => sweep_cmd(cfg, out, &log),
        Command::Reach => reach_cmd(cfg, out, &log),
        Command::Closeness => closeness_cmd(cfg, out),
        Command::Fig1 => fig1_cmd(cfg, out, &log),
        Command::Fig2 => fig2_cmd(cfg, out, &log),
        Command::ThermostatDemo => thermostat_cmd(cfg, out, &log),
    }
}

fn build_commands(sys: &HybridSystem, spec: &ArcSpec) -> Vec<JumpCommand> {
    if spec.commands.is_empty() {
        // forced jumps at the lower corner of the parameter box
        return vec![JumpCommand::forced(sys.params().lower().to_vec()); spec.jumps];
    }
    spec.commands
        .iter()
        .map(|c| match c.at {
            Some(t) => JumpCommand::at(t, c.param.clone()),
            None => JumpCommand::forced(c.param.clone()),
        })
        .collect()
}

fn simulate_spec(cfg: &ExperimentConfig, spec: &ArcSpec) -> Result<(HybridArc, SimStatus), Failure> {
    let sys = cfg.system.build()?;
    let commands = build_commands(&sys, spec);
    Ok(simulate(&sys, &spec.x0, &commands, Horizon::new(spec.time, spec.jumps), &cfg.solver.build())?)
}

fn status_json(status: &SimStatus) -> Value {
    json!({ "outcome": format!("{:?}", status.outcome), "final_time": [status.final_time.0, status.final_time.1] })
}

fn simulate_cmd(cfg: &ExperimentConfig, out: &mut Output) -> Result<Report, Failure> {
    let spec = cfg.simulate.as_ref().expect("validated");
    let (arc, status) = simulate_spec(cfg, spec)?;
    out.write("arc.csv", |w| arc.write_csv(w))?;
    let failure = (!status.reached()).then(|| {
        Failure::infeasible(format!(
            "simulation stopped with {:?} at ({}, {}) before ({}, {})",
            status.outcome, status.final_time.0, status.final_time.1, spec.time, spec.jumps
        ))
    });
    Ok(Report { summary: json!({ "status": status_json(&status), "jump_times": arc.domain().jump_times() }), failure })
}

fn family(cfg: &ExperimentConfig) -> ProblemFamily {
    match cfg.system {
        ExampleSystem::Ball(p) => ProblemFamily::Ball(p),
        ExampleSystem::Thermostat(p) => ProblemFamily::Thermostat(p),
    }
}

fn sweep_cmd(cfg: &ExperimentConfig, out: &mut Output, log: &dyn Fn(String)) -> Result<Report, Failure> {
    let spec = cfg.sweep.as_ref().expect("validated");
    let mut grid = Vec::new();
    for x1 in spec.xi_1.values() {
        for x2 in spec.xi_2.values() {
            for t in spec.time.values() {
                for &j in &spec.jumps {
                    for d in spec.delta.values() {
                        grid.push(SweepPoint::new([x1, x2], t, j).with_delta(d));
                    }
                }
            }
        }
    }
    log(format!("sweeping {} points", grid.len()));
    let rows = value_sweep(&family(cfg), &grid, &cfg.optimizer)?;
    out.write("sweep.csv", |w| write_sweep_csv(&rows, w))?;
    let errors: Vec<String> = rows.iter().filter_map(|r| r.error.clone()).collect();
    Ok(Report::ok(json!({
        "points": rows.len(),
        "feasible": rows.iter().filter(|r| r.feasible).count(),
        "errors": errors,
    })))
}

fn reach_cmd(cfg: &ExperimentConfig, out: &mut Output, log: &dyn Fn(String)) -> Result<Report, Failure> {
    let spec = cfg.reach.as_ref().expect("validated");
    let nominal = cfg.system.build()?;
    let sys = match spec.delta {
        Some(d) => rho_perturb(&nominal, d, Arc::new(|_| 1.0), PERTURB_DIR_GRID)?,
        None => nominal,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let t_hi = spec.time_hi.unwrap_or(spec.time);
    let mut schedules = match cfg.system {
        ExampleSystem::Ball(_) => forced_schedules(&sys.params().grid(spec.param_points), spec.jumps),
        ExampleSystem::Thermostat(_) => {
            let n = spec.param_points.max(2);
            let times: Vec<f64> = (0..n).map(|k| t_hi * k as f64 / (n - 1) as f64).collect();
            timed_schedules(&times, spec.jumps, &vec![0.0; sys.params().dim()])
        }
    };
    let (lo, hi) = (sys.params().lower().to_vec(), sys.params().upper().to_vec());
    for _ in 0..spec.random_schedules {
        let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            lo.iter().zip(&hi).map(|(&a, &b)| if a < b { rng.gen_range(a..=b) } else { a }).collect()
        };
        let schedule = match cfg.system {
            ExampleSystem::Ball(_) => (0..spec.jumps).map(|_| JumpCommand::forced(draw(&mut rng))).collect(),
            ExampleSystem::Thermostat(_) => {
                let mut ts: Vec<f64> = (0..spec.jumps).map(|_| rng.gen_range(0.0..=t_hi)).collect();
                ts.sort_by(f64::total_cmp);
                ts.into_iter().map(|t| JumpCommand::at(t, draw(&mut rng))).collect()
            }
        };
        schedules.push(schedule);
    }
    log(format!("simulating {} schedules at {} horizon times", schedules.len(), spec.time_points));
    let sample = reach_interval(&sys, &spec.x0, spec.time, t_hi, spec.jumps, &schedules, spec.time_points, &cfg.solver.build())?;
    out.write("reach.csv", |w| sample.write_csv(w))?;
    let attained = sample.points.iter().filter(|p| p.attained).count();
    let failure = (attained == 0).then(|| Failure::infeasible("no sampled schedule attains the requested hybrid time"));
    Ok(Report { summary: json!({ "points": sample.points.len(), "attained": attained }), failure })
}

fn closeness_cmd(cfg: &ExperimentConfig, out: &mut Output) -> Result<Report, Failure> {
    let spec = cfg.closeness.as_ref().expect("validated");
    let (a, sa) = simulate_spec(cfg, &spec.a)?;
    let (b, sb) = simulate_spec(cfg, &spec.b)?;
    let grid = log_grid(spec.eps_lo, spec.eps_hi, spec.eps_points);
    let report = min_eps(&a, &b, spec.tau, &grid)?;
    out.write("arc_a.csv", |w| a.write_csv(w))?;
    out.write("arc_b.csv", |w| b.write_csv(w))?;
    out.write("closeness.csv", |w| {
        writeln!(w, "tau,eps_star,direction,t,j,reason,distance")?;
        if report.direction_failures.is_empty() {
            writeln!(w, "{},{},,,,,", report.tau, report.eps_star)?;
        }
        for wit in &report.direction_failures {
            let (reason, dist) = match wit.reason {
                hybridopt_core::closeness::FailureReason::NoMatchingTime => ("no_matching_time", String::new()),
                hybridopt_core::closeness::FailureReason::StateDistance(d) => ("state_distance", d.to_string()),
            };
            let dir = if wit.a_to_b { "a_to_b" } else { "b_to_a" };
            writeln!(w, "{},{},{dir},{},{},{reason},{dist}", report.tau, report.eps_star, wit.t, wit.j)?;
        }
        Ok(())
    })?;
    Ok(Report::ok(json!({
        "eps_star": report.eps_star,
        "status_a": status_json(&sa),
        "status_b": status_json(&sb),
    })))
}

fn ball_params(cfg: &ExperimentConfig) -> BallParams {
    match cfg.system {
        ExampleSystem::Ball(p) => p,
        ExampleSystem::Thermostat(_) => unreachable!("validated"),
    }
}

fn fig1_cmd(cfg: &ExperimentConfig, out: &mut Output, log: &dyn Fn(String)) -> Result<Report, Failure> {
    let spec = cfg.fig1.clone().unwrap_or_default();
    let params = ball_params(cfg);
    let axis = |c: f64| -> Vec<f64> {
        let n = spec.points.max(1);
        if n == 1 {
            return vec![c];
        }
        (0..n).map(|k| c - spec.radius + 2.0 * spec.radius * k as f64 / (n - 1) as f64).collect()
    };
    let mut grid = Vec::new();
    for t in axis(spec.time) {
        for p in axis(spec.height) {
            grid.push(SweepPoint::new([p, 0.0], t, spec.jumps));
        }
    }
    log(format!("cost surface over {} points", grid.len()));
    let rows = value_sweep(&ProblemFamily::Ball(params), &grid, &cfg.optimizer)?;
    out.write("fig1_surface.csv", |w| write_sweep_csv(&rows, w))?;

    let nominal = solve_ball(&BallProblem::new(params, [spec.height, 0.0], spec.time, spec.jumps), &cfg.optimizer)?;
    let seq: Vec<(f64, f64)> = (0..=spec.sequence)
        .map(|i| {
            let s = if i == 0 { 0.0 } else { 0.5f64.powi(i as i32) };
            (spec.time + s, spec.height + s)
        })
        .collect();
    log(format!("input convergence along {} points", spec.sequence));
    let sols: Vec<_> = seq
        .par_iter()
        .map(|&(t, p)| solve_ball(&BallProblem::new(params, [p, 0.0], t, spec.jumps), &cfg.optimizer))
        .collect();
    let mut distances = Vec::new();
    out.write("fig1_inputs.csv", |w| {
        write!(w, "i,T,p,feasible,h")?;
        for k in 1..=spec.jumps {
            write!(w, ",u_{k}")?;
        }
        writeln!(w, ",distance")?;
        for (i, ((t, p), sol)) in seq.iter().zip(&sols).enumerate() {
            match sol {
                Ok(s) => {
                    let d = s.decisions.iter().zip(&nominal.decisions).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                    distances.push(d);
                    write!(w, "{i},{t},{p},true,{}", s.cost)?;
                    for u in &s.decisions {
                        write!(w, ",{u}")?;
                    }
                    writeln!(w, ",{d}")?;
                }
                Err(_) => writeln!(w, "{i},{t},{p},false,inf{},", ",".repeat(spec.jumps))?,
            }
        }
        Ok(())
    })?;
    Ok(Report::ok(json!({
        "nominal": { "h": nominal.cost, "u": nominal.decisions },
        "surface_points": rows.len(),
        "surface_feasible": rows.iter().filter(|r| r.feasible).count(),
        "input_distances": distances,
    })))
}

fn fig2_cmd(cfg: &ExperimentConfig, out: &mut Output, log: &dyn Fn(String)) -> Result<Report, Failure> {
    let spec = cfg.fig2.clone().unwrap_or_default();
    let params = ball_params(cfg);
    let solve = |t: f64, p: f64| solve_ball(&BallProblem::new(params, [p, 0.0], t, spec.jumps), &cfg.optimizer);
    let limit = solve(spec.time, spec.height)?;
    let seq: Vec<HybridArc> = (1..=spec.sequence)
        .into_par_iter()
        .map(|i| {
            let s = 0.5f64.powi(i as i32);
            solve(spec.time + s, spec.height + s).map(|sol| sol.arc)
        })
        .collect::<Result<_, _>>()?;
    let tau = spec.time + spec.jumps as f64 + 1.0;
    log(format!("closeness of {} arcs at tau = {tau}", seq.len()));
    let grid = log_grid(spec.eps_lo, spec.eps_hi, spec.eps_points);
    let report = graphical_convergence_report(&seq, &limit.arc, tau, &grid, Default::default())?;
    out.write("fig2_arc_limit.csv", |w| limit.arc.write_csv(w))?;
    for (i, arc) in seq.iter().enumerate() {
        out.write(&format!("fig2_arc_{}.csv", i + 1), |w| arc.write_csv(w))?;
    }
    out.write("fig2_eps.csv", |w| report.write_csv(w))?;
    Ok(Report::ok(json!({ "tau": tau, "eps_star": report.eps_star, "converging": report.converging })))
}

fn thermostat_cmd(cfg: &ExperimentConfig, out: &mut Output, log: &dyn Fn(String)) -> Result<Report, Failure> {
    let spec = cfg.thermostat_demo.clone().unwrap_or_default();
    let base = match cfg.system {
        ExampleSystem::Thermostat(p) => p,
        ExampleSystem::Ball(_) => unreachable!("validated"),
    };
    let cases: Vec<(f64, usize)> =
        spec.costs.iter().flat_map(|&c| (0..=spec.max_jumps).map(move |j| (c, j))).collect();
    log(format!("solving {} schedules", cases.len()));
    let results: Vec<Option<(f64, Vec<f64>)>> = cases
        .par_iter()
        .map(|&(c, j)| {
            let p = ThermoParams { c_on: c, c_off: c, ..base };
            match solve_thermostat(&ThermoProblem::new(p, spec.xi, spec.time, j), &cfg.optimizer) {
                Ok(s) => Ok(Some((s.cost, s.decisions))),
                Err(HybridError::Infeasible(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_, _>>()?;
    let per_cost = spec.max_jumps + 1;
    let mut best_jumps = Vec::new();
    for chunk in results.chunks(per_cost) {
        let best = chunk
            .iter()
            .enumerate()
            .filter_map(|(j, r)| r.as_ref().map(|(h, _)| (j, *h)))
            .fold(None, |b: Option<(usize, f64)>, (j, h)| if b.is_none_or(|(_, bh)| h < bh) { Some((j, h)) } else { b });
        best_jumps.push(best.map(|(j, _)| j));
    }
    out.write("thermostat_demo.csv", |w| {
        write!(w, "c,J,feasible,h,best")?;
        for k in 1..=spec.max_jumps {
            write!(w, ",t_{k}")?;
        }
        writeln!(w)?;
        for (k, (&(c, j), r)) in cases.iter().zip(&results).enumerate() {
            let best = best_jumps[k / per_cost] == Some(j);
            let (feasible, h, times) = match r {
                Some((h, ts)) => (true, h.to_string(), ts.clone()),
                None => (false, "inf".to_string(), Vec::new()),
            };
            write!(w, "{c},{j},{feasible},{h},{best}")?;
            for i in 0..spec.max_jumps {
                match times.get(i) {
                    Some(t) => write!(w, ",{t}")?,
                    None => write!(w, ",")?,
                }
            }
            writeln!(w)?;
        }
        Ok(())
    })?;
    Ok(Report::ok(json!({ "costs": spec.costs, "best_jumps": best_jumps })))
}

/// Writes `<prefix>_manifest.json`: config echo, version, wall time and artifacts.
pub fn write_manifest(
    out: &mut Output,
    cfg: &ExperimentConfig,
    summary: &Value,
    wall: std::time::Duration,
    threads: usize,
) -> Result<(), Failure> {
    let artifacts: Vec<String> = out.written.iter().map(|p| file_name(p)).collect();
    let manifest = json!({
        "tool": "hybridopt",
        "version": env!("CARGO_PKG_VERSION"),
        "command": cfg.command,
        "seed": cfg.seed,
        "threads": threads,
        "wall_time_s": wall.as_secs_f64(),
        "artifacts": artifacts,
        "summary": summary,
        "config": cfg,
    });
    out.write("manifest.json", |w| {
        serde_json::to_writer_pretty(&mut *w, &manifest)?;
        writeln!(w)
    })
}

fn file_name(p: &Path) -> String {
    p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned())
}
