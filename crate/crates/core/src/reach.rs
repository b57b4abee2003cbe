//! Sampled reachable sets: terminal states of simulated solutions indexed by
//! jump schedules, and nearest-point containment between two samples.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{HybridError, Result};
use crate::hysys::{cartesian, simulate, uniform_points, Horizon, HybridSystem, JumpCommand, SolverConfig, Trigger};

/// One simulated schedule and where it ended.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachPoint {
    pub commands: Vec<JumpCommand>,
    /// Ordinary horizon time the schedule was simulated to.
    pub time: f64,
    /// Final state of the simulation (the `(T, J)` value when attained).
    pub state: Vec<f64>,
    pub attained: bool,
}

impl ReachPoint {
    /// Schedule flattened as `[time of At commands, params...]` per jump.
    pub fn decision_key(&self) -> Vec<f64> {
        flatten(&self.commands)
    }
}

fn flatten(commands: &[JumpCommand]) -> Vec<f64> {
    let mut out = Vec::new();
    for c in commands {
        if let Trigger::At(t) = c.trigger {
            out.push(t);
        }
        out.extend_from_slice(&c.param);
    }
    out
}

/// Point cloud approximation of the reachable set, sorted by horizon time and
/// then by decision key.
#[derive(Debug, Clone, PartialEq)]
pub struct ReachSample {
    pub jumps: usize,
    pub points: Vec<ReachPoint>,
}

impl ReachSample {
    /// States attained at the requested hybrid time.
    pub fn terminal_states(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.points.iter().filter(|p| p.attained).map(|p| p.state.as_slice())
    }

    /// Schedules that attained the requested hybrid time.
    pub fn decisions(&self) -> impl Iterator<Item = &[JumpCommand]> + '_ {
        self.points.iter().filter(|p| p.attained).map(|p| p.commands.as_slice())
    }

    pub fn feasible(&self) -> bool {
        self.points.iter().any(|p| p.attained)
    }

    /// Writes `decision_1..decision_m,x_1..x_n,attained`. When the sample spans
    /// several horizon times a leading `T` column is added.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let width = self.points.iter().map(|p| p.decision_key().len()).max().unwrap_or(0);
        let dim = self.points.first().map_or(0, |p| p.state.len());
        let with_time = self.points.windows(2).any(|p| p[0].time != p[1].time);
        let mut header: Vec<String> = Vec::new();
        if with_time {
            header.push("T".into());
        }
        header.extend((1..=width).map(|k| format!("decision_{k}")));
        header.extend((1..=dim).map(|k| format!("x_{k}")));
        header.push("attained".into());
        writeln!(w, "{}", header.join(","))?;
        for p in &self.points {
            let mut cells: Vec<String> = Vec::with_capacity(header.len());
            if with_time {
                cells.push(p.time.to_string());
            }
            let key = p.decision_key();
            cells.extend((0..width).map(|k| key.get(k).map_or(String::new(), f64::to_string)));
            cells.extend(p.state.iter().map(f64::to_string));
            cells.push(p.attained.to_string());
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// Every assignment of a candidate parameter to each of `jumps` forced jumps.
pub fn forced_schedules(candidates: &[Vec<f64>], jumps: usize) -> Vec<Vec<JumpCommand>> {
    let index: Vec<f64> = (0..candidates.len()).map(|k| k as f64).collect();
    cartesian(&vec![index; jumps])
        .into_iter()
        .map(|ks| ks.iter().map(|&k| JumpCommand::forced(candidates[k as usize].clone())).collect())
        .collect()
}

/// Every nondecreasing choice of `jumps` switch times from `times`, each
/// jump using `param`.
pub fn timed_schedules(times: &[f64], jumps: usize, param: &[f64]) -> Vec<Vec<JumpCommand>> {
    let mut tuples: Vec<Vec<f64>> = cartesian(&vec![times.to_vec(); jumps])
        .into_iter()
        .filter(|t| t.windows(2).all(|w| w[0] <= w[1]))
        .collect();
    tuples.dedup();
    tuples.into_iter().map(|ts| ts.into_iter().map(|t| JumpCommand::at(t, param.to_vec())).collect()).collect()
}

/// Terminal states at `(T, J)` of the solutions selected by `schedules`.
/// Schedules whose `At` commands fire outside the jump set select no
/// solution and are reported as not attained.
pub fn reach_sample(
    sys: &HybridSystem,
    x0: &[f64],
    horizon: Horizon,
    schedules: &[Vec<JumpCommand>],
    cfg: &SolverConfig,
) -> Result<ReachSample> {
    reach_interval(sys, x0, horizon.time, horizon.time, horizon.jumps, schedules, 1, cfg)
}

/// Union of [`reach_sample`] over `time_points` uniform horizon times in
/// `[t_lo, t_hi]`.
#[allow(clippy::too_many_arguments)]
pub fn reach_interval(
    sys: &HybridSystem,
    x0: &[f64],
    t_lo: f64,
    t_hi: f64,
    jumps: usize,
    schedules: &[Vec<JumpCommand>],
    time_points: usize,
    cfg: &SolverConfig,
) -> Result<ReachSample> {
    cfg.validate()?;
    if x0.len() != sys.dim() {
        return Err(HybridError::DimensionMismatch { expected: sys.dim(), got: x0.len() });
    }
    if !(t_lo >= 0.0) || !(t_lo <= t_hi) || !t_hi.is_finite() {
        return Err(HybridError::InvalidProblem(format!("need 0 <= T_lo <= T_hi, got [{t_lo}, {t_hi}]")));
    }
    if !(sys.in_flow_set(x0, cfg.state_tol) || sys.in_jump_set(x0, cfg.state_tol)) {
        return Err(HybridError::InvalidInitialCondition);
    }
    let times = uniform_points(t_lo, t_hi, time_points.max(1));
    let jobs: Vec<(f64, &Vec<JumpCommand>)> = times.iter().flat_map(|&t| schedules.iter().map(move |s| (t, s))).collect();
    let mut points = jobs
        .par_iter()
        .map(|&(t, commands)| -> Result<ReachPoint> {
            match simulate(sys, x0, commands, Horizon::new(t, jumps), cfg) {
                Ok((arc, status)) => Ok(ReachPoint {
                    commands: commands.clone(),
                    time: t,
                    state: arc.terminal_state().to_vec(),
                    attained: status.reached(),
                }),
                Err(HybridError::CommandOutsideD { .. }) => {
                    Ok(ReachPoint { commands: commands.clone(), time: t, state: x0.to_vec(), attained: false })
                }
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    points.sort_by(|a, b| {
        a.time.total_cmp(&b.time).then_with(|| crate::optctrl::lex_cmp(&a.decision_key(), &b.decision_key()))
    });
    Ok(ReachSample { jumps, points })
}

/// Nearest-point distances from each nominal terminal state to the perturbed sample.
#[derive(Debug, Clone, PartialEq)]
pub struct ContainmentReport {
    pub distances: Vec<f64>,
    pub max_distance: f64,
    pub slack: f64,
    pub pass: bool,
}

/// Passes when every attained nominal point lies within `slack` of some
/// attained perturbed point.
pub fn containment_check(nominal: &ReachSample, perturbed: &ReachSample, slack: f64) -> Result<ContainmentReport> {
    let targets: Vec<&[f64]> = perturbed.terminal_states().collect();
    let sources: Vec<&[f64]> = nominal.terminal_states().collect();
    if targets.is_empty() || sources.is_empty() {
        return Err(HybridError::EmptySample);
    }
    let (n, m) = (sources[0].len(), targets[0].len());
    if n != m {
        return Err(HybridError::DimensionMismatch { expected: n, got: m });
    }
    let distances: Vec<f64> = sources
        .par_iter()
        .map(|x| {
            targets
                .iter()
                .map(|y| x.iter().zip(y.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .collect();
    let max_distance = distances.iter().copied().fold(0.0, f64::max);
    Ok(ContainmentReport { pass: max_distance <= slack, distances, max_distance, slack })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples::{ball_system, thermostat_system, BallParams, ThermoParams};

    fn cfg() -> SolverConfig {
        SolverConfig::default().with_step(1e-4)
    }

    #[test]
    fn ballistic_singleton_before_impact() {
        let sys = ball_system(&BallParams::default());
        let r = reach_sample(&sys, &[1.0, 0.0], Horizon::new(0.2, 0), &[vec![]], &cfg()).unwrap();
        let pts: Vec<&[f64]> = r.terminal_states().collect();
        assert_eq!(pts.len(), 1);
        assert!((pts[0][0] - 0.8038).abs() < 1e-9 && (pts[0][1] + 1.962).abs() < 1e-9);
    }

    #[test]
    fn no_jump_before_first_impact() {
        let sys = ball_system(&BallParams::default());
        let s = forced_schedules(&[vec![1.0], vec![10.0]], 1);
        let r = reach_sample(&sys, &[1.0, 0.0], Horizon::new(0.3, 1), &s, &cfg()).unwrap();
        assert!(!r.feasible());
    }

    #[test]
    fn terminal_velocity_increases_with_input() {
        let sys = ball_system(&BallParams::default());
        let s = forced_schedules(&[vec![1.0], vec![5.5], vec![10.0]], 1);
        let r = reach_sample(&sys, &[1.0, 0.0], Horizon::new(1.0, 1), &s, &cfg()).unwrap();
        let v: Vec<f64> = r.terminal_states().map(|x| x[1]).collect();
        assert_eq!(v.len(), 3);
        assert!(v[0] < v[1] && v[1] < v[2]);
        let t1 = (2.0f64 / 9.81).sqrt();
        let expected = 0.8 * 4.429447 + 1.0 - 9.81 * (1.0 - t1);
        assert!((v[0] - expected).abs() < 1e-5);
    }

    #[test]
    fn interval_straddling_first_impact_with_no_jumps() {
        let sys = ball_system(&BallParams::default());
        let r = reach_interval(&sys, &[1.0, 0.0], 0.3, 0.6, 0, &[vec![]], 7, &cfg()).unwrap();
        let t1 = (2.0f64 / 9.81).sqrt();
        assert!(r.points.iter().all(|p| p.attained == (p.time <= t1)));
        assert!(r.feasible());
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("T,x_1,x_2,attained\n"));
    }

    #[test]
    fn degenerate_interval_matches_sample() {
        let sys = ball_system(&BallParams::default());
        let s = forced_schedules(&[vec![2.0], vec![3.0]], 1);
        let a = reach_interval(&sys, &[1.0, 0.0], 1.0, 1.0, 1, &s, 5, &cfg()).unwrap();
        let b = reach_sample(&sys, &[1.0, 0.0], Horizon::new(1.0, 1), &s, &cfg()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn thermostat_timed_schedules() {
        let sys = thermostat_system(&ThermoParams::default());
        let s = timed_schedules(&[0.0, 0.5, 1.0], 2, &[0.0]);
        assert_eq!(s.len(), 6);
        let r = reach_sample(&sys, &[20.0, 0.0], Horizon::new(1.0, 2), &s, &SolverConfig::default()).unwrap();
        assert!(r.points.iter().all(|p| p.attained && p.state[1] == 0.0));
    }

    #[test]
    fn containment_of_translation() {
        let sys = ball_system(&BallParams::default());
        let s = forced_schedules(&[vec![1.0], vec![4.0], vec![7.0]], 1);
        let a = reach_sample(&sys, &[1.0, 0.0], Horizon::new(1.0, 1), &s, &cfg()).unwrap();
        let same = containment_check(&a, &a, 0.0).unwrap();
        assert!(same.pass && same.max_distance == 0.0);
        let mut b = a.clone();
        for p in &mut b.points {
            p.state[0] += 0.3;
            p.state[1] -= 0.4;
        }
        let r = containment_check(&a, &b, 0.5).unwrap();
        assert!((r.max_distance - 0.5).abs() < 1e-12);
        let empty = ReachSample { jumps: 1, points: vec![] };
        assert_eq!(containment_check(&a, &empty, 1.0).unwrap_err(), HybridError::EmptySample);
    }

    #[test]
    fn refining_the_grid_keeps_points() {
        let sys = ball_system(&BallParams::default());
        let coarse = forced_schedules(&[vec![1.0], vec![10.0]], 2);
        let fine = forced_schedules(&[vec![1.0], vec![5.5], vec![10.0]], 2);
        let h = Horizon::new(3.0, 2);
        let a = reach_sample(&sys, &[1.0, 0.0], h, &coarse, &cfg()).unwrap();
        let b = reach_sample(&sys, &[1.0, 0.0], h, &fine, &cfg()).unwrap();
        for x in a.terminal_states() {
            assert!(b.terminal_states().any(|y| y == x));
        }
    }
}
