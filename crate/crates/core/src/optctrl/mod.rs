//! Finite-horizon hybrid optimal control in Mayer form.
//!
//! [`eval_cost`] evaluates the running + jump + terminal cost of a simulated
//! arc. The bouncing-ball and thermostat solvers minimize analytic models of
//! that cost over jump inputs or switching times and then re-simulate the
//! optimal schedule for verification.

mod ball;
mod nelder_mead;
mod sweep;
mod thermostat;

use std::sync::Arc;

use crate::error::{HybridError, Result};
use crate::hysys::{Horizon, HybridSystem, ScalarFn};
use crate::hytime::HybridArc;

pub use ball::{
    ball_energy, ball_feasible_window, ball_flight, ball_jump_cost, ball_jump_times, ball_mayer_problem, solve_ball,
    solve_ball_from, BallCosts, BallFlight, BallProblem, BallWindows, Interval,
};
pub use nelder_mead::{nelder_mead, NelderMeadResult};
pub use sweep::{value_sweep, write_sweep_csv, ProblemFamily, SweepPoint, SweepRow};
pub use thermostat::{
    solve_thermostat, solve_thermostat_from, thermostat_mayer_problem, thermostat_schedule_cost, ThermoProblem,
};

pub type JumpCostFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
pub type TerminalSetFn = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// Cost returned for infeasible problems.
pub const INFEASIBLE_COST: f64 = f64::INFINITY;

/// Optimal control problem with fixed initial state, fixed hybrid horizon
/// `(T, J)` and a terminal constraint set.
#[derive(Clone)]
pub struct MayerProblem {
    pub sys: HybridSystem,
    pub x0: Vec<f64>,
    pub horizon: Horizon,
    pub stage_flow: ScalarFn,
    pub stage_jump: JumpCostFn,
    pub terminal_cost: ScalarFn,
    pub terminal_set: TerminalSetFn,
}

impl std::fmt::Debug for MayerProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MayerProblem")
            .field("sys", &self.sys)
            .field("x0", &self.x0)
            .field("horizon", &self.horizon)
            .finish_non_exhaustive()
    }
}

impl MayerProblem {
    /// Zero stage and terminal costs, unconstrained terminal state.
    pub fn new(sys: HybridSystem, x0: Vec<f64>, horizon: Horizon) -> Self {
        Self {
            sys,
            x0,
            horizon,
            stage_flow: Arc::new(|_| 0.0),
            stage_jump: Arc::new(|_, _| 0.0),
            terminal_cost: Arc::new(|_| 0.0),
            terminal_set: Arc::new(|_| true),
        }
    }

    pub fn with_stage_flow(mut self, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.stage_flow = Arc::new(f);
        self
    }

    pub fn with_stage_jump(mut self, f: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.stage_jump = Arc::new(f);
        self
    }

    pub fn with_terminal_cost(mut self, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.terminal_cost = Arc::new(f);
        self
    }

    pub fn with_terminal_set(mut self, f: impl Fn(&[f64]) -> bool + Send + Sync + 'static) -> Self {
        self.terminal_set = Arc::new(f);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.x0.len() != self.sys.dim() {
            return Err(HybridError::DimensionMismatch { expected: self.sys.dim(), got: self.x0.len() });
        }
        if !self.horizon.time.is_finite() || self.horizon.time < 0.0 {
            return Err(HybridError::NegativeTime(self.horizon.time));
        }
        Ok(())
    }
}

/// Tolerance on the arc's terminal ordinary time when matching the horizon.
const HORIZON_TIME_TOL: f64 = 1e-9;

/// Cost of `arc` under `prob`: the flow cost integrated over every segment by
/// composite Simpson on the arc's samples, plus the jump cost at each pre-jump
/// state with its decision, plus the terminal cost.
pub fn eval_cost(prob: &MayerProblem, arc: &HybridArc, decisions: &[Vec<f64>]) -> Result<f64> {
    prob.validate()?;
    if arc.dim() != prob.sys.dim() {
        return Err(HybridError::DimensionMismatch { expected: prob.sys.dim(), got: arc.dim() });
    }
    let (t_end, j_end) = arc.terminal_time();
    if j_end != prob.horizon.jumps || (t_end - prob.horizon.time).abs() > HORIZON_TIME_TOL * prob.horizon.time.max(1.0) {
        return Err(HybridError::HorizonMismatch {
            t: t_end,
            j: j_end,
            horizon_t: prob.horizon.time,
            horizon_j: prob.horizon.jumps,
        });
    }
    if decisions.len() < j_end {
        return Err(HybridError::InvalidProblem(format!(
            "{} decisions supplied for {j_end} jumps",
            decisions.len()
        )));
    }
    let terminal = arc.terminal_state();
    if !(prob.terminal_set)(terminal) {
        return Err(HybridError::InfeasibleTerminal);
    }
    let mut total = 0.0;
    let mut values = Vec::new();
    for seg in arc.segments() {
        values.clear();
        values.extend(seg.iter().map(|(_, x)| (prob.stage_flow)(x)));
        total += simpson(seg.times(), &values);
    }
    for (k, param) in decisions.iter().take(j_end).enumerate() {
        let x = arc.pre_jump_state(k + 1).expect("jump exists");
        total += (prob.stage_jump)(x, param);
    }
    Ok(total + (prob.terminal_cost)(terminal))
}

/// Composite Simpson rule on possibly nonuniform abscissae. An odd number of
/// intervals closes with the quadratic through the last three points.
pub fn simpson(t: &[f64], f: &[f64]) -> f64 {
    debug_assert_eq!(t.len(), f.len());
    let n = t.len();
    match n {
        0 | 1 => return 0.0,
        2 => return 0.5 * (t[1] - t[0]) * (f[0] + f[1]),
        _ => {}
    }
    let intervals = n - 1;
    let paired = intervals - intervals % 2;
    let mut sum = 0.0;
    let mut i = 0;
    while i < paired {
        let h0 = t[i + 1] - t[i];
        let h1 = t[i + 2] - t[i + 1];
        let hs = h0 + h1;
        sum += hs / 6.0 * ((2.0 - h1 / h0) * f[i] + hs * hs / (h0 * h1) * f[i + 1] + (2.0 - h0 / h1) * f[i + 2]);
        i += 2;
    }
    if intervals % 2 == 1 {
        let h0 = t[n - 2] - t[n - 3];
        let h1 = t[n - 1] - t[n - 2];
        let alpha = (2.0 * h1 * h1 + 3.0 * h0 * h1) / (6.0 * (h0 + h1));
        let beta = (h1 * h1 + 3.0 * h0 * h1) / (6.0 * h0);
        let eta = h1 * h1 * h1 / (6.0 * h0 * (h0 + h1));
        sum += alpha * f[n - 1] + beta * f[n - 2] - eta * f[n - 3];
    }
    sum
}

/// Grid-then-simplex optimizer settings shared by the example solvers.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    /// Grid points per decision axis.
    pub grid_points: usize,
    /// Nelder-Mead stops once the simplex diameter drops below this.
    pub simplex_tol: f64,
    pub max_iter: usize,
    /// Fresh-simplex restarts after the first convergence.
    pub restarts: usize,
    /// Grid points per disturbance axis for perturbed thermostat problems.
    pub disturbance_points: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self { grid_points: 25, simplex_tol: 1e-6, max_iter: 5000, restarts: 6, disturbance_points: 5 }
    }
}

/// Search statistics of a solve.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OptimizerTrace {
    pub grid_evaluations: usize,
    pub nm_iterations: usize,
    /// Best objective value after each Nelder-Mead iteration.
    pub best_so_far: Vec<f64>,
    /// Objective of the analytic model at the returned decisions.
    pub model_cost: f64,
}

/// Minimizing arc, decisions and optimal cost.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalSolution {
    pub arc: HybridArc,
    /// Jump inputs `ν_1..ν_J` (ball) or switch times `t_1..t_J` (thermostat).
    pub decisions: Vec<f64>,
    /// Per-jump disturbance coordinates of perturbed problems (empty when nominal).
    pub disturbances: Vec<f64>,
    /// Cost of `arc` as computed by [`eval_cost`].
    pub cost: f64,
    pub trace: OptimizerTrace,
}

/// Grid search on `hard` (infinite off the feasible set), then restarted
/// Nelder-Mead on `soft` from the best grid point or warm start. A simplex
/// result that `hard` rejects is pulled back toward the best feasible point
/// by bisection, which is valid when the feasible set is convex. Ties keep
/// the lexicographically smallest point.
pub(crate) fn grid_then_simplex(
    hard: &dyn Fn(&[f64]) -> f64,
    soft: &dyn Fn(&[f64]) -> f64,
    grid: &[Vec<f64>],
    warm: &[Vec<f64>],
    scale: &[f64],
    cfg: &OptimizerConfig,
) -> Option<(Vec<f64>, f64, OptimizerTrace)> {
    let mut trace = OptimizerTrace::default();
    let mut best: Option<(Vec<f64>, f64)> = None;
    let consider = |x: &[f64], f: f64, best: &mut Option<(Vec<f64>, f64)>| {
        if !f.is_finite() {
            return;
        }
        let better = match best {
            None => true,
            Some((bx, bf)) => f < *bf || (f == *bf && lex_less(x, bx)),
        };
        if better {
            *best = Some((x.to_vec(), f));
        }
    };
    for x in grid {
        trace.grid_evaluations += 1;
        consider(x, hard(x), &mut best);
    }
    for x in warm {
        consider(x, hard(x), &mut best);
    }
    let mut starts = vec![best.clone()?.0];
    starts.extend(warm.iter().filter(|w| hard(w).is_finite()).cloned());
    for start in starts {
        if start.is_empty() {
            break;
        }
        let nm = nelder_mead(soft, &start, scale, cfg.simplex_tol, cfg.max_iter, cfg.restarts);
        trace.nm_iterations += nm.iterations;
        trace.best_so_far.extend(nm.best_so_far);
        let f = hard(&nm.x);
        if f.is_finite() {
            consider(&nm.x, f, &mut best);
        } else {
            let anchor = best.as_ref().expect("a feasible start exists").0.clone();
            let x = pull_back(hard, &anchor, &nm.x);
            consider(&x, hard(&x), &mut best);
        }
    }
    best.map(|(x, f)| (x, f, trace))
}

/// Feasible point of the segment from `inside` to `outside` closest to `outside`.
fn pull_back(hard: &dyn Fn(&[f64]) -> f64, inside: &[f64], outside: &[f64]) -> Vec<f64> {
    let at = |s: f64| -> Vec<f64> { inside.iter().zip(outside).map(|(a, b)| a + s * (b - a)).collect() };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if hard(&at(mid)).is_finite() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(lo)
}

pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
}

pub(crate) fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_exact_on_quadratics_nonuniform() {
        let t = [0.0, 0.1, 0.35, 0.4, 0.9, 1.0];
        let f: Vec<f64> = t.iter().map(|&s| 3.0 * s * s - s + 2.0).collect();
        let exact = 1.0 - 0.5 + 2.0;
        assert!((simpson(&t, &f) - exact).abs() < 1e-13);
        let t = [0.0, 0.2, 0.5, 1.0];
        let f: Vec<f64> = t.iter().map(|&s| 3.0 * s * s - s + 2.0).collect();
        assert!((simpson(&t, &f) - exact).abs() < 1e-13);
        assert_eq!(simpson(&[0.3], &[5.0]), 0.0);
        assert_eq!(simpson(&[0.0, 2.0], &[1.0, 3.0]), 4.0);
    }

    #[test]
    fn simpson_tiny_trailing_interval() {
        let mut t: Vec<f64> = (0..=100).map(|k| k as f64 * 1e-2).collect();
        t.push(1.0 + 3e-11);
        let f: Vec<f64> = t.iter().map(|s| s.exp()).collect();
        let exact = t.last().unwrap().exp() - 1.0;
        assert!((simpson(&t, &f) - exact).abs() < 1e-9);
    }
}
