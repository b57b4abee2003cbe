//! Bouncing ball with an impact input: closed-form flights, feasibility
//! windows and the peak-height tracking problem.
//!
//! With zero flow cost the whole problem reduces to a small nonlinear program
//! in the jump inputs `ν = (ν_1..ν_J)`. Post-impact speeds obey
//! `v_k = λ v_{k-1} + ν_k` (with `v_0` the first impact speed), consecutive
//! impacts are `2 v_k / γ` apart, so every jump time is affine in `ν`.

use std::sync::Arc;

use crate::error::{HybridError, Result};
use crate::examples::{ball_system, BallParams};
use crate::hysys::{rho_perturb, simulate, Horizon, JumpCommand, ParamBox, SolverConfig};
use crate::hytime::HybridArc;

use super::{eval_cost, grid_then_simplex, MayerProblem, OptimalSolution, OptimizerConfig, TerminalSetFn};

/// Slack by which the horizon must clear the last and next impact so that the
/// re-simulated arc lands on `(T, J)` rather than on an impact instant.
pub(crate) const FEASIBILITY_MARGIN: f64 = 1e-9;

/// Event tolerance used when re-simulating optimal schedules.
pub(crate) const RESIM_EVENT_TOL: f64 = 1e-12;

/// Directions per axis used by the sampled perturbation of the ball.
const PERTURB_DIR_GRID: usize = 4;

/// Exact-penalty weight on constraint violations during simplex refinement.
const PENALTY: f64 = 1e5;

/// Closed interval `[lo, hi]`; empty when `lo > hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn is_empty(&self) -> bool {
        !(self.lo <= self.hi)
    }

    pub fn contains(&self, t: f64) -> bool {
        self.lo <= t && t <= self.hi
    }
}

/// Horizon windows for `J` jumps: reach is nonempty on `feasibility`, and
/// optimal arcs avoid landing on an impact instant on `regularity`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallWindows {
    pub feasibility: Interval,
    pub regularity: Interval,
}

fn check_xi(xi: &[f64]) -> Result<()> {
    if xi.len() != 2 {
        return Err(HybridError::DimensionMismatch { expected: 2, got: xi.len() });
    }
    if !(xi[0] >= 0.0) || !xi[1].is_finite() {
        return Err(HybridError::NegativeHeight(xi[0]));
    }
    Ok(())
}

/// Speed at the first impact from `ξ = (p, v)`.
fn impact_speed(gamma: f64, xi: &[f64]) -> f64 {
    (xi[1] * xi[1] + 2.0 * gamma * xi[0]).sqrt()
}

/// Time of the first impact from `ξ`.
fn first_impact(gamma: f64, xi: &[f64]) -> f64 {
    (xi[1] + impact_speed(gamma, xi)) / gamma
}

/// Time of impact `j >= 1` under the constant input `ν`.
pub fn ball_jump_times(params: &BallParams, xi: &[f64], nu: f64, j: usize) -> Result<f64> {
    params.validate()?;
    check_xi(xi)?;
    if j == 0 {
        return Err(HybridError::InvalidProblem("jump index starts at 1".into()));
    }
    if !(nu >= params.u_min && nu <= params.u_max) {
        return Err(HybridError::ParamOutOfRange(vec![nu]));
    }
    Ok(constant_input_time(params, xi, nu, j))
}

fn constant_input_time(params: &BallParams, xi: &[f64], nu: f64, j: usize) -> f64 {
    let BallParams { gamma, lambda, .. } = *params;
    let t1 = first_impact(gamma, xi);
    if j == 1 {
        return t1;
    }
    let v1 = lambda * impact_speed(gamma, xi) + nu;
    let k = (j - 1) as f64;
    let psi = k * nu + (v1 - nu / (1.0 - lambda)) * (1.0 - lambda.powi(j as i32 - 1));
    t1 + 2.0 / (gamma * (1.0 - lambda)) * psi
}

/// Feasibility window `[t_J^{u_min}, t_{J+1}^{u_max}]` and regularity window
/// `[t_J^{u_max}, t_{J+1}^{u_min}]` for `J >= 1` jumps.
pub fn ball_feasible_window(params: &BallParams, xi: &[f64], jumps: usize) -> Result<BallWindows> {
    params.validate()?;
    check_xi(xi)?;
    if jumps == 0 {
        return Err(HybridError::InvalidProblem("feasibility windows need at least one jump".into()));
    }
    let t = |nu, j| constant_input_time(params, xi, nu, j);
    Ok(BallWindows {
        feasibility: Interval { lo: t(params.u_min, jumps), hi: t(params.u_max, jumps + 1) },
        regularity: Interval { lo: t(params.u_max, jumps), hi: t(params.u_min, jumps + 1) },
    })
}

/// Closed-form ball motion under per-jump inputs, evaluated at horizon `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct BallFlight {
    /// Impact times `t_1..t_{J+1}`.
    pub impact_times: Vec<f64>,
    /// Velocities just before impacts `1..J` (nonpositive).
    pub pre_velocities: Vec<f64>,
    /// Velocities just after impacts `1..J`.
    pub post_velocities: Vec<f64>,
    /// State `(p, v)` at `(T, J)` along the flight after the last impact.
    pub terminal: [f64; 2],
}

/// Flight from `ξ` with input `inputs[k]` applied at impact `k + 1`. Inputs
/// must keep every post-impact speed nonnegative.
pub fn ball_flight(params: &BallParams, xi: &[f64], inputs: &[f64], horizon: f64) -> Result<BallFlight> {
    params.validate()?;
    check_xi(xi)?;
    Ok(flight(params, xi, inputs, horizon))
}

fn flight(params: &BallParams, xi: &[f64], inputs: &[f64], horizon: f64) -> BallFlight {
    let BallParams { gamma, lambda, .. } = *params;
    let jumps = inputs.len();
    let mut impact_times = Vec::with_capacity(jumps + 1);
    let mut pre = Vec::with_capacity(jumps);
    let mut post = Vec::with_capacity(jumps);
    let mut t = first_impact(gamma, xi);
    let mut speed = impact_speed(gamma, xi);
    impact_times.push(t);
    for &nu in inputs {
        pre.push(-speed);
        speed = lambda * speed + nu;
        post.push(speed);
        t += 2.0 * speed / gamma;
        impact_times.push(t);
    }
    let terminal = if jumps == 0 {
        [xi[0] + xi[1] * horizon - 0.5 * gamma * horizon * horizon, xi[1] - gamma * horizon]
    } else {
        let tau = horizon - impact_times[jumps - 1];
        [speed * tau - 0.5 * gamma * tau * tau, speed - gamma * tau]
    };
    BallFlight { impact_times, pre_velocities: pre, post_velocities: post, terminal }
}

/// Total energy `γ p + v² / 2`.
pub fn ball_energy(params: &BallParams, x: &[f64]) -> f64 {
    params.gamma * x[0] + 0.5 * x[1] * x[1]
}

/// Peak-tracking impact cost for pre-impact velocity `v`: zero exactly when
/// the rebound speed before input equals the speed reaching `p_des`.
pub fn ball_jump_cost(params: &BallParams, v: f64) -> f64 {
    let BallParams { gamma, lambda, p_des, .. } = *params;
    let s = (2.0 * gamma * p_des).sqrt();
    let near = gamma * p_des * (v + s) * (v + s) / 2.0;
    if lambda == 0.0 || v >= -s / lambda {
        return near;
    }
    let e = v * v / 2.0 - gamma * p_des;
    let f = lambda * lambda * v * v / 2.0 - gamma * p_des;
    near.min(e * e - f * f)
}

pub type BallJumpCostFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type BallTerminalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Costs of a ball problem: impact cost `L(v, u)` of the pre-impact velocity
/// and input, terminal cost and terminal set on `(p, v)`.
#[derive(Clone)]
pub struct BallCosts {
    pub jump: BallJumpCostFn,
    pub terminal: BallTerminalFn,
    pub terminal_set: TerminalSetFn,
}

impl std::fmt::Debug for BallCosts {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("BallCosts { .. }")
    }
}

impl BallCosts {
    /// Terminal cost equal to the energy, [`ball_jump_cost`] at impacts and no
    /// terminal constraint.
    pub fn peak_tracking(params: &BallParams) -> Self {
        let (p1, p2) = (*params, *params);
        Self {
            jump: Arc::new(move |v, _| ball_jump_cost(&p1, v)),
            terminal: Arc::new(move |x| ball_energy(&p2, x)),
            terminal_set: Arc::new(|_| true),
        }
    }
}

/// Ball instance: data, initial state, horizon `(T, J)`, costs and an optional
/// perturbation scale `δ` (constant `ρ ≡ 1`).
#[derive(Debug, Clone)]
pub struct BallProblem {
    pub params: BallParams,
    pub xi: [f64; 2],
    pub horizon: Horizon,
    pub costs: BallCosts,
    pub delta: Option<f64>,
}

impl BallProblem {
    pub fn new(params: BallParams, xi: [f64; 2], time: f64, jumps: usize) -> Self {
        Self { params, xi, horizon: Horizon::new(time, jumps), costs: BallCosts::peak_tracking(&params), delta: None }
    }

    pub fn with_costs(mut self, costs: BallCosts) -> Self {
        self.costs = costs;
        self
    }

    /// Solves over the `δ`-perturbed dynamics instead of the nominal ones.
    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = Some(delta);
        self
    }

    fn validate(&self) -> Result<()> {
        self.params.validate()?;
        check_xi(&self.xi)?;
        if !self.horizon.time.is_finite() || self.horizon.time < 0.0 {
            return Err(HybridError::NegativeTime(self.horizon.time));
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d < 1.0) {
                return Err(HybridError::InvalidDelta(d));
            }
        }
        Ok(())
    }

    /// Range of effective post-impact inputs: the nominal box, widened by the
    /// velocity disturbance `δ` when perturbed and kept nonnegative.
    fn input_range(&self) -> (f64, f64) {
        let d = self.delta.unwrap_or(0.0);
        ((self.params.u_min - d).max(0.0), self.params.u_max + d)
    }

    /// Cost of the analytic model at `inputs`, or `None` when a constraint fails.
    fn model_cost(&self, inputs: &[f64]) -> Option<f64> {
        let (lo, hi) = self.input_range();
        if inputs.iter().any(|&u| !(u >= lo && u <= hi)) {
            return None;
        }
        let fl = flight(&self.params, &self.xi, inputs, self.horizon.time);
        if violation(&fl, self.horizon) > 0.0 || !(self.costs.terminal_set)(&fl.terminal) {
            return None;
        }
        Some(self.assemble(&fl, inputs))
    }

    fn assemble(&self, fl: &BallFlight, inputs: &[f64]) -> f64 {
        let (u_min, u_max) = (self.params.u_min, self.params.u_max);
        let jump: f64 = fl
            .pre_velocities
            .iter()
            .zip(inputs)
            .map(|(&v, &u)| (self.costs.jump)(v, u.clamp(u_min, u_max)))
            .sum();
        jump + (self.costs.terminal)(&fl.terminal)
    }

    /// Model cost plus an exact penalty on box and impact-time violations.
    fn penalized_cost(&self, inputs: &[f64]) -> f64 {
        let (lo, hi) = self.input_range();
        let box_violation: f64 = inputs.iter().map(|&u| (lo - u).max(0.0) + (u - hi).max(0.0)).sum();
        let clamped: Vec<f64> = inputs.iter().map(|u| u.clamp(lo, hi)).collect();
        let fl = flight(&self.params, &self.xi, &clamped, self.horizon.time);
        if !(self.costs.terminal_set)(&fl.terminal) {
            return f64::INFINITY;
        }
        self.assemble(&fl, &clamped) + PENALTY * (box_violation + violation(&fl, self.horizon))
    }

    /// A constant input meeting the impact-time constraints, if one exists.
    fn constant_feasible_input(&self) -> Option<f64> {
        let (lo, hi) = self.input_range();
        let jumps = self.horizon.jumps;
        let at = |u: f64| flight(&self.params, &self.xi, &vec![u; jumps], self.horizon.time);
        let late = |u: f64| at(u).impact_times[jumps - 1] > self.horizon.time - FEASIBILITY_MARGIN;
        // largest input whose J-th impact is early enough
        let u = if !late(hi) {
            hi
        } else if late(lo) {
            return None;
        } else {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if late(m) {
                    b = m;
                } else {
                    a = m;
                }
            }
            a
        };
        (violation(&at(u), self.horizon) == 0.0).then_some(u)
    }
}

/// Total amount by which the impact times fail `t_J <= T - m` and
/// `t_{J+1} >= T + m`.
fn violation(fl: &BallFlight, horizon: Horizon) -> f64 {
    let (t, j) = (horizon.time, horizon.jumps);
    let early = if j == 0 { 0.0 } else { (fl.impact_times[j - 1] - (t - FEASIBILITY_MARGIN)).max(0.0) };
    let late = (t + FEASIBILITY_MARGIN - fl.impact_times[j]).max(0.0);
    early + late
}

/// Mayer form of a ball problem: zero flow cost, the impact cost at each
/// pre-impact state and the terminal cost. Perturbed problems use the sampled
/// `δ`-perturbation of the ball, whose jump parameter is `(u, θ_p, θ_v)`.
pub fn ball_mayer_problem(prob: &BallProblem) -> Result<MayerProblem> {
    prob.validate()?;
    let nominal = ball_system(&prob.params);
    let sys = match prob.delta {
        Some(d) => rho_perturb(&nominal, d, Arc::new(|_| 1.0), PERTURB_DIR_GRID)?,
        None => nominal,
    };
    let (jump, terminal, set) = (prob.costs.jump.clone(), prob.costs.terminal.clone(), prob.costs.terminal_set.clone());
    Ok(MayerProblem::new(sys, prob.xi.to_vec(), prob.horizon)
        .with_stage_jump(move |x, p| jump(x[1], p[0]))
        .with_terminal_cost(move |x| terminal(x))
        .with_terminal_set(move |x| set(x)))
}

/// Minimizes the ball problem over jump inputs. See [`solve_ball_from`].
pub fn solve_ball(prob: &BallProblem, cfg: &OptimizerConfig) -> Result<OptimalSolution> {
    solve_ball_from(prob, cfg, &[])
}

/// Minimizes the ball problem over `ν ∈ [u_min, u_max]^J` subject to
/// `t_J(ν) <= T <= t_{J+1}(ν)`.
///
/// The analytic model is searched on a full grid, then refined by Nelder-Mead
/// on an exact-penalty objective from the best grid point and from `warm`
/// starts. The minimizer is re-simulated and its cost is that of the
/// simulated arc. Perturbed problems search the effective post-impact input
/// over `[u_min - δ, u_max + δ]`; the excess over the nominal box is realized
/// by the velocity component of the jump disturbance.
pub fn solve_ball_from(prob: &BallProblem, cfg: &OptimizerConfig, warm: &[Vec<f64>]) -> Result<OptimalSolution> {
    prob.validate()?;
    let jumps = prob.horizon.jumps;
    let (lo, hi) = prob.input_range();

    let (inputs, trace) = if jumps == 0 {
        let fl = flight(&prob.params, &prob.xi, &[], prob.horizon.time);
        if violation(&fl, prob.horizon) > 0.0 {
            return Err(HybridError::Infeasible(format!(
                "horizon {} is past the first impact at {}",
                prob.horizon.time, fl.impact_times[0]
            )));
        }
        let model = prob.model_cost(&[]).ok_or(HybridError::InfeasibleTerminal)?;
        (Vec::new(), super::OptimizerTrace { model_cost: model, ..Default::default() })
    } else {
        let grid = ParamBox::new(vec![lo; jumps], vec![hi; jumps])?.grid(cfg.grid_points.max(2));
        let mut starts: Vec<Vec<f64>> = warm.iter().map(|w| w.iter().map(|u| u.clamp(lo, hi)).collect()).collect();
        if let Some(u) = prob.constant_feasible_input() {
            starts.push(vec![u; jumps]);
        }
        let hard = |x: &[f64]| prob.model_cost(x).unwrap_or(f64::INFINITY);
        let soft = |x: &[f64]| prob.penalized_cost(x);
        let scale = vec![2.0 * (hi - lo).max(1e-3) / cfg.grid_points.max(2) as f64; jumps];
        let (x, f, mut trace) = grid_then_simplex(&hard, &soft, &grid, &starts, &scale, cfg).ok_or_else(|| {
            HybridError::Infeasible(format!(
                "no input schedule reaches ({}, {jumps}) from {:?}",
                prob.horizon.time, prob.xi
            ))
        })?;
        trace.model_cost = f;
        (x, trace)
    };

    let mayer = ball_mayer_problem(prob)?;
    let fl = flight(&prob.params, &prob.xi, &inputs, prob.horizon.time);
    let (u_min, u_max) = (prob.params.u_min, prob.params.u_max);
    let params: Vec<Vec<f64>> = inputs
        .iter()
        .map(|&u| match prob.delta {
            None => vec![u],
            Some(d) => {
                let uc = u.clamp(u_min, u_max);
                vec![uc, 0.0, ((u - uc) / d).clamp(-1.0, 1.0)]
            }
        })
        .collect();
    let commands: Vec<JumpCommand> = match prob.delta {
        None => params.iter().map(|p| JumpCommand::forced(p.clone())).collect(),
        // perturbed impacts happen at the nominal contact instants
        Some(_) => params.iter().zip(&fl.impact_times).map(|(p, &t)| JumpCommand::at(t, p.clone())).collect(),
    };
    let arc = resimulate(&mayer, &commands)?;
    let cost = eval_cost(&mayer, &arc, &params)?;
    let disturbances = match prob.delta {
        None => Vec::new(),
        Some(_) => params.iter().map(|p| p[2]).collect(),
    };
    Ok(OptimalSolution { arc, decisions: inputs, disturbances, cost, trace })
}

fn resimulate(mayer: &MayerProblem, commands: &[JumpCommand]) -> Result<HybridArc> {
    let cfg = SolverConfig { event_tol: RESIM_EVENT_TOL, ..SolverConfig::default() };
    let (arc, status) = simulate(&mayer.sys, &mayer.x0, commands, mayer.horizon, &cfg)?;
    if !status.reached() {
        return Err(HybridError::Numeric(format!(
            "re-simulation stopped with {:?} at {:?}",
            status.outcome, status.final_time
        )));
    }
    Ok(arc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> BallParams {
        BallParams::default()
    }

    #[test]
    fn jump_times_match_recursion() {
        let t1 = ball_jump_times(&p(), &[1.0, 0.0], 1.0, 1).unwrap();
        assert!((t1 - 0.451524).abs() < 1e-6);
        let t2 = ball_jump_times(&p(), &[1.0, 0.0], 1.0, 2).unwrap();
        assert!((t2 - 1.377835).abs() < 1e-6, "{t2}");
        for nu in [1.0, 5.0, 10.0] {
            let fl = flight(&p(), &[1.0, 0.0], &[nu; 4], 0.0);
            for j in 1..=5 {
                let closed = ball_jump_times(&p(), &[1.0, 0.0], nu, j).unwrap();
                assert!((closed - fl.impact_times[j - 1]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_energy_ball_stays_put() {
        let params = BallParams { u_min: 0.0, ..p() };
        for j in 1..4 {
            assert_eq!(ball_jump_times(&params, &[0.0, 0.0], 0.0, j).unwrap(), 0.0);
        }
        assert!(matches!(ball_jump_times(&p(), &[-0.1, 0.0], 1.0, 1), Err(HybridError::NegativeHeight(_))));
    }

    #[test]
    fn degenerate_input_windows_coincide() {
        let params = BallParams { u_min: 3.0, u_max: 3.0, ..p() };
        let w = ball_feasible_window(&params, &[1.0, 0.0], 2).unwrap();
        assert_eq!(w.feasibility, w.regularity);
        let w = ball_feasible_window(&p(), &[1.0, 0.0], 1).unwrap();
        assert!((w.feasibility.lo - 0.451524).abs() < 1e-6);
        assert!(w.regularity.is_empty() || w.regularity.lo >= w.feasibility.lo);
    }

    #[test]
    fn jump_cost_is_continuous_at_branch_switch() {
        let params = p();
        let s = (2.0 * params.gamma * params.p_des).sqrt();
        let v = -s / params.lambda;
        let l = ball_jump_cost(&params, v - 1e-9);
        let r = ball_jump_cost(&params, v + 1e-9);
        assert!((l - r).abs() < 1e-4, "{l} vs {r}");
        assert_eq!(ball_jump_cost(&params, -s), 0.0);
    }

    #[test]
    fn decision_free_problem() {
        let prob = BallProblem::new(p(), [1.0, 0.0], 0.2, 0);
        let sol = solve_ball(&prob, &OptimizerConfig::default()).unwrap();
        let x = [1.0 - 0.5 * 9.81 * 0.04, -1.962];
        assert!((sol.cost - ball_energy(&p(), &x)).abs() < 1e-8);
        assert!(sol.decisions.is_empty());
        let late = BallProblem::new(p(), [1.0, 0.0], 0.5, 0);
        assert!(matches!(solve_ball(&late, &OptimizerConfig::default()), Err(HybridError::Infeasible(_))));
    }

    #[test]
    fn single_jump_optimum_is_slowest_feasible_rebound() {
        // with one impact the terminal energy is v_1² / 2, so the smallest
        // feasible input wins
        let t = 1.5;
        let prob = BallProblem::new(p(), [1.0, 0.0], t, 1);
        let sol = solve_ball(&prob, &OptimizerConfig::default()).unwrap();
        let v0 = (2.0f64 * 9.81).sqrt();
        let t1 = v0 / 9.81;
        let nu = (9.81 * (t - t1) / 2.0 - 0.8 * v0).max(1.0);
        assert!((sol.decisions[0] - nu).abs() < 1e-6, "{:?} vs {nu}", sol.decisions);
        assert!((sol.cost - sol.trace.model_cost).abs() < 1e-8);
    }

    #[test]
    fn resimulated_terminal_state_matches_model() {
        let prob = BallProblem::new(p(), [1.0, 0.0], 4.0, 2);
        let sol = solve_ball(&prob, &OptimizerConfig::default()).unwrap();
        let fl = flight(&p(), &[1.0, 0.0], &sol.decisions, 4.0);
        let x = sol.arc.terminal_state();
        assert!((x[0] - fl.terminal[0]).abs() < 1e-6 && (x[1] - fl.terminal[1]).abs() < 1e-6);
        assert_eq!(sol.arc.terminal_time().1, 2);
    }
}
