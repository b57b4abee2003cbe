//! Thermostat switching-time problem.
//!
//! Between switches the temperature relaxes exponentially toward
//! `z_o + z_Δ q`, so a schedule `0 <= t_1 <= .. <= t_J <= T` determines the
//! whole arc in closed form.

use std::sync::Arc;

use crate::error::{HybridError, Result};
use crate::examples::{thermostat_system, ThermoParams};
use crate::hysys::{cartesian, rho_perturb, simulate, uniform_points, Horizon, JumpCommand, SolverConfig};

use super::ball::FEASIBILITY_MARGIN;
use super::{eval_cost, grid_then_simplex, simpson, MayerProblem, OptimalSolution, OptimizerConfig};

/// Step of the flow-cost quadrature grid, shared with re-simulation.
pub(crate) const FLOW_STEP: f64 = 1e-3;

/// Directions per axis used by the sampled perturbation of the thermostat.
const PERTURB_DIR_GRID: usize = 2;

/// Thermostat instance: data, initial state `(z_0, q_0)`, horizon `(T, J)` and
/// an optional perturbation scale `δ` (constant `ρ ≡ 1`) under which each
/// switch may also displace the temperature by up to `δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermoProblem {
    pub params: ThermoParams,
    pub xi: [f64; 2],
    pub horizon: Horizon,
    pub delta: Option<f64>,
}

impl ThermoProblem {
    pub fn new(params: ThermoParams, xi: [f64; 2], time: f64, jumps: usize) -> Self {
        Self { params, xi, horizon: Horizon::new(time, jumps), delta: None }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = Some(delta);
        self
    }

    fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.xi[1] != 0.0 && self.xi[1] != 1.0 {
            return Err(HybridError::InvalidInitialMode(self.xi[1]));
        }
        if !self.xi[0].is_finite() {
            return Err(HybridError::InvalidProblem(format!("initial temperature {} is not finite", self.xi[0])));
        }
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

    fn in_terminal_band(&self, z: f64) -> bool {
        z >= self.params.z_min + FEASIBILITY_MARGIN && z <= self.params.z_max - FEASIBILITY_MARGIN
    }

    /// Splits a raw iterate into sorted switch times in `[0, T]` and
    /// disturbances in `[-1, 1]`.
    fn normalize(&self, raw: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let jumps = self.horizon.jumps;
        let mut times: Vec<f64> = raw[..jumps].iter().map(|t| t.clamp(0.0, self.horizon.time)).collect();
        times.sort_by(f64::total_cmp);
        let theta = raw[jumps..].iter().map(|th| th.clamp(-1.0, 1.0)).collect();
        (times, theta)
    }
}

/// Cost of switching at `times` with post-switch temperature kicks
/// `delta * theta[k]`: the flow cost by Simpson on a grid of step
/// [`FLOW_STEP`] per segment, plus switching costs. Returns `None` when the
/// terminal temperature leaves the band.
pub fn thermostat_schedule_cost(prob: &ThermoProblem, times: &[f64], theta: &[f64]) -> Result<Option<f64>> {
    prob.validate()?;
    if times.len() != prob.horizon.jumps || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(HybridError::InvalidProblem("switch times must be J ordered values".into()));
    }
    Ok(schedule_cost(prob, times, theta))
}

fn schedule_cost(prob: &ThermoProblem, times: &[f64], theta: &[f64]) -> Option<f64> {
    let p = &prob.params;
    let big_t = prob.horizon.time;
    let delta = prob.delta.unwrap_or(0.0);
    let (mut z, mut q) = (prob.xi[0], prob.xi[1]);
    let mut start = 0.0;
    let mut total = 0.0;
    let mut ts = Vec::new();
    let mut fs = Vec::new();
    for k in 0..=times.len() {
        let end = times.get(k).copied().unwrap_or(big_t);
        let target = p.z_o + p.z_delta * q;
        let at = |t: f64| target + (z - target) * (start - t).exp();
        ts.clear();
        fs.clear();
        let mut t = start;
        ts.push(t);
        while t < end {
            t = (t + FLOW_STEP).min(end);
            ts.push(t);
        }
        fs.extend(ts.iter().map(|&s| p.flow_cost(at(s))));
        total += simpson(&ts, &fs);
        z = at(end);
        if k < times.len() {
            total += p.jump_cost(q);
            q = 1.0 - q;
            z += delta * theta.get(k).copied().unwrap_or(0.0);
            start = end;
        }
    }
    prob.in_terminal_band(z).then(|| total + p.flow_cost(z))
}

/// Mayer form: flow cost `L_C(z)`, switching cost by the pre-switch mode,
/// terminal cost `L_C` and terminal set band × {0, 1}. Perturbed problems use
/// the sampled `δ`-perturbation, whose jump parameter is `(0, θ_z, θ_q)`.
pub fn thermostat_mayer_problem(prob: &ThermoProblem) -> Result<MayerProblem> {
    prob.validate()?;
    let nominal = thermostat_system(&prob.params);
    let sys = match prob.delta {
        Some(d) => rho_perturb(&nominal, d, Arc::new(|_| 1.0), PERTURB_DIR_GRID)?,
        None => nominal,
    };
    let p = prob.params;
    Ok(MayerProblem::new(sys, prob.xi.to_vec(), prob.horizon)
        .with_stage_flow(move |x| p.flow_cost(x[0]))
        .with_stage_jump(move |x, _| p.jump_cost(x[1]))
        .with_terminal_cost(move |x| p.flow_cost(x[0]))
        .with_terminal_set(move |x| p.in_band(x[0]) && (x[1] == 0.0 || x[1] == 1.0)))
}

/// Minimizes over switch times. See [`solve_thermostat_from`].
pub fn solve_thermostat(prob: &ThermoProblem, cfg: &OptimizerConfig) -> Result<OptimalSolution> {
    solve_thermostat_from(prob, cfg, &[])
}

/// Minimizes the thermostat cost over ordered switch times in `[0, T]` (and
/// per-switch disturbances in `[-1, 1]` when perturbed).
///
/// The grid consists of sorted uniform samples of `[0, T]^J`; Nelder-Mead
/// refines from the best grid point with the iterate clamped and sorted. A
/// terminal temperature outside the band rejects a schedule outright. The
/// minimizer is re-simulated and its cost is that of the simulated arc.
pub fn solve_thermostat_from(prob: &ThermoProblem, cfg: &OptimizerConfig, warm: &[Vec<f64>]) -> Result<OptimalSolution> {
    prob.validate()?;
    let jumps = prob.horizon.jumps;
    let big_t = prob.horizon.time;
    let perturbed = prob.delta.is_some();

    let objective = |raw: &[f64]| {
        let (times, theta) = prob.normalize(raw);
        schedule_cost(prob, &times, &theta).unwrap_or(f64::INFINITY)
    };
    let time_axis = uniform_points(0.0, big_t, cfg.grid_points.max(2));
    let theta_axis = if perturbed { uniform_points(-1.0, 1.0, cfg.disturbance_points.max(1)) } else { Vec::new() };
    let mut grid: Vec<Vec<f64>> = Vec::new();
    for mut times in cartesian(&vec![time_axis; jumps]) {
        times.sort_by(f64::total_cmp);
        grid.push(times);
    }
    grid.sort_by(|a, b| super::lex_cmp(a, b));
    grid.dedup();
    if perturbed {
        let thetas = cartesian(&vec![theta_axis; jumps]);
        grid = grid.iter().flat_map(|t| thetas.iter().map(move |th| [t.as_slice(), th].concat())).collect();
    }
    let dim = if perturbed { 2 * jumps } else { jumps };
    let warm: Vec<Vec<f64>> = warm.iter().filter(|w| w.len() == dim).cloned().collect();
    let mut scale = vec![2.0 * big_t.max(1e-3) / cfg.grid_points.max(2) as f64; jumps];
    scale.extend(std::iter::repeat_n(0.5, dim - jumps));

    let (raw, model, trace) = grid_then_simplex(&objective, &objective, &grid, &warm, &scale, cfg)
        .ok_or_else(|| {
            HybridError::Infeasible(format!("no switching schedule ends in the band at ({big_t}, {jumps})"))
        })?;
    let (times, theta) = prob.normalize(&raw);

    let mayer = thermostat_mayer_problem(prob)?;
    let params: Vec<Vec<f64>> = (0..jumps)
        .map(|k| if perturbed { vec![0.0, theta[k], 0.0] } else { vec![0.0] })
        .collect();
    let commands: Vec<JumpCommand> = times.iter().zip(&params).map(|(&t, p)| JumpCommand::at(t, p.clone())).collect();
    let cfg_sim = SolverConfig { step: FLOW_STEP, ..SolverConfig::default() };
    let (arc, status) = simulate(&mayer.sys, &mayer.x0, &commands, mayer.horizon, &cfg_sim)?;
    if !status.reached() {
        return Err(HybridError::Numeric(format!("re-simulation stopped with {:?}", status.outcome)));
    }
    let cost = eval_cost(&mayer, &arc, &params)?;
    let trace = super::OptimizerTrace { model_cost: model, ..trace };
    Ok(OptimalSolution { arc, decisions: times, disturbances: theta, cost, trace })
}
