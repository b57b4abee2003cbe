//! Hybrid system data `(C, F, D, G)` and the flow/jump simulation engine.
//!
//! Flow and jump sets are predicates `(x, slack) -> bool`; the slack lets the
//! simulator accept states that sit within `state_tol` of a set boundary after
//! event localization. Set-valued jump maps are represented by a single-valued
//! selection `G(x, p)` with the parameter `p` ranging over a box.

use std::fmt;
use std::sync::Arc;

use crate::error::{HybridError, Result};
use crate::hytime::{HybridArc, Segment};
use crate::optctrl::MayerProblem;

pub type SetFn = Arc<dyn Fn(&[f64], f64) -> bool + Send + Sync>;
pub type FlowFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
pub type JumpFn = Arc<dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// Closed box of admissible jump parameters. A singleton has `lo == hi`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl ParamBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(HybridError::DimensionMismatch { expected: lo.len(), got: hi.len() });
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite()) {
            return Err(HybridError::InvalidProblem(format!("empty parameter box {lo:?}..{hi:?}")));
        }
        Ok(Self { lo, hi })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo], vec![hi])
    }

    pub fn singleton(value: f64) -> Self {
        Self { lo: vec![value], hi: vec![value] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lo
    }

    pub fn upper(&self) -> &[f64] {
        &self.hi
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && p.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| v >= a && v <= b)
    }

    /// Cartesian product of this box with another.
    pub fn product(&self, other: &ParamBox) -> ParamBox {
        let mut lo = self.lo.clone();
        let mut hi = self.hi.clone();
        lo.extend_from_slice(&other.lo);
        hi.extend_from_slice(&other.hi);
        ParamBox { lo, hi }
    }

    /// Uniform grid with `points` values per axis (endpoints included),
    /// enumerated in lexicographic order. Degenerate axes contribute one value.
    pub fn grid(&self, points: usize) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(&a, &b)| uniform_points(a, b, points))
            .collect();
        cartesian(&axes)
    }
}

pub(crate) fn uniform_points(a: f64, b: f64, points: usize) -> Vec<f64> {
    if a == b || points <= 1 {
        return vec![a];
    }
    let n = points - 1;
    (0..=n).map(|k| if k == n { b } else { a + (b - a) * k as f64 / n as f64 }).collect()
}

pub(crate) fn cartesian(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect()
    })
}

/// Hybrid system `H = (C, F, D, G)` with a parameterized jump map.
#[derive(Clone)]
pub struct HybridSystem {
    dim: usize,
    params: ParamBox,
    flow_set: SetFn,
    flow_map: FlowFn,
    jump_set: SetFn,
    jump_map: JumpFn,
}

impl fmt::Debug for HybridSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HybridSystem").field("dim", &self.dim).field("params", &self.params).finish_non_exhaustive()
    }
}

impl HybridSystem {
    pub fn new<C, F, D, G>(dim: usize, params: ParamBox, flow_set: C, flow_map: F, jump_set: D, jump_map: G) -> Self
    where
        C: Fn(&[f64], f64) -> bool + Send + Sync + 'static,
        F: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        D: Fn(&[f64], f64) -> bool + Send + Sync + 'static,
        G: Fn(&[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    {
        Self {
            dim,
            params,
            flow_set: Arc::new(flow_set),
            flow_map: Arc::new(flow_map),
            jump_set: Arc::new(jump_set),
            jump_map: Arc::new(jump_map),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &ParamBox {
        &self.params
    }

    pub fn in_flow_set(&self, x: &[f64], slack: f64) -> bool {
        (self.flow_set)(x, slack)
    }

    pub fn in_jump_set(&self, x: &[f64], slack: f64) -> bool {
        (self.jump_set)(x, slack)
    }

    pub fn flow(&self, x: &[f64], dx: &mut [f64]) {
        (self.flow_map)(x, dx)
    }

    pub fn jump_into(&self, x: &[f64], param: &[f64], out: &mut [f64]) {
        (self.jump_map)(x, param, out)
    }

    /// `G(x, param)` after checking `x ∈ D` and `param ∈ P`.
    pub fn apply_jump(&self, x: &[f64], param: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(HybridError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        if !self.params.contains(param) {
            return Err(HybridError::ParamOutOfRange(param.to_vec()));
        }
        if !self.in_jump_set(x, 0.0) {
            return Err(HybridError::NotInJumpSet);
        }
        let mut out = vec![0.0; self.dim];
        self.jump_into(x, param, &mut out);
        Ok(out)
    }
}

/// When a jump fires.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Trigger {
    /// Jump once flow can no longer continue in `C` and `D` holds (or on
    /// entering `D` under [`Priority::Jump`]).
    Forced,
    /// Jump at the given ordinary time; `D` must hold there.
    At(f64),
}

/// Decision applied at one jump: the `k`-th command governs jump `k + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpCommand {
    pub trigger: Trigger,
    pub param: Vec<f64>,
}

impl JumpCommand {
    pub fn forced(param: Vec<f64>) -> Self {
        Self { trigger: Trigger::Forced, param }
    }

    pub fn at(time: f64, param: Vec<f64>) -> Self {
        Self { trigger: Trigger::At(time), param }
    }
}

/// Resolution of `C ∩ D` when no command applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Priority {
    #[default]
    Flow,
    Jump,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// RK4 step (s).
    pub step: f64,
    /// Width of the bisection bracket for flow-set exits (s).
    pub event_tol: f64,
    /// Slack used when testing set membership at located events.
    pub state_tol: f64,
    pub max_jumps: usize,
    pub escape_bound: f64,
    pub priority: Priority,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            step: 1e-3,
            event_tol: 1e-10,
            state_tol: 1e-7,
            max_jumps: 10_000,
            escape_bound: 1e9,
            priority: Priority::Flow,
        }
    }
}

impl SolverConfig {
    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(HybridError::InvalidConfig(m.to_string()));
        if !(self.step > 0.0) || !self.step.is_finite() {
            return bad("step must be positive");
        }
        if !(self.event_tol > 0.0) {
            return bad("event_tol must be positive");
        }
        if self.event_tol > self.step {
            return bad("event_tol must not exceed step");
        }
        if !(self.state_tol >= 0.0) {
            return bad("state_tol must be nonnegative");
        }
        if !(self.escape_bound > 0.0) {
            return bad("escape_bound must be positive");
        }
        Ok(())
    }
}

/// Requested terminal hybrid time `(T, J)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Horizon {
    pub time: f64,
    pub jumps: usize,
}

impl Horizon {
    pub fn new(time: f64, jumps: usize) -> Self {
        Self { time, jumps }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    /// The arc ends exactly at the requested `(T, J)`.
    HorizonReached,
    /// Neither flow nor a jump consistent with the commands is possible.
    LeftCUnionD,
    /// `|x|` exceeded `escape_bound`.
    EscapeDetected,
    /// A jump was needed but the jump budget (`J` or `max_jumps`) is spent.
    MaxJumpsHit,
    /// Ordinary time `T` was reached with fewer than `J` jumps.
    TimeExhausted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimStatus {
    pub outcome: Outcome,
    pub final_time: (f64, usize),
}

impl SimStatus {
    pub fn reached(&self) -> bool {
        self.outcome == Outcome::HorizonReached
    }
}

struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    fn new(n: usize) -> Self {
        Self { k1: vec![0.0; n], k2: vec![0.0; n], k3: vec![0.0; n], k4: vec![0.0; n], tmp: vec![0.0; n] }
    }

    fn step(&mut self, sys: &HybridSystem, x: &[f64], dt: f64, out: &mut [f64]) {
        let half = 0.5 * dt;
        sys.flow(x, &mut self.k1);
        axpy(&mut self.tmp, x, half, &self.k1);
        sys.flow(&self.tmp, &mut self.k2);
        axpy(&mut self.tmp, x, half, &self.k2);
        sys.flow(&self.tmp, &mut self.k3);
        axpy(&mut self.tmp, x, dt, &self.k3);
        sys.flow(&self.tmp, &mut self.k4);
        for (i, o) in out.iter_mut().enumerate() {
            *o = x[i] + dt / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

/// `out = x + a * k`, componentwise.
fn axpy(out: &mut [f64], x: &[f64], a: f64, k: &[f64]) {
    for ((o, xi), ki) in out.iter_mut().zip(x).zip(k) {
        *o = xi + a * ki;
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn validate_commands(sys: &HybridSystem, commands: &[JumpCommand]) -> Result<()> {
    let mut last_at = 0.0;
    for (index, cmd) in commands.iter().enumerate() {
        if !sys.params.contains(&cmd.param) {
            return Err(HybridError::InvalidCommand {
                index,
                reason: format!("parameter {:?} outside {:?}", cmd.param, sys.params),
            });
        }
        if let Trigger::At(t) = cmd.trigger {
            if !t.is_finite() || t < last_at {
                return Err(HybridError::InvalidCommand {
                    index,
                    reason: format!("At-time {t} is negative, non-finite or decreasing"),
                });
            }
            last_at = t;
        }
    }
    Ok(())
}

/// Simulates one solution of `sys` from `x0` up to the hybrid time `horizon`.
///
/// Flows are integrated by fixed-step RK4 (the last step to a time limit is
/// shortened). When a step leaves `C` the exit is bracketed by bisection to
/// `event_tol` and the arc continues from the last point inside `C`. Jumps
/// happen at `At` command times, at forced exits where `D` holds, or on
/// entering `D` when `cfg.priority` is [`Priority::Jump`]. When the command
/// list is exhausted, jumps use the lower corner of the parameter box.
pub fn simulate(
    sys: &HybridSystem,
    x0: &[f64],
    commands: &[JumpCommand],
    horizon: Horizon,
    cfg: &SolverConfig,
) -> Result<(HybridArc, SimStatus)> {
    cfg.validate()?;
    let n = sys.dim;
    if x0.len() != n {
        return Err(HybridError::DimensionMismatch { expected: n, got: x0.len() });
    }
    if !horizon.time.is_finite() || horizon.time < 0.0 {
        return Err(HybridError::NegativeTime(horizon.time));
    }
    validate_commands(sys, commands)?;
    let tol = cfg.state_tol;
    if !(sys.in_flow_set(x0, tol) || sys.in_jump_set(x0, tol)) {
        return Err(HybridError::InvalidInitialCondition);
    }

    let big_t = horizon.time;
    let jump_cap = horizon.jumps.min(cfg.max_jumps);
    let default_param = sys.params.lower().to_vec();
    let mut rk = Rk4::new(n);
    let mut x_new = vec![0.0; n];
    let mut probe = vec![0.0; n];

    let mut segments = Vec::new();
    let mut seg = Segment::with_capacity(n, (big_t / cfg.step).min(1e6) as usize + 2);
    seg.push(0.0, x0);
    let mut t = 0.0;
    let mut j = 0usize;
    let mut x = x0.to_vec();
    let mut blocked = false;

    let outcome = loop {
        let cmd = commands.get(j);
        let can_jump = j < jump_cap;
        let next_at = match cmd {
            Some(JumpCommand { trigger: Trigger::At(ta), .. }) if can_jump => Some(*ta),
            _ => None,
        };
        // parameter for a jump that is not commanded by an At-time
        let free_param: Option<&[f64]> = match cmd {
            Some(JumpCommand { trigger: Trigger::Forced, param }) => Some(param),
            Some(_) => None,
            None => Some(&default_param),
        };

        let mut jump_with: Option<&[f64]> = None;
        if let (Some(ta), Some(c)) = (next_at, cmd) {
            if ta <= t {
                if !sys.in_jump_set(&x, tol) {
                    return Err(HybridError::CommandOutsideD { t, jump: j + 1 });
                }
                jump_with = Some(&c.param);
            }
        }
        if jump_with.is_none() {
            if j == horizon.jumps && t >= big_t {
                break Outcome::HorizonReached;
            }
            let in_c = !blocked && sys.in_flow_set(&x, tol);
            if !in_c {
                if !sys.in_jump_set(&x, tol) {
                    break Outcome::LeftCUnionD;
                }
                if !can_jump {
                    break Outcome::MaxJumpsHit;
                }
                match free_param {
                    Some(p) => jump_with = Some(p),
                    None => break Outcome::LeftCUnionD,
                }
            } else if cfg.priority == Priority::Jump && can_jump && next_at.is_none() && sys.in_jump_set(&x, tol) {
                jump_with = free_param;
            }
        }
        let limit = next_at.map_or(big_t, |ta| ta.min(big_t));
        if jump_with.is_none() && t >= limit {
            // out of time: remaining jumps may still happen where D holds
            match free_param {
                Some(p) if can_jump && next_at.is_none() && sys.in_jump_set(&x, tol) => jump_with = Some(p),
                _ => break Outcome::TimeExhausted,
            }
        }

        if let Some(param) = jump_with {
            sys.jump_into(&x, param, &mut x_new);
            std::mem::swap(&mut x, &mut x_new);
            segments.push(std::mem::replace(&mut seg, Segment::new(n)));
            seg.push(t, &x);
            j += 1;
            blocked = false;
            if norm(&x) > cfg.escape_bound {
                break Outcome::EscapeDetected;
            }
            continue;
        }

        // flow
        let dt = (limit - t).min(cfg.step);
        let final_step = dt == limit - t;
        rk.step(sys, &x, dt, &mut x_new);
        let watch_d = cfg.priority == Priority::Jump && can_jump && next_at.is_none();
        let inside = sys.in_flow_set(&x_new, 0.0) || (final_step && sys.in_flow_set(&x_new, tol));
        let entered_d = watch_d && sys.in_jump_set(&x_new, 0.0);
        if inside && !entered_d {
            t = if final_step { limit } else { t + dt };
            std::mem::swap(&mut x, &mut x_new);
            seg.push(t, &x);
            if norm(&x) > cfg.escape_bound {
                break Outcome::EscapeDetected;
            }
            continue;
        }

        // bracket the event: lo is before it, hi after
        let (mut lo, mut hi) = (0.0, dt);
        while hi - lo > cfg.event_tol {
            let mid = 0.5 * (lo + hi);
            rk.step(sys, &x, mid, &mut probe);
            let stop = !sys.in_flow_set(&probe, 0.0) || (watch_d && sys.in_jump_set(&probe, 0.0));
            if stop {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        rk.step(sys, &x, hi, &mut probe);
        let (advance, now_blocked) =
            if watch_d && sys.in_flow_set(&probe, tol) && sys.in_jump_set(&probe, tol) { (hi, false) } else { (lo, true) };
        if advance > 0.0 {
            rk.step(sys, &x, advance, &mut x_new);
            std::mem::swap(&mut x, &mut x_new);
            t += advance;
            seg.push(t, &x);
            if norm(&x) > cfg.escape_bound {
                break Outcome::EscapeDetected;
            }
        }
        blocked = now_blocked;
    };
    segments.push(seg);
    let arc = HybridArc::from_segments(segments)?;
    let status = SimStatus { outcome, final_time: arc.terminal_time() };
    Ok((arc, status))
}

/// Free function form of [`HybridSystem::apply_jump`].
pub fn apply_jump(sys: &HybridSystem, x: &[f64], param: &[f64]) -> Result<Vec<f64>> {
    sys.apply_jump(x, param)
}

/// Augments `prob.sys` with a running-cost accumulator `ℓ`.
///
/// The returned system has state `(x, ℓ)`, flow `(F(x), L_C(x))` on `C × ℝ`
/// and jump `(G(x, p), ℓ + L_D(x, p))` on `D × ℝ`.
pub fn augment_mayer(prob: &MayerProblem) -> Result<HybridSystem> {
    prob.validate()?;
    let base = prob.sys.clone();
    let n = base.dim;
    let (c_sys, f_sys, d_sys, g_sys) = (base.clone(), base.clone(), base.clone(), base);
    let stage_flow = prob.stage_flow.clone();
    let stage_jump = prob.stage_jump.clone();
    Ok(HybridSystem::new(
        n + 1,
        prob.sys.params.clone(),
        move |x, s| c_sys.in_flow_set(&x[..n], s),
        move |x, dx| {
            f_sys.flow(&x[..n], &mut dx[..n]);
            dx[n] = stage_flow(&x[..n]);
        },
        move |x, s| d_sys.in_jump_set(&x[..n], s),
        move |x, p, out| {
            g_sys.jump_into(&x[..n], p, &mut out[..n]);
            out[n] = x[n] + stage_jump(&x[..n], p);
        },
    ))
}

/// Tolerance used by the perturbed jump map when selecting the inner
/// disturbance that places `x + w` in `D`.
const JUMP_SELECT_TOL: f64 = 1e-6;

/// Sampled disturbance offsets inside the ball of radius `r`: the origin,
/// then `±(k / grid) r e_i` for `k = 1..=grid`, ordered by radius.
fn ball_offsets(n: usize, r: f64, grid: usize) -> impl Iterator<Item = (usize, f64)> {
    std::iter::once((0usize, 0.0)).chain((1..=grid).flat_map(move |k| {
        let rad = r * k as f64 / grid as f64;
        (0..n).flat_map(move |i| [(i, rad), (i, -rad)])
    }))
}

fn any_offset(x: &[f64], r: f64, grid: usize, scratch: &mut Vec<f64>, pred: impl Fn(&[f64]) -> bool) -> Option<(usize, f64)> {
    scratch.clear();
    scratch.extend_from_slice(x);
    for (i, w) in ball_offsets(x.len(), r, grid) {
        scratch[i] = x[i] + w;
        let hit = pred(scratch);
        scratch[i] = x[i];
        if hit {
            return Some((i, w));
        }
    }
    None
}

fn project_unit_ball(theta: &[f64]) -> f64 {
    let nrm = norm(theta);
    if nrm > 1.0 { 1.0 / nrm } else { 1.0 }
}

/// Sampled member of the `δρ`-perturbation of `sys` with zero flow disturbance.
/// See [`rho_perturb_with_flow`].
pub fn rho_perturb(sys: &HybridSystem, delta: f64, rho: ScalarFn, dir_grid: usize) -> Result<HybridSystem> {
    rho_perturb_with_flow(sys, delta, rho, dir_grid, None)
}

/// Builds an inner (sampled) approximation of the `δρ`-perturbed system.
///
/// * `C^δ(x)`: some sampled `w` with `|w| <= δρ(x)` has `x + w ∈ C`.
/// * `F^δ(x) = F(x) + w_f(x)`, with `w_f` rescaled into the `δρ(x)` ball.
/// * `D^δ(x)`: some sampled `w` has `x + w ∈ D`.
/// * `G^δ(x, (p, θ)) = y + δρ(y) θ̂` with `y = G(x + w*, p)`, where `w*` is
///   the smallest sampled offset placing `x + w*` in `D` and `θ̂` is `θ ∈ [-1, 1]^n`
///   projected onto the unit ball.
///
/// The parameter box becomes `P × [-1, 1]^n`; `θ = 0` recovers `G`.
pub fn rho_perturb_with_flow(
    sys: &HybridSystem,
    delta: f64,
    rho: ScalarFn,
    dir_grid: usize,
    flow_disturbance: Option<VectorFn>,
) -> Result<HybridSystem> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(HybridError::InvalidDelta(delta));
    }
    if dir_grid == 0 {
        return Err(HybridError::InvalidConfig("dir_grid must be at least 1".into()));
    }
    let n = sys.dim;
    let base_dim = sys.params.dim();
    let theta_box = ParamBox::new(vec![-1.0; n], vec![1.0; n])?;
    let params = sys.params.product(&theta_box);

    let (c_sys, d_sys, f_sys, g_sys) = (sys.clone(), sys.clone(), sys.clone(), sys.clone());
    let (rho_c, rho_d, rho_f, rho_g) = (rho.clone(), rho.clone(), rho.clone(), rho);

    let flow_set = move |x: &[f64], s: f64| {
        let r = delta * rho_c(x);
        let mut scratch = Vec::with_capacity(x.len());
        any_offset(x, r, dir_grid, &mut scratch, |y| c_sys.in_flow_set(y, s)).is_some()
    };
    let jump_set = move |x: &[f64], s: f64| {
        let r = delta * rho_d(x);
        let mut scratch = Vec::with_capacity(x.len());
        any_offset(x, r, dir_grid, &mut scratch, |y| d_sys.in_jump_set(y, s)).is_some()
    };
    let flow_map = move |x: &[f64], dx: &mut [f64]| {
        f_sys.flow(x, dx);
        if let Some(wf) = &flow_disturbance {
            let mut w = vec![0.0; x.len()];
            wf(x, &mut w);
            let cap = delta * rho_f(x);
            let nrm = norm(&w);
            let scale = if nrm > cap && nrm > 0.0 { cap / nrm } else { 1.0 };
            for (d, wi) in dx.iter_mut().zip(&w) {
                *d += scale * wi;
            }
        }
    };
    let jump_map = move |x: &[f64], p: &[f64], out: &mut [f64]| {
        let (p_nom, theta) = p.split_at(base_dim);
        let r = delta * rho_g(x);
        let mut shifted = Vec::with_capacity(x.len());
        let (i, w) = any_offset(x, r, dir_grid, &mut shifted, |y| g_sys.in_jump_set(y, JUMP_SELECT_TOL))
            .unwrap_or((0, 0.0));
        shifted.clear();
        shifted.extend_from_slice(x);
        shifted[i] += w;
        g_sys.jump_into(&shifted, p_nom, out);
        let scale = delta * rho_g(out) * project_unit_ball(theta);
        for (o, th) in out.iter_mut().zip(theta) {
            *o += scale * th;
        }
    };
    Ok(HybridSystem::new(n, params, flow_set, flow_map, jump_set, jump_map))
}
