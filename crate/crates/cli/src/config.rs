//! Experiment configuration, read from TOML (or JSON by extension).

use std::path::Path;

use hybridopt_core::{ExampleSystem, OptimizerConfig, Priority, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::exit::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    Sweep,
    Reach,
    Closeness,
    Fig1,
    Fig2,
    ThermostatDemo,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    /// Seed for randomized schedule generation.
    #[serde(default)]
    pub seed: u64,
    /// Output path prefix; `--out` takes precedence.
    #[serde(default)]
    pub out: Option<String>,
    pub system: ExampleSystem,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub simulate: Option<ArcSpec>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub reach: Option<ReachSpec>,
    #[serde(default)]
    pub closeness: Option<ClosenessSpec>,
    #[serde(default)]
    pub fig1: Option<Fig1Spec>,
    #[serde(default)]
    pub fig2: Option<Fig2Spec>,
    #[serde(default, rename = "thermostat-demo")]
    pub thermostat_demo: Option<ThermoDemoSpec>,
}

/// Simulator settings; mirrors [`SolverConfig`] with defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub step: f64,
    pub event_tol: f64,
    pub state_tol: f64,
    pub max_jumps: usize,
    pub escape_bound: f64,
    pub priority: PriorityName,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriorityName {
    Flow,
    Jump,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            step: d.step,
            event_tol: d.event_tol,
            state_tol: d.state_tol,
            max_jumps: d.max_jumps,
            escape_bound: d.escape_bound,
            priority: PriorityName::Flow,
        }
    }
}

impl SolverSection {
    pub fn build(&self) -> SolverConfig {
        SolverConfig {
            step: self.step,
            event_tol: self.event_tol,
            state_tol: self.state_tol,
            max_jumps: self.max_jumps,
            escape_bound: self.escape_bound,
            priority: match self.priority {
                PriorityName::Flow => Priority::Flow,
                PriorityName::Jump => Priority::Jump,
            },
        }
    }
}

/// One jump decision; without `at` the jump is forced.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommandSpec {
    #[serde(default)]
    pub at: Option<f64>,
    pub param: Vec<f64>,
}

/// A single simulation: initial state, horizon and jump decisions.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArcSpec {
    pub x0: Vec<f64>,
    pub time: f64,
    pub jumps: usize,
    #[serde(default)]
    pub commands: Vec<CommandSpec>,
}

/// Explicit values, or `points` uniform values from `from` to `to`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Axis {
    Values(Vec<f64>),
    Range { from: f64, to: f64, points: usize },
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Self::Values(v) => v.clone(),
            Self::Range { from, to, points } => match points {
                0 => Vec::new(),
                1 => vec![*from],
                n => (0..*n).map(|k| from + (to - from) * k as f64 / (n - 1) as f64).collect(),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub xi_1: Axis,
    pub xi_2: Axis,
    pub time: Axis,
    pub jumps: Vec<usize>,
    #[serde(default = "zero_delta")]
    pub delta: Axis,
}

fn zero_delta() -> Axis {
    Axis::Values(vec![0.0])
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReachSpec {
    pub x0: Vec<f64>,
    pub time: f64,
    /// Upper end of a horizon interval; a single horizon when absent.
    #[serde(default)]
    pub time_hi: Option<f64>,
    #[serde(default = "one")]
    pub time_points: usize,
    pub jumps: usize,
    /// Points per parameter axis for forced-jump schedules.
    #[serde(default = "default_param_points")]
    pub param_points: usize,
    /// Additional schedules with parameters drawn uniformly using `seed`.
    #[serde(default)]
    pub random_schedules: usize,
    /// Perturbation scale (constant `ρ ≡ 1`); nominal system when absent.
    #[serde(default)]
    pub delta: Option<f64>,
}

fn one() -> usize {
    1
}

fn default_param_points() -> usize {
    5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosenessSpec {
    pub a: ArcSpec,
    pub b: ArcSpec,
    pub tau: f64,
    #[serde(default = "default_eps_lo")]
    pub eps_lo: f64,
    #[serde(default = "default_eps_hi")]
    pub eps_hi: f64,
    #[serde(default = "default_eps_points")]
    pub eps_points: usize,
}

fn default_eps_lo() -> f64 {
    1e-4
}

fn default_eps_hi() -> f64 {
    10.0
}

fn default_eps_points() -> usize {
    400
}

/// Cost surface and input convergence around a nominal `(T, p)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig1Spec {
    pub time: f64,
    pub height: f64,
    pub jumps: usize,
    /// Half-width of the `(T, p)` rectangle.
    pub radius: f64,
    pub points: usize,
    pub sequence: usize,
}

impl Default for Fig1Spec {
    fn default() -> Self {
        Self { time: 4.0, height: 1.0, jumps: 2, radius: 0.5, points: 21, sequence: 6 }
    }
}

/// Optimal arcs approaching a nominal `(T, p)` and their closeness.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig2Spec {
    pub time: f64,
    pub height: f64,
    pub jumps: usize,
    pub sequence: usize,
    pub eps_lo: f64,
    pub eps_hi: f64,
    pub eps_points: usize,
}

impl Default for Fig2Spec {
    fn default() -> Self {
        Self { time: 2.0, height: 2.0, jumps: 1, sequence: 6, eps_lo: 1e-5, eps_hi: 10.0, eps_points: 4000 }
    }
}

/// Optimal schedules over switching costs and switch counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermoDemoSpec {
    pub xi: [f64; 2],
    pub time: f64,
    pub max_jumps: usize,
    /// Values assigned to both `c_on` and `c_off`.
    pub costs: Vec<f64>,
}

impl Default for ThermoDemoSpec {
    fn default() -> Self {
        Self { xi: [17.0, 0.0], time: 3.0, max_jumps: 2, costs: vec![0.0, 1.0, 10.0] }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: Self = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            serde_json::from_str(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Failure> {
        self.system.validate().map_err(|e| Failure::config(e.to_string()))?;
        self.solver.build().validate().map_err(|e| Failure::config(e.to_string()))?;
        let o = &self.optimizer;
        if o.grid_points < 2 || o.simplex_tol.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) || o.max_iter == 0 {
            return Err(Failure::config("optimizer needs grid_points >= 2, simplex_tol > 0 and max_iter > 0"));
        }
        let ball = matches!(self.system, ExampleSystem::Ball(_));
        match self.command {
            Command::Fig1 | Command::Fig2 if !ball => Err(Failure::config("fig1 and fig2 need the ball system")),
            Command::ThermostatDemo if ball => Err(Failure::config("thermostat-demo needs the thermostat system")),
            Command::Simulate if self.simulate.is_none() => Err(Failure::config("missing [simulate] section")),
            Command::Sweep if self.sweep.is_none() => Err(Failure::config("missing [sweep] section")),
            Command::Reach if self.reach.is_none() => Err(Failure::config("missing [reach] section")),
            Command::Closeness if self.closeness.is_none() => Err(Failure::config("missing [closeness] section")),
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_fig1_config() {
        let cfg: ExperimentConfig = toml::from_str("command = \"fig1\"\n[system]\nexample = \"ball\"\n").unwrap();
        assert_eq!(cfg.command, Command::Fig1);
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.fig1.unwrap_or_default().jumps, 2);
    }

    #[test]
    fn axis_forms() {
        #[derive(Deserialize)]
        struct W {
            a: Axis,
            b: Axis,
        }
        let w: W = toml::from_str("a = [1.0, 2.0]\nb = { from = 0.0, to = 1.0, points = 3 }\n").unwrap();
        assert_eq!(w.a.values(), vec![1.0, 2.0]);
        assert_eq!(w.b.values(), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn command_needs_matching_system() {
        let cfg: ExperimentConfig = toml::from_str("command = \"fig2\"\n[system]\nexample = \"thermostat\"\n").unwrap();
        assert_eq!(cfg.validate().unwrap_err().code, 2);
    }
}
