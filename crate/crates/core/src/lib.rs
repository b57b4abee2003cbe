//! Hybrid dynamical systems: simulation over hybrid time domains, sampled
//! reachable sets, `(τ, ε)`-closeness of hybrid arcs and finite-horizon
//! optimal control in Mayer form, with the bouncing ball and the thermostat
//! as built-in examples.

// `!(a > b)` rejects NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod closeness;
pub mod error;
pub mod examples;
pub mod hysys;
pub mod hytime;
pub mod optctrl;
pub mod reach;

pub use closeness::{graphical_convergence_report, is_close, min_eps, ClosenessReport, ConvergenceReport};
pub use error::{HybridError, Result};
pub use examples::{ball_system, thermostat_system, BallParams, ExampleSystem, ThermoParams};
pub use hysys::{
    apply_jump, augment_mayer, rho_perturb, rho_perturb_with_flow, simulate, Horizon, HybridSystem, JumpCommand,
    Outcome, ParamBox, Priority, SimStatus, SolverConfig, Trigger,
};
pub use hytime::{HybridArc, HybridTimeDomain, Segment};
pub use optctrl::{eval_cost, MayerProblem, OptimalSolution, OptimizerConfig};
pub use reach::{containment_check, reach_interval, reach_sample, ReachSample};
