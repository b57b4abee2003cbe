//! Fixtures shared by the benchmarks in `benches/`.

use hybridopt_core::optctrl::{BallProblem, ThermoProblem};
use hybridopt_core::{ball_system, simulate, BallParams, Horizon, HybridArc, JumpCommand, SolverConfig, ThermoParams};

/// The two-impact ball instance at `(T, p) = (4, 1)`.
pub fn nominal_ball() -> BallProblem {
    BallProblem::new(BallParams::default(), [1.0, 0.0], 4.0, 2)
}

/// Two switches from 17 °C over three seconds.
pub fn two_switch_thermostat() -> ThermoProblem {
    ThermoProblem::new(ThermoParams::default(), [17.0, 0.0], 3.0, 2)
}

/// Ball dropped from `height` with input 1 at each of `jumps` impacts.
pub fn drop_arc(height: f64, time: f64, jumps: usize, step: f64) -> HybridArc {
    let sys = ball_system(&BallParams::default());
    let cmds = vec![JumpCommand::forced(vec![1.0]); jumps];
    let (arc, _) = simulate(&sys, &[height, 0.0], &cmds, Horizon::new(time, jumps), &SolverConfig::default().with_step(step))
        .expect("fixture simulates");
    arc
}
