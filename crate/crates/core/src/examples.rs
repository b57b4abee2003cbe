//! Built-in example systems: the bouncing ball with an impact input and the
//! thermostat with a switched heater.

use serde::{Deserialize, Serialize};

use crate::error::{HybridError, Result};
use crate::hysys::{HybridSystem, ParamBox};

/// Bouncing ball data. State `(p, v)`; the jump input `u ∈ [u_min, u_max]`
/// is added to the post-impact velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BallParams {
    /// Gravitational acceleration (m/s²).
    pub gamma: f64,
    /// Coefficient of restitution.
    pub lambda: f64,
    pub u_min: f64,
    pub u_max: f64,
    /// Desired peak height (m).
    pub p_des: f64,
}

impl Default for BallParams {
    fn default() -> Self {
        Self { gamma: 9.81, lambda: 0.8, u_min: 1.0, u_max: 10.0, p_des: 2.0 }
    }
}

impl BallParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HybridError::InvalidProblem(m));
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return bad(format!("gamma must be positive, got {}", self.gamma));
        }
        if !(self.lambda >= 0.0 && self.lambda < 1.0) {
            return bad(format!("lambda must lie in [0, 1), got {}", self.lambda));
        }
        if !(self.u_min >= 0.0 && self.u_min <= self.u_max) || !self.u_max.is_finite() {
            return bad(format!("need 0 <= u_min <= u_max, got [{}, {}]", self.u_min, self.u_max));
        }
        if !(self.p_des >= 0.0) || !self.p_des.is_finite() {
            return bad(format!("p_des must be nonnegative, got {}", self.p_des));
        }
        Ok(())
    }
}

/// Thermostat data. State `(z, q)` with temperature `z` and heater mode `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermoParams {
    /// Outside temperature (°C).
    pub z_o: f64,
    /// Heater capacity (°C).
    pub z_delta: f64,
    pub z_min: f64,
    pub z_max: f64,
    /// Cost of switching the heater on.
    pub c_on: f64,
    /// Cost of switching the heater off.
    pub c_off: f64,
}

impl Default for ThermoParams {
    fn default() -> Self {
        Self { z_o: 0.0, z_delta: 30.0, z_min: 18.0, z_max: 22.0, c_on: 1.0, c_off: 1.0 }
    }
}

impl ThermoParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.z_min < self.z_max) {
            return Err(HybridError::InvalidProblem(format!(
                "need z_min < z_max, got [{}, {}]",
                self.z_min, self.z_max
            )));
        }
        if !(self.c_on >= 0.0 && self.c_off >= 0.0) {
            return Err(HybridError::InvalidProblem("switching costs must be nonnegative".into()));
        }
        if ![self.z_o, self.z_delta, self.z_min, self.z_max, self.c_on, self.c_off].iter().all(|v| v.is_finite()) {
            return Err(HybridError::InvalidProblem("thermostat data must be finite".into()));
        }
        Ok(())
    }

    /// Distance from `z` to the band `[z_min, z_max]`.
    pub fn band_distance(&self, z: f64) -> f64 {
        (self.z_min - z).max(z - self.z_max).max(0.0)
    }

    /// Flow cost: squared distance to the band up to distance 1, then the
    /// tangent line `2d - 1`.
    pub fn flow_cost(&self, z: f64) -> f64 {
        let d = self.band_distance(z);
        if d <= 1.0 { d * d } else { 2.0 * d - 1.0 }
    }

    /// Jump cost for a switch from mode `q`.
    pub fn jump_cost(&self, q: f64) -> f64 {
        self.c_off * q + self.c_on * (1.0 - q)
    }

    pub fn in_band(&self, z: f64) -> bool {
        z >= self.z_min && z <= self.z_max
    }
}

/// Example selector used by configuration files:
/// `{example = "ball", gamma, lambda, u_min, u_max, p_des}` or
/// `{example = "thermostat", z_o, z_delta, z_min, z_max, c_on, c_off}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "example", rename_all = "lowercase")]
pub enum ExampleSystem {
    Ball(BallParams),
    Thermostat(ThermoParams),
}

impl ExampleSystem {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Ball(p) => p.validate(),
            Self::Thermostat(p) => p.validate(),
        }
    }

    pub fn build(&self) -> Result<HybridSystem> {
        self.validate()?;
        Ok(match self {
            Self::Ball(p) => ball_system(p),
            Self::Thermostat(p) => thermostat_system(p),
        })
    }
}

/// `C = {p >= 0}`, `F = (v, -γ)`, `D = {p = 0, v <= 0}`, `G = (0, -λv + u)`.
pub fn ball_system(params: &BallParams) -> HybridSystem {
    let BallParams { gamma, lambda, u_min, u_max, .. } = *params;
    let box_ = ParamBox::interval(u_min, u_max).unwrap_or_else(|_| ParamBox::singleton(u_min));
    HybridSystem::new(
        2,
        box_,
        |x, s| x[0] >= -s,
        move |x, dx| {
            dx[0] = x[1];
            dx[1] = -gamma;
        },
        |x, s| x[0].abs() <= s && x[1] <= s,
        move |x, u, out| {
            out[0] = 0.0;
            out[1] = -lambda * x[1] + u[0];
        },
    )
}

fn is_mode(q: f64, s: f64) -> bool {
    q.abs() <= s || (q - 1.0).abs() <= s
}

/// Closed-loop thermostat with `C = D = {q ∈ {0, 1}}`, `F = (-z + z_o + z_Δ q, 0)`
/// and `G = (z, 1 - q)`. The jump parameter is a dummy singleton.
pub fn thermostat_system(params: &ThermoParams) -> HybridSystem {
    let ThermoParams { z_o, z_delta, .. } = *params;
    HybridSystem::new(
        2,
        ParamBox::singleton(0.0),
        |x, s| is_mode(x[1], s),
        move |x, dx| {
            dx[0] = -x[0] + z_o + z_delta * x[1];
            dx[1] = 0.0;
        },
        |x, s| is_mode(x[1], s),
        |x, _, out| {
            out[0] = x[0];
            out[1] = 1.0 - x[1];
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thermostat_flow_cost_is_c1() {
        let p = ThermoParams::default();
        assert_eq!(p.flow_cost(20.0), 0.0);
        assert_eq!(p.flow_cost(17.5), 0.25);
        assert_eq!(p.flow_cost(17.0), 1.0);
        assert_eq!(p.flow_cost(15.0), 5.0);
        assert_eq!(p.flow_cost(25.0), 5.0);
        // slopes agree at d = 1
        let e = 1e-6;
        let left = (p.flow_cost(17.0 + e) - p.flow_cost(17.0)) / e;
        let right = (p.flow_cost(17.0) - p.flow_cost(17.0 - e)) / e;
        assert!((left + 2.0).abs() < 1e-4 && (right + 2.0).abs() < 1e-4);
    }

    #[test]
    fn parse_system_blocks() {
        let ball: ExampleSystem =
            toml::from_str("example = \"ball\"\ngamma = 9.81\nlambda = 0.8\nu_min = 1.0\nu_max = 10.0\np_des = 2.0").unwrap();
        assert_eq!(ball, ExampleSystem::Ball(BallParams::default()));
        let thermo: ExampleSystem = serde_json::from_str(r#"{"example":"thermostat","z_min":17.0}"#).unwrap();
        match thermo {
            ExampleSystem::Thermostat(p) => assert_eq!(p.z_min, 17.0),
            _ => panic!(),
        }
    }

    #[test]
    fn invalid_restitution_is_named() {
        let p = BallParams { lambda: 1.0, ..BallParams::default() };
        let err = ExampleSystem::Ball(p).build().unwrap_err();
        assert!(err.to_string().contains("lambda"));
    }
}
