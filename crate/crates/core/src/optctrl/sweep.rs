//! Optimal-cost sweeps over initial states, horizons and perturbation scales.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HybridError, Result};
use crate::examples::{BallParams, ThermoParams};

use super::{solve_ball, solve_thermostat, BallProblem, OptimizerConfig, ThermoProblem, INFEASIBLE_COST};

/// Which example problem a sweep solves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "example", rename_all = "lowercase")]
pub enum ProblemFamily {
    /// Peak-tracking ball problem.
    Ball(BallParams),
    /// Band-keeping thermostat problem.
    Thermostat(ThermoParams),
}

/// One sweep point: initial state, horizon and perturbation scale (0 for the
/// nominal dynamics).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub xi: [f64; 2],
    pub time: f64,
    pub jumps: usize,
    #[serde(default)]
    pub delta: f64,
}

impl SweepPoint {
    pub fn new(xi: [f64; 2], time: f64, jumps: usize) -> Self {
        Self { xi, time, jumps, delta: 0.0 }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }
}

/// Outcome of one sweep point. Infeasible or failed points carry `h = +∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub point: SweepPoint,
    pub feasible: bool,
    pub h: f64,
    pub decisions: Vec<f64>,
    /// Solver error other than infeasibility.
    pub error: Option<String>,
}

/// Solves the family at every grid point. Rows come back in grid order;
/// solver errors are recorded per row.
pub fn value_sweep(family: &ProblemFamily, grid: &[SweepPoint], cfg: &OptimizerConfig) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(HybridError::InvalidProblem("sweep grid is empty".into()));
    }
    Ok(grid.par_iter().map(|pt| solve_point(family, pt, cfg)).collect())
}

fn solve_point(family: &ProblemFamily, pt: &SweepPoint, cfg: &OptimizerConfig) -> SweepRow {
    let delta = (pt.delta > 0.0).then_some(pt.delta);
    let result = match family {
        ProblemFamily::Ball(p) => {
            let mut prob = BallProblem::new(*p, pt.xi, pt.time, pt.jumps);
            prob.delta = delta;
            solve_ball(&prob, cfg)
        }
        ProblemFamily::Thermostat(p) => {
            let mut prob = ThermoProblem::new(*p, pt.xi, pt.time, pt.jumps);
            prob.delta = delta;
            solve_thermostat(&prob, cfg)
        }
    };
    match result {
        Ok(sol) => SweepRow { point: pt.clone(), feasible: true, h: sol.cost, decisions: sol.decisions, error: None },
        Err(e) => SweepRow {
            point: pt.clone(),
            feasible: false,
            h: INFEASIBLE_COST,
            decisions: Vec::new(),
            error: (!matches!(e, HybridError::Infeasible(_) | HybridError::InfeasibleTerminal)).then(|| e.to_string()),
        },
    }
}

/// Writes `xi_1,xi_2,T,J,delta,feasible,h,d_1..d_m`, with `m` the largest
/// jump count in the sweep. Shorter decision vectors leave trailing cells empty.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut w: W) -> std::io::Result<()> {
    let width = rows.iter().map(|r| r.point.jumps).max().unwrap_or(0);
    write!(w, "xi_1,xi_2,T,J,delta,feasible,h")?;
    for k in 1..=width {
        write!(w, ",d_{k}")?;
    }
    writeln!(w)?;
    for r in rows {
        let p = &r.point;
        write!(w, "{},{},{},{},{},{},{}", p.xi[0], p.xi[1], p.time, p.jumps, p.delta, r.feasible, r.h)?;
        for k in 0..width {
            match r.decisions.get(k) {
                Some(d) => write!(w, ",{d}")?,
                None => write!(w, ",")?,
            }
        }
        writeln!(w)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infeasible_rows_carry_sentinel() {
        let fam = ProblemFamily::Ball(BallParams::default());
        let grid = vec![SweepPoint::new([1.0, 0.0], 0.3, 1), SweepPoint::new([1.0, 0.0], 1.0, 1)];
        let rows = value_sweep(&fam, &grid, &OptimizerConfig::default()).unwrap();
        assert!(!rows[0].feasible && rows[0].h.is_infinite() && rows[0].error.is_none());
        assert!(rows[1].feasible && rows[1].h.is_finite());
        let mut buf = Vec::new();
        write_sweep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "xi_1,xi_2,T,J,delta,feasible,h,d_1");
        assert!(lines[1].ends_with(",false,inf,"));
    }

    #[test]
    fn empty_grid_is_an_error() {
        let fam = ProblemFamily::Thermostat(ThermoParams::default());
        assert!(value_sweep(&fam, &[], &OptimizerConfig::default()).is_err());
    }
}
