//! Exit codes and the machine-readable error record.

use hybridopt_core::HybridError;
use serde::Serialize;

pub const CONFIG: i32 = 2;
pub const INFEASIBLE: i32 = 3;
pub const NUMERIC: i32 = 4;

/// A run that ended with a nonzero exit code.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: CONFIG, kind: "config", message: message.into() }
    }

    pub fn infeasible(message: impl Into<String>) -> Self {
        Self { code: INFEASIBLE, kind: "infeasible", message: message.into() }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Self { code: NUMERIC, kind: "numeric", message: message.into() }
    }

    pub fn output(err: std::io::Error, path: &std::path::Path) -> Self {
        Self { code: CONFIG, kind: "output", message: format!("cannot write {}: {err}", path.display()) }
    }

    /// JSON line written to stderr.
    pub fn record(&self) -> String {
        serde_json::json!({ "error": self }).to_string()
    }
}

impl From<HybridError> for Failure {
    fn from(e: HybridError) -> Self {
        use HybridError::*;
        let message = e.to_string();
        match e {
            Infeasible(_) | InfeasibleTerminal | CommandOutsideD { .. } | EmptySample => Self::infeasible(message),
            InvalidProblem(_)
            | InvalidConfig(_)
            | InvalidDelta(_)
            | InvalidInitialMode(_)
            | InvalidInitialCondition
            | InvalidCommand { .. }
            | InvalidCloseness { .. }
            | ParamOutOfRange(_)
            | NegativeHeight(_)
            | NegativeTime(_)
            | DimensionMismatch { .. }
            | EmptyGrid => Self::config(message),
            _ => Self::numeric(message),
        }
    }
}
