use thiserror::Error;

/// Errors raised by the hybrid toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum HybridError {
    #[error("jump times are not nondecreasing: t[{index}] = {next} < {prev}")]
    NonMonotone { index: usize, prev: f64, next: f64 },
    #[error("terminal time {terminal} precedes last jump time {last_jump}")]
    TerminalBeforeLastJump { terminal: f64, last_jump: f64 },
    #[error("negative or non-finite time {0}")]
    NegativeTime(f64),
    #[error("hybrid time ({t}, {j}) is outside the arc domain")]
    OutOfDomain { t: f64, j: usize },
    #[error("malformed hybrid arc: {0}")]
    MalformedArc(String),
    #[error("state dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("initial condition is outside C ∪ D")]
    InvalidInitialCondition,
    #[error("command for jump {jump} fired at t = {t} where the jump set does not hold")]
    CommandOutsideD { t: f64, jump: usize },
    #[error("invalid jump command {index}: {reason}")]
    InvalidCommand { index: usize, reason: String },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("state is not in the jump set")]
    NotInJumpSet,
    #[error("jump parameter {0:?} lies outside the parameter domain")]
    ParamOutOfRange(Vec<f64>),
    #[error("perturbation scale must lie in (0, 1), got {0}")]
    InvalidDelta(f64),

    #[error("closeness requires eps > 0 and tau >= 0 (eps = {eps}, tau = {tau})")]
    InvalidCloseness { eps: f64, tau: f64 },
    #[error("eps grid must be nonempty, positive and ascending")]
    EmptyGrid,
    #[error("reach sample is empty")]
    EmptySample,

    #[error("invalid problem data: {0}")]
    InvalidProblem(String),
    #[error("arc ends at ({t}, {j}) but the problem horizon is ({horizon_t}, {horizon_j})")]
    HorizonMismatch { t: f64, j: usize, horizon_t: f64, horizon_j: usize },
    #[error("terminal state violates the terminal constraint")]
    InfeasibleTerminal,
    #[error("initial height must be nonnegative, got {0}")]
    NegativeHeight(f64),
    #[error("problem is infeasible: {0}")]
    Infeasible(String),
    #[error("initial heater mode must be 0 or 1, got {0}")]
    InvalidInitialMode(f64),
    #[error("numerical failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, HybridError>;
