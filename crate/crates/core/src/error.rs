use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("time index {t} outside [1, {horizon}]")]
    TimeOutOfRange { t: usize, horizon: usize },
    #[error("action vector pulls {pulled} arms, budget is {budget}")]
    BudgetViolation { pulled: usize, budget: usize },
    #[error("budget {budget} exceeds number of arms {n_arms}")]
    BudgetExceedsArms { budget: usize, n_arms: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("reward trace gap: expected t={expected}, got t={got}")]
    TraceGap { expected: usize, got: usize },
    #[error("value iteration did not converge in {iters} sweeps (residual {residual:e})")]
    NonConvergence { iters: usize, residual: f64 },
    #[error("no sign change of the action gap over [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64, fallback: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unknown learner identifier `{0}`")]
    UnknownLearner(String),
    #[error("centering learner `{0}` missing from records")]
    MissingCenteringLearner(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short stable tag for machine-readable error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInstance(_) => "invalid_instance",
            Error::TimeOutOfRange { .. } => "time_out_of_range",
            Error::BudgetViolation { .. } => "budget_violation",
            Error::BudgetExceedsArms { .. } => "budget_exceeds_arms",
            Error::ShapeMismatch(_) => "shape_mismatch",
            Error::TraceGap { .. } => "trace_gap",
            Error::NonConvergence { .. } => "non_convergence",
            Error::NoSignChange { .. } => "no_sign_change",
            Error::Config(_) => "config",
            Error::UnknownLearner(_) => "unknown_learner",
            Error::MissingCenteringLearner(_) => "missing_centering_learner",
            Error::Numerical(_) => "numerical",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
