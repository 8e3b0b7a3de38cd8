use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid B-spline order {0}: order must be at least 1")]
    InvalidOrder(usize),

    #[error("invalid mask: {0}")]
    InvalidMask(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("invalid region of interest: {0}")]
    InvalidRoi(String),

    #[error("region of interest contains no integer point")]
    EmptyIntegerSet,

    #[error("lattice at level {level} contains the origin; spherical triples are undefined there")]
    ZeroInLattice { level: u32 },

    #[error("reference wave evaluated at its singular point (the origin)")]
    SingularPoint,

    #[error("invalid reference wave: {0}")]
    InvalidWave(String),

    #[error("certificate failure at level {level}: {reason}")]
    Certificate { level: u32, reason: String },

    #[error("degenerate recovery point k={k:?}: |mu| = {mu:e} is below the threshold")]
    DegeneratePoint { k: Vec<i64>, mu: f64 },

    #[error("reference wave is not admissible at level {level}: triple k={k:?} has mu = 0")]
    Inadmissible { level: u32, k: Vec<i64> },

    #[error("inconsistent records: {0}")]
    Inconsistent(String),

    #[error("unknown target function '{0}'")]
    UnknownTarget(String),

    #[error("invalid target parameters: {0}")]
    InvalidTarget(String),

    #[error("configuration violates {} hypothesis(es): {}", .0.len(), join_violations(.0))]
    Validation(Vec<Violation>),

    #[error("invalid quadrature grid: {0}")]
    InvalidGrid(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// One violated configuration hypothesis.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Violation {
    /// Machine-readable reason, e.g. `zero-in-lattice`.
    pub code: String,
    pub message: String,
}

impl Violation {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        Self {
            code: code.to_string(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}] {}", self.code, self.message)
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(Violation::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

impl Error {
    /// Short machine-readable reason used in CLI diagnostics.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidOrder(_) => "invalid-order",
            Error::InvalidMask(_) => "invalid-mask",
            Error::Shape { .. } => "shape",
            Error::InvalidRoi(_) => "invalid-roi",
            Error::EmptyIntegerSet => "empty-integer-set",
            Error::ZeroInLattice { .. } => "zero-in-lattice",
            Error::SingularPoint => "singular-point",
            Error::InvalidWave(_) => "invalid-wave",
            Error::Certificate { .. } => "certificate-failure",
            Error::DegeneratePoint { .. } => "degenerate-point",
            Error::Inadmissible { .. } => "inadmissible",
            Error::Inconsistent(_) => "inconsistent-records",
            Error::UnknownTarget(_) => "unknown-target",
            Error::InvalidTarget(_) => "invalid-target",
            Error::Validation(_) => "validation",
            Error::InvalidGrid(_) => "invalid-grid",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }
}
