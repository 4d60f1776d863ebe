use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("grid under-resolves {what}: need at least {required_points} points per axis")]
    UnderResolved { what: String, required_points: usize },

    #[error("field mass outside the central half of the domain is {mass:.3e} (limit {limit:.1e})")]
    MarginViolation { mass: f64, limit: f64 },

    #[error("offset {offset} exceeds the half-width {half_width} of the domain")]
    ShiftTooLarge { offset: f64, half_width: f64 },

    #[error("fields live on different grids or carry different epsilon")]
    GridMismatch,

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("solver failed at t = {t:.4}: {reason} (dt = {dt:.3e}, mass drift = {mass_drift:.3e})")]
    SolverFailure {
        t: f64,
        dt: f64,
        mass_drift: f64,
        reason: String,
    },

    #[error("need at least {needed} usable points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidGrid(_) | Error::InvalidInput(_) => 2,
            Error::Io(_) => 2,
            _ => 3,
        }
    }
}
