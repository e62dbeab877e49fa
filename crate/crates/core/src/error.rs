use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("step rejected: time step exceeds the stability limit, required dt <= {required_dt:e}")]
    StepRejected { required_dt: f64 },

    #[error("solver diverged: {0}")]
    SolverDiverged(String),

    #[error("semi-Lagrangian fixed point did not converge at t = {t} (cell {cell}); gradient singularity imminent")]
    NearSingularity { t: f64, cell: usize },

    #[error("unsupported Sobolev order {0} (at most 3)")]
    UnsupportedOrder(usize),

    #[error("Picard iteration failed to contract: differences grew for 3 consecutive iterations ending at k = {k}")]
    ContractionFailure {
        k: usize,
        trace: Box<crate::picard::IterationTrace>,
    },

    #[error("inconsistent data: {0}")]
    InconsistentData(String),

    #[error("no vacuum region: the mask is empty")]
    NoVacuumRegion,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no data: {0}")]
    NoData(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("malformed snapshot: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
