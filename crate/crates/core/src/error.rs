use thiserror::Error;

pub type Result<T> = std::result::Result<T, PceError>;

#[derive(Debug, Error)]
pub enum PceError {
    #[error("coordinate {coordinate}: value {value} is outside the support of the marginal")]
    OutsideSupport { coordinate: usize, value: f64 },

    #[error("invalid marginal parameters: {0}")]
    InvalidMarginal(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite basis evaluation at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },

    #[error("least-squares system has {cols} columns but only {rows} rows")]
    Underdetermined { rows: usize, cols: usize },

    #[error("sparsity level {k} outside the admissible range 1..={max}")]
    SparsityOutOfRange { k: usize, max: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no valid basis: every candidate produced a degenerate error estimate")]
    NoValidBasis,

    #[error("candidate pool does not contain the ({solver}, {scheme}) combination required by the fixed rule")]
    MissingCombination { solver: String, scheme: String },

    #[error("candidate {index} was fitted on a different experimental design")]
    DesignMismatch { index: usize },

    #[error("unknown identifier '{0}'")]
    UnknownId(String),

    #[error("schema violation: {0}")]
    Schema(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
