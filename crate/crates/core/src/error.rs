use thiserror::Error;

/// Errors produced anywhere in the clustering pipeline.
#[derive(Debug, Error)]
pub enum UcfError {
    #[error("row {0} has zero norm")]
    ZeroRow(usize),
    #[error("non-finite value at row {0}, column {1}")]
    NonFinite(usize, usize),
    #[error("embedding matrix is empty")]
    Empty,
    #[error("shape mismatch: expected {expected} values, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("row {row} is not unit-norm (norm {norm})")]
    NotUnitNorm { row: usize, norm: f64 },
    #[error("k1 = {k1} is invalid for {n} instances (need 1 <= k1 < n)")]
    BadK { k1: usize, n: usize },
    #[error("neighbor sets require a euclidean distance matrix")]
    WrongDistanceKind,
    #[error("eps must be positive, got {0}")]
    BadEps(f64),
    #[error("min_pts must be at least 1")]
    BadMinPts,
    #[error("instance {0} is the only member of its cluster")]
    Singleton(usize),
    #[error("silhouette needs at least two clusters")]
    SingleCluster,
    #[error("instance {0} is not assigned to a cluster")]
    Unclustered(usize),
    #[error("index {index} out of range for {len} items")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("cluster {0} has no selected members")]
    EmptyCluster(usize),
    #[error("class index {index} out of range for {k} prototypes")]
    BadIndex { index: usize, k: usize },
    #[error("invalid parameter: {0}")]
    BadParam(String),
    #[error("invalid synthetic config: {0}")]
    BadConfig(String),
    #[error("subset selects no clustered instances")]
    EmptySubset,
    #[error("no instances survived selection")]
    NoSelectedInstances,
    #[error("malformed input at byte offset {offset}: {reason}")]
    Malformed { offset: usize, reason: String },
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = UcfError> = std::result::Result<T, E>;
