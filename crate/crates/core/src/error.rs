use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate range on axis {axis}: min == max == {value}")]
    DegenerateRange { axis: char, value: f64 },

    #[error("unmapped emotion label {0:?}")]
    UnmappedLabel(String),

    #[error("label vocabulary: {0}")]
    Vocabulary(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("insufficient samples for cube-root K_max rule: need at least 8, got {0}")]
    InsufficientSamples(usize),

    #[error("silhouette needs at least 2 clusters, got {0}")]
    SingleCluster(usize),

    #[error("degenerate axis {0}: every centroid shares the same coordinate")]
    DegenerateAxis(char),

    #[error("token {token} out of range [1, {max}] on axis {axis}")]
    TokenOutOfRange { axis: char, token: u32, max: u32 },

    #[error("row {id}: {reason}")]
    InvalidRecord { id: String, reason: String },

    #[error("token id {0} collides with a special token")]
    TokenCollision(u32),

    #[error("inference mode {mode} does not accept the supplied controls")]
    ModeMismatch { mode: &'static str },

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch { what: &'static str, left: usize, right: usize },

    #[error("shape mismatch: {0:?} vs {1:?}")]
    ShapeMismatch(Vec<usize>, Vec<usize>),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("infinite loss: zero probability on a weighted target at position {position}")]
    InfiniteLoss { position: usize },

    #[error("missing gate input {0}")]
    MissingGateInput(&'static str),

    #[error("not a permutation of 1..={0}")]
    NotPermutation(usize),

    #[error("confusion matrix has no counts")]
    EmptyConfusion,

    #[error("constant column {0:?}")]
    ConstantColumn(String),

    #[error("no baseline rows for emotion {0:?}")]
    MissingBaseline(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
