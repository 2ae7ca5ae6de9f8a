use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("vertex {vertex} out of range for graph on {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("enumeration over {n} vertices exceeds the cap of {cap}")]
    EnumerationCap { n: usize, cap: usize },

    #[error("graph is not q-basic: deleting edge ({0}, {1}) keeps the vertices in triangles")]
    NotQBasic(usize, usize),

    #[error("no feasible graph: even the complete graph misses the target")]
    Infeasible,

    #[error("rejection sampling gave up after {tries} tries")]
    RejectionExhausted { tries: u64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
