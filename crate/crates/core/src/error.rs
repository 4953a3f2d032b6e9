use thiserror::Error;

/// Errors raised by the graph-state entanglement engines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what}: {requested} qubits requested, limit is {limit}")]
    LimitExceeded {
        what: &'static str,
        requested: usize,
        limit: usize,
    },

    #[error("vertex {vertex} out of range for a graph on {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("width mismatch: expected {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("negativity needs exactly two parts, partition has {0}")]
    NotBipartite(usize),

    #[error("probability {value} outside [0, 1] for {what}")]
    ProbabilityRange { what: &'static str, value: f64 },

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("operation requires an all-Pauli product channel")]
    NonPauliChannel,

    #[error(
        "Kraus operator {index} on qubit {qubit} is neither diagonal nor anti-diagonal; \
         it cannot be commuted through CZ gates"
    )]
    NonCommutingKraus { qubit: usize, index: usize },

    #[error("distribution is not normalized (sum = {sum})")]
    Unnormalized { sum: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by a size cap rather than bad input.
    pub fn is_limit(&self) -> bool {
        matches!(self, Error::LimitExceeded { .. })
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Size caps shared by the dense and enumerative code paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Limits {
    /// Largest graph for which a full 2^n state vector is built.
    pub dense_state: usize,
    /// Largest graph for the reference joint-label enumeration.
    pub enumeration: usize,
    /// Largest dense probability table over {0,1}^n.
    pub table: usize,
    /// Largest matrix (in qubits) handed to the Hermitian eigensolver.
    pub eigensolver: usize,
    /// Largest graph for the general-channel term enumeration.
    pub general_channel: usize,
    /// Largest graph the dense density-matrix oracle accepts.
    pub oracle: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            dense_state: 20,
            enumeration: 16,
            table: 24,
            eigensolver: 12,
            general_channel: 10,
            oracle: 8,
        }
    }
}

pub(crate) fn check_limit(what: &'static str, requested: usize, limit: usize) -> Result<()> {
    if requested > limit {
        Err(Error::LimitExceeded {
            what,
            requested,
            limit,
        })
    } else {
        Ok(())
    }
}
