use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} qubits, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("operator is not Hermitian: {0}")]
    NonHermitian(String),

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{label} is not localizable at {site}")]
    NotLocalizable { label: String, site: String },

    #[error("malformed catalog: {0}")]
    MalformedCatalog(String),

    #[error("operator not in the span of the map's source generators: {0}")]
    Unmappable(String),

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("invariance violation: {0}")]
    Invariance(String),

    #[error("unlabeled excitation: {0}")]
    Unlabeled(String),

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
