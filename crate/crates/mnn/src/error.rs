//! Crate-wide error type.

use thiserror::Error;

/// Diagnostic attached to a zero-mode failure: how many modes were found and
/// how indefinite the operator is.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroModeDiag {
    /// Number of eigenvalues of the reduced stiffness matrix at or below the
    /// detection tolerance.
    pub modes: usize,
    /// Smallest eigenvalue found.
    pub min_eigenvalue: f64,
    /// Tolerance the eigenvalues were compared against.
    pub tolerance: f64,
}

impl std::fmt::Display for ZeroModeDiag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} zero mode(s), min eigenvalue {:e} (tolerance {:e})",
            self.modes, self.min_eigenvalue, self.tolerance
        )
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice spec: {0}")]
    InvalidSpec(String),

    #[error("unknown bond id {0}")]
    UnknownBond(usize),

    #[error("unknown node id {0}")]
    UnknownNode(usize),

    #[error("node {node} axis {axis} is not a free degree of freedom")]
    FixedDof { node: usize, axis: &'static str },

    #[error("bond {0} is degenerate (zero length)")]
    DegenerateBond(usize),

    #[error("stiffness matrix is not positive definite: {0}")]
    ZeroMode(ZeroModeDiag),

    #[error("zero mode encountered while perturbing bond {bond}: {diag}")]
    ZeroModeAtPerturbation { bond: usize, diag: ZeroModeDiag },

    #[error("zero mode encountered at training epoch {epoch}: {diag}")]
    ZeroModeAtEpoch { epoch: usize, diag: ZeroModeDiag },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
