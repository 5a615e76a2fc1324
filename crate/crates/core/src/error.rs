use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("input is not convex: second difference {value:e} at index {index}")]
    ConvexityViolation { index: usize, value: f64 },

    #[error("matrix is not positive semidefinite: eigenvalue {min_eig:e} below -{tolerance:e}")]
    NotPsd { min_eig: f64, tolerance: f64 },

    #[error("coincident particles {i} and {j} (separation {separation:e})")]
    Singularity { i: usize, j: usize, separation: f64 },

    #[error("configuration has no particle of the opposite species")]
    NoOpposite,

    #[error("tail error: {0}")]
    Tail(String),

    #[error("integral diverges: {0}")]
    Integrability(String),

    #[error("degenerate geometry: {0}")]
    Degenerate(String),

    #[error("Fock truncation too small: norm deficit {deficit:e}")]
    Truncation { deficit: f64 },

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("basis is not orthonormal: Gram deviation {deviation:e}")]
    Basis { deviation: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("field is not supported away from the boundary: edge/max ratio {ratio:e}")]
    Support { ratio: f64 },

    #[error("vector potential is not spectrally resolved: top-shell energy fraction {fraction:e}")]
    Resolution { fraction: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("energy map `{map}` failed on domain {domain}: {source}")]
    Evaluation {
        map: String,
        domain: String,
        #[source]
        source: Box<Error>,
    },

    #[error("internal consistency error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
