use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported photon number {n} (allowed {min}..={max})")]
    PhotonNumber { n: usize, min: usize, max: usize },

    #[error("argument length mismatch: expected {expected}, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("quadrature did not converge: estimate {value:e}, error {error:e} after {subdivisions} subdivisions")]
    Quadrature {
        value: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("finite-difference stencil invalid: {0}")]
    Stencil(String),

    #[error("lattice configuration: {0}")]
    Lattice(String),

    #[error("propagation did not converge: {0}")]
    Propagation(String),

    #[error("empty v-grid")]
    EmptyGrid,

    #[error("invalid grid '{0}': {1}")]
    InvalidGrid(String, String),

    #[error("unreliable result: {0}")]
    Unreliable(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
