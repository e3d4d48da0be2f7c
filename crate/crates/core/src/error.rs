use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("unknown record schema `{0}` (expected `flat` or `api`)")]
    UnknownSchema(String),

    #[error("no influencer survived selection: {0}")]
    EmptyInfluencerSet(String),

    #[error("interaction matrix is {rows}x{cols}; correspondence analysis needs at least 2x2")]
    MatrixTooSmall { rows: usize, cols: usize },

    #[error("zero mass in {axis} `{id}`")]
    ZeroMass { axis: &'static str, id: String },

    #[error("invalid solver parameter: {0}")]
    InvalidParameter(String),

    #[error("leading singular value {sigma:e} is not above tolerance {tol:e}: rows and columns are independent")]
    Degenerate { sigma: f64, tol: f64 },

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("anchor influencer `{0}` is not a column of the interaction matrix")]
    AnchorMissing(String),

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    #[error("invalid generator config: {0}")]
    InvalidConfig(String),

    #[error("malformed input at {path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
}
