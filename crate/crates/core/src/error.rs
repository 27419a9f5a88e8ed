use thiserror::Error;

use crate::expr::{EvalError, ParseError};
use crate::geometry::GeometryError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("warp nonpositive at ({}): f = {value}", fmt_point(point))]
    NonpositiveWarp { point: Vec<f64>, value: f64 },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("theorem not applicable: {0}")]
    Inapplicable(String),
    #[error("manifest line {line}, [{section}] {key}: {message}")]
    Manifest {
        line: usize,
        section: String,
        key: String,
        message: String,
    },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}

pub(crate) fn fmt_point(p: &[f64]) -> String {
    p.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(", ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
