use thiserror::Error;

use crate::flow::Sample;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// Arguments outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// `l(k)` is undefined: `k = 0` with `i >= 2` and `c != 0`.
    #[error("l(k) is singular at k = {k}")]
    Singularity { k: f64 },

    /// The curvature of the phase curve is undefined (`alpha = 0` or `2k = l`).
    #[error("phase-curve curvature undefined at (alpha, k) = ({alpha}, {k})")]
    UndefinedCurvature { alpha: f64, k: f64 },

    #[error("integration failed: {reason}")]
    Integration { reason: String, last: Option<Sample> },

    #[error("closed-form solution has a pole at s = {s}")]
    Pole { s: f64 },

    /// Point outside the k-interval a first integral is valid on.
    #[error("k = {k} is outside the region ({lo}, {hi}) or within the boundary margin")]
    Region { k: f64, lo: f64, hi: f64 },

    #[error("classification error: {0}")]
    Classification(String),

    /// Degenerate geometric input, e.g. the plane case `alpha = k = 0`.
    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("not applicable: {0}")]
    Inapplicable(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Stable identifier used in machine-readable diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Singularity { .. } => "singularity",
            Error::UndefinedCurvature { .. } => "undefined_curvature",
            Error::Integration { .. } => "integration",
            Error::Pole { .. } => "pole",
            Error::Region { .. } => "region",
            Error::Classification(_) => "classification",
            Error::Degenerate(_) => "degenerate",
            Error::Inapplicable(_) => "inapplicable",
        }
    }
}
