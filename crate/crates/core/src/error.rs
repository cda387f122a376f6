// SPDX-License-Identifier: MIT OR Apache-2.0

use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e}{})",
        .time.map(|t| alloc::format!(", t = {t}")).unwrap_or_default())]
    Convergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
        time: Option<f64>,
    },

    #[error("interval [{a}, {b}) is too short for bandwidth {bandwidth}")]
    DegenerateInterval { a: f64, b: f64, bandwidth: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn convergence(what: &'static str, iterations: usize, residual: f64) -> Self {
        Error::Convergence {
            what,
            iterations,
            residual,
            time: None,
        }
    }

    /// Tags a convergence failure with the grid time that produced it.
    pub(crate) fn at_time(self, t: f64) -> Self {
        match self {
            Error::Convergence {
                what,
                iterations,
                residual,
                ..
            } => Error::Convergence {
                what,
                iterations,
                residual,
                time: Some(t),
            },
            other => other,
        }
    }
}
