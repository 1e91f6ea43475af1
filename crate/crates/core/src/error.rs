use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite value in {context} at iteration {iteration}")]
    NonFinite {
        context: &'static str,
        iteration: usize,
    },

    #[error("root find failed in {context}: {detail}")]
    RootFind {
        context: &'static str,
        detail: String,
    },

    #[error("infeasible trim point at V_w = {wind} m/s, beta = {beta_deg:.3} deg: {reason}")]
    Infeasible {
        wind: f64,
        beta_deg: f64,
        reason: String,
    },

    #[error("model consistency fault: {0}")]
    ModelConsistency(String),

    #[error("simulation fault at t = {t:.3} s: {reason}")]
    SimFault { t: f64, reason: String },
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
