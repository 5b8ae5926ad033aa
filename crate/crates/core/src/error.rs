use thiserror::Error;

use crate::linalg::LinalgError;
use crate::newton::NewtonError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Linalg(#[from] LinalgError),

    #[error("newton solve failed at step {step} (t = {time}): {source}")]
    Newton {
        step: usize,
        time: f64,
        #[source]
        source: NewtonError,
    },

    #[error(
        "newton did not converge at step {step} (t = {time}) within {iterations} iterations \
         (last update norm {update_norm:e})"
    )]
    NonConvergence {
        step: usize,
        time: f64,
        iterations: usize,
        update_norm: f64,
    },

    #[error("suspected blow-up at step {step} (t = {time}): max |u| = {value:e} exceeds guard {guard:e}")]
    BlowUp {
        step: usize,
        time: f64,
        value: f64,
        guard: f64,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
