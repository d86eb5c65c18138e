// Copyright 2026 The dpcusum Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors produced by the detection toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A numeric argument is outside its admissible range.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A model description violates the model invariants.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// A detector configuration is inconsistent with the model it is applied to.
    #[error("configuration error: {0}")]
    Config(String),

    /// `step` was called on a detector that has already raised an alarm.
    #[error("detector already stopped at t = {0}")]
    AlreadyStopped(u64),

    /// An analytic bound was evaluated outside the region where it holds.
    #[error("out of domain: {0}")]
    OutOfDomain(String),

    /// Reading or writing an artifact failed.
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(name: &str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be finite, got {value}")))
    }
}

pub(crate) fn ensure_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be finite and > 0, got {value}")))
    }
}
