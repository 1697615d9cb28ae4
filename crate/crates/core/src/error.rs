// Copyright 2026 The xferopt Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors produced by the transfer-optimization toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid pulse: {0}")]
    InvalidPulse(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("infeasible transfer: t_f = {t_f} is shorter than t_min = {t_min}")]
    Infeasible { t_f: f64, t_min: f64 },

    #[error("Markovian bath (t_c = 0) is not supported by {0}; use the Markovian path")]
    MarkovianBath(&'static str),

    #[error("frequency cutoff too small: tail estimate {tail:e} exceeds 1e-8 of total {total:e}")]
    CutoffTooSmall { tail: f64, total: f64 },

    #[error("time step {dt} is coarser than the allowed {limit}")]
    GridTooCoarse { dt: f64, limit: f64 },

    #[error("line {line}: {msg}")]
    Csv { line: u64, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
