// Copyright 2026 The xferopt Authors
// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config {}: {msg}", path.display())]
    Config { path: PathBuf, msg: String },

    #[error("missing {flag} (or `{key}` in the config file)")]
    Missing {
        flag: &'static str,
        key: &'static str,
    },

    #[error("{0}")]
    Invalid(String),

    #[error("{}: {source}", path.display())]
    Path {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}: {source}", path.display())]
    PulseFile {
        path: PathBuf,
        #[source]
        source: xferopt::Error,
    },

    #[error(transparent)]
    Core(#[from] xferopt::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;
