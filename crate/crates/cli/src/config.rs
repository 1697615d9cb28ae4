// Copyright 2026 The xferopt Authors
// SPDX-License-Identifier: Apache-2.0

//! Run configuration: a flat JSON object with dotted keys, overridden by
//! command-line flags.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Deserialize;
use xferopt::{BathModel, EnergyBudget, EnergyMode, StartKind, DEFAULT_CORR_NORM};

use crate::error::{CliError, Result};

/// Optimizer start named on the command line or in a config file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartArg {
    /// Fastest ramp, then hold at π/2.
    Fastest,
    /// Markovian optimal profile stretched to t_f.
    Markovian,
    /// Rise above π/2 and relax back.
    Overshoot,
}

impl From<StartArg> for StartKind {
    fn from(s: StartArg) -> Self {
        match s {
            StartArg::Fastest => StartKind::FastestThenHold,
            StartArg::Markovian => StartKind::Markovian,
            StartArg::Overshoot => StartKind::Overshoot,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnergyModeArg {
    /// Spend exactly the budget.
    Equal,
    /// Spend at most the budget.
    AtMost,
}

impl From<EnergyModeArg> for EnergyMode {
    fn from(m: EnergyModeArg) -> Self {
        match m {
            EnergyModeArg::Equal => EnergyMode::Equal,
            EnergyModeArg::AtMost => EnergyMode::AtMost,
        }
    }
}

/// Every configurable value; `None` means "not given".
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    #[serde(rename = "bath.gamma")]
    pub gamma: Option<f64>,
    #[serde(rename = "bath.t_c")]
    pub t_c: Option<f64>,
    #[serde(rename = "bath.corr_norm")]
    pub corr_norm: Option<f64>,
    #[serde(rename = "control.energy")]
    pub energy: Option<f64>,
    #[serde(rename = "control.t_f")]
    pub t_f: Option<f64>,
    #[serde(rename = "control.grid_n")]
    pub grid_n: Option<usize>,
    #[serde(rename = "control.pulse")]
    pub pulse: Option<PathBuf>,
    #[serde(rename = "system.omega0")]
    pub omega0: Option<f64>,
    #[serde(rename = "optimizer.leak_weight")]
    pub leak_weight: Option<f64>,
    #[serde(rename = "optimizer.starts")]
    pub starts: Option<Vec<StartArg>>,
    #[serde(rename = "optimizer.energy_mode")]
    pub energy_mode: Option<EnergyModeArg>,
    #[serde(rename = "optimizer.max_iterations")]
    pub max_iterations: Option<usize>,
    #[serde(rename = "optimizer.tolerance")]
    pub tolerance: Option<f64>,
    #[serde(rename = "optimizer.t_f_list")]
    pub t_f_list: Option<Vec<f64>>,
    #[serde(rename = "markovian.tol")]
    pub markovian_tol: Option<f64>,
    #[serde(rename = "leakage.corrector_time")]
    pub corrector_time: Option<f64>,
    #[serde(rename = "oracle.n_traj")]
    pub n_traj: Option<u64>,
    #[serde(rename = "oracle.seed")]
    pub seed: Option<u64>,
    #[serde(rename = "oracle.dt")]
    pub dt: Option<f64>,
    #[serde(rename = "oracle.rwa")]
    pub rwa: Option<bool>,
    #[serde(rename = "out.dir")]
    pub out_dir: Option<PathBuf>,
}

macro_rules! overlay_fields {
    ($base:expr, $top:expr, $($f:ident),*) => {
        Settings { $($f: $top.$f.or($base.$f)),* }
    };
}

impl Settings {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config {
            path: path.to_owned(),
            msg: e.to_string(),
        })?;
        Self::parse(&text).map_err(|msg| CliError::Config {
            path: path.to_owned(),
            msg,
        })
    }

    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    /// Values from `top` win over values from `self`.
    pub fn overlay(self, top: Settings) -> Settings {
        overlay_fields!(
            self,
            top,
            gamma,
            t_c,
            corr_norm,
            energy,
            t_f,
            grid_n,
            pulse,
            omega0,
            leak_weight,
            starts,
            energy_mode,
            max_iterations,
            tolerance,
            t_f_list,
            markovian_tol,
            corrector_time,
            n_traj,
            seed,
            dt,
            rwa,
            out_dir
        )
    }

    pub fn bath(&self) -> Result<BathModel> {
        let gamma = require(self.gamma, "--gamma", "bath.gamma")?;
        let t_c = require(self.t_c, "--t-c", "bath.t_c")?;
        Ok(BathModel::with_corr_norm(
            gamma,
            t_c,
            self.corr_norm.unwrap_or(DEFAULT_CORR_NORM),
        )?)
    }

    pub fn budget(&self) -> Result<EnergyBudget> {
        Ok(EnergyBudget::new(require(
            self.energy,
            "--energy",
            "control.energy",
        )?)?)
    }

    pub fn omega0(&self) -> Result<f64> {
        let w = self.omega0.unwrap_or(0.0);
        if !(w.is_finite() && w >= 0.0) {
            return Err(CliError::Invalid(format!(
                "omega0 must be finite and non-negative, got {w}"
            )));
        }
        Ok(w)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("."))
    }
}

pub fn require<T>(value: Option<T>, flag: &'static str, key: &'static str) -> Result<T> {
    value.ok_or(CliError::Missing { flag, key })
}
