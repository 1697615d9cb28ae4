// Copyright 2026 The xferopt Authors
// SPDX-License-Identifier: Apache-2.0

//! Pulse design for quantum state transfer from a dephasing ("noisy") qubit
//! to a quiet storage qubit under an energy-constrained coupling.
//!
//! The crate is organized bottom-up:
//!
//! - [`pulse`]: phase profiles φ(t) on a uniform grid, energy and amplitude.
//! - [`bath`]: Lorentzian / flat dephasing baths and Ornstein–Uhlenbeck noise.
//! - [`fidelity`]: second-order transfer infidelity in the frequency and time
//!   domains, the Markovian closed form, and analytic gradients.
//! - [`markovian`]: the universal Markovian optimal profile and its energy e_M.
//! - [`leakage`]: even-parity (|gg⟩, |ee⟩) dynamics outside the RWA.
//! - [`optimizer`]: energy-constrained minimization and final-time sweeps.
//! - [`oracle`]: Monte-Carlo simulation of the two-qubit model with classical
//!   Gaussian noise, used to validate the second-order formulas end to end.

pub mod bath;
mod error;
pub mod fidelity;
mod lbfgs;
pub mod leakage;
pub mod markovian;
pub mod optimizer;
pub mod oracle;
pub mod pulse;
pub mod quadrature;

pub use bath::{BathModel, DEFAULT_CORR_NORM};
pub use error::{Error, Result};
pub use fidelity::InfidelityBreakdown;
pub use leakage::EvenState;
pub use markovian::MarkovianProfile;
pub use optimizer::{
    EnergyMode, OptimizationProblem, OptimizationResult, StartKind, SweepOptions, SweepRecord,
};
pub use oracle::{FidelityEstimate, OracleConfig};
pub use pulse::{EnergyBudget, Pulse};
