// Copyright 2026 The xferopt Authors
// SPDX-License-Identifier: Apache-2.0

//! Monte-Carlo reference for the transfer fidelity.
//!
//! Qubit 1 is dephased by a classical Gaussian field b(t) entering as
//! b(t)σ_z⁽¹⁾. The two-qubit space splits into the odd sector
//! {|e₁g₂⟩, |g₁e₂⟩}, evolving under V σ_x + b σ_z, and the even sector
//! {|e₁e₂⟩, |g₁g₂⟩}, evolving under b σ_z in the RWA or under
//! ω₀σ_z + Vσ_x + bσ_z otherwise. Each trajectory is propagated exactly for
//! piecewise-constant V and b, and the transfer α|g⟩+β|e⟩ → α|g₁g₂⟩ - iβ|g₁e₂⟩
//! is scored against the six Pauli eigenstates of qubit 1. With
//! A = ⟨g₁g₂|U|g₁g₂⟩ (rotating frame) and B = i⟨g₁e₂|U|e₁g₂⟩ the six-state
//! average is (|A|² + |B|² + |A + B|²)/6.
//!
//! Each trajectory also yields the control variate (2/3)Z₁² + (1/2)Z₂² with
//! Z₁ = ∫cos²φ·b dt and Z₂ = ∫sin 2φ·b dt, whose expectation is the
//! second-order infidelity for the sampled noise and is known exactly.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bath::{BathModel, NoiseStream, MAX_STEP_OVER_TC};
use crate::error::{Error, Result};
use crate::fidelity::{bath_infidelity, W_COHERENCE, W_POPULATION};
use crate::leakage::{propagate_amplitudes, EvenState};
use crate::optimizer::with_workers;
use crate::pulse::Pulse;

/// Largest ω₀·dt accepted when the counter-rotating terms are kept.
pub const MAX_STEP_TIMES_OMEGA0: f64 = 0.01;
/// Trajectories per deterministic accumulation chunk.
const CHUNK: u64 = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub n_traj: u64,
    pub seed: u64,
    /// Integration step; `None` picks the largest admissible one.
    pub dt: Option<f64>,
    /// Drop the counter-rotating (|g₁g₂⟩ ↔ |e₁e₂⟩) coupling.
    pub rwa: bool,
    /// Keep the even sector and its coherence with the odd sector.
    pub include_even: bool,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            n_traj: 10_000,
            seed: 0,
            dt: None,
            rwa: true,
            include_even: true,
        }
    }
}

/// Monte-Carlo average fidelity with diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_traj: u64,
    /// Exact expectation of the control variate: the second-order
    /// infidelity of the sampled (discretized) noise.
    pub predicted_discrete: f64,
    /// Mean and standard error of (1 - F) - control variate.
    pub residual_mean: f64,
    pub residual_stderr: f64,
    /// Largest deviation of any propagated state norm from 1.
    pub max_norm_error: f64,
}

impl FidelityEstimate {
    pub fn infidelity(&self) -> f64 {
        1.0 - self.mean
    }

    /// Control-variate estimate of 1 - mean and its standard error.
    pub fn infidelity_cv(&self) -> (f64, f64) {
        (
            self.predicted_discrete + self.residual_mean,
            self.residual_stderr,
        )
    }
}

/// Step used by the oracle for a pulse: the pulse grid subdivided until it
/// satisfies every bound. Returns (substeps per segment, dt).
pub fn oracle_step(
    p: &Pulse,
    bath: &BathModel,
    omega0: f64,
    cfg: &OracleConfig,
) -> Result<(usize, f64)> {
    let h = p.dt();
    let mut limit = h;
    if !bath.is_markovian() {
        limit = limit.min(MAX_STEP_OVER_TC * bath.t_c());
    }
    if !cfg.rwa && omega0 > 0.0 {
        limit = limit.min(MAX_STEP_TIMES_OMEGA0 / omega0);
    }
    let dt = match cfg.dt {
        Some(dt) if !(dt.is_finite() && dt > 0.0) => {
            return Err(Error::InvalidParameter(format!(
                "oracle dt must be positive, got {dt}"
            )));
        }
        Some(dt) if dt > limit * (1.0 + 1e-12) => return Err(Error::GridTooCoarse { dt, limit }),
        Some(dt) => dt,
        None => limit,
    };
    let sub = ((h / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    Ok((sub, h / sub as f64))
}

/// Per-step data shared by all trajectories.
struct Plan {
    v: Vec<f64>,
    c1: Vec<f64>,
    c2: Vec<f64>,
    dt: f64,
    omega0: f64,
    t_f: f64,
    rwa: bool,
    include_even: bool,
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

impl Plan {
    fn new(p: &Pulse, sub: usize, dt: f64, omega0: f64, cfg: &OracleConfig) -> Self {
        let amps = p.amplitudes();
        let phases = p.phases();
        let steps = amps.len() * sub;
        let mut v = Vec::with_capacity(steps);
        let mut c1 = Vec::with_capacity(steps);
        let mut c2 = Vec::with_capacity(steps);
        for (k, &vk) in amps.iter().enumerate() {
            for j in 0..sub {
                let a = phases[k] + vk * dt * j as f64;
                let b = a + vk * dt;
                // Exact step integrals of cos²φ and sin 2φ for linear φ.
                let s = sinc(b - a);
                v.push(vk);
                c1.push(0.5 * dt * (1.0 + (a + b).cos() * s));
                c2.push(dt * (a + b).sin() * s);
            }
        }
        Self {
            v,
            c1,
            c2,
            dt,
            omega0,
            t_f: p.t_f(),
            rwa: cfg.rwa,
            include_even: cfg.include_even,
        }
    }

    /// Exact E[(2/3)Z₁² + (1/2)Z₂²] for a stationary sequence with variance
    /// σ² and lag-one correlation ρ.
    fn expected_control(&self, sigma: f64, rho: f64) -> f64 {
        let quad = |c: &[f64]| {
            let mut tail = 0.0;
            let mut acc = 0.0;
            for (k, &ck) in c.iter().enumerate() {
                if k > 0 {
                    tail = rho * (tail + c[k - 1]);
                }
                acc += ck * ck + 2.0 * ck * tail;
            }
            sigma * sigma * acc
        };
        W_POPULATION * quad(&self.c1) + W_COHERENCE * quad(&self.c2)
    }

    /// (1 - F, control variate, norm error) for one noise realization.
    fn trajectory(&self, noise: &[f64]) -> (f64, f64, f64) {
        let i = Complex64::i();
        // Odd sector in the basis (|e₁g₂⟩, |g₁e₂⟩), starting in |e₁g₂⟩.
        let (mut o0, mut o1) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
        let (mut z1, mut z2) = (0.0, 0.0);
        let mut theta = 0.0;
        for (k, &b) in noise.iter().enumerate() {
            let v = self.v[k];
            let big = (v * v + b * b).sqrt();
            let c = (big * self.dt).cos();
            let s = self.dt * sinc(big * self.dt);
            let n0 = (c - i * s * b) * o0 - i * s * v * o1;
            let n1 = -i * s * v * o0 + (c + i * s * b) * o1;
            o0 = n0;
            o1 = n1;
            z1 += self.c1[k] * b;
            z2 += self.c2[k] * b;
            theta += b * self.dt;
        }
        let amp_b = i * o1;
        let mut norm_err = (o0.norm_sqr() + o1.norm_sqr() - 1.0).abs();
        let amp_a = if !self.include_even {
            Complex64::new(1.0, 0.0)
        } else if self.rwa {
            // |g₁g₂⟩ has σ_z = -1, so it only picks up e^{+i∫b}.
            Complex64::from_polar(1.0, theta)
        } else {
            let mut st = EvenState::ground();
            for (k, &b) in noise.iter().enumerate() {
                st = propagate_amplitudes(st, &[self.v[k]], self.dt, self.omega0 + b);
            }
            norm_err = norm_err.max((st.norm_sqr() - 1.0).abs());
            // Remove the free evolution e^{+iω₀t} of |g₁g₂⟩.
            st.amp_gg * Complex64::from_polar(1.0, -self.omega0 * self.t_f)
        };
        let f = (amp_a.norm_sqr() + amp_b.norm_sqr() + (amp_a + amp_b).norm_sqr()) / 6.0;
        let cv = W_POPULATION * z1 * z1 + W_COHERENCE * z2 * z2;
        (1.0 - f, cv, norm_err)
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Sums {
    loss: f64,
    loss_sq: f64,
    resid: f64,
    resid_sq: f64,
    norm_err: f64,
}

/// Monte-Carlo average transfer fidelity of `p` under `bath`.
pub fn simulate_transfer(
    p: &Pulse,
    bath: &BathModel,
    omega0: f64,
    cfg: &OracleConfig,
) -> Result<FidelityEstimate> {
    if cfg.n_traj == 0 {
        return Err(Error::InvalidParameter("n_traj must be at least 1".into()));
    }
    if !(omega0.is_finite() && omega0 >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "omega0 must be nonnegative, got {omega0}"
        )));
    }
    let (sub, dt) = oracle_step(p, bath, omega0, cfg)?;
    let plan = Plan::new(p, sub, dt, omega0, cfg);
    let steps = plan.v.len();
    let probe = NoiseStream::new(bath, dt, cfg.seed, 0)?;
    let predicted_discrete = plan.expected_control(probe.sigma(), probe.rho());

    let chunks = cfg.n_traj.div_ceil(CHUNK);
    let partial: Vec<Result<Sums>> = with_workers(|| {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut sums = Sums::default();
                let mut noise = vec![0.0; steps];
                let end = ((c + 1) * CHUNK).min(cfg.n_traj);
                for traj in c * CHUNK..end {
                    NoiseStream::new(bath, dt, cfg.seed, traj)?.fill(&mut noise);
                    let (loss, cv, err) = plan.trajectory(&noise);
                    let r = loss - cv;
                    sums.loss += loss;
                    sums.loss_sq += loss * loss;
                    sums.resid += r;
                    sums.resid_sq += r * r;
                    sums.norm_err = sums.norm_err.max(err);
                }
                Ok(sums)
            })
            .collect()
    });
    let mut total = Sums::default();
    for s in partial {
        let s = s?;
        total.loss += s.loss;
        total.loss_sq += s.loss_sq;
        total.resid += s.resid;
        total.resid_sq += s.resid_sq;
        total.norm_err = total.norm_err.max(s.norm_err);
    }
    let n = cfg.n_traj as f64;
    let stderr = |sum: f64, sq: f64| {
        if cfg.n_traj < 2 {
            return 0.0;
        }
        let m = sum / n;
        ((sq / n - m * m).max(0.0) * n / (n - 1.0) / n).sqrt()
    };
    let loss = total.loss / n;
    Ok(FidelityEstimate {
        mean: (1.0 - loss).clamp(0.0, 1.0),
        stderr: stderr(total.loss, total.loss_sq),
        n_traj: cfg.n_traj,
        predicted_discrete,
        residual_mean: total.resid / n,
        residual_stderr: stderr(total.resid, total.resid_sq),
        max_norm_error: total.norm_err,
    })
}

/// Per-pulse comparison of Monte-Carlo and second-order infidelities.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeRatioReport {
    /// Second-order prediction from the fidelity module.
    pub predicted: Vec<f64>,
    pub estimates: Vec<FidelityEstimate>,
    /// (1 - mean) / predicted.
    pub ratios: Vec<f64>,
    /// Standard error of each ratio.
    pub ratio_stderr: Vec<f64>,
    /// (max - min) / mean of the ratios.
    pub spread: f64,
}

/// Runs [`simulate_transfer`] on each pulse and compares with the
/// second-order prediction; the spread isolates shape-dependent disagreement
/// from any overall constant.
pub fn shape_ratio_check(
    pulses: &[Pulse],
    bath: &BathModel,
    omega0: f64,
    cfg: &OracleConfig,
) -> Result<ShapeRatioReport> {
    if pulses.len() < 2 {
        return Err(Error::InvalidParameter(
            "shape check needs at least two pulses".into(),
        ));
    }
    let mut predicted = Vec::with_capacity(pulses.len());
    for p in pulses {
        let pred = bath_infidelity(p, bath);
        if !(pred > 0.0 && pred <= 0.05) {
            return Err(Error::InvalidParameter(format!(
                "shape check needs predicted infidelity in (0, 0.05], got {pred}"
            )));
        }
        predicted.push(pred);
    }
    let estimates = pulses
        .iter()
        .map(|p| simulate_transfer(p, bath, omega0, cfg))
        .collect::<Result<Vec<_>>>()?;
    let ratios: Vec<f64> = estimates
        .iter()
        .zip(&predicted)
        .map(|(e, p)| e.infidelity() / p)
        .collect();
    let ratio_stderr = estimates
        .iter()
        .zip(&predicted)
        .map(|(e, p)| e.stderr / p)
        .collect();
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let (lo, hi) = ratios
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
            (lo.min(r), hi.max(r))
        });
    Ok(ShapeRatioReport {
        predicted,
        estimates,
        ratios,
        ratio_stderr,
        spread: (hi - lo) / mean,
    })
}
