// Copyright 2026 The xferopt Authors
// SPDX-License-Identifier: Apache-2.0

//! Dephasing baths.
//!
//! The bath enters the transfer fidelity only through its two-time
//! correlation Φ(t) (equivalently the spectrum G(ω)). For the Lorentzian bath
//!
//! ```text
//! Φ(t) = C · (γ / t_c) · exp(-|t| / t_c)
//! G(ω) = (1/2π) ∫ Φ(t) e^{iωt} dt = (C γ / π) / (1 + ω² t_c²)
//! ```
//!
//! The normalization `C` ([`DEFAULT_CORR_NORM`] = 1/2) makes ∫Φ dt = γ, so the
//! Markovian limit t_c → 0 is white noise of strength γ and the fastest pulse
//! has infidelity γπ²/(8E). Set `C = 1` to use the unnormalized exponential.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const DEFAULT_CORR_NORM: f64 = 0.5;

/// Largest ratio dt / t_c accepted for Ornstein–Uhlenbeck sampling.
pub const MAX_STEP_OVER_TC: f64 = 0.1;

/// Dephasing rate γ and memory time t_c (0 = Markovian).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathModel {
    gamma: f64,
    t_c: f64,
    corr_norm: f64,
}

impl BathModel {
    pub fn new(gamma: f64, t_c: f64) -> Result<Self> {
        Self::with_corr_norm(gamma, t_c, DEFAULT_CORR_NORM)
    }

    pub fn markovian(gamma: f64) -> Result<Self> {
        Self::new(gamma, 0.0)
    }

    pub fn with_corr_norm(gamma: f64, t_c: f64, corr_norm: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be finite and nonnegative, got {gamma}"
            )));
        }
        if !(t_c.is_finite() && t_c >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "t_c must be finite and nonnegative, got {t_c}"
            )));
        }
        if !(corr_norm.is_finite() && corr_norm > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "corr_norm must be positive, got {corr_norm}"
            )));
        }
        Ok(Self {
            gamma,
            t_c,
            corr_norm,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn t_c(&self) -> f64 {
        self.t_c
    }

    pub fn corr_norm(&self) -> f64 {
        self.corr_norm
    }

    pub fn is_markovian(&self) -> bool {
        self.t_c == 0.0
    }

    /// Same bath with γ replaced.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::with_corr_norm(gamma, self.t_c, self.corr_norm)
    }

    /// Total weight ∫Φ dt = 2Cγ; the white-noise strength in the Markovian limit.
    pub fn white_noise_strength(&self) -> f64 {
        2.0 * self.corr_norm * self.gamma
    }

    /// Stationary noise variance Φ(0) = Cγ/t_c.
    pub fn variance(&self) -> Result<f64> {
        if self.is_markovian() {
            return Err(Error::MarkovianBath("variance"));
        }
        Ok(self.corr_norm * self.gamma / self.t_c)
    }

    /// Φ(dt).
    pub fn correlation(&self, dt: f64) -> Result<f64> {
        if self.is_markovian() {
            return Err(Error::MarkovianBath("correlation"));
        }
        Ok(self.corr_norm * self.gamma / self.t_c * (-dt.abs() / self.t_c).exp())
    }

    /// G(ω); flat Cγ/π for the Markovian bath.
    pub fn spectrum(&self, omega: f64) -> f64 {
        let wt = omega * self.t_c;
        self.corr_norm * self.gamma / PI / (1.0 + wt * wt)
    }

    /// One stationary Ornstein–Uhlenbeck trajectory b_0..b_{n-1} at spacing `dt`,
    /// reproducible from `(seed, trajectory)`.
    pub fn sample_noise_trajectory(
        &self,
        n_steps: usize,
        dt: f64,
        seed: u64,
        trajectory: u64,
    ) -> Result<Vec<f64>> {
        if self.is_markovian() {
            return Err(Error::MarkovianBath("sample_noise_trajectory"));
        }
        let mut out = vec![0.0; n_steps];
        NoiseStream::new(self, dt, seed, trajectory)?.fill(&mut out);
        Ok(out)
    }
}

/// Per-trajectory noise source used by the Monte-Carlo oracle.
///
/// For t_c > 0 it produces the exact discretization of a stationary OU process
/// (b_{k+1} = ρ b_k + σ√(1-ρ²) ξ_k, ρ = e^{-dt/t_c}); for the Markovian bath it
/// produces independent step values with variance 2Cγ/dt, so the phase
/// increment b_k·dt has variance 2Cγ·dt.
///
/// Normals come from a ChaCha8 keystream with the stream id set to the
/// trajectory index, so a trajectory's samples depend only on (seed, index).
#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
    rho: f64,
    sigma: f64,
    innovation: f64,
}

impl NoiseStream {
    pub fn new(bath: &BathModel, dt: f64, seed: u64, trajectory: u64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "time step must be positive, got {dt}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trajectory);
        let (rho, sigma) = if bath.is_markovian() {
            (0.0, (bath.white_noise_strength() / dt).sqrt())
        } else {
            let limit = MAX_STEP_OVER_TC * bath.t_c;
            if dt > limit * (1.0 + 1e-12) {
                return Err(Error::GridTooCoarse { dt, limit });
            }
            ((-dt / bath.t_c).exp(), bath.variance()?.sqrt())
        };
        Ok(Self {
            rng,
            rho,
            sigma,
            innovation: sigma * (1.0 - rho * rho).sqrt(),
        })
    }

    /// Correlation between consecutive samples.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Stationary standard deviation of each sample.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn fill(&mut self, out: &mut [f64]) {
        let mut b = 0.0;
        for (k, slot) in out.iter_mut().enumerate() {
            let xi: f64 = StandardNormal.sample(&mut self.rng);
            b = if k == 0 {
                self.sigma * xi
            } else {
                self.rho * b + self.innovation * xi
            };
            *slot = b;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::GaussLegendre;

    #[test]
    fn validation() {
        assert!(BathModel::new(-1.0, 1.0).is_err());
        assert!(BathModel::new(1.0, -1.0).is_err());
        assert!(BathModel::with_corr_norm(1.0, 1.0, 0.0).is_err());
        assert!(BathModel::new(0.0, 0.0).is_ok());
    }

    #[test]
    fn correlation_examples() {
        let b = BathModel::new(0.3, 2.0).unwrap();
        assert_eq!(b.correlation(0.0).unwrap(), 0.5 * 0.3 / 2.0);
        assert_eq!(b.correlation(0.7).unwrap(), b.correlation(-0.7).unwrap());
        assert!(BathModel::markovian(1.0).unwrap().correlation(0.0).is_err());
        // ∫Φ over ℝ = 2Cγ = γ.
        let gl = GaussLegendre::new(12);
        let half = gl.integrate_composite(0.0, 80.0, 200, |t| b.correlation(t).unwrap());
        assert!((2.0 * half - 0.3).abs() < 1e-12);
    }

    #[test]
    fn spectrum_examples() {
        let m = BathModel::markovian(0.8).unwrap();
        assert!((m.spectrum(3.0) - 0.8 / (2.0 * PI)).abs() < 1e-16);
        let b = BathModel::new(0.8, 0.5).unwrap();
        assert_eq!(b.spectrum(1.3), b.spectrum(-1.3));
        assert!((b.spectrum(1.0 / 0.5) - 0.5 * b.spectrum(0.0)).abs() < 1e-16);
    }

    #[test]
    fn spectrum_matches_numerical_fourier_transform() {
        let gl = GaussLegendre::new(12);
        for t_c in [0.1, 1.0, 7.0] {
            let b = BathModel::new(1.1, t_c).unwrap();
            for k in -40..=40 {
                let w = k as f64 * 0.5 / t_c;
                // Φ is even: G = (1/π) ∫_0^∞ Φ(t) cos(ωt) dt.
                let ft = gl.integrate_composite(0.0, 45.0 * t_c, 900, |t| {
                    b.correlation(t).unwrap() * (w * t).cos()
                }) / PI;
                let g = b.spectrum(w);
                assert!(((ft - g) / g).abs() < 1e-6, "t_c={t_c} w={w} ft={ft} g={g}");
                assert!(g >= 0.0);
            }
        }
    }

    #[test]
    fn short_memory_approaches_flat_spectrum() {
        let b = BathModel::new(1.0, 1e-4).unwrap();
        for w in [0.0, 0.5, 1.0, 5.0] {
            assert!((b.spectrum(w) / (1.0 / (2.0 * PI)) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn trajectory_is_deterministic_and_checked() {
        let b = BathModel::new(0.5, 1.0).unwrap();
        let a = b.sample_noise_trajectory(200, 0.05, 7, 3).unwrap();
        let c = b.sample_noise_trajectory(200, 0.05, 7, 3).unwrap();
        assert_eq!(a, c);
        let d = b.sample_noise_trajectory(200, 0.05, 7, 4).unwrap();
        assert_ne!(a, d);
        assert!(matches!(
            b.sample_noise_trajectory(10, 0.5, 7, 0),
            Err(Error::GridTooCoarse { .. })
        ));
        assert!(BathModel::markovian(1.0)
            .unwrap()
            .sample_noise_trajectory(10, 0.01, 0, 0)
            .is_err());
    }

    #[test]
    fn ensemble_statistics_match_correlation() {
        let b = BathModel::new(0.4, 2.0).unwrap();
        let dt = 0.2;
        let n_traj = 100_000u64;
        let steps = 6;
        let (mut s0, mut s00, mut s01, mut s01sq, mut s55) = (0.0, 0.0, 0.0, 0.0, 0.0);
        let mut buf = vec![0.0; steps];
        for j in 0..n_traj {
            NoiseStream::new(&b, dt, 11, j).unwrap().fill(&mut buf);
            s0 += buf[0];
            s00 += buf[0] * buf[0];
            let prod = buf[4] * buf[5];
            s01 += prod;
            s01sq += prod * prod;
            s55 += buf[5] * buf[5];
        }
        let n = n_traj as f64;
        let var = b.variance().unwrap();
        // Var of b² for a Gaussian is 2σ⁴.
        let se_var = (2.0 * var * var / n).sqrt();
        assert!((s00 / n - var).abs() < 3.0 * se_var, "var {}", s00 / n);
        assert!(
            (s55 / n - var).abs() < 3.0 * se_var,
            "var at step 5 {}",
            s55 / n
        );
        assert!((s0 / n).abs() < 3.0 * (var / n).sqrt());
        let lag1 = s01 / n;
        let se_lag = ((s01sq / n - lag1 * lag1) / n).sqrt();
        let want = b.correlation(dt).unwrap();
        assert!(
            (lag1 - want).abs() < 3.0 * se_lag,
            "lag1 {lag1} want {want}"
        );
    }
}
