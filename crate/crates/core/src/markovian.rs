// Copyright 2026 The xferopt Authors
// SPDX-License-Identifier: Apache-2.0

//! The universal Markovian optimum.
//!
//! For white-noise dephasing the infidelity is γ∫L(φ)dt with
//! L(φ) = sin²(2φ)/2 + (2/3)cos⁴φ. Minimizing it at fixed energy ∫φ′² dt
//! gives a first integral φ′² ∝ L(φ); in dimensionless time x the profile is
//!
//! ```text
//! dφ_M/dx = sqrt(L(φ_M)),  φ_M(0) = 0,  φ_M → π/2 as x → ∞
//! ```
//!
//! Its energy e_M = ∫₀^∞ φ_M′² dx equals ∫₀^{π/2} √L dφ, a proper integral.
//! Rescaling φ(t) = φ_M(E t / e_M) spends exactly E and yields infidelity
//! γ e_M² / E.

use std::f64::consts::FRAC_PI_2;
use std::io::Write;
use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::pulse::{EnergyBudget, Pulse};
use crate::quadrature::GaussLegendre;

/// Output spacing of the sampled profile in x.
const SAMPLE_DX: f64 = 0.01;
/// Below this distance from π/2 the linearized tail is used.
const TAIL_SWITCH: f64 = 1e-6;
/// Sampling stops once π/2 - φ_M drops below this.
const TAIL_END: f64 = 1e-10;
/// Truncation threshold for [`optimal_markovian_pulse`].
const PULSE_TRUNCATION: f64 = 1e-8;

/// The Markovian cost density L(φ) = sin²(2φ)/2 + (2/3)cos⁴φ.
pub fn cost_density(phi: f64) -> f64 {
    let s = (2.0 * phi).sin();
    let c = phi.cos();
    0.5 * s * s + 2.0 / 3.0 * c * c * c * c
}

/// √L written in ε = π/2 - φ, which stays accurate as ε → 0:
/// L = 2 sin²ε cos²ε + (2/3) sin⁴ε = sin²ε (2 - (4/3) sin²ε).
fn speed_from_gap(eps: f64) -> f64 {
    let s = eps.sin();
    s.abs() * (2.0 - 4.0 / 3.0 * s * s).sqrt()
}

/// Sampled φ_M on a uniform x grid plus its energy e_M.
#[derive(Debug, Clone)]
pub struct MarkovianProfile {
    x_grid: Vec<f64>,
    phi: Vec<f64>,
    e_m: f64,
}

impl MarkovianProfile {
    pub fn x_grid(&self) -> &[f64] {
        &self.x_grid
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    /// φ_M′ at each sample.
    pub fn dphi(&self) -> Vec<f64> {
        self.phi
            .iter()
            .map(|&p| speed_from_gap(FRAC_PI_2 - p))
            .collect()
    }

    pub fn e_m(&self) -> f64 {
        self.e_m
    }

    /// Optimal infidelity coefficient e_M² (infidelity = γ e_M² / E).
    pub fn coefficient(&self) -> f64 {
        self.e_m * self.e_m
    }

    pub fn x_end(&self) -> f64 {
        *self.x_grid.last().unwrap()
    }

    /// φ_M(x) by cubic Hermite interpolation (exact slopes from the ODE);
    /// beyond the last sample the exponential tail is used.
    pub fn phase_at(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let n = self.x_grid.len();
        let last = self.x_end();
        if x >= last {
            let eps = FRAC_PI_2 - self.phi[n - 1];
            return FRAC_PI_2 - eps * (-(2f64.sqrt()) * (x - last)).exp();
        }
        let k = ((x / SAMPLE_DX) as usize).min(n - 2);
        let (x0, x1) = (self.x_grid[k], self.x_grid[k + 1]);
        let h = x1 - x0;
        let u = (x - x0) / h;
        let (p0, p1) = (self.phi[k], self.phi[k + 1]);
        let (d0, d1) = (
            speed_from_gap(FRAC_PI_2 - p0) * h,
            speed_from_gap(FRAC_PI_2 - p1) * h,
        );
        let u2 = u * u;
        let u3 = u2 * u;
        (2.0 * u3 - 3.0 * u2 + 1.0) * p0
            + (u3 - 2.0 * u2 + u) * d0
            + (-2.0 * u3 + 3.0 * u2) * p1
            + (u3 - u2) * d1
    }

    /// Smallest x with π/2 - φ_M(x) ≤ `gap`.
    pub fn x_at_gap(&self, gap: f64) -> f64 {
        let n = self.phi.len();
        let eps_last = FRAC_PI_2 - self.phi[n - 1];
        if gap < eps_last {
            return self.x_end() + (eps_last / gap).ln() / 2f64.sqrt();
        }
        let k = self.phi.partition_point(|&p| FRAC_PI_2 - p > gap);
        if k == 0 {
            return 0.0;
        }
        // Bisection inside the bracketing interval.
        let (mut lo, mut hi) = (self.x_grid[k - 1], self.x_grid[k]);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if FRAC_PI_2 - self.phase_at(mid) > gap {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    /// Writes `x,phi,dphi` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "x,phi,dphi")?;
        for ((x, p), d) in self.x_grid.iter().zip(&self.phi).zip(self.dphi()) {
            writeln!(out, "{x:.16e},{p:.16e},{d:.16e}")?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(file)
    }
}

/// e_M = ∫₀^{π/2} √L(φ) dφ. The integrand is analytic on the closed interval.
pub fn profile_energy() -> f64 {
    static E_M: OnceLock<f64> = OnceLock::new();
    *E_M.get_or_init(|| {
        GaussLegendre::new(20)
            .integrate_composite(0.0, FRAC_PI_2, 16, |phi| speed_from_gap(FRAC_PI_2 - phi))
    })
}

/// Integrates the profile ODE with an adaptive Dormand–Prince 5(4) scheme at
/// relative tolerance `tol`, sampling every 0.01 in x, and switches to the
/// exponential tail once π/2 - φ < 1e-6.
pub fn solve_markovian_profile(tol: f64) -> Result<MarkovianProfile> {
    if !(1e-12..=1e-4).contains(&tol) {
        return Err(Error::InvalidParameter(format!(
            "profile tolerance must lie in [1e-12, 1e-4], got {tol}"
        )));
    }
    // Integrate the gap ε = π/2 - φ: ε′ = -√L, with error measured relative to ε.
    let rhs = |eps: f64| -speed_from_gap(eps);
    let mut x_grid = vec![0.0];
    let mut phi = vec![0.0];
    let mut eps = FRAC_PI_2;
    let mut x = 0.0;
    let mut h: f64 = 1e-3;
    let mut k = 0usize;
    while eps > TAIL_SWITCH {
        let target = (k + 1) as f64 * SAMPLE_DX;
        while x < target - 1e-14 {
            let clamped = h > target - x;
            let step = if clamped { target - x } else { h };
            let (next, err) = dopri_step(&rhs, eps, step);
            let scale = tol * eps.abs().max(next.abs()) + 1e-300;
            let ratio = err / scale;
            let factor = if ratio == 0.0 {
                5.0
            } else {
                0.9 * ratio.powf(-0.2)
            };
            if ratio <= 1.0 {
                x += step;
                eps = next;
                if clamped {
                    continue;
                }
            }
            h = step * factor.clamp(0.2, 5.0);
            if h < 1e-14 {
                return Err(Error::InvalidParameter(
                    "profile step size collapsed".into(),
                ));
            }
        }
        x = target;
        k += 1;
        x_grid.push(x);
        phi.push(FRAC_PI_2 - eps);
    }
    // Linearized tail ε(x) = ε_s exp(-√2 (x - x_s)).
    let (x_s, eps_s) = (x, eps);
    while eps > TAIL_END {
        k += 1;
        let xk = k as f64 * SAMPLE_DX;
        eps = eps_s * (-(2f64.sqrt()) * (xk - x_s)).exp();
        x_grid.push(xk);
        phi.push(FRAC_PI_2 - eps);
    }
    Ok(MarkovianProfile {
        x_grid,
        phi,
        e_m: profile_energy(),
    })
}

/// Shared profile solved at the default tolerance.
pub fn default_profile() -> &'static MarkovianProfile {
    static PROFILE: OnceLock<MarkovianProfile> = OnceLock::new();
    PROFILE.get_or_init(|| solve_markovian_profile(1e-10).expect("default tolerance is valid"))
}

/// One Dormand–Prince 5(4) step of the autonomous scalar ODE y′ = f(y);
/// returns the fifth-order value and the embedded error estimate.
fn dopri_step(f: &impl Fn(f64) -> f64, y: f64, h: f64) -> (f64, f64) {
    let k1 = f(y);
    let k2 = f(y + h * (k1 / 5.0));
    let k3 = f(y + h * (3.0 / 40.0 * k1 + 9.0 / 40.0 * k2));
    let k4 = f(y + h * (44.0 / 45.0 * k1 - 56.0 / 15.0 * k2 + 32.0 / 9.0 * k3));
    let k5 = f(y + h
        * (19372.0 / 6561.0 * k1 - 25360.0 / 2187.0 * k2 + 64448.0 / 6561.0 * k3
            - 212.0 / 729.0 * k4));
    let k6 = f(y + h
        * (9017.0 / 3168.0 * k1 - 355.0 / 33.0 * k2 + 46732.0 / 5247.0 * k3 + 49.0 / 176.0 * k4
            - 5103.0 / 18656.0 * k5));
    let y5 = y + h
        * (35.0 / 384.0 * k1 + 500.0 / 1113.0 * k3 + 125.0 / 192.0 * k4 - 2187.0 / 6784.0 * k5
            + 11.0 / 84.0 * k6);
    let k7 = f(y5);
    let err = h
        * (71.0 / 57600.0 * k1 - 71.0 / 16695.0 * k3 + 71.0 / 1920.0 * k4
            - 17253.0 / 339200.0 * k5
            + 22.0 / 525.0 * k6
            - 1.0 / 40.0 * k7);
    (y5, err.abs())
}

/// φ(t) = φ_M(E t / e_M) on `segments` segments, truncated where
/// π/2 - φ < 1e-8 and pinned to π/2 at the end.
pub fn optimal_markovian_pulse(budget: EnergyBudget, segments: usize) -> Result<Pulse> {
    if segments < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 segments, got {segments}"
        )));
    }
    let profile = default_profile();
    let rate = budget.energy() / profile.e_m();
    let x_end = profile.x_at_gap(PULSE_TRUNCATION);
    let t_f = x_end / rate;
    let mut p = Pulse::from_fn(t_f, segments, |t| profile.phase_at(rate * t))?.into_phases();
    p[segments] = FRAC_PI_2;
    Pulse::new(p, t_f)
}

/// The Markovian profile stretched or compressed to end at `t_f`, with the
/// same truncation as [`optimal_markovian_pulse`]. Its energy is generally not E.
pub fn markovian_shape(t_f: f64, segments: usize) -> Result<Pulse> {
    let profile = default_profile();
    let x_end = profile.x_at_gap(PULSE_TRUNCATION);
    let mut p = Pulse::from_fn(t_f, segments, |t| profile.phase_at(x_end * t / t_f))?.into_phases();
    p[segments] = FRAC_PI_2;
    Pulse::new(p, t_f)
}

/// γ e_M² / E.
pub fn markovian_optimum_infidelity(gamma: f64, energy: f64) -> Result<f64> {
    if !(energy.is_finite() && energy > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "energy must be positive, got {energy}"
        )));
    }
    let e_m = profile_energy();
    Ok(gamma * e_m * e_m / energy)
}
