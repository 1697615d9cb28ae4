// Copyright 2026 The xferopt Authors
// SPDX-License-Identifier: Apache-2.0

//! Even-parity dynamics beyond the rotating-wave approximation.
//!
//! The counter-rotating part of the exchange coupling drives the pair
//! {|g₁g₂⟩, |e₁e₂⟩} under
//!
//! ```text
//! H_E = ω₀ σ_z + V(t) σ_x,     σ_z|ee⟩ = +|ee⟩,  σ_z|gg⟩ = -|gg⟩
//! ```
//!
//! so the two levels are split by 2ω₀. Because V is constant on each pulse
//! segment, every segment is an exact Rabi rotation
//! U = cos(Ωh) - i sin(Ωh)/Ω · H with Ω = √(ω₀² + V²).

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pulse::Pulse;

/// Default corrector constant: E_corr ≈ κ |ψ_ee|² / T.
///
/// A resonant drive A·sin(2ω₀t + θ) rotates the even pair at rate A/2, so
/// undoing an amplitude ψ in time T needs A = 2 asin|ψ| / T and costs
/// ∫V² = A²T/2 ≈ 2|ψ|²/T. [`calibrate_corrector`] reproduces this numerically.
pub const CORRECTOR_KAPPA: f64 = 2.0;

/// Amplitudes of |g₁g₂⟩ and |e₁e₂⟩ in the lab frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvenState {
    pub amp_gg: Complex64,
    pub amp_ee: Complex64,
}

impl EvenState {
    /// Both qubits in the ground state.
    pub fn ground() -> Self {
        Self {
            amp_gg: Complex64::new(1.0, 0.0),
            amp_ee: Complex64::new(0.0, 0.0),
        }
    }

    /// A normalized state with the given doubly excited amplitude.
    pub fn seeded(amp_ee: Complex64) -> Result<Self> {
        let p = amp_ee.norm_sqr();
        if p > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "|amp_ee|² must not exceed 1, got {p}"
            )));
        }
        Ok(Self {
            amp_gg: Complex64::new((1.0 - p).sqrt(), 0.0),
            amp_ee,
        })
    }

    /// Population of |e₁e₂⟩.
    pub fn leakage(&self) -> f64 {
        self.amp_ee.norm_sqr()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp_gg.norm_sqr() + self.amp_ee.norm_sqr()
    }
}

/// sin(x)/x.
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// (cos x - sin x / x) / x², finite at 0.
fn sinc_slope(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        let x2 = x * x;
        -1.0 / 3.0 + x2 / 30.0 - x2 * x2 / 840.0
    } else {
        (x.cos() - x.sin() / x) / (x * x)
    }
}

/// Exact propagator of one constant-V segment of length h, stored as
/// (c, s) with U = c·I - i·s·(ω₀σ_z + Vσ_x), s = sin(Ωh)/Ω.
#[derive(Debug, Clone, Copy)]
struct Segment {
    c: f64,
    s: f64,
    omega0: f64,
    v: f64,
}

impl Segment {
    fn new(omega0: f64, v: f64, h: f64) -> Self {
        let big = (omega0 * omega0 + v * v).sqrt();
        Self {
            c: (big * h).cos(),
            s: h * sinc(big * h),
            omega0,
            v,
        }
    }

    fn apply(&self, st: EvenState) -> EvenState {
        let i = Complex64::i();
        let (ee, gg) = (st.amp_ee, st.amp_gg);
        EvenState {
            amp_ee: (self.c - i * self.s * self.omega0) * ee - i * self.s * self.v * gg,
            amp_gg: -i * self.s * self.v * ee + (self.c + i * self.s * self.omega0) * gg,
        }
    }

    /// U† applied to a state.
    fn apply_adjoint(&self, st: EvenState) -> EvenState {
        let i = Complex64::i();
        let (ee, gg) = (st.amp_ee, st.amp_gg);
        EvenState {
            amp_ee: (self.c + i * self.s * self.omega0) * ee + i * self.s * self.v * gg,
            amp_gg: i * self.s * self.v * ee + (self.c - i * self.s * self.omega0) * gg,
        }
    }

    /// (⟨ee|, ⟨gg|) rows of ∂U/∂V applied to `st`.
    fn dv_apply(&self, st: EvenState, h: f64) -> (Complex64, Complex64) {
        let i = Complex64::i();
        let x = (self.omega0 * self.omega0 + self.v * self.v).sqrt() * h;
        let dc = -h * self.v * self.s;
        let ds = self.v * h * h * h * sinc_slope(x);
        // ∂U/∂V = dc·I - i·ds·H - i·s·σ_x
        let off = -i * (ds * self.v + self.s);
        (
            (dc - i * ds * self.omega0) * st.amp_ee + off * st.amp_gg,
            off * st.amp_ee + (dc + i * ds * self.omega0) * st.amp_gg,
        )
    }
}

/// Propagates `state` through constant amplitudes `v` of width `h`.
pub fn propagate_amplitudes(state: EvenState, v: &[f64], h: f64, omega0: f64) -> EvenState {
    v.iter()
        .fold(state, |st, &vk| Segment::new(omega0, vk, h).apply(st))
}

/// Exact even-sector state at t_f starting from |g₁g₂⟩.
pub fn propagate_even(p: &Pulse, omega0: f64) -> EvenState {
    propagate_even_from(EvenState::ground(), p, omega0)
}

/// Exact even-sector state at t_f starting from `state` at t = 0.
pub fn propagate_even_from(state: EvenState, p: &Pulse, omega0: f64) -> EvenState {
    propagate_amplitudes(state, &p.amplitudes(), p.dt(), omega0)
}

/// States at every grid node, starting from |g₁g₂⟩.
pub fn even_trajectory(p: &Pulse, omega0: f64) -> Vec<EvenState> {
    let h = p.dt();
    let mut out = Vec::with_capacity(p.segments() + 1);
    let mut st = EvenState::ground();
    out.push(st);
    for v in p.amplitudes() {
        st = Segment::new(omega0, v, h).apply(st);
        out.push(st);
    }
    out
}

/// Writes `t,re_gg,im_gg,re_ee,im_ee,p_ee` rows for [`even_trajectory`].
pub fn write_trajectory_csv<W: Write>(p: &Pulse, omega0: f64, mut out: W) -> Result<()> {
    writeln!(out, "t,re_gg,im_gg,re_ee,im_ee,p_ee")?;
    for (k, st) in even_trajectory(p, omega0).iter().enumerate() {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            p.time(k),
            st.amp_gg.re,
            st.amp_gg.im,
            st.amp_ee.re,
            st.amp_ee.im,
            st.leakage()
        )?;
    }
    Ok(())
}

pub fn save_trajectory_csv(p: &Pulse, omega0: f64, path: impl AsRef<Path>) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_trajectory_csv(p, omega0, file)
}

/// |amp_ee(t_f)|² and its gradient with respect to each segment amplitude,
/// by one forward and one backward sweep.
pub fn leakage_and_gradient(v: &[f64], h: f64, omega0: f64) -> (f64, Vec<f64>) {
    let segs: Vec<Segment> = v.iter().map(|&vk| Segment::new(omega0, vk, h)).collect();
    let mut forward = Vec::with_capacity(segs.len() + 1);
    let mut st = EvenState::ground();
    forward.push(st);
    for s in &segs {
        st = s.apply(st);
        forward.push(st);
    }
    let a = st.amp_ee;
    // Costate χ_k = (U_N ⋯ U_{k+1})† |ee⟩, so ⟨ee|U_N⋯U_1|·⟩ splits at segment k.
    let mut chi = EvenState {
        amp_gg: Complex64::new(0.0, 0.0),
        amp_ee: Complex64::new(1.0, 0.0),
    };
    let mut grad = vec![0.0; segs.len()];
    for k in (0..segs.len()).rev() {
        let st_k = forward[k];
        let (d_ee, d_gg) = segs[k].dv_apply(st_k, h);
        let amp = chi.amp_ee.conj() * d_ee + chi.amp_gg.conj() * d_gg;
        grad[k] = 2.0 * (a.conj() * amp).re;
        chi = segs[k].apply_adjoint(chi);
    }
    (a.norm_sqr(), grad)
}

/// First-order amplitude -i∫₀^{t_f} V(τ) e^{i2ω₀τ} dτ (interaction picture
/// of the 2ω₀ splitting), integrated exactly per segment.
pub fn perturbative_leakage_amplitude(p: &Pulse, omega0: f64) -> Complex64 {
    let h = p.dt();
    let i = Complex64::i();
    // ∫_{t_k}^{t_k+h} e^{i2ω₀τ} dτ = e^{i2ω₀t_k} · h e^{iω₀h} sinc(ω₀h).
    let panel = Complex64::from_polar(h * sinc(omega0 * h), omega0 * h);
    let sum: Complex64 = p
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(k, &v)| v * Complex64::from_polar(1.0, 2.0 * omega0 * p.time(k)))
        .sum();
    -i * panel * sum
}

/// κ|ψ_ee|²/T with the default κ.
pub fn corrector_energy_estimate(psi_ee: f64, t: f64) -> Result<f64> {
    corrector_energy_estimate_with(psi_ee, t, CORRECTOR_KAPPA)
}

pub fn corrector_energy_estimate_with(psi_ee: f64, t: f64, kappa: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&psi_ee) {
        return Err(Error::InvalidParameter(format!(
            "psi_ee must lie in [0, 1), got {psi_ee}"
        )));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "available time must be positive, got {t}"
        )));
    }
    Ok(kappa * psi_ee * psi_ee / t)
}

/// A drive A·sin(2ω₀t + θ) on [0, T] that returns a seeded state to |g₁g₂⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrectorSolution {
    pub amplitude: f64,
    pub phase: f64,
    /// ∫V² over the window.
    pub energy: f64,
    /// |amp_ee(T)| after the correction.
    pub residual: f64,
}

/// Samples per 2ω₀ period used for corrector drives.
const CORRECTOR_SAMPLES_PER_PERIOD: usize = 64;

fn corrector_drive(amplitude: f64, phase: f64, omega0: f64, t: f64) -> (Vec<f64>, f64) {
    let periods = omega0 * t / PI;
    let n = ((periods * CORRECTOR_SAMPLES_PER_PERIOD as f64).ceil() as usize).max(16);
    let h = t / n as f64;
    let v = (0..n)
        .map(|k| {
            // Cell average of the sinusoid keeps the drive exact in the mean.
            let (a, b) = (k as f64 * h, (k + 1) as f64 * h);
            let w = 2.0 * omega0;
            amplitude * ((w * a + phase).cos() - (w * b + phase).cos()) / (w * h)
        })
        .collect();
    (v, h)
}

/// Smallest-amplitude sinusoidal corrector at 2ω₀ that removes the |e₁e₂⟩
/// amplitude of `state` within time `t`, found by 2-D Newton on (A, θ).
pub fn minimal_sinusoidal_corrector(
    state: EvenState,
    omega0: f64,
    t: f64,
) -> Result<CorrectorSolution> {
    if !(omega0 > 0.0 && t > 0.0) {
        return Err(Error::InvalidParameter(
            "corrector needs ω₀ > 0 and T > 0".into(),
        ));
    }
    let psi = state.amp_ee.norm();
    if psi == 0.0 {
        return Ok(CorrectorSolution {
            amplitude: 0.0,
            phase: 0.0,
            energy: 0.0,
            residual: 0.0,
        });
    }
    let residual = |a: f64, th: f64| {
        let (v, h) = corrector_drive(a, th, omega0, t);
        propagate_amplitudes(state, &v, h, omega0).amp_ee
    };
    let a0 = 2.0 * psi.asin() / t;
    let mut best: Option<CorrectorSolution> = None;
    for start in 0..4 {
        let (mut a, mut th) = (a0, start as f64 * PI / 2.0);
        let mut r = residual(a, th);
        for _ in 0..50 {
            if r.norm() < 1e-13 {
                break;
            }
            let (da, dth) = (1e-7 * a0, 1e-7);
            let ja = (residual(a + da, th) - residual(a - da, th)) / (2.0 * da);
            let jt = (residual(a, th + dth) - residual(a, th - dth)) / (2.0 * dth);
            let det = ja.re * jt.im - ja.im * jt.re;
            if det.abs() < 1e-300 {
                break;
            }
            let step_a = (r.re * jt.im - r.im * jt.re) / det;
            let step_t = (ja.re * r.im - ja.im * r.re) / det;
            a -= step_a;
            th -= step_t;
            r = residual(a, th);
        }
        if r.norm() < 1e-9 {
            let (v, h) = corrector_drive(a, th, omega0, t);
            let cand = CorrectorSolution {
                amplitude: a.abs(),
                phase: if a < 0.0 { th + PI } else { th }.rem_euclid(2.0 * PI),
                energy: v.iter().map(|x| x * x).sum::<f64>() * h,
                residual: r.norm(),
            };
            if best.is_none_or(|b| cand.amplitude < b.amplitude) {
                best = Some(cand);
            }
        }
    }
    best.ok_or_else(|| Error::InvalidParameter("corrector search did not converge".into()))
}

/// Least-squares fit of E_corr(T) = κ|ψ|² T^{-slope}.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectorFit {
    /// Mean of E·T/|ψ|² over the study.
    pub kappa: f64,
    /// Negative log–log slope of energy against T.
    pub slope: f64,
    /// Largest relative deviation of E from κ|ψ|²/T.
    pub max_residual: f64,
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
}

/// Runs [`minimal_sinusoidal_corrector`] for each available time and fits
/// the energies.
pub fn calibrate_corrector(state: EvenState, omega0: f64, times: &[f64]) -> Result<CorrectorFit> {
    if times.len() < 2 {
        return Err(Error::InvalidParameter(
            "need at least two corrector times".into(),
        ));
    }
    let psi2 = state.leakage();
    let energies = times
        .iter()
        .map(|&t| minimal_sinusoidal_corrector(state, omega0, t).map(|c| c.energy))
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = energies.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = -sxy / sxx;
    let kappa = times
        .iter()
        .zip(&energies)
        .map(|(t, e)| e * t / psi2)
        .sum::<f64>()
        / n;
    let max_residual = times
        .iter()
        .zip(&energies)
        .map(|(t, e)| (e / (kappa * psi2 / t) - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(CorrectorFit {
        kappa,
        slope,
        max_residual,
        times: times.to_vec(),
        energies,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::{fastest_pulse, EnergyBudget};
    use proptest::prelude::*;

    fn fastest(t_min: f64, n: usize) -> Pulse {
        fastest_pulse(EnergyBudget::from_t_min(t_min).unwrap(), n).unwrap()
    }

    /// Off-resonant Rabi population for constant V over time t.
    fn rabi(v: f64, omega0: f64, t: f64) -> f64 {
        let w2 = v * v + omega0 * omega0;
        v * v / w2 * (w2.sqrt() * t).sin().powi(2)
    }

    #[test]
    fn no_drive_no_leakage() {
        let p = Pulse::new(vec![0.0; 9], 2.0).unwrap();
        let st = propagate_even(&p, 3.0);
        assert_eq!(st.amp_ee, Complex64::new(0.0, 0.0));
        assert!((st.amp_gg.norm() - 1.0).abs() < 1e-15);
        assert_eq!(
            perturbative_leakage_amplitude(&p, 3.0),
            Complex64::new(0.0, 0.0)
        );
    }

    #[test]
    fn fastest_pulse_leakage_matches_rabi_formula() {
        for n in [1 << 3, 512] {
            let t_min = 1.7;
            let omega0 = PI / t_min;
            let p = fastest(t_min, n);
            let got = propagate_even(&p, omega0).leakage();
            let want = rabi(PI / (2.0 * t_min), omega0, t_min);
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
            assert!((got - 0.026).abs() < 0.002);
        }
    }

    #[test]
    fn segment_splitting_is_exact() {
        let phases: Vec<f64> = (0..=20)
            .map(|k| (k as f64 * 0.37).sin() + 0.1 * k as f64)
            .collect();
        let mut phases = phases;
        phases[0] = 0.0;
        let p = Pulse::new(phases, 3.0).unwrap();
        let fine = p.resample(3.0, 40).unwrap();
        let a = propagate_even(&p, 2.2);
        let b = propagate_even(&fine, 2.2);
        assert!((a.amp_ee - b.amp_ee).norm() < 1e-12);
        assert!((a.amp_gg - b.amp_gg).norm() < 1e-12);
    }

    #[test]
    fn perturbative_matches_exact_for_weak_drive() {
        let omega0 = 1.0;
        let t_f = 10.0;
        let v = 0.05;
        let p = Pulse::from_fn(t_f, 200, |t| v * t).unwrap();
        let exact = propagate_even(&p, omega0);
        assert!(exact.leakage() < 0.01);
        let pert = perturbative_leakage_amplitude(&p, omega0);
        let rel = (pert.norm() - exact.amp_ee.norm()).abs() / exact.amp_ee.norm();
        assert!(rel < 0.1, "rel {rel}");
        // Lab-frame amplitude is e^{-iω₀t_f} times the interaction-picture one.
        let lab = pert * Complex64::from_polar(1.0, -omega0 * t_f);
        assert!((lab - exact.amp_ee).norm() / exact.amp_ee.norm() < 0.1);
    }

    #[test]
    fn perturbative_vanishes_over_whole_periods() {
        let omega0 = 2.0;
        let t_f = 3.0 * PI / omega0;
        let p = Pulse::from_fn(t_f, 37, |t| 0.2 * t).unwrap();
        assert!(perturbative_leakage_amplitude(&p, omega0).norm() < 1e-14);
    }

    #[test]
    fn adjoint_gradient_matches_finite_differences() {
        let v: Vec<f64> = (0..24)
            .map(|k| 0.8 * (k as f64 * 0.5).cos() + 0.3)
            .collect();
        let (h, omega0) = (0.13, 2.5);
        let (l0, g) = leakage_and_gradient(&v, h, omega0);
        let direct = propagate_amplitudes(EvenState::ground(), &v, h, omega0).leakage();
        assert!((l0 - direct).abs() < 1e-15);
        for k in [0, 5, 11, 23] {
            let eps = 1e-6;
            let mut vp = v.clone();
            vp[k] += eps;
            let mut vm = v.clone();
            vm[k] -= eps;
            let fd = (leakage_and_gradient(&vp, h, omega0).0
                - leakage_and_gradient(&vm, h, omega0).0)
                / (2.0 * eps);
            assert!(
                (fd - g[k]).abs() < 1e-8 * (1.0 + g[k].abs()),
                "k={k} fd={fd} g={}",
                g[k]
            );
        }
    }

    #[test]
    fn adjoint_gradient_handles_zero_frequency() {
        let v = [0.0, 0.4, 0.0];
        let (_, g) = leakage_and_gradient(&v, 0.5, 0.0);
        // With ω₀ = 0 the leakage is sin²(Σ V h), gradient sin(2ΣVh)·h.
        let want = (2.0 * 0.2f64).sin() * 0.5;
        for gk in g {
            assert!((gk - want).abs() < 1e-12);
        }
    }

    #[test]
    fn corrector_estimate_scaling() {
        assert_eq!(corrector_energy_estimate(0.0, 3.0).unwrap(), 0.0);
        let a = corrector_energy_estimate(0.16, 5.0).unwrap();
        let b = corrector_energy_estimate(0.16, 10.0).unwrap();
        assert!((a - 2.0 * b).abs() < 1e-15);
        assert!(corrector_energy_estimate(1.0, 1.0).is_err());
        assert!(corrector_energy_estimate(0.1, 0.0).is_err());
    }

    #[test]
    fn resonant_rotation_rate_is_proportional_to_amplitude() {
        let omega0 = PI;
        let t = 10.0;
        let angle = |a: f64| {
            let (v, h) = corrector_drive(a, 0.0, omega0, t);
            propagate_amplitudes(EvenState::ground(), &v, h, omega0)
                .amp_ee
                .norm()
                .asin()
        };
        let (a1, a2) = (angle(0.01), angle(0.02));
        assert!((a1 - 0.01 * t / 2.0).abs() / a1 < 0.02, "{a1}");
        assert!((a2 / a1 - 2.0).abs() < 0.02);
    }

    #[test]
    fn corrector_returns_seeded_state_to_ground() {
        let psi = Complex64::from_polar(0.16, 0.7);
        let state = EvenState::seeded(psi).unwrap();
        let sol = minimal_sinusoidal_corrector(state, PI, 10.0).unwrap();
        assert!(sol.residual < 1e-9);
        let (v, h) = corrector_drive(sol.amplitude, sol.phase, PI, 10.0);
        let end = propagate_amplitudes(state, &v, h, PI);
        assert!(end.leakage() < 1e-16);
        assert!((sol.amplitude - 2.0 * 0.16f64.asin() / 10.0).abs() / sol.amplitude < 0.05);
    }

    #[test]
    fn corrector_energy_follows_inverse_time() {
        let state = EvenState::seeded(Complex64::new(0.16, 0.0)).unwrap();
        let fit = calibrate_corrector(state, PI, &[2.0, 5.0, 10.0, 20.0]).unwrap();
        assert!((fit.slope - 1.0).abs() < 0.05, "slope {}", fit.slope);
        assert!(fit.max_residual < 0.05);
        assert!(
            (fit.kappa - CORRECTOR_KAPPA).abs() / CORRECTOR_KAPPA < 0.05,
            "{}",
            fit.kappa
        );
    }

    #[test]
    fn trajectory_csv_shape() {
        let p = fastest(1.0, 4);
        let mut buf = Vec::new();
        write_trajectory_csv(&p, PI, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[0], "t,re_gg,im_gg,re_ee,im_ee,p_ee");
    }

    proptest! {
        #[test]
        fn unitarity(
            v in prop::collection::vec(-3.0f64..3.0, 1..40),
            h in 0.01f64..0.5,
            omega0 in 0.0f64..10.0,
        ) {
            let st = propagate_amplitudes(EvenState::ground(), &v, h, omega0);
            prop_assert!((st.norm_sqr() - 1.0).abs() < 1e-10);
        }
    }
}
