// Copyright 2026 The xferopt Authors
// SPDX-License-Identifier: Apache-2.0

//! Energy-constrained pulse optimization.
//!
//! With N segments of width h the variables are u_k = Δφ_k / √h, so the
//! energy is |u|² and the endpoint condition φ(t_f) = π/2 is Σu_k = π/(2√h).
//! Every feasible u is the fixed mean vector ū (the linear ramp to t_f, energy
//! π²/(4t_f)) plus a zero-mean part. In [`EnergyMode::Equal`] that part lies
//! on a sphere of radius r = √(E - π²/(4t_f)) and is written as r·w/|w| for an
//! unconstrained w, so both constraints hold exactly for every iterate.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;

use crate::bath::BathModel;
use crate::error::{Error, Result};
use crate::fidelity::{BathObjective, InfidelityBreakdown};
use crate::lbfgs::{self, LbfgsOptions};
use crate::leakage::leakage_and_gradient;
use crate::markovian::markovian_shape;
use crate::pulse::{fastest_then_hold, EnergyBudget, Pulse, DEFAULT_SEGMENTS};

/// Default weight of |amp_ee|² in the combined objective.
pub const DEFAULT_LEAK_WEIGHT: f64 = 0.5;
pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_MAX_ITERATIONS: usize = 2000;

/// How the energy budget constrains the pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EnergyMode {
    /// ∫φ′² = E.
    #[default]
    Equal,
    /// ∫φ′² ≤ E.
    AtMost,
}

/// Initial guess for one optimizer run.
#[derive(Debug, Clone, PartialEq)]
pub enum StartKind {
    /// Fastest ramp, then hold at π/2.
    FastestThenHold,
    /// Markovian optimal profile stretched to t_f.
    Markovian,
    /// Rise to π/2 + 0.3 at 0.4·t_f, then relax to π/2.
    Overshoot,
    /// Any pulse ending at π/2; resampled onto the problem grid.
    Warm(Pulse),
}

impl StartKind {
    pub fn defaults() -> Vec<StartKind> {
        vec![
            StartKind::FastestThenHold,
            StartKind::Markovian,
            StartKind::Overshoot,
        ]
    }

    fn pulse(&self, budget: EnergyBudget, t_f: f64, segments: usize) -> Result<Pulse> {
        match self {
            StartKind::FastestThenHold => fastest_then_hold(budget, t_f, segments),
            StartKind::Markovian => markovian_shape(t_f, segments),
            StartKind::Overshoot => {
                let peak = FRAC_PI_2 + 0.3;
                let t_peak = 0.4 * t_f;
                Pulse::from_fn(t_f, segments, |t| {
                    if t <= t_peak {
                        peak * (0.5 * PI * t / t_peak).sin()
                    } else {
                        let s = (t - t_peak) / (t_f - t_peak);
                        FRAC_PI_2 + 0.3 * 0.5 * (1.0 + (PI * s).cos())
                    }
                })
            }
            StartKind::Warm(p) => {
                if p.t_f() == t_f && p.segments() == segments {
                    Ok(p.clone())
                } else {
                    p.resample(t_f, segments)
                }
            }
        }
    }
}

/// One energy-constrained optimization.
#[derive(Debug, Clone)]
pub struct OptimizationProblem {
    pub bath: BathModel,
    pub budget: EnergyBudget,
    pub t_f: f64,
    /// Qubit splitting; 0 disables the leakage term.
    pub omega0: f64,
    pub leak_weight: f64,
    pub segments: usize,
    pub starts: Vec<StartKind>,
    pub energy_mode: EnergyMode,
    pub max_iterations: usize,
    /// Relative gradient tolerance.
    pub tolerance: f64,
}

impl OptimizationProblem {
    pub fn new(bath: BathModel, budget: EnergyBudget, t_f: f64) -> Result<Self> {
        let prob = Self {
            bath,
            budget,
            t_f,
            omega0: 0.0,
            leak_weight: DEFAULT_LEAK_WEIGHT,
            segments: DEFAULT_SEGMENTS,
            starts: StartKind::defaults(),
            energy_mode: EnergyMode::Equal,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            tolerance: DEFAULT_TOLERANCE,
        };
        prob.validate()?;
        Ok(prob)
    }

    pub fn with_omega0(mut self, omega0: f64) -> Self {
        self.omega0 = omega0;
        self
    }

    pub fn with_leak_weight(mut self, w: f64) -> Self {
        self.leak_weight = w;
        self
    }

    pub fn with_segments(mut self, segments: usize) -> Self {
        self.segments = segments;
        self
    }

    pub fn with_starts(mut self, starts: Vec<StartKind>) -> Self {
        self.starts = starts;
        self
    }

    pub fn with_energy_mode(mut self, mode: EnergyMode) -> Self {
        self.energy_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let t_min = self.budget.t_min();
        if !(self.t_f.is_finite() && self.t_f >= t_min * (1.0 - 1e-12)) {
            return Err(Error::Infeasible {
                t_f: self.t_f,
                t_min,
            });
        }
        if !(self.omega0.is_finite() && self.omega0 >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "omega0 must be nonnegative, got {}",
                self.omega0
            )));
        }
        if !(self.leak_weight.is_finite() && self.leak_weight >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "leak weight must be nonnegative, got {}",
                self.leak_weight
            )));
        }
        if self.segments < 2 {
            return Err(Error::InvalidParameter("need at least 2 segments".into()));
        }
        if self.starts.is_empty() {
            return Err(Error::InvalidParameter("need at least one start".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter("tolerance must be positive".into()));
        }
        Ok(())
    }

    fn leakage_active(&self) -> bool {
        self.omega0 > 0.0 && self.leak_weight > 0.0
    }
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub pulse: Pulse,
    pub breakdown: InfidelityBreakdown,
    /// |amp_ee(t_f)|² of the returned pulse (0 when ω₀ = 0).
    pub leakage: f64,
    pub energy_used: f64,
    /// (energy_used - E)/E.
    pub energy_residual: f64,
    /// φ(t_f) - π/2.
    pub endpoint_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<f64>,
    /// Index into the problem's start list of the winning run.
    pub start: usize,
}

/// Feasible-set geometry shared by all starts of one problem.
struct Geometry {
    segments: usize,
    h: f64,
    sqrt_h: f64,
    mean: f64,
    radius: f64,
    mode: EnergyMode,
}

impl Geometry {
    fn new(prob: &OptimizationProblem) -> Self {
        let n = prob.segments;
        let h = prob.t_f / n as f64;
        let sqrt_h = h.sqrt();
        let mean = FRAC_PI_2 / (sqrt_h * n as f64);
        let e_min = PI * PI / (4.0 * prob.t_f);
        Self {
            segments: n,
            h,
            sqrt_h,
            mean,
            radius: (prob.budget.energy() - e_min).max(0.0).sqrt(),
            mode: prob.energy_mode,
        }
    }

    /// Zero-mean part of a vector.
    fn center(v: &[f64]) -> Vec<f64> {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| x - m).collect()
    }

    /// Radial profile factor and its derivative over ρ = |Pw|.
    fn radial(&self, rho: f64) -> (f64, f64) {
        match self.mode {
            EnergyMode::Equal => (1.0 / rho, -1.0 / (rho * rho)),
            EnergyMode::AtMost => {
                if rho < 1e-4 {
                    let r2 = rho * rho;
                    (1.0 - r2 / 3.0, -2.0 * rho / 3.0)
                } else {
                    let t = rho.tanh();
                    (t / rho, ((1.0 - t * t) * rho - t) / (rho * rho))
                }
            }
        }
    }

    fn u_of_w(&self, w: &[f64]) -> Vec<f64> {
        let pw = Self::center(w);
        let rho = pw.iter().map(|x| x * x).sum::<f64>().sqrt();
        let (f, _) = self.radial(rho);
        pw.iter().map(|x| self.mean + self.radius * f * x).collect()
    }

    fn phases_of_u(&self, u: &[f64]) -> Vec<f64> {
        let mut phases = Vec::with_capacity(self.segments + 1);
        let mut acc = 0.0;
        phases.push(0.0);
        for uk in u {
            acc += uk * self.sqrt_h;
            phases.push(acc);
        }
        phases
    }

    /// Start vector w from a pulse: its zero-mean u part.
    fn w_of_pulse(&self, p: &Pulse) -> Vec<f64> {
        let u: Vec<f64> = p
            .phases()
            .windows(2)
            .map(|w| (w[1] - w[0]) / self.sqrt_h)
            .collect();
        let mut w = Self::center(&u);
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-12 {
            // A straight ramp has no direction; use the lowest Fourier mode.
            let n = w.len() as f64;
            w = (0..w.len())
                .map(|k| (PI * (k as f64 + 0.5) / n).cos())
                .collect();
        }
        if self.mode == EnergyMode::AtMost {
            // Place the start on the boundary's neighbourhood rather than the ramp.
            let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            w.iter_mut().for_each(|x| *x *= 3.0 / norm);
        }
        w
    }

    /// Factor making |dJ/dw| comparable with |J|: ρ for the sphere, where J
    /// is invariant under w → a·w.
    fn scale(&self, w: &[f64]) -> f64 {
        let rho = Self::center(w).iter().map(|x| x * x).sum::<f64>().sqrt();
        match self.mode {
            EnergyMode::Equal => rho,
            EnergyMode::AtMost => rho.max(1.0),
        }
    }

    /// Chains dJ/du back to dJ/dw.
    fn pullback(&self, w: &[f64], gu: &[f64]) -> Vec<f64> {
        let pw = Self::center(w);
        let rho = pw.iter().map(|x| x * x).sum::<f64>().sqrt();
        let (f, df) = self.radial(rho);
        let pg = Self::center(gu);
        let proj = pw.iter().zip(&pg).map(|(a, b)| a * b).sum::<f64>();
        pw.iter()
            .zip(&pg)
            .map(|(x, g)| self.radius * (f * g + df * proj / rho * x))
            .collect()
    }
}

/// Combined objective J(u) = bath infidelity + w·|amp_ee|².
struct Objective<'a> {
    geo: &'a Geometry,
    bath: BathObjective,
    omega0: f64,
    leak_weight: f64,
}

impl Objective<'_> {
    fn eval(&self, w: &[f64], grad: &mut [f64]) -> f64 {
        let u = self.geo.u_of_w(w);
        let phases = self.geo.phases_of_u(&u);
        let mut gphi = vec![0.0; phases.len()];
        let mut value = self.bath.value_and_gradient(&phases, &mut gphi);
        // dJ/du_k = √h Σ_{j>k} dJ/dφ_j.
        let n = self.geo.segments;
        let mut gu = vec![0.0; n];
        let mut acc = 0.0;
        for k in (0..n).rev() {
            acc += gphi[k + 1];
            gu[k] = acc * self.geo.sqrt_h;
        }
        if self.leak_weight > 0.0 {
            let v: Vec<f64> = u.iter().map(|x| x / self.geo.sqrt_h).collect();
            let (leak, gv) = leakage_and_gradient(&v, self.geo.h, self.omega0);
            value += self.leak_weight * leak;
            gu.iter_mut()
                .zip(&gv)
                .for_each(|(g, d)| *g += self.leak_weight * d / self.geo.sqrt_h);
        }
        grad.copy_from_slice(&self.geo.pullback(w, &gu));
        value
    }
}

/// Runs `f` on a pool capped by `XFEROPT_THREADS` unless already inside one.
pub(crate) fn with_workers<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    if rayon::current_thread_index().is_some() {
        return f();
    }
    let cap = std::env::var("XFEROPT_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0);
    match cap.map(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build()) {
        Some(Ok(pool)) => pool.install(f),
        _ => f(),
    }
}

struct RunOutcome {
    phases: Vec<f64>,
    value: f64,
    iterations: usize,
    converged: bool,
    history: Vec<f64>,
}

fn run_start(prob: &OptimizationProblem, geo: &Geometry, start: &StartKind) -> Result<RunOutcome> {
    let init = start.pulse(prob.budget, prob.t_f, prob.segments)?;
    let obj = Objective {
        geo,
        bath: BathObjective::new(&prob.bath, prob.t_f, prob.segments),
        omega0: prob.omega0,
        leak_weight: if prob.leakage_active() {
            prob.leak_weight
        } else {
            0.0
        },
    };
    if geo.radius == 0.0 {
        let u = vec![geo.mean; geo.segments];
        let phases = geo.phases_of_u(&u);
        let mut g = vec![0.0; geo.segments];
        let value = obj.eval(&u, &mut g);
        return Ok(RunOutcome {
            phases,
            value,
            iterations: 0,
            converged: true,
            history: vec![value],
        });
    }
    let w0 = geo.w_of_pulse(&init);
    let report = lbfgs::minimize(
        |w, g| obj.eval(w, g),
        w0,
        LbfgsOptions {
            max_iterations: prob.max_iterations,
            tolerance: prob.tolerance,
            ..LbfgsOptions::default()
        },
        |w, value, g| {
            if value == 0.0 {
                return 0.0;
            }
            let gnorm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            gnorm * geo.scale(w) / value.abs()
        },
    );
    let u = geo.u_of_w(&report.x);
    Ok(RunOutcome {
        phases: geo.phases_of_u(&u),
        value: report.value,
        iterations: report.iterations,
        converged: report.converged,
        history: report.history,
    })
}

/// Minimizes bath infidelity (plus the weighted leakage when ω₀ > 0) over
/// all starts and returns the best run, ties broken by start order.
pub fn optimize(prob: &OptimizationProblem) -> Result<OptimizationResult> {
    prob.validate()?;
    let geo = Geometry::new(prob);
    let runs: Vec<Result<RunOutcome>> = with_workers(|| {
        prob.starts
            .par_iter()
            .map(|s| run_start(prob, &geo, s))
            .collect()
    });
    let mut best: Option<(usize, RunOutcome)> = None;
    for (i, run) in runs.into_iter().enumerate() {
        let run = run?;
        if best.as_ref().is_none_or(|(_, b)| run.value < b.value) {
            best = Some((i, run));
        }
    }
    let (start, run) = best.expect("at least one start");
    let mut phases = run.phases;
    let endpoint_residual = phases[prob.segments] - FRAC_PI_2;
    phases[prob.segments] = FRAC_PI_2;
    let pulse = Pulse::new(phases, prob.t_f)?;
    let bath_value = BathObjective::new(&prob.bath, prob.t_f, prob.segments).value(pulse.phases());
    let leakage = if prob.omega0 > 0.0 {
        crate::leakage::propagate_even(&pulse, prob.omega0).leakage()
    } else {
        0.0
    };
    let penalty = if prob.leakage_active() {
        prob.leak_weight * leakage
    } else {
        0.0
    };
    let energy_used = pulse.energy();
    let energy = prob.budget.energy();
    Ok(OptimizationResult {
        breakdown: InfidelityBreakdown::new(bath_value, penalty),
        leakage,
        energy_used,
        energy_residual: (energy_used - energy) / energy,
        endpoint_residual,
        iterations: run.iterations,
        converged: run.converged,
        history: run.history,
        start,
        pulse,
    })
}

/// [`optimize`] for problems without the leakage term.
pub fn optimize_rwa(prob: &OptimizationProblem) -> Result<OptimizationResult> {
    if prob.omega0 != 0.0 {
        return Err(Error::InvalidParameter(
            "optimize_rwa expects omega0 = 0; use optimize_with_leakage".into(),
        ));
    }
    optimize(prob)
}

/// [`optimize`] for problems with a qubit splitting ω₀ > 0.
pub fn optimize_with_leakage(prob: &OptimizationProblem) -> Result<OptimizationResult> {
    if !(prob.omega0 > 0.0) {
        return Err(Error::InvalidParameter(
            "optimize_with_leakage expects omega0 > 0".into(),
        ));
    }
    optimize(prob)
}

/// Options shared by every point of a final-time sweep.
#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub segments: usize,
    pub starts: Vec<StartKind>,
    pub energy_mode: EnergyMode,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            segments: DEFAULT_SEGMENTS,
            starts: StartKind::defaults(),
            energy_mode: EnergyMode::Equal,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

/// One point of a sweep; `pulse` is `None` when the point failed.
#[derive(Debug, Clone)]
pub struct SweepRecord {
    pub t_f: f64,
    pub tf_over_tmin: f64,
    pub tc_over_tmin: f64,
    pub infidelity: f64,
    pub energy: f64,
    pub max_phi: f64,
    pub converged: bool,
    pub pulse: Option<Pulse>,
    pub error: Option<String>,
}

/// Best infidelity for each final time in `t_f_list`.
///
/// Distinct times are processed in increasing order. Besides the configured
/// starts each point is seeded with the previous optimum held at π/2 until
/// the new t_f and with the previous optimum dilated to it, so the curve can
/// only improve with t_f up to optimizer tolerance. Records come back in the
/// order of `t_f_list`; repeated times share one record.
pub fn sweep_final_time(
    bath: &BathModel,
    budget: EnergyBudget,
    t_f_list: &[f64],
    opts: &SweepOptions,
) -> Vec<SweepRecord> {
    let t_min = budget.t_min();
    let mut unique: Vec<f64> = t_f_list.to_vec();
    unique.sort_by(|a, b| a.total_cmp(b));
    unique.dedup();
    let mut done: Vec<SweepRecord> = Vec::with_capacity(unique.len());
    let mut previous: Option<Pulse> = None;
    for &t_f in &unique {
        let mut starts = opts.starts.clone();
        if let Some(p) = &previous {
            let held = Pulse::from_fn(t_f, opts.segments, |t| {
                if t <= p.t_f() {
                    p.phase_at(t).unwrap_or(FRAC_PI_2)
                } else {
                    FRAC_PI_2
                }
            });
            if let Ok(held) = held {
                starts.push(StartKind::Warm(held));
            }
            starts.push(StartKind::Warm(p.clone()));
        }
        let record = OptimizationProblem::new(*bath, budget, t_f)
            .map(|prob| {
                let mut prob = prob
                    .with_segments(opts.segments)
                    .with_starts(starts)
                    .with_energy_mode(opts.energy_mode);
                prob.max_iterations = opts.max_iterations;
                prob.tolerance = opts.tolerance;
                prob
            })
            .and_then(|prob| optimize(&prob));
        let rec = match record {
            Ok(res) => {
                previous = Some(res.pulse.clone());
                SweepRecord {
                    t_f,
                    tf_over_tmin: t_f / t_min,
                    tc_over_tmin: bath.t_c() / t_min,
                    infidelity: res.breakdown.total,
                    energy: res.energy_used,
                    max_phi: res.pulse.max_phase(),
                    converged: res.converged,
                    pulse: Some(res.pulse),
                    error: None,
                }
            }
            Err(e) => SweepRecord {
                t_f,
                tf_over_tmin: t_f / t_min,
                tc_over_tmin: bath.t_c() / t_min,
                infidelity: f64::NAN,
                energy: f64::NAN,
                max_phi: f64::NAN,
                converged: false,
                pulse: None,
                error: Some(e.to_string()),
            },
        };
        done.push(rec);
    }
    t_f_list
        .iter()
        .map(|t| {
            let k = unique.partition_point(|u| u < t);
            done[k].clone()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fidelity::infidelity_markovian;
    use crate::markovian::profile_energy;
    use crate::pulse::fastest_pulse;

    fn budget() -> EnergyBudget {
        EnergyBudget::from_t_min(1.0).unwrap()
    }

    #[test]
    fn validation() {
        let bath = BathModel::markovian(0.1).unwrap();
        assert!(matches!(
            OptimizationProblem::new(bath, budget(), 0.9),
            Err(Error::Infeasible { .. })
        ));
        let p = OptimizationProblem::new(bath, budget(), 2.0).unwrap();
        assert!(p.clone().with_leak_weight(-1.0).validate().is_err());
        assert!(p.clone().with_starts(vec![]).validate().is_err());
        assert!(optimize_rwa(&p.clone().with_omega0(1.0)).is_err());
        assert!(optimize_with_leakage(&p).is_err());
    }

    #[test]
    fn t_min_returns_ramp() {
        let bath = BathModel::new(0.1, 0.5).unwrap();
        let prob = OptimizationProblem::new(bath, budget(), 1.0)
            .unwrap()
            .with_segments(64);
        let res = optimize(&prob).unwrap();
        let ramp = fastest_pulse(budget(), 64).unwrap();
        for (a, b) in res.pulse.phases().iter().zip(ramp.phases()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn markovian_optimum_reaches_universal_coefficient() {
        let gamma = 0.01;
        let bath = BathModel::markovian(gamma).unwrap();
        let b = budget();
        let prob = OptimizationProblem::new(bath, b, 12.0)
            .unwrap()
            .with_segments(256);
        let res = optimize_rwa(&prob).unwrap();
        assert!(res.converged, "iterations {}", res.iterations);
        let coeff = res.breakdown.total * b.energy() / gamma;
        assert!((coeff - 1.077).abs() / 1.077 < 0.02, "coefficient {coeff}");
        // The discretized functional may undercut e_M² by O(h²).
        assert!(coeff >= profile_energy().powi(2) * (1.0 - 1e-2));
        assert!(res.endpoint_residual.abs() < 1e-9);
        assert!(res.energy_residual.abs() < 1e-6);
        assert!(res.history.windows(2).all(|w| w[1] <= w[0]));
        let check = infidelity_markovian(&res.pulse, gamma);
        assert!((check - res.breakdown.total).abs() < 1e-12 * check.max(1e-300) + 1e-15);
    }

    #[test]
    fn at_most_mode_binds_for_markovian_bath() {
        let gamma = 0.01;
        let bath = BathModel::markovian(gamma).unwrap();
        let prob = OptimizationProblem::new(bath, budget(), 4.0)
            .unwrap()
            .with_segments(128);
        let eq = optimize(&prob).unwrap();
        let le = optimize(&prob.clone().with_energy_mode(EnergyMode::AtMost)).unwrap();
        assert!(le.energy_used <= budget().energy() * (1.0 + 1e-12));
        assert!((le.breakdown.total - eq.breakdown.total).abs() / eq.breakdown.total < 1e-3);
    }

    #[test]
    fn zero_noise_is_trivially_optimal() {
        let bath = BathModel::markovian(0.0).unwrap();
        let prob = OptimizationProblem::new(bath, budget(), 3.0)
            .unwrap()
            .with_segments(32);
        let res = optimize(&prob).unwrap();
        assert!(res.converged);
        assert_eq!(res.breakdown.total, 0.0);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let bath = BathModel::new(0.02, 3.0).unwrap();
        let prob = OptimizationProblem::new(bath, budget(), 3.0)
            .unwrap()
            .with_segments(64);
        let a = optimize(&prob).unwrap();
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = one.install(|| optimize(&prob).unwrap());
        assert_eq!(a.pulse, b.pulse);
        assert_eq!(a.breakdown, b.breakdown);
    }

    #[test]
    fn sweep_is_monotone_and_maps_duplicates() {
        let bath = BathModel::markovian(0.01).unwrap();
        let opts = SweepOptions {
            segments: 128,
            ..SweepOptions::default()
        };
        let recs = sweep_final_time(&bath, budget(), &[3.0, 1.0, 2.0, 3.0], &opts);
        assert_eq!(recs.len(), 4);
        assert_eq!(recs[0].infidelity, recs[3].infidelity);
        assert!(recs[2].infidelity <= recs[1].infidelity * 1.01);
        assert!(recs[0].infidelity <= recs[2].infidelity * 1.01);
        assert!((recs[1].tf_over_tmin - 1.0).abs() < 1e-12);
        let fastest = infidelity_markovian(&fastest_pulse(budget(), 128).unwrap(), 0.01);
        assert!((recs[1].infidelity - fastest).abs() / fastest < 1e-9);
    }

    #[test]
    fn infeasible_sweep_point_is_reported() {
        let bath = BathModel::markovian(0.01).unwrap();
        let opts = SweepOptions {
            segments: 32,
            ..SweepOptions::default()
        };
        let recs = sweep_final_time(&bath, budget(), &[0.5, 1.5], &opts);
        assert!(!recs[0].converged && recs[0].error.is_some());
        assert!(recs[1].pulse.is_some());
    }
}
