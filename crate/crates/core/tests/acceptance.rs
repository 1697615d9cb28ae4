// Copyright 2026 The xferopt Authors
// SPDX-License-Identifier: Apache-2.0

//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p xferopt --test acceptance`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use xferopt::fidelity::{
    bath_infidelity, infidelity_freq, infidelity_gradient, infidelity_markovian, infidelity_time,
    FrequencyGrid,
};
use xferopt::leakage::{calibrate_corrector, leakage_and_gradient, propagate_even};
use xferopt::markovian::{optimal_markovian_pulse, solve_markovian_profile};
use xferopt::optimizer::{optimize, optimize_with_leakage, sweep_final_time};
use xferopt::oracle::simulate_transfer;
use xferopt::pulse::fastest_pulse;
use xferopt::{BathModel, EnergyBudget, OptimizationProblem, OracleConfig, Pulse, SweepOptions};

struct Outcome {
    pass: bool,
    detail: String,
}

type Check = fn() -> Result<Outcome, String>;

fn outcome(pass: bool, detail: String) -> Result<Outcome, String> {
    Ok(Outcome { pass, detail })
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn unit_budget() -> EnergyBudget {
    EnergyBudget::from_t_min(1.0).expect("t_min = 1 is valid")
}

fn c1_markovian_constant() -> Result<Outcome, String> {
    let prof = solve_markovian_profile(1e-10).map_err(err)?;
    let e_m = prof.e_m();
    outcome((e_m - 1.038).abs() <= 1e-3, format!("e_M = {e_m:.6}"))
}

fn c2_fastest_pulse() -> Result<Outcome, String> {
    let (gamma, energy) = (0.3, 2.0);
    let budget = EnergyBudget::new(energy).map_err(err)?;
    let p = fastest_pulse(budget, 512).map_err(err)?;
    let got = infidelity_markovian(&p, gamma);
    let want = gamma * PI * PI / (8.0 * energy);
    let rel = (got / want - 1.0).abs();
    outcome(
        rel <= 1e-3,
        format!("infidelity {got:.6e} vs γπ²/(8E) {want:.6e}, rel {rel:.1e}"),
    )
}

fn markovian_optimum() -> Result<(Pulse, f64, f64, bool), String> {
    let gamma = 0.01;
    let budget = unit_budget();
    let bath = BathModel::markovian(gamma).map_err(err)?;
    let r = optimize(&OptimizationProblem::new(bath, budget, 12.0).map_err(err)?).map_err(err)?;
    let coefficient = r.breakdown.total * budget.energy() / gamma;
    let fast = infidelity_markovian(&fastest_pulse(budget, 512).map_err(err)?, gamma);
    Ok((
        r.pulse,
        coefficient,
        1.0 - r.breakdown.total / fast,
        r.converged,
    ))
}

fn c3_markovian_coefficient() -> Result<Outcome, String> {
    let (_, coefficient, gain, converged) = markovian_optimum()?;
    let pass = converged && (coefficient / 1.077 - 1.0).abs() <= 0.02 && gain >= 0.11;
    outcome(
        pass,
        format!(
            "coefficient {coefficient:.4}, improvement {:.1}%, converged {converged}",
            100.0 * gain
        ),
    )
}

fn c4_markovian_shape() -> Result<Outcome, String> {
    let (p, _, _, converged) = markovian_optimum()?;
    let ramp = |t: f64| FRAC_PI_2 * t.min(1.0);
    let phases = p.phases();
    let gap = |k: usize| phases[k] - ramp(p.time(k));
    let starts_above = gap(1) > 0.0;
    let mut crossing = None;
    for k in 1..p.segments() {
        if gap(k) > 0.0 && gap(k + 1) <= 0.0 {
            let (t0, t1) = (p.time(k), p.time(k + 1));
            crossing = Some(t0 + (t1 - t0) * gap(k) / (gap(k) - gap(k + 1)));
            break;
        }
    }
    let pass = converged && starts_above && crossing.is_some_and(|t| (t - 0.9).abs() <= 0.1);
    outcome(
        pass,
        format!("starts above ramp {starts_above}, crossing at t/t_min = {crossing:.3?}"),
    )
}

fn c5_overshoot() -> Result<Outcome, String> {
    let budget = unit_budget();
    let bath = BathModel::new(0.01, 10.0).map_err(err)?;
    let r = optimize(&OptimizationProblem::new(bath, budget, 10.0).map_err(err)?).map_err(err)?;
    let fast = bath_infidelity(&fastest_pulse(budget, 512).map_err(err)?, &bath);
    let ratio = r.breakdown.total / fast;
    let max_phi = r.pulse.max_phase();
    let pass = r.converged && max_phi > FRAC_PI_2 && ratio <= 0.7;
    outcome(
        pass,
        format!("max φ = {max_phi:.4} (π/2 = {FRAC_PI_2:.4}), infidelity / fastest = {ratio:.3}"),
    )
}

/// Curve normalized by the bath's fastest-pulse infidelity.
fn normalized_sweep(t_c: f64) -> Result<(Vec<f64>, bool), String> {
    let budget = unit_budget();
    let bath = BathModel::new(0.01, t_c).map_err(err)?;
    let fast = bath_infidelity(&fastest_pulse(budget, 512).map_err(err)?, &bath);
    let t_f: Vec<f64> = (1..=12).map(f64::from).collect();
    let recs = sweep_final_time(&bath, budget, &t_f, &SweepOptions::default());
    let converged = recs.iter().all(|r| r.converged);
    Ok((
        recs.iter().map(|r| r.infidelity / fast).collect(),
        converged,
    ))
}

/// Level of the first point whose drop to the next is under 1%.
fn first_plateau(curve: &[f64]) -> f64 {
    curve
        .windows(2)
        .find(|w| (w[0] - w[1]) / w[0] < 0.01)
        .map_or(curve[curve.len() - 1], |w| w[0])
}

fn c6_two_plateaux() -> Result<Outcome, String> {
    let (markov, c0) = normalized_sweep(0.0)?;
    let (short, c1) = normalized_sweep(1.0)?;
    let (long, c10) = normalized_sweep(10.0)?;
    let non_increasing = [&markov, &short, &long]
        .iter()
        .all(|c| c.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9)));
    let saturation = markov[markov.len() - 1];
    let first = [first_plateau(&short), first_plateau(&long)];
    let first_ok = first.iter().all(|p| (p / saturation - 1.0).abs() <= 0.05);
    let second = [short[short.len() - 1], long[long.len() - 1]];
    let second_ok = second[1] < second[0];
    let pass = c0 && c1 && c10 && non_increasing && first_ok && second_ok;
    outcome(
        pass,
        format!(
            "non-increasing {non_increasing}; Markovian saturation {saturation:.4}; first plateaux \
             (t_c = 1, 10) {:.4}, {:.4} [within 5%: {first_ok}]; final plateaux {:.4}, {:.4} \
             [ordered: {second_ok}]",
            first[0], first[1], second[0], second[1]
        ),
    )
}

fn c7_leakage_magnitude() -> Result<Outcome, String> {
    let t_min = 1.0;
    let omega0 = PI / t_min;
    let p = fastest_pulse(unit_budget(), 512).map_err(err)?;
    let got = propagate_even(&p, omega0).leakage();
    // Constant drive V = π/(2 t_min) off-resonant by ω₀.
    let v = FRAC_PI_2 / t_min;
    let w2 = v * v + omega0 * omega0;
    let rabi = v * v / w2 * (w2.sqrt() * t_min).sin().powi(2);
    let diff = (got - rabi).abs();
    let pass = (got - 0.026).abs() <= 0.002 && diff <= 1e-10;
    outcome(
        pass,
        format!("|ψ_ee|² = {got:.6}, Rabi formula {rabi:.6}, |diff| = {diff:.1e}"),
    )
}

/// Frequency of the largest DFT bin of `res` sampled at spacing `h`.
fn dominant_bin(res: &[f64], h: f64) -> usize {
    let n = res.len();
    let mut best = (0, 0.0);
    for m in 1..n / 2 {
        let w = 2.0 * PI * m as f64 / (n as f64 * h);
        let (mut c, mut s) = (0.0, 0.0);
        for (k, r) in res.iter().enumerate() {
            let arg = w * k as f64 * h;
            c += r * arg.cos();
            s += r * arg.sin();
        }
        let power = c * c + s * s;
        if power > best.1 {
            best = (m, power);
        }
    }
    best.0
}

fn c8_non_rwa() -> Result<Outcome, String> {
    let budget = unit_budget();
    let omega0 = PI;
    let t_f = 10.0;
    let unit = BathModel::new(1.0, 10.0).map_err(err)?;
    let fast = fastest_pulse(budget, 512).map_err(err)?;
    // Coupling chosen so that the fastest pulse loses 10% to the bath.
    let bath = unit
        .with_gamma(0.1 / bath_infidelity(&fast, &unit))
        .map_err(err)?;
    let fast_leak = propagate_even(&fast, omega0).leakage();
    let base = OptimizationProblem::new(bath, budget, t_f).map_err(err)?;
    let free = optimize(&base).map_err(err)?;
    let r = optimize_with_leakage(&base.clone().with_omega0(omega0)).map_err(err)?;
    let leak_ratio = r.leakage / fast_leak;
    let bath_rel = r.breakdown.bath_infidelity / free.breakdown.bath_infidelity - 1.0;

    // Residual modulation: amplitude minus its moving average over one 2ω₀ period.
    let v = r.pulse.amplitudes();
    let h = r.pulse.dt();
    let n = v.len();
    let window = (PI / omega0 / h).round() as usize;
    let residual: Vec<f64> = (0..n)
        .map(|k| {
            let lo = k.saturating_sub(window / 2);
            let hi = (k + window / 2 + 1).min(n);
            v[k] - v[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect();
    let peak = dominant_bin(&residual, h);
    let target = 2.0 * omega0 * n as f64 * h / (2.0 * PI);
    let pass = r.converged
        && free.converged
        && leak_ratio <= 0.1
        && bath_rel.abs() <= 0.05
        && (peak as f64 - target).abs() <= 1.0;
    outcome(
        pass,
        format!(
            "leakage / fastest {leak_ratio:.2e}, bath infidelity vs leakage-free {:+.2}%, \
             spectral peak bin {peak} (2ω₀ at bin {target:.1})",
            100.0 * bath_rel
        ),
    )
}

fn c9_corrector_scaling() -> Result<Outcome, String> {
    let omega0 = PI;
    let state = propagate_even(&fastest_pulse(unit_budget(), 512).map_err(err)?, omega0);
    let fit = calibrate_corrector(state, omega0, &[2.0, 5.0, 10.0, 20.0]).map_err(err)?;
    let slope = -fit.slope;
    outcome(
        (slope + 1.0).abs() <= 0.05,
        format!(
            "log–log slope {slope:.4} over T ∈ [2, 20], κ = {:.3}",
            fit.kappa
        ),
    )
}

fn fit_exponent(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn c10_oracle() -> Result<Outcome, String> {
    let budget = unit_budget();
    let segments = 256;
    let cfg = OracleConfig {
        n_traj: 100_000,
        seed: 1,
        ..OracleConfig::default()
    };
    let mut pass = true;
    let mut notes = Vec::new();
    for t_c in [0.0, 10.0] {
        let unit = BathModel::new(1.0, t_c).map_err(err)?;
        let fast = fastest_pulse(budget, segments).map_err(err)?;
        // Weak coupling: the fastest pulse is predicted to lose 5e-4.
        let bath = unit
            .with_gamma(5e-4 / bath_infidelity(&fast, &unit))
            .map_err(err)?;
        let markov = optimal_markovian_pulse(budget, segments).map_err(err)?;
        let tuned = optimize(
            &OptimizationProblem::new(bath, budget, 10.0)
                .map_err(err)?
                .with_segments(segments),
        )
        .map_err(err)?
        .pulse;
        let mut ratios = Vec::new();
        for (name, p) in [
            ("fastest", &fast),
            ("markovian", &markov),
            ("optimized", &tuned),
        ] {
            let mut discrepancies = Vec::new();
            let scales = [1.0, 2.0, 4.0];
            for (i, m) in scales.iter().enumerate() {
                let b = bath.with_gamma(bath.gamma() * m).map_err(err)?;
                let pred = bath_infidelity(p, &b);
                let est = simulate_transfer(p, &b, 0.0, &cfg).map_err(err)?;
                if i == 0 {
                    let mc = est.infidelity();
                    let ok =
                        pred <= 0.05 && (mc - pred).abs() <= (3.0 * est.stderr).max(0.1 * pred);
                    pass &= ok;
                    ratios.push(mc / pred);
                    notes.push(format!(
                        "t_c={t_c} {name}: ratio {:.3}±{:.3}",
                        mc / pred,
                        est.stderr / pred
                    ));
                }
                discrepancies.push(est.residual_mean.abs());
            }
            let exponent = fit_exponent(&scales, &discrepancies);
            pass &= exponent >= 1.8;
            notes.push(format!("exponent {exponent:.2}"));
        }
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let spread = (ratios.iter().cloned().fold(f64::MIN, f64::max)
            - ratios.iter().cloned().fold(f64::MAX, f64::min))
            / mean;
        pass &= spread <= 0.15;
        notes.push(format!("spread {:.1}%", 100.0 * spread));
    }
    outcome(pass, notes.join(", "))
}

fn random_pulse(rng: &mut ChaCha8Rng, segments: usize) -> Pulse {
    let t_f = rng.random_range(0.5..4.0);
    let coeffs: Vec<f64> = (0..rng.random_range(1..5))
        .map(|_| rng.random_range(-0.6..0.6))
        .collect();
    Pulse::from_fn(t_f, segments, |t| {
        let s = t / t_f;
        FRAC_PI_2 * s
            + coeffs
                .iter()
                .enumerate()
                .map(|(m, c)| c * (PI * (m + 1) as f64 * s).sin())
                .sum::<f64>()
    })
    .expect("random pulse is valid")
}

fn max_rel_error(analytic: &[f64], fd: &[f64]) -> f64 {
    let scale = fd.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    analytic
        .iter()
        .zip(fd)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        / scale
}

fn c11_hygiene() -> Result<Outcome, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(2026);
    let step = 1e-6;
    let (mut worst_freq, mut worst_bath, mut worst_leak) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let p = random_pulse(&mut rng, 48);
        let t_c = [0.05, 0.5, 5.0][rng.random_range(0..3)];
        let bath = BathModel::new(rng.random_range(0.1..2.0), t_c).map_err(err)?;
        let t = infidelity_time(&p, &bath).map_err(err)?;
        let f = infidelity_freq(&p, &bath, FrequencyGrid::default()).map_err(err)?;
        worst_freq = worst_freq.max(((f - t) / t).abs());

        let grad = infidelity_gradient(&p, &bath);
        let fd: Vec<f64> = (1..p.segments())
            .map(|k| {
                let shifted = |d: f64| {
                    let mut ph = p.phases().to_vec();
                    ph[k] += d;
                    infidelity_time(&Pulse::new(ph, p.t_f()).expect("valid"), &bath)
                        .expect("finite")
                };
                (shifted(step) - shifted(-step)) / (2.0 * step)
            })
            .collect();
        worst_bath = worst_bath.max(max_rel_error(&grad, &fd));

        let omega0 = rng.random_range(0.5..8.0);
        let v = p.amplitudes();
        let h = p.dt();
        let (_, lgrad) = leakage_and_gradient(&v, h, omega0);
        let lfd: Vec<f64> = (0..v.len())
            .map(|k| {
                let shifted = |d: f64| {
                    let mut w = v.clone();
                    w[k] += d;
                    leakage_and_gradient(&w, h, omega0).0
                };
                (shifted(step) - shifted(-step)) / (2.0 * step)
            })
            .collect();
        worst_leak = worst_leak.max(max_rel_error(&lgrad, &lfd));
    }
    let pass = worst_freq <= 1e-6 && worst_bath <= 1e-5 && worst_leak <= 1e-5;
    outcome(
        pass,
        format!(
            "100 pulses: freq/time {worst_freq:.1e}, bath gradient {worst_bath:.1e}, \
             leakage gradient {worst_leak:.1e}"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, Check, Duration); 11] = [
        (
            "Markovian profile constant",
            c1_markovian_constant,
            Duration::from_secs(1),
        ),
        (
            "fastest-pulse Markovian infidelity",
            c2_fastest_pulse,
            Duration::from_secs(1),
        ),
        (
            "optimal Markovian coefficient",
            c3_markovian_coefficient,
            Duration::from_secs(60),
        ),
        (
            "Markovian pulse shape",
            c4_markovian_shape,
            Duration::from_secs(60),
        ),
        (
            "non-Markovian overshoot and gain",
            c5_overshoot,
            Duration::from_secs(300),
        ),
        (
            "two-plateaux sweep",
            c6_two_plateaux,
            Duration::from_secs(1800),
        ),
        (
            "leakage magnitude",
            c7_leakage_magnitude,
            Duration::from_secs(1),
        ),
        ("non-RWA optimization", c8_non_rwa, Duration::from_secs(600)),
        (
            "corrector scaling",
            c9_corrector_scaling,
            Duration::from_secs(300),
        ),
        ("oracle equivalence", c10_oracle, Duration::from_secs(1200)),
        ("numerics hygiene", c11_hygiene, Duration::from_secs(120)),
    ];
    let mut failures = 0;
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let (pass, detail) = match result {
            Ok(o) => (o.pass && elapsed <= *budget, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "{} {:>2} {name}: {detail} [{:.2} s, limit {} s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
