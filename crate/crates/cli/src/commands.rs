// Copyright 2026 The xferopt Authors
// SPDX-License-Identifier: Apache-2.0

//! One function per subcommand. Each validates its inputs and opens its
//! outputs before any heavy computation.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use xferopt::fidelity::{bath_infidelity, infidelity_freq, infidelity_time, FrequencyGrid};
use xferopt::leakage::{
    corrector_energy_estimate, minimal_sinusoidal_corrector, perturbative_leakage_amplitude,
    propagate_even, write_trajectory_csv,
};
use xferopt::markovian::solve_markovian_profile;
use xferopt::optimizer::{optimize, sweep_final_time, DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE};
use xferopt::oracle::{oracle_step, simulate_transfer};
use xferopt::pulse::DEFAULT_SEGMENTS;
use xferopt::{EnergyBudget, OptimizationProblem, OracleConfig, Pulse, StartKind, SweepOptions};

use crate::config::{require, Settings};
use crate::error::{CliError, Result};
use crate::report::Report;

/// What a subcommand hands back to `main`.
pub struct Outcome {
    pub report: Report,
    /// False when a requested optimization did not converge.
    pub converged: bool,
}

impl Outcome {
    fn done(report: Report) -> Self {
        Self {
            report,
            converged: true,
        }
    }
}

fn create_output(path: &Path) -> Result<BufWriter<File>> {
    let wrap = |source| CliError::Path {
        path: path.to_owned(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(wrap)?;
    }
    Ok(BufWriter::new(File::create(path).map_err(wrap)?))
}

fn load_pulse(s: &Settings) -> Result<Pulse> {
    let path = require(s.pulse.clone(), "--pulse", "control.pulse")?;
    Pulse::load_csv(&path).map_err(|source| CliError::PulseFile { path, source })
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

fn budget_for(s: &Settings, p: &Pulse) -> Result<EnergyBudget> {
    match s.energy {
        Some(_) => s.budget(),
        None => Ok(EnergyBudget::new(p.energy())?),
    }
}

fn put_times(r: &mut Report, t_f: f64, budget: EnergyBudget) {
    r.put("t_f", t_f)
        .put("t_min", budget.t_min())
        .put("t_f_over_t_min", t_f / budget.t_min());
}

pub fn evaluate(s: &Settings) -> Result<Outcome> {
    let p = load_pulse(s)?;
    let bath = s.bath()?;
    let omega0 = s.omega0()?;
    let budget = budget_for(s, &p)?;
    let (gamma, energy) = (bath.gamma(), budget.energy());

    let mut r = Report::new();
    put_times(&mut r, p.t_f(), budget);
    r.put("energy_budget", energy)
        .put("energy_used", p.energy())
        .put("final_phase", p.final_phase())
        .put("max_phi", p.max_phase());
    r.infidelity("infidelity", bath_infidelity(&p, &bath), gamma, energy);
    if !bath.is_markovian() {
        let t = infidelity_time(&p, &bath)?;
        let f = infidelity_freq(&p, &bath, FrequencyGrid::default())?;
        r.put("infidelity_time", t).put("infidelity_freq", f).put(
            "freq_time_rel_diff",
            if t > 0.0 {
                (f - t).abs() / t
            } else {
                (f - t).abs()
            },
        );
    }
    if omega0 > 0.0 {
        r.put("leakage", propagate_even(&p, omega0).leakage());
    }
    Ok(Outcome::done(r))
}

fn problem(s: &Settings, t_f: f64) -> Result<OptimizationProblem> {
    let mut prob = OptimizationProblem::new(s.bath()?, s.budget()?, t_f)?
        .with_omega0(s.omega0()?)
        .with_segments(s.grid_n.unwrap_or(DEFAULT_SEGMENTS));
    if let Some(w) = s.leak_weight {
        prob = prob.with_leak_weight(w);
    }
    if let Some(starts) = &s.starts {
        prob = prob.with_starts(starts.iter().map(|&k| StartKind::from(k)).collect());
    }
    if let Some(mode) = s.energy_mode {
        prob = prob.with_energy_mode(mode.into());
    }
    prob.max_iterations = s.max_iterations.unwrap_or(DEFAULT_MAX_ITERATIONS);
    prob.tolerance = s.tolerance.unwrap_or(DEFAULT_TOLERANCE);
    prob.validate()?;
    Ok(prob)
}

pub fn optimize_cmd(s: &Settings, out: Option<PathBuf>) -> Result<Outcome> {
    let t_f = require(s.t_f, "--t-f", "control.t_f")?;
    let prob = problem(s, t_f)?;
    let out = out.unwrap_or_else(|| s.out_dir().join("pulse.csv"));
    let file = create_output(&out)?;

    let res = optimize(&prob)?;
    res.pulse.write_csv(file)?;

    let (gamma, energy) = (prob.bath.gamma(), prob.budget.energy());
    let mut r = Report::new();
    put_times(&mut r, t_f, prob.budget);
    r.put("t_c", prob.bath.t_c())
        .put("t_c_over_t_min", prob.bath.t_c() / prob.budget.t_min());
    r.infidelity("infidelity", res.breakdown.total, gamma, energy);
    r.infidelity(
        "bath_infidelity",
        res.breakdown.bath_infidelity,
        gamma,
        energy,
    );
    r.put("leakage_penalty", res.breakdown.leakage_penalty)
        .put("leakage", res.leakage)
        .put("energy_used", res.energy_used)
        .put("energy_residual", res.energy_residual)
        .put("endpoint_residual", res.endpoint_residual)
        .put("max_phi", res.pulse.max_phase())
        .put("iterations", res.iterations)
        .put("start", res.start)
        .put("converged", res.converged)
        .put("pulse_file", display(&out));
    Ok(Outcome {
        report: r,
        converged: res.converged,
    })
}

/// Header of `sweep.csv`.
pub const SWEEP_HEADER: &str =
    "tf_over_tmin,tc_over_tmin,infidelity,energy,max_phi,converged,pulse_file";

pub fn sweep(s: &Settings) -> Result<Outcome> {
    let list = require(s.t_f_list.clone(), "--t-f-list", "optimizer.t_f_list")?;
    if list.is_empty() {
        return Err(CliError::Invalid("the final-time list is empty".into()));
    }
    if s.omega0()? > 0.0 {
        return Err(CliError::Invalid(
            "sweep runs in the rotating-wave approximation; drop omega0 or use `optimize` per point".into(),
        ));
    }
    // Validate every point before the first optimization.
    for &t_f in &list {
        problem(s, t_f)?;
    }
    let bath = s.bath()?;
    let budget = s.budget()?;
    let dir = s.out_dir();
    std::fs::create_dir_all(&dir).map_err(|source| CliError::Path {
        path: dir.clone(),
        source,
    })?;
    let csv_path = dir.join("sweep.csv");
    let mut csv = create_output(&csv_path)?;

    let defaults = SweepOptions::default();
    let opts = SweepOptions {
        segments: s.grid_n.unwrap_or(defaults.segments),
        starts: s.starts.as_ref().map_or(defaults.starts, |v| {
            v.iter().map(|&k| StartKind::from(k)).collect()
        }),
        energy_mode: s.energy_mode.map_or(defaults.energy_mode, Into::into),
        max_iterations: s.max_iterations.unwrap_or(defaults.max_iterations),
        tolerance: s.tolerance.unwrap_or(defaults.tolerance),
    };
    let records = sweep_final_time(&bath, budget, &list, &opts);

    writeln!(csv, "{SWEEP_HEADER}")?;
    let mut failed = 0;
    let mut best: Option<(f64, f64)> = None;
    for (k, rec) in records.iter().enumerate() {
        let name = format!("pulse_{k:03}.csv");
        let pulse_file = match &rec.pulse {
            Some(p) => {
                p.write_csv(create_output(&dir.join(&name))?)?;
                name
            }
            None => String::new(),
        };
        if !rec.converged {
            failed += 1;
            if let Some(e) = &rec.error {
                eprintln!("t_f = {}: {e}", rec.t_f);
            }
        }
        if rec.infidelity.is_finite() && best.is_none_or(|(_, v)| rec.infidelity < v) {
            best = Some((rec.tf_over_tmin, rec.infidelity));
        }
        writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            rec.tf_over_tmin,
            rec.tc_over_tmin,
            rec.infidelity,
            rec.energy,
            rec.max_phi,
            rec.converged,
            pulse_file
        )?;
    }
    csv.flush()?;

    let mut r = Report::new();
    r.put("points", records.len())
        .put("failed", failed)
        .put("t_min", budget.t_min())
        .put("t_c_over_t_min", bath.t_c() / budget.t_min());
    if let Some((at, v)) = best {
        r.put("best_tf_over_tmin", at);
        r.infidelity("best_infidelity", v, bath.gamma(), budget.energy());
    }
    r.put("sweep_csv", display(&csv_path));
    Ok(Outcome {
        report: r,
        converged: failed == 0,
    })
}

pub fn markovian(s: &Settings, out: Option<PathBuf>) -> Result<Outcome> {
    let tol = s.markovian_tol.unwrap_or(1e-10);
    let out = out.unwrap_or_else(|| s.out_dir().join("markovian_profile.csv"));
    let file = create_output(&out)?;
    let prof = solve_markovian_profile(tol)?;
    prof.write_csv(file)?;
    let mut r = Report::new();
    r.put("e_m", prof.e_m())
        .put("coefficient", prof.coefficient())
        .put("x_end", prof.x_end())
        .put("samples", prof.x_grid().len());
    if let (Some(gamma), Some(_)) = (s.gamma, s.energy) {
        let budget = s.budget()?;
        r.infidelity(
            "optimal_infidelity",
            gamma * prof.coefficient() / budget.energy(),
            gamma,
            budget.energy(),
        );
    }
    r.put("profile_csv", display(&out));
    Ok(Outcome::done(r))
}

pub fn leakage(s: &Settings, out: Option<PathBuf>) -> Result<Outcome> {
    let p = load_pulse(s)?;
    let omega0 = s.omega0()?;
    if omega0 <= 0.0 {
        return Err(CliError::Invalid("leakage needs --omega0 > 0".into()));
    }
    if let Some(t) = s.corrector_time {
        if !(t.is_finite() && t > 0.0) {
            return Err(CliError::Invalid(format!(
                "corrector time must be positive, got {t}"
            )));
        }
    }
    let out = out.unwrap_or_else(|| s.out_dir().join("even_trajectory.csv"));
    let file = create_output(&out)?;
    write_trajectory_csv(&p, omega0, file)?;

    let budget = budget_for(s, &p)?;
    let state = propagate_even(&p, omega0);
    let exact = state.leakage();
    let approx = perturbative_leakage_amplitude(&p, omega0).norm_sqr();
    let mut r = Report::new();
    put_times(&mut r, p.t_f(), budget);
    r.put("omega0", omega0)
        .put("omega0_t_min", omega0 * budget.t_min())
        .put("leakage", exact)
        .put("leakage_perturbative", approx);
    if let Some(t) = s.corrector_time {
        let sol = minimal_sinusoidal_corrector(state, omega0, t)?;
        r.put("corrector_time", t)
            .put("corrector_energy", sol.energy)
            .put(
                "corrector_energy_estimate",
                corrector_energy_estimate(state.amp_ee.norm(), t)?,
            )
            .put("corrector_amplitude", sol.amplitude);
    }
    r.put("trajectory_csv", display(&out));
    Ok(Outcome::done(r))
}

pub fn oracle(s: &Settings) -> Result<Outcome> {
    let p = load_pulse(s)?;
    let bath = s.bath()?;
    let omega0 = s.omega0()?;
    let cfg = OracleConfig {
        n_traj: s.n_traj.unwrap_or(OracleConfig::default().n_traj),
        seed: s.seed.unwrap_or(0),
        dt: s.dt,
        rwa: s.rwa.unwrap_or(omega0 == 0.0),
        include_even: true,
    };
    let (substeps, dt) = oracle_step(&p, &bath, omega0, &cfg)?;
    let est = simulate_transfer(&p, &bath, omega0, &cfg)?;

    let predicted = bath_infidelity(&p, &bath);
    let leak = if cfg.rwa || omega0 == 0.0 {
        0.0
    } else {
        propagate_even(&p, omega0).leakage()
    };
    // A leaked |gg⟩ component costs half its population on average.
    let predicted_total = predicted + 0.5 * leak;
    let (cv, cv_err) = est.infidelity_cv();
    let budget = budget_for(s, &p)?;
    let mut r = Report::new();
    put_times(&mut r, p.t_f(), budget);
    r.put("n_traj", est.n_traj)
        .put("seed", cfg.seed)
        .put("rwa", cfg.rwa)
        .put("dt", dt)
        .put("substeps", substeps)
        .put("mean_fidelity", est.mean)
        .put("stderr", est.stderr)
        .put("infidelity", est.infidelity())
        .put("infidelity_control_variate", cv)
        .put("infidelity_control_variate_stderr", cv_err)
        .put("predicted_infidelity", predicted);
    if leak > 0.0 {
        r.put("leakage", leak)
            .put("predicted_total", predicted_total);
    }
    r.put(
        "ratio",
        if predicted_total > 0.0 {
            est.infidelity() / predicted_total
        } else {
            f64::NAN
        },
    )
    .put("max_norm_error", est.max_norm_error);
    Ok(Outcome::done(r))
}
