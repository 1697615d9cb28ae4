// Copyright 2026 The xferopt Authors
// SPDX-License-Identifier: Apache-2.0

//! Control phase profiles.
//!
//! A [`Pulse`] stores samples of the accumulated phase φ(t) = ∫₀ᵗ V(t′)dt′ on a
//! uniform grid that includes both endpoints. Between samples φ is linear, so
//! the coupling amplitude V(t) = dφ/dt is piecewise constant and the control
//! energy ∫V² dt is evaluated exactly.
//!
//! Phases are never wrapped: the non-Markovian optima overshoot π/2 and come
//! back, and that excursion must survive serialization.

use std::f64::consts::FRAC_PI_2;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Default number of grid segments for optimization and reporting.
pub const DEFAULT_SEGMENTS: usize = 512;

/// Tolerance on φ(t_f) = π/2 for a pulse that completes the transfer.
pub const ENDPOINT_TOL: f64 = 1e-12;

/// Control energy budget E together with the minimum transfer time it allows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBudget {
    energy: f64,
}

impl EnergyBudget {
    pub fn new(energy: f64) -> Result<Self> {
        if !(energy.is_finite() && energy > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "energy must be positive and finite, got {energy}"
            )));
        }
        Ok(Self { energy })
    }

    /// Budget whose fastest transfer takes exactly `t_min`.
    pub fn from_t_min(t_min: f64) -> Result<Self> {
        if !(t_min.is_finite() && t_min > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "t_min must be positive and finite, got {t_min}"
            )));
        }
        Self::new(FRAC_PI_2 * FRAC_PI_2 / t_min)
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// Shortest time in which φ can reach π/2 with energy E: π²/(4E).
    pub fn t_min(&self) -> f64 {
        FRAC_PI_2 * FRAC_PI_2 / self.energy
    }
}

/// Accumulated control phase sampled on a uniform grid over [0, t_f].
#[derive(Debug, Clone, PartialEq)]
pub struct Pulse {
    t_f: f64,
    phases: Vec<f64>,
}

impl Pulse {
    /// Validates and wraps phase samples `φ_0..φ_N` spanning [0, t_f].
    ///
    /// Requires t_f > 0, at least three samples and φ_0 = 0 exactly.
    pub fn new(phases: Vec<f64>, t_f: f64) -> Result<Self> {
        if !(t_f.is_finite() && t_f > 0.0) {
            return Err(Error::InvalidPulse(format!(
                "final time must be positive and finite, got {t_f}"
            )));
        }
        if phases.len() < 3 {
            return Err(Error::InvalidPulse(format!(
                "need at least 3 phase samples, got {}",
                phases.len()
            )));
        }
        if phases[0] != 0.0 {
            return Err(Error::InvalidPulse(format!(
                "first phase sample must be 0, got {}",
                phases[0]
            )));
        }
        if let Some(k) = phases.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidPulse(format!(
                "phase sample {k} is not finite"
            )));
        }
        Ok(Self { t_f, phases })
    }

    /// Builds a pulse by sampling `phase(t)` on `segments + 1` grid points.
    /// The first sample is forced to zero.
    pub fn from_fn(t_f: f64, segments: usize, phase: impl Fn(f64) -> f64) -> Result<Self> {
        let dt = t_f / segments as f64;
        let mut phases: Vec<f64> = (0..=segments).map(|k| phase(k as f64 * dt)).collect();
        if let Some(first) = phases.first_mut() {
            *first = 0.0;
        }
        Self::new(phases, t_f)
    }

    pub fn t_f(&self) -> f64 {
        self.t_f
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn into_phases(self) -> Vec<f64> {
        self.phases
    }

    /// Number of constant-amplitude segments N.
    pub fn segments(&self) -> usize {
        self.phases.len() - 1
    }

    pub fn dt(&self) -> f64 {
        self.t_f / self.segments() as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.segments() {
            self.t_f
        } else {
            k as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.phases.len()).map(|k| self.time(k)).collect()
    }

    pub fn final_phase(&self) -> f64 {
        self.phases[self.segments()]
    }

    pub fn max_phase(&self) -> f64 {
        self.phases
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_transfer_complete(&self) -> bool {
        (self.final_phase() - FRAC_PI_2).abs() <= ENDPOINT_TOL
    }

    /// Piecewise-constant amplitudes V_k = Δφ_k / Δt, one per segment.
    pub fn amplitudes(&self) -> Vec<f64> {
        let dt = self.dt();
        self.phases.windows(2).map(|w| (w[1] - w[0]) / dt).collect()
    }

    /// Control energy ∫V² dt = Σ (Δφ_k)² / Δt.
    pub fn energy(&self) -> f64 {
        let dt = self.dt();
        self.phases
            .windows(2)
            .map(|w| (w[1] - w[0]) * (w[1] - w[0]))
            .sum::<f64>()
            / dt
    }

    fn segment_of(&self, t: f64) -> usize {
        let n = self.segments();
        let x = t / self.dt();
        let mut k = x.floor() as usize;
        // Snap onto the next node when t sits on it up to rounding.
        if (k + 1) as f64 - x <= 1e-12 * n as f64 {
            k += 1;
        }
        k.min(n - 1)
    }

    /// V(t), right-continuous at interior nodes and taking the left value at t_f.
    pub fn amplitude(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        let k = self.segment_of(t);
        Ok((self.phases[k + 1] - self.phases[k]) / self.dt())
    }

    /// Piecewise-linear φ(t).
    pub fn phase_at(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        let k = self.segment_of(t);
        let u = (t - k as f64 * self.dt()) / self.dt();
        Ok(self.phases[k] + u * (self.phases[k + 1] - self.phases[k]))
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.t_f).contains(&t) {
            return Err(Error::InvalidParameter(format!(
                "time {t} outside [0, {}]",
                self.t_f
            )));
        }
        Ok(())
    }

    /// Time-rescaled pulse φ′(t) = φ(a t): same samples, t_f′ = t_f / a.
    pub fn scale(&self, a: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "scale factor must be positive, got {a}"
            )));
        }
        Ok(Self {
            t_f: self.t_f / a,
            phases: self.phases.clone(),
        })
    }

    /// Resamples φ onto `segments` uniform segments over [0, t_f′]. Beyond the
    /// original final time the last phase is held.
    pub fn resample(&self, t_f: f64, segments: usize) -> Result<Self> {
        let end = self.final_phase();
        Self::from_fn(t_f, segments, |t| {
            if t >= self.t_f {
                end
            } else {
                self.phase_at(t).unwrap_or(end)
            }
        })
    }

    /// Writes `t,phi,V` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Csv {
            line: 0,
            msg: e.to_string(),
        };
        w.write_record(["t", "phi", "V"]).map_err(csv_err)?;
        let amps = self.amplitudes();
        for (k, phi) in self.phases.iter().enumerate() {
            let v = amps[k.min(amps.len() - 1)];
            w.write_record([
                format!("{:.16e}", self.time(k)),
                format!("{phi:.16e}"),
                format!("{v:.16e}"),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    /// Reads a `t,phi,V` pulse file. The time column must start at 0 and be
    /// uniform; the `V` column is informational and is not used.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(input);
        let headers = r.headers().map_err(|e| Error::Csv {
            line: 1,
            msg: e.to_string(),
        })?;
        if headers.len() < 2 || &headers[0] != "t" || &headers[1] != "phi" {
            return Err(Error::Csv {
                line: 1,
                msg: format!(
                    "expected header `t,phi,V`, got `{}`",
                    headers.iter().collect::<Vec<_>>().join(",")
                ),
            });
        }
        let mut times = Vec::new();
        let mut phases = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| Error::Csv {
                line: e.position().map_or(0, |p| p.line()),
                msg: e.to_string(),
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            let field = |i: usize, name: &str| -> Result<f64> {
                rec.get(i)
                    .ok_or_else(|| Error::Csv {
                        line,
                        msg: format!("missing `{name}` column"),
                    })?
                    .parse::<f64>()
                    .map_err(|e| Error::Csv {
                        line,
                        msg: format!("bad `{name}` value: {e}"),
                    })
            };
            let t = field(0, "t")?;
            let phi = field(1, "phi")?;
            if let Some(&prev) = times.last() {
                if t <= prev {
                    return Err(Error::Csv {
                        line,
                        msg: format!("time {t} is not after previous time {prev}"),
                    });
                }
            } else if t != 0.0 {
                return Err(Error::Csv {
                    line,
                    msg: format!("first time must be 0, got {t}"),
                });
            }
            times.push(t);
            phases.push(phi);
        }
        if times.len() < 3 {
            return Err(Error::Csv {
                line: times.len() as u64 + 1,
                msg: format!("need at least 3 rows, got {}", times.len()),
            });
        }
        let t_f = *times.last().unwrap();
        let dt = t_f / (times.len() - 1) as f64;
        for (k, &t) in times.iter().enumerate() {
            if (t - k as f64 * dt).abs() > 1e-9 * t_f {
                return Err(Error::Csv {
                    line: k as u64 + 2,
                    msg: format!("time grid is not uniform at t = {t}"),
                });
            }
        }
        Self::new(phases, t_f)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file))
    }
}

/// Constant-speed ramp φ(t) = (2E/π) t reaching π/2 at t_min, sampled on
/// `segments` segments. Its energy is exactly E.
pub fn fastest_pulse(budget: EnergyBudget, segments: usize) -> Result<Pulse> {
    if segments < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 segments, got {segments}"
        )));
    }
    let n = segments as f64;
    let mut phases: Vec<f64> = (0..=segments).map(|k| FRAC_PI_2 * k as f64 / n).collect();
    phases[segments] = FRAC_PI_2;
    Pulse::new(phases, budget.t_min())
}

/// The fastest ramp followed by a hold at π/2 until `t_f`.
pub fn fastest_then_hold(budget: EnergyBudget, t_f: f64, segments: usize) -> Result<Pulse> {
    let t_min = budget.t_min();
    if t_f < t_min * (1.0 - 1e-12) {
        return Err(Error::Infeasible { t_f, t_min });
    }
    let mut p = Pulse::from_fn(t_f, segments, |t| FRAC_PI_2 * (t / t_min).min(1.0))?;
    p.phases[segments] = FRAC_PI_2;
    Ok(p)
}
