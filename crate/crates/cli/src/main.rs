// Copyright 2026 The xferopt Authors
// SPDX-License-Identifier: Apache-2.0

//! `xferopt`: design and check energy-constrained state-transfer pulses.

mod commands;
mod config;
mod error;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{EnergyModeArg, Settings, StartArg};
use error::Result;

#[derive(Parser, Debug)]
#[command(
    name = "xferopt",
    version,
    about = "Pulse design for noisy-to-quiet qubit state transfer"
)]
struct Cli {
    /// JSON config with flat dotted keys (`bath.gamma`, `control.t_f`, ...).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Print the report as JSON.
    #[arg(long, global = true)]
    json: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Infidelity, energy and leakage of an existing pulse.
    Evaluate {
        #[command(flatten)]
        bath: BathArgs,
        #[arg(long)]
        pulse: Option<PathBuf>,
        /// Budget used for t_min; defaults to the pulse's own energy.
        #[arg(long)]
        energy: Option<f64>,
        #[arg(long)]
        omega0: Option<f64>,
    },
    /// Optimize one pulse.
    Optimize {
        #[command(flatten)]
        opt: OptimizeArgs,
        /// Pulse CSV to write (default `<out.dir>/pulse.csv`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimize over a list of final times and write `sweep.csv`.
    Sweep {
        #[command(flatten)]
        opt: OptimizeArgs,
        /// Final times, comma separated.
        #[arg(long, value_delimiter = ',')]
        t_f_list: Option<Vec<f64>>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Solve for the Markovian optimal profile and its energy e_M.
    Markovian {
        /// Integration tolerance.
        #[arg(long)]
        tol: Option<f64>,
        /// With --energy, also report the optimal infidelity.
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        energy: Option<f64>,
        /// Profile CSV to write (default `<out.dir>/markovian_profile.csv`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Leakage into |e₁e₂⟩ outside the rotating-wave approximation.
    Leakage {
        #[arg(long)]
        pulse: Option<PathBuf>,
        #[arg(long)]
        omega0: Option<f64>,
        /// Budget used for t_min; defaults to the pulse's own energy.
        #[arg(long)]
        energy: Option<f64>,
        /// Also solve for the minimal corrector over this time.
        #[arg(long)]
        corrector_time: Option<f64>,
        /// Trajectory CSV to write (default `<out.dir>/even_trajectory.csv`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo check of a pulse with sampled classical noise.
    Oracle {
        #[command(flatten)]
        bath: BathArgs,
        #[arg(long)]
        pulse: Option<PathBuf>,
        #[arg(long)]
        omega0: Option<f64>,
        /// Drop the counter-rotating coupling (default when omega0 = 0).
        #[arg(long)]
        rwa: bool,
        #[arg(long)]
        n_traj: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        dt: Option<f64>,
    },
}

#[derive(Args, Debug)]
struct BathArgs {
    /// Coupling strength γ.
    #[arg(long)]
    gamma: Option<f64>,
    /// Bath memory time (0 for white noise).
    #[arg(long)]
    t_c: Option<f64>,
    /// Correlation normalization C in Φ(t) = Cγ/t_c·exp(-|t|/t_c).
    #[arg(long)]
    corr_norm: Option<f64>,
}

#[derive(Args, Debug)]
struct OptimizeArgs {
    #[command(flatten)]
    bath: BathArgs,
    #[arg(long)]
    energy: Option<f64>,
    #[arg(long)]
    t_f: Option<f64>,
    #[arg(long)]
    omega0: Option<f64>,
    #[arg(long)]
    leak_weight: Option<f64>,
    /// Number of grid segments.
    #[arg(long)]
    grid_n: Option<usize>,
    /// Starting guesses, comma separated.
    #[arg(long, value_enum, value_delimiter = ',')]
    starts: Option<Vec<StartArg>>,
    #[arg(long, value_enum)]
    energy_mode: Option<EnergyModeArg>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    tolerance: Option<f64>,
}

impl BathArgs {
    fn settings(&self) -> Settings {
        Settings {
            gamma: self.gamma,
            t_c: self.t_c,
            corr_norm: self.corr_norm,
            ..Settings::default()
        }
    }
}

impl OptimizeArgs {
    fn settings(&self) -> Settings {
        Settings {
            energy: self.energy,
            t_f: self.t_f,
            omega0: self.omega0,
            leak_weight: self.leak_weight,
            grid_n: self.grid_n,
            starts: self.starts.clone(),
            energy_mode: self.energy_mode,
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            ..self.bath.settings()
        }
    }
}

fn run(cli: Cli) -> Result<commands::Outcome> {
    let file = match &cli.config {
        Some(path) => Settings::load(path)?,
        None => Settings::default(),
    };
    match cli.command {
        Command::Evaluate {
            bath,
            pulse,
            energy,
            omega0,
        } => {
            let flags = Settings {
                pulse,
                energy,
                omega0,
                ..bath.settings()
            };
            commands::evaluate(&file.overlay(flags))
        }
        Command::Optimize { opt, out } => {
            commands::optimize_cmd(&file.overlay(opt.settings()), out)
        }
        Command::Sweep {
            opt,
            t_f_list,
            out_dir,
        } => {
            let flags = Settings {
                t_f_list,
                out_dir,
                ..opt.settings()
            };
            commands::sweep(&file.overlay(flags))
        }
        Command::Markovian {
            tol,
            gamma,
            energy,
            out,
        } => {
            let flags = Settings {
                markovian_tol: tol,
                gamma,
                energy,
                ..Settings::default()
            };
            commands::markovian(&file.overlay(flags), out)
        }
        Command::Leakage {
            pulse,
            omega0,
            energy,
            corrector_time,
            out,
        } => {
            let flags = Settings {
                pulse,
                omega0,
                energy,
                corrector_time,
                ..Settings::default()
            };
            commands::leakage(&file.overlay(flags), out)
        }
        Command::Oracle {
            bath,
            pulse,
            omega0,
            rwa,
            n_traj,
            seed,
            dt,
        } => {
            let flags = Settings {
                pulse,
                omega0,
                rwa: rwa.then_some(true),
                n_traj,
                seed,
                dt,
                ..bath.settings()
            };
            commands::oracle(&file.overlay(flags))
        }
    }
}

/// Exit status when an optimization did not converge.
const NOT_CONVERGED: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json = cli.json;
    match run(cli) {
        Ok(outcome) => {
            if let Err(e) = outcome.report.write(std::io::stdout().lock(), json) {
                eprintln!("error: {e}");
                return ExitCode::FAILURE;
            }
            if outcome.converged {
                ExitCode::SUCCESS
            } else {
                eprintln!("error: optimization did not converge");
                ExitCode::from(NOT_CONVERGED)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
