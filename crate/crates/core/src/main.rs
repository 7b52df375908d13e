use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;
use tvsim::convergence::{convergence_study, ConvergenceOptions, StudyKind};
use tvsim::material::{Extended, ScalarFunctionals};
use tvsim::runner::{check, resolve_out_dir, run, RunOptions};
use tvsim::scenario::ScenarioConfig;
use tvsim::sweep::{sweep, Axis};

/// Kelvin–Voigt thermoviscoelastic simulator.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Study {
    Spatial,
    Temporal,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario (a TOML file or `builtin:<name>`).
    Run {
        config: String,
        /// Output directory (overrides the config and TVSIM_OUTPUT_DIR).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Resume from a checkpoint sidecar file.
        #[arg(long)]
        restart: Option<PathBuf>,
        #[arg(long, short)]
        verbose: bool,
    },
    /// Run one member per axis value, concurrently, plus a comparison CSV.
    Sweep {
        config: String,
        /// `path.to.key=v1,v2,...` with TOML values; omit for a single run.
        #[arg(long)]
        axis: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Manufactured-solution convergence study.
    Convergence {
        config: String,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long, value_enum, default_value = "both")]
        study: Study,
        /// Nodes per side of the coarsest spatial level.
        #[arg(long, default_value_t = 9)]
        base_n: usize,
        /// Write the tables as CSV into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate κ, K, ℓ and ℓ̂ of the configured material.
    MaterialTable {
        config: String,
        #[arg(long, default_value_t = 1e-3)]
        from: f64,
        #[arg(long, default_value_t = 1e3)]
        to: f64,
        #[arg(long, default_value_t = 25)]
        points: usize,
    },
    /// Validate a scenario and check admissibility of its initial data.
    Check { config: String },
}

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<bool> {
    match Cli::parse().command {
        Command::Run { config, out, restart, verbose } => {
            let cfg = ScenarioConfig::load(&config)?;
            let dir = resolve_out_dir(out, &cfg);
            let output = run(&cfg, &RunOptions { out_dir: Some(dir.clone()), restart, verbose })
                .with_context(|| format!("run '{}'", cfg.name))?;
            let s = &output.manifest.summary;
            println!("{}: {} steps to t = {}, {} violation(s)", cfg.name, s.steps, s.final_time, s.violations);
            if let Some(ti) = s.theta_infinity {
                println!("Θ∞ = {:.10} (L = {:.10}), energy-budget Θ̂∞ = {:.10}", ti.theta_inf, ti.l, s.theta_hat_infinity);
            }
            println!("outputs in {}", dir.display());
            Ok(output.manifest.passed())
        }
        Command::Sweep { config, axis, out } => {
            let cfg = ScenarioConfig::load(&config)?;
            let axis = axis.as_deref().map(Axis::parse).transpose()?;
            let dir = resolve_out_dir(out, &cfg);
            let members = sweep(&cfg, axis.as_ref(), &dir)?;
            let mut all_ok = true;
            for m in &members {
                match (&m.manifest, &m.error) {
                    (Some(r), _) => {
                        all_ok &= r.passed();
                        println!("{}: {} violation(s) -> {}", m.label, r.summary.violations, m.dir.display());
                    }
                    (None, e) => {
                        all_ok = false;
                        println!("{}: failed: {}", m.label, e.as_deref().unwrap_or("unknown error"));
                    }
                }
            }
            println!("comparison in {}", dir.join("comparison.csv").display());
            Ok(all_ok)
        }
        Command::Convergence { config, levels, study, base_n, out } => {
            let cfg = ScenarioConfig::load(&config)?;
            let opts = ConvergenceOptions { base_n, ..Default::default() };
            let kinds: &[StudyKind] = match study {
                Study::Spatial => &[StudyKind::Spatial],
                Study::Temporal => &[StudyKind::Temporal],
                Study::Both => &[StudyKind::Spatial, StudyKind::Temporal],
            };
            let mut monotone = true;
            for &kind in kinds {
                let table = convergence_study(&cfg, levels, kind, &opts)?;
                print!("{}", table.to_csv());
                if !table.monotone {
                    eprintln!("warning: {kind:?} errors are not monotone across levels");
                    monotone = false;
                }
                if let Some(dir) = &out {
                    std::fs::create_dir_all(dir)?;
                    let name = match kind {
                        StudyKind::Spatial => "convergence_spatial.csv",
                        StudyKind::Temporal => "convergence_temporal.csv",
                    };
                    std::fs::write(dir.join(name), table.to_csv())?;
                }
            }
            Ok(monotone)
        }
        Command::MaterialTable { config, from, to, points } => {
            if !(from > 0.0 && to > from && points >= 2) {
                bail!("need 0 < from < to and at least 2 points");
            }
            let cfg = ScenarioConfig::load(&config)?;
            let f = ScalarFunctionals::new(cfg.heat_capacity()?, cfg.material.m_shift)?;
            let fmt = |e: Extended| e.finite().map_or("-inf".to_string(), |x| format!("{x:e}"));
            println!("xi,kappa,K,ell,ell_hat");
            for i in 0..points {
                let xi = from * (to / from).powf(i as f64 / (points - 1) as f64);
                let m = f.model();
                println!("{xi:e},{:e},{:e},{},{:e}", m.kappa_at(xi), f.k(xi), fmt(f.ell(xi)), f.ell_hat(xi));
            }
            Ok(true)
        }
        Command::Check { config } => {
            let cfg = ScenarioConfig::load(&config)?;
            let report = check(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(report.admissibility.passed)
        }
    }
}
