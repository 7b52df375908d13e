//! End-to-end runs: stepping, per-step invariant checks, output files and
//! the run manifest.

use crate::diagnostics::{
    corner_inequality_check, energy_balance_residual, energy_budget_temperature, entropy_balance_residual,
    bound_chain_check, record, theta_infinity, window_metrics, DiagnosticsError, DiagnosticsRecord, ThetaInfinity,
    Trajectory, TrajectorySample, WindowMetrics, CSV_HEADER, WINDOW_CSV_HEADER,
};
use crate::grid::{read_snapshot, write_snapshot, Grid, Snapshot, SnapshotError, VectorField};
use crate::integrator::{FieldState, Forcing, Integrator, StepError, StepReport};
use crate::material::{admissibility_check, classify, AdmissibilityReport, HypothesisReport, MaterialError, ScalarFunctionals};
use crate::scenario::{ConfigError, ScenarioConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Environment variable overriding the output directory of a run.
pub const OUTPUT_DIR_ENV: &str = "TVSIM_OUTPUT_DIR";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("initial temperature is not admissible: {0}")]
    Inadmissible(String),
    #[error("step {step} from t = {t} failed")]
    Step { step: usize, t: f64, source: StepError },
    #[error(transparent)]
    Material(#[from] MaterialError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error("cannot write {path}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error("restart: {0}")]
    Restart(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Output directory; `None` runs in memory only.
    pub out_dir: Option<PathBuf>,
    /// Checkpoint sidecar (`.toml`) to resume from.
    pub restart: Option<PathBuf>,
    /// Print one progress line per output time to stderr.
    pub verbose: bool,
}

/// Output directory precedence: explicit path, then the environment
/// variable, then the config's own setting.
pub fn resolve_out_dir(explicit: Option<PathBuf>, config: &ScenarioConfig) -> PathBuf {
    explicit
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| config.output.dir.clone())
}

/// One failed per-step check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub step: usize,
    pub t: f64,
    pub check: String,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepLog {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub rejections: usize,
    pub coupling_iterations: usize,
    pub velocity_iterations: usize,
    pub temperature_iterations: usize,
    pub energy_residual: f64,
    pub entropy_residual: f64,
    pub corner_slack: f64,
    pub theta_min: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub final_time: f64,
    pub steps: usize,
    pub rejections: usize,
    pub violations: usize,
    pub f0: f64,
    pub f_final: f64,
    pub entropy_initial: f64,
    pub entropy_final: f64,
    pub theta_min: f64,
    pub eps_dissipation: f64,
    pub work_f: f64,
    pub work_g: f64,
    /// Limit temperature from the entropy over the last unit time.
    pub theta_infinity: Option<ThetaInfinity>,
    /// Uniform temperature carrying the whole energy budget.
    pub theta_hat_infinity: f64,
    pub final_window: Option<WindowMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub name: String,
    pub config_hash: String,
    pub code_version: String,
    pub restarted_from: Option<f64>,
    pub hypotheses: HypothesisReport,
    pub admissibility: AdmissibilityReport,
    pub summary: RunSummary,
    pub violations: Vec<Violation>,
    pub step_log: Vec<StepLog>,
}

impl RunManifest {
    pub fn passed(&self) -> bool {
        self.summary.violations == 0
    }
}

/// Everything produced by a run, for in-process consumers.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub manifest: RunManifest,
    pub grid: Grid,
    pub initial: FieldState,
    pub final_state: FieldState,
    /// One record per accepted step, starting with the initial state.
    pub records: Vec<DiagnosticsRecord>,
    pub trajectory: Trajectory,
    pub windows: Vec<WindowMetrics>,
}

/// Checkpoint sidecar stored next to the state snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub config_hash: String,
    pub t: f64,
    pub step: usize,
    pub next_dt: f64,
    pub f0: f64,
    pub entropy_initial: f64,
    pub rejections: usize,
    pub violations: usize,
    pub eps_dissipation: f64,
    pub work_f: f64,
    pub work_g: f64,
    pub theta_min: f64,
    /// Snapshot file name, relative to the sidecar.
    pub state_file: String,
}

/// SHA-256 of the config serialized without its output directory, so the
/// hash identifies the experiment rather than where it was written.
pub fn config_hash(config: &ScenarioConfig) -> Result<String, ConfigError> {
    let mut c = config.clone();
    c.output.dir = PathBuf::new();
    Ok(hex::encode(Sha256::digest(c.to_toml()?.as_bytes())))
}

fn state_snapshot(grid: &Grid, s: &FieldState) -> Snapshot {
    Snapshot {
        nx: grid.nx,
        ny: grid.ny,
        time: s.t,
        fields: vec![s.u.x.clone(), s.u.y.clone(), s.v.x.clone(), s.v.y.clone(), s.theta.clone()],
    }
}

fn state_from_snapshot(grid: &Grid, snap: Snapshot) -> Result<FieldState, RunError> {
    if snap.nx != grid.nx || snap.ny != grid.ny || snap.fields.len() != 5 {
        return Err(RunError::Restart(format!(
            "checkpoint holds {} fields on {}x{}, expected 5 on {}x{}",
            snap.fields.len(),
            snap.nx,
            snap.ny,
            grid.nx,
            grid.ny
        )));
    }
    let mut f = snap.fields.into_iter();
    let mut next = || f.next().unwrap_or_default();
    let u = VectorField { x: next(), y: next() };
    let v = VectorField { x: next(), y: next() };
    Ok(FieldState { u, v, theta: next(), t: snap.time })
}

struct Totals {
    step: usize,
    rejections: usize,
    eps_dissipation: f64,
    work_f: f64,
    work_g: f64,
    theta_min: f64,
}

struct Outputs {
    dir: PathBuf,
    csv: BufWriter<fs::File>,
}

impl Outputs {
    fn create(dir: &Path) -> Result<Self, RunError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let path = dir.join("diagnostics.csv");
        let mut csv = BufWriter::new(fs::File::create(&path).map_err(io_err(&path))?);
        writeln!(csv, "{CSV_HEADER}").map_err(io_err(&path))?;
        Ok(Self { dir: dir.to_path_buf(), csv })
    }

    fn row(&mut self, rec: &DiagnosticsRecord) -> Result<(), RunError> {
        let path = self.dir.join("diagnostics.csv");
        writeln!(self.csv, "{}", rec.csv_row()).map_err(io_err(&path))
    }

    fn write_text(&self, name: &str, text: &str) -> Result<(), RunError> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(io_err(&path))
    }

    fn subdir(&self, name: &str) -> Result<PathBuf, RunError> {
        let d = self.dir.join(name);
        fs::create_dir_all(&d).map_err(io_err(&d))?;
        Ok(d)
    }
}

fn contains_time(times: &[f64], t: f64) -> Option<usize> {
    times.iter().position(|&x| (x - t).abs() <= 1e-12 * x.abs().max(1.0))
}

/// Validation and initial-data report, produced without stepping.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub config_hash: String,
    pub hypotheses: HypothesisReport,
    pub admissibility: AdmissibilityReport,
}

pub fn check(config: &ScenarioConfig) -> Result<CheckReport, RunError> {
    let r = config.resolve()?;
    Ok(CheckReport {
        name: config.name.clone(),
        config_hash: config_hash(config)?,
        hypotheses: classify(&r.physics.model),
        admissibility: admissibility_check(&r.initial.theta, r.grid.weights(), &r.physics.model, f64::MIN_POSITIVE),
    })
}

/// Runs a scenario to its final time.
pub fn run(config: &ScenarioConfig, opts: &RunOptions) -> Result<RunOutput, RunError> {
    run_with_forcing(config, &config.forcing, opts)
}

/// Runs a scenario with a caller-supplied forcing in place of the configured one.
pub fn run_with_forcing(config: &ScenarioConfig, forcing: &dyn Forcing, opts: &RunOptions) -> Result<RunOutput, RunError> {
    let resolved = config.resolve()?;
    let (grid, physics) = (resolved.grid, resolved.physics);
    let hash = config_hash(config)?;
    let hypotheses = classify(&physics.model);
    let admissibility = admissibility_check(&resolved.initial.theta, grid.weights(), &physics.model, f64::MIN_POSITIVE);
    if !admissibility.passed {
        return Err(RunError::Inadmissible(format!(
            "{} cell(s) at or below zero, K(Θ₀) integral {}, ℓ(Θ₀) integral {:?}",
            admissibility.cells_below_floor.len(),
            admissibility.k_integral,
            admissibility.ell_integral
        )));
    }
    resolved.initial.validate(&grid).map_err(|e| RunError::Inadmissible(e.to_string()))?;
    if let Some(k) = forcing.heat(&grid, 0.0).iter().position(|&g| g < 0.0) {
        return Err(RunError::Inadmissible(format!("heat source negative at node {k}")));
    }

    let functionals = ScalarFunctionals::new(physics.model.clone(), config.material.m_shift)?;
    let integrator = Integrator::new(&grid, &physics, forcing, &config.solver);
    let tol = config.tolerances;
    let plan = &config.output;
    let area = grid.area();
    let rec_of = |s: &FieldState| record(&grid, &physics, &functionals, s, &forcing.heat(&grid, s.t));

    let initial = resolved.initial;
    let rec0 = rec_of(&initial);
    let (mut state, mut dt, mut totals, f0, entropy_initial, mut violation_count, restarted_from) = match &opts.restart {
        None => (
            initial.clone(),
            config.solver.dt0,
            Totals { step: 0, rejections: 0, eps_dissipation: 0.0, work_f: 0.0, work_g: 0.0, theta_min: rec0.theta_min },
            rec0.energy,
            rec0.entropy,
            0,
            None,
        ),
        Some(path) => {
            let text = fs::read_to_string(path).map_err(io_err(path))?;
            let meta: CheckpointMeta = toml::from_str(&text).map_err(|e| RunError::Restart(e.to_string()))?;
            if meta.config_hash != hash {
                return Err(RunError::Restart("checkpoint was written by a different configuration".into()));
            }
            let snap_path = path.parent().unwrap_or(Path::new(".")).join(&meta.state_file);
            let s = state_from_snapshot(&grid, read_snapshot(&snap_path)?)?;
            if s.t != meta.t {
                return Err(RunError::Restart(format!("state time {} does not match sidecar time {}", s.t, meta.t)));
            }
            let totals = Totals {
                step: meta.step,
                rejections: meta.rejections,
                eps_dissipation: meta.eps_dissipation,
                work_f: meta.work_f,
                work_g: meta.work_g,
                theta_min: meta.theta_min,
            };
            (s, meta.next_dt, totals, meta.f0, meta.entropy_initial, meta.violations, Some(meta.t))
        }
    };

    let mut out = opts.out_dir.as_deref().map(Outputs::create).transpose()?;
    let mut rec = rec_of(&state);
    let mut records = vec![rec];
    let mut trajectory = Trajectory::default();
    let sample = |s: &FieldState, r: &DiagnosticsRecord| TrajectorySample { t: s.t, theta: s.theta.clone(), v_l1: r.v_l1, u_norm: r.u_norm };
    trajectory.push(sample(&state, &rec));
    if let Some(o) = out.as_mut() {
        if totals.step % plan.record_every == 0 {
            o.row(&rec)?;
        }
    }
    let mut violations = Vec::new();
    let mut step_log = Vec::new();
    let mut checkpoint_index = 0;

    for stop in config.stop_times() {
        while state.t < stop {
            let (next, report) = integrator
                .step(&state, dt, stop)
                .map_err(|source| RunError::Step { step: totals.step, t: state.t, source })?;
            let next_rec = rec_of(&next);
            totals.step += 1;
            let found = check_step(config, &integrator, &rec, &next_rec, &next, &report, f0, area, totals.step);
            violation_count += found.1.len();
            step_log.push(StepLog {
                step: totals.step,
                t: next.t,
                dt: report.dt,
                rejections: report.rejections,
                coupling_iterations: report.coupling_iterations,
                velocity_iterations: report.velocity_iterations,
                temperature_iterations: report.temperature_iterations,
                energy_residual: found.0[0],
                entropy_residual: found.0[1],
                corner_slack: found.0[2],
                theta_min: next_rec.theta_min,
                passed: found.1.is_empty(),
            });
            violations.extend(found.1);
            totals.rejections += report.rejections;
            totals.eps_dissipation += report.eps_dissipation;
            totals.work_f += report.work_f;
            totals.work_g += report.work_g;
            totals.theta_min = totals.theta_min.min(next_rec.theta_min);
            dt = report.next_dt;
            state = next;
            rec = next_rec;
            records.push(rec);
            trajectory.push(sample(&state, &rec));
            let last = state.t >= config.final_time;
            if let Some(o) = out.as_mut() {
                if totals.step % plan.record_every == 0 || last {
                    o.row(&rec)?;
                }
            }
        }
        if opts.verbose {
            eprintln!("t = {:.6}  steps = {}  F = {:.10e}  S = {:.10e}  min Θ = {:.6e}", state.t, totals.step, rec.energy, rec.entropy, rec.theta_min);
        }
        let Some(o) = out.as_ref() else { continue };
        if let Some(i) = contains_time(&plan.snapshot_times, stop) {
            let dir = o.subdir("snapshots")?;
            write_snapshot(&dir.join(format!("snapshot_{i:04}.bin")), &state_snapshot(&grid, &state))?;
        }
        if contains_time(&plan.checkpoint_times, stop).is_some() && stop < config.final_time {
            let dir = o.subdir("checkpoints")?;
            let state_file = format!("checkpoint_{checkpoint_index:04}.bin");
            write_snapshot(&dir.join(&state_file), &state_snapshot(&grid, &state))?;
            let meta = CheckpointMeta {
                config_hash: hash.clone(),
                t: state.t,
                step: totals.step,
                next_dt: dt,
                f0,
                entropy_initial,
                rejections: totals.rejections,
                violations: violation_count,
                eps_dissipation: totals.eps_dissipation,
                work_f: totals.work_f,
                work_g: totals.work_g,
                theta_min: totals.theta_min,
                state_file,
            };
            let text = toml::to_string(&meta).map_err(ConfigError::from)?;
            let path = dir.join(format!("checkpoint_{checkpoint_index:04}.toml"));
            fs::write(&path, text).map_err(io_err(&path))?;
            checkpoint_index += 1;
        }
    }

    // limit temperature from the entropy over the final unit of time
    let t_end = state.t;
    let tail: Vec<(f64, f64)> = records.iter().filter(|r| r.t >= t_end - 1.0 - 1e-12).map(|r| (r.t, r.entropy)).collect();
    let theta_inf = theta_infinity(&tail, area, &physics.model, tol.entropy).ok();
    let budget = f0 + totals.work_f + totals.work_g - totals.eps_dissipation;
    let theta_hat_infinity = energy_budget_temperature(&physics.model, area, budget)?;
    let mut windows = Vec::new();
    if let Some(ti) = theta_inf {
        let mut t = trajectory.start().ceil();
        while t + 1.0 <= t_end + 1e-12 {
            windows.push(window_metrics(&grid, &trajectory, t, ti.theta_inf)?);
            t += 1.0;
        }
    }

    let summary = RunSummary {
        final_time: t_end,
        steps: totals.step,
        rejections: totals.rejections,
        violations: violation_count,
        f0,
        f_final: rec.energy,
        entropy_initial,
        entropy_final: rec.entropy,
        theta_min: totals.theta_min,
        eps_dissipation: totals.eps_dissipation,
        work_f: totals.work_f,
        work_g: totals.work_g,
        theta_infinity: theta_inf,
        theta_hat_infinity,
        final_window: windows.last().copied(),
    };
    let manifest = RunManifest {
        name: config.name.clone(),
        config_hash: hash,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        restarted_from,
        hypotheses,
        admissibility,
        summary,
        violations,
        step_log,
    };

    if let Some(mut o) = out {
        let csv_path = o.dir.join("diagnostics.csv");
        o.csv.flush().map_err(io_err(&csv_path))?;
        let mut w = String::from(WINDOW_CSV_HEADER);
        w.push('\n');
        for m in &windows {
            w.push_str(&m.csv_row());
            w.push('\n');
        }
        o.write_text("windows.csv", &w)?;
        o.write_text("config.toml", &config.to_toml()?)?;
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        o.write_text("manifest.json", &json)?;
    }

    Ok(RunOutput { manifest, grid, initial, final_state: state, records, trajectory, windows })
}

/// Per-step invariant checks. Returns the energy residual, entropy residual
/// and corner slack alongside any violations.
#[allow(clippy::too_many_arguments)]
fn check_step(
    config: &ScenarioConfig,
    integrator: &Integrator,
    rec_k: &DiagnosticsRecord,
    rec_k1: &DiagnosticsRecord,
    state: &FieldState,
    report: &StepReport,
    f0: f64,
    area: f64,
    step: usize,
) -> ([f64; 3], Vec<Violation>) {
    let tol = config.tolerances;
    let physics = integrator.physics();
    let mut v = Vec::new();
    let mut flag = |check: &str, value: f64, bound: f64| {
        v.push(Violation { step, t: state.t, check: check.to_string(), value, bound });
    };
    if !(rec_k1.theta_min > 0.0) {
        flag("positivity", rec_k1.theta_min, 0.0);
    }
    let energy = energy_balance_residual(rec_k, rec_k1, report);
    let energy_bound = tol.energy * f0.abs();
    if !(energy <= energy_bound) {
        flag("energy", energy, energy_bound);
    }
    let entropy = entropy_balance_residual(rec_k, rec_k1, report.dt);
    let entropy_bound = -tol.entropy * (1.0 + rec_k1.entropy.abs());
    if !(entropy >= entropy_bound) {
        flag("entropy", entropy, entropy_bound);
    }
    let corner = corner_inequality_check(
        rec_k,
        rec_k1,
        report.dt,
        &physics.tensors,
        physics.diffusivity,
        config.material.m_shift,
        area,
        tol.corner,
    );
    if !corner.holds {
        flag("corner", corner.slack, -corner.tol);
    }
    for (name, value) in rec_k1.nonnegative_terms() {
        if !(value >= 0.0) {
            flag(name, value, 0.0);
        }
    }
    if !(rec_k1.p_visc >= rec_k1.p_visc_lower * (1.0 - 1e-12)) {
        flag("P_visc_lower", rec_k1.p_visc, rec_k1.p_visc_lower);
    }
    let chain = bound_chain_check(integrator.grid(), state, tol.chain);
    if !chain.holds {
        flag("chain", chain.llogl, chain.closed);
    }
    ([energy, entropy, corner.slack], v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::builtin;

    #[test]
    fn trivial_scenario_has_no_violations_and_zero_windows() {
        let out = run(&builtin("trivial").unwrap(), &RunOptions::default()).unwrap();
        let m = &out.manifest;
        assert!(m.passed(), "{:?}", m.violations);
        assert!(!out.windows.is_empty());
        for w in &out.windows {
            assert_eq!((w.w_theta_half, w.w_theta_1, w.w_ut, w.u_norm), (0.0, 0.0, 0.0, 0.0));
        }
        assert!((m.summary.theta_infinity.unwrap().theta_inf - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_temperature_cell_is_rejected_before_stepping() {
        let err = run(&builtin("temperature-with-zeros").unwrap(), &RunOptions::default()).unwrap_err();
        assert!(matches!(err, RunError::Inadmissible(_)), "{err}");
    }

    #[test]
    fn hash_ignores_output_dir() {
        let mut a = builtin("trivial").unwrap();
        let h = config_hash(&a).unwrap();
        a.output.dir = PathBuf::from("elsewhere");
        assert_eq!(config_hash(&a).unwrap(), h);
        a.final_time = 2.0;
        assert_ne!(config_hash(&a).unwrap(), h);
    }
}
