//! Manufactured-solution convergence studies.
//!
//! The exact fields are
//! `u* = A sin(ax) sin(by)(cos t, sin t)`, `v* = u*_t` and
//! `Θ* = 1 + γt + w cos(ax) cos t` with `a = π/Lx`, `b = π/Ly`, so `u*, v*`
//! vanish on the boundary and `Θ*` has zero normal derivative. The residual
//! of each equation is added as forcing; γ is the smallest value on a
//! doubling ladder that keeps the heat source nonnegative.

use crate::grid::{Grid, GridSpec, VectorField};
use crate::integrator::{FieldState, Forcing, Integrator, Physics, SolverConfig, StepError};
use crate::scenario::{ConfigError, ScenarioConfig};
use crate::tensor::{SymMatrix2, Tensor4};
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConvergenceError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("need at least 3 levels (got {0})")]
    TooFewLevels(usize),
    #[error("no heat-source offset up to {0} keeps g nonnegative")]
    NoOffset(f64),
    #[error("level {level} failed")]
    Step { level: usize, source: StepError },
}

/// Exact solution and the forcing that produces it.
#[derive(Debug, Clone)]
pub struct Manufactured {
    physics: Physics,
    a: f64,
    b: f64,
    pub amplitude: f64,
    pub wave: f64,
    pub gamma: f64,
}

fn sym_outer(a: [f64; 2], g: [f64; 2]) -> SymMatrix2 {
    SymMatrix2::new(a[0] * g[0], a[1] * g[1], 0.5 * (a[0] * g[1] + a[1] * g[0]))
}

impl Manufactured {
    /// Builds the solution and picks γ from samples on `[0, final_time]`.
    pub fn new(physics: Physics, lx: f64, ly: f64, amplitude: f64, wave: f64, final_time: f64) -> Result<Self, ConvergenceError> {
        let mut m = Self { physics, a: PI / lx, b: PI / ly, amplitude, wave, gamma: 0.0 };
        let (nx, nt) = (41, 81);
        let min_heat = |m: &Self| {
            let mut lo = f64::INFINITY;
            for it in 0..nt {
                let t = final_time * it as f64 / (nt - 1) as f64;
                for i in 0..nx {
                    for j in 0..nx {
                        let (x, y) = (lx * i as f64 / (nx - 1) as f64, ly * j as f64 / (nx - 1) as f64);
                        lo = lo.min(m.heat_at(x, y, t));
                    }
                }
            }
            lo
        };
        let mut gamma = 0.25;
        while min_heat(&m) < 0.0 {
            if gamma > 1e6 {
                return Err(ConvergenceError::NoOffset(gamma));
            }
            m.gamma = gamma;
            gamma *= 2.0;
        }
        Ok(m)
    }

    fn sine(&self, x: f64, y: f64) -> (f64, [f64; 2], [f64; 2], [f64; 2]) {
        let (sx, cx) = (self.a * x).sin_cos();
        let (sy, cy) = (self.b * y).sin_cos();
        let s = self.amplitude * sx * sy;
        let grad = [self.amplitude * self.a * cx * sy, self.amplitude * self.b * sx * cy];
        let sxy = self.amplitude * self.a * self.b * cx * cy;
        // rows of the Hessian
        (s, grad, [-self.a * self.a * s, sxy], [sxy, -self.b * self.b * s])
    }

    /// `div(T:∇ˢ(s·dir))` for the spatial profile `s`.
    fn div_tensor(t: &Tensor4, dir: [f64; 2], hx: [f64; 2], hy: [f64; 2]) -> [f64; 2] {
        let px = t.contract(&sym_outer(dir, hx));
        let py = t.contract(&sym_outer(dir, hy));
        [px.a11 + py.a12, px.a12 + py.a22]
    }

    pub fn theta(&self, x: f64, _y: f64, t: f64) -> f64 {
        1.0 + self.gamma * t + self.wave * (self.a * x).cos() * t.cos()
    }

    /// `(u*, v*)` at a point.
    pub fn displacement_velocity(&self, x: f64, y: f64, t: f64) -> ([f64; 2], [f64; 2]) {
        let (s, ..) = self.sine(x, y);
        let (st, ct) = t.sin_cos();
        ([s * ct, s * st], [-s * st, s * ct])
    }

    pub fn force_at(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let tens = &self.physics.tensors;
        let (s, _, hx, hy) = self.sine(x, y);
        let (st, ct) = t.sin_cos();
        let (du, dv) = ([ct, st], [-st, ct]);
        let visc = Self::div_tensor(&tens.viscosity, dv, hx, hy);
        let elas = Self::div_tensor(&tens.elasticity, du, hx, hy);
        let theta_x = -self.wave * self.a * (self.a * x).sin() * ct;
        let b = &tens.coupling;
        let div_theta_b = [b.a11 * theta_x, b.a12 * theta_x];
        [
            -s * ct - visc[0] - elas[0] + div_theta_b[0],
            -s * st - visc[1] - elas[1] + div_theta_b[1],
        ]
    }

    pub fn heat_at(&self, x: f64, y: f64, t: f64) -> f64 {
        let p = &self.physics;
        let (_, grad, ..) = self.sine(x, y);
        let (st, ct) = t.sin_cos();
        let theta = self.theta(x, y, t);
        let cx = (self.a * x).cos();
        let theta_t = self.gamma - self.wave * cx * st;
        let lap = -self.wave * self.a * self.a * cx * ct;
        let ev = sym_outer([-st, ct], grad);
        p.model.kappa_at(theta) * theta_t - p.diffusivity * lap - p.tensors.viscosity.contract(&ev).dot(&ev)
            + theta * p.tensors.coupling.dot(&ev)
    }

    pub fn state(&self, grid: &Grid, t: f64) -> FieldState {
        let u = grid.sample_vector_dirichlet(|x, y| {
            let (u, _) = self.displacement_velocity(x, y, t);
            (u[0], u[1])
        });
        let v = grid.sample_vector_dirichlet(|x, y| {
            let (_, v) = self.displacement_velocity(x, y, t);
            (v[0], v[1])
        });
        FieldState { u, v, theta: grid.sample(|x, y| self.theta(x, y, t)), t }
    }
}

impl Forcing for Manufactured {
    fn force(&self, grid: &Grid, t: f64) -> VectorField {
        let mut f = VectorField::zeros(grid.len());
        for k in 0..grid.len() {
            let (x, y) = grid.coords(k);
            let v = self.force_at(x, y, t);
            f.x[k] = v[0];
            f.y[k] = v[1];
        }
        f
    }

    fn heat(&self, grid: &Grid, t: f64) -> Vec<f64> {
        grid.sample(|x, y| self.heat_at(x, y, t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    /// Grid refinement with `dt ∝ h²`, errors against the exact solution.
    Spatial,
    /// Step halving on a fixed grid, errors between successive levels.
    Temporal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceOptions {
    /// Nodes per side on the coarsest spatial level.
    pub base_n: usize,
    /// Spatial levels use `dt = dt_coeff·h²`.
    pub dt_coeff: f64,
    pub spatial_final_time: f64,
    /// Nodes per side for the temporal study.
    pub temporal_n: usize,
    /// Coarsest step of the temporal study.
    pub temporal_dt: f64,
    pub temporal_final_time: f64,
    /// Amplitude of `u*`; zero together with `wave = 0` gives the rest state.
    pub amplitude: f64,
    /// Amplitude of the temperature wave in `Θ*`.
    pub wave: f64,
}

impl Default for ConvergenceOptions {
    fn default() -> Self {
        Self {
            base_n: 9,
            dt_coeff: 0.5,
            spatial_final_time: 0.25,
            temporal_n: 17,
            temporal_dt: 0.1,
            temporal_final_time: 0.5,
            amplitude: 1.0,
            wave: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub level: usize,
    pub n: usize,
    pub h: f64,
    pub dt: f64,
    pub steps: usize,
    pub err_u: f64,
    pub err_v: f64,
    pub err_theta: f64,
    /// `√(err_u² + err_v² + err_θ²)`.
    pub error: f64,
    /// `log₂(previous error / error)`.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub kind: StudyKind,
    pub gamma: f64,
    pub rows: Vec<ConvergenceRow>,
    /// Errors decrease strictly from level to level (or are all zero).
    pub monotone: bool,
}

impl ConvergenceTable {
    /// Order across the last halving.
    pub fn observed_order(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.order)
    }

    pub const CSV_HEADER: &'static str = "kind,level,n,h,dt,steps,err_u,err_v,err_theta,error,order";

    pub fn to_csv(&self) -> String {
        let kind = match self.kind {
            StudyKind::Spatial => "spatial",
            StudyKind::Temporal => "temporal",
        };
        let mut s = format!("{}\n", Self::CSV_HEADER);
        for r in &self.rows {
            let order = r.order.map_or(String::new(), |o| format!("{o:e}"));
            s.push_str(&format!(
                "{kind},{},{},{:e},{:e},{},{:e},{:e},{:e},{:e},{order}\n",
                r.level, r.n, r.h, r.dt, r.steps, r.err_u, r.err_v, r.err_theta, r.error
            ));
        }
        s
    }
}

fn l2_diff(grid: &Grid, a: &[f64], b: &[f64]) -> f64 {
    grid.integrate_map(|k| (a[k] - b[k]).powi(2)).sqrt()
}

fn errors(grid: &Grid, s: &FieldState, r: &FieldState) -> [f64; 3] {
    let eu = (l2_diff(grid, &s.u.x, &r.u.x).powi(2) + l2_diff(grid, &s.u.y, &r.u.y).powi(2)).sqrt();
    let ev = (l2_diff(grid, &s.v.x, &r.v.x).powi(2) + l2_diff(grid, &s.v.y, &r.v.y).powi(2)).sqrt();
    [eu, ev, l2_diff(grid, &s.theta, &r.theta)]
}

/// Steps from the exact initial state to `final_time` with a fixed step.
fn solve(
    grid: &Grid,
    physics: &Physics,
    mms: &Manufactured,
    base: &SolverConfig,
    dt: f64,
    final_time: f64,
) -> Result<(FieldState, usize), StepError> {
    let solver = SolverConfig {
        dt0: dt,
        dt_max: dt,
        dt_min: base.dt_min.min(dt * 1e-6),
        dt_growth: 1.0,
        eps_reg: 0.0,
        ..base.clone()
    };
    let integrator = Integrator::new(grid, physics, mms, &solver);
    let mut state = mms.state(grid, 0.0);
    let mut steps = 0;
    while state.t < final_time {
        state = integrator.step(&state, dt, final_time)?.0;
        steps += 1;
    }
    Ok((state, steps))
}

/// Runs a spatial or temporal study with `levels ≥ 3` levels. The config
/// supplies tensors, material, domain and solver settings; the regularization
/// term is switched off.
pub fn convergence_study(
    config: &ScenarioConfig,
    levels: usize,
    kind: StudyKind,
    opts: &ConvergenceOptions,
) -> Result<ConvergenceTable, ConvergenceError> {
    if levels < 3 {
        return Err(ConvergenceError::TooFewLevels(levels));
    }
    let physics = config.resolve()?.physics;
    let (lx, ly) = (config.grid.lx, config.grid.ly);
    let final_time = match kind {
        StudyKind::Spatial => opts.spatial_final_time,
        StudyKind::Temporal => opts.temporal_final_time,
    };
    let mms = Manufactured::new(physics.clone(), lx, ly, opts.amplitude, opts.wave, final_time)?;
    let grid_of = |n: usize| GridSpec { nx: n, ny: n, lx, ly }.build().map_err(ConfigError::from);
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels);
    let push = |rows: &mut Vec<ConvergenceRow>, mut row: ConvergenceRow| {
        row.order = rows.last().map(|p| (p.error / row.error).log2()).filter(|o| o.is_finite());
        rows.push(row);
    };

    match kind {
        StudyKind::Spatial => {
            for level in 0..levels {
                let n = (opts.base_n - 1) * (1 << level) + 1;
                let grid = grid_of(n)?;
                let h = grid.hx.max(grid.hy);
                let dt = opts.dt_coeff * h * h;
                let (state, steps) =
                    solve(&grid, &physics, &mms, &config.solver, dt, final_time).map_err(|source| ConvergenceError::Step { level, source })?;
                let [err_u, err_v, err_theta] = errors(&grid, &state, &mms.state(&grid, state.t));
                let error = (err_u * err_u + err_v * err_v + err_theta * err_theta).sqrt();
                push(&mut rows, ConvergenceRow { level, n, h, dt, steps, err_u, err_v, err_theta, error, order: None });
            }
        }
        StudyKind::Temporal => {
            let grid = grid_of(opts.temporal_n)?;
            let h = grid.hx.max(grid.hy);
            let mut prev: Option<(FieldState, usize)> = None;
            for level in 0..=levels {
                let dt = opts.temporal_dt / (1 << level) as f64;
                let (state, steps) =
                    solve(&grid, &physics, &mms, &config.solver, dt, final_time).map_err(|source| ConvergenceError::Step { level, source })?;
                if let Some((p, prev_steps)) = prev {
                    let [err_u, err_v, err_theta] = errors(&grid, &p, &state);
                    let error = (err_u * err_u + err_v * err_v + err_theta * err_theta).sqrt();
                    let dt = 2.0 * dt;
                    push(&mut rows, ConvergenceRow { level: level - 1, n: grid.nx, h, dt, steps: prev_steps, err_u, err_v, err_theta, error, order: None });
                }
                prev = Some((state, steps));
            }
        }
    }
    let monotone = rows.iter().all(|r| r.error == 0.0) || rows.windows(2).all(|w| w[1].error < w[0].error);
    Ok(ConvergenceTable { kind, gamma: mms.gamma, rows, monotone })
}
