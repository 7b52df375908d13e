//! Time stepping of the regularized thermoviscoelastic system.
//!
//! One step advances `(u, v, Θ)` by backward Euler in the velocity and
//! temperature equations with `u' = u + dt·v'`. The elastic force is taken at
//! `u'` (configurable), and the velocity and temperature updates are iterated
//! to a fixed point so the thermal exchange terms of both equations use the
//! same end-of-step temperature. The heat capacity is averaged over
//! `[Θ, Θ']` by default, which makes the discrete energy change telescope
//! exactly into the thermal energy `∫K(Θ)`.

mod forcing;

pub use forcing::{Forcing, ForcingSpec};

use crate::grid::{conjugate_gradient, CgOptions, CgStats, Grid, LinearOperator, ScalarField, SolveError, VectorField};
use crate::material::HeatCapacityModel;
use crate::tensor::{ElasticityTensors, Tensor4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Displacement, velocity and temperature at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub u: VectorField,
    pub v: VectorField,
    pub theta: ScalarField,
    pub t: f64,
}

impl FieldState {
    pub fn at_rest(grid: &Grid, theta: ScalarField) -> Self {
        Self { u: VectorField::zeros(grid.len()), v: VectorField::zeros(grid.len()), theta, t: 0.0 }
    }

    /// Checks shapes, boundary conditions and positivity of Θ.
    pub fn validate(&self, grid: &Grid) -> Result<(), StepError> {
        let n = grid.len();
        if self.u.len() != n || self.v.len() != n || self.theta.len() != n {
            return Err(StepError::Invalid(format!("field shapes do not match the {}x{} grid", grid.nx, grid.ny)));
        }
        for k in (0..n).filter(|&k| grid.is_boundary(k)) {
            if self.u.x[k] != 0.0 || self.u.y[k] != 0.0 || self.v.x[k] != 0.0 || self.v.y[k] != 0.0 {
                return Err(StepError::Invalid(format!("u or v nonzero at boundary node {k}")));
            }
        }
        if let Some(k) = self.theta.iter().position(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(StepError::Invalid(format!("temperature {} at node {k} is not positive", self.theta[k])));
        }
        Ok(())
    }
}

/// How the heat capacity multiplying `Θ_t` is evaluated within a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum HeatCapacityUpdate {
    /// κ(Θ) at the start of the step.
    Lagged,
    /// κ(Θ') at the end of the step, iterated to convergence.
    Picard,
    /// Mean of κ over `[Θ, Θ']`, iterated to convergence.
    #[default]
    Secant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub dt0: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Step growth factor after an accepted, unclamped step.
    pub dt_growth: f64,
    /// Coefficient ε of the higher-order regularization `ε(−Δ)^{2m} v`.
    pub eps_reg: f64,
    pub m: u32,
    pub theta_safety: f64,
    pub cg_rel_tol: f64,
    pub cg_max_iter: Option<usize>,
    /// Take the elastic force at `u + dt·v'` instead of `u`.
    pub implicit_elastic: bool,
    pub heat_capacity: HeatCapacityUpdate,
    /// Relative sup-norm tolerance of the velocity/temperature fixed point.
    pub coupling_tol: f64,
    /// Fixed-point iteration cap; 1 gives the uncoupled sequential update.
    pub coupling_max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt0: 1e-3,
            dt_min: 1e-10,
            dt_max: 0.05,
            dt_growth: 1.1,
            eps_reg: 0.0,
            m: 1,
            theta_safety: 0.5,
            cg_rel_tol: 1e-10,
            cg_max_iter: None,
            implicit_elastic: true,
            heat_capacity: HeatCapacityUpdate::Secant,
            coupling_tol: 1e-10,
            coupling_max_iter: 50,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt0 && self.dt0 <= self.dt_max) {
            return Err(format!(
                "need 0 < dt_min <= dt0 <= dt_max (got {}, {}, {})",
                self.dt_min, self.dt0, self.dt_max
            ));
        }
        if !(self.dt_growth >= 1.0) {
            return Err(format!("dt_growth must be at least 1 (got {})", self.dt_growth));
        }
        if !(self.eps_reg >= 0.0) {
            return Err(format!("eps_reg must be nonnegative (got {})", self.eps_reg));
        }
        if self.eps_reg > 0.0 && self.m < 1 {
            return Err("regularization order m must be at least 1".into());
        }
        if !(self.theta_safety > 0.0 && self.theta_safety < 1.0) {
            return Err(format!("theta_safety must lie in (0, 1) (got {})", self.theta_safety));
        }
        if !(self.cg_rel_tol > 0.0 && self.coupling_tol > 0.0) || self.coupling_max_iter == 0 {
            return Err("solver tolerances must be positive and coupling_max_iter at least 1".into());
        }
        Ok(())
    }

    fn cg(&self, abs_tol: f64) -> CgOptions {
        CgOptions { rel_tol: self.cg_rel_tol, abs_tol, max_iter: self.cg_max_iter }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StepError {
    #[error("linear solve failed: {0}")]
    Solver(#[from] SolveError),
    #[error("time step {dt:e} fell below dt_min (positivity guard active at node {node:?})")]
    TimestepUnderflow { dt: f64, node: Option<usize> },
    #[error("invalid state: {0}")]
    Invalid(String),
}

/// Material data entering the equations.
#[derive(Debug, Clone)]
pub struct Physics {
    pub tensors: ElasticityTensors,
    /// Heat-capacity model actually used in the equations (normally κ_ε).
    pub model: HeatCapacityModel,
    pub diffusivity: f64,
}

/// Bookkeeping of one accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepReport {
    pub dt: f64,
    /// Proposal for the next step.
    pub next_dt: f64,
    pub velocity_iterations: usize,
    pub temperature_iterations: usize,
    pub coupling_iterations: usize,
    pub rejections: usize,
    /// `dt·ε ∫|(−Δ)^m v'|²`.
    pub eps_dissipation: f64,
    /// `dt ∫ f(t')·v'`.
    pub work_f: f64,
    /// `dt ∫ g(t')`.
    pub work_g: f64,
}

/// Why a trial step was not accepted.
#[derive(Debug)]
enum Rejection {
    Guard { dt_limit: f64, node: usize },
    NonPositive { node: usize },
    CouplingStalled,
    Fatal(StepError),
}

impl From<SolveError> for Rejection {
    fn from(e: SolveError) -> Self {
        Rejection::Fatal(StepError::Solver(e))
    }
}

/// `x ↦ x − div(S:∇ˢx) + c·(−Δ_d)^{2m} x` on interior nodes, identity on
/// boundary nodes; vectors are stored as `[x-components, y-components]`.
pub struct VelocityOperator<'a> {
    grid: &'a Grid,
    stiffness: Tensor4,
    reg_coeff: f64,
    reg_power: u32,
}

impl<'a> VelocityOperator<'a> {
    pub fn new(grid: &'a Grid, stiffness: Tensor4, reg_coeff: f64, reg_power: u32) -> Self {
        Self { grid, stiffness, reg_coeff, reg_power }
    }
}

fn split(grid: &Grid, x: &[f64]) -> VectorField {
    let n = grid.len();
    VectorField { x: x[..n].to_vec(), y: x[n..].to_vec() }
}

fn join(v: &VectorField) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * v.len());
    out.extend_from_slice(&v.x);
    out.extend_from_slice(&v.y);
    out
}

impl LinearOperator for VelocityOperator<'_> {
    fn dim(&self) -> usize {
        2 * self.grid.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let g = self.grid;
        let n = g.len();
        let v = split(g, x);
        let d = g.div_tensor_sym_grad(&self.stiffness, &v);
        for k in 0..n {
            if g.is_boundary(k) {
                y[k] = x[k];
                y[n + k] = x[n + k];
            } else {
                y[k] = x[k] - d.x[k];
                y[n + k] = x[n + k] - d.y[k];
            }
        }
        if self.reg_coeff > 0.0 {
            let mut w = v;
            for _ in 0..self.reg_power {
                w = g.laplacian_dirichlet_vec(&w);
            }
            // (−1)^{2m} = 1; boundary entries of w are zero
            for k in 0..n {
                y[k] += self.reg_coeff * w.x[k];
                y[n + k] += self.reg_coeff * w.y[k];
            }
        }
    }
}

/// `δ ↦ W(a ⊙ δ) − D·G δ` where G is the edge Laplacian.
struct TemperatureOperator<'a> {
    edges: &'a [(usize, usize, f64)],
    diag: Vec<f64>,
    diffusivity: f64,
}

fn graph_laplacian(edges: &[(usize, usize, f64)], x: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for &(a, b, c) in edges {
        let flux = c * (x[b] - x[a]);
        out[a] += flux;
        out[b] -= flux;
    }
}

impl LinearOperator for TemperatureOperator<'_> {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        graph_laplacian(self.edges, x, y);
        for k in 0..x.len() {
            y[k] = self.diag[k] * x[k] - self.diffusivity * y[k];
        }
    }
}

/// Owns references to everything a step needs.
pub struct Integrator<'a> {
    grid: &'a Grid,
    physics: &'a Physics,
    forcing: &'a dyn Forcing,
    config: &'a SolverConfig,
    edges: Vec<(usize, usize, f64)>,
    edge_degree: Vec<f64>,
}

/// Output of one trial at a fixed `dt`.
struct Trial {
    state: FieldState,
    report: StepReport,
}

impl<'a> Integrator<'a> {
    pub fn new(grid: &'a Grid, physics: &'a Physics, forcing: &'a dyn Forcing, config: &'a SolverConfig) -> Self {
        let edges: Vec<_> = grid.edges().collect();
        let mut edge_degree = vec![0.0; grid.len()];
        for &(a, b, c) in &edges {
            edge_degree[a] += c;
            edge_degree[b] += c;
        }
        Self { grid, physics, forcing, config, edges, edge_degree }
    }

    pub fn grid(&self) -> &Grid {
        self.grid
    }

    pub fn physics(&self) -> &Physics {
        self.physics
    }

    pub fn config(&self) -> &SolverConfig {
        self.config
    }

    fn stiffness(&self, dt: f64) -> Tensor4 {
        let t = &self.physics.tensors;
        if self.config.implicit_elastic {
            t.viscosity.combine(dt, &t.elasticity, dt * dt)
        } else {
            t.viscosity.combine(dt, &t.elasticity, 0.0)
        }
    }

    /// Right-hand side `v + dt·[div(ℂ:∇ˢu) − div(Θ_x 𝔹) + f]` of the velocity system.
    fn velocity_rhs(&self, state: &FieldState, theta_x: &[f64], force: &VectorField, dt: f64) -> VectorField {
        let g = self.grid;
        let t = &self.physics.tensors;
        let elastic = g.div_tensor_sym_grad(&t.elasticity, &state.u);
        let thermal = g.div_scalar_times(theta_x, &t.coupling);
        let mut rhs = VectorField::zeros(g.len());
        for k in 0..g.len() {
            if g.is_boundary(k) {
                continue;
            }
            rhs.x[k] = state.v.x[k] + dt * (elastic.x[k] - thermal.x[k] + force.x[k]);
            rhs.y[k] = state.v.y[k] + dt * (elastic.y[k] - thermal.y[k] + force.y[k]);
        }
        rhs
    }

    /// Implicit velocity update with the exchange term evaluated at
    /// `theta_x`; `guess` warm-starts the solve and `abs_tol` (if positive)
    /// bounds the residual in absolute terms.
    pub fn velocity_step(
        &self,
        state: &FieldState,
        theta_x: &[f64],
        force: &VectorField,
        dt: f64,
        guess: Option<&VectorField>,
        abs_tol: f64,
    ) -> Result<(VectorField, CgStats, f64), SolveError> {
        let g = self.grid;
        let op = VelocityOperator::new(g, self.stiffness(dt), dt * self.config.eps_reg, 2 * self.config.m);
        let rhs = join(&self.velocity_rhs(state, theta_x, force, dt));
        let x0 = join(guess.unwrap_or(&state.v));
        let mut r0 = vec![0.0; rhs.len()];
        op.apply(&x0, &mut r0);
        for (r, b) in r0.iter_mut().zip(&rhs) {
            *r = b - *r;
        }
        let tol = if abs_tol > 0.0 { abs_tol } else { self.config.cg_rel_tol * norm(&r0) };
        let mut delta = vec![0.0; rhs.len()];
        let stats = conjugate_gradient(&op, &r0, &mut delta, None, &self.config.cg(tol))?;
        let x: Vec<f64> = x0.iter().zip(&delta).map(|(a, b)| a + b).collect();
        let mut v = split(g, &x);
        g.zero_boundary(&mut v);
        Ok((v, stats, tol))
    }

    /// `u' = u + dt·v'`.
    pub fn displacement_step(&self, state: &FieldState, v_new: &VectorField, dt: f64) -> VectorField {
        let mut u = state.u.axpy(dt, v_new);
        self.grid.zero_boundary(&mut u);
        u
    }

    /// Nodal `b = ⟨𝔹, ∇ˢv⟩` and `q = ⟨𝔻:∇ˢv, ∇ˢv⟩`.
    pub fn exchange_and_dissipation(&self, v: &VectorField) -> (ScalarField, ScalarField) {
        let t = &self.physics.tensors;
        let e = self.grid.sym_grad(v);
        let b = e.iter().map(|m| t.coupling.dot(m)).collect();
        let q = e.iter().map(|m| t.viscosity.contract(m).dot(m)).collect();
        (b, q)
    }

    /// Solves `κ̄(Θ'−Θ)/dt = DΔ_N Θ' + q − Θ'b + g` for Θ'.
    #[allow(clippy::too_many_arguments)]
    pub fn temperature_step(
        &self,
        theta: &[f64],
        b: &[f64],
        q: &[f64],
        kbar: &[f64],
        heat: &[f64],
        dt: f64,
        guess: Option<&[f64]>,
        abs_tol: f64,
    ) -> Result<(ScalarField, CgStats, f64), SolveError> {
        let w = self.grid.weights();
        let d = self.physics.diffusivity;
        let n = theta.len();
        let diag: Vec<f64> = (0..n).map(|k| w[k] * (kbar[k] / dt + b[k])).collect();
        let mut lap = vec![0.0; n];
        graph_laplacian(&self.edges, theta, &mut lap);
        let rhs: Vec<f64> = (0..n).map(|k| d * lap[k] + w[k] * (q[k] - theta[k] * b[k] + heat[k])).collect();
        let inv_diag: Vec<f64> = (0..n).map(|k| 1.0 / (diag[k] + d * self.edge_degree[k])).collect();
        let op = TemperatureOperator { edges: &self.edges, diag, diffusivity: d };
        let x0: Vec<f64> = match guess {
            Some(g) => g.iter().zip(theta).map(|(a, b)| a - b).collect(),
            None => vec![0.0; n],
        };
        let mut r0 = vec![0.0; n];
        op.apply(&x0, &mut r0);
        for (r, b) in r0.iter_mut().zip(&rhs) {
            *r = b - *r;
        }
        let tol = if abs_tol > 0.0 { abs_tol } else { self.config.cg_rel_tol * norm(&r0) };
        let mut delta = vec![0.0; n];
        let stats = conjugate_gradient(&op, &r0, &mut delta, Some(&inv_diag), &self.config.cg(tol))?;
        let out = (0..n).map(|k| theta[k] + x0[k] + delta[k]).collect();
        Ok((out, stats, tol))
    }

    /// Largest admissible step for the positivity guard,
    /// `min(dt_max, safety·κ_i/max(0, −b_i))`, with the limiting node.
    pub fn positivity_limit(&self, kappa: &[f64], b: &[f64]) -> (f64, Option<usize>) {
        let mut best = (self.config.dt_max, None);
        for (k, (&kap, &bk)) in kappa.iter().zip(b).enumerate() {
            if bk < 0.0 {
                let lim = self.config.theta_safety * kap / -bk;
                if lim < best.0 {
                    best = (lim, Some(k));
                }
            }
        }
        best
    }

    /// Positivity-guarded step size for the given velocity, using κ_ε(Θ).
    pub fn adaptive_dt(&self, state: &FieldState, v_new: &VectorField) -> Result<f64, StepError> {
        let kappa: Vec<f64> = state.theta.iter().map(|&t| self.physics.model.kappa_at(t)).collect();
        let (b, _) = self.exchange_and_dissipation(v_new);
        let (dt, node) = self.positivity_limit(&kappa, &b);
        if dt < self.config.dt_min {
            return Err(StepError::TimestepUnderflow { dt, node });
        }
        Ok(dt)
    }

    fn kappa_bar(&self, theta: &[f64], theta_new: Option<&[f64]>) -> Vec<f64> {
        let model = &self.physics.model;
        match (self.config.heat_capacity, theta_new) {
            (HeatCapacityUpdate::Lagged, _) | (_, None) => theta.iter().map(|&t| model.kappa_at(t)).collect(),
            (HeatCapacityUpdate::Picard, Some(tn)) => tn.iter().map(|&t| model.kappa_at(t)).collect(),
            (HeatCapacityUpdate::Secant, Some(tn)) => {
                theta.iter().zip(tn).map(|(&a, &b)| model.kappa_mean(a, b)).collect()
            }
        }
    }

    /// One trial at fixed `dt`; never mutates `state`.
    fn attempt(&self, state: &FieldState, dt: f64) -> Result<Trial, Rejection> {
        let t_new = state.t + dt;
        let force = self.forcing.force(self.grid, t_new);
        let heat = self.forcing.heat(self.grid, t_new);
        let mut kbar = self.kappa_bar(&state.theta, None);
        let mut theta_x = state.theta.clone();
        let mut v_prev: Option<VectorField> = None;
        let mut theta_prev: Option<ScalarField> = None;
        let (mut vtol, mut ttol) = (0.0, 0.0);
        let mut report = StepReport { dt, ..Default::default() };

        for it in 1..=self.config.coupling_max_iter {
            let (v_new, vs, vt) = self.velocity_step(state, &theta_x, &force, dt, v_prev.as_ref(), vtol)?;
            vtol = vt;
            report.velocity_iterations += vs.iterations;
            let (b, q) = self.exchange_and_dissipation(&v_new);
            let (limit, node) = self.positivity_limit(&kbar, &b);
            if let Some(node) = node.filter(|_| dt > limit) {
                return Err(Rejection::Guard { dt_limit: limit, node });
            }
            let (theta_new, ts, tt) =
                self.temperature_step(&state.theta, &b, &q, &kbar, &heat, dt, theta_prev.as_deref(), ttol)?;
            ttol = tt;
            report.temperature_iterations += ts.iterations;
            if let Some(node) = theta_new.iter().position(|&t| !(t > 0.0 && t.is_finite())) {
                return Err(Rejection::NonPositive { node });
            }
            let kbar_new = self.kappa_bar(&state.theta, Some(&theta_new));
            let change = rel_sup_change(&theta_x, &theta_new).max(rel_sup_change(&kbar, &kbar_new));
            report.coupling_iterations = it;
            let done = self.config.coupling_max_iter == 1 || change <= self.config.coupling_tol;
            if done {
                return Ok(self.finish(state, v_new, theta_new, &force, &heat, report));
            }
            kbar = kbar_new;
            theta_x = theta_new.clone();
            theta_prev = Some(theta_new);
            v_prev = Some(v_new);
        }
        Err(Rejection::CouplingStalled)
    }

    fn finish(
        &self,
        state: &FieldState,
        v_new: VectorField,
        theta_new: ScalarField,
        force: &VectorField,
        heat: &[f64],
        mut report: StepReport,
    ) -> Trial {
        let g = self.grid;
        let dt = report.dt;
        let u_new = self.displacement_step(state, &v_new, dt);
        report.work_f = dt * g.integrate_map(|k| force.x[k] * v_new.x[k] + force.y[k] * v_new.y[k]);
        report.work_g = dt * g.integrate(heat);
        if self.config.eps_reg > 0.0 {
            let mut w = v_new.clone();
            for _ in 0..self.config.m {
                w = g.laplacian_dirichlet_vec(&w);
            }
            report.eps_dissipation = dt * self.config.eps_reg * g.integrate_map(|k| w.norm_sq_at(k));
        }
        Trial { state: FieldState { u: u_new, v: v_new, theta: theta_new, t: state.t + dt }, report }
    }

    /// Advances `state` by one accepted step of size at most `dt_proposal`,
    /// never stepping past `t_stop`. Rejected trials halve the step (or cut
    /// it to the positivity limit); the input state is never modified.
    pub fn step(&self, state: &FieldState, dt_proposal: f64, t_stop: f64) -> Result<(FieldState, StepReport), StepError> {
        let cfg = self.config;
        let mut dt_try = dt_proposal.min(cfg.dt_max);
        // predict the guard from the current velocity
        if let Ok(limit) = self.adaptive_dt(state, &state.v) {
            dt_try = dt_try.min(limit).max(cfg.dt_min);
        }
        let mut rejections = 0;
        loop {
            let remaining = t_stop - state.t;
            let (dt, clamped) = if remaining <= dt_try * (1.0 + 1e-12) {
                (remaining, true)
            } else if remaining < 2.0 * dt_try {
                (0.5 * remaining, true)
            } else {
                (dt_try, false)
            };
            match self.attempt(state, dt) {
                Ok(Trial { state: new, mut report }) => {
                    report.rejections = rejections;
                    report.next_dt = if clamped { dt_try } else { (dt * cfg.dt_growth).min(cfg.dt_max) };
                    return Ok((new, report));
                }
                Err(Rejection::Fatal(e)) => return Err(e),
                Err(r) => {
                    rejections += 1;
                    let (next, node) = match r {
                        Rejection::Guard { dt_limit, node } => ((0.5 * dt).min(dt_limit), Some(node)),
                        Rejection::NonPositive { node } => (0.5 * dt, Some(node)),
                        _ => (0.5 * dt, None),
                    };
                    if next < cfg.dt_min {
                        return Err(StepError::TimestepUnderflow { dt: next, node });
                    }
                    dt_try = next;
                }
            }
        }
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn rel_sup_change(old: &[f64], new: &[f64]) -> f64 {
    let scale = new.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    old.iter().zip(new).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs())) / scale
}

#[cfg(test)]
mod tests;
