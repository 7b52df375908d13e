//! Energy, entropy and regularity functionals evaluated on discrete states.
//!
//! Every integral uses the grid quadrature and every derivative the solver's
//! own operators. Gradient-squared temperature terms are evaluated edgewise
//! (the form in which the Neumann Laplacian integrates by parts), with the
//! nonlinear weight taken at the edge midpoint, except the entropy production
//! `P_diff`, which uses the exact discrete weight `1/(Θ_a Θ_b)`.

mod balances;
mod limits;

pub use balances::{
    corner_inequality_check, energy_balance_residual, entropy_balance_residual, bound_chain_check, ChainReport,
    CornerReport,
};
pub use limits::{
    energy_budget_temperature, theta_infinity, window_metrics, ThetaInfinity, Trajectory, TrajectorySample,
    WindowMetrics, MAX_WINDOW_CADENCE, WINDOW_CSV_HEADER,
};

use crate::grid::Grid;
use crate::integrator::{FieldState, Physics};
use crate::material::{MaterialError, ScalarFunctionals};
use serde::Serialize;
use std::f64::consts::E;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("trajectory covers [{start}, {end}] but [{from}, {to}] was requested")]
    InsufficientCoverage { start: f64, end: f64, from: f64, to: f64 },
    #[error("trajectory gap {gap} exceeds the maximum cadence {max}")]
    CadenceTooCoarse { gap: f64, max: f64 },
    #[error("need at least {need} records, got {got}")]
    TooFewRecords { need: usize, got: usize },
    #[error(transparent)]
    Material(#[from] MaterialError),
}

/// Scalar functionals of one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub kinetic: f64,
    pub elastic: f64,
    pub thermal: f64,
    #[serde(rename = "F")]
    pub energy: f64,
    #[serde(rename = "S")]
    pub entropy: f64,
    #[serde(rename = "S_hat")]
    pub entropy_hat: f64,
    #[serde(rename = "P_diff")]
    pub p_diff: f64,
    #[serde(rename = "P_visc")]
    pub p_visc: f64,
    /// `k_D ∫|∇ˢv|²/Θ`, the lower bound of `P_visc` used in the entropy balance.
    #[serde(rename = "P_visc_lower")]
    pub p_visc_lower: f64,
    #[serde(rename = "P_src")]
    pub p_src: f64,
    #[serde(rename = "L1")]
    pub l1: f64,
    #[serde(rename = "L2")]
    pub l2: f64,
    /// `∫ ln²(Θ+M)|∇Θ|²/(Θ+M)²`.
    #[serde(rename = "T1")]
    pub t1: f64,
    /// `∫ ln²(Θ+M)|∇ˢv|²/(Θ+M)`.
    #[serde(rename = "T2")]
    pub t2: f64,
    pub llogl: f64,
    pub lnsq: f64,
    pub u_norm: f64,
    /// `∫|v|`.
    pub v_l1: f64,
    /// `∫|v|²`.
    pub v_sq: f64,
    pub theta_min: f64,
    /// `∫Θ`.
    pub theta_int: f64,
}

pub const CSV_HEADER: &str = "t,kinetic,elastic,thermal,F,S,S_hat,P_diff,P_visc,P_visc_lower,P_src,L1,L2,T1,T2,llogl,lnsq,u_norm,v_l1,v_sq,theta_min,theta_int";

impl DiagnosticsRecord {
    fn values(&self) -> [f64; 22] {
        [
            self.t,
            self.kinetic,
            self.elastic,
            self.thermal,
            self.energy,
            self.entropy,
            self.entropy_hat,
            self.p_diff,
            self.p_visc,
            self.p_visc_lower,
            self.p_src,
            self.l1,
            self.l2,
            self.t1,
            self.t2,
            self.llogl,
            self.lnsq,
            self.u_norm,
            self.v_l1,
            self.v_sq,
            self.theta_min,
            self.theta_int,
        ]
    }

    /// One CSV row in shortest round-trip formatting.
    pub fn csv_row(&self) -> String {
        self.values().iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(",")
    }

    pub fn write_csv<W: Write>(out: &mut W, records: &[DiagnosticsRecord]) -> std::io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in records {
            writeln!(out, "{}", r.csv_row())?;
        }
        Ok(())
    }

    /// Production terms and their defining lower bounds, for the sign checks.
    pub fn nonnegative_terms(&self) -> [(&'static str, f64); 11] {
        [
            ("kinetic", self.kinetic),
            ("elastic", self.elastic),
            ("thermal", self.thermal),
            ("S_hat", self.entropy_hat),
            ("P_diff", self.p_diff),
            ("P_visc", self.p_visc),
            ("P_src", self.p_src),
            ("L1", self.l1),
            ("L2", self.l2),
            ("llogl", self.llogl),
            ("lnsq", self.lnsq),
        ]
    }
}

/// Evaluates all functionals for one state. `heat` is `g(·, state.t)`.
pub fn record(grid: &Grid, physics: &Physics, functionals: &ScalarFunctionals, state: &FieldState, heat: &[f64]) -> DiagnosticsRecord {
    let tensors = &physics.tensors;
    let model = &physics.model;
    let d = physics.diffusivity;
    let m = functionals.m();
    let theta = &state.theta;

    let ev = grid.sym_grad(&state.v);
    let eu = grid.sym_grad(&state.u);
    let sv: Vec<f64> = ev.iter().map(|e| e.norm_sq()).collect();

    let kinetic = 0.5 * grid.integrate_map(|k| state.v.norm_sq_at(k));
    let elastic = 0.5 * grid.integrate_map(|k| tensors.elasticity.contract(&eu[k]).dot(&eu[k]));
    let thermal = grid.integrate_map(|k| model.k_at(theta[k]));
    let entropy = grid.integrate_map(|k| model.ell_at(theta[k]).expect_finite("entropy of a positive temperature"));
    let entropy_hat = grid.integrate_map(|k| functionals.ell_hat(theta[k]));

    let p_diff = d * grid.edge_gradient_integral(theta, |a, b| 1.0 / (a * b));
    let p_visc = grid.integrate_map(|k| tensors.viscosity.contract(&ev[k]).dot(&ev[k]) / theta[k]);
    let p_visc_lower = tensors.k_d * grid.integrate_map(|k| sv[k] / theta[k]);
    let p_src = grid.integrate_map(|k| heat[k] / theta[k]);

    let l1 = d * grid.edge_gradient_integral(theta, |a, b| {
        let x = 0.5 * (a + b);
        (x + E).ln().powi(2) / (x + 1.0).powi(2)
    });
    let l2 = grid.integrate_map(|k| (theta[k] + E).ln().powi(2) * sv[k] / (theta[k] + 1.0));
    let t1 = grid.edge_gradient_integral(theta, |a, b| {
        let x = 0.5 * (a + b) + m;
        x.ln().powi(2) / (x * x)
    });
    let t2 = grid.integrate_map(|k| (theta[k] + m).ln().powi(2) * sv[k] / (theta[k] + m));
    let llogl = grid.integrate_map(|k| {
        let s = sv[k].sqrt();
        s * (s + E).ln()
    });
    let lnsq = grid.integrate_map(|k| theta[k].ln().powi(2));
    let u_norm = grid.integrate_map(|k| state.u.norm_sq_at(k)).sqrt();

    DiagnosticsRecord {
        t: state.t,
        kinetic,
        elastic,
        thermal,
        energy: kinetic + elastic + thermal,
        entropy,
        entropy_hat,
        p_diff,
        p_visc,
        p_visc_lower,
        p_src,
        l1,
        l2,
        t1,
        t2,
        llogl,
        lnsq,
        u_norm,
        v_l1: grid.integrate_map(|k| state.v.norm_sq_at(k).sqrt()),
        v_sq: grid.integrate_map(|k| state.v.norm_sq_at(k)),
        theta_min: theta.iter().copied().fold(f64::INFINITY, f64::min),
        theta_int: grid.integrate(theta),
    }
}
