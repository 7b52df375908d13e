use super::DiagnosticsRecord;
use crate::grid::Grid;
use crate::integrator::{FieldState, StepReport};
use crate::tensor::ElasticityTensors;
use serde::Serialize;
use std::f64::consts::E;

/// `F(t_{k+1}) − F(t_k) + ε-dissipation − (∫f·v' + ∫g)·dt`; nonpositive
/// up to round-off for the discrete scheme.
pub fn energy_balance_residual(rec_k: &DiagnosticsRecord, rec_k1: &DiagnosticsRecord, step: &StepReport) -> f64 {
    rec_k1.energy - rec_k.energy + step.eps_dissipation - (step.work_f + step.work_g)
}

/// `S(t_{k+1}) − S(t_k) − dt·[P_diff + k_D∫|∇ˢv|²/Θ + P_src]` with the
/// production terms taken at `t_{k+1}`; nonnegative up to round-off.
pub fn entropy_balance_residual(rec_k: &DiagnosticsRecord, rec_k1: &DiagnosticsRecord, dt: f64) -> f64 {
    rec_k1.entropy - rec_k.entropy - dt * (rec_k1.p_diff + rec_k1.p_visc_lower + rec_k1.p_src)
}

/// Terms of the per-step logarithmic-entropy inequality
/// `ΔŜ ≥ dt·[(D/4)T₁ + (k_D/2)T₂ − c₁∫|v|² − c₂] − tol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CornerReport {
    pub delta_s_hat: f64,
    pub t1: f64,
    pub t2: f64,
    pub v_sq: f64,
    pub c1: f64,
    pub c2: f64,
    pub rhs: f64,
    pub tol: f64,
    /// `ΔŜ − rhs`; the check passes when this is `≥ −tol`.
    pub slack: f64,
    pub holds: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn corner_inequality_check(
    rec_k: &DiagnosticsRecord,
    rec_k1: &DiagnosticsRecord,
    dt: f64,
    tensors: &ElasticityTensors,
    diffusivity: f64,
    m: f64,
    area: f64,
    rel_tol: f64,
) -> CornerReport {
    let b2 = tensors.coupling.norm_sq();
    let c1 = if b2 == 0.0 { 0.0 } else { 4.0 * b2 / diffusivity };
    let c2 = 2.0 * m * m * b2 * area / (E * E * tensors.k_d);
    let delta_s_hat = rec_k1.entropy_hat - rec_k.entropy_hat;
    let rhs = dt * (0.25 * diffusivity * rec_k1.t1 + 0.5 * tensors.k_d * rec_k1.t2 - c1 * rec_k1.v_sq - c2);
    let tol = rel_tol * (1.0 + rec_k1.entropy_hat.abs());
    let slack = delta_s_hat - rhs;
    CornerReport { delta_s_hat, t1: rec_k1.t1, t2: rec_k1.t2, v_sq: rec_k1.v_sq, c1, c2, rhs, tol, slack, holds: slack >= -tol }
}

/// The chain of pointwise bounds leading from `∫|∇ˢv| ln(|∇ˢv|+e)` to the
/// weighted dissipation `L2`, each link evaluated with quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainReport {
    /// `∫ s ln(s+e)`.
    pub llogl: f64,
    /// `∫ (s+e) ln(s+e)`.
    pub shifted: f64,
    /// `∫ (s+e)² ln²(Θ+e²)/(Θ+e²) + ∫(Θ+e²)`.
    pub interpolated: f64,
    /// `8∫ln²(Θ+e)s²/(Θ+1) + 8e²∫ln²(Θ+e)/(Θ+e) + ∫(Θ+e²)`.
    pub young: f64,
    /// `8∫ln²(Θ+e)s²/(Θ+1) + 8e²∫(Θ+e) + ∫(Θ+e²)`.
    pub linearized: f64,
    /// `8 L2 + (8e²+1)∫Θ + (8e³+e²)|Ω|`.
    pub closed: f64,
    pub holds: bool,
}

pub fn bound_chain_check(grid: &Grid, state: &FieldState, rel_tol: f64) -> ChainReport {
    let e2 = E * E;
    let theta = &state.theta;
    let s: Vec<f64> = grid.sym_grad(&state.v).iter().map(|m| m.norm()).collect();
    let q = |f: &dyn Fn(usize) -> f64| grid.integrate_map(f);
    let llogl = q(&|k| s[k] * (s[k] + E).ln());
    let shifted = q(&|k| (s[k] + E) * (s[k] + E).ln());
    let tail = q(&|k| theta[k] + e2);
    let interpolated = q(&|k| (s[k] + E).powi(2) * (theta[k] + e2).ln().powi(2) / (theta[k] + e2)) + tail;
    let weighted = 8.0 * q(&|k| (theta[k] + E).ln().powi(2) * s[k] * s[k] / (theta[k] + 1.0));
    let young = weighted + 8.0 * e2 * q(&|k| (theta[k] + E).ln().powi(2) / (theta[k] + E)) + tail;
    let linearized = weighted + 8.0 * e2 * q(&|k| theta[k] + E) + tail;
    let closed = weighted + (8.0 * e2 + 1.0) * grid.integrate(theta) + (8.0 * e2 * E + e2) * grid.area();
    let chain = [llogl, shifted, interpolated, young, linearized, closed];
    let holds = chain.windows(2).all(|w| w[0] <= w[1] + rel_tol * w[1].abs().max(1.0));
    ChainReport { llogl, shifted, interpolated, young, linearized, closed, holds }
}
