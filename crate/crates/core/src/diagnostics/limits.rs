use super::DiagnosticsError;
use crate::grid::{Grid, ScalarField};
use crate::material::{ell_inverse, HeatCapacityModel};
use serde::Serialize;

/// State data retained for time-window integrals.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub theta: ScalarField,
    /// `∫|u_t|`.
    pub v_l1: f64,
    pub u_norm: f64,
}

/// Time-ordered samples with a maximum allowed spacing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn push(&mut self, s: TrajectorySample) {
        debug_assert!(self.samples.last().is_none_or(|l| l.t < s.t));
        self.samples.push(s);
    }

    pub fn start(&self) -> f64 {
        self.samples.first().map_or(f64::NAN, |s| s.t)
    }

    pub fn end(&self) -> f64 {
        self.samples.last().map_or(f64::NAN, |s| s.t)
    }

    /// Trapezoid rule for `∫_a^b φ(sample) dt` with linear interpolation of
    /// the integrand at the window ends.
    fn integrate<F: Fn(&TrajectorySample) -> f64>(&self, a: f64, b: f64, max_gap: f64, f: F) -> Result<f64, DiagnosticsError> {
        let s = &self.samples;
        if s.len() < 2 || self.start() > a || self.end() < b - 1e-12 {
            return Err(DiagnosticsError::InsufficientCoverage { start: self.start(), end: self.end(), from: a, to: b });
        }
        let vals: Vec<f64> = s.iter().map(&f).collect();
        let at = |t: f64| -> f64 {
            let i = s.partition_point(|x| x.t <= t).clamp(1, s.len() - 1);
            let (t0, t1) = (s[i - 1].t, s[i].t);
            let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
            (1.0 - w) * vals[i - 1] + w * vals[i]
        };
        let b = b.min(self.end());
        let mut knots = vec![(a, at(a))];
        for (x, v) in s.iter().zip(&vals) {
            if x.t > a && x.t < b {
                knots.push((x.t, *v));
            }
        }
        knots.push((b, at(b)));
        let mut total = 0.0;
        for w in knots.windows(2) {
            let gap = w[1].0 - w[0].0;
            if gap > max_gap + 1e-12 {
                return Err(DiagnosticsError::CadenceTooCoarse { gap, max: max_gap });
            }
            total += 0.5 * gap * (w[0].1 + w[1].1);
        }
        Ok(total)
    }

    fn interpolate<F: Fn(&TrajectorySample) -> f64>(&self, t: f64, f: F) -> f64 {
        let s = &self.samples;
        if s.len() < 2 {
            return s.first().map_or(f64::NAN, f);
        }
        let i = s.partition_point(|x| x.t <= t).clamp(1, s.len() - 1);
        let (t0, t1) = (s[i - 1].t, s[i].t);
        let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        (1.0 - w) * f(&s[i - 1]) + w * f(&s[i])
    }
}

/// Window integrals over `[t, t+1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowMetrics {
    pub t: f64,
    /// `∫ₜ^{t+1}∫|Θ−Θ∞|^½`.
    pub w_theta_half: f64,
    /// `∫ₜ^{t+1}∫|Θ−Θ∞|`.
    pub w_theta_1: f64,
    /// `∫ₜ^{t+1}∫|u_t|`.
    pub w_ut: f64,
    /// `‖u(·,t)‖_{L²}`.
    pub u_norm: f64,
    pub theta_inf: f64,
}

pub const WINDOW_CSV_HEADER: &str = "t,w_theta_half,w_theta_1,w_ut,u_norm,theta_inf";

impl WindowMetrics {
    pub fn csv_row(&self) -> String {
        format!("{:e},{:e},{:e},{:e},{:e},{:e}", self.t, self.w_theta_half, self.w_theta_1, self.w_ut, self.u_norm, self.theta_inf)
    }
}

/// Largest sample spacing accepted for window integrals.
pub const MAX_WINDOW_CADENCE: f64 = 0.05;

pub fn window_metrics(grid: &Grid, traj: &Trajectory, t: f64, theta_inf: f64) -> Result<WindowMetrics, DiagnosticsError> {
    let (a, b) = (t, t + 1.0);
    let cad = MAX_WINDOW_CADENCE;
    let w_theta_half = traj.integrate(a, b, cad, |s| grid.integrate_map(|k| (s.theta[k] - theta_inf).abs().sqrt()))?;
    let w_theta_1 = traj.integrate(a, b, cad, |s| grid.integrate_map(|k| (s.theta[k] - theta_inf).abs()))?;
    let w_ut = traj.integrate(a, b, cad, |s| s.v_l1)?;
    let u_norm = traj.interpolate(t, |s| s.u_norm);
    Ok(WindowMetrics { t, w_theta_half, w_theta_1, w_ut, u_norm, theta_inf })
}

/// Limit temperature estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaInfinity {
    /// Mean of `S/|Ω|` over the window.
    pub l: f64,
    /// `ℓ⁻¹(L)`.
    pub theta_inf: f64,
    /// Whether S was nondecreasing over the window within tolerance.
    pub converged: bool,
}

/// `L` and `Θ∞ = ℓ⁻¹(L)` from `(t, S)` pairs near the final time.
pub fn theta_infinity(window: &[(f64, f64)], area: f64, model: &HeatCapacityModel, rel_tol: f64) -> Result<ThetaInfinity, DiagnosticsError> {
    if window.len() < 10 {
        return Err(DiagnosticsError::TooFewRecords { need: 10, got: window.len() });
    }
    let l = window.iter().map(|(_, s)| s / area).sum::<f64>() / window.len() as f64;
    let converged = window.windows(2).all(|w| w[1].1 >= w[0].1 - rel_tol * (1.0 + w[0].1.abs()));
    let theta_inf = ell_inverse(model, l)?;
    Ok(ThetaInfinity { l, theta_inf, converged })
}

/// Solves `K(Θ̂)·|Ω| = budget` for the uniform temperature holding all the
/// energy, by bisection on the increasing primitive K.
pub fn energy_budget_temperature(model: &HeatCapacityModel, area: f64, budget: f64) -> Result<f64, DiagnosticsError> {
    let target = budget / area;
    if !(target > 0.0) {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while model.k_at(hi) < target {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(DiagnosticsError::Material(crate::material::MaterialError::InvalidParameter(format!(
                "energy budget {budget} exceeds the range of K"
            ))));
        }
    }
    while hi - lo > 1e-14 * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if model.k_at(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
