use super::quadrature::{adaptive_simpson, gauss_legendre5};
use super::{Extended, MaterialError};
use serde::{Deserialize, Serialize};
use std::f64::consts::{E, LN_2};

/// Heat-capacity law κ(ξ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum KappaLaw {
    /// κ ≡ k0.
    Constant { k0: f64 },
    /// κ(ξ) = k0 (1+ξ)^ω.
    PowerGrowth { k0: f64, omega: f64 },
    /// κ(ξ) = k0 ξ³ / (ξ³ + ξ_D³).
    DebyeLike { k0: f64, xi_d: f64 },
    /// κ(ξ) = k0 / ln^α(e + ξ), α ∈ (0, 1).
    SlowDecay { k0: f64, alpha: f64 },
    /// Piecewise-linear interpolation of `(ξ, κ)` samples; the first sample
    /// sits at ξ = 0 and the last value is extended constantly.
    Tabulated { points: Vec<[f64; 2]> },
}

impl KappaLaw {
    pub fn validate(&self) -> Result<(), MaterialError> {
        let bad = |s: String| Err(MaterialError::InvalidParameter(s));
        match self {
            KappaLaw::Constant { k0 } if !(*k0 > 0.0) => bad(format!("Constant k0 = {k0} must be > 0")),
            KappaLaw::PowerGrowth { k0, omega } if !(*k0 > 0.0) || !omega.is_finite() => {
                bad(format!("PowerGrowth needs k0 > 0 and finite omega (k0 = {k0}, omega = {omega})"))
            }
            KappaLaw::DebyeLike { k0, xi_d } if !(*k0 > 0.0) || !(*xi_d > 0.0) => {
                bad(format!("DebyeLike needs k0 > 0 and xi_d > 0 (k0 = {k0}, xi_d = {xi_d})"))
            }
            KappaLaw::SlowDecay { k0, alpha } if !(*k0 > 0.0) || !(*alpha > 0.0 && *alpha < 1.0) => {
                bad(format!("SlowDecay needs k0 > 0 and alpha in (0,1) (k0 = {k0}, alpha = {alpha})"))
            }
            KappaLaw::Tabulated { points } => {
                if points.len() < 2 {
                    return bad("Tabulated needs at least two samples".into());
                }
                if points[0][0] != 0.0 {
                    return bad("Tabulated samples must start at xi = 0".into());
                }
                for w in points.windows(2) {
                    if !(w[1][0] > w[0][0]) {
                        return bad("Tabulated abscissae must be strictly increasing".into());
                    }
                }
                for (i, p) in points.iter().enumerate() {
                    if !(p[1] >= 0.0) || (i > 0 && !(p[1] > 0.0)) {
                        return bad(format!("Tabulated kappa must be > 0 for xi > 0 (sample {i})"));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn eval(&self, xi: f64) -> f64 {
        match self {
            KappaLaw::Constant { k0 } => *k0,
            KappaLaw::PowerGrowth { k0, omega } => k0 * (1.0 + xi).powf(*omega),
            KappaLaw::DebyeLike { k0, xi_d } => {
                let c = xi * xi * xi;
                k0 * c / (c + xi_d * xi_d * xi_d)
            }
            KappaLaw::SlowDecay { k0, alpha } => k0 / (E + xi).ln().powf(*alpha),
            KappaLaw::Tabulated { points } => {
                let last = points[points.len() - 1];
                if xi >= last[0] {
                    return last[1];
                }
                let k = points.partition_point(|p| p[0] <= xi);
                let (a, b) = (points[k - 1], points[k]);
                let s = (xi - a[0]) / (b[0] - a[0]);
                a[1] + s * (b[1] - a[1])
            }
        }
    }

    fn knots(&self) -> Vec<f64> {
        match self {
            KappaLaw::Tabulated { points } => points.iter().map(|p| p[0]).collect(),
            _ => Vec::new(),
        }
    }
}

/// Smallest and largest dyadic breakpoint exponents of the cumulative tables.
const TABLE_MIN_EXP: i32 = -40;
const TABLE_MAX_EXP: i32 = 80;
const TABLE_TOL: f64 = 1e-13;
const QUERY_TOL: f64 = 1e-12;

/// A heat-capacity law with an optional floor (κ_ε = max(κ, ε)) and eagerly
/// built cumulative tables for K and ℓ at dyadic breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatCapacityModel {
    law: KappaLaw,
    floor: Option<f64>,
    /// K(2^k) for k = TABLE_MIN_EXP..=TABLE_MAX_EXP.
    k_table: Vec<f64>,
    /// ℓ(2^k) for the same k.
    ell_table: Vec<f64>,
    ell_zero: Extended,
}

impl HeatCapacityModel {
    pub fn new(law: KappaLaw) -> Result<Self, MaterialError> {
        law.validate()?;
        Ok(Self::build(law, None))
    }

    fn build(law: KappaLaw, floor: Option<f64>) -> Self {
        let mut model = Self { law, floor, k_table: Vec::new(), ell_table: Vec::new(), ell_zero: Extended::NegInfinity };
        let n = (TABLE_MAX_EXP - TABLE_MIN_EXP + 1) as usize;
        let x0 = 2f64.powi(TABLE_MIN_EXP);
        let mut k_table = Vec::with_capacity(n);
        k_table.push(model.integrate_kappa(0.0, x0, TABLE_TOL));
        for e in TABLE_MIN_EXP..TABLE_MAX_EXP {
            let a = 2f64.powi(e);
            let prev = *k_table.last().unwrap();
            k_table.push(prev + model.integrate_kappa(a, 2.0 * a, TABLE_TOL));
        }
        // ℓ in log variables: ℓ(2^k) = ∫_0^{k ln 2} κ(e^s) ds
        let zero_idx = (-TABLE_MIN_EXP) as usize;
        let mut ell_table = vec![0.0; n];
        for i in (zero_idx + 1)..n {
            let e = i as i32 + TABLE_MIN_EXP;
            ell_table[i] = ell_table[i - 1] + model.integrate_log(f64::from(e - 1) * LN_2, f64::from(e) * LN_2, TABLE_TOL);
        }
        for i in (0..zero_idx).rev() {
            let e = i as i32 + TABLE_MIN_EXP;
            ell_table[i] = ell_table[i + 1] - model.integrate_log(f64::from(e) * LN_2, f64::from(e + 1) * LN_2, TABLE_TOL);
        }
        model.ell_zero = if model.kappa_at(0.0) > 0.0 {
            Extended::NegInfinity
        } else {
            let tail = gauss_legendre5(&|s: f64| model.kappa_at(s) / s, 0.0, x0);
            Extended::Finite(ell_table[0] - tail)
        };
        model.k_table = k_table;
        model.ell_table = ell_table;
        model
    }

    pub fn law(&self) -> &KappaLaw {
        &self.law
    }

    /// Floor ε of a regularized model.
    pub fn floor(&self) -> Option<f64> {
        self.floor
    }

    /// κ without argument checking (ξ ≥ 0 assumed).
    #[inline]
    pub fn kappa_at(&self, xi: f64) -> f64 {
        let k = self.law.eval(xi);
        match self.floor {
            Some(eps) => k.max(eps),
            None => k,
        }
    }

    pub fn kappa(&self, xi: f64) -> Result<f64, MaterialError> {
        check_nonneg(xi)?;
        Ok(self.kappa_at(xi))
    }

    /// `true` when the floor cannot be active anywhere on [a, b].
    fn floor_inactive(&self, a: f64, b: f64) -> bool {
        let Some(eps) = self.floor else { return true };
        match self.law {
            KappaLaw::Constant { k0 } => k0 >= eps,
            KappaLaw::PowerGrowth { k0, omega } => {
                let at = if omega >= 0.0 { a } else { b };
                k0 * (1.0 + at).powf(omega) >= eps
            }
            _ => false,
        }
    }

    fn integrate_kappa(&self, a: f64, b: f64, tol: f64) -> f64 {
        if a == b {
            return 0.0;
        }
        if self.floor_inactive(a.min(b), a.max(b)) {
            match self.law {
                KappaLaw::Constant { k0 } => return k0 * (b - a),
                KappaLaw::PowerGrowth { k0, omega } if (omega + 1.0).abs() > 1e-12 => {
                    let p = omega + 1.0;
                    return k0 * ((1.0 + b).powf(p) - (1.0 + a).powf(p)) / p;
                }
                KappaLaw::PowerGrowth { k0, .. } => return k0 * ((1.0 + b).ln() - (1.0 + a).ln()),
                _ => {}
            }
        }
        self.piecewise(|x| self.kappa_at(x), a, b, tol)
    }

    /// `∫_{s_a}^{s_b} κ(e^s) ds`.
    fn integrate_log(&self, sa: f64, sb: f64, tol: f64) -> f64 {
        if sa == sb {
            return 0.0;
        }
        if self.floor_inactive(sa.min(sb).exp(), sa.max(sb).exp()) {
            if let KappaLaw::Constant { k0 } = self.law {
                return k0 * (sb - sa);
            }
        }
        let knots: Vec<f64> = self.law.knots().into_iter().filter(|&x| x > 0.0).map(f64::ln).collect();
        piecewise_with(&knots, |s: f64| self.kappa_at(s.exp()), sa, sb, tol)
    }

    /// Adaptive Simpson split at tabulation knots.
    fn piecewise<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64, tol: f64) -> f64 {
        piecewise_with(&self.law.knots(), f, a, b, tol)
    }

    /// `K(ξ) = ∫_0^ξ κ`.
    pub fn k_of(&self, xi: f64) -> Result<f64, MaterialError> {
        check_nonneg(xi)?;
        Ok(self.k_at(xi))
    }

    #[inline]
    pub fn k_at(&self, xi: f64) -> f64 {
        if self.floor_inactive(0.0, xi) {
            match self.law {
                KappaLaw::Constant { k0 } => return k0 * xi,
                KappaLaw::PowerGrowth { .. } => return self.integrate_kappa(0.0, xi, QUERY_TOL),
                _ => {}
            }
        }
        let x0 = 2f64.powi(TABLE_MIN_EXP);
        if xi <= x0 {
            return self.integrate_kappa(0.0, xi, QUERY_TOL);
        }
        let (i, base) = self.bracket(xi);
        self.k_table[i] + self.integrate_kappa(base, xi, QUERY_TOL)
    }

    /// `∫_a^b κ` computed directly (no table differencing).
    pub fn kappa_integral(&self, a: f64, b: f64) -> f64 {
        self.integrate_kappa(a, b, TABLE_TOL)
    }

    /// Mean of κ over the interval between `a` and `b`; κ(a) when they agree.
    pub fn kappa_mean(&self, a: f64, b: f64) -> f64 {
        if a == b {
            return self.kappa_at(a);
        }
        if let (KappaLaw::Constant { k0 }, true) = (&self.law, self.floor_inactive(a, b)) {
            return *k0;
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        self.piecewise(|x| self.kappa_at(x), lo, hi, TABLE_TOL) / (hi - lo)
    }

    /// `ℓ(ξ) = ∫_1^ξ κ(σ)/σ dσ`; `NegInfinity` at ξ = 0 when the integral diverges.
    pub fn ell_of(&self, xi: f64) -> Result<Extended, MaterialError> {
        check_nonneg(xi)?;
        Ok(self.ell_at(xi))
    }

    pub fn ell_at(&self, xi: f64) -> Extended {
        if xi == 0.0 {
            return self.ell_zero;
        }
        if let (KappaLaw::Constant { k0 }, true) = (&self.law, self.floor_inactive(0.0, xi)) {
            return Extended::Finite(k0 * xi.ln());
        }
        let s = xi.ln();
        let x0 = 2f64.powi(TABLE_MIN_EXP);
        if xi < x0 {
            return Extended::Finite(self.ell_table[0] - self.integrate_log(s, f64::from(TABLE_MIN_EXP) * LN_2, QUERY_TOL));
        }
        let (i, base) = self.bracket(xi);
        Extended::Finite(self.ell_table[i] + self.integrate_log(base.ln(), s, QUERY_TOL))
    }

    /// Value of ℓ at 0 (finite or divergent).
    pub fn ell_zero(&self) -> Extended {
        self.ell_zero
    }

    /// Index and value of the largest dyadic breakpoint not exceeding ξ.
    fn bracket(&self, xi: f64) -> (usize, f64) {
        let e = (xi.log2().floor() as i32).clamp(TABLE_MIN_EXP, TABLE_MAX_EXP);
        let mut e = e;
        // guard against log2 rounding at exact powers of two
        while e > TABLE_MIN_EXP && 2f64.powi(e) > xi {
            e -= 1;
        }
        ((e - TABLE_MIN_EXP) as usize, 2f64.powi(e))
    }
}

fn piecewise_with<F: Fn(f64) -> f64>(knots: &[f64], f: F, a: f64, b: f64, tol: f64) -> f64 {
    let (lo, hi, sign) = if a <= b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut total = 0.0;
    let mut start = lo;
    for &k in knots.iter().filter(|&&k| k > lo && k < hi) {
        total += adaptive_simpson(&f, start, k, tol);
        start = k;
    }
    total += adaptive_simpson(&f, start, hi, tol);
    sign * total
}

fn check_nonneg(xi: f64) -> Result<(), MaterialError> {
    if xi >= 0.0 {
        Ok(())
    } else {
        Err(MaterialError::NegativeArgument(xi))
    }
}

/// κ_ε = max(κ, ε).
pub fn regularize_kappa(model: &HeatCapacityModel, eps: f64) -> Result<HeatCapacityModel, MaterialError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(MaterialError::InvalidEpsilon(eps));
    }
    let floor = Some(model.floor.map_or(eps, |f| f.max(eps)));
    Ok(HeatCapacityModel::build(model.law.clone(), floor))
}
