use super::kappa::HeatCapacityModel;
use super::quadrature::adaptive_simpson;
use super::{Extended, KappaLaw, MaterialError};

/// Default shift M = e⁴ of the logarithmic entropy.
pub const DEFAULT_M: f64 = 54.598_150_033_144_236;

const QUAD_TOL: f64 = 1e-12;
const HAT_TABLE_MAX_EXP: i32 = 60;

fn check_m(m: f64) -> Result<(), MaterialError> {
    // accept e^4 computed with one ulp of rounding either way
    if m >= DEFAULT_M * (1.0 - 4.0 * f64::EPSILON) {
        Ok(())
    } else {
        Err(MaterialError::InvalidM(m))
    }
}

impl HeatCapacityModel {
    /// `ℓ̂(ξ; M) = ∫_0^ξ ln²(σ+M) κ(σ)/(σ+M) dσ` by direct quadrature.
    pub fn ell_hat_of(&self, xi: f64, m: f64) -> Result<f64, MaterialError> {
        check_m(m)?;
        if xi < 0.0 {
            return Err(MaterialError::NegativeArgument(xi));
        }
        Ok(adaptive_simpson(&|s: f64| hat_density(self, s, m), 0.0, xi, QUAD_TOL))
    }

    /// `Λ(ξ) = ∫_1^ξ κ(σ) max{1, 1/σ} dσ`, which equals ℓ below 1 and
    /// K(ξ) − K(1) above.
    pub fn lambda_of(&self, xi: f64) -> Result<Extended, MaterialError> {
        if xi < 0.0 {
            return Err(MaterialError::NegativeArgument(xi));
        }
        if xi < 1.0 {
            Ok(self.ell_at(xi))
        } else {
            Ok(Extended::Finite(self.kappa_integral(1.0, xi)))
        }
    }

    /// `K^(φ)(ξ) = ∫_0^ξ κ(σ) φ'(σ) dσ`.
    pub fn k_phi_of(&self, xi: f64, phi_prime: &dyn Fn(f64) -> f64) -> Result<f64, MaterialError> {
        if xi < 0.0 {
            return Err(MaterialError::NegativeArgument(xi));
        }
        Ok(adaptive_simpson(&|s: f64| self.kappa_at(s) * phi_prime(s), 0.0, xi, QUAD_TOL))
    }

    /// `ℓ^(M)(ξ) = ∫_1^ξ ρ^(M)(σ) κ(σ)/σ dσ` with the piecewise-linear cutoff
    /// ρ ≡ 1 on [0, M], 1 − (σ − M) on [M, M+1], 0 beyond.
    pub fn ell_m_of(&self, xi: f64, m: f64) -> Result<Extended, MaterialError> {
        if !(m > 1.0) {
            return Err(MaterialError::InvalidCutoff(m));
        }
        if xi < 0.0 {
            return Err(MaterialError::NegativeArgument(xi));
        }
        if xi <= m {
            return Ok(self.ell_at(xi));
        }
        let base = self.ell_at(m).expect_finite("ell(M)");
        let top = xi.min(m + 1.0);
        let ramp = adaptive_simpson(&|s: f64| (1.0 - (s - m)) * self.kappa_at(s) / s, m, top, QUAD_TOL);
        Ok(Extended::Finite(base + ramp))
    }
}

#[inline]
fn hat_density(model: &HeatCapacityModel, s: f64, m: f64) -> f64 {
    let x = s + m;
    let l = x.ln();
    l * l * model.kappa_at(s) / x
}

/// Scalar functionals K, ℓ, ℓ̂(·; M) and Λ bound to one model and one M,
/// with ℓ̂ tabulated at dyadic breakpoints for fast repeated evaluation.
#[derive(Debug, Clone)]
pub struct ScalarFunctionals {
    model: HeatCapacityModel,
    m: f64,
    /// ℓ̂(2^k) for k = 0..=HAT_TABLE_MAX_EXP, plus ℓ̂(1) at index 0.
    hat_table: Vec<f64>,
}

impl ScalarFunctionals {
    pub fn new(model: HeatCapacityModel, m: f64) -> Result<Self, MaterialError> {
        check_m(m)?;
        let mut hat_table = Vec::with_capacity(HAT_TABLE_MAX_EXP as usize + 1);
        hat_table.push(adaptive_simpson(&|s: f64| hat_density(&model, s, m), 0.0, 1.0, 1e-13));
        for e in 0..HAT_TABLE_MAX_EXP {
            let a = 2f64.powi(e);
            let prev = *hat_table.last().unwrap();
            hat_table.push(prev + adaptive_simpson(&|s: f64| hat_density(&model, s, m), a, 2.0 * a, 1e-13));
        }
        Ok(Self { model, m, hat_table })
    }

    pub fn model(&self) -> &HeatCapacityModel {
        &self.model
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    #[inline]
    pub fn k(&self, xi: f64) -> f64 {
        self.model.k_at(xi)
    }

    #[inline]
    pub fn ell(&self, xi: f64) -> Extended {
        self.model.ell_at(xi)
    }

    pub fn lambda(&self, xi: f64) -> Result<Extended, MaterialError> {
        self.model.lambda_of(xi)
    }

    /// ℓ̂(ξ; M) for ξ ≥ 0.
    pub fn ell_hat(&self, xi: f64) -> f64 {
        let m = self.m;
        if let KappaLaw::Constant { k0 } = self.model.law() {
            if self.model.floor().is_none_or(|f| f <= *k0) {
                let a = (xi + m).ln();
                let b = m.ln();
                return k0 * (a * a * a - b * b * b) / 3.0;
            }
        }
        let f = |s: f64| hat_density(&self.model, s, m);
        if xi <= 1.0 {
            return adaptive_simpson(&f, 0.0, xi, QUAD_TOL);
        }
        let e = (xi.log2().floor() as i32).clamp(0, HAT_TABLE_MAX_EXP);
        let mut e = e;
        while e > 0 && 2f64.powi(e) > xi {
            e -= 1;
        }
        let base = 2f64.powi(e);
        self.hat_table[e as usize] + adaptive_simpson(&f, base, xi, QUAD_TOL)
    }
}

/// Inverse of the strictly increasing entropy density ℓ by bisection on a
/// geometrically expanded bracket.
pub fn ell_inverse(model: &HeatCapacityModel, z: f64) -> Result<f64, MaterialError> {
    if let Extended::Finite(l0) = model.ell_zero() {
        if z < l0 {
            return Err(MaterialError::BelowRange { value: z, infimum: l0 });
        }
        if z == l0 {
            return Ok(0.0);
        }
    }
    let ell = |x: f64| model.ell_at(x).expect_finite("ell on (0, inf)");
    let (mut lo, mut hi) = (1.0_f64, 1.0_f64);
    if z >= 0.0 {
        while ell(hi) < z {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(MaterialError::InvalidParameter(format!("entropy value {z} out of range")));
            }
        }
    } else {
        while ell(lo) > z {
            hi = lo;
            lo *= 0.5;
            if lo == 0.0 {
                return Ok(0.0);
            }
        }
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-12 * hi.min(1.0) || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if ell(mid) < z {
            lo = mid;
        } else {
            hi = mid;
        }
    }
}
