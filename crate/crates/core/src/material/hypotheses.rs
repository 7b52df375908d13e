use super::kappa::{HeatCapacityModel, KappaLaw};
use super::Extended;
use serde::Serialize;

/// Which large-temperature hypotheses on κ hold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HypothesisReport {
    /// liminf_{ξ→∞} κ(ξ) > 0.
    pub liminf_positive: bool,
    /// κ(ξ)·ln ξ → ∞; for n = 2 this is also the planar growth condition.
    pub kappa_log_unbounded: bool,
    /// κ(ξ) → ∞, the growth condition required for n ≥ 3.
    pub kappa_unbounded: bool,
    /// Classification derived from sampling a tabulated tail.
    pub heuristic: bool,
}

impl HypothesisReport {
    /// Growth condition κ·ln^{(3−n)+} ξ → ∞ for dimension n.
    pub fn growth_condition(&self, n: u32) -> bool {
        if n >= 3 {
            self.kappa_unbounded
        } else {
            self.kappa_log_unbounded
        }
    }

    /// At least one of the two hypotheses under which the stabilization
    /// results apply.
    pub fn supports_large_time_theory(&self, n: u32) -> bool {
        self.liminf_positive || self.growth_condition(n)
    }
}

/// Classifies the heat-capacity law (the floor of a regularized model counts).
pub fn classify(model: &HeatCapacityModel) -> HypothesisReport {
    let floored = model.floor().is_some_and(|f| f > 0.0);
    let mut r = match model.law() {
        KappaLaw::Constant { .. } | KappaLaw::DebyeLike { .. } => HypothesisReport {
            liminf_positive: true,
            kappa_log_unbounded: true,
            kappa_unbounded: false,
            heuristic: false,
        },
        KappaLaw::PowerGrowth { omega, .. } => HypothesisReport {
            liminf_positive: *omega >= 0.0,
            kappa_log_unbounded: *omega >= 0.0,
            kappa_unbounded: *omega > 0.0,
            heuristic: false,
        },
        KappaLaw::SlowDecay { .. } => HypothesisReport {
            liminf_positive: false,
            kappa_log_unbounded: true,
            kappa_unbounded: false,
            heuristic: false,
        },
        KappaLaw::Tabulated { points } => {
            // tail is the constant extension of the last sample
            let last = points[points.len() - 1][0];
            let tail: Vec<f64> = (1..=6).map(|k| model.law().eval(last * 10f64.powi(k) + 1.0)).collect();
            let positive = tail.iter().all(|&k| k > 0.0);
            let growing = tail.windows(2).all(|w| w[1] > w[0]);
            HypothesisReport {
                liminf_positive: positive,
                kappa_log_unbounded: positive,
                kappa_unbounded: positive && growing,
                heuristic: true,
            }
        }
    };
    if floored {
        r.liminf_positive = true;
        r.kappa_log_unbounded = true;
    }
    r
}

/// Outcome of the initial-temperature admissibility check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub not_identically_zero: bool,
    pub nonnegative: bool,
    /// Σ |K(Θ₀)| w.
    pub k_integral: f64,
    /// Σ |ℓ(Θ₀)| w, or `None` when some cell hits a divergent ℓ(0).
    pub ell_integral: Option<f64>,
    /// Indices of cells below the configured floor.
    pub cells_below_floor: Vec<usize>,
    pub passed: bool,
}

/// Checks Θ₀ ≢ 0, K(Θ₀) ∈ L¹ and ℓ(Θ₀) ∈ L¹ under the given quadrature weights.
pub fn admissibility_check(
    theta0: &[f64],
    weights: &[f64],
    model: &HeatCapacityModel,
    theta_floor: f64,
) -> AdmissibilityReport {
    let nonnegative = theta0.iter().all(|&t| t >= 0.0);
    let not_identically_zero = theta0.iter().any(|&t| t != 0.0);
    let mut k_integral = 0.0;
    let mut ell_integral = Some(0.0);
    let mut cells_below_floor = Vec::new();
    for (i, (&t, &w)) in theta0.iter().zip(weights).enumerate() {
        if t < theta_floor {
            cells_below_floor.push(i);
        }
        if t < 0.0 {
            continue;
        }
        k_integral += model.k_at(t).abs() * w;
        ell_integral = match (ell_integral, model.ell_at(t)) {
            (Some(acc), Extended::Finite(l)) => Some(acc + l.abs() * w),
            _ => None,
        };
    }
    let passed = nonnegative && not_identically_zero && k_integral.is_finite() && ell_integral.is_some_and(f64::is_finite);
    AdmissibilityReport { not_identically_zero, nonnegative, k_integral, ell_integral, cells_below_floor, passed }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(law: KappaLaw) -> HeatCapacityModel {
        HeatCapacityModel::new(law).unwrap()
    }

    #[test]
    fn classification_examples() {
        let c = classify(&model(KappaLaw::Constant { k0: 1.0 }));
        assert!(c.liminf_positive && c.growth_condition(2));
        let s = classify(&model(KappaLaw::SlowDecay { k0: 1.0, alpha: 0.5 }));
        assert!(!s.liminf_positive && s.kappa_log_unbounded && s.growth_condition(2));
        assert!(!s.growth_condition(3));
        let p = classify(&model(KappaLaw::PowerGrowth { k0: 1.0, omega: 0.3 }));
        assert!(p.liminf_positive && p.kappa_unbounded);
        let t = classify(&model(KappaLaw::Tabulated { points: vec![[0.0, 0.0], [1.0, 1.0]] }));
        assert!(t.heuristic && t.liminf_positive);
    }

    #[test]
    fn admissibility_examples() {
        let w = vec![0.25; 4];
        let c = model(KappaLaw::Constant { k0: 1.0 });
        let with_zero = [1.0, 0.0, 2.0, 1.5];
        let r = admissibility_check(&with_zero, &w, &c, 1e-6);
        assert!(!r.passed && r.ell_integral.is_none());
        assert_eq!(r.cells_below_floor, vec![1]);

        let lin = model(KappaLaw::Tabulated { points: vec![[0.0, 0.0], [1.0, 1.0], [100.0, 100.0]] });
        let r = admissibility_check(&with_zero, &w, &lin, 0.0);
        assert!(r.passed, "{r:?}");

        let r = admissibility_check(&[0.0; 4], &w, &lin, 0.0);
        assert!(!r.passed && !r.not_identically_zero);

        let r = admissibility_check(&[1.0, -0.1, 1.0, 1.0], &w, &lin, 0.0);
        assert!(!r.passed && !r.nonnegative);
    }
}
