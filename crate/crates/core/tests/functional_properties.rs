use proptest::prelude::*;
use std::f64::consts::E;
use tvsim::material::{ell_inverse, regularize_kappa, HeatCapacityModel, KappaLaw, ScalarFunctionals, DEFAULT_M};

fn law() -> impl Strategy<Value = KappaLaw> {
    prop_oneof![
        (0.1..5.0f64).prop_map(|k0| KappaLaw::Constant { k0 }),
        (0.1..5.0f64, 0.0..1.5f64).prop_map(|(k0, omega)| KappaLaw::PowerGrowth { k0, omega }),
        (0.1..5.0f64, 0.1..5.0f64).prop_map(|(k0, xi_d)| KappaLaw::DebyeLike { k0, xi_d }),
        (0.1..5.0f64, 0.05..0.95f64).prop_map(|(k0, alpha)| KappaLaw::SlowDecay { k0, alpha }),
    ]
}

/// Log-uniform sample on `[1e-3, 1e6]`.
fn xi() -> impl Strategy<Value = f64> {
    (-3.0..6.0f64).prop_map(|e| 10f64.powf(e))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn primitives_are_increasing(law in law(), a in xi(), b in xi()) {
        prop_assume!((a - b).abs() > 1e-6 * a.max(b));
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let model = HeatCapacityModel::new(law).unwrap();
        prop_assert!(model.k_at(lo) < model.k_at(hi));
        if let (Some(l0), Some(l1)) = (model.ell_at(lo).finite(), model.ell_at(hi).finite()) {
            prop_assert!(l0 < l1);
        }
        if let (Some(l0), Some(l1)) = (model.lambda_of(lo).unwrap().finite(), model.lambda_of(hi).unwrap().finite()) {
            prop_assert!(l0 < l1);
        }
        let f = ScalarFunctionals::new(model, DEFAULT_M).unwrap();
        prop_assert!(f.ell_hat(lo) < f.ell_hat(hi));
    }

    #[test]
    fn entropy_inverse_round_trips(law in law(), x in xi()) {
        let model = HeatCapacityModel::new(law).unwrap();
        if let Some(l) = model.ell_at(x).finite() {
            let back = ell_inverse(&model, l).unwrap();
            prop_assert!(back > 0.0);
            prop_assert!((back - x).abs() <= 1e-9 * x.max(1.0), "{} vs {}", back, x);
        }
    }

    #[test]
    fn cutoff_entropy_is_sandwiched(law in law(), x in xi(), m in prop::sample::select(vec![2.0, 10.0, 100.0])) {
        let model = HeatCapacityModel::new(law).unwrap();
        if let (Some(l), Some(lm)) = (model.ell_at(x).finite(), model.ell_m_of(x, m).unwrap().finite()) {
            let slack = 1e-10 * (1.0 + l.abs() + model.k_at(x));
            prop_assert!(l - model.k_at(x) / m <= lm + slack);
            prop_assert!(lm <= l + slack);
        }
    }

    #[test]
    fn logarithm_is_dominated_by_square_root(s in 1.0..1e12f64) {
        prop_assert!(s.ln() <= 2.0 / E * s.sqrt() * (1.0 + 1e-15));
    }

    #[test]
    fn interpolation_bound(x in E..1e6, eta in E * E..1e6) {
        prop_assert!(x * x.ln() <= x * x * eta.ln().powi(2) / eta + eta);
    }

    #[test]
    fn regularized_heat_capacity(law in law(), eps in 1e-6..1.0f64, x in xi()) {
        let model = HeatCapacityModel::new(law).unwrap();
        let reg = regularize_kappa(&model, eps).unwrap();
        let (k, ke) = (model.kappa_at(x), reg.kappa_at(x));
        prop_assert!(ke >= eps);
        prop_assert!((ke - k).abs() <= eps);
        let finer = regularize_kappa(&model, eps * 1e-6).unwrap();
        prop_assert!((finer.kappa_at(x) - k).abs() <= eps * 1e-6);
    }
}

#[test]
fn closed_form_logarithmic_entropy_matches_quadrature() {
    let model = HeatCapacityModel::new(KappaLaw::Constant { k0: 1.0 }).unwrap();
    let f = ScalarFunctionals::new(model.clone(), DEFAULT_M).unwrap();
    for i in 0..200 {
        let x = 10f64.powf(-3.0 + 9.0 * i as f64 / 199.0);
        let quad = model.ell_hat_of(x, DEFAULT_M).unwrap();
        assert!((f.ell_hat(x) - quad).abs() <= 1e-9 * quad.max(1.0), "{x}");
    }
}
