use proptest::prelude::*;
use tvsim::tensor::{coercivity_constant, sqrt_tensor, symmetric_eigen3, SymMatrix2, Tensor4};

fn sym() -> impl Strategy<Value = SymMatrix2> {
    (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64).prop_map(|(a, b, c)| SymMatrix2::new(a, b, c))
}

/// Tensors with all symmetries and a positive-definite induced matrix `QᵀQ + δI`.
fn coercive_tensor() -> impl Strategy<Value = Tensor4> {
    (prop::array::uniform9(-2.0..2.0f64), 0.01..1.0f64).prop_map(|(q, delta)| {
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = (0..3).map(|k| q[3 * k + i] * q[3 * k + j]).sum::<f64>();
            }
            m[i][i] += delta;
        }
        Tensor4::from_induced(&m)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn contraction_is_self_adjoint(t in coercive_tensor(), a in sym(), b in sym()) {
        let lhs = t.contract(&a).dot(&b);
        let rhs = a.dot(&t.contract(&b));
        let scale = t.upper_constant() * a.norm() * b.norm();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale.max(1e-300));
    }

    #[test]
    fn coercivity_bounds_quadratic_form(t in coercive_tensor(), a in sym()) {
        prop_assume!(a.norm_sq() > 1e-12);
        let k = coercivity_constant(&t);
        prop_assert!(t.contract(&a).dot(&a) >= k * a.norm_sq() * (1.0 - 1e-12) - 1e-14);
    }

    #[test]
    fn coercivity_attained_on_lowest_eigendirection(t in coercive_tensor()) {
        let (vals, vecs) = symmetric_eigen3(&t.induced_matrix());
        let a = SymMatrix2::from_vec3([vecs[0][0], vecs[1][0], vecs[2][0]]);
        let q = t.contract(&a).dot(&a) / a.norm_sq();
        prop_assert!((q - vals[0]).abs() <= 1e-8 * vals[2]);
        prop_assert!((coercivity_constant(&t) - vals[0]).abs() <= 1e-15 * vals[2]);
    }

    #[test]
    fn isotropic_coercivity_is_twice_shear(lambda in 0.0..10.0f64, mu in 0.01..10.0f64) {
        let t = Tensor4::isotropic(lambda, mu).unwrap();
        prop_assert!((coercivity_constant(&t) - 2.0 * mu).abs() <= 1e-12 * (lambda + mu));
    }

    #[test]
    fn square_root_composes_to_tensor(t in coercive_tensor(), a in sym()) {
        let s = sqrt_tensor(&t).unwrap();
        let residual = (s.contract(&s.contract(&a)) - t.contract(&a)).norm();
        prop_assert!(residual <= 1e-10 * a.norm() * t.upper_constant().max(1.0));
    }
}
