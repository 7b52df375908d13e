#![allow(clippy::needless_range_loop)]

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use tvsim::grid::{Grid, VectorField};
use tvsim::tensor::{coercivity_constant, SymMatrix2, Tensor4};

fn grid() -> impl Strategy<Value = Grid> {
    (4usize..14, 4usize..14, 0.3..3.0f64, 0.3..3.0f64).prop_map(|(nx, ny, lx, ly)| Grid::new(nx, ny, lx, ly).unwrap())
}

fn random_field(g: &Grid, rng: &mut ChaCha8Rng) -> VectorField {
    let mut v = VectorField {
        x: (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        y: (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    };
    g.zero_boundary(&mut v);
    v
}

fn random_sym(rng: &mut ChaCha8Rng) -> SymMatrix2 {
    SymMatrix2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn divergence_is_negative_adjoint_of_symmetric_gradient(g in grid(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<SymMatrix2> = (0..g.len()).map(|_| random_sym(&mut rng)).collect();
        let w = random_field(&g, &mut rng);
        let e = g.sym_grad(&w);
        let d = g.div_matrix(&a);
        let lhs = g.integrate_map(|k| a[k].dot(&e[k]));
        let rhs = g.integrate_map(|k| d.x[k] * w.x[k] + d.y[k] * w.y[k]);
        let scale = g.integrate_map(|k| a[k].norm() * e[k].norm()).max(1.0);
        prop_assert!((lhs + rhs).abs() <= 1e-12 * scale);
    }

    #[test]
    fn constant_coupling_integrates_to_zero(g in grid(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = random_field(&g, &mut rng);
        let b = random_sym(&mut rng);
        let e = g.sym_grad(&v);
        let scale = g.integrate_map(|k| e[k].norm()).max(1.0);
        prop_assert!(g.integrate_map(|k| b.dot(&e[k])).abs() <= 1e-12 * scale);
        let theta = vec![rng.gen_range(0.1..3.0); g.len()];
        let f = g.div_scalar_times(&theta, &b);
        prop_assert!(f.x.iter().chain(&f.y).all(|x| x.abs() <= 1e-12));
    }

    #[test]
    fn discrete_korn_inequality(g in grid(), seed in any::<u64>(), lambda in 0.0..5.0f64, mu in 0.1..5.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = Tensor4::isotropic(lambda, mu).unwrap();
        let k_c = coercivity_constant(&c);
        let v = random_field(&g, &mut rng);
        let e = g.sym_grad(&v);
        let energy = g.integrate_map(|k| c.contract(&e[k]).dot(&e[k]));
        let sym = g.integrate_map(|k| e[k].norm_sq());
        let n = g.len();
        let mut parts = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        g.d_x(&v.x, &mut parts[0]);
        g.d_y(&v.x, &mut parts[1]);
        g.d_x(&v.y, &mut parts[2]);
        g.d_y(&v.y, &mut parts[3]);
        let full = g.integrate_map(|k| parts.iter().map(|p| p[k] * p[k]).sum());
        prop_assert!(energy >= k_c * sym * (1.0 - 1e-12));
        prop_assert!(sym >= 0.5 * full * (1.0 - 1e-12));
    }

    #[test]
    fn weighted_neumann_laplacian_is_symmetric_and_conservative(g in grid()) {
        let n = g.len();
        let w = g.weights();
        let mut m = vec![vec![0.0; n]; n];
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = g.laplacian_neumann(&e);
            for i in 0..n {
                m[i][j] = w[i] * col[i];
            }
        }
        let scale = m.iter().flatten().fold(0.0f64, |s, x| s.max(x.abs()));
        for i in 0..n {
            let col_sum: f64 = (0..n).map(|k| m[k][i]).sum();
            prop_assert!(col_sum.abs() <= 1e-12 * scale);
            prop_assert!(m[i][i] <= 0.0);
            for j in 0..n {
                prop_assert!((m[i][j] - m[j][i]).abs() <= 1e-14 * scale);
                if i != j {
                    prop_assert!(m[i][j] >= 0.0);
                }
            }
        }
        for (a, b, c) in g.edges() {
            prop_assert!(c > 0.0 && a != b);
        }
    }
}

#[test]
fn neumann_laplacian_refines_at_second_order_on_cosine_mode() {
    let mut errs = Vec::new();
    for n in [9, 17, 33, 65] {
        let g = Grid::unit_square(n).unwrap();
        let f = g.sample(|x, y| (PI * x).cos() * (PI * y).cos());
        let lap = g.laplacian_neumann(&f);
        let err = (0..g.len()).map(|k| (lap[k] + 2.0 * PI * PI * f[k]).abs()).fold(0.0, f64::max);
        errs.push(err);
    }
    for w in errs.windows(2) {
        assert!(w[0] / w[1] >= 3.5, "{errs:?}");
    }
}

#[test]
fn elastic_divergence_refines_at_second_order_away_from_boundary() {
    // div(ℂ:∇ˢu) for u = sin(πx) sin(πy)(1, 0) with isotropic λ = μ = 1 is
    // μΔu + (λ+μ)∇(div u)
    let c = Tensor4::isotropic(1.0, 1.0).unwrap();
    let exact = |x: f64, y: f64| {
        let s = (PI * x).sin() * (PI * y).sin();
        let cc = (PI * x).cos() * (PI * y).cos();
        (-2.0 * PI * PI * s + 2.0 * (-PI * PI * s), 2.0 * PI * PI * cc)
    };
    let mut errs = Vec::new();
    for n in [17, 33, 65, 129] {
        let g = Grid::unit_square(n).unwrap();
        let u = g.sample_vector_dirichlet(|x, y| ((PI * x).sin() * (PI * y).sin(), 0.0));
        let d = g.div_tensor_sym_grad(&c, &u);
        let mut err = 0.0f64;
        for j in 2..n - 2 {
            for i in 2..n - 2 {
                let k = g.index(i, j);
                let (x, y) = g.coords(k);
                let (ex, ey) = exact(x, y);
                err = err.max((d.x[k] - ex).abs()).max((d.y[k] - ey).abs());
            }
        }
        errs.push(err);
    }
    for w in errs.windows(2) {
        assert!(w[0] / w[1] >= 3.5, "{errs:?}");
    }
}
