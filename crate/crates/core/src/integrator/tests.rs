use super::*;
use crate::material::KappaLaw;
use crate::tensor::SymMatrix2;

fn physics(diffusivity: f64) -> Physics {
    let d = Tensor4::isotropic(1.0, 1.0).unwrap();
    let tensors = ElasticityTensors::new(d, d, 0.5 * SymMatrix2::IDENTITY).unwrap();
    Physics { tensors, model: HeatCapacityModel::new(KappaLaw::Constant { k0: 1.0 }).unwrap(), diffusivity }
}

fn sine_velocity(g: &Grid, amp: f64) -> VectorField {
    g.sample_vector_dirichlet(|x, y| {
        let s = (std::f64::consts::PI * x).sin() * (std::f64::consts::PI * y).sin();
        (amp * s, 0.3 * amp * s)
    })
}

fn kinetic(g: &Grid, v: &VectorField) -> f64 {
    0.5 * g.integrate_map(|k| v.norm_sq_at(k))
}

/// Gaussian elimination with partial pivoting.
fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

#[test]
fn rest_state_is_stationary() {
    let g = Grid::unit_square(8).unwrap();
    let p = physics(1.0);
    let cfg = SolverConfig::default();
    let integ = Integrator::new(&g, &p, &ForcingSpec::Zero, &cfg);
    let s = FieldState::at_rest(&g, vec![1.7; g.len()]);
    let (n, rep) = integ.step(&s, 0.01, 1.0).unwrap();
    assert_eq!(n.t, 0.01);
    assert_eq!(n.u, s.u);
    assert_eq!(n.v, s.v);
    for (a, b) in n.theta.iter().zip(&s.theta) {
        assert!((a - b).abs() < 1e-14);
    }
    assert_eq!(rep.rejections, 0);
}

#[test]
fn viscous_resolvent_contracts() {
    let g = Grid::unit_square(12).unwrap();
    let p = physics(1.0);
    let cfg = SolverConfig { implicit_elastic: false, coupling_max_iter: 1, ..Default::default() };
    let integ = Integrator::new(&g, &p, &ForcingSpec::Zero, &cfg);
    let mut s = FieldState::at_rest(&g, vec![1.0; g.len()]);
    s.v = sine_velocity(&g, 1.0);
    let (v, _, _) = integ.velocity_step(&s, &s.theta, &VectorField::zeros(g.len()), 0.01, None, 0.0).unwrap();
    assert!(kinetic(&g, &v) < kinetic(&g, &s.v));
}

#[test]
fn velocity_step_matches_dense_solve() {
    let g = Grid::unit_square(8).unwrap();
    let p = physics(1.0);
    let cfg = SolverConfig { cg_rel_tol: 1e-13, ..Default::default() };
    let integ = Integrator::new(&g, &p, &ForcingSpec::Zero, &cfg);
    let dt = 0.05;
    let mut s = FieldState::at_rest(&g, g.sample(|x, y| 1.0 + x * y));
    s.v = sine_velocity(&g, 1.0);
    s.u = sine_velocity(&g, 0.2);
    let (v, _, _) = integ.velocity_step(&s, &s.theta, &VectorField::zeros(g.len()), dt, None, 0.0).unwrap();

    let op = VelocityOperator::new(&g, integ.stiffness(dt), 0.0, 2);
    let n = g.len();
    let dofs: Vec<usize> = (0..2 * n).filter(|&i| !g.is_boundary(i % n)).collect();
    let mut a = vec![vec![0.0; dofs.len()]; dofs.len()];
    let mut col = vec![0.0; 2 * n];
    for (c, &dc) in dofs.iter().enumerate() {
        let mut e = vec![0.0; 2 * n];
        e[dc] = 1.0;
        op.apply(&e, &mut col);
        for (r, &dr) in dofs.iter().enumerate() {
            a[r][c] = col[dr];
        }
    }
    let rhs = join(&integ.velocity_rhs(&s, &s.theta, &VectorField::zeros(n), dt));
    let x = dense_solve(a, dofs.iter().map(|&d| rhs[d]).collect());
    let got = join(&v);
    for (xi, &d) in x.iter().zip(&dofs) {
        assert!((xi - got[d]).abs() <= 1e-9, "dof {d}: {xi} vs {}", got[d]);
    }
}

#[test]
fn displacement_update() {
    let g = Grid::unit_square(6).unwrap();
    let p = physics(1.0);
    let cfg = SolverConfig::default();
    let integ = Integrator::new(&g, &p, &ForcingSpec::Zero, &cfg);
    let mut s = FieldState::at_rest(&g, vec![1.0; g.len()]);
    s.u = sine_velocity(&g, 0.4);
    assert_eq!(integ.displacement_step(&s, &VectorField::zeros(g.len()), 0.1), s.u);
    let w = sine_velocity(&g, 1.0);
    s.u = VectorField::zeros(g.len());
    let u = integ.displacement_step(&s, &w, 0.1);
    for k in 0..g.len() {
        assert!((u.x[k] - 0.1 * w.x[k]).abs() < 1e-15);
    }
}

#[test]
fn temperature_scalar_reduction() {
    let g = Grid::unit_square(5).unwrap();
    let p = physics(0.0);
    let cfg = SolverConfig { cg_rel_tol: 1e-14, ..Default::default() };
    let integ = Integrator::new(&g, &p, &ForcingSpec::Zero, &cfg);
    let n = g.len();
    let (theta, b, q, heat, dt) = (2.0, 0.7, 1.3, 0.4, 0.1);
    let (out, _, _) = integ
        .temperature_step(&vec![theta; n], &vec![b; n], &vec![q; n], &vec![1.0; n], &vec![heat; n], dt, None, 0.0)
        .unwrap();
    let expect = (theta + dt * (q + heat)) / (1.0 + dt * b);
    assert!(out.iter().all(|t| (t - expect).abs() < 1e-13));
}

#[test]
fn heat_step_conserves_weighted_energy() {
    let g = Grid::new(9, 7, 1.0, 0.8).unwrap();
    let mut p = physics(1.0);
    p.model = HeatCapacityModel::new(KappaLaw::PowerGrowth { k0: 1.0, omega: 0.5 }).unwrap();
    let cfg = SolverConfig { heat_capacity: HeatCapacityUpdate::Lagged, cg_rel_tol: 1e-13, ..Default::default() };
    let integ = Integrator::new(&g, &p, &ForcingSpec::Zero, &cfg);
    let n = g.len();
    let theta = g.sample(|x, y| 1.0 + (-((x - 0.3).powi(2) + (y - 0.4).powi(2)) * 20.0).exp());
    let kappa: Vec<f64> = theta.iter().map(|&t| p.model.kappa_at(t)).collect();
    let z = vec![0.0; n];
    let (out, _, _) = integ.temperature_step(&theta, &z, &z, &kappa, &z, 0.05, None, 0.0).unwrap();
    let before = g.integrate_map(|k| kappa[k] * theta[k]);
    let after = g.integrate_map(|k| kappa[k] * out[k]);
    assert!((before - after).abs() < 1e-12 * before);
}

#[test]
fn dissipative_heating_raises_temperature() {
    let g = Grid::unit_square(6).unwrap();
    let p = physics(0.0);
    let cfg = SolverConfig::default();
    let integ = Integrator::new(&g, &p, &ForcingSpec::Zero, &cfg);
    let n = g.len();
    let theta = g.sample(|x, _| 1.0 + x);
    let q: Vec<f64> = (0..n).map(|k| if k % 3 == 0 { 2.0 } else { 0.0 }).collect();
    let z = vec![0.0; n];
    let (out, _, _) = integ.temperature_step(&theta, &z, &q, &vec![1.0; n], &z, 0.1, None, 0.0).unwrap();
    for k in 0..n {
        assert!(out[k] >= theta[k] - 1e-14);
    }
}

#[test]
fn positivity_limit_formula() {
    let g = Grid::unit_square(4).unwrap();
    let p = physics(1.0);
    let cfg = SolverConfig { theta_safety: 0.5, dt_max: 0.2, ..Default::default() };
    let integ = Integrator::new(&g, &p, &ForcingSpec::Zero, &cfg);
    assert_eq!(integ.positivity_limit(&[1.0], &[-10.0]), (0.05, Some(0)));
    assert_eq!(integ.positivity_limit(&[1.0, 2.0], &[0.0, 3.0]), (0.2, None));
}

#[test]
fn displacement_half_steps_differ_at_second_order() {
    let g = Grid::unit_square(10).unwrap();
    let p = physics(1.0);
    let cfg = SolverConfig { dt_growth: 1.0, ..Default::default() };
    let integ = Integrator::new(&g, &p, &ForcingSpec::Zero, &cfg);
    let mut s = FieldState::at_rest(&g, vec![1.0; g.len()]);
    s.v = sine_velocity(&g, 1.0);
    let mut diffs = Vec::new();
    for dt in [0.002, 0.001] {
        let (full, _) = integ.step(&s, dt, s.t + dt).unwrap();
        let (h1, _) = integ.step(&s, dt / 2.0, s.t + dt / 2.0).unwrap();
        let (h2, _) = integ.step(&h1, dt / 2.0, h1.t + dt / 2.0).unwrap();
        let d = (0..g.len()).map(|k| (full.u.x[k] - h2.u.x[k]).abs()).fold(0.0, f64::max);
        diffs.push(d);
    }
    let ratio = diffs[0] / diffs[1];
    assert!(ratio > 3.0 && ratio < 5.0, "ratio {ratio}");
}
