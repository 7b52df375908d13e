use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tvsim::diagnostics::{bound_chain_check, corner_inequality_check, energy_balance_residual, entropy_balance_residual, record};
use tvsim::grid::{Grid, VectorField};
use tvsim::integrator::{FieldState, ForcingSpec, Integrator, Physics, SolverConfig};
use tvsim::material::{HeatCapacityModel, KappaLaw, ScalarFunctionals, DEFAULT_M};
use tvsim::tensor::{ElasticityTensors, SymMatrix2, Tensor4};

fn law() -> impl Strategy<Value = KappaLaw> {
    prop_oneof![
        (0.2..3.0f64).prop_map(|k0| KappaLaw::Constant { k0 }),
        (0.2..3.0f64, 0.0..1.0f64).prop_map(|(k0, omega)| KappaLaw::PowerGrowth { k0, omega }),
        (0.2..3.0f64, 0.2..3.0f64).prop_map(|(k0, xi_d)| KappaLaw::DebyeLike { k0, xi_d }),
    ]
}

#[derive(Debug, Clone)]
struct Case {
    n: usize,
    lambda: f64,
    mu: f64,
    coupling: [f64; 3],
    law: KappaLaw,
    diffusivity: f64,
    seed: u64,
    dt: f64,
}

fn case() -> impl Strategy<Value = Case> {
    (
        6usize..11,
        0.0..2.0f64,
        0.2..2.0f64,
        prop::array::uniform3(-1.0..1.0f64),
        law(),
        0.2..2.0f64,
        any::<u64>(),
        1e-3..2e-2f64,
    )
        .prop_map(|(n, lambda, mu, coupling, law, diffusivity, seed, dt)| Case {
            n,
            lambda,
            mu,
            coupling,
            law,
            diffusivity,
            seed,
            dt,
        })
}

fn setup(c: &Case) -> (Grid, Physics, FieldState) {
    let g = Grid::unit_square(c.n).unwrap();
    let d = Tensor4::isotropic(c.lambda, c.mu).unwrap();
    let b = SymMatrix2::new(c.coupling[0], c.coupling[1], c.coupling[2]);
    let tensors = ElasticityTensors::new(d, d, b).unwrap();
    let physics = Physics { tensors, model: HeatCapacityModel::new(c.law.clone()).unwrap(), diffusivity: c.diffusivity };
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let mut field = |amp: f64| {
        let mut v = VectorField {
            x: (0..g.len()).map(|_| rng.gen_range(-amp..amp)).collect(),
            y: (0..g.len()).map(|_| rng.gen_range(-amp..amp)).collect(),
        };
        g.zero_boundary(&mut v);
        v
    };
    let u = field(0.05);
    let v = field(0.3);
    let theta = (0..g.len()).map(|_| rng.gen_range(0.1..3.0)).collect();
    (g, physics, FieldState { u, v, theta, t: 0.0 })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn one_step_respects_balances_and_bounds(c in case()) {
        let (g, physics, state) = setup(&c);
        let cfg = SolverConfig { dt_max: 0.05, ..Default::default() };
        let integ = Integrator::new(&g, &physics, &ForcingSpec::Zero, &cfg);
        let functionals = ScalarFunctionals::new(physics.model.clone(), DEFAULT_M).unwrap();
        let heat = vec![0.0; g.len()];
        let (next, report) = integ.step(&state, c.dt, 1.0).unwrap();
        prop_assert!(next.theta.iter().all(|&t| t > 0.0));

        let r0 = record(&g, &physics, &functionals, &state, &heat);
        let r1 = record(&g, &physics, &functionals, &next, &heat);
        for r in [&r0, &r1] {
            let sum = r.kinetic + r.elastic + r.thermal;
            prop_assert!((r.energy - sum).abs() <= 1e-14 * sum.abs());
            for (name, value) in r.nonnegative_terms() {
                prop_assert!(value >= 0.0, "{} = {}", name, value);
            }
            prop_assert!(r.p_visc >= r.p_visc_lower * (1.0 - 1e-12));
        }
        prop_assert!(energy_balance_residual(&r0, &r1, &report) <= 1e-9 * r0.energy.abs());
        prop_assert!(entropy_balance_residual(&r0, &r1, report.dt) >= -1e-8 * (1.0 + r1.entropy.abs()));
        let corner = corner_inequality_check(
            &r0, &r1, report.dt, &physics.tensors, physics.diffusivity, DEFAULT_M, g.area(), 1e-8,
        );
        prop_assert!(corner.holds, "{:?}", corner);
        prop_assert!(bound_chain_check(&g, &next, 1e-12).holds);
    }

    #[test]
    fn guarded_step_keeps_temperature_diagonal_positive(c in case()) {
        let (g, physics, state) = setup(&c);
        let cfg = SolverConfig::default();
        let integ = Integrator::new(&g, &physics, &ForcingSpec::Zero, &cfg);
        let kappa: Vec<f64> = state.theta.iter().map(|&t| physics.model.kappa_at(t)).collect();
        let (b, q) = integ.exchange_and_dissipation(&state.v);
        prop_assert!(q.iter().all(|&x| x >= 0.0));
        let (limit, _) = integ.positivity_limit(&kappa, &b);
        prop_assert!(limit > 0.0 && limit <= cfg.dt_max);
        for frac in [0.25, 0.5, 1.0] {
            let dt = frac * limit;
            for (k, bk) in kappa.iter().zip(&b) {
                prop_assert!(k / dt + bk > 0.0);
            }
        }
    }
}
