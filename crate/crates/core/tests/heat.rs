use approx::assert_abs_diff_eq;
use ndarray::Array2;
use nlcf_core::heat::viscous_source;
use nlcf_core::{
    dissipation_sources, heat_step, project_divergence_free, DirectorBc, DirectorField, FaceField, GridSpec, HeatSolver,
    ScalarBc, ScalarField, SolverError, VectorField, ViscosityModel,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

const E: [f64; 3] = [0.0, 0.0, 1.0];

fn model() -> ViscosityModel<f64> {
    ViscosityModel::affine_tanh(1.0, 2.0).unwrap()
}

fn random_theta(grid: GridSpec<f64>, seed: u64) -> ScalarField<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = Array2::from_shape_fn((grid.ny(), grid.nx()), |_| rng.gen_range(0.0..1.0));
    ScalarField::from_values(grid, ScalarBc::NeumannZero, values)
}

fn random_solenoidal(grid: GridSpec<f64>, seed: u64) -> VectorField<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = VectorField::from_faces(FaceField {
        grid,
        ux: Array2::from_shape_fn((grid.ny(), grid.nx() + 1), |_| rng.gen_range(-1.0..1.0)),
        uy: Array2::from_shape_fn((grid.ny() + 1, grid.nx()), |_| rng.gen_range(-1.0..1.0)),
    });
    project_divergence_free(&u)
}

fn twisted(grid: GridSpec<f64>) -> DirectorField<f64> {
    DirectorField::from_fn(grid, E, DirectorBc::Neumann, |x, y| {
        let p = 0.6 * (PI * x).cos() * (PI * y).cos();
        [p.sin(), 0.0, p.cos()]
    })
}

#[test]
fn constant_temperature_at_rest_is_fixed() {
    let g = GridSpec::unit_square(16).unwrap();
    let theta = ScalarField::constant(g, ScalarBc::NeumannZero, 0.37);
    let d = DirectorField::uniform(g, E, DirectorBc::DirichletE);
    let next = heat_step(&theta, &VectorField::zeros(g), &d, &model(), 0.1).unwrap();
    assert!(next.values.iter().all(|v| (v - 0.37).abs() < 1e-14));
}

#[test]
fn insulated_walls_conserve_heat_without_sources() {
    let g = GridSpec::new(20, 14, 1.0, 0.7).unwrap();
    let d = DirectorField::uniform(g, E, DirectorBc::Neumann);
    let solver = HeatSolver::new(g);
    let mut theta = random_theta(g, 1);
    let total = theta.integral();
    for _ in 0..10 {
        theta = solver.step(&theta, &VectorField::zeros(g), &d, &model(), 0.01).unwrap();
        assert_abs_diff_eq!(theta.integral(), total, epsilon = 1e-12);
    }
}

#[test]
fn heat_gain_equals_integrated_sources_for_solenoidal_flow() {
    let g = GridSpec::unit_square(24).unwrap();
    let u = random_solenoidal(g, 2).scaled(0.1);
    let d = twisted(g);
    let theta = random_theta(g, 3);
    let dt = 1e-3;
    let next = HeatSolver::new(g).step(&theta, &u, &d, &model(), dt).unwrap();
    let gain = dissipation_sources(&u, &d, &theta, &model()).total().integral() * dt;
    assert!(gain > 0.0);
    assert_abs_diff_eq!(next.integral() - theta.integral(), gain, epsilon = 1e-12 * gain.max(1.0));
}

#[test]
fn minimum_never_drops_with_nonnegative_sources() {
    let g = GridSpec::unit_square(24).unwrap();
    let d = twisted(g);
    let solver = HeatSolver::new(g);
    let mut theta = random_theta(g, 4);
    for _ in 0..20 {
        let next = solver.step(&theta, &VectorField::zeros(g), &d, &model(), 5e-3).unwrap();
        assert!(next.min() >= theta.min() - 1e-12);
        theta = next;
    }
}

#[test]
fn pure_diffusion_obeys_the_maximum_principle() {
    let g = GridSpec::unit_square(24).unwrap();
    let d = DirectorField::uniform(g, E, DirectorBc::DirichletE);
    let theta = random_theta(g, 5);
    let next = heat_step(&theta, &VectorField::zeros(g), &d, &model(), 0.05).unwrap();
    assert!(next.min() >= theta.min() - 1e-12);
    assert!(next.max() <= theta.max() + 1e-12);
}

#[test]
fn cosine_mode_decays_at_the_continuous_rate() {
    let mut errors = Vec::new();
    for n in [32, 64] {
        let g = GridSpec::unit_square(n).unwrap();
        let d = DirectorField::uniform(g, E, DirectorBc::DirichletE);
        let solver = HeatSolver::new(g);
        let mut theta = ScalarField::from_fn(g, ScalarBc::NeumannZero, |x, _| (PI * x).cos());
        let dt = 1e-5;
        for _ in 0..100 {
            theta = solver.step(&theta, &VectorField::zeros(g), &d, &model(), dt).unwrap();
        }
        let decay = (-PI * PI * 1e-3).exp();
        let err = theta
            .values
            .indexed_iter()
            .map(|((j, i), v)| (v - decay * (PI * g.cell_center(i, j).0).cos()).abs())
            .fold(0.0f64, f64::max);
        errors.push(err);
    }
    assert!(errors[0] / errors[1] > 3.0, "{errors:?}");
}

#[test]
fn shear_flow_source_uses_the_full_symmetric_gradient() {
    // ½ μ |∇u + ∇ᵀu|² with u = (y, x) and μ = 2 is ½ · 2 · 8
    let g = GridSpec::unit_square(16).unwrap();
    let u = VectorField::from_fn(g, |x, y| (y, x));
    let theta = ScalarField::zeros(g, ScalarBc::NeumannZero);
    let mu2 = ViscosityModel::constant(2.0).unwrap();
    let source = viscous_source(&u, &theta, &mu2);
    for j in 2..14 {
        for i in 2..14 {
            assert_abs_diff_eq!(source.values[[j, i]], 8.0, epsilon = 1e-10);
        }
    }
}

#[test]
fn resting_uniform_state_has_no_sources() {
    let g = GridSpec::unit_square(12).unwrap();
    let d = DirectorField::uniform(g, E, DirectorBc::DirichletE);
    let s = dissipation_sources(&VectorField::zeros(g), &d, &random_theta(g, 6), &model());
    assert!(s.total().values.iter().all(|v| *v == 0.0));
}

#[test]
fn nonpositive_step_is_rejected() {
    let g = GridSpec::unit_square(8).unwrap();
    let d = DirectorField::uniform(g, E, DirectorBc::DirichletE);
    let theta = ScalarField::zeros(g, ScalarBc::NeumannZero);
    let err = heat_step(&theta, &VectorField::zeros(g), &d, &model(), -1.0).unwrap_err();
    assert!(matches!(err, SolverError::InvalidInput(_)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sources_are_nonnegative(seed in any::<u64>(), amp in 0.0f64..5.0) {
        let g = GridSpec::unit_square(10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = VectorField::from_faces(FaceField {
            grid: g,
            ux: Array2::from_shape_fn((10, 11), |_| amp * rng.gen_range(-1.0..1.0)),
            uy: Array2::from_shape_fn((11, 10), |_| amp * rng.gen_range(-1.0..1.0)),
        });
        let theta = ScalarField::from_values(
            g,
            ScalarBc::NeumannZero,
            Array2::from_shape_fn((10, 10), |_| rng.gen_range(-3.0..3.0)),
        );
        let mut d = DirectorField::uniform(g, E, DirectorBc::Neumann);
        for k in 0..3 {
            d.d[k].mapv_inplace(|_| rng.gen_range(-1.0..1.0));
        }
        d.renormalize();
        let s = dissipation_sources(&u, &d, &theta, &model());
        prop_assert!(s.viscous.min() >= 0.0);
        prop_assert!(s.elastic.min() >= 0.0);
    }
}
