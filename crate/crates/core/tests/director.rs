use ndarray::Array2;
use nlcf_core::director::{director_tension, elastic_energy, elastic_stress_rhs, gradient_energy_density};
use nlcf_core::{
    DirectorBc, DirectorField, DirectorSolver, DirectorStepOptions, FaceField, GridSpec, SolverError, VectorField,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

const E: [f64; 3] = [0.0, 0.0, 1.0];

fn circle(grid: GridSpec<f64>, bc: DirectorBc, phi: impl Fn(f64, f64) -> f64) -> DirectorField<f64> {
    DirectorField::from_fn(grid, E, bc, |x, y| {
        let p = phi(x, y);
        [p.cos(), p.sin(), 0.0]
    })
}

fn random_unit(grid: GridSpec<f64>, bc: DirectorBc, seed: u64, spread: f64) -> DirectorField<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = DirectorField::uniform(grid, E, bc);
    for k in 0..3 {
        d.d[k] = Array2::from_shape_fn((grid.ny(), grid.nx()), |_| E[k] + spread * rng.gen_range(-1.0..1.0));
    }
    d.renormalize();
    d
}

fn random_velocity(grid: GridSpec<f64>, seed: u64) -> VectorField<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    VectorField::from_faces(FaceField {
        grid,
        ux: Array2::from_shape_fn((grid.ny(), grid.nx() + 1), |_| rng.gen_range(-1.0..1.0)),
        uy: Array2::from_shape_fn((grid.ny() + 1, grid.nx()), |_| rng.gen_range(-1.0..1.0)),
    })
}

#[test]
fn uniform_director_is_a_fixed_point_for_any_flow() {
    let g = GridSpec::unit_square(16).unwrap();
    for bc in [DirectorBc::DirichletE, DirectorBc::Neumann] {
        let d = DirectorField::uniform(g, E, bc);
        let solver = DirectorSolver::new(g, bc);
        let next = solver.step(&d, &random_velocity(g, 1), 0.01, DirectorStepOptions::default()).unwrap();
        assert!(next.deviation().iter().all(|a| a.iter().all(|v| v.abs() < 1e-14)));
        assert!(director_tension(&d).iter().all(|t| t.values.iter().all(|v| *v == 0.0)));
        assert_eq!(elastic_stress_rhs(&d).max_abs(), 0.0);
        assert_eq!(elastic_energy(&d), 0.0);
    }
}

#[test]
fn tension_of_circle_valued_field_converges_at_second_order() {
    let phi = |x: f64, _y: f64| 0.5 * (PI * x).cos();
    let mut errors = Vec::new();
    for n in [32, 64] {
        let g = GridSpec::unit_square(n).unwrap();
        let d = circle(g, DirectorBc::Neumann, phi);
        let t = director_tension(&d);
        let mut err = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                let (x, y) = g.cell_center(i, j);
                let p = phi(x, y);
                let lap = -0.5 * PI * PI * (PI * x).cos();
                let exact = [-lap * p.sin(), lap * p.cos(), 0.0];
                for k in 0..3 {
                    err = err.max((t[k].values[[j, i]] - exact[k]).abs());
                }
            }
        }
        errors.push(err);
    }
    assert!(errors[0] / errors[1] > 3.0, "{errors:?}");
}

#[test]
fn elastic_force_matches_analytic_profile_and_mirror_symmetry() {
    let phi = |x: f64| 0.5 * (PI * x).cos();
    let mut errors = Vec::new();
    for n in [32, 64] {
        let g = GridSpec::unit_square(n).unwrap();
        let d = circle(g, DirectorBc::Neumann, |x, _| phi(x));
        let f = elastic_stress_rhs(&d);
        let mut err = 0.0f64;
        for j in 0..n {
            for i in 1..n {
                let (x, _) = g.x_face(i, j);
                let exact = -0.25 * PI.powi(3) * (PI * x).cos() * (PI * x).sin();
                err = err.max((f.ux[[j, i]] - exact).abs());
            }
        }
        assert!(f.uy.iter().all(|v| v.abs() < 1e-12));
        // φ(1 - x) = -φ(x) keeps |∇φ| and Δφ∇φ odd about x = 1/2
        for j in 0..n {
            for i in 0..=n {
                assert!((f.ux[[j, i]] + f.ux[[j, n - i]]).abs() < 1e-10);
            }
        }
        errors.push(err);
    }
    assert!(errors[0] / errors[1] > 3.0, "{errors:?}");
}

#[test]
fn heat_flow_dissipates_dirichlet_energy() {
    let g = GridSpec::unit_square(32).unwrap();
    let mut d = circle(g, DirectorBc::Neumann, |x, y| 0.8 * (PI * x).cos() * (PI * y).cos());
    let solver = DirectorSolver::new(g, DirectorBc::Neumann);
    let u = VectorField::zeros(g);
    let mut energy = elastic_energy(&d);
    for _ in 0..40 {
        d = solver.step(&d, &u, 1e-3, DirectorStepOptions::default()).unwrap();
        let next = elastic_energy(&d);
        assert!(next <= energy * (1.0 + 1e-12), "{next} > {energy}");
        assert!(d.unit_deviation_max() <= 1e-12);
        energy = next;
    }
}

#[test]
fn unprojected_step_leaves_the_sphere_at_second_order_in_dt() {
    let g = GridSpec::unit_square(32).unwrap();
    let d = circle(g, DirectorBc::Neumann, |x, y| 0.5 * (PI * x).cos() + 0.3 * (2.0 * PI * y).cos());
    let solver = DirectorSolver::new(g, DirectorBc::Neumann);
    let u = VectorField::zeros(g);
    let opts = DirectorStepOptions { renormalize: false, ..Default::default() };
    let dev: Vec<f64> = [1e-4, 5e-5, 2.5e-5]
        .iter()
        .map(|&dt| solver.step(&d, &u, dt, opts).unwrap().unit_deviation_max())
        .collect();
    for w in dev.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.0..=5.0).contains(&ratio), "{dev:?}");
    }
}

#[test]
fn collapse_is_reported() {
    let g = GridSpec::unit_square(16).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut d = DirectorField::uniform(g, E, DirectorBc::Neumann);
    for k in 0..3 {
        d.d[k].mapv_inplace(|_| rng.gen_range(-1.0..1.0));
    }
    d.renormalize();
    let solver = DirectorSolver::new(g, DirectorBc::Neumann);
    let err = solver.step(&d, &VectorField::zeros(g), 0.01, DirectorStepOptions::default()).unwrap_err();
    assert!(matches!(err, SolverError::RenormalizationBreakdown { min_norm, .. } if min_norm < 0.5), "{err}");
}

#[test]
fn boundary_condition_mismatch_is_rejected() {
    let g = GridSpec::unit_square(8).unwrap();
    let d = DirectorField::uniform(g, E, DirectorBc::Neumann);
    let solver = DirectorSolver::new(g, DirectorBc::DirichletE);
    let err = solver.step(&d, &VectorField::zeros(g), 0.1, DirectorStepOptions::default()).unwrap_err();
    assert!(matches!(err, SolverError::InvalidInput(_)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn tension_is_tangent_to_the_sphere(seed in any::<u64>(), spread in 0.01f64..2.0, neumann in any::<bool>()) {
        let bc = if neumann { DirectorBc::Neumann } else { DirectorBc::DirichletE };
        let g = GridSpec::unit_square(10).unwrap();
        let d = random_unit(g, bc, seed, spread);
        let t = director_tension(&d);
        let energy = gradient_energy_density(&d);
        let scale = energy.fold(1.0f64, |m, v| m.max(*v));
        for j in 0..10 {
            for i in 0..10 {
                let dot: f64 = (0..3).map(|k| t[k].values[[j, i]] * d.d[k][[j, i]]).sum();
                prop_assert!(dot.abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn step_stays_on_the_sphere(seed in any::<u64>(), spread in 0.0f64..0.3) {
        let g = GridSpec::unit_square(12).unwrap();
        let d = random_unit(g, DirectorBc::DirichletE, seed, spread);
        let u = random_velocity(g, seed ^ 1);
        let solver = DirectorSolver::new(g, DirectorBc::DirichletE);
        let next = solver.step(&d, &u, 1e-4, DirectorStepOptions::default()).unwrap();
        prop_assert!(next.unit_deviation_max() <= 1e-12);
    }
}
