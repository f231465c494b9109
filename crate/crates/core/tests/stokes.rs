use approx::assert_abs_diff_eq;
use ndarray::Array2;
use nlcf_core::ops::{divergence, face_dot, gradient};
use nlcf_core::stokes::{assemble_step, ViscousOperator};
use nlcf_core::{
    FaceField, GridSpec, ScalarBc, ScalarField, SolverError, StokesSolver, StokesStepProblem, StokesStrategy,
    VectorField, ViscosityModel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_faces(grid: GridSpec<f64>, seed: u64) -> VectorField<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    VectorField::from_faces(FaceField {
        grid,
        ux: Array2::from_shape_fn((grid.ny(), grid.nx() + 1), |_| rng.gen_range(-1.0..1.0)),
        uy: Array2::from_shape_fn((grid.ny() + 1, grid.nx()), |_| rng.gen_range(-1.0..1.0)),
    })
}

fn varying_theta(grid: GridSpec<f64>) -> ScalarField<f64> {
    ScalarField::from_fn(grid, ScalarBc::NeumannZero, |x, y| 2.0 * (x - 0.5) + (3.0 * y).sin())
}

/// Componentwise five-point Laplacian on interior faces with the no-slip
/// mirror ghost across the walls.
fn face_laplacian(u: &FaceField<f64>) -> FaceField<f64> {
    let g = u.grid;
    let (nx, ny) = (g.nx(), g.ny());
    let (cx, cy) = (1.0 / (g.hx() * g.hx()), 1.0 / (g.hy() * g.hy()));
    let mut out = FaceField::zeros(g);
    for j in 0..ny {
        for i in 1..nx {
            let c = u.ux[[j, i]];
            let up = if j + 1 < ny { u.ux[[j + 1, i]] } else { -c };
            let dn = if j > 0 { u.ux[[j - 1, i]] } else { -c };
            out.ux[[j, i]] = cx * (u.ux[[j, i + 1]] - 2.0 * c + u.ux[[j, i - 1]]) + cy * (up - 2.0 * c + dn);
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            let c = u.uy[[j, i]];
            let rt = if i + 1 < nx { u.uy[[j, i + 1]] } else { -c };
            let lt = if i > 0 { u.uy[[j, i - 1]] } else { -c };
            out.uy[[j, i]] = cy * (u.uy[[j + 1, i]] - 2.0 * c + u.uy[[j - 1, i]]) + cx * (rt - 2.0 * c + lt);
        }
    }
    out
}

#[test]
fn zero_data_gives_zero_solution() {
    let g = GridSpec::unit_square(16).unwrap();
    let u = VectorField::zeros(g);
    let theta = varying_theta(g);
    let rhs = FaceField::zeros(g);
    let model = ViscosityModel::affine_tanh(1.0, 2.0).unwrap();
    for strategy in [StokesStrategy::Monolithic, StokesStrategy::Splitting] {
        let sol = StokesSolver::new(g)
            .solve(&StokesStepProblem::new(&u, &theta, &rhs, 0.01, model).with_strategy(strategy))
            .unwrap();
        assert!(sol.converged);
        assert_eq!(sol.u.faces().max_abs(), 0.0);
        assert!(sol.p.values.iter().all(|v| *v == 0.0));
    }
}

#[test]
fn constant_viscosity_reduces_to_laplacian_plus_grad_div() {
    let g = GridSpec::new(12, 10, 1.0, 0.8).unwrap();
    let (mu, dt) = (1.7, 0.05);
    let u = random_faces(g, 1);
    let a = ViscousOperator::constant(g, mu, dt).apply(u.faces());
    let lap = face_laplacian(u.faces());
    let gd = gradient(&divergence(&u));
    for ((j, i), v) in a.ux.indexed_iter() {
        if i == 0 || i == g.nx() {
            continue;
        }
        let expect = u.ux()[[j, i]] / dt - mu * (lap.ux[[j, i]] + gd.ux[[j, i]]);
        assert_abs_diff_eq!(*v, expect, epsilon = 1e-9);
    }
    for ((j, i), v) in a.uy.indexed_iter() {
        if j == 0 || j == g.ny() {
            continue;
        }
        let expect = u.uy()[[j, i]] / dt - mu * (lap.uy[[j, i]] + gd.uy[[j, i]]);
        assert_abs_diff_eq!(*v, expect, epsilon = 1e-9);
    }
}

#[test]
fn variable_operator_is_symmetric_and_matches_dissipation() {
    let g = GridSpec::new(14, 11, 1.3, 1.0).unwrap();
    let model = ViscosityModel::affine_tanh(1.0, 3.0).unwrap();
    let dt = 0.02;
    let op = ViscousOperator::new(&varying_theta(g), &model, dt);
    let u = random_faces(g, 2);
    let v = random_faces(g, 3);
    let auv = face_dot(&op.apply(u.faces()), v.faces());
    let uav = face_dot(u.faces(), &op.apply(v.faces()));
    assert_abs_diff_eq!(auv, uav, epsilon = 1e-9 * auv.abs().max(1.0));

    let quad = face_dot(&op.apply(u.faces()), u.faces()) - face_dot(u.faces(), u.faces()) / dt;
    let diss = op.dissipation(u.faces());
    assert!(diss > 0.0);
    assert_abs_diff_eq!(quad, diss, epsilon = 1e-9 * diss);

    let source = nlcf_core::heat::viscous_source(&u, &varying_theta(g), &model);
    assert_abs_diff_eq!(source.integral(), diss, epsilon = 1e-9 * diss);
}

#[test]
fn solution_is_solenoidal_with_mean_free_pressure() {
    let g = GridSpec::unit_square(24).unwrap();
    let model = ViscosityModel::affine_tanh(1.0, 2.0).unwrap();
    let theta = varying_theta(g);
    let u_old = random_faces(g, 4);
    let rhs = FaceField::from_fn(g, |x, y| ((3.0 * y).sin() + x, (2.0 * x).cos() * y));
    let solver = StokesSolver::new(g);
    for strategy in [StokesStrategy::Monolithic, StokesStrategy::Splitting] {
        let problem = StokesStepProblem::new(&u_old, &theta, &rhs, 0.01, model).with_strategy(strategy);
        let sol = solver.solve(&problem).unwrap();
        let div = divergence(&sol.u).values.fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(div <= 1e-10, "{strategy:?}: div {div:e}");
        assert!(sol.p.mean().abs() <= 1e-12);
        let report = solver.pressure_recovery_check(&problem, &sol, 5, 9).unwrap();
        assert!(report.passed, "{:e}", report.max_relative_defect);
    }
}

#[test]
fn strategies_agree_at_small_contrast() {
    let g = GridSpec::unit_square(20).unwrap();
    let model = ViscosityModel::affine_tanh(1.0, 1.1).unwrap();
    let theta = varying_theta(g);
    let u_old = VectorField::zeros(g);
    let rhs = FaceField::from_fn(g, |x, y| ((3.0 * y).sin(), (2.0 * x).cos()));
    let base = StokesStepProblem::new(&u_old, &theta, &rhs, 1.0, model).with_tol(1e-11);
    let solver = StokesSolver::new(g);
    let a = solver.solve(&base).unwrap();
    let b = solver.solve(&base.with_strategy(StokesStrategy::Splitting)).unwrap();
    let mut diff = a.u.faces().clone();
    diff.axpy(-1.0, b.u.faces());
    assert!(face_dot(&diff, &diff).sqrt() <= 1e-8);
}

#[test]
fn mirror_symmetric_data_gives_mirror_symmetric_flow() {
    let g = GridSpec::unit_square(16).unwrap();
    let model = ViscosityModel::affine_tanh(1.0, 2.0).unwrap();
    // θ and the forcing are even in x about x = 1/2; ux must be odd, uy even
    let theta = ScalarField::from_fn(g, ScalarBc::NeumannZero, |x: f64, y| (x - 0.5).powi(2) + y);
    let rhs = FaceField::from_fn(g, |x, y| ((x - 0.5) * y, (x - 0.5).powi(2) + (2.0 * y).sin()));
    let u_old = VectorField::zeros(g);
    let sol = StokesSolver::new(g).solve(&StokesStepProblem::new(&u_old, &theta, &rhs, 0.1, model)).unwrap();
    let n = g.nx();
    for j in 0..g.ny() {
        for i in 0..=n {
            assert_abs_diff_eq!(sol.u.ux()[[j, i]], -sol.u.ux()[[j, n - i]], epsilon = 1e-9);
        }
    }
    for j in 0..=g.ny() {
        for i in 0..n {
            assert_abs_diff_eq!(sol.u.uy()[[j, i]], sol.u.uy()[[j, n - 1 - i]], epsilon = 1e-9);
        }
    }
}

#[test]
fn splitting_reports_nonconvergence_within_budget() {
    let g = GridSpec::unit_square(16).unwrap();
    let model = ViscosityModel::affine_tanh(1.0, 20.0).unwrap();
    let theta = ScalarField::from_fn(g, ScalarBc::NeumannZero, |x, _| 6.0 * (x - 0.5));
    let rhs = FaceField::from_fn(g, |_, y: f64| ((3.0 * y).sin(), 0.0));
    let u_old = VectorField::zeros(g);
    let problem = StokesStepProblem::new(&u_old, &theta, &rhs, 1.0, model)
        .with_strategy(StokesStrategy::Splitting)
        .with_max_iter(5);
    let err = StokesSolver::new(g).solve(&problem).unwrap_err();
    assert!(matches!(err, SolverError::NonConvergence { iterations: 5, .. }), "{err}");
}

#[test]
fn invalid_step_is_rejected() {
    let g = GridSpec::unit_square(8).unwrap();
    let u = VectorField::zeros(g);
    let theta = ScalarField::zeros(g, ScalarBc::NeumannZero);
    let rhs = FaceField::zeros(g);
    let model = ViscosityModel::constant(1.0).unwrap();
    let problem = StokesStepProblem::new(&u, &theta, &rhs, 0.0, model);
    assert!(matches!(assemble_step(&problem), Err(SolverError::InvalidInput(_))));
}
