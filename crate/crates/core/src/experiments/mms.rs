//! Manufactured-solution convergence studies for the three linear solvers.

use std::f64::consts::PI;

use ndarray::Array2;

use crate::director::{DirectorSolver, DirectorStepOptions};
use crate::error::SolverError;
use crate::grid::{DirectorBc, DirectorField, FaceField, GridSpec, ScalarBc, ScalarField, VectorField};
use crate::heat::HeatSolver;
use crate::ops::curl_of_stream;
use crate::stokes::{assemble_step, StokesSolver, StokesStepProblem};
use crate::viscosity::ViscosityModel;

/// Errors against an exact solution over a sequence of refinement levels.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub label: String,
    /// Grid spacing or time step of each level, coarsest first.
    pub levels: Vec<f64>,
    pub errors: Vec<f64>,
}

impl ConvergenceStudy {
    /// Observed order between consecutive levels.
    pub fn pairwise_orders(&self) -> Vec<f64> {
        self.levels
            .windows(2)
            .zip(self.errors.windows(2))
            .map(|(l, e)| (e[0] / e[1]).ln() / (l[0] / l[1]).ln())
            .collect()
    }

    /// Least-squares slope of `log error` against `log level`.
    pub fn fitted_order(&self) -> f64 {
        let xs: Vec<f64> = self.levels.iter().map(|v| v.ln()).collect();
        let ys: Vec<f64> = self.errors.iter().map(|v| v.ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        sxy / sxx
    }
}

const STOKES_MU_MIN: f64 = 1.0;
const STOKES_MU_MAX: f64 = 1.5;

fn stokes_model() -> ViscosityModel<f64> {
    ViscosityModel::affine_tanh(STOKES_MU_MIN, STOKES_MU_MAX).expect("valid viscosity bounds")
}

/// Divergence-free, no-slip velocity profile of the Stokes study.
pub fn stokes_velocity(x: f64, y: f64) -> (f64, f64) {
    let (sx, sy) = ((PI * x).sin(), (PI * y).sin());
    (sx * sx * (2.0 * PI * y).sin(), -(2.0 * PI * x).sin() * sy * sy)
}

pub fn stokes_pressure(x: f64, y: f64) -> f64 {
    (PI * x).cos() * (PI * y).cos()
}

/// `-div(2 μ(θ) 𝓓(U)) + ∇p` for the Stokes profile with `θ = x + y`,
/// written as `-μ ΔU - 2 μ'(θ) 𝓓(U)(1, 1)` since `div U = 0`.
fn stokes_operator_forcing(x: f64, y: f64, amplitude: f64, pressure: f64) -> (f64, f64) {
    let model = stokes_model();
    let th = x + y;
    let (mu, mup) = (model.mu(th), model.mu_prime(th));
    let (sx, sy) = ((PI * x).sin(), (PI * y).sin());
    let (s2x, s2y, c2x, c2y) = ((2.0 * PI * x).sin(), (2.0 * PI * y).sin(), (2.0 * PI * x).cos(), (2.0 * PI * y).cos());
    let pi2 = PI * PI;
    let d11 = PI * s2x * s2y;
    let d22 = -d11;
    let d12 = 0.5 * (2.0 * PI * sx * sx * c2y - 2.0 * PI * c2x * sy * sy);
    let lap1 = 2.0 * pi2 * c2x * s2y - 4.0 * pi2 * sx * sx * s2y;
    let lap2 = 4.0 * pi2 * s2x * sy * sy - 2.0 * pi2 * s2x * c2y;
    let px = -PI * (PI * x).sin() * (PI * y).cos();
    let py = -PI * (PI * x).cos() * (PI * y).sin();
    (
        amplitude * (-mu * lap1 - 2.0 * mup * (d11 + d12)) + pressure * px,
        amplitude * (-mu * lap2 - 2.0 * mup * (d12 + d22)) + pressure * py,
    )
}

fn face_l2_error(u: &FaceField<f64>, exact: impl Fn(f64, f64) -> (f64, f64)) -> f64 {
    let g = u.grid;
    let mut s = 0.0;
    for ((j, i), v) in u.ux.indexed_iter() {
        let (x, y) = g.x_face(i, j);
        s += (v - exact(x, y).0).powi(2);
    }
    for ((j, i), v) in u.uy.indexed_iter() {
        let (x, y) = g.y_face(i, j);
        s += (v - exact(x, y).1).powi(2);
    }
    (s * g.cell_area()).sqrt()
}

fn cell_l2_error(f: &ScalarField<f64>, exact: impl Fn(f64, f64) -> f64) -> f64 {
    let g = f.grid;
    let mut s = 0.0;
    for ((j, i), v) in f.values.indexed_iter() {
        let (x, y) = g.cell_center(i, j);
        s += (v - exact(x, y)).powi(2);
    }
    (s * g.cell_area()).sqrt()
}

/// Single step with `u_old = 0`, `dt = 1`: the discrete steady problem
/// `U - div(2μ𝓓U) + ∇p = f`. Returns velocity and pressure studies.
pub fn stokes_spatial(grids: &[usize]) -> Result<(ConvergenceStudy, ConvergenceStudy), SolverError> {
    let mut vel = ConvergenceStudy { label: "stokes velocity (space)".into(), levels: vec![], errors: vec![] };
    let mut pre = ConvergenceStudy { label: "stokes pressure (space)".into(), levels: vec![], errors: vec![] };
    for &n in grids {
        let g = GridSpec::unit_square(n).map_err(|e| SolverError::InvalidInput(e.to_string()))?;
        let theta = ScalarField::from_fn(g, ScalarBc::NeumannZero, |x, y| x + y);
        let rhs = FaceField::from_fn(g, |x, y| {
            let (a, b) = stokes_operator_forcing(x, y, 1.0, 1.0);
            let (u, v) = stokes_velocity(x, y);
            (u + a, v + b)
        });
        let u0 = VectorField::zeros(g);
        let problem = StokesStepProblem::new(&u0, &theta, &rhs, 1.0, stokes_model());
        let sol = StokesSolver::new(g).solve(&problem)?;
        // pressure is defined up to a constant; compare mean-free parts
        let p_mean = ScalarField::from_fn(g, ScalarBc::NeumannZero, stokes_pressure).mean();
        vel.levels.push(g.hx());
        vel.errors.push(face_l2_error(sol.u.faces(), stokes_velocity));
        pre.levels.push(g.hx());
        pre.errors.push(cell_l2_error(&sol.p, |x, y| stokes_pressure(x, y) - p_mean));
    }
    Ok((vel, pre))
}

/// Stream function of the Stokes profile: its curl is `stokes_velocity`.
fn stokes_stream(x: f64, y: f64) -> f64 {
    let (sx, sy) = ((PI * x).sin(), (PI * y).sin());
    sx * sx * sy * sy / PI
}

/// `u = e^{-t} U_h`, `p = e^{-t} p_h` with `U_h` the discrete curl of the
/// sampled stream function. The forcing applies the discrete spatial
/// operator to `U_h`, so the semi-discrete solution is exact and the measured
/// error is the time-discretization error alone.
pub fn stokes_temporal(n: usize, t_end: f64, dts: &[f64]) -> Result<ConvergenceStudy, SolverError> {
    let g = GridSpec::unit_square(n).map_err(|e| SolverError::InvalidInput(e.to_string()))?;
    let solver = StokesSolver::new(g);
    let theta = ScalarField::from_fn(g, ScalarBc::NeumannZero, |x, y| x + y);
    let psi = Array2::from_shape_fn((n + 1, n + 1), |(j, i)| {
        let (x, y) = g.corner(i, j);
        stokes_stream(x, y)
    });
    let profile = curl_of_stream(&g, &psi);
    let pressure = ScalarField::from_fn(g, ScalarBc::NeumannZero, stokes_pressure);
    // spatial operator without the mass term: A(dt = 1) U - U + G p
    let zero_force = FaceField::zeros(g);
    let zero_u = VectorField::zeros(g);
    let steady = assemble_step(&StokesStepProblem::new(&zero_u, &theta, &zero_force, 1.0, stokes_model()))?;
    let (mut spatial, _) = steady.apply(profile.faces(), &pressure);
    spatial.axpy(-1.0, profile.faces());
    spatial.zero_boundary();

    let mut study = ConvergenceStudy { label: "stokes velocity (time)".into(), levels: vec![], errors: vec![] };
    for &dt in dts {
        let steps = (t_end / dt).round() as usize;
        let mut u = profile.clone();
        let mut p: Option<ScalarField<f64>> = None;
        for k in 1..=steps {
            let gt = (-(k as f64) * dt).exp();
            let mut rhs = spatial.scaled(gt);
            rhs.axpy(-gt, profile.faces());
            let mut problem = StokesStepProblem::new(&u, &theta, &rhs, dt, stokes_model());
            if let Some(p) = &p {
                problem = problem.with_pressure_guess(p);
            }
            let sol = solver.solve(&problem)?;
            u = sol.u;
            p = Some(sol.p);
        }
        let gt = (-(steps as f64) * dt).exp();
        let mut err = u.faces().clone();
        err.axpy(-gt, profile.faces());
        study.levels.push(dt);
        study.errors.push(crate::ops::face_dot(&err, &err).sqrt());
    }
    Ok(study)
}

const PHASE_AMPLITUDE: f64 = 0.5;

/// Phase `φ = A cos(πx) e^{-π²t}` solving the scalar heat equation with
/// zero-flux walls.
fn phase(x: f64, t: f64) -> f64 {
    PHASE_AMPLITUDE * (PI * x).cos() * (-PI * PI * t).exp()
}

/// Circle-valued director `(cos φ, sin φ, 0)`: the harmonic map flow reduces
/// to the heat equation for `φ`.
fn circle_director(g: GridSpec<f64>, t: f64) -> DirectorField<f64> {
    DirectorField::from_fn(g, [0.0, 0.0, 1.0], DirectorBc::Neumann, |x, _| {
        let p = phase(x, t);
        [p.cos(), p.sin(), 0.0]
    })
}

fn director_error(d: &DirectorField<f64>, exact: &DirectorField<f64>) -> f64 {
    let s: f64 = (0..3).map(|k| (&d.d[k] - &exact.d[k]).mapv(|v| v * v).sum()).sum();
    (s * d.grid.cell_area()).sqrt()
}

fn run_director(g: GridSpec<f64>, dt: f64, t_end: f64) -> Result<f64, SolverError> {
    let steps = (t_end / dt).round() as usize;
    let solver = DirectorSolver::new(g, DirectorBc::Neumann);
    let u = VectorField::zeros(g);
    let mut d = circle_director(g, 0.0);
    for _ in 0..steps {
        d = solver.step(&d, &u, dt, DirectorStepOptions::default())?;
    }
    Ok(director_error(&d, &circle_director(g, steps as f64 * dt)))
}

fn run_heat(g: GridSpec<f64>, dt: f64, t_end: f64) -> Result<f64, SolverError> {
    let steps = (t_end / dt).round() as usize;
    let solver = HeatSolver::new(g);
    let model = ViscosityModel::constant(1.0).expect("positive viscosity");
    let u = VectorField::zeros(g);
    let d = DirectorField::uniform(g, [0.0, 0.0, 1.0], DirectorBc::DirichletE);
    let exact = |t: f64| move |x: f64, _y: f64| (PI * x).cos() * (-PI * PI * t).exp();
    let mut theta = ScalarField::from_fn(g, ScalarBc::NeumannZero, exact(0.0));
    for _ in 0..steps {
        theta = solver.step(&theta, &u, &d, &model, dt)?;
    }
    Ok(cell_l2_error(&theta, exact(steps as f64 * dt)))
}

/// Ratio `dt / h²` of the spatial studies, so the time error shrinks with `h²`.
const DIFFUSIVE_RATIO: f64 = 0.25;
const SPATIAL_HORIZON: f64 = 0.02;

fn spatial_study(
    label: &str,
    grids: &[usize],
    run: impl Fn(GridSpec<f64>, f64, f64) -> Result<f64, SolverError>,
) -> Result<ConvergenceStudy, SolverError> {
    let mut study = ConvergenceStudy { label: label.into(), levels: vec![], errors: vec![] };
    for &n in grids {
        let g = GridSpec::unit_square(n).map_err(|e| SolverError::InvalidInput(e.to_string()))?;
        let h: f64 = g.hx();
        // an integer number of steps reaching the common horizon
        let steps = (SPATIAL_HORIZON / (DIFFUSIVE_RATIO * h * h)).ceil();
        study.levels.push(h);
        study.errors.push(run(g, SPATIAL_HORIZON / steps, SPATIAL_HORIZON)?);
    }
    Ok(study)
}

/// Temporal studies use a grid that is fine in `x` (the only direction the
/// exact solutions vary in), so the time error dominates.
fn temporal_study(
    label: &str,
    dts: &[f64],
    t_end: f64,
    run: impl Fn(GridSpec<f64>, f64, f64) -> Result<f64, SolverError>,
) -> Result<ConvergenceStudy, SolverError> {
    let g = GridSpec::new(128, 8, 1.0, 1.0).map_err(|e| SolverError::InvalidInput(e.to_string()))?;
    let mut study = ConvergenceStudy { label: label.into(), levels: vec![], errors: vec![] };
    for &dt in dts {
        study.levels.push(dt);
        study.errors.push(run(g, dt, t_end)?);
    }
    Ok(study)
}

pub fn director_spatial(grids: &[usize]) -> Result<ConvergenceStudy, SolverError> {
    spatial_study("director (space)", grids, run_director)
}

pub fn director_temporal(dts: &[f64], t_end: f64) -> Result<ConvergenceStudy, SolverError> {
    temporal_study("director (time)", dts, t_end, run_director)
}

pub fn heat_spatial(grids: &[usize]) -> Result<ConvergenceStudy, SolverError> {
    spatial_study("heat (space)", grids, run_heat)
}

pub fn heat_temporal(dts: &[f64], t_end: f64) -> Result<ConvergenceStudy, SolverError> {
    temporal_study("heat (time)", dts, t_end, run_heat)
}

pub const DEFAULT_GRIDS: [usize; 3] = [16, 32, 64];
pub const DEFAULT_DTS: [f64; 3] = [0.004, 0.002, 0.001];
pub const TEMPORAL_HORIZON: f64 = 0.05;
pub const STOKES_TEMPORAL_GRID: usize = 32;
pub const STOKES_TEMPORAL_DTS: [f64; 3] = [0.02, 0.01, 0.005];
pub const STOKES_TEMPORAL_HORIZON: f64 = 0.2;

/// Every study, spatial ones on `grids`.
#[derive(Debug, Clone)]
pub struct MmsReport {
    pub spatial: Vec<ConvergenceStudy>,
    pub temporal: Vec<ConvergenceStudy>,
}

pub fn run_all(grids: &[usize]) -> Result<MmsReport, SolverError> {
    let (vel, pre) = stokes_spatial(grids)?;
    let spatial = vec![vel, pre, director_spatial(grids)?, heat_spatial(grids)?];
    let temporal = vec![
        stokes_temporal(STOKES_TEMPORAL_GRID, STOKES_TEMPORAL_HORIZON, &STOKES_TEMPORAL_DTS)?,
        director_temporal(&DEFAULT_DTS, TEMPORAL_HORIZON)?,
        heat_temporal(&DEFAULT_DTS, TEMPORAL_HORIZON)?,
    ];
    Ok(MmsReport { spatial, temporal })
}
