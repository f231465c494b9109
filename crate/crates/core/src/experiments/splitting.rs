//! Splitting versus monolithic Stokes solves across viscosity contrasts.

use crate::error::SolverError;
use crate::grid::{FaceField, GridSpec, ScalarBc, ScalarField, VectorField};
use crate::ops::face_dot;
use crate::stokes::{StokesSolver, StokesStepProblem, StokesStrategy};
use crate::viscosity::ViscosityModel;

/// Outer-iteration budget of the splitting solver in the contrast study.
pub const CONTRAST_MAX_ITER: usize = 100;
pub const DEFAULT_CONTRASTS: [f64; 4] = [1.1, 2.0, 5.0, 20.0];

#[derive(Debug, Clone, PartialEq)]
pub struct ContrastRow {
    pub contrast: f64,
    /// Outer iterations used, or the budget when the iteration failed.
    pub iterations: usize,
    pub converged: bool,
    /// `‖u_split - u_mono‖₂` on converged rows.
    pub velocity_gap: Option<f64>,
    pub failure: Option<SolverError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContrastStudy {
    pub rows: Vec<ContrastRow>,
}

impl ContrastStudy {
    /// Iteration counts never decrease with contrast (failed rows count as the budget).
    pub fn monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[0].iterations <= w[1].iterations)
    }

    /// Smallest contrast at which the splitting iteration failed.
    pub fn divergence_threshold(&self) -> Option<f64> {
        self.rows.iter().find(|r| !r.converged).map(|r| r.contrast)
    }
}

/// One implicit step with `μ = μ_min + (μ_max - μ_min)(1 + tanh θ)/2`,
/// `θ = 6(x - ½) + 3 sin(πy)`, `μ_max/μ_min = contrast`, a smooth body force and
/// `dt = 1`, solved both ways on an `n × n` grid.
pub fn splitting_contrast_study(n: usize, contrasts: &[f64], max_iter: usize) -> Result<ContrastStudy, SolverError> {
    let grid = GridSpec::<f64>::unit_square(n).map_err(|e| SolverError::InvalidInput(e.to_string()))?;
    let solver = StokesSolver::new(grid);
    let pi = std::f64::consts::PI;
    let theta = ScalarField::from_fn(grid, ScalarBc::NeumannZero, |x, y| 6.0 * (x - 0.5) + 3.0 * (pi * y).sin());
    let rhs = FaceField::from_fn(grid, |x, y| {
        ((2.0 * pi * y).sin() * (pi * x).sin() + x, (pi * x).cos() * (pi * y).sin())
    });
    let u_old = VectorField::zeros(grid);
    let mut rows = Vec::new();
    for &contrast in contrasts {
        let model = ViscosityModel::affine_tanh(1.0, contrast).map_err(|e| SolverError::InvalidInput(e.to_string()))?;
        let base = StokesStepProblem::new(&u_old, &theta, &rhs, 1.0, model).with_tol(1e-11);
        let mono = solver.solve(&base.with_strategy(StokesStrategy::Monolithic))?;
        let split = solver.solve(&base.with_strategy(StokesStrategy::Splitting).with_max_iter(max_iter));
        rows.push(match split {
            Ok(s) => {
                let mut diff = s.u.faces().clone();
                diff.axpy(-1.0, mono.u.faces());
                ContrastRow {
                    contrast,
                    iterations: s.iterations,
                    converged: true,
                    velocity_gap: Some(face_dot(&diff, &diff).sqrt()),
                    failure: None,
                }
            }
            Err(e) => ContrastRow {
                contrast,
                iterations: match e {
                    SolverError::NonConvergence { iterations, .. } => iterations.max(max_iter),
                    _ => max_iter,
                },
                converged: false,
                velocity_gap: None,
                failure: Some(e),
            },
        });
    }
    Ok(ContrastStudy { rows })
}
