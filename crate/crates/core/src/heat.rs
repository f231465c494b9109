//! Temperature step with viscous and director dissipation sources.
//!
//! The viscous source is `½ μ(θ) |∇u + ∇ᵀu|² = 2 μ 𝓓:𝓓` with `𝓓` the
//! symmetric part of `∇u`. Normal strains live at cell centres; the shear
//! strain lives at corners and each cell receives a quarter of the shear
//! dissipation of its four corners, so the integrated source equals the
//! discrete viscous dissipation exactly.

use ndarray::{Array2, Zip};

use crate::director::director_tension;
use crate::error::SolverError;
use crate::grid::{DirectorField, GridSpec, ScalarBc, ScalarField, VectorField};
use crate::linalg::{Closure1D, Operator1D, SeparableSolver};
use crate::ops::{advect, cells_to_corners, deformation};
use crate::scalar::Real;
use crate::viscosity::ViscosityModel;

/// The two heat sources, kept apart for the energy budget.
#[derive(Debug, Clone, PartialEq)]
pub struct DissipationSources<T> {
    pub viscous: ScalarField<T>,
    /// `|Δd + |∇d|² d|²`.
    pub elastic: ScalarField<T>,
}

impl<T: Real> DissipationSources<T> {
    pub fn total(&self) -> ScalarField<T> {
        let mut out = self.viscous.clone();
        out.values += &self.elastic.values;
        out
    }
}

/// Viscous dissipation density per cell.
pub fn viscous_source<T: Real>(u: &VectorField<T>, theta: &ScalarField<T>, model: &ViscosityModel<T>) -> ScalarField<T> {
    let g = u.grid();
    let def = deformation(u);
    let mu_c = theta.values.mapv(|t| model.mu(t));
    let shear = &def.d12_corner * &def.d12_corner * &cells_to_corners(&theta.values).mapv(|t| model.mu(t));
    let two = T::lit(2.0);
    let mut out = Array2::zeros((g.ny(), g.nx()));
    Zip::indexed(&mut out)
        .and(&def.d11)
        .and(&def.d22)
        .and(&mu_c)
        .for_each(|(j, i), o, &a, &b, &m| {
            let corners = shear[[j, i]] + shear[[j, i + 1]] + shear[[j + 1, i]] + shear[[j + 1, i + 1]];
            *o = two * m * (a * a + b * b) + corners;
        });
    ScalarField::from_values(g, ScalarBc::NeumannZero, out)
}

pub fn dissipation_sources<T: Real>(
    u: &VectorField<T>,
    d: &DirectorField<T>,
    theta: &ScalarField<T>,
    model: &ViscosityModel<T>,
) -> DissipationSources<T> {
    let tension = director_tension(d);
    let elastic = Zip::from(&tension[0].values)
        .and(&tension[1].values)
        .and(&tension[2].values)
        .map_collect(|&a, &b, &c| a * a + b * b + c * c);
    DissipationSources {
        viscous: viscous_source(u, theta, model),
        elastic: ScalarField::from_values(d.grid, ScalarBc::NeumannZero, elastic),
    }
}

/// Implicit Neumann diffusion solver for one grid.
#[derive(Debug, Clone)]
pub struct HeatSolver<T> {
    grid: GridSpec<T>,
    diffusion: SeparableSolver<T>,
}

impl<T: Real> HeatSolver<T> {
    pub fn new(grid: GridSpec<T>) -> Self {
        let diffusion = SeparableSolver::new(
            Operator1D::new(grid.nx(), grid.hx().to_f64_lossy(), Closure1D::CellNeumann),
            Operator1D::new(grid.ny(), grid.hy().to_f64_lossy(), Closure1D::CellNeumann),
        );
        Self { grid, diffusion }
    }

    /// Solves `(θ - θ_old)/dt - Δθ = source` with zero-flux walls.
    pub fn diffuse(&self, theta_old: &ScalarField<T>, source: &Array2<T>, dt: T) -> ScalarField<T> {
        let inv_dt = T::one() / dt;
        let b = &theta_old.values * inv_dt + source;
        let values = self.diffusion.solve(&b, inv_dt, T::one());
        ScalarField::from_values(self.grid, ScalarBc::NeumannZero, values)
    }

    /// `(θⁿ⁺¹ - θⁿ)/dt - Δθⁿ⁺¹ = -uⁿ·∇θⁿ + ½μ(θⁿ)|∇uⁿ+∇ᵀuⁿ|² + |T(dⁿ)|²`.
    pub fn step(
        &self,
        theta_old: &ScalarField<T>,
        u: &VectorField<T>,
        d: &DirectorField<T>,
        model: &ViscosityModel<T>,
        dt: T,
    ) -> Result<ScalarField<T>, SolverError> {
        self.step_lagged(theta_old, theta_old, u, d, model, dt)
    }

    /// Same as [`step`](Self::step) with transport and sources evaluated at
    /// the iterate `theta_lag`.
    pub fn step_lagged(
        &self,
        theta_old: &ScalarField<T>,
        theta_lag: &ScalarField<T>,
        u: &VectorField<T>,
        d: &DirectorField<T>,
        model: &ViscosityModel<T>,
        dt: T,
    ) -> Result<ScalarField<T>, SolverError> {
        if !(dt > T::zero()) {
            return Err(SolverError::InvalidInput(format!("dt must be positive, got {dt}")));
        }
        let sources = dissipation_sources(u, d, theta_lag, model);
        let mut rhs = sources.total().values;
        rhs -= &advect(u, theta_lag).values;
        let theta = self.diffuse(theta_old, &rhs, dt);
        if !theta.is_finite() {
            return Err(SolverError::NonFinite { stage: "heat step" });
        }
        Ok(theta)
    }
}

/// One-shot heat step; prefer [`HeatSolver`] when stepping.
pub fn heat_step<T: Real>(
    theta_old: &ScalarField<T>,
    u: &VectorField<T>,
    d: &DirectorField<T>,
    model: &ViscosityModel<T>,
    dt: T,
) -> Result<ScalarField<T>, SolverError> {
    HeatSolver::new(theta_old.grid).step(theta_old, u, d, model, dt)
}
