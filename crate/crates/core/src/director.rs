//! Director step: implicit diffusion, explicit transport and `|∇d|² d`,
//! followed by pointwise projection onto the unit sphere.
//!
//! The discrete gradient energy density is built so that `d · Δ_h d =
//! -|∇_h d|²` holds exactly for unit `d`. The tension `Δ_h d + |∇_h d|² d`
//! is then exactly tangent to the sphere, which the energy budget relies on.

use ndarray::{Array2, Zip};

use crate::error::SolverError;
use crate::grid::{DirectorBc, DirectorField, FaceField, GridSpec, ScalarBc, ScalarField, VectorField};
use crate::linalg::{Closure1D, Operator1D, SeparableSolver};
use crate::ops::{advect_array, face_director_force, laplacian_array};
use crate::scalar::Real;

/// Pointwise `|∇_h d|²`. Each interior neighbour pair contributes
/// `½|d_j - d_i|²/h²`, a Dirichlet wall `|e - d_i|²/h²`, a Neumann wall nothing.
pub fn gradient_energy_density<T: Real>(d: &DirectorField<T>) -> Array2<T> {
    let g = d.grid;
    let (nx, ny) = (g.nx(), g.ny());
    let (rx, ry) = (T::one() / (g.hx() * g.hx()), T::one() / (g.hy() * g.hy()));
    let half = T::lit(0.5);
    let dirichlet = d.bc == DirectorBc::DirichletE;
    let mut out = Array2::zeros((ny, nx));
    for j in 0..ny {
        for i in 0..nx {
            let di = d.at(i, j);
            let pair = |o: [T; 3]| -> T {
                let mut s = T::zero();
                for k in 0..3 {
                    let diff = o[k] - di[k];
                    s += diff * diff;
                }
                s
            };
            let mut acc = T::zero();
            for (inside, ni, nj, w) in [
                (i > 0, i.wrapping_sub(1), j, rx),
                (i + 1 < nx, i + 1, j, rx),
                (j > 0, i, j.wrapping_sub(1), ry),
                (j + 1 < ny, i, j + 1, ry),
            ] {
                if inside {
                    acc += half * w * pair(d.at(ni, nj));
                } else if dirichlet {
                    acc += w * pair(d.e);
                }
            }
            out[[j, i]] = acc;
        }
    }
    out
}

fn laplacians<T: Real>(d: &DirectorField<T>) -> [Array2<T>; 3] {
    [0, 1, 2].map(|k| laplacian_array(&d.grid, &d.d[k], d.component_bc(k)))
}

/// `T = Δ_h d + |∇_h d|² d` per component.
pub fn director_tension<T: Real>(d: &DirectorField<T>) -> [ScalarField<T>; 3] {
    let energy = gradient_energy_density(d);
    let lap = laplacians(d);
    [0, 1, 2].map(|k| {
        let mut v = lap[k].clone();
        Zip::from(&mut v).and(&energy).and(&d.d[k]).for_each(|t, &w, &dk| *t += w * dk);
        ScalarField::from_values(d.grid, ScalarBc::NeumannZero, v)
    })
}

/// Momentum forcing `-(Δd)·∇d` on interior faces.
pub fn elastic_stress_rhs<T: Real>(d: &DirectorField<T>) -> FaceField<T> {
    face_director_force(&d.grid, &d.d, &laplacians(d))
}

/// Elastic energy `½ ∫ |∇d|²` from face differences; Dirichlet walls add
/// the half-cell difference to `e`.
pub fn elastic_energy<T: Real>(d: &DirectorField<T>) -> T {
    let g = d.grid;
    let (nx, ny) = (g.nx(), g.ny());
    let (wx, wy) = (g.hy() / g.hx(), g.hx() / g.hy());
    let half = T::lit(0.5);
    let mut interior = T::zero();
    let mut wall = T::zero();
    for k in 0..3 {
        let a = &d.d[k];
        for j in 0..ny {
            for i in 0..nx {
                if i + 1 < nx {
                    let diff = a[[j, i + 1]] - a[[j, i]];
                    interior += wx * diff * diff;
                }
                if j + 1 < ny {
                    let diff = a[[j + 1, i]] - a[[j, i]];
                    interior += wy * diff * diff;
                }
            }
        }
        if d.bc == DirectorBc::DirichletE {
            let e = d.e[k];
            for j in 0..ny {
                for i in [0, nx - 1] {
                    wall += wx * (a[[j, i]] - e) * (a[[j, i]] - e);
                }
            }
            for i in 0..nx {
                for j in [0, ny - 1] {
                    wall += wy * (a[[j, i]] - e) * (a[[j, i]] - e);
                }
            }
        }
    }
    half * interior + wall
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectorStepOptions<T> {
    /// Project back onto `|d| = 1` after the linear solve.
    pub renormalize: bool,
    /// Smallest admissible `|d|` before projection.
    pub breakdown_norm: T,
}

impl<T: Real> Default for DirectorStepOptions<T> {
    fn default() -> Self {
        Self { renormalize: true, breakdown_norm: T::lit(0.5) }
    }
}

/// Implicit vector diffusion for one grid and boundary condition.
#[derive(Debug, Clone)]
pub struct DirectorSolver<T> {
    grid: GridSpec<T>,
    bc: DirectorBc,
    diffusion: SeparableSolver<T>,
}

impl<T: Real> DirectorSolver<T> {
    pub fn new(grid: GridSpec<T>, bc: DirectorBc) -> Self {
        let closure = match bc {
            DirectorBc::DirichletE => Closure1D::CellDirichlet,
            DirectorBc::Neumann => Closure1D::CellNeumann,
        };
        let diffusion = SeparableSolver::new(
            Operator1D::new(grid.nx(), grid.hx().to_f64_lossy(), closure),
            Operator1D::new(grid.ny(), grid.hy().to_f64_lossy(), closure),
        );
        Self { grid, bc, diffusion }
    }

    /// `(dⁿ⁺¹ - dⁿ)/dt - Δdⁿ⁺¹ = -uⁿ·∇dⁿ + |∇dⁿ|² dⁿ`, then `d ← d/|d|`.
    pub fn step(
        &self,
        d_old: &DirectorField<T>,
        u: &VectorField<T>,
        dt: T,
        options: DirectorStepOptions<T>,
    ) -> Result<DirectorField<T>, SolverError> {
        self.step_lagged(d_old, d_old, u, dt, options)
    }

    /// Same as [`step`](Self::step) with the explicit terms evaluated at the
    /// iterate `d_lag` instead of `d_old`.
    pub fn step_lagged(
        &self,
        d_old: &DirectorField<T>,
        d_lag: &DirectorField<T>,
        u: &VectorField<T>,
        dt: T,
        options: DirectorStepOptions<T>,
    ) -> Result<DirectorField<T>, SolverError> {
        if !(dt > T::zero()) {
            return Err(SolverError::InvalidInput(format!("dt must be positive, got {dt}")));
        }
        if d_old.bc != self.bc || d_lag.bc != self.bc {
            return Err(SolverError::InvalidInput("director boundary condition differs from solver".into()));
        }
        let g = self.grid;
        let (nx, ny) = (g.nx(), g.ny());
        let inv_dt = T::one() / dt;
        let energy = gradient_energy_density(d_lag);
        let two = T::lit(2.0);
        let (rx, ry) = (T::one() / (g.hx() * g.hx()), T::one() / (g.hy() * g.hy()));
        let mut next = d_old.clone();
        for k in 0..3 {
            let mut b = advect_array(u, &g, &d_lag.d[k]).mapv(|v| -v);
            Zip::from(&mut b)
                .and(&energy)
                .and(&d_lag.d[k])
                .and(&d_old.d[k])
                .for_each(|b, &w, &dl, &dk| *b += w * dl + dk * inv_dt);
            if self.bc == DirectorBc::DirichletE {
                // ghost 2e - d moves 2e/h² per wall side to the right-hand side
                let e = d_old.e[k];
                for j in 0..ny {
                    b[[j, 0]] += two * e * rx;
                    b[[j, nx - 1]] += two * e * rx;
                }
                for i in 0..nx {
                    b[[0, i]] += two * e * ry;
                    b[[ny - 1, i]] += two * e * ry;
                }
            }
            next.d[k] = self.diffusion.solve(&b, inv_dt, T::one());
        }
        if !next.is_finite() {
            return Err(SolverError::NonFinite { stage: "director step" });
        }
        let (min_norm, i, j) = next.min_norm();
        if min_norm < options.breakdown_norm {
            return Err(SolverError::RenormalizationBreakdown { min_norm: min_norm.to_f64_lossy(), i, j });
        }
        if options.renormalize {
            next.renormalize();
        }
        Ok(next)
    }
}

/// One-shot director step with renormalization; prefer [`DirectorSolver`]
/// when stepping.
pub fn director_step<T: Real>(d_old: &DirectorField<T>, u: &VectorField<T>, dt: T) -> Result<DirectorField<T>, SolverError> {
    DirectorSolver::new(d_old.grid, d_old.bc).step(d_old, u, dt, DirectorStepOptions::default())
}
