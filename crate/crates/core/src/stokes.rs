//! One backward-Euler step of the variable-viscosity Stokes problem
//!
//! ```text
//! (u - u_old)/dt - div(2 μ(θ) 𝓓(u)) + ∇P = f,   div u = 0,   mean(P) = 0
//! ```
//!
//! on the staggered grid with no-slip walls. The saddle-point system is
//! symmetric, so it is solved by MINRES with a block-diagonal preconditioner:
//! the constant-coefficient velocity operator (exact, by fast
//! diagonalization) and a Cahouet–Chabard pressure block. The splitting
//! strategy instead freezes the viscosity at `μ(mean θ)` and iterates on the
//! difference.

use ndarray::{s, Array1, Array2, ArrayView2, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::SolverError;
use crate::grid::{FaceField, GridSpec, ScalarBc, ScalarField, VectorField};
use crate::linalg::{minres, Closure1D, Operator1D, SeparableSolver};
use crate::ops::{cells_to_corners, deformation_of};
use crate::scalar::Real;
use crate::viscosity::ViscosityModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StokesStrategy {
    Monolithic,
    Splitting,
}

/// Data for one implicit Stokes step.
#[derive(Debug, Clone, Copy)]
pub struct StokesStepProblem<'a, T> {
    pub u_old: &'a VectorField<T>,
    pub theta: &'a ScalarField<T>,
    /// Body force on faces; boundary entries are ignored.
    pub rhs: &'a FaceField<T>,
    pub dt: T,
    pub model: ViscosityModel<T>,
    pub strategy: StokesStrategy,
    /// Bound on the scaled momentum residual and on `max |div u|`.
    pub tol: T,
    /// Krylov iterations (monolithic) or outer iterations (splitting).
    pub max_iter: usize,
    /// Starting pressure, typically the previous step's.
    pub p_guess: Option<&'a ScalarField<T>>,
}

impl<'a, T: Real> StokesStepProblem<'a, T> {
    pub const DEFAULT_MAX_ITER: usize = 1000;

    pub fn new(
        u_old: &'a VectorField<T>,
        theta: &'a ScalarField<T>,
        rhs: &'a FaceField<T>,
        dt: T,
        model: ViscosityModel<T>,
    ) -> Self {
        Self {
            u_old,
            theta,
            rhs,
            dt,
            model,
            strategy: StokesStrategy::Monolithic,
            tol: T::lit(1e-10),
            max_iter: Self::DEFAULT_MAX_ITER,
            p_guess: None,
        }
    }

    pub fn with_strategy(mut self, strategy: StokesStrategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn with_tol(mut self, tol: T) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_pressure_guess(mut self, p: &'a ScalarField<T>) -> Self {
        self.p_guess = Some(p);
        self
    }

    fn validate(&self) -> Result<(), SolverError> {
        if !(self.dt > T::zero() && self.dt.is_finite()) {
            return Err(SolverError::InvalidInput(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.tol > T::zero()) {
            return Err(SolverError::InvalidInput(format!("tol must be positive, got {}", self.tol)));
        }
        if !self.theta.is_finite() {
            return Err(SolverError::NonFinite { stage: "stokes input temperature" });
        }
        if !self.rhs.is_finite() || !self.u_old.faces().is_finite() {
            return Err(SolverError::NonFinite { stage: "stokes input data" });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StokesSolution<T> {
    pub u: VectorField<T>,
    pub p: ScalarField<T>,
    /// `max(‖r_mom‖_∞ / (1 + ‖f‖_∞), ‖div u‖_∞)` at exit.
    pub residual: T,
    pub iterations: usize,
    pub converged: bool,
}

/// `A u = u/dt - div(2 μ 𝓓(u))` on interior faces, with `μ` at cell centres
/// for the normal stresses and at corners for the shear stress.
#[derive(Debug, Clone)]
pub struct ViscousOperator<T> {
    grid: GridSpec<T>,
    mu_cells: Array2<T>,
    mu_corners: Array2<T>,
    inv_dt: T,
}

impl<T: Real> ViscousOperator<T> {
    pub fn new(theta: &ScalarField<T>, model: &ViscosityModel<T>, dt: T) -> Self {
        let mu_cells = theta.values.mapv(|t| model.mu(t));
        let mu_corners = cells_to_corners(&theta.values).mapv(|t| model.mu(t));
        Self { grid: theta.grid, mu_cells, mu_corners, inv_dt: T::one() / dt }
    }

    pub fn constant(grid: GridSpec<T>, mu: T, dt: T) -> Self {
        Self {
            grid,
            mu_cells: Array2::from_elem((grid.ny(), grid.nx()), mu),
            mu_corners: Array2::from_elem((grid.ny() + 1, grid.nx() + 1), mu),
            inv_dt: T::one() / dt,
        }
    }

    pub fn mu_cells(&self) -> &Array2<T> {
        &self.mu_cells
    }

    pub fn mu_corners(&self) -> &Array2<T> {
        &self.mu_corners
    }

    pub fn apply(&self, u: &FaceField<T>) -> FaceField<T> {
        let (ux, uy) = self.apply_arrays(&u.ux, &u.uy);
        FaceField { grid: self.grid, ux, uy }
    }

    fn apply_arrays(&self, ux: &Array2<T>, uy: &Array2<T>) -> (Array2<T>, Array2<T>) {
        let g = &self.grid;
        let (nx, ny) = (g.nx(), g.ny());
        let (rhx, rhy) = (T::one() / g.hx(), T::one() / g.hy());
        let two = T::lit(2.0);
        let def = deformation_of(g, ux, uy);
        let s11 = &def.d11 * &self.mu_cells * two;
        let s22 = &def.d22 * &self.mu_cells * two;
        let s12 = &def.d12_corner * &self.mu_corners * two;

        let mut ox = Array2::zeros(ux.raw_dim());
        let mut oy = Array2::zeros(uy.raw_dim());
        Zip::from(ox.slice_mut(s![.., 1..nx]))
            .and(ux.slice(s![.., 1..nx]))
            .and(s11.slice(s![.., 1..]))
            .and(s11.slice(s![.., ..nx - 1]))
            .and(s12.slice(s![1.., 1..nx]))
            .and(s12.slice(s![..ny, 1..nx]))
            .for_each(|o, &u, &sr, &sl, &st, &sb| {
                *o = u * self.inv_dt - ((sr - sl) * rhx + (st - sb) * rhy);
            });
        Zip::from(oy.slice_mut(s![1..ny, ..]))
            .and(uy.slice(s![1..ny, ..]))
            .and(s22.slice(s![1.., ..]))
            .and(s22.slice(s![..ny - 1, ..]))
            .and(s12.slice(s![1..ny, 1..]))
            .and(s12.slice(s![1..ny, ..nx]))
            .for_each(|o, &v, &st, &sb, &sr, &sl| {
                *o = v * self.inv_dt - ((sr - sl) * rhx + (st - sb) * rhy);
            });
        (ox, oy)
    }

    /// Viscous dissipation `∫ 2 μ 𝓓(u):𝓓(u)`, equal to `⟨A u, u⟩ - ‖u‖²/dt`.
    pub fn dissipation(&self, u: &FaceField<T>) -> T {
        let g = &self.grid;
        let (nx, ny) = (g.nx(), g.ny());
        let def = deformation_of(g, &u.ux, &u.uy);
        let two = T::lit(2.0);
        let four = T::lit(4.0);
        let mut sum = T::zero();
        Zip::from(&def.d11).and(&def.d22).and(&self.mu_cells).for_each(|&a, &b, &m| {
            sum += two * m * (a * a + b * b);
        });
        for ((j, i), &d) in def.d12_corner.indexed_iter() {
            sum += four * crate::ops::corner_weight::<T>(i, j, nx, ny) * self.mu_corners[[j, i]] * d * d;
        }
        sum * g.cell_area()
    }
}

/// `u/dt - μ Δ_h u` componentwise, with the no-slip ghost closures.
#[derive(Debug, Clone, Copy)]
struct ReferenceOperator<T> {
    grid: GridSpec<T>,
    mu: T,
    inv_dt: T,
}

impl<T: Real> ReferenceOperator<T> {
    fn apply_arrays(&self, ux: &Array2<T>, uy: &Array2<T>) -> (Array2<T>, Array2<T>) {
        let g = &self.grid;
        let (nx, ny) = (g.nx(), g.ny());
        let (cx, cy) = (self.mu / (g.hx() * g.hx()), self.mu / (g.hy() * g.hy()));
        let two = T::lit(2.0);
        let mut ox = Array2::zeros(ux.raw_dim());
        let mut oy = Array2::zeros(uy.raw_dim());
        for j in 0..ny {
            for i in 1..nx {
                let c = ux[[j, i]];
                let up = if j + 1 < ny { ux[[j + 1, i]] } else { -c };
                let dn = if j > 0 { ux[[j - 1, i]] } else { -c };
                ox[[j, i]] = c * self.inv_dt - cx * (ux[[j, i + 1]] - two * c + ux[[j, i - 1]]) - cy * (up - two * c + dn);
            }
        }
        for j in 1..ny {
            for i in 0..nx {
                let c = uy[[j, i]];
                let rt = if i + 1 < nx { uy[[j, i + 1]] } else { -c };
                let lt = if i > 0 { uy[[j, i - 1]] } else { -c };
                oy[[j, i]] = c * self.inv_dt - cy * (uy[[j + 1, i]] - two * c + uy[[j - 1, i]]) - cx * (rt - two * c + lt);
            }
        }
        (ox, oy)
    }
}

/// The assembled step: momentum operator, total right-hand side
/// `f + u_old/dt`, and the reference viscosity used for preconditioning.
#[derive(Debug, Clone)]
pub struct SaddlePointSystem<T> {
    pub viscous: ViscousOperator<T>,
    pub rhs: FaceField<T>,
    pub mu_ref: T,
    pub dt: T,
}

impl<T: Real> SaddlePointSystem<T> {
    /// Applies `[A G; -D 0]` with `G = -Dᵀ` the face gradient, returning the
    /// momentum rows on faces and the continuity rows on cells.
    pub fn apply(&self, u: &FaceField<T>, p: &ScalarField<T>) -> (FaceField<T>, ScalarField<T>) {
        let g = self.viscous.grid;
        let (mut ax, mut ay) = self.viscous.apply_arrays(&u.ux, &u.uy);
        add_pressure_gradient(&g, &p.values, &mut ax, &mut ay);
        let div = divergence_arrays(&g, &u.ux, &u.uy).mapv(|v| -v);
        (FaceField { grid: g, ux: ax, uy: ay }, ScalarField::from_values(g, ScalarBc::NeumannZero, div))
    }
}

/// Builds the saddle-point system for one step.
pub fn assemble_step<T: Real>(problem: &StokesStepProblem<'_, T>) -> Result<SaddlePointSystem<T>, SolverError> {
    problem.validate()?;
    let g = problem.theta.grid;
    let viscous = ViscousOperator::new(problem.theta, &problem.model, problem.dt);
    let inv_dt = T::one() / problem.dt;
    let mut rhs = problem.rhs.clone();
    rhs.axpy(inv_dt, problem.u_old.faces());
    rhs.zero_boundary();
    let mu_ref = problem.model.mu(problem.theta.mean());
    debug_assert_eq!(rhs.grid.nx(), g.nx());
    Ok(SaddlePointSystem { viscous, rhs, mu_ref, dt: problem.dt })
}

fn add_pressure_gradient<T: Real>(g: &GridSpec<T>, p: &Array2<T>, ax: &mut Array2<T>, ay: &mut Array2<T>) {
    let (nx, ny) = (g.nx(), g.ny());
    let (rhx, rhy) = (T::one() / g.hx(), T::one() / g.hy());
    Zip::from(ax.slice_mut(s![.., 1..nx]))
        .and(p.slice(s![.., 1..]))
        .and(p.slice(s![.., ..nx - 1]))
        .for_each(|a, &r, &l| *a += (r - l) * rhx);
    Zip::from(ay.slice_mut(s![1..ny, ..]))
        .and(p.slice(s![1.., ..]))
        .and(p.slice(s![..ny - 1, ..]))
        .for_each(|a, &t, &b| *a += (t - b) * rhy);
}

fn divergence_arrays<T: Real>(g: &GridSpec<T>, ux: &Array2<T>, uy: &Array2<T>) -> Array2<T> {
    let (nx, ny) = (g.nx(), g.ny());
    let (rhx, rhy) = (T::one() / g.hx(), T::one() / g.hy());
    let mut out = Array2::zeros((ny, nx));
    Zip::from(&mut out)
        .and(ux.slice(s![.., 1..]))
        .and(ux.slice(s![.., ..nx]))
        .and(uy.slice(s![1.., ..]))
        .and(uy.slice(s![..ny, ..]))
        .for_each(|o, &r, &l, &t, &b| *o = (r - l) * rhx + (t - b) * rhy);
    out
}

/// Reusable Stokes solver for one grid. Construction computes the 1D
/// eigenbases used by the preconditioner; reuse it across steps.
#[derive(Debug, Clone)]
pub struct StokesSolver<T> {
    grid: GridSpec<T>,
    vel_x: SeparableSolver<T>,
    vel_y: SeparableSolver<T>,
    poisson: SeparableSolver<T>,
}

struct Unknowns<T> {
    ux: Array2<T>,
    uy: Array2<T>,
    p: Array2<T>,
}

impl<T: Real> StokesSolver<T> {
    pub fn new(grid: GridSpec<T>) -> Self {
        let (nx, ny) = (grid.nx(), grid.ny());
        let (hx, hy) = (grid.hx().to_f64_lossy(), grid.hy().to_f64_lossy());
        let vel_x = SeparableSolver::new(
            Operator1D::new(nx - 1, hx, Closure1D::NodeDirichlet),
            Operator1D::new(ny, hy, Closure1D::CellDirichlet),
        );
        let vel_y = SeparableSolver::new(
            Operator1D::new(nx, hx, Closure1D::CellDirichlet),
            Operator1D::new(ny - 1, hy, Closure1D::NodeDirichlet),
        );
        let poisson = SeparableSolver::new(
            Operator1D::new(nx, hx, Closure1D::CellNeumann),
            Operator1D::new(ny, hy, Closure1D::CellNeumann),
        );
        Self { grid, vel_x, vel_y, poisson }
    }

    pub fn grid(&self) -> GridSpec<T> {
        self.grid
    }

    /// Solves the Neumann Poisson problem `Δ_h φ = h` for zero-mean `h`,
    /// returning the zero-mean solution.
    pub fn neumann_poisson(&self, h: &Array2<T>) -> Array2<T> {
        let neg = h.mapv(|v| -v);
        self.poisson.solve(&neg, T::zero(), T::one())
    }

    pub fn solve(&self, problem: &StokesStepProblem<'_, T>) -> Result<StokesSolution<T>, SolverError> {
        match problem.strategy {
            StokesStrategy::Monolithic => self.solve_monolithic(problem),
            StokesStrategy::Splitting => self.solve_splitting(problem),
        }
    }

    fn sizes(&self) -> (usize, usize, usize) {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        (ny * (nx - 1), (ny - 1) * nx, ny * nx)
    }

    fn pack(&self, ux: &Array2<T>, uy: &Array2<T>, p: &Array2<T>) -> Array1<T> {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let (a, b, c) = self.sizes();
        let mut v = Vec::with_capacity(a + b + c);
        v.extend(ux.slice(s![.., 1..nx]).iter().copied());
        v.extend(uy.slice(s![1..ny, ..]).iter().copied());
        v.extend(p.iter().copied());
        Array1::from_vec(v)
    }

    fn blocks<'v>(&self, x: &'v Array1<T>) -> (ArrayView2<'v, T>, ArrayView2<'v, T>, ArrayView2<'v, T>) {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let (a, b, _) = self.sizes();
        let sl = x.as_slice().expect("contiguous Krylov vector");
        (
            ArrayView2::from_shape((ny, nx - 1), &sl[..a]).expect("ux block shape"),
            ArrayView2::from_shape((ny - 1, nx), &sl[a..a + b]).expect("uy block shape"),
            ArrayView2::from_shape((ny, nx), &sl[a + b..]).expect("pressure block shape"),
        )
    }

    fn unpack(&self, x: &Array1<T>) -> Unknowns<T> {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let (bx, by, bp) = self.blocks(x);
        let mut ux = self.grid.x_face_array();
        let mut uy = self.grid.y_face_array();
        ux.slice_mut(s![.., 1..nx]).assign(&bx);
        uy.slice_mut(s![1..ny, ..]).assign(&by);
        Unknowns { ux, uy, p: bp.to_owned() }
    }

    fn preconditioner(&self, x: &Array1<T>, mu_ref: T, inv_dt: T) -> Array1<T> {
        let (bx, by, bp) = self.blocks(x);
        let zx = self.vel_x.solve(&bx.to_owned(), inv_dt, mu_ref);
        let zy = self.vel_y.solve(&by.to_owned(), inv_dt, mu_ref);
        let bp = bp.to_owned();
        let mut zp = self.poisson.solve(&bp, T::zero(), T::one());
        zp.zip_mut_with(&bp, |z, &r| *z = *z * inv_dt + r * mu_ref);
        let mut v = Vec::with_capacity(x.len());
        v.extend(zx.iter().copied());
        v.extend(zy.iter().copied());
        v.extend(zp.iter().copied());
        Array1::from_vec(v)
    }

    fn system_apply(
        &self,
        mom: &impl Fn(&Array2<T>, &Array2<T>) -> (Array2<T>, Array2<T>),
        x: &Array1<T>,
    ) -> Array1<T> {
        let un = self.unpack(x);
        let (mut ax, mut ay) = mom(&un.ux, &un.uy);
        add_pressure_gradient(&self.grid, &un.p, &mut ax, &mut ay);
        let div = divergence_arrays(&self.grid, &un.ux, &un.uy).mapv(|v| -v);
        self.pack(&ax, &ay, &div)
    }

    /// `max(‖f - A u - G p‖_∞ / scale, ‖D u‖_∞)` over interior faces and cells.
    fn residual(
        &self,
        mom: &impl Fn(&Array2<T>, &Array2<T>) -> (Array2<T>, Array2<T>),
        f: &FaceField<T>,
        scale: T,
        x: &Array1<T>,
    ) -> T {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        let un = self.unpack(x);
        let (mut ax, mut ay) = mom(&un.ux, &un.uy);
        add_pressure_gradient(&self.grid, &un.p, &mut ax, &mut ay);
        let rx = (&f.ux.slice(s![.., 1..nx]) - &ax.slice(s![.., 1..nx])).fold(T::zero(), |m, v| m.max(v.abs()));
        let ry = (&f.uy.slice(s![1..ny, ..]) - &ay.slice(s![1..ny, ..])).fold(T::zero(), |m, v| m.max(v.abs()));
        let div = divergence_arrays(&self.grid, &un.ux, &un.uy).fold(T::zero(), |m, v| m.max(v.abs()));
        let r = (rx.max(ry) / scale).max(div);
        if r.is_finite() {
            r
        } else {
            T::infinity()
        }
    }

    /// Restarted MINRES until the true residual meets `tol` or `budget`
    /// iterations are spent. Returns `(iterations, residual)`.
    #[allow(clippy::too_many_arguments)]
    fn krylov(
        &self,
        mom: &impl Fn(&Array2<T>, &Array2<T>) -> (Array2<T>, Array2<T>),
        f: &FaceField<T>,
        scale: T,
        x: &mut Array1<T>,
        mu_ref: T,
        inv_dt: T,
        tol: T,
        budget: usize,
    ) -> (usize, T) {
        let (_, _, np) = self.sizes();
        let b = self.pack(&f.ux, &f.uy, &Array2::zeros((self.grid.ny(), self.grid.nx())));
        let mut used = 0;
        let mut res = self.residual(mom, f, scale, x);
        let floor = T::lit(1e-15);
        while res > tol && used < budget && res.is_finite() {
            let rtol = (T::lit(0.1) * tol / res).max(floor).min(T::lit(0.5));
            let out = minres(
                |v| self.system_apply(mom, v),
                |v| self.preconditioner(v, mu_ref, inv_dt),
                &b,
                x,
                rtol,
                T::zero(),
                budget - used,
            );
            used += out.iterations.max(1);
            // keep the pressure block mean-free
            let n = x.len();
            let mut pblk = x.slice_mut(s![n - np..]);
            let m = pblk.sum() / T::from_count(np);
            pblk.mapv_inplace(|v| v - m);
            let next = self.residual(mom, f, scale, x);
            if out.iterations == 0 && next >= res {
                res = next;
                break;
            }
            res = next;
        }
        (used, res)
    }

    fn finish(&self, x: &Array1<T>, residual: T, iterations: usize) -> StokesSolution<T> {
        let un = self.unpack(x);
        let mut p = ScalarField::from_values(self.grid, ScalarBc::NeumannZero, un.p);
        p.remove_mean();
        let u = VectorField::from_faces(FaceField { grid: self.grid, ux: un.ux, uy: un.uy });
        StokesSolution { u, p, residual, iterations, converged: true }
    }

    fn initial_guess(&self, problem: &StokesStepProblem<'_, T>) -> Array1<T> {
        let u = problem.u_old.faces();
        let zero;
        let p = match problem.p_guess {
            Some(p) => &p.values,
            None => {
                zero = Array2::zeros((self.grid.ny(), self.grid.nx()));
                &zero
            }
        };
        self.pack(&u.ux, &u.uy, p)
    }

    /// Solves the full variable-viscosity system in one Krylov iteration.
    pub fn solve_monolithic(&self, problem: &StokesStepProblem<'_, T>) -> Result<StokesSolution<T>, SolverError> {
        let sys = assemble_step(problem)?;
        let scale = T::one() + sys.rhs.max_abs();
        let inv_dt = T::one() / problem.dt;
        let mom = |ux: &Array2<T>, uy: &Array2<T>| sys.viscous.apply_arrays(ux, uy);
        let mut x = self.initial_guess(problem);
        let (iters, res) = self.krylov(&mom, &sys.rhs, scale, &mut x, sys.mu_ref, inv_dt, problem.tol, problem.max_iter);
        if !(res <= problem.tol) {
            return Err(SolverError::NonConvergence { residual: res.to_f64_lossy(), iterations: iters });
        }
        Ok(self.finish(&x, res, iters))
    }

    /// Freezes the viscosity at `μ(mean θ)` and iterates
    /// `A_ref u^{k} + G p^{k} = f + (A_ref - A) u^{k-1}` until the
    /// variable-viscosity residual meets `tol`.
    pub fn solve_splitting(&self, problem: &StokesStepProblem<'_, T>) -> Result<StokesSolution<T>, SolverError> {
        let sys = assemble_step(problem)?;
        let scale = T::one() + sys.rhs.max_abs();
        let inv_dt = T::one() / problem.dt;
        let reference = ReferenceOperator { grid: self.grid, mu: sys.mu_ref, inv_dt };
        let ref_mom = |ux: &Array2<T>, uy: &Array2<T>| reference.apply_arrays(ux, uy);
        let var_mom = |ux: &Array2<T>, uy: &Array2<T>| sys.viscous.apply_arrays(ux, uy);
        let inner_tol = problem.tol * T::lit(0.1);
        let inner_budget = Self::DEFAULT_INNER_BUDGET;

        let mut x = self.initial_guess(problem);
        let mut res = self.residual(&var_mom, &sys.rhs, scale, &x);
        let mut prev_update = T::infinity();
        let mut growth = 0usize;
        for k in 1..=problem.max_iter {
            let un = self.unpack(&x);
            let (rx, ry) = ref_mom(&un.ux, &un.uy);
            let (vx, vy) = var_mom(&un.ux, &un.uy);
            let mut f = sys.rhs.clone();
            f.ux = &f.ux + &(&rx - &vx);
            f.uy = &f.uy + &(&ry - &vy);
            let before = x.clone();
            let (_, inner_res) = self.krylov(&ref_mom, &f, scale, &mut x, sys.mu_ref, inv_dt, inner_tol, inner_budget);
            if !inner_res.is_finite() {
                return Err(SolverError::NonFinite { stage: "stokes splitting inner solve" });
            }
            res = self.residual(&var_mom, &sys.rhs, scale, &x);
            if res <= problem.tol {
                return Ok(self.finish(&x, res, k));
            }
            let update = (&x - &before).fold(T::zero(), |m, v| m.max(v.abs()));
            if !update.is_finite() {
                return Err(SolverError::NonConvergence { residual: f64::INFINITY, iterations: k });
            }
            growth = if update > prev_update { growth + 1 } else { 0 };
            if growth >= 3 {
                return Err(SolverError::NonConvergence { residual: res.to_f64_lossy(), iterations: k });
            }
            prev_update = update;
        }
        Err(SolverError::NonConvergence { residual: res.to_f64_lossy(), iterations: problem.max_iter })
    }

    const DEFAULT_INNER_BUDGET: usize = 2000;

    /// Weak-form pressure defect for one zero-mean `h`: with `Δ_h φ = h`,
    /// returns `|⟨P, h⟩ + ⟨f - A u, ∇_h φ⟩|`, which vanishes when the momentum
    /// equation holds.
    pub fn pressure_identity_defect(
        &self,
        system: &SaddlePointSystem<T>,
        solution: &StokesSolution<T>,
        h: &Array2<T>,
    ) -> T {
        let g = self.grid;
        let mut ru = system.viscous.apply(solution.u.faces());
        ru.ux = &system.rhs.ux - &ru.ux;
        ru.uy = &system.rhs.uy - &ru.uy;
        ru.zero_boundary();
        let phi = ScalarField::from_values(g, ScalarBc::NeumannZero, self.neumann_poisson(h));
        let gphi = crate::ops::gradient(&phi);
        let lhs = (&solution.p.values * h).sum() * g.cell_area();
        (lhs + crate::ops::face_dot(&ru, &gphi)).abs()
    }

    /// Runs [`Self::pressure_identity_defect`] on `samples` random zero-mean
    /// fields and compares against `1e-6 ‖h‖`.
    pub fn pressure_recovery_check(
        &self,
        problem: &StokesStepProblem<'_, T>,
        solution: &StokesSolution<T>,
        samples: usize,
        seed: u64,
    ) -> Result<PressureRecoveryReport<T>, SolverError> {
        let sys = assemble_step(problem)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = self.grid;
        let mut worst = T::zero();
        for _ in 0..samples {
            let mut h = Array2::from_shape_fn((g.ny(), g.nx()), |_| T::lit(rng.gen::<f64>() - 0.5));
            let m = h.mean().unwrap_or(T::zero());
            h.mapv_inplace(|v| v - m);
            let h_norm = (h.mapv(|v| v * v).sum() * g.cell_area()).sqrt();
            worst = worst.max(self.pressure_identity_defect(&sys, solution, &h) / h_norm);
        }
        let tolerance = T::lit(1e-6);
        Ok(PressureRecoveryReport { max_relative_defect: worst, tolerance, passed: worst <= tolerance })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressureRecoveryReport<T> {
    /// Largest `|⟨P,h⟩ + ⟨f - Au, ∇φ⟩| / ‖h‖` over the samples.
    pub max_relative_defect: T,
    pub tolerance: T,
    pub passed: bool,
}

/// One-shot monolithic solve; prefer [`StokesSolver`] when stepping.
pub fn solve_monolithic<T: Real>(problem: &StokesStepProblem<'_, T>) -> Result<StokesSolution<T>, SolverError> {
    StokesSolver::new(problem.theta.grid).solve_monolithic(problem)
}

/// One-shot splitting solve; prefer [`StokesSolver`] when stepping.
pub fn solve_splitting<T: Real>(problem: &StokesStepProblem<'_, T>) -> Result<StokesSolution<T>, SolverError> {
    StokesSolver::new(problem.theta.grid).solve_splitting(problem)
}
