//! Staggered (MAC) grid geometry and field storage.
//!
//! Layout conventions, all arrays row-major with shape `(rows, cols)`:
//!
//! * cell-centred scalars (`P`, `θ`, director components): `(ny, nx)`, entry
//!   `[j, i]` sits at `((i + ½) hx, (j + ½) hy)`;
//! * x-velocity on vertical faces: `(ny, nx + 1)`, entry `[j, i]` at `(i hx, (j + ½) hy)`;
//! * y-velocity on horizontal faces: `(ny + 1, nx)`, entry `[j, i]` at `((i + ½) hx, j hy)`;
//! * corners: `(ny + 1, nx + 1)`, entry `[j, i]` at `(i hx, j hy)`.

use ndarray::Array2;

use crate::error::ConfigError;
use crate::scalar::Real;

/// Rectangular domain `[0, lx] × [0, ly]` split into `nx × ny` cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec<T> {
    nx: usize,
    ny: usize,
    lx: T,
    ly: T,
    hx: T,
    hy: T,
}

/// Smallest admissible cell count per direction.
pub const MIN_CELLS: usize = 8;

impl<T: Real> GridSpec<T> {
    pub fn new(nx: usize, ny: usize, lx: T, ly: T) -> Result<Self, ConfigError> {
        if nx < MIN_CELLS {
            return Err(ConfigError::Validation {
                key: "grid.nx".into(),
                constraint: format!("must be at least {MIN_CELLS}, got {nx}"),
            });
        }
        if ny < MIN_CELLS {
            return Err(ConfigError::Validation {
                key: "grid.ny".into(),
                constraint: format!("must be at least {MIN_CELLS}, got {ny}"),
            });
        }
        if !(lx > T::zero() && lx.is_finite()) {
            return Err(ConfigError::Validation {
                key: "grid.lx".into(),
                constraint: "must be positive and finite".into(),
            });
        }
        if !(ly > T::zero() && ly.is_finite()) {
            return Err(ConfigError::Validation {
                key: "grid.ly".into(),
                constraint: "must be positive and finite".into(),
            });
        }
        Ok(Self {
            nx,
            ny,
            lx,
            ly,
            hx: lx / T::from_count(nx),
            hy: ly / T::from_count(ny),
        })
    }

    /// `n × n` cells on the unit square.
    pub fn unit_square(n: usize) -> Result<Self, ConfigError> {
        Self::new(n, n, T::one(), T::one())
    }

    #[inline]
    pub fn nx(&self) -> usize {
        self.nx
    }
    #[inline]
    pub fn ny(&self) -> usize {
        self.ny
    }
    #[inline]
    pub fn lx(&self) -> T {
        self.lx
    }
    #[inline]
    pub fn ly(&self) -> T {
        self.ly
    }
    #[inline]
    pub fn hx(&self) -> T {
        self.hx
    }
    #[inline]
    pub fn hy(&self) -> T {
        self.hy
    }
    #[inline]
    pub fn cell_area(&self) -> T {
        self.hx * self.hy
    }
    pub fn area(&self) -> T {
        self.lx * self.ly
    }
    /// `min(hx, hy)`, the spacing used for the diffusive time-step scale.
    pub fn h_min(&self) -> T {
        self.hx.min(self.hy)
    }
    pub fn cell_count(&self) -> usize {
        self.nx * self.ny
    }

    pub fn cell_center(&self, i: usize, j: usize) -> (T, T) {
        let half = T::lit(0.5);
        (
            (T::from_count(i) + half) * self.hx,
            (T::from_count(j) + half) * self.hy,
        )
    }
    pub fn x_face(&self, i: usize, j: usize) -> (T, T) {
        (
            T::from_count(i) * self.hx,
            (T::from_count(j) + T::lit(0.5)) * self.hy,
        )
    }
    pub fn y_face(&self, i: usize, j: usize) -> (T, T) {
        (
            (T::from_count(i) + T::lit(0.5)) * self.hx,
            T::from_count(j) * self.hy,
        )
    }
    pub fn corner(&self, i: usize, j: usize) -> (T, T) {
        (T::from_count(i) * self.hx, T::from_count(j) * self.hy)
    }

    pub fn cell_array(&self) -> Array2<T> {
        Array2::zeros((self.ny, self.nx))
    }
    pub fn x_face_array(&self) -> Array2<T> {
        Array2::zeros((self.ny, self.nx + 1))
    }
    pub fn y_face_array(&self) -> Array2<T> {
        Array2::zeros((self.ny + 1, self.nx))
    }
    pub fn corner_array(&self) -> Array2<T> {
        Array2::zeros((self.ny + 1, self.nx + 1))
    }

    pub fn sample_cells(&self, f: impl Fn(T, T) -> T) -> Array2<T> {
        Array2::from_shape_fn((self.ny, self.nx), |(j, i)| {
            let (x, y) = self.cell_center(i, j);
            f(x, y)
        })
    }
}

/// Boundary treatment of a cell-centred scalar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarBc<T> {
    /// Zero normal derivative, ghost cells mirror the adjacent interior value.
    NeumannZero,
    /// Prescribed boundary value `c`, ghost cells extrapolate linearly through it.
    Dirichlet(T),
}

impl<T: Real> ScalarBc<T> {
    /// Ghost value across a boundary face adjacent to interior value `inner`.
    #[inline]
    pub fn ghost(&self, inner: T) -> T {
        match *self {
            ScalarBc::NeumannZero => inner,
            ScalarBc::Dirichlet(c) => c + c - inner,
        }
    }
}

/// Cell-centred scalar field (pressure, temperature).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<T> {
    pub grid: GridSpec<T>,
    pub values: Array2<T>,
    pub bc: ScalarBc<T>,
}

impl<T: Real> ScalarField<T> {
    pub fn zeros(grid: GridSpec<T>, bc: ScalarBc<T>) -> Self {
        Self { grid, values: grid.cell_array(), bc }
    }

    pub fn constant(grid: GridSpec<T>, bc: ScalarBc<T>, c: T) -> Self {
        Self { grid, values: Array2::from_elem((grid.ny(), grid.nx()), c), bc }
    }

    pub fn from_fn(grid: GridSpec<T>, bc: ScalarBc<T>, f: impl Fn(T, T) -> T) -> Self {
        Self { grid, values: grid.sample_cells(f), bc }
    }

    pub fn from_values(grid: GridSpec<T>, bc: ScalarBc<T>, values: Array2<T>) -> Self {
        assert_eq!(values.dim(), (grid.ny(), grid.nx()), "cell array shape");
        Self { grid, values, bc }
    }

    /// Value at `(i, j)`, reading ghost cells through the boundary condition.
    /// At most one of the indices may step outside the grid by one.
    #[inline]
    pub fn at(&self, i: isize, j: isize) -> T {
        ghosted(&self.values, i, j, |v| self.bc.ghost(v))
    }

    pub fn mean(&self) -> T {
        self.values.sum() / T::from_count(self.values.len())
    }

    /// `Σ f hx hy`.
    pub fn integral(&self) -> T {
        self.values.sum() * self.grid.cell_area()
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn remove_mean(&mut self) {
        let m = self.mean();
        self.values.mapv_inplace(|v| v - m);
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Reads `a[j, i]`, mapping a single out-of-range index onto a ghost value
/// computed from the adjacent interior entry.
#[inline]
pub(crate) fn ghosted<T: Copy>(a: &Array2<T>, i: isize, j: isize, ghost: impl Fn(T) -> T) -> T {
    let (ny, nx) = a.dim();
    let (nx, ny) = (nx as isize, ny as isize);
    let ii = i.clamp(0, nx - 1);
    let jj = j.clamp(0, ny - 1);
    let v = a[[jj as usize, ii as usize]];
    if ii != i || jj != j {
        ghost(v)
    } else {
        v
    }
}

/// Raw face-sampled vector data: gradients, forcing terms, velocity candidates.
/// No boundary constraint is attached.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceField<T> {
    pub grid: GridSpec<T>,
    /// x-component on vertical faces, shape `(ny, nx + 1)`.
    pub ux: Array2<T>,
    /// y-component on horizontal faces, shape `(ny + 1, nx)`.
    pub uy: Array2<T>,
}

impl<T: Real> FaceField<T> {
    pub fn zeros(grid: GridSpec<T>) -> Self {
        Self { grid, ux: grid.x_face_array(), uy: grid.y_face_array() }
    }

    /// Samples `f(x, y) -> (fx, fy)` at the respective face midpoints.
    pub fn from_fn(grid: GridSpec<T>, f: impl Fn(T, T) -> (T, T)) -> Self {
        let ux = Array2::from_shape_fn((grid.ny(), grid.nx() + 1), |(j, i)| {
            let (x, y) = grid.x_face(i, j);
            f(x, y).0
        });
        let uy = Array2::from_shape_fn((grid.ny() + 1, grid.nx()), |(j, i)| {
            let (x, y) = grid.y_face(i, j);
            f(x, y).1
        });
        Self { grid, ux, uy }
    }

    pub fn scaled(&self, a: T) -> Self {
        Self { grid: self.grid, ux: &self.ux * a, uy: &self.uy * a }
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: T, other: &FaceField<T>) {
        self.ux.scaled_add(a, &other.ux);
        self.uy.scaled_add(a, &other.uy);
    }

    pub fn zero_boundary(&mut self) {
        let (nx, ny) = (self.grid.nx(), self.grid.ny());
        for j in 0..ny {
            self.ux[[j, 0]] = T::zero();
            self.ux[[j, nx]] = T::zero();
        }
        for i in 0..nx {
            self.uy[[0, i]] = T::zero();
            self.uy[[ny, i]] = T::zero();
        }
    }

    pub fn max_abs(&self) -> T {
        self.ux
            .iter()
            .chain(self.uy.iter())
            .fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.ux.iter().chain(self.uy.iter()).all(|v| v.is_finite())
    }
}

/// Velocity field satisfying the no-slip condition: every boundary face is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField<T> {
    faces: FaceField<T>,
}

impl<T: Real> VectorField<T> {
    pub fn zeros(grid: GridSpec<T>) -> Self {
        Self { faces: FaceField::zeros(grid) }
    }

    /// Wraps face data, forcing boundary faces to zero.
    pub fn from_faces(mut faces: FaceField<T>) -> Self {
        faces.zero_boundary();
        Self { faces }
    }

    /// Samples `f` at faces; boundary faces are set to zero.
    pub fn from_fn(grid: GridSpec<T>, f: impl Fn(T, T) -> (T, T)) -> Self {
        Self::from_faces(FaceField::from_fn(grid, f))
    }

    pub fn faces(&self) -> &FaceField<T> {
        &self.faces
    }
    pub fn into_faces(self) -> FaceField<T> {
        self.faces
    }
    pub fn grid(&self) -> GridSpec<T> {
        self.faces.grid
    }
    pub fn ux(&self) -> &Array2<T> {
        &self.faces.ux
    }
    pub fn uy(&self) -> &Array2<T> {
        &self.faces.uy
    }
    pub fn scaled(&self, a: T) -> Self {
        Self { faces: self.faces.scaled(a) }
    }
}

impl<T> AsRef<FaceField<T>> for VectorField<T> {
    fn as_ref(&self) -> &FaceField<T> {
        &self.faces
    }
}

impl<T> AsRef<FaceField<T>> for FaceField<T> {
    fn as_ref(&self) -> &FaceField<T> {
        self
    }
}

/// Boundary condition for the director.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectorBc {
    /// `d = e` on the boundary.
    DirichletE,
    /// `∂_ν d = 0` on the boundary.
    Neumann,
}

impl DirectorBc {
    pub fn name(&self) -> &'static str {
        match self {
            DirectorBc::DirichletE => "dirichlet_e",
            DirectorBc::Neumann => "neumann",
        }
    }
}

/// Three-component unit director sampled at cell centres.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectorField<T> {
    pub grid: GridSpec<T>,
    pub d: [Array2<T>; 3],
    pub bc: DirectorBc,
    /// Far-field / boundary director `e`, a unit vector.
    pub e: [T; 3],
}

impl<T: Real> DirectorField<T> {
    pub fn uniform(grid: GridSpec<T>, e: [T; 3], bc: DirectorBc) -> Self {
        let d = e.map(|c| Array2::from_elem((grid.ny(), grid.nx()), c));
        Self { grid, d, bc, e }
    }

    pub fn from_fn(
        grid: GridSpec<T>,
        e: [T; 3],
        bc: DirectorBc,
        f: impl Fn(T, T) -> [T; 3],
    ) -> Self {
        let mut d = [grid.cell_array(), grid.cell_array(), grid.cell_array()];
        for j in 0..grid.ny() {
            for i in 0..grid.nx() {
                let (x, y) = grid.cell_center(i, j);
                let v = f(x, y);
                for k in 0..3 {
                    d[k][[j, i]] = v[k];
                }
            }
        }
        Self { grid, d, bc, e }
    }

    /// Boundary condition of component `k` as a scalar condition.
    #[inline]
    pub fn component_bc(&self, k: usize) -> ScalarBc<T> {
        match self.bc {
            DirectorBc::DirichletE => ScalarBc::Dirichlet(self.e[k]),
            DirectorBc::Neumann => ScalarBc::NeumannZero,
        }
    }

    /// Component `k` as a standalone scalar field.
    pub fn component(&self, k: usize) -> ScalarField<T> {
        ScalarField::from_values(self.grid, self.component_bc(k), self.d[k].clone())
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> [T; 3] {
        [self.d[0][[j, i]], self.d[1][[j, i]], self.d[2][[j, i]]]
    }

    #[inline]
    pub fn norm_at(&self, i: usize, j: usize) -> T {
        let v = self.at(i, j);
        (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
    }

    /// `max | |d| - 1 |` over cells.
    pub fn unit_deviation_max(&self) -> T {
        let mut m = T::zero();
        for j in 0..self.grid.ny() {
            for i in 0..self.grid.nx() {
                m = m.max((self.norm_at(i, j) - T::one()).abs());
            }
        }
        m
    }

    /// Smallest pointwise `|d|` and the cell where it occurs.
    pub fn min_norm(&self) -> (T, usize, usize) {
        let mut best = (T::infinity(), 0, 0);
        for j in 0..self.grid.ny() {
            for i in 0..self.grid.nx() {
                let n = self.norm_at(i, j);
                if n < best.0 {
                    best = (n, i, j);
                }
            }
        }
        best
    }

    /// Projects every cell value back onto the unit sphere.
    pub fn renormalize(&mut self) {
        for j in 0..self.grid.ny() {
            for i in 0..self.grid.nx() {
                let n = self.norm_at(i, j);
                for k in 0..3 {
                    self.d[k][[j, i]] /= n;
                }
            }
        }
    }

    /// The perturbation `d - e` as three arrays.
    pub fn deviation(&self) -> [Array2<T>; 3] {
        let e = self.e;
        [0, 1, 2].map(|k| self.d[k].mapv(|v| v - e[k]))
    }

    pub fn is_finite(&self) -> bool {
        self.d.iter().all(|a| a.iter().all(|v| v.is_finite()))
    }
}

/// Full unknown set `(u, d, P, θ)` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct State<T> {
    pub u: VectorField<T>,
    pub d: DirectorField<T>,
    pub p: ScalarField<T>,
    pub theta: ScalarField<T>,
    pub t: T,
}

impl<T: Real> State<T> {
    /// The trivial equilibrium `(0, e, 0, θ*)`.
    pub fn equilibrium(grid: GridSpec<T>, e: [T; 3], director_bc: DirectorBc, theta_star: T) -> Self {
        Self {
            u: VectorField::zeros(grid),
            d: DirectorField::uniform(grid, e, director_bc),
            p: ScalarField::zeros(grid, ScalarBc::NeumannZero),
            theta: ScalarField::constant(grid, ScalarBc::NeumannZero, theta_star),
            t: T::zero(),
        }
    }

    pub fn grid(&self) -> GridSpec<T> {
        self.theta.grid
    }

    pub fn is_finite(&self) -> bool {
        self.u.faces().is_finite() && self.d.is_finite() && self.p.is_finite() && self.theta.is_finite()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_coarse_grids() {
        let err = GridSpec::<f64>::new(4, 16, 1.0, 1.0).unwrap_err();
        assert!(matches!(err, ConfigError::Validation { ref key, .. } if key == "grid.nx"));
        assert!(GridSpec::<f64>::new(16, 7, 1.0, 1.0).is_err());
        assert!(GridSpec::<f64>::new(16, 16, 0.0, 1.0).is_err());
    }

    #[test]
    fn spacings_and_positions() {
        let g = GridSpec::<f64>::new(10, 20, 2.0, 1.0).unwrap();
        assert_eq!(g.hx(), 0.2);
        assert_eq!(g.hy(), 0.05);
        assert_eq!(g.cell_center(0, 0), (0.1, 0.025));
        assert_eq!(g.x_face(10, 0), (2.0, 0.025));
        assert_eq!(g.y_face(0, 20), (0.1, 1.0));
    }

    #[test]
    fn velocity_boundary_faces_are_zero() {
        let g = GridSpec::<f64>::unit_square(8).unwrap();
        let u = VectorField::from_fn(g, |_, _| (1.0, 1.0));
        assert_eq!(u.ux()[[3, 0]], 0.0);
        assert_eq!(u.ux()[[3, 8]], 0.0);
        assert_eq!(u.uy()[[0, 3]], 0.0);
        assert_eq!(u.uy()[[8, 3]], 0.0);
        assert_eq!(u.ux()[[3, 4]], 1.0);
    }

    #[test]
    fn ghost_values_follow_bc() {
        let g = GridSpec::<f64>::unit_square(8).unwrap();
        let f = ScalarField::from_fn(g, ScalarBc::Dirichlet(1.0), |x, _| x);
        // ghost at i = -1 reflects through the boundary value 1
        assert!((f.at(-1, 2) - (2.0 - f.values[[2, 0]])).abs() < 1e-15);
        let n = ScalarField::from_fn(g, ScalarBc::NeumannZero, |x, _| x);
        assert_eq!(n.at(8, 2), n.values[[2, 7]]);
    }

    #[test]
    fn renormalize_restores_unit_length() {
        let g = GridSpec::<f64>::unit_square(8).unwrap();
        let mut d = DirectorField::from_fn(g, [0.0, 0.0, 1.0], DirectorBc::Neumann, |x, y| [x, y, 2.0]);
        assert!(d.unit_deviation_max() > 0.5);
        d.renormalize();
        assert!(d.unit_deviation_max() < 1e-15);
    }
}
