//! Fast diagonalization for separable constant-coefficient operators.
//!
//! On a tensor grid, `K = Kx ⊗ I + I ⊗ Ky` with symmetric tridiagonal 1D
//! factors is diagonalized by the product of the 1D eigenbases, so
//! `(α I + β K) x = b` is solved exactly with four dense transforms.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2};

use crate::scalar::Real;

/// One-dimensional negative second difference `-∂²` with a boundary closure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Closure1D {
    /// Cell-centred unknowns, mirrored ghosts (zero flux).
    CellNeumann,
    /// Cell-centred unknowns, ghost `= -value` (zero on the boundary face).
    CellDirichlet,
    /// Node unknowns strictly inside the interval, zero at both end nodes.
    NodeDirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Operator1D {
    pub n: usize,
    pub h: f64,
    pub closure: Closure1D,
}

impl Operator1D {
    pub fn new(n: usize, h: f64, closure: Closure1D) -> Self {
        Self { n, h, closure }
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.n;
        let s = 1.0 / (self.h * self.h);
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 2.0 * s;
            if i > 0 {
                m[(i, i - 1)] = -s;
            }
            if i + 1 < n {
                m[(i, i + 1)] = -s;
            }
        }
        match self.closure {
            Closure1D::CellNeumann => {
                m[(0, 0)] = s;
                m[(n - 1, n - 1)] = s;
            }
            Closure1D::CellDirichlet => {
                m[(0, 0)] = 3.0 * s;
                m[(n - 1, n - 1)] = 3.0 * s;
            }
            Closure1D::NodeDirichlet => {}
        }
        m
    }
}

#[derive(Debug, Clone)]
struct Eigenbasis<T> {
    q: Array2<T>,
    qt: Array2<T>,
    lambda: Array1<T>,
}

impl<T: Real> Eigenbasis<T> {
    fn new(op: &Operator1D) -> Self {
        let eig = SymmetricEigen::new(op.matrix());
        let n = op.n;
        let q = Array2::from_shape_fn((n, n), |(i, k)| T::lit(eig.eigenvectors[(i, k)]));
        let qt = q.t().as_standard_layout().to_owned();
        let lambda = Array1::from_shape_fn(n, |k| T::lit(eig.eigenvalues[k]));
        Self { q, qt, lambda }
    }
}

/// Solver for `(α I + β (Kx ⊗ I + I ⊗ Ky)) x = b` on arrays of shape `(ny, nx)`.
#[derive(Debug, Clone)]
pub struct SeparableSolver<T> {
    x: Eigenbasis<T>,
    y: Eigenbasis<T>,
    null_tol: T,
}

impl<T: Real> SeparableSolver<T> {
    pub fn new(x: Operator1D, y: Operator1D) -> Self {
        let scale = 1.0 / (x.h * x.h) + 1.0 / (y.h * y.h);
        Self {
            x: Eigenbasis::new(&x),
            y: Eigenbasis::new(&y),
            null_tol: T::lit(1e-9 * scale),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.y.lambda.len(), self.x.lambda.len())
    }

    /// Solves the shifted system. When `α = 0`, modes in the null space of
    /// `K` are set to zero (the minimum-norm solution for consistent data).
    pub fn solve(&self, b: &Array2<T>, alpha: T, beta: T) -> Array2<T> {
        debug_assert_eq!(b.dim(), self.shape());
        let mut hat = self.y.qt.dot(b).dot(&self.x.q);
        for ((j, i), v) in hat.indexed_iter_mut() {
            let lam = self.y.lambda[j] + self.x.lambda[i];
            let denom = alpha + beta * lam;
            if alpha == T::zero() && lam.abs() < self.null_tol {
                *v = T::zero();
            } else {
                *v /= denom;
            }
        }
        self.y.q.dot(&hat).dot(&self.x.qt)
    }

    /// Applies `(α I + β K)` through the eigenbasis (used for testing).
    pub fn apply(&self, x: &Array2<T>, alpha: T, beta: T) -> Array2<T> {
        let mut hat = self.y.qt.dot(x).dot(&self.x.q);
        for ((j, i), v) in hat.indexed_iter_mut() {
            *v *= alpha + beta * (self.y.lambda[j] + self.x.lambda[i]);
        }
        self.y.q.dot(&hat).dot(&self.x.qt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stencil_apply(a: &Array2<f64>, ox: &Operator1D, oy: &Operator1D) -> Array2<f64> {
        let mx = ox.matrix();
        let my = oy.matrix();
        let (ny, nx) = a.dim();
        Array2::from_shape_fn((ny, nx), |(j, i)| {
            let mut s = 0.0;
            for k in 0..nx {
                s += mx[(i, k)] * a[[j, k]];
            }
            for k in 0..ny {
                s += my[(j, k)] * a[[k, i]];
            }
            s
        })
    }

    #[test]
    fn solves_shifted_dirichlet_system() {
        let ox = Operator1D::new(9, 0.1, Closure1D::NodeDirichlet);
        let oy = Operator1D::new(10, 0.1, Closure1D::CellDirichlet);
        let s = SeparableSolver::<f64>::new(ox, oy);
        let x = Array2::from_shape_fn((10, 9), |(j, i)| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let b = &x * 3.0 + &(stencil_apply(&x, &ox, &oy) * 0.5);
        let got = s.solve(&b, 3.0, 0.5);
        for (a, b) in got.iter().zip(x.iter()) {
            assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn neumann_poisson_returns_mean_free_solution() {
        let ox = Operator1D::new(12, 1.0 / 12.0, Closure1D::CellNeumann);
        let oy = Operator1D::new(8, 1.0 / 8.0, Closure1D::CellNeumann);
        let s = SeparableSolver::<f64>::new(ox, oy);
        let mut x = Array2::from_shape_fn((8, 12), |(j, i)| (i as f64 * 0.3).sin() + (j as f64).cos());
        let m = x.mean().unwrap();
        x.mapv_inplace(|v| v - m);
        let b = stencil_apply(&x, &ox, &oy);
        let got = s.solve(&b, 0.0, 1.0);
        for (a, b) in got.iter().zip(x.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!((s.apply(&got, 0.0, 1.0) - &b).iter().all(|v| v.abs() < 1e-8));
    }
}
