//! Discrete calculus on the MAC grid.
//!
//! All operators are second order in the interior and exact on polynomials of
//! degree two away from the boundary. Boundary closures go through ghost cells:
//! Neumann mirrors, Dirichlet extrapolates linearly through the boundary value,
//! and no-slip velocity ghosts are the negated interior value.

use ndarray::Array2;

use crate::grid::{ghosted, FaceField, GridSpec, ScalarBc, ScalarField, VectorField};
use crate::scalar::Real;

/// Face gradient of a cell-centred field. Boundary faces use the ghost value.
pub fn gradient<T: Real>(f: &ScalarField<T>) -> FaceField<T> {
    let g = f.grid;
    let (nx, ny) = (g.nx(), g.ny());
    let mut out = FaceField::zeros(g);
    for j in 0..ny {
        for i in 0..=nx {
            let (ii, jj) = (i as isize, j as isize);
            out.ux[[j, i]] = (f.at(ii, jj) - f.at(ii - 1, jj)) / g.hx();
        }
    }
    for j in 0..=ny {
        for i in 0..nx {
            let (ii, jj) = (i as isize, j as isize);
            out.uy[[j, i]] = (f.at(ii, jj) - f.at(ii, jj - 1)) / g.hy();
        }
    }
    out
}

/// MAC divergence at cell centres.
pub fn divergence<T: Real>(u: &impl AsRef<FaceField<T>>) -> ScalarField<T> {
    let u = u.as_ref();
    let g = u.grid;
    let values = Array2::from_shape_fn((g.ny(), g.nx()), |(j, i)| {
        (u.ux[[j, i + 1]] - u.ux[[j, i]]) / g.hx() + (u.uy[[j + 1, i]] - u.uy[[j, i]]) / g.hy()
    });
    ScalarField::from_values(g, ScalarBc::NeumannZero, values)
}

/// Five-point Laplacian of a cell array with the given boundary condition.
pub fn laplacian_array<T: Real>(grid: &GridSpec<T>, a: &Array2<T>, bc: ScalarBc<T>) -> Array2<T> {
    let (ihx2, ihy2) = (T::one() / (grid.hx() * grid.hx()), T::one() / (grid.hy() * grid.hy()));
    let at = |i: isize, j: isize| ghosted(a, i, j, |v| bc.ghost(v));
    Array2::from_shape_fn((grid.ny(), grid.nx()), |(j, i)| {
        let (i, j) = (i as isize, j as isize);
        let c = at(i, j);
        (at(i + 1, j) - c - c + at(i - 1, j)) * ihx2 + (at(i, j + 1) - c - c + at(i, j - 1)) * ihy2
    })
}

pub fn laplacian<T: Real>(f: &ScalarField<T>) -> ScalarField<T> {
    ScalarField::from_values(f.grid, f.bc, laplacian_array(&f.grid, &f.values, f.bc))
}

/// Transport term `u · ∇f` at cell centres.
///
/// Each cell averages the two face products `u_face (f_R - f_L) / h` in each
/// direction. Boundary faces carry no velocity, so no ghost values enter. The
/// form is the exact adjoint of [`face_director_force`] and sums to
/// `-Σ f div u` over the grid.
pub fn advect_array<T: Real>(u: &VectorField<T>, grid: &GridSpec<T>, f: &Array2<T>) -> Array2<T> {
    let (nx, ny) = (grid.nx(), grid.ny());
    let half = T::lit(0.5);
    let (ux, uy) = (u.ux(), u.uy());
    Array2::from_shape_fn((ny, nx), |(j, i)| {
        let c = f[[j, i]];
        let mut acc = T::zero();
        if i + 1 < nx {
            acc += ux[[j, i + 1]] * (f[[j, i + 1]] - c) / grid.hx();
        }
        if i > 0 {
            acc += ux[[j, i]] * (c - f[[j, i - 1]]) / grid.hx();
        }
        if j + 1 < ny {
            acc += uy[[j + 1, i]] * (f[[j + 1, i]] - c) / grid.hy();
        }
        if j > 0 {
            acc += uy[[j, i]] * (c - f[[j - 1, i]]) / grid.hy();
        }
        acc * half
    })
}

pub fn advect<T: Real>(u: &VectorField<T>, f: &ScalarField<T>) -> ScalarField<T> {
    ScalarField::from_values(f.grid, f.bc, advect_array(u, &f.grid, &f.values))
}

/// Velocity gradient components needed by the stress: normal strains at cell
/// centres and the shear strain at corners.
#[derive(Debug, Clone, PartialEq)]
pub struct Deformation<T> {
    /// `∂x ux` at cells.
    pub d11: Array2<T>,
    /// `∂y uy` at cells.
    pub d22: Array2<T>,
    /// `½ (∂y ux + ∂x uy)` at corners, shape `(ny + 1, nx + 1)`.
    pub d12_corner: Array2<T>,
}

impl<T: Real> Deformation<T> {
    /// Shear strain averaged from the four corners of each cell.
    pub fn d12_cells(&self) -> Array2<T> {
        let (ny, nx) = self.d11.dim();
        let quarter = T::lit(0.25);
        let c = &self.d12_corner;
        Array2::from_shape_fn((ny, nx), |(j, i)| {
            (c[[j, i]] + c[[j, i + 1]] + c[[j + 1, i]] + c[[j + 1, i + 1]]) * quarter
        })
    }
}

/// Symmetric velocity gradient `𝓓(u) = ½(∇u + ∇ᵀu)` on the staggered layout.
/// Shear strain at wall corners uses no-slip ghosts (negated interior value).
pub fn deformation<T: Real>(u: &VectorField<T>) -> Deformation<T> {
    deformation_of(&u.grid(), u.ux(), u.uy())
}

/// [`deformation`] on raw face arrays whose boundary entries are zero.
pub fn deformation_of<T: Real>(g: &GridSpec<T>, ux: &Array2<T>, uy: &Array2<T>) -> Deformation<T> {
    let (nx, ny) = (g.nx(), g.ny());
    let d11 = Array2::from_shape_fn((ny, nx), |(j, i)| (ux[[j, i + 1]] - ux[[j, i]]) / g.hx());
    let d22 = Array2::from_shape_fn((ny, nx), |(j, i)| (uy[[j + 1, i]] - uy[[j, i]]) / g.hy());
    let half = T::lit(0.5);
    let d12_corner = Array2::from_shape_fn((ny + 1, nx + 1), |(j, i)| {
        // ∂y ux across the corner row j, ghost rows mirror with sign flip
        let dudy = if i == 0 || i == nx {
            T::zero()
        } else {
            let above = if j < ny { ux[[j, i]] } else { -ux[[ny - 1, i]] };
            let below = if j > 0 { ux[[j - 1, i]] } else { -ux[[0, i]] };
            (above - below) / g.hy()
        };
        let dvdx = if j == 0 || j == ny {
            T::zero()
        } else {
            let right = if i < nx { uy[[j, i]] } else { -uy[[j, nx - 1]] };
            let left = if i > 0 { uy[[j, i - 1]] } else { -uy[[j, 0]] };
            (right - left) / g.hx()
        };
        (dudy + dvdx) * half
    });
    Deformation { d11, d22, d12_corner }
}

/// Cell-centred `(D11, D12, D22)` with `D12` averaged from the corners.
pub fn deformation_tensor<T: Real>(u: &VectorField<T>) -> [ScalarField<T>; 3] {
    let g = u.grid();
    let def = deformation(u);
    let d12 = def.d12_cells();
    [
        ScalarField::from_values(g, ScalarBc::NeumannZero, def.d11),
        ScalarField::from_values(g, ScalarBc::NeumannZero, d12),
        ScalarField::from_values(g, ScalarBc::NeumannZero, def.d22),
    ]
}

/// Corner quadrature weights: 1 inside, ½ on edges, ¼ at the four domain corners.
#[inline]
pub(crate) fn corner_weight<T: Real>(i: usize, j: usize, nx: usize, ny: usize) -> T {
    let mut w = T::one();
    if i == 0 || i == nx {
        w = w * T::lit(0.5);
    }
    if j == 0 || j == ny {
        w = w * T::lit(0.5);
    }
    w
}

/// Averages a cell array onto corners using the adjacent cells that exist
/// (equivalent to Neumann mirroring at the boundary).
pub fn cells_to_corners<T: Real>(a: &Array2<T>) -> Array2<T> {
    let (ny, nx) = a.dim();
    Array2::from_shape_fn((ny + 1, nx + 1), |(j, i)| {
        let mut sum = T::zero();
        let mut n = 0usize;
        for jj in [j.wrapping_sub(1), j] {
            for ii in [i.wrapping_sub(1), i] {
                if ii < nx && jj < ny {
                    sum += a[[jj, ii]];
                    n += 1;
                }
            }
        }
        sum / T::from_count(n)
    })
}

/// Interpolates face velocity to cell centres, returning `(ux_c, uy_c)`.
pub fn velocity_at_cells<T: Real>(u: &FaceField<T>) -> (Array2<T>, Array2<T>) {
    let g = u.grid;
    let half = T::lit(0.5);
    let ux = Array2::from_shape_fn((g.ny(), g.nx()), |(j, i)| (u.ux[[j, i]] + u.ux[[j, i + 1]]) * half);
    let uy = Array2::from_shape_fn((g.ny(), g.nx()), |(j, i)| (u.uy[[j, i]] + u.uy[[j + 1, i]]) * half);
    (ux, uy)
}

/// Momentum transport `u · ∇u` in divergence form on interior faces.
///
/// Velocities are interpolated by arithmetic averages to the flux points
/// (cell centres for the normal flux, corners for the cross flux). For a
/// discretely divergence-free field this form conserves kinetic energy.
pub fn momentum_advection<T: Real>(u: &VectorField<T>) -> FaceField<T> {
    let g = u.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let (ux, uy) = (u.ux(), u.uy());
    let half = T::lit(0.5);
    let mut out = FaceField::zeros(g);

    // ux at corner (i, j): average along y; zero on the horizontal walls
    let ux_corner = |i: usize, j: usize| -> T {
        if j == 0 || j == ny {
            T::zero()
        } else {
            (ux[[j - 1, i]] + ux[[j, i]]) * half
        }
    };
    let uy_corner = |i: usize, j: usize| -> T {
        if i == 0 || i == nx {
            T::zero()
        } else {
            (uy[[j, i - 1]] + uy[[j, i]]) * half
        }
    };

    for j in 0..ny {
        for i in 1..nx {
            let uc_r = (ux[[j, i]] + ux[[j, i + 1]]) * half;
            let uc_l = (ux[[j, i - 1]] + ux[[j, i]]) * half;
            let fx = (uc_r * uc_r - uc_l * uc_l) / g.hx();
            let fy = (uy_corner(i, j + 1) * ux_corner(i, j + 1) - uy_corner(i, j) * ux_corner(i, j)) / g.hy();
            out.ux[[j, i]] = fx + fy;
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            let vc_t = (uy[[j, i]] + uy[[j + 1, i]]) * half;
            let vc_b = (uy[[j - 1, i]] + uy[[j, i]]) * half;
            let fy = (vc_t * vc_t - vc_b * vc_b) / g.hy();
            let fx = (ux_corner(i + 1, j) * uy_corner(i + 1, j) - ux_corner(i, j) * uy_corner(i, j)) / g.hx();
            out.uy[[j, i]] = fx + fy;
        }
    }
    out
}

/// Face force `-(Δd)·∇d` contracted over director components: the average of
/// the two adjacent cell Laplacians dotted with the face difference of `d`.
/// Boundary faces are zero.
pub fn face_director_force<T: Real>(grid: &GridSpec<T>, d: &[Array2<T>; 3], lap: &[Array2<T>; 3]) -> FaceField<T> {
    let (nx, ny) = (grid.nx(), grid.ny());
    let half = T::lit(0.5);
    let mut out = FaceField::zeros(*grid);
    for j in 0..ny {
        for i in 1..nx {
            let mut s = T::zero();
            for k in 0..3 {
                s += (lap[k][[j, i - 1]] + lap[k][[j, i]]) * half * (d[k][[j, i]] - d[k][[j, i - 1]]);
            }
            out.ux[[j, i]] = -s / grid.hx();
        }
    }
    for j in 1..ny {
        for i in 0..nx {
            let mut s = T::zero();
            for k in 0..3 {
                s += (lap[k][[j - 1, i]] + lap[k][[j, i]]) * half * (d[k][[j, i]] - d[k][[j - 1, i]]);
            }
            out.uy[[j, i]] = -s / grid.hy();
        }
    }
    out
}

/// Discrete curl `(∂y ψ, -∂x ψ)` of a corner stream function. The result is
/// exactly divergence-free; it satisfies no-slip when `ψ` vanishes on the
/// boundary corners.
pub fn curl_of_stream<T: Real>(grid: &GridSpec<T>, psi: &Array2<T>) -> VectorField<T> {
    let (nx, ny) = (grid.nx(), grid.ny());
    let ux = Array2::from_shape_fn((ny, nx + 1), |(j, i)| (psi[[j + 1, i]] - psi[[j, i]]) / grid.hy());
    let uy = Array2::from_shape_fn((ny + 1, nx), |(j, i)| -(psi[[j, i + 1]] - psi[[j, i]]) / grid.hx());
    VectorField::from_faces(FaceField { grid: *grid, ux, uy })
}

/// Discrete inner product of face data over interior faces, weighted by `hx hy`.
pub fn face_dot<T: Real>(a: &FaceField<T>, b: &FaceField<T>) -> T {
    let g = a.grid;
    let s = (&a.ux * &b.ux).sum() + (&a.uy * &b.uy).sum();
    s * g.cell_area()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{DirectorBc, DirectorField};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn grid(n: usize) -> GridSpec<f64> {
        GridSpec::unit_square(n).unwrap()
    }

    fn interior(n: usize) -> impl Iterator<Item = (usize, usize)> {
        (1..n - 1).flat_map(move |j| (1..n - 1).map(move |i| (i, j)))
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let f = ScalarField::constant(grid(16), ScalarBc::NeumannZero, 5.0);
        assert_eq!(gradient(&f).max_abs(), 0.0);
    }

    #[test]
    fn gradient_exact_on_affine_and_quadratic() {
        let g = grid(16);
        let f = ScalarField::from_fn(g, ScalarBc::NeumannZero, |x, _| x);
        let gr = gradient(&f);
        for j in 0..16 {
            for i in 1..16 {
                assert_abs_diff_eq!(gr.ux[[j, i]], 1.0, epsilon = 1e-12);
            }
        }
        let f = ScalarField::from_fn(g, ScalarBc::NeumannZero, |x, y| x * x + y * y);
        let gr = gradient(&f);
        for j in 0..16 {
            for i in 1..16 {
                let (x, _) = g.x_face(i, j);
                assert_abs_diff_eq!(gr.ux[[j, i]], 2.0 * x, epsilon = 1e-12);
            }
        }
        for j in 1..16 {
            for i in 0..16 {
                let (_, y) = g.y_face(i, j);
                assert_abs_diff_eq!(gr.uy[[j, i]], 2.0 * y, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn dirichlet_gradient_at_boundary_face() {
        let g = grid(8);
        let f = ScalarField::from_fn(g, ScalarBc::Dirichlet(0.0), |x, _| x);
        // ghost at x = -h/2 is -h/2, so the boundary face slope is exact
        assert_abs_diff_eq!(gradient(&f).ux[[3, 0]], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn divergence_examples() {
        let g = grid(16);
        let ones = FaceField::from_fn(g, |_, _| (1.0, 0.0));
        assert!(divergence(&ones).values.iter().all(|v| v.abs() < 1e-12));
        let hyper = FaceField::from_fn(g, |x, y| (x, -y));
        assert!(divergence(&hyper).values.iter().all(|v| v.abs() < 1e-12));
        let radial = FaceField::from_fn(g, |x, y| (x, y));
        assert!(divergence(&radial).values.iter().all(|v| (v - 2.0).abs() < 1e-12));
    }

    #[test]
    fn laplacian_examples() {
        let g = grid(16);
        let c = ScalarField::constant(g, ScalarBc::NeumannZero, 3.0);
        assert!(laplacian(&c).values.iter().all(|v| v.abs() < 1e-12));
        let q = ScalarField::from_fn(g, ScalarBc::NeumannZero, |x, y| x * x + y * y);
        let lq = laplacian(&q);
        for (i, j) in interior(16) {
            assert_abs_diff_eq!(lq.values[[j, i]], 4.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn laplacian_second_order_on_sine() {
        let errs: Vec<f64> = [16, 32, 64]
            .iter()
            .map(|&n| {
                let g = grid(n);
                let f = ScalarField::from_fn(g, ScalarBc::Dirichlet(0.0), |x, y| (PI * x).sin() * (PI * y).sin());
                let l = laplacian(&f);
                let mut e2 = 0.0;
                for j in 0..n {
                    for i in 0..n {
                        let d = l.values[[j, i]] + 2.0 * PI * PI * f.values[[j, i]];
                        e2 += d * d * g.cell_area();
                    }
                }
                e2.sqrt()
            })
            .collect();
        let p1 = (errs[0] / errs[1]).log2();
        let p2 = (errs[1] / errs[2]).log2();
        assert!(p1 >= 1.9 && p2 >= 1.9, "orders {p1} {p2}");
    }

    #[test]
    fn div_grad_matches_laplacian() {
        let g = grid(12);
        for bc in [ScalarBc::NeumannZero, ScalarBc::Dirichlet(0.3)] {
            let f = ScalarField::from_fn(g, bc, |x, y| (3.0 * x).sin() + x * y * y);
            let dg = divergence(&gradient(&f));
            let l = laplacian(&f);
            for (a, b) in dg.values.iter().zip(l.values.iter()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-10 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn advect_examples() {
        let g = grid(16);
        let f = ScalarField::from_fn(g, ScalarBc::NeumannZero, |x, _| x);
        assert_eq!(advect(&VectorField::zeros(g), &f).values.iter().fold(0.0f64, |m, v| m.max(v.abs())), 0.0);
        let u = VectorField::from_fn(g, |_, _| (1.0, 0.0));
        let a = advect(&u, &f);
        for (i, j) in interior(16) {
            assert_abs_diff_eq!(a.values[[j, i]], 1.0, epsilon = 1e-12);
        }
        let rot = VectorField::from_fn(g, |x, y| (y, -x));
        let r = ScalarField::from_fn(g, ScalarBc::NeumannZero, |x, y| x * x + y * y);
        let a = advect(&rot, &r);
        for (i, j) in interior(16) {
            assert_abs_diff_eq!(a.values[[j, i]], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn deformation_examples() {
        let g = grid(16);
        let z = deformation_tensor(&VectorField::zeros(g));
        assert!(z.iter().all(|f| f.values.iter().all(|v| *v == 0.0)));
        let hyper = VectorField::from_fn(g, |x, y| (x, -y));
        let [d11, d12, d22] = deformation_tensor(&hyper);
        let shear = VectorField::from_fn(g, |x, y| (y, x));
        let [s11, s12, s22] = deformation_tensor(&shear);
        for (i, j) in interior(16) {
            assert_abs_diff_eq!(d11.values[[j, i]], 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(d22.values[[j, i]], -1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(d12.values[[j, i]], 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(s11.values[[j, i]], 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(s22.values[[j, i]], 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(s12.values[[j, i]], 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn momentum_advection_is_energy_neutral_for_solenoidal_fields() {
        // discrete curl of a corner stream function is exactly divergence free
        let g = grid(20);
        let psi = Array2::from_shape_fn((21, 21), |(j, i)| {
            let (x, y) = g.corner(i, j);
            (PI * x).sin().powi(2) * (PI * y).sin().powi(2) * (1.0 + x)
        });
        let mut faces = FaceField::zeros(g);
        for j in 0..20 {
            for i in 0..=20 {
                faces.ux[[j, i]] = (psi[[j + 1, i]] - psi[[j, i]]) / g.hy();
            }
        }
        for j in 0..=20 {
            for i in 0..20 {
                faces.uy[[j, i]] = -(psi[[j, i + 1]] - psi[[j, i]]) / g.hx();
            }
        }
        let u = VectorField::from_faces(faces);
        assert!(divergence(&u).values.iter().all(|v| v.abs() < 1e-11));
        let adv = momentum_advection(&u);
        let e = face_dot(u.faces(), &adv);
        assert!(e.abs() < 1e-12, "kinetic energy production {e}");
    }

    #[test]
    fn director_force_is_adjoint_of_transport() {
        let g = grid(12);
        let d = DirectorField::from_fn(g, [0.0, 0.0, 1.0], DirectorBc::Neumann, |x, y| {
            let a = 0.4 * (PI * x).cos() * (2.0 * PI * y).cos();
            [a.sin(), 0.3 * x * y, a.cos()]
        });
        let lap = [0, 1, 2].map(|k| laplacian_array(&g, &d.d[k], d.component_bc(k)));
        let force = face_director_force(&g, &d.d, &lap);
        let u = VectorField::from_fn(g, |x, y| ((3.0 * y).sin() * x, (2.0 * x).cos() * y));
        let lhs = face_dot(u.faces(), &force);
        let mut rhs = 0.0;
        for k in 0..3 {
            let adv = advect_array(&u, &g, &d.d[k]);
            rhs += (&adv * &lap[k]).sum() * g.cell_area();
        }
        assert_abs_diff_eq!(lhs, -rhs, epsilon = 1e-10);
    }

    #[test]
    fn corner_average_of_constant() {
        let a = Array2::from_elem((8, 9), 2.5);
        assert!(cells_to_corners(&a).iter().all(|v| (*v - 2.5f64).abs() < 1e-15));
    }
}
