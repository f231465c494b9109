//! Seeded band-limited perturbations of the equilibrium `(0, e, 0, 0)`.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coupler::project_divergence_free;
use crate::grid::{DirectorBc, DirectorField, GridSpec, ScalarBc, ScalarField, State};
use crate::ops::curl_of_stream;
use crate::scalar::Real;

/// Which unknowns receive a perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    U,
    D,
    Theta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSpec<T> {
    /// Max-norm of each perturbed field.
    pub delta: T,
    pub seed: u64,
    /// Highest mode number in each direction.
    pub k_max: usize,
    pub components: Vec<Component>,
    pub e: [T; 3],
    pub director_bc: DirectorBc,
}

impl<T: Real> PerturbationSpec<T> {
    pub fn new(delta: T, seed: u64) -> Self {
        Self {
            delta,
            seed,
            k_max: 3,
            components: vec![Component::U, Component::D, Component::Theta],
            e: [T::zero(), T::zero(), T::one()],
            director_bc: DirectorBc::DirichletE,
        }
    }

    fn perturbs(&self, c: Component) -> bool {
        self.components.contains(&c)
    }
}

#[derive(Debug, Clone, Copy)]
enum Basis {
    Sine,
    Cosine,
}

/// Random combination of `basis(kπx/lx) basis(lπy/ly)`, `1 ≤ k, l ≤ k_max`,
/// with coefficients decaying like `1/(k² + l²)`, sampled on `points`.
fn band_limited<T: Real>(
    rng: &mut ChaCha8Rng,
    grid: &GridSpec<T>,
    k_max: usize,
    basis: Basis,
    shape: (usize, usize),
    point: impl Fn(usize, usize) -> (T, T),
) -> Array2<f64> {
    let (lx, ly) = (grid.lx().to_f64_lossy(), grid.ly().to_f64_lossy());
    let mut modes = Vec::new();
    for k in 1..=k_max {
        for l in 1..=k_max {
            let a: f64 = rng.gen_range(-1.0..1.0);
            modes.push((k as f64, l as f64, a / (k * k + l * l) as f64));
        }
    }
    let f = |v: f64| match basis {
        Basis::Sine => v.sin(),
        Basis::Cosine => v.cos(),
    };
    let pi = std::f64::consts::PI;
    Array2::from_shape_fn(shape, |(j, i)| {
        let (x, y) = point(i, j);
        let (x, y) = (x.to_f64_lossy(), y.to_f64_lossy());
        modes.iter().map(|&(k, l, a)| a * f(k * pi * x / lx) * f(l * pi * y / ly)).sum()
    })
}

fn scaled_to<T: Real>(a: Array2<f64>, delta: T) -> Array2<T> {
    let m = a.fold(0.0f64, |m, v| m.max(v.abs()));
    let s = if m > 0.0 { delta.to_f64_lossy() / m } else { 0.0 };
    a.mapv(|v| T::lit(v * s))
}

/// Two unit vectors spanning the plane orthogonal to `e`.
fn tangent_frame<T: Real>(e: [T; 3]) -> [[T; 3]; 2] {
    let e = e.map(|v| v.to_f64_lossy());
    let seed = if e[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let dot = seed[0] * e[0] + seed[1] * e[1] + seed[2] * e[2];
    let mut a = [seed[0] - dot * e[0], seed[1] - dot * e[1], seed[2] - dot * e[2]];
    let na = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    a = a.map(|v| v / na);
    let b = [e[1] * a[2] - e[2] * a[1], e[2] * a[0] - e[0] * a[2], e[0] * a[1] - e[1] * a[0]];
    [a.map(T::lit), b.map(T::lit)]
}

/// Builds `(u₀, d₀, 0, θ₀)` at `t = 0`.
///
/// `u₀` is the discrete curl of a random stream function, projected and
/// scaled to max-norm `δ`; `d₀ = (e + δ τ)/|e + δ τ|` with `τ` tangent to
/// `e`; `θ₀` is a cosine series scaled to max-norm `δ`. Sine modes are used
/// for the director under a Dirichlet condition so the perturbation fades
/// at the walls.
pub fn make_initial<T: Real>(spec: &PerturbationSpec<T>, grid: GridSpec<T>) -> State<T> {
    let mut state = State::equilibrium(grid, spec.e, spec.director_bc, T::zero());
    if spec.delta == T::zero() {
        return state;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (nx, ny) = (grid.nx(), grid.ny());
    let k = spec.k_max.max(1);

    // Every field draws its coefficients even when unused so that the
    // remaining fields do not depend on the component selection.
    let psi = band_limited(&mut rng, &grid, k, Basis::Sine, (ny + 1, nx + 1), |i, j| grid.corner(i, j));
    let d_basis = match spec.director_bc {
        DirectorBc::DirichletE => Basis::Sine,
        DirectorBc::Neumann => Basis::Cosine,
    };
    let ta = band_limited(&mut rng, &grid, k, d_basis, (ny, nx), |i, j| grid.cell_center(i, j));
    let tb = band_limited(&mut rng, &grid, k, d_basis, (ny, nx), |i, j| grid.cell_center(i, j));
    let th = band_limited(&mut rng, &grid, k, Basis::Cosine, (ny, nx), |i, j| grid.cell_center(i, j));

    if spec.perturbs(Component::U) {
        let u = project_divergence_free(&curl_of_stream(&grid, &psi.mapv(T::lit)));
        let m = u.faces().max_abs();
        if m > T::zero() {
            state.u = u.scaled(spec.delta / m);
        }
    }
    if spec.perturbs(Component::D) {
        let [fa, fb] = tangent_frame(spec.e);
        let amp = ta.iter().zip(tb.iter()).fold(0.0f64, |m, (a, b)| m.max((a * a + b * b).sqrt()));
        let scale = if amp > 0.0 { spec.delta.to_f64_lossy() / amp } else { 0.0 };
        let mut d = DirectorField::uniform(grid, spec.e, spec.director_bc);
        for c in 0..3 {
            d.d[c] = Array2::from_shape_fn((ny, nx), |(j, i)| {
                spec.e[c] + T::lit(scale) * (T::lit(ta[[j, i]]) * fa[c] + T::lit(tb[[j, i]]) * fb[c])
            });
        }
        d.renormalize();
        state.d = d;
    }
    if spec.perturbs(Component::Theta) {
        state.theta = ScalarField::from_values(grid, ScalarBc::NeumannZero, scaled_to(th, spec.delta));
    }
    state
}
