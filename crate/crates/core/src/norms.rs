//! Discrete norms on cell-centred data and the running space-time functionals.
//!
//! Derivatives use second-order finite differences: centred in the interior
//! and one-sided near the walls, with weights from Fornberg's recursion.
//! Fractional (Besov-type) norms are replaced by the geometric-mean surrogate
//! `‖f‖_{Lʳ}^{1-σ/m} ‖f‖_{W^{m,r}}^{σ/m}`, `m = ⌈σ⌉`, which agrees with the
//! interpolation norm up to constants.

use ndarray::{Array2, Zip};

use crate::error::{ConfigError, NormError};
use crate::grid::{GridSpec, State};
use crate::ops::velocity_at_cells;
use crate::scalar::Real;

/// Spatial dimension.
pub const DIM: f64 = 2.0;

/// Integrability exponents `(p, q, r, s)`: velocity and director use
/// `Lᵖ(Lʳ)`, temperature `Lˢ(L^q)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormExponents {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub s: f64,
}

impl Default for NormExponents {
    fn default() -> Self {
        Self { p: 2.0, q: 4.0, r: 4.0, s: 2.0 }
    }
}

impl NormExponents {
    /// Checks `1 < p < ∞`, `2 ≤ s < ∞`, `N < r ≤ q`,
    /// `2/p + N/r < 1/s + N/(2q) + 1 < 2` and `p ≤ 2s`.
    pub fn new(p: f64, q: f64, r: f64, s: f64) -> Result<Self, ConfigError> {
        let fail = |key: &str, constraint: String| Err(ConfigError::Validation { key: key.into(), constraint });
        if !(p > 1.0 && p.is_finite()) {
            return fail("exponents.p", format!("need 1 < p < inf, got {p}"));
        }
        if !(s >= 2.0 && s.is_finite()) {
            return fail("exponents.s", format!("need 2 <= s < inf, got {s}"));
        }
        if !(r > DIM && r.is_finite()) {
            return fail("exponents.r", format!("need r > {DIM}, got {r}"));
        }
        if !(q >= r && q.is_finite()) {
            return fail("exponents.q", format!("need r <= q < inf, got q = {q}, r = {r}"));
        }
        let left = 2.0 / p + DIM / r;
        let middle = 1.0 / s + DIM / (2.0 * q) + 1.0;
        if !(left < middle && middle < 2.0) {
            return fail(
                "exponents",
                format!("need 2/p + N/r < 1/s + N/(2q) + 1 < 2, got {left} < {middle} < 2"),
            );
        }
        if p > 2.0 * s {
            return fail("exponents.p", format!("need p <= 2s, got p = {p}, s = {s}"));
        }
        Ok(Self { p, q, r, s })
    }

    /// Hölder exponent `β = 1 - 1/s - N/(2q)` of the temperature in time.
    pub fn holder_beta(&self) -> f64 {
        1.0 - 1.0 / self.s - DIM / (2.0 * self.q)
    }
}

fn exponent_check(name: &'static str, value: f64, ok: bool, constraint: &'static str) -> Result<(), NormError> {
    if ok {
        Ok(())
    } else {
        Err(NormError::Exponent { name, value, constraint })
    }
}

/// Finite-difference weights for the `m`-th derivative at `z` on nodes `x`.
fn fornberg(z: f64, x: &[f64], m: usize) -> Vec<f64> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c.swap_remove(m)
}

/// Second-order central stencil for the `m`-th derivative on `n` uniform
/// points, with third-order one-sided windows near the ends so the boundary
/// strip does not pollute integrated norms.
#[derive(Debug, Clone)]
struct Stencil<T> {
    start: Vec<usize>,
    weights: Vec<Vec<T>>,
}

impl<T: Real> Stencil<T> {
    fn new(n: usize, h: f64, m: usize) -> Self {
        let half = (m + 1) / 2;
        let wide = m + 3;
        let scale = h.powi(m as i32);
        let mut start = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 0..n {
            let (s0, len) = if i >= half && i + half < n {
                (i - half, 2 * half + 1)
            } else if i < half {
                (0, wide)
            } else {
                (n - wide, wide)
            };
            let nodes: Vec<f64> = (s0..s0 + len).map(|k| k as f64 - i as f64).collect();
            let w = fornberg(0.0, &nodes, m);
            start.push(s0);
            weights.push(w.into_iter().map(|v| T::lit(v / scale)).collect());
        }
        Self { start, weights }
    }
}

/// `∂x^a ∂y^b f` for cell-centred `f`, `a + b ≤ 3`.
pub fn derivative<T: Real>(grid: &GridSpec<T>, f: &Array2<T>, a: usize, b: usize) -> Array2<T> {
    let (ny, nx) = f.dim();
    let mut out = f.clone();
    if a > 0 {
        let st = Stencil::<T>::new(nx, grid.hx().to_f64_lossy(), a);
        let src = out;
        out = Array2::from_shape_fn((ny, nx), |(j, i)| {
            st.weights[i].iter().enumerate().fold(T::zero(), |acc, (k, &w)| acc + w * src[[j, st.start[i] + k]])
        });
    }
    if b > 0 {
        let st = Stencil::<T>::new(ny, grid.hy().to_f64_lossy(), b);
        let src = out;
        out = Array2::from_shape_fn((ny, nx), |(j, i)| {
            st.weights[j].iter().enumerate().fold(T::zero(), |acc, (k, &w)| acc + w * src[[st.start[j] + k, i]])
        });
    }
    out
}

/// `max |f|` over cells.
pub fn linf_norm<T: Real>(f: &Array2<T>) -> T {
    f.fold(T::zero(), |m, v| m.max(v.abs()))
}

fn lr_power_sum<T: Real>(grid: &GridSpec<T>, f: &Array2<T>, r: T) -> T {
    f.fold(T::zero(), |acc, v| acc + v.abs().powf(r)) * grid.cell_area()
}

/// `(Σ |f|ʳ hx hy)^{1/r}`; `r = ∞` gives the grid maximum.
pub fn lr_norm<T: Real>(grid: &GridSpec<T>, f: &Array2<T>, r: T) -> Result<T, NormError> {
    exponent_check("r", r.to_f64_lossy(), r >= T::one(), "r >= 1")?;
    if r.is_infinite() {
        return Ok(linf_norm(f));
    }
    Ok(lr_power_sum(grid, f, r).powf(T::one() / r))
}

/// Pointwise Euclidean length of the gradient.
pub fn gradient_magnitude<T: Real>(grid: &GridSpec<T>, f: &Array2<T>) -> Array2<T> {
    let fx = derivative(grid, f, 1, 0);
    let fy = derivative(grid, f, 0, 1);
    Zip::from(&fx).and(&fy).map_collect(|&a, &b| (a * a + b * b).sqrt())
}

/// `W^{k,r}` norm of a vector field given by its components:
/// `(Σ_c Σ_{|α| ≤ k} ‖∂^α f_c‖_r^r)^{1/r}`.
pub fn sobolev_norm_components<T: Real>(grid: &GridSpec<T>, comps: &[&Array2<T>], k: usize, r: T) -> Result<T, NormError> {
    if k > 3 {
        return Err(NormError::Order(k));
    }
    exponent_check("r", r.to_f64_lossy(), r >= T::one() && r.is_finite(), "1 <= r < inf")?;
    let mut sum = T::zero();
    for f in comps {
        for order in 0..=k {
            for a in 0..=order {
                sum += lr_power_sum(grid, &derivative(grid, f, a, order - a), r);
            }
        }
    }
    Ok(sum.powf(T::one() / r))
}

pub fn sobolev_norm<T: Real>(grid: &GridSpec<T>, f: &Array2<T>, k: usize, r: T) -> Result<T, NormError> {
    sobolev_norm_components(grid, &[f], k, r)
}

/// Geometric-mean surrogate of the `B^σ_{r,·}` norm, `0 < σ < 3`.
pub fn besov_surrogate_components<T: Real>(grid: &GridSpec<T>, comps: &[&Array2<T>], sigma: T, r: T) -> Result<T, NormError> {
    let sf = sigma.to_f64_lossy();
    exponent_check("sigma", sf, sf > 0.0 && sf < 3.0, "0 < sigma < 3")?;
    let m = sf.ceil() as usize;
    let low = sobolev_norm_components(grid, comps, 0, r)?;
    let high = sobolev_norm_components(grid, comps, m, r)?;
    if low == T::zero() || high == T::zero() {
        return Ok(T::zero());
    }
    let theta = sigma / T::from_count(m);
    Ok(low.powf(T::one() - theta) * high.powf(theta))
}

pub fn besov_surrogate<T: Real>(grid: &GridSpec<T>, f: &Array2<T>, sigma: T, r: T) -> Result<T, NormError> {
    besov_surrogate_components(grid, &[f], sigma, r)
}

/// `max_{t₁ ≠ t₂} ‖f(t₁) - f(t₂)‖_∞ / |t₁ - t₂|^β` over the samples.
pub fn holder_seminorm_time<T: Real>(samples: &[(T, &Array2<T>)], beta: T) -> Result<T, NormError> {
    let bf = beta.to_f64_lossy();
    exponent_check("beta", bf, bf > 0.0 && bf < 1.0, "0 < beta < 1")?;
    if samples.len() < 2 {
        return Err(NormError::Samples { needed: 2, got: samples.len() });
    }
    let mut best = T::zero();
    for (a, (ta, fa)) in samples.iter().enumerate() {
        for (tb, fb) in &samples[a + 1..] {
            let dt = (*tb - *ta).abs();
            if dt == T::zero() {
                continue;
            }
            let diff = Zip::from(*fa).and(*fb).fold(T::zero(), |m, &x, &y| m.max((x - y).abs()));
            best = best.max(diff / dt.powf(beta));
        }
    }
    Ok(best)
}

/// Running `Lᵖ`-in-time integral of a scalar history, left rectangle rule,
/// together with its supremum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedNormAccumulator<T> {
    p: T,
    sum: T,
    sup: T,
    last: Option<(T, T)>,
}

impl<T: Real> MixedNormAccumulator<T> {
    pub fn new(p: T) -> Self {
        Self { p, sum: T::zero(), sup: T::zero(), last: None }
    }

    /// Records the value at time `t`; the previous value is integrated over
    /// the elapsed interval.
    pub fn push_sample(&mut self, t: T, value: T) {
        if let Some((t0, v0)) = self.last {
            self.sum += (t - t0) * v0.powf(self.p);
        }
        self.sup = self.sup.max(value);
        self.last = Some((t, value));
    }

    /// Adds `dt · valueᵖ` for a quantity defined on a whole interval.
    pub fn add_interval(&mut self, dt: T, value: T) {
        self.sum += dt * value.powf(self.p);
        self.sup = self.sup.max(value);
    }

    /// `(∫ valueᵖ)^{1/p}` so far.
    pub fn lp(&self) -> T {
        self.sum.powf(T::one() / self.p)
    }

    pub fn sup(&self) -> T {
        self.sup
    }
}

/// Current values of the space-time functionals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Functionals<T> {
    pub u: T,
    pub d: T,
    pub theta: T,
    pub b_theta: T,
}

impl<T: Real> Functionals<T> {
    /// `F = U + D + Θ`.
    pub fn total(&self) -> T {
        self.u + self.d + self.theta
    }
}

/// One row of run diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord<T> {
    pub t: T,
    pub e_total: T,
    pub e_kin: T,
    pub e_elastic: T,
    pub e_thermal: T,
    pub div_max: T,
    pub dnorm_dev_max: T,
    pub u_sur: T,
    pub d_sur: T,
    pub theta_sur: T,
    pub f_sur: T,
    pub b_theta_sur: T,
    pub picard_iters: usize,
    pub picard_ratio: T,
}

struct Snapshot<T> {
    t: T,
    u: [Array2<T>; 2],
    d: [Array2<T>; 3],
    theta: Array2<T>,
}

/// Accumulates the discrete surrogates of
///
/// ```text
/// U = sup ‖u‖_{B^{2-2/p}_r} + ‖∂t u‖_{Lᵖ(Lʳ)} + ‖u‖_{Lᵖ(W^{2,r})} + ‖P‖_{Lᵖ(W^{1,r})}
/// D = sup ‖d-e‖_{B^{3-2/p}_r} + ‖∂t d‖_{Lᵖ(W^{1,r})} + ‖d-e‖_{Lᵖ(W^{3,r})}
/// Θ = sup ‖θ‖_{B^{2-2/s}_q} + ‖∂t θ‖_{Lˢ(L^q)} + ‖θ‖_{Lˢ(W^{2,q})}
/// B_θ = 1 + sup ‖∇θ‖_q^{q/(q-N)}
/// ```
///
/// Velocity is interpolated to cell centres first. Each `observe` call must
/// come with a strictly later time than the previous one.
pub struct FunctionalTracker<T> {
    grid: GridSpec<T>,
    exps: NormExponents,
    u_besov: T,
    u_rate: MixedNormAccumulator<T>,
    u_w2: MixedNormAccumulator<T>,
    p_w1: MixedNormAccumulator<T>,
    d_besov: T,
    d_rate: MixedNormAccumulator<T>,
    d_w3: MixedNormAccumulator<T>,
    th_besov: T,
    th_rate: MixedNormAccumulator<T>,
    th_w2: MixedNormAccumulator<T>,
    grad_theta_sup: T,
    prev: Option<Snapshot<T>>,
}

impl<T: Real> FunctionalTracker<T> {
    pub fn new(grid: GridSpec<T>, exps: NormExponents) -> Self {
        let p = T::lit(exps.p);
        let s = T::lit(exps.s);
        Self {
            grid,
            exps,
            u_besov: T::zero(),
            u_rate: MixedNormAccumulator::new(p),
            u_w2: MixedNormAccumulator::new(p),
            p_w1: MixedNormAccumulator::new(p),
            d_besov: T::zero(),
            d_rate: MixedNormAccumulator::new(p),
            d_w3: MixedNormAccumulator::new(p),
            th_besov: T::zero(),
            th_rate: MixedNormAccumulator::new(s),
            th_w2: MixedNormAccumulator::new(s),
            grad_theta_sup: T::zero(),
            prev: None,
        }
    }

    pub fn exponents(&self) -> NormExponents {
        self.exps
    }

    pub fn observe(&mut self, state: &State<T>) -> Result<Functionals<T>, NormError> {
        let g = self.grid;
        let (p, q, r, s) = (T::lit(self.exps.p), T::lit(self.exps.q), T::lit(self.exps.r), T::lit(self.exps.s));
        let two = T::lit(2.0);
        let (ux, uy) = velocity_at_cells(state.u.faces());
        let dev = state.d.deviation();
        let snap = Snapshot { t: state.t, u: [ux, uy], d: dev, theta: state.theta.values.clone() };
        let u_refs = [&snap.u[0], &snap.u[1]];
        let d_refs = [&snap.d[0], &snap.d[1], &snap.d[2]];

        self.u_besov = self.u_besov.max(besov_surrogate_components(&g, &u_refs, two - two / p, r)?);
        self.d_besov = self.d_besov.max(besov_surrogate_components(&g, &d_refs, T::lit(3.0) - two / p, r)?);
        self.th_besov = self.th_besov.max(besov_surrogate(&g, &snap.theta, two - two / s, q)?);
        let grad_theta = lr_norm(&g, &gradient_magnitude(&g, &snap.theta), q)?;
        self.grad_theta_sup = self.grad_theta_sup.max(grad_theta);

        let t = state.t;
        self.u_w2.push_sample(t, sobolev_norm_components(&g, &u_refs, 2, r)?);
        self.p_w1.push_sample(t, sobolev_norm(&g, &state.p.values, 1, r)?);
        self.d_w3.push_sample(t, sobolev_norm_components(&g, &d_refs, 3, r)?);
        self.th_w2.push_sample(t, sobolev_norm(&g, &snap.theta, 2, q)?);

        if let Some(prev) = &self.prev {
            let dt = t - prev.t;
            if dt > T::zero() {
                let rate = |a: &Array2<T>, b: &Array2<T>| (a - b) / dt;
                let u_rate = [rate(&snap.u[0], &prev.u[0]), rate(&snap.u[1], &prev.u[1])];
                let d_rate = [0, 1, 2].map(|k| rate(&snap.d[k], &prev.d[k]));
                let th_rate = rate(&snap.theta, &prev.theta);
                self.u_rate.add_interval(dt, sobolev_norm_components(&g, &[&u_rate[0], &u_rate[1]], 0, r)?);
                self.d_rate.add_interval(dt, sobolev_norm_components(&g, &[&d_rate[0], &d_rate[1], &d_rate[2]], 1, r)?);
                self.th_rate.add_interval(dt, lr_norm(&g, &th_rate, q)?);
            }
        }
        self.prev = Some(snap);
        Ok(self.values())
    }

    pub fn values(&self) -> Functionals<T> {
        let q = T::lit(self.exps.q);
        Functionals {
            u: self.u_besov + self.u_rate.lp() + self.u_w2.lp() + self.p_w1.lp(),
            d: self.d_besov + self.d_rate.lp() + self.d_w3.lp(),
            theta: self.th_besov + self.th_rate.lp() + self.th_w2.lp(),
            b_theta: T::one() + self.grad_theta_sup.powf(q / (q - T::lit(DIM))),
        }
    }
}

/// Which interpolation inequality a report row refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Inequality {
    /// `‖∇f‖_{Lᵖ(L^∞)} ≤ C ‖f‖_{Lᵖ(W^{2,r})}`.
    GradSupByW2,
    /// `‖∇f‖_{L^{2s}(L^{2q})} ≤ C ‖f‖_{L^∞(B^{2-2/p})}^{1-p/2s} ‖f‖_{Lᵖ(W^{2,r})}^{p/2s}`.
    GradL2qInterpolation,
    /// `‖∇f‖_{L^{4s}(L^{4q})} ≤ C ‖f‖_{L^∞(B^{3-2/p})}^{1-p/4s} ‖f‖_{Lᵖ(W^{3,r})}^{p/4s}`.
    GradL4qInterpolation,
    /// Short-horizon form of `GradSupByW2` with the explicit `T` power.
    GradSupShortTime,
    /// Short-horizon form of `GradL2qInterpolation`.
    GradL2qShortTime,
    /// Short-horizon form of `GradL4qInterpolation`.
    GradL4qShortTime,
}

impl Inequality {
    pub const ALL: [Inequality; 6] = [
        Inequality::GradSupByW2,
        Inequality::GradL2qInterpolation,
        Inequality::GradL4qInterpolation,
        Inequality::GradSupShortTime,
        Inequality::GradL2qShortTime,
        Inequality::GradL4qShortTime,
    ];

    /// The three horizon-independent inequalities.
    pub const UNIFORM: [Inequality; 3] =
        [Inequality::GradSupByW2, Inequality::GradL2qInterpolation, Inequality::GradL4qInterpolation];

    pub fn name(&self) -> &'static str {
        match self {
            Inequality::GradSupByW2 => "grad_sup_by_w2",
            Inequality::GradL2qInterpolation => "grad_l2q_interpolation",
            Inequality::GradL4qInterpolation => "grad_l4q_interpolation",
            Inequality::GradSupShortTime => "grad_sup_short_time",
            Inequality::GradL2qShortTime => "grad_l2q_short_time",
            Inequality::GradL4qShortTime => "grad_l4q_short_time",
        }
    }
}

/// Both sides of one inequality on one history; `ratio = lhs / rhs`
/// (0 when both vanish).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityReport {
    pub inequality: Inequality,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// Evaluates every inequality in [`Inequality::ALL`] on a scalar history
/// sampled at increasing times (integrals by the left rectangle rule).
pub fn check_interpolation_inequalities<T: Real>(
    grid: &GridSpec<T>,
    history: &[(T, Array2<T>)],
    exps: &NormExponents,
) -> Result<Vec<InequalityReport>, NormError> {
    if history.len() < 2 {
        return Err(NormError::Samples { needed: 2, got: history.len() });
    }
    let (p, q, r, s) = (exps.p, exps.q, exps.r, exps.s);
    let n = DIM;
    let inf = T::infinity();
    let mut grad_sup = MixedNormAccumulator::new(p);
    let mut grad_2q = MixedNormAccumulator::new(2.0 * s);
    let mut grad_4q = MixedNormAccumulator::new(4.0 * s);
    let mut w2 = MixedNormAccumulator::new(p);
    let mut w3 = MixedNormAccumulator::new(p);
    let mut b2 = 0.0f64;
    let mut b3 = 0.0f64;
    let rt = T::lit(r);
    for (t, f) in history {
        let t = t.to_f64_lossy();
        let gm = gradient_magnitude(grid, f);
        grad_sup.push_sample(t, lr_norm(grid, &gm, inf)?.to_f64_lossy());
        grad_2q.push_sample(t, lr_norm(grid, &gm, T::lit(2.0 * q))?.to_f64_lossy());
        grad_4q.push_sample(t, lr_norm(grid, &gm, T::lit(4.0 * q))?.to_f64_lossy());
        w2.push_sample(t, sobolev_norm(grid, f, 2, rt)?.to_f64_lossy());
        w3.push_sample(t, sobolev_norm(grid, f, 3, rt)?.to_f64_lossy());
        b2 = b2.max(besov_surrogate(grid, f, T::lit(2.0 - 2.0 / p), rt)?.to_f64_lossy());
        b3 = b3.max(besov_surrogate(grid, f, T::lit(3.0 - 2.0 / p), rt)?.to_f64_lossy());
    }
    let horizon = (history[history.len() - 1].0 - history[0].0).to_f64_lossy();

    let a1 = 0.5 * p * (1.0 - n / r);
    let a2 = 0.5 * p * (1.0 - n / r + n / (2.0 * q));
    let a3 = 0.5 * p * (2.0 - n / r + n / (4.0 * q));
    let rows = [
        (Inequality::GradSupByW2, grad_sup.lp(), w2.lp()),
        (
            Inequality::GradL2qInterpolation,
            grad_2q.lp(),
            b2.powf(1.0 - p / (2.0 * s)) * w2.lp().powf(p / (2.0 * s)),
        ),
        (
            Inequality::GradL4qInterpolation,
            grad_4q.lp(),
            b3.powf(1.0 - p / (4.0 * s)) * w3.lp().powf(p / (4.0 * s)),
        ),
        (
            Inequality::GradSupShortTime,
            grad_sup.lp(),
            horizon.powf(0.5 * (1.0 - n / r)) * b2.powf(a1) * w2.lp().powf(1.0 - a1),
        ),
        (
            Inequality::GradL2qShortTime,
            grad_2q.lp(),
            horizon.powf(0.5 * (1.0 - 2.0 / p + 1.0 / s - n / r + n / (2.0 * q))) * b2.powf(a2) * w2.lp().powf(1.0 - a2),
        ),
        (
            Inequality::GradL4qShortTime,
            grad_4q.lp(),
            horizon.powf(0.5 * (2.0 - 2.0 / p + 1.0 / (2.0 * s) - n / r + n / (4.0 * q)))
                * b3.powf(a3)
                * w3.lp().powf(1.0 - a3),
        ),
    ];
    Ok(rows
        .into_iter()
        .map(|(inequality, lhs, rhs)| {
            let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs };
            InequalityReport { inequality, lhs, rhs, ratio }
        })
        .collect())
}
