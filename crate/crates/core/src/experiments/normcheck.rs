//! Grid-independence of the interpolation-inequality constants.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::NormError;
use crate::grid::GridSpec;
use crate::norms::{check_interpolation_inequalities, Inequality, NormExponents};

pub const DEFAULT_GRIDS: [usize; 3] = [32, 64, 128];
pub const DEFAULT_HISTORIES: usize = 20;
/// Largest admissible relative spread of a fitted constant across grids.
pub const MAX_VARIATION: f64 = 0.10;

/// A random field `Σ a_kl cos(ω_kl t + φ_kl) cos(kπx) cos(lπy)`,
/// `0 ≤ k, l ≤ k_max`, `(k, l) ≠ (0, 0)`.
#[derive(Debug, Clone)]
pub struct RandomHistory {
    modes: Vec<(f64, f64, f64, f64, f64)>,
}

impl RandomHistory {
    pub fn new(rng: &mut impl Rng, k_max: usize) -> Self {
        let mut modes = Vec::new();
        for k in 0..=k_max {
            for l in 0..=k_max {
                if k + l == 0 {
                    continue;
                }
                let a = rng.gen_range(-1.0..1.0) / (1 + k * k + l * l) as f64;
                let omega = rng.gen_range(0.5..6.0);
                let phase = rng.gen_range(0.0..std::f64::consts::TAU);
                modes.push((k as f64, l as f64, a, omega, phase));
            }
        }
        Self { modes }
    }

    pub fn sample(&self, grid: &GridSpec<f64>, t: f64) -> Array2<f64> {
        let pi = std::f64::consts::PI;
        grid.sample_cells(|x, y| {
            self.modes
                .iter()
                .map(|&(k, l, a, w, ph)| a * (w * t + ph).cos() * (k * pi * x).cos() * (l * pi * y).cos())
                .sum()
        })
    }
}

/// Fitted constant (largest ratio over the histories) of one inequality per grid.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityFit {
    pub inequality: Inequality,
    pub constants: Vec<f64>,
}

impl InequalityFit {
    /// `(max - min) / min` over grids.
    pub fn variation(&self) -> f64 {
        let max = self.constants.iter().copied().fold(f64::MIN, f64::max);
        let min = self.constants.iter().copied().fold(f64::MAX, f64::min);
        (max - min) / min
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormCheckReport {
    pub grids: Vec<usize>,
    pub fits: Vec<InequalityFit>,
}

impl NormCheckReport {
    pub fn fit(&self, inequality: Inequality) -> &InequalityFit {
        self.fits.iter().find(|f| f.inequality == inequality).expect("every inequality is fitted")
    }

    /// Whether the horizon-independent constants vary less than [`MAX_VARIATION`].
    pub fn uniform_constants_stable(&self) -> bool {
        Inequality::UNIFORM.iter().all(|&i| self.fit(i).variation() < MAX_VARIATION)
    }
}

/// Evaluates every inequality on `histories` random fields sampled at
/// `t = 0, 0.05, …, 1` on each `n × n` unit-square grid.
pub fn norm_check(grids: &[usize], histories: usize, seed: u64, exps: &NormExponents) -> Result<NormCheckReport, NormError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fields: Vec<RandomHistory> = (0..histories).map(|_| RandomHistory::new(&mut rng, 3)).collect();
    let times: Vec<f64> = (0..=20).map(|k| k as f64 * 0.05).collect();
    let mut fits: Vec<InequalityFit> =
        Inequality::ALL.iter().map(|&inequality| InequalityFit { inequality, constants: Vec::new() }).collect();
    for &n in grids {
        let grid = GridSpec::unit_square(n).map_err(|_| NormError::Samples { needed: 8, got: n })?;
        let mut best = vec![0.0f64; fits.len()];
        for h in &fields {
            let series: Vec<(f64, Array2<f64>)> = times.iter().map(|&t| (t, h.sample(&grid, t))).collect();
            for (k, row) in check_interpolation_inequalities(&grid, &series, exps)?.iter().enumerate() {
                best[k] = best[k].max(row.ratio);
            }
        }
        for (fit, c) in fits.iter_mut().zip(best) {
            fit.constants.push(c);
        }
    }
    Ok(NormCheckReport { grids: grids.to_vec(), fits })
}
