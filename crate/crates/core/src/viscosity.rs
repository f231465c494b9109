//! Temperature-dependent viscosity `μ(θ)` with certified bounds
//! `0 < μ_min ≤ μ(θ) ≤ μ_max`, `|μ'(θ)| ≤ μ'_max`.

use crate::error::ConfigError;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ViscosityKind {
    Constant,
    /// `μ_min + (μ_max - μ_min)(1 + tanh θ)/2`.
    AffineTanh,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViscosityModel<T> {
    kind: ViscosityKind,
    mu_min: T,
    mu_max: T,
}

impl<T: Real> ViscosityModel<T> {
    pub fn constant(mu: T) -> Result<Self, ConfigError> {
        Self::new(ViscosityKind::Constant, mu, mu)
    }

    pub fn affine_tanh(mu_min: T, mu_max: T) -> Result<Self, ConfigError> {
        Self::new(ViscosityKind::AffineTanh, mu_min, mu_max)
    }

    pub fn new(kind: ViscosityKind, mu_min: T, mu_max: T) -> Result<Self, ConfigError> {
        if !(mu_min > T::zero() && mu_min.is_finite()) {
            return Err(ConfigError::Validation {
                key: "viscosity.mu_min".into(),
                constraint: format!("lower viscosity bound must be positive and finite, got {mu_min}"),
            });
        }
        if !(mu_max >= mu_min && mu_max.is_finite()) {
            return Err(ConfigError::Validation {
                key: "viscosity.mu_max".into(),
                constraint: format!("upper bound {mu_max} must be finite and at least mu_min = {mu_min}"),
            });
        }
        let mu_max = match kind {
            ViscosityKind::Constant => mu_min,
            ViscosityKind::AffineTanh => mu_max,
        };
        Ok(Self { kind, mu_min, mu_max })
    }

    pub fn kind(&self) -> ViscosityKind {
        self.kind
    }
    pub fn mu_min(&self) -> T {
        self.mu_min
    }
    pub fn mu_max(&self) -> T {
        self.mu_max
    }

    /// Global bound on `|μ'|`.
    pub fn mu_prime_max(&self) -> T {
        match self.kind {
            ViscosityKind::Constant => T::zero(),
            ViscosityKind::AffineTanh => (self.mu_max - self.mu_min) * T::lit(0.5),
        }
    }

    /// `μ_max / μ_min`.
    pub fn contrast(&self) -> T {
        self.mu_max / self.mu_min
    }

    #[inline]
    pub fn mu(&self, theta: T) -> T {
        match self.kind {
            ViscosityKind::Constant => self.mu_min,
            ViscosityKind::AffineTanh => {
                self.mu_min + (self.mu_max - self.mu_min) * (T::one() + theta.tanh()) * T::lit(0.5)
            }
        }
    }

    #[inline]
    pub fn mu_prime(&self, theta: T) -> T {
        match self.kind {
            ViscosityKind::Constant => T::zero(),
            ViscosityKind::AffineTanh => {
                let sech = T::one() / theta.cosh();
                (self.mu_max - self.mu_min) * T::lit(0.5) * sech * sech
            }
        }
    }

    /// Checks the certified bounds on `n` evenly spaced samples of `[lo, hi]`.
    pub fn check_bounds(&self, lo: T, hi: T, n: usize) -> bool {
        let slack = T::epsilon() * T::lit(8.0) * self.mu_max;
        (0..n).all(|k| {
            let th = lo + (hi - lo) * T::from_count(k) / T::from_count(n.max(2) - 1);
            let m = self.mu(th);
            m >= self.mu_min - slack && m <= self.mu_max + slack && self.mu_prime(th).abs() <= self.mu_prime_max() + slack
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let c = ViscosityModel::constant(1.0).unwrap();
        assert_eq!(c.mu(7.0), 1.0);
        assert_eq!(c.mu_prime(7.0), 0.0);
        let t = ViscosityModel::affine_tanh(1.0, 3.0).unwrap();
        assert_abs_diff_eq!(t.mu(0.0), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t.mu(40.0), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.mu_prime(0.0), 1.0, epsilon = 1e-15);
        assert_eq!(t.mu_prime_max(), 1.0);
    }

    #[test]
    fn derivative_matches_central_difference() {
        let t = ViscosityModel::affine_tanh(1.0, 3.0).unwrap();
        let h = 1e-5f64;
        for th in [-2.0f64, 0.0, 2.0] {
            let fd = (t.mu(th + h) - t.mu(th - h)) / (2.0 * h);
            assert!((t.mu_prime(th) - fd).abs() <= 1e-6);
        }
    }

    #[test]
    fn sampled_bounds_hold() {
        for m in [ViscosityModel::constant(0.5).unwrap(), ViscosityModel::affine_tanh(1.0, 20.0).unwrap()] {
            assert!(m.check_bounds(-50.0, 50.0, 10_000));
        }
    }

    #[test]
    fn rejects_bad_bounds() {
        let e = ViscosityModel::affine_tanh(0.0, 2.0).unwrap_err();
        assert!(matches!(e, ConfigError::Validation { ref key, .. } if key == "viscosity.mu_min"));
        let e = ViscosityModel::affine_tanh(2.0, 1.0).unwrap_err();
        assert!(matches!(e, ConfigError::Validation { ref key, .. } if key == "viscosity.mu_max"));
    }

    proptest! {
        #[test]
        fn monotone_and_bounded(lo in 0.1f64..5.0, span in 0.0f64..20.0, a in -50.0f64..50.0, b in -50.0f64..50.0) {
            let m = ViscosityModel::affine_tanh(lo, lo + span).unwrap();
            let (a, b) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(m.mu(a) <= m.mu(b) + 1e-15);
            prop_assert!(m.mu(a) >= lo - 1e-12 && m.mu(a) <= lo + span + 1e-12);
        }
    }
}
