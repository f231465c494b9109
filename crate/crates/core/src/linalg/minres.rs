//! Preconditioned MINRES for symmetric (possibly indefinite) systems.
//!
//! Follows the Paige–Saunders recurrence. The preconditioner must be
//! symmetric positive (semi-)definite on the range of the operator.

use ndarray::Array1;

use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinresOutcome<T> {
    pub iterations: usize,
    /// Preconditioned residual norm estimate at exit.
    pub residual_estimate: T,
    /// Preconditioned norm of the initial residual.
    pub initial_residual: T,
    pub converged: bool,
}

/// Solves `A x = b` starting from `x`, stopping once the preconditioned
/// residual drops below `rtol` times its initial value or `atol` absolutely.
pub fn minres<T: Real>(
    op: impl Fn(&Array1<T>) -> Array1<T>,
    precond: impl Fn(&Array1<T>) -> Array1<T>,
    b: &Array1<T>,
    x: &mut Array1<T>,
    rtol: T,
    atol: T,
    max_iter: usize,
) -> MinresOutcome<T> {
    let mut r1 = b - &op(x);
    let mut y = precond(&r1);
    let beta1 = r1.dot(&y).max(T::zero()).sqrt();
    if beta1 <= atol || beta1 == T::zero() {
        return MinresOutcome { iterations: 0, residual_estimate: beta1, initial_residual: beta1, converged: true };
    }
    let target = (rtol * beta1).max(atol);

    let n = b.len();
    let mut oldb = T::zero();
    let mut beta = beta1;
    let mut dbar = T::zero();
    let mut epsln = T::zero();
    let mut phibar = beta1;
    let mut cs = -T::one();
    let mut sn = T::zero();
    let mut w = Array1::<T>::zeros(n);
    let mut w2 = Array1::<T>::zeros(n);
    let mut r2 = r1.clone();

    for itn in 1..=max_iter {
        let s = T::one() / beta;
        let v = &y * s;
        y = op(&v);
        if itn >= 2 {
            y.scaled_add(-(beta / oldb), &r1);
        }
        let alfa = v.dot(&y);
        y.scaled_add(-(alfa / beta), &r2);
        r1 = std::mem::replace(&mut r2, y);
        y = precond(&r2);
        oldb = beta;
        let b2 = r2.dot(&y);
        if b2 < T::zero() {
            // preconditioner lost definiteness; stop with what we have
            return MinresOutcome { iterations: itn, residual_estimate: phibar, initial_residual: beta1, converged: false };
        }
        beta = b2.sqrt();
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(T::epsilon());
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar = sn * phibar;

        let denom = T::one() / gamma;
        let w1 = std::mem::replace(&mut w2, w);
        let mut wn = v;
        wn.scaled_add(-oldeps, &w1);
        wn.scaled_add(-delta, &w2);
        wn *= denom;
        x.scaled_add(phi, &wn);
        w = wn;

        if phibar <= target || beta == T::zero() {
            return MinresOutcome { iterations: itn, residual_estimate: phibar, initial_residual: beta1, converged: true };
        }
    }
    MinresOutcome { iterations: max_iter, residual_estimate: phibar, initial_residual: beta1, converged: false }
}
