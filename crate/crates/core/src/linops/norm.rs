use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::LinearOperator;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::vecops::{norm, scale};

pub const DEFAULT_NORM_TOL: f64 = 1e-8;
pub const DEFAULT_NORM_MAX_ITER: usize = 500;
const DEFAULT_NORM_SEED: u64 = 0x5eed_0001;

/// Result of spectral-norm estimation by power iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormEstimate<T> {
    /// Power-iteration estimate of `||A||`; never exceeds the true value.
    pub estimate: T,
    /// `estimate * (1 + 10 tol)`, the value handed to the solvers.
    pub bound: T,
    pub iterations: usize,
    pub converged: bool,
}

impl<T: Scalar> NormEstimate<T> {
    /// `bound^2`, the Lipschitz constant used by the solvers.
    pub fn lipschitz(&self) -> T {
        self.bound * self.bound
    }
}

/// Estimate `||A||` with a fixed default seed.
pub fn operator_norm<T: Scalar>(
    op: &LinearOperator<T>,
    tol: f64,
    max_iter: usize,
) -> Result<NormEstimate<T>> {
    operator_norm_seeded(op, tol, max_iter, DEFAULT_NORM_SEED)
}

/// Power iteration on `A^T A` from a seeded Gaussian start. Each iteration
/// costs one apply and one adjoint. Kernels with a closed-form norm skip the
/// iteration and cost nothing.
pub fn operator_norm_seeded<T: Scalar>(
    op: &LinearOperator<T>,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<NormEstimate<T>> {
    let (m, n) = op.shape();
    if m == 0 || n == 0 {
        return Err(Error::InvalidParameter("operator must have m, n >= 1".into()));
    }
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Error::InvalidParameter(format!(
            "power iteration needs tol > 0 and max_iter >= 1 (got {tol}, {max_iter})"
        )));
    }
    let inflate = T::one() + T::of(10.0) * T::tol(tol);
    if let Some(exact) = op.kernel().spectral_norm() {
        return Ok(NormEstimate {
            estimate: exact,
            bound: exact * inflate,
            iterations: 0,
            converged: true,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<T> = (0..n)
        .map(|_| T::of(StandardNormal.sample(&mut rng)))
        .collect();
    let nv = norm(&v);
    scale(T::one() / nv, &mut v);

    let tol_t = T::tol(tol);
    let mut av = vec![T::zero(); m];
    let mut prev = T::zero();
    let mut estimate = T::zero();
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=max_iter {
        iterations = it;
        op.apply_into(&v, &mut av)?;
        op.adjoint_into(&av, &mut v)?;
        // |A^T A v| with |v| = 1 is a lower bound on ||A||^2
        let nz = norm(&v);
        if nz == T::zero() {
            estimate = T::zero();
            converged = true;
            break;
        }
        estimate = nz.sqrt();
        scale(T::one() / nz, &mut v);
        if it > 1 && (estimate - prev).abs() <= tol_t * estimate {
            converged = true;
            break;
        }
        prev = estimate;
    }
    let bound = estimate * inflate;
    if !converged {
        log::warn!("power iteration stopped after {iterations} iterations without reaching tol {tol:e}");
    }
    Ok(NormEstimate {
        estimate,
        bound,
        iterations,
        converged,
    })
}
