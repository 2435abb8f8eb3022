//! Per-iteration construction of `H = sigma I - u u^T`.
//!
//! The 1-D rule takes `sigma = ||A||^2` and picks `u` so that `H v = A^T A v`
//! for one direction `v`; the result majorizes `A^T A`. The 2-D rule picks
//! `sigma` and `u` so that `H` and `A^T A` agree on `span{grad, d}`.

use crate::error::{check_len, Error, Result};
use crate::linops::LinearOperator;
use crate::prox::RankOneMetric;
use crate::scalar::Scalar;
use crate::vecops::{dot, norm, norm_sq, scaled};

/// `sigma - ||Av||^2` below `SING_TOL * sigma` means `v` is numerically a
/// dominant right singular vector and `u = 0` is used.
pub const SING_TOL: f64 = 1e-10;
/// Threshold on `1 - eps^2` and on the relative size of `det S`.
pub const DEGENERATE_TOL: f64 = 1e-12;
/// Relative amount added to `sigma` when `sigma - ||u||^2` is not safely positive.
pub const BUMP: f64 = 1e-8;
/// Tolerance for the 2-D validity claims.
pub const CLAIM_TOL: f64 = 1e-9;

/// Wrap `(sigma, u)`, nudging `sigma` up when `sigma - ||u||^2 <= BUMP sigma`.
/// Returns the metric and whether the nudge was applied.
fn finish<T: Scalar>(sigma: T, u: Vec<T>) -> Result<(RankOneMetric<T>, bool)> {
    let un = norm_sq(&u);
    let bump = T::of(BUMP) * sigma;
    if sigma - un <= bump {
        let sigma = sigma.max(un) + bump;
        return Ok((RankOneMetric::new(sigma, u)?, true));
    }
    Ok((RankOneMetric::new(sigma, u)?, false))
}

fn unit<T: Scalar>(v: &[T], what: &'static str) -> Result<Vec<T>> {
    let nv = norm(v);
    if nv == T::zero() {
        return Err(Error::ZeroDirection(what));
    }
    if !nv.is_finite() {
        return Err(Error::NonFinite(what));
    }
    Ok(scaled(T::one() / nv, v))
}

/// 1-D metric along `v`. One apply and one adjoint.
///
/// `norm_bound` must be at least `||A||`.
pub fn metric_1d<T: Scalar>(op: &LinearOperator<T>, norm_bound: T, v: &[T]) -> Result<RankOneMetric<T>> {
    check_len("direction", op.cols(), v.len())?;
    let v = unit(v, "direction")?;
    let av = op.apply(&v)?;
    let atav = op.adjoint(&av)?;
    metric_1d_from_products(norm_bound, &v, &av, &atav)
}

/// 1-D metric from a unit vector `v` and the products `A v`, `A^T A v`.
pub fn metric_1d_from_products<T: Scalar>(
    norm_bound: T,
    v: &[T],
    av: &[T],
    atav: &[T],
) -> Result<RankOneMetric<T>> {
    check_len("A^T A v", v.len(), atav.len())?;
    if !(norm_bound > T::zero()) || !norm_bound.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "operator norm bound must be positive, got {norm_bound}"
        )));
    }
    let sigma = norm_bound * norm_bound;
    let gap = sigma - norm_sq(av);
    let u = if gap > T::of(SING_TOL) * sigma {
        let s = T::one() / gap.sqrt();
        v.iter().zip(atav).map(|(vi, wi)| (sigma * *vi - *wi) * s).collect()
    } else {
        vec![T::zero(); v.len()]
    };
    Ok(finish(sigma, u)?.0)
}

/// Gram data of the normalized pair `(g, d)` under `A^T A`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureSnapshot2D<T> {
    pub s11: T,
    pub s12: T,
    pub s22: T,
    /// `<g, d>` for the normalized vectors.
    pub eps: T,
    pub eta1: T,
    pub eta2: T,
    pub eta3: T,
    /// `eta2^2 - 4 eta1 eta3`, evaluated as a sum of squares.
    pub disc: T,
}

impl<T: Scalar> CurvatureSnapshot2D<T> {
    pub fn new(s11: T, s12: T, s22: T, eps: T) -> Self {
        let two = T::of(2.0);
        let eta1 = T::one() - eps * eps;
        let eta2 = -s11 - s22 + two * eps * s12;
        let eta3 = s11 * s22 - s12 * s12;
        let a = eps * (s11 + s22) - two * s12;
        let disc = a * a + eta1 * (s11 - s22) * (s11 - s22);
        Self {
            s11,
            s12,
            s22,
            eps,
            eta1,
            eta2,
            eta3,
            disc,
        }
    }

    /// `eta2^2 - 4 eta1 eta3` evaluated directly.
    pub fn disc_direct(&self) -> T {
        self.eta2 * self.eta2 - T::of(4.0) * self.eta1 * self.eta3
    }

    /// Larger root of `eta1 s^2 + eta2 s + eta3 = 0`.
    pub fn sigma(&self) -> T {
        (-self.eta2 + self.disc.sqrt()) / (T::of(2.0) * self.eta1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Degeneracy {
    /// `g` and `d` are (numerically) parallel; the 1-D rule along `g` was used.
    Parallel,
    /// `A g` and `A d` are (numerically) parallel; `sigma` was nudged up.
    SingularGram,
}

/// Everything computed while building a 2-D metric, for checking and logging.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric2dReport<T> {
    pub snapshot: CurvatureSnapshot2D<T>,
    /// Root of the quadratic before any nudge.
    pub sigma_root: T,
    pub sigma: T,
    pub u_norm_sq: T,
    /// `sqrt(disc) / eta1`, the closed form of `||u||^2`.
    pub u_norm_sq_closed: T,
    pub degeneracy: Option<Degeneracy>,
    pub bumped: bool,
}

impl<T: Scalar> Metric2dReport<T> {
    /// Real discriminant.
    pub fn claim_real_root(&self) -> bool {
        let s = &self.snapshot;
        let scale = (s.s11 + s.s22 + s.s12.abs()).powi(2);
        s.disc_direct() >= -T::of(CLAIM_TOL) * (T::one() + scale)
    }

    /// `sigma >= max(S11, S22)`.
    pub fn claim_sigma_dominates(&self) -> bool {
        let s = &self.snapshot;
        let m = s.s11.max(s.s22);
        self.sigma >= m - T::of(CLAIM_TOL) * (T::one() + m)
    }

    /// `sigma >= ||u||^2`, and `||u||^2` agrees with its closed form.
    pub fn claim_positive_definite(&self) -> bool {
        let pd = self.sigma >= self.u_norm_sq - T::of(CLAIM_TOL) * (T::one() + self.u_norm_sq);
        pd && self.u_norm_identity_holds()
    }

    pub fn u_norm_identity_holds(&self) -> bool {
        if self.degeneracy == Some(Degeneracy::Parallel) {
            return true;
        }
        let d = (self.u_norm_sq - self.u_norm_sq_closed).abs();
        d <= T::of(1e-8) * (self.u_norm_sq_closed.abs() + self.sigma_root.abs())
    }

    pub fn claims_hold(&self) -> bool {
        self.claim_real_root() && self.claim_sigma_dominates() && self.claim_positive_definite()
    }
}

/// 2-D metric on `span{grad, d}`. Two applies, plus one adjoint when the
/// pair is degenerate and the 1-D fallback is needed.
pub fn metric_2d<T: Scalar>(
    op: &LinearOperator<T>,
    norm_bound: T,
    grad: &[T],
    d: &[T],
) -> Result<(RankOneMetric<T>, Metric2dReport<T>)> {
    check_len("gradient", op.cols(), grad.len())?;
    check_len("direction", op.cols(), d.len())?;
    let ag = op.apply(grad)?;
    let ad = op.apply(d)?;
    metric_2d_from_products(op, norm_bound, grad, d, &ag, &ad)
}

/// 2-D metric from `grad`, `d` and their images `A grad`, `A d` (neither
/// needs to be normalized). `op` is only touched in the parallel fallback.
pub fn metric_2d_from_products<T: Scalar>(
    op: &LinearOperator<T>,
    norm_bound: T,
    grad: &[T],
    d: &[T],
    a_grad: &[T],
    a_d: &[T],
) -> Result<(RankOneMetric<T>, Metric2dReport<T>)> {
    check_len("A grad", a_grad.len(), a_d.len())?;
    let ng = norm(grad);
    let nd = norm(d);
    if ng == T::zero() {
        return Err(Error::ZeroDirection("gradient"));
    }
    if nd == T::zero() {
        return Err(Error::ZeroDirection("direction"));
    }
    let g = scaled(T::one() / ng, grad);
    let dd = scaled(T::one() / nd, d);
    let ag = scaled(T::one() / ng, a_grad);
    let ad = scaled(T::one() / nd, a_d);

    let snap = CurvatureSnapshot2D::new(norm_sq(&ag), dot(&ag, &ad), norm_sq(&ad), dot(&g, &dd));
    let tol = T::of(DEGENERATE_TOL);
    let sigma_root = snap.sigma();

    if snap.eta1 <= tol || !(sigma_root > T::zero()) || !sigma_root.is_finite() {
        let atag = op.adjoint(&ag)?;
        let metric = metric_1d_from_products(norm_bound, &g, &ag, &atag)?;
        let report = Metric2dReport {
            snapshot: snap,
            sigma_root,
            sigma: metric.sigma(),
            u_norm_sq: metric.u_norm_sq(),
            u_norm_sq_closed: metric.u_norm_sq(),
            degeneracy: Some(Degeneracy::Parallel),
            bumped: false,
        };
        return Ok((metric, report));
    }

    let scale = snap.s11 + snap.s22;
    let degeneracy = (snap.eta3 <= tol * scale * scale).then_some(Degeneracy::SingularGram);

    let r1 = (sigma_root - snap.s11).max(T::zero()).sqrt();
    let mut r2 = (sigma_root - snap.s22).max(T::zero()).sqrt();
    if snap.eps * sigma_root - snap.s12 < T::zero() {
        r2 = -r2;
    }
    let tau = (r1 - snap.eps * r2) / snap.eta1;
    let rho = (r2 - snap.eps * r1) / snap.eta1;
    let u: Vec<T> = g.iter().zip(&dd).map(|(gi, di)| tau * *gi + rho * *di).collect();

    let (metric, bumped) = finish(sigma_root, u)?;
    let report = Metric2dReport {
        snapshot: snap,
        sigma_root,
        sigma: metric.sigma(),
        u_norm_sq: metric.u_norm_sq(),
        u_norm_sq_closed: snap.disc.sqrt() / snap.eta1,
        degeneracy,
        bumped,
    };
    Ok((metric, report))
}
