//! Soft-thresholding and the scaled proximal operator under a rank-one metric.
//!
//! For `H = sigma I - u u^T` the minimizer of `1/2 |x - xc|_H^2 + lambda |x|_1`
//! is `x(mu) = shrink(xc + mu u, lambda / sigma)` where the scalar `mu` solves
//!
//! ```text
//!     lhs(mu) := u^T x(mu) - mu sigma = u^T xc =: rhs.
//! ```
//!
//! `lhs` is continuous, piecewise linear and strictly decreasing; its kinks
//! are the breakpoints `(+-lambda/sigma - xc_i) / u_i`. Two root finders are
//! provided: a sorted sweep over all breakpoints and a halving search driven
//! by median selection. Both finish with the same exact solve on the final
//! linear piece.

mod median;
mod metric;
mod sorted;

pub use metric::RankOneMetric;

use std::cmp::Ordering;

use crate::error::{check_len, Error, Result};
use crate::scalar::Scalar;
use crate::vecops::{all_finite, dot, norm1};

/// Componentwise `sgn(y_i) max(|y_i| - threshold, 0)`.
pub fn shrink<T: Scalar>(y: &[T], threshold: T) -> Vec<T> {
    y.iter().map(|v| shrink_scalar(*v, threshold)).collect()
}

#[inline]
pub fn shrink_scalar<T: Scalar>(y: T, threshold: T) -> T {
    if y > threshold {
        y - threshold
    } else if y < -threshold {
        y + threshold
    } else {
        T::zero()
    }
}

/// Root-finding strategy for the multiplier `mu`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProxMethod {
    /// Sort all breakpoints and sweep, `O(n log n)`.
    #[default]
    Sorted,
    /// Halve the breakpoint set around its median, `O(n)`.
    Median,
}

impl std::str::FromStr for ProxMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sorted" => Ok(Self::Sorted),
            "median" => Ok(Self::Median),
            other => Err(Error::InvalidParameter(format!("unknown prox method `{other}`"))),
        }
    }
}

/// A candidate multiplier value tagged with the coordinate bound it belongs to.
///
/// `signed_index = +(i+1)` marks `(lambda/sigma - xc_i) / u_i` and
/// `-(i+1)` marks `(-lambda/sigma - xc_i) / u_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breakpoint<T> {
    pub value: T,
    pub signed_index: isize,
}

impl<T: Scalar> Breakpoint<T> {
    pub fn coord(&self) -> usize {
        self.signed_index.unsigned_abs() - 1
    }

    /// Change of the slope of `lhs` when `mu` increases through this point:
    /// `-u_i^2` where coordinate `i` enters the zero set, `+u_i^2` where it leaves.
    pub fn slope_delta(&self, u: &[T]) -> T {
        let ui = u[self.coord()];
        let sq = ui * ui;
        match (self.signed_index < 0, ui < T::zero()) {
            (true, true) => sq,
            (true, false) => -sq,
            (false, true) => -sq,
            (false, false) => sq,
        }
    }

    pub(crate) fn order(&self, other: &Self) -> Ordering {
        self.value
            .partial_cmp(&other.value)
            .unwrap_or(Ordering::Equal)
            .then(self.signed_index.cmp(&other.signed_index))
    }
}

/// Solution of the scaled proximal problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxResult<T> {
    pub x: Vec<T>,
    pub mu: T,
    /// Breakpoints swept (sorted) or halving rounds (median).
    pub pieces_visited: usize,
    /// Elementary comparisons and coordinate visits spent locating `mu`.
    pub work: usize,
}

/// Breakpoints of `lhs`, two per coordinate with `u_i != 0`.
pub fn breakpoints<T: Scalar>(metric: &RankOneMetric<T>, xc: &[T], lambda: T) -> Vec<Breakpoint<T>> {
    breakpoints_of(&PiecewiseLhs::new(metric, xc, lambda))
}

/// `u^T x(mu) - mu sigma`, evaluated from scratch.
pub fn lhs_at<T: Scalar>(metric: &RankOneMetric<T>, xc: &[T], lambda: T, mu: T) -> T {
    PiecewiseLhs::new(metric, xc, lambda).lhs(mu)
}

/// `1/2 |x - xc|_H^2 + lambda |x|_1`
pub fn model_value<T: Scalar>(metric: &RankOneMetric<T>, xc: &[T], lambda: T, x: &[T]) -> T {
    let diff: Vec<T> = x.iter().zip(xc).map(|(a, b)| *a - *b).collect();
    T::of(0.5) * metric.quad_form(&diff) + lambda * norm1(x)
}

/// `argmin_x 1/2 |x - xc|_H^2 + lambda |x|_1` for `H = sigma I - u u^T`.
///
/// `lambda = 0` is accepted; the result is then `xc` itself.
pub fn prox_imro<T: Scalar>(
    metric: &RankOneMetric<T>,
    xc: &[T],
    lambda: T,
    method: ProxMethod,
) -> Result<ProxResult<T>> {
    check_len("prox center", metric.dim(), xc.len())?;
    if !all_finite(xc) {
        return Err(Error::NonFinite("prox center"));
    }
    if !lambda.is_finite() || lambda < T::zero() {
        return Err(Error::InvalidParameter(format!(
            "prox weight must be finite and >= 0, got {lambda}"
        )));
    }
    let f = PiecewiseLhs::new(metric, xc, lambda);
    if metric.is_scaled_identity() {
        return Ok(ProxResult {
            x: shrink(xc, f.t),
            mu: T::zero(),
            pieces_visited: 0,
            work: 0,
        });
    }
    let (mu, pieces_visited, work) = match method {
        ProxMethod::Sorted => sorted::find_mu(&f),
        ProxMethod::Median => median::find_mu(&f),
    };
    Ok(ProxResult {
        x: f.x_at(mu),
        mu,
        pieces_visited,
        work,
    })
}

/// `lhs(mu)` together with the data it depends on.
pub(crate) struct PiecewiseLhs<'a, T> {
    pub sigma: T,
    pub u: &'a [T],
    pub xc: &'a [T],
    /// Shrinkage threshold `lambda / sigma`.
    pub t: T,
    pub rhs: T,
}

impl<'a, T: Scalar> PiecewiseLhs<'a, T> {
    pub fn new(metric: &'a RankOneMetric<T>, xc: &'a [T], lambda: T) -> Self {
        Self {
            sigma: metric.sigma(),
            u: metric.u(),
            xc,
            t: lambda / metric.sigma(),
            rhs: dot(metric.u(), xc),
        }
    }

    #[inline]
    pub fn coord(&self, i: usize, mu: T) -> T {
        shrink_scalar(self.xc[i] + mu * self.u[i], self.t)
    }

    pub fn x_at(&self, mu: T) -> Vec<T> {
        (0..self.xc.len()).map(|i| self.coord(i, mu)).collect()
    }

    pub fn lhs(&self, mu: T) -> T {
        let mut s = T::zero();
        for i in 0..self.xc.len() {
            s = s + self.u[i] * self.coord(i, mu);
        }
        s - mu * self.sigma
    }

    /// Linear contribution `c0 + c1 mu` of coordinate `i` on the piece
    /// containing `rep`.
    #[inline]
    pub fn linear_part(&self, i: usize, rep: T) -> Option<(T, T)> {
        let (ui, xi) = (self.u[i], self.xc[i]);
        let z = xi + rep * ui;
        if z > self.t {
            Some((ui * (xi - self.t), ui * ui))
        } else if z < -self.t {
            Some((ui * (xi + self.t), ui * ui))
        } else {
            None
        }
    }

    /// Exact root of `lhs = rhs` on the linear piece containing `rep`.
    pub fn solve_on_piece(&self, rep: T) -> T {
        let (mut c0, mut c1) = (T::zero(), T::zero());
        for i in 0..self.xc.len() {
            if let Some((a, b)) = self.linear_part(i, rep) {
                c0 = c0 + a;
                c1 = c1 + b;
            }
        }
        (self.rhs - c0) / (c1 - self.sigma)
    }

    /// Interior point of a bracket with no breakpoint strictly inside.
    pub fn representative(lo: Option<T>, hi: Option<T>) -> T {
        let step = |v: T| T::one().max(v.abs());
        match (lo, hi) {
            (Some(a), Some(b)) => a + (b - a) * T::of(0.5),
            (Some(a), None) => a + step(a),
            (None, Some(b)) => b - step(b),
            (None, None) => T::zero(),
        }
    }
}

pub(crate) fn breakpoints_of<T: Scalar>(f: &PiecewiseLhs<'_, T>) -> Vec<Breakpoint<T>> {
    let mut out = Vec::with_capacity(2 * f.xc.len());
    for (i, (&ui, &xi)) in f.u.iter().zip(f.xc).enumerate() {
        if ui == T::zero() {
            continue;
        }
        let k = (i + 1) as isize;
        // a subnormal u_i can push a breakpoint to infinity; such a point is
        // never crossed at finite mu
        for (value, signed_index) in [((f.t - xi) / ui, k), ((-f.t - xi) / ui, -k)] {
            if value.is_finite() {
                out.push(Breakpoint { value, signed_index });
            }
        }
    }
    out
}
