use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::vecops::{all_finite, axpy, dot, norm_sq};

/// `H = sigma I - u u^T` with `sigma > |u|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneMetric<T> {
    sigma: T,
    u: Vec<T>,
    u_norm_sq: T,
}

impl<T: Scalar> RankOneMetric<T> {
    pub fn new(sigma: T, u: Vec<T>) -> Result<Self> {
        if !sigma.is_finite() || !all_finite(&u) {
            return Err(Error::NonFinite("metric"));
        }
        let u_norm_sq = norm_sq(&u);
        if !(sigma > u_norm_sq) {
            return Err(Error::IndefiniteMetric {
                sigma: sigma.as_f64(),
                u_norm_sq: u_norm_sq.as_f64(),
            });
        }
        Ok(Self {
            sigma,
            u,
            u_norm_sq,
        })
    }

    /// `H = sigma I`.
    pub fn scaled_identity(sigma: T, n: usize) -> Result<Self> {
        Self::new(sigma, vec![T::zero(); n])
    }

    pub fn sigma(&self) -> T {
        self.sigma
    }

    pub fn u(&self) -> &[T] {
        &self.u
    }

    pub fn u_norm_sq(&self) -> T {
        self.u_norm_sq
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    pub fn is_scaled_identity(&self) -> bool {
        self.u_norm_sq == T::zero()
    }

    /// `x^T H x = sigma |x|^2 - (u^T x)^2`
    pub fn quad_form(&self, x: &[T]) -> T {
        let ux = dot(&self.u, x);
        self.sigma * norm_sq(x) - ux * ux
    }

    /// `|x|_H`
    pub fn norm(&self, x: &[T]) -> T {
        self.quad_form(x).max(T::zero()).sqrt()
    }

    /// `H x`
    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let ux = dot(&self.u, x);
        let mut out: Vec<T> = x.iter().map(|v| self.sigma * *v).collect();
        axpy(-ux, &self.u, &mut out);
        out
    }

    /// `H^{-1} g = g / sigma + u (u^T g) / (sigma (sigma - |u|^2))`
    pub fn solve(&self, g: &[T]) -> Vec<T> {
        let ug = dot(&self.u, g);
        let inv_sigma = T::one() / self.sigma;
        let mut out: Vec<T> = g.iter().map(|v| *v * inv_sigma).collect();
        if ug != T::zero() {
            let coef = ug / (self.sigma * (self.sigma - self.u_norm_sq));
            axpy(coef, &self.u, &mut out);
        }
        out
    }

    /// Replace `sigma` by `sigma + bump`.
    pub fn bumped(mut self, bump: T) -> Self {
        self.sigma = self.sigma + bump;
        self
    }
}
