use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::linops::LinearOperator;
use crate::scalar::Scalar;
use crate::vecops::{all_finite, norm1, norm_inf, norm_sq, sub};

/// Generator parameter value, kept for provenance in manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Param {
    Bool(bool),
    Int(i64),
    Float(f64),
    Text(String),
}

impl From<bool> for Param {
    fn from(v: bool) -> Self {
        Param::Bool(v)
    }
}
impl From<i64> for Param {
    fn from(v: i64) -> Self {
        Param::Int(v)
    }
}
impl From<usize> for Param {
    fn from(v: usize) -> Self {
        Param::Int(v as i64)
    }
}
impl From<f64> for Param {
    fn from(v: f64) -> Self {
        Param::Float(v)
    }
}
impl From<&str> for Param {
    fn from(v: &str) -> Self {
        Param::Text(v.to_string())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub generator: String,
    pub seed: u64,
    #[serde(default)]
    pub params: BTreeMap<String, Param>,
}

/// `min_x 1/2 ||Ax - b||^2 + lambda ||x||_1`
#[derive(Debug, Clone)]
pub struct BpdnProblem<T: Scalar> {
    pub op: LinearOperator<T>,
    pub b: Vec<T>,
    pub lambda: T,
    /// Reference minimizer, when one has been computed.
    pub x_star: Option<Vec<T>>,
    /// Ground-truth signal used to synthesize `b` (not the minimizer).
    pub signal: Option<Vec<T>>,
    pub metadata: Metadata,
}

impl<T: Scalar> BpdnProblem<T> {
    /// `lambda = 0` is accepted (plain least squares).
    pub fn new(op: LinearOperator<T>, b: Vec<T>, lambda: T) -> Result<Self> {
        check_len("observation b", op.rows(), b.len())?;
        if !all_finite(&b) {
            return Err(Error::NonFinite("observation b"));
        }
        if !lambda.is_finite() || lambda < T::zero() {
            return Err(Error::InvalidParameter(format!(
                "lambda must be finite and >= 0, got {lambda}"
            )));
        }
        Ok(Self {
            op,
            b,
            lambda,
            x_star: None,
            signal: None,
            metadata: Metadata::default(),
        })
    }

    pub fn with_x_star(mut self, x_star: Vec<T>) -> Result<Self> {
        check_len("reference solution", self.n(), x_star.len())?;
        self.x_star = Some(x_star);
        Ok(self)
    }

    pub fn with_signal(mut self, signal: Vec<T>) -> Result<Self> {
        check_len("signal", self.n(), signal.len())?;
        self.signal = Some(signal);
        Ok(self)
    }

    pub fn with_metadata(mut self, metadata: Metadata) -> Self {
        self.metadata = metadata;
        self
    }

    pub fn m(&self) -> usize {
        self.op.rows()
    }

    pub fn n(&self) -> usize {
        self.op.cols()
    }

    /// `F(x)`; one apply.
    pub fn objective(&self, x: &[T]) -> Result<T> {
        let ax = self.op.apply(x)?;
        Ok(self.objective_from_image(x, &ax))
    }

    /// `F(x)` given `A x`.
    pub fn objective_from_image(&self, x: &[T], ax: &[T]) -> T {
        let r = sub(ax, &self.b);
        T::of(0.5) * norm_sq(&r) + self.lambda * norm1(x)
    }

    /// `A^T (A x - b)` given `A x`; one adjoint.
    pub fn gradient_from_image(&self, ax: &[T]) -> Result<Vec<T>> {
        self.op.adjoint(&sub(ax, &self.b))
    }

    /// `(A x, A^T (A x - b))`; one apply and one adjoint.
    pub fn image_and_gradient(&self, x: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        let ax = self.op.apply(x)?;
        let g = self.gradient_from_image(&ax)?;
        Ok((ax, g))
    }

    /// True when `0` is a minimizer, i.e. `||A^T b||_inf <= lambda`. One adjoint.
    pub fn zero_is_optimal(&self) -> Result<bool> {
        Ok(norm_inf(&self.op.adjoint(&self.b)?) <= self.lambda)
    }
}

/// Norm of the minimum-norm element of `grad + lambda d||x||_1`.
pub fn subgradient_norm<T: Scalar>(lambda: T, x: &[T], grad: &[T]) -> T {
    subgradient(lambda, x, grad).iter().map(|v| *v * *v).sum::<T>().sqrt()
}

/// Minimum-norm element of `grad + lambda d||x||_1`.
pub fn subgradient<T: Scalar>(lambda: T, x: &[T], grad: &[T]) -> Vec<T> {
    x.iter()
        .zip(grad)
        .map(|(&xi, &gi)| {
            if xi > T::zero() {
                gi + lambda
            } else if xi < T::zero() {
                gi - lambda
            } else if gi.abs() <= lambda {
                T::zero()
            } else {
                gi.signum() * (gi.abs() - lambda)
            }
        })
        .collect()
}
