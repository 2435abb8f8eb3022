//! Matrix-free linear operators.
//!
//! A [`LinearOperator`] wraps a [`MatVec`] kernel with dimension checks and
//! call counters. The counters are updated on every `apply`/`adjoint` through
//! shared references, so solvers cannot avoid being charged for an operator
//! application. Counts are the cost metric reported in solver traces.

mod kernels;
mod norm;

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

pub use kernels::{CircularConvolution, DenseMatrix, Diagonal, Heaviside, Identity, Zero};
pub use norm::{operator_norm, operator_norm_seeded, NormEstimate, DEFAULT_NORM_MAX_ITER, DEFAULT_NORM_TOL};

use crate::error::{check_len, Result};
use crate::scalar::Scalar;

/// Raw operator kernel. Implementations may assume correctly sized buffers.
pub trait MatVec<T: Scalar>: Send + Sync + fmt::Debug {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    /// `y = A x`
    fn matvec(&self, x: &[T], y: &mut [T]);
    /// `x = A^T y`
    fn matvec_t(&self, y: &[T], x: &mut [T]);
    fn kind(&self) -> &'static str;
    /// Explicit entries in row-major order, for kernels that store them.
    fn dense_entries(&self) -> Option<&[T]> {
        None
    }
    /// Convolution taps, for kernels defined by them.
    fn taps(&self) -> Option<&[T]> {
        None
    }
    /// `||A||` in closed form, for kernels whose spectrum is known.
    fn spectral_norm(&self) -> Option<T> {
        None
    }
}

/// Snapshot of operator call counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CallCounts {
    pub applies: u64,
    pub adjoints: u64,
}

impl CallCounts {
    pub fn total(&self) -> u64 {
        self.applies + self.adjoints
    }

    pub fn since(&self, earlier: CallCounts) -> CallCounts {
        CallCounts {
            applies: self.applies - earlier.applies,
            adjoints: self.adjoints - earlier.adjoints,
        }
    }
}

#[derive(Debug, Default)]
struct Counters {
    applies: AtomicU64,
    adjoints: AtomicU64,
}

/// Counted linear map `R^n -> R^m` with adjoint.
pub struct LinearOperator<T: Scalar> {
    kernel: Arc<dyn MatVec<T>>,
    counters: Counters,
}

impl<T: Scalar> LinearOperator<T> {
    pub fn new(kernel: impl MatVec<T> + 'static) -> Self {
        Self::from_arc(Arc::new(kernel))
    }

    pub fn from_arc(kernel: Arc<dyn MatVec<T>>) -> Self {
        Self {
            kernel,
            counters: Counters::default(),
        }
    }

    /// Dense operator from row-major entries.
    pub fn dense(m: usize, n: usize, entries: Vec<T>) -> Result<Self> {
        Ok(Self::new(DenseMatrix::new(m, n, entries)?))
    }

    pub fn identity(n: usize) -> Self {
        Self::new(Identity::new(n))
    }

    pub fn zero(m: usize, n: usize) -> Self {
        Self::new(Zero::new(m, n))
    }

    pub fn diagonal(d: Vec<T>) -> Self {
        Self::new(Diagonal::new(d))
    }

    pub fn heaviside(n: usize) -> Result<Self> {
        Ok(Self::new(Heaviside::new(n)?))
    }

    pub fn convolution(kernel: Vec<T>) -> Result<Self> {
        Ok(Self::new(CircularConvolution::new(kernel)?))
    }

    /// `(m, n)`: rows and columns.
    pub fn shape(&self) -> (usize, usize) {
        (self.kernel.rows(), self.kernel.cols())
    }

    pub fn rows(&self) -> usize {
        self.kernel.rows()
    }

    pub fn cols(&self) -> usize {
        self.kernel.cols()
    }

    pub fn kind(&self) -> &'static str {
        self.kernel.kind()
    }

    pub fn kernel(&self) -> &Arc<dyn MatVec<T>> {
        &self.kernel
    }

    pub fn counts(&self) -> CallCounts {
        CallCounts {
            applies: self.counters.applies.load(Ordering::SeqCst),
            adjoints: self.counters.adjoints.load(Ordering::SeqCst),
        }
    }

    pub fn apply_into(&self, x: &[T], y: &mut [T]) -> Result<()> {
        check_len("apply input", self.cols(), x.len())?;
        check_len("apply output", self.rows(), y.len())?;
        self.counters.applies.fetch_add(1, Ordering::SeqCst);
        self.kernel.matvec(x, y);
        Ok(())
    }

    pub fn adjoint_into(&self, y: &[T], x: &mut [T]) -> Result<()> {
        check_len("adjoint input", self.rows(), y.len())?;
        check_len("adjoint output", self.cols(), x.len())?;
        self.counters.adjoints.fetch_add(1, Ordering::SeqCst);
        self.kernel.matvec_t(y, x);
        Ok(())
    }

    pub fn apply(&self, x: &[T]) -> Result<Vec<T>> {
        let mut y = vec![T::zero(); self.rows()];
        self.apply_into(x, &mut y)?;
        Ok(y)
    }

    pub fn adjoint(&self, y: &[T]) -> Result<Vec<T>> {
        let mut x = vec![T::zero(); self.cols()];
        self.adjoint_into(y, &mut x)?;
        Ok(x)
    }

    /// Row-major explicit matrix. Uses stored entries when available,
    /// otherwise probes the kernel with unit vectors (uncounted).
    pub fn to_dense(&self) -> Vec<T> {
        if let Some(e) = self.kernel.dense_entries() {
            return e.to_vec();
        }
        let (m, n) = self.shape();
        let mut out = vec![T::zero(); m * n];
        let mut e = vec![T::zero(); n];
        let mut col = vec![T::zero(); m];
        for j in 0..n {
            e[j] = T::one();
            self.kernel.matvec(&e, &mut col);
            for i in 0..m {
                out[i * n + j] = col[i];
            }
            e[j] = T::zero();
        }
        out
    }
}

/// Clones share the kernel but start with fresh counters.
impl<T: Scalar> Clone for LinearOperator<T> {
    fn clone(&self) -> Self {
        Self::from_arc(Arc::clone(&self.kernel))
    }
}

impl<T: Scalar> fmt::Debug for LinearOperator<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (m, n) = self.shape();
        f.debug_struct("LinearOperator")
            .field("kind", &self.kind())
            .field("shape", &(m, n))
            .field("counts", &self.counts())
            .finish()
    }
}
