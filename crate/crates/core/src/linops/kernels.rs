use super::MatVec;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::vecops::{axpy, dot};

/// Explicit `m x n` matrix, row-major.
#[derive(Debug, Clone)]
pub struct DenseMatrix<T> {
    m: usize,
    n: usize,
    entries: Vec<T>,
}

impl<T: Scalar> DenseMatrix<T> {
    pub fn new(m: usize, n: usize, entries: Vec<T>) -> Result<Self> {
        if entries.len() != m * n {
            return Err(Error::DimensionMismatch {
                what: "dense entries",
                expected: m * n,
                actual: entries.len(),
            });
        }
        Ok(Self { m, n, entries })
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }
}

impl<T: Scalar> MatVec<T> for DenseMatrix<T> {
    fn rows(&self) -> usize {
        self.m
    }
    fn cols(&self) -> usize {
        self.n
    }
    fn matvec(&self, x: &[T], y: &mut [T]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = dot(self.row(i), x);
        }
    }
    fn matvec_t(&self, y: &[T], x: &mut [T]) {
        x.iter_mut().for_each(|v| *v = T::zero());
        for (i, yi) in y.iter().enumerate() {
            if *yi != T::zero() {
                axpy(*yi, self.row(i), x);
            }
        }
    }
    fn kind(&self) -> &'static str {
        "dense"
    }
    fn dense_entries(&self) -> Option<&[T]> {
        Some(&self.entries)
    }
}

#[derive(Debug, Clone)]
pub struct Identity {
    n: usize,
}

impl Identity {
    pub fn new(n: usize) -> Self {
        Self { n }
    }
}

impl<T: Scalar> MatVec<T> for Identity {
    fn rows(&self) -> usize {
        self.n
    }
    fn cols(&self) -> usize {
        self.n
    }
    fn matvec(&self, x: &[T], y: &mut [T]) {
        y.copy_from_slice(x);
    }
    fn matvec_t(&self, y: &[T], x: &mut [T]) {
        x.copy_from_slice(y);
    }
    fn kind(&self) -> &'static str {
        "identity"
    }
    fn spectral_norm(&self) -> Option<T> {
        Some(T::one())
    }
}

#[derive(Debug, Clone)]
pub struct Zero {
    m: usize,
    n: usize,
}

impl Zero {
    pub fn new(m: usize, n: usize) -> Self {
        Self { m, n }
    }
}

impl<T: Scalar> MatVec<T> for Zero {
    fn rows(&self) -> usize {
        self.m
    }
    fn cols(&self) -> usize {
        self.n
    }
    fn matvec(&self, _x: &[T], y: &mut [T]) {
        y.iter_mut().for_each(|v| *v = T::zero());
    }
    fn matvec_t(&self, _y: &[T], x: &mut [T]) {
        x.iter_mut().for_each(|v| *v = T::zero());
    }
    fn kind(&self) -> &'static str {
        "zero"
    }
    fn spectral_norm(&self) -> Option<T> {
        Some(T::zero())
    }
}

#[derive(Debug, Clone)]
pub struct Diagonal<T> {
    d: Vec<T>,
}

impl<T: Scalar> Diagonal<T> {
    pub fn new(d: Vec<T>) -> Self {
        Self { d }
    }
}

impl<T: Scalar> MatVec<T> for Diagonal<T> {
    fn rows(&self) -> usize {
        self.d.len()
    }
    fn cols(&self) -> usize {
        self.d.len()
    }
    fn matvec(&self, x: &[T], y: &mut [T]) {
        for ((yi, xi), di) in y.iter_mut().zip(x).zip(&self.d) {
            *yi = *di * *xi;
        }
    }
    fn matvec_t(&self, y: &[T], x: &mut [T]) {
        self.matvec(y, x)
    }
    fn kind(&self) -> &'static str {
        "diagonal"
    }
    fn spectral_norm(&self) -> Option<T> {
        Some(self.d.iter().fold(T::zero(), |m, v| m.max(v.abs())))
    }
}

/// Lower-triangular all-ones operator: `(Ax)_i = sum_{j <= i} x_j`.
#[derive(Debug, Clone)]
pub struct Heaviside {
    n: usize,
}

impl Heaviside {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("heaviside dimension must be >= 1".into()));
        }
        Ok(Self { n })
    }
}

impl<T: Scalar> MatVec<T> for Heaviside {
    fn rows(&self) -> usize {
        self.n
    }
    fn cols(&self) -> usize {
        self.n
    }
    fn matvec(&self, x: &[T], y: &mut [T]) {
        let mut acc = T::zero();
        for (yi, xi) in y.iter_mut().zip(x) {
            acc = acc + *xi;
            *yi = acc;
        }
    }
    fn matvec_t(&self, y: &[T], x: &mut [T]) {
        let mut acc = T::zero();
        for (xi, yi) in x.iter_mut().zip(y).rev() {
            acc = acc + *yi;
            *xi = acc;
        }
    }
    fn kind(&self) -> &'static str {
        "heaviside"
    }
    /// Largest singular value `1 / (2 sin(pi / (4n + 2)))`.
    fn spectral_norm(&self) -> Option<T> {
        let angle = std::f64::consts::PI / (4 * self.n + 2) as f64;
        Some(T::of(0.5 / angle.sin()))
    }
}

/// Circular convolution `(Ax)_i = sum_j k_{(i - j) mod n} x_j`, evaluated directly.
#[derive(Debug, Clone)]
pub struct CircularConvolution<T> {
    kernel: Vec<T>,
    /// Largest DFT magnitude of the kernel.
    norm: T,
}

impl<T: Scalar> CircularConvolution<T> {
    pub fn new(kernel: Vec<T>) -> Result<Self> {
        if kernel.is_empty() {
            return Err(Error::InvalidParameter("convolution kernel must be non-empty".into()));
        }
        let norm = T::of(dft_max_abs(&kernel));
        Ok(Self { kernel, norm })
    }

    pub fn kernel(&self) -> &[T] {
        &self.kernel
    }
}

impl<T: Scalar> MatVec<T> for CircularConvolution<T> {
    fn rows(&self) -> usize {
        self.kernel.len()
    }
    fn cols(&self) -> usize {
        self.kernel.len()
    }
    fn matvec(&self, x: &[T], y: &mut [T]) {
        let n = self.kernel.len();
        y.iter_mut().for_each(|v| *v = T::zero());
        for (j, xj) in x.iter().enumerate() {
            if *xj == T::zero() {
                continue;
            }
            // y[i] += k[i - j] x[j]; split the wrap-around into two runs
            let (head, tail) = self.kernel.split_at(n - j);
            axpy(*xj, head, &mut y[j..]);
            axpy(*xj, tail, &mut y[..j]);
        }
    }
    fn matvec_t(&self, y: &[T], x: &mut [T]) {
        let n = self.kernel.len();
        // x[j] = sum_i k[(i - j) mod n] y[i]
        for (j, xj) in x.iter_mut().enumerate() {
            let (head, tail) = self.kernel.split_at(n - j);
            *xj = dot(head, &y[j..]) + dot(tail, &y[..j]);
        }
    }
    fn taps(&self) -> Option<&[T]> {
        Some(&self.kernel)
    }
    fn kind(&self) -> &'static str {
        "convolution"
    }
    fn spectral_norm(&self) -> Option<T> {
        Some(self.norm)
    }
}

/// `max_f |sum_j k_j exp(-2 pi i j f / n)|` by direct summation over a
/// twiddle table. Circulant matrices are diagonalized by the DFT, so this is
/// the operator norm.
fn dft_max_abs<T: Scalar>(kernel: &[T]) -> f64 {
    let n = kernel.len();
    let step = 2.0 * std::f64::consts::PI / n as f64;
    let (cos, sin): (Vec<f64>, Vec<f64>) = (0..n).map(|j| ((j as f64 * step).cos(), (j as f64 * step).sin())).unzip();
    (0..n)
        .map(|f| {
            let (mut re, mut im) = (0.0, 0.0);
            for (j, k) in kernel.iter().enumerate() {
                let t = (j * f) % n;
                re += k.as_f64() * cos[t];
                im -= k.as_f64() * sin[t];
            }
            re.hypot(im)
        })
        .fold(0.0, f64::max)
}
