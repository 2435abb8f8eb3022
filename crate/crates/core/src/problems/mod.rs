//! Seeded test-instance generators and the on-disk problem format.
//!
//! Everything is generated in `f64` from a single `ChaCha8` stream, so a seed
//! determines the instance bit for bit.

mod manifest;

pub use manifest::{read_problem, write_problem, write_vector, read_vector, FORMAT_NAME, FORMAT_VERSION};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linops::LinearOperator;
use crate::problem::{BpdnProblem, Metadata, Param};
use crate::vecops::{axpy, dot, norm, scale};

/// Distribution of the nonzero entries of the ground-truth signal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SignalKind {
    /// Standard normal values.
    Gaussian,
    /// Magnitudes log-uniform on `[1, 10^decades]`, random signs.
    Dynamic { decades: f64 },
}

/// Additive i.i.d. Gaussian noise on `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Noise {
    /// Standard deviation `level * ||A x_hat|| / sqrt(m)`.
    Relative(f64),
    /// Standard deviation `level`.
    Absolute(f64),
}

impl Default for Noise {
    fn default() -> Self {
        Noise::Relative(1e-3)
    }
}

/// Operator family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// i.i.d. standard normal entries.
    Gaussian { normalize_columns: bool },
    /// Orthonormal rows, `A A^T = I`.
    Orthonormal,
    /// `U diag(s) V^T` with log-spaced singular values in `[1/cond, 1]`.
    Conditioned { cond: f64 },
    /// Cumulative sum, `m = n`.
    Heaviside,
    /// Circular convolution with a normalized Gaussian blur of the given
    /// width in samples, `m = n`.
    Convolution { width: f64 },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Gaussian { .. } => "gaussian",
            Family::Orthonormal => "orthonormal",
            Family::Conditioned { .. } => "conditioned",
            Family::Heaviside => "heaviside",
            Family::Convolution { .. } => "convolution",
        }
    }
}

/// Instance parameters shared by every family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenSpec {
    pub m: usize,
    pub n: usize,
    /// Number of nonzeros in the signal.
    pub k: usize,
    pub lambda: f64,
    pub signal: SignalKind,
    pub noise: Noise,
    pub seed: u64,
}

impl GenSpec {
    pub fn new(m: usize, n: usize, k: usize, lambda: f64, seed: u64) -> Self {
        Self {
            m,
            n,
            k,
            lambda,
            signal: SignalKind::Gaussian,
            noise: Noise::default(),
            seed,
        }
    }
}

fn gaussian_vec(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}

/// Orthonormalize the rows of a row-major `rows x cols` matrix in place
/// (modified Gram-Schmidt, two passes).
pub fn orthonormalize_rows(a: &mut [f64], rows: usize, cols: usize) -> Result<()> {
    for i in 0..rows {
        for _ in 0..2 {
            for j in 0..i {
                let (done, rest) = a.split_at_mut(i * cols);
                let qj = &done[j * cols..(j + 1) * cols];
                let ai = &mut rest[..cols];
                let c = dot(qj, ai);
                axpy(-c, qj, ai);
            }
        }
        let ai = &mut a[i * cols..(i + 1) * cols];
        let nrm = norm(ai);
        if !(nrm > 1e-12) {
            return Err(Error::InvalidParameter("rank-deficient draw while orthonormalizing".into()));
        }
        scale(1.0 / nrm, ai);
    }
    Ok(())
}

fn check_spec(spec: &GenSpec, square: bool) -> Result<()> {
    if spec.m == 0 || spec.n == 0 {
        return Err(Error::InvalidParameter("m and n must be positive".into()));
    }
    if spec.k > spec.n {
        return Err(Error::InvalidParameter(format!("sparsity k = {} exceeds n = {}", spec.k, spec.n)));
    }
    if square && spec.m != spec.n {
        return Err(Error::InvalidParameter(format!(
            "this family is square; got m = {}, n = {}",
            spec.m, spec.n
        )));
    }
    if !square && spec.m > spec.n {
        return Err(Error::InvalidParameter(format!("need m <= n, got m = {}, n = {}", spec.m, spec.n)));
    }
    if !(spec.lambda >= 0.0) || !spec.lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {}", spec.lambda)));
    }
    if let SignalKind::Dynamic { decades } = spec.signal {
        if !(decades >= 0.0) || !decades.is_finite() {
            return Err(Error::InvalidParameter(format!("decades must be >= 0, got {decades}")));
        }
    }
    let level = match spec.noise {
        Noise::Relative(v) | Noise::Absolute(v) => v,
    };
    if !(level >= 0.0) || !level.is_finite() {
        return Err(Error::InvalidParameter(format!("noise level must be >= 0, got {level}")));
    }
    Ok(())
}

fn sparse_signal(rng: &mut ChaCha8Rng, spec: &GenSpec) -> Vec<f64> {
    let mut x = vec![0.0; spec.n];
    let mut support = sample(rng, spec.n, spec.k).into_vec();
    support.sort_unstable();
    for i in support {
        x[i] = match spec.signal {
            SignalKind::Gaussian => StandardNormal.sample(rng),
            SignalKind::Dynamic { decades } => {
                let mag = 10f64.powf(rng.random_range(0.0..=1.0) * decades);
                if rng.random_bool(0.5) {
                    mag
                } else {
                    -mag
                }
            }
        };
    }
    x
}

/// Generate an instance of `family`.
pub fn generate(family: Family, spec: &GenSpec) -> Result<BpdnProblem<f64>> {
    let square = matches!(family, Family::Heaviside | Family::Convolution { .. });
    check_spec(spec, square)?;
    let (m, n) = (spec.m, spec.n);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut params: Vec<(&str, Param)> = Vec::new();

    let op = match family {
        Family::Gaussian { normalize_columns } => {
            let mut a = gaussian_vec(&mut rng, m * n);
            if normalize_columns {
                for j in 0..n {
                    let s = (0..m).map(|i| a[i * n + j].powi(2)).sum::<f64>().sqrt();
                    if s > 0.0 {
                        (0..m).for_each(|i| a[i * n + j] /= s);
                    }
                }
            }
            params.push(("normalize_columns", normalize_columns.into()));
            LinearOperator::dense(m, n, a)?
        }
        Family::Orthonormal => {
            let mut a = gaussian_vec(&mut rng, m * n);
            orthonormalize_rows(&mut a, m, n)?;
            LinearOperator::dense(m, n, a)?
        }
        Family::Conditioned { cond } => {
            if !(cond >= 1.0) || !cond.is_finite() {
                return Err(Error::InvalidParameter(format!("cond must be >= 1, got {cond}")));
            }
            let mut u = gaussian_vec(&mut rng, m * m);
            orthonormalize_rows(&mut u, m, m)?;
            let mut vt = gaussian_vec(&mut rng, m * n);
            orthonormalize_rows(&mut vt, m, n)?;
            let s: Vec<f64> = (0..m)
                .map(|i| if m == 1 { 1.0 } else { cond.powf(-(i as f64) / (m - 1) as f64) })
                .collect();
            // A = U diag(s) V^T, row by row
            let mut a = vec![0.0; m * n];
            for i in 0..m {
                let row = &mut a[i * n..(i + 1) * n];
                for l in 0..m {
                    axpy(u[i * m + l] * s[l], &vt[l * n..(l + 1) * n], row);
                }
            }
            params.push(("cond", cond.into()));
            LinearOperator::dense(m, n, a)?
        }
        Family::Heaviside => LinearOperator::heaviside(n)?,
        Family::Convolution { width } => {
            if !(width > 0.0) || !width.is_finite() {
                return Err(Error::InvalidParameter(format!("kernel width must be positive, got {width}")));
            }
            let mut k: Vec<f64> = (0..n)
                .map(|j| {
                    let d = j.min(n - j) as f64;
                    (-d * d / (2.0 * width * width)).exp()
                })
                .collect();
            let total: f64 = k.iter().sum();
            scale(1.0 / total, &mut k);
            params.push(("width", width.into()));
            LinearOperator::convolution(k)?
        }
    };

    let signal = sparse_signal(&mut rng, spec);
    let mut b = op.apply(&signal)?;
    let sd = match spec.noise {
        Noise::Relative(level) => level * norm(&b) / (m as f64).sqrt(),
        Noise::Absolute(level) => level,
    };
    let noise = gaussian_vec(&mut rng, m);
    axpy(sd, &noise, &mut b);

    params.push(("m", m.into()));
    params.push(("n", n.into()));
    params.push(("k", spec.k.into()));
    params.push(("lambda", spec.lambda.into()));
    match spec.signal {
        SignalKind::Gaussian => params.push(("signal", "gaussian".into())),
        SignalKind::Dynamic { decades } => {
            params.push(("signal", "dynamic".into()));
            params.push(("decades", decades.into()));
        }
    }
    match spec.noise {
        Noise::Relative(v) => {
            params.push(("noise_kind", "relative".into()));
            params.push(("noise", v.into()));
        }
        Noise::Absolute(v) => {
            params.push(("noise_kind", "absolute".into()));
            params.push(("noise", v.into()));
        }
    }
    let metadata = Metadata {
        generator: family.name().to_string(),
        seed: spec.seed,
        params: params.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
    };
    // fresh counters: generation work is not charged to solvers
    let op = LinearOperator::from_arc(op.kernel().clone());
    Ok(BpdnProblem::new(op, b, spec.lambda)?
        .with_signal(signal)?
        .with_metadata(metadata))
}

pub fn gen_gaussian(spec: &GenSpec) -> Result<BpdnProblem<f64>> {
    generate(
        Family::Gaussian {
            normalize_columns: false,
        },
        spec,
    )
}

pub fn gen_orthonormal(spec: &GenSpec) -> Result<BpdnProblem<f64>> {
    generate(Family::Orthonormal, spec)
}

pub fn gen_conditioned(spec: &GenSpec, cond: f64) -> Result<BpdnProblem<f64>> {
    generate(Family::Conditioned { cond }, spec)
}
