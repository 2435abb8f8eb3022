//! Independent oracles shared by the integration suites. Nothing here calls
//! into the solver paths it is used to check.

#![allow(dead_code)]

use imro::problems::{gen_gaussian, GenSpec, Noise, SignalKind};
use imro::{reference_solution, BpdnProblem, RankOneMetric};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normals(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn l2_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// A random prox instance: `(metric, xc, lambda)`. A fifth of the `u`
/// entries are zero, in a third of the instances the rest spread over eight
/// decades, and `sigma / ||u||^2` ranges over `[1.02, 4]`, so the model ISTA
/// below contracts by at least `1 / 1.02` per step.
pub fn random_prox_instance(rng: &mut ChaCha8Rng, n: usize) -> (RankOneMetric<f64>, Vec<f64>, f64) {
    let scale_u = log_uniform(rng, 0.1, 10.0);
    let spread = rng.random_bool(1.0 / 3.0);
    let u: Vec<f64> = normals(rng, n)
        .into_iter()
        .map(|v| {
            if rng.random_bool(0.2) {
                0.0
            } else if spread {
                scale_u * v * log_uniform(rng, 1e-8, 1.0)
            } else {
                scale_u * v
            }
        })
        .collect();
    let u2: f64 = u.iter().map(|v| v * v).sum();
    let sigma = if u2 > 0.0 {
        u2 * (1.0 + log_uniform(rng, 0.02, 3.0))
    } else {
        log_uniform(rng, 0.1, 10.0)
    };
    let scale_x = log_uniform(rng, 0.1, 10.0);
    let xc: Vec<f64> = normals(rng, n).into_iter().map(|v| scale_x * v).collect();
    let lambda = log_uniform(rng, 1e-3, 10.0);
    (RankOneMetric::new(sigma, u).unwrap(), xc, lambda)
}

fn h_times(sigma: f64, u: &[f64], w: &[f64]) -> Vec<f64> {
    let uw: f64 = u.iter().zip(w).map(|(a, b)| a * b).sum();
    w.iter().zip(u).map(|(wi, ui)| sigma * wi - uw * ui).collect()
}

fn soft(y: f64, t: f64) -> f64 {
    y.signum() * (y.abs() - t).max(0.0)
}

/// Minimize `1/2 ||x - xc||_H^2 + lambda ||x||_1` by proximal gradient on the
/// model itself with step `1/sigma`, until the step falls below
/// `1e-15 (1 + ||x||_inf)` or `cap` iterations.
pub fn ista_on_model(sigma: f64, u: &[f64], xc: &[f64], lambda: f64, cap: usize) -> Vec<f64> {
    let mut x = vec![0.0; xc.len()];
    for _ in 0..cap {
        let diff: Vec<f64> = x.iter().zip(xc).map(|(a, b)| a - b).collect();
        let g = h_times(sigma, u, &diff);
        let next: Vec<f64> = x
            .iter()
            .zip(&g)
            .map(|(xi, gi)| soft(xi - gi / sigma, lambda / sigma))
            .collect();
        let step = max_abs_diff(&next, &x);
        let size = next.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        x = next;
        if step <= 1e-15 * (1.0 + size) {
            break;
        }
    }
    x
}

/// `min_xi ||H (x - xc) + lambda xi||_inf` over admissible subgradients `xi`.
pub fn kkt_residual(sigma: f64, u: &[f64], xc: &[f64], lambda: f64, x: &[f64]) -> f64 {
    let diff: Vec<f64> = x.iter().zip(xc).map(|(a, b)| a - b).collect();
    let g = h_times(sigma, u, &diff);
    g.iter()
        .zip(x)
        .map(|(&gi, &xi)| {
            if xi != 0.0 {
                (gi + lambda * xi.signum()).abs()
            } else {
                (gi.abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// The operator as a dense matrix; `to_dense` does not touch the counters.
pub fn dense_of(problem: &BpdnProblem<f64>) -> DMatrix<f64> {
    let (m, n) = problem.op.shape();
    DMatrix::from_row_slice(m, n, &problem.op.to_dense())
}

pub fn objective_dense(a: &DMatrix<f64>, b: &[f64], lambda: f64, x: &[f64]) -> f64 {
    let r = a * DMatrix::from_column_slice(x.len(), 1, x) - DMatrix::from_column_slice(b.len(), 1, b);
    0.5 * r.norm_squared() + lambda * x.iter().map(|v| v.abs()).sum::<f64>()
}

/// `||A^T b||_inf` from the dense matrix.
pub fn lambda_max_dense(a: &DMatrix<f64>, b: &[f64]) -> f64 {
    (a.transpose() * DMatrix::from_column_slice(b.len(), 1, b)).amax()
}

/// Conjugate gradients on `A^T A x = A^T b` from `x = 0`, dense arithmetic.
/// Returns `x^0 .. x^iters`.
pub fn cg_normal_equations(a: &DMatrix<f64>, b: &[f64], iters: usize) -> Vec<Vec<f64>> {
    let n = a.ncols();
    let g = a.transpose() * a;
    let rhs = a.transpose() * DMatrix::from_column_slice(b.len(), 1, b);
    let mut x = DMatrix::<f64>::zeros(n, 1);
    let mut r = rhs.clone();
    let mut p = r.clone();
    let mut out = vec![x.as_slice().to_vec()];
    for _ in 0..iters {
        let rr = r.norm_squared();
        if rr == 0.0 {
            out.push(x.as_slice().to_vec());
            continue;
        }
        let gp = &g * &p;
        let alpha = rr / p.dot(&gp);
        x += alpha * &p;
        r -= alpha * &gp;
        let beta = r.norm_squared() / rr;
        p = &r + beta * &p;
        out.push(x.as_slice().to_vec());
    }
    out
}

pub fn row_major(a: &DMatrix<f64>) -> Vec<f64> {
    a.transpose().as_slice().to_vec()
}

/// 250 x 1000 Gaussian analogue of one of the four benchmark instances,
/// `k = 25`, absolute noise `1e-3`.
pub fn desk_instance(index: usize) -> BpdnProblem<f64> {
    let (lambda, signal) = match index {
        1 => (0.5, SignalKind::Gaussian),
        2 => (0.5, SignalKind::Dynamic { decades: 3.0 }),
        3 => (0.1, SignalKind::Gaussian),
        4 => (0.1, SignalKind::Dynamic { decades: 3.0 }),
        _ => panic!("no desk instance {index}"),
    };
    let mut spec = GenSpec::new(250, 1000, 25, lambda, 1);
    spec.signal = signal;
    spec.noise = Noise::Absolute(1e-3);
    gen_gaussian(&spec).unwrap()
}

/// Small Gaussian instance for the quicker suites.
pub fn small_instance(m: usize, n: usize, lambda: f64, seed: u64) -> BpdnProblem<f64> {
    let mut spec = GenSpec::new(m, n, n / 16 + 1, lambda, seed);
    spec.noise = Noise::Absolute(1e-3);
    gen_gaussian(&spec).unwrap()
}

/// Long-run FISTA minimizer (1e5 iterations cap).
pub fn oracle(problem: &BpdnProblem<f64>) -> Vec<f64> {
    reference_solution(problem, 100_000, 1e-11).unwrap()
}
