//! First-order reference methods: ISTA, FISTA and conjugate gradients on the
//! normal equations.

use crate::error::{check_len, Error, Result};
use crate::linops::LinearOperator;
use crate::problem::{subgradient_norm, BpdnProblem};
use crate::prox::shrink;
use crate::scalar::Scalar;
use crate::solver::{check_start, resolve_norm};
use crate::trace::{SolveOutput, StopRule, Tracker};
use crate::vecops::{axpy, norm_sq, sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstOrderConfig<T> {
    pub stop: StopRule<T>,
    /// Step length; `1 / ||A||^2` when absent.
    pub step: Option<T>,
    /// Upper bound on `||A||`, estimated (and counted) when absent.
    pub op_norm: Option<T>,
}

impl<T: Scalar> Default for FirstOrderConfig<T> {
    fn default() -> Self {
        Self {
            stop: StopRule::default(),
            step: None,
            op_norm: None,
        }
    }
}

fn step_length<T: Scalar>(problem: &BpdnProblem<T>, cfg: &FirstOrderConfig<T>) -> Result<T> {
    if let Some(a) = cfg.step {
        if !(a > T::zero()) || !a.is_finite() {
            return Err(Error::InvalidParameter(format!("step must be positive, got {a}")));
        }
        return Ok(a);
    }
    let bound = resolve_norm(problem, cfg.op_norm)?;
    Ok(T::one() / (bound * bound))
}

/// `shrink(x - alpha grad, lambda alpha)` for a known gradient.
pub fn ista_update<T: Scalar>(lambda: T, x: &[T], grad: &[T], alpha: T) -> Vec<T> {
    let mut y = x.to_vec();
    axpy(-alpha, grad, &mut y);
    shrink(&y, lambda * alpha)
}

/// One ISTA step from `x`; one apply and one adjoint.
pub fn ista_step<T: Scalar>(problem: &BpdnProblem<T>, x: &[T], alpha: T) -> Result<Vec<T>> {
    let (_, grad) = problem.image_and_gradient(x)?;
    Ok(ista_update(problem.lambda, x, &grad, alpha))
}

pub fn ista<T: Scalar>(problem: &BpdnProblem<T>, cfg: &FirstOrderConfig<T>, x0: &[T]) -> Result<SolveOutput<T>> {
    check_start(problem, x0)?;
    let lambda = problem.lambda;
    let mut tracker = Tracker::new(problem, cfg.stop);
    let alpha = step_length(problem, cfg)?;
    let mut x = x0.to_vec();
    if let Some(status) = tracker.check_budget(0, 2) {
        return Ok(SolveOutput {
            x,
            trace: tracker.finish("ista", status),
        });
    }
    let (ax, mut grad) = problem.image_and_gradient(&x)?;
    let f = problem.objective_from_image(&x, &ax);
    if let Some(status) = tracker.record(0, &x, f, subgradient_norm(lambda, &x, &grad)) {
        return Ok(SolveOutput {
            x,
            trace: tracker.finish("ista", status),
        });
    }
    let mut k = 0;
    let status = loop {
        if let Some(status) = tracker.check_budget(k + 1, 2) {
            break status;
        }
        x = ista_update(lambda, &x, &grad, alpha);
        let (ax, g) = problem.image_and_gradient(&x)?;
        grad = g;
        k += 1;
        let f = problem.objective_from_image(&x, &ax);
        if let Some(status) = tracker.record(k, &x, f, subgradient_norm(lambda, &x, &grad)) {
            break status;
        }
    };
    Ok(SolveOutput {
        x,
        trace: tracker.finish("ista", status),
    })
}

/// FISTA iterate together with the images and gradients it carries.
#[derive(Debug, Clone, PartialEq)]
pub struct FistaState<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
    pub t: T,
    pub ax: Vec<T>,
    pub grad_x: Vec<T>,
    pub grad_y: Vec<T>,
}

impl<T: Scalar> FistaState<T> {
    /// `y = x`, `t = 1`; one apply and one adjoint.
    pub fn new(problem: &BpdnProblem<T>, x0: &[T]) -> Result<Self> {
        let (ax, grad) = problem.image_and_gradient(x0)?;
        Ok(Self {
            x: x0.to_vec(),
            y: x0.to_vec(),
            t: T::one(),
            ax,
            grad_x: grad.clone(),
            grad_y: grad,
        })
    }
}

/// `t+ = (1 + sqrt(1 + 4 t^2)) / 2`
pub fn fista_t_next<T: Scalar>(t: T) -> T {
    (T::one() + (T::one() + T::of(4.0) * t * t).sqrt()) * T::of(0.5)
}

/// One FISTA step; one apply and one adjoint. The gradient at the new
/// extrapolated point follows from linearity.
pub fn fista_step<T: Scalar>(state: &FistaState<T>, problem: &BpdnProblem<T>, alpha: T) -> Result<FistaState<T>> {
    let x = ista_update(problem.lambda, &state.y, &state.grad_y, alpha);
    let (ax, grad_x) = problem.image_and_gradient(&x)?;
    let t = fista_t_next(state.t);
    let beta = (state.t - T::one()) / t;
    let onep = T::one() + beta;
    let y: Vec<T> = x.iter().zip(&state.x).map(|(a, b)| onep * *a - beta * *b).collect();
    let grad_y: Vec<T> = grad_x
        .iter()
        .zip(&state.grad_x)
        .map(|(a, b)| onep * *a - beta * *b)
        .collect();
    Ok(FistaState {
        x,
        y,
        t,
        ax,
        grad_x,
        grad_y,
    })
}

pub fn fista<T: Scalar>(problem: &BpdnProblem<T>, cfg: &FirstOrderConfig<T>, x0: &[T]) -> Result<SolveOutput<T>> {
    check_start(problem, x0)?;
    let lambda = problem.lambda;
    let mut tracker = Tracker::new(problem, cfg.stop);
    let alpha = step_length(problem, cfg)?;
    if let Some(status) = tracker.check_budget(0, 2) {
        return Ok(SolveOutput {
            x: x0.to_vec(),
            trace: tracker.finish("fista", status),
        });
    }
    let mut s = FistaState::new(problem, x0)?;
    let f = problem.objective_from_image(&s.x, &s.ax);
    if let Some(status) = tracker.record(0, &s.x, f, subgradient_norm(lambda, &s.x, &s.grad_x)) {
        return Ok(SolveOutput {
            x: s.x,
            trace: tracker.finish("fista", status),
        });
    }
    let mut k = 0;
    let status = loop {
        if let Some(status) = tracker.check_budget(k + 1, 2) {
            break status;
        }
        s = fista_step(&s, problem, alpha)?;
        k += 1;
        let f = problem.objective_from_image(&s.x, &s.ax);
        if let Some(status) = tracker.record(k, &s.x, f, subgradient_norm(lambda, &s.x, &s.grad_x)) {
            break status;
        }
    };
    Ok(SolveOutput {
        x: s.x,
        trace: tracker.finish("fista", status),
    })
}

/// Minimizer estimate from a long FISTA run, stopped after `max_iters`
/// iterations or once the subgradient norm is at most `tol`.
pub fn reference_solution<T: Scalar>(problem: &BpdnProblem<T>, max_iters: usize, tol: T) -> Result<Vec<T>> {
    let cfg = FirstOrderConfig {
        stop: StopRule {
            tol,
            objective_target: None,
            max_iters,
            max_ops: u64::MAX,
        },
        step: None,
        op_norm: None,
    };
    let probe = problem.clone();
    Ok(fista(&probe, &cfg, &vec![T::zero(); problem.n()])?.x)
}

/// Conjugate gradients on `A^T A x = A^T b`, returning `x0, x1, ...`.
///
/// Two operator calls per iteration. Stops early when the normal-equation
/// residual vanishes or the search direction has zero curvature.
pub fn linear_cg<T: Scalar>(op: &LinearOperator<T>, b: &[T], x0: &[T], iters: usize) -> Result<Vec<Vec<T>>> {
    check_len("observation b", op.rows(), b.len())?;
    check_len("starting point", op.cols(), x0.len())?;
    let mut x = x0.to_vec();
    let mut r = sub(b, &op.apply(&x)?);
    let mut s = op.adjoint(&r)?;
    let mut p = s.clone();
    let mut gamma = norm_sq(&s);
    let mut out = vec![x.clone()];
    for _ in 0..iters {
        if gamma == T::zero() {
            break;
        }
        let q = op.apply(&p)?;
        let delta = norm_sq(&q);
        if !(delta > T::zero()) {
            break;
        }
        let a = gamma / delta;
        axpy(a, &p, &mut x);
        axpy(-a, &q, &mut r);
        s = op.adjoint(&r)?;
        let gamma_next = norm_sq(&s);
        let beta = gamma_next / gamma;
        for (pi, si) in p.iter_mut().zip(&s) {
            *pi = *si + beta * *pi;
        }
        gamma = gamma_next;
        out.push(x.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_ratio_momentum() {
        assert!((fista_t_next(1.0_f64) - (1.0 + 5.0_f64.sqrt()) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn ista_exact_on_identity() {
        let p = BpdnProblem::new(LinearOperator::identity(3), vec![2.0_f64, -0.5, -4.0], 1.0).unwrap();
        let x = ista_step(&p, &[0.0; 3], 1.0).unwrap();
        assert_eq!(x, vec![1.0, 0.0, -3.0]);
    }

    #[test]
    fn zero_observation_is_fixed_point() {
        let op = LinearOperator::dense(2, 2, vec![1.0_f64, 2.0, 3.0, 4.0]).unwrap();
        let p = BpdnProblem::new(op, vec![0.0; 2], 0.5).unwrap();
        assert_eq!(ista_step(&p, &[0.0; 2], 0.01).unwrap(), vec![0.0; 2]);
        let s = FistaState::new(&p, &[0.0; 2]).unwrap();
        let s = fista_step(&s, &p, 0.01).unwrap();
        assert_eq!(s.x, vec![0.0; 2]);
        assert_eq!(s.y, vec![0.0; 2]);
    }

    #[test]
    fn cg_identity_and_diagonal() {
        let it = linear_cg(&LinearOperator::identity(3), &[1.0_f64, 2.0, 3.0], &[0.0; 3], 5).unwrap();
        assert_eq!(it.len(), 2);
        for (a, b) in it[1].iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        let it = linear_cg(&LinearOperator::diagonal(vec![2.0_f64, 1.0]), &[2.0, 1.0], &[0.0; 2], 5).unwrap();
        let last = &it[2];
        assert!((last[0] - 1.0).abs() < 1e-14 && (last[1] - 1.0).abs() < 1e-14);
    }
}
