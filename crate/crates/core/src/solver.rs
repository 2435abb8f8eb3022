//! The IMRO proximal quasi-Newton loop.
//!
//! Each iteration builds `H = sigma I - u u^T` from the current gradient and
//! the previous step, forms `xc = x - H^{-1} grad f(x)` and takes
//! `x+ = argmin 1/2 ||y - xc||_H^2 + lambda ||y||_1`. Steps are accepted
//! without a line search.

use log::warn;

use crate::error::{check_len, Error, Result};
use crate::linops::{operator_norm, DEFAULT_NORM_MAX_ITER, DEFAULT_NORM_TOL};
use crate::metrics::{metric_1d, metric_2d_from_products, Metric2dReport};
use crate::problem::{subgradient_norm, BpdnProblem};
use crate::prox::{prox_imro, ProxMethod, ProxResult, RankOneMetric};
use crate::scalar::Scalar;
use crate::trace::{SolveOutput, StopRule, Tracker};
use crate::vecops::{all_finite, norm_sq, sub};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Variant {
    /// Model exact along the previous step, majorizes `f` everywhere.
    Imro1d,
    /// Model exact on `span{grad f, previous step}`.
    #[default]
    Imro2d,
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Imro1d => "imro1d",
            Variant::Imro2d => "imro2d",
        }
    }
}

/// Metric for the first iteration, where no previous step exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FirstStep {
    /// `H = ||A||^2 I`: a plain proximal gradient step.
    #[default]
    Lipschitz,
    /// `H = (|A g|^2 / |g|^2) I` with `g = grad f(x0)`; one extra apply.
    /// With `lambda = 0` this is the exact line-search step, which is what
    /// makes the 2-D variant reproduce conjugate gradients.
    Curvature,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig<T> {
    pub variant: Variant,
    pub stop: StopRule<T>,
    pub prox: ProxMethod,
    pub first_step: FirstStep,
    /// Upper bound on `||A||`. Estimated by power iteration when absent;
    /// those calls count towards the solve.
    pub op_norm: Option<T>,
}

impl<T: Scalar> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            variant: Variant::default(),
            stop: StopRule::default(),
            prox: ProxMethod::default(),
            first_step: FirstStep::default(),
            op_norm: None,
        }
    }
}

impl<T: Scalar> SolverConfig<T> {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            ..Self::default()
        }
    }
}

/// One accepted step, as seen by an observer.
#[derive(Debug)]
pub struct StepEvent<'a, T> {
    /// Index of the iterate the step starts from.
    pub k: usize,
    pub x: &'a [T],
    pub grad: &'a [T],
    pub objective: T,
    /// `x^k - x^{k-1}` when it was used to build the metric.
    pub direction: Option<&'a [T]>,
    pub metric: &'a RankOneMetric<T>,
    pub report: Option<&'a Metric2dReport<T>>,
    pub xc: &'a [T],
    pub prox: &'a ProxResult<T>,
    pub objective_next: T,
}

pub(crate) fn resolve_norm<T: Scalar>(problem: &BpdnProblem<T>, given: Option<T>) -> Result<T> {
    match given {
        Some(v) if v > T::zero() && v.is_finite() => Ok(v),
        Some(v) => Err(Error::InvalidParameter(format!("operator norm bound must be positive, got {v}"))),
        None => Ok(operator_norm(&problem.op, DEFAULT_NORM_TOL, DEFAULT_NORM_MAX_ITER)?.bound),
    }
}

pub(crate) fn check_start<T: Scalar>(problem: &BpdnProblem<T>, x0: &[T]) -> Result<()> {
    check_len("starting point", problem.n(), x0.len())?;
    if !all_finite(x0) {
        return Err(Error::NonFinite("starting point"));
    }
    Ok(())
}

pub fn solve<T: Scalar>(problem: &BpdnProblem<T>, config: &SolverConfig<T>, x0: &[T]) -> Result<SolveOutput<T>> {
    solve_observed(problem, config, x0, &mut |_| {})
}

/// [`solve`], calling `observer` after every accepted step.
pub fn solve_observed<T: Scalar>(
    problem: &BpdnProblem<T>,
    config: &SolverConfig<T>,
    x0: &[T],
    observer: &mut dyn FnMut(&StepEvent<'_, T>),
) -> Result<SolveOutput<T>> {
    check_start(problem, x0)?;
    let stop = config.stop;
    if !(stop.tol >= T::zero()) {
        return Err(Error::InvalidParameter(format!("tolerance must be nonnegative, got {}", stop.tol)));
    }
    let op = &problem.op;
    let lambda = problem.lambda;
    let name = config.variant.name();
    let mut tracker = Tracker::new(problem, stop);
    let bound = resolve_norm(problem, config.op_norm)?;
    let lipschitz = bound * bound;

    let mut x = x0.to_vec();
    if let Some(status) = tracker.check_budget(0, 2) {
        return Ok(SolveOutput {
            x,
            trace: tracker.finish(name, status),
        });
    }
    let (mut ax, mut grad) = problem.image_and_gradient(&x)?;
    let mut f = problem.objective_from_image(&x, &ax);
    let xi = subgradient_norm(lambda, &x, &grad);
    if let Some(status) = tracker.record(0, &x, f, xi) {
        return Ok(SolveOutput {
            x,
            trace: tracker.finish(name, status),
        });
    }

    let mut prev: Option<(Vec<T>, Vec<T>)> = None;
    let mut descent_violations = 0usize;
    let mut k = 0usize;
    let status = loop {
        let direction = prev
            .as_ref()
            .map(|(xp, _)| sub(&x, xp))
            .filter(|d| norm_sq(d) > T::zero());
        let grad_zero = norm_sq(&grad) == T::zero();
        let cost = match (&direction, config.variant) {
            (Some(_), Variant::Imro1d) => 4,
            (Some(_), Variant::Imro2d) if !grad_zero => 3,
            _ if k == 0 && config.first_step == FirstStep::Curvature => 3,
            _ => 2,
        };
        if let Some(status) = tracker.check_budget(k + 1, cost) {
            break status;
        }

        let mut report = None;
        let metric = match (&direction, config.variant) {
            (Some(d), Variant::Imro1d) => metric_1d(op, bound, d)?,
            (Some(d), Variant::Imro2d) if !grad_zero => {
                let a_grad = op.apply(&grad)?;
                let a_d = sub(&ax, &prev.as_ref().expect("previous iterate").1);
                let (h, r) = metric_2d_from_products(op, bound, &grad, d, &a_grad, &a_d)?;
                if !r.claims_hold() {
                    warn!("{name}: 2-D metric claims failed at iteration {k}: {r:?}");
                }
                report = Some(r);
                h
            }
            _ if k == 0 && config.first_step == FirstStep::Curvature => {
                let ag = op.apply(&grad)?;
                let curv = norm_sq(&ag) / norm_sq(&grad);
                let sigma = if curv > T::zero() && curv.is_finite() { curv } else { lipschitz };
                RankOneMetric::scaled_identity(sigma, x.len())?
            }
            _ => RankOneMetric::scaled_identity(lipschitz, x.len())?,
        };

        let step = metric.solve(&grad);
        let xc = sub(&x, &step);
        let prox = prox_imro(&metric, &xc, lambda, config.prox)?;
        let (ax_next, grad_next) = problem.image_and_gradient(&prox.x)?;
        let f_next = problem.objective_from_image(&prox.x, &ax_next);
        if !f_next.is_finite() {
            return Err(Error::NonFinite("objective"));
        }
        if f_next > f + T::of(1e-12) * (T::one() + f.abs()) {
            descent_violations += 1;
            if config.variant == Variant::Imro2d {
                warn!("{name}: objective increased at iteration {k}: {f} -> {f_next}");
            }
        }
        observer(&StepEvent {
            k,
            x: &x,
            grad: &grad,
            objective: f,
            direction: direction.as_deref(),
            metric: &metric,
            report: report.as_ref(),
            xc: &xc,
            prox: &prox,
            objective_next: f_next,
        });

        let x_next = prox.x;
        prev = Some((std::mem::replace(&mut x, x_next), std::mem::replace(&mut ax, ax_next)));
        grad = grad_next;
        f = f_next;
        k += 1;
        let xi = subgradient_norm(lambda, &x, &grad);
        if let Some(status) = tracker.record(k, &x, f, xi) {
            break status;
        }
    };
    if descent_violations > 0 {
        log::debug!("{name}: {descent_violations} non-descent steps");
    }
    Ok(SolveOutput {
        x,
        trace: tracker.finish(name, status),
    })
}
