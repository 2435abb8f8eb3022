//! Accelerated IMRO-1D driven by an estimate sequence
//! `phi^k(x) = phi_bar^k + gamma^k / 2 ||x - z^k||^2`.

use log::warn;

use crate::error::{Error, Result};
use crate::metrics::metric_1d;
use crate::problem::{subgradient_norm, BpdnProblem};
use crate::prox::{prox_imro, ProxMethod, RankOneMetric};
use crate::scalar::Scalar;
use crate::solver::{check_start, resolve_norm};
use crate::trace::{SolveOutput, StopRule, Tracker};
use crate::vecops::{dot, norm_sq, sub};

#[derive(Debug, Clone, PartialEq)]
pub struct FimroState<T> {
    pub k: usize,
    pub x: Vec<T>,
    pub x_prev: Option<Vec<T>>,
    pub z: Vec<T>,
    pub gamma: T,
    /// Estimate-sequence weight `lambda^k`, starting at 1.
    pub lambda_seq: T,
    pub phi_bar: T,
    /// `F(x)`.
    pub objective: T,
    /// `grad f(x)`.
    pub grad: Vec<T>,
}

/// Quantities produced by one step, for bound checking.
#[derive(Debug, Clone, PartialEq)]
pub struct FimroStepInfo<T> {
    pub alpha: T,
    pub sigma: T,
    pub y: Vec<T>,
    pub g_h_norm_sq: T,
    /// `F(x+) <= phi_bar+` up to `1e-9 (1 + |phi_bar+|)`.
    pub phi_bound_holds: bool,
}

impl<T: Scalar> FimroState<T> {
    /// `z = x = x0`, `phi_bar = F(x0)`; one apply and one adjoint.
    pub fn new(problem: &BpdnProblem<T>, x0: &[T], gamma0: T) -> Result<Self> {
        check_start(problem, x0)?;
        if !(gamma0 > T::zero()) || !gamma0.is_finite() {
            return Err(Error::InvalidParameter(format!("gamma0 must be positive, got {gamma0}")));
        }
        let (ax, grad) = problem.image_and_gradient(x0)?;
        let f = problem.objective_from_image(x0, &ax);
        Ok(Self {
            k: 0,
            x: x0.to_vec(),
            x_prev: None,
            z: x0.to_vec(),
            gamma: gamma0,
            lambda_seq: T::one(),
            phi_bar: f,
            objective: f,
            grad,
        })
    }
}

/// Positive root of `sigma a^2 + gamma a - gamma = 0`, in cancellation-free form.
pub fn fimro_alpha<T: Scalar>(sigma: T, gamma: T) -> T {
    T::of(2.0) * gamma / (gamma + (gamma * gamma + T::of(4.0) * sigma * gamma).sqrt())
}

/// `4 sigma / (2 sqrt(sigma) + k sqrt(gamma0))^2`
pub fn lambda_seq_bound<T: Scalar>(sigma: T, gamma0: T, k: usize) -> T {
    let d = T::of(2.0) * sigma.sqrt() + T::of(k as f64) * gamma0.sqrt();
    T::of(4.0) * sigma / (d * d)
}

/// Default metric: 1-D rule along `x^k - x^{k-1}`, `sigma I` when there is no
/// previous step. One apply and one adjoint when a direction exists.
pub fn default_metric<T: Scalar>(
    problem: &BpdnProblem<T>,
    norm_bound: T,
) -> impl FnMut(&FimroState<T>) -> Result<RankOneMetric<T>> + '_ {
    move |state| {
        let sigma = norm_bound * norm_bound;
        match &state.x_prev {
            Some(xp) => {
                let v = sub(&state.x, xp);
                if norm_sq(&v) > T::zero() {
                    metric_1d(&problem.op, norm_bound, &v)
                } else {
                    RankOneMetric::scaled_identity(sigma, state.x.len())
                }
            }
            None => RankOneMetric::scaled_identity(sigma, state.x.len()),
        }
    }
}

/// One accelerated step. The metric must majorize `A^T A`; its `sigma`
/// drives the step-size recursion. Two applies and two adjoints on top of
/// whatever `metric_builder` spends.
pub fn fimro_step<T: Scalar>(
    state: &FimroState<T>,
    problem: &BpdnProblem<T>,
    prox_method: ProxMethod,
    metric_builder: &mut dyn FnMut(&FimroState<T>) -> Result<RankOneMetric<T>>,
) -> Result<(FimroState<T>, FimroStepInfo<T>)> {
    let metric = metric_builder(state)?;
    let sigma = metric.sigma();
    let gamma = state.gamma;
    let alpha = fimro_alpha(sigma, gamma);
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(Error::InvariantViolation(format!(
            "step weight {alpha} outside (0, 1) for sigma = {sigma}, gamma = {gamma}"
        )));
    }
    let gamma_next = (T::one() - alpha) * gamma;
    let gamma_alt = sigma * alpha * alpha;
    if (gamma_next - gamma_alt).abs() > T::tol(1e-10) * gamma_next {
        return Err(Error::InvariantViolation(format!(
            "gamma recursion mismatch: (1 - a) gamma = {gamma_next}, sigma a^2 = {gamma_alt}"
        )));
    }

    let y: Vec<T> = state
        .z
        .iter()
        .zip(&state.x)
        .map(|(z, x)| alpha * *z + (T::one() - alpha) * *x)
        .collect();
    let (_, grad_y) = problem.image_and_gradient(&y)?;
    let xc = sub(&y, &metric.solve(&grad_y));
    let x_next = prox_imro(&metric, &xc, problem.lambda, prox_method)?.x;
    let g_h = metric.apply(&sub(&y, &x_next));
    let (ax_next, grad_next) = problem.image_and_gradient(&x_next)?;
    let f_next = problem.objective_from_image(&x_next, &ax_next);
    if !f_next.is_finite() {
        return Err(Error::NonFinite("objective"));
    }

    let two = T::of(2.0);
    let g2 = norm_sq(&g_h);
    let zy = sub(&state.z, &y);
    let phi_bar = (T::one() - alpha) * state.phi_bar
        + alpha * f_next
        + (alpha / (two * sigma) - alpha * alpha / (two * gamma_next)) * g2
        + alpha * dot(&g_h, &zy);
    let step = alpha / gamma_next;
    let z: Vec<T> = state.z.iter().zip(&g_h).map(|(z, g)| *z - step * *g).collect();
    let phi_bound_holds = f_next <= phi_bar + T::of(1e-9) * (T::one() + phi_bar.abs());

    let next = FimroState {
        k: state.k + 1,
        x: x_next,
        x_prev: Some(state.x.clone()),
        z,
        gamma: gamma_next,
        lambda_seq: (T::one() - alpha) * state.lambda_seq,
        phi_bar,
        objective: f_next,
        grad: grad_next,
    };
    let info = FimroStepInfo {
        alpha,
        sigma,
        y,
        g_h_norm_sq: g2,
        phi_bound_holds,
    };
    Ok((next, info))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FimroConfig<T> {
    pub stop: StopRule<T>,
    pub prox: ProxMethod,
    /// Initial estimate-sequence curvature; `||A||^2` when absent.
    pub gamma0: Option<T>,
    pub op_norm: Option<T>,
}

impl<T: Scalar> Default for FimroConfig<T> {
    fn default() -> Self {
        Self {
            stop: StopRule::default(),
            prox: ProxMethod::default(),
            gamma0: None,
            op_norm: None,
        }
    }
}

pub fn fimro<T: Scalar>(problem: &BpdnProblem<T>, cfg: &FimroConfig<T>, x0: &[T]) -> Result<SolveOutput<T>> {
    fimro_observed(problem, cfg, x0, &mut |_, _| {})
}

/// [`fimro`], calling `observer` with each new state and its step data.
pub fn fimro_observed<T: Scalar>(
    problem: &BpdnProblem<T>,
    cfg: &FimroConfig<T>,
    x0: &[T],
    observer: &mut dyn FnMut(&FimroState<T>, &FimroStepInfo<T>),
) -> Result<SolveOutput<T>> {
    check_start(problem, x0)?;
    let lambda = problem.lambda;
    let mut tracker = Tracker::new(problem, cfg.stop);
    let bound = resolve_norm(problem, cfg.op_norm)?;
    let gamma0 = cfg.gamma0.unwrap_or(bound * bound);
    if let Some(status) = tracker.check_budget(0, 2) {
        return Ok(SolveOutput {
            x: x0.to_vec(),
            trace: tracker.finish("fimro", status),
        });
    }
    let mut state = FimroState::new(problem, x0, gamma0)?;
    let xi = subgradient_norm(lambda, &state.x, &state.grad);
    if let Some(status) = tracker.record(0, &state.x, state.objective, xi) {
        return Ok(SolveOutput {
            x: state.x,
            trace: tracker.finish("fimro", status),
        });
    }
    let mut builder = default_metric(problem, bound);
    let status = loop {
        let cost = if state.x_prev.is_some() { 6 } else { 4 };
        if let Some(status) = tracker.check_budget(state.k + 1, cost) {
            break status;
        }
        let (next, info) = fimro_step(&state, problem, cfg.prox, &mut builder)?;
        if !info.phi_bound_holds {
            warn!(
                "fimro: F(x) = {} exceeds estimate-sequence value {} at iteration {}",
                next.objective, next.phi_bar, next.k
            );
        }
        observer(&next, &info);
        state = next;
        let xi = subgradient_norm(lambda, &state.x, &state.grad);
        if let Some(status) = tracker.record(state.k, &state.x, state.objective, xi) {
            break status;
        }
    };
    Ok(SolveOutput {
        x: state.x,
        trace: tracker.finish("fimro", status),
    })
}
