//! Runtime checks of the properties the solvers are supposed to satisfy.
//! Used by the test suites and by `imro verify`.

use crate::error::Result;
use crate::fimro::{fimro_observed, lambda_seq_bound, FimroConfig};
use crate::linops::{operator_norm, DEFAULT_NORM_MAX_ITER, DEFAULT_NORM_TOL};
use crate::metrics::Metric2dReport;
use crate::problem::BpdnProblem;
use crate::prox::{ProxMethod, RankOneMetric};
use crate::scalar::Scalar;
use crate::solver::{solve_observed, SolverConfig, Variant};
use crate::trace::StopRule;
use crate::vecops::{dot, norm, norm_inf, sub};

/// `||H (x - xc) + lambda xi||_inf` for the best admissible `xi`
/// (`xi_i = sgn x_i` on the support, `|xi_i| <= 1` elsewhere).
pub fn prox_kkt_residual<T: Scalar>(metric: &RankOneMetric<T>, xc: &[T], lambda: T, x: &[T]) -> T {
    let g = metric.apply(&sub(x, xc));
    g.iter()
        .zip(x)
        .map(|(&gi, &xi)| {
            if xi > T::zero() {
                (gi + lambda).abs()
            } else if xi < T::zero() {
                (gi - lambda).abs()
            } else {
                (gi.abs() - lambda).max(T::zero())
            }
        })
        .fold(T::zero(), T::max)
}

/// Scale used with [`prox_kkt_residual`]: `sigma ||xc|| + lambda`.
pub fn prox_kkt_scale<T: Scalar>(metric: &RankOneMetric<T>, xc: &[T], lambda: T) -> T {
    metric.sigma() * norm(xc) + lambda
}

/// `|u^T (x - xc) - mu sigma| / (sigma (1 + |mu|))`
pub fn mu_residual<T: Scalar>(metric: &RankOneMetric<T>, xc: &[T], x: &[T], mu: T) -> T {
    let r = dot(metric.u(), &sub(x, xc)) - mu * metric.sigma();
    r.abs() / (metric.sigma() * (T::one() + mu.abs()))
}

/// `F(x+) - (F(x) - ||H (x - x+)||^2 / (2 sigma))`; nonpositive when the
/// step achieved the guaranteed decrease.
pub fn sufficient_decrease_gap<T: Scalar>(metric: &RankOneMetric<T>, f: T, f_next: T, x: &[T], x_next: &[T]) -> T {
    let g = metric.apply(&sub(x, x_next));
    let g2: T = g.iter().map(|v| *v * *v).sum();
    f_next - (f - g2 / (T::of(2.0) * metric.sigma()))
}

/// Tally of one property over a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub checked: usize,
    pub violations: usize,
    /// Largest observed value of the checked quantity.
    pub worst: f64,
}

impl Check {
    pub fn new(name: &'static str) -> Self {
        Self {
            name,
            checked: 0,
            violations: 0,
            worst: f64::NEG_INFINITY,
        }
    }

    /// Record `value`, which passes when `value <= limit`.
    pub fn observe(&mut self, value: f64, limit: f64) {
        self.checked += 1;
        if !(value <= limit) {
            self.violations += 1;
        }
        if value > self.worst || value.is_nan() {
            self.worst = value;
        }
    }

    pub fn observe_bool(&mut self, ok: bool) {
        self.observe(if ok { 0.0 } else { 1.0 }, 0.0);
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn report_claims<T: Scalar>(r: &Metric2dReport<T>, checks: &mut [Check; 3]) {
    checks[0].observe_bool(r.claim_real_root());
    checks[1].observe_bool(r.claim_sigma_dominates());
    checks[2].observe_bool(r.claim_positive_definite());
}

/// Run IMRO-1D, IMRO-2D and FIMRO for at most `max_iters` iterations each and
/// tally the per-step properties.
pub fn verify_problem<T: Scalar>(problem: &BpdnProblem<T>, max_iters: usize, prox: ProxMethod) -> Result<Vec<Check>> {
    let bound = operator_norm(&problem.op.clone(), DEFAULT_NORM_TOL, DEFAULT_NORM_MAX_ITER)?.bound;
    let stop = StopRule {
        tol: T::of(1e-10),
        objective_target: None,
        max_iters,
        max_ops: u64::MAX,
    };
    let x0 = vec![T::zero(); problem.n()];
    let lambda = problem.lambda;

    let mut kkt = Check::new("prox KKT residual");
    let mut mu = Check::new("prox multiplier consistency");
    let mut descent = Check::new("imro1d descent");
    let mut decrease = Check::new("imro1d sufficient decrease");
    let mut cfg = SolverConfig::new(Variant::Imro1d);
    cfg.stop = stop;
    cfg.prox = prox;
    cfg.op_norm = Some(bound);
    solve_observed(problem, &cfg, &x0, &mut |ev| {
        let scale = prox_kkt_scale(ev.metric, ev.xc, lambda);
        kkt.observe(
            prox_kkt_residual(ev.metric, ev.xc, lambda, &ev.prox.x).as_f64(),
            1e-8 * scale.as_f64(),
        );
        mu.observe(mu_residual(ev.metric, ev.xc, &ev.prox.x, ev.prox.mu).as_f64(), 1e-9);
        let tol = 1e-12 * (1.0 + ev.objective.abs().as_f64());
        descent.observe((ev.objective_next - ev.objective).as_f64(), tol);
        decrease.observe(
            sufficient_decrease_gap(ev.metric, ev.objective, ev.objective_next, ev.x, &ev.prox.x).as_f64(),
            1e-10,
        );
    })?;

    let mut claims = [
        Check::new("imro2d real discriminant"),
        Check::new("imro2d sigma >= max(S11, S22)"),
        Check::new("imro2d sigma >= |u|^2"),
    ];
    cfg.variant = Variant::Imro2d;
    solve_observed(problem, &cfg, &x0, &mut |ev| {
        let scale = prox_kkt_scale(ev.metric, ev.xc, lambda);
        kkt.observe(
            prox_kkt_residual(ev.metric, ev.xc, lambda, &ev.prox.x).as_f64(),
            1e-8 * scale.as_f64(),
        );
        if let Some(r) = ev.report {
            report_claims(r, &mut claims);
        }
    })?;

    let mut phi = Check::new("fimro F(x) <= phi_bar");
    let mut lam = Check::new("fimro lambda_k bound");
    let gamma0 = bound * bound;
    let fcfg = FimroConfig {
        stop,
        prox,
        gamma0: Some(gamma0),
        op_norm: Some(bound),
    };
    fimro_observed(problem, &fcfg, &x0, &mut |state, info| {
        phi.observe_bool(info.phi_bound_holds);
        let b = lambda_seq_bound(info.sigma, gamma0, state.k);
        lam.observe((state.lambda_seq - b).as_f64(), 1e-14 * b.as_f64());
    })?;

    let mut out = vec![kkt, mu, descent, decrease];
    out.extend(claims);
    out.push(phi);
    out.push(lam);
    Ok(out)
}

/// `||A^T b||_inf`, the smallest weight for which `x = 0` is optimal.
pub fn lambda_max<T: Scalar>(problem: &BpdnProblem<T>) -> Result<T> {
    Ok(norm_inf(&problem.op.clone().adjoint(&problem.b)?))
}
