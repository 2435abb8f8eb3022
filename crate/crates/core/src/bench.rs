//! Uniform entry point over all solvers and the objective-matching benchmark.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::str::FromStr;
use std::thread;

use crate::baselines::{fista, ista, FirstOrderConfig};
use crate::error::{Error, Result};
use crate::fimro::{fimro, FimroConfig};
use crate::linops::{operator_norm, DEFAULT_NORM_MAX_ITER, DEFAULT_NORM_TOL};
use crate::problem::BpdnProblem;
use crate::prox::ProxMethod;
use crate::scalar::Scalar;
use crate::solver::{solve, SolverConfig, Variant};
use crate::trace::{SolveOutput, Status, StopRule};
use crate::vecops::dist;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Imro1d,
    Imro2d,
    Fimro,
    Ista,
    Fista,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Imro2d, Method::Imro1d, Method::Fimro, Method::Ista, Method::Fista];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Imro1d => "imro1d",
            Method::Imro2d => "imro2d",
            Method::Fimro => "fimro",
            Method::Ista => "ista",
            Method::Fista => "fista",
        }
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown solver `{s}`")))
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Run `method` from `x0` under `stop`.
pub fn run_method<T: Scalar>(
    method: Method,
    problem: &BpdnProblem<T>,
    stop: StopRule<T>,
    prox: ProxMethod,
    op_norm: Option<T>,
    x0: &[T],
) -> Result<SolveOutput<T>> {
    match method {
        Method::Imro1d | Method::Imro2d => {
            let variant = if method == Method::Imro1d {
                Variant::Imro1d
            } else {
                Variant::Imro2d
            };
            let cfg = SolverConfig {
                variant,
                stop,
                prox,
                op_norm,
                ..SolverConfig::default()
            };
            solve(problem, &cfg, x0)
        }
        Method::Fimro => {
            let cfg = FimroConfig {
                stop,
                prox,
                op_norm,
                gamma0: None,
            };
            fimro(problem, &cfg, x0)
        }
        Method::Ista | Method::Fista => {
            let cfg = FirstOrderConfig {
                stop,
                step: None,
                op_norm,
            };
            if method == Method::Ista {
                ista(problem, &cfg, x0)
            } else {
                fista(problem, &cfg, x0)
            }
        }
    }
}

/// One cell of the benchmark table.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub instance: String,
    pub method: Method,
    /// `None` when the run failed outright.
    pub status: Option<Status>,
    pub iterations: usize,
    pub a_calls: u64,
    pub objective: f64,
    /// `||x - x_star||` when the instance carries a reference solution.
    pub oracle_error: Option<f64>,
    pub error: Option<String>,
}

impl BenchRow {
    /// Did not converge: failed, or stopped by a budget.
    pub fn dnc(&self) -> bool {
        !matches!(self.status, Some(Status::Converged | Status::TargetReached))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchConfig {
    /// Subgradient tolerance for the reference run.
    pub tol: f64,
    /// Iteration budget for every run.
    pub max_iters: usize,
    pub max_ops: u64,
    pub prox: ProxMethod,
    /// Run the (instance, method) pairs on worker threads.
    pub parallel: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iters: 10_000,
            max_ops: u64::MAX,
            prox: ProxMethod::Sorted,
            parallel: false,
        }
    }
}

fn guarded_run(
    name: &str,
    method: Method,
    problem: &BpdnProblem<f64>,
    stop: StopRule<f64>,
    prox: ProxMethod,
    op_norm: f64,
) -> BenchRow {
    let problem = problem.clone();
    let x0 = vec![0.0; problem.n()];
    let outcome = catch_unwind(AssertUnwindSafe(|| run_method(method, &problem, stop, prox, Some(op_norm), &x0)));
    let mut row = BenchRow {
        instance: name.to_string(),
        method,
        status: None,
        iterations: 0,
        a_calls: 0,
        objective: f64::NAN,
        oracle_error: None,
        error: None,
    };
    match outcome {
        Ok(Ok(out)) => {
            if let Some(last) = out.trace.last() {
                row.iterations = last.iter;
                row.a_calls = last.a_calls;
                row.objective = last.objective;
            }
            row.status = Some(out.trace.status);
            row.oracle_error = problem.x_star.as_ref().map(|xs| dist(&out.x, xs));
        }
        Ok(Err(e)) => row.error = Some(e.to_string()),
        Err(_) => row.error = Some("solver panicked".to_string()),
    }
    row
}

/// Objective-matching comparison. On each instance IMRO-2D is run to
/// `cfg.tol` and its final objective becomes the target; every other method
/// then runs until it reaches that objective (or the tolerance) within the
/// budget. Rows come out in instance-major, `methods` order.
pub fn bench(instances: &[(String, BpdnProblem<f64>)], methods: &[Method], cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    let mut jobs = Vec::new();
    let mut reference_rows = Vec::new();
    for (name, problem) in instances {
        let norm = operator_norm(&problem.op.clone(), DEFAULT_NORM_TOL, DEFAULT_NORM_MAX_ITER)?.bound;
        let stop = StopRule {
            tol: cfg.tol,
            objective_target: None,
            max_iters: cfg.max_iters,
            max_ops: cfg.max_ops,
        };
        let reference = guarded_run(name, Method::Imro2d, problem, stop, cfg.prox, norm);
        let target = (!reference.dnc()).then_some(reference.objective);
        let stop = StopRule {
            objective_target: target,
            ..stop
        };
        for &m in methods {
            if m != Method::Imro2d {
                jobs.push((name.as_str(), problem, m, stop, norm));
            }
        }
        reference_rows.push(reference);
    }

    let run = |&(name, problem, m, stop, norm): &(&str, &BpdnProblem<f64>, Method, StopRule<f64>, f64)| {
        guarded_run(name, m, problem, stop, cfg.prox, norm)
    };
    let results: Vec<BenchRow> = if cfg.parallel {
        thread::scope(|s| {
            let handles: Vec<_> = jobs.iter().map(|job| s.spawn(move || run(job))).collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("benchmark worker panicked outside the guarded run"))
                .collect()
        })
    } else {
        jobs.iter().map(run).collect()
    };

    let mut rows = Vec::new();
    let mut results = results.into_iter();
    for ((name, _), reference) in instances.iter().zip(reference_rows) {
        for &m in methods {
            if m == Method::Imro2d {
                rows.push(reference.clone());
            } else {
                let row = results.next().expect("one result per job");
                debug_assert_eq!(&row.instance, name);
                rows.push(row);
            }
        }
    }
    Ok(rows)
}
