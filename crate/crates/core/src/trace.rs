//! Per-iteration records and the stopping rules shared by every solver.

use std::time::Instant;

use crate::problem::BpdnProblem;
use crate::scalar::Scalar;
use crate::vecops::dist;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    /// Subgradient norm reached the tolerance.
    Converged,
    /// Objective reached the requested target value.
    TargetReached,
    IterBudget,
    OpBudget,
}

impl Status {
    pub fn as_str(&self) -> &'static str {
        match self {
            Status::Converged => "Converged",
            Status::TargetReached => "TargetReached",
            Status::IterBudget => "IterBudget",
            Status::OpBudget => "OpBudget",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule<T> {
    /// Stop once the minimum-norm subgradient is at most this.
    pub tol: T,
    /// Stop once `F(x) <= target`.
    pub objective_target: Option<T>,
    pub max_iters: usize,
    /// Budget on applies plus adjoints, counted from the start of the solve.
    pub max_ops: u64,
}

impl<T: Scalar> Default for StopRule<T> {
    fn default() -> Self {
        Self {
            tol: T::of(1e-6),
            objective_target: None,
            max_iters: 10_000,
            max_ops: u64::MAX,
        }
    }
}

impl<T: Scalar> StopRule<T> {
    pub fn with_tol(tol: T) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord<T> {
    pub iter: usize,
    /// Cumulative applies plus adjoints since the start of the solve.
    pub a_calls: u64,
    pub objective: T,
    pub subgrad_norm: T,
    pub seconds: f64,
    /// `||x - x_star||` when the problem carries a reference solution.
    pub residual: Option<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverTrace<T> {
    pub solver: String,
    pub records: Vec<TraceRecord<T>>,
    pub status: Status,
}

impl<T: Scalar> SolverTrace<T> {
    pub fn last(&self) -> Option<&TraceRecord<T>> {
        self.records.last()
    }

    pub fn a_calls(&self) -> u64 {
        self.last().map_or(0, |r| r.a_calls)
    }

    pub fn iterations(&self) -> usize {
        self.last().map_or(0, |r| r.iter)
    }
}

/// Output of a solver run.
#[derive(Debug, Clone)]
pub struct SolveOutput<T> {
    pub x: Vec<T>,
    pub trace: SolverTrace<T>,
}

/// Book-keeping shared by the solver loops.
pub(crate) struct Tracker<'a, T: Scalar> {
    problem: &'a BpdnProblem<T>,
    stop: StopRule<T>,
    calls_at_start: u64,
    start: Instant,
    records: Vec<TraceRecord<T>>,
}

impl<'a, T: Scalar> Tracker<'a, T> {
    pub fn new(problem: &'a BpdnProblem<T>, stop: StopRule<T>) -> Self {
        Self {
            problem,
            stop,
            calls_at_start: problem.op.counts().total(),
            start: Instant::now(),
            records: Vec::new(),
        }
    }

    pub fn calls(&self) -> u64 {
        self.problem.op.counts().total() - self.calls_at_start
    }

    /// Budget status if an iteration costing `cost` calls may not start.
    pub fn check_budget(&self, next_iter: usize, cost: u64) -> Option<Status> {
        if next_iter > self.stop.max_iters {
            Some(Status::IterBudget)
        } else if self.calls().saturating_add(cost) > self.stop.max_ops {
            Some(Status::OpBudget)
        } else {
            None
        }
    }

    /// Push a record; returns a terminal status when a stopping test passes.
    pub fn record(&mut self, iter: usize, x: &[T], objective: T, subgrad_norm: T) -> Option<Status> {
        let residual = self.problem.x_star.as_ref().map(|xs| dist(x, xs));
        self.records.push(TraceRecord {
            iter,
            a_calls: self.calls(),
            objective,
            subgrad_norm,
            seconds: self.start.elapsed().as_secs_f64(),
            residual,
        });
        if subgrad_norm <= self.stop.tol {
            Some(Status::Converged)
        } else if self.stop.objective_target.is_some_and(|t| objective <= t) {
            Some(Status::TargetReached)
        } else {
            None
        }
    }

    pub fn finish(self, solver: &str, status: Status) -> SolverTrace<T> {
        SolverTrace {
            solver: solver.to_string(),
            records: self.records,
            status,
        }
    }
}
