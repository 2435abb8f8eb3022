//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p imro --test acceptance`.

mod common;

use std::cell::{OnceCell, RefCell};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use common::*;
use imro::problems::{generate, Family, GenSpec, Noise, SignalKind};
use imro::{
    operator_norm, prox_imro, run_method, solve_observed, BpdnProblem, FimroConfig, FirstStep, LinearOperator, Method,
    ProxMethod, RankOneMetric, SolveOutput, SolverConfig, Status, StopRule, Variant,
};
use rand::Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

/// Count and worst value of a quantity that must stay `<= limit`.
#[derive(Debug, Clone, Copy)]
struct Tally {
    checked: usize,
    violations: usize,
    worst: f64,
}

impl Default for Tally {
    fn default() -> Self {
        Self {
            checked: 0,
            violations: 0,
            worst: f64::NEG_INFINITY,
        }
    }
}

impl Tally {
    fn observe(&mut self, value: f64, limit: f64) {
        self.checked += 1;
        if !(value <= limit) {
            self.violations += 1;
        }
        if !(value <= self.worst) {
            self.worst = value;
        }
    }

    fn ok(&self) -> bool {
        self.checked > 0 && self.violations == 0
    }

    fn summary(&self) -> String {
        format!("{}/{} ok, worst {:.2e}", self.checked - self.violations, self.checked, self.worst)
    }
}

#[derive(Default)]
struct Imro1dTallies {
    runs: usize,
    descent: Tally,
    decrease: Tally,
}

#[derive(Default)]
struct ClaimTallies {
    runs: usize,
    real_root: Tally,
    dominates: Tally,
    pd: Tally,
    identity: Tally,
}

fn h_times(metric: &RankOneMetric<f64>, w: &[f64]) -> Vec<f64> {
    let u = metric.u();
    let uw: f64 = u.iter().zip(w).map(|(a, b)| a * b).sum();
    w.iter().zip(u).map(|(wi, ui)| metric.sigma() * wi - uw * ui).collect()
}

fn bound_of(problem: &BpdnProblem<f64>) -> f64 {
    operator_norm(&problem.op.clone(), 1e-8, 500).unwrap().bound
}

fn stop(tol: f64, max_iters: usize) -> StopRule<f64> {
    StopRule {
        tol,
        objective_target: None,
        max_iters,
        max_ops: u64::MAX,
    }
}

/// IMRO-1D from zero, feeding descent and sufficient-decrease checks.
/// Returns the run, the largest `||x^k - x_ref||` (when a reference is
/// given) and the largest metric `sigma`.
fn run_imro1d(
    problem: &BpdnProblem<f64>,
    bound: f64,
    rule: StopRule<f64>,
    reference: Option<&[f64]>,
    tallies: &mut Imro1dTallies,
) -> (SolveOutput<f64>, f64, f64) {
    let mut cfg = SolverConfig::new(Variant::Imro1d);
    cfg.stop = rule;
    cfg.op_norm = Some(bound);
    let x0 = vec![0.0; problem.n()];
    let mut delta = reference.map_or(0.0, |r| l2_dist(&x0, r));
    let mut sigma_max = 0.0_f64;
    let out = solve_observed(problem, &cfg, &x0, &mut |ev| {
        let f = ev.objective;
        let f_next = ev.objective_next;
        tallies.descent.observe(f_next - f, 1e-12 * (1.0 + f.abs()));
        let step: Vec<f64> = ev.x.iter().zip(&ev.prox.x).map(|(a, b)| a - b).collect();
        let g_h = h_times(ev.metric, &step);
        let g2: f64 = g_h.iter().map(|v| v * v).sum();
        tallies
            .decrease
            .observe(f_next - (f - g2 / (2.0 * ev.metric.sigma())), 1e-10);
        if let Some(r) = reference {
            delta = delta.max(l2_dist(&ev.prox.x, r));
        }
        sigma_max = sigma_max.max(ev.metric.sigma());
    })
    .unwrap();
    tallies.runs += 1;
    (out, delta, sigma_max)
}

/// IMRO-2D from zero, feeding the claim checks.
fn run_imro2d(problem: &BpdnProblem<f64>, bound: f64, rule: StopRule<f64>, tallies: &mut ClaimTallies) -> SolveOutput<f64> {
    let mut cfg = SolverConfig::new(Variant::Imro2d);
    cfg.stop = rule;
    cfg.op_norm = Some(bound);
    let x0 = vec![0.0; problem.n()];
    let out = solve_observed(problem, &cfg, &x0, &mut |ev| {
        let u2: f64 = ev.metric.u().iter().map(|v| v * v).sum();
        let sigma = ev.metric.sigma();
        tallies.pd.observe(u2 - sigma, -f64::MIN_POSITIVE);
        if let Some(r) = ev.report {
            let s = &r.snapshot;
            let disc = s.eta2 * s.eta2 - 4.0 * s.eta1 * s.eta3;
            let scale = (s.s11 + s.s22 + s.s12.abs()).powi(2);
            tallies.real_root.observe(-disc / (1.0 + scale), 1e-9);
            let m = s.s11.max(s.s22);
            tallies.dominates.observe((m - r.sigma) / (1.0 + m), 1e-9);
            if r.degeneracy != Some(imro::metrics::Degeneracy::Parallel) {
                let closed = disc.max(0.0).sqrt() / s.eta1;
                tallies
                    .identity
                    .observe((u2 - closed).abs() / (closed + r.sigma_root), 1e-8);
            }
        }
    })
    .unwrap();
    tallies.runs += 1;
    out
}

struct DeskRun {
    name: String,
    oracle: Vec<f64>,
    f_star: f64,
    sigma_1d: f64,
    delta_1d: f64,
    imro1d: SolveOutput<f64>,
    imro2d: SolveOutput<f64>,
    ista: SolveOutput<f64>,
}

struct Context {
    desk: OnceCell<Vec<DeskRun>>,
    imro1d: RefCell<Imro1dTallies>,
    claims: RefCell<ClaimTallies>,
}

impl Context {
    /// The four 250 x 1000 instances with oracle, IMRO-1D, IMRO-2D and ISTA
    /// runs at tolerance 1e-6, plus IMRO runs on the other operator families.
    fn desk(&self) -> &[DeskRun] {
        self.desk.get_or_init(|| {
            let mut runs = Vec::new();
            let mut t1 = self.imro1d.borrow_mut();
            let mut t2 = self.claims.borrow_mut();
            for i in 1..=4 {
                let p = desk_instance(i);
                let bound = bound_of(&p);
                let x_star = oracle(&p);
                let f_star = p.clone().objective(&x_star).unwrap();
                let (imro1d, delta_1d, sigma_1d) = run_imro1d(&p, bound, stop(1e-6, 100_000), Some(&x_star), &mut t1);
                let imro2d = run_imro2d(&p, bound, stop(1e-6, 100_000), &mut t2);
                let ista = run_method(Method::Ista, &p, stop(1e-6, 100_000), ProxMethod::Sorted, Some(bound), &vec![0.0; 1000])
                    .unwrap();
                runs.push(DeskRun {
                    name: format!("ins{i}"),
                    oracle: x_star,
                    f_star,
                    sigma_1d,
                    delta_1d,
                    imro1d,
                    imro2d,
                    ista,
                });
            }
            let extra = [
                (Family::Gaussian { normalize_columns: true }, 100, 400, 0.05),
                (Family::Orthonormal, 100, 400, 0.05),
                (Family::Conditioned { cond: 1e3 }, 100, 400, 0.01),
                (Family::Heaviside, 256, 256, 0.5),
                (Family::Convolution { width: 2.0 }, 256, 256, 0.01),
            ];
            for (j, (family, m, n, lambda)) in extra.into_iter().enumerate() {
                let p = generate(family, &GenSpec::new(m, n, n / 20, lambda, 31 + j as u64)).unwrap();
                let bound = bound_of(&p);
                run_imro1d(&p, bound, stop(1e-6, 20_000), None, &mut t1);
                run_imro2d(&p, bound, stop(1e-6, 20_000), &mut t2);
            }
            runs
        })
    }
}

fn c1_prox_oracle(_: &Context) -> Verdict {
    let mut rng = rng(101);
    let mut kkt = Tally::default();
    let mut gap = Tally::default();
    for _ in 0..500 {
        let n = rng.random_range(3..=200);
        let (metric, xc, lambda) = random_prox_instance(&mut rng, n);
        let want = ista_on_model(metric.sigma(), metric.u(), &xc, lambda, 1_000_000);
        let scale = metric.sigma() * xc.iter().map(|v| v * v).sum::<f64>().sqrt() + lambda;
        for method in [ProxMethod::Sorted, ProxMethod::Median] {
            let got = prox_imro(&metric, &xc, lambda, method).unwrap().x;
            kkt.observe(kkt_residual(metric.sigma(), metric.u(), &xc, lambda, &got) / scale, 1e-8);
            gap.observe(max_abs_diff(&got, &want), 1e-6);
        }
    }
    verdict(
        kkt.ok() && gap.ok(),
        format!("KKT/scale {}; |x - x_ista|_inf {}", kkt.summary(), gap.summary()),
    )
}

fn c2_sorted_median(_: &Context) -> Verdict {
    let mut rng = rng(202);
    let mut agree = Tally::default();
    for _ in 0..200 {
        let n = rng.random_range(3..=1000);
        let (metric, xc, lambda) = random_prox_instance(&mut rng, n);
        let a = prox_imro(&metric, &xc, lambda, ProxMethod::Sorted).unwrap();
        let b = prox_imro(&metric, &xc, lambda, ProxMethod::Median).unwrap();
        let size = a.x.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        agree.observe(max_abs_diff(&a.x, &b.x) / size, 1e-12);
    }
    let mut pts = Vec::new();
    for p in 8..=14 {
        let n = 1usize << p;
        let mut total = 0.0;
        let reps = 5;
        for _ in 0..reps {
            let (metric, xc, lambda) = random_prox_instance(&mut rng, n);
            total += prox_imro(&metric, &xc, lambda, ProxMethod::Median).unwrap().work as f64;
        }
        pts.push(((n as f64).ln(), (total / reps as f64).ln()));
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    verdict(
        agree.ok() && (0.8..=1.2).contains(&slope),
        format!("agreement {}; work exponent {slope:.3}", agree.summary()),
    )
}

fn c3_majorization(ctx: &Context) -> Verdict {
    let p = small_instance(100, 400, 0.1, 303);
    let a = dense_of(&p);
    let gram = a.transpose() * &a;
    let bound = bound_of(&p);
    let mut rng = rng(304);
    let mut rayleigh = Tally::default();
    let mut exact = Tally::default();
    let mut iters = 0;
    let mut cfg = SolverConfig::new(Variant::Imro1d);
    cfg.stop = stop(0.0, 500);
    cfg.op_norm = Some(bound);
    let mut t1 = ctx.imro1d.borrow_mut();
    let x0 = vec![0.0; 400];
    solve_observed(&p, &cfg, &x0, &mut |ev| {
        iters += 1;
        let metric = ev.metric;
        let w = nalgebra::DMatrix::from_column_slice(400, 200, &normals(&mut rng, 400 * 200));
        let aw = &a * &w;
        for j in 0..200 {
            let col: Vec<f64> = w.column(j).iter().copied().collect();
            let hw = h_times(metric, &col);
            let whw: f64 = col.iter().zip(&hw).map(|(x, y)| x * y).sum();
            let aw2 = aw.column(j).norm_squared();
            rayleigh.observe((aw2 - whw) / (metric.sigma() * w.column(j).norm_squared()), 1e-12);
        }
        if let Some(v) = ev.direction {
            let hv = h_times(metric, v);
            let gv = &gram * nalgebra::DMatrix::from_column_slice(400, 1, v);
            let err = hv.iter().zip(gv.iter()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            exact.observe(err / gv.norm(), 1e-8);
        }
        let f = ev.objective;
        t1.descent.observe(ev.objective_next - f, 1e-12 * (1.0 + f.abs()));
    })
    .unwrap();
    t1.runs += 1;
    verdict(
        iters == 500 && rayleigh.ok() && exact.ok(),
        format!(
            "{iters} iterations; (|Aw|^2 - w'Hw)/(sigma |w|^2) {}; |Hv - A'Av|/|A'Av| {}",
            rayleigh.summary(),
            exact.summary()
        ),
    )
}

fn c4_claims(ctx: &Context) -> Verdict {
    ctx.desk();
    let t = ctx.claims.borrow();
    let ok = t.real_root.ok() && t.dominates.ok() && t.pd.ok() && t.identity.ok();
    verdict(
        ok,
        format!(
            "{} runs; real root {}; sigma >= max S {}; sigma > |u|^2 {}; |u|^2 closed form {}",
            t.runs,
            t.real_root.summary(),
            t.dominates.summary(),
            t.pd.summary(),
            t.identity.summary()
        ),
    )
}

fn c5_cg_equivalence(_: &Context) -> Verdict {
    let mut rng = rng(505);
    let mut rel = Tally::default();
    let mut worst_cond = 0.0_f64;
    for _ in 0..5 {
        let a = nalgebra::DMatrix::from_column_slice(40, 30, &normals(&mut rng, 1200));
        let b = normals(&mut rng, 40);
        let svd = a.clone().svd(false, false);
        let cond = svd.singular_values.max() / svd.singular_values.min();
        worst_cond = worst_cond.max(cond);
        let p = BpdnProblem::new(LinearOperator::dense(40, 30, row_major(&a)).unwrap(), b.clone(), 0.0).unwrap();
        let cg = cg_normal_equations(&a, &b, 20);
        let mut cfg = SolverConfig::new(Variant::Imro2d);
        cfg.stop = stop(0.0, 20);
        cfg.first_step = FirstStep::Curvature;
        let mut iterates = vec![vec![0.0; 30]];
        solve_observed(&p, &cfg, &vec![0.0; 30], &mut |ev| iterates.push(ev.prox.x.clone())).unwrap();
        for k in 1..=20 {
            match iterates.get(k) {
                Some(x) => rel.observe(l2_dist(x, &cg[k]) / l2_dist(&cg[k], &[0.0; 30]), 1e-6),
                None => rel.observe(f64::INFINITY, 1e-6),
            }
        }
    }
    verdict(
        worst_cond <= 100.0 && rel.ok(),
        format!(
            "5 Gaussian 40x30 instances, max cond(A) {worst_cond:.1}; |x_imro - x_cg|/|x_cg| over 20 iterations {}",
            rel.summary()
        ),
    )
}

fn c6_descent(ctx: &Context) -> Verdict {
    ctx.desk();
    let t = ctx.imro1d.borrow();
    verdict(
        t.descent.ok() && t.decrease.ok(),
        format!(
            "{} runs; F(x+) - F(x) {}; sufficient-decrease gap {}",
            t.runs,
            t.descent.summary(),
            t.decrease.summary()
        ),
    )
}

/// `F(x^k) - F* <= 4 mu / k` with `mu = max((F(x^1) - F*)/4, 2 sigma^2 delta^2)`.
fn sublinear_check(trace: &SolveOutput<f64>, f_star: f64, sigma: f64, delta: f64, tally: &mut Tally) {
    let records = &trace.trace.records;
    let f1 = records[1].objective;
    let mu = ((f1 - f_star) / 4.0).max(2.0 * sigma * sigma * delta * delta);
    for r in &records[1..] {
        let bound = 4.0 * mu / r.iter as f64;
        tally.observe((r.objective - f_star - bound) / (1.0 + f_star.abs()), 1e-12);
    }
}

fn c7_sublinear(ctx: &Context) -> Verdict {
    let mut tally = Tally::default();
    let p = small_instance(100, 400, 0.1, 707);
    let bound = bound_of(&p);
    let x_star = oracle(&p);
    let f_star = p.clone().objective(&x_star).unwrap();
    let (out, delta, sigma) = run_imro1d(&p, bound, stop(1e-9, 20_000), Some(&x_star), &mut ctx.imro1d.borrow_mut());
    sublinear_check(&out, f_star, sigma, delta, &mut tally);
    let mut names = vec!["100x400".to_string()];
    for run in ctx.desk().iter().filter(|r| r.name == "ins1" || r.name == "ins3") {
        sublinear_check(&run.imro1d, run.f_star, run.sigma_1d, run.delta_1d, &mut tally);
        names.push(run.name.clone());
    }
    verdict(
        tally.ok() && names.len() == 3,
        format!("instances {}; (F - F* - 4 mu/k)/(1 + |F*|) {}", names.join(", "), tally.summary()),
    )
}

fn c8_fimro(_: &Context) -> Verdict {
    let mut f_tally = Tally::default();
    let mut l_tally = Tally::default();
    let mut dyn_spec = GenSpec::new(100, 400, 10, 0.1, 802);
    dyn_spec.signal = SignalKind::Dynamic { decades: 3.0 };
    dyn_spec.noise = Noise::Absolute(1e-3);
    let instances = [small_instance(100, 400, 0.1, 801), imro::problems::gen_gaussian(&dyn_spec).unwrap()];
    for p in &instances {
        let bound = bound_of(p);
        let l = bound * bound;
        let x_star = oracle(p);
        let f_star = p.clone().objective(&x_star).unwrap();
        let r0 = x_star.iter().map(|v| v * v).sum::<f64>();
        let cfg = FimroConfig {
            stop: stop(0.0, 500),
            prox: ProxMethod::Sorted,
            gamma0: Some(l),
            op_norm: Some(bound),
        };
        let mut sigma_max = 0.0_f64;
        let mut seen = 0;
        imro::fimro::fimro_observed(p, &cfg, &vec![0.0; p.n()], &mut |state, info| {
            seen += 1;
            let k = state.k as f64;
            sigma_max = sigma_max.max(info.sigma);
            let f_bound = 4.0 * l * r0 / ((2.0 + k) * (2.0 + k));
            f_tally.observe((state.objective - f_star - f_bound) / (1.0 + f_star.abs()), 1e-12);
            let d = 2.0 * sigma_max.sqrt() + k * l.sqrt();
            let l_bound = 4.0 * sigma_max / (d * d);
            l_tally.observe(state.lambda_seq / l_bound - 1.0, 1e-12);
        })
        .unwrap();
        if seen != 500 {
            f_tally.observe(f64::INFINITY, 0.0);
        }
    }
    verdict(
        f_tally.ok() && l_tally.ok(),
        format!(
            "2 instances, k <= 500; (F - F* - 4L r0^2/(2+k)^2)/(1 + |F*|) {}; lambda_k/bound - 1 {}",
            f_tally.summary(),
            l_tally.summary()
        ),
    )
}

fn c9_table(ctx: &Context) -> Verdict {
    let desk = ctx.desk();
    let mut wins = 0;
    let mut cells = Vec::new();
    let mut accurate = true;
    let mut worst_err = 0.0_f64;
    let calls = |o: &SolveOutput<f64>| {
        if o.trace.status == Status::Converged {
            o.trace.a_calls() as f64
        } else {
            f64::INFINITY
        }
    };
    for run in desk {
        let c2 = calls(&run.imro2d);
        if c2 < calls(&run.imro1d) && c2 < calls(&run.ista) {
            wins += 1;
        }
        let show = |o: &SolveOutput<f64>| {
            if o.trace.status == Status::Converged {
                o.trace.a_calls().to_string()
            } else {
                format!("DNC({})", o.trace.a_calls())
            }
        };
        cells.push(format!(
            "{} 2d/1d/ista {}/{}/{}",
            run.name,
            show(&run.imro2d),
            show(&run.imro1d),
            show(&run.ista)
        ));
        for o in [&run.imro1d, &run.imro2d] {
            let last = o.trace.last().unwrap();
            let err = l2_dist(&o.x, &run.oracle);
            worst_err = worst_err.max(err);
            accurate &= o.trace.status == Status::Converged && last.subgrad_norm <= 1e-6 && err <= 1e-4;
        }
    }
    verdict(
        wins >= 3 && accurate,
        format!(
            "IMRO-2D cheapest on {wins}/4; worst |x - x_oracle| {worst_err:.2e}; {}",
            cells.join("; ")
        ),
    )
}

fn c10_zero(_: &Context) -> Verdict {
    let mut checked = 0;
    let mut bad = Vec::new();
    let families = [
        (Family::Gaussian { normalize_columns: false }, 50, 200),
        (Family::Orthonormal, 50, 200),
        (Family::Conditioned { cond: 100.0 }, 50, 200),
        (Family::Heaviside, 64, 64),
        (Family::Convolution { width: 1.5 }, 64, 64),
    ];
    for (j, (family, m, n)) in families.into_iter().enumerate() {
        let base = generate(family, &GenSpec::new(m, n, 5, 1.0, 1000 + j as u64)).unwrap();
        let lmax = lambda_max_dense(&dense_of(&base), &base.b);
        for factor in [1.0, 1.5, 10.0] {
            let p = BpdnProblem::new(base.op.clone(), base.b.clone(), lmax * factor).unwrap();
            for method in Method::ALL {
                let out = run_method(method, &p, StopRule::with_tol(1e-6), ProxMethod::Sorted, None, &vec![0.0; n]).unwrap();
                checked += 1;
                let zero = out.x.iter().all(|v| *v == 0.0);
                if !(zero && out.trace.iterations() == 0 && out.trace.status == Status::Converged) {
                    bad.push(format!("{} x{factor} {method}", family.name()));
                }
            }
        }
    }
    verdict(
        bad.is_empty(),
        format!("{checked} runs at lambda >= |A^T b|_inf; failures: [{}]", bad.join(", ")),
    )
}

fn main() {
    let ctx = Context {
        desk: OnceCell::new(),
        imro1d: RefCell::default(),
        claims: RefCell::default(),
    };
    let criteria: [(&str, &str, fn(&Context) -> Verdict); 10] = [
        ("C1", "prox matches model oracle", c1_prox_oracle),
        ("C2", "sorted/median agreement, linear work", c2_sorted_median),
        ("C3", "IMRO-1D majorization", c3_majorization),
        ("C5", "lambda = 0 reproduces CG", c5_cg_equivalence),
        ("C7", "IMRO-1D sublinear bound", c7_sublinear),
        ("C8", "FIMRO O(1/k^2) bound", c8_fimro),
        ("C10", "zero returned when lambda >= |A^T b|_inf", c10_zero),
        ("C4", "IMRO-2D claims on the suite", c4_claims),
        ("C6", "IMRO-1D descent and sufficient decrease", c6_descent),
        ("C9", "desk benchmark ordering and accuracy", c9_table),
    ];
    let mut lines = Vec::new();
    let mut failed = 0;
    for (id, title, f) in criteria {
        let t = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(|| f(&ctx))).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        let line = format!(
            "{} {id:<4} {title} ({:.1} s): {}",
            if v.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            v.detail
        );
        eprintln!("{line}");
        if !v.pass {
            failed += 1;
        }
        lines.push((id[1..].parse::<u32>().unwrap(), line));
    }
    lines.sort_by_key(|l| l.0);
    println!();
    for (_, line) in &lines {
        println!("{line}");
    }
    println!("{} of {} criteria passed", lines.len() - failed, lines.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
