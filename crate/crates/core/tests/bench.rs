mod common;

use common::*;
use imro::problems::{gen_conditioned, GenSpec, Noise};
use imro::{bench, BenchConfig, Method, Status};

fn instances() -> Vec<(String, imro::BpdnProblem<f64>)> {
    let mut spec = GenSpec::new(60, 200, 8, 1e-3, 111);
    spec.noise = Noise::Absolute(1e-3);
    let hard = gen_conditioned(&spec, 1e4).unwrap();
    vec![
        ("easy".to_string(), small_instance(60, 200, 0.1, 112)),
        ("hard".to_string(), hard),
    ]
}

fn cfg(parallel: bool) -> BenchConfig {
    BenchConfig {
        tol: 1e-6,
        max_iters: 3000,
        parallel,
        ..BenchConfig::default()
    }
}

#[test]
fn table_layout_and_reference_row() {
    let inst = instances();
    let methods = [Method::Imro2d, Method::Imro1d, Method::Ista];
    let rows = bench(&inst, &methods, &cfg(false)).unwrap();
    assert_eq!(rows.len(), 6);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row.instance, inst[i / 3].0);
        assert_eq!(row.method, methods[i % 3]);
        assert!(row.error.is_none());
    }
    let reference = &rows[0];
    assert_eq!(reference.status, Some(Status::Converged));
    assert!(reference.a_calls < rows[2].a_calls, "IMRO-2D should need fewer calls than ISTA");
}

#[test]
fn ista_runs_out_of_budget_on_the_ill_conditioned_instance() {
    let rows = bench(&instances()[1..], &[Method::Imro2d, Method::Ista], &cfg(false)).unwrap();
    assert!(!rows[0].dnc());
    assert!(rows[1].dnc(), "{rows:?}");
    assert_eq!(rows[1].status, Some(Status::IterBudget));
}

#[test]
fn parallel_run_matches_sequential() {
    let inst = instances();
    let seq = bench(&inst, &Method::ALL, &cfg(false)).unwrap();
    let par = bench(&inst, &Method::ALL, &cfg(true)).unwrap();
    assert_eq!(seq, par);
}

#[test]
fn oracle_error_is_reported_when_available() {
    let p = small_instance(40, 100, 0.1, 113);
    let x_star = oracle(&p);
    let inst = vec![("with".to_string(), p.clone().with_x_star(x_star).unwrap()), ("without".to_string(), p)];
    let rows = bench(&inst, &[Method::Imro2d, Method::Fista], &cfg(false)).unwrap();
    assert!(rows[0].oracle_error.unwrap() <= 1e-3);
    assert!(rows[1].oracle_error.is_some());
    assert!(rows[2].oracle_error.is_none() && rows[3].oracle_error.is_none());
}

#[test]
fn method_names_round_trip() {
    for m in Method::ALL {
        assert_eq!(m.name().parse::<Method>().unwrap(), m);
    }
    assert!("newton".parse::<Method>().is_err());
}
