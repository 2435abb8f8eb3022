//! Trace files: one `#` comment line with the run settings, then
//! `iter,a_calls,objective,subgrad_norm,seconds[,residual]` and one row per
//! iteration. Floats carry 17 significant digits so they read back exactly.

use std::fmt::Write as _;
use std::path::Path;

use imro::SolverTrace;

pub fn render(trace: &SolverTrace<f64>, manifest: &Path, timing: bool) -> String {
    let with_residual = trace.records.iter().any(|r| r.residual.is_some());
    let mut s = format!(
        "# solver={} status={} x0=0 manifest={}\n",
        trace.solver,
        trace.status,
        manifest.display()
    );
    s.push_str("iter,a_calls,objective,subgrad_norm,seconds");
    if with_residual {
        s.push_str(",residual");
    }
    s.push('\n');
    for r in &trace.records {
        let secs = if timing { r.seconds } else { 0.0 };
        write!(s, "{},{},{:.16e},{:.16e},{:.16e}", r.iter, r.a_calls, r.objective, r.subgrad_norm, secs)
            .expect("writing to a String");
        if with_residual {
            write!(s, ",{:.16e}", r.residual.unwrap_or(f64::NAN)).expect("writing to a String");
        }
        s.push('\n');
    }
    s
}
