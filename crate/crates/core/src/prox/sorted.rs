//! Sweep over sorted breakpoints with incremental slope updates.

use super::{breakpoints_of, PiecewiseLhs};
use crate::scalar::Scalar;

const TIE_TOL: f64 = 1e-12;

/// Returns `(mu, breakpoints swept, work)`.
///
/// On each piece `lhs(mu) = c0 + (c1 - sigma) mu`. The sweep carries
/// `(c0, c1)` across breakpoints rather than `lhs` itself: far-away
/// breakpoints (tiny `u_i`) would otherwise feed huge, cancelling
/// `slope * step` products into the value compared near the root.
pub(super) fn find_mu<T: Scalar>(f: &PiecewiseLhs<'_, T>) -> (T, usize, usize) {
    let mut bps = breakpoints_of(f);
    let n_bp = bps.len();
    if n_bp == 0 {
        return (T::zero(), 0, 0);
    }
    let mut work = 0usize;
    bps.sort_unstable_by(|a, b| {
        work += 1;
        a.order(b)
    });

    let first = bps[0].value;
    let mu0 = first - T::one().max(first.abs());
    let (mut c0, mut c1) = (T::zero(), T::zero());
    for i in 0..f.xc.len() {
        if let Some((a, b)) = f.linear_part(i, mu0) {
            c0 = c0 + a;
            c1 = c1 + b;
        }
    }
    work += f.xc.len();
    let tie = |l: T| T::tol(TIE_TOL) * T::one().max(f.rhs.abs()).max(l.abs());

    if c0 + (c1 - f.sigma) * mu0 <= f.rhs {
        // root lies on the unbounded piece left of every breakpoint
        let rep = PiecewiseLhs::representative(None, Some(first));
        return (f.solve_on_piece(rep), 0, work + f.xc.len());
    }
    let mut mu = mu0;
    for (j, bp) in bps.iter().enumerate() {
        let mu_plus = bp.value;
        let lhs_plus = c0 + (c1 - f.sigma) * mu_plus;
        work += 1;
        if lhs_plus <= f.rhs + tie(lhs_plus) {
            let rep = PiecewiseLhs::representative(Some(mu), Some(mu_plus));
            return (f.solve_on_piece(rep), j + 1, work + f.xc.len());
        }
        let i = bp.coord();
        let ds = bp.slope_delta(f.u);
        // the coordinate is active on the far side of its + breakpoint
        // through xc_i - t, of its - breakpoint through xc_i + t
        let shift = if bp.signed_index > 0 { -f.t } else { f.t };
        let term = f.u[i] * (f.xc[i] + shift);
        if ds > T::zero() {
            c0 = c0 + term;
        } else {
            c0 = c0 - term;
        }
        c1 = c1 + ds;
        mu = mu_plus;
    }
    let rep = PiecewiseLhs::representative(Some(mu), None);
    (f.solve_on_piece(rep), n_bp, work + f.xc.len())
}
