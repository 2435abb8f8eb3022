//! Linear-time search for `mu`: evaluate `lhs` at the median of the remaining
//! breakpoints, discard the half on the wrong side, and fold coordinates whose
//! breakpoints are all gone into a running linear term.

use super::{breakpoints_of, Breakpoint, PiecewiseLhs};
use crate::scalar::Scalar;

/// Returns `(mu, halving rounds, work)`.
pub(super) fn find_mu<T: Scalar>(f: &PiecewiseLhs<'_, T>) -> (T, usize, usize) {
    let n = f.xc.len();
    let mut active: Vec<Breakpoint<T>> = breakpoints_of(f);
    let mut remaining = vec![0u8; n];
    for bp in &active {
        remaining[bp.coord()] += 1;
    }
    let mut stamp = vec![0u32; n];

    // sum over folded coordinates of u_i x_i(mu) = c0 + c1 mu inside the bracket
    let (mut c0, mut c1) = (T::zero(), T::zero());
    let (mut lo, mut hi): (Option<T>, Option<T>) = (None, None);
    let mut work = 0usize;
    let mut rounds = 0usize;

    while !active.is_empty() {
        rounds += 1;
        let mid = active.len() / 2;
        let mut comparisons = 0usize;
        active.select_nth_unstable_by(mid, |a, b| {
            comparisons += 1;
            a.order(b)
        });
        work += comparisons;
        let pivot = active[mid].value;

        let round = rounds as u32;
        let mut sum = c0 + c1 * pivot;
        for bp in &active {
            let i = bp.coord();
            if stamp[i] != round {
                stamp[i] = round;
                sum = sum + f.u[i] * f.coord(i, pivot);
            }
        }
        let value = sum - f.sigma * pivot;
        work += active.len();

        let root_above = value > f.rhs;
        if root_above {
            lo = Some(pivot);
        } else {
            hi = Some(pivot);
        }
        let rep = PiecewiseLhs::representative(lo, hi);
        work += active.len();
        active.retain(|bp| {
            let keep = if root_above {
                bp.value > pivot
            } else {
                bp.value < pivot
            };
            if !keep {
                let i = bp.coord();
                remaining[i] -= 1;
                if remaining[i] == 0 {
                    if let Some((a, b)) = f.linear_part(i, rep) {
                        c0 = c0 + a;
                        c1 = c1 + b;
                    }
                }
            }
            keep
        });
    }
    let rep = PiecewiseLhs::representative(lo, hi);
    (f.solve_on_piece(rep), rounds, work + n)
}
