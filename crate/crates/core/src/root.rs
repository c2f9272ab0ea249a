//! Bracketed bisection shared by the expectation inversion and the `r_max` search.

/// Returns a point within `tol` of a sign change of `f` on `[lo, hi]`.
///
/// The sign of `f(lo)` decides which half is kept, so the function may be
/// increasing or decreasing across the bracket.
pub(crate) fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64
where
    F: FnMut(f64) -> f64,
{
    let lo_negative = f(lo) <= 0.0;
    // 200 halvings exhaust any f64 bracket.
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if (f(mid) <= 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
