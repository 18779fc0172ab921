//! Bracketed root finding for the monotone branch equations.
//!
//! Both the quadratic-case cubic and the general degree-p equation are
//! strictly monotone on each branch bracket, so plain bisection is guaranteed
//! to converge. The bisection runs until the bracket can no longer be split
//! in double precision, which puts the returned abscissa within one ulp of
//! the true root; the residual is then limited only by the conditioning of
//! the equation itself.

use crate::{Error, Result};

/// Result of one bracketed solve.
#[derive(Clone, Copy, Debug)]
pub struct RootSolve {
    /// The located root.
    pub a: f64,
    /// `|f(a) - target|` at the returned root.
    pub residual: f64,
    /// Number of bisection steps taken.
    pub iterations: u32,
}

const MAX_ITER: u32 = 200;

/// Bisection for a nonincreasing `f` on `[lo, hi]` with
/// `f(lo) >= target >= f(hi)`. Endpoint targets are returned directly.
pub fn bisect_decreasing(
    lo: f64,
    hi: f64,
    target: f64,
    f: impl Fn(f64) -> f64,
) -> Result<RootSolve> {
    debug_assert!(lo <= hi);
    let glo = f(lo) - target;
    let ghi = f(hi) - target;
    if glo <= 0.0 {
        // Root sits at (or numerically before) the left endpoint.
        return Ok(RootSolve { a: lo, residual: glo.abs(), iterations: 0 });
    }
    if ghi >= 0.0 {
        return Ok(RootSolve { a: hi, residual: ghi.abs(), iterations: 0 });
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut iterations = 0;
    while iterations < MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            break; // bracket no longer splittable in f64
        }
        let g = f(mid) - target;
        if g == 0.0 {
            return Ok(RootSolve { a: mid, residual: 0.0, iterations });
        } else if g > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    // Pick the endpoint with the smaller residual.
    let (rlo, rhi) = ((f(lo) - target).abs(), (f(hi) - target).abs());
    let (a, residual) = if rlo <= rhi { (lo, rlo) } else { (hi, rhi) };
    Ok(RootSolve { a, residual, iterations })
}

/// Bisection for a nondecreasing `f` on `[lo, hi]` with
/// `f(lo) <= target <= f(hi)`.
pub fn bisect_increasing(
    lo: f64,
    hi: f64,
    target: f64,
    f: impl Fn(f64) -> f64,
) -> Result<RootSolve> {
    let sol = bisect_decreasing(-hi, -lo, target, |b| f(-b))?;
    Ok(RootSolve { a: -sol.a, ..sol })
}

/// Expands the left endpoint of a negative bracket geometrically
/// (`-start, -2·start, -4·start, …`) until `f` falls to or below `target`.
/// `f` must be nondecreasing on the negative axis with `f(0) >= target` and
/// infimum below `target` somewhere left of the returned endpoint.
pub fn expand_negative_bracket(
    start: f64,
    target: f64,
    f: impl Fn(f64) -> f64,
) -> Result<f64> {
    debug_assert!(start > 0.0);
    let mut lo = -start;
    while f(lo) > target {
        lo *= 2.0;
        if lo < -1e18 {
            // The root ran away; accept the flat tail only if it already
            // meets the residual demanded from every returned root.
            if (f(lo) - target).abs() <= 1e-13 {
                return Ok(lo);
            }
            return Err(Error::Nonconvergence((f(lo) - target).abs()));
        }
    }
    Ok(lo)
}
