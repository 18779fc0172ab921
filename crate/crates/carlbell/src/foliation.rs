//! Geometry of the extremal-line foliation of the quadratic Bellman domain.
//!
//! Every extremal line is indexed by the pair `(a, ξ1)`: the branch-equation
//! parameter `a` and the first coordinate of the bottom anchor
//! `ξ = (ξ1, ξ1², m)`. Along the line,
//!
//! ```text
//! x1 = ξ1·(1 − 2a(M−x3)) / (1 − 2a(M−m)),
//! x2 = ξ1²·(1 − 4a(M−x3)) / (1 − 4a(M−m)),
//! ```
//!
//! and the Bellman function is affine: `B = t0 + t1·x1 + t2·x2 + t3·x3` with
//! `t3 = a²·t1²` and `t0 = (a/2 − M·a²)·t1²`. The line meets the upper lid
//! `x3 = M` at `ζ = (ξ1/(1−2a(M−m)), ξ1²/(1−4a(M−m)))`, which sweeps the
//! hyperbola `ζ2 = ζ1·ξ1²/(2ξ1 − ζ1)` as `a` runs over the branch bracket.

use crate::cet_bellman::{plus_bracket_max, solve_cubic};
use crate::domain::{ratio_s, Branch, CetPoint, Exponent, Window};
use crate::{Error, Result};

/// Full parameter set of one extremal line.
#[derive(Clone, Copy, Debug)]
pub struct FoliationFrame {
    /// Branch-equation parameter of the line.
    pub a: f64,
    /// First coordinate of the bottom anchor `ξ = (ξ1, ξ1², m)`.
    pub xi1: f64,
    /// Constant term of the affine representation (`t0 = D·t1²`).
    pub t0: f64,
    pub t1: f64,
    pub t2: f64,
    /// Capacity coefficient (`t3 = A·t1²`).
    pub t3: f64,
    /// `A = a²`.
    pub big_a: f64,
    /// `D = a/2 − M·a²`.
    pub big_d: f64,
    /// `η = 1 − 2a(M − m)`, the line factor at the bottom anchor.
    pub eta: f64,
    /// Upper-lid intersection `ζ = (ζ1, ζ2, M)`.
    pub zeta1: f64,
    pub zeta2: f64,
}

fn check_bracket(a: f64, w: Window) -> Result<()> {
    if a >= plus_bracket_max(w) {
        return Err(Error::Pole);
    }
    Ok(())
}

/// The point of the line `ℓ_{a,ξ1}` at capacity level `x3`.
pub fn extremal_line_point(a: f64, xi1: f64, x3: f64, w: Window) -> Result<(f64, f64)> {
    check_bracket(a, w)?;
    if x3 < w.lower - 1e-12 || x3 > w.upper + 1e-12 {
        return Err(Error::OutOfDomain(format!("x3 = {x3} outside the window")));
    }
    let x1 = xi1 * (1.0 - 2.0 * a * (w.upper - x3)) / (1.0 - 2.0 * a * w.width());
    let x2 = xi1 * xi1 * (1.0 - 4.0 * a * (w.upper - x3)) / (1.0 - 4.0 * a * w.width());
    Ok((x1, x2))
}

/// Upper-lid trace `ζ` of the line `ℓ_{a,ξ1}`.
pub fn upper_trace(a: f64, xi1: f64, w: Window) -> Result<(f64, f64)> {
    check_bracket(a, w)?;
    let zeta1 = xi1 / (1.0 - 2.0 * a * w.width());
    let zeta2 = xi1 * xi1 / (1.0 - 4.0 * a * w.width());
    Ok((zeta1, zeta2))
}

/// Recovers the extremal line through a domain point and fills the full frame.
///
/// On the side boundary `x2 = x1²` the line is vertical (`a = 0`) and the
/// affine coefficients `t0, t1, t2` are infinite; only `a`, `ξ1`, `η` and the
/// trace fields are meaningful there.
pub fn recover_parameters(pt: CetPoint, w: Window, branch: Branch) -> Result<FoliationFrame> {
    let s = ratio_s(pt, Exponent::two())?;
    let a = solve_cubic(s, pt.x3, w, branch)?.a;
    let eta = 1.0 - 2.0 * a * w.width();
    let e2 = 1.0 - 2.0 * a * (w.upper - pt.x3);
    let xi1 = pt.x1 * eta / e2;
    let t1 = -xi1 / (a * eta);
    let t2 = w.lower + 1.0 / (2.0 * a * eta);
    // t3 and t0 through the stable direct forms.
    let t3 = pt.x1 * pt.x1 / (e2 * e2);
    let big_a = a * a;
    let big_d = 0.5 * a - w.upper * a * a;
    let t0 = big_d * t1 * t1;
    let (zeta1, zeta2) = upper_trace(a, xi1, w)?;
    Ok(FoliationFrame { a, xi1, t0, t1, t2, t3, big_a, big_d, eta, zeta1, zeta2 })
}

/// Gap between the slope of the projected extremal line and the slope of the
/// tangent parabola through its upper-lid point (unit-window coordinates;
/// general windows enter through `a ↦ a(M−m)`). Vanishes identically.
pub fn tangency_gap(a: f64, t1: f64, w: Window) -> Result<f64> {
    let au = a * w.width();
    if (1.0 - 4.0 * au).abs() < 1e-14 {
        return Err(Error::Pole);
    }
    if au == 0.0 {
        return Ok(0.0);
    }
    let sq = (1.0 - 2.0 * au) * (1.0 - 2.0 * au);
    let slope_line = -2.0 * t1 * au * sq / (1.0 - 4.0 * au);
    let u1 = -t1 * au;
    let slope_parabola = 2.0 * sq * u1 / (1.0 - 4.0 * au);
    Ok((slope_line - slope_parabola).abs())
}
