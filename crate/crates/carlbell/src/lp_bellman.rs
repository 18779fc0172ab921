//! The general-exponent (`L^p`) Carleson-embedding Bellman functions.
//!
//! With the dual exponent `q = p/(p−1)` and `g = a·|a|^{p−2}`, the branch
//! equation reads
//!
//! ```text
//! s = |x1|^p / x2
//!   = |(1 − q(M−x3)·g) / (1 − q(M−m)·g)|^p · (1 − pq(M−m)·g) / (1 − pq(M−x3)·g)
//! ```
//!
//! (one power of `a` is factored out analytically, which removes the apparent
//! `a/a` singularity at the origin), and the value is
//!
//! ```text
//! B(x) = (x3 − m)·x2 / (|1 − q(M−m)·g|^p · (1 − pq(M−x3)·g)) + m·x2.
//! ```
//!
//! For `p = 2` the equation and the value coincide with the quadratic module.

use crate::domain::{abs_pow, cet_contains, min_threshold, ratio_s, Branch, CetPoint, Exponent, Window};
use crate::solver::{bisect_decreasing, bisect_increasing, expand_negative_bracket};
use crate::cet_bellman::{BellmanValue, LOWER_LID_CROSSOVER};
use crate::{Error, Result};

/// Residual demanded from every returned degree-p root.
pub const LP_RESIDUAL_TOL: f64 = 1e-11;

/// A solved degree-p branch equation.
#[derive(Clone, Copy, Debug)]
pub struct LpSolve {
    pub a: f64,
    pub branch: Branch,
    /// `|rhs(a) − s|`.
    pub residual: f64,
    pub p: f64,
    pub iterations: u32,
}

/// `g = a·|a|^{p−2}` = `sign(a)·|a|^{p−1}`, with the quadratic case kept
/// bit-for-bit equal to `a`.
fn signed_pow(a: f64, p: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else if p == 2.0 {
        a
    } else {
        a.signum() * ((p - 1.0) * a.abs().ln()).exp()
    }
}

/// Right endpoint of the positive branch bracket,
/// `(1/(pq(M−m)))^(q−1)`.
pub fn plus_bracket_max_lp(w: Window, exp: Exponent) -> f64 {
    abs_pow(
        (exp.p() * exp.q() * w.width()).recip(),
        exp.q() - 1.0,
    )
}

/// Right-hand side of the degree-p branch equation; returns the limiting
/// value 1 at `a = 0`.
pub fn lp_rhs(a: f64, x3: f64, w: Window, exp: Exponent) -> Result<f64> {
    if a == 0.0 {
        return Ok(1.0);
    }
    let (p, q) = (exp.p(), exp.q());
    let g = signed_pow(a, p);
    let d_lin = 1.0 - q * w.width() * g;
    let d_pq = 1.0 - p * q * (w.upper - x3) * g;
    if d_lin.abs() < 1e-14 || d_pq.abs() < 1e-14 {
        return Err(Error::Pole);
    }
    let n_lin = 1.0 - q * (w.upper - x3) * g;
    let n_pq = 1.0 - p * q * w.width() * g;
    Ok(abs_pow(n_lin / d_lin, p) * n_pq / d_pq)
}

/// Solves the degree-p branch equation.
pub fn solve_lp(s: f64, x3: f64, w: Window, exp: Exponent, branch: Branch) -> Result<LpSolve> {
    if !(0.0 - 1e-12..=1.0 + 1e-12).contains(&s) {
        return Err(Error::InvalidParameter(format!("s = {s} outside [0, 1]")));
    }
    if x3 < w.lower - 1e-12 || x3 > w.upper + 1e-12 {
        return Err(Error::OutOfDomain(format!("x3 = {x3} outside the window")));
    }
    let s = s.clamp(0.0, 1.0);
    let rhs = |a: f64| lp_rhs(a, x3, w, exp).unwrap_or(f64::NAN);
    let sol = match branch {
        Branch::Plus => bisect_decreasing(0.0, plus_bracket_max_lp(w, exp), s, rhs)?,
        Branch::Minus => {
            let threshold = abs_pow((w.upper - x3) / w.width(), exp.p() - 1.0);
            if s <= threshold {
                return Err(Error::NoNegativeRoot);
            }
            if s >= 1.0 {
                return Ok(LpSolve { a: 0.0, branch, residual: 0.0, p: exp.p(), iterations: 0 });
            }
            let lo = expand_negative_bracket(1.0, s, rhs)?;
            bisect_increasing(lo, 0.0, s, rhs)?
        }
    };
    // Same conditioning scaling as the quadratic solver: the equation
    // degenerates toward the lower lid, inflating the best achievable residual.
    let cond = if x3 > w.lower { (w.width() / (x3 - w.lower)).max(1.0) } else { 1.0 };
    if !(sol.residual <= LP_RESIDUAL_TOL * cond) {
        return Err(Error::Nonconvergence(sol.residual));
    }
    Ok(LpSolve {
        a: sol.a,
        branch,
        residual: sol.residual,
        p: exp.p(),
        iterations: sol.iterations,
    })
}

fn lp_value(a: f64, pt: CetPoint, w: Window, exp: Exponent) -> f64 {
    let (p, q) = (exp.p(), exp.q());
    let g = signed_pow(a, p);
    let d_lin = 1.0 - q * w.width() * g;
    let d_pq = 1.0 - p * q * (w.upper - pt.x3) * g;
    (pt.x3 - w.lower) * pt.x2 / (abs_pow(d_lin, p) * d_pq) + w.lower * pt.x2
}

/// Evaluates the general-exponent Bellman function on the requested branch.
pub fn eval_lp(pt: CetPoint, w: Window, exp: Exponent, branch: Branch) -> Result<BellmanValue> {
    if !cet_contains(pt, w, exp) {
        return Err(Error::OutOfDomain(format!(
            "({}, {}, {}) for window ({}, {}), p = {}",
            pt.x1,
            pt.x2,
            pt.x3,
            w.lower,
            w.upper,
            exp.p()
        )));
    }
    if pt.x2 <= 0.0 {
        let a = match branch {
            Branch::Plus => plus_bracket_max_lp(w, exp),
            Branch::Minus => f64::NEG_INFINITY,
        };
        return Ok(BellmanValue { value: 0.0, a, branch });
    }
    let s = ratio_s(pt, exp)?;
    match branch {
        Branch::Plus => {
            if pt.x3 - w.lower < LOWER_LID_CROSSOVER {
                if exp.is_two() {
                    let value =
                        4.0 * w.width() * (pt.x2 - pt.x1 * pt.x1).max(0.0) + w.lower * pt.x2;
                    return Ok(BellmanValue {
                        value,
                        a: plus_bracket_max_lp(w, exp),
                        branch,
                    });
                }
                // No closed lower-lid limit is exposed for p != 2.
                return Err(Error::BoundaryGradient);
            }
            let root = solve_lp(s, pt.x3, w, exp, branch)?;
            Ok(BellmanValue { value: lp_value(root.a, pt, w, exp), a: root.a, branch })
        }
        Branch::Minus => {
            let threshold = min_threshold(pt, w, exp)?;
            if pt.x3 <= threshold {
                return Ok(BellmanValue {
                    value: w.lower * pt.x2,
                    a: f64::NEG_INFINITY,
                    branch,
                });
            }
            let root = solve_lp(s, pt.x3, w, exp, branch)?;
            Ok(BellmanValue { value: lp_value(root.a, pt, w, exp), a: root.a, branch })
        }
    }
}
