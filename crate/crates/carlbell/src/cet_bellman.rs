//! The quadratic (`p = 2`) Carleson-embedding Bellman functions.
//!
//! For a window `(m, M)` and an interior point `x = (x1, x2, x3)` the value of
//! the maximal Bellman function is
//!
//! ```text
//! B_max(x) = (x3 − m)·x2 / ([1 − 2a(M−m)]²·[1 − 4a(M−x3)]) + m·x2,
//! ```
//!
//! where `a` is the root in `[0, 1/(4(M−m))]` of the cubic branch equation
//!
//! ```text
//! s = x1²/x2 = [(1 − 2a(M−x3)) / (1 − 2a(M−m))]² · (1 − 4a(M−m)) / (1 − 4a(M−x3)).
//! ```
//!
//! The same rational expression with the negative root gives the minimal
//! function `B_min` wherever that root exists, i.e. for
//! `x3 > M − (M−m)·s`; below the threshold `B_min = m·x2`.
//!
//! On the lower lid `x3 = m` the cubic degenerates and `B_max` is continued by
//! its limit `4(M−m)(x2 − x1²) + m·x2`.

use crate::domain::{
    cet_contains, ratio_s, rescale_to_unit, min_threshold, Branch, CetPoint, Exponent, Window,
};
use crate::solver::{bisect_decreasing, bisect_increasing, expand_negative_bracket};
use crate::{Error, Result};

/// Residual demanded from every returned cubic root.
pub const CUBIC_RESIDUAL_TOL: f64 = 1e-12;

/// Capacity margin below which the lower-lid limit formula replaces the
/// rational expression (which degenerates to 0/0 as `x3 → m`).
pub const LOWER_LID_CROSSOVER: f64 = 1e-9;

/// A solved branch equation.
#[derive(Clone, Copy, Debug)]
pub struct CubicSolve {
    /// Root of the cubic.
    pub a: f64,
    pub branch: Branch,
    /// `|rhs(a) − s|`.
    pub residual: f64,
    pub iterations: u32,
}

/// A Bellman value together with the characteristic parameter that produced it.
#[derive(Clone, Copy, Debug)]
pub struct BellmanValue {
    pub value: f64,
    /// Root of the branch equation; `-inf` marks the constant continuation of
    /// `B_min` below its threshold, `1/(4(M−m))` the lower-lid limit of `B_max`.
    pub a: f64,
    pub branch: Branch,
}

/// Right endpoint of the positive branch bracket, `1/(4(M−m))`.
pub fn plus_bracket_max(w: Window) -> f64 {
    0.25 / w.width()
}

/// Right-hand side of the cubic branch equation as a function of `a`.
pub fn cubic_rhs(a: f64, x3: f64, w: Window) -> Result<f64> {
    let d2 = 1.0 - 2.0 * a * w.width();
    let d4 = 1.0 - 4.0 * a * (w.upper - x3);
    if d2.abs() < 1e-14 || d4.abs() < 1e-14 {
        return Err(Error::Pole);
    }
    let n2 = 1.0 - 2.0 * a * (w.upper - x3);
    let n4 = 1.0 - 4.0 * a * w.width();
    let r = n2 / d2;
    Ok(r * r * n4 / d4)
}

/// Solves the cubic branch equation for the requested branch.
///
/// The positive branch is bracketed on `[0, 1/(4(M−m))]`, where the
/// right-hand side decreases monotonically from 1 to 0. The negative branch
/// exists only for `s > (M−x3)/(M−m)`; its bracket is expanded geometrically
/// to the left until the (increasing) right-hand side drops below `s`.
pub fn solve_cubic(s: f64, x3: f64, w: Window, branch: Branch) -> Result<CubicSolve> {
    if !(0.0 - 1e-12..=1.0 + 1e-12).contains(&s) {
        return Err(Error::InvalidParameter(format!("s = {s} outside [0, 1]")));
    }
    if x3 < w.lower - 1e-12 || x3 > w.upper + 1e-12 {
        return Err(Error::OutOfDomain(format!("x3 = {x3} outside the window")));
    }
    let s = s.clamp(0.0, 1.0);
    let rhs = |a: f64| cubic_rhs(a, x3, w).unwrap_or(f64::NAN);
    let sol = match branch {
        Branch::Plus => bisect_decreasing(0.0, plus_bracket_max(w), s, rhs)?,
        Branch::Minus => {
            let threshold = (w.upper - x3) / w.width();
            if s <= threshold {
                return Err(Error::NoNegativeRoot);
            }
            if s >= 1.0 {
                // Side boundary: both branches collapse to a = 0.
                return Ok(CubicSolve { a: 0.0, branch, residual: 0.0, iterations: 0 });
            }
            let lo = expand_negative_bracket(1.0, s, rhs)?;
            bisect_increasing(lo, 0.0, s, rhs)?
        }
    };
    // Near the lower lid the equation degenerates (rhs ≡ 1 at x3 = m) and the
    // derivative at the root blows up like (M−m)/(x3−m); a root exact to one
    // ulp in `a` then carries a proportionally larger residual, so the
    // acceptance threshold is scaled by that conditioning factor.
    let cond = if x3 > w.lower { (w.width() / (x3 - w.lower)).max(1.0) } else { 1.0 };
    if !(sol.residual <= CUBIC_RESIDUAL_TOL * cond) {
        return Err(Error::Nonconvergence(sol.residual));
    }
    Ok(CubicSolve { a: sol.a, branch, residual: sol.residual, iterations: sol.iterations })
}

fn rational_value(a: f64, pt: CetPoint, w: Window) -> f64 {
    let d2 = 1.0 - 2.0 * a * w.width();
    let d4 = 1.0 - 4.0 * a * (w.upper - pt.x3);
    (pt.x3 - w.lower) * pt.x2 / (d2 * d2 * d4) + w.lower * pt.x2
}

fn require_in_domain(pt: CetPoint, w: Window) -> Result<()> {
    if cet_contains(pt, w, Exponent::two()) {
        Ok(())
    } else {
        Err(Error::OutOfDomain(format!(
            "({}, {}, {}) for window ({}, {})",
            pt.x1, pt.x2, pt.x3, w.lower, w.upper
        )))
    }
}

/// The maximal Bellman function `B_max`.
pub fn eval_bmax(pt: CetPoint, w: Window) -> Result<BellmanValue> {
    require_in_domain(pt, w)?;
    if pt.x2 <= 0.0 {
        // Degenerate axis point: both closed forms reduce to m·x2 = 0.
        return Ok(BellmanValue { value: 0.0, a: plus_bracket_max(w), branch: Branch::Plus });
    }
    if pt.x3 - w.lower < LOWER_LID_CROSSOVER {
        let value = 4.0 * w.width() * (pt.x2 - pt.x1 * pt.x1).max(0.0) + w.lower * pt.x2;
        return Ok(BellmanValue { value, a: plus_bracket_max(w), branch: Branch::Plus });
    }
    let s = ratio_s(pt, Exponent::two())?;
    let root = solve_cubic(s, pt.x3, w, Branch::Plus)?;
    Ok(BellmanValue { value: rational_value(root.a, pt, w), a: root.a, branch: Branch::Plus })
}

/// The minimal Bellman function `B_min`.
pub fn eval_bmin(pt: CetPoint, w: Window) -> Result<BellmanValue> {
    require_in_domain(pt, w)?;
    if pt.x2 <= 0.0 {
        return Ok(BellmanValue { value: 0.0, a: f64::NEG_INFINITY, branch: Branch::Minus });
    }
    let threshold = min_threshold(pt, w, Exponent::two())?;
    if pt.x3 <= threshold {
        return Ok(BellmanValue {
            value: w.lower * pt.x2,
            a: f64::NEG_INFINITY,
            branch: Branch::Minus,
        });
    }
    let s = ratio_s(pt, Exponent::two())?;
    let root = solve_cubic(s, pt.x3, w, Branch::Minus)?;
    Ok(BellmanValue { value: rational_value(root.a, pt, w), a: root.a, branch: Branch::Minus })
}

pub(crate) fn gradient_for(pt: CetPoint, w: Window, branch: Branch) -> Result<[f64; 3]> {
    if pt.x3 - w.lower < LOWER_LID_CROSSOVER {
        return Err(Error::BoundaryGradient);
    }
    let s = ratio_s(pt, Exponent::two())?;
    let root = solve_cubic(s, pt.x3, w, branch)?;
    let a = root.a;
    if a.abs() < 1e-12 {
        // a = 0 is the side boundary x2 = x1², where t2 has a pole.
        return Err(Error::BoundaryGradient);
    }
    let e2 = 1.0 - 2.0 * a * (w.upper - pt.x3);
    let d2 = 1.0 - 2.0 * a * w.width();
    let t1 = -pt.x1 / (a * e2);
    let t2 = w.lower + 1.0 / (2.0 * a * d2);
    let t3 = pt.x1 * pt.x1 / (e2 * e2);
    Ok([t1, t2, t3])
}

/// Analytic gradient `(t1, t2, t3)` of `B_max` at a strictly interior point:
///
/// ```text
/// t1 = −x1 / (a·[1 − 2a(M−x3)]),
/// t2 = m + 1 / (2a·[1 − 2a(M−m)]),
/// t3 = x1² / [1 − 2a(M−x3)]².
/// ```
pub fn gradient(pt: CetPoint, w: Window) -> Result<[f64; 3]> {
    gradient_for(pt, w, Branch::Plus)
}

/// Finite-difference step in coordinate `i`: `max(1e−5, 1e−5·|coordinate|)`.
fn fd_step(coord: f64) -> f64 {
    (1e-5 * coord.abs()).max(1e-5)
}

/// Symmetrized central finite differences of the analytic gradient.
pub fn hessian_fd(pt: CetPoint, w: Window, branch: Branch) -> Result<[[f64; 3]; 3]> {
    let coords = [pt.x1, pt.x2, pt.x3];
    let mut h = [[0.0; 3]; 3];
    for i in 0..3 {
        let step = fd_step(coords[i]);
        let shift = |sign: f64| -> Result<[f64; 3]> {
            let mut c = coords;
            c[i] += sign * step;
            gradient_for(CetPoint::new(c[0], c[1], c[2]), w, branch)
        };
        let gp = shift(1.0)?;
        let gm = shift(-1.0)?;
        for j in 0..3 {
            h[i][j] = (gp[j] - gm[j]) / (2.0 * step);
        }
    }
    // Symmetrize.
    let mut sym = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            sym[i][j] = 0.5 * (h[i][j] + h[j][i]);
        }
    }
    Ok(sym)
}

/// Eigenvalues of a symmetric 3×3 matrix, ascending.
pub fn sym3_eigenvalues(h: &[[f64; 3]; 3]) -> [f64; 3] {
    let m = nalgebra::Matrix3::from_fn(|i, j| h[i][j]);
    let eig = m.symmetric_eigen().eigenvalues;
    let mut out = [eig[0], eig[1], eig[2]];
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out
}

/// Determinant of a 3×3 matrix.
pub fn det3(h: &[[f64; 3]; 3]) -> f64 {
    h[0][0] * (h[1][1] * h[2][2] - h[1][2] * h[2][1])
        - h[0][1] * (h[1][0] * h[2][2] - h[1][2] * h[2][0])
        + h[0][2] * (h[1][0] * h[2][1] - h[1][1] * h[2][0])
}

/// Frobenius norm of a 3×3 matrix.
pub fn frob3(h: &[[f64; 3]; 3]) -> f64 {
    h.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

/// Directional vector of the extremal line through an interior point
/// (positive branch), annihilated by the Hessian:
///
/// ```text
/// d = ( 2a·x1 / (1 − 2a(M−x3)),
///       4a(1 − 2a(M−m))²·x1² / ((1 − 4a(M−m))·(1 − 2a(M−x3))²),
///       1 ).
/// ```
pub fn kernel_direction(pt: CetPoint, w: Window) -> Result<[f64; 3]> {
    if pt.x1 == 0.0 {
        return Ok([0.0, 0.0, 1.0]);
    }
    let s = ratio_s(pt, Exponent::two())?;
    let root = solve_cubic(s, pt.x3, w, Branch::Plus)?;
    let a = root.a;
    let n4 = 1.0 - 4.0 * a * w.width();
    if n4.abs() < 1e-14 {
        return Err(Error::Pole);
    }
    let e2 = 1.0 - 2.0 * a * (w.upper - pt.x3);
    let d2 = 1.0 - 2.0 * a * w.width();
    Ok([
        2.0 * a * pt.x1 / e2,
        4.0 * a * d2 * d2 * pt.x1 * pt.x1 / (n4 * e2 * e2),
        1.0,
    ])
}

/// Main-inequality gap of the dyadic splitting step:
///
/// `B(x) − ½(B(x⁺) + B(x⁻)) − x1²·surplus`, where `x` averages `x⁺, x⁻`
/// coordinate-wise and carries the extra capacity `surplus >= 0` in `x3`.
/// Concavity plus `∂B/∂x3 >= x1²` make the gap nonnegative.
pub fn main_inequality_gap(
    xp: CetPoint,
    xm: CetPoint,
    surplus: f64,
    w: Window,
) -> Result<f64> {
    if surplus < 0.0 {
        return Err(Error::InvalidParameter(format!("surplus = {surplus} < 0")));
    }
    let mid = CetPoint::new(
        0.5 * (xp.x1 + xm.x1),
        0.5 * (xp.x2 + xm.x2),
        0.5 * (xp.x3 + xm.x3) + surplus,
    );
    let b = eval_bmax(mid, w)?.value;
    let bp = eval_bmax(xp, w)?.value;
    let bm = eval_bmax(xm, w)?.value;
    Ok(b - 0.5 * (bp + bm) - mid.x1 * mid.x1 * surplus)
}

/// The sharp embedding constant `4(M − m)` of the capacity window.
pub fn embedding_constant(w: Window) -> f64 {
    4.0 * w.width()
}

/// Rescaling identity: `B(x; m, M) = (M−m)·B(rescaled x; 0, 1) + m·x2`.
pub fn eval_bmax_rescaled(pt: CetPoint, w: Window) -> Result<f64> {
    let unit = eval_bmax(rescale_to_unit(pt, w), Window::unit())?;
    Ok(w.width() * unit.value + w.lower * pt.x2)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    fn w01() -> Window {
        Window::unit()
    }

    #[test]
    fn cubic_rhs_examples() {
        let w = w01();
        assert_eq!(cubic_rhs(0.0, 0.3, w).unwrap(), 1.0);
        // At the bracket endpoint the numerator factor 1 − 4a(M−m) vanishes.
        let r = cubic_rhs(plus_bracket_max(w), 0.7, w).unwrap();
        assert!(r.abs() < 1e-15, "rhs at bracket endpoint = {r}");
        // At x3 = M the cubic reduces to the quadratic 4a² + 4a − 1 = 0,
        // whose positive root is (√2 − 1)/2.
        let a = (SQRT2 - 1.0) / 2.0;
        assert!((cubic_rhs(a, 1.0, w).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn solve_cubic_examples() {
        let w = w01();
        let sol = solve_cubic(1.0, 0.7, w, Branch::Plus).unwrap();
        assert_eq!(sol.a, 0.0);

        let sol = solve_cubic(0.5, 1.0, w, Branch::Plus).unwrap();
        assert!((sol.a - (SQRT2 - 1.0) / 2.0).abs() < 1e-13, "a = {}", sol.a);
        assert!(sol.residual <= 1e-12);

        let sol = solve_cubic(0.5, 1.0, w, Branch::Minus).unwrap();
        assert!((sol.a + (SQRT2 + 1.0) / 2.0).abs() < 1e-12, "a = {}", sol.a);
        assert!(sol.residual <= 1e-12);
    }

    #[test]
    fn no_negative_root_below_threshold() {
        let w = w01();
        // threshold = (M − x3)/(M − m) = 0.5; s = 0.4 <= 0.5 has no negative root.
        assert!(matches!(
            solve_cubic(0.4, 0.5, w, Branch::Minus),
            Err(Error::NoNegativeRoot)
        ));
        assert!(solve_cubic(0.6, 0.5, w, Branch::Minus).is_ok());
    }

    #[test]
    fn bmax_examples() {
        let w = w01();
        // Side boundary: B(x1, x1², x3) = x1²·x3.
        let v = eval_bmax(CetPoint::new(1.0, 1.0, 0.5), w).unwrap();
        assert!((v.value - 0.5).abs() < 1e-12);
        // Upper lid closed form (√x2 + √(x2 − x1²))².
        let v = eval_bmax(CetPoint::new(1.0, 2.0, 1.0), w).unwrap();
        assert!((v.value - (SQRT2 + 1.0) * (SQRT2 + 1.0)).abs() < 1e-9);
        // s = 0 forces a = 1/4.
        let v = eval_bmax(CetPoint::new(0.0, 1.0, 0.5), w).unwrap();
        assert!((v.value - 4.0).abs() < 1e-9);
        // Lower lid limit 4(M−m)(x2 − x1²) + m·x2.
        let v = eval_bmax(CetPoint::new(0.0, 1.0, 0.0), w).unwrap();
        assert!((v.value - 4.0).abs() < 1e-12);
    }

    #[test]
    fn bmin_examples() {
        let w = w01();
        let v = eval_bmin(CetPoint::new(0.0, 7.0, 0.9), w).unwrap();
        assert_eq!(v.value, 0.0);
        let v = eval_bmin(CetPoint::new(1.0, 2.0, 1.0), w).unwrap();
        assert!((v.value - (SQRT2 - 1.0) * (SQRT2 - 1.0)).abs() < 1e-9);
        let v = eval_bmin(CetPoint::new(1.0, 1.0, 0.5), w).unwrap();
        assert!((v.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn gradient_examples() {
        let w = w01();
        // At x3 = M the capacity derivative is exactly x1².
        let g = gradient(CetPoint::new(0.6, 1.0, 1.0), w).unwrap();
        assert!((g[2] - 0.36).abs() < 1e-12, "t3 = {}", g[2]);

        let g = gradient(CetPoint::new(1.0, 2.0, 1.0), w).unwrap();
        let a = (SQRT2 - 1.0) / 2.0;
        assert!((g[0] + 1.0 / a).abs() < 1e-9, "t1 = {}", g[0]);
        assert!((g[1] - 1.0 / (2.0 * a * (1.0 - 2.0 * a))).abs() < 1e-9, "t2 = {}", g[1]);
        // Euler identity ½·t1·x1 + t2·x2 = B.
        let b = eval_bmax(CetPoint::new(1.0, 2.0, 1.0), w).unwrap().value;
        assert!((0.5 * g[0] * 1.0 + g[1] * 2.0 - b).abs() < 1e-8 * b.abs());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let w = Window::new(0.5, 2.0).unwrap();
        let pt = CetPoint::new(0.8, 1.5, 1.3);
        let g = gradient(pt, w).unwrap();
        let h = 1e-6;
        let coords = [pt.x1, pt.x2, pt.x3];
        for i in 0..3 {
            let mut cp = coords;
            let mut cm = coords;
            cp[i] += h;
            cm[i] -= h;
            let fp = eval_bmax(CetPoint::new(cp[0], cp[1], cp[2]), w).unwrap().value;
            let fm = eval_bmax(CetPoint::new(cm[0], cm[1], cm[2]), w).unwrap().value;
            let fd = (fp - fm) / (2.0 * h);
            assert!(
                (g[i] - fd).abs() <= 1e-6 * g[i].abs().max(1.0),
                "component {i}: analytic {} vs fd {}",
                g[i],
                fd
            );
        }
    }

    #[test]
    fn hessian_semidefinite_and_kernel() {
        let w = w01();
        let pt = CetPoint::new(1.0, 2.0, 0.8);
        let h = hessian_fd(pt, w, Branch::Plus).unwrap();
        let eig = sym3_eigenvalues(&h);
        let b = eval_bmax(pt, w).unwrap().value;
        let scale = b.abs().max(1.0);
        assert!(eig[2] <= 1e-6 * scale, "max eigenvalue = {}", eig[2]);
        let norm = frob3(&h);
        assert!(det3(&h).abs() <= 1e-6 * norm.powi(3));

        let d = kernel_direction(pt, w).unwrap();
        let hd: Vec<f64> = (0..3)
            .map(|i| (0..3).map(|j| h[i][j] * d[j]).sum::<f64>())
            .collect();
        let hd_norm = hd.iter().map(|v| v * v).sum::<f64>().sqrt();
        let d_norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(hd_norm <= 1e-6 * norm * d_norm, "|H d| = {hd_norm}");

        let pt = CetPoint::new(1.0, 2.0, 0.95);
        let h = hessian_fd(pt, w, Branch::Minus).unwrap();
        let eig = sym3_eigenvalues(&h);
        let scale = eval_bmin(pt, w).unwrap().value.abs().max(1.0);
        assert!(eig[0] >= -1e-6 * scale, "min eigenvalue = {}", eig[0]);
    }

    #[test]
    fn kernel_direction_on_axis() {
        let d = kernel_direction(CetPoint::new(0.0, 1.0, 0.5), w01()).unwrap();
        assert_eq!(d, [0.0, 0.0, 1.0]);
    }

    #[test]
    fn main_inequality_examples() {
        let w = w01();
        let x = CetPoint::new(0.5, 1.0, 0.6);
        let gap = main_inequality_gap(x, x, 0.0, w).unwrap();
        assert!(gap.abs() < 1e-12);
        let xp = CetPoint::new(0.8, 1.2, 0.7);
        let xm = CetPoint::new(0.2, 0.9, 0.5);
        assert!(main_inequality_gap(xp, xm, 0.0, w).unwrap() >= -1e-9);
        assert!(main_inequality_gap(xp, xm, 0.2, w).unwrap() >= -1e-9);
    }

    #[test]
    fn embedding_constant_examples() {
        assert_eq!(embedding_constant(w01()), 4.0);
        assert_eq!(embedding_constant(Window::new(0.0, 2.0).unwrap()), 8.0);
        assert_eq!(embedding_constant(Window::new(1.0, 1.5).unwrap()), 2.0);
    }

    #[test]
    fn lower_lid_crossover_is_continuous() {
        let w = Window::new(0.25, 1.75).unwrap();
        let pt = |eps: f64| CetPoint::new(0.4, 0.9, 0.25 + eps);
        let lid = eval_bmax(pt(0.0), w).unwrap().value;
        let mut prev_gap = f64::INFINITY;
        for &eps in &[1e-3, 1e-4, 1e-5, 1e-6] {
            let gap = (eval_bmax(pt(eps), w).unwrap().value - lid).abs();
            assert!(gap < prev_gap + 1e-15, "gap not shrinking at eps = {eps}");
            prev_gap = gap;
        }
        assert!(prev_gap <= 1e-3 * lid.abs().max(1.0));
    }

    #[test]
    fn rescaling_identity() {
        let w = Window::new(0.5, 3.0).unwrap();
        let pt = CetPoint::new(0.7, 1.1, 1.9);
        let direct = eval_bmax(pt, w).unwrap().value;
        let rescaled = eval_bmax_rescaled(pt, w).unwrap();
        assert!((direct - rescaled).abs() <= 1e-9 * direct.abs().max(1.0));
    }
}
