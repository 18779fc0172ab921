//! The John–Nirenberg Bellman family
//!
//! ```text
//! B(x1, x2; δ) = (e^{−δ}/(1 − δ)) · (1 − √(δ² − (x2 − x1²))) · e^{x1 + √(δ² − (x2 − x1²))}
//! ```
//!
//! on the parabolic strip `x1² <= x2 <= x1² + δ²`. The family satisfies
//! `B(x1, x1²) = e^{x1}` on the lower parabola, the homogeneity law
//! `B(x1 + t, x2 + 2x1t + t²) = e^t·B(x1, x2)`, and the degenerate
//! Monge–Ampère equation `det d²B = 0`: the function is affine along every
//! line tangent to the upper parabola `x2 = x1² + δ²`.

use crate::domain::{JniParams, JniPoint};
use crate::{Error, Result};

/// A line `x2 − 2a·x1 + a² − δ² = 0`, tangent to the upper parabola
/// `x2 = x1² + δ²` at `(a, a² + δ²)` and chord of the lower parabola between
/// `x1 = a − δ` and `x1 = a + δ`.
#[derive(Clone, Copy, Debug)]
pub struct JniTangentLine {
    /// Tangency abscissa.
    pub a: f64,
    pub delta: f64,
    /// Coefficients `(c2, c1, c0)` of `c2·x2 + c1·x1 + c0 = 0`.
    pub coeffs: (f64, f64, f64),
}

impl JniTangentLine {
    /// Signed residual of a point against the line equation.
    pub fn residual(&self, pt: JniPoint) -> f64 {
        let (c2, c1, c0) = self.coeffs;
        c2 * pt.x2 + c1 * pt.x1 + c0
    }

    /// The `x2`-value on the line above a given `x1`.
    pub fn x2_at(&self, x1: f64) -> f64 {
        2.0 * self.a * x1 - (self.a * self.a - self.delta * self.delta)
    }
}

/// Square-root term `√(δ² − (x2 − x1²))`, clamped at zero when within 1e−14
/// of the boundary to stabilize round-off.
fn root_term(pt: JniPoint, delta: f64) -> Result<f64> {
    let r = delta * delta - (pt.x2 - pt.x1 * pt.x1);
    if r < -1e-12 {
        return Err(Error::OutOfDomain(format!(
            "x2 − x1² = {} exceeds δ² = {}",
            pt.x2 - pt.x1 * pt.x1,
            delta * delta
        )));
    }
    Ok(if r < 1e-14 { 0.0 } else { r.sqrt() })
}

/// Tangency abscissa of the extremal line through a point:
/// `a = x1 + √(δ² − (x2 − x1²))` (the plus-sign solution).
pub fn jni_a(pt: JniPoint, delta: f64) -> Result<f64> {
    Ok(pt.x1 + root_term(pt, delta)?)
}

/// Evaluates the family member with parameter `δ = params.delta`.
pub fn eval_jni(pt: JniPoint, params: JniParams) -> Result<f64> {
    let delta = params.delta;
    if pt.x2 - pt.x1 * pt.x1 < -1e-12 {
        return Err(Error::OutOfDomain(format!(
            "x2 = {} below the parabola x1² = {}",
            pt.x2,
            pt.x1 * pt.x1
        )));
    }
    let u = root_term(pt, delta)?;
    Ok((-delta).exp() / (1.0 - delta) * (1.0 - u) * (pt.x1 + u).exp())
}

/// Analytic gradient of the family member; used by the finite-difference
/// Hessian. With `u = √(δ² − (x2 − x1²))` and `K = e^{−δ}/(1 − δ)`:
///
/// ```text
/// ∂B/∂x1 = K·e^{x1+u}·(1 − u − x1),   ∂B/∂x2 = K·e^{x1+u}/2.
/// ```
pub(crate) fn jni_gradient(pt: JniPoint, params: JniParams) -> Result<[f64; 2]> {
    let delta = params.delta;
    let u = root_term(pt, delta)?;
    if u < 1e-9 {
        // On the upper parabola the root term is not differentiable.
        return Err(Error::BoundaryGradient);
    }
    let k = (-delta).exp() / (1.0 - delta) * (pt.x1 + u).exp();
    Ok([k * (1.0 - u - pt.x1), 0.5 * k])
}

fn fd_step(coord: f64) -> f64 {
    (1e-5 * coord.abs()).max(1e-5)
}

/// Symmetrized finite-difference Hessian of the family member.
pub fn jni_hessian_fd(pt: JniPoint, params: JniParams) -> Result<[[f64; 2]; 2]> {
    let coords = [pt.x1, pt.x2];
    let mut h = [[0.0; 2]; 2];
    for i in 0..2 {
        let step = fd_step(coords[i]);
        let shift = |sign: f64| -> Result<[f64; 2]> {
            let mut c = coords;
            c[i] += sign * step;
            jni_gradient(JniPoint::new(c[0], c[1]), params)
        };
        let gp = shift(1.0)?;
        let gm = shift(-1.0)?;
        for j in 0..2 {
            h[i][j] = (gp[j] - gm[j]) / (2.0 * step);
        }
    }
    Ok([
        [h[0][0], 0.5 * (h[0][1] + h[1][0])],
        [0.5 * (h[0][1] + h[1][0]), h[1][1]],
    ])
}

/// Monge–Ampère residual: the determinant of the finite-difference Hessian,
/// which vanishes identically for the family (up to discretization noise of
/// order `1e−7·‖H‖²`).
pub fn jni_ma_residual(pt: JniPoint, params: JniParams) -> Result<f64> {
    let h = jni_hessian_fd(pt, params)?;
    Ok(h[0][0] * h[1][1] - h[0][1] * h[1][0])
}

/// The tangent line with abscissa `a` for the family parameter `δ`.
pub fn jni_tangent_line(a: f64, delta: f64) -> JniTangentLine {
    JniTangentLine {
        a,
        delta,
        coeffs: (1.0, -2.0 * a, a * a - delta * delta),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(eps: f64, delta: f64) -> JniParams {
        JniParams::new(eps, delta).unwrap()
    }

    #[test]
    fn jni_a_examples() {
        assert_eq!(jni_a(JniPoint::new(0.0, 0.0), 0.5).unwrap(), 0.5);
        assert!((jni_a(JniPoint::new(1.0, 1.0 + 0.25), 0.5).unwrap() - 1.0).abs() < 1e-15);
        let a = jni_a(JniPoint::new(0.3, 0.2), 0.4).unwrap();
        assert!((a - (0.3 + (0.16f64 - 0.11).sqrt())).abs() < 1e-12);
        assert!(jni_a(JniPoint::new(0.0, 1.0), 0.5).is_err());
    }

    #[test]
    fn eval_examples() {
        let p = params(0.5, 0.5);
        assert!((eval_jni(JniPoint::new(0.0, 0.0), p).unwrap() - 1.0).abs() < 1e-12);
        let v = eval_jni(JniPoint::new(0.0, 0.25), p).unwrap();
        assert!((v - (-0.5f64).exp() / 0.5).abs() < 1e-7, "v = {v}");
        let p = params(0.3, 0.3);
        let v = eval_jni(JniPoint::new(1.0, 1.0), p).unwrap();
        assert!((v - std::f64::consts::E).abs() < 1e-12);
    }

    #[test]
    fn boundary_is_exponential() {
        let p = params(0.4, 0.4);
        for i in -30..=30 {
            let x1 = i as f64 / 10.0;
            let v = eval_jni(JniPoint::new(x1, x1 * x1), p).unwrap();
            assert!((v - x1.exp()).abs() <= 1e-10 * x1.exp().max(1.0));
        }
    }

    #[test]
    fn homogeneity() {
        let p = params(0.4, 0.6);
        let (x1, x2) = (0.2, 0.25);
        let base = eval_jni(JniPoint::new(x1, x2), p).unwrap();
        for &t in &[-1.0, -0.3, 0.5, 2.0] {
            let shifted =
                eval_jni(JniPoint::new(x1 + t, x2 + 2.0 * x1 * t + t * t), p).unwrap();
            assert!((shifted - t.exp() * base).abs() <= 1e-9 * shifted.abs().max(1.0));
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = params(0.3, 0.5);
        let pt = JniPoint::new(0.2, 0.14);
        let g = jni_gradient(pt, p).unwrap();
        let h = 1e-6;
        let fd1 = (eval_jni(JniPoint::new(pt.x1 + h, pt.x2), p).unwrap()
            - eval_jni(JniPoint::new(pt.x1 - h, pt.x2), p).unwrap())
            / (2.0 * h);
        let fd2 = (eval_jni(JniPoint::new(pt.x1, pt.x2 + h), p).unwrap()
            - eval_jni(JniPoint::new(pt.x1, pt.x2 - h), p).unwrap())
            / (2.0 * h);
        assert!((g[0] - fd1).abs() < 1e-7 * g[0].abs().max(1.0), "{} vs {}", g[0], fd1);
        assert!((g[1] - fd2).abs() < 1e-7 * g[1].abs().max(1.0), "{} vs {}", g[1], fd2);
    }

    #[test]
    fn ma_residual_vanishes() {
        let p = params(0.3, 0.5);
        for pt in [JniPoint::new(0.0, 0.125), JniPoint::new(0.2, 0.1)] {
            let h = jni_hessian_fd(pt, p).unwrap();
            let norm = (h[0][0] * h[0][0]
                + 2.0 * h[0][1] * h[0][1]
                + h[1][1] * h[1][1])
                .sqrt();
            let det = jni_ma_residual(pt, p).unwrap();
            assert!(det.abs() <= 1e-7 * norm * norm, "det = {det}, |H| = {norm}");
        }
    }

    #[test]
    fn tangent_line_geometry() {
        let line = jni_tangent_line(0.0, 1.0);
        // Meets the lower parabola at x1 = ±δ.
        assert!(line.residual(JniPoint::new(1.0, 1.0)).abs() < 1e-15);
        assert!(line.residual(JniPoint::new(-1.0, 1.0)).abs() < 1e-15);

        let line = jni_tangent_line(0.7, 0.4);
        let tangency = JniPoint::new(0.7, 0.7 * 0.7 + 0.16);
        assert!(line.residual(tangency).abs() < 1e-15);
    }

    #[test]
    fn affine_along_tangent_lines() {
        let p = params(0.3, 0.3);
        let line = jni_tangent_line(0.5, 0.3);
        // Three collinear points on the affine half of the chord: with
        // u = √(δ² − gap) = a − x1 the exponentials cancel only for x1 <= a.
        let xs = [0.25, 0.35, 0.45];
        let vals: Vec<f64> = xs
            .iter()
            .map(|&x1| eval_jni(JniPoint::new(x1, line.x2_at(x1)), p).unwrap())
            .collect();
        let second_diff = vals[0] - 2.0 * vals[1] + vals[2];
        assert!(second_diff.abs() <= 1e-8, "second difference = {second_diff}");
    }
}
