//! Bellman domains, capacity windows, exponents, and the elementary
//! predicates shared by every evaluator.
//!
//! The Carleson-embedding domain for a window `(m, M)` and exponent `p` is
//!
//! ```text
//! Ω = { (x1, x2, x3) : |x1|^p <= x2,  m <= x3 <= M }
//! ```
//!
//! and the John–Nirenberg domain for a BMO bound `ε` is
//!
//! ```text
//! Ω_JNI = { (x1, x2) : x1² <= x2 <= x1² + ε² }.
//! ```

use crate::{Error, Result};

/// Absolute slack absorbed by every domain-membership inequality, so that
/// points produced by round-off on a boundary still count as admissible.
pub const DOMAIN_SLACK: f64 = 1e-12;

/// Capacity window `(m, M)` of the Carleson condition
/// `m|J| <= μ(J) + Σ α_ℓ <= M|J|`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window {
    /// Lower capacity density `m >= 0`.
    pub lower: f64,
    /// Upper capacity density `M > m`.
    pub upper: f64,
}

impl Window {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && 0.0 <= lower && lower < upper) {
            return Err(Error::InvalidParameter(format!(
                "window requires 0 <= m < M, got m = {lower}, M = {upper}"
            )));
        }
        Ok(Window { lower, upper })
    }

    /// The canonical unit window `(0, 1)`.
    pub fn unit() -> Self {
        Window { lower: 0.0, upper: 1.0 }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Integrability exponent `p` together with its dual `q = p/(p-1)`.
///
/// Only `p ∈ (1, 64]` is accepted: beyond that the powers appearing in the
/// branch brackets overflow doubles.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Exponent {
    p: f64,
    q: f64,
}

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 1.0 && p <= 64.0) {
            return Err(Error::InvalidParameter(format!(
                "exponent requires 1 < p <= 64, got p = {p}"
            )));
        }
        Ok(Exponent { p, q: p / (p - 1.0) })
    }

    /// The quadratic case `p = 2`, which all specialized evaluators use.
    pub fn two() -> Self {
        Exponent { p: 2.0, q: 2.0 }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn is_two(&self) -> bool {
        self.p == 2.0
    }
}

/// A point of the Carleson-embedding Bellman domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CetPoint {
    /// Mean of the test function.
    pub x1: f64,
    /// Mean of `|φ|^p` (nonnegative).
    pub x2: f64,
    /// Capacity density, confined to the ambient window.
    pub x3: f64,
}

impl CetPoint {
    pub fn new(x1: f64, x2: f64, x3: f64) -> Self {
        CetPoint { x1, x2, x3 }
    }
}

/// A point of the John–Nirenberg Bellman domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JniPoint {
    /// Mean of the test function.
    pub x1: f64,
    /// Mean of its square.
    pub x2: f64,
}

impl JniPoint {
    pub fn new(x1: f64, x2: f64) -> Self {
        JniPoint { x1, x2 }
    }
}

/// Parameters of the John–Nirenberg family: the BMO bound `ε` and the free
/// family parameter `δ ∈ [ε, 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JniParams {
    pub eps: f64,
    pub delta: f64,
}

impl JniParams {
    pub fn new(eps: f64, delta: f64) -> Result<Self> {
        if !(eps.is_finite() && 0.0 < eps && eps < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "requires 0 < eps < 1, got eps = {eps}"
            )));
        }
        if !(delta.is_finite() && eps <= delta && delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "requires eps <= delta < 1, got delta = {delta}"
            )));
        }
        Ok(JniParams { eps, delta })
    }
}

/// Root-branch selector for the characteristic-parameter equation.
///
/// `Plus` selects the root in `[0, 1/(4(M-m))]` (general `p`: in
/// `[0, (1/(pq(M-m)))^(q-1)]`), which builds the maximal Bellman function;
/// `Minus` selects the negative root, which builds the minimal one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

/// `|x|^p` computed as `exp(p·log|x|)`, with the removable value `0` at
/// `x = 0`. The `p = 2` case is specialized so the quadratic path stays
/// bit-for-bit canonical.
pub(crate) fn abs_pow(x: f64, p: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if p == 2.0 {
        x * x
    } else {
        (p * x.abs().ln()).exp()
    }
}

/// The ratio `s = |x1|^p / x2 ∈ [0, 1]` that drives the branch equation.
pub fn ratio_s(pt: CetPoint, exp: Exponent) -> Result<f64> {
    if pt.x2 == 0.0 {
        return Err(Error::DegeneratePoint);
    }
    let s = abs_pow(pt.x1, exp.p()) / pt.x2;
    if s > 1.0 + DOMAIN_SLACK {
        return Err(Error::OutOfDomain(format!(
            "|x1|^p/x2 = {s} exceeds 1"
        )));
    }
    Ok(s.min(1.0))
}

/// The capacity level `M − (M−m)·s^(1/(p−1))` above which the negative root
/// branch exists: `x3 > min_threshold` iff the minus branch is solvable.
pub fn min_threshold(pt: CetPoint, w: Window, exp: Exponent) -> Result<f64> {
    let s = ratio_s(pt, exp)?;
    let t = if exp.is_two() { s } else { abs_pow(s, 1.0 / (exp.p() - 1.0)) };
    Ok(w.upper - w.width() * t)
}

/// Affine change of the capacity coordinate onto the unit window:
/// `(x1, x2, x3) ↦ (x1, x2, (x3 − m)/(M − m))`.
pub fn rescale_to_unit(pt: CetPoint, w: Window) -> CetPoint {
    CetPoint::new(pt.x1, pt.x2, (pt.x3 - w.lower) / w.width())
}

/// Domain membership with the standard absolute slack.
pub fn cet_contains(pt: CetPoint, w: Window, exp: Exponent) -> bool {
    pt.x2 >= -DOMAIN_SLACK
        && abs_pow(pt.x1, exp.p()) <= pt.x2 + DOMAIN_SLACK
        && pt.x3 >= w.lower - DOMAIN_SLACK
        && pt.x3 <= w.upper + DOMAIN_SLACK
}

/// John–Nirenberg domain membership for the family parameter `δ`.
pub fn jni_contains(pt: JniPoint, delta: f64) -> bool {
    let gap = pt.x2 - pt.x1 * pt.x1;
    gap >= -DOMAIN_SLACK && gap <= delta * delta + DOMAIN_SLACK
}
