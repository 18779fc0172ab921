//! Near-extremal test functions and Carleson weights on the dyadic tree.
//!
//! The scale-`n` extremizer for the anchor `(x1, x2)` takes the value
//! `c_n·x1` on `J = [0, 2^{−n}]`, a `d_n`-scaled copy of itself on
//! `[1/2, 1]`, and a full copy on each `[2^{−k}, 2^{−k+1}]` for `k = 2..n`.
//! The constants `(c_n, d_n)` solve the two-moment system
//!
//! ```text
//! β·c + (1/2 − β) + d/2 = 1,      β·c²·s + (1/2 − β) + d²/2 = 1,
//! ```
//!
//! with `β = 2^{−n}` and `s = x1²/x2`, i.e. the quadratic
//! `(s + 2β)c² − (2 + 4β)c + (1 + 2β) = 0` with the root tending to
//! `(1 − √(1−s))/s`. Each copy rooted at a node `σ` carries the weight
//! `α_σ = |σ|·2^{−n}`; the weighted copies tile the interval, so the packing
//! bound `Σ_{ℓ⊆I} α_ℓ ≤ |I|` holds with equality in the limit and the full
//! embedding sum collapses to the closed form `Σ ⟨φ⟩²α = x2/c_n²`.
//!
//! Explicit leaf materialization is capped at depth [`MAX_EXPLICIT_DEPTH`];
//! the number of copies grows like `2^depth`, so deep truncations are summed
//! through the depth-indexed recursion in [`truncated_sum`] and the infinite
//! construction through the closed form in [`self_similar_sum`].

use std::collections::BTreeMap;

use crate::cet_bellman::solve_cubic;
use crate::domain::{cet_contains, ratio_s, rescale_to_unit, Branch, CetPoint, Exponent, Window};
use crate::foliation::recover_parameters;
use crate::{Error, Result};

/// Largest depth at which leaf arrays are materialized (`2^depth` doubles).
pub const MAX_EXPLICIT_DEPTH: u32 = 22;

/// A vertex of the dyadic tree: the interval
/// `[index·2^{−depth}, (index+1)·2^{−depth}]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct DyadicNode {
    pub depth: u32,
    pub index: u64,
}

impl DyadicNode {
    pub fn new(depth: u32, index: u64) -> Result<Self> {
        if depth > 63 || index >= 1u64 << depth {
            return Err(Error::InvalidParameter(format!(
                "dyadic node requires index < 2^depth, got depth = {depth}, index = {index}"
            )));
        }
        Ok(DyadicNode { depth, index })
    }

    pub fn root() -> Self {
        DyadicNode { depth: 0, index: 0 }
    }

    pub fn measure(&self) -> f64 {
        (-(self.depth as f64)).exp2()
    }

    pub fn left(&self) -> Self {
        DyadicNode { depth: self.depth + 1, index: 2 * self.index }
    }

    pub fn right(&self) -> Self {
        DyadicNode { depth: self.depth + 1, index: 2 * self.index + 1 }
    }
}

/// Compensated (Kahan) summation, so Green's-identity checks are limited by
/// the data and not by the accumulation order.
fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

/// A function constant on the leaves of depth `depth`, stored left-to-right.
#[derive(Clone, Debug)]
pub struct StepFunction {
    depth: u32,
    values: Vec<f64>,
}

impl StepFunction {
    pub fn new(depth: u32, values: Vec<f64>) -> Result<Self> {
        if depth > MAX_EXPLICIT_DEPTH {
            return Err(Error::DepthTooLarge(depth, MAX_EXPLICIT_DEPTH));
        }
        if values.len() != 1usize << depth {
            return Err(Error::InvalidParameter(format!(
                "step function at depth {depth} needs {} values, got {}",
                1usize << depth,
                values.len()
            )));
        }
        Ok(StepFunction { depth, values })
    }

    pub fn constant(depth: u32, value: f64) -> Result<Self> {
        StepFunction::new(depth, vec![value; 1usize << depth])
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn leaf_range(&self, node: DyadicNode) -> (usize, usize) {
        let shift = self.depth - node.depth;
        let lo = (node.index as usize) << shift;
        (lo, lo + (1usize << shift))
    }

    /// Exact dyadic average over a node.
    pub fn average(&self, node: DyadicNode) -> Result<f64> {
        if node.depth > self.depth {
            return Err(Error::InvalidParameter(format!(
                "node depth {} exceeds function depth {}",
                node.depth, self.depth
            )));
        }
        let (lo, hi) = self.leaf_range(node);
        Ok(kahan_sum(self.values[lo..hi].iter().copied()) / (hi - lo) as f64)
    }

    /// Mean and second moment over the whole interval.
    pub fn moments(&self) -> (f64, f64) {
        let n = self.values.len() as f64;
        let mean = kahan_sum(self.values.iter().copied()) / n;
        let second = kahan_sum(self.values.iter().map(|v| v * v)) / n;
        (mean, second)
    }
}

/// Sparse Carleson weights `α`. Every weight is an exact dyadic rational
/// `2^{−exp}`, so the packing bound is checked in integer arithmetic.
#[derive(Clone, Debug, Default)]
pub struct CarlesonWeights {
    map: BTreeMap<(u32, u64), u32>,
}

impl CarlesonWeights {
    pub fn new() -> Self {
        CarlesonWeights::default()
    }

    pub fn insert(&mut self, node: DyadicNode, exp: u32) {
        self.map.insert((node.depth, node.index), exp);
    }

    pub fn alpha(&self, node: DyadicNode) -> f64 {
        self.map
            .get(&(node.depth, node.index))
            .map_or(0.0, |&e| (-(e as f64)).exp2())
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Iterates `(node, exponent)` in depth-then-index order.
    pub fn iter(&self) -> impl Iterator<Item = (DyadicNode, u32)> + '_ {
        self.map
            .iter()
            .map(|(&(depth, index), &exp)| (DyadicNode { depth, index }, exp))
    }

    pub fn total_mass(&self) -> f64 {
        kahan_sum(self.map.values().map(|&e| (-(e as f64)).exp2()))
    }

    /// Verifies `Σ_{ℓ⊆I} α_ℓ ≤ |I|` for every node, exactly: all masses are
    /// expressed in integer units of the smallest weight present.
    pub fn packing_exact(&self) -> bool {
        let Some(&emax) = self.map.values().max() else {
            return true;
        };
        // Subtree masses in units of 2^{−emax}, accumulated bottom-up.
        let mut acc: BTreeMap<(u32, u64), u128> = BTreeMap::new();
        for (&(d, i), &e) in &self.map {
            debug_assert!(e <= emax);
            *acc.entry((d, i)).or_default() += 1u128 << (emax - e);
        }
        let mut depth = acc.keys().map(|k| k.0).max().unwrap();
        loop {
            let level: Vec<((u32, u64), u128)> = acc
                .range((depth, 0)..=(depth, u64::MAX))
                .map(|(&k, &v)| (k, v))
                .collect();
            for ((d, i), units) in level {
                if d > emax || units > 1u128 << (emax - d) {
                    return false;
                }
                if d > 0 {
                    *acc.entry((d - 1, i / 2)).or_default() += units;
                }
            }
            if depth == 0 {
                return true;
            }
            depth -= 1;
        }
    }
}

/// The resolved parameters of one construction.
#[derive(Clone, Copy, Debug)]
pub struct ExtremalPlan {
    /// Construction scale (`β = 2^{−n}`).
    pub n: u32,
    pub c: f64,
    pub d: f64,
    /// Truncation depth of the materialized tree.
    pub depth: u32,
}

fn check_scale(n: u32) -> Result<()> {
    if n == 0 || n > 60 {
        return Err(Error::InvalidParameter(format!(
            "construction scale requires 1 <= n <= 60, got {n}"
        )));
    }
    Ok(())
}

/// Solves the two-moment system for `(c_n, d_n)` at ratio `s = x1²/x2`.
pub fn solve_cn_dn(s: f64, n: u32) -> Result<(f64, f64)> {
    check_scale(n)?;
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "moment ratio requires 0 < s <= 1, got s = {s}"
        )));
    }
    if s == 1.0 {
        return Ok((1.0, 1.0));
    }
    let beta = (-(n as f64)).exp2();
    // (s + 2β)c² − (2 + 4β)c + (1 + 2β) = 0; the discriminant
    // (1 + 2β)(1 − s) is positive for s < 1, so the root always exists.
    let disc = (1.0 + 2.0 * beta) * (1.0 - s);
    let c = ((1.0 + 2.0 * beta) - disc.sqrt()) / (s + 2.0 * beta);
    let d = 1.0 + 2.0 * beta * (1.0 - c);
    Ok((c, d))
}

fn check_anchor(x1: f64, x2: f64) -> Result<f64> {
    if x1 == 0.0 {
        return Err(Error::InvalidParameter(
            "anchor requires x1 != 0; use a small ratio s instead".into(),
        ));
    }
    if !(x2 > 0.0) || x1 * x1 > x2 * (1.0 + 1e-12) {
        return Err(Error::OutOfDomain(format!(
            "anchor requires x1² <= x2, got x1 = {x1}, x2 = {x2}"
        )));
    }
    Ok((x1 * x1 / x2).min(1.0))
}

/// Materializes the scale-`n` extremizer for the anchor `(x1, x2)` on the
/// depth-`depth` tree, together with its Carleson weights.
///
/// Copies whose own `J`-interval would fall below the truncation depth are
/// flattened to their mean, so `⟨φ⟩ = x1` exactly while `⟨φ²⟩` undershoots
/// `x2` by the truncated tail mass.
pub fn build_extremal(
    x1: f64,
    x2: f64,
    n: u32,
    depth: u32,
) -> Result<(StepFunction, CarlesonWeights)> {
    let s = check_anchor(x1, x2)?;
    check_scale(n)?;
    if depth < 2 * n {
        return Err(Error::DepthTooSmall { depth, n });
    }
    if depth > MAX_EXPLICIT_DEPTH {
        return Err(Error::DepthTooLarge(depth, MAX_EXPLICIT_DEPTH));
    }
    let (c, d) = solve_cn_dn(s, n)?;
    let mut values = vec![0.0f64; 1usize << depth];
    let mut alpha = CarlesonWeights::new();
    // Explicit stack of (node depth, node index, copy scale λ).
    let mut stack: Vec<(u32, u64, f64)> = vec![(0, 0, 1.0)];
    while let Some((e, i, lam)) = stack.pop() {
        if e + n > depth {
            // Truncated copy: flatten to its exact mean.
            let shift = depth - e;
            let lo = (i as usize) << shift;
            values[lo..lo + (1usize << shift)].fill(lam * x1);
            continue;
        }
        alpha.insert(DyadicNode { depth: e, index: i }, e + n);
        // J-interval: the leftmost depth-(e+n) descendant, value c·λ·x1.
        let shift = depth - e - n;
        let lo = ((i << n) as usize) << shift;
        values[lo..lo + (1usize << shift)].fill(c * lam * x1);
        // I_k = left^{k−1}·right carries a copy at scale λ (d·λ for k = 1).
        for k in 1..=n {
            let scale = if k == 1 { lam * d } else { lam };
            stack.push((e + k, (i << k) | 1, scale));
        }
    }
    Ok((StepFunction { depth, values }, alpha))
}

/// The embedding sum `Σ ⟨φ⟩²_σ · α_σ` over all weighted nodes.
pub fn carleson_sum(phi: &StepFunction, alpha: &CarlesonWeights) -> Result<f64> {
    // Pairwise-summation pyramid: node sums carry only O(log) rounding.
    let mut pyramid: Vec<Vec<f64>> = Vec::with_capacity(phi.depth as usize + 1);
    pyramid.push(phi.values.clone());
    for _ in 0..phi.depth {
        let prev = pyramid.last().unwrap();
        let next: Vec<f64> = prev.chunks_exact(2).map(|c| c[0] + c[1]).collect();
        pyramid.push(next);
    }
    pyramid.reverse(); // pyramid[e] = leaf sums per depth-e node
    let mut terms = Vec::with_capacity(alpha.len());
    for (node, exp) in alpha.iter() {
        if node.depth > phi.depth {
            return Err(Error::InvalidParameter(format!(
                "weight at depth {} below function depth {}",
                node.depth, phi.depth
            )));
        }
        let count = ((phi.depth - node.depth) as f64).exp2();
        let avg = pyramid[node.depth as usize][node.index as usize] / count;
        terms.push(avg * avg * (-(exp as f64)).exp2());
    }
    Ok(kahan_sum(terms.into_iter()))
}

/// The exact infinite-generation embedding sum of the scale-`n` construction:
/// `Σ ⟨φ⟩²α = x2/c_n²`, the value the truncated sums increase toward.
pub fn self_similar_sum(x1: f64, x2: f64, n: u32) -> Result<f64> {
    let s = check_anchor(x1, x2)?;
    let (c, _) = solve_cn_dn(s, n)?;
    Ok(x2 / (c * c))
}

/// The embedding sum of the depth-`depth` truncation, computed by the
/// depth-indexed recursion `t(e) = (d²/2)·t(e−1) + Σ_{k=2..n} 2^{−k}·t(e−k)`
/// over copy depths, without materializing the tree. Agrees with
/// [`carleson_sum`] of [`build_extremal`] wherever the latter is feasible.
pub fn truncated_sum(x1: f64, x2: f64, n: u32, depth: u32) -> Result<f64> {
    let s = check_anchor(x1, x2)?;
    check_scale(n)?;
    if depth < 2 * n {
        return Err(Error::DepthTooSmall { depth, n });
    }
    let (_, d) = solve_cn_dn(s, n)?;
    let top = (depth - n) as usize;
    // t(e) = Σ_{copies at depth e} λ²·2^{−e}.
    let mut t = vec![0.0f64; top + 1];
    t[0] = 1.0;
    for e in 1..=top {
        let mut v = 0.5 * d * d * t[e - 1];
        for k in 2..=(n as usize).min(e) {
            v += (-(k as f64)).exp2() * t[e - k];
        }
        t[e] = v;
    }
    let beta = (-(n as f64)).exp2();
    Ok(x1 * x1 * beta * kahan_sum(t.into_iter()))
}

/// A real function on every tree node down to depth `depth`.
#[derive(Clone, Debug)]
pub struct TreeFunction {
    depth: u32,
    levels: Vec<Vec<f64>>,
}

impl TreeFunction {
    pub fn new(levels: Vec<Vec<f64>>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidParameter("tree function needs a root level".into()));
        }
        for (e, level) in levels.iter().enumerate() {
            if level.len() != 1usize << e {
                return Err(Error::InvalidParameter(format!(
                    "level {e} needs {} values, got {}",
                    1usize << e,
                    level.len()
                )));
            }
        }
        Ok(TreeFunction { depth: levels.len() as u32 - 1, levels })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn value(&self, node: DyadicNode) -> f64 {
        self.levels[node.depth as usize][node.index as usize]
    }

    /// Discrete Laplacian `Δf(σ) = f(σ) − ½(f(σ⁺) + f(σ⁻))` at an internal node.
    pub fn laplacian(&self, node: DyadicNode) -> f64 {
        let children = &self.levels[node.depth as usize + 1];
        self.value(node)
            - 0.5 * (children[2 * node.index as usize] + children[2 * node.index as usize + 1])
    }
}

/// Green's-formula residual on the finite tree:
///
/// ```text
/// gap = f(root) − Σ_leaves 2^{−D}·boundary − Σ_internal 2^{−|σ|}·Δf(σ).
/// ```
///
/// With `boundary` equal to `f`'s own deepest level the telescoping identity
/// makes the gap vanish; with liminf-style boundary values below the leaf
/// values the gap is nonnegative. Requires `Δf ≥ −1e−12` everywhere.
pub fn greens_gap(f: &TreeFunction, leaf_boundary: &[f64]) -> Result<f64> {
    let d = f.depth;
    if leaf_boundary.len() != 1usize << d {
        return Err(Error::InvalidParameter(format!(
            "boundary needs {} values, got {}",
            1usize << d,
            leaf_boundary.len()
        )));
    }
    let mut laplacians = Vec::new();
    for e in 0..d {
        let weight = (-(e as f64)).exp2();
        for i in 0..1u64 << e {
            let lap = f.laplacian(DyadicNode { depth: e, index: i });
            if lap < -1e-12 {
                return Err(Error::NotSuperharmonic { depth: e, index: i });
            }
            laplacians.push(weight * lap);
        }
    }
    let leaf_weight = (-(d as f64)).exp2();
    let boundary = kahan_sum(leaf_boundary.iter().map(|&v| leaf_weight * v));
    let internal = kahan_sum(laplacians.into_iter());
    Ok(f.value(DyadicNode::root()) - boundary - internal)
}

/// Box masses `M(σ) = Σ_{ℓ⊆σ} α_ℓ / |σ|` for all nodes down to `depth`,
/// returned level by level.
pub fn box_masses(alpha: &CarlesonWeights, depth: u32) -> Result<Vec<Vec<f64>>> {
    if depth > MAX_EXPLICIT_DEPTH {
        return Err(Error::DepthTooLarge(depth, MAX_EXPLICIT_DEPTH));
    }
    // Absolute subtree masses, bottom-up.
    let mut levels: Vec<Vec<f64>> = (0..=depth).map(|e| vec![0.0; 1usize << e]).collect();
    for (node, exp) in alpha.iter() {
        if node.depth > depth {
            return Err(Error::InvalidParameter(format!(
                "weight at depth {} below tree depth {depth}",
                node.depth
            )));
        }
        levels[node.depth as usize][node.index as usize] += (-(exp as f64)).exp2();
    }
    for e in (1..=depth as usize).rev() {
        for i in 0..levels[e].len() {
            let add = levels[e][i];
            levels[e - 1][i / 2] += add;
        }
    }
    for (e, level) in levels.iter_mut().enumerate() {
        let scale = (e as f64).exp2();
        for v in level.iter_mut() {
            *v *= scale;
        }
    }
    Ok(levels)
}

/// Splits the interval into `2^k` slots and fills a `θ_k`-fraction of them
/// with scaled copies of the upper-lid extremizer at the line's lid trace
/// `ζ`, the rest with the constant bottom-anchor value `ξ1`. Here
/// `θ = (x3 − m)/(M − m)` is the point's convex weight along its extremal
/// line and `θ_k` its nearest depth-`k` dyadic rational.
///
/// The copies are truncated at depth `2n`, so the whole tree has depth
/// `k + 2n` and must stay within [`MAX_EXPLICIT_DEPTH`]; deep mixes are
/// summed analytically by [`mixed_sum`].
pub fn mix_along_line(
    pt: CetPoint,
    w: Window,
    n: u32,
    k: u32,
) -> Result<(StepFunction, CarlesonWeights)> {
    check_scale(n)?;
    if !cet_contains(pt, w, Exponent::two()) {
        return Err(Error::OutOfDomain(format!("{pt:?} outside the window {w:?}")));
    }
    let depth = k + 2 * n;
    if depth > MAX_EXPLICIT_DEPTH {
        return Err(Error::DepthTooLarge(depth, MAX_EXPLICIT_DEPTH));
    }
    let unit = rescale_to_unit(pt, w);
    let theta = unit.x3;
    let slots = 1u64 << k;
    let filled = (theta * slots as f64).round() as u64;
    let frame = recover_parameters(unit, Window::unit(), Branch::Plus)?;

    let mut values = vec![frame.xi1; 1usize << depth];
    let mut alpha = CarlesonWeights::new();
    if filled > 0 {
        let (sub_phi, sub_alpha) = build_extremal(frame.zeta1, frame.zeta2, n, 2 * n)?;
        let span = 1usize << (2 * n);
        for slot in 0..filled {
            let base = slot as usize * span;
            values[base..base + span].copy_from_slice(sub_phi.values());
            for (node, exp) in sub_alpha.iter() {
                alpha.insert(
                    DyadicNode {
                        depth: node.depth + k,
                        index: (slot << node.depth) + node.index,
                    },
                    exp + k,
                );
            }
        }
    }
    Ok((StepFunction { depth, values }, alpha))
}

/// The analytic embedding sum of the depth-`k` mix at scale `n`: the filled
/// fraction `θ_k` of upper-lid copies contributes `θ_k·ζ2/c_n²` (scaled by
/// the window width) and the lower capacity reserve contributes `m·x2`.
pub fn mixed_sum(pt: CetPoint, w: Window, n: u32, k: u32) -> Result<f64> {
    check_scale(n)?;
    if !cet_contains(pt, w, Exponent::two()) {
        return Err(Error::OutOfDomain(format!("{pt:?} outside the window {w:?}")));
    }
    let unit = rescale_to_unit(pt, w);
    let theta_k = (unit.x3 * (k as f64).exp2()).round() * (-(k as f64)).exp2();
    if theta_k == 0.0 {
        return Ok(w.lower * pt.x2);
    }
    // ζ from the line through the point; the cubic solve needs x2 > 0.
    let s = ratio_s(unit, Exponent::two())?;
    let a = solve_cubic(s, unit.x3, Window::unit(), Branch::Plus)?.a;
    let eta2 = 1.0 - 2.0 * a * (1.0 - unit.x3);
    let eta4 = 1.0 - 4.0 * a * (1.0 - unit.x3);
    let zeta1 = unit.x1 / eta2;
    let zeta2 = unit.x2 / eta4;
    let lid = if zeta1 == 0.0 {
        // Vertical line over x1 = 0: the lid sum degenerates to 4·x2.
        4.0 * zeta2
    } else {
        self_similar_sum(zeta1, zeta2, n)?
    };
    Ok(w.width() * theta_k * lid + w.lower * pt.x2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cet_bellman::eval_bmax;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    #[test]
    fn cn_dn_examples() {
        for n in [1, 4, 16, 40] {
            assert_eq!(solve_cn_dn(1.0, n).unwrap(), (1.0, 1.0));
        }
        // n → ∞ limit at s = 0.5 is 2 − √2.
        let (c40, _) = solve_cn_dn(0.5, 40).unwrap();
        assert!((c40 - (2.0 - SQRT2)).abs() < 1e-10, "c40 = {c40}");
        let (c16, d16) = solve_cn_dn(0.5, 16).unwrap();
        let beta = 2.0f64.powi(-16);
        let residual = 0.5 * c16 * c16 - 2.0 * c16 + 1.0 + 2.0 * beta * (1.0 - c16) * (1.0 - c16);
        assert!(residual.abs() < 1e-12, "quadratic residual {residual}");
        assert!((c16 - (2.0 - SQRT2)).abs() < 1e-3);
        // The two moment equations themselves.
        let half = 0.5 - beta;
        assert!((beta * c16 + half + d16 / 2.0 - 1.0).abs() < 1e-12);
        assert!((beta * c16 * c16 * 0.5 + half + d16 * d16 / 2.0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_extremizer() {
        let (phi, alpha) = build_extremal(1.0, 1.0, 4, 12).unwrap();
        assert!(phi.values().iter().all(|&v| v == 1.0));
        assert!(alpha.packing_exact());
        let sum = carleson_sum(&phi, &alpha).unwrap();
        assert!(sum <= 1.0 + 1e-12 && sum > 0.0, "sum = {sum}");
        assert!((sum - alpha.total_mass()).abs() < 1e-12);
        assert!((sum - truncated_sum(1.0, 1.0, 4, 12).unwrap()).abs() < 1e-12);
        // The infinite-generation sum hits the constant target exactly.
        assert_eq!(self_similar_sum(1.0, 1.0, 4).unwrap(), 1.0);
    }

    #[test]
    fn moments_and_packing() {
        let (phi, alpha) = build_extremal(1.0, 2.0, 4, 14).unwrap();
        let (mean, second) = phi.moments();
        assert!((mean - 1.0).abs() < 1e-12, "mean = {mean}");
        assert!(second <= 2.0 + 1e-12 && second > 1.0, "second = {second}");
        assert!(alpha.packing_exact());
        // Negative anchors mirror through the sign of x1.
        let (phi_neg, _) = build_extremal(-1.0, 2.0, 4, 14).unwrap();
        let (mean_neg, second_neg) = phi_neg.moments();
        assert!((mean_neg + 1.0).abs() < 1e-12);
        assert!((second_neg - second).abs() < 1e-12);
    }

    #[test]
    fn explicit_sum_matches_recursion() {
        for (x1, x2, n, d) in [(1.0, 2.0, 4u32, 14u32), (0.5, 1.0, 5, 13), (1.0, 1.5, 3, 12)] {
            let (phi, alpha) = build_extremal(x1, x2, n, d).unwrap();
            let explicit = carleson_sum(&phi, &alpha).unwrap();
            let recursion = truncated_sum(x1, x2, n, d).unwrap();
            assert!(
                (explicit - recursion).abs() <= 1e-12 * explicit.max(1.0),
                "explicit {explicit} vs recursion {recursion}"
            );
        }
    }

    #[test]
    fn copy_values_match_scaled_averages() {
        // On each weighted node the J-interval value equals c·(node average).
        let (x1, x2, n) = (1.0, 2.0, 4u32);
        let (c, _) = solve_cn_dn(x1 * x1 / x2, n).unwrap();
        let (phi, alpha) = build_extremal(x1, x2, n, 14).unwrap();
        for (node, _) in alpha.iter() {
            let avg = phi.average(node).unwrap();
            let j = DyadicNode { depth: node.depth + n, index: node.index << n };
            let j_val = phi.average(j).unwrap();
            assert!((j_val - c * avg).abs() <= 1e-12 * avg.abs().max(1.0));
        }
    }

    #[test]
    fn self_similar_limit() {
        let target = (SQRT2 + 1.0) * (SQRT2 + 1.0);
        let s16 = self_similar_sum(1.0, 2.0, 16).unwrap();
        assert!(s16 >= 0.98 * target && s16 <= target + 1e-9, "s16 = {s16}");
        let sums: Vec<f64> = [8, 12, 16]
            .iter()
            .map(|&n| self_similar_sum(1.0, 2.0, n).unwrap())
            .collect();
        assert!(sums[0] <= sums[1] + 1e-9 && sums[1] <= sums[2] + 1e-9, "{sums:?}");
    }

    #[test]
    fn bellman_dominates_built_sum() {
        let (phi, alpha) = build_extremal(1.0, 2.0, 4, 14).unwrap();
        let sum = carleson_sum(&phi, &alpha).unwrap();
        let (mean, second) = phi.moments();
        let pt = CetPoint::new(mean, second, alpha.total_mass());
        let bound = eval_bmax(pt, Window::unit()).unwrap().value;
        assert!(sum <= bound + 1e-9 * bound.max(1.0), "sum {sum} > bound {bound}");
    }

    #[test]
    fn greens_identity() {
        // Constant tree: gap exactly zero.
        let levels: Vec<Vec<f64>> = (0..=8).map(|e| vec![3.5; 1usize << e]).collect();
        let f = TreeFunction::new(levels).unwrap();
        assert_eq!(greens_gap(&f, &vec![3.5; 256]).unwrap(), 0.0);

        // f(σ) = 2^{−|σ|}: Δf(σ) = 2^{−(|σ|+1)}, telescoping to the root value.
        let d = 20u32;
        let levels: Vec<Vec<f64>> =
            (0..=d).map(|e| vec![(-(e as f64)).exp2(); 1usize << e]).collect();
        let boundary = levels[d as usize].clone();
        let f = TreeFunction::new(levels).unwrap();
        let gap = greens_gap(&f, &boundary).unwrap();
        assert!(gap.abs() <= 1e-12, "gap = {gap}");
    }

    #[test]
    fn greens_rejects_subharmonic() {
        let levels = vec![vec![0.0], vec![1.0, 1.0]];
        let f = TreeFunction::new(levels).unwrap();
        assert!(matches!(
            greens_gap(&f, &[1.0, 1.0]),
            Err(Error::NotSuperharmonic { depth: 0, index: 0 })
        ));
    }

    #[test]
    fn proof_chain_on_built_construction() {
        // f(σ) = B(⟨φ⟩_σ, ⟨φ²⟩_σ, M(σ)) is superharmonic with
        // Δf(σ) ≥ ⟨φ⟩²·α_σ/|σ| at every node.
        let depth = 12u32;
        let (phi, alpha) = build_extremal(1.0, 2.0, 4, depth).unwrap();
        let masses = box_masses(&alpha, depth).unwrap();
        let w = Window::unit();
        let mut levels = Vec::new();
        for e in 0..=depth {
            let mut level = Vec::with_capacity(1usize << e);
            for i in 0..1u64 << e {
                let node = DyadicNode { depth: e, index: i };
                let m1 = phi.average(node).unwrap();
                let (lo, hi) = phi.leaf_range(node);
                let m2 = kahan_sum(phi.values()[lo..hi].iter().map(|v| v * v))
                    / (hi - lo) as f64;
                let x3 = masses[e as usize][i as usize].min(1.0);
                level.push(eval_bmax(CetPoint::new(m1, m2, x3), w).unwrap().value);
            }
            levels.push(level);
        }
        let boundary = levels[depth as usize].clone();
        let f = TreeFunction::new(levels).unwrap();
        let gap = greens_gap(&f, &boundary).unwrap();
        assert!(gap.abs() <= 1e-12, "finite-depth identity gap = {gap}");
        for (node, exp) in alpha.iter() {
            let avg = phi.average(node).unwrap();
            let weight = (-(exp as f64)).exp2() * (node.depth as f64).exp2();
            let lap = f.laplacian(node);
            assert!(
                lap >= avg * avg * weight - 1e-9,
                "Δf = {lap} below {} at {node:?}",
                avg * avg * weight
            );
        }
    }

    #[test]
    fn mix_moments_and_sum() {
        let pt = CetPoint::new(1.0, 2.0, 0.5);
        let w = Window::unit();
        let (n, k) = (5u32, 8u32);
        let (phi, alpha) = mix_along_line(pt, w, n, k).unwrap();
        assert!(alpha.packing_exact());
        let (mean, _) = phi.moments();
        assert!((mean - pt.x1).abs() <= 1e-10, "mean = {mean}");
        // The explicit sum equals the θ_k-scaled truncated lid sum.
        let frame = recover_parameters(pt, w, Branch::Plus).unwrap();
        let lid = truncated_sum(frame.zeta1, frame.zeta2, n, 2 * n).unwrap();
        let explicit = carleson_sum(&phi, &alpha).unwrap();
        assert!((explicit - 0.5 * lid).abs() <= 1e-12 * explicit.max(1.0));
    }

    #[test]
    fn mixed_sum_approaches_bellman() {
        let w = Window::unit();
        let pt = CetPoint::new(1.0, 2.0, 0.5);
        let target = eval_bmax(pt, w).unwrap().value;
        let got = mixed_sum(pt, w, 12, 10).unwrap();
        assert!(got <= target + 1e-9 && got >= 0.97 * target, "got {got}, target {target}");
        // θ = 1 reduces to the lid sum; θ = 0 to the m·x2 reserve.
        let lid = mixed_sum(CetPoint::new(1.0, 2.0, 1.0), w, 16, 10).unwrap();
        assert!((lid - self_similar_sum(1.0, 2.0, 16).unwrap()).abs() < 1e-12);
        assert_eq!(mixed_sum(CetPoint::new(1.0, 2.0, 0.0), w, 16, 10).unwrap(), 0.0);
    }

    #[test]
    fn depth_guards() {
        assert!(matches!(
            build_extremal(1.0, 2.0, 8, 10),
            Err(Error::DepthTooSmall { depth: 10, n: 8 })
        ));
        assert!(matches!(
            build_extremal(1.0, 2.0, 12, 48),
            Err(Error::DepthTooLarge(48, MAX_EXPLICIT_DEPTH))
        ));
    }
}
