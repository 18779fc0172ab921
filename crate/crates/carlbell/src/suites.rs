//! Seeded verification suites behind `carlbell verify`.
//!
//! Each suite draws random admissible points (rejection-free parametric
//! sampling from a `ChaCha8` stream) and checks one family of identities or
//! inequalities against its tolerance. Violations are reported as the ratio
//! `metric / tolerance`, so `worst_violation <= 1` is equivalent to
//! `failures == 0` regardless of the suite's internal tolerances.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cet_bellman::{
    det3, embedding_constant, eval_bmax, eval_bmax_rescaled, eval_bmin, frob3, gradient,
    hessian_fd, kernel_direction, main_inequality_gap, sym3_eigenvalues,
};
use crate::domain::{Branch, CetPoint, Exponent, JniParams, JniPoint, Window};
use crate::extremal_seq::{box_masses, build_extremal, greens_gap, DyadicNode, TreeFunction};
use crate::foliation::{extremal_line_point, recover_parameters, tangency_gap};
use crate::jni_bellman::{eval_jni, jni_hessian_fd, jni_ma_residual};
use crate::lp_bellman::eval_lp;
use crate::{Error, Result};

/// Outcome of one verification suite.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub suite: String,
    pub samples: u64,
    pub failures: u64,
    /// Largest ratio `metric / tolerance` seen; `<= 1` iff `failures == 0`.
    pub worst_violation: f64,
    pub seed: u64,
    pub elapsed_ms: u64,
}

/// All suite names accepted by [`run_suite`], in canonical order.
pub const SUITE_NAMES: &[&str] = &[
    "boundary",
    "homogeneity",
    "rescale",
    "concavity",
    "ma",
    "euler",
    "mibc",
    "foliation",
    "lp2",
    "greens",
];

/// Per-sample violation bookkeeping.
struct Checker {
    failures: u64,
    worst: f64,
    sample_failed: bool,
}

impl Checker {
    fn new() -> Self {
        Checker { failures: 0, worst: 0.0, sample_failed: false }
    }

    fn check(&mut self, metric: f64, tol: f64) {
        let ratio = if metric == 0.0 { 0.0 } else { metric / tol };
        if ratio > self.worst {
            self.worst = ratio;
        }
        if !(ratio <= 1.0) {
            self.sample_failed = true;
        }
    }

    fn end_sample(&mut self) {
        if self.sample_failed {
            self.failures += 1;
            self.sample_failed = false;
        }
    }
}

fn rand_window(rng: &mut ChaCha8Rng) -> Window {
    let m = rng.gen_range(0.0..2.0);
    let width = rng.gen_range(0.2..3.0);
    Window { lower: m, upper: m + width }
}

/// A strictly interior quadratic-domain point with margins in both the
/// moment ratio and the capacity coordinate.
fn rand_interior(rng: &mut ChaCha8Rng, w: Window) -> CetPoint {
    let s = rng.gen_range(0.1..0.9);
    let x1 = rng.gen_range(0.1..2.0);
    let x2 = x1 * x1 / s;
    let x3 = w.lower + w.width() * rng.gen_range(0.1..0.9);
    CetPoint::new(x1, x2, x3)
}

fn rand_jni(rng: &mut ChaCha8Rng) -> (JniPoint, JniParams) {
    let delta = rng.gen_range(0.2..0.8);
    let x1 = rng.gen_range(-2.0..2.0);
    let gap = delta * delta * rng.gen_range(0.05..0.95);
    (JniPoint::new(x1, x1 * x1 + gap), JniParams::new(delta, delta).unwrap())
}

fn suite_boundary(rng: &mut ChaCha8Rng, samples: u64, ck: &mut Checker) -> Result<()> {
    for _ in 0..samples {
        // Side boundary x2 = x1²: B_max = x3·x1².
        let w = rand_window(rng);
        let x1 = rng.gen_range(0.05..2.0);
        let x3 = w.lower + w.width() * rng.gen_range(0.0..=1.0);
        let b = eval_bmax(CetPoint::new(x1, x1 * x1, x3), w)?.value;
        ck.check((b - x1 * x1 * x3).abs(), 1e-10);

        // Upper lid of the unit window: the closed forms of both functions.
        let s = rng.gen_range(0.05..0.95);
        let x2 = x1 * x1 / s;
        let root = (x2 - x1 * x1).sqrt();
        let lid = CetPoint::new(x1, x2, 1.0);
        let bmax = eval_bmax(lid, Window::unit())?.value;
        let bmin = eval_bmin(lid, Window::unit())?.value;
        let plus = (x2.sqrt() + root) * (x2.sqrt() + root);
        let minus = (x2.sqrt() - root) * (x2.sqrt() - root);
        ck.check((bmax - plus).abs(), 1e-9 * plus.max(1.0));
        ck.check((bmin - minus).abs(), 1e-9 * plus.max(1.0));

        // Lower parabola of the John-Nirenberg strip: B = e^{x1}.
        let (_, params) = rand_jni(rng);
        let y1 = rng.gen_range(-3.0..3.0);
        let v = eval_jni(JniPoint::new(y1, y1 * y1), params)?;
        ck.check((v - y1.exp()).abs(), 1e-10 * y1.exp().max(1.0));
        ck.end_sample();
    }
    Ok(())
}

fn suite_homogeneity(rng: &mut ChaCha8Rng, samples: u64, ck: &mut Checker) -> Result<()> {
    for _ in 0..samples {
        let w = rand_window(rng);
        let pt = rand_interior(rng, w);
        let t = rng.gen_range(0.3..3.0);
        let b = eval_bmax(pt, w)?.value;
        let scaled = eval_bmax(CetPoint::new(t * pt.x1, t * t * pt.x2, pt.x3), w)?.value;
        ck.check((scaled - t * t * b).abs(), 1e-9 * scaled.abs().max(1.0));

        // Sign symmetry in x1.
        let flipped = eval_bmax(CetPoint::new(-pt.x1, pt.x2, pt.x3), w)?.value;
        ck.check((flipped - b).abs(), 1e-9 * b.abs().max(1.0));

        // John-Nirenberg shift homogeneity B(x1+t, ...) = e^t B(x1, ...).
        let (jpt, params) = rand_jni(rng);
        let shift = rng.gen_range(-1.0..1.0);
        let base = eval_jni(jpt, params)?;
        let moved = eval_jni(
            JniPoint::new(jpt.x1 + shift, jpt.x2 + 2.0 * jpt.x1 * shift + shift * shift),
            params,
        )?;
        ck.check((moved - shift.exp() * base).abs(), 1e-9 * moved.abs().max(1.0));

        // Degree-p homogeneity of the general-exponent function.
        let p = Exponent::new(rng.gen_range(1.3..4.0))?;
        let s = rng.gen_range(0.1..0.9);
        let lpt = CetPoint::new(pt.x1, crate::domain::abs_pow(pt.x1, p.p()) / s, pt.x3);
        let lb = eval_lp(lpt, w, p, Branch::Plus)?.value;
        let lscaled = eval_lp(
            CetPoint::new(t * lpt.x1, crate::domain::abs_pow(t, p.p()) * lpt.x2, lpt.x3),
            w,
            p,
            Branch::Plus,
        )?
        .value;
        ck.check(
            (lscaled - crate::domain::abs_pow(t, p.p()) * lb).abs(),
            1e-8 * lscaled.abs().max(1.0),
        );
        ck.end_sample();
    }
    Ok(())
}

fn suite_rescale(rng: &mut ChaCha8Rng, samples: u64, ck: &mut Checker) -> Result<()> {
    for _ in 0..samples {
        let w = rand_window(rng);
        let pt = rand_interior(rng, w);
        let direct = eval_bmax(pt, w)?.value;
        let rescaled = eval_bmax_rescaled(pt, w)?;
        ck.check((direct - rescaled).abs(), 1e-9 * direct.abs().max(1.0));
        // x1 = 0 column: the sharp constant 4(M−m) on top of the reserve.
        let axis = CetPoint::new(0.0, 1.0, pt.x3);
        let b = eval_bmax(axis, w)?.value;
        let expected = embedding_constant(w) + w.lower;
        ck.check((b - expected).abs(), 1e-9 * expected.max(1.0));
        ck.end_sample();
    }
    Ok(())
}

fn suite_concavity(rng: &mut ChaCha8Rng, samples: u64, ck: &mut Checker) -> Result<()> {
    for _ in 0..samples {
        let w = rand_window(rng);
        let pt = rand_interior(rng, w);
        let h = hessian_fd(pt, w, Branch::Plus)?;
        let scale = frob3(&h).max(1.0);
        let eig = sym3_eigenvalues(&h);
        ck.check(eig[2].max(0.0), 1e-6 * scale);

        // B_min is convex where its negative branch is active.
        let s = (pt.x1 * pt.x1 / pt.x2).min(1.0);
        let threshold = w.upper - w.width() * s;
        if pt.x3 > threshold + 0.05 * w.width() {
            let hm = hessian_fd(pt, w, Branch::Minus)?;
            let em = sym3_eigenvalues(&hm);
            ck.check((-em[0]).max(0.0), 1e-6 * frob3(&hm).max(1.0));
        }

        let (jpt, params) = rand_jni(rng);
        let jh = jni_hessian_fd(jpt, params)?;
        let jnorm = (jh[0][0] * jh[0][0] + 2.0 * jh[0][1] * jh[0][1] + jh[1][1] * jh[1][1])
            .sqrt()
            .max(1e-12);
        let tr = jh[0][0] + jh[1][1];
        let max_eig = 0.5
            * (tr + ((jh[0][0] - jh[1][1]).powi(2) + 4.0 * jh[0][1] * jh[0][1]).sqrt());
        ck.check(max_eig.max(0.0), 1e-6 * jnorm);
        ck.end_sample();
    }
    Ok(())
}

fn suite_ma(rng: &mut ChaCha8Rng, samples: u64, ck: &mut Checker) -> Result<()> {
    for _ in 0..samples {
        let w = rand_window(rng);
        let pt = rand_interior(rng, w);
        let h = hessian_fd(pt, w, Branch::Plus)?;
        let norm = frob3(&h).max(1e-12);
        ck.check(det3(&h).abs(), 1e-6 * norm * norm * norm);

        let d = kernel_direction(pt, w)?;
        let dnorm = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        let mut hd = [0.0f64; 3];
        for i in 0..3 {
            for j in 0..3 {
                hd[i] += h[i][j] * d[j];
            }
        }
        let hdnorm = (hd[0] * hd[0] + hd[1] * hd[1] + hd[2] * hd[2]).sqrt();
        ck.check(hdnorm, 1e-6 * norm * dnorm);

        let (jpt, params) = rand_jni(rng);
        let jh = jni_hessian_fd(jpt, params)?;
        let jnorm = (jh[0][0] * jh[0][0] + 2.0 * jh[0][1] * jh[0][1] + jh[1][1] * jh[1][1])
            .sqrt()
            .max(1e-12);
        ck.check(jni_ma_residual(jpt, params)?.abs(), 1e-7 * jnorm * jnorm);
        ck.end_sample();
    }
    Ok(())
}

fn suite_euler(rng: &mut ChaCha8Rng, samples: u64, ck: &mut Checker) -> Result<()> {
    for _ in 0..samples {
        let w = rand_window(rng);
        let pt = rand_interior(rng, w);
        let b = eval_bmax(pt, w)?.value;
        let [t1, t2, _] = gradient(pt, w)?;
        // Degree-2 homogeneity in (x1, x2): ½t1·x1 + t2·x2 = B.
        ck.check(
            (0.5 * t1 * pt.x1 + t2 * pt.x2 - b).abs(),
            1e-8 * b.abs().max(1.0),
        );
        ck.end_sample();
    }
    Ok(())
}

fn suite_mibc(rng: &mut ChaCha8Rng, samples: u64, ck: &mut Checker) -> Result<()> {
    for _ in 0..samples {
        let w = rand_window(rng);
        let xp = rand_interior(rng, w);
        let xm = rand_interior(rng, w);
        let room = w.upper - 0.5 * (xp.x3 + xm.x3);
        let surplus = rng.gen_range(0.0..=room.max(f64::MIN_POSITIVE));
        let gap = main_inequality_gap(xp, xm, surplus, w)?;
        let scale = eval_bmax(xp, w)?.value.abs().max(eval_bmax(xm, w)?.value.abs()).max(1.0);
        ck.check((-gap).max(0.0), 1e-9 * scale);
        ck.end_sample();
    }
    Ok(())
}

fn suite_foliation(rng: &mut ChaCha8Rng, samples: u64, ck: &mut Checker) -> Result<()> {
    for _ in 0..samples {
        let w = rand_window(rng);
        let pt = rand_interior(rng, w);
        let frame = recover_parameters(pt, w, Branch::Plus)?;

        // Round trip through the line equations.
        let (x1, x2) = extremal_line_point(frame.a, frame.xi1, pt.x3, w)?;
        let scale = pt.x2.abs().max(1.0);
        ck.check((x1 - pt.x1).abs().max((x2 - pt.x2).abs()), 1e-10 * scale);

        // Hyperbola trace: ζ2(2ξ1 − ζ1) = ζ1·ξ1².
        let res = frame.zeta2 * (2.0 * frame.xi1 - frame.zeta1)
            - frame.zeta1 * frame.xi1 * frame.xi1;
        ck.check(res.abs(), 1e-10 * frame.zeta2.abs().max(1.0));

        // Affinity of B along the line (three capacity levels).
        let levels = [w.lower, 0.5 * (w.lower + w.upper), w.upper];
        let mut vals = [0.0f64; 3];
        for (v, &x3) in vals.iter_mut().zip(&levels) {
            let (y1, y2) = extremal_line_point(frame.a, frame.xi1, x3, w)?;
            *v = eval_bmax(CetPoint::new(y1, y2, x3), w)?.value;
        }
        let dd = vals[0] - 2.0 * vals[1] + vals[2];
        ck.check(dd.abs(), 1e-8 * vals[2].abs().max(1.0));

        // Tangency of the projected line to the lid parabola.
        ck.check(tangency_gap(frame.a, frame.t1, w)?, 1e-10);
        ck.end_sample();
    }
    Ok(())
}

fn suite_lp2(rng: &mut ChaCha8Rng, samples: u64, ck: &mut Checker) -> Result<()> {
    let two = Exponent::two();
    for _ in 0..samples {
        let w = rand_window(rng);
        let pt = rand_interior(rng, w);
        let quad = eval_bmax(pt, w)?.value;
        let lp = eval_lp(pt, w, two, Branch::Plus)?.value;
        ck.check((lp - quad).abs(), 1e-9 * quad.abs().max(1.0));

        let quad_min = eval_bmin(pt, w)?.value;
        let lp_min = eval_lp(pt, w, two, Branch::Minus)?.value;
        ck.check((lp_min - quad_min).abs(), 1e-9 * quad_min.abs().max(1.0));
        ck.end_sample();
    }
    Ok(())
}

fn suite_greens(rng: &mut ChaCha8Rng, samples: u64, ck: &mut Checker) -> Result<()> {
    let w = Window::unit();
    for _ in 0..samples {
        let n = rng.gen_range(3u32..=5);
        let depth = rng.gen_range(2 * n..=10);
        let x1 = rng.gen_range(0.3..1.5);
        let s = rng.gen_range(0.2..0.95);
        let (phi, alpha) = build_extremal(x1, x1 * x1 / s, n, depth)?;
        if !alpha.packing_exact() {
            ck.check(1.0, 1e-12); // packing break: unconditional failure
        }
        let masses = box_masses(&alpha, depth)?;
        let mut levels = Vec::with_capacity(depth as usize + 1);
        for e in 0..=depth {
            let mut level = Vec::with_capacity(1usize << e);
            for i in 0..1u64 << e {
                let node = DyadicNode::new(e, i)?;
                let m1 = phi.average(node)?;
                let m2: f64 = {
                    let vals = phi.values();
                    let shift = (depth - e) as usize;
                    let lo = (i as usize) << shift;
                    vals[lo..lo + (1 << shift)].iter().map(|v| v * v).sum::<f64>()
                        / (1u64 << shift) as f64
                };
                let x3 = masses[e as usize][i as usize].min(1.0);
                level.push(eval_bmax(CetPoint::new(m1, m2, x3), w)?.value);
            }
            levels.push(level);
        }
        let boundary = levels[depth as usize].clone();
        let f = TreeFunction::new(levels)?;
        let gap = greens_gap(&f, &boundary)?;
        ck.check(gap.abs(), 1e-12);
        // Proof chain: Δf(σ) ≥ ⟨φ⟩²·α_σ/|σ| at every weighted node.
        for (node, exp) in alpha.iter() {
            let avg = phi.average(node)?;
            let dm = (-(exp as f64)).exp2() * (node.depth as f64).exp2();
            let shortfall = avg * avg * dm - f.laplacian(node);
            ck.check(shortfall.max(0.0), 1e-9);
        }
        ck.end_sample();
    }
    Ok(())
}

/// Runs one named suite with `samples` seeded draws.
pub fn run_suite(name: &str, samples: u64, seed: u64) -> Result<RunReport> {
    let started = std::time::Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ck = Checker::new();
    match name {
        "boundary" => suite_boundary(&mut rng, samples, &mut ck)?,
        "homogeneity" => suite_homogeneity(&mut rng, samples, &mut ck)?,
        "rescale" => suite_rescale(&mut rng, samples, &mut ck)?,
        "concavity" => suite_concavity(&mut rng, samples, &mut ck)?,
        "ma" => suite_ma(&mut rng, samples, &mut ck)?,
        "euler" => suite_euler(&mut rng, samples, &mut ck)?,
        "mibc" => suite_mibc(&mut rng, samples, &mut ck)?,
        "foliation" => suite_foliation(&mut rng, samples, &mut ck)?,
        "lp2" => suite_lp2(&mut rng, samples, &mut ck)?,
        "greens" => suite_greens(&mut rng, samples, &mut ck)?,
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown suite '{other}' (expected one of {SUITE_NAMES:?} or 'all')"
            )))
        }
    }
    Ok(RunReport {
        suite: name.to_string(),
        samples,
        failures: ck.failures,
        worst_violation: ck.worst,
        seed,
        elapsed_ms: started.elapsed().as_millis() as u64,
    })
}

/// Runs every suite with the same sample count and seed.
pub fn run_all(samples: u64, seed: u64) -> Result<Vec<RunReport>> {
    SUITE_NAMES.iter().map(|name| run_suite(name, samples, seed)).collect()
}
