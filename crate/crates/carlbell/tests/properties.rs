//! Randomized invariants checked with proptest.

use proptest::prelude::*;

use carlbell::cet_bellman::{eval_bmax, eval_bmin, plus_bracket_max, solve_cubic};
use carlbell::domain::{Branch, CetPoint, Exponent, JniParams, JniPoint, Window};
use carlbell::extremal_seq::{build_extremal, carleson_sum, self_similar_sum, truncated_sum};
use carlbell::foliation::{extremal_line_point, recover_parameters};
use carlbell::jni_bellman::eval_jni;
use carlbell::lp_bellman::eval_lp;

/// An interior point of the quadratic domain together with its window.
fn interior() -> impl Strategy<Value = (CetPoint, Window)> {
    (
        0.0f64..2.0,
        0.2f64..3.0,
        0.1f64..2.0,
        0.1f64..0.9,
        0.05f64..1.0,
    )
        .prop_map(|(m, width, x1, s, frac)| {
            let w = Window::new(m, m + width).unwrap();
            let pt = CetPoint::new(x1, x1 * x1 / s, m + width * frac);
            (pt, w)
        })
}

proptest! {
    #[test]
    fn bmax_dominates_bmin((pt, w) in interior()) {
        let bmax = eval_bmax(pt, w).unwrap().value;
        let bmin = eval_bmin(pt, w).unwrap().value;
        prop_assert!(bmax >= bmin - 1e-9 * bmax.abs().max(1.0));
        // Both sit above the trivial floor m·x2.
        prop_assert!(bmin >= w.lower * pt.x2 - 1e-9 * bmax.abs().max(1.0));
    }

    #[test]
    fn quadratic_homogeneity((pt, w) in interior(), t in 0.2f64..4.0) {
        let b = eval_bmax(pt, w).unwrap().value;
        let scaled = eval_bmax(CetPoint::new(t * pt.x1, t * t * pt.x2, pt.x3), w)
            .unwrap()
            .value;
        prop_assert!((scaled - t * t * b).abs() <= 1e-9 * scaled.abs().max(1.0));
    }

    #[test]
    fn positive_root_stays_in_bracket((pt, w) in interior()) {
        let s = pt.x1 * pt.x1 / pt.x2;
        let sol = solve_cubic(s, pt.x3, w, Branch::Plus).unwrap();
        prop_assert!(sol.a >= 0.0 && sol.a <= plus_bracket_max(w));
        prop_assert!(sol.residual <= 1e-12);
    }

    #[test]
    fn lp_at_two_matches_quadratic((pt, w) in interior()) {
        let lp = eval_lp(pt, w, Exponent::two(), Branch::Plus).unwrap().value;
        let quad = eval_bmax(pt, w).unwrap().value;
        prop_assert!((lp - quad).abs() <= 1e-9 * quad.abs().max(1.0));
    }

    #[test]
    fn foliation_round_trip((pt, w) in interior()) {
        let frame = recover_parameters(pt, w, Branch::Plus).unwrap();
        let (x1, x2) = extremal_line_point(frame.a, frame.xi1, pt.x3, w).unwrap();
        prop_assert!((x1 - pt.x1).abs() <= 1e-9 * pt.x1.abs().max(1.0));
        prop_assert!((x2 - pt.x2).abs() <= 1e-9 * pt.x2.abs().max(1.0));
    }

    #[test]
    fn jni_shift_law(
        x1 in -1.0f64..1.0,
        gap in 0.01f64..0.24,
        t in -1.0f64..1.0,
    ) {
        let params = JniParams::new(0.5, 0.5).unwrap();
        let base = eval_jni(JniPoint::new(x1, x1 * x1 + gap), params).unwrap();
        let shifted = eval_jni(
            JniPoint::new(x1 + t, (x1 + t) * (x1 + t) + gap),
            params,
        )
        .unwrap();
        prop_assert!((shifted - t.exp() * base).abs() <= 1e-9 * shifted.abs().max(1.0));
    }

    #[test]
    fn extremal_build_moments(
        x1 in 0.1f64..1.5,
        s in 0.1f64..0.95,
        n in 3u32..6,
    ) {
        let x2 = x1 * x1 / s;
        let depth = 2 * n + 4;
        let (phi, alpha) = build_extremal(x1, x2, n, depth).unwrap();
        let (m1, m2) = phi.moments();
        // Mean exact; truncation only loses second-moment mass.
        prop_assert!((m1 - x1).abs() <= 1e-12 * x1.max(1.0));
        prop_assert!(m2 <= x2 * (1.0 + 1e-12));
        prop_assert!(alpha.packing_exact());
        // Explicit sum agrees with the truncated recursion and never exceeds
        // the self-similar limit.
        let explicit = carleson_sum(&phi, &alpha).unwrap();
        let recursion = truncated_sum(x1, x2, n, depth).unwrap();
        prop_assert!((explicit - recursion).abs() <= 1e-11 * recursion.max(1.0));
        prop_assert!(explicit <= self_similar_sum(x1, x2, n).unwrap() + 1e-9);
    }

    #[test]
    fn self_similar_sum_below_lid(x1 in 0.1f64..1.5, s in 0.1f64..0.95, n in 3u32..17) {
        let x2 = x1 * x1 / s;
        let lid = (x2.sqrt() + (x2 - x1 * x1).sqrt()).powi(2);
        let sum = self_similar_sum(x1, x2, n).unwrap();
        prop_assert!(sum <= lid * (1.0 + 1e-12));
        prop_assert!(sum > 0.0);
    }
}
