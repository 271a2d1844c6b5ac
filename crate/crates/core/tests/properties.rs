//! Randomized invariants of the algebra and its representation.

use num_complex::Complex64;
use proptest::prelude::*;
use qhm::algebra::{
    derivation, group_action, involution, lip_report, lip_seminorm, star, sup_sum_norm, trace, Derivation, GroupPoint,
    SupOptions,
};
use qhm::element::{fold_evaluate, random_element_banded, Element};
use qhm::representation::{
    apply, cstar_norm_estimate, cstar_norm_estimate_with, fiber_matrix, CstarOptions, GridVector, NormMethod,
};
use qhm::testkit::brute_star;
use qhm::{unit_phase, ModelParams, Truncation};

fn model() -> (ModelParams, Truncation) {
    (ModelParams::default(), Truncation::new(4, 12, 12, 8).unwrap())
}

fn el(seed: u64, band: usize) -> Element {
    let (params, trunc) = model();
    random_element_banded(seed, trunc, params, 1.0, band).unwrap()
}

fn at(a: &Element, x: f64, y: f64, p: i64) -> Complex64 {
    fold_evaluate(a, x, y, p).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn twist_coherence(seed in 0u64..1000, x in -3.0f64..3.0, y in -2.0f64..2.0, p in -4i64..=4, k in -5i64..=5) {
        let a = el(seed, 4);
        let c = model().0.c;
        let shifted = at(&a, x + k as f64, y, p);
        let want = unit_phase((c * k * p) as f64 * y) * at(&a, x, y, p);
        prop_assert!((shifted - want).norm() <= 1e-10 * (1.0 + want.norm()));
    }

    #[test]
    fn star_matches_brute_force(seed in 0u64..1000, x in -3.0f64..3.0, y in -2.0f64..2.0, p in -4i64..=4) {
        let (a, b) = (el(seed, 2), el(seed + 5000, 2));
        let ab = star(&a, &b).unwrap();
        prop_assert!((at(&ab, x, y, p) - brute_star(&a, &b, x, y, p)).norm() <= 1e-10);
    }

    #[test]
    fn involution_reverses_products(seed in 0u64..1000, x in -2.0f64..2.0, y in 0.0f64..1.0, p in -4i64..=4) {
        let (a, b) = (el(seed, 2), el(seed + 7000, 2));
        let lhs = involution(&star(&a, &b).unwrap());
        let rhs = star(&involution(&b), &involution(&a)).unwrap();
        prop_assert!((at(&lhs, x, y, p) - at(&rhs, x, y, p)).norm() <= 1e-10);
    }

    #[test]
    fn action_is_a_left_action(
        seed in 0u64..1000,
        g in (-2.0f64..2.0, -2.0f64..2.0, -1.0f64..1.0),
        h in (-2.0f64..2.0, -2.0f64..2.0, -1.0f64..1.0),
        x in -2.0f64..2.0, y in 0.0f64..1.0, p in -4i64..=4,
    ) {
        let a = el(seed, 4);
        let (g, h) = (GroupPoint::new(g.0, g.1, g.2), GroupPoint::new(h.0, h.1, h.2));
        let twice = group_action(g, &group_action(h, &a));
        let once = group_action(g.compose(&h, model().0.c), &a);
        prop_assert!((at(&twice, x, y, p) - at(&once, x, y, p)).norm() <= 1e-9);
    }

    #[test]
    fn action_is_an_automorphism(seed in 0u64..1000, r in -1.0f64..1.0, s in -1.0f64..1.0, x in -2.0f64..2.0, y in 0.0f64..1.0, p in -4i64..=4) {
        let (a, b) = (el(seed, 2), el(seed + 3000, 2));
        let g = GroupPoint::new(r, s, 0.3);
        let lhs = group_action(g, &star(&a, &b).unwrap());
        let rhs = star(&group_action(g, &a), &group_action(g, &b)).unwrap();
        prop_assert!((at(&lhs, x, y, p) - at(&rhs, x, y, p)).norm() <= 1e-10);
    }

    #[test]
    fn derivations_are_derivations(seed in 0u64..1000, x in -2.0f64..2.0, y in 0.0f64..1.0, p in -4i64..=4, d in 0usize..3) {
        let (a, b) = (el(seed, 2), el(seed + 9000, 2));
        let d = Derivation::ALL[d];
        let lhs = derivation(d, &star(&a, &b).unwrap()).unwrap();
        let r1 = star(&derivation(d, &a).unwrap(), &b).unwrap();
        let r2 = star(&a, &derivation(d, &b).unwrap()).unwrap();
        let l = at(&lhs, x, y, p);
        let r = at(&r1, x, y, p) + at(&r2, x, y, p);
        prop_assert!((l - r).norm() <= 1e-9 * (1.0 + l.norm()));
    }

    #[test]
    fn positivity_of_the_trace(seed in 0u64..1000) {
        let a = el(seed, 2);
        let v = trace(&star(&involution(&a), &a).unwrap());
        prop_assert!(v.re >= -1e-12 && v.im.abs() <= 1e-12);
    }

    #[test]
    fn lip_is_a_seminorm(seed in 0u64..500, s in -3.0f64..3.0) {
        let (params, trunc) = model();
        let a = el(seed, 4).selfadjoint_part();
        let b = el(seed + 100, 4).selfadjoint_part();
        let (la, lb) = (lip_seminorm(&a).unwrap(), lip_seminorm(&b).unwrap());
        // exact on the grid; the line-search refinement stops at its own tolerance
        let grid = |e: &Element| lip_report(e, &SupOptions::GRID_ONLY).unwrap().value;
        let (ga, gs) = (grid(&a), grid(&a.scale_real(s)));
        prop_assert!((gs - s.abs() * ga).abs() <= 1e-12 * (1.0 + ga), "{gs} vs {}", s.abs() * ga);
        let ls = lip_seminorm(&a.scale_real(s)).unwrap();
        prop_assert!((ls - s.abs() * la).abs() <= 1e-8 * (1.0 + s.abs() * la), "{ls} vs {}", s.abs() * la);
        prop_assert!(lip_seminorm(&a.add(&b).unwrap()).unwrap() <= la + lb + 1e-9);
        let shifted = a.add(&Element::identity(params, trunc).scale_real(s)).unwrap();
        prop_assert!((lip_seminorm(&shifted).unwrap() - la).abs() <= 1e-9 * (1.0 + la));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    #[test]
    fn cstar_is_bracketed(seed in 0u64..1000) {
        let a = el(seed, 4);
        let est = cstar_norm_estimate(&a).unwrap().value;
        prop_assert!(est <= sup_sum_norm(&a).sup_sum + 1e-9);
        // a matrix norm dominates every entry, in particular the p = 0 diagonal
        let (params, trunc) = model();
        let mut diag = 0.0f64;
        for ix in 0..trunc.nx {
            for iy in 0..trunc.ny {
                let (x, y) = (trunc.x_at(ix), trunc.y_at(iy));
                for p in -(trunc.q_max as i64)..=trunc.q_max as i64 {
                    let (sx, sy) = params.shift(2.0 * p as f64);
                    diag = diag.max(at(&a, x + sx, y + sy, 0).norm());
                }
            }
        }
        prop_assert!(est >= diag - 1e-12);
    }

    #[test]
    fn compressions_increase_with_q(seed in 0u64..1000) {
        let (params, _) = model();
        let dense = CstarOptions { method: NormMethod::Dense, ..CstarOptions::default() };
        let norm_at = |q: usize| {
            let t = Truncation::new(3, 8, 8, q).unwrap();
            let a = random_element_banded(seed, t, params, 1.0, 3).unwrap();
            cstar_norm_estimate_with(&a, &dense).unwrap().value
        };
        let (n6, n8, n12) = (norm_at(6), norm_at(8), norm_at(12));
        prop_assert!(n6 <= n8 + 1e-12 && n8 <= n12 + 1e-12);
    }
}

#[test]
fn delta_vectors_pick_out_matrix_columns() {
    let (params, trunc) = model();
    let a = el(3, 4);
    let (ix, iy, r) = (5usize, 7usize, 2i64);
    let q = trunc.q_max;
    let xi = GridVector::from_fn(q, trunc.nx, trunc.ny, |x, y, p| {
        let hit = (x - trunc.x_at(ix)).abs() < 1e-12 && (y - trunc.y_at(iy)).abs() < 1e-12 && p == r;
        if hit {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let out = apply(&a, &xi).unwrap();
    let m = fiber_matrix(&a, trunc.x_at(ix), trunc.y_at(iy));
    for p in -(q as i64)..=q as i64 {
        assert!((out.get(p, ix, iy) - m.get(p, r)).norm() < 1e-14);
    }
    let id = apply(&Element::identity(params, trunc), &xi).unwrap();
    assert_eq!(id, xi);
}

#[test]
fn grid_interpolation_converges_at_high_order() {
    let params = ModelParams::default();
    let probes = [(0.13, 0.71, 1i64), (0.52, 0.33, -2), (0.77, 0.05, 0), (0.91, 0.48, 3)];
    let mut errs = Vec::new();
    for n in [16usize, 32] {
        let t = Truncation::new(4, n, n, 8).unwrap();
        let a = random_element_banded(21, t, params, 1.0, 4).unwrap();
        let g = a.sample();
        let e = probes.iter().map(|&(x, y, p)| (at(&g, x, y, p) - at(&a, x, y, p)).norm()).fold(0.0, f64::max);
        errs.push(e);
    }
    assert!(errs[0] / errs[1] >= 6.0, "errors {errs:?}");
}
