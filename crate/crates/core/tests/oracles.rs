//! Cross-checks against the independent implementations in `testkit`.

use std::f64::consts::PI;

use num_complex::Complex64;
use qhm::algebra::{involution, star};
use qhm::element::{fold_evaluate, random_element_banded, Element};
use qhm::metric::{distance_lower_bound, localized_state, SolverOptions, State};
use qhm::representation::{cstar_norm_estimate, fiber_matrix};
use qhm::testkit::{brute_star, dense_operator_oracle, dense_oracle_norm, polygon_lp_distance, simplex_min};
use qhm::{ModelParams, QhmError, Truncation};

fn small() -> (ModelParams, Truncation) {
    (ModelParams::default(), Truncation::new(3, 8, 8, 8).unwrap())
}

#[test]
fn oracle_matrix_of_identity_is_identity() {
    let (params, trunc) = small();
    let m = dense_operator_oracle(&Element::identity(params, trunc), 8, 0.3, 0.6).unwrap();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let want = if i == j { 1.0 } else { 0.0 };
            assert_eq!(m[(i, j)], Complex64::new(want, 0.0));
        }
    }
}

#[test]
fn oracle_matrix_matches_fiber_matrix_and_respects_adjoint() {
    let (params, trunc) = small();
    let a = random_element_banded(11, trunc, params, 1.0, 3).unwrap();
    let astar = involution(&a);
    for (x, y) in [(0.0, 0.0), (0.25, 0.5), (0.875, 0.125)] {
        let oracle = dense_operator_oracle(&a, 8, x, y).unwrap();
        let ours = fiber_matrix(&a, x, y).to_dmatrix();
        let diff = (&oracle - &ours).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(diff < 1e-14, "{diff}");
        let adj = dense_operator_oracle(&astar, 8, x, y).unwrap();
        let d = (&adj - &oracle.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(d < 1e-14, "{d}");
    }
}

#[test]
fn cstar_estimate_agrees_with_dense_oracle() {
    let (params, trunc) = small();
    for seed in 0..4 {
        let a = random_element_banded(seed, trunc, params, 0.8, 3).unwrap();
        let est = cstar_norm_estimate(&a).unwrap().value;
        let oracle = dense_oracle_norm(&a, 8, 8, 8).unwrap();
        assert!((est - oracle).abs() <= 1e-8, "{est} vs {oracle}");
    }
}

#[test]
fn brute_star_has_the_unit() {
    let (params, trunc) = small();
    let id = Element::identity(params, trunc);
    let a = random_element_banded(5, trunc, params, 1.0, 3).unwrap();
    for &(x, y, p) in &[(0.1, 0.2, 0i64), (1.7, -0.4, 2), (-2.3, 0.9, -3)] {
        let want = fold_evaluate(&a, x, y, p).unwrap();
        assert!((brute_star(&id, &a, x, y, p) - want).norm() < 1e-14);
        assert!((brute_star(&a, &id, x, y, p) - want).norm() < 1e-14);
    }
}

#[test]
fn brute_star_agrees_with_star_far_from_the_fundamental_domain() {
    let (params, trunc) = small();
    let a = random_element_banded(1, trunc, params, 1.0, 1).unwrap();
    let b = random_element_banded(2, trunc, params, 1.0, 2).unwrap();
    let ab = star(&a, &b).unwrap();
    for &(x, y, p) in &[(5.3, 0.2, 1i64), (-4.1, 7.7, -2), (12.9, -3.3, 3)] {
        let d = (fold_evaluate(&ab, x, y, p).unwrap() - brute_star(&a, &b, x, y, p)).norm();
        assert!(d < 1e-10, "{d}");
    }
}

#[test]
fn simplex_solves_a_small_standard_form_program() {
    // min -x1 - 2 x2  s.t.  x1 + x2 + s1 = 4,  x2 + s2 = 3
    let a = vec![vec![1.0, 1.0, 1.0, 0.0], vec![0.0, 1.0, 0.0, 1.0]];
    let (v, _) = simplex_min(a, vec![4.0, 3.0], vec![-1.0, -2.0, 0.0, 0.0]).unwrap();
    assert!((v + 7.0).abs() < 1e-12);
    let infeasible = simplex_min(vec![vec![1.0, 1.0]], vec![-1.0], vec![1.0, 1.0]);
    assert!(matches!(infeasible, Err(QhmError::Numerical { .. })));
}

#[test]
fn solver_is_bracketed_by_the_polygon_lp() {
    let params = ModelParams::default();
    let trunc = Truncation::new(1, 8, 8, 2).unwrap();
    let mu = localized_state(params, trunc, 0.2, 0.5, 0.1).unwrap();
    let nu = localized_state(params, trunc, 0.4, 0.5, 0.1).unwrap();
    let lp = polygon_lp_distance(&mu, &nu, 1, 16).unwrap();
    assert!((lp.inner - lp.value * (PI / 16.0).cos()).abs() < 1e-15);
    let opts = SolverOptions { modes: 1, restarts: 8, iterations: 3000, ..Default::default() };
    let r = distance_lower_bound(&mu, &nu, &opts).unwrap();
    // the disc program lies between the inscribed and circumscribed polygons;
    // the solver reaches it from below
    assert!(r.grid_objective <= lp.value + 1e-9, "{} > {}", r.grid_objective, lp.value);
    assert!(r.grid_objective >= lp.inner - 1e-3, "{} < {}", r.grid_objective, lp.inner);
}

#[test]
fn polygon_lp_rejects_states_off_the_zero_fiber() {
    let params = ModelParams::default();
    let trunc = Truncation::new(1, 8, 8, 2).unwrap();
    let mu = localized_state(params, trunc, 0.2, 0.5, 0.1).unwrap();
    let off = qhm::metric::random_vector_state(3, params, trunc, 1).unwrap();
    assert!(matches!(polygon_lp_distance(&mu, &off, 1, 16), Err(QhmError::Precondition(_))));
    let tr = State::trace(params, trunc);
    assert!(polygon_lp_distance(&mu, &tr, 1, 16).unwrap().value > 0.0);
}
