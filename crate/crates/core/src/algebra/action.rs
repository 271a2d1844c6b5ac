use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::element::{fold, fold_jet, Element, FiberFunction, Flavor, GridData, Repr};
use crate::params::unit_phase;

/// A point `(r, s, t)` of the Heisenberg group in exponential-free coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupPoint {
    pub r: f64,
    pub s: f64,
    pub t: f64,
}

impl GroupPoint {
    pub const IDENTITY: GroupPoint = GroupPoint { r: 0.0, s: 0.0, t: 0.0 };

    pub fn new(r: f64, s: f64, t: f64) -> Self {
        GroupPoint { r, s, t }
    }

    /// Group law making `L_g L_h = L_{g h}`:
    /// `(r, s, t)(r', s', t') = (r + r', s + s', t + t' + c s r')`.
    pub fn compose(&self, other: &GroupPoint, c: i64) -> GroupPoint {
        GroupPoint {
            r: self.r + other.r,
            s: self.s + other.s,
            t: self.t + other.t + c as f64 * self.s * other.r,
        }
    }

    /// `exp(h X_i)` for the canonical generators `X_1, X_2, X_3`.
    pub fn generator(i: usize, h: f64) -> GroupPoint {
        match i {
            1 => GroupPoint::new(h, 0.0, 0.0),
            2 => GroupPoint::new(0.0, h, 0.0),
            3 => GroupPoint::new(0.0, 0.0, h),
            _ => panic!("generator index must be 1, 2 or 3"),
        }
    }
}

/// `(L_g a)(x,y,p) = e(p (t + c s (x - r))) a(x - r, y - s, p)`.
///
/// Grid inputs are resampled on the fundamental grid.
pub fn group_action(g: GroupPoint, a: &Element) -> Element {
    let act = Action { g, inner: a.clone() };
    match a.flavor() {
        Flavor::ClosedForm => a.with_repr(a.band(), a.clamped(), Repr::Closed(Arc::new(act))),
        Flavor::Grid => {
            let t = a.trunc();
            let grid = GridData::from_fn(t.nx, t.ny, a.band(), |x, y, p| act.value(x, y, p));
            a.with_repr(a.band(), a.clamped(), Repr::Grid(Arc::new(grid)))
        }
    }
}

struct Action {
    g: GroupPoint,
    inner: Element,
}

impl Action {
    #[inline]
    fn phase(&self, x: f64, p: i64) -> Complex64 {
        if p == 0 {
            return Complex64::new(1.0, 0.0);
        }
        let c = self.inner.params().c as f64;
        let p = p as f64;
        unit_phase(p * self.g.t + p * c * self.g.s * (x - self.g.r))
    }
}

impl FiberFunction for Action {
    fn value(&self, x: f64, y: f64, p: i64) -> Complex64 {
        self.phase(x, p) * fold(&self.inner, x - self.g.r, y - self.g.s, p)
    }

    fn partials(&self, x: f64, y: f64, p: i64) -> Option<(Complex64, Complex64)> {
        let (v, vx, vy) = fold_jet(&self.inner, x - self.g.r, y - self.g.s, p)?;
        let ph = self.phase(x, p);
        let c = self.inner.params().c as f64;
        let k = Complex64::new(0.0, 2.0 * PI * p as f64 * c * self.g.s);
        Some((ph * (vx + k * v), ph * vy))
    }

    fn has_partials(&self) -> bool {
        self.inner.flavor() == Flavor::ClosedForm && self.inner.has_partials()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::{fold_evaluate, random_element_banded};
    use crate::params::{ModelParams, Truncation};

    #[test]
    fn identity_point_acts_trivially() {
        let params = ModelParams::default();
        let trunc = Truncation::new(2, 16, 16, 4).unwrap();
        let a = random_element_banded(2, trunc, params, 0.5, 2).unwrap();
        let moved = group_action(GroupPoint::IDENTITY, &a);
        for p in -2..=2 {
            let (x, y) = (0.37, 0.81);
            assert_eq!(fold_evaluate(&moved, x, y, p).unwrap(), fold_evaluate(&a, x, y, p).unwrap());
        }
        let id = Element::identity(params, trunc);
        let moved = group_action(GroupPoint::new(0.0, 0.0, 0.3), &id);
        assert_eq!(fold_evaluate(&moved, 0.5, 0.5, 0).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn action_is_a_left_action_for_the_pinned_group_law() {
        let params = ModelParams { c: 2, ..ModelParams::default() };
        let trunc = Truncation::new(2, 16, 16, 4).unwrap();
        let a = random_element_banded(6, trunc, params, 0.5, 2).unwrap();
        let g = GroupPoint::new(0.3, -0.7, 0.1);
        let h = GroupPoint::new(-1.2, 0.45, 0.6);
        let lhs = group_action(g, &group_action(h, &a));
        let rhs = group_action(g.compose(&h, params.c), &a);
        // the other cocycle convention, t + t' + c r s', must fail
        let wrong = GroupPoint::new(g.r + h.r, g.s + h.s, g.t + h.t + params.c as f64 * g.r * h.s);
        let alt = group_action(wrong, &a);
        let mut err = 0.0f64;
        let mut alt_err = 0.0f64;
        for &(x, y) in &[(0.1, 0.2), (0.6, 0.9), (2.3, -0.4)] {
            for p in -2..=2 {
                let l = fold_evaluate(&lhs, x, y, p).unwrap();
                err = err.max((l - fold_evaluate(&rhs, x, y, p).unwrap()).norm());
                alt_err = alt_err.max((l - fold_evaluate(&alt, x, y, p).unwrap()).norm());
            }
        }
        assert!(err < 1e-12, "composition error {err}");
        assert!(alt_err > 1e-3);
    }
}
