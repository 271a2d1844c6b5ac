//! The algebraic structure on truncated elements.

mod action;
mod derivation;
mod norm;
mod star;

use std::sync::Arc;

use num_complex::Complex64;

use crate::element::{fold, Element, FiberFunction, Flavor, Repr};
use crate::error::{QhmError, Result};
use crate::numeric::pairwise_sum_c;

pub use action::{group_action, GroupPoint};
pub use derivation::{
    derivation, derivation_1, derivation_2, derivation_3, lip_report, lip_seminorm, Derivation, LipReport,
};
pub use norm::{sup_sum_norm, sup_sum_norm_with, NormReport, SupOptions};
pub use star::star;

/// `a*(x, y, p) = conj(a(x, y, -p))`.
pub fn involution(a: &Element) -> Element {
    match a.flavor() {
        Flavor::Grid => {
            let g = a.grid().unwrap();
            let out = g.map_indexed(|p, ix, iy, _| g.get(-p, ix, iy).conj());
            a.with_repr(a.band(), a.clamped(), Repr::Grid(Arc::new(out)))
        }
        Flavor::ClosedForm => a.with_repr(
            a.band(),
            a.clamped(),
            Repr::Closed(Arc::new(Involution { inner: a.clone() })),
        ),
    }
}

struct Involution {
    inner: Element,
}

impl FiberFunction for Involution {
    fn value(&self, x: f64, y: f64, p: i64) -> Complex64 {
        self.inner.fundamental(x, y, -p).conj()
    }

    fn partials(&self, x: f64, y: f64, p: i64) -> Option<(Complex64, Complex64)> {
        let (dx, dy) = self.inner.fundamental_partials(x, y, -p)?;
        Some((dx.conj(), dy.conj()))
    }

    fn has_partials(&self) -> bool {
        self.inner.flavor() == Flavor::ClosedForm && self.inner.has_partials()
    }
}

/// `tau(a)`: the uniform product rule on the `p = 0` fiber over the fundamental grid.
pub fn trace(a: &Element) -> Complex64 {
    let t = a.trunc();
    let mut values = Vec::with_capacity(t.cells());
    match a.grid() {
        Some(g) => {
            for ix in 0..t.nx {
                values.extend_from_slice(g.column(0, ix));
            }
        }
        None => {
            for ix in 0..t.nx {
                for iy in 0..t.ny {
                    values.push(a.fundamental(t.x_at(ix), t.y_at(iy), 0));
                }
            }
        }
    }
    pairwise_sum_c(&values) / t.cells() as f64
}

/// `a^(0)(x, y, p) = delta_{p0} a(x, y, p)`.
pub fn zero_mode(a: &Element) -> Element {
    a.truncate_band(0)
}

/// `(1/n) sum_j L_{(0,0,j/n)}(a)`, the quadrature of the central-circle average.
///
/// Exact (equal to [`zero_mode`]) whenever `n > band(a)`.
pub fn central_average(a: &Element, nodes: usize) -> Result<Element> {
    if nodes == 0 {
        return Err(QhmError::Config("need at least one quadrature node".into()));
    }
    let w = Complex64::new(1.0 / nodes as f64, 0.0);
    let terms: Vec<_> = (0..nodes)
        .map(|j| (w, group_action(GroupPoint::new(0.0, 0.0, j as f64 / nodes as f64), a)))
        .collect();
    Element::combine(&terms)
}

/// Averages `L_{(r,s,0)}(a0)` over the uniform `Nx x Ny` grid of `(r, s)` and
/// returns the resulting constant, read off at the cell centre `(1/2Nx, 1/2Ny)`.
pub fn average_over_torus(a0: &Element) -> Result<Complex64> {
    if a0.band() != 0 {
        return Err(QhmError::Precondition(format!(
            "average_over_torus needs an element supported at p = 0, got band {}",
            a0.band()
        )));
    }
    let t = a0.trunc();
    let (x, y) = (0.5 / t.nx as f64, 0.5 / t.ny as f64);
    let mut values = Vec::with_capacity(t.cells());
    for ir in 0..t.nx {
        for is in 0..t.ny {
            let g = GroupPoint::new(t.x_at(ir), t.y_at(is), 0.0);
            let moved = group_action(g, a0);
            values.push(fold(&moved, x, y, 0));
        }
    }
    Ok(pairwise_sum_c(&values) / t.cells() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::{fold_evaluate, random_element_banded};
    use crate::params::{unit_phase, ModelParams, Truncation};

    fn setup() -> (ModelParams, Truncation) {
        (ModelParams::default(), Truncation::new(3, 16, 16, 6).unwrap())
    }

    #[test]
    fn involution_is_involutive() {
        let (params, trunc) = setup();
        let a = random_element_banded(4, trunc, params, 0.5, 3).unwrap();
        let aa = involution(&involution(&a));
        for p in -3..=3 {
            assert_eq!(fold_evaluate(&aa, 0.3, 0.6, p).unwrap(), fold_evaluate(&a, 0.3, 0.6, p).unwrap());
        }
        let g = a.sample();
        assert_eq!(involution(&involution(&g)).grid_values().values(), g.grid_values().values());
        let id = Element::identity(params, trunc);
        assert_eq!(fold_evaluate(&involution(&id), 0.1, 0.1, 0).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn trace_of_unit_and_oscillation() {
        let (params, trunc) = setup();
        assert_eq!(trace(&Element::identity(params, trunc)), Complex64::new(1.0, 0.0));
        let osc = Element::p0_function(params, trunc, |x, y| unit_phase(x) * unit_phase(y));
        assert!(trace(&osc).norm() < 1e-15);
        assert!(average_over_torus(&osc).unwrap().norm() < 1e-15);
        assert!((average_over_torus(&Element::identity(params, trunc)).unwrap() - 1.0).norm() < 1e-15);
    }

    #[test]
    fn torus_average_requires_p0_support() {
        let (params, trunc) = setup();
        let a = random_element_banded(1, trunc, params, 0.5, 1).unwrap();
        assert!(matches!(average_over_torus(&a), Err(QhmError::Precondition(_))));
    }

    #[test]
    fn zero_mode_keeps_only_p0() {
        let (params, trunc) = setup();
        let a = random_element_banded(9, trunc, params, 0.5, 3).unwrap();
        let z = zero_mode(&a);
        assert_eq!(z.band(), 0);
        assert_eq!(fold_evaluate(&z, 0.2, 0.3, 0).unwrap(), fold_evaluate(&a, 0.2, 0.3, 0).unwrap());
        assert_eq!(fold_evaluate(&z, 0.2, 0.3, 1).unwrap(), Complex64::new(0.0, 0.0));
        let id = Element::identity(params, trunc);
        assert_eq!(fold_evaluate(&zero_mode(&id), 0.5, 0.5, 0).unwrap(), Complex64::new(1.0, 0.0));
    }
}
