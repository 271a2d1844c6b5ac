use std::sync::Arc;

use num_complex::Complex64;

use crate::element::{fold, fold_jet, Element, FiberFunction, Flavor, GridData, Repr};
use crate::error::Result;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// The deformed product
/// `(a * b)(x,y,p) = sum_q a(x - hbar(q-p)mu, y - hbar(q-p)nu, q) b(x - hbar q mu, y - hbar q nu, p - q)`.
///
/// The output band is `band(a) + band(b)`, cut back to the truncation with
/// [`Element::clamped`] set when that loses support. Two closed-form inputs
/// give a closed-form (lazily summed) product; otherwise the product is
/// evaluated on the grid.
pub fn star(a: &Element, b: &Element) -> Result<Element> {
    a.check_compatible(b)?;
    let full = a.band() + b.band();
    let band = full.min(a.trunc().p_max);
    let clamped = full > band || a.clamped() || b.clamped();
    let product = StarProduct { a: a.clone(), b: b.clone() };
    let out = if a.flavor() == Flavor::ClosedForm && b.flavor() == Flavor::ClosedForm {
        a.with_repr(band, clamped, Repr::Closed(Arc::new(product)))
    } else {
        let t = a.trunc();
        let grid = GridData::from_fn(t.nx, t.ny, band, |x, y, p| product.eval(x, y, p));
        a.with_repr(band, clamped, Repr::Grid(Arc::new(grid)))
    };
    Ok(out)
}

pub(crate) struct StarProduct {
    a: Element,
    b: Element,
}

impl StarProduct {
    #[inline]
    fn q_range(&self, p: i64) -> std::ops::RangeInclusive<i64> {
        let pa = self.a.band() as i64;
        let pb = self.b.band() as i64;
        (-pa).max(p - pb)..=pa.min(p + pb)
    }

    fn eval(&self, x: f64, y: f64, p: i64) -> Complex64 {
        let params = self.a.params();
        let mut acc = ZERO;
        for q in self.q_range(p) {
            let (sx, sy) = params.shift((q - p) as f64);
            let (tx, ty) = params.shift(q as f64);
            acc += fold(&self.a, x - sx, y - sy, q) * fold(&self.b, x - tx, y - ty, p - q);
        }
        acc
    }
}

impl FiberFunction for StarProduct {
    fn value(&self, x: f64, y: f64, p: i64) -> Complex64 {
        self.eval(x, y, p)
    }

    fn partials(&self, x: f64, y: f64, p: i64) -> Option<(Complex64, Complex64)> {
        let params = self.a.params();
        let mut dx = ZERO;
        let mut dy = ZERO;
        for q in self.q_range(p) {
            let (sx, sy) = params.shift((q - p) as f64);
            let (tx, ty) = params.shift(q as f64);
            let (u, ux, uy) = fold_jet(&self.a, x - sx, y - sy, q)?;
            let (v, vx, vy) = fold_jet(&self.b, x - tx, y - ty, p - q)?;
            dx += ux * v + u * vx;
            dy += uy * v + u * vy;
        }
        Some((dx, dy))
    }

    fn has_partials(&self) -> bool {
        [&self.a, &self.b]
            .iter()
            .all(|e| e.flavor() == Flavor::ClosedForm && e.has_partials())
    }
}
