use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::norm::{sup_sum_norm_with, NormReport, SupOptions};
use crate::element::{Element, FiberFunction, Flavor, Repr};
use crate::error::{QhmError, Result};

/// The three derivations generated by the canonical Lie algebra basis:
/// `d1 = -d/dx`, `d2 = 2 pi i c p x - d/dy`, `d3 = 2 pi i p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Derivation {
    D1,
    D2,
    D3,
}

impl Derivation {
    pub const ALL: [Derivation; 3] = [Derivation::D1, Derivation::D2, Derivation::D3];

    pub fn index(self) -> usize {
        match self {
            Derivation::D1 => 1,
            Derivation::D2 => 2,
            Derivation::D3 => 3,
        }
    }
}

/// Applies a derivation fiberwise.
///
/// Grid elements use a spectral `d/dy` and a fourth-order central `d/dx`
/// with twisted ghost columns; closed forms need analytic partials for
/// `D1` and `D2`.
pub fn derivation(which: Derivation, a: &Element) -> Result<Element> {
    match a.flavor() {
        Flavor::Grid => {
            let g = a.grid().unwrap();
            let c = a.params().c;
            let out = match which {
                Derivation::D1 => g.x_derivative(c).map(|z| -z),
                Derivation::D2 => {
                    let dy = g.y_derivative();
                    g.map_indexed(|p, ix, iy, v| {
                        let x = ix as f64 / g.nx() as f64;
                        Complex64::new(0.0, 2.0 * PI * (c * p) as f64 * x) * v - dy.get(p, ix, iy)
                    })
                }
                Derivation::D3 => g.map_indexed(|p, _, _, v| Complex64::new(0.0, 2.0 * PI * p as f64) * v),
            };
            Ok(a.with_repr(a.band(), a.clamped(), Repr::Grid(Arc::new(out))))
        }
        Flavor::ClosedForm => {
            if which != Derivation::D3 && !a.has_partials() {
                return Err(QhmError::Capability(format!(
                    "derivation {} needs analytic partials on a closed-form element",
                    which.index()
                )));
            }
            Ok(a.with_repr(
                a.band(),
                a.clamped(),
                Repr::Closed(Arc::new(Derived { which, inner: a.clone() })),
            ))
        }
    }
}

pub fn derivation_1(a: &Element) -> Result<Element> {
    derivation(Derivation::D1, a)
}

pub fn derivation_2(a: &Element) -> Result<Element> {
    derivation(Derivation::D2, a)
}

pub fn derivation_3(a: &Element) -> Result<Element> {
    derivation(Derivation::D3, a)
}

struct Derived {
    which: Derivation,
    inner: Element,
}

impl FiberFunction for Derived {
    fn value(&self, x: f64, y: f64, p: i64) -> Complex64 {
        match self.which {
            Derivation::D3 => Complex64::new(0.0, 2.0 * PI * p as f64) * self.inner.fundamental(x, y, p),
            Derivation::D1 => {
                let (dx, _) = self.inner.fundamental_partials(x, y, p).expect("checked at construction");
                -dx
            }
            Derivation::D2 => {
                let (_, dy) = self.inner.fundamental_partials(x, y, p).expect("checked at construction");
                let c = self.inner.params().c;
                Complex64::new(0.0, 2.0 * PI * (c * p) as f64 * x) * self.inner.fundamental(x, y, p) - dy
            }
        }
    }

    fn partials(&self, x: f64, y: f64, p: i64) -> Option<(Complex64, Complex64)> {
        match self.which {
            Derivation::D3 => {
                let k = Complex64::new(0.0, 2.0 * PI * p as f64);
                let (dx, dy) = self.inner.fundamental_partials(x, y, p)?;
                Some((k * dx, k * dy))
            }
            _ => None,
        }
    }

    fn has_partials(&self) -> bool {
        self.which == Derivation::D3 && self.inner.has_partials()
    }
}

/// `L(a)` and the three norms it is the maximum of.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipReport {
    pub value: f64,
    pub norms: Vec<NormReport>,
    /// 1-based index of the derivation attaining the maximum.
    pub active: usize,
}

/// `L(a) = max_i ||d_i(a)||_{inf,inf,1}`.
pub fn lip_seminorm(a: &Element) -> Result<f64> {
    Ok(lip_report(a, &SupOptions::default())?.value)
}

pub fn lip_report(a: &Element, opts: &SupOptions) -> Result<LipReport> {
    if log::log_enabled!(log::Level::Warn) {
        let defect = a.selfadjoint_defect();
        if defect > 1e-12 {
            log::warn!("lip_seminorm called on a non-self-adjoint element (defect {defect:e})");
        }
    }
    let mut norms = Vec::with_capacity(3);
    for d in Derivation::ALL {
        norms.push(sup_sum_norm_with(&derivation(d, a)?, opts));
    }
    let (mut active, mut value) = (1, norms[0].sup_sum);
    for (i, n) in norms.iter().enumerate().skip(1) {
        if n.sup_sum > value {
            value = n.sup_sum;
            active = i + 1;
        }
    }
    Ok(LipReport { value, norms, active })
}
