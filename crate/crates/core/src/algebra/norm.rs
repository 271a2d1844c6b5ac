use serde::{Deserialize, Serialize};

use crate::element::{split_unit, Element, Flavor};
use crate::numeric::{fiber_sum, pairwise_sum};

/// The sup-sum norm `sum_p sup_{x,y} |a(x,y,p)|` together with its fiber profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub sup_sum: f64,
    /// `per_p_sups[p + band]` is the sup of `|a(., ., p)|`.
    pub per_p_sups: Vec<f64>,
    pub band: usize,
    /// `(x, y, p)` where each fiber's sup was attained.
    pub grid_argmax: Vec<(f64, f64, i64)>,
}

impl NormReport {
    pub fn fiber_sup(&self, p: i64) -> f64 {
        if p.unsigned_abs() as usize > self.band {
            0.0
        } else {
            self.per_p_sups[(p + self.band as i64) as usize]
        }
    }

    /// `sum_{|p| >= n} sup |a(., ., p)|`.
    pub fn tail_mass(&self, n: usize) -> f64 {
        let b = self.band as i64;
        pairwise_sum(
            &(-b..=b)
                .filter(|p| p.unsigned_abs() as usize >= n)
                .map(|p| self.fiber_sup(p))
                .collect::<Vec<_>>(),
        )
    }
}

/// How the supremum over each fiber is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupOptions {
    /// Refine the grid argmax by golden-section line searches (closed forms only).
    pub polish: bool,
    pub polish_rounds: usize,
}

impl Default for SupOptions {
    fn default() -> Self {
        SupOptions { polish: true, polish_rounds: 2 }
    }
}

impl SupOptions {
    pub const GRID_ONLY: SupOptions = SupOptions { polish: false, polish_rounds: 0 };
}

/// Sup-sum norm with default options.
///
/// The supremum over `R x T` reduces to the fundamental domain because the
/// twist phase is unimodular. Values are certified from below.
pub fn sup_sum_norm(a: &Element) -> NormReport {
    sup_sum_norm_with(a, &SupOptions::default())
}

pub fn sup_sum_norm_with(a: &Element, opts: &SupOptions) -> NormReport {
    let t = *a.trunc();
    let b = a.band() as i64;
    let grid = match a.flavor() {
        Flavor::Grid => Some(a.grid().unwrap()),
        Flavor::ClosedForm => None,
    };
    let mut per_p_sups = Vec::with_capacity(2 * a.band() + 1);
    let mut grid_argmax = Vec::with_capacity(2 * a.band() + 1);
    for p in -b..=b {
        let mut best = (0.0f64, 0.0f64, 0.0f64);
        for ix in 0..t.nx {
            let x = t.x_at(ix);
            for iy in 0..t.ny {
                let v = match grid {
                    Some(g) => g.get(p, ix, iy).norm(),
                    None => a.fundamental(x, t.y_at(iy), p).norm(),
                };
                if v > best.0 {
                    best = (v, x, t.y_at(iy));
                }
            }
        }
        if opts.polish && grid.is_none() && best.0 > 0.0 {
            best = polish(a, p, best, 1.0 / t.nx as f64, 1.0 / t.ny as f64, opts.polish_rounds);
        }
        per_p_sups.push(best.0);
        grid_argmax.push((best.1, best.2, p));
    }
    NormReport { sup_sum: fiber_sum(&per_p_sups), per_p_sups, band: a.band(), grid_argmax }
}

/// Alternating golden-section searches in `x` then `y` around a grid maximum.
fn polish(a: &Element, p: i64, start: (f64, f64, f64), hx: f64, hy: f64, rounds: usize) -> (f64, f64, f64) {
    let mut best = start;
    // |twist phase| = 1, so the modulus only needs the fundamental value
    let modulus = |x: f64, y: f64| a.fundamental(split_unit(x).1, split_unit(y).1, p).norm();
    for _ in 0..rounds {
        let (x, v) = golden_max(|x| modulus(x, best.2), best.1 - hx, best.1 + hx);
        if v > best.0 {
            best = (v, x, best.2);
        }
        let (y, v) = golden_max(|y| modulus(best.1, y), best.2 - hy, best.2 + hy);
        if v > best.0 {
            best = (v, best.1, y);
        }
    }
    // report the argmax in the fundamental domain
    (best.0, best.1 - best.1.floor(), best.2 - best.2.floor())
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..40 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::involution;
    use crate::element::random_element;
    use crate::params::{ModelParams, Truncation};
    use num_complex::Complex64;

    fn setup() -> (ModelParams, Truncation) {
        (ModelParams::default(), Truncation::new(3, 16, 16, 6).unwrap())
    }

    #[test]
    fn identity_has_unit_norm() {
        let (params, trunc) = setup();
        let r = sup_sum_norm(&Element::identity(params, trunc));
        assert_eq!(r.sup_sum, 1.0);
        assert_eq!(r.per_p_sups, vec![1.0]);
    }

    #[test]
    fn homogeneity_and_adjoint_are_exact() {
        let (params, trunc) = setup();
        let a = random_element(5, trunc, params, 0.6).unwrap();
        for el in [a.clone(), a.sample()] {
            let n = sup_sum_norm(&el).sup_sum;
            assert_eq!(sup_sum_norm(&el.scale_real(2.0)).sup_sum, 2.0 * n);
            assert_eq!(sup_sum_norm(&involution(&el)).sup_sum, n);
        }
    }

    #[test]
    fn polish_never_lowers_the_grid_value() {
        let (params, trunc) = setup();
        let a = random_element(8, trunc, params, 0.4).unwrap();
        let coarse = sup_sum_norm_with(&a, &SupOptions::GRID_ONLY);
        let fine = sup_sum_norm(&a);
        for (c, f) in coarse.per_p_sups.iter().zip(&fine.per_p_sups) {
            assert!(f >= c);
        }
        assert!(fine.sup_sum >= coarse.sup_sum);
    }

    #[test]
    fn tail_mass_sums_outer_fibers() {
        let (params, trunc) = setup();
        let el = Element::from_fn(params, trunc, 2, |_, _, p| Complex64::new(p as f64, 0.0)).unwrap();
        let r = sup_sum_norm_with(&el, &SupOptions::GRID_ONLY);
        assert_eq!(r.sup_sum, 6.0);
        assert_eq!(r.tail_mass(2), 4.0);
        assert_eq!(r.tail_mass(3), 0.0);
    }
}
