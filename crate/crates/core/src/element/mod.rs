//! Elements of the twisted function space at finite truncation.
//!
//! An element is a function `phi(x, y, p)` on `R x T x Z` obeying the twist
//! `phi(x + k, y, p) = e(c k p y) phi(x, y, p)`. Only the fundamental domain
//! `[0,1) x [0,1)` is ever stored or evaluated directly; everything else goes
//! through [`fold_evaluate`].

mod grid;
mod serial;
mod windowed;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{QhmError, Result};
use crate::params::{unit_phase, ModelParams, Truncation};

pub use grid::{interpolate, sample, GridData};
pub use serial::ElementFile;
pub(crate) use windowed::powers;
pub use windowed::{random_element, random_element_banded, random_windowed, Window, WindowedElement, DEFAULT_MODES};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A function on the fundamental domain, given analytically.
///
/// `value` is only called with `x, y` in `[0, 1)` and `|p| <= band`.
pub trait FiberFunction: Send + Sync {
    fn value(&self, x: f64, y: f64, p: i64) -> Complex64;

    /// `(d/dx, d/dy)` at a fundamental-domain point.
    fn partials(&self, _x: f64, _y: f64, _p: i64) -> Option<(Complex64, Complex64)> {
        None
    }

    fn has_partials(&self) -> bool {
        false
    }

    /// Every fiber `-band..=band` at one point, into `out[p + band]`.
    fn values(&self, x: f64, y: f64, band: usize, out: &mut [Complex64]) {
        let b = band as i64;
        for p in -b..=b {
            out[(p + b) as usize] = self.value(x, y, p);
        }
    }
}

/// Which representation backs an element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flavor {
    Grid,
    ClosedForm,
}

#[derive(Clone)]
pub(crate) enum Repr {
    Grid(Arc<GridData>),
    Closed(Arc<dyn FiberFunction>),
}

/// An element of the truncated algebra. Immutable and cheap to clone.
#[derive(Clone)]
pub struct Element {
    params: ModelParams,
    trunc: Truncation,
    band: usize,
    clamped: bool,
    repr: Repr,
}

impl fmt::Debug for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Element")
            .field("params", &self.params)
            .field("trunc", &self.trunc)
            .field("band", &self.band)
            .field("clamped", &self.clamped)
            .field("flavor", &self.flavor())
            .finish()
    }
}

impl Element {
    /// Wraps an analytic fiber function supported on `|p| <= band`.
    pub fn closed_form(
        params: ModelParams,
        trunc: Truncation,
        band: usize,
        f: Arc<dyn FiberFunction>,
    ) -> Result<Self> {
        if band > trunc.p_max {
            return Err(QhmError::Config(format!(
                "band {band} exceeds truncation P = {}",
                trunc.p_max
            )));
        }
        Ok(Element { params, trunc, band, clamped: false, repr: Repr::Closed(f) })
    }

    pub fn from_grid(params: ModelParams, trunc: Truncation, grid: GridData) -> Result<Self> {
        if grid.nx() != trunc.nx || grid.ny() != trunc.ny || grid.band() > trunc.p_max {
            return Err(QhmError::Config("grid shape does not match truncation".into()));
        }
        if grid.values().iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(QhmError::Domain("grid contains non-finite values".into()));
        }
        Ok(Element {
            params,
            trunc,
            band: grid.band(),
            clamped: false,
            repr: Repr::Grid(Arc::new(grid)),
        })
    }

    /// The unit `I(x, y, p) = delta_{p0}`.
    pub fn identity(params: ModelParams, trunc: Truncation) -> Self {
        Self::constant(params, trunc, Complex64::new(1.0, 0.0))
    }

    /// Scalar multiple of the unit.
    pub fn constant(params: ModelParams, trunc: Truncation, value: Complex64) -> Self {
        Element {
            params,
            trunc,
            band: 0,
            clamped: false,
            repr: Repr::Closed(Arc::new(Constant(value))),
        }
    }

    /// Element supported at `p = 0` with a periodic fiber `f(x, y)`.
    pub fn p0_function<F>(params: ModelParams, trunc: Truncation, f: F) -> Self
    where
        F: Fn(f64, f64) -> Complex64 + Send + Sync + 'static,
    {
        Element {
            params,
            trunc,
            band: 0,
            clamped: false,
            repr: Repr::Closed(Arc::new(FnFiber { f: move |x, y, _p| f(x, y) })),
        }
    }

    /// Element from an arbitrary fundamental-domain callback.
    pub fn from_fn<F>(params: ModelParams, trunc: Truncation, band: usize, f: F) -> Result<Self>
    where
        F: Fn(f64, f64, i64) -> Complex64 + Send + Sync + 'static,
    {
        Self::closed_form(params, trunc, band, Arc::new(FnFiber { f }))
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn trunc(&self) -> &Truncation {
        &self.trunc
    }

    /// Support bound: the element vanishes for `|p| > band`.
    pub fn band(&self) -> usize {
        self.band
    }

    /// True if a product's band was cut back to the working truncation.
    pub fn clamped(&self) -> bool {
        self.clamped
    }

    pub fn flavor(&self) -> Flavor {
        match self.repr {
            Repr::Grid(_) => Flavor::Grid,
            Repr::Closed(_) => Flavor::ClosedForm,
        }
    }

    pub fn grid(&self) -> Option<&GridData> {
        match &self.repr {
            Repr::Grid(g) => Some(g),
            Repr::Closed(_) => None,
        }
    }

    /// Whether first partials are available (always for grids, via stencils).
    pub fn has_partials(&self) -> bool {
        match &self.repr {
            Repr::Grid(_) => true,
            Repr::Closed(f) => f.has_partials(),
        }
    }

    pub(crate) fn with_repr(&self, band: usize, clamped: bool, repr: Repr) -> Element {
        Element { params: self.params, trunc: self.trunc, band, clamped, repr }
    }

    pub(crate) fn closed(&self, band: usize, f: Arc<dyn FiberFunction>) -> Element {
        self.with_repr(band, false, Repr::Closed(f))
    }

    pub(crate) fn set_clamped(mut self, clamped: bool) -> Element {
        self.clamped = clamped;
        self
    }

    /// True when `other` lives in the same algebra and on the same grid.
    pub fn compatible(&self, other: &Element) -> bool {
        self.params == other.params && self.trunc == other.trunc
    }

    pub(crate) fn check_compatible(&self, other: &Element) -> Result<()> {
        if self.compatible(other) {
            Ok(())
        } else {
            Err(QhmError::Config(format!(
                "parameter mismatch: {:?}/{:?} vs {:?}/{:?}",
                self.params, self.trunc, other.params, other.trunc
            )))
        }
    }

    /// Value on the fundamental domain.
    #[inline]
    pub(crate) fn fundamental(&self, x: f64, y: f64, p: i64) -> Complex64 {
        if p.unsigned_abs() as usize > self.band {
            return ZERO;
        }
        match &self.repr {
            Repr::Grid(g) => g.interpolate_unchecked(self.params.c, x, y, p),
            Repr::Closed(f) => f.value(x, y, p),
        }
    }

    #[inline]
    pub(crate) fn fundamental_partials(
        &self,
        x: f64,
        y: f64,
        p: i64,
    ) -> Option<(Complex64, Complex64)> {
        if p.unsigned_abs() as usize > self.band {
            return Some((ZERO, ZERO));
        }
        match &self.repr {
            Repr::Grid(_) => None,
            Repr::Closed(f) => f.partials(x, y, p),
        }
    }

    /// Samples the element at `(ix/Nx, iy/Ny)` for every `|p| <= band`.
    pub fn sample(&self) -> Element {
        match &self.repr {
            Repr::Grid(_) => self.clone(),
            Repr::Closed(_) => {
                let grid = GridData::from_fn(self.trunc.nx, self.trunc.ny, self.band, |x, y, p| {
                    self.fundamental(x, y, p)
                });
                self.with_repr(self.band, self.clamped, Repr::Grid(Arc::new(grid)))
            }
        }
    }

    /// Grid values `[p + band][ix][iy]`, sampling if needed.
    pub fn grid_values(&self) -> Arc<GridData> {
        match &self.sample().repr {
            Repr::Grid(g) => g.clone(),
            Repr::Closed(_) => unreachable!(),
        }
    }

    /// `s * self`.
    pub fn scale(&self, s: Complex64) -> Element {
        match &self.repr {
            Repr::Grid(g) => self.with_repr(self.band, self.clamped, Repr::Grid(Arc::new(g.map(|z| z * s)))),
            Repr::Closed(_) => self.closed(
                self.band,
                Arc::new(Combination { terms: vec![(s, self.clone())] }),
            ),
        }
    }

    pub fn scale_real(&self, s: f64) -> Element {
        self.scale(Complex64::new(s, 0.0))
    }

    /// `sum_i w_i * e_i` over compatible elements.
    pub fn combine(terms: &[(Complex64, Element)]) -> Result<Element> {
        let first = terms
            .first()
            .ok_or_else(|| QhmError::Config("empty linear combination".into()))?;
        for (_, e) in terms {
            first.1.check_compatible(e)?;
        }
        let band = terms.iter().map(|(_, e)| e.band).max().unwrap_or(0);
        let clamped = terms.iter().any(|(_, e)| e.clamped);
        if terms.iter().all(|(_, e)| e.flavor() == Flavor::Grid) {
            let trunc = first.1.trunc;
            let grids: Vec<_> = terms.iter().map(|(w, e)| (*w, e.grid_values())).collect();
            let grid = GridData::from_fn(trunc.nx, trunc.ny, band, |_, _, _| ZERO);
            let grid = grid.map_indexed(|p, ix, iy, _| {
                grids.iter().map(|(w, g)| w * g.get(p, ix, iy)).sum()
            });
            return Ok(first.1.with_repr(band, clamped, Repr::Grid(Arc::new(grid))));
        }
        Ok(first
            .1
            .with_repr(band, clamped, Repr::Closed(Arc::new(Combination { terms: terms.to_vec() }))))
    }

    pub fn add(&self, other: &Element) -> Result<Element> {
        let one = Complex64::new(1.0, 0.0);
        Element::combine(&[(one, self.clone()), (one, other.clone())])
    }

    pub fn sub(&self, other: &Element) -> Result<Element> {
        Element::combine(&[
            (Complex64::new(1.0, 0.0), self.clone()),
            (Complex64::new(-1.0, 0.0), other.clone()),
        ])
    }

    /// Keeps the fibers `|p| <= n` and drops the rest.
    pub fn truncate_band(&self, n: usize) -> Element {
        let band = self.band.min(n);
        match &self.repr {
            Repr::Grid(g) => self.with_repr(band, self.clamped, Repr::Grid(Arc::new(g.restrict(band)))),
            Repr::Closed(_) => self.closed(band, Arc::new(BandLimit { inner: self.clone(), band })),
        }
    }

    /// `(self + self*) / 2`; the result is self-adjoint bit for bit.
    pub fn selfadjoint_part(&self) -> Element {
        match &self.repr {
            Repr::Grid(g) => {
                let out = g.map_indexed(|p, ix, iy, v| {
                    let w = g.get(-p, ix, iy).conj();
                    0.5 * (v + w)
                });
                self.with_repr(self.band, self.clamped, Repr::Grid(Arc::new(out)))
            }
            Repr::Closed(_) => self
                .closed(self.band, Arc::new(SelfAdjointPart { inner: self.clone() }))
                .set_clamped(self.clamped),
        }
    }

    /// Largest `|a(x,y,p) - conj(a(x,y,-p))|` over the grid; zero iff self-adjoint on the grid.
    pub fn selfadjoint_defect(&self) -> f64 {
        let g = self.grid_values();
        let b = self.band as i64;
        let mut worst = 0.0f64;
        for p in -b..=b {
            for ix in 0..g.nx() {
                for iy in 0..g.ny() {
                    worst = worst.max((g.get(p, ix, iy) - g.get(-p, ix, iy).conj()).norm());
                }
            }
        }
        worst
    }
}

/// Evaluates an element anywhere on `R x R x Z` through the twist.
///
/// Returns `e(c k p y0) * phi(x - k, y0, p)` with `k = floor(x)` and `y0 = y mod 1`.
pub fn fold_evaluate(el: &Element, x: f64, y: f64, p: i64) -> Result<Complex64> {
    if !(x.is_finite() && y.is_finite()) {
        return Err(QhmError::Domain(format!("non-finite evaluation point ({x}, {y})")));
    }
    Ok(fold(el, x, y, p))
}

/// Splits `x` into `(k, x0)` with `x0` in `[0, 1)`.
#[inline]
pub(crate) fn split_unit(x: f64) -> (i64, f64) {
    let k = x.floor();
    let mut x0 = x - k;
    let mut k = k as i64;
    if x0 >= 1.0 {
        x0 -= 1.0;
        k += 1;
    }
    (k, x0)
}

#[inline]
pub(crate) fn wrap_unit(y: f64) -> f64 {
    split_unit(y).1
}

#[inline]
pub(crate) fn fold(el: &Element, x: f64, y: f64, p: i64) -> Complex64 {
    if p.unsigned_abs() as usize > el.band {
        return ZERO;
    }
    let (k, x0) = split_unit(x);
    let y0 = wrap_unit(y);
    let v = el.fundamental(x0, y0, p);
    if k == 0 || p == 0 {
        v
    } else {
        twist_phase(el.params.c, k, p, y0) * v
    }
}

/// `e(c k p y0)`; the product is split with an FMA so the reduction mod 1 keeps full precision.
/// All fibers of the extension at `(x, y)`, into `out[p + band]`.
pub(crate) fn fold_all(el: &Element, x: f64, y: f64, out: &mut [Complex64]) {
    let (k, x0) = split_unit(x);
    let y0 = wrap_unit(y);
    let b = el.band as i64;
    match &el.repr {
        Repr::Closed(f) => f.values(x0, y0, el.band, out),
        Repr::Grid(g) => {
            for p in -b..=b {
                out[(p + b) as usize] = g.interpolate_unchecked(el.params.c, x0, y0, p);
            }
        }
    }
    if k != 0 {
        for p in (-b..=b).filter(|&p| p != 0) {
            out[(p + b) as usize] *= twist_phase(el.params.c, k, p, y0);
        }
    }
}

#[inline]
pub(crate) fn twist_phase(c: i64, k: i64, p: i64, y0: f64) -> Complex64 {
    let ckp = c * k * p;
    // computed for |ckp| and conjugated, so e(-t) is exactly conj(e(t))
    let n = ckp.unsigned_abs() as f64;
    let t = n * y0;
    let err = n.mul_add(y0, -t);
    let z = unit_phase((t - t.floor()) + err);
    if ckp < 0 {
        z.conj()
    } else {
        z
    }
}

/// Value and partials through the twist. `None` if partials are unavailable.
#[inline]
pub(crate) fn fold_jet(el: &Element, x: f64, y: f64, p: i64) -> Option<(Complex64, Complex64, Complex64)> {
    if p.unsigned_abs() as usize > el.band {
        return Some((ZERO, ZERO, ZERO));
    }
    let (k, x0) = split_unit(x);
    let y0 = wrap_unit(y);
    let v = el.fundamental(x0, y0, p);
    let (dx, dy) = el.fundamental_partials(x0, y0, p)?;
    if k == 0 || p == 0 {
        return Some((v, dx, dy));
    }
    let ph = twist_phase(el.params.c, k, p, y0);
    let ckp = (el.params.c * k * p) as f64;
    let dy = dy + Complex64::new(0.0, 2.0 * PI * ckp) * v;
    Some((ph * v, ph * dx, ph * dy))
}

struct Constant(Complex64);

impl FiberFunction for Constant {
    fn value(&self, _x: f64, _y: f64, p: i64) -> Complex64 {
        if p == 0 {
            self.0
        } else {
            ZERO
        }
    }

    fn partials(&self, _x: f64, _y: f64, _p: i64) -> Option<(Complex64, Complex64)> {
        Some((ZERO, ZERO))
    }

    fn has_partials(&self) -> bool {
        true
    }
}

struct FnFiber<F> {
    f: F,
}

impl<F> FiberFunction for FnFiber<F>
where
    F: Fn(f64, f64, i64) -> Complex64 + Send + Sync,
{
    fn value(&self, x: f64, y: f64, p: i64) -> Complex64 {
        (self.f)(x, y, p)
    }
}

pub(crate) struct Combination {
    pub(crate) terms: Vec<(Complex64, Element)>,
}

impl FiberFunction for Combination {
    fn value(&self, x: f64, y: f64, p: i64) -> Complex64 {
        self.terms.iter().map(|(w, e)| w * e.fundamental(x, y, p)).sum()
    }

    fn partials(&self, x: f64, y: f64, p: i64) -> Option<(Complex64, Complex64)> {
        let mut acc = (ZERO, ZERO);
        for (w, e) in &self.terms {
            let (dx, dy) = e.fundamental_partials(x, y, p)?;
            acc.0 += w * dx;
            acc.1 += w * dy;
        }
        Some(acc)
    }

    fn has_partials(&self) -> bool {
        self.terms.iter().all(|(_, e)| e.has_partials() && e.flavor() == Flavor::ClosedForm)
    }
}

struct BandLimit {
    inner: Element,
    band: usize,
}

impl FiberFunction for BandLimit {
    fn value(&self, x: f64, y: f64, p: i64) -> Complex64 {
        if p.unsigned_abs() as usize > self.band {
            ZERO
        } else {
            self.inner.fundamental(x, y, p)
        }
    }

    fn partials(&self, x: f64, y: f64, p: i64) -> Option<(Complex64, Complex64)> {
        if p.unsigned_abs() as usize > self.band {
            Some((ZERO, ZERO))
        } else {
            self.inner.fundamental_partials(x, y, p)
        }
    }

    fn has_partials(&self) -> bool {
        self.inner.has_partials() && self.inner.flavor() == Flavor::ClosedForm
    }
}

struct SelfAdjointPart {
    inner: Element,
}

impl FiberFunction for SelfAdjointPart {
    fn value(&self, x: f64, y: f64, p: i64) -> Complex64 {
        let u = self.inner.fundamental(x, y, p);
        let v = self.inner.fundamental(x, y, -p).conj();
        0.5 * (u + v)
    }

    fn partials(&self, x: f64, y: f64, p: i64) -> Option<(Complex64, Complex64)> {
        let (ux, uy) = self.inner.fundamental_partials(x, y, p)?;
        let (vx, vy) = self.inner.fundamental_partials(x, y, -p)?;
        Some((0.5 * (ux + vx.conj()), 0.5 * (uy + vy.conj())))
    }

    fn has_partials(&self) -> bool {
        self.inner.has_partials() && self.inner.flavor() == Flavor::ClosedForm
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (ModelParams, Truncation) {
        (ModelParams::default(), Truncation::new(3, 16, 16, 6).unwrap())
    }

    #[test]
    fn identity_folds_to_one() {
        let (params, trunc) = setup();
        let id = Element::identity(params, trunc);
        assert_eq!(fold_evaluate(&id, 3.7, 0.2, 0).unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(fold_evaluate(&id, 3.7, 0.2, 1).unwrap(), ZERO);
    }

    #[test]
    fn non_finite_points_are_domain_errors() {
        let (params, trunc) = setup();
        let id = Element::identity(params, trunc);
        assert!(matches!(fold_evaluate(&id, f64::NAN, 0.0, 0), Err(QhmError::Domain(_))));
        assert!(matches!(fold_evaluate(&id, 0.0, f64::INFINITY, 0), Err(QhmError::Domain(_))));
    }

    #[test]
    fn twist_relation_on_p1_fiber() {
        let (params, trunc) = setup();
        let el = random_element(3, trunc, params, 1.0).unwrap();
        for &(x, y) in &[(0.3, 0.1), (0.77, 0.9), (0.05, 0.5)] {
            let lhs = fold_evaluate(&el, x + 1.0, y, 1).unwrap();
            let rhs = unit_phase(params.c as f64 * y) * fold_evaluate(&el, x, y, 1).unwrap();
            assert!((lhs - rhs).norm() < 1e-13);
        }
    }

    #[test]
    fn outside_band_is_exactly_zero() {
        let (params, trunc) = setup();
        let el = random_element_banded(5, trunc, params, 1.0, 2).unwrap();
        assert_eq!(fold_evaluate(&el, 0.4, 0.4, 3).unwrap(), ZERO);
        assert_eq!(fold_evaluate(&el, -7.4, 2.4, -3).unwrap(), ZERO);
        assert_eq!(fold_evaluate(&el.sample(), 0.4, 0.4, 3).unwrap(), ZERO);
    }

    #[test]
    fn selfadjoint_part_is_exact_and_idempotent() {
        let (params, trunc) = setup();
        let el = random_element(11, trunc, params, 0.7).unwrap();
        let sa = el.selfadjoint_part();
        for &(x, y) in &[(0.1, 0.2), (0.6, 0.35), (0.99, 0.01)] {
            for p in -3..=3 {
                let a = fold_evaluate(&sa, x, y, p).unwrap();
                let b = fold_evaluate(&sa, x, y, -p).unwrap().conj();
                assert_eq!(a, b);
            }
        }
        let grid = sa.sample();
        assert_eq!(grid.selfadjoint_defect(), 0.0);
        let twice = grid.selfadjoint_part();
        assert_eq!(twice.grid_values().values(), grid.grid_values().values());
        let id = Element::identity(params, trunc);
        assert_eq!(id.selfadjoint_part().sample().grid_values().values(), id.sample().grid_values().values());
    }

    #[test]
    fn real_p0_fiber_is_fixed_by_selfadjoint_part() {
        let (params, trunc) = setup();
        let el = Element::p0_function(params, trunc, |x, y| {
            Complex64::new((2.0 * PI * x).cos() + y * (1.0 - y), 0.0)
        })
        .sample();
        let sa = el.selfadjoint_part();
        assert_eq!(sa.grid_values().values(), el.grid_values().values());
    }
}
