//! Windowed trigonometric elements: a dense, analytically known family.
//!
//! `phi(x, y, p) = w_p(x) * sum_{m,n} c_{m,n,p} e(m x) e(n y)` on the
//! fundamental domain, with `w_0 = 1` and, for `p != 0`, a window that
//! vanishes to high order at `x = 0` and `x = 1` so the twisted extension
//! stays smooth.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Element, FiberFunction};
use crate::error::{QhmError, Result};
use crate::params::{unit_phase, ModelParams, Truncation};

/// Default number of trigonometric modes per direction in random elements.
pub const DEFAULT_MODES: usize = 3;

/// `w(x) = sin(pi (x - margin) / (1 - 2 margin))^(2 order)` inside the margins, zero outside.
///
/// Vanishes with its first `2 order - 1` derivatives at both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub margin: f64,
    pub order: u32,
}

impl Default for Window {
    fn default() -> Self {
        Window { margin: 0.0, order: 3 }
    }
}

impl Window {
    pub fn new(margin: f64, order: u32) -> Result<Self> {
        if !(0.0..0.5).contains(&margin) || order == 0 {
            return Err(QhmError::Config(format!(
                "window needs margin in [0, 0.5) and order >= 1, got ({margin}, {order})"
            )));
        }
        Ok(Window { margin, order })
    }

    /// `(w(x), w'(x))` for `x` in `[0, 1]`.
    #[inline]
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let width = 1.0 - 2.0 * self.margin;
        let u = (x - self.margin) / width;
        if u <= 0.0 || u >= 1.0 {
            return (0.0, 0.0);
        }
        let (s, c) = (PI * u).sin_cos();
        let k = 2 * self.order as i32;
        let w = s.powi(k);
        let dw = k as f64 * s.powi(k - 1) * c * PI / width;
        (w, dw)
    }
}

/// Coefficients `c_{m,n,p}` for `|m| <= mx`, `|n| <= my`, `|p| <= band`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowedElement {
    pub band: usize,
    pub mx: usize,
    pub my: usize,
    pub window: Window,
    /// Layout `[p + band][m + mx][n + my]`.
    pub coeffs: Vec<Complex64>,
}

impl WindowedElement {
    pub fn new(band: usize, mx: usize, my: usize, window: Window, coeffs: Vec<Complex64>) -> Result<Self> {
        let expected = (2 * band + 1) * (2 * mx + 1) * (2 * my + 1);
        if coeffs.len() != expected {
            return Err(QhmError::Config(format!(
                "windowed element needs {expected} coefficients, got {}",
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(QhmError::Domain("non-finite coefficient".into()));
        }
        Ok(WindowedElement { band, mx, my, window, coeffs })
    }

    #[inline]
    pub fn index(&self, p: i64, m: i64, n: i64) -> usize {
        let wm = 2 * self.mx + 1;
        let wn = 2 * self.my + 1;
        ((p + self.band as i64) as usize * wm + (m + self.mx as i64) as usize) * wn
            + (n + self.my as i64) as usize
    }

    pub fn coeff(&self, p: i64, m: i64, n: i64) -> Complex64 {
        self.coeffs[self.index(p, m, n)]
    }

    pub fn into_element(self, params: ModelParams, trunc: Truncation) -> Result<Element> {
        let band = self.band;
        Element::closed_form(params, trunc, band, Arc::new(self))
    }

    /// `(w_p(x), w_p'(x))`; the `p = 0` fiber is unwindowed.
    #[inline]
    pub fn window_at(&self, x: f64, p: i64) -> (f64, f64) {
        if p == 0 {
            (1.0, 0.0)
        } else {
            self.window.eval(x)
        }
    }

    /// The trig part alone, from precomputed powers.
    #[inline]
    fn trig_value(&self, ex: &[Complex64], ey: &[Complex64], p: i64) -> Complex64 {
        let wn = 2 * self.my + 1;
        let base = self.index(p, -(self.mx as i64), -(self.my as i64));
        let mut t = Complex64::new(0.0, 0.0);
        for (im, exm) in ex.iter().enumerate() {
            let row = &self.coeffs[base + im * wn..base + (im + 1) * wn];
            let inner: Complex64 = row.iter().zip(ey).map(|(c, e)| c * e).sum();
            t += exm * inner;
        }
        t
    }

    /// Returns `(T, T_y)` where `T = sum c e(mx) e(ny)` is the trig part and `T_x` separately.
    #[inline]
    fn trig(&self, x: f64, y: f64, p: i64) -> (Complex64, Complex64, Complex64) {
        let ex = powers(x, self.mx);
        let ey = powers(y, self.my);
        let wn = 2 * self.my + 1;
        let base = self.index(p, -(self.mx as i64), -(self.my as i64));
        let mut t = Complex64::new(0.0, 0.0);
        let mut tx = Complex64::new(0.0, 0.0);
        let mut ty = Complex64::new(0.0, 0.0);
        for (im, exm) in ex.iter().enumerate() {
            let row = &self.coeffs[base + im * wn..base + (im + 1) * wn];
            let mut inner = Complex64::new(0.0, 0.0);
            let mut inner_y = Complex64::new(0.0, 0.0);
            for (jn, (c, eyn)) in row.iter().zip(&ey).enumerate() {
                let term = c * eyn;
                inner += term;
                let n = jn as f64 - self.my as f64;
                inner_y += term * n;
            }
            let m = im as f64 - self.mx as f64;
            t += exm * inner;
            tx += exm * inner * m;
            ty += exm * inner_y;
        }
        let two_pi_i = Complex64::new(0.0, 2.0 * PI);
        (t, tx * two_pi_i, ty * two_pi_i)
    }
}

/// `[e(-k x), ..., e(k x)]`.
#[inline]
pub(crate) fn powers(x: f64, k: usize) -> Vec<Complex64> {
    let w = unit_phase(x);
    let mut out = vec![Complex64::new(1.0, 0.0); 2 * k + 1];
    let mut acc = Complex64::new(1.0, 0.0);
    for j in 1..=k {
        acc *= w;
        out[k + j] = acc;
        out[k - j] = acc.conj();
    }
    out
}

impl FiberFunction for WindowedElement {
    fn value(&self, x: f64, y: f64, p: i64) -> Complex64 {
        if p.unsigned_abs() as usize > self.band {
            return Complex64::new(0.0, 0.0);
        }
        let (w, _) = self.window_at(x, p);
        if w == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        self.trig_value(&powers(x, self.mx), &powers(y, self.my), p) * w
    }

    fn values(&self, x: f64, y: f64, band: usize, out: &mut [Complex64]) {
        let (ex, ey) = (powers(x, self.mx), powers(y, self.my));
        let (w, _) = self.window.eval(x);
        let b = band as i64;
        for p in -b..=b {
            let slot = &mut out[(p + b) as usize];
            *slot = if p.unsigned_abs() as usize > self.band {
                Complex64::new(0.0, 0.0)
            } else if p == 0 {
                self.trig_value(&ex, &ey, 0)
            } else if w == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                self.trig_value(&ex, &ey, p) * w
            };
        }
    }

    fn partials(&self, x: f64, y: f64, p: i64) -> Option<(Complex64, Complex64)> {
        let zero = Complex64::new(0.0, 0.0);
        if p.unsigned_abs() as usize > self.band {
            return Some((zero, zero));
        }
        let (w, dw) = self.window_at(x, p);
        if w == 0.0 && dw == 0.0 {
            return Some((zero, zero));
        }
        let (t, tx, ty) = self.trig(x, y, p);
        Some((t * dw + tx * w, ty * w))
    }

    fn has_partials(&self) -> bool {
        true
    }
}

/// Random windowed element with band `trunc.p_max`; deterministic in `seed`.
///
/// Coefficients are uniform in the unit square, scaled by `exp(-decay (m^2 + n^2 + p^2))`.
pub fn random_element(seed: u64, trunc: Truncation, params: ModelParams, decay: f64) -> Result<Element> {
    random_element_banded(seed, trunc, params, decay, trunc.p_max)
}

/// As [`random_element`], with an explicit band `<= trunc.p_max`.
pub fn random_element_banded(
    seed: u64,
    trunc: Truncation,
    params: ModelParams,
    decay: f64,
    band: usize,
) -> Result<Element> {
    random_windowed(seed, decay, band, DEFAULT_MODES)?.into_element(params, trunc)
}

/// The coefficient set behind [`random_element_banded`].
pub fn random_windowed(seed: u64, decay: f64, band: usize, modes: usize) -> Result<WindowedElement> {
    if !(decay > 0.0 && decay.is_finite()) {
        return Err(QhmError::Config(format!("decay must be positive, got {decay}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = band as i64;
    let k = modes as i64;
    let mut coeffs = Vec::with_capacity((2 * band + 1) * (2 * modes + 1).pow(2));
    for p in -b..=b {
        for m in -k..=k {
            for n in -k..=k {
                let scale = (-decay * (m * m + n * n + p * p) as f64).exp();
                let re: f64 = rng.random_range(-1.0..1.0);
                let im: f64 = rng.random_range(-1.0..1.0);
                coeffs.push(Complex64::new(re, im) * scale);
            }
        }
    }
    WindowedElement::new(band, modes, modes, Window::default(), coeffs)
}
