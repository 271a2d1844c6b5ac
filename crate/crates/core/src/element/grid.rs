use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{split_unit, twist_phase, Element, Flavor};
use crate::error::{QhmError, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Samples `[p + band][ix][iy]` on the uniform fundamental grid, plus the
/// per-column Fourier coefficients in `y` used for interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct GridData {
    nx: usize,
    ny: usize,
    band: usize,
    values: Vec<Complex64>,
    ycoef: Vec<Complex64>,
}

impl GridData {
    pub fn new(nx: usize, ny: usize, band: usize, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != (2 * band + 1) * nx * ny {
            return Err(QhmError::Config(format!(
                "grid data has {} values, expected {}",
                values.len(),
                (2 * band + 1) * nx * ny
            )));
        }
        let ycoef = column_coefficients(nx, ny, &values);
        Ok(GridData { nx, ny, band, values, ycoef })
    }

    pub fn from_fn<F>(nx: usize, ny: usize, band: usize, f: F) -> Self
    where
        F: Fn(f64, f64, i64) -> Complex64,
    {
        let mut values = Vec::with_capacity((2 * band + 1) * nx * ny);
        let b = band as i64;
        for p in -b..=b {
            for ix in 0..nx {
                let x = ix as f64 / nx as f64;
                for iy in 0..ny {
                    values.push(f(x, iy as f64 / ny as f64, p));
                }
            }
        }
        GridData::new(nx, ny, band, values).expect("shape is consistent by construction")
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn band(&self) -> usize {
        self.band
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    #[inline]
    fn offset(&self, p: i64, ix: usize) -> usize {
        ((p + self.band as i64) as usize * self.nx + ix) * self.ny
    }

    /// Sample at `(ix/Nx, iy/Ny, p)`; zero outside the band.
    #[inline]
    pub fn get(&self, p: i64, ix: usize, iy: usize) -> Complex64 {
        if p.unsigned_abs() as usize > self.band {
            return ZERO;
        }
        self.values[self.offset(p, ix) + iy]
    }

    /// One `y`-column of samples.
    pub fn column(&self, p: i64, ix: usize) -> &[Complex64] {
        let o = self.offset(p, ix);
        &self.values[o..o + self.ny]
    }

    pub fn map<F: Fn(Complex64) -> Complex64>(&self, f: F) -> GridData {
        let values = self.values.iter().map(|&z| f(z)).collect();
        GridData::new(self.nx, self.ny, self.band, values).unwrap()
    }

    /// Maps with access to `(p, ix, iy)`.
    pub fn map_indexed<F: Fn(i64, usize, usize, Complex64) -> Complex64>(&self, f: F) -> GridData {
        let b = self.band as i64;
        let mut values = Vec::with_capacity(self.values.len());
        for p in -b..=b {
            for ix in 0..self.nx {
                for iy in 0..self.ny {
                    values.push(f(p, ix, iy, self.get(p, ix, iy)));
                }
            }
        }
        GridData::new(self.nx, self.ny, self.band, values).unwrap()
    }

    /// Keeps only `|p| <= band`.
    pub fn restrict(&self, band: usize) -> GridData {
        let band = band.min(self.band);
        let lo = self.offset(-(band as i64), 0);
        let hi = self.offset(band as i64, 0) + self.nx * self.ny;
        GridData::new(self.nx, self.ny, band, self.values[lo..hi].to_vec()).unwrap()
    }

    /// Trigonometric interpolation of column `(p, ix)` at `y0` in `[0, 1)`.
    #[inline]
    fn column_at(&self, p: i64, ix: usize, basis: &[Complex64]) -> Complex64 {
        let o = self.offset(p, ix);
        self.ycoef[o..o + self.ny].iter().zip(basis).map(|(a, b)| a * b).sum()
    }

    /// Interpolated value at a fundamental-domain point. `|p| <= band` assumed.
    pub(crate) fn interpolate_unchecked(&self, c: i64, x0: f64, y0: f64, p: i64) -> Complex64 {
        let ty = y0 * self.ny as f64;
        let y_exact = ty.fract() == 0.0;
        let basis = if y_exact { Vec::new() } else { trig_basis(self.ny, y0) };
        let col = |j: i64| -> Complex64 {
            let m = j.rem_euclid(self.nx as i64) as usize;
            let k = j.div_euclid(self.nx as i64);
            let v = if y_exact {
                self.get(p, m, ty as usize % self.ny)
            } else {
                self.column_at(p, m, &basis)
            };
            if k == 0 || p == 0 {
                v
            } else {
                twist_phase(c, k, p, y0) * v
            }
        };
        let tx = x0 * self.nx as f64;
        let i = tx.floor();
        let t = tx - i;
        let i = i as i64;
        if t == 0.0 {
            return col(i);
        }
        // cubic Lagrange through nodes -1, 0, 1, 2
        let w_m1 = -t * (t - 1.0) * (t - 2.0) / 6.0;
        let w_0 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
        let w_1 = -(t + 1.0) * t * (t - 2.0) / 2.0;
        let w_2 = (t + 1.0) * t * (t - 1.0) / 6.0;
        col(i - 1) * w_m1 + col(i) * w_0 + col(i + 1) * w_1 + col(i + 2) * w_2
    }
}

/// `b_j(y0)` such that the column interpolant is `sum_j F_j b_j(y0)`.
///
/// Frequencies follow FFT order; for even `n` the Nyquist term is the
/// symmetric `cos(pi n y0)`.
pub(crate) fn trig_basis(n: usize, y0: f64) -> Vec<Complex64> {
    let w = crate::params::unit_phase(y0);
    let half = n / 2;
    let mut pos = vec![Complex64::new(1.0, 0.0); half + 1];
    for j in 1..=half {
        pos[j] = pos[j - 1] * w;
    }
    let mut basis = vec![ZERO; n];
    for (j, b) in basis.iter_mut().enumerate() {
        *b = if j <= half {
            if n.is_multiple_of(2) && j == half {
                Complex64::new((std::f64::consts::PI * n as f64 * y0).cos(), 0.0)
            } else {
                pos[j]
            }
        } else {
            pos[n - j].conj()
        };
    }
    basis
}

fn column_coefficients(nx: usize, ny: usize, values: &[Complex64]) -> Vec<Complex64> {
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(ny);
    let mut out = values.to_vec();
    let scale = 1.0 / ny as f64;
    for chunk in out.chunks_exact_mut(ny) {
        fft.process(chunk);
        for z in chunk.iter_mut() {
            *z *= scale;
        }
    }
    debug_assert_eq!(out.len() % (nx * ny), 0);
    out
}

/// Interpolates a grid element at a fundamental-domain point.
///
/// Spectral in `y`, local cubic in `x`; columns past the edge of `[0,1)` are
/// borrowed from the opposite edge with the twist phase.
pub fn interpolate(el: &Element, x0: f64, y0: f64, p: i64) -> Result<Complex64> {
    if !(x0.is_finite() && y0.is_finite()) {
        return Err(QhmError::Domain(format!("non-finite point ({x0}, {y0})")));
    }
    if !(0.0..1.0).contains(&x0) || !(0.0..1.0).contains(&y0) {
        return Err(QhmError::Domain(format!("({x0}, {y0}) is outside [0,1)^2")));
    }
    let grid = match el.flavor() {
        Flavor::Grid => el.grid().unwrap(),
        Flavor::ClosedForm => {
            return Err(QhmError::Capability("interpolate needs a grid element".into()))
        }
    };
    if p.unsigned_abs() as usize > grid.band {
        return Ok(ZERO);
    }
    let (_, x0) = split_unit(x0);
    Ok(grid.interpolate_unchecked(el.params().c, x0, y0, p))
}

/// Samples a closed-form element onto its truncation grid.
pub fn sample(el: &Element) -> Element {
    el.sample()
}


impl GridData {
    /// Spectral `d/dy` of every column; the Nyquist mode is dropped.
    pub fn y_derivative(&self) -> GridData {
        let n = self.ny;
        let mut planner = FftPlanner::<f64>::new();
        let ifft = planner.plan_fft_inverse(n);
        let mut out = self.ycoef.clone();
        for chunk in out.chunks_exact_mut(n) {
            for (j, z) in chunk.iter_mut().enumerate() {
                let freq = if n.is_multiple_of(2) && j == n / 2 {
                    0.0
                } else if j <= n / 2 {
                    j as f64
                } else {
                    j as f64 - n as f64
                };
                *z *= Complex64::new(0.0, 2.0 * std::f64::consts::PI * freq);
            }
            ifft.process(chunk);
        }
        GridData::new(self.nx, self.ny, self.band, out).unwrap()
    }

    /// Fourth-order central `d/dx`, with ghost columns taken through the twist.
    pub fn x_derivative(&self, c: i64) -> GridData {
        let nx = self.nx as i64;
        let h = 1.0 / self.nx as f64;
        let at = |p: i64, j: i64, iy: usize| -> Complex64 {
            let m = j.rem_euclid(nx) as usize;
            let k = j.div_euclid(nx);
            let v = self.get(p, m, iy);
            if k == 0 || p == 0 {
                v
            } else {
                twist_phase(c, k, p, iy as f64 / self.ny as f64) * v
            }
        };
        self.map_indexed(|p, ix, iy, _| {
            let i = ix as i64;
            (-at(p, i + 2, iy) + at(p, i + 1, iy) * 8.0 - at(p, i - 1, iy) * 8.0 + at(p, i - 2, iy))
                / (12.0 * h)
        })
    }
}
