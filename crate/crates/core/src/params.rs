//! Deformation parameters, truncation sizes and the unit exponential.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{QhmError, Result};

/// Lower bound on `mu^2 + nu^2` below which the Poisson direction is treated as degenerate.
pub const DEGENERACY_EPS: f64 = 1e-12;

/// The deformation data `(c, hbar, mu, nu)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub c: i64,
    pub hbar: f64,
    pub mu: f64,
    pub nu: f64,
}

impl ModelParams {
    pub fn new(c: i64, hbar: f64, mu: f64, nu: f64) -> Result<Self> {
        let params = ModelParams { c, hbar, mu, nu };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.c < 1 {
            return Err(QhmError::Config(format!("c must be >= 1, got {}", self.c)));
        }
        if !(self.hbar.is_finite() && self.mu.is_finite() && self.nu.is_finite()) {
            return Err(QhmError::Config("hbar, mu, nu must be finite".into()));
        }
        if self.mu * self.mu + self.nu * self.nu <= DEGENERACY_EPS {
            return Err(QhmError::Config(format!(
                "mu^2 + nu^2 must exceed {DEGENERACY_EPS:e} (mu = {}, nu = {})",
                self.mu, self.nu
            )));
        }
        Ok(())
    }

    /// Shift `(hbar*mu*k, hbar*nu*k)` applied by `k` units of the deformation.
    #[inline]
    pub fn shift(&self, k: f64) -> (f64, f64) {
        (self.hbar * k * self.mu, self.hbar * k * self.nu)
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams { c: 1, hbar: 0.3, mu: 0.7, nu: 0.5 }
    }
}

/// Finite truncation of the `Z` direction and the sampling grid of the fundamental domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truncation {
    /// Element band: support `|p| <= p_max`.
    #[serde(rename = "P")]
    pub p_max: usize,
    #[serde(rename = "Nx")]
    pub nx: usize,
    #[serde(rename = "Ny")]
    pub ny: usize,
    /// Hilbert-space band of the representation, `|p| <= q_max`.
    #[serde(rename = "Q")]
    pub q_max: usize,
}

impl Truncation {
    pub fn new(p_max: usize, nx: usize, ny: usize, q_max: usize) -> Result<Self> {
        let t = Truncation { p_max, nx, ny, q_max };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 8 || self.ny < 8 {
            return Err(QhmError::Config(format!(
                "grid must be at least 8x8, got {}x{}",
                self.nx, self.ny
            )));
        }
        if self.q_max < 2 * self.p_max || self.q_max == 0 {
            return Err(QhmError::Config(format!(
                "Q = {} must be positive and at least 2P = {}",
                self.q_max,
                2 * self.p_max
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn cells(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn x_at(&self, ix: usize) -> f64 {
        ix as f64 / self.nx as f64
    }

    #[inline]
    pub fn y_at(&self, iy: usize) -> f64 {
        iy as f64 / self.ny as f64
    }

    /// Same truncation with a different element band.
    pub fn with_band(&self, p_max: usize) -> Truncation {
        Truncation { p_max, q_max: self.q_max.max(2 * p_max).max(1), ..*self }
    }
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation { p_max: 6, nx: 48, ny: 48, q_max: 24 }
    }
}

/// `e(t) = exp(2 pi i t)`, with `t` reduced mod 1 first.
#[inline]
pub fn unit_phase(t: f64) -> Complex64 {
    let r = t - t.floor();
    let (s, c) = (2.0 * PI * r).sin_cos();
    Complex64::new(c, s)
}
