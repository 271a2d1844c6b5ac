//! The fiberwise form of the faithful representation.
//!
//! The represented operator acts pointwise in the base point `(x, y)`; at a
//! fixed base it is the banded matrix
//! `M[p][r] = a(x + hbar (p + r) mu, y + hbar (p + r) nu, p - r)` on `l2(Z)`,
//! truncated to `|p|, |r| <= Q`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::element::{fold, fold_all, Element};
use crate::error::{QhmError, Result};
use crate::params::{unit_phase, Truncation};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// The block of `pi(a)` at one base point, indices `p, r` in `[-Q, Q]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberMatrix {
    pub base: (f64, f64),
    pub q: usize,
    /// Bandwidth: entries with `|p - r| > band` are zero.
    pub band: usize,
    entries: Vec<Complex64>,
}

impl FiberMatrix {
    pub fn dim(&self) -> usize {
        2 * self.q + 1
    }

    #[inline]
    fn idx(&self, p: i64, r: i64) -> usize {
        let q = self.q as i64;
        ((p + q) as usize) * self.dim() + (r + q) as usize
    }

    #[inline]
    pub fn get(&self, p: i64, r: i64) -> Complex64 {
        let q = self.q as i64;
        if p.abs() > q || r.abs() > q {
            return ZERO;
        }
        self.entries[self.idx(p, r)]
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn from_dense(base: (f64, f64), q: usize, band: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != (2 * q + 1) * (2 * q + 1) {
            return Err(QhmError::Config("fiber matrix has the wrong number of entries".into()));
        }
        Ok(FiberMatrix { base, q, band, entries })
    }

    pub fn conj_transpose(&self) -> FiberMatrix {
        let n = self.dim();
        let mut entries = vec![ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                entries[j * n + i] = self.entries[i * n + j].conj();
            }
        }
        FiberMatrix { entries, ..*self }
    }

    /// Dense product, bandwidth adding up.
    pub fn matmul(&self, other: &FiberMatrix) -> FiberMatrix {
        let n = self.dim();
        let mut entries = vec![ZERO; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i * n + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    entries[i * n + j] += a * other.entries[k * n + j];
                }
            }
        }
        FiberMatrix { base: self.base, q: self.q, band: self.band + other.band, entries }
    }

    #[inline]
    fn row_range(&self, p: i64) -> std::ops::RangeInclusive<i64> {
        let q = self.q as i64;
        let b = self.band as i64;
        (-q).max(p - b)..=q.min(p + b)
    }

    /// `M v`, using the band structure.
    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        let q = self.q as i64;
        (-q..=q)
            .map(|p| {
                self.row_range(p)
                    .map(|r| self.entries[self.idx(p, r)] * v[(r + q) as usize])
                    .sum()
            })
            .collect()
    }

    /// `M^H v`.
    pub fn matvec_adjoint(&self, v: &[Complex64]) -> Vec<Complex64> {
        let q = self.q as i64;
        let mut out = vec![ZERO; self.dim()];
        for p in -q..=q {
            let vp = v[(p + q) as usize];
            if vp == ZERO {
                continue;
            }
            for r in self.row_range(p) {
                out[(r + q) as usize] += self.entries[self.idx(p, r)].conj() * vp;
            }
        }
        out
    }

    pub fn to_dmatrix(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        DMatrix::from_row_slice(n, n, &self.entries)
    }

    /// Largest entrywise difference.
    pub fn max_abs_diff(&self, other: &FiberMatrix) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Row-major `[re, im]` dump for external inspection.
    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Dump<'a> {
            base: (f64, f64),
            #[serde(rename = "Q")]
            q: usize,
            band: usize,
            rows: Vec<Vec<[f64; 2]>>,
            #[serde(skip)]
            _m: std::marker::PhantomData<&'a ()>,
        }
        let n = self.dim();
        let rows = (0..n)
            .map(|i| (0..n).map(|j| [self.entries[i * n + j].re, self.entries[i * n + j].im]).collect())
            .collect();
        Ok(serde_json::to_string(&Dump {
            base: self.base,
            q: self.q,
            band: self.band,
            rows,
            _m: std::marker::PhantomData,
        })?)
    }
}

/// Fiber matrix at `(x, y)` with the truncation's `Q`.
pub fn fiber_matrix(a: &Element, x: f64, y: f64) -> FiberMatrix {
    fiber_matrix_q(a, x, y, a.trunc().q_max)
}

pub fn fiber_matrix_q(a: &Element, x: f64, y: f64, q: usize) -> FiberMatrix {
    let params = a.params();
    let qi = q as i64;
    let b = a.band() as i64;
    let n = 2 * q + 1;
    let mut entries = vec![ZERO; n * n];
    let mut vals = vec![ZERO; 2 * a.band() + 1];
    // entry (p, r) only depends on the point through p + r
    for s in -2 * qi..=2 * qi {
        let (sx, sy) = params.shift(s as f64);
        fold_all(a, x + sx, y + sy, &mut vals);
        let lo = (-qi).max(s - qi).max((s - b + 1).div_euclid(2));
        let hi = qi.min(s + qi).min((s + b).div_euclid(2));
        for p in lo..=hi {
            let r = s - p;
            entries[((p + qi) as usize) * n + (r + qi) as usize] = vals[(p - r + b) as usize];
        }
    }
    FiberMatrix { base: (x, y), q, band: a.band(), entries }
}

/// Largest deviation between the fiber at `(x + 1, y)` and `D M(x, y) D^H`
/// with `D_p = e(c p y + c hbar nu p^2)`.
pub fn twist_equivalence_defect(a: &Element, x: f64, y: f64) -> f64 {
    let params = a.params();
    let m0 = fiber_matrix(a, x, y);
    let m1 = fiber_matrix(a, x + 1.0, y);
    let q = m0.q as i64;
    let c = params.c as f64;
    let d = |p: i64| unit_phase(c * p as f64 * y + c * params.hbar * params.nu * (p * p) as f64);
    let mut worst = 0.0f64;
    for p in -q..=q {
        for r in -q..=q {
            let want = d(p) * m0.get(p, r) * d(r).conj();
            worst = worst.max((m1.get(p, r) - want).norm());
        }
    }
    worst
}

/// A vector in `l2` over the base grid and `|p| <= q`, layout `[p + q][ix][iy]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridVector {
    pub q: usize,
    pub nx: usize,
    pub ny: usize,
    pub data: Vec<Complex64>,
}

impl GridVector {
    pub fn zeros(q: usize, nx: usize, ny: usize) -> Self {
        GridVector { q, nx, ny, data: vec![ZERO; (2 * q + 1) * nx * ny] }
    }

    pub fn from_fn<F: Fn(f64, f64, i64) -> Complex64>(q: usize, nx: usize, ny: usize, f: F) -> Self {
        let mut v = GridVector::zeros(q, nx, ny);
        let qi = q as i64;
        for p in -qi..=qi {
            for ix in 0..nx {
                for iy in 0..ny {
                    let k = v.index(p, ix, iy);
                    v.data[k] = f(ix as f64 / nx as f64, iy as f64 / ny as f64, p);
                }
            }
        }
        v
    }

    /// Independent uniform entries in the unit square; deterministic in `seed`.
    pub fn random(seed: u64, q: usize, nx: usize, ny: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = GridVector::zeros(q, nx, ny);
        for z in v.data.iter_mut() {
            *z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        v
    }

    #[inline]
    pub fn index(&self, p: i64, ix: usize, iy: usize) -> usize {
        ((p + self.q as i64) as usize * self.nx + ix) * self.ny + iy
    }

    #[inline]
    pub fn get(&self, p: i64, ix: usize, iy: usize) -> Complex64 {
        if p.unsigned_abs() as usize > self.q {
            return ZERO;
        }
        self.data[self.index(p, ix, iy)]
    }

    /// The `l2(Z)` vector sitting over base point `(ix, iy)`.
    pub fn fiber(&self, ix: usize, iy: usize) -> Vec<Complex64> {
        let q = self.q as i64;
        (-q..=q).map(|p| self.get(p, ix, iy)).collect()
    }

    /// Cell weight `1 / (Nx Ny)` of the discrete measure on the base.
    pub fn cell_weight(&self) -> f64 {
        1.0 / (self.nx * self.ny) as f64
    }

    /// `||xi||_2` under the cell-weighted inner product.
    pub fn norm(&self) -> f64 {
        (self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.cell_weight()).sqrt()
    }

    pub fn scaled(&self, s: f64) -> GridVector {
        GridVector { data: self.data.iter().map(|z| z * s).collect(), ..self.clone() }
    }

    /// Cell-weighted `<u, v>`, linear in `u`.
    pub fn inner(&self, other: &GridVector) -> Complex64 {
        self.data.iter().zip(&other.data).map(|(u, v)| u * v.conj()).sum::<Complex64>() * self.cell_weight()
    }

    fn check_against(&self, trunc: &Truncation) -> Result<()> {
        if self.nx != trunc.nx || self.ny != trunc.ny {
            return Err(QhmError::Config(format!(
                "vector base grid {}x{} does not match truncation {}x{}",
                self.nx, self.ny, trunc.nx, trunc.ny
            )));
        }
        if self.data.len() != (2 * self.q + 1) * self.nx * self.ny {
            return Err(QhmError::Config("vector data has the wrong length".into()));
        }
        Ok(())
    }
}

/// `pi(a) xi`, computed fiber by fiber over the base grid.
pub fn apply(a: &Element, xi: &GridVector) -> Result<GridVector> {
    xi.check_against(a.trunc())?;
    let t = a.trunc();
    let mut out = GridVector::zeros(xi.q, xi.nx, xi.ny);
    let columns: Vec<(usize, usize, Vec<Complex64>)> = (0..t.cells())
        .into_par_iter()
        .map(|cell| {
            let (ix, iy) = (cell / t.ny, cell % t.ny);
            let m = fiber_matrix_q(a, t.x_at(ix), t.y_at(iy), xi.q);
            (ix, iy, m.matvec(&xi.fiber(ix, iy)))
        })
        .collect();
    let q = xi.q as i64;
    for (ix, iy, col) in columns {
        for p in -q..=q {
            let k = out.index(p, ix, iy);
            out.data[k] = col[(p + q) as usize];
        }
    }
    Ok(out)
}

/// `<pi(a) xi, xi>` without forming `pi(a) xi`; only fibers where `xi` lives are touched.
pub fn expectation(a: &Element, xi: &GridVector) -> Result<Complex64> {
    xi.check_against(a.trunc())?;
    let t = a.trunc();
    let params = a.params();
    let q = xi.q as i64;
    let b = a.band() as i64;
    let w = xi.cell_weight();
    let parts: Vec<Complex64> = (0..t.cells())
        .into_par_iter()
        .map(|cell| {
            let (ix, iy) = (cell / t.ny, cell % t.ny);
            let (x, y) = (t.x_at(ix), t.y_at(iy));
            let v = xi.fiber(ix, iy);
            let mut acc = ZERO;
            for p in -q..=q {
                let vp = v[(p + q) as usize];
                if vp == ZERO {
                    continue;
                }
                for r in (-q).max(p - b)..=q.min(p + b) {
                    let vr = v[(r + q) as usize];
                    if vr == ZERO {
                        continue;
                    }
                    let (sx, sy) = params.shift((p + r) as f64);
                    acc += vp.conj() * fold(a, x + sx, y + sy, p - r) * vr;
                }
            }
            acc
        })
        .collect();
    Ok(crate::numeric::pairwise_sum_c(&parts) * w)
}

/// How fiber spectral norms are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormMethod {
    /// Lanczos on `M^H M` with full reorthogonalization.
    Lanczos,
    /// Power iteration on `M^H M`, dense SVD if it stalls on a small matrix.
    Power,
    /// Dense SVD for every fiber.
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CstarOptions {
    pub method: NormMethod,
    pub tol: f64,
    pub max_iter: usize,
    /// Largest dimension for which the leading fibers are re-solved by dense SVD.
    pub dense_fallback_dim: usize,
    /// Keep doubling the base grid until the estimate moves by less than `refine_tol`.
    pub refine: bool,
    pub refine_tol: f64,
    pub max_refinements: usize,
}

impl Default for CstarOptions {
    fn default() -> Self {
        CstarOptions {
            method: NormMethod::Lanczos,
            tol: 1e-10,
            max_iter: 10_000,
            dense_fallback_dim: 128,
            refine: false,
            refine_tol: 1e-4,
            max_refinements: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CstarEstimate {
    /// Certified lower bound on `||pi(a)||`.
    pub lower: f64,
    pub value: f64,
    pub base_points: usize,
    pub refinements: usize,
    /// Worst iteration count over fibers (0 for dense).
    pub max_iterations: usize,
}

/// Spectral norm of one fiber matrix; returns `(norm, iterations)`.
///
/// The iterative methods start from a deterministic pseudo-random vector and
/// return a Rayleigh-Ritz value, which never exceeds the true norm.
pub fn spectral_norm(m: &FiberMatrix, seed: u64, opts: &CstarOptions) -> Result<(f64, usize)> {
    match opts.method {
        NormMethod::Dense => Ok((dense_norm(m), 0)),
        NormMethod::Power => power_norm(m, random_unit(m.dim(), seed), opts),
        NormMethod::Lanczos => Ok(lanczos_norm(m, random_unit(m.dim(), seed), opts)),
    }
}

fn random_unit(n: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    normalize(&mut v);
    v
}

fn power_norm(m: &FiberMatrix, mut v: Vec<Complex64>, opts: &CstarOptions) -> Result<(f64, usize)> {
    let n = m.dim();
    let mut lambda = 0.0f64;
    for it in 1..=opts.max_iter {
        let mv = m.matvec(&v);
        let rayleigh: f64 = mv.iter().map(|z| z.norm_sqr()).sum();
        let mut w = m.matvec_adjoint(&mv);
        if normalize(&mut w) == 0.0 {
            return Ok((0.0, it));
        }
        if it > 1 && (rayleigh - lambda).abs() <= opts.tol * rayleigh {
            return Ok((rayleigh.max(lambda).sqrt(), it));
        }
        lambda = rayleigh;
        v = w;
    }
    if n <= opts.dense_fallback_dim {
        return Ok((dense_norm(m), opts.max_iter));
    }
    Err(QhmError::Numerical {
        message: format!("power iteration did not converge at base {:?}", m.base),
        iterations: opts.max_iter,
    })
}

/// Top eigenvalue of `M^H M` from its Krylov space, checked every few steps.
///
/// Stops once the Ritz residual `beta_k |s_k|` is below `tol` relative to the
/// Ritz value; after `dim` steps the Krylov space is everything, so this
/// always terminates.
fn lanczos_norm(m: &FiberMatrix, start: Vec<Complex64>, opts: &CstarOptions) -> (f64, usize) {
    let n = m.dim();
    let mut prev: Option<Vec<Complex64>> = None;
    let (mut alpha, mut beta) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let mut q = start;
    for k in 1..=n {
        let mut w = m.matvec_adjoint(&m.matvec(&q));
        let a = dot(&q, &w).re;
        alpha.push(a);
        w.iter_mut().zip(&q).for_each(|(wi, qi)| *wi -= qi * a);
        if let (Some(prev), Some(&b)) = (&prev, beta.last()) {
            w.iter_mut().zip(prev).for_each(|(wi, pi): (&mut Complex64, &Complex64)| *wi -= pi * b);
        }
        let bk = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let scale = alpha.iter().fold(0.0f64, |acc, a| acc.max(a.abs()));
        let breakdown = bk <= 1e-14 * scale.max(f64::MIN_POSITIVE);
        if k % 4 == 0 || k == n || breakdown {
            let (theta, last) = top_ritz(&alpha, &beta);
            if breakdown || k == n || bk * last.abs() <= opts.tol * theta {
                return (theta.max(0.0).sqrt(), k);
            }
        }
        beta.push(bk);
        prev = Some(std::mem::replace(&mut q, w.into_iter().map(|z| z / bk).collect()));
    }
    unreachable!("the Krylov space is exhausted after dim steps")
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Largest eigenvalue of the symmetric tridiagonal matrix `(alpha, beta)`
/// and the last component of its unit eigenvector.
///
/// The eigenvalue comes from Sturm-count bisection; the eigenvector from
/// inverse iteration shifted just above it, where `T - sigma I` is negative
/// definite and elimination needs no pivoting.
fn top_ritz(alpha: &[f64], beta: &[f64]) -> (f64, f64) {
    let k = alpha.len();
    let off = |i: usize| if i < beta.len() { beta[i].abs() } else { 0.0 };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..k {
        let r = off(i) + if i > 0 { off(i - 1) } else { 0.0 };
        lo = lo.min(alpha[i] - r);
        hi = hi.max(alpha[i] + r);
    }
    // number of eigenvalues strictly above x
    let above = |x: f64| {
        let mut count = 0;
        let mut d = 1.0f64;
        for i in 0..k {
            let b2 = if i > 0 { beta[i - 1] * beta[i - 1] } else { 0.0 };
            d = alpha[i] - x - if i > 0 { b2 / d } else { 0.0 };
            if d == 0.0 {
                d = -f64::EPSILON * (x.abs() + f64::MIN_POSITIVE);
            }
            if d > 0.0 {
                count += 1;
            }
        }
        count
    };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 4.0 * f64::EPSILON * hi.abs().max(lo.abs()) {
            break;
        }
        if above(mid) > 0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta = hi;
    if k == 1 {
        return (theta, 1.0);
    }
    let sigma = theta + 1e-10 * theta.abs().max(f64::MIN_POSITIVE);
    let mut u = vec![1.0f64; k];
    let mut c = vec![0.0f64; k];
    let mut d = vec![0.0f64; k];
    for _ in 0..3 {
        // solve (T - sigma I) x = u by the Thomas algorithm, in place
        for i in 0..k {
            let diag = alpha[i] - sigma - if i > 0 { beta[i - 1] * c[i - 1] } else { 0.0 };
            c[i] = if i + 1 < k { beta[i] / diag } else { 0.0 };
            d[i] = (u[i] - if i > 0 { beta[i - 1] * d[i - 1] } else { 0.0 }) / diag;
        }
        for i in (0..k).rev() {
            u[i] = d[i] - if i + 1 < k { c[i] * u[i + 1] } else { 0.0 };
        }
        let n = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        u.iter_mut().for_each(|v| *v /= n);
    }
    (theta, u[k - 1])
}

fn normalize(v: &mut [Complex64]) -> f64 {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n > 0.0 {
        for z in v.iter_mut() {
            *z /= n;
        }
    }
    n
}

fn dense_norm(m: &FiberMatrix) -> f64 {
    m.to_dmatrix().singular_values().iter().copied().fold(0.0, f64::max)
}

/// `max` over base points of the fiber spectral norms, with default options.
pub fn cstar_norm_estimate(a: &Element) -> Result<CstarEstimate> {
    cstar_norm_estimate_with(a, &CstarOptions::default())
}

pub fn cstar_norm_estimate_with(a: &Element, opts: &CstarOptions) -> Result<CstarEstimate> {
    let t = a.trunc();
    let (mut nx, mut ny) = (t.nx, t.ny);
    let (mut value, mut iters) = base_grid_max(a, nx, ny, opts)?;
    let mut refinements = 0;
    if opts.refine {
        while refinements < opts.max_refinements {
            nx *= 2;
            ny *= 2;
            let (next, it) = base_grid_max(a, nx, ny, opts)?;
            refinements += 1;
            iters = iters.max(it);
            let change = (next - value).abs();
            value = value.max(next);
            if change < opts.refine_tol {
                break;
            }
        }
    }
    Ok(CstarEstimate { lower: value, value, base_points: nx * ny, refinements, max_iterations: iters })
}

/// Fibers whose power-iteration value lies within this relative margin of
/// the maximum are re-solved densely when the dimension allows.
const DENSE_SCREEN: f64 = 1e-2;

/// Rows of the base grid run in parallel, each fiber from its own seeded
/// start, so results do not depend on the thread count.
fn base_grid_max(a: &Element, nx: usize, ny: usize, opts: &CstarOptions) -> Result<(f64, usize)> {
    let dim = 2 * a.trunc().q_max + 1;
    let point = |i: usize| ((i / ny) as f64 / nx as f64, (i % ny) as f64 / ny as f64);
    let fibers: Result<Vec<(f64, usize)>> = (0..nx * ny)
        .into_par_iter()
        .map(|i| {
            let (x, y) = point(i);
            spectral_norm(&fiber_matrix(a, x, y), 0x5eed_0000_0000 ^ i as u64, opts)
        })
        .collect();
    let fibers = fibers?;
    let iters = fibers.iter().map(|f| f.1).max().unwrap_or(0);
    let mut best = fibers.iter().map(|f| f.0).fold(0.0f64, f64::max);
    // power iteration can stall below a nearly degenerate top singular value
    if opts.method == NormMethod::Power && dim <= opts.dense_fallback_dim {
        let cut = best * (1.0 - DENSE_SCREEN);
        let exact: Vec<f64> = (0..fibers.len())
            .into_par_iter()
            .filter(|&i| fibers[i].0 >= cut)
            .map(|i| {
                let (x, y) = point(i);
                dense_norm(&fiber_matrix(a, x, y))
            })
            .collect();
        best = exact.into_iter().fold(best, f64::max);
    }
    Ok((best, iters))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{involution, star, sup_sum_norm};
    use crate::element::random_element_banded;
    use crate::params::ModelParams;

    fn setup() -> (ModelParams, Truncation) {
        (ModelParams::default(), Truncation::new(2, 8, 8, 6).unwrap())
    }

    #[test]
    fn identity_fiber_is_identity_matrix() {
        let (params, trunc) = setup();
        let m = fiber_matrix(&Element::identity(params, trunc), 0.3, 0.4);
        for p in -6..=6i64 {
            for r in -6..=6i64 {
                let want = if p == r { 1.0 } else { 0.0 };
                assert_eq!(m.get(p, r), Complex64::new(want, 0.0));
            }
        }
        let est = cstar_norm_estimate(&Element::identity(params, trunc)).unwrap();
        assert!((est.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn adjoint_identity_is_exact() {
        let (params, trunc) = setup();
        let a = random_element_banded(3, trunc, params, 0.4, 2).unwrap();
        let m = fiber_matrix(&a, 0.71, 0.13);
        let ms = fiber_matrix(&involution(&a), 0.71, 0.13);
        assert_eq!(ms, m.conj_transpose());
    }

    #[test]
    fn interior_rows_are_multiplicative() {
        let (params, _) = setup();
        let trunc = Truncation::new(4, 8, 8, 8).unwrap();
        let a = random_element_banded(1, trunc, params, 0.4, 2).unwrap();
        let b = random_element_banded(2, trunc, params, 0.4, 2).unwrap();
        let ab = star(&a, &b).unwrap();
        let (x, y) = (0.37, 0.52);
        let prod = fiber_matrix(&a, x, y).matmul(&fiber_matrix(&b, x, y));
        let direct = fiber_matrix(&ab, x, y);
        let interior = 8 - 4;
        for p in -interior..=interior {
            for r in -8..=8 {
                assert!((prod.get(p, r) - direct.get(p, r)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn base_translation_is_a_diagonal_unitary_conjugation() {
        let (params, trunc) = setup();
        let a = random_element_banded(4, trunc, params, 0.4, 2).unwrap();
        assert!(twist_equivalence_defect(&a, 0.21, 0.64) < 1e-12);
    }

    #[test]
    fn power_iteration_agrees_with_dense() {
        let (params, trunc) = setup();
        let a = random_element_banded(6, trunc, params, 0.3, 2).unwrap();
        let m = fiber_matrix(&a, 0.5, 0.25);
        let (pw, _) = spectral_norm(&m, 1, &CstarOptions::default()).unwrap();
        let dense = spectral_norm(&m, 1, &CstarOptions { method: NormMethod::Dense, ..Default::default() })
            .unwrap()
            .0;
        assert!((pw - dense).abs() < 1e-8 * dense, "{pw} vs {dense}");
    }

    #[test]
    fn dominated_by_sup_sum() {
        let (params, trunc) = setup();
        let a = random_element_banded(8, trunc, params, 0.3, 2).unwrap();
        let est = cstar_norm_estimate(&a).unwrap();
        assert!(est.value <= sup_sum_norm(&a).sup_sum + 1e-6);
    }

    #[test]
    fn refinement_does_not_decrease_the_estimate() {
        let (params, trunc) = setup();
        let a = random_element_banded(10, trunc, params, 0.3, 1).unwrap();
        let coarse = cstar_norm_estimate(&a).unwrap();
        let fine = cstar_norm_estimate_with(&a, &CstarOptions { refine: true, max_refinements: 1, ..Default::default() })
            .unwrap();
        assert!(fine.value >= coarse.value);
        assert_eq!(fine.refinements, 1);
        assert_eq!(fine.base_points, 16 * 16);
    }

    #[test]
    fn apply_respects_shapes_and_unit() {
        let (params, trunc) = setup();
        let xi = GridVector::random(2, 6, 8, 8);
        let id = Element::identity(params, trunc);
        let out = apply(&id, &xi).unwrap();
        assert_eq!(out, xi);
        let wrong = GridVector::random(2, 6, 10, 8);
        assert!(matches!(apply(&id, &wrong), Err(QhmError::Config(_))));
    }

    #[test]
    fn fiber_dump_is_row_major_json() {
        let (params, trunc) = setup();
        let m = fiber_matrix_q(&Element::identity(params, trunc), 0.0, 0.0, 1);
        let v: serde_json::Value = serde_json::from_str(&m.to_json().unwrap()).unwrap();
        assert_eq!(v["rows"][1][1], serde_json::json!([1.0, 0.0]));
        assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    }
}
