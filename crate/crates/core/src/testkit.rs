//! Independent oracles.
//!
//! Nothing here calls into the product, representation or metric code. Each
//! oracle reads elements only through their fundamental-domain values and
//! re-derives the twist, the sums and the matrices from scratch.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::element::Element;
use crate::error::{QhmError, Result};
use crate::metric::{State, StateKind};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `phi(x, y, p)` anywhere, through a separate implementation of the twist.
pub fn twisted_value(el: &Element, x: f64, y: f64, p: i64) -> Complex64 {
    if p.unsigned_abs() as usize > el.band() {
        return ZERO;
    }
    let (k, x0) = unit_split(x);
    let (_, y0) = unit_split(y);
    let turns = ((el.params().c * k * p) as f64 * y0).rem_euclid(1.0);
    Complex64::from_polar(1.0, 2.0 * PI * turns) * el.fundamental(x0, y0, p)
}

/// `(phi, d phi/dx, d phi/dy)` of the twisted extension, from analytic partials.
pub fn twisted_jet(el: &Element, x: f64, y: f64, p: i64) -> Option<(Complex64, Complex64, Complex64)> {
    if p.unsigned_abs() as usize > el.band() {
        return Some((ZERO, ZERO, ZERO));
    }
    let (k, x0) = unit_split(x);
    let (_, y0) = unit_split(y);
    let ckp = (el.params().c * k * p) as f64;
    let phase = Complex64::from_polar(1.0, 2.0 * PI * (ckp * y0).rem_euclid(1.0));
    let v = el.fundamental(x0, y0, p);
    let (dx, dy) = el.fundamental_partials(x0, y0, p)?;
    Some((phase * v, phase * dx, phase * (dy + Complex64::new(0.0, 2.0 * PI * ckp) * v)))
}

fn unit_split(x: f64) -> (i64, f64) {
    let k = x.floor();
    let r = x - k;
    if r >= 1.0 {
        (k as i64 + 1, 0.0)
    } else {
        (k as i64, r)
    }
}

/// The deformed product at one point, as a literal sum over `q`.
pub fn brute_star(a: &Element, b: &Element, x: f64, y: f64, p: i64) -> Complex64 {
    let pr = a.params();
    let (h, mu, nu) = (pr.hbar, pr.mu, pr.nu);
    let qa = a.band() as i64;
    let mut total = ZERO;
    for q in -qa..=qa {
        if (p - q).unsigned_abs() as usize > b.band() {
            continue;
        }
        let left = twisted_value(a, x - h * (q - p) as f64 * mu, y - h * (q - p) as f64 * nu, q);
        let right = twisted_value(b, x - h * q as f64 * mu, y - h * q as f64 * nu, p - q);
        total += left * right;
    }
    total
}

/// The represented operator at base `(x, y)` on `|p| <= small_q`, filled by
/// the `(q, p - q)` indexing: row `p`, column `p - q` holds
/// `phi(x - hbar (q - 2p) mu, y - hbar (q - 2p) nu, q)`.
pub fn dense_operator_oracle(a: &Element, small_q: usize, x: f64, y: f64) -> Result<DMatrix<Complex64>> {
    if small_q > 32 {
        return Err(QhmError::Precondition(format!("dense oracle limited to Q <= 32, got {small_q}")));
    }
    let pr = a.params();
    let qq = small_q as i64;
    let n = 2 * small_q + 1;
    let mut m = DMatrix::from_element(n, n, ZERO);
    for p in -qq..=qq {
        for q in -(a.band() as i64)..=(a.band() as i64) {
            let col = p - q;
            if col.abs() > qq {
                continue;
            }
            let s = (q - 2 * p) as f64 * pr.hbar;
            m[((p + qq) as usize, (col + qq) as usize)] = twisted_value(a, x - s * pr.mu, y - s * pr.nu, q);
        }
    }
    Ok(m)
}

/// Largest singular value by full dense SVD.
pub fn dense_spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    m.clone().singular_values().iter().copied().fold(0.0, f64::max)
}

/// `max` over the uniform `nx x ny` base grid of the oracle's spectral norms.
pub fn dense_oracle_norm(a: &Element, small_q: usize, nx: usize, ny: usize) -> Result<f64> {
    let mut best = 0.0f64;
    for ix in 0..nx {
        for iy in 0..ny {
            let m = dense_operator_oracle(a, small_q, ix as f64 / nx as f64, iy as f64 / ny as f64)?;
            best = best.max(dense_spectral_norm(&m));
        }
    }
    Ok(best)
}

/// Result of the polygonal linear program.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonLp {
    /// Optimal value; an upper bound for the disc-constrained program.
    pub value: f64,
    /// `value * cos(pi / sides)`, a lower bound for it.
    pub inner: f64,
    pub rows: usize,
    pub pivots: usize,
}

/// The Lip-ball program between two states supported on the `p = 0` fiber,
/// over windowed elements with `modes` trigonometric modes, with every
/// modulus constraint `|v| <= t` replaced by `sides` half-planes.
///
/// Solved exactly through its dual by a dense two-phase simplex. Meant for
/// tiny truncations only.
pub fn polygon_lp_distance(mu: &State, nu: &State, modes: usize, sides: usize) -> Result<PolygonLp> {
    if mu.params != nu.params || mu.trunc != nu.trunc {
        return Err(QhmError::Config("states are defined over different models or truncations".into()));
    }
    if sides < 4 {
        return Err(QhmError::Config("need at least four half-planes".into()));
    }
    let (params, trunc) = (mu.params, mu.trunc);
    let (nx, ny) = (trunc.nx, trunc.ny);
    let weights = |s: &State| -> Result<Vec<f64>> {
        match &s.kind {
            StateKind::Trace => Ok(vec![1.0 / (nx * ny) as f64; nx * ny]),
            StateKind::Vector(xi) => {
                let mut w = vec![0.0; nx * ny];
                for p in -(xi.q as i64)..=(xi.q as i64) {
                    for ix in 0..nx {
                        for iy in 0..ny {
                            let v = xi.get(p, ix, iy);
                            if p != 0 && v != ZERO {
                                return Err(QhmError::Precondition(
                                    "polygon LP needs states supported on the p = 0 fiber".into(),
                                ));
                            }
                            if p == 0 {
                                w[ix * ny + iy] = v.norm_sqr() * xi.cell_weight();
                            }
                        }
                    }
                }
                Ok(w)
            }
        }
    };
    let (wmu, wnu) = (weights(mu)?, weights(nu)?);
    let band = trunc.p_max as i64;
    let k = modes as i64;
    let c = params.c as f64;
    let two_pi = 2.0 * PI;

    // real unknowns: for p = 0 the pairs (m, n) > (0, 0) carry (re, im) with
    // theta(0,-m,-n) = conj theta(0,m,n); for p > 0 every (m, n) carries (re, im)
    let mut vars: Vec<(i64, i64, i64)> = Vec::new();
    for m in -k..=k {
        for n in -k..=k {
            if m > 0 || (m == 0 && n > 0) {
                vars.push((0, m, n));
            }
        }
    }
    for p in 1..=band {
        for m in -k..=k {
            for n in -k..=k {
                vars.push((p, m, n));
            }
        }
    }
    let nz = 2 * vars.len();
    let nt = 3 * (band as usize + 1);
    let ncols = nz + nt;
    let t_index = |d: usize, p: i64| nz + d * (band as usize + 1) + p as usize;

    let window = |x: f64, p: i64| -> (f64, f64) {
        if p == 0 {
            return (1.0, 0.0);
        }
        let s = (PI * x).sin();
        (s.powi(6), 6.0 * s.powi(5) * (PI * x).cos() * PI)
    };
    let e = |t: f64| Complex64::from_polar(1.0, two_pi * t.rem_euclid(1.0));

    // value of the derivation `d` of basis function (p, m, n) at (x, y)
    let basis_derivative = |d: usize, p: i64, m: i64, n: i64, x: f64, y: f64| -> Complex64 {
        let (w, dw) = window(x, p);
        let b = e(m as f64 * x + n as f64 * y);
        let i = Complex64::new(0.0, 1.0);
        match d {
            0 => -(dw + i * two_pi * m as f64 * w) * b,
            1 => (i * two_pi * c * p as f64 * x - i * two_pi * n as f64) * w * b,
            _ => i * two_pi * p as f64 * w * b,
        }
    };

    // rows of A z + B t <= b
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for d in 0..3 {
        for p in 0..=band {
            if d == 2 && p == 0 {
                continue;
            }
            for ix in 0..nx {
                for iy in 0..ny {
                    let (x, y) = (ix as f64 / nx as f64, iy as f64 / ny as f64);
                    // v = sum_j g_j z_j with complex g_j
                    let mut g = vec![ZERO; nz];
                    for (j, &(vp, m, n)) in vars.iter().enumerate() {
                        if vp != p {
                            continue;
                        }
                        let f = basis_derivative(d, p, m, n, x, y);
                        if p == 0 {
                            // a e_{m,n} + conj(a) e_{-m,-n}
                            let f2 = basis_derivative(d, 0, -m, -n, x, y);
                            g[2 * j] = f + f2;
                            g[2 * j + 1] = Complex64::new(0.0, 1.0) * (f - f2);
                        } else {
                            g[2 * j] = f;
                            g[2 * j + 1] = Complex64::new(0.0, 1.0) * f;
                        }
                    }
                    let dirs: Vec<Complex64> = if p == 0 {
                        vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]
                    } else {
                        (0..sides).map(|l| Complex64::from_polar(1.0, -two_pi * l as f64 / sides as f64)).collect()
                    };
                    for omega in dirs {
                        let mut row = vec![0.0; ncols];
                        for j in 0..nz {
                            row[j] = (omega * g[j]).re;
                        }
                        row[t_index(d, p)] = -1.0;
                        rows.push((row, 0.0));
                    }
                }
            }
        }
        // t_0 + 2 sum_{p > 0} t_p <= 1
        let mut row = vec![0.0; ncols];
        for p in 0..=band {
            row[t_index(d, p)] = if p == 0 { 1.0 } else { 2.0 };
        }
        rows.push((row, 1.0));
    }

    // objective: mu(phi) - nu(phi) on the p = 0 fiber
    let mut obj = vec![0.0; ncols];
    for ix in 0..nx {
        for iy in 0..ny {
            let w = wmu[ix * ny + iy] - wnu[ix * ny + iy];
            if w == 0.0 {
                continue;
            }
            let (x, y) = (ix as f64 / nx as f64, iy as f64 / ny as f64);
            for (j, &(vp, m, n)) in vars.iter().enumerate() {
                if vp != 0 {
                    continue;
                }
                // a e + conj(a) conj(e) = 2 Re(a e)
                let b = e(m as f64 * x + n as f64 * y);
                obj[2 * j] += w * 2.0 * b.re;
                obj[2 * j + 1] += w * -2.0 * b.im;
            }
        }
    }

    // dual: min b^T y subject to A^T y = obj (z free), B^T y - s = 0 (t >= 0), y, s >= 0
    let nrows = rows.len();
    let m_eq = ncols;
    let n_dual = nrows + nt;
    let mut a_eq = vec![vec![0.0; n_dual]; m_eq];
    for (r, (row, _)) in rows.iter().enumerate() {
        for (col, v) in row.iter().enumerate() {
            a_eq[col][r] = *v;
        }
    }
    for j in 0..nt {
        a_eq[nz + j][nrows + j] = -1.0;
    }
    let mut rhs = vec![0.0; m_eq];
    rhs[..nz].copy_from_slice(&obj[..nz]);
    let mut cost = vec![0.0; n_dual];
    for (r, (_, b)) in rows.iter().enumerate() {
        cost[r] = *b;
    }
    let sol = simplex_min(a_eq, rhs, cost)?;
    Ok(PolygonLp { value: sol.0, inner: sol.0 * (PI / sides as f64).cos(), rows: nrows, pivots: sol.1 })
}

/// `min c^T x` subject to `A x = b`, `x >= 0`, by the two-phase simplex method
/// with Bland's rule. Returns `(optimum, pivots)`.
pub fn simplex_min(mut a: Vec<Vec<f64>>, mut b: Vec<f64>, c: Vec<f64>) -> Result<(f64, usize)> {
    const EPS: f64 = 1e-10;
    let m = a.len();
    let n = c.len();
    for i in 0..m {
        if b[i] < 0.0 {
            b[i] = -b[i];
            a[i].iter_mut().for_each(|v| *v = -*v);
        }
    }
    // tableau columns: n originals, m artificials, rhs
    let width = n + m + 1;
    let mut t: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut row = a[i].clone();
            row.resize(width, 0.0);
            row[n + i] = 1.0;
            row[width - 1] = b[i];
            row
        })
        .collect();
    let mut basis: Vec<usize> = (n..n + m).collect();
    let mut pivots = 0;

    let phase1: Vec<f64> = (0..n + m).map(|j| if j >= n { 1.0 } else { 0.0 }).collect();
    pivots += run_simplex(&mut t, &mut basis, &phase1, n + m, EPS)?;
    let infeasibility: f64 = basis.iter().zip(&t).filter(|(j, _)| **j >= n).map(|(_, r)| r[width - 1]).sum();
    if infeasibility > 1e-8 {
        return Err(QhmError::Numerical { message: "linear program is infeasible".into(), iterations: pivots });
    }
    // drive artificials out of the basis, dropping redundant rows
    let mut i = 0;
    while i < t.len() {
        if basis[i] >= n {
            match (0..n).find(|&j| t[i][j].abs() > EPS) {
                Some(j) => {
                    pivot(&mut t, i, j);
                    basis[i] = j;
                    pivots += 1;
                }
                None => {
                    t.remove(i);
                    basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }
    pivots += run_simplex(&mut t, &mut basis, &c, n, EPS)?;
    let value = basis.iter().zip(&t).map(|(&j, r)| c[j] * r[width - 1]).sum();
    Ok((value, pivots))
}

fn pivot(t: &mut [Vec<f64>], r: usize, col: usize) {
    let pv = t[r][col];
    t[r].iter_mut().for_each(|v| *v /= pv);
    let prow = t[r].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i == r {
            continue;
        }
        let f = row[col];
        if f != 0.0 {
            for (v, p) in row.iter_mut().zip(&prow) {
                *v -= f * p;
            }
        }
    }
}

/// Minimizes `cost` over the first `active` columns from the current basis.
///
/// Dantzig pricing, switching to Bland's rule after a run of degenerate
/// pivots so the method cannot cycle.
fn run_simplex(t: &mut [Vec<f64>], basis: &mut [usize], cost: &[f64], active: usize, eps: f64) -> Result<usize> {
    const STALL: usize = 50;
    let width = t.first().map_or(0, |r| r.len());
    let mut pivots = 0;
    let mut degenerate = 0usize;
    let mut in_basis = vec![false; width];
    basis.iter().for_each(|&j| in_basis[j] = true);
    loop {
        // reduced costs c_j - c_B B^-1 A_j
        let mut reduced = cost[..active].to_vec();
        for (&bj, row) in basis.iter().zip(t.iter()) {
            let cb = cost[bj];
            if cb != 0.0 {
                reduced.iter_mut().zip(row).for_each(|(r, v)| *r -= cb * v);
            }
        }
        let bland = degenerate >= STALL;
        let mut entering: Option<usize> = None;
        for j in (0..active).filter(|&j| !in_basis[j] && reduced[j] < -eps) {
            if bland {
                entering = Some(j);
                break;
            }
            if entering.is_none_or(|e| reduced[j] < reduced[e]) {
                entering = Some(j);
            }
        }
        let Some(col) = entering else { return Ok(pivots) };
        let mut leave: Option<(usize, f64)> = None;
        for (i, row) in t.iter().enumerate() {
            if row[col] > eps {
                let ratio = row[width - 1] / row[col];
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((li, lr)) => {
                        let tie = ratio <= lr + 1e-12;
                        let better_tie = if bland { basis[i] < basis[li] } else { row[col] > t[li][col] };
                        if ratio < lr - 1e-12 || (tie && better_tie) {
                            Some((i, ratio))
                        } else {
                            Some((li, lr))
                        }
                    }
                };
            }
        }
        let Some((r, ratio)) = leave else {
            return Err(QhmError::Numerical { message: "linear program is unbounded".into(), iterations: pivots });
        };
        degenerate = if ratio <= 1e-12 { degenerate + 1 } else { 0 };
        pivot(t, r, col);
        in_basis[basis[r]] = false;
        in_basis[col] = true;
        basis[r] = col;
        pivots += 1;
        if pivots > 200_000 {
            return Err(QhmError::Numerical { message: "simplex pivot limit reached".into(), iterations: pivots });
        }
    }
}
