//! The Lip-ball program `sup { mu(a) - nu(a) : L(a) <= 1, a = a* }`, restricted
//! to windowed trigonometric elements and solved by supergradient ascent on
//! the ratio `(mu - nu)(a) / L(a)`.
//!
//! Decision variables are the coefficients `theta[p][m][n]` of a windowed
//! element. Grid samples would not do: the discrete derivations have null
//! vectors (the checkerboard mode) that no state is blind to, and the program
//! becomes unbounded. In coefficient space every derivation is an exact
//! separable map `X Theta_p Y^T` onto the grid.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::state::{state_value, State};
use crate::algebra::lip_seminorm;
use crate::element::{powers, Element, Window, WindowedElement};
use crate::error::{QhmError, Result};
use crate::params::{ModelParams, Truncation};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub restarts: usize,
    pub iterations: usize,
    /// Trigonometric modes per direction in the search space.
    pub modes: usize,
    /// Initial step, relative to the size of the iterate; decays like `1/sqrt(k)`.
    pub step: f64,
    /// A restart stops once its best value has improved by less than
    /// `progress_tol` (relative) over `patience` iterations.
    pub patience: usize,
    pub progress_tol: f64,
    /// Radius of the Lip ball, 1 for the metric itself.
    pub radius: f64,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            restarts: 20,
            iterations: 2000,
            modes: 2,
            step: 0.3,
            patience: 400,
            progress_tol: 1e-7,
            radius: 1.0,
            seed: 0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.iterations == 0 || self.modes == 0 {
            return Err(QhmError::Config("restarts, iterations and modes must be positive".into()));
        }
        for (name, v) in [("step", self.step), ("progress_tol", self.progress_tol), ("radius", self.radius)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(QhmError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// One point visited by the solver, normalized to `L = radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Iterate {
    pub restart: usize,
    pub iteration: usize,
    pub objective: f64,
    /// `mu(phi)` and `nu(phi)` at the iterate.
    pub mu: f64,
    pub nu: f64,
    /// `tau(phi^(0))`, which is zero since the constant mode is projected out.
    pub trace_zero_mode: f64,
}

#[derive(Debug, Clone)]
pub struct DistanceResult {
    /// `|mu(w) - nu(w)|` for the witness `w`, whose polished `L` is `radius`.
    pub bound: f64,
    /// Best objective with `L` measured on the grid alone.
    pub grid_objective: f64,
    pub witness: Element,
    pub witness_coeffs: WindowedElement,
    pub iterations: usize,
    pub stagnated: bool,
    pub best_restart: usize,
}

/// `theta -> (theta + theta*) / 2` with the constant mode removed.
fn project(theta: &mut [Complex64], band: usize, modes: usize) {
    let w = 2 * modes + 1;
    let idx = |p: i64, m: i64, n: i64| {
        ((p + band as i64) as usize * w + (m + modes as i64) as usize) * w + (n + modes as i64) as usize
    };
    let b = band as i64;
    let k = modes as i64;
    for p in 0..=b {
        for m in -k..=k {
            for n in -k..=k {
                let (i, j) = (idx(p, m, n), idx(-p, -m, -n));
                // the p = 0 pairs are visited from both ends
                if p == 0 && i > j {
                    continue;
                }
                let avg = 0.5 * (theta[i] + theta[j].conj());
                theta[i] = avg;
                theta[j] = avg.conj();
            }
        }
    }
    theta[idx(0, 0, 0)] = ZERO;
}

fn dot_re(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    dot_re(a, a).sqrt()
}

/// A rank-one factor pair: the fiber values are `X Theta_p Y^T`.
struct Term {
    x: Vec<Complex64>,
    y: Vec<Complex64>,
}

/// The discretized program for one pair of states.
pub struct LipBallProgram {
    params: ModelParams,
    trunc: Truncation,
    band: usize,
    modes: usize,
    window: Window,
    /// `f(theta) = Re <gradient, theta>`.
    gradient: Vec<Complex64>,
    mu_functional: Vec<Complex64>,
    nu_functional: Vec<Complex64>,
    /// `terms[d][p + band]`.
    terms: Vec<Vec<Vec<Term>>>,
}

struct LipEval {
    value: f64,
    subgradient: Vec<Complex64>,
}

impl LipBallProgram {
    pub fn new(mu: &State, nu: &State, modes: usize) -> Result<Self> {
        if !mu.compatible(nu) {
            return Err(QhmError::Config("states are defined over different models or truncations".into()));
        }
        let (params, trunc) = (mu.params, mu.trunc);
        let band = trunc.p_max;
        let window = Window::default();
        let mu_functional = basis_functional(mu, band, modes, window)?;
        let nu_functional = basis_functional(nu, band, modes, window)?;
        let mut gradient: Vec<Complex64> =
            mu_functional.iter().zip(&nu_functional).map(|(a, b)| (a - b).conj()).collect();
        project(&mut gradient, band, modes);
        let terms = derivation_terms(&params, &trunc, band, modes, window);
        Ok(LipBallProgram { params, trunc, band, modes, window, gradient, mu_functional, nu_functional, terms })
    }

    pub fn dim(&self) -> usize {
        self.gradient.len()
    }

    fn width(&self) -> usize {
        2 * self.modes + 1
    }

    pub fn objective(&self, theta: &[Complex64]) -> f64 {
        dot_re(&self.gradient, theta)
    }

    fn functional(&self, f: &[Complex64], theta: &[Complex64]) -> f64 {
        dot_re(&f.iter().map(|z| z.conj()).collect::<Vec<_>>(), theta)
    }

    /// Grid Lip seminorm of the element with coefficients `theta`.
    pub fn lip(&self, theta: &[Complex64]) -> f64 {
        self.lip_eval(theta).value
    }

    fn lip_eval(&self, theta: &[Complex64]) -> LipEval {
        let (nx, ny, w) = (self.trunc.nx, self.trunc.ny, self.width());
        let block = w * w;
        let mut best = LipEval { value: -1.0, subgradient: Vec::new() };
        let mut z = vec![ZERO; nx * w];
        let mut v = vec![ZERO; nx * ny];
        for terms_d in &self.terms {
            let mut sups = Vec::with_capacity(terms_d.len());
            let mut sub = vec![ZERO; theta.len()];
            for (pi, terms) in terms_d.iter().enumerate() {
                if terms.is_empty() {
                    sups.push(0.0);
                    continue;
                }
                let th = &theta[pi * block..(pi + 1) * block];
                v.iter_mut().for_each(|e| *e = ZERO);
                for t in terms {
                    // z = X Theta
                    for i in 0..nx {
                        for n in 0..w {
                            let mut acc = ZERO;
                            for m in 0..w {
                                acc += t.x[i * w + m] * th[m * w + n];
                            }
                            z[i * w + n] = acc;
                        }
                    }
                    // v += z Y^T
                    for i in 0..nx {
                        for j in 0..ny {
                            let mut acc = ZERO;
                            for n in 0..w {
                                acc += z[i * w + n] * t.y[j * w + n];
                            }
                            v[i * ny + j] += acc;
                        }
                    }
                }
                let (arg, sup) = v
                    .iter()
                    .enumerate()
                    .map(|(k, e)| (k, e.norm()))
                    .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
                sups.push(sup);
                if sup > 0.0 {
                    let u = v[arg] / sup;
                    let (i, j) = (arg / ny, arg % ny);
                    for t in terms {
                        for m in 0..w {
                            for n in 0..w {
                                sub[pi * block + m * w + n] += u * (t.x[i * w + m] * t.y[j * w + n]).conj();
                            }
                        }
                    }
                }
            }
            let value = crate::numeric::fiber_sum(&sups);
            if value > best.value {
                best = LipEval { value, subgradient: sub };
            }
        }
        best
    }

    fn to_windowed(&self, theta: &[Complex64]) -> Result<WindowedElement> {
        WindowedElement::new(self.band, self.modes, self.modes, self.window, theta.to_vec())
    }

    fn iterate_record(&self, restart: usize, iteration: usize, theta: &[Complex64], radius: f64) -> Iterate {
        let w = self.width();
        let centre = (self.band * w + self.modes) * w + self.modes;
        Iterate {
            restart,
            iteration,
            objective: self.objective(theta) * radius,
            mu: self.functional(&self.mu_functional, theta) * radius,
            nu: self.functional(&self.nu_functional, theta) * radius,
            trace_zero_mode: theta[centre].re * radius,
        }
    }

    /// One restart of the ratio ascent; returns `(best objective at L = 1, theta, iterations, stagnated)`.
    fn ascend(
        &self,
        restart: usize,
        start: Vec<Complex64>,
        opts: &SolverOptions,
        observer: Option<&(dyn Fn(&Iterate) + Sync)>,
    ) -> (f64, Vec<Complex64>, usize, bool) {
        let mut theta = start;
        project(&mut theta, self.band, self.modes);
        let mut eval = self.lip_eval(&theta);
        if !(eval.value > 0.0) {
            return (0.0, vec![ZERO; theta.len()], 0, false);
        }
        theta.iter_mut().for_each(|z| *z /= eval.value);
        if self.objective(&theta) < 0.0 {
            theta.iter_mut().for_each(|z| *z = -*z);
            eval = self.lip_eval(&theta);
            theta.iter_mut().for_each(|z| *z /= eval.value);
        }
        let mut best = (f64::NEG_INFINITY, theta.clone());
        let mut last_progress = (0usize, f64::NEG_INFINITY);
        for k in 1..=opts.iterations {
            let f = self.objective(&theta);
            if let Some(obs) = observer {
                obs(&self.iterate_record(restart, k, &theta, opts.radius));
            }
            if f > best.0 {
                best = (f, theta.clone());
            }
            if best.0 > last_progress.1 + opts.progress_tol * best.0.abs().max(1e-300) {
                last_progress = (k, best.0);
            } else if k - last_progress.0 >= opts.patience {
                return (best.0, best.1, k, true);
            }
            let mut d: Vec<Complex64> =
                self.gradient.iter().zip(&eval.subgradient).map(|(g, s)| g - f * s).collect();
            project(&mut d, self.band, self.modes);
            let dn = norm(&d);
            if dn == 0.0 {
                return (best.0, best.1, k, false);
            }
            let step = opts.step / (k as f64).sqrt() * norm(&theta) / dn;
            for (t, di) in theta.iter_mut().zip(&d) {
                *t += step * di;
            }
            eval = self.lip_eval(&theta);
            if !(eval.value > 0.0) {
                break;
            }
            theta.iter_mut().for_each(|z| *z /= eval.value);
        }
        (best.0, best.1, opts.iterations, false)
    }

    fn random_start(&self, seed: u64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = self.modes as i64;
        let b = self.band as i64;
        let mut out = Vec::with_capacity(self.dim());
        for p in -b..=b {
            for m in -k..=k {
                for n in -k..=k {
                    let s = (-0.3 * (m * m + n * n + p * p) as f64).exp();
                    out.push(Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * s);
                }
            }
        }
        out
    }
}

/// `state(b_k)` for every basis element `b_k` of the search space.
fn basis_functional(s: &State, band: usize, modes: usize, window: Window) -> Result<Vec<Complex64>> {
    let w = 2 * modes + 1;
    let n = (2 * band + 1) * w * w;
    (0..n)
        .into_par_iter()
        .map(|k| {
            let mut coeffs = vec![ZERO; n];
            coeffs[k] = Complex64::new(1.0, 0.0);
            let el = WindowedElement::new(band, modes, modes, window, coeffs)?.into_element(s.params, s.trunc)?;
            state_value(s, &el)
        })
        .collect()
}

fn derivation_terms(
    params: &ModelParams,
    trunc: &Truncation,
    band: usize,
    modes: usize,
    window: Window,
) -> Vec<Vec<Vec<Term>>> {
    let w = 2 * modes + 1;
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    let ey: Vec<Complex64> = (0..trunc.ny).flat_map(|j| powers(trunc.y_at(j), modes)).collect();
    let dey: Vec<Complex64> = ey
        .iter()
        .enumerate()
        .map(|(k, e)| two_pi_i * ((k % w) as f64 - modes as f64) * e)
        .collect();
    let c = params.c as f64;
    let b = band as i64;
    let mut out = vec![Vec::new(), Vec::new(), Vec::new()];
    for p in -b..=b {
        let mut x1 = Vec::with_capacity(trunc.nx * w);
        let mut x2 = Vec::with_capacity(trunc.nx * w);
        let mut x2b = Vec::with_capacity(trunc.nx * w);
        let mut x3 = Vec::with_capacity(trunc.nx * w);
        for i in 0..trunc.nx {
            let x = trunc.x_at(i);
            let (wv, dw) = if p == 0 { (1.0, 0.0) } else { window.eval(x) };
            for (mi, e) in powers(x, modes).into_iter().enumerate() {
                let m = mi as f64 - modes as f64;
                x1.push(-(dw + two_pi_i * m * wv) * e);
                x2.push(two_pi_i * (c * p as f64 * x) * wv * e);
                x2b.push(-wv * e);
                x3.push(two_pi_i * p as f64 * wv * e);
            }
        }
        out[0].push(vec![Term { x: x1, y: ey.clone() }]);
        let mut t2 = vec![Term { x: x2b, y: dey.clone() }];
        if p != 0 {
            t2.push(Term { x: x2, y: ey.clone() });
        }
        out[1].push(t2);
        out[2].push(if p == 0 { Vec::new() } else { vec![Term { x: x3, y: ey.clone() }] });
    }
    out
}

/// Lower bound on `rho_L(mu, nu)` with the default options.
pub fn distance_lower_bound(mu: &State, nu: &State, opts: &SolverOptions) -> Result<DistanceResult> {
    distance_lower_bound_observed(mu, nu, opts, None)
}

/// As [`distance_lower_bound`], calling `observer` on every iterate of every restart.
pub fn distance_lower_bound_observed(
    mu: &State,
    nu: &State,
    opts: &SolverOptions,
    observer: Option<&(dyn Fn(&Iterate) + Sync)>,
) -> Result<DistanceResult> {
    opts.validate()?;
    let program = LipBallProgram::new(mu, nu, opts.modes)?;
    solve(&program, mu, nu, opts, observer)
}

fn solve(
    program: &LipBallProgram,
    mu: &State,
    nu: &State,
    opts: &SolverOptions,
    observer: Option<&(dyn Fn(&Iterate) + Sync)>,
) -> Result<DistanceResult> {
    let zero_theta = vec![ZERO; program.dim()];
    if norm(&program.gradient) == 0.0 {
        let coeffs = program.to_windowed(&zero_theta)?;
        let witness = coeffs.clone().into_element(program.params, program.trunc)?;
        return Ok(DistanceResult {
            bound: 0.0,
            grid_objective: 0.0,
            witness,
            witness_coeffs: coeffs,
            iterations: 0,
            stagnated: false,
            best_restart: 0,
        });
    }
    let runs: Vec<(f64, Vec<Complex64>, usize, bool)> = (0..opts.restarts)
        .into_par_iter()
        .map(|r| {
            let start = if r == 0 {
                program.gradient.clone()
            } else {
                program.random_start(opts.seed.wrapping_mul(0x9e37_79b9).wrapping_add(r as u64))
            };
            program.ascend(r, start, opts, observer)
        })
        .collect();
    let iterations = runs.iter().map(|r| r.2).sum();
    // ties go to the lowest restart index
    let (best_restart, best) = runs
        .iter()
        .enumerate()
        .fold((0, &runs[0]), |acc, (i, r)| if r.0 > acc.1 .0 { (i, r) } else { acc });
    let coeffs = program.to_windowed(&best.1)?;
    let raw = coeffs.clone().into_element(program.params, program.trunc)?.selfadjoint_part();
    let l = lip_seminorm(&raw)?;
    let (witness, bound) = if l > 0.0 {
        let w = raw.scale_real(opts.radius / l);
        let b = (state_value(mu, &w)? - state_value(nu, &w)?).re.abs();
        (w, b)
    } else {
        (raw, 0.0)
    };
    Ok(DistanceResult {
        bound,
        grid_objective: best.0 * opts.radius,
        witness,
        witness_coeffs: coeffs,
        iterations,
        stagnated: best.3,
        best_restart,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{lip_report, SupOptions};
    use crate::element::random_windowed;
    use crate::metric::{localized_state, random_vector_state};

    fn setup() -> (ModelParams, Truncation) {
        (ModelParams::default(), Truncation::new(2, 12, 12, 4).unwrap())
    }

    #[test]
    fn program_lip_matches_the_element_lip() {
        let (params, trunc) = setup();
        let mu = State::trace(params, trunc);
        let prog = LipBallProgram::new(&mu, &mu, 2).unwrap();
        let mut theta = random_windowed(4, 0.5, 2, 2).unwrap().coeffs;
        project(&mut theta, 2, 2);
        let el = prog.to_windowed(&theta).unwrap().into_element(params, trunc).unwrap();
        let direct = lip_report(&el, &SupOptions::GRID_ONLY).unwrap().value;
        assert!((prog.lip(&theta) - direct).abs() < 1e-12 * direct);
    }

    #[test]
    fn projection_is_selfadjoint_and_idempotent() {
        let mut theta = random_windowed(1, 0.5, 2, 2).unwrap().coeffs;
        project(&mut theta, 2, 2);
        let once = theta.clone();
        project(&mut theta, 2, 2);
        assert_eq!(once, theta);
        let (params, trunc) = setup();
        let el = WindowedElement::new(2, 2, 2, Window::default(), theta).unwrap().into_element(params, trunc).unwrap();
        assert!(el.selfadjoint_defect() < 1e-12, "{}", el.selfadjoint_defect());
    }

    #[test]
    fn identical_states_are_at_distance_zero() {
        let (params, trunc) = setup();
        let mu = random_vector_state(2, params, trunc, 1).unwrap();
        let r = distance_lower_bound(&mu, &mu, &SolverOptions::default()).unwrap();
        assert_eq!(r.bound, 0.0);
    }

    #[test]
    fn witness_is_feasible_and_objective_matches() {
        let (params, trunc) = setup();
        let mu = localized_state(params, trunc, 0.2, 0.5, 0.1).unwrap();
        let nu = localized_state(params, trunc, 0.4, 0.5, 0.1).unwrap();
        let opts = SolverOptions { restarts: 3, iterations: 300, ..Default::default() };
        let r = distance_lower_bound(&mu, &nu, &opts).unwrap();
        assert!(r.bound > 0.0 && r.bound <= r.grid_objective + 1e-12);
        assert!(lip_seminorm(&r.witness).unwrap() <= 1.0 + 1e-9);
        assert_eq!(r.witness.selfadjoint_defect(), 0.0);
    }
}
