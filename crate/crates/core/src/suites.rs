//! The verification suites: every acceptance criterion as a runnable check.

use std::f64::consts::PI;
use std::sync::Mutex;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::algebra::{
    average_over_torus, central_average, derivation, group_action, involution, lip_report, lip_seminorm, star,
    sup_sum_norm, trace, zero_mode, Derivation, GroupPoint, SupOptions,
};
use crate::config::RunConfig;
use crate::element::{fold_evaluate, random_element_banded, Element};
use crate::error::{QhmError, Result};
use crate::metric::{
    distance_lower_bound, distance_lower_bound_observed, random_vector_state, state_eval, state_value, Iterate,
    SolverOptions, State, RADIUS_BOUND, ZERO_MODE_GAP_BOUND,
};
use crate::params::Truncation;
use crate::report::{PropertyResult, Timing, VerifyReport};
use crate::representation::{cstar_norm_estimate, fiber_matrix, twist_equivalence_defect};
use crate::testkit::{brute_star, dense_oracle_norm, twisted_jet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    All,
    Algebra,
    Representation,
    Metric,
}

impl Suite {
    pub fn parse(s: &str) -> Result<Suite> {
        match s {
            "all" => Ok(Suite::All),
            "algebra" => Ok(Suite::Algebra),
            "representation" => Ok(Suite::Representation),
            "metric" => Ok(Suite::Metric),
            _ => Err(QhmError::Config(format!("unknown suite {s:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Suite::All => "all",
            Suite::Algebra => "algebra",
            Suite::Representation => "representation",
            Suite::Metric => "metric",
        }
    }

    pub fn criteria(self) -> Vec<u32> {
        CRITERIA
            .iter()
            .filter(|c| self == Suite::All || c.suite == self)
            .map(|c| c.id)
            .collect()
    }
}

pub struct Criterion {
    pub id: u32,
    pub title: &'static str,
    pub suite: Suite,
    pub budget_s: f64,
}

pub const CRITERIA: [Criterion; 11] = [
    Criterion { id: 1, title: "norm domination", suite: Suite::Representation, budget_s: 120.0 },
    Criterion { id: 2, title: "*-algebra norm", suite: Suite::Algebra, budget_s: 60.0 },
    Criterion { id: 3, title: "representation correctness", suite: Suite::Representation, budget_s: 120.0 },
    Criterion { id: 4, title: "algebra correctness", suite: Suite::Algebra, budget_s: 60.0 },
    Criterion { id: 5, title: "trace properties", suite: Suite::Algebra, budget_s: 60.0 },
    Criterion { id: 6, title: "derivations", suite: Suite::Algebra, budget_s: 120.0 },
    Criterion { id: 7, title: "tail estimate", suite: Suite::Algebra, budget_s: 60.0 },
    Criterion { id: 8, title: "proof-step inequalities", suite: Suite::Metric, budget_s: 120.0 },
    Criterion { id: 9, title: "radius", suite: Suite::Metric, budget_s: 600.0 },
    Criterion { id: 10, title: "averaging identities", suite: Suite::Algebra, budget_s: 60.0 },
    Criterion { id: 11, title: "compact quantum metric smoke test", suite: Suite::Algebra, budget_s: 60.0 },
];

pub fn criterion(id: u32) -> Result<&'static Criterion> {
    CRITERIA
        .iter()
        .find(|c| c.id == id)
        .ok_or_else(|| QhmError::Config(format!("no acceptance criterion {id}")))
}

/// Runs the selected suite after validating the configuration.
pub fn verify(cfg: &RunConfig, suite: Suite) -> Result<VerifyReport> {
    cfg.validate()?;
    let mut properties = Vec::new();
    let mut timings = Vec::new();
    for id in suite.criteria() {
        let (props, timing) = run_criterion(cfg, id)?;
        properties.extend(props);
        timings.push(timing);
    }
    Ok(VerifyReport::new(suite.name(), cfg.base_seed(), properties, timings))
}

/// Runs one criterion and times it.
pub fn run_criterion(cfg: &RunConfig, id: u32) -> Result<(Vec<PropertyResult>, Timing)> {
    let c = criterion(id)?;
    let start = Instant::now();
    let mut ctx = Ctx { cfg, id, suite: c.suite, out: Vec::new() };
    match id {
        1 => norm_domination(&mut ctx)?,
        2 => algebra_norm(&mut ctx)?,
        3 => representation(&mut ctx)?,
        4 => algebra(&mut ctx)?,
        5 => trace_properties(&mut ctx)?,
        6 => derivations(&mut ctx)?,
        7 => tail(&mut ctx)?,
        8 => proof_steps(&mut ctx)?,
        9 => radius(&mut ctx)?,
        10 => averaging(&mut ctx)?,
        _ => cqms(&mut ctx)?,
    }
    let timing = Timing { criterion: id, elapsed_s: start.elapsed().as_secs_f64(), budget_s: c.budget_s };
    Ok((ctx.out, timing))
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    id: u32,
    suite: Suite,
    out: Vec<PropertyResult>,
}

impl Ctx<'_> {
    fn seed(&self, k: u64) -> u64 {
        derive_seed(self.cfg.base_seed(), self.id, k)
    }

    fn rng(&self, k: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed(k) ^ 0xa5a5)
    }

    fn element(&self, k: u64, band: usize) -> Result<Element> {
        random_element_banded(self.seed(k), self.cfg.trunc, self.cfg.params, self.cfg.decay, band)
    }

    /// Records `measured <= limit`.
    fn le(&mut self, name: &str, measured: f64, limit: f64, samples: usize, detail: impl Into<String>) {
        self.out.push(PropertyResult {
            criterion: self.id,
            name: name.to_string(),
            suite: self.suite.name().to_string(),
            passed: measured <= limit,
            measured,
            limit,
            samples,
            detail: detail.into(),
        });
    }

    /// `n` probe points with `x` spread over several periods.
    fn probes(&self, k: u64, n: usize, band: usize) -> Vec<(f64, f64, i64)> {
        let mut rng = self.rng(k);
        (0..n)
            .map(|_| {
                (
                    rng.random_range(-2.0..3.0),
                    rng.random_range(-1.0..2.0),
                    rng.random_range(-(band as i64)..=band as i64),
                )
            })
            .collect()
    }
}

fn derive_seed(base: u64, id: u32, k: u64) -> u64 {
    base ^ ((id as u64) << 40) ^ k.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

fn max_of(it: impl IntoIterator<Item = f64>) -> f64 {
    it.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

fn par_max<F>(n: usize, f: F) -> Result<f64>
where
    F: Fn(usize) -> Result<f64> + Sync + Send,
{
    let v: Result<Vec<f64>> = (0..n).into_par_iter().map(f).collect();
    Ok(max_of(v?))
}

/// Largest `|f(probe) - g(probe)|`.
fn probe_diff(
    probes: &[(f64, f64, i64)],
    f: impl Fn(f64, f64, i64) -> Result<Complex64>,
    g: impl Fn(f64, f64, i64) -> Result<Complex64>,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for &(x, y, p) in probes {
        worst = worst.max((f(x, y, p)? - g(x, y, p)?).norm());
    }
    Ok(worst)
}

fn norm_domination(ctx: &mut Ctx) -> Result<()> {
    let n = 100;
    let p = ctx.cfg.trunc.p_max;
    let worst = par_max(n, |k| {
        let a = ctx.element(k as u64, p)?;
        Ok(cstar_norm_estimate(&a)?.value - sup_sum_norm(&a).sup_sum)
    })?;
    let tol = ctx.cfg.tol("domination");
    ctx.le("cstar - supsum", worst, tol, n, "C*-norm estimate never exceeds the sup-sum norm");
    Ok(())
}

fn algebra_norm(ctx: &mut Ctx) -> Result<()> {
    let n = 50;
    let half = ctx.cfg.trunc.p_max / 2;
    let results: Result<Vec<(f64, f64)>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let a = ctx.element(2 * k as u64, half)?;
            let b = ctx.element(2 * k as u64 + 1, half)?;
            let (na, nb) = (sup_sum_norm(&a).sup_sum, sup_sum_norm(&b).sup_sum);
            let nab = sup_sum_norm(&star(&a, &b)?).sup_sum;
            let adj = (sup_sum_norm(&involution(&a)).sup_sum - na).abs();
            Ok((nab - na * nb, adj))
        })
        .collect();
    let results = results?;
    let sub = max_of(results.iter().map(|r| r.0));
    let adj = max_of(results.iter().map(|r| r.1));
    let (ts, ta) = (ctx.cfg.tol("submultiplicativity"), ctx.cfg.tol("adjoint_norm"));
    ctx.le("||ab|| - ||a|| ||b||", sub, ts, n, "sup-sum norm is submultiplicative");
    ctx.le("| ||a*|| - ||a|| |", adj, ta, n, "sup-sum norm is a *-norm");
    Ok(())
}

fn representation(ctx: &mut Ctx) -> Result<()> {
    let t = ctx.cfg.trunc;
    let half = t.p_max / 2;
    let bases: Vec<(f64, f64)> = {
        let mut rng = ctx.rng(1);
        (0..3).map(|_| (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0))).collect()
    };
    let n = 20;
    let interior = t.q_max as i64 - 2 * half as i64;
    let results: Result<Vec<(f64, f64, f64)>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let a = ctx.element(2 * k as u64, half)?;
            let b = ctx.element(2 * k as u64 + 1, half)?;
            let ab = star(&a, &b)?;
            let ainv = involution(&a);
            let (mut adj, mut hom, mut shift) = (0.0f64, 0.0f64, 0.0f64);
            for &(x, y) in &bases {
                let ma = fiber_matrix(&a, x, y);
                adj = adj.max(fiber_matrix(&ainv, x, y).max_abs_diff(&ma.conj_transpose()));
                let prod = ma.matmul(&fiber_matrix(&b, x, y));
                let direct = fiber_matrix(&ab, x, y);
                let q = t.q_max as i64;
                for p in -interior..=interior {
                    for r in -q..=q {
                        hom = hom.max((prod.get(p, r) - direct.get(p, r)).norm());
                    }
                }
                shift = shift.max(twist_equivalence_defect(&a, x, y));
            }
            Ok((adj, hom, shift))
        })
        .collect();
    let results = results?;
    ctx.le("adjoint identity", max_of(results.iter().map(|r| r.0)), 0.0, n, "pi(a*) = pi(a)^H entry for entry");
    let th = ctx.cfg.tol("homomorphism");
    ctx.le(
        "interior homomorphism",
        max_of(results.iter().map(|r| r.1)),
        th,
        n,
        format!("rows |p| <= {interior} of pi(a)pi(b) - pi(ab)"),
    );
    let tb = ctx.cfg.tol("base_translation");
    ctx.le(
        "base translation",
        max_of(results.iter().map(|r| r.2)),
        tb,
        n,
        "fiber at x + 1 is a diagonal unitary conjugate of the fiber at x",
    );

    // small truncation where the dense oracle is affordable
    let small = Truncation::new(3, 8, 8, 8)?;
    let m = 5;
    let worst = par_max(m, |k| {
        let a = random_element_banded(ctx.seed(100 + k as u64), small, ctx.cfg.params, ctx.cfg.decay, 3)?;
        let est = cstar_norm_estimate(&a)?.value;
        Ok((est - dense_oracle_norm(&a, small.q_max, small.nx, small.ny)?).abs())
    })?;
    let to = ctx.cfg.tol("dense_oracle");
    ctx.le("dense operator oracle", worst, to, m, "power iteration vs literal dense matrix at Q = 8");
    Ok(())
}

fn algebra(ctx: &mut Ctx) -> Result<()> {
    let (params, t) = (ctx.cfg.params, ctx.cfg.trunc);
    let half = t.p_max / 2;
    let pairs = 10;
    let mut oracle = 0.0f64;
    let mut assoc = 0.0f64;
    let mut ident = 0.0f64;
    let id = Element::identity(params, t);
    let third = t.p_max / 3;
    for k in 0..pairs {
        let a = ctx.element(3 * k, half)?;
        let b = ctx.element(3 * k + 1, half)?;
        let ab = star(&a, &b)?;
        let probes = ctx.probes(k, 20, t.p_max);
        oracle = oracle.max(probe_diff(
            &probes,
            |x, y, p| fold_evaluate(&ab, x, y, p),
            |x, y, p| Ok(brute_star(&a, &b, x, y, p)),
        )?);
        let ia = star(&id, &a)?;
        let ai = star(&a, &id)?;
        ident = ident.max(probe_diff(&probes, |x, y, p| fold_evaluate(&ia, x, y, p), |x, y, p| fold_evaluate(&a, x, y, p))?);
        ident = ident.max(probe_diff(&probes, |x, y, p| fold_evaluate(&ai, x, y, p), |x, y, p| fold_evaluate(&a, x, y, p))?);

        let (u, v, w) = (ctx.element(3 * k, third)?, ctx.element(3 * k + 1, third)?, ctx.element(3 * k + 2, third)?);
        let left = star(&star(&u, &v)?, &w)?;
        let right = star(&u, &star(&v, &w)?)?;
        assoc = assoc.max(probe_diff(
            &probes,
            |x, y, p| fold_evaluate(&left, x, y, p),
            |x, y, p| fold_evaluate(&right, x, y, p),
        )?);
    }
    let n = pairs as usize;
    let (t1, t2, t3) = (ctx.cfg.tol("star_oracle"), ctx.cfg.tol("associativity"), ctx.cfg.tol("identity"));
    ctx.le("star vs brute-force sum", oracle, t1, n * 20, "20 probes x 10 pairs");
    ctx.le("associativity", assoc, t2, n * 20, "bands chosen so the triple product fits the truncation");
    ctx.le("identity laws", ident, t3, n * 20, "I*a = a*I = a");
    Ok(())
}

fn trace_properties(ctx: &mut Ctx) -> Result<()> {
    let p = ctx.cfg.trunc.p_max;
    let half = p / 2;
    let mut cyclic = 0.0f64;
    for k in 0..10 {
        let a = ctx.element(2 * k, half)?;
        let b = ctx.element(2 * k + 1, half)?;
        cyclic = cyclic.max((trace(&star(&a, &b)?) - trace(&star(&b, &a)?)).norm());
    }
    let neg = par_max(50, |k| {
        let a = ctx.element(100 + k as u64, half)?;
        let v = trace(&star(&involution(&a), &a)?);
        Ok((-v.re).max(0.0))
    })?;
    let mut rng = ctx.rng(7);
    let mut inv = 0.0f64;
    for k in 0..10 {
        let a = ctx.element(200 + k, p)?;
        let g = GroupPoint::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.0));
        inv = inv.max((trace(&group_action(g, &a)) - trace(&a)).norm());
    }
    let (t1, t2, t3) = (ctx.cfg.tol("trace_cyclic"), ctx.cfg.tol("trace_positive"), ctx.cfg.tol("action_invariance"));
    ctx.le("tau(ab) - tau(ba)", cyclic, t1, 10, "tracial");
    ctx.le("-tau(a* a)", neg, t2, 50, "positive");
    ctx.le("tau(L_g a) - tau(a)", inv, t3, 10, "invariant under the group action");
    Ok(())
}

fn derivations(ctx: &mut Ctx) -> Result<()> {
    let (params, t) = (ctx.cfg.params, ctx.cfg.trunc);
    let half = t.p_max / 2;

    // Leibniz rule
    let mut leibniz = 0.0f64;
    for k in 0..10 {
        let a = ctx.element(2 * k, half)?;
        let b = ctx.element(2 * k + 1, half)?;
        let ab = star(&a, &b)?;
        let probes = ctx.probes(k, 20, t.p_max);
        for d in Derivation::ALL {
            let lhs = derivation(d, &ab)?;
            let r1 = star(&derivation(d, &a)?, &b)?;
            let r2 = star(&a, &derivation(d, &b)?)?;
            let mut err = 0.0f64;
            let mut scale = 0.0f64;
            for &(x, y, p) in &probes {
                let l = fold_evaluate(&lhs, x, y, p)?;
                let r = fold_evaluate(&r1, x, y, p)? + fold_evaluate(&r2, x, y, p)?;
                err = err.max((l - r).norm());
                scale = scale.max(l.norm());
            }
            leibniz = leibniz.max(err / scale.max(f64::MIN_POSITIVE));
        }
    }
    let tl = ctx.cfg.tol("leibniz");
    ctx.le("Leibniz relative error", leibniz, tl, 200, "d(ab) = d(a)b + a d(b), all three derivations");

    // central differences of the one-parameter subgroups converge at second order
    let mut order_dev = 0.0f64;
    let mut orders = Vec::new();
    for i in 1..=3usize {
        let d = Derivation::ALL[i - 1];
        let mut errs = [0.0f64; 2];
        for k in 0..5 {
            let a = ctx.element(50 + k, t.p_max)?;
            let exact = derivation(d, &a)?;
            let probes = ctx.probes(50 + k, 10, t.p_max);
            for (slot, h) in [1e-2, 5e-3].into_iter().enumerate() {
                let fwd = group_action(GroupPoint::generator(i, h), &a);
                let bwd = group_action(GroupPoint::generator(i, -h), &a);
                for &(x, y, p) in &probes {
                    let fd = (fold_evaluate(&fwd, x, y, p)? - fold_evaluate(&bwd, x, y, p)?) / (2.0 * h);
                    errs[slot] = errs[slot].max((fd - fold_evaluate(&exact, x, y, p)?).norm());
                }
            }
        }
        let order = (errs[0] / errs[1]).log2();
        orders.push(order);
        order_dev = order_dev.max((order - 2.0).abs());
    }
    let tf = ctx.cfg.tol("fd_order");
    ctx.le(
        "generator difference order - 2",
        order_dev,
        tf,
        150,
        format!("observed orders {:.3}, {:.3}, {:.3}", orders[0], orders[1], orders[2]),
    );

    // d2 of the twisted extension agrees with the fold of d2
    let mut twist = 0.0f64;
    let c = params.c as f64;
    for k in 0..10 {
        let a = ctx.element(80 + k, t.p_max)?;
        let d2 = derivation(Derivation::D2, &a)?;
        for &(x, y, p) in &ctx.probes(80 + k, 20, t.p_max) {
            let (v, _, vy) = twisted_jet(&a, x, y, p).expect("windowed elements carry partials");
            let global = Complex64::new(0.0, 2.0 * PI * c * p as f64 * x) * v - vy;
            twist = twist.max((global - fold_evaluate(&d2, x, y, p)?).norm());
        }
    }
    let tt = ctx.cfg.tol("twist");
    ctx.le("d2 twist preservation", twist, tt, 200, "2 pi i c p x phi - d phi/dy of the extension vs folded d2");
    Ok(())
}

/// A random self-adjoint element rescaled to `L = 1`.
fn unit_lip(ctx: &Ctx, k: u64) -> Result<Element> {
    let a = ctx.element(k, ctx.cfg.trunc.p_max)?.selfadjoint_part();
    let l = lip_seminorm(&a)?;
    Ok(a.scale_real(1.0 / l))
}

fn tail(ctx: &mut Ctx) -> Result<()> {
    let n = 50;
    let ratios: Result<Vec<(f64, f64)>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let a = unit_lip(ctx, k as u64)?;
            let norms = sup_sum_norm(&a);
            let mut sharp = 0.0f64;
            let mut weak = 0.0f64;
            for big_n in [2usize, 4, 8] {
                let tail = norms.tail_mass(big_n);
                sharp = sharp.max(tail * 2.0 * PI * big_n as f64);
                weak = weak.max(tail * big_n as f64);
            }
            Ok((sharp, weak))
        })
        .collect();
    let ratios = ratios?;
    let tol = ctx.cfg.tol("tail");
    ctx.le(
        "2 pi N sum_{|p|>=N} sup|a_p|",
        max_of(ratios.iter().map(|r| r.0)),
        1.0 + tol,
        n,
        "N in {2, 4, 8}, L(a) = 1",
    );
    ctx.le("N sum_{|p|>=N} sup|a_p|", max_of(ratios.iter().map(|r| r.1)), 1.0 + tol, n, "the weaker constant");
    Ok(())
}

fn proof_steps(ctx: &mut Ctx) -> Result<()> {
    let (params, t) = (ctx.cfg.params, ctx.cfg.trunc);
    let tol = ctx.cfg.tol("proof_step");
    let spread = ctx.cfg.metric.state_spread;
    let n = 100;
    let results: Result<Vec<[f64; 4]>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let a = unit_lip(ctx, k as u64)?;
            let a0 = zero_mode(&a);
            let off = sup_sum_norm(&a.sub(&a0)?).sup_sum;

            let mut rng = ctx.rng(1000 + k as u64);
            let g = GroupPoint::new(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0), 0.0);
            let n0 = sup_sum_norm(&a0).sup_sum;
            let unit0 = a0.scale_real(1.0 / n0);
            let moved = sup_sum_norm(&unit0.sub(&group_action(g, &unit0))?).sup_sum;

            let mu = random_vector_state(ctx.seed(2000 + k as u64), params, t, spread)?;
            let smear = (state_eval(&mu, &a0)? - trace(&a0).re).abs();
            let gap = crate::metric::zero_mode_gap(&mu, &a)?;
            Ok([off, moved, smear, gap])
        })
        .collect();
    let r = results?;
    let col = |i: usize| max_of(r.iter().map(|v| v[i]));
    ctx.le("||a - a0||", col(0), 1.0 + tol, n, "step (i), L(a) = 1");
    ctx.le("||a0 - L_(r,s,0) a0||", col(1), 2.0 + tol, n, "step (ii), ||a0|| = 1");
    ctx.le("|mu(a0) - tau(a0)|", col(2), 2.0 + tol, n, "step (ii) for vector states, L(a0) <= 1");
    ctx.le("zero-mode gap", col(3), ZERO_MODE_GAP_BOUND + 1e-6, n, "|mu(a) - tau(a0)|, L(a) = 1");
    Ok(())
}

fn radius(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let (params, m, id) = (cfg.params, &cfg.metric, ctx.id);
    let opts = SolverOptions { seed: ctx.seed(0), ..m.solver };
    let state = |k: u64| random_vector_state(derive_seed(cfg.base_seed(), id, k), params, m.trunc, m.state_spread);
    let triples = 10u64;
    let mut bounds = Vec::new();
    let mut sym = 0.0f64;
    let mut tri = f64::NEG_INFINITY;
    let mut neg = 0.0f64;
    let mut stagnated = 0;
    for k in 0..triples {
        let (mu, nu, sigma) = (state(3 * k)?, state(3 * k + 1)?, state(3 * k + 2)?);
        let d_mn = distance_lower_bound(&mu, &nu, &opts)?;
        let d_nm = distance_lower_bound(&nu, &mu, &opts)?;
        let d_ns = distance_lower_bound(&nu, &sigma, &opts)?;
        let d_ms = distance_lower_bound(&mu, &sigma, &opts)?;
        for d in [&d_mn, &d_nm, &d_ns, &d_ms] {
            bounds.push(d.bound);
            neg = neg.max(-d.bound);
            stagnated += d.stagnated as usize;
        }
        sym = sym.max((d_mn.bound - d_nm.bound).abs());
        tri = tri.max(d_ms.bound - d_mn.bound - d_ns.bound);
    }
    let max_bound = max_of(bounds.iter().copied());
    ctx.le(
        "max distance",
        max_bound,
        RADIUS_BOUND + ctx.cfg.tol("radius"),
        bounds.len(),
        format!("{} solves, {} ended by stagnation", bounds.len(), stagnated),
    );
    ctx.le("-min distance", neg, 0.0, bounds.len(), "distances are nonnegative");
    let ts = ctx.cfg.tol("symmetry");
    ctx.le("|d(mu,nu) - d(nu,mu)|", sym, ts, triples as usize, "symmetry");
    let tt = ctx.cfg.tol("triangle");
    ctx.le("d(mu,s) - d(mu,nu) - d(nu,s)", tri, tt, triples as usize, "triangle inequality of lower bounds");

    // every iterate of a solve against the trace stays within the zero-mode gap bound
    let worst = Mutex::new(0.0f64);
    let observer = |it: &Iterate| {
        let gap = (it.mu - it.trace_zero_mode).abs();
        let mut w = worst.lock().unwrap();
        *w = w.max(gap);
    };
    let tr = State::trace(params, m.trunc);
    let mut pair_bounds = Vec::new();
    for k in 0..2u64 {
        let mu = state(100 + k)?;
        pair_bounds.push(distance_lower_bound_observed(&mu, &tr, &opts, Some(&observer))?.bound);
    }
    pair_bounds.push(distance_lower_bound(&tr, &tr, &opts)?.bound);
    let gap = *worst.lock().unwrap();
    ctx.le("solver iterate gap vs trace", gap, ZERO_MODE_GAP_BOUND + 1e-6, 2, "|mu(phi) - tau(phi0)| along the ascent");
    ctx.le("d(tau, tau)", pair_bounds[2], 0.0, 1, "trace state against itself");
    Ok(())
}

fn averaging(ctx: &mut Ctx) -> Result<()> {
    let t = ctx.cfg.trunc;
    let mut central = 0.0f64;
    let mut torus = 0.0f64;
    for k in 0..10 {
        let a = ctx.element(k, t.p_max)?;
        let avg = central_average(&a, 16)?;
        let zm = zero_mode(&a);
        central = central.max(probe_diff(
            &ctx.probes(k, 20, t.p_max),
            |x, y, p| fold_evaluate(&avg, x, y, p),
            |x, y, p| fold_evaluate(&zm, x, y, p),
        )?);
        torus = torus.max((average_over_torus(&zm)? - trace(&a)).norm());
    }
    let (tc, tt) = (ctx.cfg.tol("central_average"), ctx.cfg.tol("torus_average"));
    ctx.le("central circle average - zero mode", central, tc, 200, "16 nodes");
    ctx.le("torus average - trace", torus, tt, 10, "average of L_(r,s,0) a0 over the grid");
    Ok(())
}

fn cqms(ctx: &mut Ctx) -> Result<()> {
    let (params, t) = (ctx.cfg.params, ctx.cfg.trunc);
    let id = Element::identity(params, t);
    let mut scalar = 0.0f64;
    for s in [1.0, -2.5, 0.3, 1e3, 0.0] {
        scalar = scalar.max(lip_seminorm(&id.scale_real(s))?);
    }
    scalar = scalar.max(lip_seminorm(&Element::constant(params, t, Complex64::new(-7.25, 0.0)))?);
    ctx.le("L(scalar)", scalar, 0.0, 6, "exactly zero on multiples of the unit");
    let n = 50;
    let smallest: Result<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let a = ctx.element(k as u64, t.p_max)?.selfadjoint_part();
            Ok(lip_report(&a, &SupOptions::default())?.value)
        })
        .collect();
    let min = smallest?.into_iter().fold(f64::INFINITY, f64::min);
    ctx.out.push(PropertyResult {
        criterion: ctx.id,
        name: "min L(non-scalar)".into(),
        suite: ctx.suite.name().into(),
        passed: min > 0.0,
        measured: min,
        limit: 0.0,
        samples: n,
        detail: "strictly positive on every non-scalar sample".into(),
    });
    Ok(())
}

/// Checks the `state(I) = 1` and reality invariants for a state at the metric truncation.
pub fn state_invariants(s: &State, a: &Element) -> Result<(f64, f64)> {
    let id = Element::identity(s.params, s.trunc);
    let one = (state_eval(s, &id)? - 1.0).abs();
    let imag = state_value(s, &a.selfadjoint_part())?.im.abs();
    Ok((one, imag))
}
