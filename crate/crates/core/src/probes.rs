//! Randomized checks of the auxiliary inequalities used by the analysis.
//!
//! Deterministic inequalities are checked draw by draw and must show zero
//! violations. Probability bounds are checked with a one-sided binomial test:
//! a probe fails only if the observed event count is implausibly large for an
//! event whose probability is at most `bound_rhs`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complex::{inner, norm2, normalize, orthonormalize_columns, phase, C64};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};
use crate::sensing::sample_complex_gaussian;
use crate::stats::{binomial_upper_tail, linear_fit};

/// Significance level of the one-sided binomial tests.
pub const ALPHA: f64 = 1e-3;

/// Floating-point slack granted to deterministic inequalities.
pub const FLOAT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    /// Inequality that holds on every draw.
    Deterministic,
    /// Event probability bounded by `bound_rhs`.
    Binomial,
    /// Event frequency must decrease along a parameter sweep.
    Monotone,
    /// Regression slope; `empirical_rate` is the fitted slope and `bound_rhs`
    /// the predicted one.
    Slope,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub lemma_id: String,
    pub kind: ProbeKind,
    /// Parameter setting, e.g. `r=0.5`.
    pub params: String,
    pub trials: u64,
    pub violations: u64,
    pub bound_rhs: f64,
    pub empirical_rate: f64,
    /// Largest deviation seen by deterministic probes.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_deviation: Option<f64>,
    pub pass: bool,
}

impl ProbeResult {
    fn binomial(lemma_id: &str, params: String, trials: u64, events: u64, bound: f64) -> Self {
        let p_value = binomial_upper_tail(events, trials, bound.clamp(0.0, 1.0));
        Self {
            lemma_id: lemma_id.into(),
            kind: ProbeKind::Binomial,
            params,
            trials,
            violations: events,
            bound_rhs: bound,
            empirical_rate: events as f64 / trials as f64,
            max_deviation: None,
            pass: p_value >= ALPHA,
        }
    }

    fn deterministic(lemma_id: &str, params: String, trials: u64, violations: u64, max_dev: f64) -> Self {
        Self {
            lemma_id: lemma_id.into(),
            kind: ProbeKind::Deterministic,
            params,
            trials,
            violations,
            bound_rhs: 0.0,
            empirical_rate: violations as f64 / trials as f64,
            max_deviation: Some(max_dev),
            pass: violations == 0,
        }
    }
}

fn check_trials(trials: u64, min: u64) -> Result<()> {
    if trials < min {
        return Err(Error::InvalidConfig(format!(
            "probe needs at least {min} trials, got {trials}"
        )));
    }
    Ok(())
}

/// Splits `trials` draws into parallel chunks, each with its own child stream.
fn parallel_fold<T: Send>(
    seed: u64,
    trials: u64,
    init: impl Fn() -> T + Sync,
    body: impl Fn(&mut Rng, &mut T) + Sync,
    merge: impl Fn(T, T) -> T + Sync + Send,
) -> T {
    const CHUNK: u64 = 4096;
    let chunks = trials.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = rng::child_rng(seed, &[c]);
            let mut acc = init();
            let count = CHUNK.min(trials - c * CHUNK);
            for _ in 0..count {
                body(&mut rng, &mut acc);
            }
            acc
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(init(), merge)
}

/// `|phase(x + y) - phase(x)| <= min(2 |y| / |x|, 2)`.
pub fn phase_perturbation_excess(x: C64, y: C64) -> f64 {
    let lhs = (phase(x + y) - phase(x)).norm();
    let rhs = if x == C64::new(0.0, 0.0) {
        2.0
    } else {
        (2.0 * y.norm() / x.norm()).min(2.0)
    };
    lhs - rhs
}

/// `||(u + v)/||u + v|| - v/||v||| <= min(2 ||u|| / ||v||, 2)` for `v != 0`.
pub fn unit_perturbation_excess(u: &[C64], v: &[C64]) -> f64 {
    let s: Vec<C64> = u.iter().zip(v).map(|(a, b)| a + b).collect();
    let (ns, nv) = (norm2(&s), norm2(v));
    let lhs = if ns == 0.0 {
        1.0
    } else {
        s.iter()
            .zip(v)
            .map(|(a, b)| (a / ns - b / nv).norm_sqr())
            .sum::<f64>()
            .sqrt()
    };
    lhs - (2.0 * norm2(u) / nv).min(2.0)
}

fn log_uniform(rng: &mut Rng, lo: f64, hi: f64) -> f64 {
    use rand::Rng as _;
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

fn random_direction(rng: &mut Rng, len: usize) -> Vec<C64> {
    let mut v = rng::complex_normal_vec(rng, len, 1.0);
    normalize(&mut v);
    v
}

type DetAcc = (u64, f64);

fn merge_det(a: DetAcc, b: DetAcc) -> DetAcc {
    (a.0 + b.0, a.1.max(b.1))
}

pub fn probe_phase_perturbation(trials: u64, seed: u64) -> Result<ProbeResult> {
    check_trials(trials, 100_000)?;
    let (violations, max_dev) = parallel_fold(
        seed,
        trials,
        || (0u64, f64::NEG_INFINITY),
        |rng, acc| {
            let x = rng::complex_normal(rng, 1.0);
            let ratio = log_uniform(rng, 1e-3, 1e3);
            let y = phase(rng::complex_normal(rng, 1.0)) * x.norm() * ratio;
            let excess = phase_perturbation_excess(x, y);
            if excess > FLOAT_SLACK {
                acc.0 += 1;
            }
            acc.1 = acc.1.max(excess);
        },
        merge_det,
    );
    Ok(ProbeResult::deterministic(
        "phase_perturbation",
        "|y|/|x| in [1e-3, 1e3]".into(),
        trials,
        violations,
        max_dev,
    ))
}

pub fn probe_unit_perturbation(trials: u64, dim: usize, seed: u64) -> Result<ProbeResult> {
    check_trials(trials, 1)?;
    if dim == 0 {
        return Err(Error::InvalidConfig("dimension must be positive".into()));
    }
    let (violations, max_dev) = parallel_fold(
        seed,
        trials,
        || (0u64, f64::NEG_INFINITY),
        |rng, acc| {
            let v = rng::complex_normal_vec(rng, dim, 1.0);
            let ratio = log_uniform(rng, 1e-3, 1e3);
            let scale = ratio * norm2(&v);
            let u: Vec<C64> = random_direction(rng, dim).into_iter().map(|a| a * scale).collect();
            let excess = unit_perturbation_excess(&u, &v);
            if excess > FLOAT_SLACK {
                acc.0 += 1;
            }
            acc.1 = acc.1.max(excess);
        },
        merge_det,
    );
    Ok(ProbeResult::deterministic(
        "unit_perturbation",
        format!("dim={dim}"),
        trials,
        violations,
        max_dev,
    ))
}

/// Frequency of `|x| <= r` for `x ~ CN(0, 1)` against the bound `r^2`.
pub fn probe_small_ball(trials: u64, r: f64, seed: u64) -> Result<ProbeResult> {
    check_trials(trials, 1)?;
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::InvalidConfig(format!("r must lie in (0, 1], got {r}")));
    }
    let events = parallel_fold(
        seed,
        trials,
        || 0u64,
        |rng, acc| {
            if rng::complex_normal(rng, 1.0).norm() <= r {
                *acc += 1;
            }
        },
        |a, b| a + b,
    );
    Ok(ProbeResult::binomial("small_ball", format!("r={r}"), trials, events, r * r))
}

/// Splits the normalized projection of a unit `x` onto a random subspace into
/// `a x + remainder` and checks `a = ||P x||` and `remainder ⟂ x`.
pub fn probe_projection_direction(trials: u64, m: usize, n: usize, seed: u64) -> Result<ProbeResult> {
    check_trials(trials, 1000)?;
    if !(1 <= n && n < m) {
        return Err(Error::InvalidConfig(format!("need 1 <= n < m, got n={n}, m={m}")));
    }
    const TOL: f64 = 1e-10;
    let mut violations = 0u64;
    let mut used = 0u64;
    let mut max_dev = 0.0f64;
    let mut rng = rng::rng_from_seed(seed);
    while used < trials {
        let g = sample_complex_gaussian(&mut rng, m, n, 1.0)?;
        let basis = orthonormalize_columns(&g)?;
        let x = random_direction(&mut rng, m);
        let p = basis.project(&x)?;
        let a = norm2(&p);
        if a < 1e-8 {
            continue;
        }
        used += 1;
        let p_hat: Vec<C64> = p.iter().map(|v| v / a).collect();
        let b = inner(&x, &p_hat);
        let remainder: Vec<C64> = p_hat.iter().zip(&x).map(|(ph, xi)| ph - xi * a).collect();
        let dev = (b - a)
            .norm()
            .max(inner(&x, &remainder).norm())
            .max((norm2(&remainder) - (1.0 - a * a).max(0.0).sqrt()).abs());
        max_dev = max_dev.max(dev);
        if dev > TOL {
            violations += 1;
        }
    }
    Ok(ProbeResult::deterministic(
        "projection_direction",
        format!("m={m},n={n}"),
        trials,
        violations,
        max_dev,
    ))
}

/// Explicit Chernoff bound on `P(| ||v||^2 / m - 1 | > t)` for
/// `v ~ CN(0, I_m)`, where `||v||^2 ~ Gamma(m, 1)`.
pub fn norm_deviation_bound(m: usize, t: f64) -> f64 {
    let m = m as f64;
    let upper = (-m * (t - (1.0 + t).ln())).exp();
    let lower = if t < 1.0 {
        (-m * (-t - (1.0 - t).ln())).exp()
    } else {
        0.0
    };
    (upper + lower).min(1.0)
}

fn norm_exceedances(trials: u64, m: usize, t: f64, seed: u64) -> u64 {
    parallel_fold(
        seed,
        trials,
        || 0u64,
        |rng, acc| {
            let v = rng::complex_normal_vec(rng, m, 1.0);
            let sq: f64 = v.iter().map(|c| c.norm_sqr()).sum();
            if (sq / m as f64 - 1.0).abs() > t {
                *acc += 1;
            }
        },
        |a, b| a + b,
    )
}

/// One binomial result per `(m, t)` pair plus one monotonicity result per `t`:
/// exceedance frequencies must not increase with `m`.
pub fn probe_norm_concentration(
    trials: u64,
    m_values: &[usize],
    t_values: &[f64],
    seed: u64,
) -> Result<Vec<ProbeResult>> {
    check_trials(trials, 1)?;
    if m_values.is_empty() || t_values.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::InvalidConfig("need m values and t >= 0".into()));
    }
    let mut sorted_m = m_values.to_vec();
    sorted_m.sort_unstable();
    let mut results = Vec::new();
    for (ti, &t) in t_values.iter().enumerate() {
        let mut counts = Vec::new();
        for &m in &sorted_m {
            let events = norm_exceedances(trials, m, t, rng::derive_seed(seed, &[ti as u64, m as u64]));
            counts.push(events);
            results.push(ProbeResult::binomial(
                "norm_concentration",
                format!("m={m},t={t}"),
                trials,
                events,
                norm_deviation_bound(m, t),
            ));
        }
        let inversions = counts
            .windows(2)
            .filter(|p| p[1] > p[0] && !noise_compatible(p[0], p[1], trials))
            .count() as u64;
        results.push(ProbeResult {
            lemma_id: "norm_concentration".into(),
            kind: ProbeKind::Monotone,
            params: format!("t={t},m={sorted_m:?}"),
            trials,
            violations: inversions,
            bound_rhs: 0.0,
            empirical_rate: *counts.last().unwrap_or(&0) as f64 / trials as f64,
            max_deviation: None,
            pass: inversions == 0,
        });
    }
    Ok(results)
}

/// Whether `later > earlier` could be binomial noise around a common rate
/// (two-sided 3-sigma band on the difference).
fn noise_compatible(earlier: u64, later: u64, trials: u64) -> bool {
    let n = trials as f64;
    let p = (earlier + later) as f64 / (2.0 * n);
    let sd = (2.0 * p * (1.0 - p) / n).sqrt();
    (later as f64 - earlier as f64) / n <= 3.0 * sd
}

/// Event `#{i : |x_i| <= r} >= 2 r^2 m` for `x ~ CN(0, I_m)`, bounded by
/// `exp(-r^2 m / 3)`.
pub fn probe_order_statistic(trials: u64, r: f64, m: usize, seed: u64) -> Result<ProbeResult> {
    check_trials(trials, 1)?;
    if m < 256 {
        return Err(Error::InvalidConfig(format!("m must be >= 256, got {m}")));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidConfig(format!("r must be positive, got {r}")));
    }
    let level = 2.0 * r * r * m as f64;
    let events = parallel_fold(
        seed,
        trials,
        || 0u64,
        |rng, acc| {
            let count = (0..m)
                .filter(|_| rng::complex_normal(rng, 1.0).norm() <= r)
                .count();
            if count as f64 >= level {
                *acc += 1;
            }
        },
        |a, b| a + b,
    );
    let bound = (-r * r * m as f64 / 3.0).exp();
    Ok(ProbeResult::binomial(
        "order_statistic",
        format!("r={r},m={m}"),
        trials,
        events,
        bound,
    ))
}

/// `(1/m) sum_i min(|y_i| / |x_i|, 1)` and the bound `(4 + sqrt(2) l) t`,
/// `l = floor(-log2 t)`, for `x ~ CN(0, I_m)` and `||y||^2 = m t^2`.
fn perturbation_average(rng: &mut Rng, m: usize, t: f64) -> (f64, f64) {
    let x = rng::complex_normal_vec(rng, m, 1.0);
    let dir = random_direction(rng, m);
    let scale = t * (m as f64).sqrt();
    let avg = x
        .iter()
        .zip(&dir)
        .map(|(xi, di)| (di.norm() * scale / xi.norm()).min(1.0))
        .sum::<f64>()
        / m as f64;
    let l = (-t.log2()).floor().max(0.0);
    (avg, (4.0 + std::f64::consts::SQRT_2 * l) * t)
}

/// Smoke check: the averaged phase perturbation scales linearly in `t`
/// (log-log slope in `[0.8, 1.2]`) and stays below its bound on every draw.
pub fn probe_perturbation_sum(trials_per_t: u64, m: usize, t_values: &[f64], seed: u64) -> Result<ProbeResult> {
    check_trials(trials_per_t, 1)?;
    if t_values.len() < 2 || t_values.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
        return Err(Error::InvalidConfig("need at least two t values in (0, 1)".into()));
    }
    let mut violations = 0;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, &t) in t_values.iter().enumerate() {
        let mut rng = rng::child_rng(seed, &[i as u64]);
        let mut total = 0.0;
        for _ in 0..trials_per_t {
            let (avg, bound) = perturbation_average(&mut rng, m, t);
            if avg > bound {
                violations += 1;
            }
            total += avg;
        }
        xs.push(t.ln());
        ys.push((total / trials_per_t as f64).ln());
    }
    let slope = linear_fit(&xs, &ys).map_or(f64::NAN, |f| f.slope);
    Ok(ProbeResult {
        lemma_id: "perturbation_sum".into(),
        kind: ProbeKind::Slope,
        params: format!("m={m},t={t_values:?}"),
        trials: trials_per_t * t_values.len() as u64,
        violations,
        bound_rhs: 1.0,
        empirical_rate: slope,
        max_deviation: None,
        pass: violations == 0 && (0.8..=1.2).contains(&slope),
    })
}

/// Trial counts for [`run_all`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbePlan {
    pub deterministic_trials: u64,
    /// Per dimension.
    pub unit_trials: u64,
    pub small_ball_trials: u64,
    pub projection_trials: u64,
    pub norm_trials: u64,
    pub order_trials: u64,
    pub perturbation_trials: u64,
}

impl Default for ProbePlan {
    fn default() -> Self {
        Self {
            deterministic_trials: 1_000_000,
            unit_trials: 100_000,
            small_ball_trials: 1_000_000,
            projection_trials: 100_000,
            norm_trials: 20_000,
            order_trials: 2_000,
            perturbation_trials: 200,
        }
    }
}

pub const SMALL_BALL_R: [f64; 3] = [0.1, 0.5, 1.0];
pub const UNIT_DIMS: [usize; 3] = [2, 8, 64];
pub const NORM_M: [usize; 3] = [64, 256, 1024];
pub const NORM_T: [f64; 2] = [0.2, 0.3];
pub const ORDER_R: [f64; 3] = [0.2, 0.5, 1.0];
pub const ORDER_M: usize = 1024;
pub const PERTURBATION_M: usize = 1024;
pub const PERTURBATION_T: [f64; 4] = [0.01, 0.02, 0.05, 0.1];

/// Every probe, each on its own child stream of `seed`, in a fixed order.
pub fn run_all(plan: &ProbePlan, seed: u64) -> Result<Vec<ProbeResult>> {
    let s = |labels: &[u64]| rng::derive_seed(seed, labels);
    let mut out = vec![probe_phase_perturbation(plan.deterministic_trials, s(&[0]))?];
    for (i, &d) in UNIT_DIMS.iter().enumerate() {
        out.push(probe_unit_perturbation(plan.unit_trials, d, s(&[1, i as u64]))?);
    }
    for (i, &r) in SMALL_BALL_R.iter().enumerate() {
        out.push(probe_small_ball(plan.small_ball_trials, r, s(&[2, i as u64]))?);
    }
    out.push(probe_projection_direction(plan.projection_trials, 64, 8, s(&[3]))?);
    out.extend(probe_norm_concentration(plan.norm_trials, &NORM_M, &NORM_T, s(&[4]))?);
    for (i, &r) in ORDER_R.iter().enumerate() {
        out.push(probe_order_statistic(plan.order_trials, r, ORDER_M, s(&[5, i as u64]))?);
    }
    out.push(probe_perturbation_sum(plan.perturbation_trials, PERTURBATION_M, &PERTURBATION_T, s(&[6]))?);
    Ok(out)
}

/// Fixed-width table for terminal output.
pub fn format_table(results: &[ProbeResult]) -> String {
    use std::fmt::Write;
    let mut out = format!(
        "{:<22} {:<36} {:>9} {:>10} {:>12} {:>12} {:>5}\n",
        "probe", "params", "trials", "events", "rate", "bound", "pass"
    );
    for r in results {
        let _ = writeln!(
            out,
            "{:<22} {:<36} {:>9} {:>10} {:>12.4e} {:>12.4e} {:>5}",
            r.lemma_id,
            r.params,
            r.trials,
            r.violations,
            r.empirical_rate,
            r.bound_rhs,
            if r.pass { "ok" } else { "FAIL" }
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_bound_extremes() {
        let one = C64::new(1.0, 0.0);
        // phase(-1) vs phase(1): both sides equal 2.
        assert!(phase_perturbation_excess(one, C64::new(-2.0, 0.0)).abs() < 1e-15);
        assert_eq!(phase_perturbation_excess(one, C64::new(0.0, 0.0)), 0.0);
        // Tangent point for |y| = r < 1 gives |e^{i asin r} - 1| <= sqrt(2) r.
        let r: f64 = 0.3;
        let theta = r.asin();
        let tangent = C64::from_polar(theta.cos(), theta) - one;
        assert!((tangent.norm() - r).abs() < 1e-12);
        let lhs = (C64::from_polar(1.0, theta) - one).norm();
        assert!(lhs <= std::f64::consts::SQRT_2 * r);
        assert!(phase_perturbation_excess(one, tangent) < 0.0);
    }

    #[test]
    fn unit_bound_extremes() {
        let v = vec![C64::new(1.0, 0.0), C64::new(0.0, 2.0)];
        let zero = vec![C64::new(0.0, 0.0); 2];
        assert!(unit_perturbation_excess(&zero, &v) <= -0.0);
        let flip: Vec<C64> = v.iter().map(|a| a * -2.0).collect();
        assert!(unit_perturbation_excess(&flip, &v).abs() < 1e-15);
    }

    #[test]
    fn deterministic_probes_have_no_violations() {
        let r = probe_phase_perturbation(100_000, 1).unwrap();
        assert!(r.pass && r.violations == 0, "{r:?}");
        for d in UNIT_DIMS {
            let r = probe_unit_perturbation(20_000, d, 2).unwrap();
            assert!(r.pass, "{r:?}");
        }
        let r = probe_projection_direction(1000, 64, 8, 3).unwrap();
        assert!(r.pass && r.max_deviation.unwrap() <= 1e-9, "{r:?}");
    }

    #[test]
    fn small_ball_against_rayleigh_cdf() {
        for (i, r) in [0.1f64, 0.5, 1.0].into_iter().enumerate() {
            let res = probe_small_ball(200_000, r, 10 + i as u64).unwrap();
            let exact = 1.0 - (-r * r).exp();
            let sd = (exact * (1.0 - exact) / 200_000.0).sqrt();
            assert!((res.empirical_rate - exact).abs() <= 4.0 * sd, "{res:?}");
            assert!(res.pass);
        }
        assert!((1.0 - (-0.25f64).exp() - 0.2212).abs() < 1e-4);
    }

    #[test]
    fn binomial_test_rejects_excess() {
        let r = ProbeResult::binomial("x", String::new(), 1000, 50, 0.01);
        assert!(!r.pass);
        let r = ProbeResult::binomial("x", String::new(), 1000, 12, 0.01);
        assert!(r.pass);
    }

    #[test]
    fn chernoff_bound_dominates_gamma_tail() {
        // Oracle: regularized incomplete gamma via statrs.
        use statrs::distribution::{ContinuousCDF, Gamma};
        for m in [64usize, 256] {
            let g = Gamma::new(m as f64, 1.0).unwrap();
            for t in [0.1, 0.2, 0.3] {
                let exact = g.cdf(m as f64 * (1.0 - t)) + g.sf(m as f64 * (1.0 + t));
                assert!(exact <= norm_deviation_bound(m, t), "m={m} t={t}");
            }
        }
        assert_eq!(norm_deviation_bound(100, 0.0), 1.0);
    }

    #[test]
    fn norm_concentration_examples() {
        let res = probe_norm_concentration(5000, &[64, 256, 1024], &[0.2, 0.3], 4).unwrap();
        assert_eq!(res.len(), 8);
        assert!(res.iter().all(|r| r.pass), "{res:#?}");
        let at = |p: &str| res.iter().find(|r| r.params == p).unwrap().empirical_rate;
        assert!(at("m=1024,t=0.3") < 1e-3);
        assert!(at("m=1024,t=0.2") <= at("m=256,t=0.2") && at("m=256,t=0.2") < at("m=64,t=0.2"));
        let zero = probe_norm_concentration(200, &[64], &[0.0], 5).unwrap();
        assert!(zero[0].empirical_rate > 0.99);
    }

    #[test]
    fn order_statistic_examples() {
        let r = probe_order_statistic(500, 0.2, 1024, 6).unwrap();
        assert!(r.pass && r.violations == 0);
        // Expected count (1 - e^{-0.04}) 1024 ~ 40 < 2 r^2 m ~ 82.
        assert!((1.0 - (-0.04f64).exp()) * 1024.0 < 0.08 * 1024.0);
        assert!(probe_order_statistic(10, 0.9, 1024, 7).unwrap().pass);
        assert!(probe_order_statistic(10, 0.2, 100, 7).is_err());
    }

    #[test]
    fn perturbation_sum_is_linear_in_t() {
        let r = probe_perturbation_sum(50, 1024, &PERTURBATION_T, 8).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn input_validation() {
        assert!(probe_phase_perturbation(10, 0).is_err());
        assert!(probe_small_ball(10, 1.5, 0).is_err());
        assert!(probe_projection_direction(10, 64, 8, 0).is_err());
        assert!(probe_projection_direction(1000, 8, 8, 0).is_err());
    }

    #[test]
    fn probes_are_reproducible() {
        let plan = ProbePlan {
            deterministic_trials: 100_000,
            unit_trials: 1000,
            small_ball_trials: 10_000,
            projection_trials: 1000,
            norm_trials: 500,
            order_trials: 50,
            perturbation_trials: 10,
        };
        let a = run_all(&plan, 42).unwrap();
        let b = run_all(&plan, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(format_table(&a).lines().count(), a.len() + 1);
    }
}
