//! Coefficient dynamics of the iterates in the basis `u_0, u_1, ..., u_d`.
//!
//! `u_0 = Pi z` and `u_k` is the Gram-Schmidt direction of the `k`-th iterate
//! against `u_0..u_{k-1}`, so that `w^(k) = sum_{i<=k} c_i^(k) u_i` while
//! `k <= d`.

use serde::{Deserialize, Serialize};

use crate::altmin::{self, SolveConfig, SolveReport};
use crate::complex::{inner, norm2, phase, sub, OrthonormalBasis, C64};
use crate::error::{Error, Result};
use crate::sensing::SensingInstance;
use crate::stats::{self, LinearFit};

/// Basin threshold on `|c_0|`.
pub const BASIN_C0: f64 = 0.9;

/// Growth ratios are collected where `GROWTH_WINDOW.0 < |c_0^(k)| < GROWTH_WINDOW.1`.
pub const GROWTH_WINDOW: (f64, f64) = (0.01, 0.5);

/// `C_d = 1 / (2 ln((C_f + 3) / 4)) + 1`.
pub fn depth_constant(c_f: f64) -> Result<f64> {
    let rate = ((c_f + 3.0) / 4.0).ln();
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::Domain(format!("depth constant needs C_f > 1, got {c_f}")));
    }
    Ok(1.0 / (2.0 * rate) + 1.0)
}

/// `d = ceil(C_d ln n)`, capped at `n - 1` since `u_0..u_d` all lie in the
/// `n`-dimensional range.
pub fn basis_depth(n: usize, c_f: f64) -> Result<usize> {
    if n == 0 {
        return Err(Error::Domain("n must be positive".into()));
    }
    let raw = (depth_constant(c_f)? * (n as f64).ln()).ceil().max(0.0) as usize;
    Ok(raw.min(n - 1))
}

pub fn default_depth(n: usize) -> Result<usize> {
    basis_depth(n, crate::expectations::default_c_f())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub k: usize,
    /// `c_i^(k) = <u_i, w^(k)>` for `i <= min(k, basis size - 1)`.
    pub coeffs: Vec<C64>,
    /// Norm of the part of `w^(k)` orthogonal to `u_0..u_{k-1}`; zero past the
    /// recorded depth.
    pub new_direction: f64,
    /// `||w^(k) - sum_i c_i^(k) u_i||`.
    pub reconstruction_error: f64,
}

impl CoefficientRow {
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `max_{2 <= j <= k} |c_j^(k)|`, `None` when no such index exists.
    pub fn tail_max(&self) -> Option<f64> {
        self.coeffs
            .get(2..)
            .filter(|t| !t.is_empty())
            .map(|t| t.iter().map(|c| c.norm()).fold(0.0, f64::max))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTrace {
    pub depth: usize,
    pub rows: Vec<CoefficientRow>,
    /// First iteration whose direction was numerically in the span already.
    pub saturated_at: Option<usize>,
    basis: OrthonormalBasis,
    correlations: Vec<f64>,
}

impl CoefficientTrace {
    pub fn basis(&self) -> &OrthonormalBasis {
        &self.basis
    }

    /// `|c_0^(k)|` for every observed `k`, including those past the depth.
    pub fn correlations(&self) -> &[f64] {
        &self.correlations
    }

    pub fn growth_ratios(&self) -> Vec<f64> {
        self.correlations
            .windows(2)
            .filter(|p| p[0] > 0.0)
            .map(|p| p[1] / p[0])
            .collect()
    }

    /// Rows with `k <= d` recorded before saturation.
    pub fn full_rows(&self) -> impl Iterator<Item = &CoefficientRow> {
        let limit = self.saturated_at.unwrap_or(usize::MAX);
        self.rows.iter().filter(move |r| r.k <= self.depth && r.k < limit)
    }
}

/// Trace state updated once per iterate.
#[derive(Debug, Clone)]
pub struct TraceBuilder {
    trace: CoefficientTrace,
}

impl TraceBuilder {
    pub fn new(inst: &SensingInstance, depth: usize) -> Result<Self> {
        let mut basis = OrthonormalBasis::empty(inst.m());
        basis.append(inst.lifted_truth())?;
        Ok(Self {
            trace: CoefficientTrace {
                depth,
                rows: Vec::new(),
                saturated_at: None,
                basis,
                correlations: Vec::new(),
            },
        })
    }

    /// Records iterate `w^(k)`; `k` counts from 1 and must increase by one.
    pub fn observe(&mut self, k: usize, w: &[C64]) -> Result<()> {
        let t = &mut self.trace;
        if w.len() != t.basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: t.basis.dim(),
                found: w.len(),
            });
        }
        let expected = t.correlations.len() + 1;
        if k != expected {
            return Err(Error::InvalidConfig(format!(
                "trace expects iteration {expected}, got {k}"
            )));
        }
        t.correlations.push(inner(&t.basis.columns()[0], w).norm());
        if k > t.depth || t.saturated_at.is_some() {
            if k <= t.depth {
                t.rows.push(Self::row(&t.basis, k, w, 0.0)?);
            }
            return Ok(());
        }
        let new_direction = match t.basis.append(w) {
            Ok(residual) => residual,
            Err(Error::DegenerateDirection { residual }) => {
                t.saturated_at = Some(k);
                residual
            }
            Err(e) => return Err(e),
        };
        t.rows.push(Self::row(&t.basis, k, w, new_direction)?);
        Ok(())
    }

    fn row(basis: &OrthonormalBasis, k: usize, w: &[C64], new_direction: f64) -> Result<CoefficientRow> {
        let coeffs = basis.coords(w)?;
        let recon = basis.combine(&coeffs)?;
        Ok(CoefficientRow {
            k,
            coeffs,
            new_direction,
            reconstruction_error: norm2(&sub(w, &recon)),
        })
    }

    pub fn finish(self) -> CoefficientTrace {
        self.trace
    }
}

/// Solves from `w1` while recording the coefficient trace.
pub fn solve_traced(
    inst: &SensingInstance,
    w1: &[C64],
    cfg: &SolveConfig,
    depth: usize,
) -> Result<(SolveReport, CoefficientTrace)> {
    let mut builder = TraceBuilder::new(inst, depth)?;
    let mut failure = None;
    let report = altmin::solve_observed(inst, w1, cfg, |k, w| {
        if failure.is_none() {
            if let Err(e) = builder.observe(k, w) {
                failure = Some(e);
            }
        }
    })?;
    match failure {
        Some(e) => Err(e),
        None => Ok((report, builder.finish())),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecursionStep {
    pub k: usize,
    /// `max_i |c_i^(k+1)|` discrepancy between the recursion and the iterate.
    pub discrepancy: f64,
    /// `sqrt(1 - sum_{i<=k} |c~_i|^2) - c~_{k+1}`.
    pub bound_slack: f64,
    /// `c~_{k+1}^(k+1)`, nonnegative by construction.
    pub new_coefficient: f64,
    /// `sum_{i<=k+1} |c~_i|^2`.
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecursionReport {
    pub steps: Vec<RecursionStep>,
    pub max_discrepancy: f64,
    pub min_bound_slack: f64,
    pub max_energy: f64,
}

/// Replays the coefficient recursion from each recorded `c^(k)` and compares
/// it with the recorded `c^(k+1)`, for consecutive full rows up to `max_k`.
pub fn verify_coefficient_recursion(
    inst: &SensingInstance,
    trace: &CoefficientTrace,
    max_k: usize,
) -> Result<RecursionReport> {
    let rows: Vec<&CoefficientRow> = trace.full_rows().collect();
    let basis = trace.basis();
    let y = inst.y();
    let mut steps = Vec::new();
    for pair in rows.windows(2) {
        let (cur, next) = (pair[0], pair[1]);
        if cur.k > max_k || next.k != cur.k + 1 {
            continue;
        }
        let k = cur.k;
        let u: &[Vec<C64>] = basis.columns();
        // (sum_i c_i u_i) odot u_0; |u_0| = y entrywise.
        let mut w = vec![C64::new(0.0, 0.0); inst.m()];
        for (c, ui) in cur.coeffs.iter().zip(u) {
            crate::complex::axpy(*c, ui, &mut w);
        }
        let v: Vec<C64> = w.iter().zip(y).map(|(wi, yi)| phase(*wi) * *yi).collect();
        let mut tilde: Vec<C64> = u[..=k].iter().map(|ui| inner(ui, &v)).collect();
        let mut remainder = inst.project(&v);
        for (c, ui) in tilde.iter().zip(u) {
            crate::complex::axpy(-*c, ui, &mut remainder);
        }
        let new_coefficient = norm2(&remainder);
        let head: f64 = tilde.iter().map(|c| c.norm_sqr()).sum();
        tilde.push(C64::new(new_coefficient, 0.0));
        let total = (head + new_coefficient * new_coefficient).sqrt();
        let discrepancy = tilde
            .iter()
            .zip(&next.coeffs)
            .map(|(t, actual)| (t / total - actual).norm())
            .fold(0.0, f64::max);
        steps.push(RecursionStep {
            k,
            discrepancy,
            bound_slack: (1.0 - head).max(0.0).sqrt() - new_coefficient,
            new_coefficient,
            energy: head + new_coefficient * new_coefficient,
        });
    }
    Ok(RecursionReport {
        max_discrepancy: steps.iter().map(|s| s.discrepancy).fold(0.0, f64::max),
        min_bound_slack: steps.iter().map(|s| s.bound_slack).fold(f64::INFINITY, f64::min),
        max_energy: steps.iter().map(|s| s.energy).fold(0.0, f64::max),
        steps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileSummary {
    pub count: usize,
    pub mean: f64,
    pub q10: f64,
    pub q50: f64,
    pub q90: f64,
    pub q99: f64,
    pub max: f64,
}

impl QuantileSummary {
    pub fn from_samples(data: &[f64]) -> Option<Self> {
        if data.is_empty() {
            return None;
        }
        let mut sorted = data.to_vec();
        sorted.sort_by(f64::total_cmp);
        let q = |p| stats::quantile_sorted(&sorted, p);
        Some(Self {
            count: sorted.len(),
            mean: stats::mean(&sorted)?,
            q10: q(0.1),
            q50: q(0.5),
            q90: q(0.9),
            q99: q(0.99),
            max: *sorted.last()?,
        })
    }
}

/// `max_{2<=j<=k} |c_j^(k)| * sqrt(m / n)` over all full rows of all traces.
pub fn scaled_tail_maxima(traces: &[CoefficientTrace], n: usize, m: usize) -> Vec<f64> {
    let scale = (m as f64 / n as f64).sqrt();
    traces
        .iter()
        .flat_map(|t| t.full_rows().filter_map(CoefficientRow::tail_max))
        .map(|v| v * scale)
        .collect()
}

pub fn tail_coefficient_stats(traces: &[CoefficientTrace], n: usize, m: usize) -> Option<QuantileSummary> {
    QuantileSummary::from_samples(&scaled_tail_maxima(traces, n, m))
}

/// `|c_0^(k+1)| / |c_0^(k)|` at iterations with `|c_0^(k)|` strictly inside `window`.
pub fn windowed_growth_ratios(correlations: &[f64], window: (f64, f64)) -> Vec<f64> {
    correlations
        .windows(2)
        .filter(|p| p[0] > window.0 && p[0] < window.1)
        .map(|p| p[1] / p[0])
        .collect()
}

/// First `k` (1-based) with `|c_0^(k)| > threshold`.
pub fn escape_iteration(correlations: &[f64], threshold: f64) -> Option<usize> {
    correlations.iter().position(|&c| c > threshold).map(|i| i + 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapePoint {
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    pub escaped: usize,
    pub median_escape: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeRegression {
    pub points: Vec<EscapePoint>,
    /// Median escape iteration against `ln n`.
    pub fit: Option<LinearFit>,
}

pub fn escape_regression(points: Vec<EscapePoint>) -> EscapeRegression {
    let (x, y): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter_map(|p| p.median_escape.map(|e| ((p.n as f64).ln(), e)))
        .unzip();
    EscapeRegression {
        fit: stats::linear_fit(&x, &y),
        points,
    }
}

pub const TRACE_CSV_HEADER: &str = "trial,k,i,re,im,abs";

/// Appends one CSV line per recorded coefficient.
pub fn write_trace_rows(out: &mut String, trial: usize, trace: &CoefficientTrace) {
    use std::fmt::Write;
    for row in &trace.rows {
        for (i, c) in row.coeffs.iter().enumerate() {
            let _ = writeln!(out, "{trial},{},{i},{},{},{}", row.k, c.re, c.im, c.norm());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::sensing::{make_instance, random_unit_iterate, SignalMode};

    fn traced(seed: u64, n: usize, m: usize, depth: usize) -> (SensingInstance, SolveReport, CoefficientTrace) {
        let inst = make_instance(seed, n, m, SignalMode::RandomUnit).unwrap();
        let w1 = random_unit_iterate(&mut rng::child_rng(seed, &[1]), &inst);
        let cfg = SolveConfig {
            max_iter: 300,
            ..Default::default()
        };
        let (report, trace) = solve_traced(&inst, &w1, &cfg, depth).unwrap();
        (inst, report, trace)
    }

    #[test]
    fn depth_formula() {
        // C_f = 1.2: C_d = 1 / (2 ln 1.05) + 1
        let cd = 1.0 / (2.0 * 1.05f64.ln()) + 1.0;
        assert!((depth_constant(1.2).unwrap() - cd).abs() < 1e-12);
        assert_eq!(basis_depth(1000, 1.2).unwrap(), (cd * 1000f64.ln()).ceil() as usize);
        assert_eq!(basis_depth(16, 1.2).unwrap(), 15);
        assert_eq!(basis_depth(1, 1.2).unwrap(), 0);
        assert!(depth_constant(1.0).is_err());
        assert!(depth_constant(0.5).is_err());
    }

    #[test]
    fn u0_is_lifted_truth() {
        let (inst, _, trace) = traced(3, 8, 64, 5);
        let u0 = &trace.basis().columns()[0];
        assert!((norm2(u0) - 1.0).abs() < 1e-12);
        let diff = sub(u0, inst.lifted_truth());
        assert!(norm2(&diff) < 1e-12);
    }

    #[test]
    fn first_row_has_two_coefficients_with_unit_energy() {
        let (_, _, trace) = traced(4, 8, 64, 5);
        let r = &trace.rows[0];
        assert_eq!(r.k, 1);
        assert_eq!(r.coeffs.len(), 2);
        assert!((r.energy() - 1.0).abs() < 1e-10);
        assert_eq!(r.tail_max(), None);
    }

    #[test]
    fn reconstruction_and_orthonormality() {
        let (_, _, trace) = traced(5, 16, 256, 10);
        assert!(trace.basis().orthonormality_defect() <= 1e-10);
        for r in trace.full_rows() {
            assert!(r.reconstruction_error <= 1e-8, "{r:?}");
            assert!((r.energy() - 1.0).abs() <= 1e-9, "{r:?}");
        }
        for r in &trace.rows {
            assert!(r.energy() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn correlations_match_solver() {
        let (_, report, trace) = traced(6, 16, 256, 8);
        assert_eq!(trace.correlations().len(), report.iterations);
        for (a, b) in trace.correlations().iter().zip(&report.correlation_trace) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(trace.growth_ratios().len(), report.iterations - 1);
    }

    #[test]
    fn recursion_matches_iterates() {
        let (inst, _, trace) = traced(7, 32, 1024, 8);
        let rep = verify_coefficient_recursion(&inst, &trace, 5).unwrap();
        assert_eq!(rep.steps.len(), 5);
        assert!(rep.max_discrepancy <= 1e-8, "{rep:?}");
        assert!(rep.min_bound_slack >= -1e-10, "{rep:?}");
        assert!(rep.max_energy <= 1.0 + 1e-12, "{rep:?}");
        assert!(rep.steps.iter().all(|s| s.new_coefficient >= 0.0));
    }

    #[test]
    fn saturation_is_flagged_not_fatal() {
        // Starting at the truth, w^(2) = w^(1) and no new direction exists.
        let inst = make_instance(8, 4, 32, SignalMode::RandomUnit).unwrap();
        let w1 = inst.lifted_truth().to_vec();
        let cfg = SolveConfig {
            tol: 1e-300,
            max_iter: 5,
            stall_window: 100,
        };
        let (_, trace) = solve_traced(&inst, &w1, &cfg, 3).unwrap();
        assert_eq!(trace.saturated_at, Some(1));
        assert_eq!(trace.basis().len(), 1);
        assert_eq!(trace.full_rows().count(), 0);
    }

    #[test]
    fn observe_rejects_gaps() {
        let inst = make_instance(9, 4, 32, SignalMode::RandomUnit).unwrap();
        let mut b = TraceBuilder::new(&inst, 2).unwrap();
        let w = random_unit_iterate(&mut rng::rng_from_seed(0), &inst);
        assert!(b.observe(2, &w).is_err());
        assert!(b.observe(1, &w).is_ok());
        assert!(b.observe(1, &w).is_err());
        assert!(b.observe(2, &w[..3]).is_err());
    }

    #[test]
    fn growth_and_escape_helpers() {
        let c = [0.005, 0.02, 0.04, 0.1, 0.6, 0.95, 0.99];
        let r = windowed_growth_ratios(&c, GROWTH_WINDOW);
        assert_eq!(r.len(), 3);
        for (a, b) in r.iter().zip([2.0, 2.5, 6.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(escape_iteration(&c, BASIN_C0), Some(6));
        assert_eq!(escape_iteration(&c[..4], BASIN_C0), None);
    }

    #[test]
    fn escape_fit_uses_log_n() {
        let pts = [16usize, 32, 64]
            .iter()
            .map(|&n| EscapePoint {
                n,
                m: 16 * n,
                trials: 1,
                escaped: 1,
                median_escape: Some(3.0 * (n as f64).ln() + 1.0),
            })
            .collect();
        let fit = escape_regression(pts).fit.unwrap();
        assert!((fit.slope - 3.0).abs() < 1e-10);
    }

    #[test]
    fn tail_stats_skip_first_row() {
        let (_, _, trace) = traced(10, 16, 256, 6);
        let maxima = scaled_tail_maxima(std::slice::from_ref(&trace), 16, 256);
        assert_eq!(maxima.len(), trace.full_rows().filter(|r| r.k >= 2).count());
        let s = tail_coefficient_stats(&[trace], 16, 256).unwrap();
        assert!(s.q99.is_finite() && s.q10 <= s.q50 && s.q50 <= s.q99);
    }

    #[test]
    fn csv_rows() {
        let (_, _, trace) = traced(11, 8, 64, 3);
        let mut out = String::new();
        write_trace_rows(&mut out, 4, &trace);
        let expected: usize = trace.rows.iter().map(|r| r.coeffs.len()).sum();
        assert_eq!(out.lines().count(), expected);
        assert!(out.starts_with("4,1,0,"));
    }
}
