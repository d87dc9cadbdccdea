//! Alternating minimization between the amplitude set and the subspace `L`.
//!
//! Experiments use the normalized reduced iteration
//! `w <- P_L[w (.) y] / ||P_L[w (.) y]||`. The raw form with an explicit
//! sensing matrix and normal equations is kept for equivalence checks.

use serde::{Deserialize, Serialize};

use crate::complex::{self, inner, CMatrix, C64};
use crate::error::{Error, Result};
use crate::sensing::SensingInstance;

pub const DEFAULT_TOL: f64 = 1e-7;
pub const DEFAULT_MAX_ITER: usize = 10_000;
pub const DEFAULT_STALL_WINDOW: usize = 500;

/// Projected norms below this are reported as a stall at zero.
pub const ZERO_PROJECTION: f64 = 1e-12;

/// Relative decrease in the best error that counts as progress.
const PROGRESS_FRACTION: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Iterations without progress (while above `tol`) before giving up.
    pub stall_window: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            stall_window: DEFAULT_STALL_WINDOW,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_iter < 1 {
            return Err(Error::InvalidConfig("max_iter must be >= 1".into()));
        }
        if self.stall_window < 1 {
            return Err(Error::InvalidConfig("stall_window must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    MaxIter,
    Stalled,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::Converged => "converged",
            StopReason::MaxIter => "max_iter",
            StopReason::Stalled => "stalled",
        }
    }
}

/// Current iterate `w^(k)` (unit norm, in `L`) and its index.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateState {
    pub w: Vec<C64>,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub success: bool,
    pub final_error: f64,
    pub iterations: usize,
    pub stop_reason: StopReason,
    /// `|c0^(k)| = |<u0, w^(k)>|` for `k = 1..=iterations`.
    pub correlation_trace: Vec<f64>,
    /// Phase-invariant error of `x^(k)` for `k = 1..=iterations`.
    pub error_trace: Vec<f64>,
    pub config: SolveConfig,
    /// Final estimate `x^(k)`.
    #[serde(skip)]
    pub estimate: Vec<C64>,
}

/// `inf_psi ||e^{i psi} x - z||`.
///
/// Evaluated as `||phase(x^H z) x - z||`, which equals
/// `sqrt(||x||^2 + ||z||^2 - 2|<x, z>|)` without the cancellation near zero.
pub fn dist_up_to_phase(x: &[C64], z: &[C64]) -> f64 {
    assert_eq!(x.len(), z.len(), "dist_up_to_phase: length mismatch");
    let align = complex::phase(inner(x, z));
    x.iter()
        .zip(z)
        .map(|(&xi, &zi)| (align * xi - zi).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// One normalized iteration; returns `(x^(k+1), w^(k+1))` with
/// `x^(k+1) = Pi^H w^(k+1)`.
fn step_with_coords(inst: &SensingInstance, w: &[C64]) -> Result<(Vec<C64>, Vec<C64>)> {
    let amplitude = complex::odot(w, inst.y())?;
    let mut x = inst.basis().coords(&amplitude)?;
    // Pi is an isometry, so ||P_L v|| = ||Pi^H v||.
    let nrm = complex::normalize(&mut x);
    if !(nrm >= ZERO_PROJECTION) {
        return Err(Error::StalledAtZero { norm: nrm });
    }
    let mut w_next = inst.lift(&x);
    complex::normalize(&mut w_next);
    Ok((x, w_next))
}

/// `P_L[w (.) y] / ||P_L[w (.) y]||`.
pub fn step_normalized(inst: &SensingInstance, w: &[C64]) -> Result<Vec<C64>> {
    step_with_coords(inst, w).map(|(_, w_next)| w_next)
}

impl IterateState {
    pub fn new(w: Vec<C64>) -> Self {
        Self { w, k: 1 }
    }

    pub fn advance(&mut self, inst: &SensingInstance) -> Result<()> {
        self.w = step_normalized(inst, &self.w)?;
        self.k += 1;
        Ok(())
    }
}

/// Runs the normalized iteration from `w1`.
pub fn solve(inst: &SensingInstance, w1: &[C64], cfg: &SolveConfig) -> Result<SolveReport> {
    solve_observed(inst, w1, cfg, |_, _| {})
}

/// Like [`solve`], calling `observe(k, w^(k))` on every iterate examined.
pub fn solve_observed(
    inst: &SensingInstance,
    w1: &[C64],
    cfg: &SolveConfig,
    mut observe: impl FnMut(usize, &[C64]),
) -> Result<SolveReport> {
    cfg.validate()?;
    if w1.len() != inst.m() {
        return Err(Error::DimensionMismatch {
            expected: inst.m(),
            found: w1.len(),
        });
    }
    let z = inst.z();
    let mut w = w1.to_vec();
    let mut x = inst.coords(&w);
    let mut correlation_trace = Vec::new();
    let mut error_trace = Vec::new();
    let mut best = f64::INFINITY;
    let mut last_progress = 1;
    let mut k = 1;
    let stop_reason = loop {
        observe(k, &w);
        // <u0, w> = <Pi z, w> = <z, Pi^H w>
        correlation_trace.push(inner(z, &x).norm());
        let err = dist_up_to_phase(&x, z);
        error_trace.push(err);
        if err <= cfg.tol {
            break StopReason::Converged;
        }
        if err < best * (1.0 - PROGRESS_FRACTION) {
            best = err;
            last_progress = k;
        }
        if k >= cfg.max_iter {
            break StopReason::MaxIter;
        }
        if k - last_progress >= cfg.stall_window {
            break StopReason::Stalled;
        }
        let (x_next, w_next) = step_with_coords(inst, &w)?;
        x = x_next;
        w = w_next;
        k += 1;
    };
    let final_error = *error_trace.last().expect("at least one iterate");
    Ok(SolveReport {
        success: final_error <= cfg.tol,
        final_error,
        iterations: k,
        stop_reason,
        correlation_trace,
        error_trace,
        config: *cfg,
        estimate: x,
    })
}

/// Output of one raw (unnormalized) iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct RawStep {
    /// Least-squares coefficients of `w` in the columns of `A`.
    pub x: Vec<C64>,
    /// `A (A^H A)^{-1} A^H [phase(A x) (.) y]`
    pub w: Vec<C64>,
}

/// One iteration of the raw form with explicit sensing matrix `A`.
pub fn step_raw(a: &CMatrix, y: &[f64], x: &[C64]) -> Result<RawStep> {
    if y.len() != a.rows() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            found: y.len(),
        });
    }
    let current = a.mul_vec(x)?;
    let amplitude = complex::odot(&current, y)?;
    let rhs = a.adjoint_mul_vec(&amplitude)?;
    let gram = a.adjoint_mul(a)?;
    let x_next = complex::solve_linear(&gram, &rhs)?;
    let w = a.mul_vec(&x_next)?;
    Ok(RawStep { x: x_next, w })
}

/// Least-squares coordinates of `w` in the columns of `A`.
pub fn raw_coords(a: &CMatrix, w: &[C64]) -> Result<Vec<C64>> {
    let gram = a.adjoint_mul(a)?;
    complex::solve_linear(&gram, &a.adjoint_mul_vec(w)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{norm2, scale, sub};
    use crate::rng::rng_from_seed;
    use crate::sensing::{make_instance, random_unit_iterate, SignalMode};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn dist_examples() {
        let z = vec![c(0.6, 0.0), c(0.0, 0.8)];
        for theta in [0.0, 1.0, 2.5, -3.0] {
            let x = scale(&z, C64::from_polar(1.0, theta));
            assert!(dist_up_to_phase(&x, &z) < 1e-15);
        }
        assert!((dist_up_to_phase(&[complex::ZERO; 2], &z) - 1.0).abs() < 1e-15);
    }

    /// Oracle: grid search over the global phase.
    #[test]
    fn dist_matches_phase_grid_search() {
        let grid = |x: &[C64], z: &[C64]| {
            (0..10_000)
                .map(|i| {
                    let e = C64::from_polar(1.0, i as f64 * std::f64::consts::TAU / 10_000.0);
                    norm2(&sub(&scale(x, e), z))
                })
                .fold(f64::INFINITY, f64::min)
        };
        let x = [c(1.0, 0.0), c(0.0, 0.0)];
        let z = [c(0.0, 0.0), c(1.0, 0.0)];
        assert!((dist_up_to_phase(&x, &z) - 2f64.sqrt()).abs() < 1e-15);
        assert!((grid(&x, &z) - 2f64.sqrt()).abs() < 1e-6);

        let mut rng = rng_from_seed(8);
        for _ in 0..20 {
            let x = crate::rng::complex_normal_vec(&mut rng, 5, 1.0);
            let z = crate::rng::complex_normal_vec(&mut rng, 5, 1.0);
            let closed = (norm2(&x).powi(2) + norm2(&z).powi(2) - 2.0 * inner(&x, &z).norm()).sqrt();
            let d = dist_up_to_phase(&x, &z);
            assert!((d - closed).abs() < 1e-10);
            assert!((d - grid(&x, &z)).abs() < 1e-6);
        }
    }

    #[test]
    fn solution_set_is_fixed() {
        for seed in 0..100 {
            let inst = make_instance(seed, 6, 48, SignalMode::RandomUnit).unwrap();
            let glob = C64::from_polar(1.0, seed as f64 * 0.37);
            let w = scale(inst.lifted_truth(), glob);
            let out = step_normalized(&inst, &w).unwrap();
            assert!(norm2(&sub(&out, &w)) < 1e-9, "seed {seed}");
        }
    }

    #[test]
    fn step_output_is_unit_and_in_subspace() {
        let inst = make_instance(1, 8, 64, SignalMode::RandomUnit).unwrap();
        let mut rng = rng_from_seed(2);
        let mut w = random_unit_iterate(&mut rng, &inst);
        for _ in 0..50 {
            w = step_normalized(&inst, &w).unwrap();
            assert!((norm2(&w) - 1.0).abs() < 1e-12);
            assert!(norm2(&sub(&w, &inst.project(&w))) < 1e-9);
        }
    }

    /// For n = 1 the subspace is a line: one step aligns the phase exactly.
    #[test]
    fn one_dimensional_instances_converge_immediately() {
        for seed in 0..20 {
            let inst = make_instance(seed, 1, 3, SignalMode::RandomUnit).unwrap();
            let mut rng = rng_from_seed(seed + 100);
            let w1 = random_unit_iterate(&mut rng, &inst);
            let report = solve(&inst, &w1, &SolveConfig::default()).unwrap();
            assert!(report.success);
            assert!(report.iterations <= 2);
        }
    }

    #[test]
    fn start_at_solution() {
        let inst = make_instance(4, 8, 64, SignalMode::RandomUnit).unwrap();
        let w1 = inst.lifted_truth().to_vec();
        let report = solve(&inst, &w1, &SolveConfig::default()).unwrap();
        assert!(report.success);
        assert_eq!(report.iterations, 1);
        assert!(report.final_error <= 1e-12);
        assert_eq!(report.stop_reason, StopReason::Converged);
    }

    #[test]
    fn traces_have_one_entry_per_iteration() {
        let inst = make_instance(6, 8, 80, SignalMode::RandomUnit).unwrap();
        let mut rng = rng_from_seed(6);
        let w1 = random_unit_iterate(&mut rng, &inst);
        let cfg = SolveConfig {
            max_iter: 7,
            ..Default::default()
        };
        let report = solve(&inst, &w1, &cfg).unwrap();
        assert_eq!(report.correlation_trace.len(), report.iterations);
        assert_eq!(report.error_trace.len(), report.iterations);
        assert_eq!(report.iterations, 7);
        assert_eq!(report.stop_reason, StopReason::MaxIter);
        assert!(!report.success);
    }

    #[test]
    fn loose_tolerance_succeeds_at_first_iterate() {
        let inst = make_instance(6, 8, 80, SignalMode::RandomUnit).unwrap();
        let mut rng = rng_from_seed(6);
        let w1 = random_unit_iterate(&mut rng, &inst);
        let cfg = SolveConfig {
            tol: 2.0,
            ..Default::default()
        };
        let report = solve(&inst, &w1, &cfg).unwrap();
        assert!(report.success);
        assert_eq!(report.iterations, 1);
    }

    #[test]
    fn oversampled_regime_mostly_succeeds() {
        let trials = 40;
        let mut successes = 0;
        for t in 0..trials {
            let inst = make_instance(t, 16, 256, SignalMode::RandomUnit).unwrap();
            let mut rng = rng_from_seed(10_000 + t);
            let w1 = random_unit_iterate(&mut rng, &inst);
            let report = solve(&inst, &w1, &SolveConfig::default()).unwrap();
            successes += report.success as usize;
        }
        assert!(successes >= 36, "{successes}/{trials}");
    }

    #[test]
    fn correlation_is_monotone_inside_basin() {
        for t in 0..20 {
            let inst = make_instance(t, 8, 128, SignalMode::RandomUnit).unwrap();
            let mut rng = rng_from_seed(500 + t);
            let w1 = random_unit_iterate(&mut rng, &inst);
            let report = solve(&inst, &w1, &SolveConfig::default()).unwrap();
            for pair in report.correlation_trace.windows(2) {
                if pair[0] > 0.9 {
                    assert!(pair[1] >= pair[0] - 1e-6, "trial {t}: {pair:?}");
                }
            }
        }
    }

    #[test]
    fn correlation_grows_in_growth_phase() {
        let mut ratios = Vec::new();
        for t in 0..30 {
            let inst = make_instance(t, 32, 512, SignalMode::RandomUnit).unwrap();
            let mut rng = rng_from_seed(900 + t);
            let w1 = random_unit_iterate(&mut rng, &inst);
            let report = solve(&inst, &w1, &SolveConfig::default()).unwrap();
            for pair in report.correlation_trace.windows(2) {
                if pair[0] > 0.01 && pair[0] < 0.5 {
                    ratios.push(pair[1] / pair[0]);
                }
            }
        }
        ratios.sort_by(f64::total_cmp);
        let median = ratios[ratios.len() / 2];
        assert!(median > 1.0, "median growth {median}");
    }

    #[test]
    fn config_validation() {
        let inst = make_instance(0, 2, 8, SignalMode::RandomUnit).unwrap();
        let w = inst.lifted_truth().to_vec();
        let bad = SolveConfig {
            tol: 0.0,
            ..Default::default()
        };
        assert!(solve(&inst, &w, &bad).is_err());
        let bad = SolveConfig {
            max_iter: 0,
            ..Default::default()
        };
        assert!(solve(&inst, &w, &bad).is_err());
        assert!(solve(&inst, &w[..4], &SolveConfig::default()).is_err());
    }

    #[test]
    fn iterate_state_advances() {
        let inst = make_instance(3, 4, 32, SignalMode::RandomUnit).unwrap();
        let mut rng = rng_from_seed(3);
        let mut state = IterateState::new(random_unit_iterate(&mut rng, &inst));
        let expected = step_normalized(&inst, &state.w).unwrap();
        state.advance(&inst).unwrap();
        assert_eq!(state.k, 2);
        assert_eq!(state.w, expected);
    }

    #[test]
    fn raw_step_fixed_point_at_truth() {
        let mut rng = rng_from_seed(13);
        let a = crate::sensing::sample_complex_gaussian(&mut rng, 40, 5, 1.0).unwrap();
        let z = crate::rng::complex_normal_vec(&mut rng, 5, 1.0);
        let az = a.mul_vec(&z).unwrap();
        let y = complex::moduli(&az);
        let step = step_raw(&a, &y, &z).unwrap();
        assert!(norm2(&sub(&step.w, &az)) < 1e-10 * norm2(&az));
        assert!(norm2(&sub(&step.x, &z)) < 1e-10 * norm2(&z));
        assert!(step_raw(&a, &y[..3], &z).is_err());
    }

    #[test]
    fn raw_step_singular_matrix() {
        let a = CMatrix::zeros(6, 2);
        let err = step_raw(&a, &[1.0; 6], &[complex::ONE; 2]).unwrap_err();
        assert!(matches!(err, Error::SingularInstance(_)));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_vec(len: usize) -> impl Strategy<Value = Vec<C64>> {
            proptest::collection::vec((-10.0f64..10.0, -10.0f64..10.0).prop_map(|(a, b)| c(a, b)), len)
        }

        proptest! {
            #[test]
            fn dist_matches_closed_form_and_ignores_global_phase(
                x in arb_vec(6),
                z in arb_vec(6),
                theta in 0.0f64..std::f64::consts::TAU,
            ) {
                let d = dist_up_to_phase(&x, &z);
                let closed = (norm2(&x).powi(2) + norm2(&z).powi(2) - 2.0 * inner(&x, &z).norm()).max(0.0).sqrt();
                prop_assert!((d - closed).abs() <= 1e-9 * (1.0 + norm2(&x) + norm2(&z)));
                let rotated = scale(&x, C64::from_polar(1.0, theta));
                prop_assert!((dist_up_to_phase(&rotated, &z) - d).abs() <= 1e-9 * (1.0 + d));
            }

            #[test]
            fn step_is_equivariant_under_scaling_and_phase(
                seed in 0u64..1000,
                r in 0.1f64..10.0,
                theta in 0.0f64..std::f64::consts::TAU,
            ) {
                let inst = make_instance(seed, 4, 24, SignalMode::RandomUnit).unwrap();
                let w = random_unit_iterate(&mut rng_from_seed(seed ^ 0x5a5a), &inst);
                let rot = C64::from_polar(1.0, theta);
                let next = step_normalized(&inst, &w).unwrap();
                let next_scaled = step_normalized(&inst, &scale(&w, rot * r)).unwrap();
                prop_assert!(norm2(&sub(&next_scaled, &scale(&next, rot))) <= 1e-10);
                prop_assert!((norm2(&next) - 1.0).abs() <= 1e-12);
            }
        }
    }
}
