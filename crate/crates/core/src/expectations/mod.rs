//! The one-step expectation functions `f` and `g` and their certification.
//!
//! For `x0, x1 ~ CN(0, 1)` independent and `w = c x0 + sqrt(1 - c^2) x1`,
//!
//! ```text
//! f(c) = E[phase(w) |x0| conj(x0)] / c
//! g(c) = E[phase(w) |x0| conj(x1)] / sqrt(1 - c^2)
//! ```
//!
//! Estimates are Monte Carlo with antithetic pairs `(x0, x1), (x0, -x1)`;
//! [`quadrature`] is an independent deterministic route used as a
//! cross-check.

pub mod quadrature;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complex::{phase, C64};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};
use crate::stats::Moments;

/// Below this correlation `f` is evaluated through the rewritten integrand
/// `(f0(c) - f0(0)) / c` with `f0(c) = E[phase(x0) |w| conj(w)]`.
pub const SMALL_C: f64 = 0.02;

pub const MIN_SAMPLES: usize = 10_000;

pub const DEFAULT_LIPSCHITZ: f64 = 10.0;
pub const DEFAULT_C0: f64 = 0.9;
pub const DEFAULT_GRID_STEP: f64 = 0.005;
pub const DEFAULT_SAMPLES: usize = 1_000_000;

/// Monte Carlo estimate of `f(c)` and `g(c)` from one set of draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FgEstimate {
    pub c: f64,
    pub f_hat: f64,
    pub stderr_f: f64,
    pub g_hat: f64,
    pub stderr_g: f64,
    /// Imaginary parts; zero in expectation by rotational symmetry.
    pub f_imag: f64,
    pub f_imag_stderr: f64,
    pub g_imag: f64,
    pub g_imag_stderr: f64,
    /// Independent draws; each is evaluated with its antithetic twin.
    pub n_samples: usize,
}

impl FgEstimate {
    pub fn ratio(&self) -> f64 {
        self.f_hat / self.g_hat
    }
}

#[inline]
fn draw_pair(rng: &mut Rng) -> (C64, C64) {
    (rng::complex_normal(rng, 1.0), rng::complex_normal(rng, 1.0))
}

/// Pair-averaged integrand values `(f, g)` for one draw.
#[inline]
fn integrands(c: f64, s: f64, x0: C64, x1: C64) -> (C64, C64) {
    let w_plus = x0 * c + x1 * s;
    let w_minus = x0 * c - x1 * s;
    let ph_plus = phase(w_plus);
    let ph_minus = phase(w_minus);
    let r0 = x0.norm();
    let g_val = (ph_plus - ph_minus) * r0 * x1.conj() * 0.5 / s;
    let f_val = if c == 0.0 {
        // d/dc of phase(x0) |w| conj(w) at c = 0
        let r1 = x1.norm();
        if r1 == 0.0 {
            C64::new(0.0, 0.0)
        } else {
            phase(x0) * ((x0 * x1.conj()).re * x1.conj() / r1 + x0.conj() * r1)
        }
    } else if c <= SMALL_C {
        // f0(0) cancels exactly within the antithetic pair.
        phase(x0) * (w_plus.conj() * w_plus.norm() + w_minus.conj() * w_minus.norm()) * 0.5 / c
    } else {
        (ph_plus + ph_minus) * r0 * x0.conj() * 0.5 / c
    };
    (f_val, g_val)
}

fn estimate_unchecked(c: f64, n_samples: usize, rng: &mut Rng) -> FgEstimate {
    let s = (1.0 - c * c).sqrt();
    let (mut fr, mut fi, mut gr, mut gi) = (
        Moments::default(),
        Moments::default(),
        Moments::default(),
        Moments::default(),
    );
    for _ in 0..n_samples {
        let (x0, x1) = draw_pair(rng);
        let (fv, gv) = integrands(c, s, x0, x1);
        fr.push(fv.re);
        fi.push(fv.im);
        gr.push(gv.re);
        gi.push(gv.im);
    }
    FgEstimate {
        c,
        f_hat: fr.mean(),
        stderr_f: fr.stderr(),
        g_hat: gr.mean(),
        stderr_g: gr.stderr(),
        f_imag: fi.mean(),
        f_imag_stderr: fi.stderr(),
        g_imag: gi.mean(),
        g_imag_stderr: gi.stderr(),
        n_samples,
    }
}

fn check_samples(n_samples: usize) -> Result<()> {
    if n_samples < MIN_SAMPLES {
        return Err(Error::Domain(format!(
            "need at least {MIN_SAMPLES} samples, got {n_samples}"
        )));
    }
    Ok(())
}

/// Estimate on the closed range `[0, 1)`; at `c = 0` the `f` value is the
/// limit `f(0+)`.
pub fn estimate_fg(c: f64, n_samples: usize, rng: &mut Rng) -> Result<FgEstimate> {
    if !(0.0..1.0).contains(&c) {
        return Err(Error::Domain(format!("c must lie in [0, 1), got {c}")));
    }
    check_samples(n_samples)?;
    Ok(estimate_unchecked(c, n_samples, rng))
}

/// `f(c)` for `0 < c < 1`.
pub fn estimate_f(c: f64, n_samples: usize, rng: &mut Rng) -> Result<FgEstimate> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::Domain(format!("f requires 0 < c < 1, got {c}")));
    }
    estimate_fg(c, n_samples, rng)
}

/// `g(c)` for `0 <= c < 1`.
pub fn estimate_g(c: f64, n_samples: usize, rng: &mut Rng) -> Result<FgEstimate> {
    if !(0.0..1.0).contains(&c) {
        return Err(Error::Domain(format!("g requires 0 <= c < 1, got {c}")));
    }
    estimate_fg(c, n_samples, rng)
}

/// `{0, step, 2 step, ...}` up to `end`, with `end` itself appended when the
/// step does not land on it.
pub fn uniform_grid(end: f64, step: f64) -> Vec<f64> {
    let count = (end / step + 1e-9).floor() as usize;
    // Rounded so that e.g. 94 * 0.01 is reported as 0.94.
    let mut grid: Vec<f64> = (0..=count)
        .map(|k| (k as f64 * step * 1e12).round() / 1e12)
        .collect();
    if let Some(&last) = grid.last() {
        if end - last > 1e-9 * step {
            grid.push(end);
        } else if let Some(slot) = grid.last_mut() {
            *slot = end;
        }
    }
    grid
}

/// Estimates on every grid point; point `i` uses the child stream `(seed, i)`.
pub fn estimate_grid(grid: &[f64], n_samples: usize, seed: u64) -> Result<Vec<FgEstimate>> {
    check_samples(n_samples)?;
    if let Some(&bad) = grid.iter().find(|c| !(0.0..1.0).contains(*c)) {
        return Err(Error::Domain(format!("grid value {bad} outside [0, 1)")));
    }
    Ok(grid
        .par_iter()
        .enumerate()
        .map(|(i, &c)| {
            let mut rng = rng::child_rng(seed, &[i as u64]);
            estimate_unchecked(c, n_samples, &mut rng)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifyConfig {
    #[serde(rename = "C0")]
    pub c0: f64,
    pub grid_step: f64,
    pub n_samples: usize,
    #[serde(rename = "L")]
    pub lipschitz: f64,
    pub seed: u64,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        Self {
            c0: DEFAULT_C0,
            grid_step: DEFAULT_GRID_STEP,
            n_samples: DEFAULT_SAMPLES,
            lipschitz: DEFAULT_LIPSCHITZ,
            seed: 0,
        }
    }
}

/// Grid-plus-Lipschitz certificate for the bounds on `f`, `g` and `f/g`
/// over `[0, C0]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    #[serde(rename = "C0")]
    pub c0: f64,
    pub grid_step: f64,
    #[serde(rename = "L")]
    pub lipschitz_bound_used: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub grid_points: usize,
    pub min_f: f64,
    pub argmin_f: f64,
    pub min_g: f64,
    pub argmin_g: f64,
    pub max_g: f64,
    pub min_ratio: f64,
    pub min_f_minus_g: f64,
    pub max_stderr_f: f64,
    pub max_stderr_g: f64,
    /// `L * grid_step + 3 * max stderr`, per function.
    pub margin_f: f64,
    pub margin_g: f64,
    #[serde(rename = "C_f")]
    pub c_f: f64,
    #[serde(rename = "C_g")]
    pub c_g: f64,
    /// `C_f > 1` and `C_g > 0`.
    pub certified_eq1: bool,
    /// `f >= g` on `[0, C0]`: `min(f - g)` clears the combined margin.
    pub certified_eq2: bool,
    /// `max g + margin_g < 1`.
    pub g_below_one: bool,
}

pub fn certify_constants(cfg: &CertifyConfig) -> Result<CertificationReport> {
    if !(cfg.c0 > 0.0 && cfg.c0 < 1.0) {
        return Err(Error::Domain(format!("C0 must lie in (0, 1), got {}", cfg.c0)));
    }
    if !(cfg.grid_step > 0.0 && cfg.grid_step <= 0.01) {
        return Err(Error::Domain(format!(
            "grid_step must lie in (0, 0.01], got {}",
            cfg.grid_step
        )));
    }
    if !(cfg.lipschitz >= 0.0) {
        return Err(Error::Domain("Lipschitz bound must be nonnegative".into()));
    }
    let grid = uniform_grid(cfg.c0, cfg.grid_step);
    let estimates = estimate_grid(&grid, cfg.n_samples, cfg.seed)?;
    Ok(summarize_certificate(cfg, &estimates))
}

/// Builds the certificate from already computed grid estimates.
pub fn summarize_certificate(cfg: &CertifyConfig, estimates: &[FgEstimate]) -> CertificationReport {
    let argmin = |key: fn(&FgEstimate) -> f64| {
        estimates
            .iter()
            .min_by(|a, b| key(a).total_cmp(&key(b)))
            .map(|e| (key(e), e.c))
            .unwrap_or((f64::NAN, f64::NAN))
    };
    let (min_f, argmin_f) = argmin(|e| e.f_hat);
    let (min_g, argmin_g) = argmin(|e| e.g_hat);
    let (min_ratio, _) = argmin(|e| e.ratio());
    let (min_f_minus_g, _) = argmin(|e| e.f_hat - e.g_hat);
    let max_g = estimates.iter().map(|e| e.g_hat).fold(f64::NEG_INFINITY, f64::max);
    let max_stderr_f = estimates.iter().map(|e| e.stderr_f).fold(0.0, f64::max);
    let max_stderr_g = estimates.iter().map(|e| e.stderr_g).fold(0.0, f64::max);
    let lip_term = cfg.lipschitz * cfg.grid_step;
    let margin_f = lip_term + 3.0 * max_stderr_f;
    let margin_g = lip_term + 3.0 * max_stderr_g;
    let c_f = min_f - margin_f;
    let c_g = min_g - margin_g;
    CertificationReport {
        c0: cfg.c0,
        grid_step: cfg.grid_step,
        lipschitz_bound_used: cfg.lipschitz,
        n_samples: cfg.n_samples,
        seed: cfg.seed,
        grid_points: estimates.len(),
        min_f,
        argmin_f,
        min_g,
        argmin_g,
        max_g,
        min_ratio,
        min_f_minus_g,
        max_stderr_f,
        max_stderr_g,
        margin_f,
        margin_g,
        c_f,
        c_g,
        certified_eq1: c_f > 1.0 && c_g > 0.0,
        // f - g is 2L-Lipschitz.
        certified_eq2: min_f_minus_g - (margin_f + margin_g) >= 0.0,
        g_below_one: max_g + margin_g < 1.0,
    }
}

/// One row of the `fg-curve` table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FgRow {
    pub c: f64,
    pub f_hat: f64,
    pub f_stderr: f64,
    pub g_hat: f64,
    pub g_stderr: f64,
    pub ratio: f64,
}

impl From<&FgEstimate> for FgRow {
    fn from(e: &FgEstimate) -> Self {
        Self {
            c: e.c,
            f_hat: e.f_hat,
            f_stderr: e.stderr_f,
            g_hat: e.g_hat,
            g_stderr: e.stderr_g,
            ratio: e.ratio(),
        }
    }
}

pub const FG_CURVE_HEADER: &str = "c,f_hat,f_stderr,g_hat,g_stderr,ratio";

pub fn fg_curve(grid: &[f64], n_samples: usize, seed: u64) -> Result<Vec<FgRow>> {
    Ok(estimate_grid(grid, n_samples, seed)?
        .iter()
        .map(FgRow::from)
        .collect())
}

pub fn fg_curve_csv(rows: &[FgRow]) -> String {
    let mut out = String::from(FG_CURVE_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.c, r.f_hat, r.f_stderr, r.g_hat, r.g_stderr, r.ratio
        ));
    }
    out
}

/// Basin threshold used to derive `C_f` for the basis depth.
pub fn default_c_f() -> f64 {
    static C_F: std::sync::OnceLock<f64> = std::sync::OnceLock::new();
    *C_F.get_or_init(|| quadrature::grid_min_f(DEFAULT_C0, 0.01))
}
