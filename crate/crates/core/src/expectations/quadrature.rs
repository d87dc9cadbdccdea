//! Deterministic quadrature for `f` and `g`.
//!
//! Rotating both variables so that `x0` is real, writing
//! `(|x0|, |x1|) = R (cos a, sin a)` and `phi = arg x1 - arg x0`, the radial
//! integral factors out in closed form (`int_0^inf 4 R^5 e^{-R^2} dR = 1`):
//!
//! ```text
//! f(c) = 1/c  int_0^{pi/2} 4 cos^3 a sin a  <(p + q cos phi) / rho> da
//! g(c) = 1/s  int_0^{pi/2} 4 cos^2 a sin^2 a <(p cos phi + q) / rho> da
//! ```
//!
//! with `s = sqrt(1 - c^2)`, `p = c cos a`, `q = s sin a`,
//! `rho = |p + q e^{i phi}|` and `<.>` the average over `phi`. The only
//! non-smooth point is `p = q, phi = pi`; the meshes are graded toward
//! `a = asin(c)` and `phi = pi`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::OnceLock;

const NODES: usize = 16;
const GRADING_LEVELS: usize = 24;

fn legendre_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(NODES))
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, `n >= 2`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut prev, mut cur) = (1.0, x);
            for k in 2..=n {
                let next = ((2 * k - 1) as f64 * x * cur - (k - 1) as f64 * prev) / k as f64;
                prev = cur;
                cur = next;
            }
            dp = n as f64 * (x * cur - prev) / (x * x - 1.0);
            let dx = cur / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Panels on `[a, b]`, geometrically refined toward `b` (or `a`).
fn graded_panels(a: f64, b: f64, toward_b: bool) -> Vec<(f64, f64)> {
    if b <= a {
        return Vec::new();
    }
    let width = b - a;
    let mut cuts = vec![0.0];
    let mut t = 0.5;
    for _ in 0..GRADING_LEVELS {
        cuts.push(1.0 - t);
        t *= 0.5;
    }
    cuts.push(1.0);
    let mut panels: Vec<(f64, f64)> = cuts
        .windows(2)
        .map(|w| {
            if toward_b {
                (a + w[0] * width, a + w[1] * width)
            } else {
                (b - w[1] * width, b - w[0] * width)
            }
        })
        .collect();
    panels.sort_by(|x, y| x.0.total_cmp(&y.0));
    panels
}

fn integrate(panels: &[(f64, f64)], mut h: impl FnMut(f64) -> f64) -> f64 {
    let (nodes, weights) = legendre_rule();
    panels
        .iter()
        .map(|&(lo, hi)| {
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            nodes
                .iter()
                .zip(weights)
                .map(|(x, w)| w * h(mid + half * x))
                .sum::<f64>()
                * half
        })
        .sum()
}

fn phi_panels() -> &'static Vec<(f64, f64)> {
    static PANELS: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    PANELS.get_or_init(|| graded_panels(0.0, PI, true))
}

fn alpha_panels(c: f64) -> Vec<(f64, f64)> {
    let kink = c.clamp(0.0, 1.0).asin();
    let mut panels = graded_panels(0.0, kink, true);
    panels.extend(graded_panels(kink, FRAC_PI_2, false));
    panels
}

/// `int_0^{pi/2} weight(a) <numer(p, q, cos phi) / rho> da`
fn reduced_integral(
    c: f64,
    weight: impl Fn(f64) -> f64,
    numer: impl Fn(f64, f64, f64) -> f64,
) -> f64 {
    let s = (1.0 - c * c).max(0.0).sqrt();
    let phis = phi_panels();
    integrate(&alpha_panels(c), |a| {
        let p = c * a.cos();
        let q = s * a.sin();
        let inner = integrate(phis, |phi| {
            let cp = phi.cos();
            let rho = (p * p + q * q + 2.0 * p * q * cp).max(0.0).sqrt();
            if rho == 0.0 {
                0.0
            } else {
                numer(p, q, cp) / rho
            }
        }) / PI;
        weight(a) * inner
    })
}

/// `f(c)` for `0 < c <= 1`.
pub fn f(c: f64) -> f64 {
    assert!(c > 0.0 && c <= 1.0, "quadrature f defined on (0, 1]");
    reduced_integral(
        c,
        |a| 4.0 * a.cos().powi(3) * a.sin(),
        |p, q, cp| p + q * cp,
    ) / c
}

/// `g(c)` for `0 <= c < 1`.
pub fn g(c: f64) -> f64 {
    assert!((0.0..1.0).contains(&c), "quadrature g defined on [0, 1)");
    let s = (1.0 - c * c).sqrt();
    reduced_integral(
        c,
        |a| 4.0 * (a.cos() * a.sin()).powi(2),
        |p, q, cp| p * cp + q,
    ) / s
}

/// Limit of `f` at `0`, i.e. the derivative of `c f(c)` at the origin:
/// `E|x|^3 E[1/|x|] / 2 = 3 pi / 8` for `x ~ CN(0, 1)`.
pub const F_AT_ZERO: f64 = 3.0 * PI / 8.0;

/// `f` on `[0, 1]`, using the limit at zero.
pub fn f_extended(c: f64) -> f64 {
    if c == 0.0 {
        F_AT_ZERO
    } else {
        f(c)
    }
}

/// `min f` over the uniform grid `{0, step, ..., c0}`.
pub fn grid_min_f(c0: f64, step: f64) -> f64 {
    super::uniform_grid(c0, step)
        .into_iter()
        .map(f_extended)
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let (x, w) = gauss_legendre(16);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let p30: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert!((p30 - 2.0 / 31.0).abs() < 1e-13);
    }

    #[test]
    fn closed_form_endpoints() {
        assert!((g(0.0) - PI / 4.0).abs() < 1e-12);
        assert!((f(1.0) - 1.0).abs() < 1e-12);
        assert!((f(1e-5) - F_AT_ZERO).abs() < 1e-6);
    }

    /// Oracle: plain midpoint rule on a uniform (a, phi) grid.
    #[test]
    fn agrees_with_uniform_midpoint_rule() {
        let cells = 3000;
        for c in [0.1f64, 0.5, 0.8] {
            let s = (1.0 - c * c).sqrt();
            let (da, dphi) = (FRAC_PI_2 / cells as f64, PI / cells as f64);
            let (mut fi, mut gi) = (0.0, 0.0);
            for i in 0..cells {
                let a = (i as f64 + 0.5) * da;
                let (p, q) = (c * a.cos(), s * a.sin());
                let (mut tf, mut tg) = (0.0, 0.0);
                for j in 0..cells {
                    let cp = ((j as f64 + 0.5) * dphi).cos();
                    let rho = (p * p + q * q + 2.0 * p * q * cp).sqrt();
                    tf += (p + q * cp) / rho;
                    tg += (p * cp + q) / rho;
                }
                tf /= cells as f64;
                tg /= cells as f64;
                fi += 4.0 * a.cos().powi(3) * a.sin() * tf * da;
                gi += 4.0 * (a.cos() * a.sin()).powi(2) * tg * da;
            }
            assert!((f(c) - fi / c).abs() < 1e-5, "f({c}): {} vs {}", f(c), fi / c);
            assert!((g(c) - gi / s).abs() < 1e-5, "g({c}): {} vs {}", g(c), gi / s);
        }
    }
}
