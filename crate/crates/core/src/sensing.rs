//! Problem instances in the reduced (orthonormal-basis) measurement model.
//!
//! A raw complex Gaussian sensing matrix `A` (m x n) is drawn and replaced
//! by an orthonormal basis `Pi` of its range. The lifted truth is
//! `u0 = Pi z` and measurements are `y = |Pi z|`, so `||y|| = ||z|| = 1`.

use serde::{Deserialize, Serialize};

use crate::complex::{self, CMatrix, OrthonormalBasis, C64};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};

/// Matrix with i.i.d. `CN(0, variance_per_entry)` entries.
pub fn sample_complex_gaussian(
    rng: &mut Rng,
    rows: usize,
    cols: usize,
    variance_per_entry: f64,
) -> Result<CMatrix> {
    if !(variance_per_entry > 0.0) {
        return Err(Error::Domain(format!(
            "variance must be positive, got {variance_per_entry}"
        )));
    }
    let data = rng::complex_normal_vec(rng, rows * cols, variance_per_entry);
    CMatrix::from_col_major(rows, cols, data)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SignalMode {
    RandomUnit,
    /// Normalized to unit length on construction.
    Given(Vec<C64>),
}

#[derive(Debug, Clone)]
pub struct SensingInstance {
    n: usize,
    m: usize,
    seed: u64,
    z: Vec<C64>,
    basis: OrthonormalBasis,
    lifted_truth: Vec<C64>,
    y: Vec<f64>,
}

/// Builds an instance from `seed`. The sensing draw comes first in the
/// stream, followed by the signal when `mode` is random, so the basis is a
/// function of `(seed, n, m)` alone.
pub fn make_instance(seed: u64, n: usize, m: usize, mode: SignalMode) -> Result<SensingInstance> {
    if n < 1 || n >= m {
        return Err(Error::InvalidConfig(format!(
            "require 1 <= n < m, got n={n}, m={m}"
        )));
    }
    let mut rng = rng::rng_from_seed(seed);
    let basis = match draw_basis(&mut rng, m, n) {
        Ok(basis) => basis,
        Err(Error::SingularInstance(_)) => draw_basis(&mut rng, m, n)?,
        Err(other) => return Err(other),
    };
    let mut z = match mode {
        SignalMode::RandomUnit => rng::complex_normal_vec(&mut rng, n, 1.0),
        SignalMode::Given(z) => {
            if z.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: z.len(),
                });
            }
            z
        }
    };
    if complex::normalize(&mut z) == 0.0 {
        return Err(Error::Domain("signal must be nonzero".into()));
    }
    let lifted_truth = basis.combine(&z)?;
    let y = complex::moduli(&lifted_truth);
    Ok(SensingInstance {
        n,
        m,
        seed,
        z,
        basis,
        lifted_truth,
        y,
    })
}

fn draw_basis(rng: &mut Rng, m: usize, n: usize) -> Result<OrthonormalBasis> {
    let a = sample_complex_gaussian(rng, m, n, 1.0)?;
    complex::orthonormalize_columns(&a)
}

/// Uniform random unit vector on the subspace `L`.
pub fn random_unit_iterate(rng: &mut Rng, inst: &SensingInstance) -> Vec<C64> {
    let g = rng::complex_normal_vec(rng, inst.n, 1.0);
    let mut w = inst.lift(&g);
    complex::normalize(&mut w);
    w
}

impl SensingInstance {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Ground truth signal in `C^n`, unit norm.
    pub fn z(&self) -> &[C64] {
        &self.z
    }

    pub fn basis(&self) -> &OrthonormalBasis {
        &self.basis
    }

    /// `u0 = Pi z` in `C^m`.
    pub fn lifted_truth(&self) -> &[C64] {
        &self.lifted_truth
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// `Pi x` for `x` in `C^n`.
    pub fn lift(&self, x: &[C64]) -> Vec<C64> {
        self.basis
            .combine(x)
            .expect("signal-space vector must have length n")
    }

    /// `Pi^H w` for `w` in `C^m`.
    pub fn coords(&self, w: &[C64]) -> Vec<C64> {
        self.basis
            .coords(w)
            .expect("measurement-space vector must have length m")
    }

    /// `P_L w`.
    pub fn project(&self, w: &[C64]) -> Vec<C64> {
        self.lift(&self.coords(w))
    }

    pub fn record(&self) -> InstanceRecord {
        InstanceRecord {
            n: self.n,
            m: self.m,
            seed: self.seed,
            z: ComplexArrays::from_slice(&self.z),
            y: self.y.clone(),
        }
    }

    /// Regenerates an instance from its audit record and checks that the
    /// measurements match what was recorded.
    pub fn from_record(record: &InstanceRecord) -> Result<Self> {
        let z = record.z.to_vec()?;
        let inst = make_instance(record.seed, record.n, record.m, SignalMode::Given(z))?;
        if record.y.len() != inst.m {
            return Err(Error::DimensionMismatch {
                expected: inst.m,
                found: record.y.len(),
            });
        }
        let worst = inst
            .y
            .iter()
            .zip(&record.y)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if worst > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "recorded measurements do not match regenerated instance (max diff {worst:e})"
            )));
        }
        Ok(inst)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexArrays {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl ComplexArrays {
    pub fn from_slice(v: &[C64]) -> Self {
        Self {
            re: v.iter().map(|z| z.re).collect(),
            im: v.iter().map(|z| z.im).collect(),
        }
    }

    pub fn to_vec(&self) -> Result<Vec<C64>> {
        if self.re.len() != self.im.len() {
            return Err(Error::DimensionMismatch {
                expected: self.re.len(),
                found: self.im.len(),
            });
        }
        Ok(self
            .re
            .iter()
            .zip(&self.im)
            .map(|(&re, &im)| C64::new(re, im))
            .collect())
    }
}

/// JSON audit form of an instance. The basis is not stored; it is
/// regenerated from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub z: ComplexArrays,
    pub y: Vec<f64>,
}
