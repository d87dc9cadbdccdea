//! Dense complex vector and matrix primitives.
//!
//! Vectors are plain `[C64]` slices; matrices are column-major. The
//! orthonormal basis type keeps its columns as separate vectors because
//! every consumer iterates column by column (projection, Gram-Schmidt,
//! coefficient extraction).

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Residual norms below this fraction of the input norm are treated as
/// "numerically in the span".
pub const DEGENERACY_THRESHOLD: f64 = 1e-10;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// `z / |z|`, with `phase(0) = 1`.
#[inline]
pub fn phase(z: C64) -> C64 {
    let r = z.norm();
    if r > 0.0 {
        z / r
    } else {
        ONE
    }
}

pub fn phase_vec(v: &[C64]) -> Vec<C64> {
    v.iter().map(|&z| phase(z)).collect()
}

/// Phase of `w` times modulus of `y`, entrywise.
pub fn odot(w: &[C64], y: &[f64]) -> Result<Vec<C64>> {
    check_len(w.len(), y.len())?;
    Ok(w.iter()
        .zip(y)
        .map(|(&wi, &yi)| phase(wi) * yi.abs())
        .collect())
}

/// Same as [`odot`] with complex second argument (only its modulus is used).
pub fn odot_complex(w: &[C64], y: &[C64]) -> Result<Vec<C64>> {
    check_len(w.len(), y.len())?;
    Ok(w.iter()
        .zip(y)
        .map(|(&wi, &yi)| phase(wi) * yi.norm())
        .collect())
}

/// `a^H b`.
#[inline]
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(ZERO, |acc, (x, y)| acc + x.conj() * y)
}

pub fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn norm1(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).sum()
}

pub fn norm_inf(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn real_norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn moduli(v: &[C64]) -> Vec<f64> {
    v.iter().map(|z| z.norm()).collect()
}

pub fn scale(v: &[C64], s: C64) -> Vec<C64> {
    v.iter().map(|&z| z * s).collect()
}

/// `y += a * x`
#[inline]
pub fn axpy(a: C64, x: &[C64], y: &mut [C64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn sub(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Normalizes in place and returns the original norm.
pub fn normalize(v: &mut [C64]) -> f64 {
    let nrm = norm2(v);
    if nrm > 0.0 {
        let inv = 1.0 / nrm;
        v.iter_mut().for_each(|z| *z *= inv);
    }
    nrm
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Dense column-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut out = Self::zeros(n, n);
        for i in 0..n {
            out[(i, i)] = ONE;
        }
        out
    }

    /// Builds from column-major data.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        check_len(rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    pub fn from_columns(columns: &[Vec<C64>]) -> Result<Self> {
        let rows = columns.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows * columns.len());
        for col in columns {
            check_len(rows, col.len())?;
            data.extend_from_slice(col);
        }
        Ok(Self {
            rows,
            cols: columns.len(),
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, j: usize) -> &[C64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[C64]> {
        self.data.chunks_exact(self.rows.max(1)).take(self.cols)
    }

    pub fn as_col_major(&self) -> &[C64] {
        &self.data
    }

    /// `A x`
    pub fn mul_vec(&self, x: &[C64]) -> Result<Vec<C64>> {
        check_len(self.cols, x.len())?;
        let mut out = vec![ZERO; self.rows];
        for (col, &xj) in self.columns().zip(x) {
            axpy(xj, col, &mut out);
        }
        Ok(out)
    }

    /// `A^H v`
    pub fn adjoint_mul_vec(&self, v: &[C64]) -> Result<Vec<C64>> {
        check_len(self.rows, v.len())?;
        Ok(self.columns().map(|col| inner(col, v)).collect())
    }

    /// `A B`
    pub fn mul(&self, other: &CMatrix) -> Result<CMatrix> {
        check_len(self.cols, other.rows)?;
        let mut data = Vec::with_capacity(self.rows * other.cols);
        for col in other.columns() {
            data.extend(self.mul_vec(col)?);
        }
        Ok(CMatrix {
            rows: self.rows,
            cols: other.cols,
            data,
        })
    }

    /// `A^H B`
    pub fn adjoint_mul(&self, other: &CMatrix) -> Result<CMatrix> {
        check_len(self.rows, other.rows)?;
        let mut data = Vec::with_capacity(self.cols * other.cols);
        for col in other.columns() {
            data.extend(self.adjoint_mul_vec(col)?);
        }
        Ok(CMatrix {
            rows: self.cols,
            cols: other.cols,
            data,
        })
    }

    /// Largest entry modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[j * self.rows + i]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[j * self.rows + i]
    }
}

/// Solves the square system `A x = b` by LU with partial pivoting.
pub fn solve_linear(a: &CMatrix, b: &[C64]) -> Result<Vec<C64>> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.cols(),
        });
    }
    check_len(n, b.len())?;
    let mut lu = a.clone();
    let mut x = b.to_vec();
    let scale = a.data.iter().map(|z| z.norm()).fold(0.0, f64::max);
    for k in 0..n {
        let (piv, piv_abs) = (k..n)
            .map(|i| (i, lu[(i, k)].norm()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if piv_abs <= f64::EPSILON * scale * n as f64 {
            return Err(Error::SingularInstance(format!(
                "pivot {piv_abs:e} at column {k}"
            )));
        }
        if piv != k {
            for j in 0..n {
                let tmp = lu[(k, j)];
                lu[(k, j)] = lu[(piv, j)];
                lu[(piv, j)] = tmp;
            }
            x.swap(k, piv);
        }
        let pivot = lu[(k, k)];
        for i in k + 1..n {
            let factor = lu[(i, k)] / pivot;
            if factor == ZERO {
                continue;
            }
            for j in k..n {
                let v = lu[(k, j)];
                lu[(i, j)] -= factor * v;
            }
            let xk = x[k];
            x[i] -= factor * xk;
        }
    }
    for k in (0..n).rev() {
        let mut acc = x[k];
        for j in k + 1..n {
            acc -= lu[(k, j)] * x[j];
        }
        x[k] = acc / lu[(k, k)];
    }
    Ok(x)
}

/// A set of orthonormal vectors in `C^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalBasis {
    dim: usize,
    columns: Vec<Vec<C64>>,
}

impl OrthonormalBasis {
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            columns: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn column(&self, j: usize) -> &[C64] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<C64>] {
        &self.columns
    }

    pub fn to_matrix(&self) -> CMatrix {
        CMatrix::from_columns(&self.columns).unwrap_or_else(|_| CMatrix::zeros(self.dim, 0))
    }

    /// Orthogonalizes `v` against the basis (two classical passes), appends
    /// the normalized residual and returns the residual norm before
    /// normalization.
    pub fn append(&mut self, v: &[C64]) -> Result<f64> {
        check_len(self.dim, v.len())?;
        if self.columns.len() >= self.dim {
            return Err(Error::DegenerateDirection { residual: 0.0 });
        }
        let reference = norm2(v);
        let mut r = v.to_vec();
        for _ in 0..2 {
            let coeffs = self.coords(&r)?;
            for (col, c) in self.columns.iter().zip(coeffs) {
                axpy(-c, col, &mut r);
            }
        }
        let residual = norm2(&r);
        if !(residual >= DEGENERACY_THRESHOLD * reference) || residual == 0.0 {
            return Err(Error::DegenerateDirection { residual });
        }
        let inv = 1.0 / residual;
        r.iter_mut().for_each(|z| *z *= inv);
        self.columns.push(r);
        Ok(residual)
    }

    /// Value-returning form of [`append`](Self::append).
    pub fn gram_schmidt_append(mut self, v: &[C64]) -> Result<(Self, f64)> {
        let residual = self.append(v)?;
        Ok((self, residual))
    }

    /// Coordinates `Q^H v`.
    pub fn coords(&self, v: &[C64]) -> Result<Vec<C64>> {
        check_len(self.dim, v.len())?;
        Ok(self.columns.iter().map(|col| inner(col, v)).collect())
    }

    /// Lifts coordinates back: `Q c`.
    pub fn combine(&self, coeffs: &[C64]) -> Result<Vec<C64>> {
        check_len(self.columns.len(), coeffs.len())?;
        let mut out = vec![ZERO; self.dim];
        for (col, &c) in self.columns.iter().zip(coeffs) {
            axpy(c, col, &mut out);
        }
        Ok(out)
    }

    /// Orthogonal projection onto the span.
    pub fn project(&self, v: &[C64]) -> Result<Vec<C64>> {
        self.combine(&self.coords(v)?)
    }

    /// Largest entry of `|Q^H Q - I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.columns.iter().enumerate() {
            for (j, b) in self.columns.iter().enumerate() {
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((inner(a, b) - target).norm());
            }
        }
        worst
    }
}

/// Orthonormal basis of `range(A)` via twice-iterated Gram-Schmidt.
pub fn orthonormalize_columns(a: &CMatrix) -> Result<OrthonormalBasis> {
    let mut basis = OrthonormalBasis::empty(a.rows());
    for (j, col) in a.columns().enumerate() {
        basis.append(col).map_err(|err| match err {
            Error::DegenerateDirection { residual } => Error::SingularInstance(format!(
                "column {j} numerically dependent (residual {residual:e})"
            )),
            other => other,
        })?;
    }
    Ok(basis)
}
