//! Dense complex matrices and the spectral primitives the rest of the crate
//! is built on.
//!
//! Storage is row-major. Decompositions delegate to `faer`; the wrappers
//! here fix orderings (ascending eigenvalues, descending singular values) and
//! validate the contracts downstream code relies on.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use faer::{Mat, Side};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const EPS: f64 = f64::EPSILON;

/// Hermitian inputs further than this (relative, Frobenius) from their adjoint
/// are rejected by [`herm_eigen`].
pub const HERMITIAN_TOL: f64 = 1e-8;


/// Dense `rows × cols` complex matrix, stored row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr", into = "MatrixRepr")]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

/// Wire format: `{"rows":r,"cols":c,"entries":[[re,im],...]}`, row-major.
#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    entries: Vec<[f64; 2]>,
}

impl TryFrom<MatrixRepr> for ComplexMatrix {
    type Error = Error;

    fn try_from(repr: MatrixRepr) -> Result<Self> {
        let data = repr
            .entries
            .into_iter()
            .map(|[re, im]| Complex64::new(re, im))
            .collect();
        ComplexMatrix::new(repr.rows, repr.cols, data)
    }
}

impl From<ComplexMatrix> for MatrixRepr {
    fn from(m: ComplexMatrix) -> Self {
        MatrixRepr {
            rows: m.rows,
            cols: m.cols,
            entries: m.data.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6e}{:+.6e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries. Rejects empty shapes, a length
    /// mismatch and non-finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::rejected(format!("empty shape {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::rejected(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::rejected(format!(
                "non-finite entry at ({}, {})",
                k / cols,
                k % cols
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Unchecked constructor for results of internal arithmetic.
    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    /// Builds a matrix from nested rows of complex entries.
    pub fn from_rows<R: AsRef<[Complex64]>>(rows: &[R]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != ncols) {
            return Err(Error::rejected("ragged rows"));
        }
        let data = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        Self::new(nrows, ncols, data)
    }

    /// Builds a matrix from nested rows of real entries.
    pub fn from_real_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let complex: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.as_ref().iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&complex)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_raw(rows, cols, vec![Complex64::new(0.0, 0.0); rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![Complex64::new(1.0, 0.0); n])
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d: Vec<Complex64> = diag.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::from_diagonal(&d)
    }

    /// Column vector from its entries.
    pub fn column_vector(entries: &[Complex64]) -> Result<Self> {
        Self::new(entries.len(), 1, entries.to_vec())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn require_square(&self, what: &str) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::rejected(format!(
                "{what}: expected a square matrix, got {}x{}",
                self.rows, self.cols
            )))
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                out.push(self[(i, j)].conj());
            }
        }
        Self::from_raw(self.cols, self.rows, out)
    }

    /// Matrix product, rejecting incompatible shapes.
    pub fn matmul(&self, rhs: &ComplexMatrix) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::rejected(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let (n, k, m) = (self.rows, self.cols, rhs.cols);
        let mut out = vec![Complex64::new(0.0, 0.0); n * m];
        for i in 0..n {
            let row = &mut out[i * m..(i + 1) * m];
            for l in 0..k {
                let a = self.data[i * k + l];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let brow = &rhs.data[l * m..(l + 1) * m];
                for (o, b) in row.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(Self::from_raw(n, m, out))
    }

    fn zip_with(&self, rhs: &ComplexMatrix, op: &str, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::rejected(format!(
                "cannot {op} {}x{} and {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let data = self.data.iter().zip(&rhs.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self::from_raw(self.rows, self.cols, data))
    }

    pub fn try_add(&self, rhs: &ComplexMatrix) -> Result<Self> {
        self.zip_with(rhs, "add", |a, b| a + b)
    }

    pub fn try_sub(&self, rhs: &ComplexMatrix) -> Result<Self> {
        self.zip_with(rhs, "subtract", |a, b| a - b)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::from_raw(self.rows, self.cols, self.data.iter().map(|&z| z * c).collect())
    }

    pub fn scale_real(&self, c: f64) -> Self {
        Self::from_raw(self.rows, self.cols, self.data.iter().map(|&z| z * c).collect())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// `(self + self*) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let adj = self.adjoint();
        Self::from_raw(
            self.rows,
            self.cols,
            self.data.iter().zip(&adj.data).map(|(&a, &b)| (a + b) * 0.5).collect(),
        )
    }

    /// `‖self − self*‖_F`.
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut acc = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                acc += (self[(i, j)] - self[(j, i)].conj()).norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// Column `j` as an `rows × 1` matrix.
    pub fn column(&self, j: usize) -> Self {
        Self::from_raw(self.rows, 1, (0..self.rows).map(|i| self[(i, j)]).collect())
    }

    /// Sub-block with top-left corner `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols, "block out of range");
        let mut data = Vec::with_capacity(rows * cols);
        for i in r0..r0 + rows {
            data.extend_from_slice(&self.data[i * self.cols + c0..i * self.cols + c0 + cols]);
        }
        Self::from_raw(rows, cols, data)
    }

    pub(crate) fn set_block(&mut self, r0: usize, c0: usize, src: &ComplexMatrix) {
        assert!(r0 + src.rows <= self.rows && c0 + src.cols <= self.cols, "block out of range");
        for i in 0..src.rows {
            let dst = (r0 + i) * self.cols + c0;
            self.data[dst..dst + src.cols].copy_from_slice(&src.data[i * src.cols..(i + 1) * src.cols]);
        }
    }

    /// Largest entrywise modulus of `self − other`.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Integer power of a square matrix; `powi(0)` is the identity.
    pub fn powi(&self, n: u32) -> Result<Self> {
        let dim = self.require_square("matrix power")?;
        let mut acc = Self::identity(dim);
        for _ in 0..n {
            acc = acc.matmul(self)?;
        }
        Ok(acc)
    }

    pub(crate) fn to_faer(&self) -> Mat<Complex64> {
        Mat::from_fn(self.rows, self.cols, |i, j| self.data[i * self.cols + j])
    }

    /// `(A / 2^k, 2^k)` with the largest entry moved near 1. Power-of-two
    /// scaling is exact, and keeps the decompositions' internal norms from
    /// overflowing or underflowing on extreme inputs.
    fn to_faer_balanced(&self) -> (Mat<Complex64>, f64) {
        let big = self.data.iter().map(|z| z.re.abs().max(z.im.abs())).fold(0.0, f64::max);
        if !(big.is_finite() && big > 0.0) || (1e-100..=1e100).contains(&big) {
            return (self.to_faer(), 1.0);
        }
        let scale = 2f64.powi(big.log2().round() as i32);
        (Mat::from_fn(self.rows, self.cols, |i, j| self.data[i * self.cols + j] / scale), scale)
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of range");
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        assert!(i < self.rows && j < self.cols, "index ({i}, {j}) out of range");
        &mut self.data[i * self.cols + j]
    }
}

// Operator forms panic on shape mismatch; use `matmul`/`try_add`/`try_sub`
// when shapes come from untrusted input.
impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("matrix product shape mismatch")
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.try_add(rhs).expect("matrix sum shape mismatch")
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.try_sub(rhs).expect("matrix difference shape mismatch")
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

/// Product `a · b`.
pub fn multiply(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    a.matmul(b)
}

/// Conjugate transpose `a*`.
pub fn adjoint(a: &ComplexMatrix) -> ComplexMatrix {
    a.adjoint()
}

/// Inner product `⟨x, y⟩ = Σ x_i conj(y_i)`, linear in the first argument.
pub fn inner(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    assert_eq!(x.len(), y.len(), "inner product length mismatch");
    x.iter().zip(y).map(|(a, b)| a * b.conj()).sum()
}

pub fn vector_norm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigendecomposition `H = Q Λ Q*` of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Unitary; column `k` belongs to `eigenvalues[k]`.
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEigen {
    /// Rebuilds `Q diag(φ(λ)) Q*`.
    pub fn reconstruct_with(&self, phi: impl Fn(f64) -> f64) -> ComplexMatrix {
        let vals: Vec<f64> = self.eigenvalues.iter().map(|&l| phi(l)).collect();
        spectral_sum(&self.eigenvectors, &vals)
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_with(|x| x)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty spectrum")
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }
}

/// `Q diag(vals) Q*`, exactly Hermitian by construction.
pub(crate) fn spectral_sum(q: &ComplexMatrix, vals: &[f64]) -> ComplexMatrix {
    let n = q.rows();
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for (k, &v) in vals.iter().enumerate() {
                if v != 0.0 {
                    acc += q[(i, k)] * q[(j, k)].conj() * v;
                }
            }
            if i == j {
                out[(i, i)] = Complex64::new(acc.re, 0.0);
            } else {
                out[(i, j)] = acc;
                out[(j, i)] = acc.conj();
            }
        }
    }
    out
}

fn check_hermitian(h: &ComplexMatrix) -> Result<()> {
    h.require_square("hermitian eigendecomposition")?;
    let defect = h.hermitian_defect();
    let bound = HERMITIAN_TOL * (1.0 + h.frobenius_norm());
    if defect > bound {
        return Err(Error::rejected(format!(
            "matrix is not Hermitian: ‖H − H*‖_F = {defect:.3e} exceeds {bound:.3e}"
        )));
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix. The input is symmetrized to
/// `(H + H*)/2` first; eigenvalues come back ascending.
pub fn herm_eigen(h: &ComplexMatrix) -> Result<HermitianEigen> {
    check_hermitian(h)?;
    let (m, scale) = h.hermitian_part().to_faer_balanced();
    let eig = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Decomposition(format!("Hermitian eigensolver: {e:?}")))?;
    let vals = eig.S().column_vector();
    let mut order: Vec<usize> = (0..vals.nrows()).collect();
    order.sort_by(|&a, &b| vals[a].re.total_cmp(&vals[b].re));
    let n = order.len();
    let u = eig.U();
    let mut vecs = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..n {
            vecs[(i, dst)] = u[(i, src)];
        }
    }
    Ok(HermitianEigen {
        eigenvalues: order.iter().map(|&k| vals[k].re * scale).collect(),
        eigenvectors: vecs,
    })
}

/// Eigenvalues only (ascending) of a Hermitian matrix, skipping the
/// eigenvector accumulation.
pub fn herm_eigenvalues(h: &ComplexMatrix) -> Result<Vec<f64>> {
    check_hermitian(h)?;
    Ok(herm_eigenvalues_unchecked(&h.hermitian_part()))
}

/// Ascending eigenvalues of a matrix already known to be exactly Hermitian.
pub(crate) fn herm_eigenvalues_unchecked(h: &ComplexMatrix) -> Vec<f64> {
    let (m, scale) = h.to_faer_balanced();
    let mut vals: Vec<f64> = match m.self_adjoint_eigenvalues(Side::Lower) {
        Ok(v) => v.into_iter().map(|x| x * scale).collect(),
        Err(_) => vec![f64::NAN; h.rows()],
    };
    vals.sort_by(f64::total_cmp);
    vals
}

/// Singular value decomposition `A = W Σ V*`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `W`, unitary `rows × rows` for square input.
    pub left: ComplexMatrix,
    /// Descending, non-negative.
    pub singulars: Vec<f64>,
    /// `V` (not `V*`).
    pub right: ComplexMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let k = self.singulars.len();
        let mut ws = self.left.block(0, 0, self.left.rows(), k);
        for j in 0..k {
            for i in 0..ws.rows() {
                ws[(i, j)] *= self.singulars[j];
            }
        }
        &ws * &self.right.block(0, 0, self.right.rows(), k).adjoint()
    }
}

/// Full SVD: both factors square unitary.
pub fn svd(a: &ComplexMatrix) -> Result<Svd> {
    let (m, scale) = a.to_faer_balanced();
    let dec = m
        .svd()
        .map_err(|e| Error::Decomposition(format!("SVD: {e:?}")))?;
    let (u, v) = (dec.U(), dec.V());
    let vals = dec.S().column_vector();
    let mut order: Vec<usize> = (0..vals.nrows()).collect();
    order.sort_by(|&x, &y| vals[y].re.total_cmp(&vals[x].re));
    let k = order.len();
    let mut left = ComplexMatrix::zeros(a.rows(), a.rows());
    let mut right = ComplexMatrix::zeros(a.cols(), a.cols());
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..a.rows() {
            left[(i, dst)] = u[(i, src)];
        }
        for i in 0..a.cols() {
            right[(i, dst)] = v[(i, src)];
        }
    }
    // Columns past min(rows, cols) complete the unitary factors.
    for j in k..a.rows() {
        for i in 0..a.rows() {
            left[(i, j)] = u[(i, j)];
        }
    }
    for j in k..a.cols() {
        for i in 0..a.cols() {
            right[(i, j)] = v[(i, j)];
        }
    }
    Ok(Svd {
        left,
        singulars: order.iter().map(|&s| vals[s].re.max(0.0) * scale).collect(),
        right,
    })
}

/// Singular values only, descending.
pub fn singular_values(a: &ComplexMatrix) -> Vec<f64> {
    let (m, scale) = a.to_faer_balanced();
    let mut s: Vec<f64> = match m.singular_values() {
        Ok(v) => v.into_iter().map(|x| x.max(0.0) * scale).collect(),
        // Non-finite input; NaN propagates to the callers' finiteness checks.
        Err(_) => vec![f64::NAN; a.rows().min(a.cols())],
    };
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Operator (spectral) norm: the largest singular value.
pub fn operator_norm(a: &ComplexMatrix) -> f64 {
    singular_values(a)[0]
}

/// Eigenvalues of a general square matrix (Schur form).
pub fn eigenvalues(a: &ComplexMatrix) -> Result<Vec<Complex64>> {
    let n = a.require_square("eigenvalues")?;
    if n == 1 {
        return Ok(vec![a[(0, 0)]]);
    }
    let (m, scale) = a.to_faer_balanced();
    let vals = m
        .eigenvalues()
        .map_err(|e| Error::Decomposition(format!("eigenvalues: {e:?}")))?;
    Ok(vals.into_iter().map(|z| z * scale).collect())
}

/// Spectral radius `max |λ|`.
pub fn spectral_radius(a: &ComplexMatrix) -> Result<f64> {
    Ok(eigenvalues(a)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn m(rows: &[&[f64]]) -> ComplexMatrix {
        ComplexMatrix::from_real_rows(rows).unwrap()
    }

    #[test]
    fn multiply_examples() {
        let a = ComplexMatrix::from_rows(&[[c(1.0, 2.0), c(0.0, -1.0)], [c(3.0, 0.0), c(0.5, 0.5)]]).unwrap();
        assert_eq!(multiply(&ComplexMatrix::identity(2), &a).unwrap(), a);
        let shift = m(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert_eq!(multiply(&shift, &shift).unwrap(), ComplexMatrix::zeros(2, 2));
        let j = m(&[&[1.0, 1.0], &[0.0, 1.0]]);
        assert_eq!(multiply(&j, &j).unwrap(), m(&[&[1.0, 2.0], &[0.0, 1.0]]));
    }

    #[test]
    fn multiply_rejects_mismatch() {
        let a = ComplexMatrix::zeros(2, 3);
        assert!(matches!(multiply(&a, &a), Err(Error::RejectedInput(_))));
    }

    #[test]
    fn adjoint_examples() {
        let shift = m(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert_eq!(adjoint(&shift), m(&[&[0.0, 0.0], &[1.0, 0.0]]));
        let i2 = ComplexMatrix::identity(2).scale(c(0.0, 1.0));
        assert_eq!(adjoint(&i2), ComplexMatrix::identity(2).scale(c(0.0, -1.0)));
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(ComplexMatrix::new(2, 2, vec![c(0.0, 0.0); 3]).is_err());
        assert!(ComplexMatrix::new(1, 1, vec![c(f64::NAN, 0.0)]).is_err());
        assert!(ComplexMatrix::new(1, 1, vec![c(0.0, f64::INFINITY)]).is_err());
        assert!(ComplexMatrix::new(0, 1, vec![]).is_err());
    }

    #[test]
    fn herm_eigen_examples() {
        let e = herm_eigen(&m(&[&[3.0, 0.0], &[0.0, 1.0]])).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 3.0]);
        // characteristic polynomial (2−λ)² − 1 = 0
        let e = herm_eigen(&m(&[&[2.0, 1.0], &[1.0, 2.0]])).unwrap();
        assert_abs_diff_eq!(e.eigenvalues[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(e.eigenvalues[1], 3.0, epsilon = 1e-14);
        let e = herm_eigen(&ComplexMatrix::zeros(3, 3)).unwrap();
        assert!(e.eigenvalues.iter().all(|&l| l == 0.0));
    }

    #[test]
    fn herm_eigen_rejects_non_hermitian() {
        let a = m(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(herm_eigen(&a), Err(Error::RejectedInput(_))));
        assert!(herm_eigen(&ComplexMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn herm_eigen_absorbs_roundoff_asymmetry() {
        let mut a = m(&[&[2.0, 1.0], &[1.0, 2.0]]);
        a[(0, 1)] += c(1e-12, 1e-12);
        let e = herm_eigen(&a).unwrap();
        assert_abs_diff_eq!(e.eigenvalues[1], 3.0, epsilon = 1e-11);
    }

    #[test]
    fn svd_examples() {
        let s = svd(&m(&[&[0.0, 2.0], &[0.0, 0.0]])).unwrap();
        assert_abs_diff_eq!(s.singulars[0], 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.singulars[1], 0.0, epsilon = 1e-15);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let u = ComplexMatrix::from_rows(&[[c(h, 0.0), c(0.0, h)], [c(0.0, h), c(h, 0.0)]]).unwrap();
        for s in svd(&u).unwrap().singulars {
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-14);
        }

        // eigenvalues of A*A = [[1,1],[1,2]] are (3 ± √5)/2
        let s = svd(&m(&[&[1.0, 1.0], &[0.0, 1.0]])).unwrap();
        let r5 = 5f64.sqrt();
        assert_abs_diff_eq!(s.singulars[0], (1.0 + r5) / 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.singulars[1], (r5 - 1.0) / 2.0, epsilon = 1e-14);
        assert!(s.reconstruct().max_abs_diff(&m(&[&[1.0, 1.0], &[0.0, 1.0]])) < 1e-14);
    }

    #[test]
    fn operator_norm_examples() {
        assert_abs_diff_eq!(operator_norm(&ComplexMatrix::identity(3)), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(operator_norm(&m(&[&[0.0, 2.0], &[0.0, 0.0]])), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            operator_norm(&m(&[&[1.0, 1.0], &[0.0, 1.0]])),
            1.618_033_988_749_895,
            epsilon = 1e-14
        );
    }

    #[test]
    fn spectral_radius_examples() {
        assert_abs_diff_eq!(spectral_radius(&m(&[&[0.0, 1.0], &[0.0, 0.0]])).unwrap(), 0.0, epsilon = 1e-15);
        let d = ComplexMatrix::from_diagonal(&[c(1.0, 0.0), c(0.0, 1.0)]);
        assert_abs_diff_eq!(spectral_radius(&d).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(spectral_radius(&m(&[&[1.0, 1.0], &[0.0, 1.0]])).unwrap(), 1.0, epsilon = 1e-12);
        assert!(spectral_radius(&ComplexMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn json_wire_format() {
        let shift: ComplexMatrix =
            serde_json::from_str(r#"{"rows":2,"cols":2,"entries":[[0,0],[1,0],[0,0],[0,0]]}"#).unwrap();
        assert_eq!(shift, m(&[&[0.0, 1.0], &[0.0, 0.0]]));
        assert_eq!(
            serde_json::to_string(&shift).unwrap(),
            r#"{"rows":2,"cols":2,"entries":[[0.0,0.0],[1.0,0.0],[0.0,0.0],[0.0,0.0]]}"#
        );
        assert!(serde_json::from_str::<ComplexMatrix>(r#"{"rows":2,"cols":2,"entries":[[0,0]]}"#).is_err());
    }
}
