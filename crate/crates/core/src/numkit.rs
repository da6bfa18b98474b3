//! Dense real-matrix primitives.
//!
//! [`DenseMatrix`] is a row-major `f64` matrix that rejects non-finite
//! entries at construction. On top of it live the scalar formulas the solvers
//! need: element-wise p-norms, the Hamming weight, nuclear and operator norms,
//! the trace inner product, the soft-thresholding (shrinkage) operator and a
//! deterministic thin SVD.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Default tolerance below which an entry counts as zero in [`hamming_weight`].
pub const DEFAULT_ZERO_TOL: f64 = 1e-12;

/// Row-major real matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::arg(format!("matrix dimensions must be positive, got {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::arg(format!(
                "data length {} does not match {rows}x{cols}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::arg("matrix entries must be finite"));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows. Panics on ragged or empty input.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        assert!(rows.iter().all(|r| r.as_ref().len() == cols), "ragged rows");
        let data = rows.iter().flat_map(|r| r.as_ref().iter().copied()).collect();
        Self::new(rows.len(), cols, data).expect("invalid matrix literal")
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diag(&vec![1.0; n])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix entry by entry.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn matmul(&self, rhs: &DenseMatrix) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::arg(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (l, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(l)) {
                    *o += a * b;
                }
            }
        }
        out.check_finite("matmul")
    }

    /// Element-wise combination of two same-shape matrices.
    pub fn zip_map(&self, other: &DenseMatrix, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
        }
        .check_finite("element-wise map")
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
        .check_finite("element-wise map")
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<Self> {
        self.zip_map(other, |a, b| a - b)
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<Self> {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn scale(&self, s: f64) -> Result<Self> {
        self.map(|v| v * s)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub(crate) fn same_shape(&self, other: &DenseMatrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::arg(format!(
                "shape mismatch: {}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub(crate) fn check_finite(self, what: &'static str) -> Result<Self> {
        if self.data.iter().all(|v| v.is_finite()) {
            Ok(self)
        } else {
            Err(Error::NonFinite(what))
        }
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows.min(8) {
            write!(f, "  ")?;
            for v in self.row(i).iter().take(8) {
                write!(f, "{v:>12.6} ")?;
            }
            if self.cols > 8 {
                write!(f, "...")?;
            }
            writeln!(f)?;
        }
        if self.rows > 8 {
            writeln!(f, "  ...")?;
        }
        write!(f, "]")
    }
}

/// Soft-thresholding of a single value. `eps` must be non-negative.
#[inline]
pub(crate) fn soft_threshold(x: f64, eps: f64) -> f64 {
    if x > eps {
        x - eps
    } else if x < -eps {
        x + eps
    } else {
        0.0
    }
}

/// Values the shrinkage operator can be applied to.
pub trait Shrink: Sized {
    fn shrink_by(&self, eps: f64) -> Self;
}

impl Shrink for f64 {
    fn shrink_by(&self, eps: f64) -> f64 {
        soft_threshold(*self, eps)
    }
}

impl Shrink for DenseMatrix {
    fn shrink_by(&self, eps: f64) -> DenseMatrix {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| soft_threshold(v, eps)).collect(),
        }
    }
}

impl Shrink for Vec<f64> {
    fn shrink_by(&self, eps: f64) -> Vec<f64> {
        self.iter().map(|&v| soft_threshold(v, eps)).collect()
    }
}

/// The shrinkage operator: moves every entry toward zero by `eps`, zeroing
/// the dead zone `[-eps, eps]`.
pub fn shrink<T: Shrink>(x: &T, eps: f64) -> Result<T> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::arg(format!("shrinkage threshold must be finite and >= 0, got {eps}")));
    }
    Ok(x.shrink_by(eps))
}

/// `(Σ |a_ij|^p)^(1/p)`. For `p < 1` this is only a quasi-norm.
pub fn elementwise_norm(a: &DenseMatrix, p: f64) -> Result<f64> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::arg(format!("element-wise norm order must be in (0, inf), got {p}")));
    }
    if p == 2.0 {
        return Ok(a.frobenius_norm());
    }
    if p == 1.0 {
        return Ok(a.data.iter().map(|v| v.abs()).sum());
    }
    let s: f64 = a.data.iter().map(|v| v.abs().powf(p)).sum();
    Ok(s.powf(1.0 / p))
}

/// Number of entries with magnitude strictly above `zero_tol`.
pub fn hamming_weight(a: &DenseMatrix, zero_tol: f64) -> Result<usize> {
    if !(zero_tol >= 0.0) {
        return Err(Error::arg(format!("zero tolerance must be >= 0, got {zero_tol}")));
    }
    Ok(a.data.iter().filter(|v| v.abs() > zero_tol).count())
}

/// `trace(Aᵀ B)`.
pub fn inner_product(a: &DenseMatrix, b: &DenseMatrix) -> Result<f64> {
    a.same_shape(b)?;
    Ok(a.data.iter().zip(&b.data).map(|(x, y)| x * y).sum())
}

/// Thin SVD `A = U diag(σ) Vᵀ` with `k = min(m, n)` components.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdResult {
    /// `m x k`, orthonormal columns.
    pub u: DenseMatrix,
    /// Non-increasing, non-negative.
    pub singular_values: Vec<f64>,
    /// `k x n`, orthonormal rows.
    pub vt: DenseMatrix,
}

impl SvdResult {
    /// `U diag(sigma) Vᵀ` with replacement singular values. Components past
    /// `sigma.len()` are dropped.
    pub fn reconstruct_with(&self, sigma: &[f64]) -> DenseMatrix {
        let (m, n) = (self.u.rows(), self.vt.cols());
        let k = self.singular_values.len();
        let mut out = DenseMatrix::zeros(m, n);
        for i in 0..m {
            let u_row = self.u.row(i);
            let out_row = &mut out.data[i * n..(i + 1) * n];
            for (l, &s) in sigma.iter().enumerate().take(k) {
                let coef = u_row[l] * s;
                if coef == 0.0 {
                    continue;
                }
                for (o, &v) in out_row.iter_mut().zip(self.vt.row(l)) {
                    *o += coef * v;
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        self.reconstruct_with(&self.singular_values)
    }
}

/// Deterministic thin SVD.
///
/// Sign convention: the largest-magnitude entry of each left singular vector
/// is non-negative, ties going to the lowest row index; the matching right
/// singular vector is flipped along with it.
pub fn svd(a: &DenseMatrix) -> Result<SvdResult> {
    let (m, n) = a.shape();
    let mat = faer::Mat::<f64>::from_fn(m, n, |i, j| a[(i, j)]);
    let dec = mat
        .thin_svd()
        .map_err(|_| Error::SvdNoConvergence { rows: m, cols: n })?;
    let (fu, fs, fv) = (dec.U(), dec.S(), dec.V());
    let k = m.min(n);

    let mut singular_values: Vec<f64> = (0..k).map(|l| fs[l].max(0.0)).collect();
    let mut order: Vec<usize> = (0..k).collect();
    // faer already returns non-increasing values; the stable sort only
    // guards the contract.
    order.sort_by(|&x, &y| singular_values[y].total_cmp(&singular_values[x]));
    singular_values = order.iter().map(|&l| singular_values[l]).collect();

    let mut u = DenseMatrix::zeros(m, k);
    let mut vt = DenseMatrix::zeros(k, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut pivot = 0usize;
        let mut best = -1.0;
        for i in 0..m {
            let mag = fu[(i, src)].abs();
            if mag > best {
                best = mag;
                pivot = i;
            }
        }
        let sign = if fu[(pivot, src)] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..m {
            u[(i, dst)] = sign * fu[(i, src)];
        }
        for j in 0..n {
            vt[(dst, j)] = sign * fv[(j, src)];
        }
    }

    if singular_values.iter().any(|s| !s.is_finite()) {
        return Err(Error::SvdNoConvergence { rows: m, cols: n });
    }
    Ok(SvdResult {
        u: u.check_finite("svd")?,
        singular_values,
        vt: vt.check_finite("svd")?,
    })
}

/// Singular values only (same ordering as [`svd`]).
pub fn singular_values(a: &DenseMatrix) -> Result<Vec<f64>> {
    let (m, n) = a.shape();
    let mat = faer::Mat::<f64>::from_fn(m, n, |i, j| a[(i, j)]);
    let mut s = mat
        .singular_values()
        .map_err(|_| Error::SvdNoConvergence { rows: m, cols: n })?;
    for v in &mut s {
        *v = v.max(0.0);
    }
    s.sort_by(|x, y| y.total_cmp(x));
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::SvdNoConvergence { rows: m, cols: n });
    }
    Ok(s)
}

/// `‖A‖_* = Σ σ_i`.
pub fn nuclear_norm(a: &DenseMatrix) -> Result<f64> {
    Ok(singular_values(a)?.iter().sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatorNorms {
    /// Largest singular value.
    pub spectral: f64,
    /// Maximum absolute row sum.
    pub op_inf: f64,
}

pub fn operator_norms(a: &DenseMatrix) -> Result<OperatorNorms> {
    let spectral = singular_values(a)?.first().copied().unwrap_or(0.0);
    Ok(OperatorNorms {
        spectral,
        op_inf: max_abs_row_sum(a),
    })
}

pub fn max_abs_row_sum(a: &DenseMatrix) -> f64 {
    (0..a.rows())
        .map(|i| a.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
