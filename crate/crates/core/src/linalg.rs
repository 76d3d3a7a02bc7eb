//! Dense symmetric linear algebra: a small row-major matrix type, a cyclic
//! Jacobi eigensolver, Gram–Schmidt residual projections and eigenvalue sums.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Dense row-major matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self {
            rows: r,
            cols: c,
            data,
        }
    }

    /// Builds a `dim x columns.len()` matrix whose columns are the given vectors.
    pub fn from_columns(columns: &[Vec<f64>]) -> Self {
        let c = columns.len();
        let r = columns.first().map_or(0, Vec::len);
        let mut m = Self::zeros(r, c);
        for (j, col) in columns.iter().enumerate() {
            assert_eq!(col.len(), r, "ragged columns");
            for (i, &v) in col.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
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

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "dimension mismatch in matmul");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// `XᵀX` for a matrix whose columns are vectors.
    pub fn gram(&self) -> Self {
        let n = self.cols;
        let mut g = Self::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v: f64 = (0..self.rows).map(|k| self[(k, i)] * self[(k, j)]).sum();
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        g
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_sq().sqrt()
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// `tr(A B)` without forming the product.
    pub fn trace_product(&self, other: &Self) -> f64 {
        assert_eq!(self.cols, other.rows);
        assert_eq!(self.rows, other.cols);
        let mut t = 0.0;
        for i in 0..self.rows {
            for k in 0..self.cols {
                t += self[(i, k)] * other[(k, i)];
            }
        }
        t
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// Eigenvalues in ascending order with the matching orthonormal eigenvectors
/// stored as columns of `vectors`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl EigenDecomposition {
    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.vectors.column(k)
    }

    /// `V diag(values) Vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.values.len();
        let mut out = Matrix::zeros(n, n);
        for k in 0..n {
            let lam = self.values[k];
            for i in 0..n {
                let vi = self.vectors[(i, k)] * lam;
                if vi == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += vi * self.vectors[(j, k)];
                }
            }
        }
        out
    }
}

const SYMMETRY_TOL: f64 = 1e-10;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Sweeps stop once the off-diagonal Frobenius mass falls below
/// `1e-12 * ‖A‖_F`, or after 100 sweeps.
pub fn eigh(a: &Matrix) -> Result<EigenDecomposition> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "eigh needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    let scale = a.frobenius_norm().max(1.0);
    let asym = a.max_asymmetry();
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric(asym));
    }
    // flat copies; `vt` holds the eigenvectors as rows
    let mut m = a.as_slice().to_vec();
    // symmetrize exactly so the rotations see one consistent matrix
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[i * n + j] + m[j * n + i]);
            m[i * n + j] = v;
            m[j * n + i] = v;
        }
    }
    let mut vt = vec![0.0; n * n];
    for i in 0..n {
        vt[i * n + i] = 1.0;
    }
    let norm = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    let threshold = 1e-12 * norm;

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += 2.0 * m[i * n + j] * m[i * n + j];
            }
        }
        let off = off.sqrt();
        if off <= threshold || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    let np = c * mkp - s * mkq;
                    let nq = s * mkp + c * mkq;
                    m[k * n + p] = np;
                    m[p * n + k] = np;
                    m[k * n + q] = nq;
                    m[q * n + k] = nq;
                }
                m[p * n + p] = app - t * apq;
                m[q * n + q] = aqq + t * apq;
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                let (head, tail) = vt.split_at_mut(q * n);
                let vp = &mut head[p * n..(p + 1) * n];
                let vq = &mut tail[..n];
                for k in 0..n {
                    let (a, b) = (vp[k], vq[k]);
                    vp[k] = c * a - s * b;
                    vq[k] = s * a + c * b;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].total_cmp(&m[j * n + j]));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, dst)] = vt[src * n + k];
        }
    }
    Ok(EigenDecomposition { values, vectors })
}

/// Eigenvalues only, ascending.
pub fn eigenvalues(a: &Matrix) -> Result<Vec<f64>> {
    Ok(eigh(a)?.values)
}

/// Orthonormal basis (as vectors) of the span of the selected columns, by
/// modified Gram–Schmidt with one re-orthogonalization pass. Columns whose
/// residual norm drops below `1e-10` of the largest selected column norm are
/// treated as dependent and skipped.
pub fn orthonormal_basis(x: &Matrix, selected: &[usize]) -> Vec<Vec<f64>> {
    let largest = selected
        .iter()
        .map(|&j| norm(&x.column(j)))
        .fold(0.0_f64, f64::max);
    let tol = 1e-10 * largest;
    let mut basis: Vec<Vec<f64>> = Vec::new();
    if largest == 0.0 {
        return basis;
    }
    for &j in selected {
        let mut col = x.column(j);
        for _ in 0..2 {
            for q in &basis {
                let proj = dot(q, &col);
                axpy(-proj, q, &mut col);
            }
        }
        let nrm = norm(&col);
        if nrm > tol {
            col.iter_mut().for_each(|c| *c /= nrm);
            basis.push(col);
        }
    }
    basis
}

/// `X_S^⊥ X`: every column of `x` with its component in
/// `span{x_j : j ∈ selected}` removed.
pub fn project_residual(x: &Matrix, selected: &[usize]) -> Matrix {
    let basis = orthonormal_basis(x, selected);
    residual_against(x, &basis)
}

/// Removes the components along an orthonormal `basis` from every column.
pub fn residual_against(x: &Matrix, basis: &[Vec<f64>]) -> Matrix {
    let mut out = x.clone();
    for j in 0..x.cols() {
        let mut col = x.column(j);
        for _ in 0..2 {
            for q in basis {
                let proj = dot(q, &col);
                axpy(-proj, q, &mut col);
            }
        }
        for (i, v) in col.into_iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    out
}

/// Sum of the `k` smallest eigenvalues.
pub fn sum_smallest(a: &Matrix, k: usize) -> Result<f64> {
    let n = a.rows();
    if k == 0 || k > n {
        return Err(Error::OutOfRange(format!("k = {k} not in 1..={n}")));
    }
    let values = eigenvalues(a)?;
    Ok(values[..k].iter().sum())
}

/// `Σ_{i ≥ r+1} σ_i` with `σ` sorted descending: the trace minus the `r`
/// largest eigenvalues.
pub fn sum_tail_descending(a: &Matrix, r: usize) -> Result<f64> {
    let n = a.rows();
    if r > n {
        return Err(Error::OutOfRange(format!("r = {r} exceeds dimension {n}")));
    }
    let values = eigenvalues(a)?;
    Ok(values[..n - r].iter().sum())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Factor a PSD matrix as `G = Yᵀ Y` and return the columns of `Y` (one
/// vector per row of `G`). Negative eigenvalues are clamped to zero and
/// directions with negligible eigenvalue are dropped.
pub fn psd_factor(g: &Matrix) -> Result<Vec<Vec<f64>>> {
    let eig = eigh(g)?;
    let n = g.rows();
    let top = eig.values.iter().cloned().fold(0.0_f64, f64::max);
    let keep: Vec<usize> = (0..n)
        .filter(|&k| eig.values[k] > 1e-14 * top.max(1e-300))
        .collect();
    let mut out = vec![vec![0.0; keep.len()]; n];
    for (c, &k) in keep.iter().enumerate() {
        let s = eig.values[k].sqrt();
        for i in 0..n {
            out[i][c] = eig.vectors[(i, k)] * s;
        }
    }
    Ok(out)
}

/// Nearest PSD matrix in Frobenius norm (eigenvalue clipping).
pub fn project_psd(a: &Matrix) -> Result<Matrix> {
    let mut eig = eigh(a)?;
    for v in eig.values.iter_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Ok(eig.reconstruct())
}
