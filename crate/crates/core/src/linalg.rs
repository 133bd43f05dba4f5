//! Dense linear algebra used by every algorithm in the crate.
//!
//! Matrices are small (a few hundred rows, at most a few dozen basis
//! columns), so everything here is written for clarity and numerical
//! robustness rather than raw throughput. Orthogonalization is modified
//! Gram–Schmidt with one reorthogonalization pass; least-squares problems
//! go through the resulting thin QR factor, never through an explicit
//! inverse. Singular values (rank decisions and principal angles) come
//! from `nalgebra`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative tolerance used wherever a rank decision is made.
pub const RANK_TOL: f64 = 1e-10;

/// Real `rows x cols` matrix stored row-major. Entries are always finite.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape {
                rows,
                cols,
                len: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols.max(1),
                col: pos % cols.max(1),
            });
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from column vectors of length `rows`.
    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Result<Self> {
        let cols = columns.len();
        let mut data = vec![0.0; rows * cols];
        for (j, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(Error::DimensionMismatch(format!(
                    "column {j} has length {}, expected {rows}",
                    c.len()
                )));
            }
            for (i, &x) in c.iter().enumerate() {
                data[i * cols + j] = x;
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::DimensionMismatch(format!(
                    "row {i} has length {}, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
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
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    /// Overwrites column `j`. Rejects non-finite values.
    pub fn set_column(&mut self, j: usize, values: &[f64]) -> Result<()> {
        if values.len() != self.rows || j >= self.cols {
            return Err(Error::DimensionMismatch(format!(
                "cannot write a length-{} column into column {j} of a {}x{} matrix",
                values.len(),
                self.rows,
                self.cols
            )));
        }
        if let Some(i) = values.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { row: i, col: j });
        }
        for (i, &x) in values.iter().enumerate() {
            self.data[i * self.cols + j] = x;
        }
        Ok(())
    }

    /// Row subsampling `A[Ω, :]`; repeated indices repeat rows.
    pub fn select_rows(&self, indices: &[usize]) -> DenseMatrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        DenseMatrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn select_columns(&self, indices: &[usize]) -> DenseMatrix {
        let cols: Vec<Vec<f64>> = indices.iter().map(|&j| self.column(j)).collect();
        DenseMatrix::from_columns(self.rows, &cols).expect("columns come from a valid matrix")
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut data = vec![0.0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        DenseMatrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let row = self.row(i);
            let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (l, &a) in row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (d, &b) in dst.iter_mut().zip(other.row(l)) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "vector length must match column count");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn column_norms(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (a, x) in acc.iter_mut().zip(self.row(i)) {
                *a += x * x;
            }
        }
        acc.into_iter().map(f64::sqrt).collect()
    }

    /// `max |(AᵀA - I)_ij|`, the orthonormality defect of the columns.
    pub fn orthonormality_defect(&self) -> f64 {
        let cols = self.columns();
        let mut worst: f64 = 0.0;
        for i in 0..cols.len() {
            for j in i..cols.len() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(&cols[i], &cols[j]) - target).abs());
            }
        }
        worst
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Orthonormal columns grown one direction at a time.
#[derive(Clone, Debug)]
pub struct OrthoBasis {
    dim: usize,
    cols: Vec<Vec<f64>>,
}

impl OrthoBasis {
    pub fn new(dim: usize) -> Self {
        OrthoBasis {
            dim,
            cols: Vec::new(),
        }
    }

    /// Orthonormal basis for the span of `columns`, dropping numerically
    /// dependent directions (norm below `RANK_TOL` times the largest input norm).
    pub fn spanning(dim: usize, columns: &[Vec<f64>]) -> Self {
        let reference = columns.iter().map(|c| norm(c)).fold(0.0, f64::max);
        let mut basis = OrthoBasis::new(dim);
        for c in columns {
            basis.push(c, reference);
        }
        basis
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.cols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cols.is_empty()
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.cols
    }

    /// Component of `v` orthogonal to the span (two Gram–Schmidt passes).
    pub fn residual(&self, v: &[f64]) -> Vec<f64> {
        let mut w = v.to_vec();
        for _ in 0..2 {
            for q in &self.cols {
                let c = dot(q, &w);
                axpy(-c, q, &mut w);
            }
        }
        w
    }

    pub fn residual_norm(&self, v: &[f64]) -> f64 {
        norm(&self.residual(v))
    }

    /// Orthogonalizes `v` against the basis and appends the normalized
    /// remainder. Returns `false` (basis unchanged) when the remainder is
    /// below `RANK_TOL * reference`.
    pub fn push(&mut self, v: &[f64], reference: f64) -> bool {
        assert_eq!(v.len(), self.dim, "vector length must match basis dimension");
        let w = self.residual(v);
        let nw = norm(&w);
        let scale = if reference > 0.0 { reference } else { norm(v) };
        if nw <= RANK_TOL * scale || nw == 0.0 {
            return false;
        }
        self.cols.push(w.into_iter().map(|x| x / nw).collect());
        true
    }

    pub fn to_matrix(&self) -> DenseMatrix {
        DenseMatrix::from_columns(self.dim, &self.cols).expect("basis columns are finite")
    }
}

/// Thin QR factor `A = QR` of a full-column-rank matrix given by columns.
#[derive(Clone, Debug)]
pub struct QrFactor {
    q: Vec<Vec<f64>>,
    /// Upper triangle, row-major `k x k`.
    r: Vec<f64>,
}

impl QrFactor {
    pub fn new(columns: &[Vec<f64>]) -> Result<Self> {
        let k = columns.len();
        let reference = columns.iter().map(|c| norm(c)).fold(0.0, f64::max);
        let mut q: Vec<Vec<f64>> = Vec::with_capacity(k);
        let mut r = vec![0.0; k * k];
        let mut rank = 0;
        let mut deficient = false;
        for (j, a) in columns.iter().enumerate() {
            let mut w = a.clone();
            for _ in 0..2 {
                for (i, qi) in q.iter().enumerate() {
                    let c = dot(qi, &w);
                    axpy(-c, qi, &mut w);
                    r[i * k + j] += c;
                }
            }
            let nw = norm(&w);
            if nw <= RANK_TOL * reference || nw == 0.0 {
                // keep scanning so the reported rank is complete
                deficient = true;
                continue;
            }
            r[j * k + j] = nw;
            w.iter_mut().for_each(|x| *x /= nw);
            q.push(w);
            rank += 1;
        }
        if deficient {
            return Err(Error::RankDeficient {
                dim: k,
                rank,
                column: None,
            });
        }
        Ok(QrFactor { q, r })
    }

    pub fn ncols(&self) -> usize {
        self.q.len()
    }

    /// Least-squares coefficients `x = argmin ‖Ax − v‖₂`.
    pub fn solve(&self, v: &[f64]) -> Vec<f64> {
        let k = self.q.len();
        // Qᵀv with reorthogonalized accumulation for accuracy
        let mut w = v.to_vec();
        let mut y = vec![0.0; k];
        for _ in 0..2 {
            for (i, qi) in self.q.iter().enumerate() {
                let c = dot(qi, &w);
                axpy(-c, qi, &mut w);
                y[i] += c;
            }
        }
        let mut x = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = y[i];
            for j in i + 1..k {
                s -= self.r[i * k + j] * x[j];
            }
            x[i] = s / self.r[i * k + i];
        }
        x
    }

    pub fn residual_norm(&self, v: &[f64]) -> f64 {
        let mut w = v.to_vec();
        for _ in 0..2 {
            for qi in &self.q {
                let c = dot(qi, &w);
                axpy(-c, qi, &mut w);
            }
        }
        norm(&w)
    }
}

/// Orthonormal basis of the column space of `cols`, in first-occurrence order.
/// An all-zero input gives a basis with zero columns.
pub fn orthonormalize(cols: &DenseMatrix) -> DenseMatrix {
    OrthoBasis::spanning(cols.rows(), &cols.columns()).to_matrix()
}

/// `‖v − P v‖₂` for the orthogonal projector `P` onto the column space of
/// `basis_rows`. A basis with no columns gives `‖v‖₂`.
pub fn project_residual(v: &[f64], basis_rows: &DenseMatrix) -> Result<f64> {
    if v.len() != basis_rows.rows() {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} against basis with {} rows",
            v.len(),
            basis_rows.rows()
        )));
    }
    Ok(OrthoBasis::spanning(v.len(), &basis_rows.columns()).residual_norm(v))
}

/// Least-squares coefficients of `v` in the columns of `basis_rows`.
/// Fails with `RankDeficient` unless the columns are independent.
pub fn least_squares(basis_rows: &DenseMatrix, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != basis_rows.rows() {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} against basis with {} rows",
            v.len(),
            basis_rows.rows()
        )));
    }
    Ok(QrFactor::new(&basis_rows.columns())?.solve(v))
}

/// Completes a column from its samples: `basis_full · pinv(basis_rows) · v`.
pub fn subsampled_complete(
    basis_full: &DenseMatrix,
    basis_rows: &DenseMatrix,
    v: &[f64],
) -> Result<Vec<f64>> {
    if basis_full.cols() != basis_rows.cols() {
        return Err(Error::DimensionMismatch(format!(
            "full basis has {} columns, restricted basis {}",
            basis_full.cols(),
            basis_rows.cols()
        )));
    }
    let x = least_squares(basis_rows, v)?;
    Ok(basis_full.mul_vec(&x))
}

pub fn singular_values(a: &DenseMatrix) -> Vec<f64> {
    if a.rows() == 0 || a.cols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = a.to_nalgebra().singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Number of singular values above `tol · σ_max`.
pub fn numerical_rank(a: &DenseMatrix, tol: f64) -> usize {
    let s = singular_values(a);
    let Some(&smax) = s.first() else { return 0 };
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > tol * smax).count()
}

/// Largest angle from a vector of span(U) to span(V):
/// `θ(U,V) = max_{u∈U} min_{v∈V} θ(u,v)`. Not symmetric when the
/// dimensions differ. Both inputs must have orthonormal columns.
pub fn principal_angle(u: &DenseMatrix, v: &DenseMatrix) -> Result<f64> {
    if u.rows() != v.rows() {
        return Err(Error::DimensionMismatch(format!(
            "subspaces live in R^{} and R^{}",
            u.rows(),
            v.rows()
        )));
    }
    if u.cols() == 0 || v.cols() == 0 {
        return Err(Error::DimensionMismatch("empty basis".into()));
    }
    if u.cols() > v.cols() {
        // some direction of U is orthogonal to all of V
        return Ok(std::f64::consts::FRAC_PI_2);
    }
    let cross = v.transpose().matmul(u)?;
    let s = singular_values(&cross);
    // u.cols() singular values; the smallest governs the max angle
    let cos = s[u.cols() - 1].clamp(0.0, 1.0);
    let mut perp = u.clone();
    let back = v.matmul(&cross)?;
    for (p, b) in perp.data.iter_mut().zip(&back.data) {
        *p -= b;
    }
    let sin = singular_values(&perp).first().copied().unwrap_or(0.0).clamp(0.0, 1.0);
    Ok(sin.atan2(cos))
}

/// Coherence `μ(U) = (m/r) · max_i ‖U_{i:}‖²` of an orthonormal basis.
pub fn incoherence(u: &DenseMatrix) -> Result<f64> {
    if u.cols() == 0 {
        return Err(Error::DimensionMismatch("empty basis".into()));
    }
    let deviation = u.orthonormality_defect();
    if deviation > 1e-8 {
        return Err(Error::NotOrthonormal { deviation });
    }
    let max_row = (0..u.rows())
        .map(|i| dot(u.row(i), u.row(i)))
        .fold(0.0, f64::max);
    Ok(u.rows() as f64 / u.cols() as f64 * max_row)
}
