//! Dense linear algebra used by the pursuits.
//!
//! [`SensingMatrix`] holds the design matrix with unit-norm columns.
//! [`ProjectionState`] keeps an orthonormal basis for the span of the selected
//! columns together with the current residual `(I - P) y`, and grows one column
//! at a time by Gram–Schmidt with a single reorthogonalization pass.

use thiserror::Error;

/// Columns whose orthogonalized norm falls below this are treated as lying in
/// the span of the current basis.
pub const RANK_TOL: f64 = 1e-10;

/// Columns with a norm below this cannot be normalized.
pub const ZERO_COLUMN_TOL: f64 = 1e-12;

/// Relative residual norm at which a residual is declared to be zero.
pub const RESIDUAL_ZERO_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("column {0} has (numerically) zero norm")]
    ZeroColumn(usize),
    #[error("column {0} is numerically in the span of the selected columns")]
    RankDeficient(usize),
    #[error("column index {index} out of range for a matrix with {p} columns")]
    IndexOutOfRange { index: usize, p: usize },
    #[error("column {0} is already in the support")]
    AlreadySelected(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix must have at least one row and one column")]
    Empty,
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Dense `n x p` design matrix, row-major, every column of unit Euclidean norm.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingMatrix {
    data: Vec<f64>,
    n: usize,
    p: usize,
}

/// Normalizes every column of a raw row-major `n x p` matrix to unit norm.
pub fn normalize_columns(n: usize, p: usize, mut data: Vec<f64>) -> Result<SensingMatrix, LinalgError> {
    if n == 0 || p == 0 {
        return Err(LinalgError::Empty);
    }
    if data.len() != n * p {
        return Err(LinalgError::DimensionMismatch { expected: n * p, got: data.len() });
    }
    let mut norms = vec![0.0; p];
    for row in data.chunks_exact(p) {
        for (acc, v) in norms.iter_mut().zip(row) {
            *acc += v * v;
        }
    }
    for (j, s) in norms.iter_mut().enumerate() {
        *s = s.sqrt();
        if !(*s >= ZERO_COLUMN_TOL) {
            return Err(LinalgError::ZeroColumn(j));
        }
    }
    for row in data.chunks_exact_mut(p) {
        for (v, s) in row.iter_mut().zip(&norms) {
            *v /= s;
        }
    }
    Ok(SensingMatrix { data, n, p })
}

impl SensingMatrix {
    /// Builds a matrix from a slice of rows and normalizes its columns.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * p);
        for row in rows {
            if row.len() != p {
                return Err(LinalgError::DimensionMismatch { expected: p, got: row.len() });
            }
            data.extend_from_slice(row);
        }
        normalize_columns(n, p, data)
    }

    /// Builds a matrix from column vectors and normalizes them.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let p = columns.len();
        let n = columns.first().map_or(0, Vec::len);
        let mut data = vec![0.0; n * p];
        for (j, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(LinalgError::DimensionMismatch { expected: n, got: col.len() });
            }
            for (i, v) in col.iter().enumerate() {
                data[i * p + j] = *v;
            }
        }
        normalize_columns(n, p, data)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.p + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.p..(i + 1) * self.p]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        self.column_into(j, &mut out);
        out
    }

    pub fn column_into(&self, j: usize, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.data[i * self.p + j];
        }
    }

    /// Squared norm of column `j` as stored (1 up to rounding).
    pub fn column_norm_sq(&self, j: usize) -> f64 {
        (0..self.n).map(|i| self.get(i, j).powi(2)).sum()
    }

    /// `X^T v` for a length-`n` vector.
    pub fn correlate(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n, "correlate: vector length must equal n");
        let mut out = vec![0.0; self.p];
        for (row, vi) in self.data.chunks_exact(self.p).zip(v) {
            if *vi != 0.0 {
                axpy(*vi, row, &mut out);
            }
        }
        out
    }

    /// `X b` for a length-`p` vector.
    pub fn mul_vec(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.p, "mul_vec: vector length must equal p");
        self.data.chunks_exact(self.p).map(|row| dot(row, b)).collect()
    }

    /// `X_S c` where `c` holds one coefficient per entry of `support`.
    pub fn mul_support(&self, support: &[usize], coef: &[f64]) -> Vec<f64> {
        assert_eq!(support.len(), coef.len());
        self.data
            .chunks_exact(self.p)
            .map(|row| support.iter().zip(coef).map(|(&j, c)| row[j] * c).sum())
            .collect()
    }

    /// Gram matrix `X_S^T X_S`, row-major `|S| x |S|`.
    pub fn gram(&self, support: &[usize]) -> Vec<f64> {
        let k = support.len();
        let cols: Vec<Vec<f64>> = support.iter().map(|&j| self.column(j)).collect();
        let mut g = vec![0.0; k * k];
        for a in 0..k {
            for b in a..k {
                let v = dot(&cols[a], &cols[b]);
                g[a * k + b] = v;
                g[b * k + a] = v;
            }
        }
        g
    }
}

/// Orthogonal projection state for a growing, ordered column set.
///
/// Holds `Q` (orthonormal columns spanning `X_S`), the upper-triangular `R`
/// with `X_S = Q R`, the projections `Q^T y`, and the residual `(I - P_S) y`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionState {
    support: Vec<usize>,
    basis: Vec<Vec<f64>>,
    r_factor: Vec<Vec<f64>>,
    qty: Vec<f64>,
    residual: Vec<f64>,
    residual_norm: f64,
    y_norm: f64,
}

impl ProjectionState {
    /// Empty support: the residual is `y` itself.
    pub fn new(y: &[f64]) -> Self {
        let norm = norm2(y);
        ProjectionState {
            support: Vec::new(),
            basis: Vec::new(),
            r_factor: Vec::new(),
            qty: Vec::new(),
            residual: y.to_vec(),
            residual_norm: norm,
            y_norm: norm,
        }
    }

    /// Projection state after adding every index of `support` in order.
    pub fn with_support(matrix: &SensingMatrix, support: &[usize], y: &[f64]) -> Result<Self, LinalgError> {
        let mut state = ProjectionState::new(y);
        for &j in support {
            state.extend(matrix, j, y)?;
        }
        Ok(state)
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.support.contains(&index)
    }

    /// Orthonormal basis vectors, one per selected column.
    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    pub fn residual(&self) -> &[f64] {
        &self.residual
    }

    pub fn residual_norm(&self) -> f64 {
        self.residual_norm
    }

    /// Norm of the observation the state was started from.
    pub fn observation_norm(&self) -> f64 {
        self.y_norm
    }

    /// True once the residual is below `RESIDUAL_ZERO_TOL * ||y||`.
    pub fn residual_is_zero(&self) -> bool {
        self.residual_norm <= RESIDUAL_ZERO_TOL * self.y_norm
    }

    /// Removes the components of `v` along the basis (two passes) and returns
    /// the accumulated coefficients `Q^T v`.
    pub fn orthogonalize(&self, v: &mut [f64]) -> Vec<f64> {
        let mut coef = vec![0.0; self.basis.len()];
        for _ in 0..2 {
            for (q, c) in self.basis.iter().zip(coef.iter_mut()) {
                let h = dot(q, v);
                axpy(-h, q, v);
                *c += h;
            }
        }
        coef
    }

    /// Adds column `index` to the support and updates the residual.
    ///
    /// On error the state is left untouched.
    pub fn extend(&mut self, matrix: &SensingMatrix, index: usize, y: &[f64]) -> Result<(), LinalgError> {
        if index >= matrix.p() {
            return Err(LinalgError::IndexOutOfRange { index, p: matrix.p() });
        }
        if y.len() != matrix.n() {
            return Err(LinalgError::DimensionMismatch { expected: matrix.n(), got: y.len() });
        }
        if self.contains(index) {
            return Err(LinalgError::AlreadySelected(index));
        }
        let mut v = matrix.column(index);
        let mut coef = self.orthogonalize(&mut v);
        let vnorm = norm2(&v);
        if !(vnorm >= RANK_TOL) {
            return Err(LinalgError::RankDeficient(index));
        }
        v.iter_mut().for_each(|x| *x /= vnorm);
        coef.push(vnorm);

        let along = dot(&v, &self.residual);
        axpy(-along, &v, &mut self.residual);
        let norm = norm2(&self.residual);

        self.qty.push(dot(&v, y));
        self.r_factor.push(coef);
        self.basis.push(v);
        self.support.push(index);
        // Rounding can nudge the norm up by an ulp; projections never do.
        self.residual_norm = norm.min(self.residual_norm);
        Ok(())
    }

    /// Least-squares coefficients of `y` on the current support, in support
    /// order, by back-substitution in `R b = Q^T y`.
    pub fn coefficients(&self) -> Vec<f64> {
        let k = self.support.len();
        let mut b = self.qty.clone();
        for row in (0..k).rev() {
            let mut s = b[row];
            for col in row + 1..k {
                s -= self.r_factor[col][row] * b[col];
            }
            b[row] = s / self.r_factor[row][row];
        }
        b
    }
}

/// Consuming form of [`ProjectionState::extend`].
pub fn project_extend(
    mut state: ProjectionState,
    matrix: &SensingMatrix,
    index: usize,
    y: &[f64],
) -> Result<ProjectionState, LinalgError> {
    state.extend(matrix, index, y)?;
    Ok(state)
}

/// `argmin_b ||y - X_S b||_2`, coefficients in the order of `support`.
pub fn least_squares_on_support(matrix: &SensingMatrix, support: &[usize], y: &[f64]) -> Result<Vec<f64>, LinalgError> {
    Ok(ProjectionState::with_support(matrix, support, y)?.coefficients())
}
