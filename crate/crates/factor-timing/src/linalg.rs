//! Minimal dense linear algebra for the regression models.
//!
//! The design matrices here are tiny (a handful of columns), so everything
//! is plain row-major `Vec<f64>` with Gaussian elimination. The solver is
//! rank-revealing: elimination aborts once a pivot falls below a relative
//! tolerance, which is how singular designs are detected.

/// Relative pivot tolerance for declaring a system rank-deficient.
pub const PIVOT_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix is singular to working precision (pivot below {PIVOT_RTOL} of largest)")]
    Singular,
    #[error("dimension mismatch: {0}")]
    Shape(String),
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            data: vec![0.0; rows * cols],
            rows,
            cols,
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let ncols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == ncols), "ragged rows");
        DenseMatrix {
            data: rows.iter().flatten().copied().collect(),
            rows: rows.len(),
            cols: ncols,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols)
    }

    pub fn has_only_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self' * self` (Gram matrix), always square `cols x cols`.
    pub fn gram(&self) -> DenseMatrix {
        let p = self.cols;
        let mut g = DenseMatrix::zeros(p, p);
        for row in self.iter_rows() {
            for i in 0..p {
                for j in i..p {
                    let v = g.get(i, j) + row[i] * row[j];
                    g.set(i, j, v);
                }
            }
        }
        for i in 0..p {
            for j in 0..i {
                g.set(i, j, g.get(j, i));
            }
        }
        g
    }

    /// `self' * y`.
    pub fn tr_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows, "vector length mismatch");
        let mut out = vec![0.0; self.cols];
        for (row, &yi) in self.iter_rows().zip(y) {
            for (o, &x) in out.iter_mut().zip(row) {
                *o += x * yi;
            }
        }
        out
    }

    pub fn mul_vec(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.cols, "vector length mismatch");
        self.iter_rows()
            .map(|row| row.iter().zip(b).map(|(x, w)| x * w).sum())
            .collect()
    }
}

/// Solve `a x = b` by Gaussian elimination with partial pivoting.
///
/// Fails with [`LinalgError::Singular`] when any pivot drops below
/// `PIVOT_RTOL` times the largest pivot seen.
pub fn solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let sols = solve_many(a, &[b.to_vec()])?;
    Ok(sols.into_iter().next().unwrap())
}

/// Solve `a X = B` for several right-hand sides with one elimination pass.
pub fn solve_many(a: &DenseMatrix, bs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, LinalgError> {
    let n = a.rows();
    if a.cols() != n {
        return Err(LinalgError::Shape(format!(
            "expected square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    for b in bs {
        if b.len() != n {
            return Err(LinalgError::Shape(format!(
                "rhs length {} does not match matrix order {n}",
                b.len()
            )));
        }
    }

    // Augmented working copy: [a | b0 b1 ...]
    let k = bs.len();
    let width = n + k;
    let mut w = vec![0.0; n * width];
    for r in 0..n {
        w[r * width..r * width + n].copy_from_slice(a.row(r));
        for (j, b) in bs.iter().enumerate() {
            w[r * width + n + j] = b[r];
        }
    }

    let mut max_pivot = 0.0f64;
    for col in 0..n {
        // Partial pivoting: largest remaining entry in this column.
        let (pivot_row, pivot_abs) = (col..n)
            .map(|r| (r, w[r * width + col].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        max_pivot = max_pivot.max(pivot_abs);
        if pivot_abs <= PIVOT_RTOL * max_pivot || pivot_abs == 0.0 {
            return Err(LinalgError::Singular);
        }
        if pivot_row != col {
            for j in 0..width {
                w.swap(pivot_row * width + j, col * width + j);
            }
        }
        let pivot = w[col * width + col];
        for r in col + 1..n {
            let factor = w[r * width + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for j in col..width {
                w[r * width + j] -= factor * w[col * width + j];
            }
        }
    }

    // Back substitution per right-hand side.
    let mut out = vec![vec![0.0; n]; k];
    for (j, x) in out.iter_mut().enumerate() {
        for row in (0..n).rev() {
            let mut acc = w[row * width + n + j];
            for c in row + 1..n {
                acc -= w[row * width + c] * x[c];
            }
            x[row] = acc / w[row * width + row];
        }
    }
    Ok(out)
}

/// Inverse via `solve_many` against the identity.
pub fn invert(a: &DenseMatrix) -> Result<DenseMatrix, LinalgError> {
    let n = a.rows();
    let eye: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .collect();
    let cols = solve_many(a, &eye)?;
    let mut inv = DenseMatrix::zeros(n, n);
    for (j, col) in cols.iter().enumerate() {
        for (i, &v) in col.iter().enumerate() {
            inv.set(i, j, v);
        }
    }
    Ok(inv)
}

/// Per-feature location/scale used to standardize model inputs.
///
/// Scale is the sample standard deviation (n-1 divisor). Zero-variance
/// features keep scale 1 so transforms stay finite; callers decide how to
/// treat them.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn identity(n_features: usize) -> Self {
        Standardizer {
            means: vec![0.0; n_features],
            stds: vec![1.0; n_features],
        }
    }

    pub fn is_identity(&self) -> bool {
        self.means.iter().all(|&m| m == 0.0) && self.stds.iter().all(|&s| s == 1.0)
    }

    /// Fit from the columns of `x`; returns the indices of zero-variance
    /// features alongside.
    pub fn fit(x: &DenseMatrix) -> (Self, Vec<usize>) {
        let n = x.rows();
        let p = x.cols();
        let mut means = vec![0.0; p];
        for row in x.iter_rows() {
            for (m, &v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n as f64;
        }
        let mut stds = vec![0.0; p];
        if n > 1 {
            for row in x.iter_rows() {
                for j in 0..p {
                    let d = row[j] - means[j];
                    stds[j] += d * d;
                }
            }
            for s in &mut stds {
                *s = (*s / (n as f64 - 1.0)).sqrt();
            }
        }
        let mut degenerate = Vec::new();
        for (j, s) in stds.iter_mut().enumerate() {
            if *s == 0.0 {
                degenerate.push(j);
                *s = 1.0;
            }
        }
        (Standardizer { means, stds }, degenerate)
    }

    pub fn transform_row(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.means.len(), "feature arity mismatch");
        x.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(&v, (&m, &s))| (v - m) / s)
            .collect()
    }

    pub fn transform(&self, x: &DenseMatrix) -> DenseMatrix {
        let rows: Vec<Vec<f64>> = x.iter_rows().map(|r| self.transform_row(r)).collect();
        DenseMatrix::from_rows(&rows)
    }

    pub fn n_features(&self) -> usize {
        self.means.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn solves_small_system() {
        let a = DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]);
        let x = solve(&a, &[5.0, 10.0]).unwrap();
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(x[1], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn singular_is_detected() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert_eq!(solve(&a, &[1.0, 2.0]), Err(LinalgError::Singular));
    }

    #[test]
    fn near_singular_is_detected() {
        // Second row differs from a multiple of the first by ~1e-14.
        let a = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0 + 1e-14]]);
        assert_eq!(solve(&a, &[1.0, 1.0]), Err(LinalgError::Singular));
    }

    #[test]
    fn inverse_roundtrips() {
        let a = DenseMatrix::from_rows(&[
            vec![4.0, 1.0, 0.5],
            vec![1.0, 3.0, 0.2],
            vec![0.5, 0.2, 2.0],
        ]);
        let inv = invert(&a).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let acc: f64 = (0..3).map(|k| a.get(i, k) * inv.get(k, j)).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(acc, want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn standardizer_flags_constant_columns() {
        let x = DenseMatrix::from_rows(&[vec![1.0, 5.0], vec![2.0, 5.0], vec![3.0, 5.0]]);
        let (st, degenerate) = Standardizer::fit(&x);
        assert_eq!(degenerate, vec![1]);
        assert_abs_diff_eq!(st.means[0], 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(st.stds[0], 1.0, epsilon = 1e-15);
        let z = st.transform_row(&[3.0, 5.0]);
        assert_abs_diff_eq!(z[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(z[1], 0.0, epsilon = 1e-15);
    }
}
