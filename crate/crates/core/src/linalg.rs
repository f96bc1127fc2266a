//! Small dense linear algebra.
//!
//! The systems in this crate are tiny (p or pL on a side, a dozen or two at
//! most), so a compact row-major matrix with Cholesky and partially pivoted LU
//! covers every need. No BLAS, no sparsity.

use std::ops::{Index, IndexMut};

use crate::error::Error;
use crate::scalar::Scalar;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Build from row slices; every row must have the same length.
    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        assert!(!rows.is_empty(), "matrix needs at least one row");
        let cols = rows[0].len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Mat {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col_copy(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn mul(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Mat<T> {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Rank-1 update `self += c * x xᵀ` (square only).
    pub fn add_scaled_outer(&mut self, c: T, x: &[T]) {
        debug_assert_eq!(self.rows, self.cols);
        debug_assert_eq!(x.len(), self.rows);
        for i in 0..self.rows {
            let ci = c * x[i];
            let row = self.row_mut(i);
            for (j, xj) in x.iter().enumerate() {
                row[j] += ci * *xj;
            }
        }
    }

    pub fn scale(&mut self, c: T) {
        for v in &mut self.data {
            *v *= c;
        }
    }

    pub fn max_abs_diff(&self, other: &Mat<T>) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (*a - *b).abs())
            .fold(T::zero(), T::max)
    }

    pub fn max_asymmetry(&self) -> T {
        debug_assert_eq!(self.rows, self.cols);
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }
}

impl<T: Scalar> Index<(usize, usize)> for Mat<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T: Scalar> IndexMut<(usize, usize)> for Mat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut s = T::zero();
    for (x, y) in a.iter().zip(b) {
        s += *x * *y;
    }
    s
}

/// Lower-triangular Cholesky factor, or `None` when a pivot is not strictly
/// positive (matrix not positive definite to working precision).
pub fn cholesky<T: Scalar>(a: &Mat<T>) -> Option<Mat<T>> {
    let n = a.rows();
    assert_eq!(n, a.cols());
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > T::zero()) || !d.is_finite() {
            return None;
        }
        let dj = d.sqrt();
        l[(j, j)] = dj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / dj;
        }
    }
    Some(l)
}

/// Solve `L Lᵀ x = b` given the Cholesky factor `L`.
pub fn chol_solve<T: Scalar>(l: &Mat<T>, b: &[T]) -> Vec<T> {
    let n = l.rows();
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            let step = l[(i, k)] * y[k];
            y[i] -= step;
        }
        y[i] /= l[(i, i)];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            let step = l[(k, i)] * y[k];
            y[i] -= step;
        }
        y[i] /= l[(i, i)];
    }
    y
}

/// Solve an SPD system, reporting the smallest eigenvalue on failure.
pub fn spd_solve<T: Scalar>(a: &Mat<T>, b: &[T]) -> Result<Vec<T>, Error> {
    match cholesky(a) {
        Some(l) => Ok(chol_solve(&l, b)),
        None => Err(Error::NotPositiveDefinite {
            min_eigenvalue: min_symmetric_eigenvalue(a),
        }),
    }
}

/// Inverse of an SPD matrix via Cholesky solves against the identity.
pub fn spd_inverse<T: Scalar>(a: &Mat<T>) -> Result<Mat<T>, Error> {
    let n = a.rows();
    let l = cholesky(a).ok_or_else(|| Error::NotPositiveDefinite {
        min_eigenvalue: min_symmetric_eigenvalue(a),
    })?;
    let mut inv = Mat::zeros(n, n);
    let mut e = vec![T::zero(); n];
    for j in 0..n {
        e[j] = T::one();
        let col = chol_solve(&l, &e);
        for i in 0..n {
            inv[(i, j)] = col[i];
        }
        e[j] = T::zero();
    }
    // The solves are symmetric in exact arithmetic; enforce it.
    for i in 0..n {
        for j in (i + 1)..n {
            let m = (inv[(i, j)] + inv[(j, i)]) / T::of(2.0);
            inv[(i, j)] = m;
            inv[(j, i)] = m;
        }
    }
    Ok(inv)
}

/// Solve a general square system by LU with partial pivoting.
/// Returns `None` when a pivot falls below `rel_tol` times the largest
/// absolute entry of the input.
pub fn solve_square<T: Scalar>(a: &Mat<T>, b: &[T], rel_tol: T) -> Option<Vec<T>> {
    let n = a.rows();
    assert_eq!(n, a.cols());
    assert_eq!(n, b.len());
    let mut m = a.clone();
    let mut x = b.to_vec();
    let scale = m
        .data
        .iter()
        .map(|v| v.abs())
        .fold(T::zero(), T::max)
        .max(T::one());
    let floor = rel_tol * scale;
    for col in 0..n {
        let mut piv = col;
        let mut best = m[(col, col)].abs();
        for r in (col + 1)..n {
            let v = m[(r, col)].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if !(best > floor) {
            return None;
        }
        if piv != col {
            for j in 0..n {
                let tmp = m[(col, j)];
                m[(col, j)] = m[(piv, j)];
                m[(piv, j)] = tmp;
            }
            x.swap(col, piv);
        }
        let d = m[(col, col)];
        for r in (col + 1)..n {
            let f = m[(r, col)] / d;
            if f == T::zero() {
                continue;
            }
            for j in col..n {
                let step = f * m[(col, j)];
                m[(r, j)] -= step;
            }
            let step = f * x[col];
            x[r] -= step;
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for j in (i + 1)..n {
            s -= m[(i, j)] * x[j];
        }
        x[i] = s / m[(i, i)];
    }
    Some(x)
}

/// Column rank of a tall matrix by modified Gram-Schmidt with a relative
/// threshold.
pub fn column_rank<T: Scalar>(x: &Mat<T>, rel_tol: T) -> usize {
    let (n, p) = (x.rows(), x.cols());
    let mut basis: Vec<Vec<T>> = Vec::new();
    for j in 0..p {
        let mut v = x.col_copy(j);
        let norm0 = dot(&v, &v).sqrt();
        if norm0 == T::zero() {
            continue;
        }
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &v);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= c * *qi;
                }
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm > rel_tol * norm0 {
            let inv = T::one() / norm;
            for vi in &mut v {
                *vi *= inv;
            }
            basis.push(v);
        }
    }
    basis.len()
}

/// Smallest eigenvalue of a symmetric matrix (cyclic Jacobi), used for
/// diagnostics when a Cholesky factorization fails.
pub fn min_symmetric_eigenvalue<T: Scalar>(a: &Mat<T>) -> f64 {
    symmetric_eigenvalues(a)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

pub fn symmetric_eigenvalues<T: Scalar>(a: &Mat<T>) -> Vec<f64> {
    let n = a.rows();
    let mut m = Mat::<f64>::from_fn(n, n, |i, j| a[(i, j)].to_f64_lossy());
    for i in 0..n {
        for j in (i + 1)..n {
            let s = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = s;
            m[(j, i)] = s;
        }
    }
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(m[(i, j)].abs());
            }
        }
        if off < 1e-14 {
            break;
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let apq = m[(i, j)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (m[(j, j)] - m[(i, i)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let aik = m[(i, k)];
                    let ajk = m[(j, k)];
                    m[(i, k)] = c * aik - s * ajk;
                    m[(j, k)] = s * aik + c * ajk;
                }
                for k in 0..n {
                    let aki = m[(k, i)];
                    let akj = m[(k, j)];
                    m[(k, i)] = c * aki - s * akj;
                    m[(k, j)] = s * aki + c * akj;
                }
            }
        }
    }
    (0..n).map(|i| m[(i, i)]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn spd3() -> Mat<f64> {
        Mat::from_rows(&[
            vec![4.0, 1.0, 0.5],
            vec![1.0, 3.0, -0.25],
            vec![0.5, -0.25, 2.0],
        ])
    }

    #[test]
    fn cholesky_solve_roundtrip() {
        let a = spd3();
        let b = vec![1.0, -2.0, 0.5];
        let x = spd_solve(&a, &b).unwrap();
        let back = a.matvec(&x);
        for (u, v) in back.iter().zip(&b) {
            assert_abs_diff_eq!(u, v, epsilon = 1e-12);
        }
    }

    #[test]
    fn spd_inverse_matches_identity() {
        let a = spd3();
        let inv = spd_inverse(&a).unwrap();
        let prod = a.mul(&inv);
        assert!(prod.max_abs_diff(&Mat::identity(3)) < 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(cholesky(&a).is_none());
        let eig = symmetric_eigenvalues(&a);
        let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(min, -1.0, epsilon = 1e-10);
    }

    #[test]
    fn lu_solves_nonsymmetric() {
        let a = Mat::from_rows(&[vec![0.0, 2.0], vec![3.0, 1.0]]);
        let x = solve_square(&a, &[4.0, 5.0], 1e-12).unwrap();
        assert_abs_diff_eq!(x[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(x[1], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn lu_detects_singular() {
        let a = Mat::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(solve_square(&a, &[1.0, 2.0], 1e-12).is_none());
    }

    #[test]
    fn rank_counts_independent_columns() {
        let x = Mat::from_rows(&[
            vec![1.0, 2.0, 3.0],
            vec![1.0, 3.0, 4.0],
            vec![1.0, 4.0, 5.0],
            vec![1.0, 5.0, 6.0],
        ]);
        // third column = first + second
        assert_eq!(column_rank(&x, 1e-10), 2);
    }

    #[test]
    fn works_in_f32_too() {
        let a = Mat::<f32>::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]);
        let x = spd_solve(&a, &[1.0, 1.0]).unwrap();
        let back = a.matvec(&x);
        assert!((back[0] - 1.0).abs() < 1e-5 && (back[1] - 1.0).abs() < 1e-5);
    }
}
