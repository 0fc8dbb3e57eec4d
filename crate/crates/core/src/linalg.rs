//! Dense real linear algebra used throughout the crate.
//!
//! Storage is row-major `f64`. Shape mismatches between operands are
//! programming errors and panic; numerical failures (indefinite matrices,
//! rank deficiency, non-stationary transition matrices) are reported through
//! [`Error`].

use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Matrix::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidInput(format!(
                "{} entries cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidInput("ragged rows".into()));
        }
        Matrix::from_vec(rows.len(), cols, rows.concat())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for (l, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(l)) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self * other'`
    pub fn matmul_t(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.cols, "matmul_t shape mismatch");
        Matrix::from_fn(self.rows, other.rows, |i, j| dot(self.row(i), other.row(j)))
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "matvec shape mismatch");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `self' * v`
    pub fn tr_matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, v.len(), "tr_matvec shape mismatch");
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for (o, &x) in out.iter_mut().zip(self.row(i)) {
                *o += x * vi;
            }
        }
        out
    }

    /// `self' * self`
    pub fn gram(&self) -> Matrix {
        let m = self.cols;
        let mut g = Matrix::zeros(m, m);
        for i in 0..self.rows {
            let r = self.row(i);
            for a in 0..m {
                let ra = r[a];
                if ra == 0.0 {
                    continue;
                }
                let g_row = &mut g.data[a * m..(a + 1) * m];
                for b in a..m {
                    g_row[b] += ra * r[b];
                }
            }
        }
        for a in 0..m {
            for b in 0..a {
                g.data[a * m + b] = g.data[b * m + a];
            }
        }
        g
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * c).collect(),
        }
    }

    pub fn add(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.data)
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()))
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    /// Symmetric within `rel_tol * (1 + max|A|)`.
    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        if !self.is_square() {
            return false;
        }
        let tol = rel_tol * (1.0 + self.max_abs());
        (0..self.rows).all(|i| (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= tol))
    }

    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Matrix {
        Matrix::from_fn(rows.len(), cols.len(), |i, j| self[(rows[i], cols[j])])
    }

    pub fn select_columns(&self, cols: &[usize]) -> Matrix {
        Matrix::from_fn(self.rows, cols.len(), |i, j| self[(i, cols[j])])
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).sum()
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| f64::max(m, x.abs()))
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Clone, Debug)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    /// Fails when a pivot falls to `1e-12 * max diagonal` or below.
    pub fn new(a: &Matrix) -> Result<Self> {
        assert!(a.is_square(), "cholesky of a non-square matrix");
        if !a.is_symmetric(1e-10) {
            return Err(Error::InvalidInput("matrix is not symmetric".into()));
        }
        let n = a.rows();
        let floor = 1e-12 * a.diagonal().iter().fold(0.0, |m: f64, d| m.max(*d));
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let lj = l.row(j);
            let pivot = a[(j, j)] - dot(&lj[..j], &lj[..j]);
            if !(pivot > floor) || pivot <= 0.0 {
                return Err(Error::NotPositiveDefinite { index: j, pivot });
            }
            let d = pivot.sqrt();
            l[(j, j)] = d;
            for i in j + 1..n {
                let s = a[(i, j)] - dot(&l.row(i)[..j], &l.row(j)[..j]);
                l[(i, j)] = s / d;
            }
        }
        Ok(Cholesky { l })
    }

    pub fn factor(&self) -> &Matrix {
        &self.l
    }

    pub fn solve_vec(&self, b: &[f64]) -> Vec<f64> {
        let n = self.l.rows();
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        for i in 0..n {
            let s = dot(&self.l.row(i)[..i], &x[..i]);
            x[i] = (x[i] - s) / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.l[(j, i)] * x[j];
            }
            x[i] = s / self.l[(i, i)];
        }
        x
    }

    pub fn solve(&self, b: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            let x = self.solve_vec(&b.column(j));
            for (i, v) in x.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        out
    }

    /// Diagonal of `A^{-1}` summed against a matrix: `trace(A^{-1} M)`.
    pub fn trace_inv_product(&self, m: &Matrix) -> f64 {
        (0..m.cols())
            .map(|j| self.solve_vec(&m.column(j))[j])
            .sum()
    }
}

/// Solves `A X = B` for symmetric positive definite `A`.
pub fn cholesky_solve(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    Ok(Cholesky::new(a)?.solve(b))
}

/// Householder QR of a tall matrix, kept for repeated least-squares solves
/// against the same design.
#[derive(Clone, Debug)]
pub struct QrFactor {
    t: usize,
    m: usize,
    // Householder vectors, column-major, each of length t (zeros above j).
    v: Vec<f64>,
    beta: Vec<f64>,
    // Upper triangular R, row-major m x m.
    r: Matrix,
}

impl QrFactor {
    /// Fails with [`Error::SingularDesign`] when `X'X` has a pivot
    /// `r_jj^2 <= 1e-10 * max r_ii^2`, or when there are fewer rows than
    /// columns.
    pub fn new(x: &Matrix) -> Result<Self> {
        let (t, m) = (x.rows(), x.cols());
        if t < m {
            return Err(Error::SingularDesign);
        }
        let mut a: Vec<f64> = (0..m).flat_map(|j| (0..t).map(move |i| (i, j))).map(|(i, j)| x[(i, j)]).collect();
        let mut v = vec![0.0; t * m];
        let mut beta = vec![0.0; m];
        let mut r = Matrix::zeros(m, m);
        for j in 0..m {
            let col = &a[j * t..(j + 1) * t];
            let norm = norm2(&col[j..]);
            let alpha = if col[j] > 0.0 { -norm } else { norm };
            let vj = &mut v[j * t..(j + 1) * t];
            vj[j..].copy_from_slice(&col[j..]);
            vj[j] -= alpha;
            let vnorm_sq = dot(&vj[j..], &vj[j..]);
            if vnorm_sq > 0.0 {
                beta[j] = 2.0 / vnorm_sq;
                let vj = &v[j * t..(j + 1) * t];
                for c in j..m {
                    let colc = &mut a[c * t..(c + 1) * t];
                    let s = beta[j] * dot(&vj[j..], &colc[j..]);
                    for (x, h) in colc[j..].iter_mut().zip(&vj[j..]) {
                        *x -= s * h;
                    }
                }
            }
            for c in j..m {
                r[(j, c)] = a[c * t + j];
            }
        }
        let diag_sq: Vec<f64> = (0..m).map(|j| r[(j, j)] * r[(j, j)]).collect();
        let largest = diag_sq.iter().fold(0.0, |acc: f64, d| acc.max(*d));
        if m > 0 && (largest == 0.0 || diag_sq.iter().any(|d| *d <= 1e-10 * largest)) {
            return Err(Error::SingularDesign);
        }
        Ok(QrFactor { t, m, v, beta, r })
    }

    pub fn solve(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.t);
        let (t, m) = (self.t, self.m);
        let mut qy = y.to_vec();
        for j in 0..m {
            if self.beta[j] == 0.0 {
                continue;
            }
            let vj = &self.v[j * t..(j + 1) * t];
            let s = self.beta[j] * dot(&vj[j..], &qy[j..]);
            for (q, h) in qy[j..].iter_mut().zip(&vj[j..]) {
                *q -= s * h;
            }
        }
        let mut b = qy[..m].to_vec();
        for i in (0..m).rev() {
            let mut s = b[i];
            for c in i + 1..m {
                s -= self.r[(i, c)] * b[c];
            }
            b[i] = s / self.r[(i, i)];
        }
        b
    }
}

/// Ordinary least squares `argmin ||y - X b||^2` via Householder QR.
pub fn least_squares(x: &Matrix, y: &[f64]) -> Result<Vec<f64>> {
    Ok(QrFactor::new(x)?.solve(y))
}

/// Largest singular value by power iteration on `M'M`.
pub fn operator_norm(m: &Matrix) -> f64 {
    let n = m.cols();
    if n == 0 || m.rows() == 0 {
        return 0.0;
    }
    // Deterministic, non-symmetric start so that structured matrices are not
    // started orthogonal to their top singular vector.
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.37 * ((i * 7 + 3) % 11) as f64 / 11.0).collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut sigma_sq = 0.0;
    for _ in 0..5000 {
        let w = m.matvec(&v);
        let u = m.tr_matvec(&w);
        let nu = norm2(&u);
        if nu == 0.0 {
            return 0.0;
        }
        let next = nu;
        v = u.into_iter().map(|x| x / nu).collect();
        if (next - sigma_sq).abs() <= 1e-14 * next {
            sigma_sq = next;
            break;
        }
        sigma_sq = next;
    }
    sigma_sq.sqrt()
}

/// Dominant eigenvalue modulus via norm doubling:
/// `rho ~ ||F^(2^m)||^(1/2^m)`, iterated until successive estimates differ by
/// less than `tol`.
///
/// The running power is rescaled at every squaring and its scale is tracked
/// in log space, so matrices with `rho > 1` are handled as well.
pub fn spectral_radius(f: &Matrix, tol: f64) -> Result<f64> {
    assert!(f.is_square(), "spectral radius of a non-square matrix");
    if f.rows() == 0 {
        return Ok(0.0);
    }
    if !f.is_finite() {
        return Err(Error::Overflow);
    }
    let mut power = f.clone();
    let mut log_scale = 0.0;
    let mut estimate = operator_norm(&power);
    if estimate == 0.0 {
        return Ok(0.0);
    }
    for m in 1..=60 {
        let s = power.max_abs();
        if s == 0.0 {
            return Ok(0.0);
        }
        power = power.scale(1.0 / s);
        log_scale += s.ln();
        power = power.matmul(&power);
        log_scale *= 2.0;
        if !power.is_finite() || !log_scale.is_finite() {
            return Err(Error::Overflow);
        }
        let nrm = operator_norm(&power);
        if nrm == 0.0 {
            return Ok(0.0);
        }
        let next = ((nrm.ln() + log_scale) / 2f64.powi(m)).exp();
        if !next.is_finite() {
            return Err(Error::Overflow);
        }
        if (next - estimate).abs() < tol {
            return Ok(next);
        }
        estimate = next;
    }
    Err(Error::NonConvergence("spectral radius doubling"))
}

/// Solves `G = F G F' + Omega` by the doubling iteration
/// `G <- G + A G A'`, `A <- A^2`, starting from `G = Omega`, `A = F`.
pub fn lyapunov_doubling(f: &Matrix, omega: &Matrix, tol: f64) -> Result<Matrix> {
    assert!(f.is_square() && omega.is_square() && f.rows() == omega.rows());
    let rho = spectral_radius(f, 1e-9)?;
    if rho >= 1.0 - 1e-8 {
        return Err(Error::NotStationary { rho });
    }
    let mut gamma = omega.clone();
    let mut a = f.clone();
    for _ in 0..200 {
        let inc = a.matmul(&gamma).matmul_t(&a);
        gamma = gamma.add(&inc);
        if inc.max_abs() < tol {
            return Ok(symmetrize(&gamma));
        }
        a = a.matmul(&a);
    }
    Err(Error::NonConvergence("lyapunov doubling"))
}

pub fn symmetrize(a: &Matrix) -> Matrix {
    Matrix::from_fn(a.rows(), a.cols(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Eigenvalues are returned in ascending order; eigenvector `i` is column `i`.
pub fn symmetric_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
    assert!(a.is_square());
    let n = a.rows();
    let mut s = symmetrize(a);
    let mut v = Matrix::identity(n);
    let total: f64 = s.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |j| *j != i).map(move |j| (i, j)))
            .map(|(i, j)| s[(i, j)] * s[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * total || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = s[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (s[(q, q)] - s[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let skp = s[(k, p)];
                    let skq = s[(k, q)];
                    s[(k, p)] = c * skp - sn * skq;
                    s[(k, q)] = sn * skp + c * skq;
                }
                for k in 0..n {
                    let spk = s[(p, k)];
                    let sqk = s[(q, k)];
                    s[(p, k)] = c * spk - sn * sqk;
                    s[(q, k)] = sn * spk + c * sqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - sn * vkq;
                    v[(k, q)] = sn * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[(i, i)].total_cmp(&s[(j, j)]));
    let values = order.iter().map(|&i| s[(i, i)]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(a: &Matrix) -> f64 {
    if a.rows() == 0 {
        return f64::INFINITY;
    }
    symmetric_eigen(a).0[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
        Matrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
        let b = random_matrix(rng, n, n);
        b.gram().add(&Matrix::identity(n).scale(0.1))
    }

    #[test]
    fn cholesky_identity_and_diagonal() {
        let i3 = Matrix::identity(3);
        assert_eq!(cholesky_solve(&i3, &i3).unwrap(), i3);
        let a = Matrix::from_diag(&[4.0, 9.0]);
        let b = Matrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        let x = cholesky_solve(&a, &b).unwrap();
        assert_relative_eq!(x[(0, 0)], 0.25, epsilon = 1e-15);
        assert_relative_eq!(x[(1, 0)], 1.0 / 9.0, epsilon = 1e-15);
    }

    #[test]
    fn cholesky_residual_on_random_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_spd(&mut rng, 8);
        let b = random_matrix(&mut rng, 8, 1);
        let x = cholesky_solve(&a, &b).unwrap();
        let resid = a.matmul(&x).sub(&b);
        assert!(resid.max_abs() <= 1e-8 * (1.0 + b.max_abs()));
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(Cholesky::new(&a), Err(Error::NotPositiveDefinite { index: 1, .. })));
        let z = Matrix::zeros(2, 2);
        assert!(matches!(Cholesky::new(&z), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn least_squares_small_cases() {
        let x = Matrix::identity(2);
        assert_eq!(least_squares(&x, &[3.0, 5.0]).unwrap(), vec![3.0, 5.0]);
        let ones = Matrix::from_rows(&[vec![1.0], vec![1.0], vec![1.0]]).unwrap();
        let b = least_squares(&ones, &[1.0, 2.0, 3.0]).unwrap();
        assert_relative_eq!(b[0], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn least_squares_noiseless_recovery() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_matrix(&mut rng, 10, 3);
        let beta = [0.7, -1.3, 2.1];
        let y = x.matvec(&beta);
        let b = least_squares(&x, &y).unwrap();
        for (u, v) in b.iter().zip(beta) {
            assert!((u - v).abs() < 1e-8);
        }
    }

    #[test]
    fn least_squares_detects_rank_deficiency() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]]).unwrap();
        assert!(matches!(least_squares(&x, &[1.0, 2.0, 3.0]), Err(Error::SingularDesign)));
        let wide = Matrix::zeros(2, 3);
        assert!(matches!(QrFactor::new(&wide), Err(Error::SingularDesign)));
    }

    #[test]
    fn least_squares_residual_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = random_matrix(&mut rng, 40, 6);
        let y: Vec<f64> = (0..40).map(|_| rng.random_range(-2.0..2.0)).collect();
        let b = least_squares(&x, &y).unwrap();
        let fitted = x.matvec(&b);
        let r: Vec<f64> = y.iter().zip(&fitted).map(|(a, f)| a - f).collect();
        assert!(max_abs(&x.tr_matvec(&r)) <= 1e-7 * max_abs(&x.tr_matvec(&y)));
    }

    #[test]
    fn spectral_radius_scalar_and_triangular() {
        let f = Matrix::from_rows(&[vec![0.5]]).unwrap();
        assert_relative_eq!(spectral_radius(&f, 1e-10).unwrap(), 0.5, epsilon = 1e-9);
        let tri = Matrix::from_rows(&[
            vec![0.3, 5.0, -2.0],
            vec![0.0, -0.8, 1.0],
            vec![0.0, 0.0, 0.6],
        ])
        .unwrap();
        assert!((spectral_radius(&tri, 1e-8).unwrap() - 0.8).abs() < 1e-6);
        assert_eq!(spectral_radius(&Matrix::zeros(3, 3), 1e-6).unwrap(), 0.0);
    }

    #[test]
    fn spectral_radius_rotation_and_explosive() {
        // Rotation by 60 degrees scaled by 0.9: complex pair of modulus 0.9.
        let (c, s) = (0.9 * 0.5, 0.9 * 3f64.sqrt() / 2.0);
        let f = Matrix::from_rows(&[vec![c, -s], vec![s, c]]).unwrap();
        assert!((spectral_radius(&f, 1e-10).unwrap() - 0.9).abs() < 1e-8);
        let big = Matrix::from_diag(&[3.0, 1.5]);
        assert!((spectral_radius(&big, 1e-8).unwrap() - 3.0).abs() < 1e-6);
    }

    #[test]
    fn lyapunov_scalar_cases() {
        let g = lyapunov_doubling(&Matrix::zeros(1, 1), &Matrix::identity(1), 1e-14).unwrap();
        assert_eq!(g[(0, 0)], 1.0);
        let f = Matrix::from_rows(&[vec![0.5]]).unwrap();
        let g = lyapunov_doubling(&f, &Matrix::identity(1), 1e-14).unwrap();
        assert_relative_eq!(g[(0, 0)], 4.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn lyapunov_random_stable_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let raw = random_matrix(&mut rng, 4, 4);
        let rho = spectral_radius(&raw, 1e-10).unwrap();
        let f = raw.scale(0.8 / rho);
        let omega = random_spd(&mut rng, 4);
        let tol = 1e-12;
        let g = lyapunov_doubling(&f, &omega, tol).unwrap();
        let resid = g.sub(&f.matmul(&g).matmul_t(&f)).sub(&omega);
        assert!(resid.max_abs() <= 10.0 * tol);
        assert!(g.is_symmetric(1e-10));
        assert!(Cholesky::new(&g).is_ok());
    }

    #[test]
    fn lyapunov_rejects_unit_root() {
        let f = Matrix::identity(2);
        assert!(matches!(
            lyapunov_doubling(&f, &Matrix::identity(2), 1e-10),
            Err(Error::NotStationary { .. })
        ));
    }

    #[test]
    fn jacobi_matches_known_spectrum() {
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let (vals, vecs) = symmetric_eigen(&a);
        assert_relative_eq!(vals[0], 1.0, epsilon = 1e-13);
        assert_relative_eq!(vals[1], 3.0, epsilon = 1e-13);
        let v0 = vecs.column(0);
        assert_relative_eq!(v0[0].abs(), 0.5f64.sqrt(), epsilon = 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let s = random_spd(&mut rng, 6);
        let (vals, vecs) = symmetric_eigen(&s);
        let recon = Matrix::from_fn(6, 6, |i, j| (0..6).map(|l| vecs[(i, l)] * vals[l] * vecs[(j, l)]).sum());
        assert!(recon.max_abs_diff(&s) < 1e-11);
    }

    #[test]
    fn operator_norm_of_diagonal() {
        let d = Matrix::from_diag(&[0.2, -3.0, 1.0]);
        assert_relative_eq!(operator_norm(&d), 3.0, epsilon = 1e-10);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn cholesky_inverts_multiply(seed in 0u64..10_000, n in 1usize..8) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = random_spd(&mut rng, n);
                let x = random_matrix(&mut rng, n, 2);
                let b = a.matmul(&x);
                let back = cholesky_solve(&a, &b).unwrap();
                prop_assert!(back.max_abs_diff(&x) <= 1e-7 * (1.0 + x.max_abs()));
            }

            #[test]
            fn triangular_spectral_radius_is_max_diagonal(seed in 0u64..10_000, n in 1usize..6) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut t = random_matrix(&mut rng, n, n);
                for i in 0..n {
                    for j in 0..i {
                        t[(i, j)] = 0.0;
                    }
                }
                let expected = t.diagonal().iter().fold(0.0f64, |m, d| m.max(d.abs()));
                let rho = spectral_radius(&t, 1e-9).unwrap();
                prop_assert!((rho - expected).abs() < 1e-4 * (1.0 + expected), "rho {} expected {}", rho, expected);
            }

            #[test]
            fn lyapunov_output_is_symmetric_psd(seed in 0u64..10_000, n in 1usize..6) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let raw = random_matrix(&mut rng, n, n);
                let rho = spectral_radius(&raw, 1e-9).unwrap().max(1e-3);
                let f = raw.scale(0.7 / rho);
                let omega = random_spd(&mut rng, n);
                let g = lyapunov_doubling(&f, &omega, 1e-13).unwrap();
                prop_assert!(g.is_symmetric(1e-10));
                let (vals, _) = symmetric_eigen(&g);
                prop_assert!(vals[0] >= -1e-10);
            }
        }
    }
}
