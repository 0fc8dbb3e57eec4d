//! Independent brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sparsevar::Matrix;

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
pub fn gauss_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(row, bi)| {
        let mut r = row.clone();
        r.push(*bi);
        r
    }).collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        m.swap(col, piv);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for c in col..=n {
                m[row][c] -= f * m[col][c];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| m[row][c] * x[c]).sum();
        x[row] = (m[row][n] - s) / m[row][row];
    }
    x
}

fn inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|j| gauss_solve(a, &(0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect::<Vec<_>>()))
        .collect();
    (0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect()
}

pub fn random_spd(m: usize, rng: &mut ChaCha8Rng) -> Matrix {
    let g = Matrix::from_fn(m + 2, m, |_, _| rng.sample(StandardNormal));
    let mut s = g.gram().scale(1.0 / (m + 2) as f64);
    let ridge: f64 = rng.random_range(0.02..0.3);
    s = s.add(&Matrix::identity(m).scale(ridge));
    Matrix::from_fn(m, m, |i, j| 0.5 * (s[(i, j)] + s[(j, i)]))
}

pub fn subsets_up_to(m: usize, r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 1u32..(1 << m) {
        if (mask.count_ones() as usize) <= r {
            out.push((0..m).filter(|j| mask & (1 << j) != 0).collect());
        }
    }
    out
}

/// Exact minimum of `2 b'v + v'Cv` over `||v||_1 <= rho` for every `b` in
/// the span of a fixed basis, by enumerating supports and sign patterns.
struct InnerQp {
    c: Vec<Vec<f64>>,
    basis: Vec<Vec<f64>>,
    /// (support, C_SS^{-1}, C_SS^{-1} basis_a restricted to S, sign patterns)
    faces: Vec<Face>,
    full_inv: Vec<Vec<f64>>,
}

struct Face {
    support: Vec<usize>,
    inv: Vec<Vec<f64>>,
    patterns: Vec<(Vec<f64>, Vec<f64>, f64)>,
}

impl InnerQp {
    fn new(c: Vec<Vec<f64>>, basis: Vec<Vec<f64>>) -> Self {
        let n = c.len();
        let mut faces = Vec::new();
        for mask in 1u32..(1 << n) {
            let support: Vec<usize> = (0..n).filter(|j| mask & (1 << j) != 0).collect();
            let sub: Vec<Vec<f64>> = support.iter().map(|&i| support.iter().map(|&j| c[i][j]).collect()).collect();
            let inv = inverse(&sub);
            let s = support.len();
            let mut patterns = Vec::new();
            for signs in 0u32..(1 << s) {
                let sigma: Vec<f64> = (0..s).map(|a| if signs & (1 << a) != 0 { 1.0 } else { -1.0 }).collect();
                let h: Vec<f64> = (0..s).map(|a| (0..s).map(|b| inv[a][b] * sigma[b]).sum()).collect();
                let shs: f64 = sigma.iter().zip(&h).map(|(x, y)| x * y).sum();
                patterns.push((sigma, h, shs));
            }
            faces.push(Face { support, inv, patterns });
        }
        let full_inv = if n > 0 { inverse(&c) } else { Vec::new() };
        InnerQp { c, basis, faces, full_inv }
    }

    fn value(&self, coeffs: &[f64], rho: f64) -> f64 {
        let n = self.c.len();
        if n == 0 {
            return 0.0;
        }
        let b: Vec<f64> = (0..n).map(|j| coeffs.iter().zip(&self.basis).map(|(u, e)| u * e[j]).sum()).collect();
        let objective = |v: &[f64]| -> f64 {
            let mut val = 0.0;
            for i in 0..n {
                val += 2.0 * b[i] * v[i];
                for j in 0..n {
                    val += v[i] * self.c[i][j] * v[j];
                }
            }
            val
        };
        let v0: Vec<f64> = (0..n).map(|i| -(0..n).map(|j| self.full_inv[i][j] * b[j]).sum::<f64>()).collect();
        if v0.iter().map(|x| x.abs()).sum::<f64>() <= rho {
            return objective(&v0);
        }
        let mut best = 0.0f64;
        for face in &self.faces {
            let s = face.support.len();
            let bs: Vec<f64> = face.support.iter().map(|&j| b[j]).collect();
            let cb: Vec<f64> = (0..s).map(|a| (0..s).map(|c| face.inv[a][c] * bs[c]).sum()).collect();
            for (sigma, h, shs) in &face.patterns {
                let scb: f64 = sigma.iter().zip(&cb).map(|(x, y)| x * y).sum();
                let half_mu = -(rho + scb) / shs;
                if half_mu < -1e-12 {
                    continue;
                }
                let mut v = vec![0.0; n];
                for a in 0..s {
                    v[face.support[a]] = -(cb[a] + half_mu * h[a]);
                }
                if v.iter().map(|x| x.abs()).sum::<f64>() <= rho * (1.0 + 1e-10) {
                    best = best.min(objective(&v));
                }
            }
        }
        best
    }
}

/// Brute-force restricted eigenvalue for `|R| <= r <= 2`: an angle grid of
/// step `1e-3` on the unit circle of `delta_R` (half the circle suffices by
/// symmetry) refined by golden-section search, with the complement
/// minimized exactly.
pub fn re_grid_oracle(psi: &Matrix, r: usize) -> f64 {
    assert!(r <= 2);
    let m = psi.rows();
    let mut best = f64::INFINITY;
    for subset in subsets_up_to(m, r) {
        let comp: Vec<usize> = (0..m).filter(|j| !subset.contains(j)).collect();
        let c: Vec<Vec<f64>> = comp.iter().map(|&i| comp.iter().map(|&j| psi[(i, j)]).collect()).collect();
        let basis: Vec<Vec<f64>> = subset.iter().map(|&a| comp.iter().map(|&j| psi[(a, j)]).collect()).collect();
        let qp = InnerQp::new(c, basis);
        let g = |u: &[f64]| -> f64 {
            let mut quad = 0.0;
            for (a, &ia) in subset.iter().enumerate() {
                for (b, &ib) in subset.iter().enumerate() {
                    quad += u[a] * psi[(ia, ib)] * u[b];
                }
            }
            let rho = 3.0 * u.iter().map(|x| x.abs()).sum::<f64>();
            quad + qp.value(u, rho)
        };
        if subset.len() == 1 {
            best = best.min(g(&[1.0]));
            continue;
        }
        let at = |th: f64| g(&[th.cos(), th.sin()]);
        let step = 1e-3;
        let n = (std::f64::consts::PI / step).ceil() as usize;
        let (mut th_best, mut v_best) = (0.0, f64::INFINITY);
        for i in 0..n {
            let th = i as f64 * step;
            let v = at(th);
            if v < v_best {
                v_best = v;
                th_best = th;
            }
        }
        let (mut lo, mut hi) = (th_best - step, th_best + step);
        let gr = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..60 {
            let a = hi - gr * (hi - lo);
            let b = lo + gr * (hi - lo);
            let (fa, fb) = (at(a), at(b));
            v_best = v_best.min(fa).min(fb);
            if fa < fb {
                hi = b;
            } else {
                lo = a;
            }
        }
        best = best.min(v_best);
    }
    best
}

/// `(1/T)||y - X b||^2 + 2 lambda sum_j w_j |b_j|`, computed from the data.
pub fn lasso_objective(x: &Matrix, y: &[f64], beta: &[f64], lambda: f64, weights: &[f64]) -> f64 {
    let t = x.rows() as f64;
    let mut rss = 0.0;
    for r in 0..x.rows() {
        let fit: f64 = x.row(r).iter().zip(beta).map(|(a, b)| a * b).sum();
        rss += (y[r] - fit).powi(2);
    }
    let pen: f64 = beta.iter().zip(weights).map(|(b, w)| w * b.abs()).sum();
    rss / t + 2.0 * lambda * pen
}

/// Two-dimensional grid minimizer with successive zooming.
pub fn grid_lasso_2d(x: &Matrix, y: &[f64], lambda: f64, weights: &[f64]) -> (f64, [f64; 2]) {
    assert_eq!(x.cols(), 2);
    let (mut c0, mut c1) = (0.0, 0.0);
    let mut half = 10.0;
    let mut best = (f64::INFINITY, [0.0, 0.0]);
    for _ in 0..10 {
        let n = 100;
        for i in 0..=2 * n {
            for j in 0..=2 * n {
                let b = [c0 + half * (i as f64 - n as f64) / n as f64, c1 + half * (j as f64 - n as f64) / n as f64];
                let v = lasso_objective(x, y, &b, lambda, weights);
                if v < best.0 {
                    best = (v, b);
                }
            }
        }
        c0 = best.1[0];
        c1 = best.1[1];
        half /= 8.0;
    }
    // zero coordinates are special for the penalty
    for b in [[0.0, best.1[1]], [best.1[0], 0.0], [0.0, 0.0]] {
        let v = lasso_objective(x, y, &b, lambda, weights);
        if v < best.0 {
            best = (v, b);
        }
    }
    best
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
