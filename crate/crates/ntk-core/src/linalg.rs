//! Small dense linear algebra: the Gram matrices here are n-by-n with n in the
//! hundreds at most, so plain row-major `Vec<f64>` kernels are enough.

use crate::error::{CoreError, Result};
use crate::fm;
use alloc::vec;
use alloc::vec::Vec;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    fm::sqrt(dot(a, a))
}

pub fn norm_inf(a: &[f64]) -> f64 {
    let mut m = 0.0;
    for &v in a {
        let v = fm::abs(v);
        if v > m {
            m = v;
        }
    }
    m
}

/// y += alpha * x
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for i in 0..x.len() {
        y[i] += alpha * x[i];
    }
}

/// Dense symmetric matrix-vector product, row-major `a` of size n*n.
pub fn symv(a: &[f64], n: usize, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(a.len(), n * n);
    for i in 0..n {
        y[i] = dot(&a[i * n..(i + 1) * n], x);
    }
}

/// Cholesky factor of a symmetric positive-definite matrix.
///
/// Pivots below `rel_tol` times the largest diagonal entry are treated as
/// rank deficiency. One jitter retry (1e-12 * trace/n added to the diagonal)
/// is attempted by [`CholeskyFactor::factor`] before the error surfaces.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    n: usize,
    /// Lower-triangular factor, row-major n*n (upper part unused).
    l: Vec<f64>,
}

const PIVOT_REL_TOL: f64 = 1e-10;

fn try_factor(a: &[f64], n: usize) -> core::result::Result<Vec<f64>, usize> {
    let mut l = a.to_vec();
    let mut diag_max = 0.0f64;
    for i in 0..n {
        let d = fm::abs(a[i * n + i]);
        if d > diag_max {
            diag_max = d;
        }
    }
    let floor = PIVOT_REL_TOL * diag_max.max(f64::MIN_POSITIVE);
    for j in 0..n {
        let mut d = l[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > floor) {
            return Err(j);
        }
        let dj = fm::sqrt(d);
        l[j * n + j] = dj;
        for i in (j + 1)..n {
            let mut s = l[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / dj;
        }
    }
    Ok(l)
}

impl CholeskyFactor {
    /// Factors `a` (row-major n*n, symmetric PSD expected), with the jitter
    /// retry described above.
    pub fn factor(a: &[f64], n: usize) -> Result<Self> {
        assert_eq!(a.len(), n * n);
        match try_factor(a, n) {
            Ok(l) => Ok(CholeskyFactor { n, l }),
            Err(_) => {
                let trace: f64 = (0..n).map(|i| a[i * n + i]).sum();
                let jitter = 1e-12 * trace / n as f64;
                let mut aj = a.to_vec();
                for i in 0..n {
                    aj[i * n + i] += jitter;
                }
                match try_factor(&aj, n) {
                    Ok(l) => Ok(CholeskyFactor { n, l }),
                    Err(rank) => Err(CoreError::RankDeficient { rank, size: n }),
                }
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Solves A x = b in place of a copy of `b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let l = &self.l;
        let mut x = b.to_vec();
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= l[i * n + k] * x[k];
            }
            x[i] = s / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= l[k * n + i] * x[k];
            }
            x[i] = s / l[i * n + i];
        }
        x
    }
}

/// Largest-eigenvalue estimate of a symmetric matrix by power iteration.
pub fn power_iteration_max_eig(a: &[f64], n: usize, iters: usize) -> f64 {
    let mut v = vec![0.0; n];
    // Deterministic pseudo-random start so we do not sit in an eigenspace.
    let mut s = 0x243f_6a88_85a3_08d3u64;
    for vi in v.iter_mut() {
        *vi = (crate::rng::splitmix64(&mut s) >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
    }
    let mut w = vec![0.0; n];
    let mut lambda = 0.0;
    for _ in 0..iters {
        symv(a, n, &v, &mut w);
        let nw = norm2(&w);
        if nw == 0.0 {
            return 0.0;
        }
        for i in 0..n {
            v[i] = w[i] / nw;
        }
        lambda = nw;
    }
    lambda
}

/// Gershgorin upper bound on the largest eigenvalue of a symmetric matrix.
pub fn gershgorin_max_eig(a: &[f64], n: usize) -> f64 {
    let mut bound = f64::NEG_INFINITY;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            let v = a[i * n + j];
            row += if i == j { v } else { fm::abs(v) };
        }
        if row > bound {
            bound = row;
        }
    }
    bound
}

/// All eigenvalues of a symmetric matrix by the cyclic Jacobi method,
/// returned in ascending order. Intended for the n <= a-few-hundred Grams
/// used in the eigenvalue experiments and test oracles.
pub fn sym_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    assert_eq!(a.len(), n * n);
    let mut m = a.to_vec();
    let max_sweeps = 64;
    for _ in 0..max_sweeps {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[i * n + j] * m[i * n + j];
            }
        }
        if off < 1e-24 * n as f64 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if fm::abs(apq) < 1e-300 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let tau = (aqq - app) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + fm::sqrt(1.0 + tau * tau))
                } else {
                    -1.0 / (-tau + fm::sqrt(1.0 + tau * tau))
                };
                let c = 1.0 / fm::sqrt(1.0 + t * t);
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eig
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_spd_system() {
        // A = L L^T with a known L.
        let a = [4.0, 2.0, 0.0, 2.0, 5.0, 1.0, 0.0, 1.0, 3.0];
        let f = CholeskyFactor::factor(&a, 3).unwrap();
        let b = [1.0, 2.0, 3.0];
        let x = f.solve(&b);
        let mut ax = [0.0; 3];
        symv(&a, 3, &x, &mut ax);
        for i in 0..3 {
            assert!((ax[i] - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_reports_rank() {
        // Rank-1 matrix.
        let a = [1.0, 1.0, 1.0, 1.0];
        match CholeskyFactor::factor(&a, 2) {
            Err(CoreError::RankDeficient { rank, size }) => {
                assert_eq!(size, 2);
                assert_eq!(rank, 1);
            }
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn jacobi_matches_known_spectrum() {
        // diag(1, 2, 3) conjugated by a rotation has the same spectrum.
        let a = [2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0];
        let eig = sym_eigenvalues(&a, 3);
        let sqrt2 = core::f64::consts::SQRT_2;
        let want = [2.0 - sqrt2, 2.0, 2.0 + sqrt2];
        for (e, w) in eig.iter().zip(want.iter()) {
            assert!((e - w).abs() < 1e-10);
        }
    }

    #[test]
    fn power_iteration_finds_top_eig() {
        let a = [2.0, -1.0, 0.0, -1.0, 2.0, -1.0, 0.0, -1.0, 2.0];
        let est = power_iteration_max_eig(&a, 3, 50);
        assert!((est - (2.0 + core::f64::consts::SQRT_2)).abs() < 1e-8);
        assert!(gershgorin_max_eig(&a, 3) >= est);
    }
}
