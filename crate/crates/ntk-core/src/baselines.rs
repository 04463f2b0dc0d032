//! Comparison models: min-ℓ2 and min-ℓ1 overfitting with raw Fourier
//! features on the circle, and the closed-form Gaussian-feature MSE.

use crate::error::{CoreError, Result};
use crate::fm;
use crate::linalg::{self, CholeskyFactor};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

/// Dense Fourier design over training angles; the deterministic column
/// ordering is [1, cos t, sin t, cos 2t, sin 2t, ...] truncated to p columns,
/// columns unnormalized.
#[derive(Debug, Clone)]
pub struct FourierDesign {
    n: usize,
    p: usize,
    angles: Vec<f64>,
    /// Row-major n*p matrix.
    a: Vec<f64>,
}

impl FourierDesign {
    pub fn new(angles: Vec<f64>, num_features: usize) -> Result<Self> {
        let n = angles.len();
        if n == 0 || num_features == 0 {
            return Err(CoreError::Domain("empty design".into()));
        }
        let p = num_features;
        let mut a = vec![0.0f64; n * p];
        for (i, &theta) in angles.iter().enumerate() {
            let row = &mut a[i * p..(i + 1) * p];
            row[0] = 1.0;
            // cos/sin ladder by angle addition; no per-column trig.
            let (c1, s1) = (fm::cos(theta), fm::sin(theta));
            let (mut ck, mut sk) = (c1, s1);
            let mut col = 1;
            let mut _k = 1usize;
            while col < p {
                row[col] = ck;
                col += 1;
                if col < p {
                    row[col] = sk;
                    col += 1;
                }
                let c_next = ck * c1 - sk * s1;
                let s_next = sk * c1 + ck * s1;
                ck = c_next;
                sk = s_next;
                _k += 1;
            }
        }
        Ok(FourierDesign { n, p, angles, a })
    }

    pub fn rows(&self) -> usize {
        self.n
    }

    pub fn num_features(&self) -> usize {
        self.p
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.a[i * self.p..(i + 1) * self.p]
    }

    /// A v (length n) for a coefficient vector v (length p).
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| linalg::dot(self.row(i), v)).collect()
    }

    /// A^T s (length p) for a row-space vector s (length n).
    pub fn apply_transpose(&self, s: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0f64; self.p];
        for i in 0..self.n {
            linalg::axpy(s[i], self.row(i), &mut out);
        }
        out
    }

    /// The n*n Gram A A^T.
    fn row_gram(&self) -> Vec<f64> {
        let n = self.n;
        let mut g = vec![0.0f64; n * n];
        for i in 0..n {
            for j in i..n {
                let v = linalg::dot(self.row(i), self.row(j));
                g[i * n + j] = v;
                g[j * n + i] = v;
            }
        }
        g
    }

    /// Prediction at an arbitrary angle for a coefficient vector.
    pub fn predict_at(&self, beta: &[f64], theta: f64) -> f64 {
        let mut v = beta[0];
        let (c1, s1) = (fm::cos(theta), fm::sin(theta));
        let (mut ck, mut sk) = (c1, s1);
        let mut col = 1;
        while col < self.p {
            v += beta[col] * ck;
            col += 1;
            if col < self.p {
                v += beta[col] * sk;
                col += 1;
            }
            let c_next = ck * c1 - sk * s1;
            let s_next = sk * c1 + ck * s1;
            ck = c_next;
            sk = s_next;
        }
        v
    }
}

const BASELINE_INTERP_TOL: f64 = 1e-8;

/// Minimum-norm interpolator via the row Gram for p >= n; exact
/// interpolation to 1e-8 with one refinement round.
pub fn fourier_min_l2(design: &FourierDesign, y: &[f64]) -> Result<Vec<f64>> {
    let n = design.n;
    if y.len() != n {
        return Err(CoreError::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    let g = design.row_gram();
    let factor = CholeskyFactor::factor(&g, n)?;
    let mut s = factor.solve(y);
    let mut beta = design.apply_transpose(&s);
    // One refinement round.
    let r: Vec<f64> = design
        .apply(&beta)
        .iter()
        .zip(y.iter())
        .map(|(ai, yi)| yi - ai)
        .collect();
    let ds = factor.solve(&r);
    for i in 0..n {
        s[i] += ds[i];
    }
    beta = design.apply_transpose(&s);
    let gap = design
        .apply(&beta)
        .iter()
        .zip(y.iter())
        .map(|(ai, yi)| fm::abs(ai - yi))
        .fold(0.0f64, f64::max);
    if gap > BASELINE_INTERP_TOL * linalg::norm_inf(y).max(1.0) {
        return Err(CoreError::Convergence {
            residual: gap,
            max_iter: 1,
        });
    }
    Ok(beta)
}

#[inline]
fn soft_threshold(v: f64, kappa: f64) -> f64 {
    if v > kappa {
        v - kappa
    } else if v < -kappa {
        v + kappa
    } else {
        0.0
    }
}

/// Basis-pursuit solution returned by [`fourier_min_l1`].
#[derive(Debug, Clone)]
pub struct L1Solution {
    pub beta: Vec<f64>,
    pub iterations: usize,
    /// Final consensus gap ||x - z||_2 of the splitting iteration.
    pub consensus_gap: f64,
    /// ||A beta - y||_2 of the returned iterate.
    pub feasibility: f64,
    pub objective: f64,
}

/// Basis pursuit (min ||b||_1 subject to A b = y) by Douglas-Rachford
/// splitting: alternating exact projection onto the affine feasible set with
/// soft thresholding, with residual-balanced penalty updates. Every iterate
/// returned is exactly feasible; the best-objective feasible iterate wins.
/// The standard budget is tol = 1e-6 with a 1e5 iteration cap; looser
/// budgets only affect the objective's tail digits, never feasibility.
pub fn fourier_min_l1(
    design: &FourierDesign,
    y: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<L1Solution> {
    let n = design.n;
    let p = design.p;
    if y.len() != n {
        return Err(CoreError::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    let g = design.row_gram();
    let factor = CholeskyFactor::factor(&g, n)?;

    let project = |v: &[f64]| -> Vec<f64> {
        // v - A^T (A A^T)^{-1} (A v - y)
        let av = design.apply(v);
        let r: Vec<f64> = av.iter().zip(y.iter()).map(|(a, b)| a - b).collect();
        let s = factor.solve(&r);
        let corr = design.apply_transpose(&s);
        v.iter().zip(corr.iter()).map(|(a, b)| a - b).collect()
    };

    let mut z = vec![0.0f64; p];
    let mut u = vec![0.0f64; p];
    let mut rho = 1.0f64;
    let mut best_x: Vec<f64> = project(&z);
    let mut best_obj: f64 = best_x.iter().map(|v| fm::abs(*v)).sum();
    let mut iterations = 0;
    let mut consensus = f64::INFINITY;
    for it in 0..max_iter {
        iterations = it + 1;
        let v: Vec<f64> = z.iter().zip(u.iter()).map(|(zi, ui)| zi - ui).collect();
        let x = project(&v);
        let obj: f64 = x.iter().map(|v| fm::abs(*v)).sum();
        if obj < best_obj {
            best_obj = obj;
            best_x = x.clone();
        }
        let kappa = 1.0 / rho;
        let mut primal_sq = 0.0;
        let mut dual_sq = 0.0;
        for i in 0..p {
            let z_new = soft_threshold(x[i] + u[i], kappa);
            let dz = z_new - z[i];
            dual_sq += dz * dz;
            z[i] = z_new;
            let pr = x[i] - z[i];
            primal_sq += pr * pr;
            u[i] += pr;
        }
        let primal = fm::sqrt(primal_sq);
        let dual = rho * fm::sqrt(dual_sq);
        consensus = primal;
        let scale = linalg::norm2(&z).max(1.0);
        if primal <= tol * scale && dual <= tol * scale {
            break;
        }
        // Residual balancing; the projection is rho-free, so the penalty can
        // move freely as long as the scaled dual u tracks it.
        if primal > 10.0 * dual {
            rho *= 2.0;
            for ui in u.iter_mut() {
                *ui *= 0.5;
            }
        } else if dual > 10.0 * primal {
            rho *= 0.5;
            for ui in u.iter_mut() {
                *ui *= 2.0;
            }
        }
    }
    // Support polish: the optimum sits on a vertex with at most n nonzero
    // coefficients; re-solving on the sparse iterate's support removes the
    // splitting iteration's tail error when that support is right.
    let support: Vec<usize> = (0..p).filter(|&j| z[j] != 0.0).collect();
    if !support.is_empty() && support.len() <= n {
        let s = support.len();
        // Normal equations on the support: (A_S^T A_S) b = A_S^T y.
        let mut gs = vec![0.0f64; s * s];
        let mut rhs = vec![0.0f64; s];
        for i in 0..n {
            let row = design.row(i);
            for a in 0..s {
                rhs[a] += row[support[a]] * y[i];
                for b in a..s {
                    gs[a * s + b] += row[support[a]] * row[support[b]];
                }
            }
        }
        for a in 0..s {
            for b in 0..a {
                gs[a * s + b] = gs[b * s + a];
            }
        }
        if let Ok(f) = CholeskyFactor::factor(&gs, s) {
            let sol = f.solve(&rhs);
            let mut cand = vec![0.0f64; p];
            for (a, &j) in support.iter().enumerate() {
                cand[j] = sol[a];
            }
            let ab = design.apply(&cand);
            let mut sq = 0.0;
            for (a, b) in ab.iter().zip(y.iter()) {
                sq += (a - b) * (a - b);
            }
            let feas = fm::sqrt(sq);
            let obj: f64 = cand.iter().map(|v| fm::abs(*v)).sum();
            if feas <= tol * linalg::norm2(y).max(1.0) && obj < best_obj {
                best_obj = obj;
                best_x = cand;
            }
        }
    }
    let feas: f64 = {
        let ab = design.apply(&best_x);
        let mut sq = 0.0;
        for (a, b) in ab.iter().zip(y.iter()) {
            sq += (a - b) * (a - b);
        }
        fm::sqrt(sq)
    };
    if feas > tol * linalg::norm2(y).max(1.0) {
        return Err(CoreError::Convergence {
            residual: feas,
            max_iter,
        });
    }
    Ok(L1Solution {
        beta: best_x,
        iterations,
        consensus_gap: consensus,
        feasibility: feas,
        objective: best_obj,
    })
}

/// Closed-form Gaussian-feature test MSE:
/// ||f||^2 (1 - n/p) + sigma^2 n / (p - n - 1), defined for p >= n + 2.
pub fn gaussian_mse_formula(norm_f_sq: f64, n: usize, p: usize, sigma_sq: f64) -> Result<f64> {
    if norm_f_sq < 0.0 || sigma_sq < 0.0 {
        return Err(CoreError::Domain(
            "norms and variances must be nonnegative".into(),
        ));
    }
    if p < n + 2 {
        return Err(CoreError::Domain(format!(
            "gaussian_mse_formula needs p >= n + 2, got p = {p}, n = {n}"
        )));
    }
    let nf = n as f64;
    let pf = p as f64;
    Ok(norm_f_sq * (1.0 - nf / pf) + sigma_sq * nf / (pf - nf - 1.0))
}
