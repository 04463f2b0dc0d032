//! The NTK feature operator of the two-layer bias-free ReLU network, Gram
//! assembly, the min-ℓ2 interpolating solver, GD training in the dual, the
//! infinite-width kernel, and row-space projection residuals.
//!
//! The feature row of an input x has block j equal to
//! `1{x . V0[j] > 0} x`, so the n-by-n Gram entry (i, j) is
//! `X_i . X_j` times the number of neurons active on both inputs. The feature
//! matrix H is never stored densely: every production path streams over
//! neurons and materializes at most one dp-vector.

use crate::error::{CoreError, Result};
use crate::fm;
use crate::linalg::{self, CholeskyFactor};
use crate::rng::{mix, Rng};
use crate::sphere::{self, UnitVector};
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

/// p random neuron directions plus fixed top-layer signs; the randomness
/// carrier of one model instance.
#[derive(Debug, Clone)]
pub struct NeuronBank {
    p: usize,
    d: usize,
    seed: u64,
    /// Row-major p*d unit directions.
    dirs: Vec<f64>,
    /// Top-layer signs in {-1, +1}.
    signs: Vec<i8>,
}

impl NeuronBank {
    pub fn p(&self) -> usize {
        self.p
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn direction(&self, j: usize) -> &[f64] {
        &self.dirs[j * self.d..(j + 1) * self.d]
    }

    pub fn directions_flat(&self) -> &[f64] {
        &self.dirs
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    /// Builds a bank from explicit unit directions (test and pseudo-ground
    /// -truth constructions). Signs default to +1 when `signs` is `None`.
    pub fn from_directions(dirs: Vec<UnitVector>, signs: Option<Vec<i8>>) -> Result<Self> {
        if dirs.is_empty() {
            return Err(CoreError::Domain("a bank needs at least one neuron".into()));
        }
        let d = dirs[0].dim();
        let p = dirs.len();
        let mut flat = Vec::with_capacity(p * d);
        for v in &dirs {
            if v.dim() != d {
                return Err(CoreError::DimensionMismatch {
                    expected: d,
                    got: v.dim(),
                });
            }
            flat.extend_from_slice(v.coords());
        }
        let signs = match signs {
            Some(s) => {
                if s.len() != p {
                    return Err(CoreError::DimensionMismatch {
                        expected: p,
                        got: s.len(),
                    });
                }
                if s.iter().any(|&v| v != 1 && v != -1) {
                    return Err(CoreError::Domain("top signs must be +1 or -1".into()));
                }
                s
            }
            None => vec![1i8; p],
        };
        Ok(NeuronBank {
            p,
            d,
            seed: 0,
            dirs: flat,
            signs,
        })
    }

    /// Checks the overparameterization assumption p >= n/d against a sample
    /// count; callers emit the warning, this never fails.
    pub fn satisfies_width_assumption(&self, n: usize) -> bool {
        self.p * self.d >= n
    }
}

/// Draws p i.i.d. uniform directions and i.i.d. uniform signs, deterministic
/// in `seed`. Exact duplicate directions are redrawn internally.
pub fn build_bank(p: usize, d: usize, seed: u64) -> Result<NeuronBank> {
    if p < 1 {
        return Err(CoreError::Domain("bank needs p >= 1".into()));
    }
    if d < 2 {
        return Err(CoreError::Domain(format!("bank needs d >= 2, got {d}")));
    }
    let mut rng = Rng::seed_from(mix(seed, 0x42414e4b)); // "BANK"
    let mut dirs = vec![0.0f64; p * d];
    let mut seen: BTreeSet<Vec<u64>> = BTreeSet::new();
    for j in 0..p {
        loop {
            sphere::sample_unit_into(&mut dirs[j * d..(j + 1) * d], &mut rng);
            let key: Vec<u64> = dirs[j * d..(j + 1) * d]
                .iter()
                .map(|c| c.to_bits())
                .collect();
            if seen.insert(key) {
                break;
            }
        }
    }
    let signs: Vec<i8> = (0..p)
        .map(|_| if rng.sign() > 0.0 { 1 } else { -1 })
        .collect();
    Ok(NeuronBank {
        p,
        d,
        seed,
        dirs,
        signs,
    })
}

/// n training pairs with separated truth and noise; labels are exactly
/// truth + noise.
#[derive(Debug, Clone)]
pub struct Dataset {
    n: usize,
    d: usize,
    /// Row-major n*d inputs.
    xs: Vec<f64>,
    truth: Vec<f64>,
    noise: Vec<f64>,
    labels: Vec<f64>,
}

impl Dataset {
    pub fn from_parts(inputs: Vec<UnitVector>, truth: Vec<f64>, noise: Vec<f64>) -> Result<Self> {
        let n = inputs.len();
        if n < 1 {
            return Err(CoreError::Domain("dataset needs n >= 1".into()));
        }
        if truth.len() != n || noise.len() != n {
            return Err(CoreError::DimensionMismatch {
                expected: n,
                got: truth.len().min(noise.len()),
            });
        }
        let d = inputs[0].dim();
        let mut xs = Vec::with_capacity(n * d);
        for v in &inputs {
            if v.dim() != d {
                return Err(CoreError::DimensionMismatch {
                    expected: d,
                    got: v.dim(),
                });
            }
            xs.extend_from_slice(v.coords());
        }
        // No two inputs parallel.
        for i in 0..n {
            for j in (i + 1)..n {
                let t = linalg::dot(&xs[i * d..(i + 1) * d], &xs[j * d..(j + 1) * d]);
                if fm::abs(t) > 1.0 - 1e-12 {
                    return Err(CoreError::Domain(format!(
                        "training inputs {i} and {j} are parallel"
                    )));
                }
            }
        }
        let labels = truth.iter().zip(noise.iter()).map(|(t, e)| t + e).collect();
        Ok(Dataset {
            n,
            d,
            xs,
            truth,
            noise,
            labels,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn input(&self, i: usize) -> &[f64] {
        &self.xs[i * self.d..(i + 1) * self.d]
    }

    pub fn inputs_flat(&self) -> &[f64] {
        &self.xs
    }

    pub fn truth(&self) -> &[f64] {
        &self.truth
    }

    pub fn noise(&self) -> &[f64] {
        &self.noise
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// Same inputs, different noise (used for noise-scaling sweeps).
    pub fn with_noise(&self, noise: Vec<f64>) -> Result<Self> {
        if noise.len() != self.n {
            return Err(CoreError::DimensionMismatch {
                expected: self.n,
                got: noise.len(),
            });
        }
        let labels = self
            .truth
            .iter()
            .zip(noise.iter())
            .map(|(t, e)| t + e)
            .collect();
        Ok(Dataset {
            labels,
            noise,
            ..self.clone()
        })
    }
}

/// |{j : z.V0[j] > 0 and x.V0[j] > 0}|; exact-zero dot products count as
/// inactive.
pub fn activation_count(bank: &NeuronBank, z: &UnitVector, x: &UnitVector) -> Result<usize> {
    if z.dim() != bank.d || x.dim() != bank.d {
        return Err(CoreError::DimensionMismatch {
            expected: bank.d,
            got: z.dim().min(x.dim()),
        });
    }
    Ok(activation_count_raw(bank, z.coords(), x.coords()))
}

#[inline]
pub(crate) fn activation_count_raw(bank: &NeuronBank, z: &[f64], x: &[f64]) -> usize {
    let d = bank.d;
    let mut count = 0usize;
    for j in 0..bank.p {
        let dir = &bank.dirs[j * d..(j + 1) * d];
        if linalg::dot(z, dir) > 0.0 && linalg::dot(x, dir) > 0.0 {
            count += 1;
        }
    }
    count
}

/// The n-by-n Gram matrix H H^T of one (bank, dataset) pair.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    n: usize,
    p: usize,
    entries: Vec<f64>,
}

impl GramMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Entrywise H H^T / p, the finite-width estimate of the limit kernel.
    pub fn normalized(&self) -> Vec<f64> {
        let inv = 1.0 / self.p as f64;
        self.entries.iter().map(|v| v * inv).collect()
    }
}

/// Streaming Gram accumulator: per-neuron active-pair counts, mergeable by
/// integer summation so chunked (possibly parallel) assembly is bit-exact.
#[derive(Debug, Clone)]
pub struct GramAccumulator {
    n: usize,
    counts: Vec<u32>,
}

impl GramAccumulator {
    pub fn new(n: usize) -> Self {
        GramAccumulator {
            n,
            counts: vec![0; n * n],
        }
    }

    /// Absorbs neurons `j0..j1`: per neuron, the active index set, then one
    /// increment per active pair.
    pub fn absorb(&mut self, bank: &NeuronBank, data: &Dataset, j0: usize, j1: usize) {
        let n = self.n;
        let d = bank.d;
        let mut active: Vec<u32> = Vec::with_capacity(n);
        for j in j0..j1 {
            let dir = &bank.dirs[j * d..(j + 1) * d];
            active.clear();
            for i in 0..n {
                if linalg::dot(data.input(i), dir) > 0.0 {
                    active.push(i as u32);
                }
            }
            for (ai, &a) in active.iter().enumerate() {
                let row = a as usize * n;
                for &b in &active[ai..] {
                    self.counts[row + b as usize] += 1;
                }
            }
        }
    }

    pub fn merge(&mut self, other: &GramAccumulator) {
        assert_eq!(self.n, other.n);
        for (a, b) in self.counts.iter_mut().zip(other.counts.iter()) {
            *a += b;
        }
    }

    pub fn finish(mut self, bank: &NeuronBank, data: &Dataset) -> GramMatrix {
        let n = self.n;
        // Mirror the upper triangle.
        for i in 0..n {
            for j in 0..i {
                self.counts[i * n + j] = self.counts[j * n + i];
            }
        }
        let mut entries = vec![0.0f64; n * n];
        for i in 0..n {
            for j in 0..n {
                let xij = linalg::dot(data.input(i), data.input(j));
                entries[i * n + j] = xij * self.counts[i * n + j] as f64;
            }
        }
        GramMatrix {
            n,
            p: bank.p,
            entries,
        }
    }
}

/// Assembles H H^T in one pass over neurons, cost O(p (n d + n^2)).
pub fn gram(bank: &NeuronBank, data: &Dataset) -> Result<GramMatrix> {
    if bank.d != data.d {
        return Err(CoreError::DimensionMismatch {
            expected: bank.d,
            got: data.d,
        });
    }
    let mut acc = GramAccumulator::new(data.n);
    acc.absorb(bank, data, 0, bank.p);
    Ok(acc.finish(bank, data))
}

/// The infinite-width kernel value for t = x.z.
#[inline]
pub fn kernel_inf_t(t: f64) -> f64 {
    let t = t.clamp(-1.0, 1.0);
    t * (core::f64::consts::PI - fm::acos(t)) / (2.0 * core::f64::consts::PI)
}

/// H^infinity kernel: x.z (pi - arccos(x.z)) / (2 pi).
pub fn kernel_inf(x: &UnitVector, z: &UnitVector) -> Result<f64> {
    Ok(kernel_inf_t(x.dot(z)?))
}

/// H^infinity of a dataset as a dense row-major n*n matrix.
pub fn gram_inf(data: &Dataset) -> Vec<f64> {
    let n = data.n;
    let mut m = vec![0.0f64; n * n];
    for i in 0..n {
        for j in i..n {
            let t = linalg::dot(data.input(i), data.input(j));
            let v = kernel_inf_t(t);
            m[i * n + j] = v;
            m[j * n + i] = v;
        }
    }
    m
}

/// H^T c for dual coefficients c: block j is
/// `sum_i c_i 1{X_i . V0[j] > 0} X_i`.
pub fn materialize_primal(bank: &NeuronBank, data: &Dataset, coeffs: &[f64]) -> Vec<f64> {
    let d = bank.d;
    let n = data.n;
    let mut primal = vec![0.0f64; bank.p * d];
    for j in 0..bank.p {
        let dir = &bank.dirs[j * d..(j + 1) * d];
        let block = &mut primal[j * d..(j + 1) * d];
        for i in 0..n {
            let xi = data.input(i);
            if linalg::dot(xi, dir) > 0.0 {
                linalg::axpy(coeffs[i], xi, block);
            }
        }
    }
    primal
}

/// H v for a dp-vector v: component i is
/// `sum_j 1{X_i . V0[j] > 0} X_i . v[j]`.
pub fn apply_features(bank: &NeuronBank, data: &Dataset, v: &[f64]) -> Vec<f64> {
    assert_eq!(v.len(), bank.p * bank.d);
    let d = bank.d;
    let n = data.n;
    let mut out = vec![0.0f64; n];
    for j in 0..bank.p {
        let dir = &bank.dirs[j * d..(j + 1) * d];
        let block = &v[j * d..(j + 1) * d];
        for i in 0..n {
            let xi = data.input(i);
            if linalg::dot(xi, dir) > 0.0 {
                out[i] += linalg::dot(xi, block);
            }
        }
    }
    out
}

/// Prediction at `x` from a materialized primal vector: cost O(p d).
pub fn predict_with_primal(bank: &NeuronBank, x: &[f64], primal: &[f64]) -> f64 {
    let d = bank.d;
    let mut out = 0.0;
    for j in 0..bank.p {
        let dir = &bank.dirs[j * d..(j + 1) * d];
        if linalg::dot(x, dir) > 0.0 {
            out += linalg::dot(x, &primal[j * d..(j + 1) * d]);
        }
    }
    out
}

const INTERP_TOL: f64 = 1e-8;

/// Dual coefficients alpha = (H H^T)^{-1} y with the materialized primal
/// min-norm interpolator H^T alpha.
#[derive(Debug)]
pub struct DualModel<'a> {
    bank: &'a NeuronBank,
    data: &'a Dataset,
    alpha: Vec<f64>,
    primal: Vec<f64>,
    factor: CholeskyFactor,
    gram_cond: f64,
    interp_gap: f64,
}

impl<'a> DualModel<'a> {
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn primal(&self) -> &[f64] {
        &self.primal
    }

    /// Estimated condition number of the Gram matrix.
    pub fn gram_cond(&self) -> f64 {
        self.gram_cond
    }

    /// Final interpolation gap ||H primal - y||_inf.
    pub fn interp_gap(&self) -> f64 {
        self.interp_gap
    }

    pub fn bank(&self) -> &NeuronBank {
        self.bank
    }

    pub fn data(&self) -> &Dataset {
        self.data
    }

    /// Trained-model output at a test point: sum over active neurons of
    /// x . primal[j], O(p d) via the materialized primal.
    pub fn predict(&self, x: &UnitVector) -> Result<f64> {
        if x.dim() != self.bank.d {
            return Err(CoreError::DimensionMismatch {
                expected: self.bank.d,
                got: x.dim(),
            });
        }
        Ok(predict_with_primal(self.bank, x.coords(), &self.primal))
    }

    /// The variance contribution h_x H^T (H H^T)^{-1} eps: prediction with
    /// the labels replaced by the noise vector.
    pub fn variance_term(&self, x: &UnitVector, eps: &[f64]) -> Result<f64> {
        if x.dim() != self.bank.d {
            return Err(CoreError::DimensionMismatch {
                expected: self.bank.d,
                got: x.dim(),
            });
        }
        if eps.len() != self.data.n {
            return Err(CoreError::DimensionMismatch {
                expected: self.data.n,
                got: eps.len(),
            });
        }
        let alpha_eps = self.factor.solve(eps);
        let primal_eps = materialize_primal(self.bank, self.data, &alpha_eps);
        Ok(predict_with_primal(self.bank, x.coords(), &primal_eps))
    }
}

fn estimate_cond(g: &GramMatrix, factor: &CholeskyFactor) -> f64 {
    let n = g.n;
    let lam_max = linalg::power_iteration_max_eig(&g.entries, n, 30);
    // Inverse iteration for the smallest eigenvalue.
    let mut v = vec![0.0f64; n];
    let mut s = 0x5eed_0fu64;
    for vi in v.iter_mut() {
        *vi = (crate::rng::splitmix64(&mut s) >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
    }
    let nv = linalg::norm2(&v);
    for vi in v.iter_mut() {
        *vi /= nv;
    }
    let mut lam_min = lam_max;
    for _ in 0..30 {
        let w = factor.solve(&v);
        let nw = linalg::norm2(&w);
        if nw == 0.0 {
            break;
        }
        lam_min = 1.0 / nw;
        for i in 0..n {
            v[i] = w[i] / nw;
        }
    }
    lam_max / lam_min
}

/// Solves the min-ℓ2 interpolation problem: alpha from (H H^T) alpha = y by
/// symmetric factorization (one jitter retry), primal materialized as
/// H^T alpha, interpolation checked to 1e-8 * max(1, ||y||_inf) with
/// iterative refinement against the directly computed residual.
pub fn solve_min_norm<'a>(bank: &'a NeuronBank, data: &'a Dataset) -> Result<DualModel<'a>> {
    let g = gram(bank, data)?;
    solve_min_norm_with_gram(bank, data, &g)
}

/// Same as [`solve_min_norm`] but reuses an assembled Gram matrix.
pub fn solve_min_norm_with_gram<'a>(
    bank: &'a NeuronBank,
    data: &'a Dataset,
    g: &GramMatrix,
) -> Result<DualModel<'a>> {
    let n = data.n;
    let y = data.labels();
    let factor = CholeskyFactor::factor(g.entries(), n)?;
    let mut alpha = factor.solve(y);
    let mut primal = materialize_primal(bank, data, &alpha);
    let tol = INTERP_TOL * linalg::norm_inf(y).max(1.0);
    let mut gap = f64::INFINITY;
    for _ in 0..6 {
        let hp = apply_features(bank, data, &primal);
        let r: Vec<f64> = y.iter().zip(hp.iter()).map(|(yi, hi)| yi - hi).collect();
        gap = linalg::norm_inf(&r);
        if gap <= tol {
            break;
        }
        let da = factor.solve(&r);
        for i in 0..n {
            alpha[i] += da[i];
        }
        let dp = materialize_primal(bank, data, &da);
        for (p, q) in primal.iter_mut().zip(dp.iter()) {
            *p += q;
        }
    }
    if gap > tol {
        return Err(CoreError::Convergence {
            residual: gap,
            max_iter: 6,
        });
    }
    let gram_cond = estimate_cond(g, &factor);
    Ok(DualModel {
        bank,
        data,
        alpha,
        primal,
        factor,
        gram_cond,
        interp_gap: gap,
    })
}

/// Default GD step: the reciprocal of an upper estimate of the largest Gram
/// eigenvalue (20 power iterations, capped by the Gershgorin bound).
pub fn default_gd_step(g: &GramMatrix) -> f64 {
    let est = linalg::power_iteration_max_eig(g.entries(), g.n, 20);
    let upper = (1.05 * est).min(linalg::gershgorin_max_eig(g.entries(), g.n));
    1.0 / upper
}

/// Full-batch GD on the linear NTK model from zero initialization, run in the
/// n-dimensional dual (residual recursion) and materialized to the primal at
/// the end. Converges to the min-norm interpolator for admissible steps.
pub fn gd_train_ntk(
    bank: &NeuronBank,
    data: &Dataset,
    steps: usize,
    step_size: f64,
) -> Result<Vec<f64>> {
    let g = gram(bank, data)?;
    let n = data.n;
    let y = data.labels();
    let mut a = vec![0.0f64; n];
    let mut ga = vec![0.0f64; n];
    let mut prev_res = f64::INFINITY;
    let mut rising = 0usize;
    for step in 0..steps {
        linalg::symv(g.entries(), n, &a, &mut ga);
        let mut res_sq = 0.0;
        for i in 0..n {
            let r = ga[i] - y[i];
            res_sq += r * r;
            a[i] -= step_size * r;
        }
        let res = fm::sqrt(res_sq);
        if res > prev_res {
            rising += 1;
            if rising >= 10 {
                return Err(CoreError::Divergence { step, step_size });
            }
        } else {
            rising = 0;
        }
        prev_res = res;
    }
    Ok(materialize_primal(bank, data, &a))
}

/// Distance of a parameter vector from the row space of H:
/// ||H^T beta - dv_star||_2 with beta solving (H H^T) beta = H dv_star.
///
/// When the Gram is numerically rank-deficient (near-coincident inputs make
/// that a real event in d = 2), the solve falls back to a ridge at the pivot
/// floor. Any beta keeps H^T beta inside the row space, so the returned
/// value stays a valid upper bound on the distance; the ridge only leaves
/// the unresolvable near-null directions unprojected.
pub fn projection_residual(bank: &NeuronBank, data: &Dataset, dv_star: &[f64]) -> Result<f64> {
    if dv_star.len() != bank.p * bank.d {
        return Err(CoreError::DimensionMismatch {
            expected: bank.p * bank.d,
            got: dv_star.len(),
        });
    }
    let g = gram(bank, data)?;
    let n = data.n;
    let factor = match CholeskyFactor::factor(g.entries(), n) {
        Ok(f) => f,
        Err(CoreError::RankDeficient { .. }) => {
            let mut ridged = g.entries().to_vec();
            let mut diag_max = 0.0f64;
            for i in 0..n {
                diag_max = diag_max.max(fm::abs(ridged[i * n + i]));
            }
            let tau = 1e-10 * diag_max.max(f64::MIN_POSITIVE);
            for i in 0..n {
                ridged[i * n + i] += tau;
            }
            CholeskyFactor::factor(&ridged, n)?
        }
        Err(e) => return Err(e),
    };
    let h_dv = apply_features(bank, data, dv_star);
    let beta = factor.solve(&h_dv);
    let projected = materialize_primal(bank, data, &beta);
    let mut sq = 0.0;
    for (p, q) in projected.iter().zip(dv_star.iter()) {
        let diff = p - q;
        sq += diff * diff;
    }
    Ok(fm::sqrt(sq))
}
