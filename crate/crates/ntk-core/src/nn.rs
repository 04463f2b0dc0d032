//! The actual two-layer bias-free ReLU network, bottom layer trained by
//! full-batch GD; the empirical comparison curve for the NTK model.
//!
//! Initialization pairs every bank direction with opposite top signs and
//! folds a 1/sqrt(m) factor into the top weights (m = 2p). The paired copies
//! cancel at initialization, so the untrained network outputs exactly zero
//! and its tangent kernel at init equals the NTK model's normalized Gram
//! H H^T / p entry for entry.

use crate::error::{CoreError, Result};
use crate::fm;
use crate::linalg;
use crate::ntk::{Dataset, NeuronBank};
use crate::sphere::UnitVector;
use alloc::vec;
use alloc::vec::Vec;

/// Squared top-weight magnitude times p; the paired tangent kernel at
/// initialization is 2 * this * (|C_{z,x}|/p) * x.z.
const TOP_SCALE_SQ_TIMES_P: f64 = 2.0;

/// Bottom-layer weights plus the frozen top layer of the reference network.
///
/// The output is `sum_k top[k] * 1{x.V[k] > 0} * V[k].x` at all times, by
/// definition.
#[derive(Debug, Clone)]
pub struct NNState {
    d: usize,
    /// Row-major m*d bottom weights.
    bottom: Vec<f64>,
    /// Fixed top weights (sign and scale).
    top: Vec<f64>,
    epoch: usize,
    /// Training MSE (mean squared residual) per epoch, starting with the
    /// value at initialization.
    losses: Vec<f64>,
}

impl NNState {
    /// A state from explicit weights; used for hand-built networks in tests
    /// and for inspecting training results.
    pub fn from_parts(bottom: Vec<f64>, top: Vec<f64>, d: usize) -> Result<Self> {
        if d < 2 || bottom.len() != top.len() * d || top.is_empty() {
            return Err(CoreError::Domain("inconsistent network shapes".into()));
        }
        Ok(NNState {
            d,
            bottom,
            top,
            epoch: 0,
            losses: Vec::new(),
        })
    }

    /// The paired, antisymmetric initial state for a bank: directions appear
    /// twice with opposite-signed top weights, so the initial output is zero.
    ///
    /// Top-weight magnitude sqrt(2/p) sets the output scale so that the
    /// figure budget (step 1/sqrt(p), 2000 epochs) drives the training error
    /// into the overfitting regime while keeping the step well inside the
    /// stable region; larger output scales also mean smaller bottom-weight
    /// displacements, i.e. dynamics closer to the tangent model.
    pub fn initial(bank: &NeuronBank) -> Self {
        let d = bank.d();
        let m = 2 * bank.p();
        let scale = fm::sqrt(TOP_SCALE_SQ_TIMES_P / bank.p() as f64);
        let mut bottom = Vec::with_capacity(m * d);
        let mut top = Vec::with_capacity(m);
        for j in 0..bank.p() {
            let dir = bank.direction(j);
            let s = bank.signs()[j] as f64;
            bottom.extend_from_slice(dir);
            top.push(s * scale);
            bottom.extend_from_slice(dir);
            top.push(-s * scale);
        }
        NNState {
            d,
            bottom,
            top,
            epoch: 0,
            losses: Vec::new(),
        }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn neurons(&self) -> usize {
        self.top.len()
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn losses(&self) -> &[f64] {
        &self.losses
    }

    pub fn bottom(&self) -> &[f64] {
        &self.bottom
    }

    pub fn bottom_mut(&mut self) -> &mut [f64] {
        &mut self.bottom
    }

    pub fn top(&self) -> &[f64] {
        &self.top
    }
}

/// Exact network output at the current weights.
pub fn predict_nn(state: &NNState, x: &UnitVector) -> Result<f64> {
    if x.dim() != state.d {
        return Err(CoreError::DimensionMismatch {
            expected: state.d,
            got: x.dim(),
        });
    }
    Ok(predict_nn_raw(state, x.coords()))
}

#[inline]
fn predict_nn_raw(state: &NNState, x: &[f64]) -> f64 {
    let d = state.d;
    let mut out = 0.0;
    for k in 0..state.top.len() {
        let v = &state.bottom[k * d..(k + 1) * d];
        let a = linalg::dot(x, v);
        if a > 0.0 {
            out += state.top[k] * a;
        }
    }
    out
}

/// Full-batch GD on half the summed squared training error, bottom weights
/// only. The gradient of an active neuron block for sample i is
/// `top[k] * residual_i * X_i`; inactive neurons receive zero (subgradient 0
/// at the kink). Returns the final state with the recorded loss trajectory.
pub fn train_nn(
    bank: &NeuronBank,
    data: &Dataset,
    epochs: usize,
    step_size: f64,
) -> Result<NNState> {
    if bank.d() != data.d() {
        return Err(CoreError::DimensionMismatch {
            expected: bank.d(),
            got: data.d(),
        });
    }
    let mut state = NNState::initial(bank);
    let n = data.n();
    let d = state.d;
    let m = state.top.len();
    let y = data.labels();
    let mut residual = vec![0.0f64; n];
    state.losses.reserve(epochs + 1);
    for epoch in 0..=epochs {
        // Forward pass.
        for i in 0..n {
            residual[i] = predict_nn_raw(&state, data.input(i)) - y[i];
        }
        let mse = linalg::dot(&residual, &residual) / n as f64;
        if !mse.is_finite() {
            return Err(CoreError::Divergence {
                step: epoch,
                step_size,
            });
        }
        state.losses.push(mse);
        if epoch == epochs {
            break;
        }
        // Backward pass: per-neuron block gradient over its active samples.
        for k in 0..m {
            let wk = state.top[k];
            let block = &mut state.bottom[k * d..(k + 1) * d];
            let mut grad = [0.0f64; 16];
            let grad = &mut grad[..d.min(16)];
            if d <= 16 {
                for i in 0..n {
                    let xi = data.input(i);
                    if linalg::dot(xi, block) > 0.0 {
                        linalg::axpy(wk * residual[i], xi, grad);
                    }
                }
                for (b, g) in block.iter_mut().zip(grad.iter()) {
                    *b -= step_size * g;
                }
            } else {
                let mut grad = vec![0.0f64; d];
                for i in 0..n {
                    let xi = data.input(i);
                    if linalg::dot(xi, block) > 0.0 {
                        linalg::axpy(wk * residual[i], xi, &mut grad);
                    }
                }
                for (b, g) in block.iter_mut().zip(grad.iter()) {
                    *b -= step_size * g;
                }
            }
        }
        state.epoch = epoch + 1;
    }
    Ok(state)
}

/// The default step size from the figure configuration: 1/sqrt(p).
pub fn default_nn_step(bank: &NeuronBank) -> f64 {
    1.0 / fm::sqrt(bank.p() as f64)
}

/// The network's tangent kernel at initialization evaluated between two
/// points: a fixed multiple of the NTK model's normalized Gram entry
/// (|C_{z,x}| / p) * x.z.
pub fn init_tangent_kernel(bank: &NeuronBank, x: &UnitVector, z: &UnitVector) -> Result<f64> {
    let count = crate::ntk::activation_count(bank, z, x)?;
    Ok(2.0 * TOP_SCALE_SQ_TIMES_P * x.dot(z)? * count as f64 / bank.p() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ntk::build_bank;
    use crate::rng::Rng;
    use crate::sphere::sample_unit;

    #[test]
    fn single_neuron_output() {
        // One neuron V = e1, top weight +1: output at e1 is 1{1>0} * 1 = 1.
        let e1 = UnitVector::basis(2, 0).unwrap();
        let state = NNState::from_parts(vec![1.0, 0.0], vec![1.0], 2).unwrap();
        assert_eq!(predict_nn(&state, &e1).unwrap(), 1.0);
        // No active neuron -> 0.
        assert_eq!(predict_nn(&state, &e1.negated()).unwrap(), 0.0);
    }

    #[test]
    fn block_scaling_is_homogeneous() {
        // Scaling one bottom block by c > 0 scales its contribution by c.
        let state = NNState::from_parts(vec![1.0, 0.0, 0.0, 1.0], vec![0.5, 0.25], 2).unwrap();
        let x = UnitVector::normalized(vec![1.0, 1.0]).unwrap();
        let base = predict_nn(&state, &x).unwrap();
        let mut scaled = state.clone();
        for w in &mut scaled.bottom_mut()[0..2] {
            *w *= 3.0;
        }
        let got = predict_nn(&scaled, &x).unwrap();
        let first_contrib = 0.5 * x[0];
        assert!((got - (base + 2.0 * first_contrib)).abs() < 1e-15);
    }

    #[test]
    fn paired_init_outputs_zero() {
        let bank = build_bank(64, 3, 3).unwrap();
        let state = NNState::initial(&bank);
        let mut rng = Rng::seed_from(7);
        for _ in 0..10 {
            let x = sample_unit(3, &mut rng).unwrap();
            assert_eq!(predict_nn(&state, &x).unwrap(), 0.0);
        }
    }

    #[test]
    fn labels_at_initial_outputs_freeze_weights() {
        // Labels equal to the initial outputs (all zero): zero gradient.
        let bank = build_bank(32, 2, 5).unwrap();
        let mut rng = Rng::seed_from(9);
        let inputs: Vec<UnitVector> = (0..6).map(|_| sample_unit(2, &mut rng).unwrap()).collect();
        let data = Dataset::from_parts(inputs, vec![0.0; 6], vec![0.0; 6]).unwrap();
        let init = NNState::initial(&bank);
        let trained = train_nn(&bank, &data, 20, 0.1).unwrap();
        assert_eq!(init.bottom(), trained.bottom());
        assert_eq!(trained.losses().first(), Some(&0.0));
    }

    #[test]
    fn training_is_deterministic() {
        let bank = build_bank(40, 2, 6).unwrap();
        let mut rng = Rng::seed_from(10);
        let inputs: Vec<UnitVector> = (0..8).map(|_| sample_unit(2, &mut rng).unwrap()).collect();
        let truth: Vec<f64> = inputs.iter().map(|x| x[0]).collect();
        let data = Dataset::from_parts(inputs, truth, vec![0.0; 8]).unwrap();
        let a = train_nn(&bank, &data, 50, 0.05).unwrap();
        let b = train_nn(&bank, &data, 50, 0.05).unwrap();
        assert_eq!(a.bottom(), b.bottom());
        assert_eq!(a.losses(), b.losses());
    }

    #[test]
    fn one_step_matches_tangent_prediction() {
        // Average discrepancy between the actual one-step output change and
        // the tangent-kernel one-step shrinks quadratically as the step
        // halves.
        let bank = build_bank(128, 2, 11).unwrap();
        let mut rng = Rng::seed_from(12);
        let inputs: Vec<UnitVector> = (0..10).map(|_| sample_unit(2, &mut rng).unwrap()).collect();
        let truth: Vec<f64> = inputs.iter().map(|x| x[0] + x[1]).collect();
        let data = Dataset::from_parts(inputs, truth, vec![0.0; 10]).unwrap();
        let tests: Vec<UnitVector> = (0..200)
            .map(|_| sample_unit(2, &mut rng).unwrap())
            .collect();

        let mean_disc = |gamma: f64| -> f64 {
            let after = train_nn(&bank, &data, 1, gamma).unwrap();
            let mut total = 0.0;
            for x in &tests {
                let actual = predict_nn(&after, x).unwrap();
                // Tangent one-step from zero output: gamma * sum_i y_i k(x, X_i).
                let mut lin = 0.0;
                for i in 0..data.n() {
                    let xi = UnitVector::new(data.input(i).to_vec()).unwrap();
                    lin += data.labels()[i] * init_tangent_kernel(&bank, x, &xi).unwrap();
                }
                total += (actual - gamma * lin).abs();
            }
            total / tests.len() as f64
        };

        let g0 = 0.5 / libm::sqrt(128.0);
        let d0 = mean_disc(g0);
        let d1 = mean_disc(g0 / 2.0);
        let d2 = mean_disc(g0 / 4.0);
        assert!(d1 <= 0.35 * d0 + 1e-12, "d0={d0:e} d1={d1:e}");
        assert!(d2 <= 0.35 * d1 + 1e-12, "d1={d1:e} d2={d2:e}");
    }
}
