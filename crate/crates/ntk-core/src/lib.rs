//! Numeric core for min-ℓ2-norm overfitting on the two-layer bias-free ReLU
//! NTK model over the unit hyper-sphere.
//!
//! The crate is `no_std` (alloc only) and fully deterministic: all float math
//! routes through [`libm`] and all randomness through the seeded generators in
//! [`rng`], so results are bit-identical across platforms and thread counts.
//!
//! Module map:
//! - [`sphere`] — uniform sampling on S^{d-1}, cap areas, hemisphere overlap
//! - [`harmonics`] — Gegenbauer polynomials, axis harmonics, filter coefficients
//! - [`ntk`] — feature operator, Gram assembly, min-norm solver, GD trainer
//! - [`ground_truth`] — target families, pseudo ground-truths, infinite-width limit
//! - [`nn`] — the reference two-layer ReLU network trained by full-batch GD
//! - [`baselines`] — Fourier-feature min-ℓ2/min-ℓ1 and the Gaussian-feature MSE
//! - [`bounds`] — closed-form bound evaluators (J_m, C_d, eigenvalue bounds, ...)

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod baselines;
pub mod bounds;
mod error;
mod fm;
pub mod ground_truth;
pub mod harmonics;
pub mod linalg;
pub mod nn;
pub mod ntk;
pub mod quadrature;
pub mod rng;
pub mod special;
pub mod sphere;

pub use error::{CoreError, Result};
pub use sphere::UnitVector;
