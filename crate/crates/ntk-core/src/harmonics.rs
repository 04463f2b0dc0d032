//! Gegenbauer polynomials, axis-symmetric hyperspherical harmonics, and the
//! filter coefficients of the activation-overlap kernel
//! h(t) = t (pi - arccos t) / (2 pi).
//!
//! Harmonics are renormalized numerically so they are orthonormal under the
//! uniform probability measure on S^{d-1}; filter coefficients are therefore
//! defined up to a fixed positive constant, which leaves their zero/nonzero
//! classification untouched.

use crate::error::{CoreError, Result};
use crate::fm;
use crate::quadrature::QuadratureRule;
use alloc::format;
use alloc::vec::Vec;

/// Degree and ambient dimension of an axis-symmetric harmonic; `d >= 3`
/// (d = 2 routes to the Fourier closed form instead).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HarmonicIndex {
    pub l: usize,
    pub d: usize,
}

/// Gegenbauer polynomial C_i^lambda(t) by the forward three-term recursion
/// from C_0 = 1 and C_1 = 2 lambda t.
pub fn gegenbauer(i: usize, lambda: f64, t: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(CoreError::Domain(format!(
            "gegenbauer requires lambda > 0, got {lambda}"
        )));
    }
    if i == 0 {
        return Ok(1.0);
    }
    let mut prev = 1.0;
    let mut cur = 2.0 * lambda * t;
    for k in 0..i.saturating_sub(1) {
        let k = k as f64;
        // (k+2) C_{k+2} = 2 (lambda + k + 1) t C_{k+1} - (2 lambda + k) C_k
        let next = (2.0 * (lambda + k + 1.0) * t * cur - (2.0 * lambda + k) * prev) / (k + 2.0);
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// The kernel h as a function of t = cos(angle to the axis).
#[inline]
pub fn h_kernel(t: f64) -> f64 {
    let t = t.clamp(-1.0, 1.0);
    t * (core::f64::consts::PI - fm::acos(t)) / (2.0 * core::f64::consts::PI)
}

/// Axis-symmetric harmonics Xi_0^l for one ambient dimension, with the
/// normalizers precomputed once per degree and shared immutably afterwards
/// (concurrent readers need no synchronization).
#[derive(Debug, Clone)]
pub struct AxisHarmonics {
    d: usize,
    norms: Vec<f64>,
}

impl AxisHarmonics {
    /// Precomputes normalizers for degrees 0..=l_max using `rule`.
    pub fn new(d: usize, l_max: usize, rule: &QuadratureRule) -> Result<Self> {
        if d < 3 {
            return Err(CoreError::Unsupported(format!(
                "axis harmonics need d >= 3 (got {d}); use fourier_ch_closed for d = 2"
            )));
        }
        if rule.dimension() != d {
            return Err(CoreError::DimensionMismatch {
                expected: d,
                got: rule.dimension(),
            });
        }
        let lambda = (d as f64 - 2.0) / 2.0;
        let mut norms = Vec::with_capacity(l_max + 1);
        for l in 0..=l_max {
            let sq = rule.integrate(|theta| {
                let c = gegenbauer(l, lambda, fm::cos(theta)).unwrap();
                c * c
            });
            norms.push(1.0 / fm::sqrt(sq));
        }
        Ok(AxisHarmonics { d, norms })
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn max_degree(&self) -> usize {
        self.norms.len() - 1
    }

    /// Xi_0^l evaluated at cos(theta) = t.
    pub fn eval(&self, l: usize, t: f64) -> Result<f64> {
        let norm = *self.norms.get(l).ok_or_else(|| {
            CoreError::Domain(format!(
                "degree {l} beyond precomputed maximum {}",
                self.max_degree()
            ))
        })?;
        Ok(norm * gegenbauer(l, (self.d as f64 - 2.0) / 2.0, t)?)
    }
}

/// One-shot Xi_0^l(cos theta); builds the normalizer internally.
pub fn harmonic_axis(idx: HarmonicIndex, cos_theta: f64) -> Result<f64> {
    let rule = QuadratureRule::default_for(idx.d)?;
    let basis = AxisHarmonics::new(idx.d, idx.l, &rule)?;
    basis.eval(idx.l, cos_theta)
}

/// Degree-l filter coefficient of h: the projection of h(cos theta) onto
/// Xi_0^l under the uniform probability measure. Zero exactly at odd l >= 3.
pub fn c_h_coefficient(l: usize, d: usize, rule: &QuadratureRule) -> Result<f64> {
    let basis = AxisHarmonics::new(d, l, rule)?;
    Ok(rule.integrate(|theta| {
        let t = fm::cos(theta);
        h_kernel(t) * basis.eval(l, t).unwrap()
    }))
}

/// Coefficients below this magnitude are classified as exactly zero
/// (two orders below the 512-node quadrature error floor).
pub const ZERO_COEFFICIENT_THRESHOLD: f64 = 1e-8;

/// Closed-form Fourier coefficients of h for d = 2:
/// 1/8 at |k| = 1, (1/(2 pi^2)) (1/(k+1)^2 + 1/(k-1)^2) at even k,
/// zero at odd |k| >= 3.
pub fn fourier_ch_closed(k: i64) -> f64 {
    let ka = k.unsigned_abs();
    if ka == 1 {
        return 0.125;
    }
    if ka % 2 == 1 {
        return 0.0;
    }
    let k = k as f64;
    let pi2 = core::f64::consts::PI * core::f64::consts::PI;
    (1.0 / (2.0 * pi2)) * (1.0 / ((k + 1.0) * (k + 1.0)) + 1.0 / ((k - 1.0) * (k - 1.0)))
}

/// Moment Q(a, b) = E[cos^a(theta) Xi_0^b]; positive iff the harmonic degree
/// does not exceed the power (for even a, b), zero otherwise.
pub fn q_moment(a: usize, b: usize, d: usize, rule: &QuadratureRule) -> Result<f64> {
    let basis = AxisHarmonics::new(d, b, rule)?;
    Ok(rule.integrate(|theta| {
        let t = fm::cos(theta);
        fm::powi(t, a as u32) * basis.eval(b, t).unwrap()
    }))
}

/// Upper bound on the number of distinct activation sign patterns that `k`
/// directions can induce on S^{d-1}: 2^k when k <= d, else
/// 2 * sum_{i=0}^{d-1} C(k-1, i).
pub fn sign_pattern_bound(d: usize, k: usize) -> u128 {
    assert!(k >= 1 && d >= 2);
    if k <= d {
        return 1u128 << k;
    }
    let mut sum: u128 = 0;
    let mut binom: u128 = 1; // C(k-1, 0)
    for i in 0..d {
        if i > 0 {
            binom = binom * (k as u128 - i as u128) / i as u128;
        }
        sum += binom;
    }
    2 * sum
}
