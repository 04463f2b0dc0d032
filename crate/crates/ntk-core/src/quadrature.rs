//! Gauss-Legendre quadrature and the colatitude rule used by the harmonic
//! analysis: nodes on [0, pi] with the sin^{d-2} marginal density folded in
//! and renormalized to a probability measure.

use crate::error::{CoreError, Result};
use crate::fm;
use alloc::format;
use alloc::vec::Vec;

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 2);
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = fm::cos(core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5));
        let mut pp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n(x) and P_n'(x) by the recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / pp;
            x -= dx;
            if fm::abs(dx) < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * pp * pp);
        nodes.push(x);
        weights.push(w);
    }
    // Mirror to the full set, ascending in x.
    let mut xs = Vec::with_capacity(n);
    let mut ws = Vec::with_capacity(n);
    for i in (0..m).rev() {
        // nodes[i] are the positive-side roots in decreasing order of cos arg
        xs.push(-nodes[i]);
        ws.push(weights[i]);
    }
    let skip = if n % 2 == 1 { 1 } else { 0 };
    for i in skip..m {
        xs.push(nodes[i]);
        ws.push(weights[i]);
    }
    (xs, ws)
}

/// Quadrature rule for the colatitude angle on [0, pi].
///
/// Weights carry the sin^{d-2} density of the uniform measure's colatitude
/// marginal and sum to one, so `integrate(f)` approximates E[f(theta)] under
/// the uniform distribution on S^{d-1}.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    d: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// Builds the rule for ambient dimension `d` with `n_nodes` Gauss-Legendre
    /// points (at least 64).
    pub fn colatitude(d: usize, n_nodes: usize) -> Result<Self> {
        if d < 2 {
            return Err(CoreError::Domain(format!(
                "dimension must be >= 2, got {d}"
            )));
        }
        if n_nodes < 64 {
            return Err(CoreError::Domain(format!(
                "quadrature rule needs at least 64 nodes, got {n_nodes}"
            )));
        }
        let (xs, ws) = gauss_legendre(n_nodes);
        let half_pi = core::f64::consts::PI / 2.0;
        let mut nodes = Vec::with_capacity(n_nodes);
        let mut weights = Vec::with_capacity(n_nodes);
        let mut total = 0.0;
        for (x, w) in xs.iter().zip(ws.iter()) {
            let theta = half_pi * (x + 1.0);
            let density = fm::powi(fm::sin(theta), (d - 2) as u32);
            let weight = w * half_pi * density;
            nodes.push(theta);
            weights.push(weight);
            total += weight;
        }
        for w in weights.iter_mut() {
            *w /= total;
        }
        Ok(QuadratureRule { d, nodes, weights })
    }

    /// Default 512-node rule.
    pub fn default_for(d: usize) -> Result<Self> {
        Self::colatitude(d, 512)
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integrates `f(theta)` against the normalized colatitude marginal.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        let mut s = 0.0;
        for (&t, &w) in self.nodes.iter().zip(self.weights.iter()) {
            s += w * f(t);
        }
        s
    }
}
