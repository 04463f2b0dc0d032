//! Sampling and closed-form geometric quantities on the unit hyper-sphere:
//! cap-area fractions and the two-hemisphere overlap probability.

use crate::error::{CoreError, Result};
use crate::fm;
use crate::linalg;
use crate::rng::Rng;
use crate::special::reg_inc_beta;
use alloc::format;
use alloc::vec::Vec;

const UNIT_NORM_TOL: f64 = 1e-12;

/// A point on S^{d-1}, d >= 2; the Euclidean norm is 1 within 1e-12.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector {
    coords: Vec<f64>,
}

impl UnitVector {
    /// Validates an already-normalized vector.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(CoreError::Domain(format!(
                "unit vectors need dimension >= 2, got {}",
                coords.len()
            )));
        }
        let norm = linalg::norm2(&coords);
        if fm::abs(norm - 1.0) > UNIT_NORM_TOL {
            return Err(CoreError::Domain(format!(
                "vector norm {norm} is not 1 within {UNIT_NORM_TOL}"
            )));
        }
        Ok(UnitVector { coords })
    }

    /// Normalizes an arbitrary nonzero vector onto the sphere.
    pub fn normalized(mut coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(CoreError::Domain(format!(
                "unit vectors need dimension >= 2, got {}",
                coords.len()
            )));
        }
        let norm = linalg::norm2(&coords);
        if norm == 0.0 || !norm.is_finite() {
            return Err(CoreError::Domain("cannot normalize a zero vector".into()));
        }
        for c in coords.iter_mut() {
            *c /= norm;
        }
        Ok(UnitVector { coords })
    }

    /// The `k`-th standard basis vector in dimension `d`.
    pub fn basis(d: usize, k: usize) -> Result<Self> {
        if d < 2 || k >= d {
            return Err(CoreError::Domain(format!(
                "basis index {k} out of range for d={d}"
            )));
        }
        let mut coords = alloc::vec![0.0; d];
        coords[k] = 1.0;
        Ok(UnitVector { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dot(&self, other: &UnitVector) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(CoreError::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(linalg::dot(&self.coords, &other.coords))
    }

    /// The antipode.
    pub fn negated(&self) -> Self {
        UnitVector {
            coords: self.coords.iter().map(|c| -c).collect(),
        }
    }
}

impl core::ops::Deref for UnitVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.coords
    }
}

/// Draws a uniform point on S^{d-1} by normalizing a standard-normal vector.
pub fn sample_unit(d: usize, rng: &mut Rng) -> Result<UnitVector> {
    if d < 2 {
        return Err(CoreError::Domain(format!(
            "sample_unit needs d >= 2, got {d}"
        )));
    }
    loop {
        let coords: Vec<f64> = (0..d).map(|_| rng.normal()).collect();
        let norm = linalg::norm2(&coords);
        if norm > 1e-8 {
            return UnitVector::normalized(coords);
        }
        // Degenerate draw; redraw (probability ~0).
    }
}

/// Writes a uniform direction into `out` without allocating.
pub(crate) fn sample_unit_into(out: &mut [f64], rng: &mut Rng) {
    loop {
        for c in out.iter_mut() {
            *c = rng.normal();
        }
        let norm = linalg::norm2(out);
        if norm > 1e-8 {
            for c in out.iter_mut() {
                *c /= norm;
            }
            return;
        }
    }
}

// The closed-form cap formulas below are only valid up to the hemisphere;
// allow a hair of floating slack on the boundary.
const BOUNDARY_SLACK: f64 = 1e-12;

/// Fraction of the sphere's area covered by a cap of chordal radius `r`,
/// r in [0, sqrt(2)]: (1/2) I_{r^2 (1 - r^2/4)}((d-1)/2, 1/2).
pub fn cap_fraction_radius(r: f64, d: usize) -> Result<f64> {
    if d < 2 {
        return Err(CoreError::Domain(format!(
            "cap_fraction_radius needs d >= 2, got {d}"
        )));
    }
    let sqrt2 = core::f64::consts::SQRT_2;
    if !(r >= 0.0) || r > sqrt2 * (1.0 + BOUNDARY_SLACK) {
        return Err(CoreError::Domain(format!(
            "cap radius must lie in [0, sqrt(2)], got {r}"
        )));
    }
    let r = r.min(sqrt2);
    let x = (r * r * (1.0 - r * r / 4.0)).clamp(0.0, 1.0);
    Ok(0.5 * reg_inc_beta(x, (d as f64 - 1.0) / 2.0, 0.5)?)
}

/// Fraction of the sphere's area covered by a cap of colatitude `phi`,
/// phi in [0, pi/2]: (1/2) I_{sin^2 phi}((d-1)/2, 1/2).
pub fn cap_fraction_angle(phi: f64, d: usize) -> Result<f64> {
    if d < 2 {
        return Err(CoreError::Domain(format!(
            "cap_fraction_angle needs d >= 2, got {d}"
        )));
    }
    let half_pi = core::f64::consts::PI / 2.0;
    if !(phi >= 0.0) || phi > half_pi * (1.0 + BOUNDARY_SLACK) {
        return Err(CoreError::Domain(format!(
            "cap colatitude must lie in [0, pi/2], got {phi}"
        )));
    }
    let s = fm::sin(phi.min(half_pi));
    let x = (s * s).clamp(0.0, 1.0);
    Ok(0.5 * reg_inc_beta(x, (d as f64 - 1.0) / 2.0, 0.5)?)
}

/// Probability that a uniform direction is positively correlated with both
/// `x` and `z`: (pi - arccos(x.z)) / (2 pi).
pub fn hemispheres_overlap_fraction(x: &UnitVector, z: &UnitVector) -> Result<f64> {
    let t = x.dot(z)?.clamp(-1.0, 1.0);
    Ok((core::f64::consts::PI - fm::acos(t)) / (2.0 * core::f64::consts::PI))
}
