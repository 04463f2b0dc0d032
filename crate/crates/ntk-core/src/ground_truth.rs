//! Target-function families and their derived objects: convolved targets
//! f_g, pseudo ground-truths with their exact parameter vectors, the
//! infinite-width limit predictor, null risk, and the constrained-domain
//! cube decomposition.

use crate::error::{CoreError, Result};
use crate::fm;
use crate::harmonics::{fourier_ch_closed, gegenbauer, AxisHarmonics};
use crate::linalg::{self, CholeskyFactor};
use crate::ntk::{
    activation_count_raw, gram_inf, kernel_inf_t, predict_with_primal, Dataset, NeuronBank,
};
use crate::quadrature::QuadratureRule;
use crate::rng::{mc_chunks, Rng};
use crate::special::beta_fn;
use crate::sphere::UnitVector;
use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

const MC_CHUNK: usize = 8192;

/// A Monte-Carlo point estimate with its standard error (zero for exact
/// paths).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_err: f64,
}

impl McEstimate {
    pub fn exact(value: f64) -> Self {
        McEstimate {
            value,
            std_err: 0.0,
        }
    }
}

/// The convolution source g: a constant, a finite mixture of point masses,
/// or an arbitrary bounded callable.
pub enum GFunction {
    Constant {
        c: f64,
    },
    DiracMixture {
        atoms: Vec<(UnitVector, f64)>,
    },
    Callable {
        evaluator: Box<dyn Fn(&[f64]) -> f64 + Send + Sync>,
        /// Caller-asserted bound on sup |g|, used only in bound reporting.
        sup_bound: f64,
    },
}

impl core::fmt::Debug for GFunction {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            GFunction::Constant { c } => write!(f, "Constant {{ c: {c} }}"),
            GFunction::DiracMixture { atoms } => {
                write!(f, "DiracMixture {{ atoms: {} }}", atoms.len())
            }
            GFunction::Callable { sup_bound, .. } => {
                write!(f, "Callable {{ sup_bound: {sup_bound} }}")
            }
        }
    }
}

impl GFunction {
    /// Total mass |g|_1 (total |weight| for mixtures; sup bound for
    /// callables, which upper-bounds the L1 norm under a probability
    /// measure).
    pub fn l1_bound(&self) -> f64 {
        match self {
            GFunction::Constant { c } => fm::abs(*c),
            GFunction::DiracMixture { atoms } => atoms.iter().map(|(_, w)| fm::abs(*w)).sum(),
            GFunction::Callable { sup_bound, .. } => *sup_bound,
        }
    }
}

/// One Fourier term sin_coef*sin(k theta) + cos_coef*cos(k theta).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FourierTerm {
    pub k: usize,
    pub sin_coef: f64,
    pub cos_coef: f64,
}

/// Tagged union of target-function families.
#[derive(Debug)]
pub enum GroundTruthSpec {
    /// d = 2 only; x maps to theta = atan2(x_2, x_1).
    FourierMixture { terms: Vec<FourierTerm> },
    /// (x . axis)^degree.
    AxisPolynomial { axis: UnitVector, degree: usize },
    /// The orthonormal axis-symmetric harmonic of the given degree, d >= 3.
    HarmonicAxis {
        degree: usize,
        axis: UnitVector,
        norm: f64,
    },
    /// The convolved target f_g on S^{d-1}.
    ConvolvedG { g: GFunction, d: usize },
    /// The pseudo ground-truth tied to one neuron bank.
    PseudoGt { g: GFunction, bank: Arc<NeuronBank> },
}

impl GroundTruthSpec {
    /// Unit-coefficient Fourier mixture over the listed frequencies.
    pub fn fourier_unit(ks: &[usize]) -> Self {
        GroundTruthSpec::FourierMixture {
            terms: ks
                .iter()
                .map(|&k| FourierTerm {
                    k,
                    sin_coef: 1.0,
                    cos_coef: 1.0,
                })
                .collect(),
        }
    }

    /// Axis harmonic with its normalizer computed once here.
    pub fn harmonic_axis(degree: usize, axis: UnitVector) -> Result<Self> {
        let d = axis.dim();
        let rule = QuadratureRule::default_for(d)?;
        let basis = AxisHarmonics::new(d, degree, &rule)?;
        // Recover the plain normalizer: Xi = norm * C_l^{(d-2)/2}.
        let lambda = (d as f64 - 2.0) / 2.0;
        let probe = 0.5;
        let c = gegenbauer(degree, lambda, probe)?;
        let norm = if c != 0.0 {
            basis.eval(degree, probe)? / c
        } else {
            // Fall back to another probe point clear of the zero.
            basis.eval(degree, 0.731)? / gegenbauer(degree, lambda, 0.731)?
        };
        Ok(GroundTruthSpec::HarmonicAxis { degree, axis, norm })
    }

    pub fn dimension_ok(&self, d: usize) -> bool {
        match self {
            GroundTruthSpec::FourierMixture { .. } => d == 2,
            GroundTruthSpec::AxisPolynomial { axis, .. } => axis.dim() == d,
            GroundTruthSpec::HarmonicAxis { axis, .. } => axis.dim() == d && d >= 3,
            GroundTruthSpec::ConvolvedG { d: gd, .. } => *gd == d,
            GroundTruthSpec::PseudoGt { bank, .. } => bank.d() == d,
        }
    }
}

/// Exact pointwise evaluation of closed-form targets. Convolved and pseudo
/// targets have no closed form; evaluate those with [`eval_f_g`] or
/// [`eval_pseudo_gt`].
pub fn eval_target(spec: &GroundTruthSpec, x: &UnitVector) -> Result<f64> {
    match spec {
        GroundTruthSpec::FourierMixture { terms } => {
            if x.dim() != 2 {
                return Err(CoreError::DimensionMismatch {
                    expected: 2,
                    got: x.dim(),
                });
            }
            let theta = fm::atan2(x[1], x[0]);
            let mut v = 0.0;
            for t in terms {
                let kt = t.k as f64 * theta;
                v += t.sin_coef * fm::sin(kt) + t.cos_coef * fm::cos(kt);
            }
            Ok(v)
        }
        GroundTruthSpec::AxisPolynomial { axis, degree } => {
            Ok(fm::powi(x.dot(axis)?, *degree as u32))
        }
        GroundTruthSpec::HarmonicAxis { degree, axis, norm } => {
            let t = x.dot(axis)?;
            Ok(norm * gegenbauer(*degree, (axis.dim() as f64 - 2.0) / 2.0, t)?)
        }
        GroundTruthSpec::ConvolvedG { .. } | GroundTruthSpec::PseudoGt { .. } => {
            Err(CoreError::Unsupported(
                "convolved/pseudo targets have no closed form; use eval_f_g or eval_pseudo_gt"
                    .into(),
            ))
        }
    }
}

/// Pointwise evaluation covering every family; g-based targets fall back to
/// Monte-Carlo with `mc_samples` draws.
pub fn eval_any(
    spec: &GroundTruthSpec,
    x: &UnitVector,
    mc_samples: usize,
    seed: u64,
) -> Result<f64> {
    match spec {
        GroundTruthSpec::ConvolvedG { g, .. } => Ok(eval_f_g(g, x, mc_samples, seed)?.value),
        GroundTruthSpec::PseudoGt { g, bank } => {
            Ok(eval_pseudo_gt(g, bank, x, mc_samples, seed)?.value)
        }
        _ => eval_target(spec, x),
    }
}

fn mc_mean(
    d: usize,
    mc_samples: usize,
    seed: u64,
    mut f: impl FnMut(&[f64]) -> f64,
) -> Result<McEstimate> {
    if mc_samples < 1 {
        return Err(CoreError::Domain(
            "Monte-Carlo needs at least one sample".into(),
        ));
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut z = vec![0.0f64; d];
    for (chunk_seed, len) in mc_chunks(seed, mc_samples, MC_CHUNK) {
        let mut rng = Rng::seed_from(chunk_seed);
        let mut csum = 0.0;
        let mut csum_sq = 0.0;
        for _ in 0..len {
            crate::sphere::sample_unit_into(&mut z, &mut rng);
            let v = f(&z);
            csum += v;
            csum_sq += v * v;
        }
        sum += csum;
        sum_sq += csum_sq;
    }
    let n = mc_samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    let std_err = if mc_samples > 1 {
        fm::sqrt(var / (n - 1.0))
    } else {
        f64::INFINITY
    };
    Ok(McEstimate {
        value: mean,
        std_err,
    })
}

/// f_g(x): Dirac mixtures evaluate exactly through the limit kernel; other
/// sources by Monte-Carlo with a reported standard error.
pub fn eval_f_g(g: &GFunction, x: &UnitVector, mc_samples: usize, seed: u64) -> Result<McEstimate> {
    match g {
        GFunction::DiracMixture { atoms } => {
            let mut v = 0.0;
            for (z, w) in atoms {
                v += w * kernel_inf_t(x.dot(z)?);
            }
            Ok(McEstimate::exact(v))
        }
        GFunction::Constant { c } => {
            let c = *c;
            mc_mean(x.dim(), mc_samples, seed, |z| {
                kernel_inf_t(linalg::dot(x.coords(), z)) * c
            })
        }
        GFunction::Callable { evaluator, .. } => mc_mean(x.dim(), mc_samples, seed, |z| {
            kernel_inf_t(linalg::dot(x.coords(), z)) * evaluator(z)
        }),
    }
}

/// First moment of the hemisphere: E[z 1{z.v > 0}] = m_d v with
/// m_d = 1 / ((d-1) B((d-1)/2, 1/2)).
pub fn hemisphere_moment(d: usize) -> Result<f64> {
    if d < 2 {
        return Err(CoreError::Domain(format!(
            "hemisphere_moment needs d >= 2, got {d}"
        )));
    }
    Ok(1.0 / ((d as f64 - 1.0) * beta_fn((d as f64 - 1.0) / 2.0, 0.5)?))
}

/// The parameter vector of the pseudo ground-truth: block j is
/// `integral of 1{z.V0[j] > 0} z g(z) / p`.
///
/// Dirac mixtures and constants evaluate exactly (the constant case via the
/// closed hemisphere moment); callables use one shared Monte-Carlo sample
/// set across all blocks.
pub fn dv_star(g: &GFunction, bank: &NeuronBank, mc_samples: usize, seed: u64) -> Result<Vec<f64>> {
    let d = bank.d();
    let p = bank.p();
    let inv_p = 1.0 / p as f64;
    match g {
        GFunction::DiracMixture { atoms } => {
            let mut dv = vec![0.0f64; p * d];
            for (z, w) in atoms {
                if z.dim() != d {
                    return Err(CoreError::DimensionMismatch {
                        expected: d,
                        got: z.dim(),
                    });
                }
                for j in 0..p {
                    if linalg::dot(z.coords(), bank.direction(j)) > 0.0 {
                        linalg::axpy(w * inv_p, z.coords(), &mut dv[j * d..(j + 1) * d]);
                    }
                }
            }
            Ok(dv)
        }
        GFunction::Constant { c } => {
            let scale = c * hemisphere_moment(d)? * inv_p;
            let mut dv = vec![0.0f64; p * d];
            for j in 0..p {
                linalg::axpy(scale, bank.direction(j), &mut dv[j * d..(j + 1) * d]);
            }
            Ok(dv)
        }
        GFunction::Callable { evaluator, .. } => {
            if mc_samples < 1 {
                return Err(CoreError::Domain(
                    "Monte-Carlo needs at least one sample".into(),
                ));
            }
            let mut dv = vec![0.0f64; p * d];
            let mut z = vec![0.0f64; d];
            for (chunk_seed, len) in mc_chunks(seed, mc_samples, MC_CHUNK) {
                let mut rng = Rng::seed_from(chunk_seed);
                for _ in 0..len {
                    crate::sphere::sample_unit_into(&mut z, &mut rng);
                    let w = evaluator(&z);
                    if w == 0.0 {
                        continue;
                    }
                    for j in 0..p {
                        if linalg::dot(&z, bank.direction(j)) > 0.0 {
                            linalg::axpy(w, &z, &mut dv[j * d..(j + 1) * d]);
                        }
                    }
                }
            }
            let scale = inv_p / mc_samples as f64;
            for v in dv.iter_mut() {
                *v *= scale;
            }
            Ok(dv)
        }
    }
}

/// The pseudo ground-truth value at x:
/// `integral of x.z (|C_{z,x}| / p) g(z)`; exact for Dirac mixtures and
/// constants (through the linear form h_x dv_star), Monte-Carlo otherwise.
pub fn eval_pseudo_gt(
    g: &GFunction,
    bank: &NeuronBank,
    x: &UnitVector,
    mc_samples: usize,
    seed: u64,
) -> Result<McEstimate> {
    if x.dim() != bank.d() {
        return Err(CoreError::DimensionMismatch {
            expected: bank.d(),
            got: x.dim(),
        });
    }
    let p = bank.p() as f64;
    match g {
        GFunction::DiracMixture { atoms } => {
            let mut v = 0.0;
            for (z, w) in atoms {
                if z.dim() != bank.d() {
                    return Err(CoreError::DimensionMismatch {
                        expected: bank.d(),
                        got: z.dim(),
                    });
                }
                let count = activation_count_raw(bank, z.coords(), x.coords());
                v += w * x.dot(z)? * count as f64 / p;
            }
            Ok(McEstimate::exact(v))
        }
        GFunction::Constant { .. } => {
            // Exactly h_x . dv_star by the linear form of the pseudo target.
            let dv = dv_star(g, bank, 1, seed)?;
            Ok(McEstimate::exact(predict_with_primal(
                bank,
                x.coords(),
                &dv,
            )))
        }
        GFunction::Callable { evaluator, .. } => mc_mean(bank.d(), mc_samples, seed, |z| {
            let count = activation_count_raw(bank, z, x.coords());
            linalg::dot(x.coords(), z) * (count as f64 / p) * evaluator(z)
        }),
    }
}

/// E_x[f(x)^2], the MSE of the always-zero predictor.
///
/// Fourier mixtures go through Parseval, axis polynomials through beta
/// moments, axis harmonics are orthonormal; g-based targets fall back to
/// Monte-Carlo over test points with a reported standard error.
pub fn null_risk(spec: &GroundTruthSpec, mc_samples: usize, seed: u64) -> Result<McEstimate> {
    match spec {
        GroundTruthSpec::FourierMixture { terms } => {
            // Merge repeated frequencies before applying Parseval.
            let mut merged: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
            for t in terms {
                let e = merged.entry(t.k).or_insert((0.0, 0.0));
                e.0 += t.sin_coef;
                e.1 += t.cos_coef;
            }
            let mut v = 0.0;
            for (k, (s, c)) in merged {
                if k == 0 {
                    v += c * c; // sin(0) contributes nothing
                } else {
                    v += 0.5 * (s * s + c * c);
                }
            }
            Ok(McEstimate::exact(v))
        }
        GroundTruthSpec::AxisPolynomial { axis, degree } => {
            let d = axis.dim() as f64;
            let l = *degree as f64;
            // E[(x.a)^{2l}] = B(l + 1/2, (d-1)/2) / B(1/2, (d-1)/2)
            let m = beta_fn(l + 0.5, (d - 1.0) / 2.0)? / beta_fn(0.5, (d - 1.0) / 2.0)?;
            Ok(McEstimate::exact(m))
        }
        GroundTruthSpec::HarmonicAxis { .. } => Ok(McEstimate::exact(1.0)),
        GroundTruthSpec::ConvolvedG { g, d } => match g {
            GFunction::Constant { c } => {
                // f_g is the constant c * E[k(x.z)]; the mean of the limit
                // kernel is a one-dimensional colatitude integral.
                let rule = QuadratureRule::default_for(*d)?;
                let kappa = rule.integrate(|theta| kernel_inf_t(fm::cos(theta)));
                let v = c * kappa;
                Ok(McEstimate::exact(v * v))
            }
            GFunction::DiracMixture { .. } => mc_mean(*d, mc_samples, seed, |xz| {
                let x = UnitVector::new(xz.to_vec()).unwrap();
                let v = eval_f_g(g, &x, 1, 0).unwrap().value;
                v * v
            }),
            GFunction::Callable { .. } => Err(CoreError::Unsupported(
                "null risk of a callable g needs a nested Monte-Carlo; not provided".into(),
            )),
        },
        GroundTruthSpec::PseudoGt { g, bank } => match g {
            GFunction::DiracMixture { .. } | GFunction::Constant { .. } => {
                let bank = bank.clone();
                let g_ref = g;
                mc_mean(bank.d(), mc_samples, seed, move |xz| {
                    let x = UnitVector::new(xz.to_vec()).unwrap();
                    let v = eval_pseudo_gt(g_ref, &bank, &x, 1, 0).unwrap().value;
                    v * v
                })
            }
            GFunction::Callable { .. } => Err(CoreError::Unsupported(
                "null risk of a callable pseudo target is not provided".into(),
            )),
        },
    }
}

/// L2 distance from a Fourier mixture to the learnable class: the mass on
/// odd frequencies >= 3 (the filter's exact zeros). `None` when no closed
/// expression is available (non-Fourier families).
pub fn learnable_distance(spec: &GroundTruthSpec) -> Option<f64> {
    match spec {
        GroundTruthSpec::FourierMixture { terms } => {
            let mut merged: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
            for t in terms {
                let e = merged.entry(t.k).or_insert((0.0, 0.0));
                e.0 += t.sin_coef;
                e.1 += t.cos_coef;
            }
            let mut sq = 0.0;
            for (k, (s, c)) in merged {
                if fourier_ch_closed(k as i64) == 0.0 {
                    sq += 0.5 * (s * s + c * c);
                }
            }
            Some(fm::sqrt(sq))
        }
        _ => None,
    }
}

/// The infinite-width limit predictor: the interpolator of the training
/// labels in the limit kernel.
#[derive(Debug)]
pub struct InfWidthModel<'a> {
    data: &'a Dataset,
    /// n (H^inf)^{-1} y
    g_inf: Vec<f64>,
}

impl<'a> InfWidthModel<'a> {
    pub fn fit(data: &'a Dataset) -> Result<Self> {
        let n = data.n();
        let m = gram_inf(data);
        let factor = CholeskyFactor::factor(&m, n)?;
        let mut g_inf = factor.solve(data.labels());
        // One refinement round keeps the interpolation tight on
        // ill-conditioned limit kernels.
        let mut mg = vec![0.0; n];
        linalg::symv(&m, n, &g_inf, &mut mg);
        let r: Vec<f64> = data
            .labels()
            .iter()
            .zip(mg.iter())
            .map(|(y, v)| y - v)
            .collect();
        let dg = factor.solve(&r);
        for i in 0..n {
            g_inf[i] = (g_inf[i] + dg[i]) * n as f64;
        }
        Ok(InfWidthModel { data, g_inf })
    }

    /// The dual coefficients n (H^inf)^{-1} y.
    pub fn coefficients(&self) -> &[f64] {
        &self.g_inf
    }

    pub fn predict(&self, x: &UnitVector) -> Result<f64> {
        if x.dim() != self.data.d() {
            return Err(CoreError::DimensionMismatch {
                expected: self.data.d(),
                got: x.dim(),
            });
        }
        let n = self.data.n();
        let mut v = 0.0;
        for i in 0..n {
            let t = linalg::dot(x.coords(), self.data.input(i));
            v += kernel_inf_t(t) * self.g_inf[i];
        }
        Ok(v / n as f64)
    }
}

/// One-shot infinite-width prediction.
pub fn f_inf_limit(data: &Dataset, x: &UnitVector) -> Result<f64> {
    InfWidthModel::fit(data)?.predict(x)
}

/// One component of the cube decomposition: coef * (x . vector)^power.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeComponent {
    pub vector: Vec<f64>,
    pub power: u32,
    pub coef: f64,
}

/// Writes (x . a)^3, restricted to inputs whose last coordinate is fixed at
/// 1/sqrt(d), as a sum of five components with powers [4, 4, 2, 1, 0]
/// (each one a learnable power on the sphere).
pub fn cube_decomposition(a_tilde: &[f64], a0: f64, d: usize) -> Result<[CubeComponent; 5]> {
    if d < 2 {
        return Err(CoreError::Domain(format!(
            "cube_decomposition needs d >= 2, got {d}"
        )));
    }
    if a_tilde.len() != d - 1 {
        return Err(CoreError::DimensionMismatch {
            expected: d - 1,
            got: a_tilde.len(),
        });
    }
    let sqrt_d = fm::sqrt(d as f64);
    let u = a0 / sqrt_d;
    let mut lifted = a_tilde.to_vec();
    lifted.push(sqrt_d);
    let mut padded = a_tilde.to_vec();
    padded.push(0.0);
    let mut last_axis = vec![0.0; d];
    last_axis[d - 1] = 1.0;
    Ok([
        CubeComponent {
            vector: lifted,
            power: 4,
            coef: 0.25,
        },
        CubeComponent {
            vector: padded.clone(),
            power: 4,
            coef: -0.25,
        },
        CubeComponent {
            vector: padded.clone(),
            power: 2,
            coef: 3.0 * u - 1.5,
        },
        CubeComponent {
            vector: padded,
            power: 1,
            coef: 3.0 * u * u - 1.0,
        },
        CubeComponent {
            vector: last_axis,
            power: 0,
            coef: u * u * u - 0.25,
        },
    ])
}

/// Evaluates a component sum at a point.
pub fn eval_components(components: &[CubeComponent], x: &[f64]) -> f64 {
    let mut v = 0.0;
    for c in components {
        v += c.coef * fm::powi(linalg::dot(&c.vector, x), c.power);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ntk::build_bank;
    use crate::sphere::sample_unit;

    #[test]
    fn fourier_mixture_values() {
        // Sum over k in {0,1,2,4} of sin + cos at theta = 0 is 4.
        let spec = GroundTruthSpec::fourier_unit(&[0, 1, 2, 4]);
        let x = UnitVector::basis(2, 0).unwrap();
        assert!((eval_target(&spec, &x).unwrap() - 4.0).abs() < 1e-12);
        let x3 = UnitVector::basis(3, 0).unwrap();
        assert!(eval_target(&spec, &x3).is_err());
    }

    #[test]
    fn axis_polynomial_degree_zero() {
        let axis = UnitVector::basis(3, 1).unwrap();
        let spec = GroundTruthSpec::AxisPolynomial { axis, degree: 0 };
        let mut rng = Rng::seed_from(4);
        for _ in 0..5 {
            let x = sample_unit(3, &mut rng).unwrap();
            assert_eq!(eval_target(&spec, &x).unwrap(), 1.0);
        }
    }

    #[test]
    fn harmonic_axis_normalization() {
        let axis = UnitVector::basis(3, 2).unwrap();
        let spec = GroundTruthSpec::harmonic_axis(1, axis.clone()).unwrap();
        let v = eval_target(&spec, &axis).unwrap();
        assert!((v - libm::sqrt(3.0)).abs() < 1e-10, "{v}");
    }

    #[test]
    fn f_g_dirac_and_zero() {
        let z0 = UnitVector::basis(3, 0).unwrap();
        let g = GFunction::DiracMixture {
            atoms: vec![(z0.clone(), 1.0)],
        };
        let mut rng = Rng::seed_from(5);
        let x = sample_unit(3, &mut rng).unwrap();
        let got = eval_f_g(&g, &x, 1, 0).unwrap();
        assert_eq!(got.std_err, 0.0);
        assert!((got.value - kernel_inf_t(x.dot(&z0).unwrap())).abs() < 1e-15);
        let g0 = GFunction::Constant { c: 0.0 };
        assert_eq!(eval_f_g(&g0, &x, 100, 1).unwrap().value, 0.0);
    }

    #[test]
    fn f_g_constant_matches_filter_dc_term() {
        // g = 1 in d = 2: the exact value is the DC filter coefficient
        // 1/pi^2, independent of x.
        let x = UnitVector::basis(2, 0).unwrap();
        let g = GFunction::Constant { c: 1.0 };
        let est = eval_f_g(&g, &x, 200_000, 77).unwrap();
        let want = fourier_ch_closed(0);
        assert!(
            (est.value - want).abs() <= 3.0 * est.std_err.max(1e-4),
            "{} vs {want} (se {})",
            est.value,
            est.std_err
        );
    }

    #[test]
    fn dv_star_dirac_is_scaled_feature_row() {
        let bank = build_bank(50, 3, 6).unwrap();
        let mut rng = Rng::seed_from(8);
        let z0 = sample_unit(3, &mut rng).unwrap();
        let g = GFunction::DiracMixture {
            atoms: vec![(z0.clone(), 1.0)],
        };
        let dv = dv_star(&g, &bank, 1, 0).unwrap();
        let p = bank.p() as f64;
        for j in 0..bank.p() {
            let active = linalg::dot(z0.coords(), bank.direction(j)) > 0.0;
            for k in 0..3 {
                let want = if active { z0[k] / p } else { 0.0 };
                assert!((dv[j * 3 + k] - want).abs() < 1e-15);
            }
            // Blockwise bound: each block norm <= total |weight| / p.
            let bn = linalg::norm2(&dv[j * 3..(j + 1) * 3]);
            assert!(bn <= 1.0 / p + 1e-15);
        }
        // Zero g gives the zero vector.
        let dv0 = dv_star(&GFunction::Constant { c: 0.0 }, &bank, 1, 0).unwrap();
        assert_eq!(linalg::norm_inf(&dv0), 0.0);
    }

    #[test]
    fn pseudo_gt_linear_form_identity() {
        // h_x . dv_star equals the pseudo target pointwise; exact for both
        // the Dirac and constant sources.
        let bank = build_bank(80, 2, 16).unwrap();
        let mut rng = Rng::seed_from(9);
        let z0 = sample_unit(2, &mut rng).unwrap();
        for g in [
            GFunction::DiracMixture {
                atoms: vec![(z0.clone(), 0.8)],
            },
            GFunction::Constant { c: 1.3 },
        ] {
            let dv = dv_star(&g, &bank, 1, 0).unwrap();
            for _ in 0..20 {
                let x = sample_unit(2, &mut rng).unwrap();
                let direct = eval_pseudo_gt(&g, &bank, &x, 1, 0).unwrap().value;
                let linear = predict_with_primal(&bank, x.coords(), &dv);
                assert!((direct - linear).abs() < 1e-12, "{direct} vs {linear}");
            }
        }
    }

    #[test]
    fn pseudo_gt_dirac_cases() {
        let bank = build_bank(60, 3, 26).unwrap();
        let z0 = UnitVector::basis(3, 0).unwrap();
        let x_orth = UnitVector::basis(3, 1).unwrap();
        let g = GFunction::DiracMixture {
            atoms: vec![(z0.clone(), 1.0)],
        };
        // x orthogonal to z0: the x.z factor kills the value.
        assert_eq!(eval_pseudo_gt(&g, &bank, &x_orth, 1, 0).unwrap().value, 0.0);
        // Definition collapse at general x.
        let mut rng = Rng::seed_from(11);
        let x = sample_unit(3, &mut rng).unwrap();
        let count = crate::ntk::activation_count(&bank, &z0, &x).unwrap();
        let want = x.dot(&z0).unwrap() * count as f64 / bank.p() as f64;
        assert!((eval_pseudo_gt(&g, &bank, &x, 1, 0).unwrap().value - want).abs() < 1e-15);
    }

    #[test]
    fn pseudo_gt_approaches_f_g() {
        // Large p: the empirical activation fraction converges to the limit
        // overlap, so the pseudo target approaches f_g (g = 1, d = 2).
        let bank = build_bank(100_000, 2, 31).unwrap();
        let g = GFunction::Constant { c: 1.0 };
        let mut rng = Rng::seed_from(12);
        for _ in 0..20 {
            let x = sample_unit(2, &mut rng).unwrap();
            let pseudo = eval_pseudo_gt(&g, &bank, &x, 1, 0).unwrap().value;
            let fg = fourier_ch_closed(0); // exact f_g for g = 1 in d = 2
            assert!((pseudo - fg).abs() <= 0.02, "{pseudo} vs {fg}");
        }
    }

    #[test]
    fn null_risk_values() {
        let fig1a = GroundTruthSpec::fourier_unit(&[0, 1, 2, 4]);
        assert!((null_risk(&fig1a, 1, 0).unwrap().value - 4.0).abs() < 1e-12);
        let fig1b = GroundTruthSpec::fourier_unit(&[3, 5, 7, 9]);
        assert!((null_risk(&fig1b, 1, 0).unwrap().value - 4.0).abs() < 1e-12);
        let zero = GroundTruthSpec::FourierMixture { terms: vec![] };
        assert_eq!(null_risk(&zero, 1, 0).unwrap().value, 0.0);
        let harm = GroundTruthSpec::harmonic_axis(2, UnitVector::basis(3, 0).unwrap()).unwrap();
        assert_eq!(null_risk(&harm, 1, 0).unwrap().value, 1.0);
    }

    #[test]
    fn null_risk_axis_polynomial_moment() {
        // E[(x.a)^2] = 1/d.
        for d in [2usize, 3, 6] {
            let spec = GroundTruthSpec::AxisPolynomial {
                axis: UnitVector::basis(d, 0).unwrap(),
                degree: 1,
            };
            let v = null_risk(&spec, 1, 0).unwrap().value;
            assert!((v - 1.0 / d as f64).abs() < 1e-12, "d={d}: {v}");
        }
    }

    #[test]
    fn learnable_distance_fourier() {
        let spec = GroundTruthSpec::fourier_unit(&[1, 3, 4]);
        // Mass on k = 3 only: sqrt(0.5 * (1 + 1)) = 1.
        assert!((learnable_distance(&spec).unwrap() - 1.0).abs() < 1e-12);
        let axis = GroundTruthSpec::AxisPolynomial {
            axis: UnitVector::basis(3, 0).unwrap(),
            degree: 2,
        };
        assert!(learnable_distance(&axis).is_none());
    }

    #[test]
    fn f_inf_interpolates_and_scalar_case() {
        let mut rng = Rng::seed_from(14);
        let inputs: Vec<UnitVector> = (0..12).map(|_| sample_unit(2, &mut rng).unwrap()).collect();
        let truth: Vec<f64> = inputs.iter().map(|x| x[0] + 0.2).collect();
        let data = Dataset::from_parts(inputs, truth, vec![0.0; 12]).unwrap();
        let model = InfWidthModel::fit(&data).unwrap();
        for i in 0..12 {
            let xi = UnitVector::new(data.input(i).to_vec()).unwrap();
            let v = model.predict(&xi).unwrap();
            assert!((v - data.labels()[i]).abs() < 1e-7, "i={i}: {v}");
        }
        // n = 1: g_inf = y / k(X1, X1), prediction at X1 equals y.
        let x0 = sample_unit(2, &mut rng).unwrap();
        let data1 = Dataset::from_parts(vec![x0.clone()], vec![0.5], vec![0.0]).unwrap();
        assert!((f_inf_limit(&data1, &x0).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn f_inf_permutation_invariance() {
        let mut rng = Rng::seed_from(15);
        let inputs: Vec<UnitVector> = (0..9).map(|_| sample_unit(2, &mut rng).unwrap()).collect();
        let truth: Vec<f64> = inputs.iter().map(|x| x[1]).collect();
        let data = Dataset::from_parts(inputs.clone(), truth.clone(), vec![0.0; 9]).unwrap();
        // Reversed order.
        let data_r = Dataset::from_parts(
            inputs.into_iter().rev().collect(),
            truth.into_iter().rev().collect(),
            vec![0.0; 9],
        )
        .unwrap();
        let m1 = InfWidthModel::fit(&data).unwrap();
        let m2 = InfWidthModel::fit(&data_r).unwrap();
        for _ in 0..10 {
            let x = sample_unit(2, &mut rng).unwrap();
            let a = m1.predict(&x).unwrap();
            let b = m2.predict(&x).unwrap();
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn cube_decomposition_properties() {
        // Stated powers.
        let comps = cube_decomposition(&[0.3, -0.4, 0.1], 0.7, 4).unwrap();
        let powers: Vec<u32> = comps.iter().map(|c| c.power).collect();
        assert_eq!(powers, vec![4, 4, 2, 1, 0]);
        // Degenerate a_tilde = 0 leaves the constant (a0/sqrt(d))^3.
        let comps0 = cube_decomposition(&[0.0, 0.0, 0.0], 0.7, 4).unwrap();
        let x = constrained_point(4, 123);
        let u = 0.7 / 2.0;
        assert!((eval_components(&comps0, &x) - u * u * u).abs() < 1e-12);
    }

    fn constrained_point(d: usize, seed: u64) -> Vec<f64> {
        // Uniform x on the slice with last coordinate 1/sqrt(d).
        let mut rng = Rng::seed_from(seed);
        let r = libm::sqrt((d as f64 - 1.0) / d as f64);
        let mut x: Vec<f64> = if d == 2 {
            vec![rng.sign() * r]
        } else {
            let tilde = sample_unit(d - 1, &mut rng).unwrap();
            tilde.coords().iter().map(|c| c * r).collect()
        };
        x.push(1.0 / libm::sqrt(d as f64));
        x
    }

    #[test]
    fn cube_decomposition_identity_random() {
        let mut rng = Rng::seed_from(77);
        for d in [2usize, 4, 8] {
            for trial in 0..20 {
                let a_tilde: Vec<f64> = (0..d - 1).map(|_| 2.0 * rng.uniform() - 1.0).collect();
                let a0 = 2.0 * rng.uniform() - 1.0;
                let comps = cube_decomposition(&a_tilde, a0, d).unwrap();
                let x = constrained_point(d, 1000 + trial);
                let mut a = a_tilde.clone();
                a.push(a0);
                let want = fm::powi(linalg::dot(&a, &x), 3);
                let got = eval_components(&comps, &x);
                assert!((got - want).abs() <= 1e-10, "d={d}: {got} vs {want}");
            }
        }
    }
}
