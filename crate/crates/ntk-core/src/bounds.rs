//! Evaluators for the closed-form bound quantities: the sample-complexity
//! factor J_m, the cap constant C_d, the eigenvalue floor D(n, d, delta),
//! the seven terms of the main generalization bound, the min-eigenvalue
//! lower/upper bounds, the variance cap, and the leading term of the
//! comparison bound. Everything is evaluated in log space; the constants
//! overflow double precision for modest (n, d) otherwise.

use crate::error::{CoreError, Result};
use crate::fm;
use crate::linalg::{self, CholeskyFactor};
use crate::ntk::{gram_inf, Dataset};
use crate::special::{beta_fn, reg_inc_beta};
use alloc::format;
use alloc::vec;

const LN_2: f64 = core::f64::consts::LN_2;

fn m_range(n: u64) -> (f64, f64) {
    let hi = fm::ln(n as f64) / fm::ln(core::f64::consts::PI / 2.0);
    (1.0, hi)
}

fn check_m(n: u64, m: f64) -> Result<()> {
    let (lo, hi) = m_range(n);
    if !(m >= lo && m <= hi) {
        return Err(CoreError::Domain(format!(
            "m = {m} outside the valid interval [{lo}, {hi:.6}] for n = {n}"
        )));
    }
    Ok(())
}

/// The documented default m = min(2, ln n / ln(pi/2)).
pub fn default_m(n: u64) -> f64 {
    let (_, hi) = m_range(n);
    hi.min(2.0)
}

/// ln J_m(n, d) = (1.5 d + 5.5) ln 2 + 0.5 d ln d + (2 + 1/m)(d - 1) ln n.
pub fn ln_j_m(n: u64, d: u64, m: f64) -> Result<f64> {
    if n < 2 {
        return Err(CoreError::Domain(format!("j_m needs n >= 2, got {n}")));
    }
    if d < 2 {
        return Err(CoreError::Domain(format!("j_m needs d >= 2, got {d}")));
    }
    check_m(n, m)?;
    let df = d as f64;
    let nf = n as f64;
    Ok((1.5 * df + 5.5) * LN_2 + 0.5 * df * fm::ln(df) + (2.0 + 1.0 / m) * (df - 1.0) * fm::ln(nf))
}

/// J_m(n, d) = 2^{1.5d + 5.5} d^{0.5d} n^{(2 + 1/m)(d - 1)}.
pub fn j_m(n: u64, d: u64, m: f64) -> Result<f64> {
    Ok(fm::exp(ln_j_m(n, d, m)?))
}

/// The cap constant C_d = 2 sqrt(2) / B((d-1)/2, 1/2).
pub fn c_d(d: u64) -> Result<f64> {
    if d < 2 {
        return Err(CoreError::Domain(format!("c_d needs d >= 2, got {d}")));
    }
    Ok(2.0 * core::f64::consts::SQRT_2 / beta_fn((d as f64 - 1.0) / 2.0, 0.5)?)
}

/// D(n, d, delta) and C_d together.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenFloor {
    pub value: f64,
    pub c_d: f64,
}

/// The high-probability eigenvalue floor
/// D(n, d, delta) = (1/(16 n)) I_x((d-1)/2, 1/2) at
/// x = (delta^2/(n^4 C_d^2)) (1 - delta^2/(4 n^4 C_d^2)), delta in (0, 2/pi].
///
/// For delta <= 1 and d <= n^4 the closed lower bound
/// 2^{-1.5d-5.5} d^{-0.5d} n^{-2d+1} delta^{d-1} is verified internally.
pub fn d_ndd(n: u64, d: u64, delta: f64) -> Result<EigenFloor> {
    if n < 1 || d < 2 {
        return Err(CoreError::Domain(format!(
            "d_ndd needs n >= 1 and d >= 2, got ({n}, {d})"
        )));
    }
    if !(delta > 0.0 && delta <= 2.0 / core::f64::consts::PI) {
        return Err(CoreError::Domain(format!(
            "delta must lie in (0, 2/pi], got {delta}"
        )));
    }
    let cd = c_d(d)?;
    let nf = n as f64;
    let n4 = nf * nf * nf * nf;
    let r = delta / (n4.min(f64::MAX) * cd).min(f64::MAX);
    // x = r^2 (1 - r^2 / 4) with r = delta / (n^2 C_d) squared through n^4.
    let r_sq = (delta * delta) / (n4 * cd * cd);
    let x = (r_sq * (1.0 - 0.25 * r_sq)).clamp(0.0, 1.0);
    let _ = r;
    let value = reg_inc_beta(x, (d as f64 - 1.0) / 2.0, 0.5)? / (16.0 * nf);
    // Internal consistency with the closed lower bound where it applies.
    if delta <= 1.0 && (d as f64) <= n4 {
        let df = d as f64;
        let ln_lb = -(1.5 * df + 5.5) * LN_2 - 0.5 * df * fm::ln(df)
            + (-2.0 * df + 1.0) * fm::ln(nf)
            + (df - 1.0) * fm::ln(delta);
        let lb = fm::exp(ln_lb);
        debug_assert!(
            value >= lb * (1.0 - 1e-9),
            "eigenvalue floor {value:e} under its analytic lower bound {lb:e}"
        );
    }
    Ok(EigenFloor { value, c_d: cd })
}

/// The seven terms of the main generalization bound plus the
/// overparameterization side condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundTerms {
    /// n^{-(1 - 1/q)/2}
    pub term1: f64,
    /// (1 + sqrt(J_m n)) p^{-(1 - 1/q)/2}
    pub term2: f64,
    /// sqrt(J_m n) ||eps||_2
    pub term3: f64,
    /// exp(-n^{1/q} / (8 ||g||_inf^2))
    pub term4: f64,
    /// exp(-p^{1/q} / (8 ||g||_1^2))
    pub term5: f64,
    /// exp(-p^{1/q} / (8 n ||g||_1^2))
    pub term6: f64,
    /// 4 / n^{1/m}
    pub term7: f64,
    /// The width threshold 6 J_m ln(4 n^{1 + 1/m}).
    pub p_threshold: f64,
    /// Whether p meets the threshold.
    pub side_condition_ok: bool,
}

impl BoundTerms {
    pub fn as_array(&self) -> [f64; 7] {
        [
            self.term1, self.term2, self.term3, self.term4, self.term5, self.term6, self.term7,
        ]
    }
}

/// Evaluates the seven bound terms at one hypothesis point. Errors name the
/// violated hypothesis.
#[allow(clippy::too_many_arguments)]
pub fn bound_terms(
    n: u64,
    p: u64,
    d: u64,
    m: f64,
    q: f64,
    g_inf: f64,
    g_l1: f64,
    eps_norm: f64,
) -> Result<BoundTerms> {
    if n < 2 {
        return Err(CoreError::Domain(format!(
            "hypothesis n >= 2 violated: n = {n}"
        )));
    }
    if !(q >= 1.0) {
        return Err(CoreError::Domain(format!(
            "hypothesis q >= 1 violated: q = {q}"
        )));
    }
    let nf = n as f64;
    if (d as f64) > nf * nf * nf * nf {
        return Err(CoreError::Domain(format!(
            "hypothesis d <= n^4 violated: d = {d}, n = {n}"
        )));
    }
    if p == 0 {
        return Err(CoreError::Domain("hypothesis p >= 1 violated".into()));
    }
    if !(g_inf > 0.0) || !(g_l1 > 0.0) {
        return Err(CoreError::Domain(
            "hypothesis ||g||_inf > 0 and ||g||_1 > 0 violated".into(),
        ));
    }
    if eps_norm < 0.0 {
        return Err(CoreError::Domain("noise norm must be nonnegative".into()));
    }
    let ln_j = ln_j_m(n, d, m)?;
    let pf = p as f64;
    let ln_n = fm::ln(nf);
    let ln_p = fm::ln(pf);
    let half_rate = 0.5 * (1.0 - 1.0 / q);
    let ln_sqrt_jn = 0.5 * (ln_j + ln_n);

    let term1 = fm::exp(-half_rate * ln_n);
    let term2 = fm::exp(fm::ln_add_exp(0.0, ln_sqrt_jn) - half_rate * ln_p);
    let term3 = if eps_norm == 0.0 {
        0.0
    } else {
        fm::exp(ln_sqrt_jn + fm::ln(eps_norm))
    };
    let n_q = fm::exp(ln_n / q);
    let p_q = fm::exp(ln_p / q);
    let term4 = fm::exp(-n_q / (8.0 * g_inf * g_inf));
    let term5 = fm::exp(-p_q / (8.0 * g_l1 * g_l1));
    let term6 = fm::exp(-p_q / (8.0 * nf * g_l1 * g_l1));
    let term7 = 4.0 * fm::exp(-ln_n / m);

    // ln(6 J ln(4 n^{1+1/m}))
    let inner = fm::ln(4.0) + (1.0 + 1.0 / m) * ln_n;
    let ln_threshold = fm::ln(6.0) + ln_j + fm::ln(inner);
    let p_threshold = fm::exp(ln_threshold);
    let side_condition_ok = ln_p >= ln_threshold;

    Ok(BoundTerms {
        term1,
        term2,
        term3,
        term4,
        term5,
        term6,
        term7,
        p_threshold,
        side_condition_ok,
    })
}

/// High-probability lower bound on min-eig(H H^T)/p: 1 / (J_m(n, d) n).
pub fn mineig_lower(n: u64, d: u64, m: f64) -> Result<f64> {
    Ok(fm::exp(-ln_j_m(n, d, m)? - fm::ln(n as f64)))
}

/// High-probability upper bound on min-eig(H H^T)/p for n >= pi (d - 1):
/// (3 pi^2/8) K^{2/(d-1)} n^{-2/(d-1)} + (3/4) K^{1/(d-1)} n^{-1/(d-1)}
/// with K = (d - 1) B((d-1)/2, 1/2).
pub fn mineig_upper(n: u64, d: u64) -> Result<f64> {
    if d < 2 {
        return Err(CoreError::Domain(format!(
            "mineig_upper needs d >= 2, got {d}"
        )));
    }
    let nf = n as f64;
    let df = d as f64;
    if nf < core::f64::consts::PI * (df - 1.0) {
        return Err(CoreError::Domain(format!(
            "mineig_upper needs n >= pi (d - 1), got n = {n}, d = {d}"
        )));
    }
    let k = (df - 1.0) * beta_fn((df - 1.0) / 2.0, 0.5)?;
    let e1 = 1.0 / (df - 1.0);
    let pi = core::f64::consts::PI;
    Ok(
        3.0 * pi * pi / 8.0 * fm::pow(k, 2.0 * e1) * fm::pow(nf, -2.0 * e1)
            + 0.75 * fm::pow(k, e1) * fm::pow(nf, -e1),
    )
}

/// The variance cap sqrt(p) ||eps||_2 / sqrt(min-eig), for min-eig of the
/// unnormalized Gram H H^T.
pub fn variance_cap(p: u64, mineig: f64, eps_norm: f64) -> Result<f64> {
    if !(mineig > 0.0) {
        return Err(CoreError::Domain(format!(
            "variance_cap needs a positive eigenvalue, got {mineig}"
        )));
    }
    if eps_norm < 0.0 {
        return Err(CoreError::Domain("noise norm must be nonnegative".into()));
    }
    Ok(fm::sqrt(p as f64) * eps_norm / fm::sqrt(mineig))
}

/// Leading term of the comparison generalization bound:
/// sqrt(2 y^T (H^inf)^{-1} y / n).
pub fn comparison_leading_term(data: &Dataset) -> Result<f64> {
    let n = data.n();
    let m = gram_inf(data);
    let factor = CholeskyFactor::factor(&m, n)?;
    let y = data.labels();
    let mut w = factor.solve(y);
    // One refinement round for ill-conditioned limit kernels.
    let mut mw = vec![0.0; n];
    linalg::symv(&m, n, &w, &mut mw);
    let r: alloc::vec::Vec<f64> = y.iter().zip(mw.iter()).map(|(a, b)| a - b).collect();
    let dw = factor.solve(&r);
    for i in 0..n {
        w[i] += dw[i];
    }
    let quad = linalg::dot(y, &w).max(0.0);
    Ok(fm::sqrt(2.0 * quad / n as f64))
}

/// Everything the bounds experiment reports for one (n, p, d) grid point.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub n: u64,
    pub p: u64,
    pub d: u64,
    pub m: f64,
    pub q: f64,
    pub delta: f64,
    pub j_m: f64,
    pub c_d: f64,
    pub d_ndd: f64,
    pub terms: BoundTerms,
    pub mineig_lower: f64,
    pub mineig_upper: f64,
    pub variance_cap: f64,
    pub p_threshold: f64,
}

/// Builds a full report; delta defaults to n^{-1/m}, which ties the
/// eigenvalue floor to J_m, and the variance cap uses the worst-case
/// eigenvalue bound p * mineig_lower.
#[allow(clippy::too_many_arguments)]
pub fn bound_report(
    n: u64,
    p: u64,
    d: u64,
    m: f64,
    q: f64,
    g_inf: f64,
    g_l1: f64,
    eps_norm: f64,
) -> Result<BoundReport> {
    let delta = fm::exp(-fm::ln(n as f64) / m);
    let floor = d_ndd(n, d, delta)?;
    let terms = bound_terms(n, p, d, m, q, g_inf, g_l1, eps_norm)?;
    let lower = mineig_lower(n, d, m)?;
    let upper = mineig_upper(n, d)?;
    let cap = variance_cap(p, lower * p as f64, eps_norm.max(0.0))?;
    Ok(BoundReport {
        n,
        p,
        d,
        m,
        q,
        delta,
        j_m: j_m(n, d, m)?,
        c_d: floor.c_d,
        d_ndd: floor.value,
        terms,
        mineig_lower: lower,
        mineig_upper: upper,
        variance_cap: cap,
        p_threshold: terms.p_threshold,
    })
}
