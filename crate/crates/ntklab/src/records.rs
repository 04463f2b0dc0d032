//! Output records and their canonical CSV encodings.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

/// Fitted model identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Model {
    Ntk,
    Nn,
    FourierL2,
    FourierL1,
    GaussianFormula,
    NullRisk,
    FInf,
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Ntk => "ntk",
            Model::Nn => "nn",
            Model::FourierL2 => "fourier_l2",
            Model::FourierL1 => "fourier_l1",
            Model::GaussianFormula => "gaussian_formula",
            Model::NullRisk => "null_risk",
            Model::FInf => "f_inf",
        }
    }
}

/// One measured value: a (model, seed, grid point, metric) cell of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRecord {
    pub experiment: &'static str,
    pub model: Model,
    pub seed: u64,
    pub n: usize,
    pub p: usize,
    pub d: usize,
    pub sigma_sq: f64,
    /// Base metrics: test_mse, train_mse, model_error, mineig_over_p,
    /// sup_gap; variants carry a suffix (test_mse_gap, model_error_const,
    /// model_error_dirac, *_se).
    pub metric: String,
    pub value: f64,
}

fn sort_key(r: &CurveRecord) -> (&'static str, usize, usize, f64, u64, &str) {
    (
        r.model.name(),
        r.n,
        r.p,
        r.sigma_sq,
        r.seed,
        r.metric.as_str(),
    )
}

/// Canonical row order: (model, n, p, sigma_sq, seed, metric).
pub fn sort_records(records: &mut [CurveRecord]) {
    records.sort_by(|a, b| {
        let (am, an, ap, asig, asd, amet) = sort_key(a);
        let (bm, bn, bp, bsig, bsd, bmet) = sort_key(b);
        am.cmp(bm)
            .then(an.cmp(&bn))
            .then(ap.cmp(&bp))
            .then(asig.partial_cmp(&bsig).expect("finite sigma"))
            .then(asd.cmp(&bsd))
            .then(amet.cmp(bmet))
    });
}

pub const CSV_HEADER: &str = "experiment,model,seed,n,p,d,sigma_sq,metric,value";

/// Writes records in the canonical order with the exact header; values use
/// shortest round-trip decimals.
pub fn write_csv(records: &[CurveRecord], path: &Path) -> io::Result<()> {
    let mut sorted = records.to_vec();
    sort_records(&mut sorted);
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{CSV_HEADER}")?;
    for r in &sorted {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.experiment,
            r.model.name(),
            r.seed,
            r.n,
            r.p,
            r.d,
            r.sigma_sq,
            r.metric,
            r.value
        )?;
    }
    w.flush()
}

/// One row of the harmonic coefficient table.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicRow {
    pub l: usize,
    pub d: usize,
    pub c_h: f64,
    /// "zero" or "nonzero" under the fixed threshold.
    pub classification: &'static str,
}

pub fn write_harmonic_csv(rows: &[HarmonicRow], path: &Path) -> io::Result<()> {
    let mut sorted = rows.to_vec();
    sorted.sort_by(|a, b| (a.d, a.l).cmp(&(b.d, b.l)));
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "l,d,c_h,classification")?;
    for r in &sorted {
        writeln!(w, "{},{},{},{}", r.l, r.d, r.c_h, r.classification)?;
    }
    w.flush()
}

/// One row of the bound-report table.
#[derive(Debug, Clone)]
pub struct BoundRow {
    pub report: ntk_core::bounds::BoundReport,
}

pub const BOUNDS_HEADER: &str = "n,p,d,m,q,delta,j_m,c_d,d_ndd,term1,term2,term3,term4,term5,term6,term7,mineig_lower,mineig_upper,variance_cap,p_threshold,side_condition";

pub fn write_bounds_csv(rows: &[BoundRow], path: &Path) -> io::Result<()> {
    let mut sorted: Vec<&BoundRow> = rows.iter().collect();
    sorted.sort_by_key(|r| (r.report.n, r.report.d, r.report.p));
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{BOUNDS_HEADER}")?;
    for r in sorted {
        let b = &r.report;
        let t = b.terms.as_array();
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            b.n,
            b.p,
            b.d,
            b.m,
            b.q,
            b.delta,
            b.j_m,
            b.c_d,
            b.d_ndd,
            t[0],
            t[1],
            t[2],
            t[3],
            t[4],
            t[5],
            t[6],
            b.mineig_lower,
            b.mineig_upper,
            b.variance_cap,
            b.p_threshold,
            b.terms.side_condition_ok
        )?;
    }
    w.flush()
}
