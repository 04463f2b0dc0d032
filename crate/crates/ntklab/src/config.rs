//! Line-oriented `key = value` configuration with repeated-key lists and
//! `#` comments; unknown keys, malformed values, and duplicate scalars are
//! reported with their line number.

use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "config error: {}", self.message)
        } else {
            write!(f, "config error at line {}: {}", self.line, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError {
        line,
        message: message.into(),
    })
}

/// Experiment identifiers; subcommands mirror these.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Figure1a,
    Figure1b,
    Figure3a,
    Figure3b,
    Delta,
    HarmonicTable,
    Bounds,
    Sweep,
}

impl ExperimentKind {
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "figure1a" => ExperimentKind::Figure1a,
            "figure1b" => ExperimentKind::Figure1b,
            "figure3a" => ExperimentKind::Figure3a,
            "figure3b" => ExperimentKind::Figure3b,
            "delta" => ExperimentKind::Delta,
            "harmonic-table" => ExperimentKind::HarmonicTable,
            "bounds" => ExperimentKind::Bounds,
            "sweep" => ExperimentKind::Sweep,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Figure1a => "figure1a",
            ExperimentKind::Figure1b => "figure1b",
            ExperimentKind::Figure3a => "figure3a",
            ExperimentKind::Figure3b => "figure3b",
            ExperimentKind::Delta => "delta",
            ExperimentKind::HarmonicTable => "harmonic-table",
            ExperimentKind::Bounds => "bounds",
            ExperimentKind::Sweep => "sweep",
        }
    }

    pub fn all() -> &'static [ExperimentKind] {
        &[
            ExperimentKind::Figure1a,
            ExperimentKind::Figure1b,
            ExperimentKind::Figure3a,
            ExperimentKind::Figure3b,
            ExperimentKind::Delta,
            ExperimentKind::HarmonicTable,
            ExperimentKind::Bounds,
            ExperimentKind::Sweep,
        ]
    }
}

/// Config-level ground-truth descriptor; the core spec is built per run once
/// the dimension and seed are known.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetSpec {
    /// `fourier k1 k2 ...` — unit sin+cos coefficients at the listed
    /// frequencies (d = 2).
    FourierUnit(Vec<usize>),
    /// `fourier-term k sin cos`, repeatable.
    FourierTerms(Vec<(usize, f64, f64)>),
    /// `axis-poly l` — (x . e_d)^l.
    AxisPoly(usize),
    /// `harmonic l` — the degree-l axis harmonic along e_d (d >= 3).
    Harmonic(usize),
    /// `const-g c` — the convolved target with constant source c.
    ConstG(f64),
    /// `dirac-g w` — the convolved target with one point mass of weight w
    /// at a seed-derived uniform location.
    DiracG(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NnConfig {
    pub enabled: bool,
    pub epochs: usize,
    /// None means the default 1/sqrt(p).
    pub step_size: Option<f64>,
}

/// A fully validated experiment configuration with preset defaults filled.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub n: usize,
    pub d: usize,
    pub p_grid: Vec<usize>,
    pub n_grid: Vec<usize>,
    pub sigma_sq_list: Vec<f64>,
    pub seeds: Vec<u64>,
    pub target: TargetSpec,
    pub test_points: usize,
    pub mc_samples: usize,
    /// Fixed squared noise norm (the figure-1 convention); when set, the
    /// drawn noise vector is rescaled to exactly this norm.
    pub noise_norm_sq: Option<f64>,
    pub nn: NnConfig,
    pub output_path: Option<String>,
    // Bound-report knobs.
    pub m: Option<f64>,
    pub q: f64,
    pub g_inf: f64,
    pub g_l1: f64,
    pub eps_norm: f64,
    // Harmonic-table knobs.
    pub l_max: usize,
    pub d_list: Vec<usize>,
}

#[derive(Default)]
struct RawConfig {
    experiment: Option<(String, usize)>,
    n: Option<usize>,
    d: Option<usize>,
    p_grid: Vec<usize>,
    n_grid: Vec<usize>,
    sigma_sq_list: Vec<f64>,
    seeds: Vec<u64>,
    target: Option<(TargetSpec, usize)>,
    fourier_terms: Vec<(usize, f64, f64)>,
    test_points: Option<usize>,
    mc_samples: Option<usize>,
    noise_norm_sq: Option<f64>,
    nn_enabled: Option<bool>,
    nn_epochs: Option<usize>,
    nn_step_size: Option<f64>,
    output_path: Option<String>,
    m: Option<f64>,
    q: Option<f64>,
    g_inf: Option<f64>,
    g_l1: Option<f64>,
    eps_norm: Option<f64>,
    l_max: Option<usize>,
    d_list: Vec<usize>,
}

fn parse_scalar<T: std::str::FromStr>(
    value: &str,
    line: usize,
    key: &str,
) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError {
        line,
        message: format!("malformed value for `{key}`: `{value}`"),
    })
}

fn parse_list<T: std::str::FromStr>(
    value: &str,
    line: usize,
    key: &str,
) -> Result<Vec<T>, ConfigError> {
    let mut out = Vec::new();
    for tok in value.split_whitespace() {
        out.push(parse_scalar(tok, line, key)?);
    }
    if out.is_empty() {
        return err(line, format!("empty list for `{key}`"));
    }
    Ok(out)
}

fn set_scalar<T>(slot: &mut Option<T>, v: T, line: usize, key: &str) -> Result<(), ConfigError> {
    if slot.is_some() {
        return err(line, format!("duplicate key `{key}`"));
    }
    *slot = Some(v);
    Ok(())
}

fn parse_target(value: &str, line: usize) -> Result<TargetSpec, ConfigError> {
    let mut toks = value.split_whitespace();
    let kind = toks.next().ok_or(ConfigError {
        line,
        message: "empty target descriptor".into(),
    })?;
    let rest: Vec<&str> = toks.collect();
    match kind {
        "fourier" => {
            if rest.is_empty() {
                return err(line, "`target = fourier` needs at least one frequency");
            }
            let ks = rest
                .iter()
                .map(|t| parse_scalar::<usize>(t, line, "target"))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(TargetSpec::FourierUnit(ks))
        }
        "axis-poly" => {
            if rest.len() != 1 {
                return err(line, "`target = axis-poly` takes exactly one degree");
            }
            Ok(TargetSpec::AxisPoly(parse_scalar(rest[0], line, "target")?))
        }
        "harmonic" => {
            if rest.len() != 1 {
                return err(line, "`target = harmonic` takes exactly one degree");
            }
            Ok(TargetSpec::Harmonic(parse_scalar(rest[0], line, "target")?))
        }
        "const-g" => {
            if rest.len() != 1 {
                return err(line, "`target = const-g` takes exactly one value");
            }
            Ok(TargetSpec::ConstG(parse_scalar(rest[0], line, "target")?))
        }
        "dirac-g" => {
            if rest.len() != 1 {
                return err(line, "`target = dirac-g` takes exactly one weight");
            }
            Ok(TargetSpec::DiracG(parse_scalar(rest[0], line, "target")?))
        }
        other => err(line, format!("unknown target kind `{other}`")),
    }
}

/// Parses a configuration document. Presets fill every omitted field.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut raw = RawConfig::default();
    for (lineno, line_raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = match line_raw.find('#') {
            Some(pos) => &line_raw[..pos],
            None => line_raw,
        };
        let content = content.trim();
        if content.is_empty() {
            continue;
        }
        let Some(eq) = content.find('=') else {
            return err(line, format!("expected `key = value`, got `{content}`"));
        };
        let key = content[..eq].trim();
        let value = content[eq + 1..].trim();
        if value.is_empty() {
            return err(line, format!("missing value for `{key}`"));
        }
        match key {
            "experiment" => {
                if raw.experiment.is_some() {
                    return err(line, "duplicate key `experiment`");
                }
                raw.experiment = Some((value.to_string(), line));
            }
            "n" => set_scalar(&mut raw.n, parse_scalar(value, line, key)?, line, key)?,
            "d" => set_scalar(&mut raw.d, parse_scalar(value, line, key)?, line, key)?,
            "p_grid" => raw.p_grid.extend(parse_list::<usize>(value, line, key)?),
            "n_grid" => raw.n_grid.extend(parse_list::<usize>(value, line, key)?),
            "sigma_sq_list" => raw
                .sigma_sq_list
                .extend(parse_list::<f64>(value, line, key)?),
            "seeds" => raw.seeds.extend(parse_list::<u64>(value, line, key)?),
            "target" => {
                let t = parse_target(value, line)?;
                if raw.target.is_some() || !raw.fourier_terms.is_empty() {
                    return err(line, "duplicate key `target`");
                }
                raw.target = Some((t, line));
            }
            "fourier-term" => {
                if raw.target.is_some() {
                    return err(line, "`fourier-term` cannot be mixed with `target`");
                }
                let toks: Vec<&str> = value.split_whitespace().collect();
                if toks.len() != 3 {
                    return err(line, "`fourier-term` takes `k sin_coef cos_coef`");
                }
                raw.fourier_terms.push((
                    parse_scalar(toks[0], line, key)?,
                    parse_scalar(toks[1], line, key)?,
                    parse_scalar(toks[2], line, key)?,
                ));
            }
            "test_points" => set_scalar(
                &mut raw.test_points,
                parse_scalar(value, line, key)?,
                line,
                key,
            )?,
            "mc_samples" => set_scalar(
                &mut raw.mc_samples,
                parse_scalar(value, line, key)?,
                line,
                key,
            )?,
            "noise_norm_sq" => set_scalar(
                &mut raw.noise_norm_sq,
                parse_scalar(value, line, key)?,
                line,
                key,
            )?,
            "nn.enabled" => set_scalar(
                &mut raw.nn_enabled,
                parse_scalar(value, line, key)?,
                line,
                key,
            )?,
            "nn.epochs" => set_scalar(
                &mut raw.nn_epochs,
                parse_scalar(value, line, key)?,
                line,
                key,
            )?,
            "nn.step_size" => set_scalar(
                &mut raw.nn_step_size,
                parse_scalar(value, line, key)?,
                line,
                key,
            )?,
            "output_path" => {
                if raw.output_path.is_some() {
                    return err(line, "duplicate key `output_path`");
                }
                raw.output_path = Some(value.to_string());
            }
            "m" => set_scalar(&mut raw.m, parse_scalar(value, line, key)?, line, key)?,
            "q" => set_scalar(&mut raw.q, parse_scalar(value, line, key)?, line, key)?,
            "g_inf" => set_scalar(&mut raw.g_inf, parse_scalar(value, line, key)?, line, key)?,
            "g_l1" => set_scalar(&mut raw.g_l1, parse_scalar(value, line, key)?, line, key)?,
            "eps_norm" => set_scalar(
                &mut raw.eps_norm,
                parse_scalar(value, line, key)?,
                line,
                key,
            )?,
            "l_max" => set_scalar(&mut raw.l_max, parse_scalar(value, line, key)?, line, key)?,
            "d_list" => raw.d_list.extend(parse_list::<usize>(value, line, key)?),
            other => return err(line, format!("unknown key `{other}`")),
        }
    }

    let (experiment, exp_line) = match &raw.experiment {
        Some((name, line)) => match ExperimentKind::from_name(name) {
            Some(kind) => (kind, *line),
            None => return err(*line, format!("unknown experiment `{name}`")),
        },
        None => return err(0, "missing `experiment` key"),
    };
    let _ = exp_line;
    finish(experiment, raw)
}

/// Builds a config directly from an experiment kind with all defaults (the
/// no-overrides path used by the subcommand dispatch).
pub fn default_config(kind: ExperimentKind) -> ExperimentConfig {
    finish(kind, RawConfig::default()).expect("defaults are valid")
}

fn finish(kind: ExperimentKind, raw: RawConfig) -> Result<ExperimentConfig, ConfigError> {
    use ExperimentKind::*;
    let default_p_decades = || vec![100usize, 300, 1000, 3000, 10_000, 30_000, 100_000];
    let target = if !raw.fourier_terms.is_empty() {
        Some(TargetSpec::FourierTerms(raw.fourier_terms.clone()))
    } else {
        raw.target.as_ref().map(|(t, _)| t.clone())
    };
    let cfg = ExperimentConfig {
        experiment: kind,
        n: raw.n.unwrap_or(50),
        d: raw.d.unwrap_or(2),
        p_grid: if !raw.p_grid.is_empty() {
            raw.p_grid
        } else {
            match kind {
                Figure1a | Figure1b => default_p_decades(),
                Figure3a => vec![1000, 2000, 5000, 10_000, 20_000],
                Figure3b | Delta => vec![20_000],
                Bounds => vec![20_000],
                HarmonicTable => vec![],
                Sweep => vec![1000],
            }
        },
        n_grid: if !raw.n_grid.is_empty() {
            raw.n_grid
        } else {
            match kind {
                Figure3b => vec![25, 50, 100, 200],
                Delta => vec![8, 16, 32, 64, 128],
                Bounds => vec![10, 50, 100],
                _ => vec![raw.n.unwrap_or(50)],
            }
        },
        sigma_sq_list: if !raw.sigma_sq_list.is_empty() {
            raw.sigma_sq_list
        } else {
            match kind {
                Figure3a => vec![0.0, 0.04, 0.16],
                Figure3b => vec![0.0, 0.01],
                _ => vec![0.0],
            }
        },
        seeds: if !raw.seeds.is_empty() {
            raw.seeds
        } else {
            match kind {
                Figure1a | Figure1b => (1..=9).collect(),
                Figure3a | Figure3b => (1..=5).collect(),
                Delta => (1..=10).collect(),
                _ => vec![1],
            }
        },
        target: target.unwrap_or(match kind {
            Figure1b => TargetSpec::FourierUnit(vec![3, 5, 7, 9]),
            _ => TargetSpec::FourierUnit(vec![0, 1, 2, 4]),
        }),
        test_points: raw.test_points.unwrap_or(512),
        mc_samples: raw.mc_samples.unwrap_or(200_000),
        noise_norm_sq: raw.noise_norm_sq.or(match kind {
            Figure1a | Figure1b => Some(0.01),
            _ => None,
        }),
        nn: NnConfig {
            enabled: raw.nn_enabled.unwrap_or(false),
            epochs: raw.nn_epochs.unwrap_or(2000),
            step_size: raw.nn_step_size,
        },
        output_path: raw.output_path,
        m: raw.m,
        q: raw.q.unwrap_or(4.0),
        g_inf: raw.g_inf.unwrap_or(1.0),
        g_l1: raw.g_l1.unwrap_or(1.0),
        eps_norm: raw.eps_norm.unwrap_or(0.1),
        l_max: raw.l_max.unwrap_or(8),
        d_list: if !raw.d_list.is_empty() {
            raw.d_list
        } else {
            match kind {
                Delta => vec![2, 10],
                _ => vec![3, 5],
            }
        },
    };

    // Validation.
    if cfg.d < 2 {
        return err(0, format!("d must be >= 2, got {}", cfg.d));
    }
    if cfg.n < 1 {
        return err(0, "n must be >= 1");
    }
    if cfg.test_points < 1 {
        return err(0, "test_points must be >= 1");
    }
    if cfg.seeds.is_empty() {
        return err(0, "seed list is empty");
    }
    let distinct: BTreeSet<u64> = cfg.seeds.iter().copied().collect();
    if distinct.len() != cfg.seeds.len() {
        return err(0, "seeds must be distinct");
    }
    if cfg.p_grid.is_empty() && kind != HarmonicTable {
        return err(0, "p_grid is empty");
    }
    if cfg.n_grid.is_empty() {
        return err(0, "n_grid is empty");
    }
    if cfg.sigma_sq_list.is_empty() {
        return err(0, "sigma_sq_list is empty");
    }
    if cfg.sigma_sq_list.iter().any(|s| *s < 0.0) {
        return err(0, "noise variances must be nonnegative");
    }
    if cfg.d_list.iter().any(|d| *d < 2) {
        return err(0, "d_list entries must be >= 2");
    }
    Ok(cfg)
}
