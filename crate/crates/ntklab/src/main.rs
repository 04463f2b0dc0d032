//! CLI: `ntklab <subcommand> --config <path> [--out <path>]
//! [--seed-offset k] [--threads t]`.
//!
//! Subcommands mirror the experiment identifiers. Exit codes: 0 on full
//! success, 1 when any (seed, grid-point) record failed, 2 on usage or
//! configuration errors. NTKLAB_THREADS overrides --threads.

use ntklab::config::{parse_config, ExperimentConfig, ExperimentKind};
use ntklab::experiments::{
    bounds_table, harmonic_table, run_experiment, target_learnable_distance,
};
use ntklab::pool::resolve_threads;
use ntklab::records::{write_bounds_csv, write_csv, write_harmonic_csv};
use std::path::PathBuf;
use std::process::ExitCode;

struct Args {
    kind: ExperimentKind,
    config: PathBuf,
    out: Option<PathBuf>,
    seed_offset: u64,
    threads: Option<usize>,
}

fn usage() -> String {
    let subs: Vec<&str> = ExperimentKind::all().iter().map(|k| k.name()).collect();
    format!(
        "usage: ntklab <subcommand> --config <path> [--out <path>] [--seed-offset k] [--threads t]\n\
         subcommands: {}",
        subs.join(", ")
    )
}

fn parse_args(argv: &[String]) -> Result<Args, String> {
    if argv.is_empty() {
        return Err(usage());
    }
    let kind = ExperimentKind::from_name(&argv[0])
        .ok_or_else(|| format!("unknown subcommand `{}`\n{}", argv[0], usage()))?;
    let mut config = None;
    let mut out = None;
    let mut seed_offset = 0u64;
    let mut threads = None;
    let mut i = 1;
    while i < argv.len() {
        let flag = argv[i].as_str();
        let value = argv
            .get(i + 1)
            .ok_or_else(|| format!("missing value for `{flag}`"))?;
        match flag {
            "--config" => config = Some(PathBuf::from(value)),
            "--out" => out = Some(PathBuf::from(value)),
            "--seed-offset" => {
                seed_offset = value
                    .parse()
                    .map_err(|_| format!("bad value for --seed-offset: {value}"))?
            }
            "--threads" => {
                threads = Some(
                    value
                        .parse()
                        .map_err(|_| format!("bad value for --threads: {value}"))?,
                )
            }
            other => return Err(format!("unknown flag `{other}`\n{}", usage())),
        }
        i += 2;
    }
    let config = config.ok_or_else(|| format!("--config is required\n{}", usage()))?;
    Ok(Args {
        kind,
        config,
        out,
        seed_offset,
        threads,
    })
}

fn load_config(args: &Args) -> Result<ExperimentConfig, String> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| format!("cannot read {}: {e}", args.config.display()))?;
    let mut cfg = parse_config(&text).map_err(|e| e.to_string())?;
    if cfg.experiment != args.kind {
        return Err(format!(
            "config names experiment `{}` but the subcommand is `{}`",
            cfg.experiment.name(),
            args.kind.name()
        ));
    }
    if args.seed_offset != 0 {
        for s in cfg.seeds.iter_mut() {
            *s = s.wrapping_add(args.seed_offset);
        }
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let args = match parse_args(&argv) {
        Ok(a) => a,
        Err(msg) => {
            eprintln!("{msg}");
            return ExitCode::from(2);
        }
    };
    let cfg = match load_config(&args) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("{msg}");
            return ExitCode::from(2);
        }
    };
    let out_path = args
        .out
        .clone()
        .or_else(|| cfg.output_path.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", cfg.experiment.name())));
    let threads = resolve_threads(args.threads);

    match cfg.experiment {
        ExperimentKind::HarmonicTable => {
            let rows = match harmonic_table(&cfg) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("harmonic table failed: {e}");
                    return ExitCode::from(1);
                }
            };
            if let Err(e) = write_harmonic_csv(&rows, &out_path) {
                eprintln!("cannot write {}: {e}", out_path.display());
                return ExitCode::from(1);
            }
            println!("wrote {} rows to {}", rows.len(), out_path.display());
            for r in &rows {
                println!(
                    "l={} d={} c_h={:+.6e} {}",
                    r.l, r.d, r.c_h, r.classification
                );
            }
            ExitCode::SUCCESS
        }
        ExperimentKind::Bounds => {
            let rows = match bounds_table(&cfg) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("bound report failed: {e}");
                    return ExitCode::from(1);
                }
            };
            if let Err(e) = write_bounds_csv(&rows, &out_path) {
                eprintln!("cannot write {}: {e}", out_path.display());
                return ExitCode::from(1);
            }
            println!("wrote {} rows to {}", rows.len(), out_path.display());
            for r in &rows {
                let b = &r.report;
                println!(
                    "n={} p={} d={}: J_m={:.3e} mineig in [{:.3e}, {:.3e}] width {} (threshold {:.3e})",
                    b.n,
                    b.p,
                    b.d,
                    b.j_m,
                    b.mineig_lower,
                    b.mineig_upper,
                    if b.terms.side_condition_ok { "satisfied" } else { "NOT satisfied" },
                    b.p_threshold
                );
            }
            ExitCode::SUCCESS
        }
        _ => {
            let output = run_experiment(&cfg, threads);
            for w in &output.warnings {
                eprintln!("warning: {w}");
            }
            if let Err(e) = write_csv(&output.records, &out_path) {
                eprintln!("cannot write {}: {e}", out_path.display());
                return ExitCode::from(1);
            }
            println!(
                "wrote {} records to {} ({} failures)",
                output.records.len(),
                out_path.display(),
                output.failures.len()
            );
            match target_learnable_distance(&cfg) {
                Ok(Some(dist)) => println!("target distance to the learnable class: {dist}"),
                Ok(None) => {
                    println!("target distance to the learnable class: not computable")
                }
                Err(_) => {}
            }
            if !output.failures.is_empty() {
                for f in &output.failures {
                    eprintln!("failed: {} -> {}", f.context, f.error);
                }
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
    }
}
