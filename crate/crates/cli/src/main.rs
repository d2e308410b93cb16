//! `cw` — experiment runner for the magnetization-dynamics toolkit.
//!
//! Usage:
//!
//! ```text
//! cw <experiment> --config <file> [--seed S] [--out DIR]
//! ```
//!
//! The config is a single JSON document describing one experiment. Seed
//! precedence: `--seed` flag, then the `CW_SEED` environment variable, then
//! the config's `seed` field, then a fresh random value (recorded in the
//! manifest). Exit codes: 0 success, 2 usage error, 3 configuration or
//! admissibility error, 4 numeric failure.

mod config;
mod experiments;
mod output;

use config::ExperimentConfig;
use output::{write_manifest, Manifest, OutputWriter};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

const EXPERIMENTS: &[&str] = &[
    "simulate",
    "genconv",
    "clt-compare",
    "action",
    "optimal-path",
    "quasipotential",
    "sde",
    "stationary",
    "containment",
    "table1",
];

struct Args {
    experiment: String,
    config: PathBuf,
    seed: Option<u64>,
    out: PathBuf,
}

fn usage() -> String {
    format!(
        "usage: cw <experiment> --config <file> [--seed S] [--out DIR]\n\
         experiments: {}",
        EXPERIMENTS.join(", ")
    )
}

fn parse_args(argv: &[String]) -> Result<Args, String> {
    let mut positional = None;
    let mut config = None;
    let mut seed = None;
    let mut out = PathBuf::from(".");
    let mut i = 0;
    while i < argv.len() {
        match argv[i].as_str() {
            "--config" => {
                i += 1;
                config = Some(PathBuf::from(
                    argv.get(i).ok_or_else(|| "--config needs a value".to_string())?,
                ));
            }
            "--seed" => {
                i += 1;
                let s = argv.get(i).ok_or_else(|| "--seed needs a value".to_string())?;
                seed = Some(s.parse::<u64>().map_err(|_| format!("invalid seed '{s}'"))?);
            }
            "--out" => {
                i += 1;
                out = PathBuf::from(argv.get(i).ok_or_else(|| "--out needs a value".to_string())?);
            }
            "--help" | "-h" => return Err(usage()),
            a if positional.is_none() && !a.starts_with('-') => positional = Some(a.to_string()),
            a => return Err(format!("unexpected argument '{a}'\n{}", usage())),
        }
        i += 1;
    }
    let experiment = positional.ok_or_else(usage)?;
    if !EXPERIMENTS.contains(&experiment.as_str()) {
        return Err(format!("unknown experiment '{experiment}'\n{}", usage()));
    }
    let config = config.ok_or_else(|| format!("missing --config\n{}", usage()))?;
    Ok(Args { experiment, config, seed, out })
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

    let raw = match std::fs::read_to_string(&args.config) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("cannot read config {}: {e}", args.config.display());
            return ExitCode::from(2);
        }
    };
    let mut doc: serde_json::Value = match serde_json::from_str(&raw) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("config is not valid JSON: {e}");
            return ExitCode::from(2);
        }
    };
    let obj = match doc.as_object_mut() {
        Some(o) => o,
        None => {
            eprintln!("config must be a JSON object");
            return ExitCode::from(2);
        }
    };

    // The positional experiment selects; a config-side tag must agree.
    match obj.get("experiment").and_then(|v| v.as_str()) {
        Some(tag) if tag != args.experiment => {
            eprintln!("config experiment '{tag}' does not match requested '{}'", args.experiment);
            return ExitCode::from(2);
        }
        Some(_) => {}
        None => {
            obj.insert("experiment".into(), serde_json::Value::String(args.experiment.clone()));
        }
    }

    // Seed precedence: flag, CW_SEED, config field, entropy.
    let env_seed = std::env::var("CW_SEED").ok().and_then(|s| s.parse::<u64>().ok());
    let config_seed = obj.get("seed").and_then(|v| v.as_u64());
    let seed = args
        .seed
        .or(env_seed)
        .or(config_seed)
        .unwrap_or_else(|| std::time::UNIX_EPOCH.elapsed().map_or(0, |d| d.as_nanos() as u64));
    let doc_echo = doc.clone();

    let cfg: ExperimentConfig = match serde_json::from_value(doc) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config does not describe a valid '{}' run: {e}", args.experiment);
            return ExitCode::from(2);
        }
    };

    let violations = cfg.validate();
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("config violation: {v}");
        }
        return ExitCode::from(3);
    }

    let started = Instant::now();
    let mut writer = match OutputWriter::new(&args.out) {
        Ok(w) => w,
        Err(e) => {
            eprintln!("cannot create output directory: {e}");
            return ExitCode::from(1);
        }
    };
    if let Err(e) = experiments::run(&cfg, seed, &mut writer) {
        eprintln!("run failed: {e}");
        return ExitCode::from(experiments::exit_code_for(&e) as u8);
    }

    let manifest = Manifest {
        experiment: cfg.name(),
        crate_version: env!("CARGO_PKG_VERSION"),
        seed,
        config: &doc_echo,
        wall_time_ms: started.elapsed().as_millis(),
        files: writer.files(),
    };
    if let Err(e) = write_manifest(&args.out, &manifest) {
        eprintln!("cannot write manifest: {e}");
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
