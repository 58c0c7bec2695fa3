//! `fbsim` — enumerate, validate, run, and evaluate fake-base-station
//! configuration instances from the command line.
//!
//! Exit codes: 0 on success (including resolved validations), 1 when a
//! configuration is rejected or a run fails, 2 on usage or parse errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Deserialize;

use fbsim_core::config::{
    canonical_yaml, enumerate_instances, load_instance_set, load_profile, reference_instances,
    Adaptation, AppVariation, ConfigProfile, HijackMethod, Targeting,
};
use fbsim_core::detect::{CoverageMatrix, DetectorId};
use fbsim_core::pipeline::{run, RunOptions};
use fbsim_core::radio::{scan, CellProfile, Environment};
use fbsim_core::rules::{canonical_scan_db, check, list_rules, Verdict};
use fbsim_core::trace::to_jsonl;
use fbsim_core::ue::{RrcState, SuccessModel, UeContext};

const DEFAULT_ENV_YAML: &str = include_str!("../assets/default_env.yaml");

#[derive(Parser)]
#[command(
    name = "fbsim",
    version,
    about = "Fake base station simulator and detector evaluation harness"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Enumerate the feasible configuration space to a directory of YAML
    /// profiles, optionally filtered by axis values.
    Enumerate(EnumerateArgs),
    /// Validate a profile against the dependency rules.
    Validate(ValidateArgs),
    /// Execute one instance and write its trace and manifest.
    Run(RunArgs),
    /// Run an instance set against the detector suite and emit the coverage
    /// matrix with its blind-spot summary.
    Evaluate(EvaluateArgs),
    /// List the dependency rule registry.
    Rules,
}

#[derive(Args)]
struct EnumerateArgs {
    /// Keep only instances with this hijack method
    /// (jamming|handover|cell_reselection).
    #[arg(long)]
    hijack: Option<String>,
    /// Keep only instances with this application variation
    /// (e.g. imsi_reject_based, dos, redirect_sib7).
    #[arg(long)]
    variation: Option<String>,
    /// Keep only instances with this targeting mode
    /// (arbitrary|adaptive|targeted).
    #[arg(long)]
    targeting: Option<String>,
    /// Keep only instances with this launch adaptation (none|full).
    #[arg(long = "launch-adaptation")]
    launch_adaptation: Option<String>,
    /// Output directory for the profile files.
    #[arg(long, env = "FBSIM_OUT_DIR", default_value = "instances")]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    /// Profile YAML file.
    profile: PathBuf,
    /// Environment YAML file scanned to form the prior state; defaults to the
    /// built-in three-cell environment.
    #[arg(long)]
    env: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Profile YAML file.
    profile: PathBuf,
    /// Environment YAML file; defaults to the built-in three-cell,
    /// five-UE environment.
    #[arg(long)]
    env: Option<PathBuf>,
    /// Override the profile's RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Trial index; different trials of one seed diverge deterministically.
    #[arg(long, default_value_t = 0)]
    trial: u64,
    /// Simulated duration in milliseconds.
    #[arg(long = "duration-ms", default_value_t = 20_000)]
    duration_ms: u64,
    /// Sample hijack success from the measured rate table instead of the
    /// deterministic margin thresholds.
    #[arg(long)]
    stochastic: bool,
    /// Output directory for trace.jsonl and manifest.json.
    #[arg(long, env = "FBSIM_OUT_DIR", default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Instance set (YAML sequence of profiles); defaults to the built-in
    /// reference set.
    #[arg(long)]
    instances: Option<PathBuf>,
    /// Environment YAML file; defaults to the built-in three-cell,
    /// five-UE environment.
    #[arg(long)]
    env: Option<PathBuf>,
    /// Worker threads for the per-instance fan-out.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Matrix format printed to stdout (both files are always written).
    #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
    format: OutFormat,
    /// Output directory for coverage.csv and coverage.json.
    #[arg(long, env = "FBSIM_OUT_DIR", default_value = ".")]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

/// On-disk environment description. Cells use the full cell schema; UEs are
/// reduced to the fields that matter before a run starts.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct EnvSpec {
    cells: Vec<CellProfile>,
    ues: Vec<UeSpec>,
    scanner_position: [f64; 2],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct UeSpec {
    ue_id: Option<String>,
    imsi: Option<String>,
    position: [f64; 2],
    rrc_state: RrcState,
    legacy_capable: bool,
}

impl Default for UeSpec {
    fn default() -> Self {
        UeSpec {
            ue_id: None,
            imsi: None,
            position: [0.0, 0.0],
            rrc_state: RrcState::Idle,
            legacy_capable: true,
        }
    }
}

impl EnvSpec {
    fn into_environment(self) -> Environment {
        let ues = self
            .ues
            .into_iter()
            .enumerate()
            .map(|(i, spec)| {
                let mut ue = UeContext::new(
                    spec.ue_id.unwrap_or_else(|| format!("ue-{i}")),
                    spec.imsi.unwrap_or_else(|| format!("00101{:010}", i + 1)),
                    spec.position,
                );
                ue.rrc_state = spec.rrc_state;
                ue.legacy_capable = spec.legacy_capable;
                ue
            })
            .collect();
        let mut env = Environment::new(self.cells, ues);
        env.scanner_position = self.scanner_position;
        env
    }
}

fn load_environment(path: Option<&Path>) -> Result<Environment> {
    let text = match path {
        Some(p) => {
            fs::read_to_string(p).with_context(|| format!("reading environment {}", p.display()))?
        }
        None => DEFAULT_ENV_YAML.to_string(),
    };
    let spec: EnvSpec = serde_yaml::from_str(&text).context("parsing environment YAML")?;
    Ok(spec.into_environment())
}

fn parse_axis<T: serde::de::DeserializeOwned>(kind: &str, value: &str) -> Result<T> {
    serde_yaml::from_str(value).with_context(|| format!("unknown {kind} value {value:?}"))
}

fn cmd_enumerate(args: &EnumerateArgs) -> Result<()> {
    let hijack: Option<HijackMethod> = args
        .hijack
        .as_deref()
        .map(|s| parse_axis("hijack method", s))
        .transpose()?;
    let variation: Option<AppVariation> = args
        .variation
        .as_deref()
        .map(|s| parse_axis("variation", s))
        .transpose()?;
    let targeting: Option<Targeting> = args
        .targeting
        .as_deref()
        .map(|s| parse_axis("targeting", s))
        .transpose()?;
    let adaptation: Option<Adaptation> = args
        .launch_adaptation
        .as_deref()
        .map(|s| parse_axis("adaptation", s))
        .transpose()?;

    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating output directory {}", args.out.display()))?;
    let mut n = 0usize;
    for profile in enumerate_instances() {
        if hijack.is_some_and(|h| profile.hijack.method != h)
            || variation.is_some_and(|v| profile.app.variation != v)
            || targeting.is_some_and(|t| profile.app.targeting != t)
            || adaptation.is_some_and(|a| profile.launch.adaptation != a)
        {
            continue;
        }
        let path = args.out.join(format!("{}.yaml", profile.name));
        fs::write(&path, canonical_yaml(&profile)?)
            .with_context(|| format!("writing {}", path.display()))?;
        n += 1;
    }
    println!("enumerated {n} instances into {}", args.out.display());
    Ok(())
}

fn cmd_validate(args: &ValidateArgs) -> Result<u8> {
    let profile = load_profile(&args.profile)?;
    let db = match &args.env {
        Some(path) => scan(&load_environment(Some(path))?, 500, 1),
        None => canonical_scan_db(),
    };
    let report = check(&profile, &db);
    print!("{}", report.render_text());
    Ok(if report.verdict == Verdict::Rejected {
        1
    } else {
        0
    })
}

fn cmd_run(args: &RunArgs) -> Result<u8> {
    let mut profile = load_profile(&args.profile)?;
    if let Some(seed) = args.seed {
        profile.seed = seed;
    }
    let env = load_environment(args.env.as_deref())?;
    let opts = RunOptions {
        duration_ms: args.duration_ms,
        success_model: if args.stochastic {
            SuccessModel::Stochastic
        } else {
            SuccessModel::Deterministic
        },
        trial: args.trial,
        ..RunOptions::default()
    };
    let output = match run(&profile, &env, opts) {
        Ok(out) => out,
        Err(err) => {
            eprintln!("{err}");
            return Ok(1);
        }
    };

    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating output directory {}", args.out.display()))?;
    let trace_path = args.out.join(format!("{}-trace.jsonl", profile.name));
    let manifest_path = args.out.join(format!("{}-manifest.json", profile.name));
    fs::write(&trace_path, to_jsonl(&output.events)?)?;
    fs::write(
        &manifest_path,
        serde_json::to_string_pretty(&output.manifest)?,
    )?;

    let o = &output.outcomes;
    println!("instance: {}", output.manifest.profile_name);
    println!(
        "seed={} trial={} duration_ms={} events={}",
        output.manifest.seed,
        output.manifest.trial,
        output.manifest.duration_ms,
        output.manifest.n_events
    );
    println!(
        "ues={} hijacked={} captured_imsis={} redirected={} dos={}",
        o.n_ues,
        o.n_hijacked,
        o.imsis_caught.len(),
        o.n_redirected,
        o.n_dos
    );
    println!(
        "sessions={} exposing={} exposing_rate={:.2}",
        o.n_sessions, o.n_exposing_sessions, o.exposing_rate
    );
    println!("trace: {}", trace_path.display());
    println!("manifest: {}", manifest_path.display());
    Ok(0)
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<u8> {
    let instances: Vec<ConfigProfile> = match &args.instances {
        Some(path) => load_instance_set(path)?,
        None => reference_instances(),
    };
    let env = load_environment(args.env.as_deref())?;
    let detectors = DetectorId::ALL.to_vec();
    let opts = RunOptions::default();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.max(1))
        .build()
        .context("building worker pool")?;
    let rows = pool.install(|| {
        instances
            .par_iter()
            .map(|p| fbsim_core::detect::evaluate_instance(p, &detectors, &env, opts))
            .collect::<Result<Vec<_>, _>>()
    });
    let rows = match rows {
        Ok(rows) => rows,
        Err(err) => {
            eprintln!("{err}");
            return Ok(1);
        }
    };
    let matrix = CoverageMatrix::from_rows(detectors, rows);

    fs::create_dir_all(&args.out)
        .with_context(|| format!("creating output directory {}", args.out.display()))?;
    let csv_path = args.out.join("coverage.csv");
    let json_path = args.out.join("coverage.json");
    fs::write(&csv_path, matrix.to_csv())?;
    fs::write(&json_path, matrix.to_json()?)?;

    match args.format {
        OutFormat::Csv => print!("{}", matrix.to_csv()),
        OutFormat::Json => println!("{}", matrix.to_json()?),
    }
    println!();
    println!("blind spots:");
    if matrix.missed_by_detector.is_empty() {
        println!("  none: every detector classified every instance");
    }
    for (detector, instances) in &matrix.missed_by_detector {
        println!("  {detector} missed: {}", instances.join(", "));
    }
    for (instance, detectors) in &matrix.evading_instances {
        println!("  {instance} evades: {}", detectors.join(", "));
    }
    println!();
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(0)
}

fn cmd_rules() {
    println!("dependency rule registry ({} rules):", list_rules().len());
    for rule in list_rules() {
        println!(
            "RULE {:>2} [{:<5}/{:<12}] {}",
            rule.id,
            format!("{:?}", rule.scope).to_lowercase(),
            format!("{:?}", rule.resolution).to_lowercase(),
            rule.summary
        );
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Enumerate(args) => cmd_enumerate(args).map(|()| 0),
        Cmd::Validate(args) => cmd_validate(args),
        Cmd::Run(args) => cmd_run(args),
        Cmd::Evaluate(args) => cmd_evaluate(args),
        Cmd::Rules => {
            cmd_rules();
            Ok(0)
        }
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
