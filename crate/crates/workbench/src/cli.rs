//! `workbench` subcommands.
//!
//! Exit codes: 0 success, 1 bad flags or input, 2 runtime failure, 3 the
//! service could not bind its port.

use std::ffi::OsString;
use std::io::{self, BufReader, Write};
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use surrogate_core::blackbox::protocol::{serve as host, HostedModel};
use surrogate_core::global::{GridSpec, DEFAULT_GRID_POINTS};
use surrogate_core::report::{verify, ReportOptions};

use crate::inputs::{
    class_ref, count_seeds, feature_index, load_config, load_data, load_labels, load_model_spec,
    open_model, parse_instance, parse_seeds, read_text, write_text,
};
use crate::ops::{self, canonical, Workspace};
use crate::server::{self, Service};
use crate::{tables, Failure};

pub const PORT_ENV: &str = "WORKBENCH_PORT";
pub const DEFAULT_PORT: u16 = 8080;

#[derive(Parser, Debug)]
#[command(
    name = "workbench",
    version,
    about = "Build, evaluate and serve local surrogate explainers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Explain one instance and write the report.
    Explain(ExplainArgs),
    /// Attribution stability across sampling seeds.
    Evaluate(EvaluateArgs),
    /// Global explainers over the whole dataset.
    Global {
        #[command(subcommand)]
        command: GlobalCommand,
    },
    /// Recompute the fingerprint, sample digest and fidelity of a report.
    Verify { report: PathBuf },
    /// Serve the HTTP API (and optionally the built UI).
    Serve(ServeArgs),
    /// Serve a built-in model over the line protocol on stdin/stdout.
    HostModel {
        /// Model spec file.
        spec: Option<String>,
        /// Answer uniform probabilities over the handshake's classes.
        #[arg(long, conflicts_with = "spec")]
        uniform: bool,
    },
}

#[derive(Args, Debug)]
pub struct Source {
    /// CSV file with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Schema document overriding type inference.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Model spec file, `builtin:<file>`, `cmd:<command>` or `http://host/predict`.
    #[arg(long)]
    pub model: String,
    /// Comma-separated class names; required for external models.
    #[arg(long)]
    pub classes: Option<String>,
}

impl Source {
    fn load(&self) -> Result<Workspace, Failure> {
        let dataset = load_data(&self.data, self.schema.as_deref())?;
        let model = open_model(&self.model, self.classes.as_deref(), dataset.schema())?;
        Ok(Workspace { dataset, model })
    }
}

#[derive(Args, Debug)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub source: Source,
    /// Explainer config (.json or .toml); defaults when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Row index, or the instance's values as one CSV line.
    #[arg(long)]
    pub instance: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Embed every sample so the report can be verified.
    #[arg(long)]
    pub full_report: bool,
    /// Record per-stage wall-clock times (the report is then not reproducible).
    #[arg(long)]
    pub timings: bool,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub instance: String,
    /// A seed count (starting at --seed) or a comma-separated list.
    #[arg(long)]
    pub seeds: Option<String>,
    /// First seed when --seeds is a count.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub top_k: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum GlobalCommand {
    /// Accuracy drop when each feature is shuffled.
    PermImportance(PermArgs),
    /// Individual conditional expectation curves.
    Ice(CurveArgs),
    /// Partial dependence, with the ICE curves it averages.
    Pd(CurveArgs),
}

#[derive(Args, Debug)]
pub struct PermArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, default_value_t = ops::DEFAULT_REPEATS)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// One class per line per dataset row; the model's own predictions when absent.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct CurveArgs {
    #[command(flatten)]
    pub source: Source,
    /// Feature name or index.
    #[arg(long)]
    pub feature: String,
    #[arg(long, conflicts_with = "grid")]
    pub grid_points: Option<usize>,
    /// Explicit comma-separated grid values.
    #[arg(long)]
    pub grid: Option<String>,
    /// Class name or index; the last class when absent.
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

impl CurveArgs {
    fn grid(&self) -> Result<GridSpec, Failure> {
        match &self.grid {
            Some(list) => list
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|e| Failure::Usage(format!("bad grid value {s:?}: {e}")))
                })
                .collect::<Result<Vec<_>, _>>()
                .map(GridSpec::Explicit),
            None => Ok(GridSpec::Points(
                self.grid_points.unwrap_or(DEFAULT_GRID_POINTS),
            )),
        }
    }
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[command(flatten)]
    pub source: Source,
    /// Falls back to $WORKBENCH_PORT, then 8080. 0 picks a free port.
    #[arg(long)]
    pub port: Option<u16>,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Directory with the built UI assets.
    #[arg(long)]
    pub ui_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    pub threads: usize,
}

/// Parses `args` (program name first), runs the command and returns the
/// exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<u8, Failure> {
    let mut stdout = io::stdout().lock();
    match command {
        Command::Explain(args) => {
            let ws = args.source.load()?;
            let config = load_config(args.config.as_deref())?;
            let anchor = parse_instance(&args.instance, &ws.dataset)?;
            let options = ReportOptions {
                full: args.full_report,
                timings: args.timings,
            };
            let (report, text) = ops::explain_report(&ws, &config, &anchor, args.seed, options)?;
            write_text(&args.out, &text)?;
            let _ = stdout.write_all(tables::explanation(&report).as_bytes());
            Ok(0)
        }
        Command::Evaluate(args) => {
            let ws = args.source.load()?;
            let config = load_config(args.config.as_deref())?;
            let anchor = parse_instance(&args.instance, &ws.dataset)?;
            let seeds = match &args.seeds {
                Some(s) => parse_seeds(s, args.seed)?,
                None => count_seeds(config.evaluation.stability_seeds as u64, args.seed),
            };
            let report = ops::stability_report(&ws, &config, &anchor, &seeds, args.top_k)?;
            if report.k_clamped {
                eprintln!(
                    "warning: top-k {} exceeds the number of interpretable features; using all of them",
                    report.top_k
                );
            }
            write_text(&args.out, &canonical(&report)?)?;
            let _ = stdout.write_all(tables::stability(&report).as_bytes());
            Ok(0)
        }
        Command::Global { command } => global(command, &mut stdout),
        Command::Verify { report } => {
            let text = read_text(&report)?;
            let result = verify(&text)?;
            let _ = writeln!(
                stdout,
                "fingerprint {}, sample digest {}, fidelity {}",
                ok(result.fingerprint_ok),
                ok(result.sample_digest_ok),
                ok(result.fidelity_ok)
            );
            for p in &result.problems {
                eprintln!("{p}");
            }
            Ok(if result.passed() { 0 } else { 1 })
        }
        Command::Serve(args) => {
            let ws = args.source.load()?;
            let port = match args.port {
                Some(p) => p,
                None => match std::env::var(PORT_ENV) {
                    Ok(v) => v.trim().parse().map_err(|_| {
                        Failure::Usage(format!("{PORT_ENV}={v:?} is not a port number"))
                    })?,
                    Err(_) => DEFAULT_PORT,
                },
            };
            let server = server::bind(&format!("{}:{port}", args.host))?;
            let _ = writeln!(stdout, "listening on http://{}", server.server_addr());
            let _ = stdout.flush();
            drop(stdout);
            server::serve(
                Arc::new(server),
                Arc::new(Service::new(ws, args.ui_dir)),
                args.threads,
            );
            Ok(0)
        }
        Command::HostModel { spec, uniform } => {
            let hosted = match (spec, uniform) {
                (_, true) => HostedModel::Uniform,
                (Some(s), false) => HostedModel::Builtin(load_model_spec(&s)?),
                (None, false) => {
                    return Err(Failure::Usage(
                        "host-model needs a spec file or --uniform".into(),
                    ))
                }
            };
            drop(stdout);
            let stdin = io::stdin();
            host(BufReader::new(stdin.lock()), io::stdout().lock(), &hosted)?;
            Ok(0)
        }
    }
}

fn ok(flag: bool) -> &'static str {
    if flag {
        "ok"
    } else {
        "MISMATCH"
    }
}

fn global(command: GlobalCommand, stdout: &mut impl Write) -> Result<u8, Failure> {
    match command {
        GlobalCommand::PermImportance(args) => {
            let ws = args.source.load()?;
            let labels = match &args.labels {
                Some(p) => Some(load_labels(p, ws.model.class_names())?),
                None => None,
            };
            let result = ops::perm_importance(&ws, labels, args.repeats, args.seed)?;
            write_text(&args.out, &canonical(&result)?)?;
            let _ = stdout.write_all(tables::importance(&result).as_bytes());
        }
        GlobalCommand::Ice(args) => {
            let ws = args.source.load()?;
            let feature = feature_index(&args.feature, ws.dataset.schema())?;
            let target = args.target.as_deref().map(class_ref);
            let curves = ops::ice(&ws, feature, &args.grid()?, target.as_ref())?;
            write_text(&args.out, &canonical(&curves)?)?;
            let _ = stdout.write_all(tables::ice(&curves).as_bytes());
        }
        GlobalCommand::Pd(args) => {
            let ws = args.source.load()?;
            let feature = feature_index(&args.feature, ws.dataset.schema())?;
            let target = args.target.as_deref().map(class_ref);
            let result = ops::pd(&ws, feature, &args.grid()?, target.as_ref())?;
            write_text(&args.out, &canonical(&result)?)?;
            let _ = stdout.write_all(tables::pd(&result).as_bytes());
        }
    }
    Ok(0)
}
