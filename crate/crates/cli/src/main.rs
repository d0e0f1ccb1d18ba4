//! `djscc` command-line front end.
//!
//! Each subcommand resolves its job from built-in defaults, then the
//! `--config` file, then `--set key=value` overrides, then dedicated flags.
//! The resolved job is written to `<out>/<command>.manifest.json`; passing
//! that manifest back as `--config` reruns the same job.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use djscc::cade::{threshold_search, CadeConfig, ThresholdResult};
use djscc::channels::rate_limits;
use djscc::ensemble::{self, ValidationMode};
use djscc::harness::{self, near_lossless_threshold, ExperimentConfig, Figure, FigureOptions, Scale};
use djscc::optimizer::{optimize, write_history_csv, Axis, DeParams, DesignPoint, DesignProblem};
use djscc::Error;

#[derive(Debug, Parser)]
#[command(name = "djscc", version, about = "Distributed joint source-channel code design and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON job file, or a manifest written by an earlier run.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[arg(long, global = true, value_enum)]
    scale: Option<ScaleArg>,

    /// Override one job field; dotted keys reach nested fields
    /// (`--set point.eps01=0.3`).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Print the resolved job to stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Information-theoretic limits at one operating point.
    Limits,
    /// Check an ensemble's constraints.
    Validate {
        /// Built-in name (C1, C2, C3) or ensemble file.
        ensemble: Option<String>,
        /// Tight tolerances instead of the ones for rounded coefficients.
        #[arg(long)]
        strict: bool,
    },
    /// Asymptotic threshold by density evolution.
    Threshold,
    /// Degree-distribution design by differential evolution.
    Design,
    /// Finite-length BER sweep.
    Ber,
    /// Data and plot script behind one figure.
    Figure {
        #[arg(value_enum)]
        figure: FigureArg,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Limits => "limits",
            Command::Validate { .. } => "validate",
            Command::Threshold => "threshold",
            Command::Design => "design",
            Command::Ber => "ber",
            Command::Figure { .. } => "figure",
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScaleArg {
    Desk,
    Full,
}

impl From<ScaleArg> for Scale {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::Desk => Scale::Desk,
            ScaleArg::Full => Scale::Full,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FigureArg {
    Fig2,
    Fig3,
    Fig4,
}

impl From<FigureArg> for Figure {
    fn from(f: FigureArg) -> Self {
        match f {
            FigureArg::Fig2 => Figure::Fig2,
            FigureArg::Fig3 => Figure::Fig3,
            FigureArg::Fig4 => Figure::Fig4,
        }
    }
}

#[derive(Debug)]
enum Failure {
    /// Bad input; exit code 1.
    Invalid(String),
    /// Anything else; exit code 2.
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_)
            | Error::Infeasible(_)
            | Error::LengthMismatch { .. }
            | Error::Parse { .. }
            | Error::Json(_) => Failure::Invalid(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ValidateJob {
    ensemble: String,
    strict: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ThresholdJob {
    ensemble: String,
    point: DesignPoint,
    axis: Axis,
    /// Bisection bracket; located from the rate limits when absent.
    good: Option<f64>,
    bad: Option<f64>,
    resolution: f64,
    cade: CadeConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DesignJob {
    problem: DesignProblem,
    de: DeParams,
    cade: CadeConfig,
}

/// Writes a report line to stdout; a closed pipe (`djscc ... | head`) is not
/// an error since all results are already on disk.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

fn default_job(cmd: &Command) -> Value {
    let point = harness::c1_point(0.2);
    let v = match cmd {
        Command::Limits => serde_json::to_value(point),
        Command::Validate { .. } => serde_json::to_value(ValidateJob {
            ensemble: "C1".into(),
            strict: false,
        }),
        Command::Threshold => serde_json::to_value(ThresholdJob {
            ensemble: "C1".into(),
            point,
            axis: Axis::Eps10,
            good: None,
            bad: None,
            resolution: 1e-4,
            cade: CadeConfig::default(),
        }),
        Command::Design => serde_json::to_value(DesignJob {
            problem: DesignProblem::c1(),
            de: DeParams::default(),
            cade: CadeConfig::default(),
        }),
        Command::Ber => serde_json::to_value(ExperimentConfig {
            label: "ber".into(),
            ensemble: "C1".into(),
            k: Scale::Desk.k(),
            seed: 1,
            point,
            axis: Axis::Eps10,
            values: vec![0.30, 0.33, 0.36],
            min_codewords: Scale::Desk.codewords(),
            max_source_bits: None,
            min_bit_errors: 100,
            near_lossless_ber: 1e-5,
            max_bp_iters: 200,
            batch: 10,
        }),
        Command::Figure { .. } => serde_json::to_value(FigureOptions::new(Scale::Desk, 1)),
    };
    v.expect("job types serialize")
}

fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (b, t) => *b = t,
    }
}

fn set_path(root: &mut Value, key: &str, value: Value) -> CliResult<()> {
    let mut cur = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| Failure::Invalid(format!("--set {key}: {part:?} is not inside an object")))?;
        if !obj.contains_key(*part) {
            return Err(Failure::Invalid(format!("--set {key}: unknown field {part:?}")));
        }
        if i + 1 == parts.len() {
            obj.insert((*part).to_string(), value);
            return Ok(());
        }
        cur = obj.get_mut(*part).expect("checked above");
    }
    unreachable!("split yields at least one part")
}

fn parse_override(s: &str) -> CliResult<(String, Value)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Failure::Invalid(format!("--set expects KEY=VALUE, got {s:?}")))?;
    let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
    Ok((k.to_string(), value))
}

fn read_config(path: &Path, command: &str) -> CliResult<Value> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    let mut v: Value =
        serde_json::from_str(&text).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
    let from = v.get("command").and_then(Value::as_str).map(str::to_string);
    if let Some(job) = v.get_mut("resolved_job") {
        if from.as_deref() != Some(command) {
            return Err(Failure::Invalid(format!(
                "{} is a manifest of {:?}, not {command:?}",
                path.display(),
                from.unwrap_or_default()
            )));
        }
        return Ok(job.take());
    }
    Ok(v)
}

/// Defaults, then the config file, then `--set`, then dedicated flags.
fn resolve_job(cli: &Cli) -> CliResult<Value> {
    let mut job = default_job(&cli.command);
    if let Some(path) = &cli.config {
        merge(&mut job, read_config(path, cli.command.name())?);
    }
    for s in &cli.set {
        let (k, v) = parse_override(s)?;
        set_path(&mut job, &k, v)?;
    }
    let flag = |job: &mut Value, key: &str, v: Value| {
        if let Some(o) = job.as_object_mut() {
            o.insert(key.into(), v);
        }
    };
    match &cli.command {
        Command::Validate { ensemble, strict } => {
            if let Some(e) = ensemble {
                flag(&mut job, "ensemble", json!(e));
            }
            if *strict {
                flag(&mut job, "strict", json!(true));
            }
        }
        Command::Design => {
            if let Some(s) = cli.seed {
                set_path(&mut job, "de.seed", json!(s))?;
            }
        }
        Command::Ber => {
            if let Some(s) = cli.seed {
                flag(&mut job, "seed", json!(s));
            }
            if let Some(sc) = cli.scale {
                let sc = Scale::from(sc);
                flag(&mut job, "k", json!(sc.k()));
                flag(&mut job, "min_codewords", json!(sc.codewords()));
            }
        }
        Command::Figure { .. } => {
            if let Some(s) = cli.seed {
                flag(&mut job, "seed", json!(s));
            }
            if let Some(sc) = cli.scale {
                flag(&mut job, "scale", serde_json::to_value(Scale::from(sc)).expect("enum serializes"));
            }
        }
        Command::Limits | Command::Threshold => {}
    }
    Ok(job)
}

fn typed<T: DeserializeOwned>(job: &Value) -> CliResult<T> {
    serde_json::from_value(job.clone()).map_err(|e| Failure::Invalid(format!("job: {e}")))
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(v).map_err(|e| Failure::Runtime(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn print_threshold(r: &ThresholdResult, axis: Axis) {
    out!("{}* = {:.6}", axis.name(), r.theta);
    out!("R_c = {:.6}  R_Th = {:.6}  R_symm = {:.6}", r.rate, r.r_th, r.r_symm);
    out!("gap = {:.6} bits  ({} evaluations)", r.gap_bits, r.evaluations);
}

/// Runs the job; returns the files written. `Ok(false)` in the flag means
/// the job ran but found its input invalid.
fn execute(cli: &Cli, job: &Value) -> CliResult<(Vec<PathBuf>, bool)> {
    let out = &cli.out;
    let mut files = Vec::new();
    let mut ok = true;
    match &cli.command {
        Command::Limits => {
            let p: DesignPoint = typed(job)?;
            let lim = rate_limits(&p.model()?, &p.channel()?);
            out!("H(X)     = {:.6}", lim.h_x);
            out!("H(X|Y)   = {:.6}", lim.h_x_given_y);
            out!("C_tr     = {:.6}", lim.c_tr);
            out!("I_unif   = {:.6}", lim.i_uniform);
            out!("R_Th     = {:.6}", lim.r_th);
            out!("R_symm   = {:.6}", lim.r_symm);
            let path = out.join("limits.json");
            write_json(&path, &lim)?;
            files.push(path);
        }
        Command::Validate { .. } => {
            let j: ValidateJob = typed(job)?;
            let spec = ensemble::resolve(&j.ensemble)?;
            let mode = if j.strict {
                ValidationMode::Strict
            } else {
                ValidationMode::Published
            };
            let violations = spec.validate(mode);
            if violations.is_empty() {
                out!("OK  {}  rate {:.6}", j.ensemble, spec.design_rate()?);
            } else {
                for v in &violations {
                    out!("violated: {v}");
                }
                ok = false;
            }
            let path = out.join("validate.json");
            let list: Vec<String> = violations.iter().map(ToString::to_string).collect();
            write_json(&path, &json!({ "ensemble": j.ensemble, "violations": list }))?;
            files.push(path);
        }
        Command::Threshold => {
            let j: ThresholdJob = typed(job)?;
            let spec = ensemble::resolve(&j.ensemble)?;
            let r = match (j.good, j.bad) {
                (Some(good), Some(bad)) => {
                    let fam = j.point.family(j.axis);
                    threshold_search(&spec, &fam, good, bad, j.point.p_p_zero, &j.cade, j.resolution)?
                }
                (None, None) => harness::locate_threshold(&spec, &j.point, j.axis, &j.cade, j.resolution)?,
                _ => return Err(Failure::Invalid("give both good and bad, or neither".into())),
            };
            print_threshold(&r, j.axis);
            let path = out.join("threshold.json");
            write_json(&path, &r)?;
            files.push(path);
        }
        Command::Design => {
            let j: DesignJob = typed(job)?;
            let r = optimize(&j.problem, &j.de, &j.cade)?;
            out!("best fitness {:.6}", r.best.fitness);
            out!("lambda_s = {}", r.best.spec.lambda_s.to_poly_string());
            out!("lambda_p = {}", r.best.spec.lambda_p.to_poly_string());
            out!("rho      = {}", r.best.spec.rho.to_poly_string());
            let spec_path = out.join("best_ensemble.json");
            r.best.spec.save(&spec_path)?;
            let hist = out.join("history.csv");
            write_history_csv(&hist, &r.history)?;
            files.extend([spec_path, hist]);
        }
        Command::Ber => {
            let c: ExperimentConfig = typed(job)?;
            let records = harness::run_ber_sweep(&c, Some(out))?;
            out!("{:>10} {:>9} {:>9} {:>12} {:>10}", c.axis.name(), "gap", "codewords", "ber", "fer");
            for r in &records {
                out!(
                    "{:>10.6} {:>9.4} {:>9} {:>12.3e} {:>10.4}",
                    r.sweep_value, r.gap_bits, r.codewords, r.ber, r.fer
                );
            }
            match near_lossless_threshold(&records, c.near_lossless_ber) {
                Ok(nl) => out!(
                    "near-lossless: {} = {}{}",
                    c.axis.name(),
                    nl.value,
                    if nl.bracketed { "" } else { " (not bracketed)" }
                ),
                Err(Error::NoCrossing { .. }) => out!("near-lossless: no point below {:e}", c.near_lossless_ber),
                Err(e) => return Err(e.into()),
            }
            files.push(harness::records_path(out, &c.label));
        }
        Command::Figure { figure } => {
            let opts: FigureOptions = typed(job)?;
            let fo = harness::reproduce_figure((*figure).into(), &opts, out)?;
            for f in fo.csv.iter().chain([&fo.script]) {
                out!("wrote {}", f.display());
            }
            files.extend(fo.csv);
            files.push(fo.script);
        }
    }
    Ok((files, ok))
}

fn run(cli: &Cli) -> CliResult<bool> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Invalid("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    let job = resolve_job(cli)?;
    if cli.verbose > 0 {
        eprintln!("{}", serde_json::to_string_pretty(&job).unwrap_or_default());
    }
    fs::create_dir_all(&cli.out)?;
    let (files, ok) = execute(cli, &job)?;
    let mut manifest = Map::new();
    manifest.insert("command".into(), json!(cli.command.name()));
    if let Command::Figure { figure } = &cli.command {
        manifest.insert("figure".into(), json!(format!("{figure:?}").to_lowercase()));
    }
    manifest.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    manifest.insert("threads".into(), json!(cli.threads));
    manifest.insert("resolved_job".into(), job);
    manifest.insert("outputs".into(), json!(files));
    write_json(&cli.out.join(format!("{}.manifest.json", cli.command.name())), &manifest)?;
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Invalid(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
