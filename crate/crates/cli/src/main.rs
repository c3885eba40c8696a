use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use idemkit::analysis::{analyze, AnalysisOptions};
use idemkit::io::{read_matrix_json, round_sig, round_value, to_json_string, SCHEMA};
use idemkit::nrange::registry::{build, profile, ModelParams, ProfileRow};
use idemkit::nrange::support::angles;
use idemkit::{random_idempotent, Error, Idempotent};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(
    name = "idemkit",
    version,
    about = "Matched projections and numerical ranges of idempotents"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random idempotent of rank k with off-diagonal norm a.
    Gen(GenArgs),
    /// Run the full pipeline on an idempotent and report every check.
    Analyze(AnalyzeArgs),
    /// Emit a support profile and boundary polyline.
    Nrange(NrangeArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long)]
    a: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    input: PathBuf,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Include per-stage wall-clock timings (makes output non-reproducible).
    #[arg(long)]
    timings: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct NrangeArgs {
    /// Matrix JSON (a bare array of rows or an object with a `matrix` field).
    #[arg(conflicts_with_all = ["qr", "sr"], required_unless_present_any = ["qr", "sr"])]
    input: Option<PathBuf>,
    /// `T_{Q_r}` on the grid model of the universal r-idempotent.
    #[arg(long, conflicts_with = "sr")]
    qr: Option<f64>,
    /// The `S_r` probe on the grid model.
    #[arg(long)]
    sr: Option<f64>,
    #[arg(long, default_value_t = 256)]
    angles: usize,
    #[arg(long, default_value_t = 400)]
    mesh: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Input(Error),
    Numeric(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NoConvergence(_) | Error::Verification { .. } | Error::SingularPencil(_) => {
                Failure::Numeric(e)
            }
            _ => Failure::Input(e),
        }
    }
}

type CmdResult = Result<bool, Failure>;

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn read_input(path: &Path) -> Result<String, Error> {
    Ok(fs::read_to_string(path)?)
}

fn cmd_gen(args: &GenArgs) -> CmdResult {
    let q = random_idempotent(args.n, args.k, args.a, args.seed)?;
    emit(args.out.as_deref(), &to_json_string(&q)?)?;
    Ok(true)
}

fn cmd_analyze(args: &AnalyzeArgs) -> CmdResult {
    let m = read_matrix_json(&read_input(&args.input)?)?;
    let q = Idempotent::validate(m)?;
    let opts = AnalysisOptions {
        samples: args.samples,
        seed: args.seed,
        tol: args.tol,
        timings: args.timings,
    };
    let report = analyze(&q, &opts)?;
    let mut v = serde_json::to_value(&report).map_err(Error::from)?;
    v["source"] = json!(args.input.display().to_string());
    emit(args.out.as_deref(), &to_json_string(&v)?)?;
    for c in report.failures() {
        eprintln!(
            "check {} failed: residual {:.3e} > {:.1e}",
            c.name, c.residual, c.tol
        );
    }
    Ok(report.all_passed())
}

fn num(x: f64) -> String {
    format!("{:e}", round_sig(x) + 0.0)
}

fn csv(header: &Value, rows: &[ProfileRow]) -> String {
    let mut s = String::new();
    let mut header = header.clone();
    round_value(&mut header);
    if let Value::Object(map) = &header {
        for (k, v) in map {
            let v = match v {
                Value::Number(n) if n.is_f64() => num(n.as_f64().unwrap_or(f64::NAN)),
                Value::String(t) => t.clone(),
                other => other.to_string(),
            };
            s.push_str(&format!("# {k}: {v}\n"));
        }
    }
    let exact = rows.first().is_some_and(|r| r.exact.is_some());
    s.push_str(if exact {
        "alpha,h,re,im,exact\n"
    } else {
        "alpha,h,re,im\n"
    });
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{}",
            num(r.alpha),
            num(r.h),
            num(r.point.re),
            num(r.point.im)
        ));
        if let Some(e) = r.exact {
            s.push_str(&format!(",{}", num(e)));
        }
        s.push('\n');
    }
    s
}

fn cmd_nrange(args: &NrangeArgs) -> CmdResult {
    if args.angles < 8 {
        return Err(Error::BadParam(format!("need at least 8 angles, got {}", args.angles)).into());
    }
    let (name, params) = match (&args.input, args.qr, args.sr) {
        (Some(p), _, _) => {
            let m = read_matrix_json(&read_input(p)?)?;
            (
                "matrix",
                ModelParams {
                    matrix: Some(m),
                    ..Default::default()
                },
            )
        }
        (None, Some(r), _) => (
            "tq-qr",
            ModelParams {
                r: Some(r),
                mesh: args.mesh,
                ..Default::default()
            },
        ),
        (None, None, Some(r)) => (
            "sr",
            ModelParams {
                r: Some(r),
                mesh: args.mesh,
                ..Default::default()
            },
        ),
        (None, None, None) => unreachable!("clap requires a source"),
    };
    let model = build(name, &params)?;
    let header = model.header()?;
    let rows = profile(model.as_ref(), &angles(args.angles));
    let text = match args.format {
        Format::Csv => csv(&header, &rows),
        Format::Json => {
            let rows: Vec<Value> = rows
                .iter()
                .map(|r| {
                    let mut v =
                        json!({"alpha": r.alpha, "h": r.h, "re": r.point.re, "im": r.point.im});
                    if let Some(e) = r.exact {
                        v["exact"] = json!(e);
                    }
                    v
                })
                .collect();
            to_json_string(&json!({"schema": SCHEMA, "header": header, "rows": rows}))?
        }
    };
    emit(args.out.as_deref(), &text)?;
    // the S_r header carries its own verdict
    Ok(header
        .get("not_ellipse")
        .and_then(Value::as_bool)
        .unwrap_or(true))
}

fn configure_threads() -> Result<(), Error> {
    let Ok(v) = std::env::var("IDEMKIT_THREADS") else {
        return Ok(());
    };
    let n: usize =
        v.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            Error::BadParam(format!("IDEMKIT_THREADS={v} is not a positive integer"))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::BadParam(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads()
        .map_err(Failure::Input)
        .and_then(|()| match &cli.command {
            Command::Gen(a) => cmd_gen(a),
            Command::Analyze(a) => cmd_analyze(a),
            Command::Nrange(a) => cmd_nrange(a),
        });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Numeric(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Input(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
