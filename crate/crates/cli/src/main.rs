//! `cnopt`: solve bundled problems, check candidate points and rebuild the
//! reference tables.
//!
//! Exit codes: 0 success (or a certified point), 1 usage or input error,
//! 2 solver stopped without converging, 3 inconclusive check, 4 refuted.
mod input;
mod manifest;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use cnopt::cn_core::{constraint_residual, lift, Verdict};
use cnopt::optimality::{falsify_k_set, lcnp_condition, wcnp_condition, CandidatePoint, KSet};
use cnopt::problems::make_problem;
use cnopt::solver::{solve, SolveReport, SolveStatus};
use cnopt::CnError;
use cnopt_repro::{ReproError, Scale};
use serde_json::{json, Value};

use input::{problem_spec, solver_config, FileConfig, ProblemArgs, SolverArgs, VecSource};
use manifest::RunManifest;

#[derive(Parser)]
#[command(name = "cnopt", version, about = "Convertible-nonconvex optimization toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the block augmented-Lagrangian solver.
    Solve {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Report file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Test a candidate point for global optimality.
    Check {
        #[command(flatten)]
        problem: ProblemArgs,
        /// Candidate x: a comma list or a CSV file.
        #[arg(long, allow_negative_numbers = true)]
        x: Option<String>,
        /// Lifted y; the form's lift of x when omitted.
        #[arg(long, allow_negative_numbers = true)]
        y: Option<String>,
        #[arg(long, value_enum)]
        method: Option<Method>,
        /// Sample budget of the K-set searches.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rebuild one of the reference tables as CSV.
    Table {
        #[arg(long)]
        table: u32,
        /// desk keeps rows with n <= 100 and p <= 20.
        #[arg(long, default_value = "desk")]
        scale: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Permit paper scale, which runs for hours.
        #[arg(long)]
        allow_long: bool,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    /// The per-iteration trace.
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
enum Method {
    Wcnp,
    Lcnp,
    Kw,
    Ku,
    Kc,
}

impl Method {
    fn parse(s: &str) -> Result<Self> {
        <Self as ValueEnum>::from_str(s, true).map_err(|e| anyhow!("method: {e}"))
    }
}

const DEFAULT_SAMPLES: usize = 10_000;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let outcome = init_threads().and_then(|()| match cli.command {
        Command::Solve { problem, solver, out, format } => cmd_solve(&problem, &solver, out.as_deref(), format),
        Command::Check { problem, x, y, method, samples, seed, out } => {
            cmd_check(&problem, x, y, method, samples, seed, out.as_deref())
        }
        Command::Table { table, scale, out, allow_long } => cmd_table(table, &scale, out.as_deref(), allow_long),
    });
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// Bounds the global rayon pool by `CNOPT_THREADS` when set.
fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("CNOPT_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| anyhow!("CNOPT_THREADS={v:?} is not a positive integer"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

fn status_code(s: SolveStatus) -> u8 {
    if s.is_success() {
        0
    } else {
        2
    }
}

fn cmd_solve(pargs: &ProblemArgs, sargs: &SolverArgs, out: Option<&Path>, format: Format) -> Result<u8> {
    let file = FileConfig::load_opt(pargs.config.as_deref())?;
    let spec = problem_spec(pargs, &file)?;
    let cfg = solver_config(&spec, sargs, &file)?;
    let (form, part) = make_problem(&spec)?;
    let mut manifest = RunManifest::new("solve", serde_json::to_value(&spec)?, serde_json::to_value(&cfg)?, cfg.seed);
    let t = Instant::now();
    let report = solve(&form, &part, &cfg)?;
    manifest.wall_time_s = t.elapsed().as_secs_f64();
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&report_json(&report, &manifest))? + "\n",
        Format::Csv => trace_csv(&report)?,
    };
    emit(out, &text)?;
    if let Some(p) = out {
        manifest.write_beside(p)?;
    }
    eprintln!("{:?} after {} iterations, residual {:.3e}", report.status, report.iterations(), report.state.residual);
    Ok(status_code(report.status))
}

fn report_json(r: &SolveReport, m: &RunManifest) -> Value {
    json!({
        "status": r.status,
        "x": r.state.x,
        "y": r.state.y,
        "f_value": r.state.f_value,
        "g_value": r.state.g_value,
        "residual": r.state.residual,
        "hinge_violation": r.state.hinge_violation,
        "iterations": r.iterations(),
        "sigma": r.state.sigma,
        "max_g_value": r.max_g_value,
        "max_hk": r.max_hk,
        "certificate": r.certificate.as_ref().map(Verdict::label),
        "trace": r.trace,
        "input_sha256": m.input_sha256,
    })
}

fn trace_csv(r: &SolveReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["k", "sigma", "residual", "f_value", "g_value", "hk"])?;
    for t in &r.trace {
        let f = t.f_value.map(|v| v.to_string()).unwrap_or_default();
        w.write_record([
            t.k.to_string(),
            t.sigma.to_string(),
            t.residual.to_string(),
            f,
            t.g_value.to_string(),
            t.hk.to_string(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| anyhow!("{e}"))?)?)
}

fn vector_arg(flag: Option<String>, file: &Option<VecSource>, base: Option<&Path>) -> Result<Option<Vec<f64>>> {
    match (flag, file) {
        (Some(s), _) => VecSource::parse_flag(&s)?.resolve(None).map(Some),
        (None, Some(src)) => src.resolve(base).map(Some),
        (None, None) => Ok(None),
    }
}

fn cmd_check(
    pargs: &ProblemArgs,
    x: Option<String>,
    y: Option<String>,
    method: Option<Method>,
    samples: Option<usize>,
    seed: Option<u64>,
    out: Option<&Path>,
) -> Result<u8> {
    let file = FileConfig::load_opt(pargs.config.as_deref())?;
    let spec = problem_spec(pargs, &file)?;
    let (form, _) = make_problem(&spec)?;
    let base = file.dir.as_deref();
    let x = vector_arg(x, &file.x, base)?.ok_or_else(|| anyhow!("--x is required"))?;
    if x.len() != form.n() {
        bail!("--x has {} entries, the problem has n = {}", x.len(), form.n());
    }
    let y = match vector_arg(y, &file.y, base)? {
        Some(y) if y.len() != form.m() => bail!("--y has {} entries, the problem has m = {}", y.len(), form.m()),
        Some(y) => y,
        None => lift(&form, &x)?,
    };
    let method = match (method, &file.method) {
        (Some(m), _) => m,
        (None, Some(s)) => Method::parse(s)?,
        (None, None) => Method::Wcnp,
    };
    let samples = samples.or(file.samples).unwrap_or(DEFAULT_SAMPLES);
    let seed = seed.or(file.seed).unwrap_or(0);

    let residual = constraint_residual(&form, &x, &y)?;
    let pt = match CandidatePoint::new(&form, x.clone(), y.clone()) {
        Ok(pt) => pt,
        Err(CnError::InfeasibleCandidate { residual: r }) => {
            let text = serde_json::to_string_pretty(&json!({
                "error": "candidate is not in X(g)",
                "residual_norm": r,
                "residuals": residual,
            }))?;
            emit(out, &(text + "\n"))?;
            eprintln!("error: candidate is not in X(g) (residual {r:.3e})");
            return Ok(1);
        }
        Err(e) => return Err(e.into()),
    };

    let mut extra = serde_json::Map::new();
    let verdict = match method {
        Method::Wcnp => {
            let (v, qp) = wcnp_condition(&form, &pt)?;
            extra.insert("multipliers".into(), json!(qp.multipliers));
            extra.insert("direction".into(), json!(qp.d_star));
            extra.insert("model_value".into(), json!(qp.value));
            extra.insert("stationarity".into(), json!(qp.stationarity));
            v
        }
        Method::Lcnp => lcnp_condition(&form, &pt),
        Method::Kw | Method::Ku | Method::Kc => {
            let set = match method {
                Method::Kw => KSet::Kw,
                Method::Ku => KSet::Ku,
                _ => KSet::Kc,
            };
            falsify_k_set(&form, &pt, set, None, samples, None, seed)?
        }
    };
    let mut body = json!({
        "verdict": verdict.label(),
        "method": format!("{method:?}").to_lowercase(),
        "x": x,
        "y": y,
        "residuals": { "constraint_norm": residual.norm, "equality": residual.equality, "hinge": residual.hinge },
    });
    let obj = body.as_object_mut().expect("object literal");
    match &verdict {
        Verdict::Refuted(w) => {
            obj.insert("witness".into(), json!(w));
        }
        Verdict::Inconclusive { hint: Some(h) } => {
            obj.insert("hint".into(), json!(h));
        }
        _ => {}
    }
    obj.extend(extra);
    emit(out, &(serde_json::to_string_pretty(&body)? + "\n"))?;
    if let Some(p) = out {
        let config = json!({ "method": body["method"], "samples": samples, "x": x, "y": y });
        RunManifest::new("check", serde_json::to_value(&spec)?, config, seed).write_beside(p)?;
    }
    eprintln!("{}", verdict.label());
    Ok(match verdict {
        Verdict::Certified => 0,
        Verdict::Inconclusive { .. } => 3,
        Verdict::Refuted(_) => 4,
    })
}

fn cmd_table(id: u32, scale: &str, out: Option<&Path>, allow_long: bool) -> Result<u8> {
    let scale = Scale::parse(scale)?;
    let t = Instant::now();
    let table = match cnopt_repro::build(id, scale, allow_long) {
        Err(ReproError::LongRunRefused) => bail!("paper scale runs for hours; pass --allow-long to proceed"),
        r => r?,
    };
    emit(out, &table.to_csv_string()?)?;
    if let Some(p) = out {
        let mut m = RunManifest::new(
            "table",
            json!({ "table": id }),
            json!({ "scale": format!("{scale:?}").to_lowercase() }),
            0,
        );
        m.wall_time_s = t.elapsed().as_secs_f64();
        m.write_beside(p)?;
    }
    for s in &table.skipped {
        eprintln!("skipped at {} scale: {s}", format!("{scale:?}").to_lowercase());
    }
    Ok(0)
}
