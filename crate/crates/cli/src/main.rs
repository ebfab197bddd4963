use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use ghk_core::antiuniform::{decompose, dual_norm_lower, triple_dual_lower, AscentOptions};
use ghk_core::bench::{bench, to_csv, Kernel};
use ghk_core::budget;
use ghk_core::cube::FunctionTuple;
use ghk_core::dual::{dual_brute, dual_rec};
use ghk_core::exponents::{exponent_triple, fraction_string};
use ghk_core::families::Family;
use ghk_core::gowers::{gowers_eval, gowers_inner, Algo};
use ghk_core::io::{read_grid, to_json, write_grid};
use ghk_core::suite::{replay, run_suite, InstanceSpec, SuiteConfig};
use ghk_core::{GhkError, GridFunction, Result};

/// Gowers uniformity norms, dual functions and anti-uniform decompositions on lattice grids.
#[derive(Parser)]
#[command(name = "ghk", version)]
struct Cli {
    /// Worker threads (default: all cores); results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Multiply-add budget per kernel call.
    #[arg(long, global = true)]
    budget: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// ‖f‖_U(k) of a grid file.
    Norm {
        #[command(flatten)]
        level: Level,
        /// brute, rec or spectral (k = 2 only).
        #[arg(long, default_value = "rec")]
        algo: Algo,
        #[arg(long = "in")]
        input: PathBuf,
        /// Print a JSON object with diagnostics instead of the bare value.
        #[arg(long)]
        json: bool,
    },
    /// D_k f, written to a grid file.
    Dual {
        #[command(flatten)]
        level: Level,
        /// brute or rec.
        #[arg(long, default_value = "rec")]
        algo: Algo,
        #[arg(long = "in")]
        input: PathBuf,
        /// Output grid (.json for JSON, otherwise GHK1); printed as JSON when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Gowers inner product of 2^k grids, or of one grid repeated.
    Inner {
        #[command(flatten)]
        level: Level,
        /// One file, or 2^k files in vertex order.
        #[arg(long = "in", required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Certified lower bound on the anti-uniform dual norm.
    Dualnorm {
        #[command(flatten)]
        level: Level,
        #[arg(long = "in")]
        input: PathBuf,
        /// Use the regularized norm with this δ instead of ‖·‖_U(k).
        #[arg(long)]
        delta: Option<f64>,
        /// Where to write the witness grid.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        ascent: Ascent,
        #[arg(long)]
        json: bool,
    },
    /// Split g as D_k F + H.
    Decompose {
        #[command(flatten)]
        level: Level,
        #[arg(long)]
        delta: f64,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "out-f")]
        out_f: Option<PathBuf>,
        #[arg(long = "out-h")]
        out_h: Option<PathBuf>,
        /// Report path; printed to stdout when absent.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        ascent: Ascent,
    },
    /// Run the verification suite, or replay one instance.
    Verify {
        /// Suite config (JSON); see the crate docs for the schema.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Report path; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Keep per-record timings (breaks byte-for-byte reproducibility).
        #[arg(long)]
        timing: bool,
        /// Replay the named check for one instance.
        #[arg(long)]
        replay: Option<String>,
        #[arg(long)]
        k: Option<u32>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        family: Option<Family>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Exact exponents p_k, q_k, s_k.
    Exponents {
        #[arg(long)]
        k: u32,
    },
    /// Time kernels; CSV `kernel,N,d,median_ms,work_count`.
    Bench {
        /// Kernel name, repeatable; all kernels when omitted.
        #[arg(long)]
        kernel: Vec<Kernel>,
        /// Comma-separated N values; an empty list prints the header only.
        #[arg(long, default_value = "4,8,16")]
        sizes: String,
        #[arg(long, alias = "d", default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 5)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Level {
    #[arg(long)]
    k: u32,
}

#[derive(Args)]
struct Ascent {
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    rel_tol: f64,
    /// Witness cells added around the input box.
    #[arg(long)]
    margin: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl Ascent {
    fn options(&self) -> AscentOptions {
        AscentOptions { max_iters: self.max_iters, rel_tol: self.rel_tol, seed: self.seed, margin: self.margin, ..Default::default() }
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| GhkError::Io { path: p.to_path_buf(), source: e }),
        None => print_line(text),
    }
}

/// Writes to stdout; a closed pipe (`ghk ... | head`) is not an error.
fn print_line(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(GhkError::Io { path: "<stdout>".into(), source: e }),
        _ => Ok(()),
    }
}

fn parse_sizes(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| GhkError::InvalidArgument(format!("bad size '{t}'"))))
        .collect()
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json value serializes")
}

fn grid_json(f: &GridFunction) -> Value {
    serde_json::from_str(&to_json(f, false)).expect("grid json parses")
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| GhkError::InvalidArgument(format!("thread pool: {e}")))?;
    }
    if let Some(b) = cli.budget {
        budget::set_work_budget(b);
    }
    match cli.command {
        Command::Norm { level, algo, input, json } => {
            let f = read_grid(&input)?;
            let e = gowers_eval(&f, level.k, algo)?;
            if json {
                emit(&pretty(&serde_json::to_value(&e)?), None)?;
            } else {
                print_line(&e.value.to_string())?;
            }
        }
        Command::Dual { level, algo, input, out, json } => {
            let f = read_grid(&input)?;
            let d = match algo {
                Algo::Brute => dual_brute(&FunctionTuple::all_equal(level.k, &f, true)?)?,
                Algo::Rec => dual_rec(&f, level.k)?,
                Algo::Spectral => return Err(GhkError::InvalidArgument("dual supports brute or rec".into())),
            };
            match out {
                Some(p) => {
                    write_grid(&p, &d)?;
                    if json {
                        let v = json!({"k": level.k, "out": p, "origin": d.origin(), "extents": d.extents(), "max": d.max_abs()});
                        emit(&pretty(&v), None)?;
                    }
                }
                None => emit(&to_json(&d, false), None)?,
            }
        }
        Command::Inner { level, inputs, json } => {
            let grids: Vec<GridFunction> = inputs.iter().map(read_grid).collect::<Result<_>>()?;
            let tuple = if grids.len() == 1 {
                FunctionTuple::all_equal(level.k, &grids[0], false)?
            } else {
                FunctionTuple::full(level.k, grids)?
            };
            let v = gowers_inner(&tuple)?;
            if json {
                emit(&pretty(&json!({"k": level.k, "value": v})), None)?;
            } else {
                print_line(&v.to_string())?;
            }
        }
        Command::Dualnorm { level, input, delta, out, ascent, json } => {
            let g = read_grid(&input)?;
            let opts = ascent.options();
            let est = match delta {
                Some(d) => triple_dual_lower(&g, level.k, d, &opts)?,
                None => dual_norm_lower(&g, level.k, &opts)?,
            };
            if let Some(p) = &out {
                write_grid(p, &est.witness)?;
            }
            if json {
                let v = json!({
                    "k": level.k,
                    "delta": delta,
                    "value": est.value,
                    "iterations": est.iterations,
                    "converged": est.converged,
                    "residual_history": est.residual_history,
                });
                emit(&pretty(&v), None)?;
            } else {
                print_line(&est.value.to_string())?;
            }
        }
        Command::Decompose { level, delta, input, out_f, out_h, report, ascent } => {
            let g = read_grid(&input)?;
            let r = decompose(&g, level.k, delta, &ascent.options())?;
            if let Some(p) = &out_f {
                write_grid(p, &r.f)?;
            }
            if let Some(p) = &out_h {
                write_grid(p, &r.h)?;
            }
            let v = json!({
                "k": r.k,
                "delta": r.delta,
                "scale": r.scale,
                "C": r.c,
                "iterations": r.iterations,
                "converged": r.converged,
                "stationarity_residual": r.stationarity_residual,
                "spill": r.spill,
                "unreachable_cells": r.unreachable_cells,
                "reconstruction_exact": r.reconstruction_exact(),
                "residual_history": r.residual_history,
                "norms": r.norms,
                "domain": {"origin": r.domain.lo(), "extents": r.domain.ext()},
                "F": out_f.as_ref().map_or_else(|| grid_json(&r.f), |p| json!(p)),
                "H": out_h.as_ref().map_or_else(|| grid_json(&r.h), |p| json!(p)),
            });
            emit(&pretty(&v), report.as_deref())?;
        }
        Command::Verify { config, out, timing, replay: name, k, dim, n, family, seed } => {
            if let Some(check) = name {
                let missing = |what: &str| GhkError::InvalidArgument(format!("--replay needs --{what}"));
                let spec = InstanceSpec {
                    check,
                    k: k.ok_or_else(|| missing("k"))?,
                    d: dim.ok_or_else(|| missing("dim"))?,
                    n: n.ok_or_else(|| missing("n"))?,
                    family: family.ok_or_else(|| missing("family"))?,
                    seed: seed.ok_or_else(|| missing("seed"))?,
                };
                let recs = replay(&spec)?;
                let failed = recs.iter().any(|r| r.failed());
                emit(&pretty(&serde_json::to_value(&recs)?), out.as_deref())?;
                return Ok(if failed { ExitCode::FAILURE } else { ExitCode::SUCCESS });
            }
            let cfg = match &config {
                Some(p) => {
                    let text = fs::read_to_string(p).map_err(|e| GhkError::Io { path: p.clone(), source: e })?;
                    SuiteConfig::from_json(&text)?
                }
                None => SuiteConfig::desk(),
            };
            let report = run_suite(&cfg)?;
            emit(&report.to_json(timing), out.as_deref())?;
            if !report.all_passed() {
                eprintln!("{}", json!({"error": "check-failed", "failures": report.failures}));
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Exponents { k } => {
            let t = exponent_triple(k)?;
            let v = json!({
                "k": k,
                "p": fraction_string(t.p),
                "q": fraction_string(t.q),
                "s": fraction_string(t.s),
                "p_decimal": t.p_f64(),
                "q_decimal": t.q_f64(),
                "s_decimal": t.s_f64(),
            });
            emit(&pretty(&v), None)?;
        }
        Command::Bench { kernel, sizes, dim, reps, seed, out } => {
            let sizes = parse_sizes(&sizes)?;
            let kernels = if kernel.is_empty() { Kernel::ALL.to_vec() } else { kernel };
            let mut rows = Vec::new();
            for k in kernels {
                rows.extend(bench(k, &sizes, dim, reps, seed)?);
            }
            let csv = to_csv(&rows);
            emit(csv.trim_end(), out.as_deref())?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", json!({"error": e.kind(), "message": e.to_string()}));
            ExitCode::FAILURE
        }
    }
}
