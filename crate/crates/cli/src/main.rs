//! `muskia`: render, optimize, validate, diff, bench and inspect skp-lite
//! programs.
//!
//! Exit codes: 0 success, 1 a check came out negative (images differ, trace
//! not validated), 2 bad input or usage, 3 I/O failure.

mod bench;
mod error;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::{json, Value};

use muskia::corpus::{generate_corpus, CorpusMix};
use muskia::format::{load_program, save_program};
use muskia::optimizer::{cost_metrics, optimize, OptimizeConfig, PassKind};
use muskia::raster::{image_diff_ae, rasterize, RasterImage, DEFAULT_FUZZ};
use muskia::validator::{validate_trace_json, ValidationConfig};
use muskia::Program;

use error::CliError;

/// Version tag on every JSON document this tool prints.
pub const OUTPUT_VERSION: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "muskia", version, about = "Render, optimize and validate skp-lite programs")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Debug, Clone, Copy)]
struct Size {
    #[arg(long, default_value_t = 256)]
    width: usize,
    #[arg(long, default_value_t = 256)]
    height: usize,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Rasterize a program to a binary PPM, composited over white.
    Render {
        input: PathBuf,
        #[command(flatten)]
        size: Size,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the rewrite pipeline and print cost metrics before and after.
    Optimize {
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the rewrite trace as JSON.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Comma-separated subset of passes; they still run in pipeline order.
        #[arg(long, value_delimiter = ',')]
        passes: Option<Vec<PassKind>>,
        #[arg(long, default_value_t = 4)]
        max_iters: usize,
        #[command(flatten)]
        size: Size,
    },
    /// Check every step of a rewrite trace; exits 0 only when validated.
    Validate {
        trace: PathBuf,
        /// Square raster size for the differential check.
        #[arg(long, default_value_t = 256)]
        resolution: usize,
        /// Random sample points per step for the symbolic check.
        #[arg(long, default_value_t = 4096)]
        samples: usize,
        /// Also print a per-step summary to stderr.
        #[arg(long)]
        summary: bool,
    },
    /// Compare two images (PPM or skp-lite, rendered at --width x --height).
    Diff {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = DEFAULT_FUZZ)]
        fuzz: f64,
        #[command(flatten)]
        size: Size,
    },
    /// Time the optimizer over programs (files or directories of .json).
    Bench {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        #[command(flatten)]
        size: Size,
    },
    /// Print the static cost metrics of each program.
    Stats {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        size: Size,
    },
    /// Write a generated corpus of programs plus a manifest of expected
    /// firings.
    Corpus {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        count: usize,
        /// Defaults to MUSKIA_SEED, then 0.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("muskia: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cmd: Cmd) -> Result<u8, CliError> {
    match cmd {
        Cmd::Render { input, size, out } => render(&input, size, &out),
        Cmd::Optimize {
            input,
            out,
            trace,
            passes,
            max_iters,
            size,
        } => {
            let mut config = OptimizeConfig::default().with_max_iterations(max_iters);
            if let Some(passes) = passes {
                config.passes = passes;
            }
            run_optimize(&input, out.as_deref(), trace.as_deref(), &config, size)
        }
        Cmd::Validate {
            trace,
            resolution,
            samples,
            summary,
        } => validate(&trace, resolution, samples, summary),
        Cmd::Diff { a, b, fuzz, size } => diff(&a, &b, fuzz, size),
        Cmd::Bench { inputs, reps, size } => {
            if reps < bench::MIN_REPS {
                return Err(CliError::Usage(format!("--reps must be at least {}", bench::MIN_REPS)));
            }
            let programs = load_all(&expand_inputs(&inputs)?)?;
            let report = bench::run(&programs, reps, size.width, size.height)?;
            print_json(&serde_json::to_value(report).expect("bench reports serialize"))?;
            Ok(0)
        }
        Cmd::Stats { inputs, size } => {
            let programs = load_all(&expand_inputs(&inputs)?)?;
            let stats: Vec<Value> = programs
                .iter()
                .map(|(name, p)| json!({"name": name, "metrics": cost_metrics(p, size.width as u32, size.height as u32)}))
                .collect();
            print_json(&json!({"version": OUTPUT_VERSION, "programs": stats}))?;
            Ok(0)
        }
        Cmd::Corpus { out, count, seed } => write_corpus(&out, count, seed.or_else(env_seed).unwrap_or(0)),
    }
}

/// Seed override from MUSKIA_SEED, ignored when unparseable.
fn env_seed() -> Option<u64> {
    std::env::var("MUSKIA_SEED").ok().and_then(|s| s.trim().parse().ok())
}

/// A reader that hangs up early (`| head`) is not an error.
fn print(text: &str) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{text}").and_then(|()| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::Write {
            path: PathBuf::from("<stdout>"),
            source: e,
        }),
        _ => Ok(()),
    }
}

fn print_json(v: &Value) -> Result<(), CliError> {
    print(&serde_json::to_string_pretty(v).expect("values serialize"))
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn load(path: &Path) -> Result<Program, CliError> {
    load_program(&read(path)?).map_err(|source| CliError::Load {
        path: path.to_path_buf(),
        source,
    })
}

/// Directories contribute their `.json` files in name order.
fn expand_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    for path in inputs {
        if path.is_dir() {
            let entries = fs::read_dir(path).map_err(|source| CliError::Read {
                path: path.clone(),
                source,
            })?;
            let mut files: Vec<PathBuf> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json") && p.file_name().is_some_and(|n| n != MANIFEST))
                .collect();
            files.sort();
            out.extend(files);
        } else {
            out.push(path.clone());
        }
    }
    Ok(out)
}

fn load_all(paths: &[PathBuf]) -> Result<Vec<(String, Program)>, CliError> {
    paths
        .par_iter()
        .map(|p| {
            let name = p
                .file_stem()
                .map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
            load(p).map(|prog| (name, prog))
        })
        .collect()
}

fn render(input: &Path, size: Size, out: &Path) -> Result<u8, CliError> {
    let program = load(input)?;
    let image = rasterize(&program, size.width, size.height)?;
    write(out, &image.encode_ppm())?;
    Ok(0)
}

fn run_optimize(
    input: &Path,
    out: Option<&Path>,
    trace_path: Option<&Path>,
    config: &OptimizeConfig,
    size: Size,
) -> Result<u8, CliError> {
    let program = load(input)?;
    let config = OptimizeConfig {
        record_snapshots: trace_path.is_some(),
        ..config.clone()
    };
    let result = optimize(&program, &config)?;
    if let Some(path) = out {
        write(path, &save_program(&result.program))?;
    }
    if let Some(path) = trace_path {
        let text = serde_json::to_vec_pretty(&result.trace.to_json()).expect("traces serialize");
        write(path, &text)?;
    }
    let (w, h) = (size.width as u32, size.height as u32);
    let firings: serde_json::Map<String, Value> = result
        .trace
        .firings()
        .into_iter()
        .map(|(k, n)| (k.name().to_string(), json!(n)))
        .collect();
    print_json(&json!({
        "version": OUTPUT_VERSION,
        "iterations": result.iterations,
        "firings": firings,
        "metrics_before": cost_metrics(&program, w, h),
        "metrics_after": cost_metrics(&result.program, w, h),
    }))?;
    Ok(0)
}

fn validate(path: &Path, resolution: usize, samples: usize, summary: bool) -> Result<u8, CliError> {
    if resolution == 0 {
        return Err(CliError::Usage("--resolution must be positive".into()));
    }
    let bytes = read(path)?;
    // Text that is not JSON at all is just another undecodable trace.
    let doc: Value = serde_json::from_slice(&bytes).unwrap_or(Value::Null);
    let config = ValidationConfig {
        width: resolution,
        height: resolution,
        samples,
        seed: env_seed().unwrap_or(ValidationConfig::default().seed),
        ..ValidationConfig::default()
    };
    let verdict = validate_trace_json(&doc, &config);
    print_json(&verdict.to_json())?;
    if summary {
        eprint!("{}", verdict.summary());
    }
    Ok(if verdict.is_validated() { 0 } else { 1 })
}

/// PPM files are recognized by their magic number; anything else is loaded
/// as skp-lite and rendered.
fn load_image(path: &Path, size: Size) -> Result<RasterImage, CliError> {
    let bytes = read(path)?;
    if bytes.starts_with(b"P6") {
        return RasterImage::decode_ppm(&bytes).map_err(|source| CliError::Image {
            path: path.to_path_buf(),
            source,
        });
    }
    let program = load_program(&bytes).map_err(|source| CliError::Load {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(rasterize(&program, size.width, size.height)?)
}

fn diff(a: &Path, b: &Path, fuzz: f64, size: Size) -> Result<u8, CliError> {
    if !(0.0..=1.0).contains(&fuzz) {
        return Err(CliError::Usage(format!("--fuzz must lie in [0, 1], got {fuzz}")));
    }
    let report = image_diff_ae(&load_image(a, size)?, &load_image(b, size)?, fuzz)?;
    print_json(&json!({
        "version": OUTPUT_VERSION,
        "differing_pixels": report.differing_pixels,
        "max_channel_delta": report.max_channel_delta,
        "total_pixels": report.total_pixels,
        "first_difference": report.first_difference,
    }))?;
    Ok(if report.is_identical() { 0 } else { 1 })
}

const MANIFEST: &str = "manifest.json";

fn write_corpus(out: &Path, count: usize, seed: u64) -> Result<u8, CliError> {
    fs::create_dir_all(out).map_err(|source| CliError::Write {
        path: out.to_path_buf(),
        source,
    })?;
    let corpus = generate_corpus(seed, count, &CorpusMix::default());
    let mut entries = Vec::with_capacity(corpus.len());
    for c in &corpus {
        let file = format!("{}.json", c.name);
        write(&out.join(&file), &save_program(&c.program))?;
        let expected = c.expected.as_ref().map(|m| {
            m.iter()
                .map(|(k, n)| (k.name().to_string(), json!(n)))
                .collect::<serde_json::Map<_, _>>()
        });
        entries.push(json!({
            "file": file,
            "family": c.family.to_string(),
            "variant": c.variant,
            "records": c.program.len(),
            "expected_firings": expected,
        }));
    }
    let manifest = json!({"version": OUTPUT_VERSION, "seed": seed, "programs": entries});
    write(
        &out.join(MANIFEST),
        &serde_json::to_vec_pretty(&manifest).expect("manifests serialize"),
    )?;
    print(&format!("wrote {} programs to {}", corpus.len(), out.display()))?;
    Ok(0)
}
