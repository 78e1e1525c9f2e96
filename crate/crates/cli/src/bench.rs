//! Optimizer timing over a set of programs.

use std::time::{Duration, Instant};

use serde::Serialize;

use muskia::optimizer::{cost_metrics, optimize, speedup, CostMetrics, OptimizeConfig};
use muskia::Program;

use crate::error::CliError;
use crate::OUTPUT_VERSION;

pub const MIN_REPS: usize = 10;
const WARMUP: usize = 3;

#[derive(Debug, Serialize)]
pub struct ProgramBench {
    pub name: String,
    pub records: usize,
    /// Median over the timed repetitions.
    pub optimize_time_ns: u128,
    pub metrics_before: CostMetrics,
    pub metrics_after: CostMetrics,
    pub speedup_proxy: f64,
}

#[derive(Debug, Serialize)]
pub struct BenchReport {
    pub version: u32,
    pub reps: usize,
    pub programs: Vec<ProgramBench>,
    pub geomean_speedup_proxy: f64,
}

/// Times `optimize` alone, with snapshots off. Programs run one after
/// another so timings do not compete for cores.
pub fn run(programs: &[(String, Program)], reps: usize, width: usize, height: usize) -> Result<BenchReport, CliError> {
    let config = OptimizeConfig::default().without_snapshots();
    let (w, h) = (width as u32, height as u32);
    let mut out = Vec::with_capacity(programs.len());
    for (name, program) in programs {
        let result = optimize(program, &config)?;
        for _ in 0..WARMUP {
            drop(optimize(program, &config)?);
        }
        let mut times: Vec<Duration> = Vec::with_capacity(reps);
        for _ in 0..reps {
            let start = Instant::now();
            let r = optimize(program, &config);
            times.push(start.elapsed());
            drop(r);
        }
        times.sort();
        let before = cost_metrics(program, w, h);
        let after = cost_metrics(&result.program, w, h);
        out.push(ProgramBench {
            name: name.clone(),
            records: program.len(),
            optimize_time_ns: times[reps / 2].as_nanos(),
            metrics_before: before,
            metrics_after: after,
            speedup_proxy: speedup(&before, &after),
        });
    }
    let geomean = if out.is_empty() {
        1.0
    } else {
        (out.iter().map(|p| p.speedup_proxy.ln()).sum::<f64>() / out.len() as f64).exp()
    };
    Ok(BenchReport {
        version: OUTPUT_VERSION,
        reps,
        programs: out,
        geomean_speedup_proxy: geomean,
    })
}
