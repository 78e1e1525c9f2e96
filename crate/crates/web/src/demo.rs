use std::str::FromStr;

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use muskia::corpus::{generate_corpus, pinterest_nest, CorpusMix, Family};
use muskia::format::{load_program_str, save_program_string};
use muskia::optimizer::{cost_metrics, optimize, speedup, OptimizeConfig, PassKind};
use muskia::raster::{image_diff_ae, rasterize, DEFAULT_FUZZ};
use muskia::Program;

/// Names accepted by [`example`], in menu order.
pub const EXAMPLES: [&str; 10] = [
    "pinterest",
    "luma",
    "gradient",
    "dstin",
    "srcover",
    "luma-near-miss",
    "gradient-near-miss",
    "dstin-near-miss",
    "srcover-near-miss",
    "random",
];

fn load(doc: &str) -> Result<Program, String> {
    load_program_str(doc).map_err(|e| format!("{e} ({})", e.class()))
}

fn check_size(width: usize, height: usize) -> Result<(), String> {
    if width == 0 || height == 0 || width > 2048 || height > 2048 {
        return Err(format!("canvas {width}x{height} is outside 1..=2048"));
    }
    Ok(())
}

pub fn render_rgba(doc: &str, width: usize, height: usize) -> Result<Vec<u8>, String> {
    check_size(width, height)?;
    let program = load(doc)?;
    let image = rasterize(&program, width, height).map_err(|e| e.to_string())?;
    Ok(image.to_rgba8())
}

#[wasm_bindgen]
#[derive(Debug)]
pub struct Comparison {
    before: Vec<u8>,
    after: Vec<u8>,
    optimized: String,
    report: String,
    differing_pixels: usize,
}

#[wasm_bindgen]
impl Comparison {
    #[wasm_bindgen(getter)]
    pub fn before(&self) -> Vec<u8> {
        self.before.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn after(&self) -> Vec<u8> {
        self.after.clone()
    }

    /// The optimized program as skp-lite text.
    #[wasm_bindgen(getter)]
    pub fn optimized(&self) -> String {
        self.optimized.clone()
    }

    /// JSON with firings, cost metrics and the image diff.
    #[wasm_bindgen(getter)]
    pub fn report(&self) -> String {
        self.report.clone()
    }

    #[wasm_bindgen(getter, js_name = differingPixels)]
    pub fn differing_pixels(&self) -> usize {
        self.differing_pixels
    }
}

fn pretty(p: &Program) -> String {
    let v: Value = serde_json::from_str(&save_program_string(p)).expect("saved programs are JSON");
    serde_json::to_string_pretty(&v).expect("values serialize")
}

pub fn optimize_and_diff(doc: &str, width: usize, height: usize) -> Result<Comparison, String> {
    check_size(width, height)?;
    let program = load(doc)?;
    let result = optimize(&program, &OptimizeConfig::default().without_snapshots()).map_err(|e| e.to_string())?;
    let before = rasterize(&program, width, height).map_err(|e| e.to_string())?;
    let after = rasterize(&result.program, width, height).map_err(|e| e.to_string())?;
    let diff = image_diff_ae(&before, &after, DEFAULT_FUZZ).map_err(|e| e.to_string())?;
    let (w, h) = (width as u32, height as u32);
    let (m0, m1) = (cost_metrics(&program, w, h), cost_metrics(&result.program, w, h));
    let firings: serde_json::Map<String, Value> = result
        .trace
        .firings()
        .into_iter()
        .map(|(k, n)| (k.name().to_string(), json!(n)))
        .collect();
    let report = json!({
        "iterations": result.iterations,
        "firings": firings,
        "metrics_before": m0,
        "metrics_after": m1,
        "speedup_proxy": speedup(&m0, &m1),
        "differing_pixels": diff.differing_pixels,
        "max_channel_delta": diff.max_channel_delta,
    });
    Ok(Comparison {
        before: before.to_rgba8(),
        after: after.to_rgba8(),
        optimized: pretty(&result.program),
        report: serde_json::to_string_pretty(&report).expect("values serialize"),
        differing_pixels: diff.differing_pixels,
    })
}

pub fn example(name: &str, seed: u64) -> Result<String, String> {
    let family = match name {
        "pinterest" => return Ok(pretty(&pinterest_nest())),
        "random" => Family::Random,
        _ => {
            let (pass, near) = match name.strip_suffix("-near-miss") {
                Some(p) => (p, true),
                None => (name, false),
            };
            let kind = PassKind::from_str(pass).map_err(|_| format!("unknown example {name:?}"))?;
            if near {
                Family::NearMiss(kind)
            } else {
                Family::Pattern(kind)
            }
        }
    };
    let program = generate_corpus(seed, 1, &CorpusMix::only(family))
        .pop()
        .expect("one program requested")
        .program;
    Ok(pretty(&program))
}
