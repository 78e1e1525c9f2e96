//! Translation validation of optimizer traces.
//!
//! Every step of a trace is checked three ways: an independent re-derivation
//! of the rewrite from the `before` snapshot ([`sidecheck`]), exact
//! rasterization of both snapshots, and sampled evaluation of both
//! denotations at shape corners plus random points.

pub mod faults;
pub mod sidecheck;

use std::collections::HashMap;

use serde_json::{json, Value};

use crate::color::Point;
use crate::command::{check_balanced, Program};
use crate::layer::{first_mismatch, SampleSet};
use crate::optimizer::{replay_entry, RewriteTrace, TraceEntry, TraceStep};
use crate::raster::{image_diff_ae, rasterize, DiffReport, RasterImage, DEFAULT_FUZZ};
use crate::shape::BoundsRect;

pub const REPORT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationConfig {
    pub width: usize,
    pub height: usize,
    pub fuzz: f64,
    /// Random sample points per step, on top of shape corners.
    pub samples: usize,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig {
            width: 256,
            height: 256,
            fuzz: DEFAULT_FUZZ,
            samples: 4096,
            seed: 0x5eed,
            tolerance: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CheckResult {
    Pass,
    Fail(String),
    /// Not run because an earlier stage made it meaningless.
    Skipped(String),
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        matches!(self, CheckResult::Pass)
    }
}

/// Concrete evidence that a step changed the image.
#[derive(Clone, Debug, PartialEq)]
pub enum Witness {
    Pixel {
        x: usize,
        y: usize,
        before: [f64; 4],
        after: [f64; 4],
        differing_pixels: usize,
    },
    Sample {
        point: Point,
        delta: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    pub step: usize,
    pub name: String,
    pub sidecheck: CheckResult,
    pub differential: Option<DiffReport>,
    pub symbolic: CheckResult,
    pub witness: Option<Witness>,
}

impl StepReport {
    pub fn passed(&self) -> bool {
        self.sidecheck.passed() && self.differential.is_some_and(|d| d.differing_pixels == 0) && self.symbolic.passed()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Validated,
    Refuted { step: usize, witness: Witness },
    SidecheckFailed { step: usize, reason: String },
    Inconclusive { step: usize, reason: String },
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Validated => "validated",
            Verdict::Refuted { .. } => "refuted",
            Verdict::SidecheckFailed { .. } => "sidecheck-fail",
            Verdict::Inconclusive { .. } => "inconclusive",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationVerdict {
    pub steps: Vec<StepReport>,
    pub overall: Verdict,
}

impl ValidationVerdict {
    pub fn is_validated(&self) -> bool {
        self.overall == Verdict::Validated
    }

    fn inconclusive(step: usize, reason: impl Into<String>) -> Self {
        ValidationVerdict {
            steps: Vec::new(),
            overall: Verdict::Inconclusive {
                step,
                reason: reason.into(),
            },
        }
    }

    pub fn to_json(&self) -> Value {
        let check = |c: &CheckResult| match c {
            CheckResult::Pass => json!({"result": "pass"}),
            CheckResult::Fail(r) => json!({"result": "fail", "reason": r}),
            CheckResult::Skipped(r) => json!({"result": "skipped", "reason": r}),
        };
        let witness = |w: &Witness| match w {
            Witness::Pixel {
                x,
                y,
                before,
                after,
                differing_pixels,
            } => json!({
                "kind": "pixel", "x": x, "y": y,
                "before": before, "after": after,
                "differing_pixels": differing_pixels,
            }),
            Witness::Sample { point, delta } => json!({
                "kind": "sample", "x": point.x, "y": point.y, "delta": delta,
            }),
        };
        let steps: Vec<Value> = self
            .steps
            .iter()
            .map(|s| {
                json!({
                    "step": s.step,
                    "pass_name": s.name,
                    "sidecheck": check(&s.sidecheck),
                    "differential": s.differential.map(|d| json!({
                        "differing_pixels": d.differing_pixels,
                        "max_channel_delta": d.max_channel_delta,
                        "total_pixels": d.total_pixels,
                    })),
                    "symbolic": check(&s.symbolic),
                    "witness": s.witness.as_ref().map(witness),
                })
            })
            .collect();
        let overall = match &self.overall {
            Verdict::Validated => json!({"verdict": "validated"}),
            Verdict::Refuted { step, witness: w } => json!({"verdict": "refuted", "step": step, "witness": witness(w)}),
            Verdict::SidecheckFailed { step, reason } => {
                json!({"verdict": "sidecheck-fail", "step": step, "reason": reason})
            }
            Verdict::Inconclusive { step, reason } => {
                json!({"verdict": "inconclusive", "step": step, "reason": reason})
            }
        };
        json!({"version": REPORT_VERSION, "overall": overall, "steps": steps})
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        for s in &self.steps {
            let mark = if s.passed() { "ok  " } else { "FAIL" };
            let diff = s
                .differential
                .map_or("-".to_string(), |d| d.differing_pixels.to_string());
            out.push_str(&format!("{mark} step {:>3} {:<18} differing={diff}\n", s.step, s.name));
        }
        match &self.overall {
            Verdict::Validated => out.push_str("validated\n"),
            Verdict::Refuted { step, witness } => out.push_str(&format!("refuted at step {step}: {witness:?}\n")),
            Verdict::SidecheckFailed { step, reason } => {
                out.push_str(&format!("sidecheck failed at step {step}: {reason}\n"))
            }
            Verdict::Inconclusive { step, reason } => out.push_str(&format!("inconclusive at step {step}: {reason}\n")),
        }
        out
    }
}

/// Re-derives the step's `after` program from `before`, independently of the
/// optimizer, and compares it with the claimed one.
fn sidecheck_step(before: &Program, after: &Program, entry: &TraceEntry) -> CheckResult {
    match replay_entry(before, entry) {
        Ok(replayed) if replayed == *after => {}
        Ok(_) => return CheckResult::Fail("recorded edits do not reproduce the after snapshot".into()),
        Err(e) => return CheckResult::Fail(format!("recorded edits do not apply: {e}")),
    }
    match entry.step {
        TraceStep::Compact(_) => {
            let noops: Vec<usize> = (0..before.len()).filter(|&i| before.records[i].is_noop()).collect();
            if !entry.edits.is_empty() || !entry.inserted.is_empty() {
                CheckResult::Fail("compaction carries edits".into())
            } else if noops != entry.removed {
                CheckResult::Fail("compaction does not remove exactly the tombstones".into())
            } else if *after != before.compacted() {
                CheckResult::Fail("compaction changed live records".into())
            } else {
                CheckResult::Pass
            }
        }
        TraceStep::Pass(kind) => {
            if !entry.removed.is_empty() {
                return CheckResult::Fail("pass step removes records".into());
            }
            match sidecheck::apply_checked(kind, before, &entry.fired_at) {
                Err(reason) => CheckResult::Fail(reason),
                Ok(expected) if expected.program != *after => {
                    CheckResult::Fail(format!("after snapshot differs from an independent {kind} rewrite"))
                }
                Ok(_) => CheckResult::Pass,
            }
        }
    }
}

struct Rasters<'a> {
    snapshots: &'a [Program],
    width: usize,
    height: usize,
    cache: HashMap<usize, RasterImage>,
}

impl Rasters<'_> {
    fn ensure(&mut self, i: usize) -> Result<(), String> {
        if !self.cache.contains_key(&i) {
            let img = rasterize(&self.snapshots[i], self.width, self.height).map_err(|e| e.to_string())?;
            self.cache.insert(i, img);
        }
        Ok(())
    }

    /// Diff of snapshots `i` and `i + 1`, with both images.
    fn pair(&mut self, i: usize, fuzz: f64) -> Result<(DiffReport, &RasterImage, &RasterImage), String> {
        self.ensure(i)?;
        self.ensure(i + 1)?;
        let (a, b) = (&self.cache[&i], &self.cache[&(i + 1)]);
        let d = image_diff_ae(a, b, fuzz).map_err(|e| e.to_string())?;
        Ok((d, a, b))
    }
}

pub fn validate_trace(trace: &RewriteTrace, config: &ValidationConfig) -> ValidationVerdict {
    let n = trace.snapshots.len();
    if n == 0 {
        return ValidationVerdict::inconclusive(0, "trace has no snapshots");
    }
    if trace.entries.len() + 1 != n {
        return ValidationVerdict::inconclusive(0, "snapshot count does not match step count");
    }
    if let Err(e) = check_balanced(&trace.snapshots[0]) {
        return ValidationVerdict::inconclusive(0, format!("input snapshot is not balanced: {e}"));
    }
    let area = BoundsRect::new(0.0, 0.0, config.width as f64, config.height as f64);
    let mut rasters = Rasters {
        snapshots: &trace.snapshots,
        width: config.width,
        height: config.height,
        cache: HashMap::new(),
    };
    let mut steps = Vec::with_capacity(trace.entries.len());
    let mut overall = Verdict::Validated;
    for (step, entry) in trace.entries.iter().enumerate() {
        if entry.before != step || entry.after != step + 1 {
            return ValidationVerdict {
                steps,
                overall: Verdict::Inconclusive {
                    step,
                    reason: "entry does not refer to consecutive snapshots".into(),
                },
            };
        }
        let (before, after) = (&trace.snapshots[step], &trace.snapshots[step + 1]);
        let sidecheck = sidecheck_step(before, after, entry);
        let mut report = StepReport {
            step,
            name: entry.step.to_string(),
            sidecheck,
            differential: None,
            symbolic: CheckResult::Skipped("after snapshot is not balanced".into()),
            witness: None,
        };
        if check_balanced(after).is_ok() {
            match rasters.pair(step, config.fuzz) {
                Ok((d, a, b)) => {
                    if let Some((x, y)) = d.first_difference.filter(|_| d.differing_pixels > 0) {
                        report.witness = Some(Witness::Pixel {
                            x,
                            y,
                            before: a.get(x, y).channels(),
                            after: b.get(x, y).channels(),
                            differing_pixels: d.differing_pixels,
                        });
                    }
                    report.differential = Some(d);
                }
                Err(e) => report.symbolic = CheckResult::Skipped(format!("rasterization failed: {e}")),
            }
            let (ta, tb) = (before.run(), after.run());
            if let (Some(_), Ok(ta), Ok(tb)) = (report.differential, ta, tb) {
                let points = SampleSet::for_terms(&ta, &tb, config.seed ^ step as u64, config.samples, area);
                report.symbolic = match first_mismatch(&ta, &tb, &points, config.tolerance) {
                    None => CheckResult::Pass,
                    Some(m) => {
                        if report.witness.is_none() {
                            report.witness = Some(Witness::Sample {
                                point: m.point,
                                delta: m.delta,
                            });
                        }
                        CheckResult::Fail(format!("({}, {}) differs by {:e}", m.point.x, m.point.y, m.delta))
                    }
                };
            }
        }
        if overall == Verdict::Validated && !report.passed() {
            overall = match (&report.witness, &report.sidecheck) {
                (Some(w), _) => Verdict::Refuted {
                    step,
                    witness: w.clone(),
                },
                (None, CheckResult::Fail(reason)) => Verdict::SidecheckFailed {
                    step,
                    reason: reason.clone(),
                },
                (None, _) => Verdict::Inconclusive {
                    step,
                    reason: "step could not be evaluated".into(),
                },
            };
        }
        steps.push(report);
    }
    ValidationVerdict { steps, overall }
}

/// Decodes and validates a serialized trace. Anything that does not decode
/// is inconclusive, never validated.
pub fn validate_trace_json(v: &Value, config: &ValidationConfig) -> ValidationVerdict {
    match RewriteTrace::from_json(v) {
        Ok(trace) => validate_trace(&trace, config),
        Err(e) => ValidationVerdict::inconclusive(0, format!("cannot decode trace: {e}")),
    }
}
