//! Peephole optimizer over record buffers.
//!
//! Each pass makes one scan of the buffer (see [`harness`]); the pipeline
//! runs the passes in a fixed order and repeats until nothing fires or the
//! iteration cap is reached. Rewrites leave `NoOp` tombstones in place so
//! indices stay stable within an iteration; tombstones are compacted away at
//! the end of each iteration. A tombstone blocks matches that span it, which
//! is what makes some rewrites only visible on the next iteration.

pub mod buffer;
pub mod dstin_clip;
pub mod gradient_mask;
pub mod harness;
pub mod luma;
pub mod metrics;
pub mod srcover;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::command::{check_balanced, BalanceError, Command, Program};
use crate::format::{
    command_from_json, command_to_json, program_from_json_unchecked, program_to_json_with_tombstones, LoadError,
};

pub use buffer::RecordBuffer;
pub use harness::Edit;
pub use metrics::{cost_metrics, speedup, CostMetrics};

use harness::{apply, scan, Pass, ScanOutcome};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PassKind {
    SubsumeLuma,
    GradientMask,
    DstInToClip,
    #[serde(rename = "srcover_savelayer")]
    SrcOverSaveLayer,
}

impl PassKind {
    /// Pipeline order.
    pub const ALL: [PassKind; 4] = [
        PassKind::SubsumeLuma,
        PassKind::GradientMask,
        PassKind::DstInToClip,
        PassKind::SrcOverSaveLayer,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PassKind::SubsumeLuma => "subsume_luma",
            PassKind::GradientMask => "gradient_mask",
            PassKind::DstInToClip => "dstin_to_clip",
            PassKind::SrcOverSaveLayer => "srcover_savelayer",
        }
    }

    fn short_name(self) -> &'static str {
        match self {
            PassKind::SubsumeLuma => "luma",
            PassKind::GradientMask => "gradient",
            PassKind::DstInToClip => "dstin",
            PassKind::SrcOverSaveLayer => "srcover",
        }
    }
}

impl fmt::Display for PassKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown pass {0:?}")]
pub struct UnknownPass(pub String);

impl FromStr for PassKind {
    type Err = UnknownPass;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PassKind::ALL
            .into_iter()
            .find(|k| k.name() == s || k.short_name() == s)
            .ok_or_else(|| UnknownPass(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizeConfig {
    /// Enabled passes. They always run in pipeline order.
    pub passes: Vec<PassKind>,
    pub max_iterations: usize,
    /// Keep a program snapshot per trace entry. Off for timing runs.
    pub record_snapshots: bool,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        OptimizeConfig {
            passes: PassKind::ALL.to_vec(),
            max_iterations: 4,
            record_snapshots: true,
        }
    }
}

impl OptimizeConfig {
    pub fn only(pass: PassKind) -> Self {
        OptimizeConfig {
            passes: vec![pass],
            ..Default::default()
        }
    }

    pub fn with_max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }

    pub fn without_snapshots(mut self) -> Self {
        self.record_snapshots = false;
        self
    }

    fn enabled(&self, kind: PassKind) -> bool {
        self.passes.contains(&kind)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TraceStep {
    Pass(PassKind),
    Compact(CompactTag),
}

/// Serialized as `"compact_noops"`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CompactTag {
    #[serde(rename = "compact_noops")]
    CompactNoops,
}

impl TraceStep {
    pub const COMPACT: TraceStep = TraceStep::Compact(CompactTag::CompactNoops);

    pub fn pass(self) -> Option<PassKind> {
        match self {
            TraceStep::Pass(k) => Some(k),
            TraceStep::Compact(_) => None,
        }
    }
}

impl fmt::Display for TraceStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceStep::Pass(k) => k.fmt(f),
            TraceStep::Compact(_) => f.write_str("compact_noops"),
        }
    }
}

/// One program-to-program step of an optimization run.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceEntry {
    pub step: TraceStep,
    pub iteration: usize,
    /// Anchor record of each match, in the `before` program's indices.
    pub fired_at: Vec<usize>,
    pub edits: Vec<Edit>,
    /// Records placed before the given `before` index, in order.
    pub inserted: Vec<(usize, Command)>,
    /// Tombstone indices dropped by a compaction.
    pub removed: Vec<usize>,
    /// Snapshot indices; equal to the entry position and position + 1 when
    /// snapshots are recorded.
    pub before: usize,
    pub after: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RewriteTrace {
    /// `snapshots[0]` is the input. Empty when snapshots are off.
    pub snapshots: Vec<Program>,
    pub entries: Vec<TraceEntry>,
}

#[derive(Debug, Error, PartialEq)]
pub enum ReplayError {
    #[error("edit index {index} is outside a {len}-record program")]
    EditOutOfRange { index: usize, len: usize },
    #[error("record {index} does not hold the edited command")]
    StaleEdit { index: usize },
    #[error("insertion index {index} is outside a {len}-record program")]
    InsertOutOfRange { index: usize, len: usize },
    #[error("record {index} is not a tombstone")]
    RemovesLiveRecord { index: usize },
}

/// Rebuilds an entry's result from its `before` program and its edits.
pub fn replay_entry(before: &Program, entry: &TraceEntry) -> Result<Program, ReplayError> {
    let len = before.len();
    let mut records = before.records.clone();
    for e in &entry.edits {
        let slot = records
            .get_mut(e.index)
            .ok_or(ReplayError::EditOutOfRange { index: e.index, len })?;
        if *slot != e.old {
            return Err(ReplayError::StaleEdit { index: e.index });
        }
        *slot = e.new.clone();
    }
    if let Some(&(index, _)) = entry.inserted.iter().find(|(i, _)| *i > len) {
        return Err(ReplayError::InsertOutOfRange { index, len });
    }
    let edited = Program::new(records);
    let mut buf = RecordBuffer::new(&edited);
    for (i, cmd) in &entry.inserted {
        buf.queue_insert(*i, [cmd.clone()]);
    }
    buf.merge_insertions().expect("insertion indices checked above");
    let mut out = buf.to_program();
    if !entry.removed.is_empty() {
        for &i in &entry.removed {
            match out.records.get(i) {
                Some(c) if c.is_noop() => {}
                _ => return Err(ReplayError::RemovesLiveRecord { index: i }),
            }
        }
        out = out.compacted();
    }
    Ok(out)
}

impl RewriteTrace {
    /// Matches per pass, summed over the run.
    pub fn firings(&self) -> BTreeMap<PassKind, usize> {
        let mut out = BTreeMap::new();
        for e in &self.entries {
            if let Some(k) = e.step.pass() {
                *out.entry(k).or_insert(0) += e.fired_at.len();
            }
        }
        out
    }

    pub fn total_firings(&self) -> usize {
        self.firings().values().sum()
    }

    /// Entries that record a pass firing (compactions excluded).
    pub fn pass_entries(&self) -> impl Iterator<Item = &TraceEntry> {
        self.entries.iter().filter(|e| e.step.pass().is_some())
    }

    pub fn input(&self) -> Option<&Program> {
        self.snapshots.first()
    }

    pub fn output(&self) -> Option<&Program> {
        self.snapshots.last()
    }

    pub fn to_json(&self) -> Value {
        let entries: Vec<RawEntry> = self
            .entries
            .iter()
            .map(|e| RawEntry {
                step: e.step,
                iteration: e.iteration,
                before: e.before,
                after: e.after,
                fired_at: e.fired_at.clone(),
                edits: e
                    .edits
                    .iter()
                    .map(|ed| RawEdit {
                        index: ed.index,
                        old: command_to_json(&ed.old),
                        new: command_to_json(&ed.new),
                    })
                    .collect(),
                inserted: e
                    .inserted
                    .iter()
                    .map(|(index, c)| RawInsert {
                        index: *index,
                        command: command_to_json(c),
                    })
                    .collect(),
                removed: e.removed.clone(),
            })
            .collect();
        serde_json::to_value(RawTrace {
            version: TRACE_VERSION,
            snapshots: self.snapshots.iter().map(program_to_json_with_tombstones).collect(),
            entries,
        })
        .expect("traces always serialize")
    }

    pub fn from_json(v: &Value) -> Result<RewriteTrace, TraceDecodeError> {
        let raw: RawTrace = serde_path_to_error::deserialize(v.clone()).map_err(|e| TraceDecodeError::Schema {
            path: format!("$.{}", e.path()),
            reason: e.inner().to_string(),
        })?;
        if raw.version != TRACE_VERSION {
            return Err(TraceDecodeError::Version(raw.version));
        }
        let snapshots = raw
            .snapshots
            .iter()
            .enumerate()
            .map(|(i, s)| {
                program_from_json_unchecked(s).map_err(|source| TraceDecodeError::Snapshot { index: i, source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let command = |entry: usize, v: &Value| {
            command_from_json(v).map_err(|source| TraceDecodeError::Command { entry, source })
        };
        let mut entries = Vec::with_capacity(raw.entries.len());
        for (i, e) in raw.entries.into_iter().enumerate() {
            let edits = e
                .edits
                .iter()
                .map(|ed| {
                    Ok(Edit {
                        index: ed.index,
                        old: command(i, &ed.old)?,
                        new: command(i, &ed.new)?,
                    })
                })
                .collect::<Result<Vec<_>, TraceDecodeError>>()?;
            let inserted = e
                .inserted
                .iter()
                .map(|ins| Ok((ins.index, command(i, &ins.command)?)))
                .collect::<Result<Vec<_>, TraceDecodeError>>()?;
            entries.push(TraceEntry {
                step: e.step,
                iteration: e.iteration,
                fired_at: e.fired_at,
                edits,
                inserted,
                removed: e.removed,
                before: e.before,
                after: e.after,
            });
        }
        Ok(RewriteTrace { snapshots, entries })
    }
}

pub const TRACE_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum TraceDecodeError {
    #[error("trace schema error at {path}: {reason}")]
    Schema { path: String, reason: String },
    #[error("unsupported trace version {0}")]
    Version(u32),
    #[error("snapshot {index}: {source}")]
    Snapshot { index: usize, source: LoadError },
    #[error("entry {entry}: {source}")]
    Command { entry: usize, source: LoadError },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrace {
    version: u32,
    snapshots: Vec<Value>,
    entries: Vec<RawEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    step: TraceStep,
    iteration: usize,
    before: usize,
    after: usize,
    fired_at: Vec<usize>,
    edits: Vec<RawEdit>,
    inserted: Vec<RawInsert>,
    removed: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEdit {
    index: usize,
    old: Value,
    new: Value,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInsert {
    index: usize,
    command: Value,
}

/// Bookkeeping for one pass scan.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScanStats {
    pub pass: PassKind,
    pub iteration: usize,
    pub records: usize,
    pub visited: usize,
    pub max_depth: usize,
    pub fired: usize,
}

#[derive(Clone, Debug)]
pub struct Optimized {
    pub program: Program,
    pub trace: RewriteTrace,
    /// Pipeline iterations run, the final no-change iteration included.
    pub iterations: usize,
    pub scans: Vec<ScanStats>,
}

fn run_scan(kind: PassKind, buf: &RecordBuffer<'_>) -> Result<ScanOutcome, BalanceError> {
    fn go<P: Pass>(mut pass: P, buf: &RecordBuffer<'_>) -> Result<ScanOutcome, BalanceError> {
        debug_assert!(buf.pending_insertions().is_empty());
        scan(&mut pass, buf)
    }
    match kind {
        PassKind::SubsumeLuma => go(luma::SubsumeLuma, buf),
        PassKind::GradientMask => go(gradient_mask::GradientMask, buf),
        PassKind::DstInToClip => go(dstin_clip::DstInToClip, buf),
        PassKind::SrcOverSaveLayer => go(srcover::SrcOverSaveLayer, buf),
    }
}

pub fn optimize(p: &Program, config: &OptimizeConfig) -> Result<Optimized, BalanceError> {
    check_balanced(p)?;
    let mut buf = RecordBuffer::new(p);
    let mut trace = RewriteTrace::default();
    if config.record_snapshots {
        trace.snapshots.push(p.clone());
    }
    let mut scans = Vec::new();
    let mut iterations = 0;
    let mut step_index = 0;
    let mut push_entry = |trace: &mut RewriteTrace, buf: &RecordBuffer<'_>, mut entry: TraceEntry| {
        entry.before = step_index;
        entry.after = step_index + 1;
        step_index += 1;
        if config.record_snapshots {
            trace.snapshots.push(buf.to_program());
        }
        trace.entries.push(entry);
    };
    for iteration in 1..=config.max_iterations {
        iterations = iteration;
        let mut fired = false;
        for kind in PassKind::ALL.into_iter().filter(|k| config.enabled(*k)) {
            let records = buf.len();
            let outcome = run_scan(kind, &buf)?;
            scans.push(ScanStats {
                pass: kind,
                iteration,
                records,
                visited: outcome.visited,
                max_depth: outcome.max_depth,
                fired: outcome.log.fired_at.len(),
            });
            if outcome.log.is_empty() {
                continue;
            }
            fired = true;
            let edits = apply(&mut buf, &outcome.log);
            let entry = TraceEntry {
                step: TraceStep::Pass(kind),
                iteration,
                fired_at: outcome.log.fired_at,
                edits,
                inserted: outcome.log.insertions,
                removed: Vec::new(),
                before: 0,
                after: 0,
            };
            push_entry(&mut trace, &buf, entry);
        }
        let removed = buf.compact();
        if !removed.is_empty() {
            let entry = TraceEntry {
                step: TraceStep::COMPACT,
                iteration,
                fired_at: Vec::new(),
                edits: Vec::new(),
                inserted: Vec::new(),
                removed,
                before: 0,
                after: 0,
            };
            push_entry(&mut trace, &buf, entry);
        }
        if !fired {
            break;
        }
    }
    Ok(Optimized {
        program: buf.to_program(),
        trace,
        iterations,
        scans,
    })
}

#[cfg(test)]
mod tests;
