//! Single-scan driver shared by every rewrite pass.
//!
//! The harness walks the buffer once, keeps a stack of open layer frames and
//! a count of open brackets, and dispatches one callback per record. A pass
//! carries its own per-frame match state; the root scope has a frame of its
//! own that never closes. Edits requested during the scan are queued and
//! applied afterwards, so callbacks always observe the buffer as it was when
//! the scan began.

use smallvec::SmallVec;

use crate::command::{BalanceError, Command};
use crate::layer::Paint;
use crate::shape::Shape;

use super::buffer::RecordBuffer;
use super::PassKind;

/// An open `SaveLayer` as seen by a pass.
#[derive(Clone, Debug)]
pub struct Frame<S> {
    pub state: S,
    /// Index of the `SaveLayer` record.
    pub opened_at: usize,
    /// Open brackets, this layer included, at the time it opened.
    save_count: usize,
}

/// Rewrites queued by a pass during one scan.
#[derive(Clone, Debug, Default)]
pub struct EditLog {
    pub fired_at: Vec<usize>,
    pub replacements: Vec<(usize, Command)>,
    pub insertions: Vec<(usize, Command)>,
}

impl EditLog {
    pub fn is_empty(&self) -> bool {
        self.fired_at.is_empty()
    }
}

pub struct Scan<'a, S> {
    buf: &'a RecordBuffer<'a>,
    log: EditLog,
    /// State of the innermost open scope.
    top: S,
    /// One entry per open layer, holding the state of the scope it was
    /// opened in.
    frames: SmallVec<[Frame<S>; 8]>,
    /// First record of the innermost scope and the bracket count when it
    /// opened, cached from the top frame.
    top_start: usize,
    top_save_count: usize,
    save_count: usize,
    visited: usize,
    max_depth: usize,
}

impl<'a, S> Scan<'a, S> {
    pub fn record(&self, index: usize) -> &'a Command {
        self.buf.get(index)
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    /// State of the innermost open layer, or the root scope.
    pub fn scope(&mut self) -> &mut S {
        &mut self.top
    }

    /// Index of the first record inside the current scope.
    pub fn scope_start(&self) -> usize {
        self.top_start
    }

    /// Plain `Save` brackets open inside the current scope.
    pub fn open_saves(&self) -> usize {
        self.save_count - self.top_save_count
    }

    fn sync_top(&mut self) {
        (self.top_start, self.top_save_count) = self.frames.last().map_or((0, 0), |f| (f.opened_at + 1, f.save_count));
    }

    pub fn layer_depth(&self) -> usize {
        self.frames.len()
    }

    pub fn replace(&mut self, index: usize, cmd: Command) {
        self.log.replacements.push((index, cmd));
    }

    pub fn tombstone(&mut self, index: usize) {
        self.replace(index, Command::NoOp);
    }

    pub fn insert(&mut self, index: usize, cmds: impl IntoIterator<Item = Command>) {
        self.log.insertions.extend(cmds.into_iter().map(|c| (index, c)));
    }

    pub fn fired(&mut self, anchor: usize) {
        self.log.fired_at.push(anchor);
    }
}

pub trait Pass {
    type State;

    fn kind(&self) -> PassKind;

    fn root_state(&self) -> Self::State;

    /// Called with the parent scope on top; returns the new frame's state.
    fn on_save_layer(&mut self, cx: &mut Scan<'_, Self::State>, index: usize, paint: &Paint) -> Self::State;

    /// Called after `frame` has been popped, with its parent on top.
    fn on_restore_layer(&mut self, cx: &mut Scan<'_, Self::State>, index: usize, frame: Frame<Self::State>);

    fn on_save(&mut self, cx: &mut Scan<'_, Self::State>, index: usize);

    fn on_restore(&mut self, cx: &mut Scan<'_, Self::State>, index: usize);

    fn on_draw(&mut self, cx: &mut Scan<'_, Self::State>, index: usize, shape: &Shape, paint: &Paint);

    fn on_clip(&mut self, cx: &mut Scan<'_, Self::State>, index: usize, shape: &Shape);

    /// Anything the pass has no pattern for, tombstones included.
    fn on_other(&mut self, cx: &mut Scan<'_, Self::State>, index: usize);

    /// Called once after the last record with the root scope on top.
    fn on_end(&mut self, _cx: &mut Scan<'_, Self::State>, _len: usize) {}
}

#[derive(Clone, Debug)]
pub struct ScanOutcome {
    pub log: EditLog,
    pub visited: usize,
    pub max_depth: usize,
}

/// Only walked again on the error path, so the scan itself needs just a
/// bracket count.
fn outermost_unclosed(buf: &RecordBuffer<'_>) -> usize {
    let mut open = Vec::new();
    for (i, cmd) in buf.iter().enumerate() {
        match cmd {
            Command::Save | Command::SaveLayer { .. } => open.push(i),
            Command::Restore => {
                open.pop();
            }
            _ => {}
        }
    }
    open.first().copied().unwrap_or(0)
}

/// Runs `pass` over `buf` in one left-to-right scan.
pub fn scan<P: Pass>(pass: &mut P, buf: &RecordBuffer<'_>) -> Result<ScanOutcome, BalanceError> {
    let mut cx = Scan {
        buf,
        log: EditLog::default(),
        top: pass.root_state(),
        frames: SmallVec::new(),
        top_start: 0,
        top_save_count: 0,
        save_count: 0,
        visited: 0,
        max_depth: 0,
    };
    for (index, cmd) in buf.iter().enumerate() {
        cx.visited += 1;
        match cmd {
            Command::SaveLayer { paint } => {
                let state = pass.on_save_layer(&mut cx, index, paint);
                cx.save_count += 1;
                let parent = std::mem::replace(&mut cx.top, state);
                cx.frames.push(Frame {
                    state: parent,
                    opened_at: index,
                    save_count: cx.save_count,
                });
                cx.max_depth = cx.max_depth.max(cx.frames.len());
                cx.sync_top();
            }
            Command::Save => {
                pass.on_save(&mut cx, index);
                cx.save_count += 1;
            }
            Command::Restore => {
                if cx.save_count == 0 {
                    return Err(BalanceError::UnmatchedRestore(index));
                }
                let closes_layer = cx.frames.last().is_some_and(|f| f.save_count == cx.save_count);
                cx.save_count -= 1;
                if closes_layer {
                    let mut frame = cx.frames.pop().expect("layer frame present");
                    std::mem::swap(&mut frame.state, &mut cx.top);
                    cx.sync_top();
                    pass.on_restore_layer(&mut cx, index, frame);
                } else {
                    pass.on_restore(&mut cx, index);
                }
            }
            Command::Draw { shape, paint } => pass.on_draw(&mut cx, index, shape, paint),
            Command::Clip { shape } => pass.on_clip(&mut cx, index, shape),
            Command::NoOp => pass.on_other(&mut cx, index),
        }
    }
    if cx.save_count > 0 {
        return Err(BalanceError::UnclosedOpener(outermost_unclosed(buf)));
    }
    pass.on_end(&mut cx, buf.len());
    Ok(ScanOutcome {
        log: cx.log,
        visited: cx.visited,
        max_depth: cx.max_depth,
    })
}

/// One replaced record, with what it held before.
#[derive(Clone, Debug, PartialEq)]
pub struct Edit {
    pub index: usize,
    pub old: Command,
    pub new: Command,
}

/// Applies a scan's queued rewrites. Replacements use pre-insertion indices;
/// insertions are merged afterwards.
pub fn apply(buf: &mut RecordBuffer<'_>, log: &EditLog) -> Vec<Edit> {
    let mut edits = Vec::with_capacity(log.replacements.len());
    for (index, new) in &log.replacements {
        let old = buf.replace(*index, new.clone());
        edits.push(Edit {
            index: *index,
            old,
            new: new.clone(),
        });
    }
    for (index, cmd) in &log.insertions {
        buf.queue_insert(*index, [cmd.clone()]);
    }
    buf.merge_insertions()
        .expect("passes only insert within the scanned range");
    edits
}
