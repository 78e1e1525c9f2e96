//! Deliberately broken traces, for checking that the validator rejects them.
//!
//! Each operator takes the first pass step of a genuine trace and produces a
//! one-step trace whose recorded edits still replay cleanly onto its own
//! `before` snapshot, so only the rewrite itself is wrong.

use std::fmt;
use std::sync::Arc;

use crate::color::{Color, Fill, FilterKind};
use crate::command::{Command, Program};
use crate::layer::Paint;
use crate::optimizer::{replay_entry, Edit, PassKind, RewriteTrace, TraceEntry, TraceStep};
use crate::shape::Shape;

use super::sidecheck::{apply_checked, apply_unchecked, locate, Rewritten, Site};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mutation {
    /// The `before` program is altered to violate a side condition and the
    /// rewrite is applied anyway.
    DropSideCondition,
    /// The claimed site index is off by one.
    WrongIndex,
    /// The site is right but one replacement record is wrong.
    WrongReplacement,
}

impl Mutation {
    pub const ALL: [Mutation; 3] = [
        Mutation::DropSideCondition,
        Mutation::WrongIndex,
        Mutation::WrongReplacement,
    ];
}

impl fmt::Display for Mutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mutation::DropSideCondition => "drop-side-condition",
            Mutation::WrongIndex => "wrong-index",
            Mutation::WrongReplacement => "wrong-replacement",
        })
    }
}

fn single_step(
    kind: PassKind,
    before: Program,
    fired_at: Vec<usize>,
    edits: Vec<Edit>,
    inserted: Vec<(usize, Command)>,
) -> RewriteTrace {
    let entry = TraceEntry {
        step: TraceStep::Pass(kind),
        iteration: 1,
        fired_at,
        edits,
        inserted,
        removed: Vec::new(),
        before: 0,
        after: 1,
    };
    let after = replay_entry(&before, &entry).expect("fault edits are built against this snapshot");
    RewriteTrace {
        snapshots: vec![before, after],
        entries: vec![entry],
    }
}

fn from_rewrite(kind: PassKind, before: Program, anchor: usize, r: Rewritten) -> RewriteTrace {
    single_step(kind, before, vec![anchor], r.edits, r.inserted)
}

fn scaled(c: Color, k: f64) -> Color {
    Color::premul(c.a * k, c.r * k, c.g * k, c.b * k)
}

fn set_draw_paint(p: &mut Program, i: usize, f: impl FnOnce(&mut Paint)) {
    if let Command::Draw { paint, .. } = &mut p.records[i] {
        f(paint);
    }
}

/// Builds a faulty one-step trace from the first pass step of `trace`.
pub fn inject(trace: &RewriteTrace, mutation: Mutation) -> Result<RewriteTrace, String> {
    let (pos, entry) = trace
        .entries
        .iter()
        .enumerate()
        .find(|(_, e)| e.step.pass().is_some())
        .ok_or("trace has no pass steps")?;
    let kind = entry.step.pass().expect("filtered to pass steps");
    let anchor = *entry.fired_at.first().ok_or("step fired nowhere")?;
    let before = trace.snapshots.get(pos).ok_or("trace has no snapshots")?.clone();
    let site = locate(kind, &before, anchor)?;
    match mutation {
        Mutation::WrongIndex => {
            let good = apply_checked(kind, &before, &[anchor])?;
            Ok(single_step(kind, before, vec![anchor + 1], good.edits, good.inserted))
        }
        Mutation::DropSideCondition => {
            let mut bad = before;
            match &site {
                Site::SrcOver { layer, restore } => {
                    let draw = (layer + 1..*restore).find(|&i| matches!(bad.records[i], Command::Draw { .. }));
                    match draw {
                        Some(d) => set_draw_paint(&mut bad, d, |p| p.blend = crate::color::BlendMode::Multiply),
                        None => {
                            bad.records[*layer] = Command::save_layer(Paint::solid(
                                Color::premul(0.5, 0.0, 0.0, 0.0),
                                crate::color::BlendMode::SrcOver,
                            ))
                        }
                    }
                }
                Site::DstIn { draw, .. } => set_draw_paint(&mut bad, *draw, |p| {
                    if let Fill::Solid(c) = p.fill {
                        p.fill = Fill::Solid(scaled(c, 0.5));
                    }
                }),
                Site::Luma { draws, .. } => {
                    let d = draws[0];
                    let Command::Draw { shape, .. } = bad.records[d].clone() else {
                        unreachable!("located draw");
                    };
                    let second = Command::draw(
                        shape,
                        Paint::solid(Color::premul(0.5, 0.5, 0.0, 0.0), crate::color::BlendMode::SrcOver),
                    );
                    bad.records.insert(d + 1, second);
                }
                Site::Gradient { draw, .. } => set_draw_paint(&mut bad, *draw, |p| {
                    if let Fill::LinearGradient { stops, .. } | Fill::RadialGradient { stops, .. } = &mut p.fill {
                        let first = &mut Arc::make_mut(stops)[0];
                        first.color = scaled(first.color, 0.9);
                    }
                }),
            }
            let forced = apply_unchecked(kind, &bad, anchor)?;
            Ok(from_rewrite(kind, bad, anchor, forced))
        }
        Mutation::WrongReplacement => {
            let mut good = apply_checked(kind, &before, &[anchor])?;
            match &site {
                Site::SrcOver { layer, restore } => {
                    let d = (layer + 1..*restore)
                        .find(|&i| matches!(before.records[i], Command::Draw { .. }))
                        .ok_or("layer body has no draw to corrupt")?;
                    let mut new = before.records[d].clone();
                    if let Command::Draw { paint, .. } = &mut new {
                        paint.fill = Fill::Solid(flip(&paint.fill));
                    }
                    good.edits.push(Edit {
                        index: d,
                        old: before.records[d].clone(),
                        new,
                    });
                }
                Site::DstIn { .. } => {
                    let clip = good
                        .inserted
                        .iter_mut()
                        .find(|(_, c)| matches!(c, Command::Clip { .. }))
                        .ok_or("no inserted clip")?;
                    clip.1 = Command::clip(Shape::Full);
                }
                Site::Luma { draws, .. } => {
                    let d = draws[0];
                    let e = good.edits.iter_mut().find(|e| e.index == d).ok_or("no draw edit")?;
                    if let (Command::Draw { paint: old, .. }, Command::Draw { paint: new, .. }) = (&e.old, &mut e.new) {
                        new.fill = old.fill.clone();
                        new.filter = FilterKind::Id;
                    }
                }
                Site::Gradient { lead, .. } => good.edits.push(Edit {
                    index: *lead,
                    old: before.records[*lead].clone(),
                    new: Command::NoOp,
                }),
            }
            Ok(single_step(kind, before, vec![anchor], good.edits, good.inserted))
        }
    }
}

/// A solid color far from every color `fill` can produce.
fn flip(fill: &Fill) -> Color {
    let c = match fill {
        Fill::Solid(c) => *c,
        _ => fill.stops().first().map_or(Color::BLACK, |s| s.color),
    };
    if c.r + c.g + c.b > 1.5 {
        Color::BLACK
    } else {
        Color::WHITE
    }
}
