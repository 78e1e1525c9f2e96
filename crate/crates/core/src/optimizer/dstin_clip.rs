//! DstIn mask to clip.
//!
//! A scope whose content is `l1` followed by a mask layer
//!
//! ```text
//! SaveLayer(p1 = DstIn)
//!   Clip(m1) ... Clip(mk)
//!   Draw(g, Solid(c2), SrcOver, filter f2)
//! Restore
//! ```
//!
//! is rewritten to `Save Clip(g) Clip(m1) ... Clip(mk) l1 Restore`, with the
//! mask records tombstoned. This holds when the composite mask color
//! `f1(f2(c2))` is opaque, every draw in `l1` is `SrcOver`, `l1` has no
//! layers of its own and no clips at scope level (those would otherwise
//! also clip the mask).

use crate::color::{is_opaque, BlendMode, Fill, FilterKind};
use crate::command::Command;
use crate::layer::Paint;
use crate::shape::Shape;

use super::harness::{Frame, Pass, Scan};
use super::PassKind;

#[derive(Clone, Debug, PartialEq)]
struct MaskBody {
    filter: FilterKind,
    clips: Vec<usize>,
    draw: Option<usize>,
    ok: bool,
}

#[derive(Clone, Debug, PartialEq)]
struct MaskMatch {
    layer: usize,
    clips: Vec<usize>,
    draw: usize,
    restore: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct State {
    prefix_ok: bool,
    pending: Option<MaskMatch>,
    mask: Option<MaskBody>,
}

impl State {
    fn scope(mask: Option<MaskBody>) -> Self {
        State {
            prefix_ok: true,
            pending: None,
            mask,
        }
    }

    /// More content followed a matched mask, so it was not the last thing.
    fn spoil_pending(&mut self) {
        if self.pending.take().is_some() {
            self.prefix_ok = false;
        }
    }

    fn spoil_mask(&mut self) {
        if let Some(m) = &mut self.mask {
            m.ok = false;
        }
    }
}

#[derive(Debug, Default)]
pub struct DstInToClip;

impl DstInToClip {
    fn fire(cx: &mut Scan<'_, State>, scope_start: usize, scope_end: usize, m: MaskMatch) {
        let Command::Draw { shape: g, .. } = cx.record(m.draw) else {
            unreachable!("matched record {} is a draw", m.draw);
        };
        let mut opening = vec![Command::Save, Command::clip(g.clone())];
        for &c in &m.clips {
            let Command::Clip { shape } = cx.record(c) else {
                unreachable!("matched record {c} is a clip");
            };
            opening.push(Command::clip(shape.clone()));
        }
        cx.insert(scope_start, opening);
        cx.insert(scope_end, [Command::Restore]);
        cx.tombstone(m.layer);
        for &c in &m.clips {
            cx.tombstone(c);
        }
        cx.tombstone(m.draw);
        cx.tombstone(m.restore);
        cx.fired(m.layer);
    }
}

impl Pass for DstInToClip {
    type State = State;

    fn kind(&self) -> PassKind {
        PassKind::DstInToClip
    }

    fn root_state(&self) -> State {
        State::scope(None)
    }

    fn on_save_layer(&mut self, cx: &mut Scan<'_, State>, _index: usize, paint: &Paint) -> State {
        let parent = cx.scope();
        parent.spoil_pending();
        parent.spoil_mask();
        let mask = (paint.blend == BlendMode::DstIn).then(|| MaskBody {
            filter: paint.filter,
            clips: Vec::new(),
            draw: None,
            ok: true,
        });
        State::scope(mask)
    }

    fn on_restore_layer(&mut self, cx: &mut Scan<'_, State>, index: usize, frame: Frame<State>) {
        let start = frame.opened_at + 1;
        let State { pending, mask, .. } = frame.state;
        if let Some(m) = pending {
            Self::fire(cx, start, index, m);
        }
        let parent = cx.scope();
        let candidate = match mask {
            Some(MaskBody {
                clips,
                draw: Some(draw),
                ok: true,
                ..
            }) => Some(MaskMatch {
                layer: frame.opened_at,
                clips,
                draw,
                restore: index,
            }),
            _ => None,
        };
        match candidate {
            Some(m) if parent.prefix_ok && parent.pending.is_none() => parent.pending = Some(m),
            _ => {
                parent.spoil_pending();
                parent.prefix_ok = false;
            }
        }
    }

    fn on_save(&mut self, cx: &mut Scan<'_, State>, _index: usize) {
        let s = cx.scope();
        s.spoil_pending();
        s.spoil_mask();
    }

    fn on_restore(&mut self, cx: &mut Scan<'_, State>, _index: usize) {
        let s = cx.scope();
        s.spoil_pending();
        s.spoil_mask();
    }

    fn on_draw(&mut self, cx: &mut Scan<'_, State>, index: usize, _shape: &Shape, paint: &Paint) {
        let s = cx.scope();
        s.spoil_pending();
        if paint.blend != BlendMode::SrcOver {
            s.prefix_ok = false;
        }
        if let Some(m) = &mut s.mask {
            let usable = m.draw.is_none()
                && paint.blend == BlendMode::SrcOver
                && match paint.fill {
                    Fill::Solid(c) => is_opaque(m.filter.eval(paint.filter.eval(c))),
                    _ => false,
                };
            if usable {
                m.draw = Some(index);
            } else {
                m.ok = false;
            }
        }
    }

    fn on_clip(&mut self, cx: &mut Scan<'_, State>, index: usize, _shape: &Shape) {
        let at_scope_level = cx.open_saves() == 0;
        let s = cx.scope();
        s.spoil_pending();
        if at_scope_level {
            s.prefix_ok = false;
        }
        if let Some(m) = &mut s.mask {
            if m.draw.is_some() {
                m.ok = false;
            } else {
                m.clips.push(index);
            }
        }
    }

    fn on_other(&mut self, cx: &mut Scan<'_, State>, _index: usize) {
        let s = cx.scope();
        s.spoil_pending();
        s.prefix_ok = false;
        s.spoil_mask();
    }

    fn on_end(&mut self, cx: &mut Scan<'_, State>, len: usize) {
        if let Some(m) = cx.scope().pending.take() {
            Self::fire(cx, 0, len, m);
        }
    }
}
