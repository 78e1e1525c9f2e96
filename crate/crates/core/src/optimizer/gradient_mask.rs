//! Gradient mask elimination.
//!
//! ```text
//! Draw(s, p1 = SrcOver)                   Draw(s, p1)
//! SaveLayer(DstIn)                        NoOp
//!   Draw(s, Gradient(g), SrcOver)   =>    NoOp
//! Restore                                 NoOp
//! ```
//!
//! With every stop of `g` opaque the mask keeps exactly what lies inside `s`.
//! Anything already drawn outside `s` would be erased by the mask, so the
//! match also needs the enclosing layer to hold nothing but clips before the
//! leading draw.

use crate::color::{gradient_all_stops_opaque, BlendMode, FilterKind};
use crate::command::Command;
use crate::layer::Paint;
use crate::shape::Shape;

use super::harness::{Frame, Pass, Scan};
use super::PassKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Mask {
    lead: usize,
    draw: Option<usize>,
    ok: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct State {
    /// Nothing but scope-level clips so far.
    clean: bool,
    /// A qualifying leading draw that is the latest record in this scope.
    lead: Option<usize>,
    mask: Option<Mask>,
}

impl State {
    fn fresh(mask: Option<Mask>) -> Self {
        State {
            clean: true,
            lead: None,
            mask,
        }
    }

    fn disturb(&mut self) {
        self.clean = false;
        self.lead = None;
        if let Some(m) = &mut self.mask {
            m.ok = false;
        }
    }
}

#[derive(Debug, Default)]
pub struct GradientMask;

impl Pass for GradientMask {
    type State = State;

    fn kind(&self) -> PassKind {
        PassKind::GradientMask
    }

    fn root_state(&self) -> State {
        State::fresh(None)
    }

    fn on_save_layer(&mut self, cx: &mut Scan<'_, State>, index: usize, paint: &Paint) -> State {
        let parent = cx.scope();
        let lead = parent.lead.filter(|&l| l + 1 == index);
        let is_mask = paint.blend == BlendMode::DstIn && paint.filter == FilterKind::Id;
        // The parent keeps its lead so the closing Restore can confirm it.
        parent.clean = false;
        if let Some(m) = &mut parent.mask {
            m.ok = false;
        }
        match lead {
            Some(lead) if is_mask => State::fresh(Some(Mask {
                lead,
                draw: None,
                ok: true,
            })),
            _ => {
                parent.lead = None;
                State::fresh(None)
            }
        }
    }

    fn on_restore_layer(&mut self, cx: &mut Scan<'_, State>, index: usize, frame: Frame<State>) {
        let parent_lead = cx.scope().lead.take();
        let Some(Mask {
            lead,
            draw: Some(draw),
            ok: true,
        }) = frame.state.mask
        else {
            return;
        };
        if parent_lead != Some(lead) || index != draw + 1 {
            return;
        }
        let (Command::Draw { shape: s1, .. }, Command::Draw { shape: s2, paint: p2 }) =
            (cx.record(lead), cx.record(draw))
        else {
            unreachable!("matched records are draws");
        };
        if s1 != s2 || !gradient_all_stops_opaque(&p2.fill) {
            return;
        }
        cx.tombstone(frame.opened_at);
        cx.tombstone(draw);
        cx.tombstone(index);
        cx.fired(lead);
    }

    fn on_save(&mut self, cx: &mut Scan<'_, State>, _index: usize) {
        cx.scope().disturb();
    }

    fn on_restore(&mut self, cx: &mut Scan<'_, State>, _index: usize) {
        cx.scope().disturb();
    }

    fn on_draw(&mut self, cx: &mut Scan<'_, State>, index: usize, _shape: &Shape, paint: &Paint) {
        let start = cx.scope_start();
        let s = cx.scope();
        let lead = (s.clean && paint.blend == BlendMode::SrcOver).then_some(index);
        let mask_draw = match s.mask {
            Some(Mask {
                draw: None, ok: true, ..
            }) => {
                index == start
                    && paint.fill.is_gradient()
                    && paint.blend == BlendMode::SrcOver
                    && paint.filter == FilterKind::Id
            }
            _ => false,
        };
        s.disturb();
        s.lead = lead;
        if mask_draw {
            if let Some(m) = &mut s.mask {
                m.ok = true;
                m.draw = Some(index);
            }
        }
    }

    fn on_clip(&mut self, cx: &mut Scan<'_, State>, _index: usize, _shape: &Shape) {
        let at_scope_level = cx.open_saves() == 0;
        let s = cx.scope();
        s.lead = None;
        if !at_scope_level {
            s.clean = false;
        }
        if let Some(m) = &mut s.mask {
            m.ok = false;
        }
    }

    fn on_other(&mut self, cx: &mut Scan<'_, State>, _index: usize) {
        cx.scope().disturb();
    }
}
