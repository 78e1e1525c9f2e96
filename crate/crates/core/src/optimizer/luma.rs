//! Luma mask subsumption.
//!
//! ```text
//! SaveLayer(DstIn)                      SaveLayer(DstIn)
//!   SaveLayer(Luma, SrcOver)              Draw(s, Solid(luma(c)))
//!     Draw(s, Solid(c), SrcOver)    =>    NoOp
//!   Restore                               NoOp
//! Restore                               Restore
//! ```
//!
//! The five records must be adjacent. Drawing `c` into an empty layer and
//! filtering the result is the same as drawing the filtered color, since
//! the filter maps transparent to transparent.

use crate::color::{filter_eval, BlendMode, Fill, FilterKind};
use crate::command::Command;
use crate::layer::Paint;
use crate::shape::Shape;

use super::harness::{Frame, Pass, Scan};
use super::PassKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum State {
    Other,
    /// DstIn layer with nothing in it yet.
    MaskFresh,
    /// DstIn layer whose only content so far is a matching luma layer.
    MaskAwaitRestore {
        luma_layer: usize,
        draw: usize,
        luma_restore: usize,
    },
    LumaLayer {
        draw: Option<usize>,
        ok: bool,
    },
}

#[derive(Debug, Default)]
pub struct SubsumeLuma;

impl SubsumeLuma {
    fn disturb(state: &mut State) {
        match state {
            State::LumaLayer { ok, .. } => *ok = false,
            State::MaskFresh | State::MaskAwaitRestore { .. } => *state = State::Other,
            State::Other => {}
        }
    }
}

impl Pass for SubsumeLuma {
    type State = State;

    fn kind(&self) -> PassKind {
        PassKind::SubsumeLuma
    }

    fn root_state(&self) -> State {
        State::Other
    }

    fn on_save_layer(&mut self, cx: &mut Scan<'_, State>, index: usize, paint: &Paint) -> State {
        let start = cx.scope_start();
        let parent = cx.scope();
        let is_luma = paint.filter == FilterKind::Luma && paint.blend == BlendMode::SrcOver;
        if is_luma && *parent == State::MaskFresh && index == start {
            return State::LumaLayer { draw: None, ok: true };
        }
        Self::disturb(parent);
        if paint.blend == BlendMode::DstIn {
            State::MaskFresh
        } else {
            State::Other
        }
    }

    fn on_restore_layer(&mut self, cx: &mut Scan<'_, State>, index: usize, frame: Frame<State>) {
        match frame.state {
            State::LumaLayer {
                draw: Some(draw),
                ok: true,
            } if index == draw + 1 => {
                let parent = cx.scope();
                *parent = if *parent == State::MaskFresh {
                    State::MaskAwaitRestore {
                        luma_layer: frame.opened_at,
                        draw,
                        luma_restore: index,
                    }
                } else {
                    State::Other
                };
            }
            State::LumaLayer { .. } => Self::disturb(cx.scope()),
            State::MaskAwaitRestore {
                luma_layer,
                draw,
                luma_restore,
            } if index == luma_restore + 1 => {
                let Command::Draw { shape, paint } = cx.record(draw) else {
                    unreachable!("matched record {draw} is a draw");
                };
                let Fill::Solid(c) = paint.fill else {
                    unreachable!("matched draw has a solid fill");
                };
                let fill = Fill::Solid(filter_eval(FilterKind::Luma, c));
                let rewritten = Command::draw(shape.clone(), Paint::new(fill, FilterKind::Id, BlendMode::SrcOver));
                cx.tombstone(luma_layer);
                cx.replace(draw, rewritten);
                cx.tombstone(luma_restore);
                cx.fired(frame.opened_at);
            }
            _ => {}
        }
    }

    fn on_save(&mut self, cx: &mut Scan<'_, State>, _index: usize) {
        Self::disturb(cx.scope());
    }

    fn on_restore(&mut self, cx: &mut Scan<'_, State>, _index: usize) {
        Self::disturb(cx.scope());
    }

    fn on_draw(&mut self, cx: &mut Scan<'_, State>, index: usize, _shape: &Shape, paint: &Paint) {
        let start = cx.scope_start();
        let state = cx.scope();
        match state {
            State::LumaLayer {
                draw: draw @ None,
                ok: true,
            } if index == start => {
                let plain = matches!(paint.fill, Fill::Solid(_))
                    && paint.blend == BlendMode::SrcOver
                    && paint.filter == FilterKind::Id;
                if plain {
                    *draw = Some(index);
                } else {
                    Self::disturb(state);
                }
            }
            _ => Self::disturb(state),
        }
    }

    fn on_clip(&mut self, cx: &mut Scan<'_, State>, _index: usize, _shape: &Shape) {
        Self::disturb(cx.scope());
    }

    fn on_other(&mut self, cx: &mut Scan<'_, State>, _index: usize) {
        Self::disturb(cx.scope());
    }
}
