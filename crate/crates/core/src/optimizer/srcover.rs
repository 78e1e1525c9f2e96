//! `SaveLayer(p) ... Restore` becomes `Save ... Restore` when `p` is an
//! opaque `SrcOver` with identity filter and every draw in the body is
//! `SrcOver`. Over a fully opaque paint, compositing the layer back is the
//! same as having drawn straight into the parent.

use crate::color::{BlendMode, FilterKind};
use crate::command::Command;
use crate::layer::Paint;
use crate::shape::Shape;

use super::harness::{Frame, Pass, Scan};
use super::PassKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum State {
    Matching,
    Ignore,
}

#[derive(Debug, Default)]
pub struct SrcOverSaveLayer;

pub fn paint_qualifies(paint: &Paint) -> bool {
    paint.blend == BlendMode::SrcOver && paint.filter == FilterKind::Id && paint.fill.is_opaque()
}

impl Pass for SrcOverSaveLayer {
    type State = State;

    fn kind(&self) -> PassKind {
        PassKind::SrcOverSaveLayer
    }

    fn root_state(&self) -> State {
        State::Ignore
    }

    fn on_save_layer(&mut self, cx: &mut Scan<'_, State>, _index: usize, paint: &Paint) -> State {
        *cx.scope() = State::Ignore;
        if paint_qualifies(paint) {
            State::Matching
        } else {
            State::Ignore
        }
    }

    fn on_restore_layer(&mut self, cx: &mut Scan<'_, State>, _index: usize, frame: Frame<State>) {
        if frame.state == State::Matching {
            cx.replace(frame.opened_at, Command::Save);
            cx.fired(frame.opened_at);
        }
    }

    fn on_save(&mut self, _cx: &mut Scan<'_, State>, _index: usize) {}

    fn on_restore(&mut self, _cx: &mut Scan<'_, State>, _index: usize) {}

    fn on_draw(&mut self, cx: &mut Scan<'_, State>, _index: usize, _shape: &Shape, paint: &Paint) {
        if paint.blend != BlendMode::SrcOver {
            *cx.scope() = State::Ignore;
        }
    }

    fn on_clip(&mut self, _cx: &mut Scan<'_, State>, _index: usize, _shape: &Shape) {}

    fn on_other(&mut self, cx: &mut Scan<'_, State>, _index: usize) {
        *cx.scope() = State::Ignore;
    }
}
