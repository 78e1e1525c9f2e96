//! The imperative command language: a flat record buffer, its machine state
//! and the small-step semantics that lowers it to a [`LayerTerm`].

use std::fmt;

use thiserror::Error;

use crate::layer::{LayerTerm, Paint};
use crate::shape::{shape_intersect, Shape};

#[derive(Clone, Debug, PartialEq)]
pub enum Command {
    Draw {
        shape: Shape,
        paint: Paint,
    },
    Clip {
        shape: Shape,
    },
    Save,
    SaveLayer {
        paint: Paint,
    },
    Restore,
    /// Tombstone left behind by the optimizer.
    NoOp,
}

impl Command {
    pub fn draw(shape: Shape, paint: Paint) -> Self {
        Command::Draw { shape, paint }
    }

    pub fn clip(shape: Shape) -> Self {
        Command::Clip { shape }
    }

    pub fn save_layer(paint: Paint) -> Self {
        Command::SaveLayer { paint }
    }

    pub fn kind(&self) -> CommandKind {
        match self {
            Command::Draw { .. } => CommandKind::Draw,
            Command::Clip { .. } => CommandKind::Clip,
            Command::Save => CommandKind::Save,
            Command::SaveLayer { .. } => CommandKind::SaveLayer,
            Command::Restore => CommandKind::Restore,
            Command::NoOp => CommandKind::NoOp,
        }
    }

    pub fn is_noop(&self) -> bool {
        matches!(self, Command::NoOp)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CommandKind {
    Draw,
    Clip,
    Save,
    SaveLayer,
    Restore,
    NoOp,
}

impl fmt::Display for CommandKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CommandKind::Draw => "draw",
            CommandKind::Clip => "clip",
            CommandKind::Save => "save",
            CommandKind::SaveLayer => "saveLayer",
            CommandKind::Restore => "restore",
            CommandKind::NoOp => "noop",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Program {
    pub records: Vec<Command>,
}

impl Program {
    pub fn new(records: Vec<Command>) -> Self {
        Program { records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn count(&self, kind: CommandKind) -> usize {
        self.records.iter().filter(|c| c.kind() == kind).count()
    }

    /// Drops every `NoOp`.
    pub fn compacted(&self) -> Program {
        Program::new(self.records.iter().filter(|c| !c.is_noop()).cloned().collect())
    }

    pub fn check_balanced(&self) -> Result<(), BalanceError> {
        check_balanced(self)
    }

    pub fn run(&self) -> Result<LayerTerm, BalanceError> {
        run(self)
    }

    /// Every shape mentioned by a draw or clip.
    pub fn shapes(&self) -> impl Iterator<Item = &Shape> {
        self.records.iter().filter_map(|c| match c {
            Command::Draw { shape, .. } | Command::Clip { shape } => Some(shape),
            _ => None,
        })
    }
}

impl From<Vec<Command>> for Program {
    fn from(records: Vec<Command>) -> Self {
        Program::new(records)
    }
}

#[derive(Clone, Copy, Debug, Error, PartialEq, Eq)]
pub enum BalanceError {
    #[error("restore at record {0} has no matching save")]
    UnmatchedRestore(usize),
    #[error("save at record {0} is never restored")]
    UnclosedOpener(usize),
}

impl BalanceError {
    pub fn index(&self) -> usize {
        match self {
            BalanceError::UnmatchedRestore(i) | BalanceError::UnclosedOpener(i) => *i,
        }
    }
}

pub fn check_balanced(p: &Program) -> Result<(), BalanceError> {
    let mut open = Vec::new();
    for (i, cmd) in p.records.iter().enumerate() {
        match cmd {
            Command::Save | Command::SaveLayer { .. } => open.push(i),
            Command::Restore => {
                open.pop().ok_or(BalanceError::UnmatchedRestore(i))?;
            }
            _ => {}
        }
    }
    match open.first() {
        Some(&i) => Err(BalanceError::UnclosedOpener(i)),
        None => Ok(()),
    }
}

/// For each record index, the index of its matching bracket partner.
/// Assumes a balanced program.
pub fn bracket_partners(p: &Program) -> Vec<Option<usize>> {
    let mut partners = vec![None; p.len()];
    let mut open = Vec::new();
    for (i, cmd) in p.records.iter().enumerate() {
        match cmd {
            Command::Save | Command::SaveLayer { .. } => open.push(i),
            Command::Restore => {
                if let Some(j) = open.pop() {
                    partners[i] = Some(j);
                    partners[j] = Some(i);
                }
            }
            _ => {}
        }
    }
    partners
}

#[derive(Clone, Debug, PartialEq)]
enum Opener {
    Save,
    Layer(Paint),
}

/// Machine state: a layer stack and a clip stack, tops at the end.
#[derive(Clone, Debug, PartialEq)]
pub struct Sigma {
    pub layers: Vec<LayerTerm>,
    pub clips: Vec<Shape>,
    openers: Vec<Opener>,
}

impl Default for Sigma {
    fn default() -> Self {
        initial_state()
    }
}

pub fn initial_state() -> Sigma {
    Sigma {
        layers: vec![LayerTerm::Empty],
        clips: vec![Shape::Full],
        openers: Vec::new(),
    }
}

impl Sigma {
    pub fn top_layer(&self) -> &LayerTerm {
        self.layers.last().expect("layer stack is never empty")
    }

    pub fn top_clip(&self) -> &Shape {
        self.clips.last().expect("clip stack is never empty")
    }

    pub fn depth(&self) -> (usize, usize) {
        (self.layers.len(), self.clips.len())
    }

    /// Applies one record. A `Restore` with no open bracket leaves the state
    /// untouched; [`run`] rejects such programs before stepping.
    pub fn step(&mut self, cmd: &Command) {
        #[cfg(debug_assertions)]
        let before = self.depth();
        match cmd {
            Command::Draw { shape, paint } => {
                let clipped = shape_intersect(shape, self.top_clip());
                let top = self.layers.last_mut().expect("layer stack is never empty");
                let base = std::mem::replace(top, LayerTerm::Empty);
                *top = LayerTerm::draw(base, clipped, paint.clone());
            }
            Command::Clip { shape } => {
                let top = self.clips.last_mut().expect("clip stack is never empty");
                *top = shape_intersect(top, shape);
            }
            Command::Save => {
                self.clips.push(self.top_clip().clone());
                self.openers.push(Opener::Save);
            }
            Command::SaveLayer { paint } => {
                self.clips.push(self.top_clip().clone());
                self.layers.push(LayerTerm::Empty);
                self.openers.push(Opener::Layer(paint.clone()));
            }
            Command::Restore => match self.openers.pop() {
                Some(Opener::Save) => {
                    self.clips.pop();
                }
                Some(Opener::Layer(paint)) => {
                    self.clips.pop();
                    let layer = self.layers.pop().expect("layer opened by SaveLayer");
                    let top = self.layers.last_mut().expect("layer stack is never empty");
                    let bottom = std::mem::replace(top, LayerTerm::Empty);
                    *top = LayerTerm::blend(bottom, layer, paint);
                }
                None => {}
            },
            Command::NoOp => {}
        }
        #[cfg(debug_assertions)]
        {
            let after = self.depth();
            let delta = |a: usize, b: usize| a as isize - b as isize;
            let (dl, dc) = (delta(after.0, before.0), delta(after.1, before.1));
            let expected = match cmd {
                Command::Save => (0, 1),
                Command::SaveLayer { .. } => (1, 1),
                Command::Restore if dc != 0 => (dl, -1),
                _ => (0, 0),
            };
            debug_assert_eq!((dl, dc), expected, "stack discipline broken by {cmd:?}");
            debug_assert!((-1..=1).contains(&dl));
            debug_assert!(!self.layers.is_empty() && !self.clips.is_empty());
        }
    }
}

pub fn step(cmd: &Command, mut state: Sigma) -> Sigma {
    state.step(cmd);
    state
}

/// Executes a balanced program and returns its single remaining layer.
pub fn run(p: &Program) -> Result<LayerTerm, BalanceError> {
    check_balanced(p)?;
    let mut state = initial_state();
    for cmd in &p.records {
        state.step(cmd);
    }
    debug_assert_eq!(state.depth(), (1, 1));
    Ok(state.layers.pop().expect("final layer"))
}

/// Bracketed view of a program, with `Save`/`SaveLayer` wrapping their body.
#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    Draw(Shape, Paint),
    Clip(Shape),
    Save(Vec<Node>),
    SaveLayer(Paint, Vec<Node>),
}

/// Builds the bracketed view, dropping `NoOp`s.
pub fn structure(p: &Program) -> Result<Vec<Node>, BalanceError> {
    check_balanced(p)?;
    let mut stack: Vec<(Option<Option<Paint>>, Vec<Node>)> = vec![(None, Vec::new())];
    for cmd in &p.records {
        match cmd {
            Command::Draw { shape, paint } => stack
                .last_mut()
                .unwrap()
                .1
                .push(Node::Draw(shape.clone(), paint.clone())),
            Command::Clip { shape } => stack.last_mut().unwrap().1.push(Node::Clip(shape.clone())),
            Command::Save => stack.push((Some(None), Vec::new())),
            Command::SaveLayer { paint } => stack.push((Some(Some(paint.clone())), Vec::new())),
            Command::Restore => {
                let (opener, body) = stack.pop().unwrap();
                let node = match opener {
                    Some(Some(paint)) => Node::SaveLayer(paint, body),
                    _ => Node::Save(body),
                };
                stack.last_mut().unwrap().1.push(node);
            }
            Command::NoOp => {}
        }
    }
    Ok(stack.pop().unwrap().1)
}

pub fn flatten(nodes: &[Node]) -> Program {
    fn go(nodes: &[Node], out: &mut Vec<Command>) {
        for n in nodes {
            match n {
                Node::Draw(s, p) => out.push(Command::draw(s.clone(), p.clone())),
                Node::Clip(s) => out.push(Command::clip(s.clone())),
                Node::Save(body) => {
                    out.push(Command::Save);
                    go(body, out);
                    out.push(Command::Restore);
                }
                Node::SaveLayer(p, body) => {
                    out.push(Command::save_layer(p.clone()));
                    go(body, out);
                    out.push(Command::Restore);
                }
            }
        }
    }
    let mut out = Vec::new();
    go(nodes, &mut out);
    Program::new(out)
}
