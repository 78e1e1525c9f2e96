//! Record storage for in-place editing.
//!
//! The buffer is a table of slots. A slot points either into the borrowed
//! input records or into an append-only arena of records the optimizer
//! created. Replacing a record appends the new one and repoints its slot,
//! tombstoning repoints it at the shared `NoOp`, and insertions wait in a side
//! list until [`RecordBuffer::merge_insertions`] splices them in with one
//! linear scan.

use thiserror::Error;

use crate::command::{Command, Program};

/// Set on slots that index the owned arena rather than the input.
const OWNED: u32 = 1 << 31;
const NOOP_SLOT: u32 = OWNED;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BufferError {
    #[error("insertion index {index} is past the end of a {len}-record buffer")]
    IndexOutOfRange { index: usize, len: usize },
}

#[derive(Clone, Debug)]
pub struct RecordBuffer<'a> {
    source: &'a [Command],
    arena: Vec<Command>,
    slots: Vec<u32>,
    insertions: Vec<(usize, Command)>,
}

impl<'a> RecordBuffer<'a> {
    pub fn new(program: &'a Program) -> Self {
        assert!(program.len() < OWNED as usize, "program too large for a record buffer");
        let slots = program
            .records
            .iter()
            .enumerate()
            .map(|(i, cmd)| if cmd.is_noop() { NOOP_SLOT } else { i as u32 })
            .collect();
        RecordBuffer {
            source: &program.records,
            arena: vec![Command::NoOp],
            slots,
            insertions: Vec::new(),
        }
    }

    fn push_owned(&mut self, cmd: Command) -> u32 {
        let slot = OWNED | self.arena.len() as u32;
        self.arena.push(cmd);
        slot
    }

    fn resolve(&self, slot: u32) -> &Command {
        if slot & OWNED != 0 {
            &self.arena[(slot & !OWNED) as usize]
        } else {
            &self.source[slot as usize]
        }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn get(&self, index: usize) -> &Command {
        self.resolve(self.slots[index])
    }

    pub fn iter(&self) -> impl Iterator<Item = &Command> {
        self.slots.iter().map(|&s| self.resolve(s))
    }

    /// Replaces the record at `index`, returning the previous one.
    pub fn replace(&mut self, index: usize, cmd: Command) -> Command {
        let old = self.get(index).clone();
        if cmd.is_noop() {
            self.slots[index] = NOOP_SLOT;
        } else {
            self.slots[index] = self.push_owned(cmd);
        }
        old
    }

    pub fn tombstone(&mut self, index: usize) -> Command {
        self.replace(index, Command::NoOp)
    }

    /// Queues `cmds` to be placed before the record currently at `index`
    /// (or at the end when `index == len`).
    pub fn queue_insert(&mut self, index: usize, cmds: impl IntoIterator<Item = Command>) {
        self.insertions.extend(cmds.into_iter().map(|c| (index, c)));
    }

    pub fn pending_insertions(&self) -> &[(usize, Command)] {
        &self.insertions
    }

    /// Splices every pending insertion into the buffer in one pass. Equal
    /// indices keep their queue order.
    pub fn merge_insertions(&mut self) -> Result<(), BufferError> {
        if self.insertions.is_empty() {
            return Ok(());
        }
        let len = self.slots.len();
        if let Some(&(index, _)) = self.insertions.iter().find(|(i, _)| *i > len) {
            return Err(BufferError::IndexOutOfRange { index, len });
        }
        let mut pending = std::mem::take(&mut self.insertions);
        pending.sort_by_key(|(i, _)| *i);
        let mut merged = Vec::with_capacity(len + pending.len());
        let mut copied = 0;
        for (at, cmd) in pending {
            merged.extend_from_slice(&self.slots[copied..at]);
            copied = at;
            let slot = self.push_owned(cmd);
            merged.push(slot);
        }
        merged.extend_from_slice(&self.slots[copied..]);
        self.slots = merged;
        Ok(())
    }

    /// Drops tombstones, returning the indices that were removed.
    pub fn compact(&mut self) -> Vec<usize> {
        let mut removed = Vec::new();
        let mut kept = 0;
        for i in 0..self.slots.len() {
            let slot = self.slots[i];
            if slot == NOOP_SLOT {
                removed.push(i);
            } else {
                self.slots[kept] = slot;
                kept += 1;
            }
        }
        self.slots.truncate(kept);
        removed
    }

    pub fn to_program(&self) -> Program {
        Program::new(self.iter().cloned().collect())
    }
}

impl<'a> From<&'a Program> for RecordBuffer<'a> {
    fn from(p: &'a Program) -> Self {
        RecordBuffer::new(p)
    }
}
