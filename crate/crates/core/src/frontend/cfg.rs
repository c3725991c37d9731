//! Structured statement trees and their lowering to labelled blocks with
//! forward successors.

use crate::expr::Expr;
use crate::model::{AssignmentRecord, BlockKind, CallSite, Label, LabeledBlock};

use super::parser::RawCall;

/// Loop or branch header: the condition's calls and, for `for` loops, the
/// per-iteration binding of the loop variable.
#[derive(Debug, Clone, Default)]
pub struct Header {
    pub assign: Option<(String, Expr)>,
    pub calls: Vec<RawCall>,
}

#[derive(Debug, Clone)]
pub enum Stmt {
    Simple {
        kind: BlockKind,
        assign: Option<(String, Expr)>,
        calls: Vec<RawCall>,
    },
    Return(Vec<RawCall>),
    If {
        head: Header,
        then_branch: Vec<Stmt>,
        else_branch: Vec<Stmt>,
    },
    Loop {
        head: Header,
        body: Vec<Stmt>,
    },
}

impl Stmt {
    /// Assignment if `assign` is set, a call statement if there are calls,
    /// otherwise Other.
    pub fn simple(assign: Option<(String, Expr)>, calls: Vec<RawCall>) -> Stmt {
        let kind = match (&assign, calls.is_empty()) {
            (Some(_), _) => BlockKind::Assignment,
            (None, false) => BlockKind::Call,
            (None, true) => BlockKind::Other,
        };
        Stmt::Simple { kind, assign, calls }
    }

    /// A statement outside the subset. Calls that could still be recovered
    /// are kept.
    pub fn other(calls: Vec<RawCall>) -> Stmt {
        Stmt::Simple {
            kind: BlockKind::Other,
            assign: None,
            calls,
        }
    }
}

struct Builder<'a> {
    scope: &'a str,
    blocks: Vec<LabeledBlock>,
}

impl Builder<'_> {
    fn push(&mut self, kind: BlockKind, assign: Option<(String, Expr)>, calls: Vec<RawCall>) -> usize {
        let index = self.blocks.len();
        let label = Label::new(self.scope, index);
        let kind = if assign.is_some() { BlockKind::Assignment } else { kind };
        self.blocks.push(LabeledBlock {
            assignment: assign.map(|(variable, rhs)| AssignmentRecord {
                label: label.clone(),
                variable,
                rhs,
            }),
            calls: calls
                .into_iter()
                .map(|c| CallSite {
                    target: c.target,
                    args: c.args,
                    label: label.clone(),
                })
                .collect(),
            label,
            kind,
            successors: Vec::new(),
        });
        index
    }

    fn link(&mut self, from: &[usize], to: usize) {
        for &f in from {
            let s = &mut self.blocks[f].successors;
            if !s.contains(&to) {
                s.push(to);
            }
        }
    }

    /// Returns the entry block of the sequence (if non-empty) and the blocks
    /// whose control falls through past its end.
    fn seq(&mut self, stmts: Vec<Stmt>) -> (Option<usize>, Vec<usize>) {
        let mut entry = None;
        let mut exits: Vec<usize> = Vec::new();
        for s in stmts {
            let (e, x) = self.stmt(s);
            self.link(&exits, e);
            entry.get_or_insert(e);
            exits = x;
        }
        (entry, exits)
    }

    fn stmt(&mut self, s: Stmt) -> (usize, Vec<usize>) {
        match s {
            Stmt::Simple { kind, assign, calls } => {
                let i = self.push(kind, assign, calls);
                (i, vec![i])
            }
            Stmt::Return(calls) => (self.push(BlockKind::Return, None, calls), Vec::new()),
            Stmt::If {
                head,
                then_branch,
                else_branch,
            } => {
                let h = self.push(BlockKind::Condition, head.assign, head.calls);
                let mut exits = Vec::new();
                for branch in [then_branch, else_branch] {
                    match self.seq(branch) {
                        (Some(e), x) => {
                            self.link(&[h], e);
                            exits.extend(x);
                        }
                        (None, _) => exits.push(h),
                    }
                }
                exits.sort_unstable();
                exits.dedup();
                (h, exits)
            }
            Stmt::Loop { head, body } => {
                let h = self.push(BlockKind::Condition, head.assign, head.calls);
                match self.seq(body) {
                    (Some(e), x) => {
                        self.link(&[h], e);
                        self.link(&x, h);
                    }
                    (None, _) => self.link(&[h], h),
                }
                (h, vec![h])
            }
        }
    }
}

/// Number the statements of one scope in pre-order and compute forward
/// successors.
pub fn lower_scope(scope: &str, stmts: Vec<Stmt>) -> Vec<LabeledBlock> {
    let mut b = Builder {
        scope,
        blocks: Vec::new(),
    };
    b.seq(stmts);
    for blk in &mut b.blocks {
        blk.successors.sort_unstable();
    }
    b.blocks
}
