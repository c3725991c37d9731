//! Static evaluation of string expressions.
//!
//! Evaluation walks the reverse control flow from the evaluation point and
//! substitutes assignments into the pending concatenation, one path at a
//! time. This keeps correlated branches apart: a value is produced only
//! when some single path yields it.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::expr::Expr;

use super::ScopeFlow;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StaticValue {
    Known(BTreeSet<String>),
    Unknown,
}

impl StaticValue {
    pub fn known<I: IntoIterator<Item = String>>(values: I) -> Self {
        let set: BTreeSet<String> = values.into_iter().collect();
        if set.is_empty() {
            StaticValue::Unknown
        } else {
            StaticValue::Known(set)
        }
    }

    pub fn values(&self) -> Option<&BTreeSet<String>> {
        match self {
            StaticValue::Known(v) => Some(v),
            StaticValue::Unknown => None,
        }
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, StaticValue::Unknown)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalLimits {
    /// More distinct values than this yields Unknown.
    pub max_values: usize,
    /// Budget of path steps per evaluation.
    pub max_steps: usize,
    /// Longest path explored.
    pub max_depth: usize,
}

impl Default for EvalLimits {
    fn default() -> Self {
        EvalLimits {
            max_values: 16,
            max_steps: 200_000,
            max_depth: 2_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Part {
    Lit(String),
    Var(String),
}

fn parts_of(e: &Expr) -> Option<Vec<Part>> {
    let mut out = Vec::new();
    for op in e.concat_operands() {
        match op {
            Expr::StringLiteral(s) => out.push(Part::Lit(s.clone())),
            Expr::VarRef(v) => out.push(Part::Var(v.clone())),
            _ => return None,
        }
    }
    Some(merge_literals(out))
}

fn merge_literals(parts: Vec<Part>) -> Vec<Part> {
    let mut out: Vec<Part> = Vec::with_capacity(parts.len());
    for p in parts {
        match (out.last_mut(), p) {
            (Some(Part::Lit(acc)), Part::Lit(s)) => acc.push_str(&s),
            (_, p) => out.push(p),
        }
    }
    out
}

fn resolved(parts: &[Part]) -> Option<String> {
    let mut s = String::new();
    for p in parts {
        match p {
            Part::Lit(l) => s.push_str(l),
            Part::Var(_) => return None,
        }
    }
    Some(s)
}

struct Abort;

struct Walker<'a> {
    flow: &'a ScopeFlow,
    limits: &'a EvalLimits,
    steps: usize,
    acyclic: bool,
    memo: HashMap<(usize, Vec<Part>), BTreeSet<String>>,
    on_path: HashSet<(usize, Vec<Part>)>,
    used: Vec<usize>,
}

impl Walker<'_> {
    /// Values of `parts` read at the start of statement `node`.
    fn go(&mut self, node: usize, parts: Vec<Part>, depth: usize) -> Result<BTreeSet<String>, Abort> {
        if let Some(v) = resolved(&parts) {
            return Ok(BTreeSet::from([v]));
        }
        if node == 0 {
            // a variable may be unassigned at scope entry
            return Err(Abort);
        }
        self.steps += 1;
        if self.steps > self.limits.max_steps || depth > self.limits.max_depth {
            return Err(Abort);
        }
        let key = (node, parts);
        if self.acyclic {
            if let Some(v) = self.memo.get(&key) {
                return Ok(v.clone());
            }
        } else if !self.on_path.insert(key.clone()) {
            return Ok(BTreeSet::new());
        }
        let parts = &key.1;
        let mut out = BTreeSet::new();
        let preds: Vec<usize> = self.flow.predecessors(node).to_vec();
        for p in preds {
            if !self.flow.is_reachable(p) {
                continue;
            }
            let sub = match self.flow.assignment(p) {
                Some((y, rhs)) if parts.iter().any(|q| matches!(q, Part::Var(v) if v == y)) => {
                    if self.used.contains(&p) {
                        return Err(Abort);
                    }
                    let rhs_parts = parts_of(rhs).ok_or(Abort)?;
                    let mut next = Vec::new();
                    for q in parts {
                        match q {
                            Part::Var(v) if v == y => next.extend(rhs_parts.iter().cloned()),
                            other => next.push(other.clone()),
                        }
                    }
                    self.used.push(p);
                    let r = self.go(p, merge_literals(next), depth + 1);
                    self.used.pop();
                    r?
                }
                _ => self.go(p, parts.clone(), depth + 1)?,
            };
            out.extend(sub);
            if out.len() > self.limits.max_values {
                return Err(Abort);
            }
        }
        if self.acyclic {
            self.memo.insert(key, out.clone());
        } else {
            self.on_path.remove(&key);
        }
        Ok(out)
    }
}

/// True when no cycle is reachable from the scope entry.
fn acyclic(flow: &ScopeFlow) -> bool {
    let n = flow.len();
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state = vec![0u8; n];
    let mut stack: Vec<(usize, usize)> = Vec::new();
    if n == 0 {
        return true;
    }
    stack.push((0, 0));
    state[0] = 1;
    while let Some(&mut (node, ref mut i)) = stack.last_mut() {
        let succs = flow.successors(node);
        if *i < succs.len() {
            let s = succs[*i];
            *i += 1;
            match state[s] {
                0 => {
                    state[s] = 1;
                    stack.push((s, 0));
                }
                1 => return false,
                _ => {}
            }
        } else {
            state[node] = 2;
            stack.pop();
        }
    }
    true
}

pub(super) fn eval(flow: &ScopeFlow, expr: &Expr, at: usize, limits: &EvalLimits) -> StaticValue {
    let Some(parts) = parts_of(expr) else {
        return StaticValue::Unknown;
    };
    if let Some(v) = resolved(&parts) {
        return StaticValue::known([v]);
    }
    if !flow.is_reachable(at) {
        return StaticValue::Unknown;
    }
    let mut w = Walker {
        flow,
        limits,
        steps: 0,
        acyclic: acyclic(flow),
        memo: HashMap::new(),
        on_path: HashSet::new(),
        used: Vec::new(),
    };
    match w.go(at, parts, 0) {
        Ok(values) => StaticValue::known(values),
        Err(Abort) => StaticValue::Unknown,
    }
}
