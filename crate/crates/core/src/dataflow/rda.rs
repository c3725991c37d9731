use std::collections::BTreeSet;

use crate::expr::Expr;

use super::DefSite;

/// Statements reachable from the scope entry (index 0).
pub(super) fn reachable(succs: &[Vec<usize>]) -> Vec<bool> {
    let mut seen = vec![false; succs.len()];
    if succs.is_empty() {
        return seen;
    }
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(n) = stack.pop() {
        for &s in &succs[n] {
            if !seen[s] {
                seen[s] = true;
                stack.push(s);
            }
        }
    }
    seen
}

type Fact = (String, DefSite);

#[derive(Debug, Clone, Default)]
pub(super) struct Solution {
    ins: Vec<BTreeSet<Fact>>,
    vars: BTreeSet<String>,
    reachable: Vec<bool>,
    pub iterations: usize,
}

impl Solution {
    pub fn reaching<'a>(&'a self, at: usize, var: &'a str) -> Box<dyn Iterator<Item = DefSite> + 'a> {
        if !self.reachable[at] {
            return Box::new(std::iter::empty());
        }
        if !self.vars.contains(var) {
            return Box::new(std::iter::once(DefSite::Entry));
        }
        Box::new(self.ins[at].iter().filter(move |(v, _)| v == var).map(|(_, d)| *d))
    }
}

/// Round-robin gen/kill fixpoint over the reachable statements. Entry facts
/// `(x, Entry)` for every assigned variable seed statement 0.
pub(super) fn solve(preds: &[Vec<usize>], defs: &[Option<(String, Expr)>], reachable: &[bool]) -> Solution {
    let n = defs.len();
    let vars: BTreeSet<String> = defs.iter().flatten().map(|(v, _)| v.clone()).collect();
    let entry: BTreeSet<Fact> = vars.iter().map(|v| (v.clone(), DefSite::Entry)).collect();
    let mut ins: Vec<BTreeSet<Fact>> = vec![BTreeSet::new(); n];
    let mut outs: Vec<BTreeSet<Fact>> = vec![BTreeSet::new(); n];
    let mut iterations = 0;
    loop {
        let mut changed = false;
        for i in (0..n).filter(|&i| reachable[i]) {
            let mut inn: BTreeSet<Fact> = if i == 0 { entry.clone() } else { BTreeSet::new() };
            for &p in preds[i].iter().filter(|&&p| reachable[p]) {
                inn.extend(outs[p].iter().cloned());
            }
            let out = match &defs[i] {
                Some((x, _)) => {
                    let mut o: BTreeSet<Fact> = inn.iter().filter(|(v, _)| v != x).cloned().collect();
                    o.insert((x.clone(), DefSite::At(i)));
                    o
                }
                None => inn.clone(),
            };
            if inn != ins[i] || out != outs[i] {
                changed = true;
                ins[i] = inn;
                outs[i] = out;
            }
        }
        if !changed {
            break;
        }
        iterations += 1;
    }
    Solution {
        ins,
        vars,
        reachable: reachable.to_vec(),
        iterations,
    }
}
