//! Random subset programs and brute-force oracles for the dataflow tests.
//!
//! Programs are generated as a small statement tree, printed as Python and
//! analysed through the public API. The oracles interpret the tree directly
//! and never look at the crate's control-flow tables.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use polycall::dataflow::DefSite;
use polycall::expr::Expr;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub const VARS: [&str; 3] = ["a", "b", "c"];
const LITS: [&str; 4] = ["p", "q", "rs", "t"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Atom {
    Lit(String),
    Var(String),
}

#[derive(Debug, Clone)]
pub enum GStmt {
    Assign { at: usize, var: String, rhs: Vec<Atom> },
    Use { at: usize, arg: Vec<Atom> },
    Return { at: usize },
    If { at: usize, then_b: Vec<GStmt>, else_b: Vec<GStmt> },
    While { at: usize, body: Vec<GStmt> },
}

#[derive(Debug, Clone)]
pub struct Program {
    pub body: Vec<GStmt>,
    pub len: usize,
    pub has_loop: bool,
    pub source: String,
}

pub fn atoms_to_expr(atoms: &[Atom]) -> Expr {
    let one = |a: &Atom| match a {
        Atom::Lit(s) => Expr::literal(s.clone()),
        Atom::Var(v) => Expr::var(v.clone()),
    };
    let mut it = atoms.iter();
    let first = one(it.next().expect("non-empty"));
    it.fold(first, |acc, a| Expr::concat(acc, one(a)))
}

struct Gen {
    rng: StdRng,
    budget: usize,
    next: usize,
    allow_loops: bool,
    has_loop: bool,
}

impl Gen {
    fn atom(&mut self) -> Atom {
        if self.rng.gen_bool(0.5) {
            Atom::Lit(LITS[self.rng.gen_range(0..LITS.len())].to_string())
        } else {
            Atom::Var(VARS[self.rng.gen_range(0..VARS.len())].to_string())
        }
    }

    fn atoms(&mut self) -> Vec<Atom> {
        let n = if self.rng.gen_bool(0.3) { 2 } else { 1 };
        (0..n).map(|_| self.atom()).collect()
    }

    fn label(&mut self) -> usize {
        self.budget -= 1;
        self.next += 1;
        self.next - 1
    }

    /// At most `max` statements at nesting `depth`; always at least one.
    fn block(&mut self, depth: usize, max: usize) -> Vec<GStmt> {
        let mut out = Vec::new();
        let want = self.rng.gen_range(1..=max.max(1));
        while out.len() < want && self.budget > 0 {
            out.push(self.stmt(depth));
        }
        out
    }

    fn stmt(&mut self, depth: usize) -> GStmt {
        let roll = self.rng.gen_range(0..100);
        if depth < 2 && self.budget >= 2 && roll < 30 {
            let looped = self.allow_loops && self.rng.gen_bool(0.4);
            let at = self.label();
            if looped {
                self.has_loop = true;
                let body = self.block(depth + 1, 3);
                return GStmt::While { at, body };
            }
            let then_b = self.block(depth + 1, 3);
            let else_b = if self.budget > 0 && self.rng.gen_bool(0.6) {
                self.block(depth + 1, 3)
            } else {
                Vec::new()
            };
            return GStmt::If { at, then_b, else_b };
        }
        let at = self.label();
        match roll {
            0..=4 if depth > 0 => GStmt::Return { at },
            _ if roll < 70 => {
                let var = VARS[self.rng.gen_range(0..VARS.len())].to_string();
                GStmt::Assign {
                    at,
                    var,
                    rhs: self.atoms(),
                }
            }
            _ => GStmt::Use { at, arg: self.atoms() },
        }
    }
}

fn render_atoms(atoms: &[Atom]) -> String {
    atoms
        .iter()
        .map(|a| match a {
            Atom::Lit(s) => format!("\"{s}\""),
            Atom::Var(v) => v.clone(),
        })
        .collect::<Vec<_>>()
        .join(" + ")
}

fn render(stmts: &[GStmt], indent: usize, out: &mut String) {
    let pad = "    ".repeat(indent);
    for s in stmts {
        match s {
            GStmt::Assign { var, rhs, .. } => out.push_str(&format!("{pad}{var} = {}\n", render_atoms(rhs))),
            GStmt::Use { arg, .. } => out.push_str(&format!("{pad}use({})\n", render_atoms(arg))),
            GStmt::Return { .. } => out.push_str(&format!("{pad}return\n")),
            GStmt::If { then_b, else_b, .. } => {
                out.push_str(&format!("{pad}if cond:\n"));
                render(then_b, indent + 1, out);
                if !else_b.is_empty() {
                    out.push_str(&format!("{pad}else:\n"));
                    render(else_b, indent + 1, out);
                }
            }
            GStmt::While { body, .. } => {
                out.push_str(&format!("{pad}while cond:\n"));
                render(body, indent + 1, out);
            }
        }
    }
}

/// A random program of at most eight statements over three variables,
/// nested at most two deep.
pub fn generate(seed: u64, allow_loops: bool) -> Program {
    let mut g = Gen {
        rng: StdRng::seed_from_u64(seed),
        budget: 8,
        next: 0,
        allow_loops,
        has_loop: false,
    };
    let body = g.block(0, 8);
    let mut source = String::new();
    render(&body, 0, &mut source);
    Program {
        len: g.next,
        has_loop: g.has_loop,
        body,
        source,
    }
}

pub fn walk<'a>(stmts: &'a [GStmt], f: &mut impl FnMut(&'a GStmt)) {
    for s in stmts {
        f(s);
        match s {
            GStmt::If { then_b, else_b, .. } => {
                walk(then_b, f);
                walk(else_b, f);
            }
            GStmt::While { body, .. } => walk(body, f),
            _ => {}
        }
    }
}

pub fn assigned_vars(p: &Program) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    walk(&p.body, &mut |s| {
        if let GStmt::Assign { var, .. } = s {
            out.insert(var.clone());
        }
    });
    out
}

/// Generic all-paths interpreter over sets of states. Loops iterate until
/// the set of states at the header stops growing.
fn run<S: Ord + Clone>(
    stmts: &[GStmt],
    ins: BTreeSet<S>,
    obs: &mut Vec<BTreeSet<S>>,
    assign: &impl Fn(&S, usize, &str, &[Atom]) -> S,
) -> BTreeSet<S> {
    let mut cur = ins;
    for s in stmts {
        if cur.is_empty() {
            // statements after a return on every path are never observed
            break;
        }
        cur = match s {
            GStmt::Assign { at, var, rhs } => {
                obs[*at].extend(cur.iter().cloned());
                cur.iter().map(|st| assign(st, *at, var, rhs)).collect()
            }
            GStmt::Use { at, .. } => {
                obs[*at].extend(cur.iter().cloned());
                cur
            }
            GStmt::Return { at } => {
                obs[*at].extend(cur.iter().cloned());
                BTreeSet::new()
            }
            GStmt::If { at, then_b, else_b } => {
                obs[*at].extend(cur.iter().cloned());
                let mut out = run(then_b, cur.clone(), obs, assign);
                if else_b.is_empty() {
                    out.extend(cur);
                } else {
                    out.extend(run(else_b, cur, obs, assign));
                }
                out
            }
            GStmt::While { at, body } => {
                let mut head = cur;
                loop {
                    obs[*at].extend(head.iter().cloned());
                    let mut next = head.clone();
                    next.extend(run(body, head.clone(), obs, assign));
                    if next == head {
                        break head;
                    }
                    head = next;
                }
            }
        };
    }
    cur
}

/// Reaching definitions at the start of every statement, by enumerating
/// the last definition of each variable along all paths.
pub fn oracle_rdefs(p: &Program) -> Vec<BTreeMap<String, BTreeSet<DefSite>>> {
    type State = BTreeMap<String, DefSite>;
    let vars = assigned_vars(p);
    let init: State = vars.iter().map(|v| (v.clone(), DefSite::Entry)).collect();
    let mut obs: Vec<BTreeSet<State>> = vec![BTreeSet::new(); p.len];
    run(&p.body, BTreeSet::from([init]), &mut obs, &|st: &State, at, var, _rhs| {
        let mut s = st.clone();
        s.insert(var.to_string(), DefSite::At(at));
        s
    });
    obs.into_iter()
        .map(|states| {
            let mut m: BTreeMap<String, BTreeSet<DefSite>> = BTreeMap::new();
            for st in states {
                for (v, d) in st {
                    m.entry(v).or_default().insert(d);
                }
            }
            m
        })
        .collect()
}

/// Concrete environments at the start of every statement, over all branch
/// choices. `None` marks a variable not yet assigned on that path.
pub fn oracle_envs(p: &Program) -> Vec<BTreeSet<BTreeMap<String, Option<String>>>> {
    type Env = BTreeMap<String, Option<String>>;
    let init: Env = VARS.iter().map(|v| (v.to_string(), None)).collect();
    let mut obs: Vec<BTreeSet<Env>> = vec![BTreeSet::new(); p.len];
    run(&p.body, BTreeSet::from([init]), &mut obs, &|env: &Env, _at, var, rhs| {
        let mut e = env.clone();
        let v = concrete(env, rhs);
        e.insert(var.to_string(), v);
        e
    });
    obs
}

pub fn concrete(env: &BTreeMap<String, Option<String>>, atoms: &[Atom]) -> Option<String> {
    let mut s = String::new();
    for a in atoms {
        match a {
            Atom::Lit(l) => s.push_str(l),
            Atom::Var(v) => s.push_str(env.get(v)?.as_deref()?),
        }
    }
    Some(s)
}

/// Expressions evaluated by the program: call arguments and assignment
/// right-hand sides, with the statement they are evaluated at.
pub fn eval_points(p: &Program) -> Vec<(usize, Vec<Atom>)> {
    let mut out = Vec::new();
    walk(&p.body, &mut |s| match s {
        GStmt::Assign { at, rhs, .. } => out.push((*at, rhs.clone())),
        GStmt::Use { at, arg } => out.push((*at, arg.clone())),
        _ => {}
    });
    out
}

/// Outcome of checking one program against both oracles.
#[derive(Debug, Default, Clone, Copy)]
pub struct Checked {
    pub rda_queries: usize,
    pub eval_points: usize,
}

/// Parse `p` through the Python frontend and compare reaching definitions
/// (exact on acyclic programs, superset with loops) and, on acyclic
/// programs, static evaluation against the concrete oracle.
pub fn check_program(p: &Program) -> Result<Checked, String> {
    use polycall::dataflow::{reaching_definitions, static_eval, DefPoint, StaticValue};
    use polycall::frontend::{extract_assignments, extract_reverse_flow, parse_unit};
    use polycall::model::{Language, MAIN_BODY};

    let ctx = |m: String| format!("{m}\n--- program ---\n{}", p.source);
    let unit = parse_unit(&p.source, Language::Python, "gen.py")
        .map_err(|e| ctx(format!("parse failed: {e}")))?
        .unit;
    if unit.blocks.len() != p.len {
        return Err(ctx(format!("expected {} statements, frontend made {}", p.len, unit.blocks.len())));
    }
    let assigns = extract_assignments(&unit);
    let rflow = extract_reverse_flow(&unit);
    let expected = oracle_rdefs(p);
    let mut stats = Checked::default();
    for (at, exp) in expected.iter().enumerate() {
        for var in assigned_vars(p) {
            let got: BTreeSet<DefSite> = reaching_definitions(MAIN_BODY, &[var.as_str()], at, &assigns, &rflow)
                .map_err(|e| ctx(e.to_string()))?
                .for_var(&var)
                .collect();
            let want = exp.get(&var).cloned().unwrap_or_default();
            let ok = if p.has_loop { got.is_superset(&want) } else { got == want };
            if !ok {
                return Err(ctx(format!("rdefs of `{var}` at {at}: got {got:?}, oracle {want:?}")));
            }
            stats.rda_queries += 1;
        }
    }
    if p.has_loop {
        return Ok(stats);
    }
    let envs = oracle_envs(p);
    for (at, atoms) in eval_points(p) {
        if envs[at].is_empty() {
            continue;
        }
        let values: Vec<Option<String>> = envs[at].iter().map(|e| concrete(e, &atoms)).collect();
        let want = if values.iter().any(Option::is_none) {
            StaticValue::Unknown
        } else {
            StaticValue::Known(values.into_iter().flatten().collect())
        };
        let expr = atoms_to_expr(&atoms);
        let got = static_eval(&DefPoint::Expr { expr, at }, MAIN_BODY, &assigns, &rflow);
        if got != want {
            return Err(ctx(format!("eval of {atoms:?} at {at}: got {got:?}, oracle {want:?}")));
        }
        stats.eval_points += 1;
    }
    Ok(stats)
}
