//! Reaching definitions and static evaluation of string expressions.
//!
//! Both analyses are intraprocedural and work from the fact tables: the
//! assignments and the reverse control-flow edges of each scope.

mod eval;
mod rda;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::expr::Expr;
use crate::frontend::{extract_assignments, extract_reverse_flow, FlowEdge};
use crate::model::{AssignmentRecord, Label, SourceUnit};
use crate::table::{AssignRow, CallRow, FlowRow, RdefRow};

pub use eval::{EvalLimits, StaticValue};

/// Where a reaching value was defined: an assignment statement, or the
/// scope entry (the variable may be unassigned).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DefSite {
    Entry,
    At(usize),
}

impl fmt::Display for DefSite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DefSite::Entry => f.write_str("entry"),
            DefSite::At(i) => write!(f, "{i}"),
        }
    }
}

impl FromStr for DefSite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "entry" {
            return Ok(DefSite::Entry);
        }
        s.parse()
            .map(DefSite::At)
            .map_err(|_| format!("expected a statement index or `entry`, got `{s}`"))
    }
}

/// Reaching (variable, definition) pairs at one program point.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReachingDefs {
    pub entries: BTreeSet<(String, DefSite)>,
}

impl ReachingDefs {
    pub fn for_var<'a>(&'a self, var: &'a str) -> impl Iterator<Item = DefSite> + 'a {
        self.entries.iter().filter(move |(v, _)| v == var).map(|(_, d)| *d)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DataflowError {
    #[error("unknown scope `{0}`")]
    UnknownScope(String),
    #[error("no statement {index} in scope `{scope}`")]
    UnknownLabel { scope: String, index: usize },
}

/// Flow facts of one scope plus the solved reaching-definitions fixpoint.
#[derive(Debug, Clone)]
pub struct ScopeFlow {
    preds: Vec<Vec<usize>>,
    succs: Vec<Vec<usize>>,
    defs: Vec<Option<(String, Expr)>>,
    reachable: Vec<bool>,
    solution: rda::Solution,
}

impl ScopeFlow {
    fn new(len: usize, defs: BTreeMap<usize, (String, Expr)>, edges: &[(usize, usize)]) -> Self {
        let mut preds = vec![Vec::new(); len];
        let mut succs = vec![Vec::new(); len];
        for &(from, to) in edges {
            // reverse edge: `to` executes right before `from`
            if !preds[from].contains(&to) {
                preds[from].push(to);
                succs[to].push(from);
            }
        }
        for v in preds.iter_mut().chain(succs.iter_mut()) {
            v.sort_unstable();
        }
        let mut d = vec![None; len];
        for (i, def) in defs {
            d[i] = Some(def);
        }
        let reachable = rda::reachable(&succs);
        let solution = rda::solve(&preds, &d, &reachable);
        ScopeFlow {
            preds,
            succs,
            defs: d,
            reachable,
            solution,
        }
    }

    pub fn len(&self) -> usize {
        self.defs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.defs.is_empty()
    }

    pub fn predecessors(&self, index: usize) -> &[usize] {
        &self.preds[index]
    }

    pub fn successors(&self, index: usize) -> &[usize] {
        &self.succs[index]
    }

    pub fn is_reachable(&self, index: usize) -> bool {
        self.reachable[index]
    }

    pub fn assignment(&self, index: usize) -> Option<(&str, &Expr)> {
        self.defs.get(index)?.as_ref().map(|(v, e)| (v.as_str(), e))
    }

    /// Passes of the fixpoint loop that changed some set.
    pub fn iterations(&self) -> usize {
        self.solution.iterations
    }

    pub fn variables(&self) -> BTreeSet<&str> {
        self.defs.iter().flatten().map(|(v, _)| v.as_str()).collect()
    }
}

/// Dataflow facts of one unit, solved per scope.
#[derive(Debug, Clone, Default)]
pub struct DataflowCtx {
    scopes: BTreeMap<String, ScopeFlow>,
    seeded: HashMap<(String, usize, String), BTreeSet<DefSite>>,
    pub limits: EvalLimits,
}

impl DataflowCtx {
    /// Build from assignments, reverse edges and any further statement
    /// labels (for example call sites) that fix the size of each scope.
    pub fn new<'a>(
        assigns: &[AssignmentRecord],
        rflow: &[FlowEdge],
        labels: impl IntoIterator<Item = &'a Label>,
    ) -> Self {
        let mut len: BTreeMap<String, usize> = BTreeMap::new();
        let mut bump = |scope: &str, i: usize| {
            let e = len.entry(scope.to_string()).or_insert(0);
            *e = (*e).max(i + 1);
        };
        for a in assigns {
            bump(&a.label.scope, a.label.index);
        }
        for e in rflow {
            bump(&e.scope, e.from_index);
            bump(&e.scope, e.to_index);
        }
        for l in labels {
            bump(&l.scope, l.index);
        }
        let mut scopes = BTreeMap::new();
        for (scope, n) in len {
            let defs: BTreeMap<usize, (String, Expr)> = assigns
                .iter()
                .filter(|a| a.label.scope == scope)
                .map(|a| (a.label.index, (a.variable.clone(), a.rhs.clone())))
                .collect();
            let edges: Vec<(usize, usize)> = rflow
                .iter()
                .filter(|e| e.scope == scope)
                .map(|e| (e.from_index, e.to_index))
                .collect();
            scopes.insert(scope, ScopeFlow::new(n, defs, &edges));
        }
        DataflowCtx {
            scopes,
            seeded: HashMap::new(),
            limits: EvalLimits::default(),
        }
    }

    pub fn from_unit(unit: &SourceUnit) -> Self {
        let labels: Vec<Label> = unit.blocks.iter().map(|b| b.label.clone()).collect();
        Self::new(&extract_assignments(unit), &extract_reverse_flow(unit), &labels)
    }

    /// Build from the tables of one unit.
    pub fn from_rows(assigns: &[AssignRow], rflow: &[FlowRow], calls: &[CallRow]) -> Self {
        let assigns: Vec<AssignmentRecord> = assigns
            .iter()
            .map(|a| AssignmentRecord {
                label: a.label.clone(),
                variable: a.variable.clone(),
                rhs: a.rhs.clone(),
            })
            .collect();
        let rflow: Vec<FlowEdge> = rflow
            .iter()
            .map(|r| FlowEdge {
                scope: r.scope.clone(),
                from_index: r.from_index,
                to_index: r.to_index,
            })
            .collect();
        Self::new(&assigns, &rflow, calls.iter().map(|c| &c.label))
    }

    /// Use precomputed reaching definitions (an `rdefs` table) for the
    /// points it covers instead of the local fixpoint.
    pub fn seed_rdefs(&mut self, rows: &[RdefRow]) {
        for r in rows {
            self.seeded
                .entry((r.scope.clone(), r.use_index, r.variable.clone()))
                .or_default()
                .insert(r.def);
        }
    }

    pub fn scope(&self, scope: &str) -> Option<&ScopeFlow> {
        self.scopes.get(scope)
    }

    pub fn scopes(&self) -> impl Iterator<Item = (&str, &ScopeFlow)> {
        self.scopes.iter().map(|(k, v)| (k.as_str(), v))
    }

    fn checked(&self, scope: &str, at: usize) -> Result<&ScopeFlow, DataflowError> {
        let s = self
            .scopes
            .get(scope)
            .ok_or_else(|| DataflowError::UnknownScope(scope.to_string()))?;
        if at >= s.len() {
            return Err(DataflowError::UnknownLabel {
                scope: scope.to_string(),
                index: at,
            });
        }
        Ok(s)
    }

    /// Definitions of `vars` that may reach the start of statement `at`.
    pub fn reaching_definitions<S: AsRef<str>>(
        &self,
        scope: &str,
        vars: &[S],
        at: usize,
    ) -> Result<ReachingDefs, DataflowError> {
        let s = self.checked(scope, at)?;
        let mut entries = BTreeSet::new();
        for v in vars {
            let v = v.as_ref();
            if let Some(seed) = self.seeded.get(&(scope.to_string(), at, v.to_string())) {
                entries.extend(seed.iter().map(|d| (v.to_string(), *d)));
                continue;
            }
            entries.extend(s.solution.reaching(at, v).map(|d| (v.to_string(), d)));
        }
        Ok(ReachingDefs { entries })
    }

    /// Possible values of `expr` evaluated just before statement `at`.
    pub fn eval_at(&self, scope: &str, expr: &Expr, at: usize) -> StaticValue {
        match self.checked(scope, at) {
            Ok(s) => eval::eval(s, expr, at, &self.limits),
            Err(_) => match expr {
                Expr::StringLiteral(v) => StaticValue::known([v.clone()]),
                _ => StaticValue::Unknown,
            },
        }
    }

    /// Value assigned by the definition `def` of `variable`.
    pub fn eval_def(&self, scope: &str, variable: &str, def: DefSite) -> StaticValue {
        let DefSite::At(i) = def else {
            return StaticValue::Unknown;
        };
        match self.scopes.get(scope).and_then(|s| s.assignment(i)) {
            Some((v, rhs)) if v == variable => self.eval_at(scope, &rhs.clone(), i),
            _ => StaticValue::Unknown,
        }
    }

    /// Reaching definitions of every variable read by a call argument or an
    /// assignment right-hand side, as `rdefs` rows.
    pub fn rdef_rows(&self, unit_id: &str, assigns: &[AssignRow], calls: &[CallRow]) -> Vec<RdefRow> {
        let mut uses: BTreeSet<(String, usize, String)> = BTreeSet::new();
        for a in assigns {
            for v in a.rhs.referenced_vars() {
                uses.insert((a.label.scope.clone(), a.label.index, v));
            }
        }
        for c in calls {
            for arg in &c.args {
                for v in arg.referenced_vars() {
                    uses.insert((c.label.scope.clone(), c.label.index, v));
                }
            }
        }
        let mut out = Vec::new();
        for (scope, at, var) in uses {
            let Ok(rd) = self.reaching_definitions(&scope, &[var.as_str()], at) else {
                continue;
            };
            out.extend(rd.entries.into_iter().map(|(variable, def)| RdefRow {
                unit_id: unit_id.to_string(),
                scope: scope.clone(),
                use_index: at,
                variable,
                def,
            }));
        }
        out
    }
}

/// Reaching definitions straight from the tables of one scope.
pub fn reaching_definitions<S: AsRef<str>>(
    proc: &str,
    vars: &[S],
    at: usize,
    assigns: &[AssignmentRecord],
    rflow: &[FlowEdge],
) -> Result<ReachingDefs, DataflowError> {
    DataflowCtx::new(assigns, rflow, [&Label::new(proc, at)]).reaching_definitions(proc, vars, at)
}

/// What [`static_eval`] evaluates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DefPoint {
    /// The value assigned by a definition.
    Def { variable: String, def: DefSite },
    /// An expression evaluated just before a statement.
    Expr { expr: Expr, at: usize },
}

pub fn static_eval(point: &DefPoint, proc: &str, assigns: &[AssignmentRecord], rflow: &[FlowEdge]) -> StaticValue {
    let at = match point {
        DefPoint::Def { def: DefSite::At(i), .. } => *i,
        DefPoint::Def { .. } => 0,
        DefPoint::Expr { at, .. } => *at,
    };
    let ctx = DataflowCtx::new(assigns, rflow, [&Label::new(proc, at)]);
    match point {
        DefPoint::Def { variable, def } => ctx.eval_def(proc, variable, *def),
        DefPoint::Expr { expr, at } => ctx.eval_at(proc, expr, *at),
    }
}
