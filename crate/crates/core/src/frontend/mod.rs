//! Subset parsers for C, Python and JavaScript and extraction of the
//! per-unit fact tables.
//!
//! Each language gets a hand-written lexer and a recursive-descent parser.
//! Statements are numbered per scope in pre-order, and `if`/`while` headers
//! count as Condition statements. Function definitions do not consume a
//! label in the enclosing scope. Constructs outside the subset are reported
//! as warnings and become Other statements.

mod cfg;
mod curly;
pub mod lexer;
mod parser;
mod python;

use std::collections::BTreeSet;
use std::fmt;

use crate::callgraph::{build_from_units, UnitCalls};
use crate::expr::Expr;
use crate::model::{
    AssignmentRecord, CallGraph, CallSite, Label, Language, LabeledBlock, ModelError, SourceUnit, MAIN_BODY,
};
use crate::table::{AssignRow, CallRow, FlowRow};

pub use cfg::{Header, Stmt};
pub use parser::RawCall;

/// Lexical or structural error that stops parsing of a unit.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{unit}:{line}:{col}: {message} (found {token})")]
pub struct ParseError {
    pub unit: String,
    pub line: usize,
    pub col: usize,
    pub message: String,
    pub token: String,
}

/// A recoverable problem: an unsupported construct turned into an Other
/// statement, or an approximation of control flow.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: unsupported construct: {}", self.line, self.col, self.message)
    }
}

/// A top-level procedure definition and its body.
#[derive(Debug, Clone)]
pub struct ProcDef {
    pub name: String,
    pub body: Vec<Stmt>,
    pub line: usize,
}

#[derive(Debug, Clone)]
pub struct ParsedUnit {
    pub unit: SourceUnit,
    pub warnings: Vec<Diagnostic>,
}

#[derive(Debug, thiserror::Error)]
pub enum FrontendError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("no frontend for language {0}")]
    NoFrontend(Language),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Parse source text. The unit path defaults to the unit id.
pub fn parse_unit(text: &str, language: Language, unit_id: &str) -> Result<ParsedUnit, FrontendError> {
    parse_unit_at(text, language, unit_id, unit_id)
}

pub fn parse_unit_at(text: &str, language: Language, unit_id: &str, path: &str) -> Result<ParsedUnit, FrontendError> {
    if !language.has_frontend() {
        return Err(FrontendError::NoFrontend(language));
    }
    let with_unit = |mut e: ParseError| {
        e.unit = path.to_string();
        e
    };
    let toks = lexer::tokenize(text, language).map_err(with_unit)?;
    let mut p = parser::Parser::new(toks, text, language);
    let (main, procs) = match language {
        Language::Python => python::parse_module(&mut p),
        _ => curly::parse_program(&mut p),
    }
    .map_err(with_unit)?;

    let mut blocks = cfg::lower_scope(MAIN_BODY, main);
    let mut defined = BTreeSet::new();
    let mut warnings = std::mem::take(&mut p.warnings);
    for def in procs {
        if def.name == MAIN_BODY || !defined.insert(def.name.clone()) {
            warnings.push(Diagnostic {
                line: def.line,
                col: 1,
                message: format!("procedure `{}` redefined; later definition ignored", def.name),
            });
            continue;
        }
        blocks.extend(cfg::lower_scope(&def.name, def.body));
    }
    let unit = SourceUnit::new(unit_id, language, path, blocks, defined)?;
    Ok(ParsedUnit { unit, warnings })
}

/// Reverse control-flow edge: `from_index` executes right after `to_index`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FlowEdge {
    pub scope: String,
    pub from_index: usize,
    pub to_index: usize,
}

pub fn extract_assignments(unit: &SourceUnit) -> Vec<AssignmentRecord> {
    let mut out: Vec<AssignmentRecord> = unit.blocks.iter().filter_map(|b| b.assignment.clone()).collect();
    out.sort_by(|a, b| a.label.cmp(&b.label));
    out
}

/// Reverse control-flow edges, sorted.
pub fn extract_reverse_flow(unit: &SourceUnit) -> Vec<FlowEdge> {
    let mut out: Vec<FlowEdge> = unit
        .blocks
        .iter()
        .flat_map(|b| {
            b.successors.iter().map(move |&s| FlowEdge {
                scope: b.label.scope.clone(),
                from_index: s,
                to_index: b.label.index,
            })
        })
        .collect();
    out.sort();
    out
}

/// Every call in the unit, in source order with inner calls first.
pub fn extract_calls(unit: &SourceUnit) -> Vec<CallSite> {
    let mut blocks: Vec<&LabeledBlock> = unit.blocks.iter().collect();
    blocks.sort_by(|a, b| scope_order(&a.label, &b.label));
    blocks.into_iter().flat_map(|b| b.calls.iter().cloned()).collect()
}

/// main-body first, then procedures by name; statement index within a scope.
fn scope_order(a: &Label, b: &Label) -> std::cmp::Ordering {
    let key = |l: &Label| (l.scope != MAIN_BODY, l.scope.clone(), l.index);
    key(a).cmp(&key(b))
}

pub fn build_mono_cg(unit: &SourceUnit) -> CallGraph {
    let calls = UnitCalls::from_unit(unit);
    build_from_units(&calls)
}

pub fn call_rows(unit: &SourceUnit) -> Vec<CallRow> {
    extract_calls(unit)
        .into_iter()
        .map(|c| CallRow {
            unit_id: unit.unit_id.clone(),
            language: unit.language,
            label: c.label,
            callee: c.target,
            args: c.args,
            flag: Default::default(),
            target_language: None,
        })
        .collect()
}

pub fn assign_rows(unit: &SourceUnit) -> Vec<AssignRow> {
    extract_assignments(unit)
        .into_iter()
        .map(|a| AssignRow {
            unit_id: unit.unit_id.clone(),
            label: a.label,
            variable: a.variable,
            rhs: a.rhs,
        })
        .collect()
}

pub fn flow_rows(unit: &SourceUnit) -> Vec<FlowRow> {
    extract_reverse_flow(unit)
        .into_iter()
        .map(|e| FlowRow {
            unit_id: unit.unit_id.clone(),
            scope: e.scope,
            from_index: e.from_index,
            to_index: e.to_index,
        })
        .collect()
}

/// Convenience for tests and examples: the first argument of every call to
/// `callee`.
pub fn first_args<'a>(unit: &'a SourceUnit, callee: &'a str) -> impl Iterator<Item = Option<&'a Expr>> + 'a {
    unit.blocks
        .iter()
        .flat_map(|b| b.calls.iter())
        .filter(move |c| c.target == callee)
        .map(|c| c.args.first())
}
