//! Recognition of interoperability API calls and their rewriting into
//! target-language call nodes.
//!
//! A call matching a registry entry is resolved into one or more
//! [`Rewrite`]s: one per statically known payload value, or a single
//! dynamic sentinel when the payload has no static value. The same resolution
//! backs both the call-table rewrite used by the pipeline
//! ([`rewrite_calls`]) and the graph rewrite ([`apply_interop`]).

mod registry;

use std::collections::BTreeSet;

use crate::callgraph::UnitCalls;
use crate::dataflow::{DataflowCtx, DefSite, StaticValue};
use crate::expr::Expr;
use crate::model::{
    CallGraph, CgNode, Label, Language, NodeFlag, NodeSpec, Stage, ANONYMOUS, ANONYMOUS_DYNAMIC, FILE_BASED_DYNAMIC,
    PROC_BASED_DYNAMIC,
};
use crate::table::CallRow;

pub use registry::{load_registry, ApiClass, ApiEntry, ApiRegistry, Binder, RegistryError, DEFAULT_REGISTRY};

/// Replacement content for one interop call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rewrite {
    pub proc: String,
    pub args: Vec<Expr>,
    pub flag: NodeFlag,
    pub target_language: Language,
}

/// A call to rewrite: where it is and what it passes.
#[derive(Debug, Clone, Copy)]
pub struct CallRef<'a> {
    pub label: &'a Label,
    pub args: &'a [Expr],
}

/// Variable whose definitions decide a binder-based role: `f` for `f`,
/// `f.read` and `f.read()`.
fn root_var(e: &Expr) -> Option<&str> {
    let name = match e {
        Expr::VarRef(v) => v.as_str(),
        Expr::Call { callee, .. } => callee.as_str(),
        _ => return None,
    };
    name.split('.').next().filter(|s| !s.is_empty())
}

fn binder_defs(var: &str, call: CallRef, binder: &Binder, ctx: &DataflowCtx) -> Vec<(DefSite, Option<Expr>)> {
    let scope = &call.label.scope;
    let Ok(rd) = ctx.reaching_definitions(scope, &[var], call.label.index) else {
        return Vec::new();
    };
    rd.for_var(var)
        .map(|d| {
            let name_arg = match d {
                DefSite::At(i) => ctx
                    .scope(scope)
                    .and_then(|s| s.assignment(i))
                    .and_then(|(_, rhs)| match rhs {
                        Expr::Call { callee, args } if *callee == binder.api => args.get(binder.name_index).cloned(),
                        _ => None,
                    }),
                DefSite::Entry => None,
            };
            (d, name_arg)
        })
        .collect()
}

/// Names bound to `handle_var` by calls to the entry's binder, evaluated at
/// each binding. Any reaching definition of another form gives Unknown.
pub fn resolve_handle(handle_var: &str, at: &Label, entry: &ApiEntry, ctx: &DataflowCtx) -> StaticValue {
    let Some(binder) = &entry.binder else {
        return StaticValue::Unknown;
    };
    let call = CallRef { label: at, args: &[] };
    let defs = binder_defs(handle_var, call, binder, ctx);
    let mut values = BTreeSet::new();
    for (d, name_arg) in defs {
        let (DefSite::At(i), Some(arg)) = (d, name_arg) else {
            return StaticValue::Unknown;
        };
        match ctx.eval_at(&at.scope, &arg, i) {
            StaticValue::Known(v) => values.extend(v),
            StaticValue::Unknown => return StaticValue::Unknown,
        }
        if values.len() > ctx.limits.max_values {
            return StaticValue::Unknown;
        }
    }
    StaticValue::known(values)
}

/// Pick the role of a multi-role API. A role with a binder applies when the
/// payload's root variable is bound by that binder on some path; otherwise
/// the role without a binder applies.
pub fn select_entry<'r>(entries: &[&'r ApiEntry], call: CallRef, ctx: &DataflowCtx) -> Option<&'r ApiEntry> {
    if entries.len() <= 1 {
        return entries.first().copied();
    }
    for e in entries {
        let Some(binder) = &e.binder else { continue };
        let Some(payload) = call.args.get(e.payload_arg_index) else {
            continue;
        };
        let bound = root_var(payload)
            .map(|v| binder_defs(v, call, binder, ctx).iter().any(|(_, n)| n.is_some()))
            .unwrap_or(false);
        if bound {
            return Some(e);
        }
    }
    entries.iter().find(|e| e.binder.is_none()).copied()
}

fn without(args: &[Expr], index: usize) -> Vec<Expr> {
    args.iter()
        .enumerate()
        .filter(|(i, _)| *i != index)
        .map(|(_, a)| a.clone())
        .collect()
}

/// Replace the packed-argument variable by the items stored into it before
/// the call, when positions are literal and dense.
fn unpack(packed: &Expr, packer: &str, call: CallRef, scope_calls: &[&CallRow]) -> Vec<Expr> {
    let Expr::VarRef(tuple) = packed else {
        return vec![packed.clone()];
    };
    let mut items: Vec<(usize, Expr)> = Vec::new();
    for c in scope_calls {
        if c.callee != packer || c.label.index >= call.label.index || c.args.first() != Some(packed) {
            continue;
        }
        let pos = match c.args.get(1) {
            Some(Expr::Dynamic(t)) => t.trim().parse::<usize>().ok(),
            _ => None,
        };
        match (pos, c.args.get(2)) {
            (Some(p), Some(item)) => items.push((p, item.clone())),
            _ => return vec![Expr::dynamic(tuple.clone())],
        }
    }
    items.sort_by_key(|(p, _)| *p);
    let dense = !items.is_empty() && items.iter().enumerate().all(|(i, (p, _))| i == *p);
    if !dense {
        return vec![Expr::dynamic(tuple.clone())];
    }
    items.into_iter().map(|(_, e)| e).collect()
}

/// Resolve one call against one registry entry.
///
/// `scope_calls` are the other calls of the same scope, used to unpack
/// packed arguments.
pub fn resolve_call(entry: &ApiEntry, call: CallRef, scope_calls: &[&CallRow], ctx: &DataflowCtx) -> Vec<Rewrite> {
    let tl = entry.target_language;
    let dynamic = |flag: NodeFlag| {
        vec![Rewrite {
            proc: flag.sentinel().expect("dynamic flag").to_string(),
            args: call.args.to_vec(),
            flag,
            target_language: tl,
        }]
    };
    let dyn_flag = match entry.api_class {
        ApiClass::Anonymous => NodeFlag::AnonymousDynamic,
        ApiClass::FileBased => NodeFlag::FileBasedDynamic,
        ApiClass::ProcedureBased => NodeFlag::ProcBasedDynamic,
    };
    let idx = entry.payload_arg_index;
    let Some(payload) = call.args.get(idx) else {
        return dynamic(dyn_flag);
    };
    let value = match (&entry.binder, entry.api_class) {
        (Some(b), ApiClass::ProcedureBased) => match payload {
            Expr::VarRef(h) => resolve_handle(h, call.label, entry, ctx),
            Expr::Call { callee, args } if *callee == b.api => match args.get(b.name_index) {
                Some(name) => ctx.eval_at(&call.label.scope, name, call.label.index),
                None => StaticValue::Unknown,
            },
            other => ctx.eval_at(&call.label.scope, other, call.label.index),
        },
        (Some(_), ApiClass::FileBased) => match root_var(payload) {
            Some(v) => resolve_handle(v, call.label, entry, ctx),
            None => StaticValue::Unknown,
        },
        _ => ctx.eval_at(&call.label.scope, payload, call.label.index),
    };
    let StaticValue::Known(values) = value else {
        return dynamic(dyn_flag);
    };
    if values.len() > ctx.limits.max_values {
        return dynamic(dyn_flag);
    }
    values
        .into_iter()
        .map(|v| match entry.api_class {
            ApiClass::Anonymous => {
                let mut args = call.args.to_vec();
                args[idx] = Expr::literal(v);
                Rewrite {
                    proc: ANONYMOUS.to_string(),
                    args,
                    flag: NodeFlag::AnonymousResolved,
                    target_language: tl,
                }
            }
            ApiClass::FileBased => Rewrite {
                proc: v,
                args: without(call.args, idx),
                flag: NodeFlag::None,
                target_language: tl,
            },
            ApiClass::ProcedureBased => {
                let mut args = without(call.args, idx);
                if let (Some(packer), Some(packed)) = (&entry.arg_packer, args.get(idx).cloned()) {
                    args.splice(idx..=idx, unpack(&packed, packer, call, scope_calls));
                }
                Rewrite {
                    proc: v,
                    args,
                    flag: NodeFlag::None,
                    target_language: tl,
                }
            }
        })
        .collect()
}

fn candidate(flag: NodeFlag, target: Option<Language>, callee: &str, unit: &UnitCalls) -> bool {
    flag == NodeFlag::None && target.is_none() && !unit.defined_procs.contains(callee)
}

fn scope_calls<'a>(unit: &'a UnitCalls, scope: &str) -> Vec<&'a CallRow> {
    unit.calls.iter().filter(|c| c.label.scope == scope).collect()
}

fn resolve_in_unit(
    unit: &UnitCalls,
    registry: &ApiRegistry,
    classes: &[ApiClass],
    callee: &str,
    call: CallRef,
    ctx: &DataflowCtx,
) -> Option<Vec<Rewrite>> {
    let entries = registry.lookup(unit.language, callee);
    let entry = select_entry(&entries, call, ctx)?;
    if !classes.contains(&entry.api_class) {
        return None;
    }
    Some(resolve_call(entry, call, &scope_calls(unit, &call.label.scope), ctx))
}

/// Rewrite a unit's call table. Rows that match the registry are replaced in
/// place by their rewrites; all other rows are unchanged.
pub fn rewrite_calls(unit: &UnitCalls, registry: &ApiRegistry, ctx: &DataflowCtx) -> Vec<CallRow> {
    let all = [ApiClass::Anonymous, ApiClass::FileBased, ApiClass::ProcedureBased];
    let mut out = Vec::with_capacity(unit.calls.len());
    for c in &unit.calls {
        let call = CallRef {
            label: &c.label,
            args: &c.args,
        };
        let rewrites = candidate(c.flag, c.target_language, &c.callee, unit)
            .then(|| resolve_in_unit(unit, registry, &all, &c.callee, call, ctx))
            .flatten();
        match rewrites {
            Some(rs) => out.extend(rs.into_iter().map(|r| CallRow {
                unit_id: c.unit_id.clone(),
                language: c.language,
                label: c.label.clone(),
                callee: r.proc,
                args: r.args,
                flag: r.flag,
                target_language: Some(r.target_language),
            })),
            None => out.push(c.clone()),
        }
    }
    out
}

/// Copy `cg`, replacing every node for which `f` returns replacements by
/// those replacements (attached to the same parent, in place). Untouched
/// nodes keep their ids.
pub fn rebuild_graph<F>(cg: &CallGraph, stage: Stage, mut f: F) -> CallGraph
where
    F: FnMut(&CallGraph, usize) -> Option<Vec<NodeSpec>>,
{
    let root = cg.root_node();
    let mut out = CallGraph::with_root_id(root.node_id.clone(), NodeSpec::from(root), stage);
    let mut stack: Vec<(usize, usize)> = cg.children(0).iter().rev().map(|&c| (c, 0)).collect();
    while let Some((old, new_parent)) = stack.pop() {
        match f(cg, old) {
            Some(specs) => {
                for s in specs {
                    out.add_child(new_parent, s);
                }
            }
            None => {
                let n = cg.node(old);
                let ix = out
                    .add_child_with_id(new_parent, n.node_id.clone(), NodeSpec::from(n))
                    .unwrap_or_else(|| out.add_child(new_parent, NodeSpec::from(n)));
                stack.extend(cg.children(old).iter().rev().map(|&c| (c, ix)));
            }
        }
    }
    out
}

fn rewrite_specs(n: &CgNode, rewrites: Vec<Rewrite>) -> Vec<NodeSpec> {
    rewrites
        .into_iter()
        .map(|r| NodeSpec {
            proc: r.proc,
            unit_id: n.unit_id.clone(),
            label: n.label.clone(),
            args: r.args,
            language: n.language,
            target_language: Some(r.target_language),
            flag: r.flag,
            definition: None,
        })
        .collect()
}

fn filter_classes(cg: &CallGraph, unit: &UnitCalls, registry: &ApiRegistry, classes: &[ApiClass], ctx: &DataflowCtx) -> CallGraph {
    rebuild_graph(cg, Stage::InteropRewritten, |g, ix| {
        let n = g.node(ix);
        if ix == g.root() || n.unit_id != unit.unit_id || !g.is_leaf(ix) || !candidate(n.flag, n.target_language, &n.proc, unit) {
            return None;
        }
        let call = CallRef {
            label: &n.label,
            args: &n.args,
        };
        resolve_in_unit(unit, registry, classes, &n.proc, call, ctx).map(|rs| rewrite_specs(n, rs))
    })
}

fn single(entry: &ApiEntry) -> ApiRegistry {
    ApiRegistry::new(vec![entry.clone()]).expect("a single entry is a valid registry")
}

/// Rewrite the nodes matching an Anonymous entry.
pub fn filter_anonymous(cg: &CallGraph, unit: &UnitCalls, entry: &ApiEntry, ctx: &DataflowCtx) -> CallGraph {
    filter_classes(cg, unit, &single(entry), &[ApiClass::Anonymous], ctx)
}

/// Rewrite the nodes matching a FileBased entry.
pub fn filter_file_based(cg: &CallGraph, unit: &UnitCalls, entry: &ApiEntry, ctx: &DataflowCtx) -> CallGraph {
    filter_classes(cg, unit, &single(entry), &[ApiClass::FileBased], ctx)
}

/// Rewrite the nodes matching a ProcedureBased entry.
pub fn filter_procedure_based(cg: &CallGraph, unit: &UnitCalls, entry: &ApiEntry, ctx: &DataflowCtx) -> CallGraph {
    filter_classes(cg, unit, &single(entry), &[ApiClass::ProcedureBased], ctx)
}

/// Rewrite every interop call node of `unit` in a monolingual graph.
pub fn apply_interop(cg: &CallGraph, unit: &UnitCalls, registry: &ApiRegistry, ctx: &DataflowCtx) -> CallGraph {
    filter_classes(
        cg,
        unit,
        registry,
        &[ApiClass::Anonymous, ApiClass::FileBased, ApiClass::ProcedureBased],
        ctx,
    )
}

/// Interop-sentinel procedure names.
pub fn is_sentinel(proc: &str) -> bool {
    matches!(proc, ANONYMOUS_DYNAMIC | FILE_BASED_DYNAMIC | PROC_BASED_DYNAMIC)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::callgraph::build_from_units;
    use crate::frontend::parse_unit;

    fn setup(src: &str, lang: Language) -> (UnitCalls, DataflowCtx) {
        let u = parse_unit(src, lang, "u").unwrap().unit;
        (UnitCalls::from_unit(&u), DataflowCtx::from_unit(&u))
    }

    fn rewritten(src: &str, lang: Language) -> Vec<CallRow> {
        let (u, ctx) = setup(src, lang);
        rewrite_calls(&u, &ApiRegistry::builtin(), &ctx)
    }

    #[test]
    fn anonymous_literal_and_dynamic() {
        let r = rewritten("int main(){ PyRun_SimpleString(\"print(1)\"); }", Language::C);
        assert_eq!(r[0].callee, ANONYMOUS);
        assert_eq!(r[0].flag, NodeFlag::AnonymousResolved);
        assert_eq!(r[0].args, vec![Expr::literal("print(1)")]);
        assert_eq!(r[0].target_language, Some(Language::Python));
        let r = rewritten("x = input()\nos.system(x)\n", Language::Python);
        assert_eq!(r[1].callee, ANONYMOUS_DYNAMIC);
        assert_eq!(r[1].flag, NodeFlag::AnonymousDynamic);
        assert_eq!(r[1].target_language, Some(Language::Shell));
    }

    #[test]
    fn anonymous_branches_copy() {
        let r = rewritten("if c:\n  s = \"b()\"\nelse:\n  s = \"a()\"\nPyV8.JSContext.eval(s)\n", Language::Python);
        let args: Vec<_> = r.iter().map(|c| c.args[0].clone()).collect();
        assert_eq!(args, vec![Expr::literal("a()"), Expr::literal("b()")]);
        assert!(r.iter().all(|c| c.label == Label::main(3)));
    }

    #[test]
    fn file_based_shifts_args() {
        let r = rewritten("int main(){ FILE *fp = fopen(\"s.py\", \"r\"); PyRun_SimpleFile(fp, \"script.py\"); }", Language::C);
        let c = r.iter().find(|c| c.target_language.is_some()).unwrap();
        assert_eq!(c.callee, "script.py");
        assert_eq!(c.args, vec![Expr::var("fp")]);
        let r = rewritten("JQuery.ajax(url: \"pyfile.py\")\n", Language::JavaScript);
        assert_eq!(r[0].callee, "pyfile.py");
        assert!(r[0].args.is_empty());
        let r = rewritten("var f = prompt()\nJQuery.ajax(f)\n", Language::JavaScript);
        assert_eq!(r[1].callee, FILE_BASED_DYNAMIC);
    }

    #[test]
    fn pyv8_roles() {
        let r = rewritten("jsfile = open(\"lib.js\")\nPyV8.JSContext.eval(jsfile.read())\n", Language::Python);
        let c = r.iter().find(|c| c.target_language.is_some()).unwrap();
        assert_eq!((c.callee.as_str(), c.flag), ("lib.js", NodeFlag::None));
        let r = rewritten("PyV8.JSContext.eval(\"f()\")\n", Language::Python);
        assert_eq!(r[0].flag, NodeFlag::AnonymousResolved);
    }

    #[test]
    fn procedure_based_handle_and_packing() {
        let src = r#"
int main() {
    PyObject *pFunc = PyObject_GetAttrString(pModule, "compute");
    PyObject *pArgs = PyTuple_New(2);
    PyTuple_SetItem(pArgs, 0, a);
    PyTuple_SetItem(pArgs, 1, b);
    PyObject_CallObject(pFunc, pArgs);
}
"#;
        let r = rewritten(src, Language::C);
        let c = r.iter().find(|c| c.target_language.is_some()).unwrap();
        assert_eq!(c.callee, "compute");
        assert_eq!(c.args, vec![Expr::var("a"), Expr::var("b")]);
        let r = rewritten(
            "int main(){ JS_CallFunctionName(cx, gl, \"draw\", args, &ret); }",
            Language::C,
        );
        assert_eq!(r[0].callee, "draw");
        assert_eq!(r[0].args.len(), 4);
        let r = rewritten("js.call(prefix + getName(), args)\n", Language::Python);
        let c = r.iter().find(|c| c.target_language.is_some()).unwrap();
        assert_eq!((c.callee.as_str(), c.flag), (PROC_BASED_DYNAMIC, NodeFlag::ProcBasedDynamic));
    }

    #[test]
    fn handle_from_branches_and_unknown_binder() {
        let src = "if c:\n  h = PyObject_GetAttrString(m, \"f\")\nelse:\n  h = PyObject_GetAttrString(m, \"g\")\nuse(h)\n";
        let (_, ctx) = setup(src, Language::Python);
        let entry = ApiRegistry::builtin().lookup(Language::C, "PyObject_CallObject")[0].clone();
        assert_eq!(
            resolve_handle("h", &Label::main(3), &entry, &ctx),
            StaticValue::known(["f".to_string(), "g".to_string()])
        );
        let (_, ctx) = setup("h = lookup(m, \"f\")\nuse(h)\n", Language::Python);
        assert!(resolve_handle("h", &Label::main(1), &entry, &ctx).is_unknown());
    }

    #[test]
    fn graph_rewrite_matches_table_rewrite() {
        let src = "if c:\n  s = \"b()\"\nelse:\n  s = \"a()\"\nPyV8.JSContext.eval(s)\nprint(s)\njs.call(\"draw\", x)\n";
        let (u, ctx) = setup(src, Language::Python);
        let reg = ApiRegistry::builtin();
        let g = apply_interop(&build_from_units(&u), &u, &reg, &ctx);
        let rows = rewrite_calls(&u, &reg, &ctx);
        let direct = build_from_units(&UnitCalls { calls: rows, ..u.clone() });
        assert_eq!(g.edges(), direct.edges());
        assert_eq!(g.stage, Stage::InteropRewritten);
        assert_eq!(g.len(), 5);
    }

    #[test]
    fn no_matches_is_identity() {
        let (u, ctx) = setup("def f():\n  g()\nf()\n", Language::Python);
        let before = build_from_units(&u);
        let after = apply_interop(&before, &u, &ApiRegistry::builtin(), &ctx);
        assert_eq!(before.edges(), after.edges());
        let ids = |g: &CallGraph| g.nodes().map(|n| n.node_id.clone()).collect::<Vec<_>>();
        assert_eq!(ids(&before), ids(&after));
    }
}
