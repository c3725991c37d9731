use polycall::callgraph::{build_from_units, UnitCalls};
use polycall::dataflow::DataflowCtx;
use polycall::frontend::parse_unit;
use polycall::interop::{apply_interop, rewrite_calls, ApiRegistry};
use polycall::merge::{annotate_cycles, merge_from_entry, merge_multilingual, DefinitionIndex};
use polycall::model::{CallGraph, Language, NodeFlag, Stage};

fn unit(path: &str, lang: Language, src: &str) -> (UnitCalls, DataflowCtx) {
    let u = parse_unit(src, lang, path).unwrap().unit;
    (UnitCalls::from_unit(&u), DataflowCtx::from_unit(&u))
}

fn index(files: &[(&str, Language, &str)]) -> DefinitionIndex {
    let reg = ApiRegistry::builtin();
    DefinitionIndex::new(files.iter().map(|(p, l, s)| {
        let (mut calls, ctx) = unit(p, *l, s);
        calls.calls = rewrite_calls(&calls, &reg, &ctx);
        calls
    }))
}

fn procs(g: &CallGraph) -> Vec<String> {
    g.preorder().into_iter().map(|i| g.node(i).proc.clone()).collect()
}

#[test]
fn graph_filters_agree_with_table_rewrite() {
    let src = "int main() {\n  char *s = \"print(1)\";\n  if (x) { s = \"print(2)\"; }\n  PyRun_SimpleString(s);\n  PyRun_SimpleFile(fp, \"w.py\");\n}\n";
    let (calls, ctx) = unit("m.c", Language::C, src);
    let reg = ApiRegistry::builtin();
    let from_graph = apply_interop(&build_from_units(&calls), &calls, &reg, &ctx);
    let mut rewritten = calls.clone();
    rewritten.calls = rewrite_calls(&calls, &reg, &ctx);
    let from_table = build_from_units(&rewritten);
    assert_eq!(from_graph.stage, Stage::InteropRewritten);
    assert_eq!(procs(&from_graph), procs(&from_table));
    assert_eq!(procs(&from_graph), ["m.c", "Anonymous", "Anonymous", "w.py"]);
}

#[test]
fn unresolved_targets_stay_leaves() {
    let idx = index(&[("m.c", Language::C, "int main() { PyRun_SimpleFile(fp, \"missing.py\"); }")]);
    let g = merge_from_entry("m.c", &idx).unwrap().graph;
    assert_eq!(procs(&g), ["m.c", "missing.py"]);
    assert!(g.is_leaf(1));
    assert_eq!(g.node(1).flag, NodeFlag::None);
}

#[test]
fn duplicate_definitions_are_diagnosed() {
    let idx = index(&[
        ("caller.py", Language::Python, "js.call(\"draw\", 1)\n"),
        ("b.js", Language::JavaScript, "function draw(n) { b(); }\n"),
        ("a.js", Language::JavaScript, "function draw(n) { a(); }\n"),
    ]);
    let r = merge_from_entry("caller.py", &idx).unwrap();
    assert_eq!(procs(&r.graph), ["caller.py", "draw", "a"]);
    assert_eq!(r.diagnostics.len(), 1);
    assert!(r.diagnostics[0].contains("a.js") && r.diagnostics[0].contains("b.js"));
}

#[test]
fn merge_is_idempotent_and_annotation_stable() {
    let idx = index(&[
        ("p.py", Language::Python, "f = open(\"q.js\")\nPyV8.JSContext.eval(f.read())\n"),
        ("q.js", Language::JavaScript, "JQuery.ajax(url: \"p.py\");\n"),
    ]);
    let g = merge_from_entry("p.py", &idx).unwrap().graph;
    let again = merge_multilingual(&g, &idx);
    assert_eq!(again.edges(), g.edges());
    let flagged = annotate_cycles(again.clone());
    let count = |g: &CallGraph| g.nodes().filter(|n| n.flag == NodeFlag::CrossLangCycle).count();
    assert_eq!(count(&flagged), 1);
    assert_eq!(count(&g), 1);
}

#[test]
fn a_unit_reached_twice_is_expanded_on_both_paths() {
    let idx = index(&[
        (
            "m.c",
            Language::C,
            "void a() { PyRun_SimpleFile(fp, \"s.py\"); }\nint main() { a(); PyRun_SimpleFile(fp, \"s.py\"); }\n",
        ),
        ("s.py", Language::Python, "work()\n"),
    ]);
    let g = merge_from_entry("m.c", &idx).unwrap().graph;
    assert_eq!(procs(&g), ["m.c", "a", "s.py", "work", "s.py", "work"]);
    assert!(g.nodes().all(|n| n.flag == NodeFlag::None));
}

#[test]
fn dynamic_nodes_are_not_expanded() {
    let idx = index(&[
        ("p.py", Language::Python, "name = input()\njs.call(name, 1)\n"),
        ("q.js", Language::JavaScript, "function name() {}\n"),
    ]);
    let g = merge_from_entry("p.py", &idx).unwrap().graph;
    let dynamic: Vec<_> = g.nodes().filter(|n| n.flag == NodeFlag::ProcBasedDynamic).collect();
    assert_eq!(dynamic.len(), 1);
    assert_eq!(dynamic[0].target_language, Some(Language::JavaScript));
    assert_eq!(g.len(), 3);
}
