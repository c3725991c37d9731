//! Call-tree expansion shared by the monolingual builder and the merge.

use std::collections::BTreeSet;

use crate::model::{CallGraph, DefKey, Label, Language, NodeFlag, NodeIx, NodeSpec, SourceUnit, Stage, MAIN_BODY};
use crate::table::{CallRow, UnitRow};

/// The call table of one unit together with what is needed to expand it.
#[derive(Debug, Clone)]
pub struct UnitCalls {
    pub unit_id: String,
    pub language: Language,
    pub path: String,
    pub defined_procs: BTreeSet<String>,
    pub calls: Vec<CallRow>,
}

impl UnitCalls {
    pub fn from_unit(unit: &SourceUnit) -> Self {
        UnitCalls {
            unit_id: unit.unit_id.clone(),
            language: unit.language,
            path: unit.path.clone(),
            defined_procs: unit.defined_procs.clone(),
            calls: crate::frontend::call_rows(unit),
        }
    }

    pub fn from_rows(unit: &UnitRow, calls: Vec<CallRow>) -> Self {
        UnitCalls {
            unit_id: unit.unit_id.clone(),
            language: unit.language,
            path: unit.path.clone(),
            defined_procs: unit.procs.clone(),
            calls: calls.into_iter().filter(|c| c.unit_id == unit.unit_id).collect(),
        }
    }

    pub fn unit_row(&self) -> UnitRow {
        UnitRow {
            unit_id: self.unit_id.clone(),
            language: self.language,
            path: self.path.clone(),
            procs: self.defined_procs.clone(),
        }
    }

    /// Scope the unit's execution starts in. A C unit that defines `main`
    /// starts there; every other unit starts in main-body.
    pub fn root_key(&self) -> DefKey {
        if self.language == Language::C && self.defined_procs.contains("main") {
            DefKey::new(&self.unit_id, "main")
        } else {
            DefKey::new(&self.unit_id, MAIN_BODY)
        }
    }

    /// Pseudo-node standing for the whole unit.
    pub fn root_spec(&self) -> NodeSpec {
        NodeSpec {
            proc: crate::model::file_name(&self.path).to_string(),
            unit_id: self.unit_id.clone(),
            label: Label::main(0),
            args: Vec::new(),
            language: self.language,
            target_language: None,
            flag: NodeFlag::None,
            definition: Some(self.root_key()),
        }
    }

    /// Calls executed when `scope` runs, in label order. The root scope of a
    /// C unit also runs the top-level initializers.
    pub fn calls_for(&self, scope: &str) -> Vec<&CallRow> {
        let root = self.root_key().scope;
        let scopes: Vec<&str> = if scope == root && root != MAIN_BODY {
            vec![MAIN_BODY, scope]
        } else {
            vec![scope]
        };
        let mut out = Vec::new();
        for s in scopes {
            let mut calls: Vec<&CallRow> = self.calls.iter().filter(|c| c.label.scope == s).collect();
            calls.sort_by_key(|c| c.label.index);
            out.extend(calls);
        }
        out
    }
}

/// Looks up units and definitions during expansion.
pub trait Resolver {
    fn unit(&self, unit_id: &str) -> Option<&UnitCalls>;

    /// Definition reached by a cross-language node, if any.
    fn foreign(&mut self, node: &NodeSpec) -> Option<DefKey>;
}

/// Whether a node can be extended with a foreign definition.
pub fn is_expandable_interop(spec: &NodeSpec) -> bool {
    spec.target_language.is_some() && !spec.flag.is_dynamic() && spec.flag != NodeFlag::AnonymousResolved
}

/// How repeats inside one ancestry path are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepeatPolicy {
    /// Flag the repeat Recursive right away (single-language graphs).
    FlagRecursive,
    /// Leave the flag for cycle annotation.
    Defer,
}

/// Expand `key` beneath node `at`. `ancestry` holds the definitions on the
/// path from the root to `at`, inclusive.
pub fn expand<R: Resolver>(
    graph: &mut CallGraph,
    at: NodeIx,
    key: &DefKey,
    ancestry: &mut Vec<DefKey>,
    resolver: &mut R,
    policy: RepeatPolicy,
) {
    let Some(unit) = resolver.unit(&key.unit_id) else {
        return;
    };
    let specs: Vec<NodeSpec> = unit
        .calls_for(&key.scope)
        .into_iter()
        .map(|c| NodeSpec {
            proc: c.callee.clone(),
            unit_id: c.unit_id.clone(),
            label: c.label.clone(),
            args: c.args.clone(),
            language: c.language,
            target_language: c.target_language,
            flag: c.flag,
            definition: (c.target_language.is_none() && unit.defined_procs.contains(&c.callee))
                .then(|| DefKey::new(&unit.unit_id, &c.callee)),
        })
        .collect();
    for mut spec in specs {
        if spec.definition.is_none() && is_expandable_interop(&spec) {
            spec.definition = resolver.foreign(&spec);
        }
        let def = spec.definition.clone();
        let child = graph.add_child(at, spec);
        let Some(def) = def else { continue };
        if ancestry.contains(&def) {
            if policy == RepeatPolicy::FlagRecursive {
                graph.node_mut(child).flag = NodeFlag::Recursive;
            }
            continue;
        }
        ancestry.push(def.clone());
        expand(graph, child, &def, ancestry, resolver, policy);
        ancestry.pop();
    }
}

struct Single<'a>(&'a UnitCalls);

impl Resolver for Single<'_> {
    fn unit(&self, unit_id: &str) -> Option<&UnitCalls> {
        (self.0.unit_id == unit_id).then_some(self.0)
    }

    fn foreign(&mut self, _node: &NodeSpec) -> Option<DefKey> {
        None
    }
}

/// Call tree of a single unit. Interop calls stay leaves.
pub fn build_from_units(unit: &UnitCalls) -> CallGraph {
    let mut g = CallGraph::new(unit.root_spec(), Stage::Monolingual);
    let key = unit.root_key();
    let mut ancestry = vec![key.clone()];
    expand(
        &mut g,
        0,
        &key,
        &mut ancestry,
        &mut Single(unit),
        RepeatPolicy::FlagRecursive,
    );
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_unit;

    fn graph(src: &str, lang: Language, id: &str) -> CallGraph {
        let u = parse_unit(src, lang, id).unwrap().unit;
        crate::frontend::build_mono_cg(&u)
    }

    fn paths(g: &CallGraph) -> Vec<String> {
        let mut out = Vec::new();
        for ix in g.preorder() {
            let mut names: Vec<&str> = g.ancestors(ix).map(|a| g.node(a).proc.as_str()).collect();
            names.reverse();
            names.push(&g.node(ix).proc);
            out.push(names.join("/"));
        }
        out
    }

    #[test]
    fn two_level_chain() {
        let g = graph("def a():\n  b()\na()\n", Language::Python, "x.py");
        assert_eq!(paths(&g), vec!["x.py", "x.py/a", "x.py/a/b"]);
    }

    #[test]
    fn recursion_stops_with_flag() {
        let g = graph(
            "function displayWelcome() { displayWelcome() }\ndisplayWelcome()\n",
            Language::JavaScript,
            "w.js",
        );
        assert_eq!(g.len(), 3);
        assert_eq!(g.node(2).flag, NodeFlag::Recursive);
        assert_eq!(g.node(1).flag, NodeFlag::None);
    }

    #[test]
    fn external_leaf_and_call_free_unit() {
        let g = graph("int main() { printf(\"hi\"); }", Language::C, "m.c");
        assert_eq!(paths(&g), vec!["m.c", "m.c/printf"]);
        assert!(g.node(1).definition.is_none());
        let g = graph("x = \"1\"\n", Language::Python, "e.py");
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn same_procedure_twice_gets_distinct_ids() {
        let g = graph("f()\nf()\n", Language::Python, "d.py");
        assert_ne!(g.node(1).node_id, g.node(2).node_id);
    }
}
