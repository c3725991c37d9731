//! Joining per-unit call trees into one multilingual call graph.
//!
//! Interop leaves are extended with the definition they reach in another
//! unit, expanding that unit's (already rewritten) calls in turn. A
//! definition already on the path from the root is not expanded again; such
//! repeats are classified afterwards as plain recursion or as a cycle that
//! crosses a language boundary.

use std::collections::{BTreeMap, BTreeSet};

use crate::callgraph::{expand, is_expandable_interop, RepeatPolicy, Resolver, UnitCalls};
use crate::model::{file_name, CallGraph, DefKey, Language, NodeFlag, NodeIx, NodeSpec, Stage};
use crate::table::McgRow;

/// More than one unit defines the looked-up name.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("`{name}` ({language}) is defined in several units {candidates:?}; using `{}`", chosen.unit_id)]
pub struct AmbiguousDefinition {
    pub name: String,
    pub language: Language,
    pub candidates: Vec<String>,
    pub chosen: DefKey,
}

/// Where every file and procedure of the codebase is defined, plus the
/// rewritten call tables needed to expand them.
#[derive(Debug, Clone, Default)]
pub struct DefinitionIndex {
    units: BTreeMap<String, UnitCalls>,
    procs: BTreeMap<(Language, String), BTreeSet<String>>,
}

impl DefinitionIndex {
    pub fn new(units: impl IntoIterator<Item = UnitCalls>) -> Self {
        let mut idx = DefinitionIndex::default();
        for u in units {
            for p in &u.defined_procs {
                idx.procs
                    .entry((u.language, p.clone()))
                    .or_default()
                    .insert(u.unit_id.clone());
            }
            idx.units.insert(u.unit_id.clone(), u);
        }
        idx
    }

    pub fn unit(&self, unit_id: &str) -> Option<&UnitCalls> {
        self.units.get(unit_id)
    }

    pub fn units(&self) -> impl Iterator<Item = &UnitCalls> {
        self.units.values()
    }

    /// Units of `language` whose path matches `name`: equal basename, or a
    /// path suffix when `name` contains a directory part.
    fn file_candidates(&self, name: &str, language: Language) -> Vec<&UnitCalls> {
        let name = name.trim_start_matches("./").replace('\\', "/");
        self.units
            .values()
            .filter(|u| u.language == language)
            .filter(|u| {
                let path = u.path.replace('\\', "/");
                if name.contains('/') {
                    path == name || path.ends_with(&format!("/{name}"))
                } else {
                    file_name(&path) == name
                }
            })
            .collect()
    }

    /// Definition reached by calling `name` in `language`. File names match
    /// a unit's entry; other names match a defined procedure.
    pub fn find_definition(&self, name: &str, language: Language) -> Result<Option<DefKey>, AmbiguousDefinition> {
        let files = self.file_candidates(name, language);
        let candidates: Vec<DefKey> = if !files.is_empty() {
            files.iter().map(|u| u.root_key()).collect()
        } else {
            self.procs
                .get(&(language, name.to_string()))
                .map(|units| units.iter().map(|u| DefKey::new(u, name)).collect())
                .unwrap_or_default()
        };
        match candidates.len() {
            0 => Ok(None),
            1 => Ok(candidates.into_iter().next()),
            _ => {
                let mut candidates = candidates;
                candidates.sort();
                Err(AmbiguousDefinition {
                    name: name.to_string(),
                    language,
                    candidates: candidates.iter().map(|c| c.unit_id.clone()).collect(),
                    chosen: candidates.swap_remove(0),
                })
            }
        }
    }
}

/// Free-function form of [`DefinitionIndex::find_definition`].
pub fn find_definition(
    name: &str,
    language: Language,
    defs: &DefinitionIndex,
) -> Result<Option<DefKey>, AmbiguousDefinition> {
    defs.find_definition(name, language)
}

struct MergeResolver<'a> {
    defs: &'a DefinitionIndex,
    diagnostics: BTreeSet<String>,
}

impl Resolver for MergeResolver<'_> {
    fn unit(&self, unit_id: &str) -> Option<&UnitCalls> {
        self.defs.unit(unit_id)
    }

    fn foreign(&mut self, node: &NodeSpec) -> Option<DefKey> {
        let lang = node.target_language?;
        match self.defs.find_definition(&node.proc, lang) {
            Ok(k) => k,
            Err(amb) => {
                self.diagnostics.insert(amb.to_string());
                Some(amb.chosen)
            }
        }
    }
}

/// A merged graph and the diagnostics raised while building it.
#[derive(Debug, Clone)]
pub struct MergeReport {
    pub graph: CallGraph,
    pub diagnostics: Vec<String>,
}

/// Extend every unexpanded interop leaf of `cg` with its definition, then
/// annotate cycles.
pub fn merge_multilingual_report(cg: &CallGraph, defs: &DefinitionIndex) -> MergeReport {
    let mut g = cg.clone();
    g.stage = Stage::Multilingual;
    let mut resolver = MergeResolver {
        defs,
        diagnostics: BTreeSet::new(),
    };
    let leaves: Vec<NodeIx> = g
        .preorder()
        .into_iter()
        .filter(|&ix| {
            let n = g.node(ix);
            ix != g.root() && g.is_leaf(ix) && n.definition.is_none() && is_expandable_interop(&NodeSpec::from(n))
        })
        .collect();
    for leaf in leaves {
        let Some(def) = resolver.foreign(&NodeSpec::from(g.node(leaf))) else {
            continue;
        };
        g.node_mut(leaf).definition = Some(def.clone());
        let mut ancestry: Vec<DefKey> = g.ancestors(leaf).filter_map(|a| g.node(a).definition.clone()).collect();
        ancestry.reverse();
        if ancestry.contains(&def) {
            continue;
        }
        ancestry.push(def.clone());
        expand(&mut g, leaf, &def, &mut ancestry, &mut resolver, RepeatPolicy::Defer);
    }
    MergeReport {
        graph: annotate_cycles(g),
        diagnostics: resolver.diagnostics.into_iter().collect(),
    }
}

pub fn merge_multilingual(cg: &CallGraph, defs: &DefinitionIndex) -> CallGraph {
    let report = merge_multilingual_report(cg, defs);
    for d in &report.diagnostics {
        log::warn!("{d}");
    }
    report.graph
}

/// Build the multilingual graph rooted at the entry unit.
pub fn merge_from_entry(entry_unit: &str, defs: &DefinitionIndex) -> Option<MergeReport> {
    let unit = defs.unit(entry_unit)?;
    let root = crate::callgraph::build_from_units(unit);
    let mut g = root;
    g.stage = Stage::InteropRewritten;
    Some(merge_multilingual_report(&g, defs))
}

/// Flag every node that repeats a definition of one of its ancestors:
/// CrossLangCycle when the nodes between the two occurrences involve two or
/// more languages, Recursive otherwise.
pub fn annotate_cycles(mut cg: CallGraph) -> CallGraph {
    let mut flags = Vec::new();
    for ix in 0..cg.len() {
        let Some(def) = cg.node(ix).definition.clone() else {
            continue;
        };
        let mut langs = BTreeSet::new();
        let mut found = false;
        let mut cur = ix;
        while let Some(p) = cg.parent(cur) {
            let n = cg.node(cur);
            langs.insert(n.language);
            langs.extend(n.target_language);
            if cg.node(p).definition.as_ref() == Some(&def) {
                found = true;
                break;
            }
            cur = p;
        }
        if found {
            let flag = if langs.len() >= 2 {
                NodeFlag::CrossLangCycle
            } else {
                NodeFlag::Recursive
            };
            flags.push((ix, flag));
        }
    }
    for (ix, flag) in flags {
        cg.node_mut(ix).flag = flag;
    }
    cg
}

/// Rows of `mcg.csv`, root first, in pre-order.
pub fn mcg_rows(cg: &CallGraph) -> Vec<McgRow> {
    cg.preorder()
        .into_iter()
        .map(|ix| {
            let n = cg.node(ix);
            McgRow {
                node_id: n.node_id.clone(),
                parent_id: cg.parent(ix).map(|p| cg.node(p).node_id.clone()),
                proc: n.proc.clone(),
                unit_id: n.unit_id.clone(),
                label: n.label.clone(),
                language: n.language,
                target_language: n.target_language,
                args: n.args.clone(),
                flag: n.flag,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum McgError {
    #[error("mcg table is empty")]
    Empty,
    #[error("first row must be the root (no parent)")]
    RootNotFirst,
    #[error("row {row}: unknown parent `{parent}`")]
    UnknownParent { row: usize, parent: String },
    #[error("row {row}: duplicate node id `{id}`")]
    DuplicateId { row: usize, id: String },
}

/// Rebuild a graph from `mcg.csv` rows (parents before children).
pub fn graph_from_mcg(rows: &[McgRow]) -> Result<CallGraph, McgError> {
    let spec = |r: &McgRow| NodeSpec {
        proc: r.proc.clone(),
        unit_id: r.unit_id.clone(),
        label: r.label.clone(),
        args: r.args.clone(),
        language: r.language,
        target_language: r.target_language,
        flag: r.flag,
        definition: None,
    };
    let first = rows.first().ok_or(McgError::Empty)?;
    if first.parent_id.is_some() {
        return Err(McgError::RootNotFirst);
    }
    let mut g = CallGraph::with_root_id(first.node_id.clone(), spec(first), Stage::Multilingual);
    for (i, r) in rows.iter().enumerate().skip(1) {
        let row = i + 1;
        let parent = r.parent_id.clone().unwrap_or_default();
        let p = g.index_of(&parent).ok_or(McgError::UnknownParent { row, parent })?;
        g.add_child_with_id(p, r.node_id.clone(), spec(r))
            .ok_or_else(|| McgError::DuplicateId {
                row,
                id: r.node_id.clone(),
            })?;
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataflow::DataflowCtx;
    use crate::frontend::parse_unit;
    use crate::interop::{rewrite_calls, ApiRegistry};

    fn index(files: &[(&str, Language, &str)]) -> DefinitionIndex {
        let reg = ApiRegistry::builtin();
        DefinitionIndex::new(files.iter().map(|(path, lang, src)| {
            let u = parse_unit(src, *lang, path).unwrap().unit;
            let mut calls = UnitCalls::from_unit(&u);
            calls.calls = rewrite_calls(&calls, &reg, &DataflowCtx::from_unit(&u));
            calls
        }))
    }

    fn count(g: &CallGraph, flag: NodeFlag) -> usize {
        g.nodes().filter(|n| n.flag == flag).count()
    }

    #[test]
    fn lookups() {
        let idx = index(&[
            ("lib/script.py", Language::Python, "def compute():\n  pass\n"),
            ("a.js", Language::JavaScript, "function compute() {}\n"),
        ]);
        assert_eq!(
            idx.find_definition("script.py", Language::Python).unwrap(),
            Some(DefKey::new("lib/script.py", crate::model::MAIN_BODY))
        );
        assert_eq!(
            idx.find_definition("compute", Language::Python).unwrap(),
            Some(DefKey::new("lib/script.py", "compute"))
        );
        assert_eq!(idx.find_definition("missing", Language::JavaScript).unwrap(), None);
    }

    #[test]
    fn ambiguity_picks_smallest_unit() {
        let idx = index(&[
            ("b.py", Language::Python, "def f():\n  pass\n"),
            ("a.py", Language::Python, "def f():\n  pass\n"),
        ]);
        let e = idx.find_definition("f", Language::Python).unwrap_err();
        assert_eq!(e.chosen, DefKey::new("a.py", "f"));
        assert_eq!(e.candidates, vec!["a.py", "b.py"]);
    }

    #[test]
    fn file_based_chain() {
        let idx = index(&[
            ("m.c", Language::C, "int main() { PyRun_SimpleFile(fp, \"S.py\"); }"),
            ("S.py", Language::Python, "def pyFunc():\n  pass\npyFunc()\n"),
        ]);
        let g = merge_from_entry("m.c", &idx).unwrap().graph;
        let procs: Vec<_> = g.preorder().into_iter().map(|i| g.node(i).proc.clone()).collect();
        assert_eq!(procs, vec!["m.c", "S.py", "pyFunc"]);
        assert_eq!(g.stage, Stage::Multilingual);
    }

    #[test]
    fn circularity_and_recursion() {
        let idx = index(&[
            (
                "verifyAccount.py",
                Language::Python,
                "jsfile = open(\"welcome.js\")\nPyV8.JSContext.eval(jsfile.read())\n",
            ),
            (
                "welcome.js",
                Language::JavaScript,
                "function displayWelcome(n) { displayWelcome(n) }\ndisplayWelcome(1)\nJQuery.ajax(url: \"verifyAccount.py\")\n",
            ),
        ]);
        let g = merge_from_entry("verifyAccount.py", &idx).unwrap().graph;
        assert_eq!(count(&g, NodeFlag::CrossLangCycle), 1);
        assert_eq!(count(&g, NodeFlag::Recursive), 1);
    }

    #[test]
    fn no_interop_leaves_is_identity() {
        let idx = index(&[("x.py", Language::Python, "f()\n")]);
        let g = crate::callgraph::build_from_units(idx.unit("x.py").unwrap());
        let m = merge_multilingual(&g, &idx);
        assert_eq!(m.edges(), g.edges());
        let again = merge_multilingual(&m, &idx);
        assert_eq!(again.edges(), m.edges());
    }

    #[test]
    fn two_leaves_get_independent_copies() {
        let idx = index(&[
            (
                "m.c",
                Language::C,
                "int main() { PyRun_SimpleFile(fp, \"S.py\"); PyRun_SimpleFile(fp, \"S.py\"); }",
            ),
            ("S.py", Language::Python, "g()\n"),
        ]);
        let g = merge_from_entry("m.c", &idx).unwrap().graph;
        assert_eq!(g.len(), 5);
        let ids: BTreeSet<_> = g.nodes().map(|n| n.node_id.clone()).collect();
        assert_eq!(ids.len(), 5);
    }

    #[test]
    fn mcg_round_trip() {
        let idx = index(&[
            ("m.c", Language::C, "int main() { PyRun_SimpleFile(fp, \"S.py\"); }"),
            ("S.py", Language::Python, "g(\"a,b\")\n"),
        ]);
        let g = merge_from_entry("m.c", &idx).unwrap().graph;
        let rows = mcg_rows(&g);
        let back = graph_from_mcg(&rows).unwrap();
        assert_eq!(mcg_rows(&back), rows);
    }
}
