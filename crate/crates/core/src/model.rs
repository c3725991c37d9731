//! Domain types shared by every stage.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::expr::Expr;

/// Scope name of top-level code.
pub const MAIN_BODY: &str = "main-body";

pub const ANONYMOUS: &str = "Anonymous";
pub const ANONYMOUS_DYNAMIC: &str = "Anonymous-Dynamic";
pub const FILE_BASED_DYNAMIC: &str = "FileBased-Dynamic";
pub const PROC_BASED_DYNAMIC: &str = "ProcBased-Dynamic";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Language {
    C,
    Python,
    JavaScript,
    /// Target of `system()`-style calls. No frontend parses it.
    Shell,
}

impl Language {
    pub const ALL: [Language; 4] = [Language::C, Language::Python, Language::JavaScript, Language::Shell];

    pub fn as_str(self) -> &'static str {
        match self {
            Language::C => "C",
            Language::Python => "Python",
            Language::JavaScript => "JavaScript",
            Language::Shell => "Shell",
        }
    }

    /// Default extension map: `.c`/`.h` C, `.py` Python, `.js` JavaScript.
    pub fn from_extension(ext: &str) -> Option<Language> {
        match ext {
            "c" | "h" => Some(Language::C),
            "py" => Some(Language::Python),
            "js" => Some(Language::JavaScript),
            _ => None,
        }
    }

    pub fn has_frontend(self) -> bool {
        !matches!(self, Language::Shell)
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown language `{0}`")]
pub struct UnknownLanguage(pub String);

impl FromStr for Language {
    type Err = UnknownLanguage;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Language::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownLanguage(s.to_string()))
    }
}

/// Statement position: a scope (procedure name or [`MAIN_BODY`]) and a
/// sequential index within it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label {
    pub scope: String,
    pub index: usize,
}

impl Label {
    pub fn new(scope: impl Into<String>, index: usize) -> Self {
        Label {
            scope: scope.into(),
            index,
        }
    }

    pub fn main(index: usize) -> Self {
        Label::new(MAIN_BODY, index)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.scope, self.index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallSite {
    pub target: String,
    pub args: Vec<Expr>,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentRecord {
    pub label: Label,
    pub variable: String,
    pub rhs: Expr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockKind {
    Assignment,
    Call,
    Condition,
    Return,
    Other,
}

/// One elementary statement.
///
/// `calls` lists every call expression in the statement, innermost first.
/// `successors` are the forward control-flow successors within the same
/// scope, as statement indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledBlock {
    pub label: Label,
    pub kind: BlockKind,
    pub assignment: Option<AssignmentRecord>,
    pub calls: Vec<CallSite>,
    pub successors: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("duplicate label {0}")]
    DuplicateLabel(Label),
    #[error("labels in scope `{scope}` are not dense 0..{len}")]
    SparseLabels { scope: String, len: usize },
    #[error("block {0} has kind {1:?} but the wrong payload")]
    PayloadMismatch(Label, BlockKind),
    #[error("successor {succ} of {label} does not exist")]
    DanglingSuccessor { label: Label, succ: usize },
    #[error("defined procedures {defined:?} differ from non-main scopes {scopes:?}")]
    ProcScopeMismatch {
        defined: BTreeSet<String>,
        scopes: BTreeSet<String>,
    },
    #[error("duplicate unit id `{0}`")]
    DuplicateUnit(String),
}

/// A single parsed program of one language.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceUnit {
    pub unit_id: String,
    pub language: Language,
    pub path: String,
    pub blocks: Vec<LabeledBlock>,
    pub defined_procs: BTreeSet<String>,
}

impl SourceUnit {
    /// Builds a unit and checks its structural invariants. A defined
    /// procedure with an empty body has no blocks, so `defined_procs` may be
    /// a superset of the non-main scopes that own blocks.
    pub fn new(
        unit_id: impl Into<String>,
        language: Language,
        path: impl Into<String>,
        blocks: Vec<LabeledBlock>,
        defined_procs: BTreeSet<String>,
    ) -> Result<Self, ModelError> {
        let unit = SourceUnit {
            unit_id: unit_id.into(),
            language,
            path: path.into(),
            blocks,
            defined_procs,
        };
        unit.validate()?;
        Ok(unit)
    }

    fn validate(&self) -> Result<(), ModelError> {
        let mut per_scope: BTreeMap<&str, BTreeSet<usize>> = BTreeMap::new();
        for b in &self.blocks {
            if !per_scope.entry(&b.label.scope).or_default().insert(b.label.index) {
                return Err(ModelError::DuplicateLabel(b.label.clone()));
            }
            let ok = match b.kind {
                BlockKind::Assignment => b.assignment.is_some(),
                BlockKind::Call => b.assignment.is_none() && !b.calls.is_empty(),
                _ => b.assignment.is_none(),
            };
            if !ok {
                return Err(ModelError::PayloadMismatch(b.label.clone(), b.kind));
            }
        }
        for (scope, idx) in &per_scope {
            if idx.iter().copied().ne(0..idx.len()) {
                return Err(ModelError::SparseLabels {
                    scope: scope.to_string(),
                    len: idx.len(),
                });
            }
        }
        for b in &self.blocks {
            let len = per_scope[b.label.scope.as_str()].len();
            if let Some(&succ) = b.successors.iter().find(|&&s| s >= len) {
                return Err(ModelError::DanglingSuccessor {
                    label: b.label.clone(),
                    succ,
                });
            }
        }
        let scopes: BTreeSet<String> = per_scope
            .keys()
            .filter(|s| **s != MAIN_BODY)
            .map(|s| s.to_string())
            .collect();
        if !scopes.is_subset(&self.defined_procs) || self.defined_procs.contains(MAIN_BODY) {
            return Err(ModelError::ProcScopeMismatch {
                defined: self.defined_procs.clone(),
                scopes,
            });
        }
        Ok(())
    }

    pub fn blocks_in<'a>(&'a self, scope: &'a str) -> impl Iterator<Item = &'a LabeledBlock> + 'a {
        self.blocks.iter().filter(move |b| b.label.scope == scope)
    }

    /// Scopes in a stable order: main-body first, then procedures by name.
    pub fn scopes(&self) -> Vec<String> {
        let mut out = vec![MAIN_BODY.to_string()];
        out.extend(self.defined_procs.iter().cloned());
        out
    }

    /// Final path component, used to match file-based interop targets.
    pub fn file_name(&self) -> &str {
        file_name(&self.path)
    }

    pub fn defines(&self, proc: &str) -> bool {
        self.defined_procs.contains(proc)
    }
}

pub fn file_name(path: &str) -> &str {
    path.rsplit(['/', '\\']).next().unwrap_or(path)
}

/// Names of all called procedures in a unit.
pub fn procs(unit: &SourceUnit) -> BTreeSet<String> {
    unit.blocks
        .iter()
        .flat_map(|b| b.calls.iter().map(|c| c.target.clone()))
        .collect()
}

/// A set of units keyed by unit id.
#[derive(Debug, Clone, Default)]
pub struct Codebase {
    units: BTreeMap<String, SourceUnit>,
}

impl Codebase {
    pub fn new(units: impl IntoIterator<Item = SourceUnit>) -> Result<Self, ModelError> {
        let mut cb = Codebase::default();
        for u in units {
            cb.insert(u)?;
        }
        Ok(cb)
    }

    pub fn insert(&mut self, unit: SourceUnit) -> Result<(), ModelError> {
        if self.units.contains_key(&unit.unit_id) {
            return Err(ModelError::DuplicateUnit(unit.unit_id));
        }
        self.units.insert(unit.unit_id.clone(), unit);
        Ok(())
    }

    pub fn get(&self, unit_id: &str) -> Option<&SourceUnit> {
        self.units.get(unit_id)
    }

    pub fn units(&self) -> impl Iterator<Item = &SourceUnit> {
        self.units.values()
    }

    pub fn languages(&self) -> BTreeSet<Language> {
        self.units.values().map(|u| u.language).collect()
    }

    pub fn count(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum NodeFlag {
    #[default]
    None,
    AnonymousResolved,
    AnonymousDynamic,
    FileBasedDynamic,
    ProcBasedDynamic,
    CrossLangCycle,
    Recursive,
}

impl NodeFlag {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeFlag::None => "",
            NodeFlag::AnonymousResolved => "AnonymousResolved",
            NodeFlag::AnonymousDynamic => "AnonymousDynamic",
            NodeFlag::FileBasedDynamic => "FileBasedDynamic",
            NodeFlag::ProcBasedDynamic => "ProcBasedDynamic",
            NodeFlag::CrossLangCycle => "CrossLangCycle",
            NodeFlag::Recursive => "Recursive",
        }
    }

    pub fn is_dynamic(self) -> bool {
        matches!(
            self,
            NodeFlag::AnonymousDynamic | NodeFlag::FileBasedDynamic | NodeFlag::ProcBasedDynamic
        )
    }

    pub fn is_cycle(self) -> bool {
        matches!(self, NodeFlag::CrossLangCycle | NodeFlag::Recursive)
    }

    /// Sentinel procedure name carried by dynamic nodes.
    pub fn sentinel(self) -> Option<&'static str> {
        match self {
            NodeFlag::AnonymousDynamic => Some(ANONYMOUS_DYNAMIC),
            NodeFlag::FileBasedDynamic => Some(FILE_BASED_DYNAMIC),
            NodeFlag::ProcBasedDynamic => Some(PROC_BASED_DYNAMIC),
            _ => None,
        }
    }
}

impl fmt::Display for NodeFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if *self == NodeFlag::None { "None" } else { self.as_str() })
    }
}

impl FromStr for NodeFlag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "" | "None" => NodeFlag::None,
            "AnonymousResolved" => NodeFlag::AnonymousResolved,
            "AnonymousDynamic" => NodeFlag::AnonymousDynamic,
            "FileBasedDynamic" => NodeFlag::FileBasedDynamic,
            "ProcBasedDynamic" => NodeFlag::ProcBasedDynamic,
            "CrossLangCycle" => NodeFlag::CrossLangCycle,
            "Recursive" => NodeFlag::Recursive,
            other => return Err(format!("unknown flag `{other}`")),
        })
    }
}

/// A definition a call can expand into: a procedure scope in a unit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DefKey {
    pub unit_id: String,
    pub scope: String,
}

impl DefKey {
    pub fn new(unit_id: impl Into<String>, scope: impl Into<String>) -> Self {
        DefKey {
            unit_id: unit_id.into(),
            scope: scope.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CgNode {
    pub node_id: String,
    pub proc: String,
    /// Unit containing the call (for the root, the unit itself).
    pub unit_id: String,
    pub label: Label,
    pub args: Vec<Expr>,
    pub language: Language,
    pub target_language: Option<Language>,
    pub flag: NodeFlag,
    /// Definition this call resolves to, whether or not it was expanded.
    /// Not serialized; cycle annotation needs it.
    pub definition: Option<DefKey>,
}

impl CgNode {
    /// Language used for display: the target language of rewritten nodes,
    /// otherwise the language of the calling code.
    pub fn display_language(&self) -> Language {
        self.target_language.unwrap_or(self.language)
    }
}

/// Node content before it is attached to a graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSpec {
    pub proc: String,
    pub unit_id: String,
    pub label: Label,
    pub args: Vec<Expr>,
    pub language: Language,
    pub target_language: Option<Language>,
    pub flag: NodeFlag,
    pub definition: Option<DefKey>,
}

impl From<&CgNode> for NodeSpec {
    fn from(n: &CgNode) -> Self {
        NodeSpec {
            proc: n.proc.clone(),
            unit_id: n.unit_id.clone(),
            label: n.label.clone(),
            args: n.args.clone(),
            language: n.language,
            target_language: n.target_language,
            flag: n.flag,
            definition: n.definition.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Monolingual,
    InteropRewritten,
    Multilingual,
}

/// Index of a node inside a [`CallGraph`] arena.
pub type NodeIx = usize;

/// A call tree rooted at a unit entry pseudo-node.
///
/// Every node has at most one parent; a procedure called from two places
/// appears twice, once per call-site path.
#[derive(Debug, Clone)]
pub struct CallGraph {
    nodes: Vec<CgNode>,
    parent: Vec<Option<NodeIx>>,
    children: Vec<Vec<NodeIx>>,
    by_id: HashMap<String, NodeIx>,
    pub stage: Stage,
}

fn node_hash(parent_id: &str, spec: &NodeSpec, occurrence: usize) -> String {
    let mut h = Sha256::new();
    for part in [
        parent_id,
        &spec.unit_id,
        &spec.proc,
        &spec.label.scope,
        &spec.label.index.to_string(),
        &occurrence.to_string(),
    ] {
        h.update(part.as_bytes());
        h.update([0u8]);
    }
    let digest = h.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

impl CallGraph {
    pub fn new(root: NodeSpec, stage: Stage) -> Self {
        let node_id = node_hash("", &root, 0);
        let node = Self::materialize(node_id.clone(), root);
        CallGraph {
            nodes: vec![node],
            parent: vec![None],
            children: vec![Vec::new()],
            by_id: HashMap::from([(node_id, 0)]),
            stage,
        }
    }

    fn materialize(node_id: String, s: NodeSpec) -> CgNode {
        CgNode {
            node_id,
            proc: s.proc,
            unit_id: s.unit_id,
            label: s.label,
            args: s.args,
            language: s.language,
            target_language: s.target_language,
            flag: s.flag,
            definition: s.definition,
        }
    }

    /// Attach a child. Its id hashes the parent id, the node content and the
    /// number of earlier siblings with the same unit, proc and label.
    pub fn add_child(&mut self, parent: NodeIx, spec: NodeSpec) -> NodeIx {
        let occurrence = self.children[parent]
            .iter()
            .filter(|&&c| {
                let n = &self.nodes[c];
                n.unit_id == spec.unit_id && n.proc == spec.proc && n.label == spec.label
            })
            .count();
        let id = node_hash(&self.nodes[parent].node_id, &spec, occurrence);
        let ix = self.nodes.len();
        self.by_id.insert(id.clone(), ix);
        self.nodes.push(Self::materialize(id, spec));
        self.parent.push(Some(parent));
        self.children.push(Vec::new());
        self.children[parent].push(ix);
        ix
    }

    /// Attach a node with an explicit id. Used when reading graphs back from
    /// tables; fails on duplicate ids.
    pub fn add_child_with_id(&mut self, parent: NodeIx, node_id: String, spec: NodeSpec) -> Option<NodeIx> {
        if self.by_id.contains_key(&node_id) {
            return None;
        }
        let ix = self.nodes.len();
        self.by_id.insert(node_id.clone(), ix);
        self.nodes.push(Self::materialize(node_id, spec));
        self.parent.push(Some(parent));
        self.children.push(Vec::new());
        self.children[parent].push(ix);
        Some(ix)
    }

    pub fn with_root_id(root_id: String, root: NodeSpec, stage: Stage) -> Self {
        let node = Self::materialize(root_id.clone(), root);
        CallGraph {
            nodes: vec![node],
            parent: vec![None],
            children: vec![Vec::new()],
            by_id: HashMap::from([(root_id, 0)]),
            stage,
        }
    }

    pub fn root(&self) -> NodeIx {
        0
    }

    pub fn root_node(&self) -> &CgNode {
        &self.nodes[0]
    }

    pub fn node(&self, ix: NodeIx) -> &CgNode {
        &self.nodes[ix]
    }

    pub fn node_mut(&mut self, ix: NodeIx) -> &mut CgNode {
        &mut self.nodes[ix]
    }

    pub fn index_of(&self, node_id: &str) -> Option<NodeIx> {
        self.by_id.get(node_id).copied()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &CgNode> {
        self.nodes.iter()
    }

    pub fn children(&self, ix: NodeIx) -> &[NodeIx] {
        &self.children[ix]
    }

    pub fn parent(&self, ix: NodeIx) -> Option<NodeIx> {
        self.parent[ix]
    }

    pub fn is_leaf(&self, ix: NodeIx) -> bool {
        self.children[ix].is_empty()
    }

    /// Ancestors of `ix`, nearest first, excluding `ix` itself.
    pub fn ancestors(&self, ix: NodeIx) -> impl Iterator<Item = NodeIx> + '_ {
        std::iter::successors(self.parent[ix], move |&p| self.parent[p])
    }

    /// Parent/child id pairs, sorted.
    pub fn edges(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = (0..self.nodes.len())
            .filter_map(|c| self.parent[c].map(|p| (self.nodes[p].node_id.clone(), self.nodes[c].node_id.clone())))
            .collect();
        out.sort();
        out
    }

    /// Pre-order traversal from the root, children in insertion order.
    pub fn preorder(&self) -> Vec<NodeIx> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![0];
        while let Some(ix) = stack.pop() {
            out.push(ix);
            stack.extend(self.children[ix].iter().rev());
        }
        out
    }
}
