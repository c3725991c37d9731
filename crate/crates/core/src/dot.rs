//! Graphviz rendering of call graphs.

use std::fmt::Write;

use crate::expr::Expr;
use crate::model::{CallGraph, CgNode, Language, NodeFlag};

/// Longest code excerpt shown on an anonymous node.
pub const ANONYMOUS_LABEL_CHARS: usize = 40;

pub fn shape(lang: Language) -> &'static str {
    match lang {
        Language::C => "ellipse",
        Language::Python => "box",
        Language::JavaScript => "hexagon",
        Language::Shell => "parallelogram",
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => {}
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn label(n: &CgNode) -> String {
    if n.flag == NodeFlag::AnonymousResolved {
        let code = n.args.iter().find_map(|a| match a {
            Expr::StringLiteral(s) => Some(s.as_str()),
            _ => None,
        });
        if let Some(code) = code {
            let mut short: String = code.chars().take(ANONYMOUS_LABEL_CHARS).collect();
            if code.chars().count() > ANONYMOUS_LABEL_CHARS {
                short.push_str("...");
            }
            return format!("{}\n{}", n.proc, short);
        }
    }
    n.proc.clone()
}

fn style(flag: NodeFlag) -> &'static str {
    if flag.is_dynamic() || flag == NodeFlag::CrossLangCycle {
        ", style=dotted, peripheries=2"
    } else if flag == NodeFlag::Recursive {
        ", style=dotted"
    } else {
        ""
    }
}

/// Render `cg` as a DOT digraph. Nodes are sorted by id and edges by
/// (parent, child) id, so equal graphs give equal text.
pub fn emit_dot(cg: &CallGraph) -> String {
    let mut nodes: Vec<&CgNode> = cg.nodes().collect();
    nodes.sort_by(|a, b| a.node_id.cmp(&b.node_id));
    let mut edges = cg.edges();
    edges.sort();

    let mut out = String::from("digraph callgraph {\n");
    for n in nodes {
        let lang = n.display_language();
        writeln!(
            out,
            "  {} [label={}, shape={}, language={}{}];",
            quote(&n.node_id),
            quote(&label(n)),
            shape(lang),
            quote(lang.as_str()),
            style(n.flag)
        )
        .unwrap();
    }
    for (from, to) in edges {
        writeln!(out, "  {} -> {};", quote(&from), quote(&to)).unwrap();
    }
    out.push_str("}\n");
    out
}
