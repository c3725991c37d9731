//! Merge two units that call each other through interop APIs and report
//! the cycles found.

use polycall::interop::ApiRegistry;
use polycall::model::{Language, NodeFlag};
use polycall::pipeline::analyze_sources;

fn main() -> anyhow::Result<()> {
    let sources = vec![
        (
            "verify.py".to_string(),
            Language::Python,
            "check(user)\njsfile = open(\"welcome.js\")\nPyV8.JSContext.eval(jsfile.read())\n".to_string(),
        ),
        (
            "welcome.js".to_string(),
            Language::JavaScript,
            "function banner(n) { banner(n); }\nbanner(1);\nJQuery.ajax(url: \"verify.py\");\n".to_string(),
        ),
    ];
    let report = analyze_sources(&sources, &ApiRegistry::builtin(), "verify.py")?;
    let g = &report.graph;
    for ix in g.preorder() {
        let depth = g.ancestors(ix).count();
        let n = g.node(ix);
        let mark = match n.flag {
            NodeFlag::None => String::new(),
            f => format!("  <{f}>"),
        };
        println!("{}{} [{}]{mark}", "  ".repeat(depth), n.proc, n.display_language());
    }
    Ok(())
}
