//! Build a multilingual graph in memory and print it as DOT.

use polycall::dot::emit_dot;
use polycall::interop::ApiRegistry;
use polycall::model::Language;
use polycall::pipeline::analyze_sources;

fn main() -> anyhow::Result<()> {
    let sources = vec![
        (
            "host.c".to_string(),
            Language::C,
            "int main() {\n  PyRun_SimpleString(\"import plugin\");\n  PyRun_SimpleFile(fp, \"plugin.py\");\n}\n".to_string(),
        ),
        ("plugin.py".to_string(), Language::Python, "def setup():\n    log(\"ready\")\nsetup()\n".to_string()),
    ];
    let report = analyze_sources(&sources, &ApiRegistry::builtin(), "host.c")?;
    print!("{}", emit_dot(&report.graph));
    Ok(())
}
