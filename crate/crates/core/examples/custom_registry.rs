//! Extend the registry with an extra API and use it in an analysis.

use polycall::interop::{load_registry, DEFAULT_REGISTRY};
use polycall::model::{Language, NodeFlag};
use polycall::pipeline::analyze_sources;

fn main() -> anyhow::Result<()> {
    let text = format!("{DEFAULT_REGISTRY}runpy.run_path,Python,Python,FileBased,0,,,\n");
    match load_registry(&text) {
        Err(e) => println!("rejected as expected: {e}"),
        Ok(_) => println!("unexpectedly accepted"),
    }
    let text = format!("{DEFAULT_REGISTRY}subprocess.run,Python,Shell,Anonymous,0,,,\n");
    let registry = load_registry(&text)?;
    let sources = vec![(
        "deploy.py".to_string(),
        Language::Python,
        "cmd = \"make install\"\nsubprocess.run(cmd)\n".to_string(),
    )];
    let report = analyze_sources(&sources, &registry, "deploy.py")?;
    for n in report.graph.nodes().filter(|n| n.flag == NodeFlag::AnonymousResolved) {
        println!("{} runs {} code: {:?}", n.unit_id, n.display_language(), n.args);
    }
    Ok(())
}
