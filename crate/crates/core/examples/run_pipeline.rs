//! Run the file-based pipeline over a fixture directory.
//!
//! `cargo run --example run_pipeline -- [ROOT] [ENTRY]`

use std::path::PathBuf;

use polycall::pipeline::{run_pipeline, PipelineConfig};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let root = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/c_py_js"));
    let entry = args.next().unwrap_or_else(|| "main.c".into());
    let out = tempfile::tempdir()?;
    let mut config = PipelineConfig::new(vec![root], entry, out.path());
    config.emit.keep_intermediates = true;
    let result = run_pipeline(&config).map_err(|e| anyhow::anyhow!("{e} (exit {})", e.exit_code()))?;
    for stage in &result.stages {
        println!("{:<28} {:?}", stage.name, stage.status);
    }
    for d in &result.diagnostics {
        println!("warning: {d}");
    }
    if let Some(mcg) = &result.mcg {
        print!("\n{}", std::fs::read_to_string(mcg)?);
    }
    Ok(())
}
