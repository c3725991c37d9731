use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use polycall::pipeline::{run_pipeline, ConfigFile, EmitOptions, PipelineConfig, PipelineError};

#[derive(Parser)]
#[command(version, about = "Multilingual call graphs for C, Python and JavaScript")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a codebase and write mcg.csv and/or graph.dot.
    Analyze(AnalyzeArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Files or directories to scan.
    roots: Vec<PathBuf>,
    /// Interop API registry (CSV); the shipped registry when omitted.
    #[arg(long)]
    registry: Option<PathBuf>,
    /// Unit whose entry roots the graph (unit id, path suffix or file name).
    #[arg(long)]
    entry: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write graph.dot.
    #[arg(long)]
    dot: bool,
    /// Write mcg.csv.
    #[arg(long)]
    csv: bool,
    /// Keep every intermediate table under the output directory.
    #[arg(long)]
    keep_intermediates: bool,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// TOML file with the same keys as these flags; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn build_config(a: AnalyzeArgs) -> Result<PipelineConfig, PipelineError> {
    let file = match &a.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let missing = |flag: &str| PipelineError::Config(format!("--{flag} is required"));
    let roots = if a.roots.is_empty() { file.roots.clone().unwrap_or_default() } else { a.roots };
    let entry = a.entry.or(file.entry.clone()).ok_or_else(|| missing("entry"))?;
    let out = a.out.or(file.out.clone()).ok_or_else(|| missing("out"))?;
    let mut config = PipelineConfig::new(roots, entry, out);
    config.languages = file.language_map()?;
    config.registry = a.registry.or(file.registry.clone());
    let (dot, csv) = if a.dot || a.csv {
        (a.dot, a.csv)
    } else {
        (file.dot.unwrap_or(true), file.csv.unwrap_or(true))
    };
    config.emit = EmitOptions {
        dot,
        csv,
        keep_intermediates: a.keep_intermediates || file.keep_intermediates.unwrap_or(false),
    };
    if let Some(j) = a.jobs.or(file.jobs) {
        config.jobs = j.max(1);
    }
    Ok(config)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let Command::Analyze(args) = Cli::parse().command;
    let result = build_config(args).and_then(|c| run_pipeline(&c));
    match result {
        Ok(out) => {
            for p in out.mcg.iter().chain(out.dot.iter()) {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
