//! End-to-end analysis: discover units, run the per-unit stages, merge and
//! render.
//!
//! Stages exchange data only through the CSV tables they write. Per-unit
//! stages of different units are independent, so they run concurrently;
//! the merge waits for all of them.

pub mod schedule;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::callgraph::UnitCalls;
use crate::dataflow::DataflowCtx;
use crate::dot::emit_dot;
use crate::frontend::{self, FrontendError, ParseError};
use crate::interop::{load_registry, rewrite_calls, ApiRegistry};
use crate::merge::{graph_from_mcg, mcg_rows, merge_from_entry, DefinitionIndex, MergeReport};
use crate::model::Language;
use crate::table::{read_table_file, write_table, write_table_file, AssignRow, FlowRow, McgRow, RdefRow, UnitRow};

pub use schedule::{Dag, DagError, StageFailure, StageRecord, StageStatus};

/// Which artifacts to write.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmitOptions {
    pub dot: bool,
    pub csv: bool,
    pub keep_intermediates: bool,
}

impl Default for EmitOptions {
    fn default() -> Self {
        EmitOptions {
            dot: true,
            csv: true,
            keep_intermediates: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub roots: Vec<PathBuf>,
    /// Extension (without dot) to language.
    pub languages: BTreeMap<String, Language>,
    /// Registry file; the shipped registry when absent.
    pub registry: Option<PathBuf>,
    pub out: PathBuf,
    /// Unit id, path suffix or file name of the unit rooting the graph.
    pub entry: String,
    pub emit: EmitOptions,
    pub jobs: usize,
}

pub fn default_languages() -> BTreeMap<String, Language> {
    [("c", Language::C), ("h", Language::C), ("py", Language::Python), ("js", Language::JavaScript)]
        .into_iter()
        .map(|(e, l)| (e.to_string(), l))
        .collect()
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl PipelineConfig {
    pub fn new(roots: Vec<PathBuf>, entry: impl Into<String>, out: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            roots,
            languages: default_languages(),
            registry: None,
            out: out.into(),
            entry: entry.into(),
            emit: EmitOptions::default(),
            jobs: default_jobs(),
        }
    }
}

/// The optional TOML config file. Keys mirror the command-line flags;
/// relative paths are taken from the file's directory.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ConfigFile {
    pub roots: Option<Vec<PathBuf>>,
    pub registry: Option<PathBuf>,
    pub entry: Option<String>,
    pub out: Option<PathBuf>,
    pub dot: Option<bool>,
    pub csv: Option<bool>,
    pub keep_intermediates: Option<bool>,
    pub jobs: Option<usize>,
    /// Extra or replacement extension mappings, e.g. `{ h = "C" }`.
    pub languages: Option<BTreeMap<String, String>>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: ConfigFile =
            toml::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: PathBuf| if p.is_relative() { base.join(p) } else { p };
        cfg.roots = cfg.roots.map(|r| r.into_iter().map(rebase).collect());
        cfg.registry = cfg.registry.map(rebase);
        cfg.out = cfg.out.map(rebase);
        Ok(cfg)
    }

    pub fn language_map(&self) -> Result<BTreeMap<String, Language>, PipelineError> {
        let mut map = default_languages();
        for (ext, lang) in self.languages.iter().flatten() {
            let lang: Language = lang
                .parse()
                .map_err(|e| PipelineError::Config(format!("languages.{ext}: {e}")))?;
            map.insert(ext.trim_start_matches('.').to_string(), lang);
        }
        Ok(map)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{}", join_lines(.0))]
    Parse(Vec<ParseError>),
    #[error("stage `{stage}` failed: {message}")]
    Stage { stage: String, message: String },
}

fn join_lines<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join("\n")
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 2,
            PipelineError::Parse(_) | PipelineError::Stage { .. } => 1,
        }
    }
}

/// A discovered source file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitSource {
    pub unit_id: String,
    pub language: Language,
    pub path: PathBuf,
}

/// Source files under `roots`, in unit-id order. A unit id is the path
/// relative to its root, with `/` separators.
pub fn discover_units(roots: &[PathBuf], languages: &BTreeMap<String, Language>) -> Result<Vec<UnitSource>, PipelineError> {
    let mut units: BTreeMap<String, UnitSource> = BTreeMap::new();
    for root in roots {
        if !root.exists() {
            return Err(PipelineError::Config(format!("root `{}` does not exist", root.display())));
        }
        let walker = walkdir::WalkDir::new(root)
            .sort_by_file_name()
            .into_iter()
            .filter_entry(|e| e.depth() == 0 || !e.file_name().to_string_lossy().starts_with('.'));
        for entry in walker {
            let entry = entry.map_err(|e| PipelineError::Config(e.to_string()))?;
            if !entry.file_type().is_file() {
                continue;
            }
            let path = entry.path();
            let Some(lang) = path
                .extension()
                .and_then(|e| e.to_str())
                .and_then(|e| languages.get(e))
            else {
                continue;
            };
            let rel = if path == root.as_path() {
                PathBuf::from(path.file_name().unwrap_or_default())
            } else {
                path.strip_prefix(root).unwrap_or(path).to_path_buf()
            };
            let unit_id = rel
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            if let Some(prev) = units.get(&unit_id) {
                return Err(PipelineError::Config(format!(
                    "unit id `{unit_id}` is used by both `{}` and `{}`",
                    prev.path.display(),
                    path.display()
                )));
            }
            units.insert(
                unit_id.clone(),
                UnitSource {
                    unit_id,
                    language: *lang,
                    path: path.to_path_buf(),
                },
            );
        }
    }
    Ok(units.into_values().collect())
}

/// Resolve `--entry` against the discovered units: exact id first, then a
/// unique path-suffix or file-name match.
pub fn resolve_entry<'a>(entry: &str, units: &'a [UnitSource]) -> Result<&'a UnitSource, PipelineError> {
    if let Some(u) = units.iter().find(|u| u.unit_id == entry) {
        return Ok(u);
    }
    let entry_norm = entry.trim_start_matches("./").replace('\\', "/");
    let hits: Vec<&UnitSource> = units
        .iter()
        .filter(|u| u.unit_id.ends_with(&format!("/{entry_norm}")) || u.path == Path::new(entry))
        .collect();
    match hits.as_slice() {
        [one] => Ok(one),
        [] => Err(PipelineError::Config(format!("entry unit `{entry}` not found"))),
        many => Err(PipelineError::Config(format!(
            "entry unit `{entry}` is ambiguous: {}",
            many.iter().map(|u| u.unit_id.as_str()).collect::<Vec<_>>().join(", ")
        ))),
    }
}

/// Directory name for a unit's intermediates: a readable slug plus a short
/// hash of the id, so distinct ids never collide.
pub fn unit_dir_name(unit_id: &str) -> String {
    let slug: String = unit_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' })
        .collect();
    let hash = Sha256::digest(unit_id.as_bytes());
    let hex: String = hash.iter().take(4).map(|b| format!("{b:02x}")).collect();
    format!("{slug}-{hex}")
}

/// Table files of one unit.
#[derive(Debug, Clone)]
pub struct UnitPaths {
    pub dir: PathBuf,
    pub unit: PathBuf,
    pub calls: PathBuf,
    pub assigns: PathBuf,
    pub rflow: PathBuf,
    pub mono: PathBuf,
    pub rdefs: PathBuf,
    pub rewritten: PathBuf,
}

impl UnitPaths {
    pub fn new(dir: PathBuf) -> Self {
        UnitPaths {
            unit: dir.join("unit.csv"),
            calls: dir.join("calls.csv"),
            assigns: dir.join("assigns.csv"),
            rflow: dir.join("rflow.csv"),
            mono: dir.join("mono.csv"),
            rdefs: dir.join("rdefs.csv"),
            rewritten: dir.join("calls.rewritten.csv"),
            dir,
        }
    }
}

fn stage_parse(src: &UnitSource, p: &UnitPaths) -> Result<Vec<String>, StageFailure> {
    let text = std::fs::read_to_string(&src.path)
        .map_err(|e| StageFailure::Other(format!("{}: {e}", src.path.display())))?;
    let parsed = match frontend::parse_unit_at(&text, src.language, &src.unit_id, &src.unit_id) {
        Ok(p) => p,
        Err(FrontendError::Parse(mut e)) => {
            e.unit = src.path.display().to_string();
            return Err(e.into());
        }
        Err(e) => return Err(StageFailure::Other(e.to_string())),
    };
    let unit = &parsed.unit;
    std::fs::create_dir_all(&p.dir)?;
    write_table_file(&p.unit, &[UnitCalls::from_unit(unit).unit_row()])?;
    write_table_file(&p.calls, &frontend::call_rows(unit))?;
    write_table_file(&p.assigns, &frontend::assign_rows(unit))?;
    write_table_file(&p.rflow, &frontend::flow_rows(unit))?;
    Ok(parsed
        .warnings
        .iter()
        .map(|w| format!("{}:{w}", src.path.display()))
        .collect())
}

fn read_unit(p: &UnitPaths, calls: &Path) -> Result<UnitCalls, StageFailure> {
    let rows: Vec<UnitRow> = read_table_file(&p.unit)?;
    let [row] = rows.as_slice() else {
        return Err(StageFailure::Other(format!("{}: expected one unit row", p.unit.display())));
    };
    Ok(UnitCalls::from_rows(row, read_table_file(calls)?))
}

fn stage_mono(p: &UnitPaths) -> Result<Vec<String>, StageFailure> {
    let unit = read_unit(p, &p.calls)?;
    let g = crate::callgraph::build_from_units(&unit);
    write_table_file(&p.mono, &mcg_rows(&g))?;
    Ok(vec![])
}

fn stage_rda(p: &UnitPaths) -> Result<Vec<String>, StageFailure> {
    let unit = read_unit(p, &p.calls)?;
    let assigns: Vec<AssignRow> = read_table_file(&p.assigns)?;
    let rflow: Vec<FlowRow> = read_table_file(&p.rflow)?;
    let ctx = DataflowCtx::from_rows(&assigns, &rflow, &unit.calls);
    write_table_file(&p.rdefs, &ctx.rdef_rows(&unit.unit_id, &assigns, &unit.calls))?;
    Ok(vec![])
}

fn stage_interop(p: &UnitPaths, registry: &Path) -> Result<Vec<String>, StageFailure> {
    let unit = read_unit(p, &p.calls)?;
    let assigns: Vec<AssignRow> = read_table_file(&p.assigns)?;
    let rflow: Vec<FlowRow> = read_table_file(&p.rflow)?;
    let rdefs: Vec<RdefRow> = read_table_file(&p.rdefs)?;
    let registry = std::fs::read_to_string(registry)?;
    let registry = load_registry(&registry).map_err(|e| StageFailure::Other(e.to_string()))?;
    let mut ctx = DataflowCtx::from_rows(&assigns, &rflow, &unit.calls);
    ctx.seed_rdefs(&rdefs);
    write_table_file(&p.rewritten, &rewrite_calls(&unit, &registry, &ctx))?;
    Ok(vec![])
}

fn stage_merge(units: &[UnitPaths], entry: &str, out: &Path) -> Result<Vec<String>, StageFailure> {
    let mut all = Vec::with_capacity(units.len());
    for p in units {
        all.push(read_unit(p, &p.rewritten)?);
    }
    let defs = DefinitionIndex::new(all);
    let report = merge_from_entry(entry, &defs)
        .ok_or_else(|| StageFailure::Other(format!("entry unit `{entry}` has no tables")))?;
    write_table_file(out, &mcg_rows(&report.graph))?;
    Ok(report.diagnostics)
}

fn stage_render(mcg: &Path, out: &Path) -> Result<Vec<String>, StageFailure> {
    let rows: Vec<McgRow> = read_table_file(mcg)?;
    let g = graph_from_mcg(&rows).map_err(|e| StageFailure::Other(format!("{}: {e}", mcg.display())))?;
    std::fs::write(out, emit_dot(&g))?;
    Ok(vec![])
}

/// What a successful run produced.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub mcg: Option<PathBuf>,
    pub dot: Option<PathBuf>,
    pub units: Vec<UnitSource>,
    pub stages: Vec<StageRecord>,
    /// Warnings from all stages, in stage order.
    pub diagnostics: Vec<String>,
}

/// Run the whole analysis. Errors carry the process exit code
/// ([`PipelineError::exit_code`]).
pub fn run_pipeline(config: &PipelineConfig) -> Result<PipelineOutput, PipelineError> {
    if config.roots.is_empty() {
        return Err(PipelineError::Config("no codebase roots given".into()));
    }
    let units = discover_units(&config.roots, &config.languages)?;
    if units.is_empty() {
        return Err(PipelineError::Config("no units found".into()));
    }
    let entry = resolve_entry(&config.entry, &units)?.unit_id.clone();
    let registry = match &config.registry {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| PipelineError::Config(format!("registry `{}`: {e}", path.display())))?;
            load_registry(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?
        }
        None => ApiRegistry::builtin(),
    };
    std::fs::create_dir_all(&config.out)
        .map_err(|e| PipelineError::Config(format!("output directory `{}`: {e}", config.out.display())))?;

    let temp;
    let work: PathBuf = if config.emit.keep_intermediates {
        config.out.clone()
    } else {
        temp = tempfile::tempdir().map_err(|e| PipelineError::Config(format!("temporary directory: {e}")))?;
        temp.path().to_path_buf()
    };
    let registry_path = work.join("registry.csv");
    std::fs::write(&registry_path, write_table(registry.entries()))
        .map_err(|e| PipelineError::Config(format!("`{}`: {e}", work.display())))?;

    let mut dag = Dag::new();
    let mut all_paths = Vec::with_capacity(units.len());
    for src in &units {
        let p = UnitPaths::new(work.join("units").join(unit_dir_name(&src.unit_id)));
        let id = &src.unit_id;
        {
            let (src, p) = (src.clone(), p.clone());
            dag.add(
                format!("parse:{id}"),
                vec![src.path.clone()],
                vec![p.unit.clone(), p.calls.clone(), p.assigns.clone(), p.rflow.clone()],
                move || stage_parse(&src, &p),
            );
        }
        {
            let p2 = p.clone();
            dag.add(
                format!("mono:{id}"),
                vec![p.unit.clone(), p.calls.clone()],
                vec![p.mono.clone()],
                move || stage_mono(&p2),
            );
        }
        {
            let p2 = p.clone();
            dag.add(
                format!("rda:{id}"),
                vec![p.unit.clone(), p.calls.clone(), p.assigns.clone(), p.rflow.clone()],
                vec![p.rdefs.clone()],
                move || stage_rda(&p2),
            );
        }
        {
            let (p2, reg) = (p.clone(), registry_path.clone());
            dag.add(
                format!("interop:{id}"),
                vec![
                    p.unit.clone(),
                    p.calls.clone(),
                    p.assigns.clone(),
                    p.rflow.clone(),
                    p.rdefs.clone(),
                    registry_path.clone(),
                ],
                vec![p.rewritten.clone()],
                move || stage_interop(&p2, &reg),
            );
        }
        all_paths.push(p);
    }
    let mcg = work.join("mcg.csv");
    let inputs = all_paths
        .iter()
        .flat_map(|p| [p.unit.clone(), p.rewritten.clone()])
        .collect();
    {
        let (paths, entry, mcg) = (all_paths.clone(), entry.clone(), mcg.clone());
        dag.add("merge", inputs, vec![mcg.clone()], move || stage_merge(&paths, &entry, &mcg));
    }
    let dot = work.join("graph.dot");
    if config.emit.dot {
        let (m, d) = (mcg.clone(), dot.clone());
        dag.add("render", vec![mcg.clone()], vec![dot.clone()], move || stage_render(&m, &d));
    }

    let report = dag.run(config.jobs).map_err(|e| PipelineError::Stage {
        stage: "schedule".into(),
        message: e.to_string(),
    })?;
    let diagnostics: Vec<String> = report.records.iter().flat_map(|r| r.diagnostics.clone()).collect();
    for d in &diagnostics {
        log::warn!("{d}");
    }
    if !report.failures.is_empty() {
        let mut parse = Vec::new();
        let mut other = None;
        for (stage, f) in report.failures {
            match f {
                StageFailure::Parse(e) => parse.push(e),
                StageFailure::Other(message) => {
                    other.get_or_insert(PipelineError::Stage { stage, message });
                }
            }
        }
        return Err(if parse.is_empty() {
            other.expect("a failure was recorded")
        } else {
            PipelineError::Parse(parse)
        });
    }

    let publish = |from: &Path, name: &str| -> Result<PathBuf, PipelineError> {
        let to = config.out.join(name);
        if from != to {
            std::fs::copy(from, &to).map_err(|e| PipelineError::Stage {
                stage: "publish".into(),
                message: format!("`{}`: {e}", to.display()),
            })?;
        }
        Ok(to)
    };
    let mcg_out = if config.emit.csv { Some(publish(&mcg, "mcg.csv")?) } else { None };
    let dot_out = if config.emit.dot { Some(publish(&dot, "graph.dot")?) } else { None };
    Ok(PipelineOutput {
        mcg: mcg_out,
        dot: dot_out,
        units,
        stages: report.records,
        diagnostics,
    })
}

/// In-memory counterpart of the pipeline: same stages, no files.
pub fn analyze_sources(
    sources: &[(String, Language, String)],
    registry: &ApiRegistry,
    entry: &str,
) -> Result<MergeReport, PipelineError> {
    let mut units = Vec::with_capacity(sources.len());
    let mut errors = Vec::new();
    for (unit_id, lang, text) in sources {
        match frontend::parse_unit_at(text, *lang, unit_id, unit_id) {
            Ok(parsed) => {
                let u = parsed.unit;
                let assigns = frontend::assign_rows(&u);
                let rflow = frontend::flow_rows(&u);
                let mut calls = UnitCalls::from_unit(&u);
                let mut ctx = DataflowCtx::from_rows(&assigns, &rflow, &calls.calls);
                let rdefs = ctx.rdef_rows(unit_id, &assigns, &calls.calls);
                ctx.seed_rdefs(&rdefs);
                calls.calls = rewrite_calls(&calls, registry, &ctx);
                units.push(calls);
            }
            Err(FrontendError::Parse(e)) => errors.push(e),
            Err(e) => return Err(PipelineError::Config(e.to_string())),
        }
    }
    if !errors.is_empty() {
        return Err(PipelineError::Parse(errors));
    }
    let defs = DefinitionIndex::new(units);
    merge_from_entry(entry, &defs).ok_or_else(|| PipelineError::Config(format!("entry unit `{entry}` not found")))
}
