use std::path::{Path, PathBuf};
use std::process::Command;

use polycall::interop::ApiRegistry;
use polycall::merge::mcg_rows;
use polycall::model::Language;
use polycall::pipeline::{analyze_sources, run_pipeline, unit_dir_name, PipelineConfig, PipelineError, StageStatus};
use polycall::table::write_table;

fn fixture(dir: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(dir)
}

fn write(dir: &Path, name: &str, text: &str) {
    let p = dir.join(name);
    std::fs::create_dir_all(p.parent().unwrap()).unwrap();
    std::fs::write(p, text).unwrap();
}

#[test]
fn empty_codebase_is_a_config_error() {
    let src = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let err = run_pipeline(&PipelineConfig::new(vec![src.path().into()], "x.c", out.path())).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("no units found"));
}

#[test]
fn unknown_entry_and_bad_registry_are_config_errors() {
    let out = tempfile::tempdir().unwrap();
    let err = run_pipeline(&PipelineConfig::new(vec![fixture("ajax_cycle")], "nope.py", out.path())).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    let reg = out.path().join("reg.csv");
    std::fs::write(&reg, "api_name\nfoo\n").unwrap();
    let mut cfg = PipelineConfig::new(vec![fixture("ajax_cycle")], "verifyAccount.py", out.path());
    cfg.registry = Some(reg);
    assert_eq!(run_pipeline(&cfg).unwrap_err().exit_code(), 2);
}

#[test]
fn syntax_error_names_file_and_line() {
    let src = tempfile::tempdir().unwrap();
    write(src.path(), "ok.py", "f()\n");
    write(src.path(), "bad.c", "int main() {\n  foo(;\n}\n");
    let out = tempfile::tempdir().unwrap();
    let err = run_pipeline(&PipelineConfig::new(vec![src.path().into()], "ok.py", out.path())).unwrap_err();
    assert_eq!(err.exit_code(), 1);
    let PipelineError::Parse(errs) = &err else { panic!("{err}") };
    assert_eq!(errs.len(), 1);
    assert!(errs[0].unit.ends_with("bad.c"));
    assert_eq!(errs[0].line, 2);
    assert!(err.to_string().contains("bad.c:2:"));
}

#[test]
fn unsupported_constructs_only_warn() {
    let src = tempfile::tempdir().unwrap();
    write(src.path(), "m.py", "x += 1\nf()\n");
    let out = tempfile::tempdir().unwrap();
    let res = run_pipeline(&PipelineConfig::new(vec![src.path().into()], "m.py", out.path())).unwrap();
    assert_eq!(res.diagnostics.len(), 1);
    assert!(res.diagnostics[0].contains("m.py:1:"));
}

#[test]
fn intermediates_are_kept_per_unit() {
    let out = tempfile::tempdir().unwrap();
    let mut cfg = PipelineConfig::new(vec![fixture("c_py_js")], "main.c", out.path());
    cfg.emit.keep_intermediates = true;
    let res = run_pipeline(&cfg).unwrap();
    assert!(res.stages.iter().all(|s| s.status == StageStatus::Done));
    for unit in ["main.c", "S.py", "ui.js"] {
        let dir = out.path().join("units").join(unit_dir_name(unit));
        for t in ["unit.csv", "calls.csv", "assigns.csv", "rflow.csv", "mono.csv", "rdefs.csv", "calls.rewritten.csv"] {
            assert!(dir.join(t).is_file(), "{unit}/{t}");
        }
    }
    assert!(out.path().join("mcg.csv").is_file());
    assert!(out.path().join("graph.dot").is_file());
}

#[test]
fn emit_options_select_artifacts() {
    let out = tempfile::tempdir().unwrap();
    let mut cfg = PipelineConfig::new(vec![fixture("ajax_cycle")], "verifyAccount.py", out.path());
    cfg.emit.csv = false;
    let res = run_pipeline(&cfg).unwrap();
    assert!(res.mcg.is_none() && res.dot.is_some());
    assert!(!out.path().join("mcg.csv").exists());
    assert!(!out.path().join("units").exists());
}

#[test]
fn library_mode_matches_file_mode() {
    let dir = fixture("c_py_js");
    let out = tempfile::tempdir().unwrap();
    let res = run_pipeline(&PipelineConfig::new(vec![dir.clone()], "main.c", out.path())).unwrap();
    let sources: Vec<(String, Language, String)> = [("S.py", Language::Python), ("main.c", Language::C), ("ui.js", Language::JavaScript)]
        .into_iter()
        .map(|(f, l)| (f.to_string(), l, std::fs::read_to_string(dir.join(f)).unwrap()))
        .collect();
    let report = analyze_sources(&sources, &ApiRegistry::builtin(), "main.c").unwrap();
    assert_eq!(write_table(&mcg_rows(&report.graph)), std::fs::read(res.mcg.unwrap()).unwrap());
}

#[test]
fn nested_directories_give_path_unit_ids() {
    let src = tempfile::tempdir().unwrap();
    write(src.path(), "app/main.py", "import helpers\nrun()\n");
    write(src.path(), "lib/tool.js", "run();\n");
    write(src.path(), ".hidden/skip.py", "(\n");
    write(src.path(), "notes.txt", "not code");
    let out = tempfile::tempdir().unwrap();
    let res = run_pipeline(&PipelineConfig::new(vec![src.path().into()], "main.py", out.path())).unwrap();
    let ids: Vec<_> = res.units.iter().map(|u| u.unit_id.as_str()).collect();
    assert_eq!(ids, ["app/main.py", "lib/tool.js"]);
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_polycall"))
}

#[test]
fn cli_exit_codes_and_outputs() {
    let out = tempfile::tempdir().unwrap();
    let st = bin()
        .args(["analyze"])
        .arg(fixture("c_py_js"))
        .args(["--entry", "main.c", "--dot", "--jobs", "2", "--out"])
        .arg(out.path())
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    assert!(out.path().join("graph.dot").is_file());
    assert!(!out.path().join("mcg.csv").exists());

    let empty = tempfile::tempdir().unwrap();
    let o = bin().arg("analyze").arg(empty.path()).args(["--entry", "a.c", "--out"]).arg(out.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no units found"));

    let bad = tempfile::tempdir().unwrap();
    write(bad.path(), "x.py", "def f(:\n");
    let o = bin().arg("analyze").arg(bad.path()).args(["--entry", "x.py", "--out"]).arg(out.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("x.py:1:"));
}

#[test]
fn cli_config_file_mirrors_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("polycall.toml");
    std::fs::write(
        &cfg,
        format!(
            "roots = [{:?}]\nentry = \"verifyAccount.py\"\nout = \"out\"\ncsv = true\ndot = false\nkeep-intermediates = true\n",
            fixture("ajax_cycle")
        ),
    )
    .unwrap();
    let st = bin().args(["analyze", "--config"]).arg(&cfg).status().unwrap();
    assert_eq!(st.code(), Some(0));
    assert!(dir.path().join("out/mcg.csv").is_file());
    assert!(!dir.path().join("out/graph.dot").exists());
    assert!(dir.path().join("out/units").is_dir());
}
