//! Reaching definitions and static string evaluation on a small C function.

use polycall::dataflow::DataflowCtx;
use polycall::frontend::parse_unit;
use polycall::model::Language;

const SOURCE: &str = r#"
void run(int argc) {
    char *mod = "json";
    char *code = "import os";
    if (argc > 1) {
        code = "import sys";
    }
    while (argc > 2) {
        mod = argv[argc];
    }
    PyRun_SimpleString(code);
    load(mod);
}
"#;

fn main() -> anyhow::Result<()> {
    let unit = parse_unit(SOURCE, Language::C, "run.c")?.unit;
    let ctx = DataflowCtx::from_unit(&unit);
    for block in unit.blocks_in("run") {
        for call in &block.calls {
            let at = block.label.index;
            for arg in &call.args {
                let vars: Vec<String> = arg.referenced_vars().into_iter().collect();
                let defs = ctx.reaching_definitions("run", &vars, at)?;
                let defs: Vec<String> = defs.entries.iter().map(|(v, d)| format!("{v}@{d}")).collect();
                println!(
                    "{}({arg}) at {at}: reaching {:?}, value {:?}",
                    call.target,
                    defs,
                    ctx.eval_at("run", arg, at)
                );
            }
        }
    }
    let flow = ctx.scope("run").expect("scope exists");
    println!("fixpoint passes: {}", flow.iterations());
    Ok(())
}
