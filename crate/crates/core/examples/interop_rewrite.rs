//! Rewrite interoperability calls of one unit with the shipped registry.

use polycall::callgraph::UnitCalls;
use polycall::dataflow::DataflowCtx;
use polycall::frontend::parse_unit;
use polycall::interop::{rewrite_calls, ApiRegistry};
use polycall::model::Language;

const SOURCE: &str = r#"
int main(int argc, char **argv) {
    char *code = "print('a')";
    if (argc > 1) {
        code = "print('b')";
    }
    PyRun_SimpleString(code);
    PyRun_SimpleString(argv[1]);
    PyRun_SimpleFile(fp, "tool.py");
    PyObject *fn = PyObject_GetAttrString(module, "scale");
    PyObject *args = PyTuple_New(1);
    PyTuple_SetItem(args, 0, value);
    PyObject_CallObject(fn, args);
}
"#;

fn main() -> anyhow::Result<()> {
    let unit = parse_unit(SOURCE, Language::C, "main.c")?.unit;
    let calls = UnitCalls::from_unit(&unit);
    let ctx = DataflowCtx::from_unit(&unit);
    let registry = ApiRegistry::builtin();
    for row in rewrite_calls(&calls, &registry, &ctx) {
        let Some(target) = row.target_language else { continue };
        let args: Vec<String> = row.args.iter().map(ToString::to_string).collect();
        println!("{} -> {target}: {}({}) [{}]", row.label, row.callee, args.join(", "), row.flag);
    }
    Ok(())
}
