//! Parse one Python file and print its labelled statements and the
//! extracted call, assignment and flow tables.

use polycall::frontend::{assign_rows, call_rows, flow_rows, parse_unit};
use polycall::model::Language;
use polycall::table::write_table;

const SOURCE: &str = r#"
def greet(name):
    msg = "hello " + name
    print(msg)

who = "world"
if loud:
    who = "WORLD"
greet(who)
"#;

fn main() -> anyhow::Result<()> {
    let parsed = parse_unit(SOURCE, Language::Python, "greet.py")?;
    let unit = &parsed.unit;
    for b in &unit.blocks {
        println!("{:<16} {:<10?} -> {:?}", b.label.to_string(), b.kind, b.successors);
    }
    for w in &parsed.warnings {
        println!("warning: {w}");
    }
    println!("\n{}", String::from_utf8(write_table(&call_rows(unit)))?);
    println!("{}", String::from_utf8(write_table(&assign_rows(unit)))?);
    println!("{}", String::from_utf8(write_table(&flow_rows(unit)))?);
    Ok(())
}
