//! Schedule file-connected stages with the pipeline's DAG runner.

use polycall::pipeline::{Dag, StageStatus};

fn main() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    let mut dag = Dag::new();
    let parts: Vec<_> = (0..3).map(|i| dir.path().join(format!("part{i}.txt"))).collect();
    for (i, p) in parts.iter().enumerate() {
        let p = p.clone();
        dag.add(format!("produce:{i}"), vec![], vec![p.clone()], move || {
            std::fs::write(&p, format!("{i}\n"))?;
            Ok(vec![])
        });
    }
    let joined = dir.path().join("all.txt");
    let (ins, out) = (parts.clone(), joined.clone());
    dag.add("join", parts, vec![joined.clone()], move || {
        let mut text = String::new();
        for p in &ins {
            text.push_str(&std::fs::read_to_string(p)?);
        }
        std::fs::write(&out, text)?;
        Ok(vec![format!("joined {} parts", ins.len())])
    });
    let report = dag.run(3)?;
    for r in &report.records {
        assert_eq!(r.status, StageStatus::Done);
        println!("{:<10} inputs={} outputs={} {:?}", r.name, r.inputs.len(), r.outputs.len(), r.diagnostics);
    }
    print!("{}", std::fs::read_to_string(joined)?);
    Ok(())
}
