//! A small DAG scheduler for file-connected stages.
//!
//! A stage depends on every stage that produces one of its inputs. Stages
//! run on a fixed pool of threads; a stage starts only when all of its
//! producers have finished successfully.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::sync::{Condvar, Mutex};

use crate::frontend::ParseError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StageStatus {
    Pending,
    Done,
    Failed(String),
    /// Not run because a producer failed.
    Skipped,
}

#[derive(Debug, Clone)]
pub struct StageRecord {
    pub name: String,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub status: StageStatus,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum StageFailure {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Other(String),
}

impl From<crate::table::TableError> for StageFailure {
    fn from(e: crate::table::TableError) -> Self {
        StageFailure::Other(e.to_string())
    }
}

impl From<std::io::Error> for StageFailure {
    fn from(e: std::io::Error) -> Self {
        StageFailure::Other(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DagError {
    #[error("`{0}` is produced by more than one stage")]
    DuplicateOutput(PathBuf),
    #[error("stage dependencies form a cycle through `{0}`")]
    Cycle(String),
}

type Work = Box<dyn FnOnce() -> Result<Vec<String>, StageFailure> + Send>;

/// Stages and the work they do.
#[derive(Default)]
pub struct Dag {
    records: Vec<StageRecord>,
    work: Vec<Work>,
}

/// Outcome of a run: final records plus the failures, in stage order.
pub struct RunReport {
    pub records: Vec<StageRecord>,
    pub failures: Vec<(String, StageFailure)>,
}

impl Dag {
    pub fn new() -> Self {
        Dag::default()
    }

    pub fn add<F>(&mut self, name: impl Into<String>, inputs: Vec<PathBuf>, outputs: Vec<PathBuf>, run: F)
    where
        F: FnOnce() -> Result<Vec<String>, StageFailure> + Send + 'static,
    {
        self.records.push(StageRecord {
            name: name.into(),
            inputs,
            outputs,
            status: StageStatus::Pending,
            diagnostics: Vec::new(),
        });
        self.work.push(Box::new(run));
    }

    pub fn records(&self) -> &[StageRecord] {
        &self.records
    }

    /// For each stage, the stages producing its inputs.
    pub fn dependencies(&self) -> Result<Vec<BTreeSet<usize>>, DagError> {
        let mut producer: BTreeMap<&PathBuf, usize> = BTreeMap::new();
        for (i, r) in self.records.iter().enumerate() {
            for o in &r.outputs {
                if producer.insert(o, i).is_some() {
                    return Err(DagError::DuplicateOutput(o.clone()));
                }
            }
        }
        let deps: Vec<BTreeSet<usize>> = self
            .records
            .iter()
            .map(|r| r.inputs.iter().filter_map(|i| producer.get(i).copied()).collect())
            .collect();
        // Kahn's algorithm, only to detect cycles
        let mut indeg: Vec<usize> = deps.iter().map(BTreeSet::len).collect();
        let mut ready: Vec<usize> = (0..deps.len()).filter(|&i| indeg[i] == 0).collect();
        let mut seen = 0;
        while let Some(i) = ready.pop() {
            seen += 1;
            for (j, d) in deps.iter().enumerate() {
                if d.contains(&i) {
                    indeg[j] -= 1;
                    if indeg[j] == 0 {
                        ready.push(j);
                    }
                }
            }
        }
        if seen < deps.len() {
            let stuck = (0..deps.len()).find(|&i| indeg[i] > 0).unwrap();
            return Err(DagError::Cycle(self.records[stuck].name.clone()));
        }
        Ok(deps)
    }

    /// Run every stage on `jobs` threads (at least one).
    pub fn run(self, jobs: usize) -> Result<RunReport, DagError> {
        let deps = self.dependencies()?;
        let n = deps.len();
        let mut dependents = vec![Vec::new(); n];
        for (i, d) in deps.iter().enumerate() {
            for &p in d {
                dependents[p].push(i);
            }
        }
        struct State {
            records: Vec<StageRecord>,
            work: Vec<Option<Work>>,
            waiting: Vec<usize>,
            ready: BTreeSet<usize>,
            finished: usize,
            failures: Vec<(usize, StageFailure)>,
        }
        let state = Mutex::new(State {
            records: self.records,
            work: self.work.into_iter().map(Some).collect(),
            waiting: deps.iter().map(BTreeSet::len).collect(),
            ready: (0..n).filter(|&i| deps[i].is_empty()).collect(),
            finished: 0,
            failures: Vec::new(),
        });
        let wake = Condvar::new();

        let worker = || loop {
            let mut st = state.lock().unwrap();
            let (i, work) = loop {
                if st.finished == n {
                    return;
                }
                if let Some(i) = st.ready.pop_first() {
                    let w = st.work[i].take().expect("stage runs once");
                    break (i, w);
                }
                st = wake.wait(st).unwrap();
            };
            let missing: Vec<PathBuf> = st.records[i].inputs.iter().filter(|p| !p.exists()).cloned().collect();
            drop(st);

            let result = if missing.is_empty() {
                work()
            } else {
                Err(StageFailure::Other(format!("missing inputs {missing:?}")))
            };

            let mut st = state.lock().unwrap();
            st.finished += 1;
            match result {
                Ok(diags) => {
                    st.records[i].status = StageStatus::Done;
                    st.records[i].diagnostics = diags;
                    for &d in &dependents[i] {
                        st.waiting[d] -= 1;
                        if st.waiting[d] == 0 && st.records[d].status == StageStatus::Pending {
                            st.ready.insert(d);
                        }
                    }
                }
                Err(e) => {
                    st.records[i].status = StageStatus::Failed(e.to_string());
                    st.failures.push((i, e));
                    let mut stack = dependents[i].clone();
                    while let Some(d) = stack.pop() {
                        if st.records[d].status == StageStatus::Pending {
                            st.records[d].status = StageStatus::Skipped;
                            st.work[d] = None;
                            st.ready.remove(&d);
                            st.finished += 1;
                            stack.extend(dependents[d].iter().copied());
                        }
                    }
                }
            }
            wake.notify_all();
        };

        std::thread::scope(|s| {
            for _ in 0..jobs.max(1).min(n.max(1)) {
                s.spawn(worker);
            }
        });

        let mut st = state.into_inner().unwrap();
        st.failures.sort_by_key(|(i, _)| *i);
        let names: Vec<String> = st.records.iter().map(|r| r.name.clone()).collect();
        Ok(RunReport {
            failures: st.failures.into_iter().map(|(i, e)| (names[i].clone(), e)).collect(),
            records: st.records,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::{Arc, Mutex};

    fn touch(p: &std::path::Path) -> Result<Vec<String>, StageFailure> {
        std::fs::write(p, "x")?;
        Ok(vec![])
    }

    #[test]
    fn producers_finish_before_consumers() {
        let dir = tempfile::tempdir().unwrap();
        let order = Arc::new(Mutex::new(Vec::new()));
        let mut dag = Dag::new();
        let join = dir.path().join("join");
        let mut ins = Vec::new();
        for k in 0..6 {
            let out = dir.path().join(format!("p{k}"));
            ins.push(out.clone());
            let o = order.clone();
            dag.add(format!("p{k}"), vec![], vec![out.clone()], move || {
                o.lock().unwrap().push(format!("p{k}"));
                touch(&out)
            });
        }
        let o = order.clone();
        let j = join.clone();
        dag.add("join", ins, vec![join.clone()], move || {
            o.lock().unwrap().push("join".into());
            touch(&j)
        });
        let report = dag.run(4).unwrap();
        assert!(report.failures.is_empty());
        assert_eq!(order.lock().unwrap().last().unwrap(), "join");
        assert!(report.records.iter().all(|r| r.status == StageStatus::Done));
    }

    #[test]
    fn failure_skips_dependents_only() {
        let dir = tempfile::tempdir().unwrap();
        let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
        let mut dag = Dag::new();
        dag.add("a", vec![], vec![a.clone()], || Err(StageFailure::Other("boom".into())));
        dag.add("b", vec![a.clone()], vec![b.clone()], move || touch(&b));
        let c2 = c.clone();
        dag.add("c", vec![], vec![c.clone()], move || touch(&c2));
        let report = dag.run(2).unwrap();
        let status: Vec<_> = report.records.iter().map(|r| r.status.clone()).collect();
        assert_eq!(
            status,
            vec![StageStatus::Failed("boom".into()), StageStatus::Skipped, StageStatus::Done]
        );
        assert_eq!(report.failures.len(), 1);
        assert!(c.exists());
    }

    #[test]
    fn cycles_and_duplicates_rejected() {
        let mut dag = Dag::new();
        dag.add("a", vec!["y".into()], vec!["x".into()], || Ok(vec![]));
        dag.add("b", vec!["x".into()], vec!["y".into()], || Ok(vec![]));
        assert!(matches!(dag.run(1), Err(DagError::Cycle(_))));
        let mut dag = Dag::new();
        dag.add("a", vec![], vec!["x".into()], || Ok(vec![]));
        dag.add("b", vec![], vec!["x".into()], || Ok(vec![]));
        assert!(matches!(dag.run(1), Err(DagError::DuplicateOutput(_))));
    }
}
