//! Persisted runs: start, resume and report, on top of the config, the
//! store and the engine.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::config::{Config, ConfigError};
use crate::engine::{run_network, stream_specs, EngineError, NetworkRun, RunControl};
use crate::metrics::PerformanceCurve;
use crate::report::{apply_curves, emit_report, RunReport};
use crate::store::{RunHandle, RunStore, StoreError};

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// A finished (or halted) pass over a persisted run.
#[derive(Debug)]
pub struct Session {
    pub handle: RunHandle,
    pub run: NetworkRun,
}

pub fn default_run_id() -> String {
    format!("run-{}", crate::protocol::message::now_ms())
}

/// Creates the run directory and plays every stream.
pub fn start_run(
    store: &RunStore,
    config: &Config,
    run_id: &str,
    simulate: bool,
    control: &RunControl,
) -> Result<Session, SessionError> {
    let engine = config.engine(simulate)?;
    let mut net = config.network()?;
    let handle = store.create(run_id, &config.to_toml(), &config.hash())?;
    let run = run_network(&engine, &mut net, run_id, BTreeMap::new(), &handle, control)?;
    run.report.write_to(&handle.report_dir()).map_err(|e| StoreError::Io {
        path: handle.report_dir().display().to_string(),
        source: e,
    })?;
    Ok(Session { handle, run })
}

/// Loads a run's config snapshot. When `given` is supplied it must hash to
/// the value recorded at creation.
pub fn stored_config(handle: &RunHandle, given: Option<&Config>) -> Result<Config, SessionError> {
    let snapshot = Config::parse(&handle.config_toml()?, "config.toml")?;
    handle.check_config(&snapshot.hash())?;
    if let Some(c) = given {
        handle.check_config(&c.hash())?;
    }
    Ok(snapshot)
}

/// Continues every stream from its committed rounds. Streams already in a
/// final state are left alone; failed ones are retried.
pub fn resume_run(
    store: &RunStore,
    run_id: &str,
    given: Option<&Config>,
    simulate: bool,
    control: &RunControl,
) -> Result<Session, SessionError> {
    let handle = store.open(run_id)?;
    let config = stored_config(&handle, given)?;
    let engine = config.engine(simulate)?;
    let mut net = config.network()?;
    let mut prior = BTreeMap::new();
    for spec in stream_specs(&net)? {
        prior.insert(spec.stream_id.clone(), handle.load_progress(&spec, &engine.options)?);
    }
    let run = run_network(&engine, &mut net, run_id, prior, &handle, control)?;
    run.report.write_to(&handle.report_dir()).map_err(|e| StoreError::Io {
        path: handle.report_dir().display().to_string(),
        source: e,
    })?;
    Ok(Session { handle, run })
}

/// Rebuilds the report of a stored run without calling any backend.
pub fn load_report(store: &RunStore, run_id: &str) -> Result<RunReport, SessionError> {
    let handle = store.open(run_id)?;
    let config = stored_config(&handle, None)?;
    let mut net = config.network()?;
    let states = handle.load_states()?;
    let mut curves: Vec<PerformanceCurve> = Vec::new();
    for spec in stream_specs(&net)? {
        let mut p = handle.load_progress(&spec, &config.engine)?;
        // Statuses not derivable from rounds (failed, exhausted) come from
        // the state file.
        if let Some(s) = states.get(&spec.stream_id) {
            if s.rounds == p.rounds && !p.status.is_final() {
                p.status = s.status.clone();
            }
        }
        curves.push(p.curve().map_err(|e| EngineError::Invalid(e.to_string()))?);
    }
    apply_curves(&mut net, &curves).map_err(|e| EngineError::Invalid(e.to_string()))?;
    Ok(emit_report(run_id, &net, &curves))
}

#[cfg(test)]
mod tests {
    use super::*;

    const CONFIG: &str = r#"
[engine]
q_total = 3

[backends.sim]
kind = "scripted"
default = { kind = "threshold", k = 2 }

[backends.gen]
kind = "scripted"

[network]
topology = "line"
nodes = [
  { node_id = "E", model_ref = "sim", role = "interviewee" },
  { node_id = "I1", model_ref = "gen", role = "interviewer", task_binding = "Arith_oper" },
  { node_id = "I2", model_ref = "gen", role = "interviewer", task_binding = "SPS_node" },
]
routes = [{ from = "E", to = "I1" }, { from = "I1", to = "I2" }]
"#;

    #[test]
    fn run_resume_report() {
        let tmp = tempfile::tempdir().unwrap();
        let store = RunStore::new(tmp.path());
        let config = Config::parse(CONFIG, "c.toml").unwrap();
        let full = start_run(&store, &config, "full", false, &RunControl::new()).unwrap();
        let part = start_run(&store, &config, "part", false, &RunControl::halt_after_rounds(7)).unwrap();
        assert!(part.run.interrupted);
        let prefix = std::fs::read(part.handle.rounds_path("E->I1")).unwrap();
        let done = resume_run(&store, "part", None, false, &RunControl::new()).unwrap();
        assert_eq!(done.run.curves, full.run.curves);
        let after = std::fs::read(done.handle.rounds_path("E->I1")).unwrap();
        assert_eq!(&after[..prefix.len()], &prefix[..]);
        let report = load_report(&store, "part").unwrap();
        assert_eq!(report.rows, full.run.report.rows);
        let again = resume_run(&store, "full", None, false, &RunControl::new()).unwrap();
        assert_eq!(again.run.curves, full.run.curves);
    }

    #[test]
    fn changed_config_conflicts() {
        let tmp = tempfile::tempdir().unwrap();
        let store = RunStore::new(tmp.path());
        let config = Config::parse(CONFIG, "c.toml").unwrap();
        start_run(&store, &config, "r", false, &RunControl::halt_after_rounds(2)).unwrap();
        let changed = Config::parse(&CONFIG.replace("q_total = 3", "q_total = 4"), "c.toml").unwrap();
        let err = resume_run(&store, "r", Some(&changed), false, &RunControl::new()).unwrap_err();
        assert!(matches!(err, SessionError::Store(StoreError::ConfigConflict { .. })));
        assert!(matches!(
            load_report(&store, "missing"),
            Err(SessionError::Store(StoreError::RunNotFound(_)))
        ));
    }
}
