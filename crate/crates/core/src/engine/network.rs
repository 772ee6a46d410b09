//! Runs every activated stream route of a network. A route starts once the
//! streams feeding its `from` node are done, so its interviewer sees their
//! dialogue in the digest.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::stream::{run_stream, StreamOutcome, StreamProgress, StreamSpec};
use super::{Engine, EngineError, RunControl, StreamSink};
use crate::metrics::{PerformanceCurve, StreamStatus};
use crate::network::EvalNetwork;
use crate::protocol::{aggregate_messages, Digest, Transcript};
use crate::report::{apply_curves, emit_report, RunReport};

#[derive(Debug, Clone, PartialEq)]
pub struct StreamFailure {
    pub stream_id: String,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct NetworkRun {
    pub report: RunReport,
    pub curves: Vec<PerformanceCurve>,
    pub streams: BTreeMap<String, StreamProgress>,
    pub failures: Vec<StreamFailure>,
    /// Some stream was halted by the run control.
    pub interrupted: bool,
}

/// Stream specs for the activated stream routes, in traversal order.
pub fn stream_specs(net: &EvalNetwork) -> Result<Vec<StreamSpec>, EngineError> {
    let mut specs = Vec::new();
    for i in net.traversal_order() {
        let r = &net.routes()[i];
        if !r.activated || !net.is_stream_route(r) {
            continue;
        }
        let id = r.id();
        let interviewer = net.node(&r.to).expect("validated route").clone();
        let task = interviewer
            .task_binding
            .ok_or_else(|| EngineError::Invalid(format!("{id}: interviewer has no task")))?;
        let interviewee = net
            .interviewee_for(r)
            .ok_or_else(|| EngineError::Invalid(format!("{id}: no interviewee upstream")))?
            .clone();
        specs.push(StreamSpec {
            stream_id: id,
            task,
            interviewee,
            interviewer,
            supervisor: net.supervisor().cloned(),
        });
    }
    Ok(specs)
}

/// Runs or resumes every activated stream. `prior` holds progress folded
/// from a stored run; streams missing from it start fresh. Route weights
/// of `net` are finalized from the resulting curves.
pub fn run_network(
    engine: &Engine,
    net: &mut EvalNetwork,
    run_id: &str,
    mut prior: BTreeMap<String, StreamProgress>,
    sink: &dyn StreamSink,
    control: &RunControl,
) -> Result<NetworkRun, EngineError> {
    engine.options.validate().map_err(EngineError::Invalid)?;
    let specs = stream_specs(net)?;
    let upstream: BTreeMap<String, Vec<String>> = specs
        .iter()
        .map(|s| {
            let r = net.route(&s.stream_id).expect("spec from route");
            (s.stream_id.clone(), net.upstream_of(r).iter().map(|u| u.id()).collect())
        })
        .collect();

    let mut done: BTreeMap<String, StreamOutcome> = BTreeMap::new();
    let mut pending: Vec<&StreamSpec> = specs.iter().collect();
    while !pending.is_empty() {
        let (ready, blocked): (Vec<&StreamSpec>, Vec<&StreamSpec>) = pending
            .into_iter()
            .partition(|s| upstream[&s.stream_id].iter().all(|u| done.contains_key(u)));
        if ready.is_empty() {
            return Err(EngineError::Invalid("stream routes form a cycle".into()));
        }
        let jobs: Vec<(&StreamSpec, Digest, StreamProgress)> = ready
            .into_iter()
            .map(|s| {
                let ups: Vec<&Transcript> = upstream[&s.stream_id]
                    .iter()
                    .map(|u| &done[u].progress.transcript)
                    .collect();
                let digest = aggregate_messages(&ups, engine.options.digest());
                let progress = prior
                    .remove(&s.stream_id)
                    .unwrap_or_else(|| StreamProgress::new(s, &engine.options));
                (s, digest, progress)
            })
            .collect();
        for (id, outcome) in run_wave(engine, jobs, sink, control)? {
            done.insert(id, outcome);
        }
        pending = blocked;
    }

    let mut curves = Vec::new();
    let mut failures = Vec::new();
    let mut interrupted = false;
    let mut streams = BTreeMap::new();
    for s in &specs {
        let out = done.remove(&s.stream_id).expect("every spec ran");
        interrupted |= out.halted;
        if let StreamStatus::Failed(reason) = &out.progress.status {
            failures.push(StreamFailure {
                stream_id: s.stream_id.clone(),
                reason: reason.clone(),
            });
        }
        curves.push(out.progress.curve().map_err(|e| EngineError::Invalid(e.to_string()))?);
        streams.insert(s.stream_id.clone(), out.progress);
    }
    apply_curves(net, &curves).map_err(|e| EngineError::Invalid(e.to_string()))?;
    let report = emit_report(run_id, net, &curves);
    Ok(NetworkRun {
        report,
        curves,
        streams,
        failures,
        interrupted,
    })
}

type Job<'a> = (&'a StreamSpec, Digest, StreamProgress);

fn run_wave(
    engine: &Engine,
    jobs: Vec<Job<'_>>,
    sink: &dyn StreamSink,
    control: &RunControl,
) -> Result<Vec<(String, StreamOutcome)>, EngineError> {
    let jobs: Vec<Mutex<Option<Job<'_>>>> = jobs.into_iter().map(|j| Mutex::new(Some(j))).collect();
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<(usize, Result<StreamOutcome, EngineError>)>> = Mutex::new(Vec::new());
    let workers = engine.options.workers.min(jobs.len()).max(1);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(slot) = jobs.get(i) else { break };
                let (spec, digest, progress) = slot.lock().expect("job lock").take().expect("taken once");
                let out = run_stream(engine, spec, &digest, progress, sink, control);
                if out.is_err() {
                    control.cancel();
                }
                results.lock().expect("result lock").push((i, out));
            });
        }
    });
    let mut results = results.into_inner().expect("result lock");
    results.sort_by_key(|(i, _)| *i);
    let mut outs = Vec::with_capacity(results.len());
    for (_, r) in results {
        let out = r?;
        outs.push((out.progress.stream_id.clone(), out));
    }
    Ok(outs)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::backend::{CapabilityProfile, ScriptedBackend};
    use crate::engine::{Backends, EngineOptions, NullSink};
    use crate::network::{build_network, AgentNode, EvalRoute, NetworkConfig, TopologyKind};
    use crate::tasks::{Generator, TaskId};

    fn engine() -> Engine {
        Engine {
            generator: Generator::default(),
            backends: Backends::new()
                .with(
                    "strong",
                    Arc::new(ScriptedBackend::new("strong", CapabilityProfile::threshold(4))),
                )
                .with(
                    "weak",
                    Arc::new(ScriptedBackend::new("weak", CapabilityProfile::threshold(2))),
                )
                .with(
                    "gen",
                    Arc::new(ScriptedBackend::new("gen", CapabilityProfile::default())),
                ),
            runner: None,
            options: EngineOptions {
                q_total: 3,
                ..EngineOptions::default()
            },
        }
    }

    fn line() -> EvalNetwork {
        build_network(&NetworkConfig {
            topology: TopologyKind::Line,
            nodes: vec![
                AgentNode::interviewee("E", "weak"),
                AgentNode::interviewer("I1", "gen", TaskId::ArithOper),
                AgentNode::interviewer("I2", "gen", TaskId::Btt),
            ],
            routes: vec![EvalRoute::new("E", "I1"), EvalRoute::new("I1", "I2")],
            known_models: None,
        })
        .unwrap()
    }

    #[test]
    fn line_runs_downstream_with_digest() {
        let e = engine();
        let mut net = line();
        let run = run_network(&e, &mut net, "t", BTreeMap::new(), &NullSink, &RunControl::new()).unwrap();
        assert!(run.failures.is_empty());
        assert_eq!(run.curves.len(), 2);
        for c in &run.curves {
            assert_eq!(c.cell(), "2/2", "{}", c.route);
        }
        assert_eq!(run.report.energy, Some(4.0));
        let down = &run.streams["I1->I2"].transcript.messages[0];
        assert!(down.body.contains("E->I1"));
    }

    #[test]
    fn deactivated_routes_are_skipped() {
        let e = engine();
        let mut net = line();
        net.set_activated("I1->I2", false).unwrap();
        let run = run_network(&e, &mut net, "t", BTreeMap::new(), &NullSink, &RunControl::new()).unwrap();
        assert_eq!(run.curves.len(), 1);
        assert_eq!(run.report.energy, Some(2.0));
    }

    #[test]
    fn interrupted_then_resumed() {
        let e = engine();
        let fresh = run_network(&e, &mut line(), "t", BTreeMap::new(), &NullSink, &RunControl::new()).unwrap();
        let ctl = RunControl::halt_after_rounds(5);
        let part = run_network(&e, &mut line(), "t", BTreeMap::new(), &NullSink, &ctl).unwrap();
        assert!(part.interrupted);
        assert_eq!(part.report.energy, None);
        let done = run_network(&e, &mut line(), "t", part.streams, &NullSink, &RunControl::new()).unwrap();
        assert_eq!(done.curves, fresh.curves);
    }
}
