//! One interviewee against one interviewer: escalation until failure.

use std::collections::BTreeMap;
use std::sync::Arc;

use evalnet::backend::{CapabilityProfile, CorrectnessRule, ScriptedBackend};
use evalnet::engine::{run_network, Backends, Engine, EngineOptions, NullSink, RunControl};
use evalnet::network::{build_network, AgentNode, EvalRoute, NetworkConfig, TopologyKind};
use evalnet::tasks::{Generator, TaskId};

fn main() {
    let subject = CapabilityProfile {
        default: CorrectnessRule::Linear {
            intercept: 1.0,
            slope: -0.2,
        },
        ..CapabilityProfile::default()
    };
    let engine = Engine {
        generator: Generator::default(),
        backends: Backends::new()
            .with("subject", Arc::new(ScriptedBackend::new("subject", subject)))
            .with(
                "gen",
                Arc::new(ScriptedBackend::new("gen", CapabilityProfile::default())),
            ),
        runner: None,
        options: EngineOptions {
            q_total: 20,
            ..EngineOptions::default()
        },
    };
    let mut net = build_network(&NetworkConfig {
        topology: TopologyKind::Star,
        nodes: vec![
            AgentNode::interviewee("E", "subject"),
            AgentNode::interviewer("I", "gen", TaskId::Btt),
        ],
        routes: vec![EvalRoute::new("E", "I")],
        known_models: None,
    })
    .unwrap();
    let run = run_network(
        &engine,
        &mut net,
        "demo",
        BTreeMap::new(),
        &NullSink,
        &RunControl::new(),
    )
    .unwrap();
    let curve = &run.curves[0];
    for t in &curve.levels {
        println!("level {}: {}/{} ACC {:.2}", t.level, t.correct, t.q_total, t.acc());
    }
    println!("{} {} -> {}", curve.route, curve.status.as_str(), curve.cell());
}
