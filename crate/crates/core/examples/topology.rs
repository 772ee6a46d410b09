//! Building and validating evaluation networks.

use evalnet::network::{build_network, AgentNode, EvalRoute, NetworkConfig, TopologyKind};
use evalnet::tasks::TaskId;

fn config(topology: TopologyKind, routes: &[(&str, &str)]) -> NetworkConfig {
    NetworkConfig {
        topology,
        nodes: vec![
            AgentNode::interviewee("E", "subject"),
            AgentNode::interviewer("A", "gen", TaskId::ArithOper),
            AgentNode::interviewer("B", "gen", TaskId::Btt),
            AgentNode::interviewer("C", "gen", TaskId::Sp),
        ],
        routes: routes.iter().map(|(f, t)| EvalRoute::new(f, t)).collect(),
        known_models: None,
    }
}

fn main() {
    let cases = [
        (
            "line",
            config(TopologyKind::Line, &[("E", "A"), ("A", "B"), ("B", "C")]),
        ),
        (
            "star",
            config(TopologyKind::Star, &[("E", "A"), ("E", "B"), ("E", "C")]),
        ),
        (
            "tree",
            config(TopologyKind::Tree, &[("E", "A"), ("A", "B"), ("A", "C")]),
        ),
        (
            "two-hop star",
            config(TopologyKind::Star, &[("E", "A"), ("A", "B"), ("E", "C")]),
        ),
        (
            "cyclic line",
            config(TopologyKind::Line, &[("E", "A"), ("A", "B"), ("B", "A")]),
        ),
    ];
    for (name, c) in cases {
        match build_network(&c) {
            Ok(net) => {
                let order: Vec<_> = net
                    .traversal_order()
                    .into_iter()
                    .map(|i| net.routes()[i].id())
                    .collect();
                println!("{name}: ok, traversal {order:?}");
            }
            Err(e) => println!("{name}: rejected: {e}"),
        }
    }
}
