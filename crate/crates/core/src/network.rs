//! Evaluation networks: agent nodes with roles, evaluation routes between
//! them, topology validation, activated-route traversal, and the network
//! energy (sum of activated route weights).
//!
//! Routes point from the query consumer toward the query producer: an
//! interviewee (or an upstream interviewer) to the interviewer that poses
//! the questions. A route's weight is the ACC-AUC of the stream that runs
//! along it.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tasks::TaskId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentRole {
    Interviewee,
    Interviewer,
    Supervisor,
}

impl fmt::Display for AgentRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AgentRole::Interviewee => "interviewee",
            AgentRole::Interviewer => "interviewer",
            AgentRole::Supervisor => "supervisor",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    Line,
    Star,
    Tree,
    Hybrid,
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TopologyKind::Line => "line",
            TopologyKind::Star => "star",
            TopologyKind::Tree => "tree",
            TopologyKind::Hybrid => "hybrid",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentNode {
    pub node_id: String,
    pub model_ref: String,
    pub role: AgentRole,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_binding: Option<TaskId>,
}

impl AgentNode {
    pub fn interviewee(id: &str, model: &str) -> Self {
        Self {
            node_id: id.into(),
            model_ref: model.into(),
            role: AgentRole::Interviewee,
            task_binding: None,
        }
    }

    pub fn interviewer(id: &str, model: &str, task: TaskId) -> Self {
        Self {
            node_id: id.into(),
            model_ref: model.into(),
            role: AgentRole::Interviewer,
            task_binding: Some(task),
        }
    }

    pub fn supervisor(id: &str, model: &str) -> Self {
        Self {
            node_id: id.into(),
            model_ref: model.into(),
            role: AgentRole::Supervisor,
            task_binding: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRoute {
    pub from: String,
    pub to: String,
    #[serde(default)]
    pub weight: f64,
    #[serde(default = "default_true")]
    pub activated: bool,
    #[serde(default)]
    pub finalized: bool,
}

fn default_true() -> bool {
    true
}

impl EvalRoute {
    pub fn new(from: &str, to: &str) -> Self {
        Self {
            from: from.into(),
            to: to.into(),
            weight: 0.0,
            activated: true,
            finalized: false,
        }
    }

    pub fn deactivated(mut self) -> Self {
        self.activated = false;
        self
    }

    /// `from->to`, unique within a network.
    pub fn id(&self) -> String {
        format!("{}->{}", self.from, self.to)
    }
}

/// Declarative description of a network, as read from a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub topology: TopologyKind,
    pub nodes: Vec<AgentNode>,
    pub routes: Vec<EvalRoute>,
    /// Backend names the nodes may reference; unchecked when `None`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub known_models: Option<BTreeSet<String>>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("unknown reference: {0}")]
    UnknownModelRef(String),
    #[error("{kind} topology violated by route {route}: {reason}")]
    TopologyViolation {
        kind: TopologyKind,
        route: String,
        reason: String,
    },
    #[error("network has no {0} node")]
    MissingRole(AgentRole),
    #[error("duplicate node id {0:?}")]
    DuplicateNode(String),
    #[error("node {node:?}: {reason}")]
    InvalidNode { node: String, reason: String },
    #[error("route {0} is activated but was never evaluated")]
    UnfinalizedWeight(String),
    #[error("route {route}: invalid weight {weight}")]
    InvalidWeight { route: String, weight: f64 },
}

/// A validated evaluation network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalNetwork {
    topology: TopologyKind,
    nodes: Vec<AgentNode>,
    routes: Vec<EvalRoute>,
}

pub fn build_network(config: &NetworkConfig) -> Result<EvalNetwork, NetworkError> {
    let mut by_id: HashMap<&str, &AgentNode> = HashMap::new();
    for node in &config.nodes {
        if by_id.insert(node.node_id.as_str(), node).is_some() {
            return Err(NetworkError::DuplicateNode(node.node_id.clone()));
        }
        match (node.role, node.task_binding) {
            (AgentRole::Interviewer, None) => {
                return Err(NetworkError::InvalidNode {
                    node: node.node_id.clone(),
                    reason: "interviewer without a task binding".into(),
                })
            }
            (AgentRole::Interviewee | AgentRole::Supervisor, Some(_)) => {
                return Err(NetworkError::InvalidNode {
                    node: node.node_id.clone(),
                    reason: format!("{} nodes cannot carry a task binding", node.role),
                })
            }
            _ => {}
        }
        if let Some(known) = &config.known_models {
            if !known.contains(&node.model_ref) {
                return Err(NetworkError::UnknownModelRef(format!(
                    "node {:?} references backend {:?}",
                    node.node_id, node.model_ref
                )));
            }
        }
    }
    for role in [AgentRole::Interviewee, AgentRole::Interviewer] {
        if !config.nodes.iter().any(|n| n.role == role) {
            return Err(NetworkError::MissingRole(role));
        }
    }
    let mut seen = BTreeSet::new();
    for route in &config.routes {
        for end in [&route.from, &route.to] {
            if !by_id.contains_key(end.as_str()) {
                return Err(NetworkError::UnknownModelRef(format!(
                    "route {} references absent node {end:?}",
                    route.id()
                )));
            }
        }
        let violation = |reason: &str| NetworkError::TopologyViolation {
            kind: config.topology,
            route: route.id(),
            reason: reason.into(),
        };
        if route.from == route.to {
            return Err(violation("self loop"));
        }
        if !seen.insert((route.from.as_str(), route.to.as_str())) {
            return Err(violation("duplicate route"));
        }
        if !(route.weight >= 0.0 && route.weight.is_finite()) {
            return Err(NetworkError::InvalidWeight {
                route: route.id(),
                weight: route.weight,
            });
        }
        let (from, to) = (by_id[route.from.as_str()], by_id[route.to.as_str()]);
        if from.role == AgentRole::Supervisor || to.role == AgentRole::Supervisor {
            return Err(violation("supervisors do not sit on evaluation routes"));
        }
        if to.role == AgentRole::Interviewee && config.topology != TopologyKind::Hybrid {
            return Err(violation(
                "routes into an interviewee are only legal in hybrid networks",
            ));
        }
    }
    let net = EvalNetwork {
        topology: config.topology,
        nodes: config.nodes.clone(),
        routes: config.routes.clone(),
    };
    net.check_topology()?;
    Ok(net)
}

impl EvalNetwork {
    pub fn topology(&self) -> TopologyKind {
        self.topology
    }

    pub fn nodes(&self) -> &[AgentNode] {
        &self.nodes
    }

    pub fn routes(&self) -> &[EvalRoute] {
        &self.routes
    }

    pub fn node(&self, id: &str) -> Option<&AgentNode> {
        self.nodes.iter().find(|n| n.node_id == id)
    }

    pub fn route(&self, id: &str) -> Option<&EvalRoute> {
        self.routes.iter().find(|r| r.id() == id)
    }

    fn participants(&self) -> BTreeSet<&str> {
        self.nodes
            .iter()
            .filter(|n| n.role != AgentRole::Supervisor)
            .map(|n| n.node_id.as_str())
            .collect()
    }

    fn role(&self, id: &str) -> AgentRole {
        self.node(id).expect("validated node").role
    }

    fn violation(&self, route: &EvalRoute, reason: impl Into<String>) -> NetworkError {
        NetworkError::TopologyViolation {
            kind: self.topology,
            route: route.id(),
            reason: reason.into(),
        }
    }

    fn whole(&self, reason: impl Into<String>) -> NetworkError {
        NetworkError::TopologyViolation {
            kind: self.topology,
            route: self.routes.first().map_or_else(|| "<none>".into(), EvalRoute::id),
            reason: reason.into(),
        }
    }

    fn check_topology(&self) -> Result<(), NetworkError> {
        let participants = self.participants();
        if self.routes.is_empty() {
            return Err(self.whole("network has no routes"));
        }
        for n in &self.nodes {
            if n.role == AgentRole::Interviewer && !self.routes.iter().any(|r| r.to == n.node_id) {
                return Err(self.whole(format!("interviewer {:?} has no incoming route", n.node_id)));
            }
        }
        let interviewees: Vec<&str> = participants
            .iter()
            .copied()
            .filter(|id| self.role(id) == AgentRole::Interviewee)
            .collect();
        match self.topology {
            TopologyKind::Line | TopologyKind::Tree => {
                if interviewees.len() != 1 {
                    return Err(self.whole(format!(
                        "expected exactly one interviewee, found {}",
                        interviewees.len()
                    )));
                }
                let mut indegree: HashMap<&str, usize> = HashMap::new();
                let mut outdegree: HashMap<&str, usize> = HashMap::new();
                for r in &self.routes {
                    let inn = indegree.entry(r.to.as_str()).or_default();
                    *inn += 1;
                    if *inn > 1 {
                        return Err(self.violation(r, "node would have two parents"));
                    }
                    let out = outdegree.entry(r.from.as_str()).or_default();
                    *out += 1;
                    if self.topology == TopologyKind::Line && *out > 1 {
                        return Err(self.violation(r, "line nodes have at most one successor"));
                    }
                    if r.to == interviewees[0] {
                        return Err(self.violation(r, "the root interviewee cannot have a parent"));
                    }
                }
                self.check_reaches_all(interviewees[0], &participants)?;
            }
            TopologyKind::Star => {
                if interviewees.len() != 1 {
                    return Err(self.whole(format!(
                        "a star has one interviewee center, found {}",
                        interviewees.len()
                    )));
                }
                let center = interviewees[0];
                for r in &self.routes {
                    if r.from != center {
                        return Err(self.violation(r, "star routes must start at the center (max hop count 1)"));
                    }
                }
                self.check_reaches_all(center, &participants)?;
            }
            TopologyKind::Hybrid => {
                let mut undirected: HashMap<&str, Vec<&str>> = HashMap::new();
                for r in &self.routes {
                    undirected.entry(&r.from).or_default().push(&r.to);
                    undirected.entry(&r.to).or_default().push(&r.from);
                }
                let start = *participants.iter().next().expect("interviewee exists");
                let mut seen = BTreeSet::from([start]);
                let mut stack = vec![start];
                while let Some(u) = stack.pop() {
                    for &v in undirected.get(u).into_iter().flatten() {
                        if seen.insert(v) {
                            stack.push(v);
                        }
                    }
                }
                if let Some(missing) = participants.difference(&seen).next() {
                    return Err(self.whole(format!("node {missing:?} is disconnected")));
                }
            }
        }
        Ok(())
    }

    /// Every participant is reachable from `root` along route directions,
    /// and the route count leaves no room for a cycle.
    fn check_reaches_all(&self, root: &str, participants: &BTreeSet<&str>) -> Result<(), NetworkError> {
        let mut seen = BTreeSet::from([root]);
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for r in self.routes.iter().filter(|r| r.from == u) {
                if !seen.insert(r.to.as_str()) {
                    return Err(self.violation(r, "route closes a cycle"));
                }
                queue.push_back(&r.to);
            }
        }
        if let Some(missing) = participants.difference(&seen).next() {
            return Err(self.whole(format!("node {missing:?} is not reachable from {root:?}")));
        }
        if let Some(r) = self.routes.iter().find(|r| !seen.contains(r.from.as_str())) {
            return Err(self.violation(r, "route is detached from the root"));
        }
        Ok(())
    }

    /// Index of every route in traversal order, activated or not:
    /// breadth-first from the interviewees (by node id), outgoing routes
    /// by target id, each node expanded once; unreachable routes follow in
    /// `(from, to)` order.
    pub fn traversal_order(&self) -> Vec<usize> {
        let mut outgoing: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, r) in self.routes.iter().enumerate() {
            outgoing.entry(&r.from).or_default().push(i);
        }
        for list in outgoing.values_mut() {
            list.sort_by(|&a, &b| self.routes[a].to.cmp(&self.routes[b].to));
        }
        let mut roots: Vec<&str> = self
            .nodes
            .iter()
            .filter(|n| n.role == AgentRole::Interviewee)
            .map(|n| n.node_id.as_str())
            .collect();
        roots.sort_unstable();
        let mut visited: BTreeSet<&str> = roots.iter().copied().collect();
        let mut queue: VecDeque<&str> = roots.into_iter().collect();
        let mut order = Vec::with_capacity(self.routes.len());
        let mut emitted = vec![false; self.routes.len()];
        while let Some(u) = queue.pop_front() {
            for &i in outgoing.get(u).into_iter().flatten() {
                order.push(i);
                emitted[i] = true;
                let to = self.routes[i].to.as_str();
                if visited.insert(to) {
                    queue.push_back(to);
                }
            }
        }
        let mut rest: Vec<usize> = (0..self.routes.len()).filter(|&i| !emitted[i]).collect();
        rest.sort_by(|&a, &b| {
            let (ra, rb) = (&self.routes[a], &self.routes[b]);
            (&ra.from, &ra.to).cmp(&(&rb.from, &rb.to))
        });
        order.extend(rest);
        order
    }

    /// Routes that carry an evaluation stream, i.e. end at an interviewer.
    pub fn is_stream_route(&self, route: &EvalRoute) -> bool {
        self.role(&route.to) == AgentRole::Interviewer
    }

    /// Activated routes whose `to` node is the `from` node of `route`.
    pub fn upstream_of(&self, route: &EvalRoute) -> Vec<&EvalRoute> {
        let mut ups: Vec<&EvalRoute> = self
            .routes
            .iter()
            .filter(|r| r.activated && r.to == route.from && self.is_stream_route(r))
            .collect();
        ups.sort_by(|a, b| a.from.cmp(&b.from));
        ups
    }

    /// The interviewee answering the questions on `route`: its `from` node
    /// if that is an interviewee, else the nearest interviewee upstream
    /// (ties by node id).
    pub fn interviewee_for(&self, route: &EvalRoute) -> Option<&AgentNode> {
        let mut seen = BTreeSet::from([route.from.as_str()]);
        let mut frontier = vec![route.from.as_str()];
        while !frontier.is_empty() {
            frontier.sort_unstable();
            if let Some(id) = frontier.iter().find(|id| self.role(id) == AgentRole::Interviewee) {
                return self.node(id);
            }
            let mut next = Vec::new();
            for id in frontier {
                for r in self.routes.iter().filter(|r| r.to == id) {
                    if seen.insert(r.from.as_str()) {
                        next.push(r.from.as_str());
                    }
                }
            }
            frontier = next;
        }
        None
    }

    pub fn supervisor(&self) -> Option<&AgentNode> {
        self.nodes.iter().find(|n| n.role == AgentRole::Supervisor)
    }

    /// Records the evaluated weight of a route.
    pub fn finalize_weight(&mut self, route_id: &str, weight: f64) -> Result<(), NetworkError> {
        if !(weight >= 0.0 && weight.is_finite()) {
            return Err(NetworkError::InvalidWeight {
                route: route_id.into(),
                weight,
            });
        }
        let route = self
            .routes
            .iter_mut()
            .find(|r| r.id() == route_id)
            .ok_or_else(|| NetworkError::UnknownModelRef(format!("no route {route_id}")))?;
        route.weight = weight;
        route.finalized = true;
        Ok(())
    }

    pub fn set_activated(&mut self, route_id: &str, activated: bool) -> Result<(), NetworkError> {
        let route = self
            .routes
            .iter_mut()
            .find(|r| r.id() == route_id)
            .ok_or_else(|| NetworkError::UnknownModelRef(format!("no route {route_id}")))?;
        route.activated = activated;
        Ok(())
    }
}

/// Activated routes in traversal order.
pub fn activated_routes(net: &EvalNetwork) -> Vec<&EvalRoute> {
    net.traversal_order()
        .into_iter()
        .map(|i| &net.routes[i])
        .filter(|r| r.activated)
        .collect()
}

/// Sum of activated route weights, folded in route declaration order.
pub fn network_energy(net: &EvalNetwork) -> Result<f64, NetworkError> {
    let mut total = 0.0;
    for r in net.routes.iter().filter(|r| r.activated) {
        if !r.finalized {
            return Err(NetworkError::UnfinalizedWeight(r.id()));
        }
        total += r.weight;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(topology: TopologyKind, nodes: Vec<AgentNode>, routes: Vec<EvalRoute>) -> NetworkConfig {
        NetworkConfig {
            topology,
            nodes,
            routes,
            known_models: None,
        }
    }

    fn star(n: usize) -> NetworkConfig {
        let mut nodes = vec![AgentNode::interviewee("E", "m0")];
        let mut routes = Vec::new();
        for i in 1..=n {
            let id = format!("I{i}");
            nodes.push(AgentNode::interviewer(&id, "m1", TaskId::Sp));
            routes.push(EvalRoute::new("E", &id));
        }
        cfg(TopologyKind::Star, nodes, routes)
    }

    #[test]
    fn smallest_line() {
        let net = build_network(&cfg(
            TopologyKind::Line,
            vec![
                AgentNode::interviewee("E", "a"),
                AgentNode::interviewer("I", "b", TaskId::Btt),
            ],
            vec![EvalRoute::new("E", "I")],
        ))
        .unwrap();
        assert_eq!(net.nodes().len(), 2);
        assert_eq!(net.routes().len(), 1);
    }

    #[test]
    fn one_versus_four_star() {
        let net = build_network(&star(4)).unwrap();
        assert_eq!(net.nodes().len(), 5);
        assert!(net.routes().iter().all(|r| r.from == "E"));
    }

    #[test]
    fn dangling_route() {
        let mut c = star(2);
        c.routes.push(EvalRoute::new("E", "ghost"));
        assert!(matches!(build_network(&c), Err(NetworkError::UnknownModelRef(_))));
    }

    #[test]
    fn unknown_backend() {
        let mut c = star(1);
        c.known_models = Some(["m0".to_string()].into());
        assert!(matches!(build_network(&c), Err(NetworkError::UnknownModelRef(_))));
    }

    #[test]
    fn missing_roles_and_duplicates() {
        let c = cfg(
            TopologyKind::Line,
            vec![AgentNode::interviewer("I", "b", TaskId::Btt)],
            vec![],
        );
        assert_eq!(
            build_network(&c),
            Err(NetworkError::MissingRole(AgentRole::Interviewee))
        );
        let mut c = star(1);
        c.nodes.push(AgentNode::interviewee("E", "x"));
        assert_eq!(build_network(&c), Err(NetworkError::DuplicateNode("E".into())));
    }

    #[test]
    fn two_hop_star_rejected() {
        let mut c = star(2);
        c.routes[1] = EvalRoute::new("I1", "I2");
        match build_network(&c) {
            Err(NetworkError::TopologyViolation { route, .. }) => assert_eq!(route, "I1->I2"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cyclic_line_rejected() {
        let c = cfg(
            TopologyKind::Line,
            vec![
                AgentNode::interviewee("E", "a"),
                AgentNode::interviewer("I1", "b", TaskId::Sp),
                AgentNode::interviewer("I2", "b", TaskId::Sp),
            ],
            vec![
                EvalRoute::new("E", "I1"),
                EvalRoute::new("I1", "I2"),
                EvalRoute::new("I2", "I1"),
            ],
        );
        assert!(matches!(build_network(&c), Err(NetworkError::TopologyViolation { .. })));
    }

    #[test]
    fn energy_sums_activated() {
        let mut net = build_network(&star(2)).unwrap();
        assert!(matches!(network_energy(&net), Err(NetworkError::UnfinalizedWeight(_))));
        net.finalize_weight("E->I1", 2.0).unwrap();
        net.finalize_weight("E->I2", 3.5).unwrap();
        assert_eq!(network_energy(&net).unwrap(), 5.5);
        net.set_activated("E->I2", false).unwrap();
        assert_eq!(network_energy(&net).unwrap(), 2.0);
        net.set_activated("E->I1", false).unwrap();
        assert_eq!(network_energy(&net).unwrap(), 0.0);
        assert!(activated_routes(&net).is_empty());
    }

    #[test]
    fn deactivated_route_need_not_be_finalized() {
        let mut c = star(2);
        c.routes[1].activated = false;
        let mut net = build_network(&c).unwrap();
        net.finalize_weight("E->I1", 1.5).unwrap();
        assert_eq!(network_energy(&net).unwrap(), 1.5);
    }
}
