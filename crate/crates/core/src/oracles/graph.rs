//! Undirected weighted graphs with letter node ids, the adjacency-list
//! text format, and Dijkstra shortest paths.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("node {0:?} not in graph")]
    UnknownNode(char),
    #[error("no path from {from:?} to {to:?}")]
    Unreachable { from: char, to: char },
    #[error("asymmetric edge {0:?}-{1:?}")]
    Asymmetric(char, char),
    #[error("invalid node id {0:?}; ids must be single English letters")]
    InvalidNodeId(String),
    #[error("malformed adjacency line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("cannot build graph with {nodes} nodes and {edges} edges")]
    InvalidShape { nodes: usize, edges: usize },
}

/// Letters in node-id order: `A..=Z` then `a..=z`.
pub const NODE_LETTERS: &str = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz";

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WeightedGraph {
    adjacency: BTreeMap<char, Vec<(char, u32)>>,
}

impl WeightedGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, id: char) -> Result<(), GraphError> {
        if !id.is_ascii_alphabetic() {
            return Err(GraphError::InvalidNodeId(id.to_string()));
        }
        self.adjacency.entry(id).or_default();
        Ok(())
    }

    /// Adds (or overwrites) the undirected edge `u - v`.
    pub fn add_edge(&mut self, u: char, v: char, weight: u32) -> Result<(), GraphError> {
        self.add_node(u)?;
        self.add_node(v)?;
        for (a, b) in [(u, v), (v, u)] {
            let list = self.adjacency.get_mut(&a).expect("node added");
            match list.iter_mut().find(|(n, _)| *n == b) {
                Some(entry) => entry.1 = weight,
                None => list.push((b, weight)),
            }
            list.sort_by_key(|&(n, _)| n);
        }
        Ok(())
    }

    pub fn nodes(&self) -> impl Iterator<Item = char> + '_ {
        self.adjacency.keys().copied()
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.values().map(Vec::len).sum::<usize>() / 2
    }

    pub fn neighbors(&self, u: char) -> &[(char, u32)] {
        self.adjacency.get(&u).map_or(&[], Vec::as_slice)
    }

    pub fn average_degree(&self) -> f64 {
        if self.adjacency.is_empty() {
            return 0.0;
        }
        2.0 * self.edge_count() as f64 / self.node_count() as f64
    }

    pub fn check_symmetric(&self) -> Result<(), GraphError> {
        for (&u, list) in &self.adjacency {
            for &(v, w) in list {
                let back = self.adjacency.get(&v).and_then(|l| l.iter().find(|(n, _)| *n == u));
                if back.map(|&(_, bw)| bw) != Some(w) {
                    return Err(GraphError::Asymmetric(u, v));
                }
            }
        }
        Ok(())
    }

    pub fn is_connected(&self) -> bool {
        let Some(start) = self.adjacency.keys().next().copied() else {
            return true;
        };
        let mut seen = vec![start];
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for &(v, _) in self.neighbors(u) {
                if !seen.contains(&v) {
                    seen.push(v);
                    stack.push(v);
                }
            }
        }
        seen.len() == self.adjacency.len()
    }

    /// Adjacency lines such as `A: B(3), C(1), F(8)`, one per node.
    pub fn to_adjacency_text(&self) -> String {
        let mut out = String::new();
        for (i, (u, list)) in self.adjacency.iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let _ = write!(out, "{u}:");
            for (j, (v, w)) in list.iter().enumerate() {
                let sep = if j == 0 { " " } else { ", " };
                let _ = write!(out, "{sep}{v}({w})");
            }
        }
        out
    }

    /// The adjacency text wrapped in `<network>` tags.
    pub fn to_network_block(&self) -> String {
        format!("<network>\n{}\n</network>", self.to_adjacency_text())
    }

    /// Parses adjacency lines; blank lines and surrounding `<network>` tags
    /// are ignored. The result must be symmetric.
    pub fn parse_adjacency(text: &str) -> Result<Self, GraphError> {
        let mut g = WeightedGraph::new();
        let mut directed: Vec<(char, char, u32)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line == "<network>" || line == "</network>" {
                continue;
            }
            let malformed = |message: &str| GraphError::Malformed {
                line: lineno + 1,
                message: message.to_string(),
            };
            let (head, rest) = line.split_once(':').ok_or_else(|| malformed("missing ':'"))?;
            let u = single_letter(head.trim())?;
            g.add_node(u)?;
            for item in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let (name, weight) = item
                    .strip_suffix(')')
                    .and_then(|s| s.split_once('('))
                    .ok_or_else(|| malformed("expected N(w)"))?;
                let v = single_letter(name.trim())?;
                let w: u32 = weight.trim().parse().map_err(|_| malformed("bad weight"))?;
                if w == 0 {
                    return Err(malformed("weights must be positive"));
                }
                directed.push((u, v, w));
            }
        }
        for &(u, v, _) in &directed {
            g.add_node(u)?;
            g.add_node(v)?;
        }
        for &(u, v, w) in &directed {
            let list = g.adjacency.get_mut(&u).expect("node added");
            if !list.iter().any(|(n, _)| *n == v) {
                list.push((v, w));
                list.sort_by_key(|&(n, _)| n);
            }
        }
        g.check_symmetric()?;
        Ok(g)
    }

    /// Random connected graph: a random spanning tree plus extra edges up
    /// to `edges` total, weights uniform in `1..=max_weight`.
    pub fn random_connected<R: Rng + ?Sized>(
        nodes: usize,
        edges: usize,
        max_weight: u32,
        rng: &mut R,
    ) -> Result<Self, GraphError> {
        let max_edges = nodes * nodes.saturating_sub(1) / 2;
        if nodes == 0 || nodes > NODE_LETTERS.len() || edges + 1 < nodes || edges > max_edges {
            return Err(GraphError::InvalidShape { nodes, edges });
        }
        let letters: Vec<char> = NODE_LETTERS.chars().take(nodes).collect();
        let mut order = letters.clone();
        order.shuffle(rng);
        let mut g = WeightedGraph::new();
        g.add_node(order[0])?;
        for i in 1..nodes {
            let parent = order[rng.gen_range(0..i)];
            g.add_edge(order[i], parent, rng.gen_range(1..=max_weight))?;
        }
        let mut missing: Vec<(char, char)> = Vec::new();
        for (i, &u) in letters.iter().enumerate() {
            for &v in &letters[i + 1..] {
                if !g.neighbors(u).iter().any(|(n, _)| *n == v) {
                    missing.push((u, v));
                }
            }
        }
        missing.shuffle(rng);
        for &(u, v) in missing.iter().take(edges - (nodes - 1)) {
            g.add_edge(u, v, rng.gen_range(1..=max_weight))?;
        }
        Ok(g)
    }
}

fn single_letter(s: &str) -> Result<char, GraphError> {
    let mut chars = s.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) if c.is_ascii_alphabetic() => Ok(c),
        _ => Err(GraphError::InvalidNodeId(s.to_string())),
    }
}

/// Minimal total weight from `s` to `t` (Dijkstra with a binary heap).
pub fn shortest_path(g: &WeightedGraph, s: char, t: char) -> Result<u64, GraphError> {
    for n in [s, t] {
        if !g.adjacency.contains_key(&n) {
            return Err(GraphError::UnknownNode(n));
        }
    }
    let mut dist: HashMap<char, u64> = HashMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(s, 0);
    heap.push(Reverse((0u64, s)));
    while let Some(Reverse((d, u))) = heap.pop() {
        if u == t {
            return Ok(d);
        }
        if dist.get(&u).is_some_and(|&best| d > best) {
            continue;
        }
        for &(v, w) in g.neighbors(u) {
            let nd = d + u64::from(w);
            if dist.get(&v).is_none_or(|&old| nd < old) {
                dist.insert(v, nd);
                heap.push(Reverse((nd, v)));
            }
        }
    }
    Err(GraphError::Unreachable { from: s, to: t })
}
