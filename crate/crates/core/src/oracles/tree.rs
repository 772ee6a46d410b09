//! Binary trees and traversal reconstruction.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("traversals are inconsistent: {0}")]
    InconsistentTraversals(String),
    #[error("cannot build a tree with depth {depth} and {nodes} nodes")]
    InvalidShape { depth: u32, nodes: usize },
}

/// Arena-backed binary tree; index 0 is the root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryTree {
    ids: Vec<i64>,
    left: Vec<Option<usize>>,
    right: Vec<Option<usize>>,
}

impl BinaryTree {
    pub fn leaf(id: i64) -> Self {
        Self {
            ids: vec![id],
            left: vec![None],
            right: vec![None],
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    fn push(&mut self, id: i64) -> usize {
        self.ids.push(id);
        self.left.push(None);
        self.right.push(None);
        self.ids.len() - 1
    }

    /// Attaches `id` as a child of node index `parent`.
    pub fn attach(&mut self, parent: usize, id: i64, as_left: bool) -> usize {
        let child = self.push(id);
        let slot = if as_left {
            &mut self.left[parent]
        } else {
            &mut self.right[parent]
        };
        assert!(slot.is_none(), "child slot already occupied");
        *slot = Some(child);
        child
    }

    /// Number of levels (a single node has depth 1).
    pub fn depth(&self) -> u32 {
        fn go(t: &BinaryTree, n: Option<usize>) -> u32 {
            n.map_or(0, |i| 1 + go(t, t.left[i]).max(go(t, t.right[i])))
        }
        go(self, (!self.is_empty()).then_some(0))
    }

    pub fn preorder(&self) -> Vec<i64> {
        let mut out = Vec::with_capacity(self.len());
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            out.push(self.ids[n]);
            if let Some(r) = self.right[n] {
                stack.push(r);
            }
            if let Some(l) = self.left[n] {
                stack.push(l);
            }
        }
        out
    }

    pub fn inorder(&self) -> Vec<i64> {
        let mut out = Vec::with_capacity(self.len());
        let mut stack = Vec::new();
        let mut cur = Some(0usize);
        while cur.is_some() || !stack.is_empty() {
            while let Some(n) = cur {
                stack.push(n);
                cur = self.left[n];
            }
            let n = stack.pop().expect("stack non-empty");
            out.push(self.ids[n]);
            cur = self.right[n];
        }
        out
    }

    pub fn postorder(&self) -> Vec<i64> {
        // reverse of (node, right, left) preorder
        let mut out = Vec::with_capacity(self.len());
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            out.push(self.ids[n]);
            if let Some(l) = self.left[n] {
                stack.push(l);
            }
            if let Some(r) = self.right[n] {
                stack.push(r);
            }
        }
        out.reverse();
        out
    }

    /// Random tree with exactly `depth` levels and `nodes` nodes, ids drawn
    /// without replacement from `1..=id_max`.
    pub fn random<R: Rng + ?Sized>(depth: u32, nodes: usize, id_max: i64, rng: &mut R) -> Result<Self, TreeError> {
        let capacity = if depth >= 63 { usize::MAX } else { (1usize << depth) - 1 };
        if depth == 0 || nodes < depth as usize || nodes > capacity || (id_max as usize) < nodes {
            return Err(TreeError::InvalidShape { depth, nodes });
        }
        let ids = rand::seq::index::sample(rng, id_max as usize, nodes);
        let mut ids = ids.into_iter().map(|i| i as i64 + 1);
        let mut tree = BinaryTree::leaf(ids.next().expect("nodes >= 1"));
        let mut level_of = vec![1u32];
        // spine guaranteeing the requested depth
        let mut tip = 0;
        for level in 2..=depth {
            let as_left = rng.gen_bool(0.5);
            tip = tree.attach(tip, ids.next().expect("enough ids"), as_left);
            level_of.push(level);
        }
        for id in ids {
            let open: Vec<(usize, bool)> = (0..tree.len())
                .filter(|&i| level_of[i] < depth)
                .flat_map(|i| {
                    let mut v = Vec::with_capacity(2);
                    if tree.left[i].is_none() {
                        v.push((i, true));
                    }
                    if tree.right[i].is_none() {
                        v.push((i, false));
                    }
                    v
                })
                .collect();
            let &(parent, as_left) = open.choose(rng).expect("capacity checked above");
            let child = tree.attach(parent, id, as_left);
            debug_assert_eq!(child, level_of.len());
            level_of.push(level_of[parent] + 1);
        }
        Ok(tree)
    }

    /// Rebuilds a tree from preorder and inorder sequences.
    pub fn from_traversals(pre: &[i64], ino: &[i64]) -> Result<Self, TreeError> {
        validate_permutations(pre, ino)?;
        let pos: HashMap<i64, usize> = ino.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut tree = BinaryTree {
            ids: Vec::with_capacity(pre.len()),
            left: Vec::with_capacity(pre.len()),
            right: Vec::with_capacity(pre.len()),
        };
        let mut next = 0usize;
        build(pre, &pos, 0, ino.len(), &mut next, &mut tree)?;
        if next != pre.len() {
            return Err(TreeError::InconsistentTraversals("preorder not fully consumed".into()));
        }
        Ok(tree)
    }
}

fn build(
    pre: &[i64],
    pos: &HashMap<i64, usize>,
    lo: usize,
    hi: usize,
    next: &mut usize,
    tree: &mut BinaryTree,
) -> Result<Option<usize>, TreeError> {
    if lo >= hi {
        return Ok(None);
    }
    let id = pre[*next];
    let split = pos[&id];
    if split < lo || split >= hi {
        return Err(TreeError::InconsistentTraversals(format!(
            "node {id} falls outside its inorder window"
        )));
    }
    *next += 1;
    let me = tree.push(id);
    let l = build(pre, pos, lo, split, next, tree)?;
    let r = build(pre, pos, split + 1, hi, next, tree)?;
    tree.left[me] = l;
    tree.right[me] = r;
    Ok(Some(me))
}

fn validate_permutations(pre: &[i64], ino: &[i64]) -> Result<(), TreeError> {
    if pre.is_empty() || pre.len() != ino.len() {
        return Err(TreeError::InconsistentTraversals(format!(
            "length mismatch ({} vs {})",
            pre.len(),
            ino.len()
        )));
    }
    let a: HashSet<i64> = pre.iter().copied().collect();
    if a.len() != pre.len() {
        return Err(TreeError::InconsistentTraversals("duplicate ids".into()));
    }
    let b: HashSet<i64> = ino.iter().copied().collect();
    if a != b {
        return Err(TreeError::InconsistentTraversals("id sets differ".into()));
    }
    Ok(())
}

/// The unique postorder consistent with `pre` and `ino`.
pub fn postorder_from(pre: &[i64], ino: &[i64]) -> Result<Vec<i64>, TreeError> {
    Ok(BinaryTree::from_traversals(pre, ino)?.postorder())
}

/// The three traversal sequences of one tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryTreeSpec {
    pub node_ids: Vec<i64>,
    pub preorder: Vec<i64>,
    pub inorder: Vec<i64>,
    pub postorder: Vec<i64>,
}

impl BinaryTreeSpec {
    pub fn from_tree(tree: &BinaryTree) -> Self {
        let preorder = tree.preorder();
        let mut node_ids = preorder.clone();
        node_ids.sort_unstable();
        Self {
            node_ids,
            preorder,
            inorder: tree.inorder(),
            postorder: tree.postorder(),
        }
    }

    pub fn validate(&self) -> Result<(), TreeError> {
        let post = postorder_from(&self.preorder, &self.inorder)?;
        if post != self.postorder {
            return Err(TreeError::InconsistentTraversals(
                "stored postorder disagrees with reconstruction".into(),
            ));
        }
        let mut ids = self.preorder.clone();
        ids.sort_unstable();
        if ids != self.node_ids {
            return Err(TreeError::InconsistentTraversals("node id set mismatch".into()));
        }
        Ok(())
    }
}

pub fn format_sequence(seq: &[i64]) -> String {
    seq.iter().map(i64::to_string).collect::<Vec<_>>().join(" ")
}
