use std::fmt;

use serde::{Deserialize, Serialize};

use super::config::EffectiveConstants;
use super::scores::ScoreStats;

/// Position in the recursion tree: `path` lists the branch taken at each
/// level, `L` for `y ≤ τ` and `R` otherwise. The root has an empty path.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId {
    pub level: usize,
    pub path: String,
}

impl NodeId {
    pub fn root() -> Self {
        Self { level: 0, path: String::new() }
    }

    pub fn child(&self, right: bool) -> Self {
        let mut path = self.path.clone();
        path.push(if right { 'R' } else { 'L' });
        Self { level: self.level + 1, path }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            f.write_str("root")
        } else {
            f.write_str(&self.path)
        }
    }
}

/// One pass of the inner loop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopRecord {
    pub size: usize,
    pub m1: usize,
    pub stats: ScoreStats,
    pub eigenvalue: f64,
    pub eig_iterations: usize,
    pub eig_converged: bool,
}

/// A point dropped by a filter step. `index` refers to the root input.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Removal {
    pub index: usize,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    /// The score certificate held and the set was emitted as hypothesis `hypothesis`.
    Certificate { hypothesis: usize },
    /// The node ended with fewer points than an output needs; `discarded` are root indices.
    TooSmall { discarded: Vec<usize> },
    /// Split at `tau`; the children are this node's id extended by `L` and `R`.
    Split { tau: f64, eigenvalue: f64, left_size: usize, right_size: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceNode {
    pub id: NodeId,
    pub input_size: usize,
    pub final_size: usize,
    pub loops: Vec<LoopRecord>,
    pub removals: Vec<Removal>,
    pub termination: Termination,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecursionTrace {
    pub root_size: usize,
    pub constants: EffectiveConstants,
    /// Nodes in processing order; the root comes first.
    pub nodes: Vec<TraceNode>,
}

impl RecursionTrace {
    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.id.level).max().unwrap_or(0)
    }

    pub fn loop_count(&self) -> usize {
        self.nodes.iter().map(|n| n.loops.len()).sum()
    }

    pub fn removals(&self) -> impl Iterator<Item = &Removal> + '_ {
        self.nodes.iter().flat_map(|n| n.removals.iter())
    }

    pub fn removed_indices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.removals().map(|r| r.index).collect();
        v.sort_unstable();
        v
    }

    pub fn discarded_indices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .nodes
            .iter()
            .flat_map(|n| match &n.termination {
                Termination::TooSmall { discarded } => discarded.as_slice(),
                _ => &[],
            })
            .copied()
            .collect();
        v.sort_unstable();
        v
    }

    pub fn node(&self, id: &NodeId) -> Option<&TraceNode> {
        self.nodes.iter().find(|n| &n.id == id)
    }

    pub fn split_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n.termination, Termination::Split { .. })).count()
    }
}
