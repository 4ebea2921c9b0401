//! Diagnosis search tree with UCT selection.
//!
//! Nodes are actions (tool calls or knowledge applications). A node is
//! *pending* until its action runs, *expandable* once it ran but has no
//! children yet, and *terminal* once it reports root causes. Selection walks
//! down from the root by highest UCT among viable, unpruned children and stops
//! at the first pending or expandable node.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{CoreError, Result};

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    Root,
    ToolCall { api: String, args: BTreeMap<String, Value> },
    KnowledgeApply { chunk_name: String },
}

impl Action {
    /// Short label used in transcripts and prompts.
    pub fn label(&self) -> String {
        match self {
            Action::Root => "start".into(),
            Action::ToolCall { api, .. } => api.clone(),
            Action::KnowledgeApply { chunk_name } => alloc::format!("apply_knowledge:{chunk_name}"),
        }
    }

    /// Identity of the action ignoring arguments; used to avoid repeating an
    /// action along one path.
    pub fn key(&self) -> String {
        self.label()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosisTreeNode {
    pub id: NodeId,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    pub action: Action,
    pub observation: String,
    pub reflection: Option<String>,
    pub pruned: bool,
    /// Vote credit `W(n)`.
    pub wins: f64,
    /// Visit count `N(n)`.
    pub visits: u64,
    /// Ballots cast for this node while it was a leaf.
    pub votes: u64,
    pub found_causes: Vec<String>,
    pub solutions: Vec<String>,
    pub executed: bool,
    pub expanded: bool,
    /// The action ran but failed (tool error or model error).
    pub failed: bool,
}

impl DiagnosisTreeNode {
    fn new(id: NodeId, parent: Option<NodeId>, action: Action) -> Self {
        Self {
            id,
            parent,
            children: Vec::new(),
            action,
            observation: String::new(),
            reflection: None,
            pruned: false,
            wins: 0.0,
            visits: 0,
            votes: 0,
            found_causes: Vec::new(),
            solutions: Vec::new(),
            executed: false,
            expanded: false,
            failed: false,
        }
    }

    pub fn is_terminal(&self) -> bool {
        !self.found_causes.is_empty()
    }
}

/// `W/N + C sqrt(2 ln N(p) / N)`, or `+inf` for an unvisited node.
pub fn uct(wins: f64, visits: u64, parent_visits: u64, c: f64) -> f64 {
    if visits == 0 {
        return f64::INFINITY;
    }
    let n = visits as f64;
    let explore = if parent_visits == 0 {
        0.0
    } else {
        libm::sqrt(2.0 * libm::log(parent_visits as f64) / n)
    };
    wins / n + c * explore
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosisTree {
    nodes: Vec<DiagnosisTreeNode>,
}

impl DiagnosisTree {
    /// A tree whose executed root carries the anomaly description.
    pub fn new(root_observation: impl Into<String>) -> Self {
        let mut root = DiagnosisTreeNode::new(0, None, Action::Root);
        root.observation = root_observation.into();
        root.executed = true;
        Self { nodes: vec![root] }
    }

    pub const ROOT: NodeId = 0;

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[DiagnosisTreeNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Result<&DiagnosisTreeNode> {
        self.nodes.get(id).ok_or(CoreError::UnknownNode(id))
    }

    pub fn node_mut(&mut self, id: NodeId) -> Result<&mut DiagnosisTreeNode> {
        self.nodes.get_mut(id).ok_or(CoreError::UnknownNode(id))
    }

    pub fn add_child(&mut self, parent: NodeId, action: Action) -> Result<NodeId> {
        self.node(parent)?;
        let id = self.nodes.len();
        self.nodes.push(DiagnosisTreeNode::new(id, Some(parent), action));
        self.nodes[parent].children.push(id);
        Ok(id)
    }

    /// Node ids from the root down to `id`, inclusive.
    pub fn path(&self, id: NodeId) -> Result<Vec<NodeId>> {
        let mut path = vec![id];
        let mut cur = self.node(id)?.parent;
        while let Some(p) = cur {
            path.push(p);
            cur = self.nodes[p].parent;
        }
        path.reverse();
        Ok(path)
    }

    pub fn depth(&self, id: NodeId) -> Result<usize> {
        Ok(self.path(id)?.len() - 1)
    }

    /// Per-node flag: the subtree still holds a pending or expandable node
    /// reachable without crossing a pruned node.
    pub fn viability(&self) -> Vec<bool> {
        let mut viable = vec![false; self.nodes.len()];
        // children always have larger ids than their parent
        for id in (0..self.nodes.len()).rev() {
            let n = &self.nodes[id];
            viable[id] = !n.pruned
                && (!n.executed
                    || (!n.expanded && !n.is_terminal())
                    || n.children.iter().any(|&c| viable[c]));
        }
        viable
    }

    /// UCT descent from the root. Ties go to the lowest id.
    pub fn select(&self, c: f64) -> Result<NodeId> {
        let viable = self.viability();
        if !viable[Self::ROOT] {
            return Err(CoreError::AllPruned);
        }
        let mut cur = Self::ROOT;
        loop {
            let node = &self.nodes[cur];
            if !node.executed || (!node.expanded && !node.is_terminal()) {
                return Ok(cur);
            }
            let mut best: Option<(NodeId, f64)> = None;
            for &child in &node.children {
                if !viable[child] {
                    continue;
                }
                let ch = &self.nodes[child];
                let score = uct(ch.wins, ch.visits, node.visits, c);
                // children are stored in increasing id order, so strict > keeps the lowest id
                if best.is_none_or(|(_, s)| score > s) {
                    best = Some((child, score));
                }
            }
            match best {
                Some((child, _)) => cur = child,
                None => return Err(CoreError::AllPruned),
            }
        }
    }

    /// Counts one simulation on every node from the root to `id`.
    pub fn record_visit(&mut self, id: NodeId) -> Result<()> {
        for n in self.path(id)? {
            self.nodes[n].visits += 1;
        }
        Ok(())
    }

    /// Executed, unpruned non-root nodes without executed, unpruned children.
    pub fn leaves(&self) -> Vec<NodeId> {
        self.nodes
            .iter()
            .filter(|n| n.id != Self::ROOT && n.executed && !n.pruned)
            .filter(|n| {
                !n.children
                    .iter()
                    .any(|&c| self.nodes[c].executed && !self.nodes[c].pruned)
            })
            .map(|n| n.id)
            .collect()
    }

    /// Credits one voting round.
    ///
    /// Every node on the path of a voted leaf gains the votes cast inside its
    /// subtree as `W`, and `n_evaluators` visits once for the round.
    pub fn apply_ballot(&mut self, tally: &BTreeMap<NodeId, u64>, n_evaluators: u64) -> Result<()> {
        let mut credit: BTreeMap<NodeId, u64> = BTreeMap::new();
        for (&leaf, &votes) in tally {
            if votes == 0 {
                continue;
            }
            self.node_mut(leaf)?.votes += votes;
            for n in self.path(leaf)? {
                *credit.entry(n).or_insert(0) += votes;
            }
        }
        for (n, votes) in credit {
            let node = &mut self.nodes[n];
            node.wins += votes as f64;
            node.visits += n_evaluators;
        }
        Ok(())
    }

    /// Leaf with the most ballots; ties prefer leaves with causes, then the
    /// lowest id.
    pub fn best_leaf(&self) -> Option<NodeId> {
        self.leaves().into_iter().min_by(|&a, &b| {
            let (na, nb) = (&self.nodes[a], &self.nodes[b]);
            nb.votes
                .cmp(&na.votes)
                .then(nb.is_terminal().cmp(&na.is_terminal()))
                .then(a.cmp(&b))
        })
    }

    /// Action keys already taken on the path to `id`.
    pub fn path_action_keys(&self, id: NodeId) -> Result<Vec<String>> {
        Ok(self
            .path(id)?
            .into_iter()
            .map(|n| self.nodes[n].action.key())
            .collect())
    }
}
