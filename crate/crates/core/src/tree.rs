//! Search-tree storage, UCT selection and backpropagation.
//!
//! Nodes live in an arena indexed by [`NodeId`]; ids are assigned in creation order, so a
//! child's id is always larger than its parent's and siblings are numbered in expansion
//! order.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::ActionKind;
use crate::retrieval::RetrievalRecord;
use crate::reward::{update_stats, NodeReward};
use crate::state::ReasoningState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TreeError {
    #[error("UCT is undefined for an unvisited child")]
    UnvisitedChild,
    #[error("UCT needs at least one parent visit")]
    UnvisitedParent,
    #[error("node {0:?} has no children to select from")]
    NoChildren(NodeId),
    #[error("node {0:?} is already expanded")]
    AlreadyExpanded(NodeId),
    #[error("node {0:?} is terminal")]
    Terminal(NodeId),
    #[error("expanding node {node:?} would exceed max depth {max_depth}")]
    DepthExceeded { node: NodeId, max_depth: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchNode {
    pub id: NodeId,
    pub state: ReasoningState,
    pub incoming_action: Option<ActionKind>,
    /// Cumulative raw reward Q.
    pub q_value: f64,
    /// Visit count N.
    pub visit_count: u64,
    /// Latest aggregation reward; `None` for the root and for failed branches.
    pub positive_reward: Option<f64>,
    pub children: Vec<NodeId>,
    pub parent: Option<NodeId>,
    pub depth: usize,
    pub terminal: bool,
    /// Excluded from candidate answers (low consistency or failed generation).
    pub pruned: bool,
    pub reward: Option<NodeReward>,
    /// The R1-R4 record of the retrieval that created this node, for A4/A5.
    pub retrieval: Option<RetrievalRecord>,
    /// Necessity signal evaluated when this node was expanded; `None` if never asked.
    pub retrieval_signal: Option<bool>,
    pub failure: Option<String>,
}

impl SearchNode {
    fn new(id: NodeId, state: ReasoningState, parent: Option<&SearchNode>, action: Option<ActionKind>) -> Self {
        Self {
            id,
            state,
            incoming_action: action,
            q_value: 0.0,
            visit_count: 0,
            positive_reward: None,
            children: Vec::new(),
            parent: parent.map(|p| p.id),
            depth: parent.map_or(0, |p| p.depth + 1),
            terminal: false,
            pruned: false,
            reward: None,
            retrieval: None,
            retrieval_signal: None,
            failure: None,
        }
    }

    pub fn is_expanded(&self) -> bool {
        !self.children.is_empty()
    }

    /// Latest raw reward of this node's own evaluation, `0.0` if it has none.
    pub fn own_reward(&self) -> f64 {
        self.reward.as_ref().map_or(0.0, |r| r.raw_reward)
    }
}

/// A realized action ready to become a child node.
#[derive(Debug, Clone, PartialEq)]
pub struct ChildSpec {
    pub action: ActionKind,
    pub state: ReasoningState,
    /// Majority-cluster evaluation; `None` marks a failed branch.
    pub reward: Option<NodeReward>,
    pub retrieval: Option<RetrievalRecord>,
    pub failure: Option<String>,
    pub pruned: bool,
    pub terminal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchTree {
    nodes: Vec<SearchNode>,
    max_depth: usize,
}

impl SearchTree {
    pub fn new(root_state: ReasoningState, max_depth: usize) -> Self {
        Self {
            nodes: vec![SearchNode::new(NodeId(0), root_state, None, None)],
            max_depth,
        }
    }

    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn node(&self, id: NodeId) -> &SearchNode {
        &self.nodes[id.0]
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut SearchNode {
        &mut self.nodes[id.0]
    }

    pub fn get(&self, id: NodeId) -> Option<&SearchNode> {
        self.nodes.get(id.0)
    }

    pub fn nodes(&self) -> &[SearchNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Id the next created node will receive.
    pub fn next_id(&self) -> NodeId {
        NodeId(self.nodes.len())
    }

    /// Root-first path ending at `id`.
    pub fn path_to(&self, id: NodeId) -> Vec<NodeId> {
        let mut path = vec![id];
        let mut cursor = self.node(id).parent;
        while let Some(p) = cursor {
            path.push(p);
            cursor = self.node(p).parent;
        }
        path.reverse();
        path
    }

    /// A node is closed when it is terminal or every child below it is closed.
    pub fn is_closed(&self, id: NodeId) -> bool {
        let node = self.node(id);
        node.terminal || (node.is_expanded() && node.children.iter().all(|&c| self.is_closed(c)))
    }

    /// Materializes one child per realized action, in the given order. Each child starts
    /// with its own evaluation applied (`Q = R`, `N = 1`); failed branches get `N = 1`,
    /// `Q = 0` and are pruned. An empty list marks `node` terminal.
    pub fn expand(&mut self, node: NodeId, children: Vec<ChildSpec>) -> Result<Vec<NodeId>, TreeError> {
        let parent = self.node(node);
        if parent.terminal {
            return Err(TreeError::Terminal(node));
        }
        if parent.is_expanded() {
            return Err(TreeError::AlreadyExpanded(node));
        }
        if children.is_empty() {
            self.node_mut(node).terminal = true;
            return Ok(Vec::new());
        }
        if parent.depth + 1 > self.max_depth {
            return Err(TreeError::DepthExceeded { node, max_depth: self.max_depth });
        }

        let mut ids = Vec::with_capacity(children.len());
        for spec in children {
            let id = self.next_id();
            let mut child = SearchNode::new(id, spec.state, Some(self.node(node)), Some(spec.action));
            child.retrieval = spec.retrieval;
            child.failure = spec.failure;
            child.pruned = spec.pruned || spec.reward.is_none();
            child.terminal = spec.terminal || child.pruned || child.depth >= self.max_depth;
            self.nodes.push(child);
            match &spec.reward {
                Some(reward) => update_stats(self, id, reward),
                None => self.node_mut(id).visit_count = 1,
            }
            ids.push(id);
        }
        self.node_mut(node).children = ids.clone();
        Ok(ids)
    }
}

/// `q/n + c * sqrt(ln(parent_visits) / n)`.
pub fn uct_score(q_value: f64, visit_count: u64, parent_visits: u64, c: f64) -> Result<f64, TreeError> {
    if visit_count == 0 {
        return Err(TreeError::UnvisitedChild);
    }
    if parent_visits == 0 {
        return Err(TreeError::UnvisitedParent);
    }
    let n = visit_count as f64;
    Ok(q_value / n + c * ((parent_visits as f64).ln() / n).sqrt())
}

/// Selects among all children of `node`.
pub fn select_child(tree: &SearchTree, node: NodeId, c: f64) -> Result<NodeId, TreeError> {
    let children = &tree.node(node).children;
    select_among(tree, node, children, c).ok_or(TreeError::NoChildren(node))
}

/// Unvisited candidates first (in the given order); otherwise the UCT argmax, ties to the
/// lowest id. `None` only when `candidates` is empty.
pub fn select_among(tree: &SearchTree, parent: NodeId, candidates: &[NodeId], c: f64) -> Option<NodeId> {
    if let Some(&fresh) = candidates.iter().find(|&&id| tree.node(id).visit_count == 0) {
        return Some(fresh);
    }
    let parent_visits = tree.node(parent).visit_count.max(1);
    let mut best: Option<(f64, NodeId)> = None;
    for &id in candidates {
        let child = tree.node(id);
        let score = uct_score(child.q_value, child.visit_count, parent_visits, c)
            .expect("visited child with positive parent visits");
        best = match best {
            Some((s, b)) if s > score || (s == score && b < id) => Some((s, b)),
            _ => Some((score, id)),
        };
    }
    best.map(|(_, id)| id)
}

/// Adds `reward` to Q and one visit to every node from `leaf` up to the root.
pub fn backpropagate(tree: &mut SearchTree, leaf: NodeId, reward: f64) {
    let mut cursor = Some(leaf);
    while let Some(id) = cursor {
        let node = tree.node_mut(id);
        node.q_value += reward;
        node.visit_count += 1;
        cursor = node.parent;
    }
}
