//! JSON search traces: writing, reading and structural validation.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::ActionKind;
use crate::aggregation::ScoredAnswer;
use crate::retrieval::{KnowledgeItem, RetrievalRecord};
use crate::reward::NodeReward;
use crate::search::{BudgetReport, RunConfig};
use crate::state::ReasoningStep;
use crate::tree::{NodeId, SearchTree};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceNode {
    pub id: NodeId,
    pub parent: Option<NodeId>,
    pub action: Option<ActionKind>,
    pub depth: usize,
    pub q: f64,
    pub n: u64,
    pub terminal: bool,
    pub pruned: bool,
    pub state_summary: String,
    pub answer: Option<String>,
    pub subquestion_count: usize,
    pub children: Vec<NodeId>,
    pub positive_reward: Option<f64>,
    pub reward: Option<NodeReward>,
    pub retrieval_signal: Option<bool>,
    pub retrieval: Option<RetrievalRecord>,
    pub knowledge: Vec<KnowledgeItem>,
    /// The step this node's incoming action appended.
    pub step: Option<ReasoningStep>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutRecord {
    pub index: usize,
    /// Root first, ending at `leaf`.
    pub path: Vec<NodeId>,
    pub leaf: NodeId,
    pub expanded: Vec<NodeId>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalAnswer {
    pub answer: String,
    pub scores: Vec<ScoredAnswer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub question: String,
    pub config: RunConfig,
    pub nodes: Vec<TraceNode>,
    pub rollouts: Vec<RolloutRecord>,
    #[serde(rename = "final")]
    pub final_answer: FinalAnswer,
    pub budget: BudgetReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SearchTrace {
    pub fn from_tree(
        tree: &SearchTree,
        config: &RunConfig,
        rollouts: Vec<RolloutRecord>,
        answer: &str,
        scores: Vec<ScoredAnswer>,
        budget: BudgetReport,
    ) -> Self {
        let nodes = tree
            .nodes()
            .iter()
            .map(|n| TraceNode {
                id: n.id,
                parent: n.parent,
                action: n.incoming_action,
                depth: n.depth,
                q: n.q_value,
                n: n.visit_count,
                terminal: n.terminal,
                pruned: n.pruned,
                state_summary: n.state.summary(),
                answer: n.state.answered.clone(),
                subquestion_count: n.state.subquestion_count,
                children: n.children.clone(),
                positive_reward: n.positive_reward,
                reward: n.reward.clone(),
                retrieval_signal: n.retrieval_signal,
                retrieval: n.retrieval.clone(),
                knowledge: n.state.knowledge.clone(),
                step: if n.parent.is_some() && n.failure.is_none() { n.state.steps.last().cloned() } else { None },
                failure: n.failure.clone(),
            })
            .collect();
        Self {
            question: tree.node(tree.root()).state.question.clone(),
            config: config.clone(),
            nodes,
            rollouts,
            final_answer: FinalAnswer { answer: answer.to_string(), scores },
            budget,
            error: None,
        }
    }

    pub fn node(&self, id: NodeId) -> Option<&TraceNode> {
        self.nodes.get(id.0).filter(|n| n.id == id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("cannot write trace {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("cannot read trace {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("malformed trace {path}: {source}")]
    Parse { path: PathBuf, source: serde_json::Error },
}

/// Writes pretty-printed JSON with keys in declaration order, creating parent directories.
pub fn dump_trace(trace: &SearchTrace, path: impl AsRef<Path>) -> Result<(), TraceError> {
    let path = path.as_ref();
    let write_err = |source| TraceError::Write { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(write_err)?;
    }
    let mut json = trace.to_json();
    json.push('\n');
    fs::write(path, json).map_err(write_err)
}

pub fn load_trace(path: impl AsRef<Path>) -> Result<SearchTrace, TraceError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| TraceError::Read { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text).map_err(|source| TraceError::Parse { path: path.to_path_buf(), source })
}

/// Every structural rule a finished trace must satisfy; returns all violations found.
///
/// Checked: ids and parent links, depth and sub-question bounds, disabled actions, childless
/// terminals, retrieval only under a positive necessity signal, knowledge only from admitted
/// records, pruned nodes absent from the vote, and visit counts matching the rollout log.
pub fn validate_trace(trace: &SearchTrace) -> Result<(), Vec<String>> {
    let mut errors = Vec::new();
    let config = &trace.config;
    let mut admitted: BTreeMap<u64, bool> = BTreeMap::new();

    for (i, node) in trace.nodes.iter().enumerate() {
        let id = node.id.0;
        if id != i {
            errors.push(format!("node at index {i} has id {id}"));
            continue;
        }
        if node.depth > config.max_depth {
            errors.push(format!("node {id} has depth {} > {}", node.depth, config.max_depth));
        }
        if node.subquestion_count > config.max_subquestions {
            errors.push(format!("node {id} has {} sub-questions > {}", node.subquestion_count, config.max_subquestions));
        }
        if let Some(action) = node.action {
            if config.disabled_actions.contains(&action) {
                errors.push(format!("node {id} was reached by disabled action {action}"));
            }
        }
        if node.terminal && !node.children.is_empty() {
            errors.push(format!("terminal node {id} has children"));
        }
        match node.parent {
            None if id != 0 => errors.push(format!("node {id} has no parent")),
            Some(p) => match trace.node(p) {
                Some(parent) if parent.depth + 1 == node.depth && parent.children.contains(&node.id) => {
                    if node.retrieval.as_ref().is_some_and(RetrievalRecord::executed) && parent.retrieval_signal != Some(true) {
                        errors.push(format!("node {id} retrieved although the necessity signal at {p} was not positive"));
                    }
                }
                _ => errors.push(format!("node {id} is inconsistent with its parent {p}")),
            },
            None => {}
        }
        if let Some(record) = &node.retrieval {
            admitted.insert(record.id, record.admitted());
            if record.documents.len() > config.top_k_docs {
                errors.push(format!("node {id} retrieved {} documents > top_k", record.documents.len()));
            }
            if record.summary.is_some() != record.admitted() {
                errors.push(format!("node {id} has a summary that does not match its reflection"));
            }
        }
    }

    for node in &trace.nodes {
        for item in &node.knowledge {
            if admitted.get(&item.source_record) != Some(&true) {
                errors.push(format!("node {} holds knowledge from unadmitted record {}", node.id.0, item.source_record));
            }
        }
    }

    for score in &trace.final_answer.scores {
        for leaf in &score.support {
            match trace.node(*leaf) {
                Some(n) if !n.pruned && n.terminal && n.answer.is_some() => {}
                _ => errors.push(format!("vote from node {} which is pruned, open or unanswered", leaf.0)),
            }
        }
    }

    if trace.error.is_none() {
        if trace.rollouts.len() != config.rollouts {
            errors.push(format!("{} rollouts recorded, {} configured", trace.rollouts.len(), config.rollouts));
        }
        let mut through = vec![0u64; trace.nodes.len()];
        for rollout in &trace.rollouts {
            for id in &rollout.path {
                if let Some(slot) = through.get_mut(id.0) {
                    *slot += 1;
                }
            }
        }
        for node in &trace.nodes {
            let expected = through[node.id.0] + u64::from(node.parent.is_some());
            if node.n != expected {
                errors.push(format!("node {} has n = {} but {} visits were recorded", node.id.0, node.n, expected));
            }
        }
    }

    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}
