//! Node evaluation from `K` completions: greedy equivalence clustering, majority
//! confidence, mean log-likelihood reward, and the positive aggregation reward.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generation::{AnswerJudge, Completion};
use crate::tree::{NodeId, SearchTree};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RewardError {
    #[error("no completions to cluster")]
    EmptyBatch,
    #[error("completion {0} has no extracted answer")]
    MissingAnswer(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub representative: String,
    /// Completion indices; the first one founded the cluster.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSet {
    pub clusters: Vec<Cluster>,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeReward {
    /// Answer of the majority cluster's founding completion.
    pub representative: String,
    /// Index of that founding completion.
    pub representative_index: usize,
    pub majority_size: usize,
    pub total: usize,
    /// `majority_size / total`.
    pub confidence: f64,
    /// Mean log-likelihood over the majority cluster; drives Q in UCT.
    pub raw_reward: f64,
    /// `confidence * exp(min(raw_reward, 0))`, in (0, 1]; multiplied along trajectories.
    pub positive_reward: f64,
}

/// Greedy first-match clustering in input order. Each completion joins the first cluster
/// whose representative it is equivalent to, or founds a new one.
pub fn cluster_completions(
    completions: &[Completion],
    judge: &dyn AnswerJudge,
) -> Result<ClusterSet, RewardError> {
    if completions.is_empty() {
        return Err(RewardError::EmptyBatch);
    }
    let mut clusters: Vec<Cluster> = Vec::new();
    for (index, completion) in completions.iter().enumerate() {
        let answer = completion.answer.as_deref().ok_or(RewardError::MissingAnswer(index))?;
        match clusters.iter_mut().find(|c| judge.equivalent(answer, &c.representative)) {
            Some(cluster) => cluster.members.push(index),
            None => clusters.push(Cluster {
                representative: answer.to_string(),
                members: vec![index],
            }),
        }
    }
    Ok(ClusterSet { clusters, total: completions.len() })
}

pub fn positive_reward(confidence: f64, raw_reward: f64) -> f64 {
    confidence * raw_reward.min(0.0).exp()
}

/// Picks the largest cluster (earliest-founded on ties) and scores it.
pub fn compute_reward(clusters: &ClusterSet, completions: &[Completion]) -> Result<NodeReward, RewardError> {
    let mut majority = clusters.clusters.first().ok_or(RewardError::EmptyBatch)?;
    for cluster in &clusters.clusters[1..] {
        if cluster.members.len() > majority.members.len() {
            majority = cluster;
        }
    }
    let size = majority.members.len();
    let confidence = size as f64 / clusters.total as f64;
    let raw_reward = majority
        .members
        .iter()
        .map(|&i| completions[i].log_likelihood)
        .sum::<f64>()
        / size as f64;
    Ok(NodeReward {
        representative: majority.representative.clone(),
        representative_index: majority.members[0],
        majority_size: size,
        total: clusters.total,
        confidence,
        raw_reward,
        positive_reward: positive_reward(confidence, raw_reward),
    })
}

/// Folds one evaluation into a node: `Q += R`, `N += 1`, and the aggregation reward is
/// replaced by the latest one. Ancestors are updated by the rollout's own backpropagation.
pub fn update_stats(tree: &mut SearchTree, node: NodeId, reward: &NodeReward) {
    let node = tree.node_mut(node);
    node.q_value += reward.raw_reward;
    node.visit_count += 1;
    node.positive_reward = Some(reward.positive_reward);
    node.reward = Some(reward.clone());
}
