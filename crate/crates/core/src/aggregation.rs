//! Final-answer voting over answered trajectories.
//!
//! A trajectory's weight is the product of the positive rewards of every node on its path
//! below the root. Equivalent answers are grouped, each group scores its share of the total
//! weight, and the best share wins.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generation::AnswerJudge;
use crate::tree::{NodeId, SearchTree};

/// Scores closer than this are treated as tied, so that rescaling every reward by the same
/// constant cannot flip the winner through rounding alone.
pub const SCORE_TIE_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AggregationError {
    #[error("no answered trajectories to vote on")]
    NoCandidates,
    #[error("trajectory rewards sum to zero")]
    ZeroTotal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// Root first.
    pub node_path: Vec<NodeId>,
    pub answer: String,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerGroup {
    pub representative: String,
    pub members: Vec<Trajectory>,
    pub score: f64,
}

impl AnswerGroup {
    pub fn reward_sum(&self) -> f64 {
        self.members.iter().map(|t| t.reward).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredAnswer {
    pub answer: String,
    pub score: f64,
    pub reward_sum: f64,
    /// Terminal node of every trajectory voting for this answer, in id order.
    pub support: Vec<NodeId>,
}

/// One trajectory per unpruned, terminal, answered node, in node-id order (which is also
/// the order in which they terminated).
pub fn extract_trajectories(tree: &SearchTree) -> Vec<Trajectory> {
    tree.nodes()
        .iter()
        .filter(|n| n.terminal && !n.pruned && n.parent.is_some())
        .filter_map(|n| {
            let answer = n.state.answered.clone()?;
            let node_path = tree.path_to(n.id);
            let reward = node_path[1..]
                .iter()
                .map(|&id| tree.node(id).positive_reward.unwrap_or(0.0))
                .product();
            Some(Trajectory { node_path, answer, reward })
        })
        .collect()
}

/// Greedy first-match grouping in input order; scores are left at zero.
pub fn group_answers(trajectories: &[Trajectory], judge: &dyn AnswerJudge) -> Result<Vec<AnswerGroup>, AggregationError> {
    if trajectories.is_empty() {
        return Err(AggregationError::NoCandidates);
    }
    let mut groups: Vec<AnswerGroup> = Vec::new();
    for t in trajectories {
        match groups.iter_mut().find(|g| judge.equivalent(&t.answer, &g.representative)) {
            Some(group) => group.members.push(t.clone()),
            None => groups.push(AnswerGroup {
                representative: t.answer.clone(),
                members: vec![t.clone()],
                score: 0.0,
            }),
        }
    }
    Ok(groups)
}

/// Each group's share of the total trajectory reward, in group order.
pub fn score_answers(groups: &[AnswerGroup]) -> Result<Vec<ScoredAnswer>, AggregationError> {
    if groups.is_empty() {
        return Err(AggregationError::NoCandidates);
    }
    let sums: Vec<f64> = groups.iter().map(AnswerGroup::reward_sum).collect();
    let total: f64 = sums.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return Err(AggregationError::ZeroTotal);
    }
    Ok(groups
        .iter()
        .zip(sums)
        .map(|(g, sum)| ScoredAnswer {
            answer: g.representative.clone(),
            score: sum / total,
            reward_sum: sum,
            support: g.members.iter().map(|t| *t.node_path.last().expect("non-empty path")).collect(),
        })
        .collect())
}

/// Highest score; near-ties go to the earlier entry, i.e. the earliest-terminated group.
pub fn select_best(scored: &[ScoredAnswer]) -> Option<&ScoredAnswer> {
    let mut best = scored.first()?;
    for candidate in &scored[1..] {
        if candidate.score > best.score + SCORE_TIE_EPSILON {
            best = candidate;
        }
    }
    Some(best)
}

/// Groups with their scores filled in, plus the flat score list.
pub fn aggregate(tree: &SearchTree, judge: &dyn AnswerJudge) -> Result<(Vec<AnswerGroup>, Vec<ScoredAnswer>), AggregationError> {
    let mut groups = group_answers(&extract_trajectories(tree), judge)?;
    let scored = score_answers(&groups)?;
    for (g, s) in groups.iter_mut().zip(&scored) {
        g.score = s.score;
    }
    Ok((groups, scored))
}
