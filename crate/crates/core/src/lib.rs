//! Retrieval-augmented Monte Carlo Tree Search for knowledge-intensive question answering.
//!
//! The engine grows a search tree over partial reasoning trajectories. Each node is reached
//! by one of six reasoning actions (direct answer, quick reasoning, decomposition, retrieval
//! reasoning, retrieval decomposition, summarized answer). Newly created nodes are scored by
//! sampling `K` completions, clustering them by answer equivalence, and rewarding the majority
//! cluster by its mean log-likelihood. Selection uses UCT. When the rollout budget is spent,
//! answered trajectories vote for the final answer with weights equal to the product of
//! their per-node rewards.
//!
//! Language models and retrievers sit behind the [`LanguageModel`] and [`Retriever`] traits.
//! Scripted implementations of both make every search fully deterministic, which is what the
//! [`world`] fixtures build on.

pub mod action;
pub mod aggregation;
pub mod eval;
pub mod generation;
pub mod policy;
pub mod prompts;
pub mod retrieval;
pub mod reward;
pub mod search;
pub mod state;
pub mod trace;
pub mod tree;
pub mod world;

pub use action::ActionKind;
pub use aggregation::{AnswerGroup, ScoredAnswer, Trajectory};
pub use eval::{Example, Metrics};
pub use generation::{
    AnswerJudge, Completion, GenerationError, GenerationOutcome, LanguageModel, NormalizedMatch,
    PromptPurpose, PromptRequest,
};
pub use prompts::PromptTemplates;
pub use retrieval::{Document, KnowledgeItem, RetrievalRecord, Retriever};
pub use reward::{ClusterSet, NodeReward};
pub use search::{Backends, BudgetReport, Clock, RunConfig, SearchEngine, SearchError, SearchResult};
pub use state::{ReasoningState, ReasoningStep};
pub use trace::SearchTrace;
pub use tree::{NodeId, SearchNode, SearchTree};

/// Answer reported when a search finishes without any answered, unpruned trajectory.
pub const NO_ANSWER: &str = "[no answer]";

#[cfg(test)]
mod test_http;
