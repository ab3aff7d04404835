//! The rollout loop: selection, parallel expansion with per-node evaluation,
//! backpropagation, and final voting.
//!
//! Conventions:
//!
//! * A new child is evaluated once when it is created. That evaluation sets its own
//!   `Q = R` and `N = 1` and is not propagated upward.
//! * Each rollout then backpropagates exactly once, from the node it expanded (or the closed
//!   node it stopped at) to the root. The value is the mean raw reward of the newly created
//!   children that did not fail, or the stopping node's own raw reward.
//!
//! So after `r` rollouts the root has `N = r`, and every other node has
//! `N = 1 + (number of rollouts whose path passed through it)`.
//!
//! Selection skips closed subtrees (terminal, or every child closed) while any sibling is
//! still open, and never descends into pruned children.

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::ActionKind;
use crate::aggregation::{aggregate, select_best, ScoredAnswer};
use crate::generation::{
    normalize_answer, sample_completions, AnswerJudge, Completion, GenerationError, LanguageModel, NormalizedMatch,
    PromptPurpose, PromptRequest,
};
use crate::policy::{apply_action, is_terminal, legal_actions, render_prompt, retrieval_possible, ActionOutput, PolicyError};
use crate::prompts::PromptTemplates;
use crate::retrieval::{
    consistency_prune, needs_retrieval, run_pipeline, KnowledgeItem, PipelineError, PipelineSeeds, RetrievalContext,
    RetrievalError, RetrievalRecord, Retriever,
};
use crate::reward::{cluster_completions, compute_reward};
use crate::state::ReasoningState;
use crate::trace::{RolloutRecord, SearchTrace};
use crate::tree::{backpropagate, select_among, ChildSpec, NodeId, SearchTree};
use crate::NO_ANSWER;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub rollouts: usize,
    pub max_depth: usize,
    pub max_subquestions: usize,
    pub k_completions: usize,
    pub c_uct: f64,
    pub top_k_docs: usize,
    pub tau_prune: f64,
    pub disabled_actions: BTreeSet<ActionKind>,
    pub seed: u64,
    pub parallel_expansion: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            rollouts: 4,
            max_depth: 5,
            max_subquestions: 2,
            k_completions: 4,
            c_uct: 1.414,
            top_k_docs: 10,
            tau_prune: 0.25,
            disabled_actions: BTreeSet::new(),
            seed: 0,
            parallel_expansion: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{0} must be at least 1")]
    NotPositive(&'static str),
    #[error("c_uct must be a finite nonnegative number, got {0}")]
    InvalidExploration(f64),
    #[error("tau_prune must lie in [0, 1], got {0}")]
    InvalidTau(f64),
    #[error("bad config override: {0}")]
    Override(String),
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, value) in [
            ("rollouts", self.rollouts),
            ("max_depth", self.max_depth),
            ("k_completions", self.k_completions),
            ("top_k_docs", self.top_k_docs),
        ] {
            if value == 0 {
                return Err(ConfigError::NotPositive(name));
            }
        }
        if !(self.c_uct.is_finite() && self.c_uct >= 0.0) {
            return Err(ConfigError::InvalidExploration(self.c_uct));
        }
        if !(0.0..=1.0).contains(&self.tau_prune) {
            return Err(ConfigError::InvalidTau(self.tau_prune));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetEvent {
    LmCall { tokens: u64 },
    RetrieverCall,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub tokens_generated: u64,
    pub lm_calls: u64,
    pub retriever_calls: u64,
    pub wall_time_ms: u64,
}

impl BudgetReport {
    pub fn account(&mut self, event: BudgetEvent) {
        match event {
            BudgetEvent::LmCall { tokens } => {
                self.lm_calls += 1;
                self.tokens_generated += tokens;
            }
            BudgetEvent::RetrieverCall => self.retriever_calls += 1,
        }
    }

    /// Adds another report's counters; wall time is left alone.
    pub fn merge(&mut self, other: &BudgetReport) {
        self.tokens_generated += other.tokens_generated;
        self.lm_calls += other.lm_calls;
        self.retriever_calls += other.retriever_calls;
    }
}

/// Shared backend handles for one search.
#[derive(Clone)]
pub struct Backends {
    pub model: Arc<dyn LanguageModel>,
    pub retriever: Arc<dyn Retriever>,
    pub judge: Arc<dyn AnswerJudge>,
    pub templates: Arc<PromptTemplates>,
}

impl Backends {
    /// Normalized-match judging and the bundled templates.
    pub fn new(model: Arc<dyn LanguageModel>, retriever: Arc<dyn Retriever>) -> Self {
        Self {
            model,
            retriever,
            judge: Arc::new(NormalizedMatch),
            templates: Arc::new(PromptTemplates::default()),
        }
    }

    pub fn with_judge(mut self, judge: Arc<dyn AnswerJudge>) -> Self {
        self.judge = judge;
        self
    }

    pub fn with_templates(mut self, templates: Arc<PromptTemplates>) -> Self {
        self.templates = templates;
        self
    }
}

/// `Frozen` reports zero wall time so that traces are byte-reproducible.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Clock {
    #[default]
    System,
    Frozen,
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("question is empty")]
    EmptyQuestion,
    #[error(transparent)]
    Policy(#[from] PolicyError),
    /// A backend failed hard; the trace holds everything done up to that point.
    #[error("backend failure: {message}")]
    Backend { message: String, trace: Box<SearchTrace> },
}

impl SearchError {
    pub fn partial_trace(&self) -> Option<&SearchTrace> {
        match self {
            SearchError::Backend { trace, .. } => Some(trace),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    /// Winning answer, or [`NO_ANSWER`].
    pub answer: String,
    pub scored_answers: Vec<ScoredAnswer>,
    pub trace: SearchTrace,
    pub budget: BudgetReport,
    pub tree: SearchTree,
}

impl SearchResult {
    /// Terminal nodes of the trajectories that voted for the winning answer.
    pub fn winning_support(&self) -> &[NodeId] {
        self.scored_answers
            .iter()
            .find(|s| s.answer == self.answer)
            .map_or(&[], |s| s.support.as_slice())
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn purpose_tag(purpose: PromptPurpose) -> u64 {
    match purpose {
        PromptPurpose::DirectAnswer => 1,
        PromptPurpose::QuickReasoning => 2,
        PromptPurpose::DecomposeQuestion => 3,
        PromptPurpose::RetrievalReasoning => 4,
        PromptPurpose::RetrievalDecompose => 5,
        PromptPurpose::SummarizedAnswer => 6,
        PromptPurpose::Necessity => 7,
        PromptPurpose::Query => 8,
        PromptPurpose::Reflection => 9,
        PromptPurpose::Summary => 10,
    }
}

/// Seed for one model call, fixed by the run seed, the node and the call's purpose.
pub fn derive_seed(run_seed: u64, node: NodeId, purpose: PromptPurpose) -> u64 {
    splitmix64(run_seed ^ splitmix64(((node.0 as u64) << 4) | purpose_tag(purpose)))
}

/// Result of evaluating one legal action during an expansion.
struct Branch {
    spec: ChildSpec,
    budget: BudgetReport,
    unreachable: bool,
    fatal: Option<GenerationError>,
}

impl Branch {
    fn failed(action: ActionKind, state: &ReasoningState, retrieval: Option<RetrievalRecord>, message: String) -> Self {
        Self {
            spec: ChildSpec {
                action,
                state: state.clone(),
                reward: None,
                retrieval,
                failure: Some(message),
                pruned: true,
                terminal: true,
            },
            budget: BudgetReport::default(),
            unreachable: false,
            fatal: None,
        }
    }
}

/// Why expansion stopped the whole search.
enum Abort {
    Policy(PolicyError),
    Backend(String),
}

pub struct SearchEngine {
    config: RunConfig,
    backends: Backends,
    clock: Clock,
}

impl SearchEngine {
    pub fn new(config: RunConfig, backends: Backends) -> Result<Self, SearchError> {
        config.validate()?;
        Ok(Self { config, backends, clock: Clock::System })
    }

    pub fn with_clock(mut self, clock: Clock) -> Self {
        self.clock = clock;
        self
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    /// Runs exactly `config.rollouts` rollouts on `question`, then votes.
    pub fn run(&self, question: &str) -> Result<SearchResult, SearchError> {
        if question.trim().is_empty() {
            return Err(SearchError::EmptyQuestion);
        }
        let started = Instant::now();
        let mut tree = SearchTree::new(ReasoningState::new(question.trim()), self.config.max_depth);
        let mut budget = BudgetReport::default();
        let mut rollouts = Vec::with_capacity(self.config.rollouts);

        for index in 0..self.config.rollouts {
            match self.rollout(&mut tree, index, &mut budget) {
                Ok(record) => rollouts.push(record),
                Err(Abort::Policy(e)) => return Err(SearchError::Policy(e)),
                Err(Abort::Backend(message)) => {
                    budget.wall_time_ms = self.elapsed_ms(started);
                    let mut trace = SearchTrace::from_tree(&tree, &self.config, rollouts, NO_ANSWER, Vec::new(), budget);
                    trace.error = Some(message.clone());
                    return Err(SearchError::Backend { message, trace: Box::new(trace) });
                }
            }
        }

        let (answer, scored_answers) = match aggregate(&tree, self.backends.judge.as_ref()) {
            Ok((_, scored)) => {
                let best = select_best(&scored).map_or(NO_ANSWER.to_string(), |s| s.answer.clone());
                (best, scored)
            }
            Err(e) => {
                log::debug!("no final answer: {e}");
                (NO_ANSWER.to_string(), Vec::new())
            }
        };
        budget.wall_time_ms = self.elapsed_ms(started);
        let trace = SearchTrace::from_tree(&tree, &self.config, rollouts, &answer, scored_answers.clone(), budget);
        Ok(SearchResult { answer, scored_answers, trace, budget, tree })
    }

    fn elapsed_ms(&self, started: Instant) -> u64 {
        match self.clock {
            Clock::System => started.elapsed().as_millis() as u64,
            Clock::Frozen => 0,
        }
    }

    /// Open children if any, else unpruned ones; `None` stops the descent here.
    fn descend_from(&self, tree: &SearchTree, id: NodeId) -> Option<NodeId> {
        let children = &tree.node(id).children;
        let open: Vec<NodeId> = children.iter().copied().filter(|&c| !tree.is_closed(c)).collect();
        let candidates = if open.is_empty() {
            children.iter().copied().filter(|&c| !tree.node(c).pruned).collect()
        } else {
            open
        };
        select_among(tree, id, &candidates, self.config.c_uct)
    }

    fn rollout(&self, tree: &mut SearchTree, index: usize, budget: &mut BudgetReport) -> Result<RolloutRecord, Abort> {
        let mut leaf = tree.root();
        while tree.node(leaf).is_expanded() && !tree.node(leaf).terminal {
            match self.descend_from(tree, leaf) {
                Some(next) => leaf = next,
                None => break,
            }
        }

        let mut expanded = Vec::new();
        let node = tree.node(leaf);
        let value = if !node.terminal && !node.is_expanded() {
            if is_terminal(&node.state, &self.config) && node.parent.is_some() {
                tree.node_mut(leaf).terminal = true;
                tree.node(leaf).own_reward()
            } else {
                expanded = self.expand(tree, leaf, budget)?;
                let rewards: Vec<f64> = expanded
                    .iter()
                    .filter_map(|&c| tree.node(c).reward.as_ref().map(|r| r.raw_reward))
                    .collect();
                if rewards.is_empty() {
                    tree.node(leaf).own_reward()
                } else {
                    rewards.iter().sum::<f64>() / rewards.len() as f64
                }
            }
        } else {
            node.own_reward()
        };

        backpropagate(tree, leaf, value);
        log::debug!("rollout {index}: leaf {leaf:?}, {} new children, value {value}", expanded.len());
        Ok(RolloutRecord { index, path: tree.path_to(leaf), leaf, expanded, value })
    }

    fn expand(&self, tree: &mut SearchTree, leaf: NodeId, budget: &mut BudgetReport) -> Result<Vec<NodeId>, Abort> {
        let state = tree.node(leaf).state.clone();
        let signal = if retrieval_possible(&state, &self.config) {
            let seed = derive_seed(self.config.seed, leaf, PromptPurpose::Necessity);
            match needs_retrieval(&state, self.backends.model.as_ref(), &self.backends.templates, seed, budget) {
                Ok(needed) => Some(needed),
                Err(e) => return Err(Abort::Backend(format!("necessity check at node {}: {e}", leaf.0))),
            }
        } else {
            None
        };
        tree.node_mut(leaf).retrieval_signal = signal;

        let actions = legal_actions(&state, &self.config, signal.unwrap_or(false)).map_err(Abort::Policy)?;
        let first_id = tree.next_id().0;
        let evaluate = |(i, &action): (usize, &ActionKind)| self.evaluate(&state, action, NodeId(first_id + i));
        let branches: Vec<Branch> = if self.config.parallel_expansion {
            actions.par_iter().enumerate().map(evaluate).collect()
        } else {
            actions.iter().enumerate().map(evaluate).collect()
        };

        for branch in &branches {
            budget.merge(&branch.budget);
        }
        if let Some(fatal) = branches.iter().find_map(|b| b.fatal.clone()) {
            return Err(Abort::Backend(fatal.to_string()));
        }
        if !branches.is_empty() && branches.iter().all(|b| b.unreachable) {
            let message = branches[0].spec.failure.clone().unwrap_or_default();
            return Err(Abort::Backend(format!("every branch at node {} was unreachable: {message}", leaf.0)));
        }

        let specs = branches.into_iter().map(|b| b.spec).collect();
        let ids = tree.expand(leaf, specs).expect("expansion preconditions checked by the rollout");
        Ok(ids)
    }

    /// Realizes `action` from `state` as the future node `child`.
    fn evaluate(&self, state: &ReasoningState, action: ActionKind, child: NodeId) -> Branch {
        let mut budget = BudgetReport::default();
        let seed = |purpose| derive_seed(self.config.seed, child, purpose);

        let mut record = None;
        let mut knowledge = None;
        if action.uses_retrieval() {
            let ctx = RetrievalContext {
                model: self.backends.model.as_ref(),
                retriever: self.backends.retriever.as_ref(),
                templates: &self.backends.templates,
                top_k: self.config.top_k_docs,
            };
            let seeds = PipelineSeeds {
                query: seed(PromptPurpose::Query),
                reflection: seed(PromptPurpose::Reflection),
                summary: seed(PromptPurpose::Summary),
            };
            match run_pipeline(state, child.0 as u64, ctx, seeds, &mut budget) {
                Ok(r) => {
                    if let (true, Some(summary)) = (r.admitted(), &r.summary) {
                        knowledge = Some(KnowledgeItem {
                            source_record: r.id,
                            text: summary.clone(),
                            subquestion: state.subquestion_count + usize::from(action.decomposes()),
                        });
                    }
                    record = Some(r);
                }
                Err(PipelineError::Fatal(e)) => {
                    let mut b = Branch::failed(action, state, None, e.to_string());
                    b.budget = budget;
                    b.fatal = Some(e);
                    return b;
                }
                Err(PipelineError::Branch { record, error }) => {
                    let unreachable = is_unreachable(&error);
                    let mut b = Branch::failed(action, state, Some(*record), error.to_string());
                    b.budget = budget;
                    b.unreachable = unreachable;
                    return b;
                }
            }
        }

        let mut prompt_state = state.clone();
        prompt_state.knowledge.extend(knowledge.clone());
        let outcome = render_prompt(action, &prompt_state, &self.backends.templates)
            .map_err(|e| (e.to_string(), None))
            .and_then(|prompt| {
                let request = PromptRequest::new(PromptPurpose::for_action(action), &prompt);
                sample_completions(self.backends.model.as_ref(), &request, self.config.k_completions, seed(request.purpose))
                    .map(|outcome| (prompt.clone(), outcome))
                    .map_err(|e| (e.to_string(), Some(e)))
            });
        let (prompt, outcome) = match outcome {
            Ok(ok) => ok,
            Err((message, error)) => {
                let mut b = Branch::failed(action, state, record, message);
                b.budget = budget;
                b.unreachable = matches!(error, Some(GenerationError::Unreachable { .. }));
                b.fatal = error.filter(GenerationError::is_fatal);
                return b;
            }
        };
        budget.account(BudgetEvent::LmCall { tokens: outcome.tokens_consumed });

        let judged = self.realize(state, action, &prompt, &outcome.completions, knowledge);
        let mut branch = match judged {
            Ok((next, reward)) => {
                let pruned = consistency_prune(&reward, self.config.tau_prune);
                let terminal = is_terminal(&next, &self.config);
                Branch {
                    spec: ChildSpec {
                        action,
                        state: next,
                        reward: Some(reward),
                        retrieval: record,
                        failure: None,
                        pruned,
                        terminal,
                    },
                    budget: BudgetReport::default(),
                    unreachable: false,
                    fatal: None,
                }
            }
            Err(message) => Branch::failed(action, state, record, message),
        };
        branch.budget = budget;
        branch
    }

    /// Clusters the batch, keeps the majority's founding completion and applies it.
    fn realize(
        &self,
        state: &ReasoningState,
        action: ActionKind,
        prompt: &str,
        completions: &[Completion],
        knowledge: Option<KnowledgeItem>,
    ) -> Result<(ReasoningState, crate::reward::NodeReward), String> {
        // Direct answers without the marker are malformed and dropped; other actions
        // cluster answerless outputs by their normalized text.
        let keyed: Vec<(usize, Completion)> = completions
            .iter()
            .enumerate()
            .filter_map(|(i, c)| match (&c.answer, action) {
                (Some(_), _) => Some((i, c.clone())),
                (None, ActionKind::DirectAnswer) => None,
                (None, _) => Some((
                    i,
                    Completion { answer: Some(normalize_answer(&c.text)), ..c.clone() },
                )),
            })
            .collect();
        if keyed.is_empty() {
            return Err(format!("{action} produced no completion with an answer"));
        }
        let batch: Vec<Completion> = keyed.iter().map(|(_, c)| c.clone()).collect();
        let clusters = cluster_completions(&batch, self.backends.judge.as_ref()).map_err(|e| e.to_string())?;
        let mut reward = compute_reward(&clusters, &batch).map_err(|e| e.to_string())?;
        reward.total = completions.len();
        reward.confidence = reward.majority_size as f64 / completions.len() as f64;
        reward.positive_reward = crate::reward::positive_reward(reward.confidence, reward.raw_reward);
        let kept = &completions[keyed[reward.representative_index].0];
        reward.representative_index = keyed[reward.representative_index].0;
        if let Some(answer) = &kept.answer {
            reward.representative = answer.clone();
        }

        let output = ActionOutput { prompt: prompt.to_string(), text: kept.text.clone(), knowledge };
        let next = apply_action(state, action, &output).map_err(|e| e.to_string())?;
        Ok((next, reward))
    }
}

/// True when a retrieval failure means a backend could not be reached.
fn is_unreachable(error: &RetrievalError) -> bool {
    matches!(
        error,
        RetrievalError::Unreachable { .. } | RetrievalError::Generation(GenerationError::Unreachable { .. })
    )
}
