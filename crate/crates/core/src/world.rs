//! Scripted worlds: a question, a scripted model, a scripted or local retriever, config
//! overrides and declarative expectations, loaded from one JSON file each.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::action::ActionKind;
use crate::eval::{grade, Example};
use crate::generation::ScriptedModel;
use crate::retrieval::{LocalIndex, Retriever, ScriptedRetriever};
use crate::search::{Backends, Clock, RunConfig, SearchEngine, SearchError, SearchResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusDocument {
    pub doc_id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorldRetriever {
    Scripted(ScriptedRetriever),
    /// Indexed with the local lexical scorer.
    Documents(Vec<CorpusDocument>),
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expectations {
    /// Whether the final answer should grade as correct against the example.
    #[serde(default = "yes")]
    pub correct: bool,
    /// Exact final answer, when it matters beyond grading (for example the no-answer token).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<String>,
    /// Some winning trajectory passes through one of these actions.
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub winning_actions: BTreeSet<ActionKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retriever_calls_max: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retriever_calls_min: Option<u64>,
    /// Lower bound on branches pruned for low consistency.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_consistency_pruned: Option<usize>,
}

impl Default for Expectations {
    fn default() -> Self {
        Self {
            correct: true,
            answer: None,
            winning_actions: BTreeSet::new(),
            retriever_calls_max: None,
            retriever_calls_min: None,
            min_consistency_pruned: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Free-form grouping such as `retrieval-gated` or `consistency-trap`.
    pub category: String,
    /// Keys overriding the caller's base [`RunConfig`].
    #[serde(default)]
    pub config: Map<String, Value>,
    pub example: Example,
    pub lm: ScriptedModel,
    pub retriever: WorldRetriever,
    #[serde(default)]
    pub expectations: Expectations,
}

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("cannot read world {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("invalid world {path}: {message}")]
    Schema { path: PathBuf, message: String },
}

/// Directory holding the worlds shipped with this crate.
pub fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join("worlds")
}

/// Loads and checks one world file.
pub fn build_world(path: impl AsRef<Path>) -> Result<World, WorldError> {
    let path = path.as_ref();
    let schema = |message: String| WorldError::Schema { path: path.to_path_buf(), message };
    let text = fs::read_to_string(path).map_err(|source| WorldError::Io { path: path.to_path_buf(), source })?;
    let world: World = serde_json::from_str(&text).map_err(|e| schema(e.to_string()))?;
    world.lm.validate(&path.display().to_string()).map_err(|e| schema(e.to_string()))?;
    let config = world.config(&RunConfig::default()).map_err(|e| schema(format!("config: {e}")))?;
    config.validate().map_err(|e| schema(format!("config: {e}")))?;
    if world.example.question.trim().is_empty() || world.example.gold_answer.trim().is_empty() {
        return Err(schema("example: question and gold_answer must be nonempty".into()));
    }
    Ok(world)
}

/// Every `*.json` world in `dir`, sorted by file name.
pub fn load_worlds(dir: impl AsRef<Path>) -> Result<Vec<World>, WorldError> {
    let dir = dir.as_ref();
    let entries = fs::read_dir(dir).map_err(|source| WorldError::Io { path: dir.to_path_buf(), source })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths.iter().map(build_world).collect()
}

impl World {
    /// `base` with this world's overrides applied.
    pub fn config(&self, base: &RunConfig) -> Result<RunConfig, serde_json::Error> {
        let mut merged = serde_json::to_value(base)?;
        if let Value::Object(fields) = &mut merged {
            for (k, v) in &self.config {
                fields.insert(k.clone(), v.clone());
            }
        }
        serde_json::from_value(merged)
    }

    pub fn backends(&self) -> Backends {
        let retriever: Arc<dyn Retriever> = match &self.retriever {
            WorldRetriever::Scripted(s) => Arc::new(s.clone()),
            WorldRetriever::Documents(docs) => {
                Arc::new(LocalIndex::from_documents(docs.iter().map(|d| (d.doc_id.clone(), d.text.clone()))))
            }
        };
        Backends::new(Arc::new(self.lm.clone()), retriever)
    }

    /// Runs the world's question under `base` plus overrides, with a frozen clock.
    pub fn run(&self, base: &RunConfig) -> Result<SearchResult, SearchError> {
        let config = self.config(base).map_err(|e| {
            SearchError::Config(crate::search::ConfigError::Override(e.to_string()))
        })?;
        SearchEngine::new(config, self.backends())?.with_clock(Clock::Frozen).run(&self.example.question)
    }

    /// Expectation failures for `result`; empty when everything holds.
    pub fn check(&self, result: &SearchResult) -> Vec<String> {
        let mut failures = Vec::new();
        let exp = &self.expectations;
        let correct = grade(&result.answer, &self.example, &crate::generation::NormalizedMatch);
        if correct != exp.correct {
            failures.push(format!("answer {:?} graded {correct}, expected {}", result.answer, exp.correct));
        }
        if let Some(answer) = &exp.answer {
            if &result.answer != answer {
                failures.push(format!("answer {:?}, expected {answer:?}", result.answer));
            }
        }
        if !exp.winning_actions.is_empty() {
            let hit = result.winning_support().iter().any(|&leaf| {
                result.tree.path_to(leaf).iter().any(|&id| {
                    result.tree.node(id).incoming_action.is_some_and(|a| exp.winning_actions.contains(&a))
                })
            });
            if !hit {
                failures.push(format!("no winning trajectory uses any of {:?}", exp.winning_actions));
            }
        }
        let calls = result.budget.retriever_calls;
        if exp.retriever_calls_max.is_some_and(|max| calls > max) {
            failures.push(format!("{calls} retriever calls, at most {:?} expected", exp.retriever_calls_max));
        }
        if exp.retriever_calls_min.is_some_and(|min| calls < min) {
            failures.push(format!("{calls} retriever calls, at least {:?} expected", exp.retriever_calls_min));
        }
        if let Some(min) = exp.min_consistency_pruned {
            let pruned = consistency_pruned(result).len();
            if pruned < min {
                failures.push(format!("{pruned} consistency-pruned branches, at least {min} expected"));
            }
        }
        failures
    }
}

/// Nodes pruned because their confidence fell below the threshold.
pub fn consistency_pruned(result: &SearchResult) -> Vec<crate::tree::NodeId> {
    let tau = result.trace.config.tau_prune;
    result
        .tree
        .nodes()
        .iter()
        .filter(|n| n.pruned && n.reward.as_ref().is_some_and(|r| r.confidence < tau))
        .map(|n| n.id)
        .collect()
}
