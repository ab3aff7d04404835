//! Interleaved retrieval: necessity check, query generation, query execution, knowledge
//! reflection and summarization, plus the consistency-pruning signal.

mod local;
mod remote;
mod scripted;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generation::{extract_after_marker, sample_completions, GenerationError, LanguageModel, PromptPurpose, PromptRequest};
use crate::prompts::{fill, PromptError, PromptTemplates};
use crate::reward::NodeReward;
use crate::search::{BudgetEvent, BudgetReport};
use crate::state::ReasoningState;

pub use local::{tokenize, LocalIndex};
pub use remote::{WebSearchConfig, WebSearchRetriever};
pub use scripted::{ScriptedDocument, ScriptedRetriever};

pub const QUERY_MARKER: &str = "The query is";
pub const EVALUATION_MARKER: &str = "Evaluation:";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RetrievalError {
    #[error("retrieval query is empty")]
    EmptyQuery,
    #[error("top_k must be at least 1")]
    InvalidTopK,
    #[error("no \"The query is:\" marker in output: {0}")]
    MissingQuery(String),
    #[error("summary completion is empty")]
    EmptySummary,
    #[error("retriever unreachable after {attempts} attempt(s): {message}")]
    Unreachable { attempts: u32, message: String },
    #[error("retriever error: {0}")]
    Backend(String),
    #[error("failed to load corpus {path}: {message}")]
    Load { path: String, message: String },
    #[error(transparent)]
    Generation(#[from] GenerationError),
    #[error(transparent)]
    Prompt(#[from] PromptErrorText),
}

/// Prompt failures carried as text so that [`RetrievalError`] stays `Clone + PartialEq`.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{0}")]
pub struct PromptErrorText(pub String);

impl From<PromptError> for RetrievalError {
    fn from(e: PromptError) -> Self {
        RetrievalError::Prompt(PromptErrorText(e.to_string()))
    }
}

/// A document source. Implementations must tolerate concurrent queries.
pub trait Retriever: Send + Sync {
    /// Up to `top_k` documents, best first.
    fn search(&self, query: &str, top_k: usize) -> Result<Vec<Document>, RetrievalError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Admit,
    Reject,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reflection {
    pub verdict: Verdict,
    pub rationale: String,
}

/// One R1-R4 cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalRecord {
    /// Id of the node whose expansion ran this cycle.
    pub id: u64,
    pub query: String,
    pub documents: Vec<Document>,
    pub reflection: Option<Reflection>,
    /// Admitted knowledge in "Key Points" form; present only after an admit verdict.
    pub summary: Option<String>,
    pub error: Option<String>,
}

impl RetrievalRecord {
    fn new(id: u64) -> Self {
        Self {
            id,
            query: String::new(),
            documents: Vec::new(),
            reflection: None,
            summary: None,
            error: None,
        }
    }

    pub fn admitted(&self) -> bool {
        matches!(&self.reflection, Some(r) if r.verdict == Verdict::Admit) && self.summary.is_some()
    }

    /// True when the retriever was actually queried during this cycle.
    pub fn executed(&self) -> bool {
        !self.query.is_empty()
    }
}

/// Knowledge admitted into a reasoning state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeItem {
    /// Id of the [`RetrievalRecord`] that produced this item.
    pub source_record: u64,
    pub text: String,
    /// Sub-question index this item answers.
    pub subquestion: usize,
}

/// Everything the retrieval steps need besides the state.
#[derive(Clone, Copy)]
pub struct RetrievalContext<'a> {
    pub model: &'a dyn LanguageModel,
    pub retriever: &'a dyn Retriever,
    pub templates: &'a PromptTemplates,
    pub top_k: usize,
}

fn sample_one(
    model: &dyn LanguageModel,
    purpose: PromptPurpose,
    prompt: &str,
    seed: u64,
    budget: &mut BudgetReport,
) -> Result<String, GenerationError> {
    let outcome = sample_completions(model, &PromptRequest::new(purpose, prompt), 1, seed)?;
    budget.account(BudgetEvent::LmCall { tokens: outcome.tokens_consumed });
    Ok(outcome.completions.into_iter().next().map(|c| c.text).unwrap_or_default())
}

/// Reads a yes/no verdict from the first word of `text`.
pub fn parse_necessity(text: &str) -> Option<bool> {
    let word: String = text
        .trim_start_matches(|c: char| !c.is_alphabetic())
        .chars()
        .take_while(|c| c.is_alphabetic())
        .collect::<String>()
        .to_lowercase();
    match word.as_str() {
        "yes" => Some(true),
        "no" => Some(false),
        _ => None,
    }
}

/// Asks the model whether retrieval is needed before the next step. Knowledge that already
/// answers the current sub-question short-circuits to `false` without a model call;
/// unparseable verdicts default to `true`.
pub fn needs_retrieval(
    state: &ReasoningState,
    model: &dyn LanguageModel,
    templates: &PromptTemplates,
    seed: u64,
    budget: &mut BudgetReport,
) -> Result<bool, RetrievalError> {
    if state.current_subquestion_covered() {
        return Ok(false);
    }
    let prompt = fill(&templates.retrieval_necessity, &[("instruction", &state.instruction_context())])?;
    let text = sample_one(model, PromptPurpose::Necessity, &prompt, seed, budget)?;
    Ok(parse_necessity(&text).unwrap_or(true))
}

pub fn render_query_prompt(state: &ReasoningState, templates: &PromptTemplates) -> Result<String, PromptError> {
    if state.question.trim().is_empty() {
        return Err(PromptError::EmptyQuestion);
    }
    fill(&templates.retrieve_query, &[("question", &state.instruction_context())])
}

/// Pulls the query out of a "The query is: ..." completion, dropping surrounding quotes.
pub fn parse_query(text: &str) -> Option<String> {
    let raw = extract_after_marker(text, QUERY_MARKER)?;
    let query = raw
        .trim_matches(|c: char| matches!(c, '"' | '\'' | '`' | '\u{201c}' | '\u{201d}') || c.is_whitespace())
        .to_string();
    (!query.is_empty()).then_some(query)
}

pub fn generate_query(
    state: &ReasoningState,
    model: &dyn LanguageModel,
    templates: &PromptTemplates,
    seed: u64,
    budget: &mut BudgetReport,
) -> Result<String, RetrievalError> {
    let prompt = render_query_prompt(state, templates)?;
    let text = sample_one(model, PromptPurpose::Query, &prompt, seed, budget)?;
    parse_query(&text).ok_or(RetrievalError::MissingQuery(text))
}

pub fn execute_query(
    query: &str,
    retriever: &dyn Retriever,
    top_k: usize,
    budget: &mut BudgetReport,
) -> Result<Vec<Document>, RetrievalError> {
    if query.trim().is_empty() {
        return Err(RetrievalError::EmptyQuery);
    }
    if top_k == 0 {
        return Err(RetrievalError::InvalidTopK);
    }
    budget.account(BudgetEvent::RetrieverCall);
    let mut documents = retriever.search(query, top_k)?;
    documents.truncate(top_k);
    Ok(documents)
}

fn format_documents(documents: &[Document]) -> String {
    documents
        .iter()
        .enumerate()
        .map(|(i, d)| format!("[{}] {}", i + 1, d.text.trim()))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Admit only on a positive "Evaluation:" statement; anything else rejects.
pub fn parse_reflection(text: &str) -> Reflection {
    let Some(rationale) = extract_after_marker(text, EVALUATION_MARKER.trim_end_matches(':')) else {
        return Reflection {
            verdict: Verdict::Reject,
            rationale: format!("unparseable evaluation: {}", text.trim()),
        };
    };
    let lowered = format!(" {} ", rationale.to_lowercase());
    const NEGATIVE: [&str; 11] = [
        " not ", "irrelevant", "unrelated", "insufficient", "cannot", "can't", "n't ", " no ", "lacks", "missing", "unable",
    ];
    const POSITIVE: [&str; 6] = ["relevant", "sufficient", "related", "useful", "can be used", "answers"];
    let verdict = if NEGATIVE.iter().any(|n| lowered.contains(n)) {
        Verdict::Reject
    } else if POSITIVE.iter().any(|p| lowered.contains(p)) {
        Verdict::Admit
    } else {
        Verdict::Reject
    };
    Reflection { verdict, rationale }
}

/// Judges the retrieved batch as a whole. An empty batch is rejected without a model call.
pub fn reflect(
    query: &str,
    documents: &[Document],
    question: &str,
    model: &dyn LanguageModel,
    templates: &PromptTemplates,
    seed: u64,
    budget: &mut BudgetReport,
) -> Result<Reflection, RetrievalError> {
    if documents.is_empty() {
        return Ok(Reflection {
            verdict: Verdict::Reject,
            rationale: "no documents retrieved".into(),
        });
    }
    let prompt = fill(
        &templates.reflect,
        &[
            ("query", query),
            ("retrieved_context", &format_documents(documents)),
            ("question", question),
        ],
    )?;
    let text = sample_one(model, PromptPurpose::Reflection, &prompt, seed, budget)?;
    Ok(parse_reflection(&text))
}

/// Condenses admitted documents into a single "Key Points" line.
pub fn summarize(
    documents: &[Document],
    question: &str,
    model: &dyn LanguageModel,
    templates: &PromptTemplates,
    seed: u64,
    budget: &mut BudgetReport,
) -> Result<String, RetrievalError> {
    let prompt = fill(
        &templates.summarize,
        &[("original_question", question), ("retrieved_context", &format_documents(documents))],
    )?;
    let text = sample_one(model, PromptPurpose::Summary, &prompt, seed, budget)?;
    text.lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .map(str::to_string)
        .ok_or(RetrievalError::EmptySummary)
}

/// Prune a branch whose majority agreement falls strictly below `tau`.
pub fn consistency_prune(reward: &NodeReward, tau: f64) -> bool {
    reward.confidence < tau
}

/// How a retrieval cycle ended when it did not produce a usable record.
#[derive(Debug, Clone, PartialEq)]
pub enum PipelineError {
    /// Misconfiguration; the whole search must stop.
    Fatal(GenerationError),
    /// The branch fails; the partial record is kept for the trace.
    Branch { record: Box<RetrievalRecord>, error: RetrievalError },
}

/// Per-step seeds for one cycle.
#[derive(Debug, Clone, Copy)]
pub struct PipelineSeeds {
    pub query: u64,
    pub reflection: u64,
    pub summary: u64,
}

/// Runs R1-R4 for `state`. A missing query or an unreachable retriever leaves the record
/// without knowledge (the action then reasons without it); a failed summary fails the branch.
pub fn run_pipeline(
    state: &ReasoningState,
    record_id: u64,
    ctx: RetrievalContext<'_>,
    seeds: PipelineSeeds,
    budget: &mut BudgetReport,
) -> Result<RetrievalRecord, PipelineError> {
    let mut record = RetrievalRecord::new(record_id);
    let lift = |e: RetrievalError, record: &RetrievalRecord| match e {
        RetrievalError::Generation(g) if g.is_fatal() => PipelineError::Fatal(g),
        other => PipelineError::Branch { record: Box::new(record.clone()), error: other },
    };

    match generate_query(state, ctx.model, ctx.templates, seeds.query, budget) {
        Ok(query) => record.query = query,
        Err(RetrievalError::Generation(g)) if g.is_fatal() => return Err(PipelineError::Fatal(g)),
        Err(e) => {
            record.error = Some(e.to_string());
            return Ok(record);
        }
    }

    match execute_query(&record.query, ctx.retriever, ctx.top_k, budget) {
        Ok(documents) => record.documents = documents,
        Err(e) => record.error = Some(e.to_string()),
    }

    let reflection = reflect(&record.query, &record.documents, &state.question, ctx.model, ctx.templates, seeds.reflection, budget)
        .map_err(|e| lift(e, &record))?;
    let admit = reflection.verdict == Verdict::Admit;
    record.reflection = Some(reflection);
    if admit {
        match summarize(&record.documents, &state.question, ctx.model, ctx.templates, seeds.summary, budget) {
            Ok(summary) => record.summary = Some(summary),
            Err(e) => return Err(lift(e, &record)),
        }
    }
    Ok(record)
}
