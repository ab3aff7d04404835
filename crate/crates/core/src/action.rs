use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The six node-expansion moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ActionKind {
    /// A1: answer immediately from the current context.
    #[serde(rename = "A1")]
    DirectAnswer,
    /// A2: one incremental reasoning step.
    #[serde(rename = "A2")]
    QuickReasoning,
    /// A3: break the question into a sub-question and answer it.
    #[serde(rename = "A3")]
    DecomposeQuestion,
    /// A4: retrieve external knowledge, then take a reasoning step.
    #[serde(rename = "A4")]
    RetrievalReasoning,
    /// A5: retrieve external knowledge, then decompose.
    #[serde(rename = "A5")]
    RetrievalDecompose,
    /// A6: summarize the gathered knowledge and steps into an answer.
    #[serde(rename = "A6")]
    SummarizedAnswer,
}

impl ActionKind {
    /// All actions in canonical (A1..A6) order.
    pub const ALL: [ActionKind; 6] = [
        ActionKind::DirectAnswer,
        ActionKind::QuickReasoning,
        ActionKind::DecomposeQuestion,
        ActionKind::RetrievalReasoning,
        ActionKind::RetrievalDecompose,
        ActionKind::SummarizedAnswer,
    ];

    /// Short code, `"A1"` through `"A6"`.
    pub fn code(self) -> &'static str {
        match self {
            ActionKind::DirectAnswer => "A1",
            ActionKind::QuickReasoning => "A2",
            ActionKind::DecomposeQuestion => "A3",
            ActionKind::RetrievalReasoning => "A4",
            ActionKind::RetrievalDecompose => "A5",
            ActionKind::SummarizedAnswer => "A6",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ActionKind::DirectAnswer => "Direct Answer",
            ActionKind::QuickReasoning => "Quick Reasoning",
            ActionKind::DecomposeQuestion => "Decompose Question",
            ActionKind::RetrievalReasoning => "Retrieval Reasoning",
            ActionKind::RetrievalDecompose => "Retrieval Decompose",
            ActionKind::SummarizedAnswer => "Summarized Answer",
        }
    }

    /// Zero-based position in [`ActionKind::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn uses_retrieval(self) -> bool {
        matches!(self, ActionKind::RetrievalReasoning | ActionKind::RetrievalDecompose)
    }

    pub fn decomposes(self) -> bool {
        matches!(self, ActionKind::DecomposeQuestion | ActionKind::RetrievalDecompose)
    }

    /// Actions whose output may carry the final answer.
    pub fn can_answer(self) -> bool {
        matches!(self, ActionKind::DirectAnswer | ActionKind::SummarizedAnswer)
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown action `{0}` (expected A1..A6)")]
pub struct ParseActionError(pub String);

impl FromStr for ActionKind {
    type Err = ParseActionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let trimmed = s.trim();
        ActionKind::ALL
            .into_iter()
            .find(|a| a.code().eq_ignore_ascii_case(trimmed))
            .ok_or_else(|| ParseActionError(trimmed.to_string()))
    }
}
