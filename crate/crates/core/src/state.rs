use serde::{Deserialize, Serialize};

use crate::action::ActionKind;
use crate::retrieval::KnowledgeItem;

/// One applied action: the prompt that was sent and the output that was kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasoningStep {
    pub action: ActionKind,
    pub prompt_rendered: String,
    pub output_text: String,
    pub extracted_answer: Option<String>,
}

/// A partial reasoning trajectory. States are append-only: successors extend, never rewrite.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReasoningState {
    pub question: String,
    pub steps: Vec<ReasoningStep>,
    pub knowledge: Vec<KnowledgeItem>,
    pub subquestion_count: usize,
    pub answered: Option<String>,
}

impl ReasoningState {
    pub fn new(question: impl Into<String>) -> Self {
        Self {
            question: question.into(),
            ..Self::default()
        }
    }

    /// Number of applied steps; equals the depth of the node holding this state.
    pub fn depth(&self) -> usize {
        self.steps.len()
    }

    /// True when some admitted knowledge item already answers the current sub-question.
    pub fn current_subquestion_covered(&self) -> bool {
        self.knowledge
            .iter()
            .any(|k| k.subquestion == self.subquestion_count)
    }

    /// The question followed by admitted knowledge and previous steps, as fed to the
    /// `{instruction}` slot of the action templates.
    pub fn instruction_context(&self) -> String {
        let mut out = self.question.trim().to_string();
        if !self.knowledge.is_empty() {
            out.push_str("\n\nKnowledge:");
            for item in &self.knowledge {
                out.push_str("\n- ");
                out.push_str(item.text.trim());
            }
        }
        if !self.steps.is_empty() {
            out.push_str("\n\nPrevious steps:");
            for (i, step) in self.steps.iter().enumerate() {
                out.push_str(&format!("\nStep {} ({}): {}", i + 1, step.action.name(), step.output_text.trim()));
            }
        }
        out
    }

    /// Knowledge items joined one per line, or the previous step outputs when nothing has
    /// been retrieved yet.
    pub fn knowledge_context(&self) -> String {
        let mut lines: Vec<String> = self
            .knowledge
            .iter()
            .map(|k| k.text.trim().to_string())
            .collect();
        lines.extend(self.steps.iter().map(|s| s.output_text.trim().to_string()));
        lines.join("\n")
    }

    /// Short one-line description used in traces.
    pub fn summary(&self) -> String {
        let text = match self.steps.last() {
            Some(step) => format!("{}: {}", step.action.code(), step.output_text.trim()),
            None => format!("root: {}", self.question.trim()),
        };
        let single_line = text.split_whitespace().collect::<Vec<_>>().join(" ");
        match single_line.char_indices().nth(160) {
            Some((cut, _)) => format!("{}...", &single_line[..cut]),
            None => single_line,
        }
    }
}
