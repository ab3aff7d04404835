//! Which actions are legal in a state, how each action's prompt is rendered, and how a
//! kept generation turns into the successor state.

use thiserror::Error;

use crate::action::ActionKind;
use crate::generation::extract_answer;
use crate::prompts::{fill, PromptError, PromptTemplates};
use crate::retrieval::KnowledgeItem;
use crate::search::RunConfig;
use crate::state::{ReasoningState, ReasoningStep};

/// Text substituted into the A1 `{examples}` slot when no few-shot examples are configured.
pub const NO_EXAMPLES: &str = "(none)";

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("no legal action at the root state; enable A1 or A2")]
    NoRootAction,
    #[error("{0} output is missing the \"The answer is\" marker")]
    MissingAnswerMarker(ActionKind),
    #[error("{0} produced an empty output")]
    EmptyOutput(ActionKind),
    #[error(transparent)]
    Prompt(#[from] PromptError),
}

/// The kept generation for one action, plus the knowledge admitted by its retrieval (A4/A5).
#[derive(Debug, Clone, PartialEq)]
pub struct ActionOutput {
    pub prompt: String,
    pub text: String,
    pub knowledge: Option<KnowledgeItem>,
}

/// Actions permitted in `state`, in canonical order.
///
/// `retrieval_needed` is the necessity signal for this state; it gates A4 and A5.
pub fn legal_actions(
    state: &ReasoningState,
    config: &RunConfig,
    retrieval_needed: bool,
) -> Result<Vec<ActionKind>, PolicyError> {
    let can_decompose = state.subquestion_count < config.max_subquestions;
    let actions: Vec<ActionKind> = ActionKind::ALL
        .into_iter()
        .filter(|action| match action {
            ActionKind::DirectAnswer | ActionKind::QuickReasoning => true,
            ActionKind::DecomposeQuestion => can_decompose,
            ActionKind::RetrievalReasoning => retrieval_needed,
            ActionKind::RetrievalDecompose => retrieval_needed && can_decompose,
            ActionKind::SummarizedAnswer => !state.knowledge.is_empty() || state.steps.len() >= 2,
        })
        .filter(|action| !config.disabled_actions.contains(action))
        .collect();
    if actions.is_empty() && state.steps.is_empty() {
        return Err(PolicyError::NoRootAction);
    }
    Ok(actions)
}

/// True if retrieval could be legal here, i.e. whether asking for the necessity signal
/// can change the legal action set.
pub fn retrieval_possible(state: &ReasoningState, config: &RunConfig) -> bool {
    let a4 = !config.disabled_actions.contains(&ActionKind::RetrievalReasoning);
    let a5 = !config.disabled_actions.contains(&ActionKind::RetrievalDecompose)
        && state.subquestion_count < config.max_subquestions;
    a4 || a5
}

/// Renders the prompt sampled `K` times for `action`.
///
/// For A4 and A5 the state passed here already carries the knowledge admitted by the
/// retrieval sub-steps; A4 then reasons like A2 and A5 decomposes like A3.
pub fn render_prompt(
    action: ActionKind,
    state: &ReasoningState,
    templates: &PromptTemplates,
) -> Result<String, PolicyError> {
    if state.question.trim().is_empty() {
        return Err(PromptError::EmptyQuestion.into());
    }
    let instruction = state.instruction_context();
    let rendered = match action {
        ActionKind::DirectAnswer => fill(
            &templates.direct_answer,
            &[("examples", NO_EXAMPLES), ("instruction", &instruction)],
        )?,
        ActionKind::QuickReasoning | ActionKind::RetrievalReasoning => {
            fill(&templates.quick_reasoning, &[("instruction", &instruction)])?
        }
        ActionKind::DecomposeQuestion | ActionKind::RetrievalDecompose => {
            fill(&templates.decompose, &[("instruction", &instruction)])?
        }
        ActionKind::SummarizedAnswer => fill(
            &templates.summarize,
            &[
                ("original_question", state.question.trim()),
                ("retrieved_context", &state.knowledge_context()),
            ],
        )?,
    };
    Ok(rendered)
}

/// Applies a kept output to `state`, returning the successor. The input is not modified.
pub fn apply_action(
    state: &ReasoningState,
    action: ActionKind,
    output: &ActionOutput,
) -> Result<ReasoningState, PolicyError> {
    if output.text.trim().is_empty() {
        return Err(PolicyError::EmptyOutput(action));
    }
    let answer = extract_answer(&output.text);
    if action == ActionKind::DirectAnswer && answer.is_none() {
        return Err(PolicyError::MissingAnswerMarker(action));
    }

    let mut next = state.clone();
    if action.decomposes() {
        next.subquestion_count += 1;
    }
    if action.uses_retrieval() {
        if let Some(item) = &output.knowledge {
            next.knowledge.push(item.clone());
        }
    }
    if action.can_answer() {
        next.answered = answer.clone();
    }
    next.steps.push(ReasoningStep {
        action,
        prompt_rendered: output.prompt.clone(),
        output_text: output.text.clone(),
        extracted_answer: answer,
    });
    Ok(next)
}

/// A state is terminal once answered, at the depth limit, or when no action could apply.
pub fn is_terminal(state: &ReasoningState, config: &RunConfig) -> bool {
    state.answered.is_some()
        || state.depth() >= config.max_depth
        || legal_actions(state, config, true).map_or(true, |a| a.is_empty())
}
