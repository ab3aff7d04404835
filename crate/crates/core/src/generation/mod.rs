//! Language-model backends: sampling `K` completions with log-likelihoods, answer
//! extraction, and answer equivalence.

mod remote;
mod scripted;

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::action::ActionKind;

pub use remote::{OpenAiChatModel, OpenAiChatConfig};
pub use scripted::{ScriptRule, ScriptedModel, ScriptedOutput};

/// Marker that introduces a final answer in generated text.
pub const ANSWER_MARKER: &str = "The answer is";

/// One sampled generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    pub answer: Option<String>,
    /// Summed token log-probability in nats; `0.0` when the backend does not expose it.
    pub log_likelihood: f64,
}

impl Completion {
    pub fn new(text: impl Into<String>, log_likelihood: f64) -> Self {
        let text = text.into();
        let answer = extract_answer(&text);
        Self { text, answer, log_likelihood }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationOutcome {
    pub completions: Vec<Completion>,
    pub tokens_consumed: u64,
}

/// What a prompt is for. Remote backends ignore it; the scripted backend matches on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptPurpose {
    #[serde(rename = "a1")]
    DirectAnswer,
    #[serde(rename = "a2")]
    QuickReasoning,
    #[serde(rename = "a3")]
    DecomposeQuestion,
    #[serde(rename = "a4")]
    RetrievalReasoning,
    #[serde(rename = "a5")]
    RetrievalDecompose,
    #[serde(rename = "a6")]
    SummarizedAnswer,
    Necessity,
    Query,
    Reflection,
    Summary,
}

impl PromptPurpose {
    pub fn for_action(action: ActionKind) -> Self {
        match action {
            ActionKind::DirectAnswer => Self::DirectAnswer,
            ActionKind::QuickReasoning => Self::QuickReasoning,
            ActionKind::DecomposeQuestion => Self::DecomposeQuestion,
            ActionKind::RetrievalReasoning => Self::RetrievalReasoning,
            ActionKind::RetrievalDecompose => Self::RetrievalDecompose,
            ActionKind::SummarizedAnswer => Self::SummarizedAnswer,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::DirectAnswer => "a1",
            Self::QuickReasoning => "a2",
            Self::DecomposeQuestion => "a3",
            Self::RetrievalReasoning => "a4",
            Self::RetrievalDecompose => "a5",
            Self::SummarizedAnswer => "a6",
            Self::Necessity => "necessity",
            Self::Query => "query",
            Self::Reflection => "reflection",
            Self::Summary => "summary",
        }
    }
}

impl fmt::Display for PromptPurpose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PromptRequest<'a> {
    pub purpose: PromptPurpose,
    pub text: &'a str,
}

impl<'a> PromptRequest<'a> {
    pub fn new(purpose: PromptPurpose, text: &'a str) -> Self {
        Self { purpose, text }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenerationError {
    #[error("invalid generation request: {0}")]
    InvalidRequest(String),
    #[error("backend unreachable after {attempts} attempt(s): {message}")]
    Unreachable { attempts: u32, message: String },
    #[error("backend error: {0}")]
    Backend(String),
    #[error("no script entry for prompt-key {key} (purpose {purpose})")]
    UnknownPromptKey { key: String, purpose: PromptPurpose },
    #[error("failed to load script {path}: {message}")]
    Load { path: String, message: String },
}

impl GenerationError {
    /// Errors that indicate a misconfigured run rather than a bad branch.
    pub fn is_fatal(&self) -> bool {
        matches!(self, GenerationError::UnknownPromptKey { .. })
    }
}

/// A completion backend. Implementations must tolerate concurrent calls.
pub trait LanguageModel: Send + Sync {
    fn sample(
        &self,
        request: &PromptRequest<'_>,
        k: usize,
        seed: u64,
    ) -> Result<GenerationOutcome, GenerationError>;
}

/// Samples exactly `k` completions, validating the request and the backend's reply.
pub fn sample_completions(
    model: &dyn LanguageModel,
    request: &PromptRequest<'_>,
    k: usize,
    seed: u64,
) -> Result<GenerationOutcome, GenerationError> {
    if k == 0 {
        return Err(GenerationError::InvalidRequest("k must be at least 1".into()));
    }
    if request.text.trim().is_empty() {
        return Err(GenerationError::InvalidRequest("prompt is empty".into()));
    }
    let outcome = model.sample(request, k, seed)?;
    if outcome.completions.len() != k {
        return Err(GenerationError::Backend(format!(
            "expected {k} completions, backend returned {}",
            outcome.completions.len()
        )));
    }
    if let Some(bad) = outcome.completions.iter().find(|c| !c.log_likelihood.is_finite()) {
        return Err(GenerationError::Backend(format!(
            "non-finite log-likelihood {} in completion",
            bad.log_likelihood
        )));
    }
    Ok(outcome)
}

/// Content hash of a rendered prompt: the first 16 hex digits of its SHA-256.
pub fn prompt_key(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    hex::encode(&digest[..8])
}

/// Whitespace token count, used as the token measure for backends that report none.
pub fn count_tokens(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

/// Text after the last case-insensitive occurrence of `marker`, up to the end of that line,
/// with a leading colon, surrounding whitespace and trailing periods removed.
pub fn extract_after_marker(text: &str, marker: &str) -> Option<String> {
    let lowered = text.to_ascii_lowercase();
    let at = lowered.rfind(&marker.to_ascii_lowercase())?;
    let rest = &text[at + marker.len()..];
    let rest = rest.trim_start();
    let rest = rest.strip_prefix(':').unwrap_or(rest);
    let line = rest.lines().next().unwrap_or("");
    let mut value = line.trim();
    while let Some(v) = value.strip_suffix('.') {
        value = v.trim_end();
    }
    (!value.is_empty()).then(|| value.to_string())
}

/// The final answer in `text`, read from the last "The answer is" marker.
pub fn extract_answer(text: &str) -> Option<String> {
    extract_after_marker(text, ANSWER_MARKER)
}

/// Decides whether two answers mean the same thing.
pub trait AnswerJudge: Send + Sync {
    fn equivalent(&self, a: &str, b: &str) -> bool;
}

/// Default judge: exact match after [`normalize_answer`].
#[derive(Debug, Clone, Copy, Default)]
pub struct NormalizedMatch;

impl AnswerJudge for NormalizedMatch {
    fn equivalent(&self, a: &str, b: &str) -> bool {
        equivalent(a, b)
    }
}

pub fn equivalent(a: &str, b: &str) -> bool {
    normalize_answer(a) == normalize_answer(b)
}

/// Lowercases, drops punctuation and the articles a/an/the, collapses whitespace, and
/// writes decimal numerals in canonical form (`42.0` and `042` both become `42`).
pub fn normalize_answer(text: &str) -> String {
    let lowered = text.to_lowercase();
    let mut words: Vec<String> = Vec::new();
    for raw in lowered.split_whitespace() {
        let numeric = raw
            .trim_end_matches(|c: char| !c.is_alphanumeric())
            .trim_start_matches(|c: char| !(c.is_alphanumeric() || matches!(c, '-' | '+' | '.')));
        if let Some(number) = canonical_decimal(&numeric.replace(',', "")) {
            words.push(number);
            continue;
        }
        let word: String = raw.chars().filter(|c| c.is_alphanumeric()).collect();
        if word.is_empty() || matches!(word.as_str(), "a" | "an" | "the") {
            continue;
        }
        words.push(word);
    }
    words.join(" ")
}

fn canonical_decimal(s: &str) -> Option<String> {
    let (negative, body) = match s.as_bytes().first()? {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    let all_digits = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
    if int_part.len() + frac_part.len() == 0 || !all_digits(int_part) || !all_digits(frac_part) {
        return None;
    }
    let int_part = int_part.trim_start_matches('0');
    let frac_part = frac_part.trim_end_matches('0');
    let mut out = String::new();
    if negative && !(int_part.is_empty() && frac_part.is_empty()) {
        out.push('-');
    }
    out.push_str(if int_part.is_empty() { "0" } else { int_part });
    if !frac_part.is_empty() {
        out.push('.');
        out.push_str(frac_part);
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent scanner: walk every byte offset, remember the last marker hit.
    fn reference_extract(text: &str) -> Option<String> {
        let marker = b"the answer is";
        let bytes = text.as_bytes();
        let mut last = None;
        for i in 0..bytes.len() {
            if bytes.len() - i >= marker.len()
                && bytes[i..i + marker.len()].eq_ignore_ascii_case(marker)
            {
                last = Some(i + marker.len());
            }
        }
        let mut rest: &str = &text[last?..];
        rest = rest.trim_start();
        if let Some(r) = rest.strip_prefix(':') {
            rest = r;
        }
        let end = rest.find('\n').unwrap_or(rest.len());
        let mut value = rest[..end].trim();
        while let Some(v) = value.strip_suffix('.') {
            value = v.trim_end();
        }
        (!value.is_empty()).then(|| value.to_string())
    }

    #[test]
    fn extracts_marked_answer() {
        assert_eq!(extract_answer("Step 1... The answer is: Paris.").as_deref(), Some("Paris"));
        assert_eq!(extract_answer("So the answer is 12").as_deref(), Some("12"));
        assert_eq!(extract_answer("no marker here"), None);
    }

    #[test]
    fn last_marker_wins() {
        let text = "The answer is: A. The answer is: B.";
        assert_eq!(reference_extract(text).as_deref(), Some("B"));
        assert_eq!(extract_answer(text).as_deref(), Some("B"));
    }

    #[test]
    fn answer_stops_at_line_end() {
        assert_eq!(extract_answer("The answer is: Paris.\nDone.").as_deref(), Some("Paris"));
        assert_eq!(extract_answer("The answer is: ."), None);
    }

    #[test]
    fn equivalence_examples() {
        assert!(equivalent("Paris", "paris."));
        assert!(equivalent("42", "42.0"));
        assert!(!equivalent("Paris", "London"));
        assert!(equivalent("The Eiffel Tower", "eiffel tower"));
        assert!(equivalent("-0.50", "-.5"));
        assert!(equivalent("1,000", "1000.00"));
        assert!(!equivalent("4", "4.01"));
    }

    #[test]
    fn numeric_canonicalization_agrees_with_float_parsing() {
        let samples = ["42", "42.0", "042", "0.50", ".5", "-3", "-3.000", "100", "1e3", "7.25", "007.250", "+8"];
        for a in samples {
            for b in samples {
                if let (Ok(x), Ok(y)) = (a.parse::<f64>(), b.parse::<f64>()) {
                    if a.contains('e') || b.contains('e') {
                        continue;
                    }
                    assert_eq!(equivalent(a, b), x == y, "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn prompt_key_is_sixteen_hex_digits() {
        let key = prompt_key("hello");
        assert_eq!(key.len(), 16);
        assert_eq!(key, "2cf24dba5fb0a30e");
        assert_ne!(prompt_key("hello "), key);
    }

    proptest! {
        #[test]
        fn extract_matches_reference_scanner(s in "[a-zA-Z :.\n]{0,40}(The answer is|the ANSWER is)?[a-zA-Z0-9 :.\n]{0,30}") {
            prop_assert_eq!(extract_answer(&s), reference_extract(&s));
        }

        #[test]
        fn equivalence_is_reflexive_and_symmetric(a in "\\PC{0,20}", b in "\\PC{0,20}") {
            prop_assert!(equivalent(&a, &a));
            prop_assert_eq!(equivalent(&a, &b), equivalent(&b, &a));
        }

        #[test]
        fn equivalence_is_transitive(pool in proptest::collection::vec("(the |a )?(paris|Paris\\.|42|42\\.0|london|an apple)", 3)) {
            if equivalent(&pool[0], &pool[1]) && equivalent(&pool[1], &pool[2]) {
                prop_assert!(equivalent(&pool[0], &pool[2]));
            }
        }

        #[test]
        fn marked_outputs_always_extract(answer in "[A-Za-z0-9][A-Za-z0-9 ]{0,12}[A-Za-z0-9]", prefix in "[a-z ]{0,20}") {
            let text = format!("{prefix} The answer is: {answer}.");
            prop_assert_eq!(extract_answer(&text), Some(answer));
        }
    }
}
