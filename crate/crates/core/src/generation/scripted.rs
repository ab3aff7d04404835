//! Deterministic scripted backend for tests and fixtures.
//!
//! A script maps prompt-keys (see [`prompt_key`]) to output lists, and may add ordered
//! fallback rules that match on the prompt's purpose and on substrings of its text. Exact
//! keys are consulted first, then the first matching rule. An unmatched prompt is an error
//! naming its key.
//!
//! ```json
//! {
//!   "entries": { "2cf24dba5fb0a30e": ["The answer is: 4."] },
//!   "rules": [
//!     { "purpose": "a1", "contains": ["Winston Groom"],
//!       "outputs": [{ "text": "The answer is: Winston Groom.", "log_likelihood": -0.1 }] }
//!   ]
//! }
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    count_tokens, prompt_key, Completion, GenerationError, GenerationOutcome, LanguageModel,
    PromptPurpose, PromptRequest,
};

/// One scripted output: bare text (log-likelihood 0) or text with a log-likelihood.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScriptedOutput {
    Text(String),
    Scored {
        text: String,
        #[serde(default)]
        log_likelihood: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tokens: Option<u64>,
    },
}

impl ScriptedOutput {
    pub fn scored(text: impl Into<String>, log_likelihood: f64) -> Self {
        ScriptedOutput::Scored {
            text: text.into(),
            log_likelihood,
            tokens: None,
        }
    }

    fn text(&self) -> &str {
        match self {
            ScriptedOutput::Text(t) | ScriptedOutput::Scored { text: t, .. } => t,
        }
    }

    fn log_likelihood(&self) -> f64 {
        match self {
            ScriptedOutput::Text(_) => 0.0,
            ScriptedOutput::Scored { log_likelihood, .. } => *log_likelihood,
        }
    }

    fn tokens(&self) -> u64 {
        match self {
            ScriptedOutput::Scored { tokens: Some(n), .. } => *n,
            other => count_tokens(other.text()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptRule {
    /// Restricts the rule to one purpose; `None` matches any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub purpose: Option<PromptPurpose>,
    /// Every listed substring must occur in the prompt.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub contains: Vec<String>,
    /// None of the listed substrings may occur in the prompt.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub excludes: Vec<String>,
    pub outputs: Vec<ScriptedOutput>,
}

impl ScriptRule {
    fn matches(&self, request: &PromptRequest<'_>) -> bool {
        self.purpose.is_none_or(|p| p == request.purpose)
            && self.contains.iter().all(|s| request.text.contains(s.as_str()))
            && !self.excludes.iter().any(|s| request.text.contains(s.as_str()))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScriptedModel {
    #[serde(default)]
    pub entries: BTreeMap<String, Vec<ScriptedOutput>>,
    #[serde(default)]
    pub rules: Vec<ScriptRule>,
}

impl ScriptedModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_entry(mut self, key: impl Into<String>, outputs: Vec<ScriptedOutput>) -> Self {
        self.entries.insert(key.into(), outputs);
        self
    }

    pub fn with_rule(mut self, rule: ScriptRule) -> Self {
        self.rules.push(rule);
        self
    }

    pub fn from_json_str(json: &str) -> Result<Self, GenerationError> {
        let model: Self = serde_json::from_str(json).map_err(|e| GenerationError::Load {
            path: "<inline>".into(),
            message: e.to_string(),
        })?;
        model.validate("<inline>")?;
        Ok(model)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, GenerationError> {
        let path = path.as_ref();
        let load_err = |message: String| GenerationError::Load {
            path: path.display().to_string(),
            message,
        };
        let raw = fs::read_to_string(path).map_err(|e| load_err(e.to_string()))?;
        let model: Self = serde_json::from_str(&raw).map_err(|e| load_err(e.to_string()))?;
        model.validate(&path.display().to_string())?;
        Ok(model)
    }

    /// Rejects entries and rules without outputs; `path` only labels the error.
    pub fn validate(&self, path: &str) -> Result<(), GenerationError> {
        let empty_entry = self.entries.iter().find(|(_, v)| v.is_empty()).map(|(k, _)| format!("entry {k}"));
        let empty_rule = self.rules.iter().position(|r| r.outputs.is_empty()).map(|i| format!("rule {i}"));
        match empty_entry.or(empty_rule) {
            Some(what) => Err(GenerationError::Load {
                path: path.to_string(),
                message: format!("{what} has no outputs"),
            }),
            None => Ok(()),
        }
    }

    fn lookup(&self, request: &PromptRequest<'_>) -> Result<&[ScriptedOutput], GenerationError> {
        let key = prompt_key(request.text);
        if let Some(outputs) = self.entries.get(&key) {
            return Ok(outputs);
        }
        self.rules
            .iter()
            .find(|r| r.matches(request))
            .map(|r| r.outputs.as_slice())
            .ok_or(GenerationError::UnknownPromptKey {
                key,
                purpose: request.purpose,
            })
    }
}

impl LanguageModel for ScriptedModel {
    /// Returns the first `k` scripted outputs, cycling when the list is shorter than `k`.
    /// The seed does not change the result.
    fn sample(
        &self,
        request: &PromptRequest<'_>,
        k: usize,
        _seed: u64,
    ) -> Result<GenerationOutcome, GenerationError> {
        let outputs = self.lookup(request)?;
        let picked: Vec<&ScriptedOutput> = outputs.iter().cycle().take(k).collect();
        Ok(GenerationOutcome {
            tokens_consumed: picked.iter().map(|o| o.tokens()).sum(),
            completions: picked
                .into_iter()
                .map(|o| Completion::new(o.text(), o.log_likelihood()))
                .collect(),
        })
    }
}
