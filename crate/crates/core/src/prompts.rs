//! Prompt templates for the six actions and the retrieval sub-steps.
//!
//! Templates are plain UTF-8 files with `{placeholder}` slots. The defaults are compiled in
//! from the crate's `templates/` directory; [`PromptTemplates::from_dir`] loads a replacement
//! set with the same file names.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("template placeholder `{{{0}}}` has no value")]
    UnsubstitutedPlaceholder(String),
    #[error("cannot render a prompt for an empty question")]
    EmptyQuestion,
    #[error("failed to read template {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplates {
    pub direct_answer: String,
    pub quick_reasoning: String,
    pub decompose: String,
    pub retrieve_query: String,
    pub reflect: String,
    pub summarize: String,
    pub retrieval_necessity: String,
}

pub const TEMPLATE_FILES: [&str; 7] = [
    "a1_direct_answer.txt",
    "a2_quick_reasoning.txt",
    "a3_decompose.txt",
    "a4_retrieve_query.txt",
    "a5_reflect.txt",
    "a6_summarize.txt",
    "retrieval_necessity.txt",
];

impl Default for PromptTemplates {
    fn default() -> Self {
        Self {
            direct_answer: include_str!("../templates/a1_direct_answer.txt").to_string(),
            quick_reasoning: include_str!("../templates/a2_quick_reasoning.txt").to_string(),
            decompose: include_str!("../templates/a3_decompose.txt").to_string(),
            retrieve_query: include_str!("../templates/a4_retrieve_query.txt").to_string(),
            reflect: include_str!("../templates/a5_reflect.txt").to_string(),
            summarize: include_str!("../templates/a6_summarize.txt").to_string(),
            retrieval_necessity: include_str!("../templates/retrieval_necessity.txt").to_string(),
        }
    }
}

impl PromptTemplates {
    pub fn from_dir(dir: impl AsRef<Path>) -> Result<Self, PromptError> {
        let dir = dir.as_ref();
        let read = |name: &str| {
            let path = dir.join(name);
            fs::read_to_string(&path).map_err(|source| PromptError::Io { path, source })
        };
        Ok(Self {
            direct_answer: read(TEMPLATE_FILES[0])?,
            quick_reasoning: read(TEMPLATE_FILES[1])?,
            decompose: read(TEMPLATE_FILES[2])?,
            retrieve_query: read(TEMPLATE_FILES[3])?,
            reflect: read(TEMPLATE_FILES[4])?,
            summarize: read(TEMPLATE_FILES[5])?,
            retrieval_necessity: read(TEMPLATE_FILES[6])?,
        })
    }
}

/// Substitutes `{name}` slots in one pass. Braces that do not enclose a lowercase
/// identifier are copied through, and substituted values are never rescanned.
pub fn fill(template: &str, values: &[(&str, &str)]) -> Result<String, PromptError> {
    let mut out = String::with_capacity(template.len() + 256);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let ident_len = after
            .find(|c: char| !(c.is_ascii_lowercase() || c == '_'))
            .unwrap_or(after.len());
        if ident_len > 0 && after[ident_len..].starts_with('}') {
            let name = &after[..ident_len];
            let value = values
                .iter()
                .find(|(k, _)| *k == name)
                .map(|(_, v)| *v)
                .ok_or_else(|| PromptError::UnsubstitutedPlaceholder(name.to_string()))?;
            out.push_str(value);
            rest = &after[ident_len + 1..];
        } else {
            out.push('{');
            rest = after;
        }
    }
    out.push_str(rest);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fills_every_slot() {
        let out = fill("Q: {question} / {question} [{x}]", &[("question", "why"), ("x", "{y}")]).unwrap();
        assert_eq!(out, "Q: why / why [{y}]");
    }

    #[test]
    fn missing_value_is_an_error() {
        let err = fill("{instruction}", &[]).unwrap_err();
        assert!(matches!(err, PromptError::UnsubstitutedPlaceholder(ref n) if n == "instruction"));
    }

    #[test]
    fn literal_braces_pass_through() {
        assert_eq!(fill("a {} {Not} {", &[]).unwrap(), "a {} {Not} {");
    }

    #[test]
    fn bundled_templates_match_template_directory() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("templates");
        assert_eq!(PromptTemplates::from_dir(dir).unwrap(), PromptTemplates::default());
    }

    #[test]
    fn appendix_markers_are_present() {
        let t = PromptTemplates::default();
        assert!(t.direct_answer.contains("\"The answer is: <ANSWER>.\""));
        assert!(t.quick_reasoning.contains("\"The answer is: <ANSWER>.\""));
        assert!(t.decompose.contains("Now we can answer the question: <original question>"));
        assert!(t.retrieve_query.contains("\"The query is: <your retrieve query>\""));
        assert!(t.reflect.contains("starting with \"Evaluation:\""));
        assert!(t.summarize.contains("Key Points: Point 1: Relevant information"));
    }
}
