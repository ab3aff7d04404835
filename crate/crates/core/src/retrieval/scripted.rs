use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Document, RetrievalError, Retriever};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedDocument {
    pub doc_id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

/// Fixed query-to-documents map. Queries match exactly, then case- and
/// whitespace-insensitively; unknown queries return no documents.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScriptedRetriever {
    queries: BTreeMap<String, Vec<ScriptedDocument>>,
}

fn loose(query: &str) -> String {
    query.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

impl ScriptedRetriever {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_query(mut self, query: impl Into<String>, documents: Vec<ScriptedDocument>) -> Self {
        self.queries.insert(query.into(), documents);
        self
    }

    pub fn from_json_str(json: &str) -> Result<Self, RetrievalError> {
        serde_json::from_str(json).map_err(|e| RetrievalError::Load { path: "<inline>".into(), message: e.to_string() })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, RetrievalError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| RetrievalError::Load { path: path.display().to_string(), message: e.to_string() })?;
        serde_json::from_str(&text)
            .map_err(|e| RetrievalError::Load { path: path.display().to_string(), message: e.to_string() })
    }

    fn lookup(&self, query: &str) -> Option<&Vec<ScriptedDocument>> {
        self.queries.get(query).or_else(|| {
            let wanted = loose(query);
            self.queries.iter().find(|(k, _)| loose(k) == wanted).map(|(_, v)| v)
        })
    }
}

impl Retriever for ScriptedRetriever {
    /// Documents keep their scripted order; missing scores count down from the list length.
    fn search(&self, query: &str, top_k: usize) -> Result<Vec<Document>, RetrievalError> {
        if query.trim().is_empty() {
            return Err(RetrievalError::EmptyQuery);
        }
        let Some(docs) = self.lookup(query) else {
            return Ok(Vec::new());
        };
        let n = docs.len();
        Ok(docs
            .iter()
            .enumerate()
            .take(top_k)
            .map(|(rank, d)| Document {
                doc_id: d.doc_id.clone(),
                text: d.text.clone(),
                score: d.score.unwrap_or((n - rank) as f64),
            })
            .collect())
    }
}
