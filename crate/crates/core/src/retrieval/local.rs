use std::collections::HashMap;
use std::path::Path;

use serde::Deserialize;

use super::{Document, RetrievalError, Retriever};

/// Lowercased alphanumeric runs.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone)]
struct IndexedDoc {
    doc_id: String,
    text: String,
    term_freqs: HashMap<String, u32>,
}

/// In-memory lexical index scoring `sum over query terms of tf * ln(1 + N / df)`.
///
/// Query terms are deduplicated, so repeating a word in the query does not boost it.
#[derive(Debug, Clone, Default)]
pub struct LocalIndex {
    docs: Vec<IndexedDoc>,
    doc_freq: HashMap<String, u32>,
}

#[derive(Deserialize)]
struct CorpusLine {
    #[serde(alias = "id")]
    doc_id: String,
    text: String,
}

impl LocalIndex {
    pub fn from_documents<I, S, T>(documents: I) -> Self
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: Into<String>,
    {
        let mut index = Self::default();
        for (doc_id, text) in documents {
            index.insert(doc_id.into(), text.into());
        }
        index
    }

    /// Reads a JSONL corpus of `{"doc_id": ..., "text": ...}` objects. Blank lines are skipped.
    pub fn from_jsonl(path: impl AsRef<Path>) -> Result<Self, RetrievalError> {
        let path = path.as_ref();
        let load_err = |message: String| RetrievalError::Load { path: path.display().to_string(), message };
        let content = std::fs::read_to_string(path).map_err(|e| load_err(e.to_string()))?;
        let mut index = Self::default();
        for (i, line) in content.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let doc: CorpusLine =
                serde_json::from_str(line).map_err(|e| load_err(format!("line {}: {e}", i + 1)))?;
            index.insert(doc.doc_id, doc.text);
        }
        Ok(index)
    }

    fn insert(&mut self, doc_id: String, text: String) {
        let mut term_freqs: HashMap<String, u32> = HashMap::new();
        for token in tokenize(&text) {
            *term_freqs.entry(token).or_default() += 1;
        }
        for term in term_freqs.keys() {
            *self.doc_freq.entry(term.clone()).or_default() += 1;
        }
        self.docs.push(IndexedDoc { doc_id, text, term_freqs });
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    fn idf(&self, term: &str) -> f64 {
        match self.doc_freq.get(term) {
            Some(&df) => (1.0 + self.docs.len() as f64 / df as f64).ln(),
            None => 0.0,
        }
    }

    /// Ranks every document with a positive score; ties order by `doc_id`, then text.
    pub fn rank(&self, query: &str) -> Vec<Document> {
        let mut terms = tokenize(query);
        terms.sort();
        terms.dedup();
        let weights: Vec<(&str, f64)> = terms.iter().map(|t| (t.as_str(), self.idf(t))).collect();
        let mut scored: Vec<Document> = self
            .docs
            .iter()
            .filter_map(|doc| {
                let score: f64 = weights
                    .iter()
                    .map(|(t, idf)| doc.term_freqs.get(*t).map_or(0.0, |&tf| tf as f64 * idf))
                    .sum();
                (score > 0.0).then(|| Document { doc_id: doc.doc_id.clone(), text: doc.text.clone(), score })
            })
            .collect();
        scored.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| a.doc_id.cmp(&b.doc_id))
                .then_with(|| a.text.cmp(&b.text))
        });
        scored
    }
}

impl Retriever for LocalIndex {
    fn search(&self, query: &str, top_k: usize) -> Result<Vec<Document>, RetrievalError> {
        if query.trim().is_empty() {
            return Err(RetrievalError::EmptyQuery);
        }
        let mut ranked = self.rank(query);
        ranked.truncate(top_k);
        Ok(ranked)
    }
}
