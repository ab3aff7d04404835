use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Document, RetrievalError, Retriever};

/// Web-search endpoint queried with `GET {endpoint}?q=...&count=...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WebSearchConfig {
    pub endpoint: String,
    /// Environment variable holding the API key, if the endpoint needs one.
    pub api_key_env: Option<String>,
    pub api_key_header: String,
    pub max_retries: u32,
    pub retry_backoff_ms: u64,
    pub timeout_secs: u64,
}

impl Default for WebSearchConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.bing.microsoft.com/v7.0/search".into(),
            api_key_env: Some("BING_SEARCH_API_KEY".into()),
            api_key_header: "Ocp-Apim-Subscription-Key".into(),
            max_retries: 3,
            retry_backoff_ms: 500,
            timeout_secs: 30,
        }
    }
}

/// Blocking client for Bing-style search responses (`webPages.value[]` with `name`, `url`
/// and `snippet`). A generic `results[]` array of `{doc_id|id|url, text|snippet, score}`
/// objects is accepted as well.
#[derive(Debug)]
pub struct WebSearchRetriever {
    config: WebSearchConfig,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl WebSearchRetriever {
    pub fn new(config: WebSearchConfig) -> Result<Self, RetrievalError> {
        let api_key = match &config.api_key_env {
            Some(var) => Some(
                std::env::var(var).map_err(|_| RetrievalError::Backend(format!("environment variable {var} is not set")))?,
            ),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| RetrievalError::Backend(e.to_string()))?;
        Ok(Self { config, api_key, client })
    }

    fn attempt(&self, query: &str, top_k: usize) -> Result<Result<Value, RetrievalError>, String> {
        let url = match reqwest::Url::parse_with_params(&self.config.endpoint, &[("q", query), ("count", &top_k.to_string())])
        {
            Ok(url) => url,
            Err(e) => return Ok(Err(RetrievalError::Backend(format!("invalid endpoint: {e}")))),
        };
        let mut request = self.client.get(url);
        if let Some(key) = &self.api_key {
            request = request.header(self.config.api_key_header.as_str(), key);
        }
        let response = request.send().map_err(|e| e.to_string())?;
        let status = response.status();
        if status.is_server_error() || status.as_u16() == 429 {
            return Err(format!("HTTP {status}"));
        }
        if !status.is_success() {
            let body = response.text().unwrap_or_default();
            return Ok(Err(RetrievalError::Backend(format!("HTTP {status}: {body}"))));
        }
        Ok(response.json::<Value>().map_err(|e| RetrievalError::Backend(format!("invalid response body: {e}"))))
    }
}

fn text_field<'a>(item: &'a Value, keys: &[&str]) -> Option<&'a str> {
    keys.iter().find_map(|k| item.get(*k).and_then(Value::as_str))
}

/// Extracts documents from a search response, best first.
pub(crate) fn parse_response(body: &Value) -> Vec<Document> {
    let items = body
        .pointer("/webPages/value")
        .or_else(|| body.get("results"))
        .and_then(Value::as_array)
        .cloned()
        .unwrap_or_default();
    let n = items.len();
    items
        .iter()
        .enumerate()
        .filter_map(|(rank, item)| {
            let doc_id = text_field(item, &["doc_id", "id", "url"])?.to_string();
            let snippet = text_field(item, &["text", "snippet"])?;
            let text = match text_field(item, &["name", "title"]) {
                Some(title) => format!("{title}: {snippet}"),
                None => snippet.to_string(),
            };
            let score = item.get("score").and_then(Value::as_f64).unwrap_or((n - rank) as f64);
            Some(Document { doc_id, text, score })
        })
        .collect()
}

impl Retriever for WebSearchRetriever {
    fn search(&self, query: &str, top_k: usize) -> Result<Vec<Document>, RetrievalError> {
        if query.trim().is_empty() {
            return Err(RetrievalError::EmptyQuery);
        }
        let attempts = self.config.max_retries + 1;
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(self.config.retry_backoff_ms << (attempt - 1).min(16)));
            }
            match self.attempt(query, top_k) {
                Ok(result) => {
                    let mut docs = parse_response(&result?);
                    docs.truncate(top_k);
                    return Ok(docs);
                }
                Err(message) => {
                    log::warn!("search attempt {} failed: {message}", attempt + 1);
                    last = message;
                }
            }
        }
        Err(RetrievalError::Unreachable { attempts, message: last })
    }
}
