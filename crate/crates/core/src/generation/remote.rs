//! Chat-completions client for OpenAI-compatible endpoints.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{
    count_tokens, Completion, GenerationError, GenerationOutcome, LanguageModel, PromptRequest,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpenAiChatConfig {
    /// Base URL up to and including the version segment, e.g. `http://localhost:8000/v1`.
    pub base_url: String,
    pub model: String,
    /// Environment variable holding the bearer token. Unset variables send no auth header.
    pub api_key_env: Option<String>,
    pub temperature: f32,
    pub max_tokens: Option<u32>,
    pub max_retries: u32,
    pub retry_backoff_ms: u64,
    pub timeout_secs: u64,
}

impl Default for OpenAiChatConfig {
    fn default() -> Self {
        Self {
            base_url: "http://localhost:8000/v1".into(),
            model: "qwen2.5-7b-instruct".into(),
            api_key_env: Some("OPENAI_API_KEY".into()),
            temperature: 0.8,
            max_tokens: Some(512),
            max_retries: 3,
            retry_backoff_ms: 250,
            timeout_secs: 120,
        }
    }
}

#[derive(Debug)]
pub struct OpenAiChatModel {
    config: OpenAiChatConfig,
    api_key: Option<String>,
    http: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
    usage: Option<Usage>,
}

#[derive(Deserialize)]
struct Choice {
    message: ResponseMessage,
    #[serde(default)]
    logprobs: Option<ChoiceLogprobs>,
}

#[derive(Deserialize)]
struct ResponseMessage {
    content: Option<String>,
}

#[derive(Deserialize)]
struct ChoiceLogprobs {
    content: Option<Vec<TokenLogprob>>,
}

#[derive(Deserialize)]
struct TokenLogprob {
    logprob: f64,
}

#[derive(Deserialize)]
struct Usage {
    completion_tokens: u64,
}

impl OpenAiChatModel {
    pub fn new(config: OpenAiChatConfig) -> Result<Self, GenerationError> {
        let http = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| GenerationError::Backend(format!("http client: {e}")))?;
        let api_key = config
            .api_key_env
            .as_deref()
            .and_then(|var| std::env::var(var).ok())
            .filter(|k| !k.is_empty());
        Ok(Self { config, api_key, http })
    }

    fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'))
    }

    fn post_with_retries(&self, body: &serde_json::Value) -> Result<ChatResponse, GenerationError> {
        let attempts = self.config.max_retries + 1;
        let mut last_error = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                let backoff = self.config.retry_backoff_ms.saturating_mul(1 << (attempt - 1).min(6));
                std::thread::sleep(Duration::from_millis(backoff));
            }
            let mut request = self.http.post(self.endpoint()).json(body);
            if let Some(key) = &self.api_key {
                request = request.bearer_auth(key);
            }
            match request.send() {
                Ok(response) => {
                    let status = response.status();
                    if status.is_success() {
                        return response
                            .json::<ChatResponse>()
                            .map_err(|e| GenerationError::Backend(format!("malformed response: {e}")));
                    }
                    let text = response.text().unwrap_or_default();
                    last_error = format!("HTTP {status}: {}", text.chars().take(200).collect::<String>());
                    if !(status.is_server_error() || status.as_u16() == 429) {
                        return Err(GenerationError::Backend(last_error));
                    }
                }
                Err(e) => last_error = e.to_string(),
            }
            log::warn!("chat completion attempt {} failed: {last_error}", attempt + 1);
        }
        Err(GenerationError::Unreachable { attempts, message: last_error })
    }
}

impl LanguageModel for OpenAiChatModel {
    fn sample(
        &self,
        request: &PromptRequest<'_>,
        k: usize,
        seed: u64,
    ) -> Result<GenerationOutcome, GenerationError> {
        let mut completions = Vec::with_capacity(k);
        let mut tokens = 0u64;
        // Some servers ignore `n`; keep asking for the remainder with shifted seeds.
        let mut round = 0u64;
        while completions.len() < k {
            let body = json!({
                "model": self.config.model,
                "messages": [{ "role": "user", "content": request.text }],
                "n": k - completions.len(),
                "temperature": self.config.temperature,
                "max_tokens": self.config.max_tokens,
                "seed": seed.wrapping_add(round),
                "logprobs": true,
            });
            let response = self.post_with_retries(&body)?;
            if response.choices.is_empty() {
                return Err(GenerationError::Backend("response carried no choices".into()));
            }
            let mut round_tokens = 0u64;
            for choice in response.choices.into_iter().take(k - completions.len()) {
                let text = choice.message.content.unwrap_or_default();
                let log_likelihood = choice
                    .logprobs
                    .and_then(|l| l.content)
                    .map_or(0.0, |tokens| tokens.iter().map(|t| t.logprob).sum());
                round_tokens += count_tokens(&text);
                completions.push(Completion::new(text, log_likelihood));
            }
            tokens += response.usage.map_or(round_tokens, |u| u.completion_tokens);
            round += 1;
        }
        Ok(GenerationOutcome { completions, tokens_consumed: tokens })
    }
}
