use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use ragsearch::generation::{OpenAiChatConfig, OpenAiChatModel, ScriptedModel};
use ragsearch::retrieval::{LocalIndex, ScriptedRetriever, WebSearchConfig, WebSearchRetriever};
use ragsearch::{Backends, LanguageModel, PromptTemplates, Retriever};

use crate::args::{BackendArgs, RetrieverKind};

/// Backends shared by every question, plus what is needed to swap in per-example corpora.
pub struct BackendFactory {
    model: Arc<dyn LanguageModel>,
    retriever: Arc<dyn Retriever>,
    templates: Arc<PromptTemplates>,
    kind: RetrieverKind,
}

impl BackendFactory {
    pub fn new(args: &BackendArgs) -> Result<Self> {
        let model: Arc<dyn LanguageModel> = match (&args.lm_scripted, &args.lm_endpoint) {
            (Some(path), _) => Arc::new(ScriptedModel::from_path(path)?),
            (None, Some(endpoint)) => Arc::new(OpenAiChatModel::new(OpenAiChatConfig {
                base_url: endpoint.clone(),
                model: args.lm_model.clone(),
                api_key_env: Some(args.lm_api_key_env.clone()),
                ..OpenAiChatConfig::default()
            })?),
            (None, None) => bail!("one of --lm-endpoint or --lm-scripted is required"),
        };
        let retriever: Arc<dyn Retriever> = match args.retriever {
            RetrieverKind::Local => match &args.corpus {
                Some(path) => Arc::new(LocalIndex::from_jsonl(path)?),
                None => Arc::new(LocalIndex::from_documents(Vec::<(String, String)>::new())),
            },
            RetrieverKind::Scripted => {
                let path = args.corpus.as_ref().context("--retriever scripted needs --corpus <map.json>")?;
                Arc::new(ScriptedRetriever::from_path(path)?)
            }
            RetrieverKind::Remote => {
                let mut config = WebSearchConfig { api_key_env: Some(args.search_api_key_env.clone()), ..WebSearchConfig::default() };
                if let Some(endpoint) = &args.search_endpoint {
                    config.endpoint = endpoint.clone();
                }
                Arc::new(WebSearchRetriever::new(config)?)
            }
        };
        let templates = match &args.templates {
            Some(dir) => PromptTemplates::from_dir(dir)?,
            None => PromptTemplates::default(),
        };
        Ok(Self { model, retriever, templates: Arc::new(templates), kind: args.retriever })
    }

    pub fn shared(&self) -> Backends {
        Backends::new(self.model.clone(), self.retriever.clone()).with_templates(self.templates.clone())
    }

    /// A local corpus named by the example replaces the shared one; relative paths are
    /// resolved against the dataset's directory.
    pub fn for_example(&self, corpus_ref: Option<&Path>, dataset_dir: &Path) -> Result<Backends, String> {
        match (corpus_ref, self.kind) {
            (Some(corpus), RetrieverKind::Local) => {
                let path: PathBuf = if corpus.is_absolute() { corpus.to_path_buf() } else { dataset_dir.join(corpus) };
                let index = LocalIndex::from_jsonl(&path).map_err(|e| e.to_string())?;
                Ok(Backends::new(self.model.clone(), Arc::new(index)).with_templates(self.templates.clone()))
            }
            _ => Ok(self.shared()),
        }
    }
}
