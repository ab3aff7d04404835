use std::collections::BTreeSet;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ragsearch::{ActionKind, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "ragsearch", version, about = "Retrieval-augmented tree search for question answering")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Answer one question and print the winning answer.
    Ask {
        question: String,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        backend: BackendArgs,
        /// Write the search trace here as JSON.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Run a JSONL dataset and write per-example traces plus metrics.json.
    Bench {
        /// JSONL file of {id, question, gold_answer, choices?, corpus_ref?} records.
        #[arg(long)]
        dataset: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        backend: BackendArgs,
        #[arg(long, default_value = "runs/latest")]
        out_dir: PathBuf,
    },
    /// Run the bundled scripted worlds and check their expectations.
    Worlds {
        /// Only run worlds whose name contains this string.
        #[arg(long)]
        filter: Option<String>,
        #[command(flatten)]
        search: SearchArgs,
    },
}

/// Search settings. Each flag sets the `RunConfig` field of the same name.
#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long, default_value_t = RunConfig::default().rollouts)]
    pub rollouts: usize,
    #[arg(long, default_value_t = RunConfig::default().max_depth)]
    pub max_depth: usize,
    #[arg(long, default_value_t = RunConfig::default().max_subquestions)]
    pub max_subquestions: usize,
    /// Completions sampled per new node.
    #[arg(long, default_value_t = RunConfig::default().k_completions)]
    pub k_completions: usize,
    /// UCT exploration constant.
    #[arg(long, default_value_t = RunConfig::default().c_uct)]
    pub c_uct: f64,
    /// Documents requested per retrieval.
    #[arg(long, default_value_t = RunConfig::default().top_k_docs)]
    pub top_k: usize,
    /// Branches whose majority confidence is below this are pruned.
    #[arg(long, default_value_t = RunConfig::default().tau_prune)]
    pub tau_prune: f64,
    /// Comma-separated action codes to disable, e.g. A4,A5.
    #[arg(long, value_delimiter = ',')]
    pub disable_actions: Vec<ActionKind>,
    #[arg(long, default_value_t = RunConfig::default().seed)]
    pub seed: u64,
    /// Evaluate sibling actions one at a time instead of in parallel.
    #[arg(long)]
    pub sequential: bool,
    /// Record a wall time of zero so outputs are byte-reproducible.
    #[arg(long)]
    pub frozen_clock: bool,
}

impl SearchArgs {
    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            rollouts: self.rollouts,
            max_depth: self.max_depth,
            max_subquestions: self.max_subquestions,
            k_completions: self.k_completions,
            c_uct: self.c_uct,
            top_k_docs: self.top_k,
            tau_prune: self.tau_prune,
            disabled_actions: self.disable_actions.iter().copied().collect::<BTreeSet<_>>(),
            seed: self.seed,
            parallel_expansion: !self.sequential,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RetrieverKind {
    /// Lexical index over a JSONL corpus.
    Local,
    /// Web search API.
    Remote,
    /// Fixed query-to-documents JSON map.
    Scripted,
}

#[derive(Debug, Args)]
pub struct BackendArgs {
    /// OpenAI-compatible base URL, e.g. http://localhost:8000/v1.
    #[arg(long, conflicts_with = "lm_scripted", required_unless_present = "lm_scripted")]
    pub lm_endpoint: Option<String>,
    /// Scripted model JSON; replaces the HTTP model.
    #[arg(long)]
    pub lm_scripted: Option<PathBuf>,
    #[arg(long, default_value = "qwen2.5-7b-instruct")]
    pub lm_model: String,
    /// Environment variable holding the model API key.
    #[arg(long, default_value = "OPENAI_API_KEY")]
    pub lm_api_key_env: String,
    #[arg(long, value_enum, default_value_t = RetrieverKind::Local)]
    pub retriever: RetrieverKind,
    /// Corpus for the local (JSONL) or scripted (JSON) retriever.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub search_endpoint: Option<String>,
    /// Environment variable holding the search API key.
    #[arg(long, default_value = "BING_SEARCH_API_KEY")]
    pub search_api_key_env: String,
    /// Directory of prompt templates overriding the built-in ones.
    #[arg(long)]
    pub templates: Option<PathBuf>,
}
