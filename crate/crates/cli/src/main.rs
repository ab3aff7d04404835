mod args;
mod backends;

use std::path::Path;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use ragsearch::eval::{load_dataset, run_benchmark, BenchmarkOptions};
use ragsearch::search::SearchError;
use ragsearch::trace::dump_trace;
use ragsearch::world::{fixtures_dir, load_worlds};
use ragsearch::{Clock, SearchEngine};

use args::{Cli, Command, SearchArgs};
use backends::BackendFactory;

fn clock(search: &SearchArgs) -> Clock {
    if search.frozen_clock {
        Clock::Frozen
    } else {
        Clock::System
    }
}

fn ask(question: &str, search: &SearchArgs, factory: &BackendFactory, trace_path: Option<&Path>) -> Result<()> {
    let engine = SearchEngine::new(search.run_config(), factory.shared())?.with_clock(clock(search));
    let result = match engine.run(question) {
        Ok(result) => result,
        Err(err) => {
            if let (Some(trace), Some(path)) = (err.partial_trace(), trace_path) {
                dump_trace(trace, path)?;
            }
            return Err(err.into());
        }
    };
    if let Some(path) = trace_path {
        dump_trace(&result.trace, path)?;
    }
    println!("{}", result.answer);
    for scored in &result.scored_answers {
        log::info!("{:.4}  {}", scored.score, scored.answer);
    }
    let b = result.budget;
    eprintln!("tokens={} lm_calls={} retriever_calls={} wall_ms={}", b.tokens_generated, b.lm_calls, b.retriever_calls, b.wall_time_ms);
    Ok(())
}

fn bench(dataset: &Path, search: &SearchArgs, factory: &BackendFactory, out_dir: &Path) -> Result<()> {
    let examples = load_dataset(dataset)?;
    let dataset_dir = dataset.parent().unwrap_or(Path::new("."));
    let options = BenchmarkOptions { out_dir: Some(out_dir.to_path_buf()), clock: clock(search) };
    let metrics = run_benchmark(&examples, &search.run_config(), &options, |e| {
        factory.for_example(e.corpus_ref.as_deref(), dataset_dir)
    })?;
    for record in &metrics.examples {
        let mark = if record.correct { "ok  " } else { "miss" };
        println!("{mark} {}  {}{}", record.id, record.prediction, record.error.as_deref().map(|e| format!("  ({e})")).unwrap_or_default());
    }
    println!(
        "accuracy {}/{} = {:.4}  avg_tokens {:.1}  avg_lm_calls {:.1}  avg_retriever_calls {:.2}",
        metrics.correct, metrics.total, metrics.accuracy, metrics.avg_tokens, metrics.avg_lm_calls, metrics.avg_retriever_calls
    );
    println!("wrote {}", out_dir.join("metrics.json").display());
    Ok(())
}

/// Returns how many worlds missed an expectation.
fn worlds(filter: Option<&str>, search: &SearchArgs) -> Result<usize> {
    let base = search.run_config();
    let mut failed = 0;
    for world in load_worlds(fixtures_dir())?.iter().filter(|w| filter.is_none_or(|f| w.name.contains(f))) {
        let problems = match world.run(&base) {
            Ok(result) => {
                println!("{:<48} {:<24} retriever_calls={}", world.name, result.answer, result.budget.retriever_calls);
                world.check(&result)
            }
            Err(SearchError::Backend { message, .. }) if !world.expectations.correct => {
                println!("{:<48} failed as expected: {message}", world.name);
                Vec::new()
            }
            Err(e) => vec![e.to_string()],
        };
        for p in &problems {
            println!("  expectation missed: {p}");
        }
        failed += usize::from(!problems.is_empty());
    }
    Ok(failed)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Ask { question, search, backend, trace } => {
            BackendFactory::new(backend).and_then(|f| ask(question, search, &f, trace.as_deref()))
        }
        Command::Bench { dataset, search, backend, out_dir } => BackendFactory::new(backend)
            .and_then(|f| bench(dataset, search, &f, out_dir))
            .with_context(|| format!("benchmark on {}", dataset.display())),
        Command::Worlds { filter, search } => worlds(filter.as_deref(), search).and_then(|failed| {
            anyhow::ensure!(failed == 0, "{failed} world(s) missed their expectations");
            Ok(())
        }),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
