//! Datasets, grading and benchmark runs.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::generation::{normalize_answer, AnswerJudge};
use crate::search::{Backends, Clock, RunConfig, SearchEngine};
use crate::trace::{SearchTrace, TraceError};
use crate::NO_ANSWER;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Choice {
    pub label: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub id: String,
    pub question: String,
    pub gold_answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choices: Option<Vec<Choice>>,
    /// Per-example local corpus (JSONL), resolved relative to the dataset file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus_ref: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read dataset {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}, line {line}: {message}")]
    Line { path: PathBuf, line: usize, message: String },
    #[error("dataset {path} contains no examples")]
    Empty { path: PathBuf },
}

/// Parses a JSONL dataset in file order. Unknown fields are ignored, blank lines skipped.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<Example>, DatasetError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io { path: path.to_path_buf(), source })?;
    let mut examples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let line_err = |message: String| DatasetError::Line { path: path.to_path_buf(), line: i + 1, message };
        let example: Example = serde_json::from_str(line).map_err(|e| line_err(e.to_string()))?;
        if example.question.trim().is_empty() {
            return Err(line_err("question is empty".into()));
        }
        if example.gold_answer.trim().is_empty() {
            return Err(line_err("gold_answer is empty".into()));
        }
        examples.push(example);
    }
    if examples.is_empty() {
        return Err(DatasetError::Empty { path: path.to_path_buf() });
    }
    Ok(examples)
}

/// Choice index a free-text prediction refers to: a bare label such as `B`, `(B)` or
/// `B. text`, or the text of a choice.
fn predicted_choice(prediction: &str, choices: &[Choice], judge: &dyn AnswerJudge) -> Option<usize> {
    let trimmed = prediction.trim();
    let head: String = trimmed
        .trim_start_matches(['(', '['])
        .chars()
        .take_while(|c| c.is_alphanumeric())
        .collect();
    let rest = trimmed.trim_start_matches(['(', '[']).get(head.len()..).unwrap_or("");
    let label_only = rest.trim_start_matches([')', ']', '.', ':']).trim().is_empty();
    let by_label = choices.iter().position(|c| c.label.eq_ignore_ascii_case(&head));
    if let (Some(i), true) = (by_label, label_only) {
        return Some(i);
    }
    choices
        .iter()
        .position(|c| judge.equivalent(trimmed, &c.text))
        .or_else(|| by_label.filter(|&i| judge.equivalent(rest.trim_start_matches([')', ']', '.', ':']), &choices[i].text)))
}

/// Free-form items compare by `judge`; multiple-choice items compare the chosen option.
pub fn grade(prediction: &str, example: &Example, judge: &dyn AnswerJudge) -> bool {
    if prediction == NO_ANSWER || normalize_answer(prediction).is_empty() {
        return false;
    }
    if let Some(choices) = example.choices.as_deref().filter(|c| !c.is_empty()) {
        let gold = choices
            .iter()
            .position(|c| c.label.eq_ignore_ascii_case(example.gold_answer.trim()))
            .or_else(|| choices.iter().position(|c| judge.equivalent(&example.gold_answer, &c.text)));
        if let Some(gold) = gold {
            return predicted_choice(prediction, choices, judge) == Some(gold);
        }
    }
    judge.equivalent(prediction, &example.gold_answer)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleRecord {
    pub id: String,
    pub prediction: String,
    pub correct: bool,
    pub tokens: u64,
    pub lm_calls: u64,
    pub retriever_calls: u64,
    pub wall_time_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub total: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub avg_tokens: f64,
    pub avg_lm_calls: f64,
    pub avg_retriever_calls: f64,
    pub wall_time_ms_total: u64,
    pub config: RunConfig,
    pub examples: Vec<ExampleRecord>,
}

impl Metrics {
    pub fn from_records(config: &RunConfig, examples: Vec<ExampleRecord>) -> Self {
        let total = examples.len();
        let correct = examples.iter().filter(|r| r.correct).count();
        let avg = |f: fn(&ExampleRecord) -> u64| {
            if total == 0 {
                0.0
            } else {
                examples.iter().map(f).sum::<u64>() as f64 / total as f64
            }
        };
        Self {
            total,
            correct,
            accuracy: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
            avg_tokens: avg(|r| r.tokens),
            avg_lm_calls: avg(|r| r.lm_calls),
            avg_retriever_calls: avg(|r| r.retriever_calls),
            wall_time_ms_total: examples.iter().map(|r| r.wall_time_ms).sum(),
            config: config.clone(),
            examples,
        }
    }
}

/// What is written to `traces/<id>.json` for each example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleTrace {
    pub example: Example,
    pub prediction: String,
    pub correct: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub trace: Option<SearchTrace>,
}

#[derive(Debug, Error)]
pub enum BenchmarkError {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Where and how a benchmark writes its outputs.
#[derive(Debug, Clone, Default)]
pub struct BenchmarkOptions {
    pub out_dir: Option<PathBuf>,
    pub clock: Clock,
}

fn file_stem(id: &str) -> String {
    id.chars().map(|c| if c.is_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

/// Runs every example in order. `backends_for` supplies the backends for one example; a
/// failure there or in the search marks the example incorrect and the run continues.
pub fn run_benchmark<F>(
    examples: &[Example],
    config: &RunConfig,
    options: &BenchmarkOptions,
    mut backends_for: F,
) -> Result<Metrics, BenchmarkError>
where
    F: FnMut(&Example) -> Result<Backends, String>,
{
    let mut records = Vec::with_capacity(examples.len());
    for example in examples {
        let outcome = backends_for(example).and_then(|backends| {
            let judge = backends.judge.clone();
            let engine = SearchEngine::new(config.clone(), backends).map_err(|e| e.to_string())?.with_clock(options.clock);
            Ok((engine.run(&example.question), judge))
        });
        let (prediction, correct, error, trace) = match outcome {
            Ok((Ok(result), judge)) => {
                let correct = grade(&result.answer, example, judge.as_ref());
                (result.answer, correct, None, Some(result.trace))
            }
            Ok((Err(e), _)) => (NO_ANSWER.to_string(), false, Some(e.to_string()), e.partial_trace().cloned()),
            Err(message) => (NO_ANSWER.to_string(), false, Some(message), None),
        };
        if let Some(e) = &error {
            log::warn!("example {} failed: {e}", example.id);
        }
        let budget = trace.as_ref().map(|t| t.budget).unwrap_or_default();
        records.push(ExampleRecord {
            id: example.id.clone(),
            prediction: prediction.clone(),
            correct,
            tokens: budget.tokens_generated,
            lm_calls: budget.lm_calls,
            retriever_calls: budget.retriever_calls,
            wall_time_ms: budget.wall_time_ms,
            error: error.clone(),
        });
        if let Some(dir) = &options.out_dir {
            let record = ExampleTrace { example: example.clone(), prediction, correct, error, trace };
            write_json(&dir.join("traces").join(format!("{}.json", file_stem(&example.id))), &record)?;
        }
    }
    let metrics = Metrics::from_records(config, records);
    if let Some(dir) = &options.out_dir {
        write_json(&dir.join("metrics.json"), &metrics)?;
    }
    Ok(metrics)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), BenchmarkError> {
    let io_err = |source| BenchmarkError::Io { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err)?;
    }
    let mut json = serde_json::to_string_pretty(value).expect("serializable");
    json.push('\n');
    fs::write(path, json).map_err(io_err)
}

/// Reads back a trace written by [`run_benchmark`].
pub fn load_example_trace(path: impl AsRef<Path>) -> Result<ExampleTrace, BenchmarkError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| BenchmarkError::Io { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text).map_err(|e| BenchmarkError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::new(std::io::ErrorKind::InvalidData, e),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generation::NormalizedMatch;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let path = dir.join(name);
        fs::write(&path, text).unwrap();
        path
    }

    fn free(gold: &str) -> Example {
        Example { id: "x".into(), question: "q".into(), gold_answer: gold.into(), choices: None, corpus_ref: None }
    }

    fn mc(gold: &str) -> Example {
        let choices = ["Paris", "London", "Rome", "Berlin"]
            .iter()
            .zip(["A", "B", "C", "D"])
            .map(|(t, l)| Choice { label: l.into(), text: (*t).into() })
            .collect();
        Example { choices: Some(choices), ..free(gold) }
    }

    #[test]
    fn loads_in_order_and_ignores_unknown_fields() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(
            dir.path(),
            "d.jsonl",
            concat!(
                r#"{"id":"1","question":"q1","gold_answer":"a","extra":true}"#, "\n",
                r#"{"id":"2","question":"q2","gold_answer":"b"}"#, "\n",
                r#"{"id":"3","question":"q3","gold_answer":"C","choices":[{"label":"A","text":"x"},{"label":"B","text":"y"},{"label":"C","text":"z"},{"label":"D","text":"w"}]}"#, "\n",
            ),
        );
        let examples = load_dataset(&path).unwrap();
        assert_eq!(examples.iter().map(|e| e.id.as_str()).collect::<Vec<_>>(), ["1", "2", "3"]);
        let labels: Vec<_> = examples[2].choices.as_ref().unwrap().iter().map(|c| c.label.as_str()).collect();
        assert_eq!(labels, ["A", "B", "C", "D"]);
    }

    #[test]
    fn reports_line_numbers_and_empty_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = write(dir.path(), "d.jsonl", "{\"id\":\"1\",\"question\":\"q\",\"gold_answer\":\"a\"}\n{\"id\":\"2\",\"gold_answer\":\"a\"}\n");
        let err = load_dataset(&path).unwrap_err().to_string();
        assert!(err.contains("line 2") && err.contains("question"), "{err}");
        let empty = write(dir.path(), "e.jsonl", "\n");
        assert!(matches!(load_dataset(&empty), Err(DatasetError::Empty { .. })));
    }

    #[test]
    fn grading_free_form() {
        let judge = NormalizedMatch;
        assert!(grade("paris", &free("Paris."), &judge));
        assert!(!grade("London", &free("Paris"), &judge));
        assert!(!grade(NO_ANSWER, &free("Paris"), &judge));
    }

    #[test]
    fn grading_multiple_choice() {
        let judge = NormalizedMatch;
        assert!(grade("B", &mc("B"), &judge));
        assert!(grade("(b)", &mc("B"), &judge));
        assert!(grade("London", &mc("B"), &judge));
        assert!(grade("B. London", &mc("B"), &judge));
        assert!(!grade("A", &mc("B"), &judge));
        assert!(!grade("Paris", &mc("B"), &judge));
        assert!(grade("C", &mc("Rome"), &judge));
    }

    #[test]
    fn metrics_arithmetic() {
        let rec = |correct| ExampleRecord {
            id: "x".into(),
            prediction: "p".into(),
            correct,
            tokens: 10,
            lm_calls: 2,
            retriever_calls: 1,
            wall_time_ms: 5,
            error: None,
        };
        let m = Metrics::from_records(&RunConfig::default(), vec![rec(true), rec(true), rec(false), rec(true)]);
        assert_eq!(m.accuracy, 0.75);
        assert_eq!(m.avg_tokens, 10.0);
        assert_eq!(m.wall_time_ms_total, 20);
    }
}
