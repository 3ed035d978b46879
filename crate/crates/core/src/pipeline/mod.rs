//! Benchmark evaluation: ingest and sample problems, render one-shot prompts,
//! query a chat model (live or from recorded responses), classify answers,
//! and execute generated formulations on the checker.

mod backend;
mod classify;
mod dataset;
mod export;
mod prompt;
mod run;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checker::QueryResult;
use crate::formula::Verdict;
use crate::metrics::{Judgement, MetricsError};

pub use backend::{Backend, BackendConfig, BackendMode, ChatMessage};
pub use classify::{classify_direct, classify_sfg};
pub use dataset::{load_dataset, parse_dataset, sample_balanced, write_records, FieldMap};
pub use export::{export_finetune, finetune_lines, FinetuneLine};
pub use prompt::{render_prompt, PromptTemplate, TemplateMessage, PLACEHOLDERS};
pub use run::{run_eval, run_item, RunConfig, Setting};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("line {line}: missing field {name:?}")]
    MissingField { line: usize, name: String },
    #[error("line {line}: cannot interpret label {value}")]
    UnparsableLabel { line: usize, value: String },
    #[error("sample size {0} is odd; balanced sampling needs an even size")]
    OddSampleSize(usize),
    #[error("need {needed} records labeled {label}, found {available}")]
    InsufficientClass {
        label: bool,
        needed: usize,
        available: usize,
    },
    #[error("placeholder {{{0}}} is not bound in this setting")]
    UnboundPlaceholder(String),
    #[error("template uses unknown placeholder {{{0}}}")]
    UnknownPlaceholder(String),
    #[error("invalid template: {0}")]
    Template(String),
    #[error("backend unavailable after {attempts} attempt(s): {last_error}")]
    BackendUnavailable { attempts: u32, last_error: String },
    #[error("no recorded response for item {0:?}")]
    FixtureMiss(String),
    #[error("environment variable {0} holding the API key is not set")]
    MissingApiKey(String),
    #[error("invalid backend configuration: {0}")]
    InvalidBackend(String),
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
    #[error("record {0:?} has no gold formulation")]
    MissingGoldFormulation(String),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Why an item ended up UNKNOWN.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    /// Backend unreachable or no recorded response.
    Backend,
    EmptyResponse,
    /// Direct setting: the answer was not literally TRUE or FALSE.
    NonLiteralAnswer,
    /// The formulation does not parse.
    Parse,
    /// The formulation parses but breaks a scene invariant.
    Validation,
    Execution,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Failure {
    pub kind: FailureKind,
    pub detail: String,
}

impl Failure {
    pub fn new(kind: FailureKind, detail: impl Into<String>) -> Self {
        Failure {
            kind,
            detail: detail.into(),
        }
    }
}

/// Result of running one benchmark item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemOutcome {
    pub id: String,
    pub label: bool,
    pub response: String,
    pub classification: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formulation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checker: Option<QueryResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<Failure>,
    pub latency_ms: u64,
}

impl ItemOutcome {
    pub fn judgement(&self) -> Judgement {
        Judgement::new(self.classification, self.label)
    }

    pub fn is_correct(&self) -> bool {
        self.classification.matches(self.label)
    }
}
