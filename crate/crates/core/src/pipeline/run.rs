use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::backend::{Backend, BackendConfig};
use super::classify::{classify_direct, classify_sfg};
use super::prompt::{render_prompt, PromptTemplate};
use super::{Failure, FailureKind, ItemOutcome, PipelineError};
use crate::checker::{run_query, CheckError};
use crate::formula::{ProblemRecord, Verdict};
use crate::metrics::RunReport;
use crate::parser::SceneParseError;

/// How the model is asked to answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Setting {
    /// The model answers TRUE or FALSE.
    Direct,
    /// The model writes a scene; the checker answers.
    Sfg,
}

/// Everything that determines a run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub label: String,
    pub setting: Setting,
    pub template: PromptTemplate,
    /// The one-shot example shown with every item.
    pub example: ProblemRecord,
    pub backend: BackendConfig,
    pub parallelism: usize,
    pub seed: u64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.parallelism == 0 {
            return Err(PipelineError::InvalidConfig("parallelism must be at least 1".into()));
        }
        self.backend.validate()?;
        // a dry render surfaces unbound placeholders and a missing example
        // formulation before any backend call
        render_prompt(&self.template, self.setting, &self.example, &self.example)?;
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }
}

/// Runs one item. Never fails: problems become UNKNOWN with a recorded reason.
pub fn run_item(backend: &Backend, config: &RunConfig, record: &ProblemRecord) -> ItemOutcome {
    let start = Instant::now();
    let mut outcome = ItemOutcome {
        id: record.id.clone(),
        label: record.label,
        response: String::new(),
        classification: Verdict::Unknown,
        formulation: None,
        checker: None,
        failure: None,
        latency_ms: 0,
    };
    let response = render_prompt(&config.template, config.setting, &config.example, record)
        .and_then(|messages| backend.query(&record.id, &messages));
    match response {
        Err(e) => outcome.failure = Some(Failure::new(FailureKind::Backend, e.to_string())),
        Ok(text) => {
            outcome.response = text;
            match config.setting {
                Setting::Direct => direct(&mut outcome),
                Setting::Sfg => sfg(&mut outcome),
            }
        }
    }
    outcome.latency_ms = start.elapsed().as_millis() as u64;
    outcome
}

fn direct(outcome: &mut ItemOutcome) {
    outcome.classification = classify_direct(&outcome.response);
    if outcome.classification == Verdict::Unknown {
        let kind = if outcome.response.trim().is_empty() {
            FailureKind::EmptyResponse
        } else {
            FailureKind::NonLiteralAnswer
        };
        outcome.failure = Some(Failure::new(kind, "answer is not TRUE or FALSE"));
    }
}

fn sfg(outcome: &mut ItemOutcome) {
    let text = match classify_sfg(&outcome.response) {
        Ok(t) => t,
        Err(f) => {
            outcome.failure = Some(f);
            return;
        }
    };
    match run_query(&text) {
        Ok(result) => {
            outcome.classification = Verdict::from_bool(result.verdict);
            outcome.checker = Some(result);
        }
        Err(e) => {
            let kind = match &e {
                CheckError::Parse(SceneParseError::Invalid(_)) | CheckError::Invalid(_) => {
                    FailureKind::Validation
                }
                CheckError::Parse(_) => FailureKind::Parse,
                _ => FailureKind::Execution,
            };
            outcome.failure = Some(Failure::new(kind, e.to_string()));
        }
    }
    outcome.formulation = Some(text);
}

/// Runs every record and aggregates the report. Items are spread over
/// `config.parallelism` threads; the report is ordered by record id.
pub fn run_eval(config: &RunConfig, records: &[ProblemRecord]) -> Result<RunReport, PipelineError> {
    config.validate()?;
    let backend = Backend::connect(&config.backend)?;
    let next = AtomicUsize::new(0);
    let outcomes = Mutex::new(Vec::with_capacity(records.len()));
    let workers = config.parallelism.min(records.len()).max(1);
    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(record) = records.get(i) else { break };
                let outcome = run_item(&backend, config, record);
                outcomes.lock().unwrap().push(outcome);
            });
        }
    });
    let outcomes = outcomes.into_inner().unwrap();
    Ok(RunReport::build(
        config.label.clone(),
        config.digest(),
        Some(config.example.id.clone()),
        outcomes,
    )?)
}
