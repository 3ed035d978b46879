use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::backend::ChatMessage;
use super::prompt::{render_prompt, PromptTemplate};
use super::run::Setting;
use super::PipelineError;
use crate::formula::{ProblemRecord, Verdict};

/// One chat-format training example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinetuneLine {
    pub messages: Vec<ChatMessage>,
}

/// The rendered prompt for each record followed by the gold assistant turn:
/// the label literal (direct) or the gold formulation (sfg).
pub fn finetune_lines(
    records: &[ProblemRecord],
    setting: Setting,
    template: &PromptTemplate,
    example: &ProblemRecord,
) -> Result<Vec<FinetuneLine>, PipelineError> {
    if setting == Setting::Sfg {
        if let Some(r) = records.iter().find(|r| r.gold_formulation.is_none()) {
            return Err(PipelineError::MissingGoldFormulation(r.id.clone()));
        }
    }
    records
        .iter()
        .map(|r| {
            let mut messages = render_prompt(template, setting, example, r)?;
            let answer = match setting {
                Setting::Direct => Verdict::from_bool(r.label).to_string(),
                Setting::Sfg => r.gold_formulation.clone().unwrap(),
            };
            messages.push(ChatMessage {
                role: "assistant".into(),
                content: answer,
            });
            Ok(FinetuneLine { messages })
        })
        .collect()
}

/// Writes [`finetune_lines`] as JSONL and returns the line count. Nothing is
/// written if any record lacks what the setting needs.
pub fn export_finetune(
    records: &[ProblemRecord],
    setting: Setting,
    template: &PromptTemplate,
    example: &ProblemRecord,
    path: &Path,
) -> Result<usize, PipelineError> {
    let lines = finetune_lines(records, setting, template, example)?;
    let mut body = String::new();
    for l in &lines {
        body.push_str(&serde_json::to_string(l).expect("line serializes"));
        body.push('\n');
    }
    fs::write(path, body).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(lines.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, gold: Option<&str>) -> ProblemRecord {
        ProblemRecord {
            id: id.into(),
            premise: "P".into(),
            hypothesis: "H".into(),
            label: true,
            gold_formulation: gold.map(str::to_string),
        }
    }

    #[test]
    fn sfg_lines_end_with_gold() {
        let ex = record("ex", Some("VARS 1\nLAW Top\nOBS a:\nVALID? 1"));
        let t = PromptTemplate::default_for(Setting::Sfg);
        let lines = finetune_lines(&[record("r", Some("VARS 2\nLAW Top\nOBS\nVALID? 2"))], Setting::Sfg, &t, &ex).unwrap();
        let last = lines[0].messages.last().unwrap();
        assert_eq!(last.role, "assistant");
        assert_eq!(last.content, "VARS 2\nLAW Top\nOBS\nVALID? 2");
    }

    #[test]
    fn direct_lines_end_with_label() {
        let ex = record("ex", None);
        let t = PromptTemplate::default_for(Setting::Direct);
        let lines = finetune_lines(&[record("r", None)], Setting::Direct, &t, &ex).unwrap();
        assert_eq!(lines[0].messages.last().unwrap().content, "TRUE");
    }

    #[test]
    fn missing_gold_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ft.jsonl");
        let ex = record("ex", Some("VARS 1\nLAW Top\nOBS\nVALID? 1"));
        let t = PromptTemplate::default_for(Setting::Sfg);
        let err = export_finetune(&[ex.clone(), record("bad", None)], Setting::Sfg, &t, &ex, &path).unwrap_err();
        assert!(matches!(err, PipelineError::MissingGoldFormulation(ref id) if id == "bad"));
        assert!(!path.exists());
        assert_eq!(export_finetune(&[], Setting::Sfg, &t, &ex, &path).unwrap(), 0);
        assert_eq!(fs::read_to_string(&path).unwrap(), "");
    }
}
