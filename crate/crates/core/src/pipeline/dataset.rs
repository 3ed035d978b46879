use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::PipelineError;
use crate::formula::ProblemRecord;

/// Source field names for each record attribute, and how label values map
/// to booleans.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FieldMap {
    /// When absent from a record, the 1-based line number is used.
    pub id: String,
    pub premise: String,
    pub hypothesis: String,
    pub label: String,
    pub gold_formulation: Option<String>,
    /// Looked up for string and numeric labels; JSON booleans map directly.
    pub label_values: BTreeMap<String, bool>,
}

fn default_label_values() -> BTreeMap<String, bool> {
    [
        ("true", true),
        ("false", false),
        ("entailment", true),
        ("not_entailment", false),
        ("neutral", false),
        ("contradiction", false),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

impl Default for FieldMap {
    fn default() -> Self {
        FieldMap {
            id: "id".into(),
            premise: "premise".into(),
            hypothesis: "hypothesis".into(),
            label: "label".into(),
            gold_formulation: Some("gold_formulation".into()),
            label_values: default_label_values(),
        }
    }
}

impl FieldMap {
    /// Column names of the public MindGames release.
    pub fn mindgames() -> Self {
        FieldMap {
            id: "index".into(),
            gold_formulation: Some("smcdel_problem".into()),
            ..FieldMap::default()
        }
    }

    fn label(&self, line: usize, value: &Value) -> Result<bool, PipelineError> {
        let key = match value {
            Value::Bool(b) => return Ok(*b),
            Value::String(s) => s.trim().to_string(),
            Value::Number(n) => n.to_string(),
            other => other.to_string(),
        };
        self.label_values
            .get(&key)
            .or_else(|| self.label_values.get(&key.to_lowercase()))
            .copied()
            .ok_or(PipelineError::UnparsableLabel { line, value: key })
    }
}

fn text_field(
    obj: &serde_json::Map<String, Value>,
    line: usize,
    name: &str,
) -> Result<String, PipelineError> {
    match obj.get(name) {
        None | Some(Value::Null) => Err(PipelineError::MissingField {
            line,
            name: name.to_string(),
        }),
        Some(Value::String(s)) if s.trim().is_empty() => Err(PipelineError::MalformedRecord {
            line,
            reason: format!("field {name:?} is empty"),
        }),
        Some(Value::String(s)) => Ok(s.clone()),
        Some(other) => Err(PipelineError::MalformedRecord {
            line,
            reason: format!("field {name:?} is not text: {other}"),
        }),
    }
}

/// Parses line-delimited JSON records; blank lines are skipped.
pub fn parse_dataset(text: &str, fields: &FieldMap) -> Result<Vec<ProblemRecord>, PipelineError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(raw).map_err(|e| PipelineError::MalformedRecord {
            line,
            reason: e.to_string(),
        })?;
        let Value::Object(obj) = value else {
            return Err(PipelineError::MalformedRecord {
                line,
                reason: "not a JSON object".into(),
            });
        };
        let id = match obj.get(&fields.id) {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Number(n)) => n.to_string(),
            _ => line.to_string(),
        };
        let premise = text_field(&obj, line, &fields.premise)?;
        let hypothesis = text_field(&obj, line, &fields.hypothesis)?;
        let label_value = obj.get(&fields.label).ok_or(PipelineError::MissingField {
            line,
            name: fields.label.clone(),
        })?;
        let label = fields.label(line, label_value)?;
        let gold_formulation = fields
            .gold_formulation
            .as_ref()
            .and_then(|name| obj.get(name))
            .and_then(Value::as_str)
            .filter(|s| !s.trim().is_empty())
            .map(str::to_string);
        out.push(ProblemRecord {
            id,
            premise,
            hypothesis,
            label,
            gold_formulation,
        });
    }
    Ok(out)
}

pub fn load_dataset(path: &Path, fields: &FieldMap) -> Result<Vec<ProblemRecord>, PipelineError> {
    let text = fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_dataset(&text, fields)
}

/// Writes records as line-delimited JSON readable with the default [`FieldMap`].
pub fn write_records(records: &[ProblemRecord], path: &Path) -> Result<(), PipelineError> {
    let mut body = String::new();
    for r in records {
        body.push_str(&serde_json::to_string(r).expect("record serializes"));
        body.push('\n');
    }
    fs::write(path, body).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Draws `n / 2` records of each label uniformly without replacement, then
/// shuffles the union. Deterministic in `(records, n, seed)`.
pub fn sample_balanced(
    records: &[ProblemRecord],
    n: usize,
    seed: u64,
) -> Result<Vec<ProblemRecord>, PipelineError> {
    if !n.is_multiple_of(2) {
        return Err(PipelineError::OddSampleSize(n));
    }
    let half = n / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = Vec::with_capacity(n);
    for label in [true, false] {
        let class: Vec<&ProblemRecord> = records.iter().filter(|r| r.label == label).collect();
        if class.len() < half {
            return Err(PipelineError::InsufficientClass {
                label,
                needed: half,
                available: class.len(),
            });
        }
        picked.extend(
            index::sample(&mut rng, class.len(), half)
                .into_iter()
                .map(|i| class[i].clone()),
        );
    }
    picked.shuffle(&mut rng);
    Ok(picked)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXTURE: &str = r#"{"id": "a", "premise": "P1", "hypothesis": "H1", "label": true}
{"id": "b", "premise": "P2", "hypothesis": "H2", "label": "false", "gold_formulation": "VARS 1\nLAW Top\nOBS a:\nVALID? 1"}

{"id": 3, "premise": "P3", "hypothesis": "H3", "label": "entailment"}
"#;

    fn record(id: usize, label: bool) -> ProblemRecord {
        ProblemRecord {
            id: format!("r{id:03}"),
            premise: format!("premise {id}"),
            hypothesis: format!("hypothesis {id}"),
            label,
            gold_formulation: None,
        }
    }

    #[test]
    fn loads_default_fields() {
        let rs = parse_dataset(FIXTURE, &FieldMap::default()).unwrap();
        assert_eq!(rs.len(), 3);
        assert_eq!(rs[0].id, "a");
        assert!(rs[0].label);
        assert!(!rs[1].label);
        assert!(rs[1].gold_formulation.as_deref().unwrap().starts_with("VARS 1"));
        assert_eq!(rs[2].id, "3");
        assert!(rs[2].label);
    }

    #[test]
    fn missing_hypothesis() {
        let err = parse_dataset(r#"{"premise": "P", "label": true}"#, &FieldMap::default()).unwrap_err();
        assert!(matches!(err, PipelineError::MissingField { line: 1, ref name } if name == "hypothesis"));
    }

    #[test]
    fn label_translation_table() {
        let text = r#"{"premise": "P", "hypothesis": "H", "label": "neutral"}
{"premise": "P", "hypothesis": "H", "label": "Entailment"}
{"premise": "P", "hypothesis": "H", "label": 1}"#;
        let mut fields = FieldMap::default();
        fields.label_values.insert("1".into(), true);
        let rs = parse_dataset(text, &fields).unwrap();
        assert_eq!(rs.iter().map(|r| r.label).collect::<Vec<_>>(), [false, true, true]);
        assert_eq!(rs[0].id, "1");

        let err = parse_dataset(r#"{"premise": "P", "hypothesis": "H", "label": "maybe"}"#, &FieldMap::default()).unwrap_err();
        assert!(matches!(err, PipelineError::UnparsableLabel { ref value, .. } if value == "maybe"));
    }

    #[test]
    fn mindgames_columns() {
        let text = r#"{"index": 17, "premise": "P", "hypothesis": "H", "label": "not_entailment", "smcdel_problem": "VARS 1\nLAW Top\nOBS a:1\nVALID? 1"}"#;
        let rs = parse_dataset(text, &FieldMap::mindgames()).unwrap();
        assert_eq!(rs[0].id, "17");
        assert!(!rs[0].label);
        assert!(rs[0].gold_formulation.is_some());
    }

    #[test]
    fn malformed_lines() {
        let err = parse_dataset("{not json", &FieldMap::default()).unwrap_err();
        assert!(matches!(err, PipelineError::MalformedRecord { line: 1, .. }));
        let err = parse_dataset("[1,2]", &FieldMap::default()).unwrap_err();
        assert!(matches!(err, PipelineError::MalformedRecord { line: 1, .. }));
        let err = parse_dataset(r#"{"premise": " ", "hypothesis": "H", "label": true}"#, &FieldMap::default()).unwrap_err();
        assert!(matches!(err, PipelineError::MalformedRecord { .. }));
    }

    #[test]
    fn balanced_sample_has_equal_classes() {
        let records: Vec<_> = (0..500).map(|i| record(i, i % 3 == 0)).collect();
        let s = sample_balanced(&records, 200, 42).unwrap();
        assert_eq!(s.len(), 200);
        assert_eq!(s.iter().filter(|r| r.label).count(), 100);
        let ids: std::collections::BTreeSet<_> = s.iter().map(|r| &r.id).collect();
        assert_eq!(ids.len(), 200);
    }

    #[test]
    fn forced_sample() {
        let records = vec![record(1, true), record(2, false)];
        let mut s = sample_balanced(&records, 2, 9).unwrap();
        s.sort_by(|a, b| a.id.cmp(&b.id));
        assert_eq!(s, records);
    }

    #[test]
    fn sampling_is_deterministic() {
        let records: Vec<_> = (0..50).map(|i| record(i, i % 2 == 0)).collect();
        assert_eq!(
            sample_balanced(&records, 10, 5).unwrap(),
            sample_balanced(&records, 10, 5).unwrap()
        );
        assert_ne!(
            sample_balanced(&records, 10, 5).unwrap(),
            sample_balanced(&records, 10, 6).unwrap()
        );
    }

    #[test]
    fn sampling_errors() {
        let records = vec![record(1, true), record(2, true), record(3, false)];
        assert!(matches!(sample_balanced(&records, 3, 0), Err(PipelineError::OddSampleSize(3))));
        assert!(matches!(
            sample_balanced(&records, 4, 0),
            Err(PipelineError::InsufficientClass { label: false, needed: 2, available: 1 })
        ));
        assert!(sample_balanced(&records, 0, 0).unwrap().is_empty());
    }
}
