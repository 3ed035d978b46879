use std::fs;
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::backend::ChatMessage;
use super::run::Setting;
use super::PipelineError;
use crate::formula::ProblemRecord;

/// Every placeholder a template may use.
pub const PLACEHOLDERS: [&str; 6] = [
    "example_premise",
    "example_hypothesis",
    "example_answer",
    "example_formulation",
    "problem_premise",
    "problem_hypothesis",
];

static PLACEHOLDER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\{([a-z_]+)\}").unwrap());

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateMessage {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PromptTemplate {
    pub name: String,
    pub messages: Vec<TemplateMessage>,
}

const DIRECT: &str = include_str!("../../templates/direct.toml");
const SFG: &str = include_str!("../../templates/sfg.toml");

impl PromptTemplate {
    /// Parses TOML and checks the placeholder vocabulary.
    pub fn from_toml(text: &str) -> Result<Self, PipelineError> {
        let t: PromptTemplate =
            toml::from_str(text).map_err(|e| PipelineError::Template(e.to_string()))?;
        t.check()?;
        Ok(t)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        PromptTemplate::from_toml(&text)
    }

    /// Built-in template for `setting`.
    pub fn default_for(setting: Setting) -> Self {
        let text = match setting {
            Setting::Direct => DIRECT,
            Setting::Sfg => SFG,
        };
        PromptTemplate::from_toml(text).expect("built-in templates are valid")
    }

    pub fn placeholders(&self) -> impl Iterator<Item = &str> {
        self.messages.iter().flat_map(|m| {
            PLACEHOLDER
                .captures_iter(&m.content)
                .map(|c| c.get(1).unwrap().as_str())
        })
    }

    fn check(&self) -> Result<(), PipelineError> {
        if self.messages.is_empty() {
            return Err(PipelineError::Template("no messages".into()));
        }
        match self.placeholders().find(|p| !PLACEHOLDERS.contains(p)) {
            Some(p) => Err(PipelineError::UnknownPlaceholder(p.to_string())),
            None => Ok(()),
        }
    }
}

fn answer_literal(label: bool) -> &'static str {
    if label {
        "TRUE"
    } else {
        "FALSE"
    }
}

/// Substitutes the one-shot example and the problem into `template`.
///
/// The direct setting binds `{example_answer}`; the sfg setting binds
/// `{example_formulation}`. Substituted text is not rescanned.
pub fn render_prompt(
    template: &PromptTemplate,
    setting: Setting,
    example: &ProblemRecord,
    problem: &ProblemRecord,
) -> Result<Vec<ChatMessage>, PipelineError> {
    let lookup = |name: &str| -> Result<String, PipelineError> {
        let unbound = || PipelineError::UnboundPlaceholder(name.to_string());
        Ok(match name {
            "example_premise" => example.premise.clone(),
            "example_hypothesis" => example.hypothesis.clone(),
            "problem_premise" => problem.premise.clone(),
            "problem_hypothesis" => problem.hypothesis.clone(),
            "example_answer" if setting == Setting::Direct => answer_literal(example.label).into(),
            "example_formulation" if setting == Setting::Sfg => example
                .gold_formulation
                .clone()
                .ok_or_else(|| PipelineError::MissingGoldFormulation(example.id.clone()))?,
            "example_answer" | "example_formulation" => return Err(unbound()),
            other => return Err(PipelineError::UnknownPlaceholder(other.to_string())),
        })
    };

    template
        .messages
        .iter()
        .map(|m| {
            let mut content = String::with_capacity(m.content.len());
            let mut last = 0;
            for cap in PLACEHOLDER.captures_iter(&m.content) {
                let whole = cap.get(0).unwrap();
                content.push_str(&m.content[last..whole.start()]);
                content.push_str(&lookup(cap.get(1).unwrap().as_str())?);
                last = whole.end();
            }
            content.push_str(&m.content[last..]);
            Ok(ChatMessage {
                role: m.role.clone(),
                content,
            })
        })
        .collect()
}
