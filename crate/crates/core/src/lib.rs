//! Symbolic model checking for public announcement logic over knowledge
//! structures, plus the evaluation pipeline that asks a language model to
//! formalize belief problems and delegates the reasoning to the checker.

pub mod bdd;
pub mod checker;
pub mod formula;
pub mod generate;
pub mod metrics;
pub mod parser;
pub mod pipeline;

pub use bdd::{BddError, BoolFn, Manager};
pub use checker::{check_valid, check_valid_explicit, run_query, CheckError, QueryResult};
pub use formula::{
    agents_of, expand_knows_whether, free_props, validate_scene, AgentName, Assignment, Formula,
    ProblemRecord, Proposition, Scene, SceneError, Verdict,
};
pub use parser::{
    parse_formula, parse_scene, print_formula, print_scene, ParseError, SceneParseError,
    SourcePos,
};
pub use metrics::{
    accuracy, auc, auc_from_scores, emit_report, execution_rate, load_report, render_table,
    Judgement, MetricsError, Rate, ReportFormat, RunReport,
};
pub use pipeline::{ItemOutcome, PipelineError, Setting};
