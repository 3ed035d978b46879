//! The `epicheck` command line.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use epicheck_core::checker::KnowledgeState;
use epicheck_core::generate::{scene_stream, SceneParams};
use epicheck_core::metrics::{distribution_csv, render_machine, render_table};
use epicheck_core::pipeline::{
    export_finetune, load_dataset, parse_dataset, run_eval, sample_balanced, write_records,
    BackendConfig, FieldMap, PipelineError, PromptTemplate, RunConfig,
};
use epicheck_core::{
    check_valid, check_valid_explicit, emit_report, load_report, parse_scene, print_scene,
    CheckError, ProblemRecord, ReportFormat, Scene, Setting,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "epicheck", version, about = "Epistemic model checking and model-evaluation harness")]
pub struct Cli {
    /// Seed for every random choice; required by verify, sample and export-ft.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output path.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Machine,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a scene file symbolically.
    Check {
        file: PathBuf,
        /// Write the law's decision diagram in Graphviz format.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Check a scene file by enumerating its states.
    Oracle { file: PathBuf },
    /// Compare symbolic and explicit verdicts on random scenes.
    Verify(VerifyArgs),
    /// Run an evaluation described by a TOML config.
    Eval { config: PathBuf },
    /// Sample records and write a chat-format fine-tuning file.
    ExportFt(ExportArgs),
    /// Draw a label-balanced sample from a dataset.
    Sample(SampleArgs),
    /// Render saved machine reports.
    Report {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 1000)]
    pub count: usize,
    #[arg(long, default_value_t = 6)]
    pub max_props: usize,
    #[arg(long, default_value_t = 4)]
    pub max_agents: usize,
    #[arg(long, default_value_t = 5)]
    pub max_depth: usize,
    #[arg(long, default_value_t = 2)]
    pub max_announce: usize,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// TOML field map; defaults to id/premise/hypothesis/label/gold_formulation.
    #[arg(long, conflicts_with = "mindgames")]
    pub fields: Option<PathBuf>,
    /// Use the MindGames column names.
    #[arg(long)]
    pub mindgames: bool,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[arg(long, value_enum)]
    pub setting: SettingArg,
    /// File holding the one-shot example record.
    #[arg(long)]
    pub example: PathBuf,
    #[arg(long)]
    pub template: Option<PathBuf>,
    #[arg(long)]
    pub n: usize,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[arg(long)]
    pub n: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SettingArg {
    Direct,
    Sfg,
}

impl From<SettingArg> for Setting {
    fn from(s: SettingArg) -> Setting {
        match s {
            SettingArg::Direct => Setting::Direct,
            SettingArg::Sfg => Setting::Sfg,
        }
    }
}

/// An eval config file. Relative paths resolve against the file's directory.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalFile {
    pub label: String,
    pub setting: Setting,
    pub dataset: PathBuf,
    /// File holding the one-shot example record.
    pub example: PathBuf,
    /// Defaults to the built-in template for the setting.
    #[serde(default)]
    pub template: Option<PathBuf>,
    /// Balanced sample size; the whole dataset is used when absent.
    #[serde(default)]
    pub sample_size: Option<usize>,
    pub seed: u64,
    #[serde(default = "one")]
    pub parallelism: usize,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub fields: Option<FieldMap>,
    pub backend: BackendConfig,
}

fn one() -> usize {
    1
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn domain(message: impl ToString) -> Self {
        Failure {
            code: EXIT_DOMAIN,
            message: message.to_string(),
        }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::InvalidBackend(_) | PipelineError::InvalidConfig(_) => {
                Failure::usage(e.to_string())
            }
            _ => Failure::domain(e),
        }
    }
}

impl From<CheckError> for Failure {
    fn from(e: CheckError) -> Self {
        Failure::domain(e)
    }
}

type Outcome = Result<(), Failure>;

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(stderr, "{text}")
            } else {
                write!(stdout, "{text}")
            };
            return code;
        }
    };
    match dispatch(&cli, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    match &cli.command {
        Command::Check { file, dot } => cmd_check(cli, file, dot.as_deref(), out),
        Command::Oracle { file } => cmd_oracle(file, out),
        Command::Verify(args) => {
            let seed = require_seed(cli)?;
            if args.count == 0 {
                return Err(Failure::usage("--count must be at least 1"));
            }
            if verify(args, seed, |s| check_valid(s).map(|r| r.verdict), out, err) {
                Ok(())
            } else {
                Err(Failure::domain("symbolic and explicit verdicts disagree"))
            }
        }
        Command::Eval { config } => cmd_eval(cli, config, out, err),
        Command::ExportFt(args) => cmd_export(cli, args, out),
        Command::Sample(args) => cmd_sample(cli, args, out),
        Command::Report { reports } => cmd_report(cli, reports, out),
    }
}

fn require_seed(cli: &Cli) -> Result<u64, Failure> {
    cli.seed.ok_or_else(|| Failure::usage("--seed is required for this command"))
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::domain(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, body: &str) -> Outcome {
    fs::write(path, body).map_err(|e| Failure::domain(format!("cannot write {}: {e}", path.display())))
}

fn emit(out: &mut dyn Write, text: &str) -> Outcome {
    out.write_all(text.as_bytes())
        .map_err(|e| Failure::domain(format!("cannot write output: {e}")))
}

fn load_scene(path: &Path) -> Result<Scene, Failure> {
    let text = read(path)?;
    parse_scene(&text).map_err(|e| Failure::domain(format!("{}:{e}", path.display())))
}

fn cmd_check(cli: &Cli, file: &Path, dot: Option<&Path>, out: &mut dyn Write) -> Outcome {
    let scene = load_scene(file)?;
    let result = check_valid(&scene)?;
    if let Some(path) = dot {
        let ks = KnowledgeState::new(&scene)?;
        let text = ks.manager().to_dot(ks.law()).map_err(CheckError::from)?;
        write_file(path, &text)?;
    }
    let text = match cli.format {
        Some(Format::Machine) => serde_json::to_string_pretty(&result).unwrap() + "\n",
        _ => format!(
            "{}\nstates: {}\npeak nodes: {}\nelapsed: {} us\n",
            if result.verdict { "TRUE" } else { "FALSE" },
            result.state_count,
            result.peak_node_count,
            result.elapsed.as_micros()
        ),
    };
    emit(out, &text)
}

fn cmd_oracle(file: &Path, out: &mut dyn Write) -> Outcome {
    let scene = load_scene(file)?;
    let verdict = check_valid_explicit(&scene)?;
    emit(out, if verdict { "TRUE\n" } else { "FALSE\n" })
}

/// Compares `checker` against the explicit oracle on `args.count` scenes
/// drawn from `seed`. Prints each disagreeing scene and a summary line.
pub fn verify(
    args: &VerifyArgs,
    seed: u64,
    checker: impl Fn(&Scene) -> Result<bool, CheckError>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> bool {
    let params = SceneParams {
        max_props: args.max_props,
        max_agents: args.max_agents,
        max_depth: args.max_depth,
        max_announce_nesting: args.max_announce,
    };
    let mut agree = 0;
    for (i, scene) in scene_stream(seed, params).take(args.count).enumerate() {
        let symbolic = checker(&scene);
        let explicit = check_valid_explicit(&scene);
        match (symbolic, explicit) {
            (Ok(a), Ok(b)) if a == b => agree += 1,
            (a, b) => {
                let _ = writeln!(
                    out,
                    "scene {i} disagrees (symbolic {a:?}, explicit {b:?}):\n{}",
                    print_scene(&scene)
                );
            }
        }
    }
    let _ = writeln!(out, "{agree}/{} agree", args.count);
    if agree != args.count {
        let _ = writeln!(err, "{} disagreement(s)", args.count - agree);
    }
    agree == args.count
}

fn field_map(args: &DatasetArgs) -> Result<FieldMap, Failure> {
    if args.mindgames {
        return Ok(FieldMap::mindgames());
    }
    match &args.fields {
        None => Ok(FieldMap::default()),
        Some(path) => toml::from_str(&read(path)?)
            .map_err(|e| Failure::usage(format!("invalid field map {}: {e}", path.display()))),
    }
}

fn load_example(path: &Path, fields: &FieldMap) -> Result<ProblemRecord, Failure> {
    let records = parse_dataset(&read(path)?, fields)?;
    match <[ProblemRecord; 1]>::try_from(records) {
        Ok([r]) => Ok(r),
        Err(v) => Err(Failure::usage(format!(
            "{} must hold exactly one record, found {}",
            path.display(),
            v.len()
        ))),
    }
}

fn load_template(path: Option<&Path>, setting: Setting) -> Result<PromptTemplate, Failure> {
    match path {
        Some(p) => Ok(PromptTemplate::load(p)?),
        None => Ok(PromptTemplate::default_for(setting)),
    }
}

fn cmd_sample(cli: &Cli, args: &SampleArgs, out: &mut dyn Write) -> Outcome {
    let seed = require_seed(cli)?;
    let fields = field_map(&args.data)?;
    let records = load_dataset(&args.data.dataset, &fields)?;
    let sample = sample_balanced(&records, args.n, seed)?;
    match &cli.out {
        Some(path) => {
            write_records(&sample, path)?;
            emit(out, &format!("{} written\n", sample.len()))
        }
        None => {
            let body: String = sample
                .iter()
                .map(|r| serde_json::to_string(r).unwrap() + "\n")
                .collect();
            emit(out, &body)
        }
    }
}

fn cmd_export(cli: &Cli, args: &ExportArgs, out: &mut dyn Write) -> Outcome {
    let seed = require_seed(cli)?;
    let path = cli.out.as_deref().ok_or_else(|| Failure::usage("--out is required"))?;
    let setting = Setting::from(args.setting);
    let fields = field_map(&args.data)?;
    let example = load_example(&args.example, &fields)?;
    let template = load_template(args.template.as_deref(), setting)?;
    let records = load_dataset(&args.data.dataset, &fields)?;
    let sample = sample_balanced(&records, args.n, seed)?;
    let n = export_finetune(&sample, setting, &template, &example, path)?;
    emit(out, &format!("{n} written\n"))
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn cmd_eval(cli: &Cli, config: &Path, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let text = read(config)?;
    let file: EvalFile = toml::from_str(&text)
        .map_err(|e| Failure::usage(format!("invalid config {}: {e}", config.display())))?;
    let base = config.parent().unwrap_or(Path::new("."));
    let mut backend = file.backend.clone();
    backend.validate()?;
    backend.fixture = backend.fixture.map(|f| resolve(base, &f));
    let report_path = match (&cli.out, &file.out) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => resolve(base, p),
        (None, None) => return Err(Failure::usage("no output path: set `out` or pass --out")),
    };
    let seed = cli.seed.unwrap_or(file.seed);
    let fields = file.fields.clone().unwrap_or_default();
    let template = load_template(file.template.as_ref().map(|t| resolve(base, t)).as_deref(), file.setting)?;
    let run = RunConfig {
        label: file.label.clone(),
        setting: file.setting,
        template,
        example: load_example(&resolve(base, &file.example), &fields)?,
        backend,
        parallelism: file.parallelism,
        seed,
    };
    run.validate()?;
    let records = load_dataset(&resolve(base, &file.dataset), &fields)?;
    let sample = match file.sample_size {
        Some(n) => sample_balanced(&records, n, seed)?,
        None => records,
    };
    let report = run_eval(&run, &sample)?;
    emit_report(&report, &report_path, ReportFormat::Machine).map_err(Failure::domain)?;
    let table_path = report_path.with_extension("txt");
    emit_report(&report, &table_path, ReportFormat::Table).map_err(Failure::domain)?;
    let _ = writeln!(err, "report written to {}", report_path.display());
    match cli.format {
        Some(Format::Machine) => emit(out, &render_machine(&report)),
        Some(Format::Csv) => emit(out, &distribution_csv(std::slice::from_ref(&report))),
        _ => emit(out, &render_table(std::slice::from_ref(&report))),
    }
}

fn cmd_report(cli: &Cli, paths: &[PathBuf], out: &mut dyn Write) -> Outcome {
    let reports = paths
        .iter()
        .map(|p| load_report(p).map_err(Failure::domain))
        .collect::<Result<Vec<_>, _>>()?;
    let text = match cli.format {
        Some(Format::Csv) => distribution_csv(&reports),
        Some(Format::Machine) => reports.iter().map(render_machine).collect(),
        _ => render_table(&reports),
    };
    match &cli.out {
        Some(path) => write_file(path, &text),
        None => emit(out, &text),
    }
}
