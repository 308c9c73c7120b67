//! The `ddc` command line. [`dispatch`] is the whole program; `main` only
//! wires it to the process streams.

use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use thiserror::Error;

use ddc_core::analytics::{self, ConvergenceReport, ReportFormat};
use ddc_core::cycle::replay::{self, ReplayError};
use ddc_core::governance::{self, GovernanceError};
use ddc_core::kb::Direction;
use ddc_core::workspace::load_or_empty;
use ddc_core::{
    builtin_metamodel, ci_check, load_logs, validate_kb, AgentAdapter, Answer, CycleError, KbError, KnowledgeBase,
    LogDetails, LogLoadError, MetaModelError, NewCycle, Review, Sandbox, ScriptedAgent, Workspace,
};

pub const ROOT_ENV: &str = "DDC_ROOT";

#[derive(Debug, Parser)]
#[command(name = "ddc", version, about = "Curate, validate and analyse a typed knowledge base")]
struct Cli {
    /// Workspace root holding kb/, meta/, logs/ and sandboxes/.
    #[arg(long, global = true, env = ROOT_ENV, default_value = ".")]
    root: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Create the workspace layout and write the builtin meta-model.
    Init,
    /// Check every entity and relationship in kb/.
    Validate {
        /// Print only stable diagnostic lines and the summary.
        #[arg(long)]
        ci: bool,
        #[arg(long)]
        fail_on_warning: bool,
    },
    /// Step through a curation cycle.
    #[command(subcommand)]
    Cycle(CycleCommand),
    /// Convergence analytics over logs/.
    Report {
        #[arg(long, default_value = "table")]
        format: ReportFormat,
        #[arg(long, default_value_t = analytics::DEFAULT_WINDOW)]
        window: usize,
        #[arg(long, default_value_t = analytics::DEFAULT_THRESHOLD)]
        threshold: u32,
    },
    /// Look up an entity, its neighbours, or every entity of a type.
    Query {
        id: Option<String>,
        #[arg(long, value_name = "in|out|both")]
        neighbors: Option<Direction>,
        #[arg(long = "type", value_name = "TYPE")]
        entity_type: Option<String>,
    },
    /// Stub entities reused often enough to deserve deep curation.
    Promote {
        #[arg(long, default_value_t = analytics::DEFAULT_PROMOTION_THRESHOLD)]
        threshold: usize,
    },
    /// Validate kb/ with a changeset applied, optionally checking it
    /// against a second changeset for conflicts.
    Check {
        changeset: PathBuf,
        #[arg(long, value_name = "CHANGESET")]
        against: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum CycleCommand {
    /// Open a sandbox for a new problem.
    New {
        id: String,
        #[arg(long)]
        name: Option<String>,
        /// Problem statement text.
        #[arg(long, conflicts_with = "problem_file", required_unless_present = "problem_file")]
        problem: Option<String>,
        #[arg(long)]
        problem_file: Option<PathBuf>,
        /// Source documents copied into the sandbox.
        #[arg(long = "source")]
        sources: Vec<PathBuf>,
        #[arg(long)]
        date: Option<NaiveDate>,
    },
    /// Ask the agent to attempt the problem.
    Attempt(AgentArgs),
    /// Record expert answers and corrections from a YAML file.
    Answer {
        id: String,
        #[arg(long)]
        file: PathBuf,
    },
    /// Ask the agent to draft entities into the sandbox.
    Draft(AgentArgs),
    /// Accept or reject the pending attempt.
    Review {
        id: String,
        #[arg(long)]
        verdict: Review,
        #[arg(long, default_value = "")]
        notes: String,
    },
    /// Move validated drafts into kb/.
    Graduate { id: String },
    /// Write logs/cycle-<id>.md.
    Log {
        id: String,
        #[arg(long)]
        minutes: u32,
        #[arg(long)]
        domain: String,
        #[arg(long)]
        date_completed: Option<NaiveDate>,
    },
    /// Run recorded transcripts end to end.
    Replay {
        /// Transcript files or directories of `*.yaml` transcripts.
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Print a sandbox's state and attempts.
    Show { id: String },
}

#[derive(Debug, Args)]
struct AgentArgs {
    id: String,
    /// YAML script of agent responses (an `agent:` list).
    #[arg(long)]
    script: PathBuf,
}

/// Human input for `cycle answer`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnswerFile {
    #[serde(default)]
    answers: BTreeMap<String, String>,
    #[serde(default)]
    correction: Option<String>,
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Cycle(#[from] CycleError),
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error(transparent)]
    MetaModel(#[from] MetaModelError),
    #[error(transparent)]
    Logs(#[from] LogLoadError),
    #[error(transparent)]
    Analytics(#[from] ddc_core::AnalyticsError),
    #[error(transparent)]
    Governance(#[from] GovernanceError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) | CliError::MetaModel(_) | CliError::Logs(_) => 2,
            CliError::Kb(KbError::RootMissing(_) | KbError::Io { .. }) => 2,
            CliError::Cycle(CycleError::Io { .. } | CycleError::Kb(KbError::RootMissing(_) | KbError::Io { .. })) => 2,
            CliError::Governance(GovernanceError::Io { .. } | GovernanceError::Manifest { .. }) => 2,
            CliError::Replay(ReplayError::Transcript { .. }) => 2,
            _ => 1,
        }
    }
}

/// Runs one invocation and returns the process exit status: 0 clean,
/// 1 findings or a refused operation, 2 usage or I/O problems.
pub fn dispatch<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match run(cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if let CliError::Cycle(CycleError::DraftValidationFailed(diags)) = &e {
                for d in diags {
                    let _ = writeln!(err, "{d}");
                }
            }
            if let CliError::Cycle(CycleError::ValidationBlocked(report)) = &e {
                for d in &report.diagnostics {
                    let _ = writeln!(err, "{d}");
                }
            }
            e.exit_code()
        }
    }
}

fn run(cli: Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    let ws = Workspace::at(&cli.root);
    match cli.command {
        Command::Init => init(&ws, out),
        Command::Validate { ci, fail_on_warning } => validate(&ws, ci, fail_on_warning, out),
        Command::Cycle(cmd) => cycle(&ws, cmd, out),
        Command::Report {
            format,
            window,
            threshold,
        } => report(&ws, format, window, threshold, out),
        Command::Query {
            id,
            neighbors,
            entity_type,
        } => query(&ws, id, neighbors, entity_type, out),
        Command::Promote { threshold } => promote(&ws, threshold, out),
        Command::Check { changeset, against } => check(&ws, &changeset, against.as_deref(), out),
    }
}

fn init(ws: &Workspace, out: &mut dyn Write) -> Result<i32, CliError> {
    for dir in [&ws.kb_root, &ws.logs_dir, &ws.sandboxes_dir] {
        fs::create_dir_all(dir)?;
    }
    if ws.meta_dir.join("entity-types.yaml").exists() {
        writeln!(out, "meta-model already present in {}", ws.meta_dir.display())?;
    } else {
        builtin_metamodel().write_to_dir(&ws.meta_dir)?;
        writeln!(out, "wrote builtin meta-model to {}", ws.meta_dir.display())?;
    }
    writeln!(out, "workspace ready at {}", ws.kb_root.parent().unwrap_or(Path::new(".")).display())?;
    Ok(0)
}

fn validate(ws: &Workspace, ci: bool, fail_on_warning: bool, out: &mut dyn Write) -> Result<i32, CliError> {
    let m = ws.metamodel()?;
    if ci {
        return Ok(ci_check(&ws.kb_root, &m, fail_on_warning, out)?.code());
    }
    let (kb, diagnostics) = ws.load_kb(&m)?;
    let report = validate_kb(&kb).with(diagnostics);
    for d in &report.diagnostics {
        let location = d
            .location
            .as_ref()
            .map(|l| match l.line {
                Some(line) => format!("{}:{line}: ", l.path.display()),
                None => format!("{}: ", l.path.display()),
            })
            .unwrap_or_default();
        writeln!(out, "{location}{} [{}] {}", d.severity, d.code, d.message)?;
    }
    writeln!(out, "{}", report.summary())?;
    Ok(if report.passes(fail_on_warning) { 0 } else { 1 })
}

fn scripted_agent(script: &Path, sandbox: &Sandbox) -> Result<ScriptedAgent, CliError> {
    let agent = ScriptedAgent::from_file(script).map_err(|e| CliError::Usage(e.0))?;
    Ok(agent.resume_at(sandbox.agent_steps()))
}

fn cycle(ws: &Workspace, cmd: CycleCommand, out: &mut dyn Write) -> Result<i32, CliError> {
    let m = ws.metamodel()?;
    match cmd {
        CycleCommand::New {
            id,
            name,
            problem,
            problem_file,
            sources,
            date,
        } => {
            let problem = match (problem, problem_file) {
                (Some(text), _) => text,
                (None, Some(path)) => fs::read_to_string(&path)
                    .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?,
                (None, None) => unreachable!("clap requires one of --problem and --problem-file"),
            };
            let sandbox = Sandbox::create(
                &ws.sandboxes_dir,
                NewCycle {
                    cycle_id: id,
                    problem_name: name.unwrap_or_default(),
                    problem,
                    source_docs: sources,
                    date_started: date.unwrap_or_else(today),
                },
            )?;
            writeln!(out, "cycle {} created in {}", sandbox.cycle_id, sandbox.workspace_path.display())?;
            Ok(0)
        }
        CycleCommand::Attempt(AgentArgs { id, script }) => {
            let mut sandbox = Sandbox::open(&ws.sandboxes_dir, &id, &m)?;
            let mut agent = scripted_agent(&script, &sandbox)?;
            let (kb, _) = load_or_empty(&ws.kb_root, &m)?;
            let attempt = sandbox.run_attempt(&kb, &mut agent as &mut dyn AgentAdapter)?.clone();
            writeln!(
                out,
                "attempt {} recorded, confidence {}/5, state {}",
                attempt.attempt_number, attempt.confidence, sandbox.state
            )?;
            for item in sandbox.checklist.iter().filter(|i| !i.answered) {
                writeln!(out, "  {}: {} (type: {})", item.item_id, item.question, item.expected_entity_type)?;
            }
            Ok(0)
        }
        CycleCommand::Answer { id, file } => {
            let mut sandbox = Sandbox::open(&ws.sandboxes_dir, &id, &m)?;
            let text =
                fs::read_to_string(&file).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", file.display())))?;
            let parsed: AnswerFile = serde_yaml::from_str::<Option<AnswerFile>>(&text)
                .map_err(|e| CliError::Usage(format!("invalid answer file {}: {e}", file.display())))?
                .unwrap_or_default();
            let answers: Vec<Answer> = parsed
                .answers
                .into_iter()
                .map(|(item, text)| Answer::to_item(item, text))
                .chain(parsed.correction.map(Answer::correction))
                .collect();
            sandbox.record_answers(&answers)?;
            writeln!(out, "{} answers recorded, state {}", answers.len(), sandbox.state)?;
            Ok(0)
        }
        CycleCommand::Draft(AgentArgs { id, script }) => {
            let mut sandbox = Sandbox::open(&ws.sandboxes_dir, &id, &m)?;
            let mut agent = scripted_agent(&script, &sandbox)?;
            let drafts = sandbox.draft_entities(&m, &mut agent)?;
            writeln!(out, "{} draft entities", drafts.len())?;
            for d in drafts {
                writeln!(out, "  {}/{}", d.entity_type, d.id)?;
            }
            Ok(0)
        }
        CycleCommand::Review { id, verdict, notes } => {
            let mut sandbox = Sandbox::open(&ws.sandboxes_dir, &id, &m)?;
            sandbox.review_attempt(verdict, &notes)?;
            writeln!(out, "state {}", sandbox.state)?;
            Ok(0)
        }
        CycleCommand::Graduate { id } => {
            let mut sandbox = Sandbox::open(&ws.sandboxes_dir, &id, &m)?;
            let warnings = sandbox.graduate(&ws.kb_root, &m)?;
            for w in &warnings {
                writeln!(out, "{w}")?;
            }
            let g = sandbox.graduation.clone().unwrap_or_default();
            writeln!(out, "graduated: {} created, {} updated", g.created.len(), g.updated.len())?;
            Ok(0)
        }
        CycleCommand::Log {
            id,
            minutes,
            domain,
            date_completed,
        } => {
            let mut sandbox = Sandbox::open(&ws.sandboxes_dir, &id, &m)?;
            let record = sandbox.write_cycle_log(
                &ws.logs_dir,
                &LogDetails {
                    time_spent_minutes: minutes,
                    domain,
                    date_completed: date_completed.unwrap_or_else(today),
                },
            )?;
            writeln!(
                out,
                "logged cycle {}: {} created, {} updated, {} reused",
                record.cycle_id,
                record.entities_created,
                record.entities_updated,
                record.entities_reused.len()
            )?;
            Ok(0)
        }
        CycleCommand::Replay { paths } => {
            let mut files = Vec::new();
            for p in paths {
                if p.is_dir() {
                    files.extend(replay::transcript_paths(&p)?);
                } else {
                    files.push(p);
                }
            }
            for path in files {
                let transcript = replay::load_transcript(&path)?;
                let outcome = replay::replay(&transcript, ws, &m)?;
                let r = &outcome.record;
                writeln!(
                    out,
                    "cycle {}: {} created, {} updated, {} reused, {} attempts reviewed ({} rejected)",
                    r.cycle_id,
                    r.entities_created,
                    r.entities_updated,
                    r.entities_reused.len(),
                    outcome.sandbox.reviewed_attempts().count(),
                    outcome.sandbox.rejected_count()
                )?;
            }
            Ok(0)
        }
        CycleCommand::Show { id } => {
            let sandbox = Sandbox::open(&ws.sandboxes_dir, &id, &m)?;
            writeln!(out, "cycle {}: {}", sandbox.cycle_id, sandbox.problem_name)?;
            writeln!(out, "state: {}", sandbox.state)?;
            for a in &sandbox.attempts {
                writeln!(out, "attempt {}: confidence {}/5, {:?}", a.attempt_number, a.confidence, a.verdict)?;
            }
            let answered = sandbox.checklist.iter().filter(|i| i.answered).count();
            writeln!(out, "checklist: {answered}/{} answered", sandbox.checklist.len())?;
            writeln!(out, "drafts: {}", sandbox.drafts.len())?;
            Ok(0)
        }
    }
}

fn today() -> NaiveDate {
    chrono::Local::now().date_naive()
}

fn report(
    ws: &Workspace,
    format: ReportFormat,
    window: usize,
    threshold: u32,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let m = ws.metamodel()?;
    let logs = load_logs(&ws.logs_dir)?;
    let series = analytics::compute_series(&logs)?;
    let mut report = ConvergenceReport::new(series, window, threshold)?;
    if ws.kb_root.is_dir() {
        let (kb, _) = ws.load_kb(&m)?;
        report = report.with_breakdown(&kb);
    }
    write!(out, "{}", analytics::render_report(&report, format))?;
    Ok(0)
}

fn query(
    ws: &Workspace,
    id: Option<String>,
    neighbors: Option<Direction>,
    entity_type: Option<String>,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let m = ws.metamodel()?;
    let (kb, _) = ws.load_kb(&m)?;
    let Some(id) = id else {
        let Some(t) = entity_type else {
            return Err(CliError::Usage("query needs an entity id or --type".into()));
        };
        for e in kb.find_by_type(&t)? {
            writeln!(out, "{}\t{}", e.id, e.name)?;
        }
        return Ok(0);
    };
    let entity = kb.get(&id).ok_or_else(|| KbError::UnknownEntity(id.clone()))?;
    match neighbors {
        None => write!(out, "{}", ddc_core::serialize_entity(entity))?,
        Some(direction) => {
            if let Some(t) = &entity_type {
                if m.entity_type(t).is_none() {
                    return Err(KbError::UnknownType(t.clone()).into());
                }
            }
            for (key, other) in kb.neighbors(&id, direction)? {
                let keep = match (&entity_type, kb.get(&other)) {
                    (Some(t), Some(e)) => m.conforms(&e.entity_type, t),
                    (Some(_), None) => false,
                    (None, _) => true,
                };
                if keep {
                    writeln!(out, "{key}\t{other}")?;
                }
            }
        }
    }
    Ok(0)
}

fn promote(ws: &Workspace, threshold: usize, out: &mut dyn Write) -> Result<i32, CliError> {
    let m = ws.metamodel()?;
    let (kb, _) = ws.load_kb(&m)?;
    let logs = load_logs(&ws.logs_dir)?;
    for c in analytics::promotion_candidates(&kb, &logs, threshold) {
        writeln!(out, "{}\t{} cycles", c.entity_id, c.reference_count)?;
    }
    Ok(0)
}

fn check(ws: &Workspace, changeset: &Path, against: Option<&Path>, out: &mut dyn Write) -> Result<i32, CliError> {
    let m = ws.metamodel()?;
    let (base, _) = ws.load_kb(&m)?;
    let (cs, load_diags) = load_changeset(changeset, &base)?;
    let report = governance::check_changeset(&base, &cs).with(load_diags);
    for d in &report.diagnostics {
        writeln!(out, "{d}")?;
    }
    let mut clean = report.passes(false);
    if let Some(other) = against {
        let (other_cs, other_diags) = load_changeset(other, &base)?;
        for d in &other_diags {
            writeln!(out, "{d}")?;
        }
        let conflicts = governance::detect_conflicts(&cs, &other_cs)?;
        for c in &conflicts {
            writeln!(out, "conflict:{c}")?;
        }
        clean &= conflicts.is_empty() && other_diags.iter().all(|d| !d.is_error());
        writeln!(out, "{} conflicts", conflicts.len())?;
    }
    writeln!(
        out,
        "changeset {}: {} added, {} modified, {} removed; {}",
        cs.source_label,
        cs.added.len(),
        cs.modified.len(),
        cs.removed.len(),
        report.summary()
    )?;
    Ok(if clean { 0 } else { 1 })
}

fn load_changeset(
    dir: &Path,
    base: &KnowledgeBase,
) -> Result<(governance::ChangeSet, Vec<ddc_core::Diagnostic>), CliError> {
    if !dir.is_dir() {
        return Err(CliError::Usage(format!("changeset directory {} does not exist", dir.display())));
    }
    Ok(governance::load_changeset(dir, base)?)
}
