//! The curation cycle as a file-backed state machine.
//!
//! A sandbox lives in `sandboxes/<cycle_id>/`:
//!
//! ```text
//! state.yaml              persisted cycle state
//! problem.md              the problem statement
//! sources/                copies of source documents
//! checklist.md            the agent's information checklist
//! answers.md              expert answers and corrections
//! attempts/<n>.md         each agent attempt
//! drafts/<type>/<id>.md   draft entities, never visible in kb/ until graduation
//! ```

pub mod agent;
pub mod log;
pub mod replay;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostic::{self, Diagnostic};
use crate::entity::{parse_entity, parse_entity_text, serialize_entity, Entity, Status};
use crate::kb::{KbError, KnowledgeBase};
use crate::metamodel::MetaModel;
use crate::validator::{validate_entity, validate_kb, ValidationReport};
use crate::workspace::load_or_empty;

use agent::{AdapterError, AgentAdapter, AttemptRequest, DraftRequest};
use log::{CycleLogRecord, LogParseError};

pub const STATE_FILE: &str = "state.yaml";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CycleState {
    Created,
    /// Transient: the first attempt has run and its checklist is being
    /// recorded. Never persisted.
    Attempted,
    GapsIdentified,
    AnswersRecorded,
    Drafted,
    ReAttempted,
    Rejected,
    Accepted,
    Graduated,
    Logged,
}

impl CycleState {
    pub fn as_str(self) -> &'static str {
        match self {
            CycleState::Created => "created",
            CycleState::Attempted => "attempted",
            CycleState::GapsIdentified => "gaps-identified",
            CycleState::AnswersRecorded => "answers-recorded",
            CycleState::Drafted => "drafted",
            CycleState::ReAttempted => "re-attempted",
            CycleState::Rejected => "rejected",
            CycleState::Accepted => "accepted",
            CycleState::Graduated => "graduated",
            CycleState::Logged => "logged",
        }
    }
}

impl fmt::Display for CycleState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// The first attempt, made before any curation, is never reviewed.
    NotReviewed,
    Pending,
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Review {
    Accepted,
    Rejected,
}

impl std::str::FromStr for Review {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "accepted" | "accept" => Ok(Review::Accepted),
            "rejected" | "reject" => Ok(Review::Rejected),
            other => Err(format!("verdict must be accepted or rejected, got {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChecklistItem {
    pub item_id: String,
    pub question: String,
    pub expected_entity_type: String,
    pub answered: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attempt {
    pub attempt_number: u32,
    pub answer_text: String,
    pub confidence: u8,
    pub verdict: Verdict,
    #[serde(default)]
    pub reviewer_notes: String,
    #[serde(default)]
    pub context_entity_ids: Vec<String>,
}

/// Free-form expert feedback given after a rejected attempt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Correction {
    pub after_attempt: u32,
    pub text: String,
}

/// One expert answer. Without an item id it is a free-form correction,
/// which is only accepted after a rejection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Answer {
    pub item_id: Option<String>,
    pub text: String,
}

impl Answer {
    pub fn to_item(item_id: impl Into<String>, text: impl Into<String>) -> Self {
        Answer {
            item_id: Some(item_id.into()),
            text: text.into(),
        }
    }

    pub fn correction(text: impl Into<String>) -> Self {
        Answer {
            item_id: None,
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Graduation {
    pub created: Vec<String>,
    pub updated: Vec<String>,
    /// Ids present in the KB immediately before graduation.
    pub kb_before: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewCycle {
    pub cycle_id: String,
    pub problem_name: String,
    pub problem: String,
    pub source_docs: Vec<PathBuf>,
    pub date_started: NaiveDate,
}

/// Values that only the operator knows when the cycle is logged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogDetails {
    pub time_spent_minutes: u32,
    pub domain: String,
    pub date_completed: NaiveDate,
}

#[derive(Debug, Error)]
pub enum CycleError {
    #[error("problem statement is empty")]
    EmptyProblem,
    #[error("cycle id {0:?} must be at least three digits")]
    InvalidCycleId(String),
    #[error("cycle {0} already exists")]
    DuplicateCycleId(String),
    #[error("no sandbox for cycle {0}")]
    UnknownCycle(String),
    #[error("{operation} is not allowed in state {state}")]
    IllegalState { operation: &'static str, state: CycleState },
    #[error(transparent)]
    AdapterFailure(#[from] AdapterError),
    #[error("no checklist item {0:?}")]
    UnknownChecklistItem(String),
    #[error("answers must name a checklist item outside the correction loop")]
    CorrectionOutsideReview,
    #[error("draft validation failed with {} errors", .0.iter().filter(|d| d.is_error()).count())]
    DraftValidationFailed(Vec<Diagnostic>),
    #[error("no attempt is awaiting review")]
    NoPendingAttempt,
    #[error("graduation blocked: {}", .0.summary())]
    ValidationBlocked(ValidationReport),
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error(transparent)]
    Log(#[from] LogParseError),
    #[error("sandbox state {path} is corrupt: {message}")]
    CorruptState { path: PathBuf, message: String },
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CycleError + '_ {
    move |source| CycleError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CycleError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    fs::write(path, contents).map_err(io_err(path))
}

/// Pads a purely numeric id to three digits: `6` becomes `006`.
pub fn normalize_cycle_id(raw: &str) -> Result<String, CycleError> {
    if raw.is_empty() || !raw.bytes().all(|b| b.is_ascii_digit()) {
        return Err(CycleError::InvalidCycleId(raw.to_string()));
    }
    Ok(format!("{raw:0>3}"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sandbox {
    pub cycle_id: String,
    pub problem_name: String,
    pub problem: String,
    pub state: CycleState,
    pub date_started: NaiveDate,
    #[serde(default)]
    pub source_docs: Vec<PathBuf>,
    #[serde(default)]
    pub checklist: Vec<ChecklistItem>,
    #[serde(default)]
    pub answers: BTreeMap<String, String>,
    #[serde(default)]
    pub corrections: Vec<Correction>,
    #[serde(default)]
    pub attempts: Vec<Attempt>,
    #[serde(default)]
    pub deleted_drafts: Vec<String>,
    #[serde(default)]
    pub draft_rounds: u32,
    #[serde(default)]
    pub graduation: Option<Graduation>,
    #[serde(skip)]
    pub drafts: Vec<Entity>,
    #[serde(skip)]
    pub workspace_path: PathBuf,
}

impl Sandbox {
    /// Creates `sandboxes_dir/<cycle_id>/` with the problem statement and
    /// copies of the source documents.
    pub fn create(sandboxes_dir: &Path, new: NewCycle) -> Result<Sandbox, CycleError> {
        if new.problem.trim().is_empty() {
            return Err(CycleError::EmptyProblem);
        }
        let cycle_id = normalize_cycle_id(&new.cycle_id)?;
        let workspace_path = sandboxes_dir.join(&cycle_id);
        if workspace_path.exists() {
            return Err(CycleError::DuplicateCycleId(cycle_id));
        }
        fs::create_dir_all(&workspace_path).map_err(io_err(&workspace_path))?;

        let mut copied = Vec::new();
        for doc in &new.source_docs {
            let name = doc.file_name().ok_or_else(|| CycleError::Io {
                path: doc.clone(),
                source: std::io::Error::new(std::io::ErrorKind::InvalidInput, "not a file"),
            })?;
            let dest = workspace_path.join("sources").join(name);
            fs::create_dir_all(dest.parent().expect("has parent")).map_err(io_err(&dest))?;
            fs::copy(doc, &dest).map_err(io_err(doc))?;
            copied.push(Path::new("sources").join(name));
        }

        let problem_name = if new.problem_name.trim().is_empty() {
            new.problem.lines().next().unwrap_or_default().trim().to_string()
        } else {
            new.problem_name
        };
        let sandbox = Sandbox {
            cycle_id,
            problem_name,
            problem: new.problem,
            state: CycleState::Created,
            date_started: new.date_started,
            source_docs: copied,
            checklist: Vec::new(),
            answers: BTreeMap::new(),
            corrections: Vec::new(),
            attempts: Vec::new(),
            deleted_drafts: Vec::new(),
            draft_rounds: 0,
            graduation: None,
            drafts: Vec::new(),
            workspace_path,
        };
        write_file(
            &sandbox.workspace_path.join("problem.md"),
            &format!("# {}\n\n{}\n", sandbox.problem_name, sandbox.problem.trim_end()),
        )?;
        sandbox.save()?;
        Ok(sandbox)
    }

    /// Reloads a sandbox from disk, including its draft entities.
    pub fn open(sandboxes_dir: &Path, cycle_id: &str, m: &MetaModel) -> Result<Sandbox, CycleError> {
        let cycle_id = normalize_cycle_id(cycle_id)?;
        let workspace_path = sandboxes_dir.join(&cycle_id);
        let state_path = workspace_path.join(STATE_FILE);
        if !state_path.is_file() {
            return Err(CycleError::UnknownCycle(cycle_id));
        }
        let text = fs::read_to_string(&state_path).map_err(io_err(&state_path))?;
        let mut sandbox: Sandbox = serde_yaml::from_str(&text).map_err(|e| CycleError::CorruptState {
            path: state_path.clone(),
            message: e.to_string(),
        })?;
        sandbox.workspace_path = workspace_path;
        sandbox.drafts = sandbox.read_drafts(m)?;
        Ok(sandbox)
    }

    fn read_drafts(&self, m: &MetaModel) -> Result<Vec<Entity>, CycleError> {
        let dir = self.workspace_path.join("drafts");
        let mut drafts = Vec::new();
        if !dir.is_dir() {
            return Ok(drafts);
        }
        let mut files = Vec::new();
        for type_dir in fs::read_dir(&dir).map_err(io_err(&dir))? {
            let type_dir = type_dir.map_err(io_err(&dir))?.path();
            if !type_dir.is_dir() {
                continue;
            }
            for file in fs::read_dir(&type_dir).map_err(io_err(&type_dir))? {
                files.push(file.map_err(io_err(&type_dir))?.path());
            }
        }
        files.sort();
        for path in files {
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            let entity = parse_entity(&text, &path, m).map_err(|e| CycleError::CorruptState {
                path: path.clone(),
                message: e.to_string(),
            })?;
            drafts.push(entity);
        }
        drafts.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(drafts)
    }

    /// Writes the state file and the human-readable companions.
    pub fn save(&self) -> Result<(), CycleError> {
        let state_path = self.workspace_path.join(STATE_FILE);
        let yaml = serde_yaml::to_string(self).expect("sandbox state serializes");
        write_file(&state_path, &yaml)?;

        if !self.checklist.is_empty() {
            write_file(&self.workspace_path.join("checklist.md"), &self.render_checklist())?;
        }
        if !self.answers.is_empty() || !self.corrections.is_empty() {
            write_file(&self.workspace_path.join("answers.md"), &self.render_answers())?;
        }
        for attempt in &self.attempts {
            let path = self
                .workspace_path
                .join("attempts")
                .join(format!("{}.md", attempt.attempt_number));
            write_file(&path, &render_attempt(attempt))?;
        }

        let drafts_dir = self.workspace_path.join("drafts");
        if drafts_dir.exists() {
            fs::remove_dir_all(&drafts_dir).map_err(io_err(&drafts_dir))?;
        }
        for draft in &self.drafts {
            write_file(&draft.kb_path(&drafts_dir), &serialize_entity(draft))?;
        }
        Ok(())
    }

    fn illegal(&self, operation: &'static str) -> CycleError {
        CycleError::IllegalState {
            operation,
            state: self.state,
        }
    }

    fn last_verdict(&self) -> Option<Verdict> {
        self.attempts.last().map(|a| a.verdict)
    }

    /// Attempts made after curation, i.e. the ones a reviewer judges.
    pub fn reviewed_attempts(&self) -> impl Iterator<Item = &Attempt> {
        self.attempts.iter().filter(|a| a.verdict != Verdict::NotReviewed)
    }

    pub fn rejected_count(&self) -> usize {
        self.attempts.iter().filter(|a| a.verdict == Verdict::Rejected).count()
    }

    pub fn accepted_attempt(&self) -> Option<&Attempt> {
        self.attempts.iter().find(|a| a.verdict == Verdict::Accepted)
    }

    /// Number of agent invocations so far; a scripted agent resumes here.
    pub fn agent_steps(&self) -> usize {
        self.attempts.len() + self.draft_rounds as usize
    }

    /// Step 2/3 of the protocol, and every re-attempt after curation.
    pub fn run_attempt(&mut self, kb: &KnowledgeBase, agent: &mut dyn AgentAdapter) -> Result<&Attempt, CycleError> {
        let first = match self.state {
            CycleState::Created => true,
            CycleState::Drafted => false,
            CycleState::AnswersRecorded if self.last_verdict() == Some(Verdict::Rejected) => false,
            _ => return Err(self.illegal("attempt")),
        };
        let attempt_number = self.attempts.len() as u32 + 1;
        let response = agent.attempt(&AttemptRequest {
            problem: &self.problem,
            attempt_number,
            kb,
            drafts: &self.drafts,
            corrections: &self.corrections,
        })?;
        if !(1..=5).contains(&response.confidence) {
            return Err(AdapterError(format!("confidence {} is outside 1..=5", response.confidence)).into());
        }
        let m = kb.metamodel();
        for gap in &response.checklist {
            if m.entity_type(&gap.entity_type).is_none() {
                return Err(AdapterError(format!("checklist item has unknown type {:?}", gap.entity_type)).into());
            }
        }

        let visible: BTreeSet<&str> = kb.ids().chain(self.drafts.iter().map(|d| d.id.as_str())).collect();
        let context: Vec<String> = match &response.consulted {
            None => visible.iter().map(|s| s.to_string()).collect(),
            Some(ids) => {
                if let Some(unknown) = ids.iter().find(|id| !visible.contains(id.as_str())) {
                    return Err(AdapterError(format!("consulted entity {unknown} is not visible to the agent")).into());
                }
                let set: BTreeSet<&String> = ids.iter().collect();
                set.into_iter().cloned().collect()
            }
        };

        let offset = self.checklist.len();
        self.checklist.extend(response.checklist.iter().enumerate().map(|(i, gap)| ChecklistItem {
            item_id: format!("q{}", offset + i + 1),
            question: gap.question.clone(),
            expected_entity_type: gap.entity_type.clone(),
            answered: false,
        }));
        self.attempts.push(Attempt {
            attempt_number,
            answer_text: response.text,
            confidence: response.confidence,
            verdict: if first { Verdict::NotReviewed } else { Verdict::Pending },
            reviewer_notes: String::new(),
            context_entity_ids: context,
        });
        self.state = if first {
            // Attempted is passed through while the checklist is recorded
            CycleState::GapsIdentified
        } else {
            CycleState::ReAttempted
        };
        self.save()?;
        Ok(self.attempts.last().expect("just pushed"))
    }

    /// Step 5: expert answers to checklist items, or corrections after a
    /// rejection.
    pub fn record_answers(&mut self, answers: &[Answer]) -> Result<(), CycleError> {
        let in_review = match self.state {
            CycleState::GapsIdentified => false,
            CycleState::Rejected => true,
            _ => return Err(self.illegal("answer")),
        };
        for answer in answers {
            match &answer.item_id {
                Some(id) if !self.checklist.iter().any(|c| &c.item_id == id) => {
                    return Err(CycleError::UnknownChecklistItem(id.clone()))
                }
                None if !in_review => return Err(CycleError::CorrectionOutsideReview),
                _ => {}
            }
        }
        let after_attempt = self.attempts.len() as u32;
        for answer in answers {
            match &answer.item_id {
                Some(id) => {
                    self.answers.insert(id.clone(), answer.text.clone());
                    if let Some(item) = self.checklist.iter_mut().find(|c| &c.item_id == id) {
                        item.answered = true;
                    }
                }
                None => self.corrections.push(Correction {
                    after_attempt,
                    text: answer.text.clone(),
                }),
            }
        }
        self.state = CycleState::AnswersRecorded;
        self.save()
    }

    /// Step 6: the agent structures the answers as typed draft entities.
    /// Every draft must pass entity validation before any is stored.
    pub fn draft_entities(&mut self, m: &MetaModel, agent: &mut dyn AgentAdapter) -> Result<&[Entity], CycleError> {
        if self.state != CycleState::AnswersRecorded {
            return Err(self.illegal("draft"));
        }
        let response = agent.draft(&DraftRequest {
            problem: &self.problem,
            checklist: &self.checklist,
            answers: &self.answers,
            corrections: &self.corrections,
            drafts: &self.drafts,
            metamodel: m,
        })?;
        for id in &response.deletions {
            if !self.drafts.iter().any(|d| &d.id == id) {
                return Err(AdapterError(format!("cannot delete {id}: no such draft")).into());
            }
        }

        let mut parsed = Vec::new();
        let mut problems = Vec::new();
        for (i, text) in response.entities.iter().enumerate() {
            match parse_entity_text(text, m) {
                Ok(mut entity) => {
                    entity.status = Status::Draft;
                    entity.source_path = entity.kb_path(&self.workspace_path.join("drafts"));
                    problems.extend(validate_entity(&entity, m).into_iter().filter(Diagnostic::is_error));
                    parsed.push(entity);
                }
                Err(e) => problems.push(
                    Diagnostic::error(e.code(), e.to_string()).at(format!("draft #{}", i + 1), e.line()),
                ),
            }
        }
        if !problems.is_empty() {
            diagnostic::normalize(&mut problems);
            return Err(CycleError::DraftValidationFailed(problems));
        }

        for id in &response.deletions {
            self.drafts.retain(|d| &d.id != id);
            if !self.deleted_drafts.contains(id) {
                self.deleted_drafts.push(id.clone());
            }
        }
        for entity in parsed {
            self.deleted_drafts.retain(|id| id != &entity.id);
            match self.drafts.iter_mut().find(|d| d.id == entity.id) {
                Some(slot) => *slot = entity,
                None => self.drafts.push(entity),
            }
        }
        self.drafts.sort_by(|a, b| a.id.cmp(&b.id));
        self.draft_rounds += 1;
        self.state = CycleState::Drafted;
        self.save()?;
        Ok(&self.drafts)
    }

    /// Step 7: the expert judges the latest attempt.
    pub fn review_attempt(&mut self, review: Review, notes: &str) -> Result<(), CycleError> {
        if self.last_verdict() != Some(Verdict::Pending) {
            return Err(CycleError::NoPendingAttempt);
        }
        if self.state != CycleState::ReAttempted {
            return Err(self.illegal("review"));
        }
        let attempt = self.attempts.last_mut().expect("pending attempt exists");
        attempt.reviewer_notes = notes.to_string();
        (attempt.verdict, self.state) = match review {
            Review::Accepted => (Verdict::Accepted, CycleState::Accepted),
            Review::Rejected => (Verdict::Rejected, CycleState::Rejected),
        };
        self.save()
    }

    /// Step 8: validates the KB with the drafts merged in and, if clean,
    /// writes each draft to `kb_root/<type>/<id>.md` as an active entity.
    /// Returns the remaining (warning) diagnostics.
    pub fn graduate(&mut self, kb_root: &Path, m: &MetaModel) -> Result<Vec<Diagnostic>, CycleError> {
        if self.state != CycleState::Accepted {
            return Err(self.illegal("graduate"));
        }
        let (kb, load_diagnostics) = load_or_empty(kb_root, m)?;
        let kb_before: Vec<String> = kb.ids().map(str::to_string).collect();
        let previous: BTreeMap<String, PathBuf> =
            kb.entities().map(|e| (e.id.clone(), e.source_path.clone())).collect();

        let promoted: Vec<Entity> = self
            .drafts
            .iter()
            .map(|d| {
                let mut e = d.clone();
                e.status = Status::Active;
                e.source_path = e.kb_path(kb_root);
                e
            })
            .collect();
        let draft_ids: BTreeSet<&str> = promoted.iter().map(|e| e.id.as_str()).collect();
        let merged = kb
            .into_entities()
            .filter(|e| !draft_ids.contains(e.id.as_str()))
            .chain(promoted.iter().cloned());
        let (merged, merge_diagnostics) = KnowledgeBase::from_entities(merged, m.clone(), kb_root);
        let report = validate_kb(&merged).with(load_diagnostics).with(merge_diagnostics);
        if report.error_count > 0 {
            return Err(CycleError::ValidationBlocked(report));
        }

        let mut graduation = Graduation {
            kb_before,
            ..Graduation::default()
        };
        for entity in &promoted {
            let path = entity.kb_path(kb_root);
            match previous.get(&entity.id) {
                Some(old) => {
                    if old != &path && old.exists() {
                        fs::remove_file(old).map_err(io_err(old))?;
                    }
                    graduation.updated.push(entity.id.clone());
                }
                None => graduation.created.push(entity.id.clone()),
            }
            write_file(&path, &serialize_entity(entity))?;
        }
        self.graduation = Some(graduation);
        self.state = CycleState::Graduated;
        self.save()?;
        Ok(report.diagnostics)
    }

    /// Step 9: writes `logs_dir/cycle-<id>.md`.
    pub fn write_cycle_log(&mut self, logs_dir: &Path, details: &LogDetails) -> Result<CycleLogRecord, CycleError> {
        if self.state != CycleState::Graduated {
            return Err(self.illegal("log"));
        }
        let record = log::build_record(self, details);
        write_file(&logs_dir.join(log::file_name(&self.cycle_id)), &log::render_cycle_log(&record))?;
        self.state = CycleState::Logged;
        self.save()?;
        Ok(record)
    }

    /// Ids reused from the existing KB: seen by the accepted attempt and
    /// present before graduation.
    pub fn reused_ids(&self) -> Vec<String> {
        let (Some(accepted), Some(g)) = (self.accepted_attempt(), &self.graduation) else {
            return Vec::new();
        };
        let before: BTreeSet<&String> = g.kb_before.iter().collect();
        accepted
            .context_entity_ids
            .iter()
            .filter(|id| before.contains(id))
            .cloned()
            .collect()
    }

    fn render_checklist(&self) -> String {
        let mut out = format!("# Information checklist for cycle {}\n\n", self.cycle_id);
        for item in &self.checklist {
            let mark = if item.answered { "x" } else { " " };
            out.push_str(&format!(
                "- [{mark}] {}: {} (type: {})\n",
                item.item_id, item.question, item.expected_entity_type
            ));
        }
        out
    }

    fn render_answers(&self) -> String {
        let mut out = format!("# Answers for cycle {}\n", self.cycle_id);
        for item in &self.checklist {
            if let Some(text) = self.answers.get(&item.item_id) {
                out.push_str(&format!("\n## {}: {}\n\n{}\n", item.item_id, item.question, text.trim_end()));
            }
        }
        for c in &self.corrections {
            out.push_str(&format!("\n## Correction after attempt {}\n\n{}\n", c.after_attempt, c.text.trim_end()));
        }
        out
    }
}

fn render_attempt(a: &Attempt) -> String {
    format!(
        "# Attempt {}\n\n{}\n\nConfidence: {}/5\nVerdict: {}\n",
        a.attempt_number,
        a.answer_text.trim_end(),
        a.confidence,
        match a.verdict {
            Verdict::NotReviewed => "not reviewed",
            Verdict::Pending => "pending",
            Verdict::Accepted => "accepted",
            Verdict::Rejected => "rejected",
        }
    )
}
