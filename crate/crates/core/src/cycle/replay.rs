//! Deterministic replay of recorded cycles.
//!
//! A transcript is a YAML file with three keys:
//!
//! ```yaml
//! cycle:
//!   id: "001"
//!   name: Service order queue contention
//!   problem: |
//!     ...
//!   date_started: 2025-01-06
//!   date_completed: 2025-01-06
//!   minutes: 30
//!   domain: retail-fulfillment
//! agent:            # scripted agent responses, consumed in order
//!   - attempt: {text: ..., confidence: 1, checklist: [{question: ..., type: system}]}
//!   - draft: {entities: ["---\ntype: system\n..."], delete: []}
//!   - attempt: {text: ..., confidence: 4, consulted: [...]}
//! human:
//!   answers: {q1: ..., q2: ...}
//!   reviews:
//!     - {verdict: rejected, notes: ..., correction: ...}
//!     - {verdict: accepted, notes: ...}
//! ```
//!
//! After a rejection the correction is recorded; if the next scripted step
//! is a draft the agent re-drafts before re-attempting.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::agent::{ScriptStep, ScriptedAgent, StepKind};
use super::log::CycleLogRecord;
use super::{Answer, CycleError, CycleState, LogDetails, NewCycle, Review, Sandbox};
use crate::diagnostic::Diagnostic;
use crate::metamodel::MetaModel;
use crate::workspace::Workspace;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CycleMeta {
    pub id: String,
    pub name: String,
    pub problem: String,
    pub date_started: NaiveDate,
    pub date_completed: NaiveDate,
    pub minutes: u32,
    pub domain: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedReview {
    pub verdict: Review,
    #[serde(default)]
    pub notes: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correction: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HumanScript {
    #[serde(default)]
    pub answers: BTreeMap<String, String>,
    #[serde(default)]
    pub reviews: Vec<ScriptedReview>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transcript {
    pub cycle: CycleMeta,
    pub agent: Vec<ScriptStep>,
    #[serde(default)]
    pub human: HumanScript,
}

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error("cannot read transcript {path}: {message}")]
    Transcript { path: PathBuf, message: String },
    #[error("cycle {0}: reviews ran out before an attempt was accepted")]
    NeverAccepted(String),
    #[error("cycle {cycle}: {source}")]
    Cycle {
        cycle: String,
        #[source]
        source: CycleError,
    },
}

#[derive(Debug, Clone)]
pub struct ReplayOutcome {
    pub sandbox: Sandbox,
    pub record: CycleLogRecord,
    /// Warnings reported at graduation.
    pub warnings: Vec<Diagnostic>,
}

pub fn load_transcript(path: &Path) -> Result<Transcript, ReplayError> {
    let fail = |message: String| ReplayError::Transcript {
        path: path.to_path_buf(),
        message,
    };
    let text = fs::read_to_string(path).map_err(|e| fail(e.to_string()))?;
    serde_yaml::from_str(&text).map_err(|e| fail(e.to_string()))
}

/// Transcript files (`*.yaml`) in `dir`, in name order.
pub fn transcript_paths(dir: &Path) -> Result<Vec<PathBuf>, ReplayError> {
    let entries = fs::read_dir(dir).map_err(|e| ReplayError::Transcript {
        path: dir.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "yaml" || x == "yml"))
        .collect();
    paths.sort();
    Ok(paths)
}

/// Runs one transcript through every protocol step against `ws`, ending
/// with the entities graduated and the cycle logged.
pub fn replay(t: &Transcript, ws: &Workspace, m: &MetaModel) -> Result<ReplayOutcome, ReplayError> {
    let cycle = t.cycle.id.clone();
    let wrap = |source: CycleError| ReplayError::Cycle {
        cycle: cycle.clone(),
        source,
    };
    let mut agent = ScriptedAgent::new(t.agent.clone());
    let mut sandbox = Sandbox::create(
        &ws.sandboxes_dir,
        NewCycle {
            cycle_id: t.cycle.id.clone(),
            problem_name: t.cycle.name.clone(),
            problem: t.cycle.problem.clone(),
            source_docs: Vec::new(),
            date_started: t.cycle.date_started,
        },
    )
    .map_err(wrap)?;
    let (kb, _) = ws.load_kb(m).map_err(|e| wrap(e.into()))?;

    sandbox.run_attempt(&kb, &mut agent).map_err(wrap)?;
    let answers: Vec<Answer> = t
        .human
        .answers
        .iter()
        .map(|(id, text)| Answer::to_item(id.clone(), text.clone()))
        .collect();
    sandbox.record_answers(&answers).map_err(wrap)?;
    sandbox.draft_entities(m, &mut agent).map_err(wrap)?;
    sandbox.run_attempt(&kb, &mut agent).map_err(wrap)?;

    for review in &t.human.reviews {
        sandbox.review_attempt(review.verdict, &review.notes).map_err(wrap)?;
        if review.verdict == Review::Accepted {
            break;
        }
        let correction: Vec<Answer> = review.correction.iter().map(Answer::correction).collect();
        sandbox.record_answers(&correction).map_err(wrap)?;
        if agent.peek() == Some(StepKind::Draft) {
            sandbox.draft_entities(m, &mut agent).map_err(wrap)?;
        }
        sandbox.run_attempt(&kb, &mut agent).map_err(wrap)?;
    }
    if sandbox.state != CycleState::Accepted {
        return Err(ReplayError::NeverAccepted(cycle));
    }

    let warnings = sandbox.graduate(&ws.kb_root, m).map_err(wrap)?;
    let record = sandbox
        .write_cycle_log(
            &ws.logs_dir,
            &LogDetails {
                time_spent_minutes: t.cycle.minutes,
                domain: t.cycle.domain.clone(),
                date_completed: t.cycle.date_completed,
            },
        )
        .map_err(wrap)?;
    Ok(ReplayOutcome {
        sandbox,
        record,
        warnings,
    })
}

/// Replays every transcript in `dir` in order.
pub fn replay_dir(dir: &Path, ws: &Workspace, m: &MetaModel) -> Result<Vec<ReplayOutcome>, ReplayError> {
    transcript_paths(dir)?
        .iter()
        .map(|p| replay(&load_transcript(p)?, ws, m))
        .collect()
}
