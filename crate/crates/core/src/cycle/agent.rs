//! The agent side of a cycle: the adapter contract and a scripted
//! implementation that replays a fixed response sequence.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{ChecklistItem, Correction};
use crate::entity::Entity;
use crate::kb::KnowledgeBase;
use crate::metamodel::MetaModel;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("agent adapter failed: {0}")]
pub struct AdapterError(pub String);

/// A knowledge gap the agent reports, typed by the entity type that would
/// fill it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapItem {
    pub question: String,
    #[serde(rename = "type")]
    pub entity_type: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttemptResponse {
    pub text: String,
    pub confidence: u8,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checklist: Vec<GapItem>,
    /// Entities the agent drew on. `None` means everything it could see.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consulted: Option<Vec<String>>,
}

/// Entity files (full markdown text) to store as drafts, and draft ids to
/// discard.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DraftResponse {
    #[serde(default)]
    pub entities: Vec<String>,
    #[serde(default, rename = "delete", skip_serializing_if = "Vec::is_empty")]
    pub deletions: Vec<String>,
}

pub struct AttemptRequest<'a> {
    pub problem: &'a str,
    pub attempt_number: u32,
    pub kb: &'a KnowledgeBase,
    pub drafts: &'a [Entity],
    pub corrections: &'a [Correction],
}

pub struct DraftRequest<'a> {
    pub problem: &'a str,
    pub checklist: &'a [ChecklistItem],
    pub answers: &'a BTreeMap<String, String>,
    pub corrections: &'a [Correction],
    pub drafts: &'a [Entity],
    pub metamodel: &'a MetaModel,
}

pub trait AgentAdapter {
    fn attempt(&mut self, request: &AttemptRequest<'_>) -> Result<AttemptResponse, AdapterError>;
    fn draft(&mut self, request: &DraftRequest<'_>) -> Result<DraftResponse, AdapterError>;
}

/// One scripted invocation; exactly one of the two fields is set.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptStep {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attempt: Option<AttemptResponse>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub draft: Option<DraftResponse>,
}

impl ScriptStep {
    pub fn attempt(response: AttemptResponse) -> Self {
        ScriptStep {
            attempt: Some(response),
            draft: None,
        }
    }

    pub fn draft(response: DraftResponse) -> Self {
        ScriptStep {
            attempt: None,
            draft: Some(response),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    Attempt,
    Draft,
}

#[derive(Deserialize)]
struct ScriptFile {
    agent: Vec<ScriptStep>,
}

/// Replays a fixed list of responses, one per call. Running out of steps,
/// or being asked for an attempt when the next step is a draft (or the
/// reverse), is an adapter failure.
#[derive(Debug, Clone)]
pub struct ScriptedAgent {
    steps: Vec<ScriptStep>,
    cursor: usize,
}

impl ScriptedAgent {
    pub fn new(steps: Vec<ScriptStep>) -> Self {
        ScriptedAgent { steps, cursor: 0 }
    }

    /// Parses a YAML mapping whose `agent` key holds the step list. Other
    /// top-level keys are ignored, so a full transcript is a valid script.
    pub fn from_yaml(text: &str) -> Result<Self, AdapterError> {
        let file: ScriptFile =
            serde_yaml::from_str(text).map_err(|e| AdapterError(format!("invalid script: {e}")))?;
        Ok(ScriptedAgent::new(file.agent))
    }

    pub fn from_file(path: &Path) -> Result<Self, AdapterError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AdapterError(format!("cannot read {}: {e}", path.display())))?;
        Self::from_yaml(&text)
    }

    /// Skips the first `n` steps, resuming a script across processes.
    pub fn resume_at(mut self, n: usize) -> Self {
        self.cursor = n;
        self
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    pub fn remaining(&self) -> usize {
        self.steps.len().saturating_sub(self.cursor)
    }

    pub fn peek(&self) -> Option<StepKind> {
        let step = self.steps.get(self.cursor)?;
        match (&step.attempt, &step.draft) {
            (Some(_), None) => Some(StepKind::Attempt),
            (None, Some(_)) => Some(StepKind::Draft),
            _ => None,
        }
    }

    fn next(&mut self, wanted: StepKind) -> Result<ScriptStep, AdapterError> {
        let position = self.cursor + 1;
        let step = self
            .steps
            .get(self.cursor)
            .cloned()
            .ok_or_else(|| AdapterError(format!("script exhausted after {} steps", self.steps.len())))?;
        match self.peek() {
            Some(kind) if kind == wanted => {
                self.cursor += 1;
                Ok(step)
            }
            Some(kind) => Err(AdapterError(format!(
                "script step {position} is a {kind:?} response, expected {wanted:?}"
            ))),
            None => Err(AdapterError(format!(
                "script step {position} must set exactly one of attempt or draft"
            ))),
        }
    }
}

impl AgentAdapter for ScriptedAgent {
    fn attempt(&mut self, _: &AttemptRequest<'_>) -> Result<AttemptResponse, AdapterError> {
        Ok(self.next(StepKind::Attempt)?.attempt.expect("kind checked"))
    }

    fn draft(&mut self, _: &DraftRequest<'_>) -> Result<DraftResponse, AdapterError> {
        Ok(self.next(StepKind::Draft)?.draft.expect("kind checked"))
    }
}
