//! Cycle log files: `logs/cycle-<NNN>.md`, YAML frontmatter followed by
//! eight fixed sections.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde_yaml::Value;
use thiserror::Error;

use super::{LogDetails, Sandbox, Verdict};
use crate::frontmatter;

pub const SECTION_HEADINGS: [&str; 8] = [
    "Problem Input",
    "Agent Before (Zero/Current Context)",
    "Information Checklist",
    "Human Answers",
    "Entities Curated",
    "Agent After (With Context)",
    "Human Review",
    "Context Reuse Notes",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleLogRecord {
    pub cycle_id: String,
    pub problem_name: String,
    pub date_started: NaiveDate,
    pub date_completed: NaiveDate,
    pub time_spent_minutes: u32,
    pub entities_created: u32,
    pub entities_updated: u32,
    pub entities_reused: Vec<String>,
    pub domain: String,
    /// `(heading, markdown)` in file order.
    pub sections: Vec<(String, String)>,
}

impl CycleLogRecord {
    pub fn section(&self, heading: &str) -> Option<&str> {
        self.sections.iter().find(|(h, _)| h == heading).map(|(_, b)| b.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogParseError {
    #[error("malformed cycle log frontmatter: {0}")]
    MalformedFrontmatter(String),
    #[error("cycle log is missing field {0}")]
    MissingField(&'static str),
}

#[derive(Debug, Error)]
pub enum LogLoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: PathBuf,
        #[source]
        source: LogParseError,
    },
}

/// Parses every `cycle-*.md` file in `dir`. A missing directory holds no logs.
pub fn load_logs(dir: &Path) -> Result<Vec<CycleLogRecord>, LogLoadError> {
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| LogLoadError::Io { path, source }
    };
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io(dir))?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            name.starts_with("cycle-") && name.ends_with(".md")
        })
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(io(p))?;
            parse_cycle_log(&text).map_err(|source| LogLoadError::Parse { path: p.clone(), source })
        })
        .collect()
}

pub fn file_name(cycle_id: &str) -> String {
    format!("cycle-{cycle_id}.md")
}

pub(super) fn build_record(s: &Sandbox, details: &LogDetails) -> CycleLogRecord {
    let graduation = s.graduation.clone().unwrap_or_default();
    let mut sections = Vec::with_capacity(SECTION_HEADINGS.len());
    let mut push = |heading: &str, body: String| sections.push((heading.to_string(), body.trim_matches('\n').to_string()));

    push(SECTION_HEADINGS[0], s.problem.trim_end().to_string());

    let before = s
        .attempts
        .iter()
        .find(|a| a.verdict == Verdict::NotReviewed)
        .map(|a| format!("{}\n\nConfidence: {}/5.", a.answer_text.trim_end(), a.confidence))
        .unwrap_or_default();
    push(SECTION_HEADINGS[1], before);

    let checklist: Vec<String> = s
        .checklist
        .iter()
        .enumerate()
        .map(|(i, c)| format!("{}. {} (type: {})", i + 1, c.question, c.expected_entity_type))
        .collect();
    push(SECTION_HEADINGS[2], checklist.join("\n"));

    let mut answers = Vec::new();
    for item in &s.checklist {
        if let Some(text) = s.answers.get(&item.item_id) {
            answers.push(format!("### {}: {}\n\n{}", item.item_id, item.question, text.trim_end()));
        }
    }
    // Numbered like the "Agent After" attempts, which skip the baseline.
    let reviewed_index = |n: u32| {
        s.reviewed_attempts()
            .position(|a| a.attempt_number == n)
            .map_or(n as usize, |i| i + 1)
    };
    for c in &s.corrections {
        answers.push(format!(
            "### Correction after attempt {}\n\n{}",
            reviewed_index(c.after_attempt),
            c.text.trim_end()
        ));
    }
    push(SECTION_HEADINGS[3], answers.join("\n\n"));

    let mut curated = vec![
        format!("Created ({}): {}", graduation.created.len(), id_list(&graduation.created)),
        format!("Updated ({}): {}", graduation.updated.len(), id_list(&graduation.updated)),
    ];
    if !s.deleted_drafts.is_empty() {
        curated.push(format!(
            "Deleted drafts ({}): {}",
            s.deleted_drafts.len(),
            id_list(&s.deleted_drafts)
        ));
    }
    push(SECTION_HEADINGS[4], curated.join("\n"));

    let reviewed: Vec<_> = s.reviewed_attempts().collect();
    let after: Vec<String> = reviewed
        .iter()
        .enumerate()
        .map(|(i, a)| {
            format!(
                "### Attempt {} ({})\n\n{}\n\nConfidence: {}/5.",
                i + 1,
                verdict_label(a.verdict),
                a.answer_text.trim_end(),
                a.confidence
            )
        })
        .collect();
    push(SECTION_HEADINGS[5], after.join("\n\n"));

    let review: Vec<String> = reviewed
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let notes = a.reviewer_notes.trim();
            if notes.is_empty() {
                format!("- Attempt {}: {}.", i + 1, verdict_label(a.verdict).to_lowercase())
            } else {
                format!("- Attempt {}: {}. {}", i + 1, verdict_label(a.verdict).to_lowercase(), notes)
            }
        })
        .collect();
    push(SECTION_HEADINGS[6], review.join("\n"));

    let reused = s.reused_ids();
    let notes = if reused.is_empty() {
        "No existing entities were reused.".to_string()
    } else {
        format!("Reused {} existing entities: {}.", reused.len(), reused.join(", "))
    };
    push(SECTION_HEADINGS[7], notes);

    CycleLogRecord {
        cycle_id: s.cycle_id.clone(),
        problem_name: s.problem_name.clone(),
        date_started: s.date_started,
        date_completed: details.date_completed,
        time_spent_minutes: details.time_spent_minutes,
        entities_created: graduation.created.len() as u32,
        entities_updated: graduation.updated.len() as u32,
        entities_reused: reused,
        domain: details.domain.clone(),
        sections,
    }
}

fn id_list(ids: &[String]) -> String {
    if ids.is_empty() {
        "none".to_string()
    } else {
        ids.join(", ")
    }
}

fn verdict_label(v: Verdict) -> &'static str {
    match v {
        Verdict::NotReviewed => "Not reviewed",
        Verdict::Pending => "Pending",
        Verdict::Accepted => "Accepted",
        Verdict::Rejected => "Rejected",
    }
}

fn quoted(s: &str) -> String {
    serde_json::to_string(s).expect("string serializes")
}

pub fn render_cycle_log(r: &CycleLogRecord) -> String {
    let reused: Vec<String> = r.entities_reused.clone();
    let mut out = String::new();
    out.push_str("---\n");
    out.push_str(&format!("cycle_id: {}\n", quoted(&r.cycle_id)));
    out.push_str(&format!("problem_name: {}\n", quoted(&r.problem_name)));
    out.push_str(&format!("date_started: {}\n", r.date_started));
    out.push_str(&format!("date_completed: {}\n", r.date_completed));
    out.push_str(&format!("time_spent_minutes: {}\n", r.time_spent_minutes));
    out.push_str(&format!("entities_created: {}\n", r.entities_created));
    out.push_str(&format!("entities_updated: {}\n", r.entities_updated));
    out.push_str(&format!("entities_reused: {}\n", frontmatter::flow_list(&reused)));
    out.push_str(&format!("domain: {}\n", quoted(&r.domain)));
    out.push_str("---\n\n");
    out.push_str(&format!("# Cycle {}: {}\n", r.cycle_id, r.problem_name));
    for (heading, body) in &r.sections {
        out.push_str(&format!("\n## {heading}\n"));
        let body = body.trim_matches('\n');
        if !body.is_empty() {
            out.push('\n');
            out.push_str(body);
            out.push('\n');
        }
    }
    out
}

fn field<'a>(map: &'a serde_yaml::Mapping, key: &'static str) -> Result<&'a Value, LogParseError> {
    match map.get(key) {
        Some(Value::Null) | None => Err(LogParseError::MissingField(key)),
        Some(v) => Ok(v),
    }
}

fn text_field(map: &serde_yaml::Mapping, key: &'static str) -> Result<String, LogParseError> {
    match field(map, key)? {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) => Ok(n.to_string()),
        Value::Bool(b) => Ok(b.to_string()),
        _ => Err(LogParseError::MalformedFrontmatter(format!("{key} must be a scalar"))),
    }
}

fn count_field(map: &serde_yaml::Mapping, key: &'static str) -> Result<u32, LogParseError> {
    field(map, key)?
        .as_u64()
        .and_then(|n| u32::try_from(n).ok())
        .ok_or_else(|| LogParseError::MalformedFrontmatter(format!("{key} must be a non-negative integer")))
}

fn date_field(map: &serde_yaml::Mapping, key: &'static str) -> Result<NaiveDate, LogParseError> {
    let raw = text_field(map, key)?;
    raw.parse()
        .map_err(|_| LogParseError::MalformedFrontmatter(format!("{key} {raw:?} is not a YYYY-MM-DD date")))
}

/// Parses a cycle log. A missing `entities_reused` field reads as empty.
pub fn parse_cycle_log(text: &str) -> Result<CycleLogRecord, LogParseError> {
    let (yaml, body) = frontmatter::split(text)
        .map_err(|e| LogParseError::MalformedFrontmatter(format!("{e:?}")))?;
    let value: Value =
        serde_yaml::from_str(yaml).map_err(|e| LogParseError::MalformedFrontmatter(e.to_string()))?;
    let Value::Mapping(map) = value else {
        return Err(LogParseError::MalformedFrontmatter("frontmatter is not a mapping".into()));
    };

    let mut cycle_id = text_field(&map, "cycle_id")?;
    if cycle_id.bytes().all(|b| b.is_ascii_digit()) {
        cycle_id = format!("{cycle_id:0>3}");
    }
    let entities_reused = match map.get("entities_reused") {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Sequence(items)) => items
            .iter()
            .map(|v| {
                v.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| LogParseError::MalformedFrontmatter("entities_reused holds a non-string".into()))
            })
            .collect::<Result<_, _>>()?,
        Some(_) => return Err(LogParseError::MalformedFrontmatter("entities_reused must be a list".into())),
    };

    Ok(CycleLogRecord {
        cycle_id,
        problem_name: text_field(&map, "problem_name")?,
        date_started: date_field(&map, "date_started")?,
        date_completed: date_field(&map, "date_completed")?,
        time_spent_minutes: count_field(&map, "time_spent_minutes")?,
        entities_created: count_field(&map, "entities_created")?,
        entities_updated: count_field(&map, "entities_updated")?,
        entities_reused,
        domain: text_field(&map, "domain")?,
        sections: parse_sections(body),
    })
}

fn parse_sections(body: &str) -> Vec<(String, String)> {
    let mut sections: Vec<(String, Vec<&str>)> = Vec::new();
    for line in body.lines() {
        if let Some(heading) = line.strip_prefix("## ") {
            sections.push((heading.trim().to_string(), Vec::new()));
        } else if let Some((_, lines)) = sections.last_mut() {
            lines.push(line);
        }
    }
    sections
        .into_iter()
        .map(|(h, lines)| (h, lines.join("\n").trim_matches('\n').to_string()))
        .collect()
}
