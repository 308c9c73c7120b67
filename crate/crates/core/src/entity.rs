//! Entity files: markdown with a `---` delimited frontmatter block.
//!
//! ```markdown
//! ---
//! type: system
//! id: service-order-manager
//! name: Service Order Manager
//! description: Orchestrates service order lifecycle
//! status: active
//! implements_capability: service-fulfillment
//! related_systems: [provided-services-manager, message-broker]
//! ---
//!
//! # Service Order Manager
//! ```
//!
//! The canonical key order is `type, id, name, description, status`, then
//! relationship keys alphabetically, then any remaining keys alphabetically.
//! [`serialize_entity`] always produces that order, so `serialize ∘ parse` is
//! byte-identical on canonical files.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde_yaml::{Mapping, Value};
use thiserror::Error;

use crate::diagnostic::DiagnosticCode;
use crate::frontmatter::{self, SplitError};
use crate::metamodel::MetaModel;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Status {
    Active,
    Deprecated,
    Draft,
    Stub,
    /// A value outside the vocabulary, kept so the validator can report it.
    Other(String),
}

impl Status {
    pub fn as_str(&self) -> &str {
        match self {
            Status::Active => "active",
            Status::Deprecated => "deprecated",
            Status::Draft => "draft",
            Status::Stub => "stub",
            Status::Other(s) => s,
        }
    }

    pub fn is_known(&self) -> bool {
        !matches!(self, Status::Other(_))
    }
}

impl From<&str> for Status {
    fn from(s: &str) -> Self {
        match s {
            "active" => Status::Active,
            "deprecated" => Status::Deprecated,
            "draft" => Status::Draft,
            "stub" => Status::Stub,
            other => Status::Other(other.to_string()),
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CurationDepth {
    Deep,
    Stub,
}

impl CurationDepth {
    pub fn as_str(self) -> &'static str {
        match self {
            CurationDepth::Deep => "deep",
            CurationDepth::Stub => "stub",
        }
    }
}

impl FromStr for CurationDepth {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "deep" => Ok(CurationDepth::Deep),
            "stub" => Ok(CurationDepth::Stub),
            other => Err(format!("depth must be deep or stub, got {other:?}")),
        }
    }
}

/// Targets of one relationship key, in the shape they were written.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Targets {
    /// `key: target`
    One(String),
    /// `key: [a, b]`
    Many(Vec<String>),
}

impl Targets {
    pub fn ids(&self) -> &[String] {
        match self {
            Targets::One(t) => std::slice::from_ref(t),
            Targets::Many(ts) => ts,
        }
    }
}

/// A non-relationship frontmatter value outside the core fields.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FieldValue {
    Scalar(String),
    List(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entity {
    pub id: String,
    pub entity_type: String,
    pub name: String,
    pub description: String,
    pub status: Status,
    /// Relationship frontmatter key to targets, ordered by key.
    pub relationships: BTreeMap<String, Targets>,
    /// Remaining frontmatter keys (other than `depth`).
    pub extra: BTreeMap<String, FieldValue>,
    /// Explicit `depth:` override, when present.
    pub declared_depth: Option<CurationDepth>,
    pub body: String,
    pub source_path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EntityError {
    #[error("file does not start with a --- frontmatter block")]
    NoFrontmatter,
    #[error("malformed frontmatter: {message}")]
    MalformedFrontmatter { line: Option<usize>, message: String },
    #[error("unknown entity type {0:?}")]
    UnknownEntityType(String),
    #[error("missing required field {0:?}")]
    MissingRequiredField(String),
    #[error("id {id:?} does not match file name {stem:?}")]
    IdFilenameMismatch { id: String, stem: String },
}

impl EntityError {
    pub fn code(&self) -> DiagnosticCode {
        match self {
            EntityError::NoFrontmatter => DiagnosticCode::NoFrontmatter,
            EntityError::MalformedFrontmatter { .. } => DiagnosticCode::MalformedFrontmatter,
            EntityError::UnknownEntityType(_) => DiagnosticCode::UnknownEntityType,
            EntityError::MissingRequiredField(_) => DiagnosticCode::MissingRequiredField,
            EntityError::IdFilenameMismatch { .. } => DiagnosticCode::IdFilenameMismatch,
        }
    }

    pub fn line(&self) -> Option<usize> {
        match self {
            EntityError::MalformedFrontmatter { line, .. } => *line,
            _ => Some(1),
        }
    }
}

fn malformed(line: Option<usize>, message: impl Into<String>) -> EntityError {
    EntityError::MalformedFrontmatter {
        line,
        message: message.into(),
    }
}

impl Entity {
    /// Explicit override if present, otherwise inferred from the body: an
    /// entity is deep once its body has at least one `##` section heading.
    pub fn curation_depth(&self) -> CurationDepth {
        self.declared_depth
            .unwrap_or_else(|| infer_depth(&self.body))
    }

    /// `(frontmatter_key, target_id)` pairs in canonical order.
    pub fn relationship_pairs(&self) -> Vec<(&str, &str)> {
        self.relationships
            .iter()
            .flat_map(|(k, t)| t.ids().iter().map(move |id| (k.as_str(), id.as_str())))
            .collect()
    }

    pub fn relationship_count(&self) -> usize {
        self.relationships.values().map(|t| t.ids().len()).sum()
    }

    /// 1-based line of `key` in the canonical serialization.
    pub fn frontmatter_line(&self, key: &str) -> Option<usize> {
        self.canonical_keys()
            .iter()
            .position(|k| k == key)
            .map(|i| i + 2)
    }

    fn canonical_keys(&self) -> Vec<String> {
        let mut keys: Vec<String> = ["type", "id", "name", "description", "status"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        keys.extend(self.relationships.keys().cloned());
        keys.extend(self.trailing_fields().into_iter().map(|(k, _)| k));
        keys
    }

    fn trailing_fields(&self) -> Vec<(String, String)> {
        let mut fields: Vec<(String, String)> = self
            .extra
            .iter()
            .map(|(k, v)| {
                let rendered = match v {
                    FieldValue::Scalar(s) => frontmatter::scalar(s),
                    FieldValue::List(items) => frontmatter::flow_list(items),
                };
                (k.clone(), rendered)
            })
            .collect();
        if let Some(depth) = self.declared_depth {
            fields.push(("depth".to_string(), depth.as_str().to_string()));
        }
        fields.sort_by(|a, b| a.0.cmp(&b.0));
        fields
    }

    /// Conventional location of this entity under a KB root.
    pub fn kb_path(&self, kb_root: &Path) -> PathBuf {
        kb_root
            .join(&self.entity_type)
            .join(format!("{}.md", self.id))
    }
}

pub fn infer_depth(body: &str) -> CurationDepth {
    let has_section = body.lines().any(|line| {
        let hashes = line.bytes().take_while(|&b| b == b'#').count();
        (2..=6).contains(&hashes) && line[hashes..].starts_with(' ')
    });
    if has_section {
        CurationDepth::Deep
    } else {
        CurationDepth::Stub
    }
}

fn scalar_text(value: &Value) -> Option<String> {
    match value {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

fn string_list(key: &str, items: &[Value], line: Option<usize>) -> Result<Vec<String>, EntityError> {
    items
        .iter()
        .map(|v| scalar_text(v).ok_or_else(|| malformed(line, format!("{key}: list items must be scalars"))))
        .collect()
}

fn key_lines(yaml: &str) -> BTreeMap<String, usize> {
    let mut lines = BTreeMap::new();
    for (i, line) in yaml.lines().enumerate() {
        if line.starts_with(|c: char| c.is_whitespace() || c == '#') {
            continue;
        }
        if let Some((key, _)) = line.split_once(':') {
            lines.entry(key.trim().to_string()).or_insert(i + 2);
        }
    }
    lines
}

/// Parses entity text without tying it to a file: `source_path` is left
/// empty and the id is not compared against any file name.
pub fn parse_entity_text(text: &str, m: &MetaModel) -> Result<Entity, EntityError> {
    let (yaml, body) = frontmatter::split(text).map_err(|e| match e {
        SplitError::NoOpening => EntityError::NoFrontmatter,
        SplitError::NoClosing => malformed(Some(1), "no closing --- line"),
    })?;

    let mapping: Mapping = if yaml.trim().is_empty() {
        Mapping::new()
    } else {
        match serde_yaml::from_str::<Value>(yaml) {
            Ok(Value::Mapping(map)) => map,
            Ok(Value::Null) => Mapping::new(),
            Ok(_) => return Err(malformed(Some(2), "frontmatter is not a mapping")),
            Err(e) => {
                let line = e.location().map(|l| l.line() + 1);
                return Err(malformed(line, e.to_string()));
            }
        }
    };
    let lines = key_lines(yaml);

    let mut fields: BTreeMap<String, Value> = BTreeMap::new();
    for (k, v) in mapping {
        let key = scalar_text(&k).ok_or_else(|| malformed(Some(2), "frontmatter keys must be scalars"))?;
        fields.insert(key, v);
    }

    let mut core = |key: &str| -> Result<String, EntityError> {
        let line = lines.get(key).copied();
        match fields.remove(key) {
            None | Some(Value::Null) => Err(EntityError::MissingRequiredField(key.to_string())),
            Some(v) => scalar_text(&v).ok_or_else(|| malformed(line, format!("{key} must be a scalar"))),
        }
    };
    let entity_type = core("type")?;
    if m.entity_type(&entity_type).is_none() {
        return Err(EntityError::UnknownEntityType(entity_type));
    }
    let id = core("id")?;
    let name = core("name")?;
    let description = core("description")?;
    let status = Status::from(core("status")?.as_str());

    let mut relationships = BTreeMap::new();
    let mut extra = BTreeMap::new();
    let mut declared_depth = None;
    for (key, value) in fields {
        let line = lines.get(&key).copied();
        if key == "depth" {
            let text = scalar_text(&value).ok_or_else(|| malformed(line, "depth must be a scalar"))?;
            declared_depth = Some(text.parse().map_err(|e: String| malformed(line, e))?);
            continue;
        }
        let is_relationship = m.relationship_by_key(&key).is_some();
        match value {
            Value::Sequence(items) => {
                let items = string_list(&key, &items, line)?;
                if is_relationship {
                    relationships.insert(key, Targets::Many(items));
                } else {
                    extra.insert(key, FieldValue::List(items));
                }
            }
            other => {
                let text = scalar_text(&other)
                    .ok_or_else(|| malformed(line, format!("{key}: unsupported value")))?;
                if is_relationship {
                    relationships.insert(key, Targets::One(text));
                } else {
                    extra.insert(key, FieldValue::Scalar(text));
                }
            }
        }
    }

    Ok(Entity {
        id,
        entity_type,
        name,
        description,
        status,
        relationships,
        extra,
        declared_depth,
        body: body.to_string(),
        source_path: PathBuf::new(),
    })
}

/// Parses an entity file. The file stem must equal the entity id.
pub fn parse_entity(text: &str, path: &Path, m: &MetaModel) -> Result<Entity, EntityError> {
    let mut entity = parse_entity_text(text, m)?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    if stem != entity.id {
        return Err(EntityError::IdFilenameMismatch {
            id: entity.id,
            stem,
        });
    }
    entity.source_path = path.to_path_buf();
    Ok(entity)
}

/// Canonical text for an entity.
pub fn serialize_entity(e: &Entity) -> String {
    let mut out = String::with_capacity(256 + e.body.len());
    out.push_str("---\n");
    let mut line = |k: &str, v: &str| {
        out.push_str(k);
        out.push_str(": ");
        out.push_str(v);
        out.push('\n');
    };
    line("type", &frontmatter::scalar(&e.entity_type));
    line("id", &frontmatter::scalar(&e.id));
    line("name", &frontmatter::scalar(&e.name));
    line("description", &frontmatter::scalar(&e.description));
    line("status", &frontmatter::scalar(e.status.as_str()));
    for (key, targets) in &e.relationships {
        let rendered = match targets {
            Targets::One(t) => frontmatter::scalar(t),
            Targets::Many(ts) => frontmatter::flow_list(ts),
        };
        line(key, &rendered);
    }
    for (key, rendered) in e.trailing_fields() {
        line(&key, &rendered);
    }
    out.push_str("---\n");
    out.push_str(&e.body);
    out
}
