//! Entity and relationship type registry.
//!
//! The meta-model is the schema every other module validates against. It is
//! either the builtin retail-fulfillment model ([`builtin_metamodel`]) or
//! loaded from `meta/entity-types.yaml` and `meta/relationship-types.yaml`.
//!
//! File format (key names are normative, unknown keys are rejected):
//!
//! ```yaml
//! # meta/entity-types.yaml
//! version: "1.0"
//! entity_types:
//!   system:
//!     description: Software systems
//!     required_fields: [type, id, name, description, status]
//!     optional_fields: [aliases, depth, sources]
//!     allowed_relationship_keys: [depends_on, implements, related_systems]
//!   platform:
//!     specializes: system
//!     ...
//!
//! # meta/relationship-types.yaml
//! relationship_types:
//!   implements:
//!     frontmatter_key: implements_capability
//!     source_type: system
//!     target_type: capability
//!     cardinality: one
//!     directed: true
//! ```

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostic::{Diagnostic, DiagnosticCode};
use crate::naming::is_kebab_case;

/// Frontmatter keys every entity type must require.
pub const CORE_FIELDS: [&str; 5] = ["type", "id", "name", "description", "status"];

pub const ENTITY_TYPES_FILE: &str = "entity-types.yaml";
pub const RELATIONSHIP_TYPES_FILE: &str = "relationship-types.yaml";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cardinality {
    One,
    Many,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntityTypeDef {
    pub type_name: String,
    pub description: String,
    pub required_fields: Vec<String>,
    pub optional_fields: Vec<String>,
    /// Names (`rel_name`) of the relationships an entity of this type may carry.
    pub allowed_relationship_keys: Vec<String>,
    /// Parent type; an entity of this type satisfies relationship endpoints
    /// that expect the parent.
    pub specializes: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationshipTypeDef {
    pub rel_name: String,
    pub frontmatter_key: String,
    pub source_type: String,
    pub target_type: String,
    pub cardinality: Cardinality,
    pub directed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetaModel {
    pub entity_types: Vec<EntityTypeDef>,
    pub relationship_types: Vec<RelationshipTypeDef>,
    pub version: String,
}

#[derive(Debug, Error)]
pub enum MetaModelError {
    #[error("meta-model file not found: {0}")]
    FileMissing(PathBuf),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed meta-model file {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid meta-model: {message}")]
    Schema { message: String },
}

impl MetaModel {
    pub fn entity_type(&self, name: &str) -> Option<&EntityTypeDef> {
        self.entity_types.iter().find(|t| t.type_name == name)
    }

    pub fn relationship(&self, rel_name: &str) -> Option<&RelationshipTypeDef> {
        self.relationship_types.iter().find(|r| r.rel_name == rel_name)
    }

    pub fn relationship_by_key(&self, frontmatter_key: &str) -> Option<&RelationshipTypeDef> {
        self.relationship_types
            .iter()
            .find(|r| r.frontmatter_key == frontmatter_key)
    }

    pub fn type_names(&self) -> impl Iterator<Item = &str> {
        self.entity_types.iter().map(|t| t.type_name.as_str())
    }

    /// Whether an entity of type `actual` may stand where `expected` is
    /// required, following the `specializes` chain.
    pub fn conforms(&self, actual: &str, expected: &str) -> bool {
        let mut current = Some(actual);
        // bounded walk so a cyclic chain cannot spin forever
        for _ in 0..=self.entity_types.len() {
            match current {
                Some(t) if t == expected => return true,
                Some(t) => current = self.entity_type(t).and_then(|d| d.specializes.as_deref()),
                None => return false,
            }
        }
        false
    }

    /// Whether `type_name` may carry the relationship stored under `frontmatter_key`.
    pub fn allows_key(&self, type_name: &str, frontmatter_key: &str) -> bool {
        let (Some(def), Some(rel)) = (
            self.entity_type(type_name),
            self.relationship_by_key(frontmatter_key),
        ) else {
            return false;
        };
        def.allowed_relationship_keys.contains(&rel.rel_name)
    }

    /// Serializes to the `(entity-types.yaml, relationship-types.yaml)` pair.
    pub fn to_yaml(&self) -> (String, String) {
        let mut types = serde_yaml::Mapping::new();
        for t in &self.entity_types {
            let entry = EntityTypeEntry {
                description: t.description.clone(),
                required_fields: Some(t.required_fields.clone()),
                optional_fields: t.optional_fields.clone(),
                allowed_relationship_keys: t.allowed_relationship_keys.clone(),
                specializes: t.specializes.clone(),
            };
            types.insert(
                t.type_name.clone().into(),
                serde_yaml::to_value(entry).expect("entity type entry serializes"),
            );
        }
        let mut rels = serde_yaml::Mapping::new();
        for r in &self.relationship_types {
            let entry = RelationshipTypeEntry {
                frontmatter_key: r.frontmatter_key.clone(),
                source_type: r.source_type.clone(),
                target_type: r.target_type.clone(),
                cardinality: r.cardinality,
                directed: r.directed,
            };
            rels.insert(
                r.rel_name.clone().into(),
                serde_yaml::to_value(entry).expect("relationship entry serializes"),
            );
        }
        let entity_file = EntityTypesFile {
            version: Some(self.version.clone()),
            entity_types: types,
        };
        let rel_file = RelationshipTypesFile {
            version: Some(self.version.clone()),
            relationship_types: rels,
        };
        (
            serde_yaml::to_string(&entity_file).expect("entity types serialize"),
            serde_yaml::to_string(&rel_file).expect("relationship types serialize"),
        )
    }

    /// Writes both meta-model files into `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        let (entities, rels) = self.to_yaml();
        fs::write(dir.join(ENTITY_TYPES_FILE), entities)?;
        fs::write(dir.join(RELATIONSHIP_TYPES_FILE), rels)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntityTypesFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    version: Option<String>,
    entity_types: serde_yaml::Mapping,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RelationshipTypesFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    version: Option<String>,
    relationship_types: serde_yaml::Mapping,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntityTypeEntry {
    #[serde(default)]
    description: String,
    #[serde(default)]
    required_fields: Option<Vec<String>>,
    #[serde(default)]
    optional_fields: Vec<String>,
    #[serde(default)]
    allowed_relationship_keys: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    specializes: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RelationshipTypeEntry {
    frontmatter_key: String,
    source_type: String,
    target_type: String,
    cardinality: Cardinality,
    directed: bool,
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

/// The retail-fulfillment meta-model: the ten documented entity types plus
/// `platform`, and the ten typed edges plus the undirected `related_systems`
/// association.
pub fn builtin_metamodel() -> MetaModel {
    let optional = ["aliases", "depth", "sources"];
    let ty = |name: &str, description: &str, rels: &[&str], specializes: Option<&str>| {
        EntityTypeDef {
            type_name: name.to_string(),
            description: description.to_string(),
            required_fields: strings(&CORE_FIELDS),
            optional_fields: strings(&optional),
            allowed_relationship_keys: strings(rels),
            specializes: specializes.map(str::to_string),
        }
    };
    let system_rels = ["depends_on", "implements", "related_systems"];
    let entity_types = vec![
        ty("jargon-business", "Business terminology", &["defines"], None),
        ty("jargon-tech", "Technical terminology", &["describes"], None),
        ty("system", "Software systems", &system_rels, None),
        ty("capability", "Business capabilities", &["owned_by"], None),
        ty("data-model", "Core data structures", &["used_by"], None),
        ty("api", "API contracts", &["exposed_by"], None),
        ty("team", "Organizational units", &[], None),
        ty("persona", "User roles and needs", &["belongs_to"], None),
        ty("decision", "Architectural decisions", &["affects"], None),
        ty("process", "Business processes", &["uses"], None),
        ty(
            "platform",
            "Shared infrastructure platforms",
            &system_rels,
            Some("system"),
        ),
    ];

    let rel = |name: &str, key: &str, source: &str, target: &str, card: Cardinality, directed: bool| {
        RelationshipTypeDef {
            rel_name: name.to_string(),
            frontmatter_key: key.to_string(),
            source_type: source.to_string(),
            target_type: target.to_string(),
            cardinality: card,
            directed,
        }
    };
    use Cardinality::{Many, One};
    let relationship_types = vec![
        rel("implements", "implements_capability", "system", "capability", One, true),
        rel("exposed_by", "exposed_by", "api", "system", One, true),
        rel("uses", "uses", "process", "system", Many, true),
        rel("owned_by", "owned_by", "capability", "team", One, true),
        rel("belongs_to", "belongs_to", "persona", "team", One, true),
        rel("affects", "affects", "decision", "capability", Many, true),
        rel("used_by", "used_by", "data-model", "system", Many, true),
        rel("describes", "describes", "jargon-tech", "system", Many, true),
        rel("defines", "defines", "jargon-business", "capability", Many, true),
        rel("depends_on", "depends_on", "system", "system", Many, true),
        rel("related_systems", "related_systems", "system", "system", Many, false),
    ];

    MetaModel {
        entity_types,
        relationship_types,
        version: "1.0".to_string(),
    }
}

fn read_optional(path: &Path, allow_defaults: bool) -> Result<Option<String>, MetaModelError> {
    match fs::read_to_string(path) {
        Ok(text) => Ok(Some(text)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            if allow_defaults {
                Ok(None)
            } else {
                Err(MetaModelError::FileMissing(path.to_path_buf()))
            }
        }
        Err(source) => Err(MetaModelError::Io {
            path: path.to_path_buf(),
            source,
        }),
    }
}

fn mapping_key(key: &serde_yaml::Value, what: &str) -> Result<String, MetaModelError> {
    match key.as_str() {
        Some(s) if !s.trim().is_empty() => Ok(s.to_string()),
        _ => Err(MetaModelError::Schema {
            message: format!("{what} entry without a name (got {key:?})"),
        }),
    }
}

fn parse_entity_types(path: &Path, text: &str) -> Result<(Option<String>, Vec<EntityTypeDef>), MetaModelError> {
    let file: EntityTypesFile = serde_yaml::from_str(text).map_err(|e| classify(path, e))?;
    let mut out = Vec::new();
    for (key, value) in file.entity_types {
        let type_name = mapping_key(&key, "entity type")?;
        let entry: EntityTypeEntry = serde_yaml::from_value(value).map_err(|e| MetaModelError::Schema {
            message: format!("entity type {type_name}: {e}"),
        })?;
        out.push(EntityTypeDef {
            type_name,
            description: entry.description,
            required_fields: entry.required_fields.unwrap_or_else(|| strings(&CORE_FIELDS)),
            optional_fields: entry.optional_fields,
            allowed_relationship_keys: entry.allowed_relationship_keys,
            specializes: entry.specializes,
        });
    }
    Ok((file.version, out))
}

fn parse_relationship_types(
    path: &Path,
    text: &str,
) -> Result<(Option<String>, Vec<RelationshipTypeDef>), MetaModelError> {
    let file: RelationshipTypesFile = serde_yaml::from_str(text).map_err(|e| classify(path, e))?;
    let mut out = Vec::new();
    for (key, value) in file.relationship_types {
        let rel_name = mapping_key(&key, "relationship type")?;
        let entry: RelationshipTypeEntry =
            serde_yaml::from_value(value).map_err(|e| MetaModelError::Schema {
                message: format!("relationship type {rel_name}: {e}"),
            })?;
        out.push(RelationshipTypeDef {
            rel_name,
            frontmatter_key: entry.frontmatter_key,
            source_type: entry.source_type,
            target_type: entry.target_type,
            cardinality: entry.cardinality,
            directed: entry.directed,
        });
    }
    Ok((file.version, out))
}

// Unknown or missing top-level keys are schema problems; anything else is a
// syntax problem.
fn classify(path: &Path, e: serde_yaml::Error) -> MetaModelError {
    let message = e.to_string();
    if message.contains("unknown field") || message.contains("missing field") {
        MetaModelError::Schema { message }
    } else {
        MetaModelError::Parse {
            path: path.to_path_buf(),
            message,
        }
    }
}

/// Loads a meta-model from its two files. With `allow_defaults`, a missing
/// file falls back to the builtin definitions for that half.
pub fn load_metamodel(
    entity_types_file: &Path,
    relationship_types_file: &Path,
    allow_defaults: bool,
) -> Result<MetaModel, MetaModelError> {
    let builtin = builtin_metamodel();
    let entity_text = read_optional(entity_types_file, allow_defaults)?;
    let rel_text = read_optional(relationship_types_file, allow_defaults)?;

    let (entity_version, entity_types) = match entity_text {
        Some(text) => parse_entity_types(entity_types_file, &text)?,
        None => (None, builtin.entity_types.clone()),
    };
    let (rel_version, relationship_types) = match rel_text {
        Some(text) => parse_relationship_types(relationship_types_file, &text)?,
        None => (None, builtin.relationship_types.clone()),
    };
    let version = match (entity_version, rel_version) {
        (Some(a), Some(b)) if a != b => {
            return Err(MetaModelError::Schema {
                message: format!("version mismatch between meta-model files: {a} vs {b}"),
            })
        }
        (Some(v), _) | (None, Some(v)) => v,
        (None, None) => builtin.version,
    };

    let model = MetaModel {
        entity_types,
        relationship_types,
        version,
    };
    let errors: Vec<String> = validate_metamodel(&model)
        .into_iter()
        .filter(Diagnostic::is_error)
        .map(|d| d.message)
        .collect();
    if !errors.is_empty() {
        return Err(MetaModelError::Schema {
            message: errors.join("; "),
        });
    }
    Ok(model)
}

/// Loads `entity-types.yaml` and `relationship-types.yaml` from `dir`.
pub fn load_metamodel_dir(dir: &Path, allow_defaults: bool) -> Result<MetaModel, MetaModelError> {
    load_metamodel(
        &dir.join(ENTITY_TYPES_FILE),
        &dir.join(RELATIONSHIP_TYPES_FILE),
        allow_defaults,
    )
}

/// Checks the structural invariants of a meta-model. Every violation is an
/// error; an empty result means the model is usable.
pub fn validate_metamodel(m: &MetaModel) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for t in &m.entity_types {
        if !is_kebab_case(&t.type_name) {
            out.push(Diagnostic::error(
                DiagnosticCode::InvalidTypeName,
                format!("entity type name {:?} is not kebab-case", t.type_name),
            ));
        }
        if !seen.insert(t.type_name.as_str()) {
            out.push(Diagnostic::error(
                DiagnosticCode::DuplicateTypeName,
                format!("entity type {} is defined more than once", t.type_name),
            ));
        }
        for core in CORE_FIELDS {
            if !t.required_fields.iter().any(|f| f == core) {
                out.push(Diagnostic::error(
                    DiagnosticCode::MissingCoreField,
                    format!("entity type {} does not require {core}", t.type_name),
                ));
            }
        }
        for key in &t.allowed_relationship_keys {
            if m.relationship(key).is_none() {
                out.push(Diagnostic::error(
                    DiagnosticCode::UnresolvedRelationshipKey,
                    format!(
                        "entity type {} allows relationship {key}, which is not defined",
                        t.type_name
                    ),
                ));
            }
        }
        if let Some(parent) = &t.specializes {
            if m.entity_type(parent).is_none() {
                out.push(Diagnostic::error(
                    DiagnosticCode::UndefinedEntityType,
                    format!("entity type {} specializes undefined type {parent}", t.type_name),
                ));
            }
        }
    }

    let mut names = HashSet::new();
    let mut keys = HashSet::new();
    for r in &m.relationship_types {
        if !names.insert(r.rel_name.as_str()) {
            out.push(Diagnostic::error(
                DiagnosticCode::DuplicateRelationshipName,
                format!("relationship {} is defined more than once", r.rel_name),
            ));
        }
        if !keys.insert(r.frontmatter_key.as_str()) {
            out.push(Diagnostic::error(
                DiagnosticCode::DuplicateFrontmatterKey,
                format!(
                    "frontmatter key {} is used by more than one relationship",
                    r.frontmatter_key
                ),
            ));
        }
        for (role, ty) in [("source", &r.source_type), ("target", &r.target_type)] {
            if m.entity_type(ty).is_none() {
                out.push(Diagnostic::error(
                    DiagnosticCode::UndefinedEntityType,
                    format!("relationship {} has undefined {role} type {ty}", r.rel_name),
                ));
            }
        }
        if r.rel_name == "depends_on" && (r.source_type != "system" || r.target_type != "system") {
            out.push(Diagnostic::error(
                DiagnosticCode::SelfReferenceShape,
                format!(
                    "depends_on must link system to system, found {} -> {}",
                    r.source_type, r.target_type
                ),
            ));
        }
    }
    out
}
