//! Changesets against a shared KB: diffing, conflict detection between
//! teams, and a validation gate for merges.
//!
//! On disk a changeset is a directory mirroring `kb/` (`<type>/<id>.md` for
//! every added or modified entity) plus a `changeset.yaml` manifest:
//!
//! ```yaml
//! source_label: team-a
//! removed: [obsolete-entity]
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostic::Diagnostic;
use crate::entity::{serialize_entity, Entity};
use crate::kb::{load_kb, KbError, KnowledgeBase};
use crate::validator::{validate_kb, ValidationReport};

pub const MANIFEST_FILE: &str = "changeset.yaml";

#[derive(Debug, Error)]
pub enum GovernanceError {
    #[error("the two knowledge bases use different meta-models")]
    MetaModelMismatch,
    #[error("both changesets are labelled {0:?}")]
    SameSourceLabel(String),
    #[error("malformed changeset manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ChangeSet {
    pub source_label: String,
    pub added: Vec<Entity>,
    /// `(before, after)` pairs.
    pub modified: Vec<(Entity, Entity)>,
    pub removed: Vec<String>,
}

impl ChangeSet {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.modified.is_empty() && self.removed.is_empty()
    }

    /// Every id the changeset touches.
    pub fn touched_ids(&self) -> BTreeSet<&str> {
        self.added
            .iter()
            .map(|e| e.id.as_str())
            .chain(self.modified.iter().map(|(_, after)| after.id.as_str()))
            .chain(self.removed.iter().map(String::as_str))
            .collect()
    }

    fn change_for(&self, id: &str) -> Option<Change<'_>> {
        if let Some(e) = self.added.iter().find(|e| e.id == id) {
            return Some(Change::Add(e));
        }
        if let Some((_, after)) = self.modified.iter().find(|(_, after)| after.id == id) {
            return Some(Change::Modify(after));
        }
        self.removed.iter().any(|r| r == id).then_some(Change::Remove)
    }
}

enum Change<'a> {
    Add(&'a Entity),
    Modify(&'a Entity),
    Remove,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConflictKind {
    DivergentModify,
    AddAdd,
    ModifyRemove,
}

impl fmt::Display for ConflictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ConflictKind::DivergentModify => "divergent-modify",
            ConflictKind::AddAdd => "add-add",
            ConflictKind::ModifyRemove => "modify-remove",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Conflict {
    pub entity_id: String,
    pub kind: ConflictKind,
    /// The two source labels, in sorted order.
    pub parties: (String, String),
}

impl fmt::Display for Conflict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}:{}", self.kind, self.entity_id, self.parties.0, self.parties.1)
    }
}

/// Entities only in `proposed` are added, only in `base` removed, and
/// those whose canonical text differs modified.
pub fn diff_kb(base: &KnowledgeBase, proposed: &KnowledgeBase, label: &str) -> Result<ChangeSet, GovernanceError> {
    if base.metamodel() != proposed.metamodel() {
        return Err(GovernanceError::MetaModelMismatch);
    }
    let mut cs = ChangeSet {
        source_label: label.to_string(),
        ..ChangeSet::default()
    };
    for after in proposed.entities() {
        match base.get(&after.id) {
            None => cs.added.push(after.clone()),
            Some(before) if serialize_entity(before) != serialize_entity(after) => {
                cs.modified.push((before.clone(), after.clone()))
            }
            Some(_) => {}
        }
    }
    cs.removed = base.ids().filter(|id| !proposed.contains(id)).map(str::to_string).collect();
    Ok(cs)
}

/// The KB that results from applying `cs` to `base`. Nothing is written.
pub fn apply_changeset(base: &KnowledgeBase, cs: &ChangeSet) -> (KnowledgeBase, Vec<Diagnostic>) {
    let replaced: BTreeSet<&str> = cs.touched_ids();
    let root = base.root().to_path_buf();
    let relocate = |e: &Entity| {
        let mut e = e.clone();
        e.source_path = e.kb_path(&root);
        e
    };
    let entities = base
        .entities()
        .filter(|e| !replaced.contains(e.id.as_str()))
        .cloned()
        .chain(cs.added.iter().map(relocate))
        .chain(cs.modified.iter().map(|(_, after)| relocate(after)))
        .collect::<Vec<_>>();
    KnowledgeBase::from_entities(entities, base.metamodel().clone(), root.clone())
}

/// Conflicts between two changesets made against the same base. Identical
/// changes never conflict. The result does not depend on argument order.
pub fn detect_conflicts(a: &ChangeSet, b: &ChangeSet) -> Result<Vec<Conflict>, GovernanceError> {
    if a.source_label == b.source_label {
        return Err(GovernanceError::SameSourceLabel(a.source_label.clone()));
    }
    let parties = if a.source_label <= b.source_label {
        (a.source_label.clone(), b.source_label.clone())
    } else {
        (b.source_label.clone(), a.source_label.clone())
    };
    let ids_b = b.touched_ids();
    let mut out = Vec::new();
    for id in a.touched_ids().intersection(&ids_b) {
        let kind = match (a.change_for(id), b.change_for(id)) {
            (Some(Change::Modify(x)), Some(Change::Modify(y))) if serialize_entity(x) != serialize_entity(y) => {
                Some(ConflictKind::DivergentModify)
            }
            (Some(Change::Add(x)), Some(Change::Add(y))) if serialize_entity(x) != serialize_entity(y) => {
                Some(ConflictKind::AddAdd)
            }
            (Some(Change::Modify(_)), Some(Change::Remove)) | (Some(Change::Remove), Some(Change::Modify(_))) => {
                Some(ConflictKind::ModifyRemove)
            }
            _ => None,
        };
        if let Some(kind) = kind {
            out.push(Conflict {
                entity_id: id.to_string(),
                kind,
                parties: parties.clone(),
            });
        }
    }
    out.sort();
    Ok(out)
}

/// Validates `base` with `cs` applied.
pub fn check_changeset(base: &KnowledgeBase, cs: &ChangeSet) -> ValidationReport {
    let (merged, diagnostics) = apply_changeset(base, cs);
    validate_kb(&merged).with(diagnostics)
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    #[serde(default)]
    source_label: String,
    #[serde(default)]
    removed: Vec<String>,
}

/// Reads a changeset directory, classifying each entity file as added or
/// modified relative to `base`. Files identical to the base are ignored.
/// Per-file parse problems come back as diagnostics.
pub fn load_changeset(dir: &Path, base: &KnowledgeBase) -> Result<(ChangeSet, Vec<Diagnostic>), GovernanceError> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest: Manifest = if manifest_path.is_file() {
        let text = fs::read_to_string(&manifest_path).map_err(|source| GovernanceError::Io {
            path: manifest_path.clone(),
            source,
        })?;
        serde_yaml::from_str::<Option<Manifest>>(&text)
            .map_err(|e| GovernanceError::Manifest {
                path: manifest_path.clone(),
                message: e.to_string(),
            })?
            .unwrap_or_default()
    } else {
        Manifest::default()
    };
    let label = if manifest.source_label.is_empty() {
        dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
    } else {
        manifest.source_label
    };

    let (proposed, diagnostics) = load_kb(dir, base.metamodel())?;
    let mut cs = ChangeSet {
        source_label: label,
        removed: manifest.removed,
        ..ChangeSet::default()
    };
    for after in proposed.into_entities() {
        match base.get(&after.id) {
            None => cs.added.push(after),
            Some(before) if serialize_entity(before) != serialize_entity(&after) => {
                cs.modified.push((before.clone(), after))
            }
            Some(_) => {}
        }
    }
    Ok((cs, diagnostics))
}

/// Writes `cs` as a changeset directory.
pub fn write_changeset(cs: &ChangeSet, dir: &Path) -> Result<(), GovernanceError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| GovernanceError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let manifest = Manifest {
        source_label: cs.source_label.clone(),
        removed: cs.removed.clone(),
    };
    let manifest_path = dir.join(MANIFEST_FILE);
    fs::write(&manifest_path, serde_yaml::to_string(&manifest).expect("manifest serializes"))
        .map_err(io(&manifest_path))?;
    let changed: BTreeMap<&str, &Entity> = cs
        .added
        .iter()
        .chain(cs.modified.iter().map(|(_, after)| after))
        .map(|e| (e.id.as_str(), e))
        .collect();
    for entity in changed.values() {
        let path = entity.kb_path(dir);
        let parent = path.parent().expect("entity path has a parent");
        fs::create_dir_all(parent).map_err(io(parent))?;
        fs::write(&path, serialize_entity(entity)).map_err(io(&path))?;
    }
    Ok(())
}
