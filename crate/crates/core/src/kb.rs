//! Loading a `kb/<entity-type>/<id>.md` tree into an indexed knowledge base.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::diagnostic::{self, Diagnostic, DiagnosticCode};
use crate::entity::{parse_entity, Entity};
use crate::metamodel::MetaModel;

/// One directed relationship instance, labelled by its frontmatter key.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub source: String,
    pub key: String,
    pub target: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Out,
    In,
    Both,
}

impl std::str::FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "out" => Ok(Direction::Out),
            "in" => Ok(Direction::In),
            "both" => Ok(Direction::Both),
            other => Err(format!("direction must be in, out or both, got {other:?}")),
        }
    }
}

#[derive(Debug, Error)]
pub enum KbError {
    #[error("knowledge base root {0} does not exist")]
    RootMissing(PathBuf),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unknown entity {0:?}")]
    UnknownEntity(String),
    #[error("unknown entity type {0:?}")]
    UnknownType(String),
}

/// An immutable snapshot of entities plus the typed edge index.
#[derive(Debug, Clone)]
pub struct KnowledgeBase {
    entities: BTreeMap<String, Entity>,
    edges: Vec<Edge>,
    metamodel: MetaModel,
    root: PathBuf,
    // ids seen more than once, with the path of each shadowed copy
    duplicates: Vec<(String, PathBuf)>,
}

impl KnowledgeBase {
    pub fn empty(metamodel: MetaModel, root: impl Into<PathBuf>) -> Self {
        KnowledgeBase {
            entities: BTreeMap::new(),
            edges: Vec::new(),
            metamodel,
            root: root.into(),
            duplicates: Vec::new(),
        }
    }

    /// Builds a knowledge base from already parsed entities. The first entity
    /// with a given id wins; later ones are reported as `DuplicateId`.
    pub fn from_entities(
        entities: impl IntoIterator<Item = Entity>,
        metamodel: MetaModel,
        root: impl Into<PathBuf>,
    ) -> (Self, Vec<Diagnostic>) {
        let mut kb = KnowledgeBase::empty(metamodel, root);
        let mut diagnostics = Vec::new();
        for entity in entities {
            if let Some(existing) = kb.entities.get(&entity.id) {
                let path = kb.display_path(&entity.source_path);
                diagnostics.push(
                    Diagnostic::error(
                        DiagnosticCode::DuplicateId,
                        format!(
                            "id {} is already defined in {}",
                            entity.id,
                            kb.display_path(&existing.source_path).display()
                        ),
                    )
                    .for_entity(&entity.id)
                    .at(path, Some(entity.frontmatter_line("id").unwrap_or(1))),
                );
                kb.duplicates.push((entity.id.clone(), entity.source_path.clone()));
                continue;
            }
            kb.entities.insert(entity.id.clone(), entity);
        }
        kb.reindex();
        (kb, diagnostics)
    }

    fn reindex(&mut self) {
        self.edges = self
            .entities
            .values()
            .flat_map(|e| {
                e.relationship_pairs().into_iter().map(|(key, target)| Edge {
                    source: e.id.clone(),
                    key: key.to_string(),
                    target: target.to_string(),
                })
            })
            .collect();
        self.edges.sort();
    }

    pub fn metamodel(&self) -> &MetaModel {
        &self.metamodel
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Entity> {
        self.entities.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entities.contains_key(id)
    }

    /// Entities in id order.
    pub fn entities(&self) -> impl Iterator<Item = &Entity> {
        self.entities.values()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entities.keys().map(String::as_str)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn duplicates(&self) -> &[(String, PathBuf)] {
        &self.duplicates
    }

    pub fn into_entities(self) -> impl Iterator<Item = Entity> {
        self.entities.into_values()
    }

    /// `path` relative to the directory holding the KB root, so diagnostics
    /// read `kb/system/x.md` wherever the workspace lives.
    pub fn display_path(&self, path: &Path) -> PathBuf {
        let base = self.root.parent().unwrap_or(Path::new(""));
        path.strip_prefix(base).unwrap_or(path).to_path_buf()
    }

    /// Edges incident to `id`, as `(frontmatter_key, other_id)`, ordered by
    /// key then id.
    pub fn neighbors(&self, id: &str, direction: Direction) -> Result<Vec<(String, String)>, KbError> {
        if !self.contains(id) {
            return Err(KbError::UnknownEntity(id.to_string()));
        }
        let mut out: Vec<(String, String)> = Vec::new();
        if matches!(direction, Direction::Out | Direction::Both) {
            out.extend(
                self.edges
                    .iter()
                    .filter(|e| e.source == id)
                    .map(|e| (e.key.clone(), e.target.clone())),
            );
        }
        if matches!(direction, Direction::In | Direction::Both) {
            out.extend(
                self.edges
                    .iter()
                    .filter(|e| e.target == id)
                    .map(|e| (e.key.clone(), e.source.clone())),
            );
        }
        out.sort();
        Ok(out)
    }

    /// All entities of `entity_type`, ordered by id.
    pub fn find_by_type(&self, entity_type: &str) -> Result<Vec<&Entity>, KbError> {
        if self.metamodel.entity_type(entity_type).is_none() {
            return Err(KbError::UnknownType(entity_type.to_string()));
        }
        Ok(self
            .entities
            .values()
            .filter(|e| e.entity_type == entity_type)
            .collect())
    }
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>, KbError> {
    let read = fs::read_dir(dir).map_err(|source| KbError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut paths = Vec::new();
    for entry in read {
        let entry = entry.map_err(|source| KbError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let name = entry.file_name();
        if name.to_string_lossy().starts_with('.') {
            continue;
        }
        paths.push(entry.path());
    }
    paths.sort();
    Ok(paths)
}

fn is_markdown(path: &Path) -> bool {
    path.is_file() && path.extension().is_some_and(|e| e == "md")
}

/// Loads every `<type>/<id>.md` file under `root`. Problems with individual
/// files become diagnostics; only a missing or unreadable root is an error.
pub fn load_kb(root: &Path, m: &MetaModel) -> Result<(KnowledgeBase, Vec<Diagnostic>), KbError> {
    if !root.is_dir() {
        return Err(KbError::RootMissing(root.to_path_buf()));
    }
    let display_base = root.parent().unwrap_or(Path::new("")).to_path_buf();
    let shown = |p: &Path| p.strip_prefix(&display_base).unwrap_or(p).to_path_buf();

    let mut files: Vec<(Option<String>, PathBuf)> = Vec::new();
    for entry in sorted_entries(root)? {
        if entry.is_dir() {
            let dir_type = entry.file_name().map(|n| n.to_string_lossy().into_owned());
            for file in sorted_entries(&entry)? {
                if is_markdown(&file) {
                    files.push((dir_type.clone(), file));
                }
            }
        } else if is_markdown(&entry) {
            files.push((None, entry));
        }
    }

    let mut diagnostics = Vec::new();
    let mut entities = Vec::new();
    for (dir_type, path) in files {
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) => {
                diagnostics.push(
                    Diagnostic::error(DiagnosticCode::ReadFailure, format!("cannot read file: {e}"))
                        .at(shown(&path), None),
                );
                continue;
            }
        };
        match parse_entity(&text, &path, m) {
            Ok(entity) => {
                if dir_type.as_deref() != Some(entity.entity_type.as_str()) {
                    diagnostics.push(
                        Diagnostic::warning(
                            DiagnosticCode::MisplacedEntity,
                            format!(
                                "{} has type {} but is not under {}/",
                                entity.id, entity.entity_type, entity.entity_type
                            ),
                        )
                        .for_entity(&entity.id)
                        .at(shown(&path), Some(2)),
                    );
                }
                entities.push(entity);
            }
            Err(err) => {
                diagnostics.push(
                    Diagnostic::error(err.code(), err.to_string()).at(shown(&path), err.line()),
                );
            }
        }
    }

    let (kb, dup_diagnostics) = KnowledgeBase::from_entities(entities, m.clone(), root);
    diagnostics.extend(dup_diagnostics);
    diagnostic::normalize(&mut diagnostics);
    Ok((kb, diagnostics))
}
