//! Conventional directory layout of a curation workspace.

use std::path::{Path, PathBuf};

use crate::kb::{load_kb, KbError, KnowledgeBase};
use crate::metamodel::{load_metamodel_dir, MetaModel, MetaModelError};
use crate::diagnostic::Diagnostic;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Workspace {
    pub kb_root: PathBuf,
    pub meta_dir: PathBuf,
    pub logs_dir: PathBuf,
    pub sandboxes_dir: PathBuf,
}

impl Workspace {
    /// `kb/`, `meta/`, `logs/` and `sandboxes/` under `root`.
    pub fn at(root: impl AsRef<Path>) -> Self {
        let root = root.as_ref();
        Workspace {
            kb_root: root.join("kb"),
            meta_dir: root.join("meta"),
            logs_dir: root.join("logs"),
            sandboxes_dir: root.join("sandboxes"),
        }
    }

    /// The meta-model in `meta/`, or the builtin one when the directory has
    /// no definition files.
    pub fn metamodel(&self) -> Result<MetaModel, MetaModelError> {
        load_metamodel_dir(&self.meta_dir, true)
    }

    /// Like [`load_kb`], but a KB directory that does not exist yet is empty.
    pub fn load_kb(&self, m: &MetaModel) -> Result<(KnowledgeBase, Vec<Diagnostic>), KbError> {
        load_or_empty(&self.kb_root, m)
    }
}

pub fn load_or_empty(kb_root: &Path, m: &MetaModel) -> Result<(KnowledgeBase, Vec<Diagnostic>), KbError> {
    if kb_root.exists() {
        load_kb(kb_root, m)
    } else {
        Ok((KnowledgeBase::empty(m.clone(), kb_root), Vec::new()))
    }
}
