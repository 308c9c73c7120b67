#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use ddc_core::{builtin_metamodel, load_kb, KnowledgeBase, MetaModel, Workspace};

pub fn fixture_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/retail-fulfillment")
}

pub fn fixture_kb() -> KnowledgeBase {
    let (kb, diags) = load_kb(&fixture_root().join("kb"), &builtin_metamodel()).expect("fixture loads");
    assert!(diags.is_empty(), "{diags:?}");
    kb
}

pub fn metamodel() -> MetaModel {
    builtin_metamodel()
}

pub fn copy_dir(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for entry in fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let dest = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_dir(&entry.path(), &dest);
        } else {
            fs::copy(entry.path(), dest).unwrap();
        }
    }
}

/// A scratch copy of the fixture's kb/ and meta/.
pub fn scratch_workspace() -> (tempfile::TempDir, Workspace) {
    let dir = tempfile::tempdir().unwrap();
    copy_dir(&fixture_root().join("kb"), &dir.path().join("kb"));
    copy_dir(&fixture_root().join("meta"), &dir.path().join("meta"));
    let ws = Workspace::at(dir.path());
    (dir, ws)
}

/// Every `.md` file under `dir`, relative path to contents.
pub fn tree(dir: &Path) -> Vec<(PathBuf, String)> {
    let mut out = Vec::new();
    walk(dir, dir, &mut out);
    out.sort();
    out
}

fn walk(root: &Path, dir: &Path, out: &mut Vec<(PathBuf, String)>) {
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            walk(root, &path, out);
        } else if path.extension().is_some_and(|e| e == "md") {
            out.push((path.strip_prefix(root).unwrap().to_path_buf(), fs::read_to_string(&path).unwrap()));
        }
    }
}
