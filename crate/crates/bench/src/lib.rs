//! Inputs shared by the benchmarks.

use std::path::{Path, PathBuf};

use ddc_core::{builtin_metamodel, parse_entity_text, Entity, KnowledgeBase};

/// The retail fulfillment workspace shipped with the repository.
pub fn fixture_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/retail-fulfillment")
}

/// A synthetic chain of `n` systems, each depending on the previous one,
/// with a capability they all implement.
pub fn synthetic_kb(n: usize) -> KnowledgeBase {
    let m = builtin_metamodel();
    let root = PathBuf::from("kb");
    let mut entities: Vec<Entity> = Vec::with_capacity(n + 1);
    let capability = "---\ntype: capability\nid: core-capability\nname: Core\ndescription: c\nstatus: active\n---\n";
    entities.push(parse_entity_text(capability, &m).expect("valid capability"));
    for i in 0..n {
        let depends = if i == 0 { String::new() } else { format!("depends_on: [system-{}]\n", i - 1) };
        let text = format!(
            "---\ntype: system\nid: system-{i}\nname: System {i}\ndescription: s\nstatus: active\n{depends}implements_capability: core-capability\n---\n\n# System {i}\n\n## Overview\n\nBody.\n"
        );
        entities.push(parse_entity_text(&text, &m).expect("valid system"));
    }
    for e in &mut entities {
        e.source_path = e.kb_path(&root);
    }
    KnowledgeBase::from_entities(entities, m, root).0
}
