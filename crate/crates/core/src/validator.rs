//! Schema, referential-integrity and naming checks over entities and whole
//! knowledge bases.

use std::collections::BTreeSet;
use std::io::{self, Write};
use std::path::Path;

use crate::diagnostic::{self, Diagnostic, DiagnosticCode, Severity};
use crate::entity::{CurationDepth, Entity};
use crate::kb::{load_kb, KbError, KnowledgeBase};
use crate::metamodel::{Cardinality, MetaModel};
use crate::naming::is_kebab_case;

/// Longest description a stub entity may carry.
pub const STUB_DESCRIPTION_LIMIT: usize = 200;

/// Process exit codes shared by every command-line surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Findings = 1,
    Usage = 2,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub diagnostics: Vec<Diagnostic>,
    pub checked_entities: usize,
    pub error_count: usize,
    pub warning_count: usize,
}

impl ValidationReport {
    pub fn new(mut diagnostics: Vec<Diagnostic>, checked_entities: usize) -> Self {
        diagnostic::normalize(&mut diagnostics);
        let error_count = diagnostics.iter().filter(|d| d.is_error()).count();
        ValidationReport {
            warning_count: diagnostics.len() - error_count,
            error_count,
            diagnostics,
            checked_entities,
        }
    }

    /// Folds in diagnostics produced elsewhere (e.g. by the loader).
    pub fn with(self, extra: impl IntoIterator<Item = Diagnostic>) -> Self {
        let checked = self.checked_entities;
        let mut all = self.diagnostics;
        all.extend(extra);
        ValidationReport::new(all, checked)
    }

    pub fn has_code(&self, code: DiagnosticCode) -> bool {
        self.diagnostics.iter().any(|d| d.code == code)
    }

    pub fn passes(&self, fail_on_warning: bool) -> bool {
        self.error_count == 0 && (!fail_on_warning || self.warning_count == 0)
    }

    pub fn summary(&self) -> String {
        format!(
            "{} entities checked, {} errors, {} warnings",
            self.checked_entities, self.error_count, self.warning_count
        )
    }
}

pub fn validate_entity(e: &Entity, m: &MetaModel) -> Vec<Diagnostic> {
    entity_checks(e, m, &e.source_path)
}

fn entity_checks(e: &Entity, m: &MetaModel, path: &Path) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let line = |key: &str| Some(e.frontmatter_line(key).unwrap_or(1));
    let mut push = |severity: Severity, code: DiagnosticCode, key: &str, message: String| {
        let d = Diagnostic {
            code,
            severity,
            entity_id: Some(e.id.clone()),
            message,
            location: None,
        };
        out.push(d.at(path, line(key)));
    };

    if !is_kebab_case(&e.id) {
        push(
            Severity::Error,
            DiagnosticCode::NamingConvention,
            "id",
            format!("id {:?} is not kebab-case", e.id),
        );
    }
    if e.name.trim().is_empty() {
        push(Severity::Error, DiagnosticCode::EmptyName, "name", format!("{} has an empty name", e.id));
    }
    if !e.status.is_known() {
        push(
            Severity::Error,
            DiagnosticCode::InvalidStatus,
            "status",
            format!("status {:?} is not one of active, deprecated, draft, stub", e.status.as_str()),
        );
    }

    let Some(def) = m.entity_type(&e.entity_type) else {
        push(
            Severity::Error,
            DiagnosticCode::UnknownEntityType,
            "type",
            format!("entity type {:?} is not defined in the meta-model", e.entity_type),
        );
        return out;
    };

    for field in &def.required_fields {
        let present = match field.as_str() {
            "type" => !e.entity_type.is_empty(),
            "id" => !e.id.is_empty(),
            // an empty name has its own code
            "name" => true,
            "description" => !e.description.trim().is_empty(),
            "status" => !e.status.as_str().is_empty(),
            "depth" => e.declared_depth.is_some(),
            other => e.extra.contains_key(other) || e.relationships.contains_key(other),
        };
        if !present {
            push(
                Severity::Error,
                DiagnosticCode::MissingRequiredField,
                field,
                format!("{} is missing required field {field}", e.id),
            );
        }
    }

    for (key, targets) in &e.relationships {
        let Some(rel) = m.relationship_by_key(key) else {
            push(
                Severity::Error,
                DiagnosticCode::RelationshipKeyNotAllowed,
                key,
                format!("{key} is not a relationship defined in the meta-model"),
            );
            continue;
        };
        if !m.allows_key(&e.entity_type, key) {
            push(
                Severity::Error,
                DiagnosticCode::RelationshipKeyNotAllowed,
                key,
                format!("{} entities may not carry {key}", e.entity_type),
            );
        }
        if rel.cardinality == Cardinality::One && targets.ids().len() > 1 {
            push(
                Severity::Error,
                DiagnosticCode::CardinalityViolation,
                key,
                format!("{key} takes a single target, found {}", targets.ids().len()),
            );
        }
    }

    for key in e.extra.keys() {
        let declared = def.required_fields.iter().chain(&def.optional_fields).any(|f| f == key);
        if !declared {
            push(
                Severity::Warning,
                DiagnosticCode::UnknownField,
                key,
                format!("{key} is not a declared field of {}", e.entity_type),
            );
        }
    }

    if e.curation_depth() == CurationDepth::Stub
        && e.description.chars().count() > STUB_DESCRIPTION_LIMIT
    {
        push(
            Severity::Warning,
            DiagnosticCode::StubDescriptionTooLong,
            "description",
            format!(
                "stub description is {} characters, limit is {STUB_DESCRIPTION_LIMIT}",
                e.description.chars().count()
            ),
        );
    }
    out
}

/// Per-entity checks plus cross-entity integrity: dangling targets, endpoint
/// types, duplicate ids and orphans.
pub fn validate_kb(kb: &KnowledgeBase) -> ValidationReport {
    let m = kb.metamodel();
    let mut out = Vec::new();
    for e in kb.entities() {
        out.extend(entity_checks(e, m, &kb.display_path(&e.source_path)));
    }

    // same wording as the loader so merged reports dedup
    for (id, path) in kb.duplicates() {
        let kept = kb.get(id).map(|e| kb.display_path(&e.source_path)).unwrap_or_default();
        out.push(
            Diagnostic::error(
                DiagnosticCode::DuplicateId,
                format!("id {id} is already defined in {}", kept.display()),
            )
            .for_entity(id)
            .at(kb.display_path(path), Some(3)),
        );
    }

    let mut linked: BTreeSet<&str> = BTreeSet::new();
    for edge in kb.edges() {
        linked.insert(&edge.source);
        linked.insert(&edge.target);
        let source = kb.get(&edge.source).expect("edge sources are loaded entities");
        let path = kb.display_path(&source.source_path);
        let line = Some(source.frontmatter_line(&edge.key).unwrap_or(1));
        let Some(target) = kb.get(&edge.target) else {
            out.push(
                Diagnostic::error(
                    DiagnosticCode::DanglingTarget,
                    format!("{} {} -> {} does not exist", edge.source, edge.key, edge.target),
                )
                .for_entity(&edge.source)
                .at(path, line),
            );
            continue;
        };
        let Some(rel) = m.relationship_by_key(&edge.key) else {
            continue;
        };
        if !m.conforms(&target.entity_type, &rel.target_type) {
            out.push(
                Diagnostic::error(
                    DiagnosticCode::EndpointTypeMismatch,
                    format!(
                        "{} {} -> {}: target is {}, expected {}",
                        edge.source, edge.key, edge.target, target.entity_type, rel.target_type
                    ),
                )
                .for_entity(&edge.source)
                .at(path.clone(), line),
            );
        }
        if m.allows_key(&source.entity_type, &edge.key)
            && !m.conforms(&source.entity_type, &rel.source_type)
        {
            out.push(
                Diagnostic::error(
                    DiagnosticCode::EndpointTypeMismatch,
                    format!(
                        "{} {} -> {}: source is {}, expected {}",
                        edge.source, edge.key, edge.target, source.entity_type, rel.source_type
                    ),
                )
                .for_entity(&edge.source)
                .at(path, line),
            );
        }
    }

    for e in kb.entities() {
        if !linked.contains(e.id.as_str()) {
            out.push(
                Diagnostic::warning(DiagnosticCode::OrphanEntity, format!("{} has no relationships", e.id))
                    .for_entity(&e.id)
                    .at(kb.display_path(&e.source_path), Some(1)),
            );
        }
    }

    ValidationReport::new(out, kb.len())
}

/// Loads and validates the KB at `root`, printing one diagnostic per line
/// and a summary. Exit status: 0 clean, 1 findings, 2 unreadable root.
pub fn ci_check(root: &Path, m: &MetaModel, fail_on_warning: bool, out: &mut dyn Write) -> io::Result<ExitStatus> {
    let (kb, load_diagnostics) = match load_kb(root, m) {
        Ok(loaded) => loaded,
        Err(e @ (KbError::RootMissing(_) | KbError::Io { .. })) => {
            writeln!(out, "error:{}", e)?;
            return Ok(ExitStatus::Usage);
        }
        Err(e) => unreachable!("load_kb does not produce {e}"),
    };
    let report = validate_kb(&kb).with(load_diagnostics);
    for d in &report.diagnostics {
        writeln!(out, "{}", d.to_line())?;
    }
    writeln!(out, "{}", report.summary())?;
    Ok(if report.passes(fail_on_warning) {
        ExitStatus::Success
    } else {
        ExitStatus::Findings
    })
}

/// Convenience wrapper returning only the merged report.
pub fn check_tree(root: &Path, m: &MetaModel) -> Result<ValidationReport, KbError> {
    let (kb, load_diagnostics) = load_kb(root, m)?;
    Ok(validate_kb(&kb).with(load_diagnostics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entity::{parse_entity_text, Status, Targets};
    use crate::metamodel::builtin_metamodel;

    fn entity(ty: &str, id: &str) -> Entity {
        let m = builtin_metamodel();
        let mut e = parse_entity_text(
            &format!("---\ntype: system\nid: {id}\nname: N\ndescription: d\nstatus: active\n---\n"),
            &m,
        )
        .unwrap();
        e.entity_type = ty.to_string();
        e.source_path = e.kb_path(Path::new("kb"));
        e
    }

    fn codes(d: &[Diagnostic]) -> Vec<DiagnosticCode> {
        d.iter().map(|x| x.code).collect()
    }

    #[test]
    fn clean_entity() {
        let m = builtin_metamodel();
        let mut e = entity("system", "service-order-manager");
        e.relationships.insert("related_systems".into(), Targets::Many(vec!["a".into()]));
        assert_eq!(validate_entity(&e, &m), vec![]);
    }

    #[test]
    fn persona_key_on_system() {
        let m = builtin_metamodel();
        let mut e = entity("system", "x");
        e.relationships.insert("belongs_to".into(), Targets::One("t".into()));
        let d = validate_entity(&e, &m);
        assert_eq!(codes(&d), [DiagnosticCode::RelationshipKeyNotAllowed]);
    }

    #[test]
    fn camel_case_id() {
        let m = builtin_metamodel();
        let e = entity("system", "ServiceOrderManager");
        let d = validate_entity(&e, &m);
        assert_eq!(codes(&d), [DiagnosticCode::NamingConvention]);
        assert_eq!(d[0].location.as_ref().unwrap().line, Some(3));
    }

    #[test]
    fn assorted_entity_defects() {
        let m = builtin_metamodel();
        let mut e = entity("system", "x");
        e.name = " ".into();
        e.status = Status::Other("gone".into());
        e.description = String::new();
        e.relationships.insert(
            "implements_capability".into(),
            Targets::Many(vec!["a".into(), "b".into()]),
        );
        e.relationships.insert("wings".into(), Targets::One("z".into()));
        e.extra.insert("colour".into(), crate::entity::FieldValue::Scalar("red".into()));
        let mut d = validate_entity(&e, &m);
        diagnostic::normalize(&mut d);
        let c = codes(&d);
        for expected in [
            DiagnosticCode::EmptyName,
            DiagnosticCode::InvalidStatus,
            DiagnosticCode::MissingRequiredField,
            DiagnosticCode::CardinalityViolation,
            DiagnosticCode::RelationshipKeyNotAllowed,
            DiagnosticCode::UnknownField,
        ] {
            assert!(c.contains(&expected), "{expected} missing from {c:?}");
        }
    }

    #[test]
    fn unknown_type_short_circuits_type_checks() {
        let m = builtin_metamodel();
        let e = entity("ghost", "x");
        assert_eq!(codes(&validate_entity(&e, &m)), [DiagnosticCode::UnknownEntityType]);
    }

    #[test]
    fn long_stub_description_warns() {
        let m = builtin_metamodel();
        let mut e = entity("jargon-tech", "x");
        e.description = "x".repeat(201);
        let d = validate_entity(&e, &m);
        assert_eq!(codes(&d), [DiagnosticCode::StubDescriptionTooLong]);
        assert_eq!(d[0].severity, Severity::Warning);
        e.body = "## Overview\n".into();
        assert!(validate_entity(&e, &m).is_empty());
    }

    #[test]
    fn kb_level_checks() {
        let m = builtin_metamodel();
        let mut sys = entity("system", "sys");
        sys.relationships.insert("depends_on".into(), Targets::Many(vec!["gone".into()]));
        let mut dec = entity("decision", "dec");
        dec.relationships.insert("affects".into(), Targets::Many(vec!["sys".into()]));
        let lonely = entity("team", "lonely");
        let (kb, _) = KnowledgeBase::from_entities([sys, dec, lonely], m, "kb");
        let report = validate_kb(&kb);
        assert_eq!(report.error_count, 2, "{:?}", report.diagnostics);
        assert_eq!(report.warning_count, 1);
        assert!(report.has_code(DiagnosticCode::DanglingTarget));
        assert!(report.has_code(DiagnosticCode::EndpointTypeMismatch));
        assert!(report.has_code(DiagnosticCode::OrphanEntity));
        assert_eq!(report.error_count + report.warning_count, report.diagnostics.len());
        assert!(!report.passes(false));
    }

    #[test]
    fn platform_satisfies_system_endpoints() {
        let m = builtin_metamodel();
        let mut sys = entity("system", "sys");
        sys.relationships.insert("related_systems".into(), Targets::Many(vec!["broker".into()]));
        let broker = entity("platform", "broker");
        let (kb, _) = KnowledgeBase::from_entities([sys, broker], m, "kb");
        assert_eq!(validate_kb(&kb).diagnostics, vec![]);
    }

    #[test]
    fn ci_check_missing_root_is_usage_error() {
        let mut out = Vec::new();
        let status = ci_check(Path::new("/no/such/kb"), &builtin_metamodel(), false, &mut out).unwrap();
        assert_eq!(status, ExitStatus::Usage);
        assert_eq!(status.code(), 2);
    }
}
