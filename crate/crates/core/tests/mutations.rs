//! Each defect class injected into a copy of the clean fixture must be
//! reported with its code and fail the CI gate.

mod common;

use std::fs;
use std::path::Path;

use common::{metamodel, scratch_workspace};
use ddc_core::{ci_check, DiagnosticCode, ExitStatus};

fn replace(path: &Path, from: &str, to: &str) {
    let text = fs::read_to_string(path).unwrap();
    assert!(text.contains(from), "{from:?} not in {}", path.display());
    fs::write(path, text.replacen(from, to, 1)).unwrap();
}

fn check_mutation(mutate: impl FnOnce(&Path), expected: DiagnosticCode) {
    let (_dir, ws) = scratch_workspace();
    mutate(&ws.kb_root);
    let mut out = Vec::new();
    let status = ci_check(&ws.kb_root, &metamodel(), false, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(status, ExitStatus::Findings, "{text}");
    assert!(
        text.lines().any(|l| l.starts_with(&format!("error:{expected}:"))),
        "no {expected} error in:\n{text}"
    );
}

#[test]
fn unmutated_copy_passes() {
    let (_dir, ws) = scratch_workspace();
    let status = ci_check(&ws.kb_root, &metamodel(), false, &mut Vec::new()).unwrap();
    assert_eq!(status, ExitStatus::Success);
}

#[test]
fn dangling_target() {
    check_mutation(
        |kb| replace(&kb.join("jargon-tech/dead-letter-queue.md"), "[message-broker]", "[ghost-broker]"),
        DiagnosticCode::DanglingTarget,
    );
}

#[test]
fn unknown_entity_type() {
    check_mutation(
        |kb| replace(&kb.join("persona/store-sales-staff.md"), "type: persona", "type: widget"),
        DiagnosticCode::UnknownEntityType,
    );
}

#[test]
fn duplicate_id() {
    check_mutation(
        |kb| {
            let text = fs::read_to_string(kb.join("system/picking-service.md")).unwrap();
            fs::write(kb.join("platform/picking-service.md"), text.replace("type: system", "type: platform")).unwrap();
        },
        DiagnosticCode::DuplicateId,
    );
}

#[test]
fn missing_required_field() {
    check_mutation(
        |kb| {
            replace(
                &kb.join("capability/order-capture.md"),
                "description: Taking and confirming customer orders across online and store channels\n",
                "",
            )
        },
        DiagnosticCode::MissingRequiredField,
    );
}

#[test]
fn id_filename_mismatch() {
    check_mutation(
        |kb| fs::rename(kb.join("system/checkout-service.md"), kb.join("system/checkout.md")).unwrap(),
        DiagnosticCode::IdFilenameMismatch,
    );
}

#[test]
fn endpoint_type_mismatch() {
    check_mutation(
        |kb| replace(&kb.join("jargon-tech/dead-letter-queue.md"), "[message-broker]", "[order-capture]"),
        DiagnosticCode::EndpointTypeMismatch,
    );
}

#[test]
fn misplaced_directory_is_a_warning() {
    let (_dir, ws) = scratch_workspace();
    fs::create_dir_all(ws.kb_root.join("api")).unwrap();
    fs::rename(
        ws.kb_root.join("persona/store-sales-staff.md"),
        ws.kb_root.join("api/store-sales-staff.md"),
    )
    .unwrap();
    let mut out = Vec::new();
    let lenient = ci_check(&ws.kb_root, &metamodel(), false, &mut out).unwrap();
    assert_eq!(lenient, ExitStatus::Success);
    assert!(String::from_utf8(out).unwrap().contains("warning:MisplacedEntity:kb/api/store-sales-staff.md:2:"));
    let strict = ci_check(&ws.kb_root, &metamodel(), true, &mut Vec::new()).unwrap();
    assert_eq!(strict, ExitStatus::Findings);
}

#[test]
fn cardinality_violation() {
    check_mutation(
        |kb| {
            replace(
                &kb.join("api/picking-to-routing-parcel-api.md"),
                "exposed_by: picking-service",
                "exposed_by: [picking-service, checkout-service]",
            )
        },
        DiagnosticCode::CardinalityViolation,
    );
}

#[test]
fn naming_convention() {
    check_mutation(
        |kb| {
            let old = kb.join("jargon-tech/circuit-breaker.md");
            replace(&old, "id: circuit-breaker", "id: Circuit_Breaker");
            fs::rename(&old, kb.join("jargon-tech/Circuit_Breaker.md")).unwrap();
        },
        DiagnosticCode::NamingConvention,
    );
}
