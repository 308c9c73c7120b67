mod common;

use std::collections::BTreeMap;

use common::{fixture_kb, fixture_root, metamodel, tree};
use ddc_core::analytics::promotion_candidates;
use ddc_core::{
    ci_check, entity_breakdown, load_logs, parse_entity, serialize_entity, validate_kb, CurationDepth, Direction,
    DiagnosticCode, ExitStatus, Severity, Targets,
};

#[test]
fn type_distribution() {
    let kb = fixture_kb();
    assert_eq!(kb.len(), 46);
    let expected: BTreeMap<String, usize> = [
        ("system", 12),
        ("jargon-tech", 12),
        ("jargon-business", 9),
        ("process", 5),
        ("capability", 4),
        ("platform", 1),
        ("persona", 1),
        ("data-model", 1),
        ("api", 1),
    ]
    .into_iter()
    .map(|(t, n)| (t.to_string(), n))
    .collect();
    assert_eq!(entity_breakdown(&kb), expected);
}

#[test]
fn validates_clean_with_one_orphan() {
    let kb = fixture_kb();
    let report = validate_kb(&kb);
    assert_eq!(report.error_count, 0, "{:?}", report.diagnostics);
    assert_eq!(report.warning_count, 1);
    let only = &report.diagnostics[0];
    assert_eq!((only.severity, only.code), (Severity::Warning, DiagnosticCode::OrphanEntity));
    assert!(only.message.contains("store-sales-staff"));

    let mut out = Vec::new();
    let status = ci_check(&fixture_root().join("kb"), &metamodel(), false, &mut out).unwrap();
    assert_eq!(status, ExitStatus::Success);
    assert!(String::from_utf8(out).unwrap().contains("46 entities checked, 0 errors"));

    let strict = ci_check(&fixture_root().join("kb"), &metamodel(), true, &mut Vec::new()).unwrap();
    assert_eq!(strict, ExitStatus::Findings);
}

#[test]
fn every_file_is_canonical() {
    let m = metamodel();
    let files = tree(&fixture_root().join("kb"));
    assert_eq!(files.len(), 46);
    for (path, text) in files {
        let e = parse_entity(&text, &path, &m).unwrap();
        assert_eq!(serialize_entity(&e), text, "{}", path.display());
    }
}

#[test]
fn service_order_manager_matches_the_documented_example() {
    let kb = fixture_kb();
    let e = kb.get("service-order-manager").unwrap();
    assert_eq!(e.entity_type, "system");
    assert_eq!(e.name, "Service Order Manager");
    assert_eq!(e.description, "Orchestrates service order lifecycle");
    assert_eq!(
        e.relationships.get("related_systems"),
        Some(&Targets::Many(vec!["provided-services-manager".into(), "message-broker".into()]))
    );
    assert_eq!(e.relationships.get("implements_capability"), Some(&Targets::One("service-fulfillment".into())));
    assert_eq!(e.curation_depth(), CurationDepth::Deep);
}

#[test]
fn graph_queries() {
    let kb = fixture_kb();
    let out = kb.neighbors("service-order-manager", Direction::Out).unwrap();
    assert!(out.contains(&("related_systems".to_string(), "message-broker".to_string())));
    assert!(out.contains(&("implements_capability".to_string(), "service-fulfillment".to_string())));

    let incoming = kb.neighbors("message-broker", Direction::In).unwrap();
    assert!(incoming.iter().any(|(key, id)| id == "dead-letter-queue" && key == "describes"));

    assert_eq!(kb.find_by_type("system").unwrap().len(), 12);
    assert!(kb.find_by_type("widget").is_err());
    assert!(kb.neighbors("nope", Direction::Both).is_err());
}

#[test]
fn stub_share_and_promotion() {
    let kb = fixture_kb();
    let stubs = kb.entities().filter(|e| e.curation_depth() == CurationDepth::Stub).count();
    assert!(stubs > 0 && stubs < kb.len());

    let logs = load_logs(&fixture_root().join("logs")).unwrap();
    let ids: Vec<String> = promotion_candidates(&kb, &logs, 3).into_iter().map(|c| c.entity_id).collect();
    assert_eq!(ids, ["dead-letter-queue", "fulfillment-unit"]);
}
