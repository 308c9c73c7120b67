mod common;

use common::{copy_dir, fixture_root, metamodel, tree};
use ddc_core::cycle::replay::{load_transcript, replay, replay_dir, transcript_paths};
use ddc_core::{load_kb, parse_cycle_log, CycleState, Verdict, Workspace};

fn fresh_workspace() -> (tempfile::TempDir, Workspace) {
    let dir = tempfile::tempdir().unwrap();
    copy_dir(&fixture_root().join("meta"), &dir.path().join("meta"));
    let ws = Workspace::at(dir.path());
    (dir, ws)
}

#[test]
fn replay_reproduces_the_shipped_fixture() {
    let (_dir, ws) = fresh_workspace();
    let m = ws.metamodel().unwrap();
    let outcomes = replay_dir(&fixture_root().join("transcripts"), &ws, &m).unwrap();
    assert_eq!(outcomes.len(), 9);
    assert_eq!(tree(&ws.kb_root), tree(&fixture_root().join("kb")));
    assert_eq!(tree(&ws.logs_dir), tree(&fixture_root().join("logs")));
}

#[test]
fn cycle_one() {
    let (_dir, ws) = fresh_workspace();
    let m = metamodel();
    let t = load_transcript(&fixture_root().join("transcripts/cycle-001.yaml")).unwrap();
    let outcome = replay(&t, &ws, &m).unwrap();
    let s = &outcome.sandbox;

    assert_eq!(s.attempts[0].attempt_number, 1);
    assert_eq!(s.attempts[0].confidence, 1);
    assert_eq!(s.attempts[0].verdict, Verdict::NotReviewed);
    assert!(s.checklist.len() >= 5);
    let types: Vec<&str> = s.checklist.iter().map(|c| c.expected_entity_type.as_str()).collect();
    assert_eq!(types, ["system", "system", "system", "platform", "jargon-business", "process"]);
    assert!(s.checklist.iter().all(|c| c.answered));

    assert_eq!(s.attempts[1].attempt_number, 2);
    assert_eq!(s.attempts[1].confidence, 4);
    assert_eq!(s.attempts[1].verdict, Verdict::Accepted);
    assert_eq!(s.state, CycleState::Logged);

    assert_eq!(outcome.record.entities_created, 8);
    let (kb, _) = load_kb(&ws.kb_root, &m).unwrap();
    assert_eq!(kb.len(), 8);
    assert!(kb.entities().all(|e| e.status.as_str() == "active"));
}

#[test]
fn cycle_six_corrections_and_fabrications() {
    let (_dir, ws) = fresh_workspace();
    let m = metamodel();
    let paths = transcript_paths(&fixture_root().join("transcripts")).unwrap();
    let mut last = None;
    for p in &paths[..6] {
        last = Some(replay(&load_transcript(p).unwrap(), &ws, &m).unwrap());
    }
    let outcome = last.unwrap();
    let s = &outcome.sandbox;
    assert_eq!(s.cycle_id, "006");

    let reviewed: Vec<_> = s.reviewed_attempts().collect();
    assert_eq!(reviewed.len(), 3);
    assert_eq!(s.rejected_count(), 2);
    assert_eq!(reviewed.iter().map(|a| a.confidence).collect::<Vec<_>>(), [3, 3, 4]);
    assert_eq!(s.draft_rounds, 3);
    assert_eq!(s.deleted_drafts, ["data-replication-pipeline", "dp-data-capture-configuration"]);

    assert_eq!(outcome.record.entities_created, 7);
    assert_eq!(outcome.record.entities_updated, 4);
    assert_eq!(outcome.record.entities_reused.len(), 6);

    let (kb, _) = load_kb(&ws.kb_root, &m).unwrap();
    assert!(!kb.contains("data-replication-pipeline"));
    assert!(!kb.contains("dp-data-capture-configuration"));
    assert!(kb.contains("cross-compartment-deployment-error"));
}

#[test]
fn logs_round_trip_and_carry_the_table_values() {
    let logs = tree(&fixture_root().join("logs"));
    assert_eq!(logs.len(), 9);
    let mut rows = Vec::new();
    for (_, text) in &logs {
        let r = parse_cycle_log(text).unwrap();
        assert_eq!(ddc_core::render_cycle_log(&r), *text);
        assert_eq!(r.sections.len(), 8);
        rows.push((r.entities_created, r.entities_updated, r.entities_reused.len(), r.time_spent_minutes));
    }
    assert_eq!(
        rows,
        [
            (8, 0, 0, 30),
            (4, 0, 3, 25),
            (4, 3, 5, 30),
            (5, 4, 8, 30),
            (6, 3, 7, 30),
            (7, 4, 6, 45),
            (8, 0, 3, 30),
            (2, 2, 6, 25),
            (2, 3, 6, 25)
        ]
    );
}

#[test]
fn replaying_twice_is_refused() {
    let (_dir, ws) = fresh_workspace();
    let m = metamodel();
    let t = load_transcript(&fixture_root().join("transcripts/cycle-001.yaml")).unwrap();
    replay(&t, &ws, &m).unwrap();
    assert!(replay(&t, &ws, &m).is_err());
}
