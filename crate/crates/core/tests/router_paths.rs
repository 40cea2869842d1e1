mod common;

use std::collections::BTreeSet;

use common::{block_on, facility, feed, inputs, s1_open};
use fsm_core::fusion::IncidentStatus;
use fsm_core::registry::{Availability, DeviceKind};
use fsm_core::router::{availability_facts, cause_hits, comprehensive_report, Facts};
use fsm_core::{
    AnswerBundle, FacilitySnapshot, Gateway, QueryIntent, QueryOutcome, QueryPath, Router, RouterError, Section,
};

fn router() -> Router {
    Router::new(Gateway::stub())
}

fn ask(snap: &FacilitySnapshot, utterance: &str) -> AnswerBundle {
    match block_on(router().answer(utterance, None, snap)).unwrap() {
        QueryOutcome::Answer(b) => b,
        QueryOutcome::Clarification(c) => panic!("clarification for {utterance:?}: {c:?}"),
    }
}

fn citations_resolve(snap: &FacilitySnapshot, bundle: &AnswerBundle) {
    for id in &bundle.citations {
        assert!(
            snap.store.get(id).is_some() || snap.knowledge.entry(id).is_some(),
            "dangling citation {id}"
        );
    }
    let labels: BTreeSet<&str> = bundle
        .requests
        .iter()
        .flat_map(|r| r.context_blocks.iter().map(|b| b.label.as_str()))
        .collect();
    for id in &bundle.citations {
        assert!(labels.contains(id.as_str()), "citation {id} missing from context blocks");
    }
}

#[test]
fn path1_marks_faulted_machine_unavailable() {
    let f = s1_open();
    let snap = f.snapshot();
    let b = ask(&snap, "Which devices are deployed in the corridor?");
    assert_eq!(b.intent.path, QueryPath::Path1Availability);
    let Facts::Availability(facts) = &b.facts else { panic!() };
    let ssbrm = facts.devices.iter().find(|d| d.device_id == "SSBRM-01").unwrap();
    assert_eq!(ssbrm.status, Availability::Unavailable);
    assert_eq!(facts.devices.len(), 4);
    assert_eq!(facts.unavailable, 1);
    let incident = &snap.incidents[0];
    assert_eq!(ssbrm.incident_ids, vec![incident.incident_id.clone()]);
    assert!(incident.event_ids.iter().all(|e| b.citations.contains(e)));
    assert!(b.rendered_text.contains("[availability]"));
    citations_resolve(&snap, &b);
}

#[test]
fn path1_quiet_zone_needs_no_citations() {
    let f = s1_open();
    let b = ask(&f.snapshot(), "Which devices are deployed in the lobby?");
    let Facts::Availability(facts) = &b.facts else { panic!() };
    assert!(facts.devices.iter().all(|d| d.status == Availability::Available));
    assert!(b.citations.is_empty());
}

#[test]
fn unknown_zone_is_an_error() {
    let f = facility();
    let intent = QueryIntent::new(QueryPath::Path1Availability).in_zone("attic");
    let err = block_on(router().execute(&intent, &f.snapshot())).unwrap_err();
    assert!(matches!(err, RouterError::UnknownZone(z) if z == "attic"));
}

#[test]
fn path2_reports_open_incident() {
    let f = s1_open();
    let snap = f.snapshot();
    let b = ask(&snap, "Is the self-service machine in the corridor experiencing any issues?");
    let Facts::FaultStatus(facts) = &b.facts else { panic!() };
    assert_eq!(facts.incidents.len(), 1);
    assert_eq!(facts.incidents[0].device_id, "SSBRM-01");
    assert_eq!(facts.incidents[0].event_ids.len(), 3);
    assert!(!facts.no_anomalies);
    citations_resolve(&snap, &b);
}

#[test]
fn path2_healthy_zone_and_resolved_device() {
    let f = facility();
    feed(&f, &inputs("S1", 42), |_| false);
    let snap = f.snapshot();
    assert_eq!(snap.incidents[0].status, IncidentStatus::Resolved);
    let b = ask(&snap, "Does SSBRM-01 have an error?");
    let Facts::FaultStatus(facts) = &b.facts else { panic!() };
    assert!(facts.incidents.is_empty());
    assert!(facts.no_anomalies);
    let b = ask(&snap, "Any anomaly with devices in the reading room?");
    let Facts::FaultStatus(facts) = &b.facts else { panic!() };
    assert!(facts.no_anomalies);
}

#[test]
fn path3_explains_s1_with_manual_entry() {
    let f = s1_open();
    let snap = f.snapshot();
    let b = ask(&snap, "What caused the fault on SSBRM-01?");
    let Facts::Cause(facts) = &b.facts else { panic!() };
    assert_eq!(facts.timeline.len(), 3);
    let top = &facts.causes[0];
    assert!(top.code_match);
    assert_eq!(top.section, Section::Troubleshooting);
    assert!(snap.knowledge.entry(&top.entry_id).unwrap().codes.contains(&"E102".to_string()));
    assert!(facts.prevention.len() <= 3 && !facts.prevention.is_empty());
    assert!(facts.notes.is_empty());
    assert_eq!(b.requests.len(), 2);
    assert!(b.rendered_text.contains("[cause_analysis]"));
    assert!(b.rendered_text.contains("[prevention_advice]"));
    citations_resolve(&snap, &b);
}

#[test]
fn path3_without_history_is_not_a_failure() {
    let f = s1_open();
    let b = ask(&f.snapshot(), "Why is the Silent Booth not functioning properly?");
    let Facts::Cause(facts) = &b.facts else { panic!() };
    assert!(facts.incident.is_none());
    assert!(facts.notes[0].contains("no known malfunction"));
}

#[test]
fn path3_code_without_manual_gets_a_note() {
    let f = facility();
    f.ingest_log_text("2025-01-17T09:32:10Z | SB-01 | ERROR | B999 | unlisted fault").unwrap();
    let b = ask(&f.snapshot(), "Why is the Silent Booth not functioning properly?");
    let Facts::Cause(facts) = &b.facts else { panic!() };
    assert_eq!(facts.timeline.len(), 1);
    assert!(facts.causes.is_empty());
    assert_eq!(facts.notes, vec!["no manual guidance for code B999".to_string()]);
}

#[test]
fn path4_composes_the_other_paths() {
    let f = facility();
    feed(&f, &inputs("S3", 42), |l| l.contains("| INFO | OK |"));
    let s1 = inputs("S1", 42);
    feed(&f, &s1, |l| l.contains("| INFO | OK |"));
    let snap = f.snapshot();
    let b = ask(&snap, "Give me a comprehensive report on all devices in the library.");
    let Facts::Report(report) = &b.facts else { panic!() };
    let zone_ids: Vec<&str> = report.zones.iter().map(|z| z.zone_id.as_str()).collect();
    assert_eq!(zone_ids, vec!["corridor", "reading_room", "lobby"]);

    let r = router();
    for z in &report.zones {
        assert_eq!(z.availability, availability_facts(&snap, &z.zone_id, None, None).unwrap());
        let p2 = block_on(r.execute(&QueryIntent::new(QueryPath::Path2FaultStatus).in_zone(&z.zone_id), &snap)).unwrap();
        let Facts::FaultStatus(p2) = p2.facts else { panic!() };
        let ours: Vec<_> = z.open_incidents.iter().map(|a| a.incident.clone()).collect();
        assert_eq!(ours, p2.incidents);
        for a in &z.open_incidents {
            assert_eq!(a.top_cause, cause_hits(&snap, &a.incident, 3).into_iter().next());
        }
    }
    let lobby = &report.zones[2];
    assert!(lobby.open_incidents.is_empty());
    assert_eq!(report.totals.open_incidents, 3);
    let kinds: Vec<DeviceKind> = report.prevention.iter().map(|p| p.device_kind).collect();
    assert_eq!(kinds, DeviceKind::ALL.to_vec());
    citations_resolve(&snap, &b);
    assert_eq!(
        report,
        &comprehensive_report(&snap, &QueryIntent::new(QueryPath::Path4Report)).unwrap()
    );
}

#[test]
fn path4_on_empty_facility_is_all_zero() {
    let f = facility();
    let report = comprehensive_report(&f.snapshot(), &QueryIntent::new(QueryPath::Path4Report)).unwrap();
    assert_eq!(report.totals.events, 0);
    assert_eq!(report.totals.open_incidents, 0);
    assert_eq!(report.totals.devices, 10);
    assert_eq!(report.totals.available, 10);
}

#[test]
fn stub_answers_are_byte_identical() {
    let a = s1_open();
    let b = s1_open();
    for q in fsm_core::simgen::generate_query_set() {
        let x = block_on(router().answer(&q.utterance, None, &a.snapshot())).unwrap();
        let y = block_on(router().answer(&q.utterance, None, &b.snapshot())).unwrap();
        assert_eq!(serde_json::to_string(&x).unwrap(), serde_json::to_string(&y).unwrap());
        if let QueryOutcome::Answer(bundle) = &x {
            citations_resolve(&a.snapshot(), bundle);
        }
    }
}

#[test]
fn greeting_and_empty_input() {
    let f = facility();
    let out = block_on(router().answer("hello", None, &f.snapshot())).unwrap();
    assert!(matches!(out, QueryOutcome::Clarification(_)));
    let json = serde_json::to_value(&out).unwrap();
    assert_eq!(json["outcome"], "clarification");
    assert!(matches!(
        block_on(router().answer("   ", None, &f.snapshot())),
        Err(RouterError::EmptyUtterance)
    ));
}
