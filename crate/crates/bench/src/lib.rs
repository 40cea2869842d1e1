//! Inputs shared by the benchmarks.

use fsm_core::ingest::{parse_log_line, EventIdGenerator};
use fsm_core::simgen::{fixture_fleet, fixture_manuals, generate_log_corpus, SCENARIO_BASE};
use fsm_core::time::parse_iso;
use fsm_core::{DeviceEvent, KnowledgeBase, Registry};

pub fn registry() -> Registry {
    Registry::from_manifest(fixture_fleet()).expect("fixture fleet is valid")
}

pub fn corpus(n: usize) -> Vec<String> {
    generate_log_corpus(42, n, parse_iso(SCENARIO_BASE).expect("base parses"))
}

pub fn events(n: usize) -> Vec<DeviceEvent> {
    let reg = registry();
    let ids = EventIdGenerator::new();
    corpus(n).iter().map(|l| parse_log_line(l, &reg, &ids).expect("corpus line parses")).collect()
}

pub fn knowledge() -> KnowledgeBase {
    let mut kb = KnowledgeBase::in_memory();
    for (id, kind, text) in fixture_manuals() {
        kb.add_manual(&id, kind, &text).expect("fixture manual parses");
    }
    kb
}
