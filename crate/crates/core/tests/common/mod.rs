#![allow(dead_code)]

use fsm_core::fusion::FusionConfig;
use fsm_core::simgen::{fixture_fleet, fixture_manuals, load_scenario_dir, run_scenario, scenario, ScenarioInputs};
use fsm_core::{Facility, Registry};

pub fn registry() -> Registry {
    Registry::from_manifest(fixture_fleet()).unwrap()
}

pub fn facility() -> Facility {
    let f = Facility::in_memory(registry(), FusionConfig::default()).unwrap();
    for (id, kind, text) in fixture_manuals() {
        f.add_manual(&id, kind, &text).unwrap();
    }
    f
}

pub fn inputs(id: &str, seed: u64) -> ScenarioInputs {
    let dir = tempfile::tempdir().unwrap();
    run_scenario(&scenario(id, seed).unwrap(), dir.path()).unwrap();
    load_scenario_dir(dir.path()).unwrap()
}

/// Feeds a scenario, dropping log lines for which `skip` is true.
pub fn feed(f: &Facility, inputs: &ScenarioInputs, skip: impl Fn(&str) -> bool) {
    let lines: Vec<&str> = inputs.log_lines.iter().map(String::as_str).filter(|l| !skip(l)).collect();
    let r = f.ingest_log_text(&lines.join("\n")).unwrap();
    assert!(r.rejected.is_empty(), "{:?}", r.rejected);
    let r = f.ingest_rows(&inputs.table_rows).unwrap();
    assert!(r.rejected.is_empty(), "{:?}", r.rejected);
    let r = f.ingest_observations(&inputs.sidecars).unwrap();
    assert!(r.rejected.is_empty(), "{:?}", r.rejected);
}

/// S1 before the machine reports OK again: its incident is still open.
pub fn s1_open() -> Facility {
    let f = facility();
    feed(&f, &inputs("S1", 42), |l| l.contains("SSBRM-01 | INFO | OK"));
    f
}

pub fn block_on<F: std::future::Future>(fut: F) -> F::Output {
    tokio::runtime::Builder::new_current_thread()
        .enable_all()
        .build()
        .unwrap()
        .block_on(fut)
}
