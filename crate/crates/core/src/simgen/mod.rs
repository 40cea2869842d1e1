//! Library-scenario fixtures: fleet manifest, product manuals, scripted
//! fault scenarios, log corpora and a labeled operator query set.
//!
//! Scenario expectations are written by hand next to the steps, so they act
//! as an oracle for fusion rather than a recording of it.

mod corpus;
mod fleet;
mod manuals;
mod queries;
mod scenario;

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

pub use corpus::generate_log_corpus;
pub use fleet::{fixture_fleet, fleet_json};
pub use manuals::{fixture_manuals, manual_id_for};
pub use queries::{generate_query_set, query_set_jsonl, LabeledQuery};
pub use scenario::{
    load_scenario_dir, run_scenario, scenario, Emission, ExpectedIncident, ExpectedOutcome,
    ScenarioInputs, ScenarioScript, ScenarioStep, SCENARIO_BASE, SCENARIO_IDS,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid scenario script: {0}")]
    InvalidScript(String),
    #[error("unknown scenario {0}")]
    UnknownScenario(String),
}

/// Writes `registry.json` and `manuals/<id>.txt` under `out_dir`.
pub fn write_fleet(out_dir: &Path) -> Result<Vec<PathBuf>, SimError> {
    fs::create_dir_all(out_dir.join("manuals"))?;
    let mut written = Vec::new();
    let registry = out_dir.join("registry.json");
    fs::write(&registry, fleet_json())?;
    written.push(registry);
    for (id, _, text) in fixture_manuals() {
        let path = out_dir.join(format!("manuals/{id}.txt"));
        fs::write(&path, text)?;
        written.push(path);
    }
    Ok(written)
}
