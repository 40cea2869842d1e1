//! The ingest, fuse and snapshot pipeline shared by the service and tools.
//!
//! Writers serialize on one lock: parse, append, re-fuse, persist the
//! incident snapshot, then publish a fresh [`FacilitySnapshot`]. Readers take
//! the published snapshot and never observe a half-applied batch.

use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fusion::{correlate, write_snapshot, CorrelatedIncident, FusionConfig, FusionError};
use crate::ingest::{
    ingest_vision, parse_log_line, parse_status_row, DeviceEvent, EventIdGenerator, EventStore,
    IngestError, TableRow, VisionObservation,
};
use crate::knowledge::{KnowledgeBase, KnowledgeError, KnowledgeIndex};
use crate::registry::{DeviceKind, Registry, RegistryError};
use crate::time::Timestamp;

#[derive(Debug, Error)]
pub enum FacilityError {
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Knowledge(#[from] KnowledgeError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    /// 1-based line (log text) or record (batches) number.
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub accepted: usize,
    pub rejected: Vec<Reject>,
}

/// Immutable view used by queries.
#[derive(Debug, Clone)]
pub struct FacilitySnapshot {
    pub registry: Arc<Registry>,
    pub store: Arc<EventStore>,
    pub incidents: Arc<Vec<CorrelatedIncident>>,
    pub knowledge: Arc<KnowledgeIndex>,
    pub fusion: FusionConfig,
}

impl FacilitySnapshot {
    /// Timestamp of the newest stored event.
    pub fn as_of(&self) -> Option<Timestamp> {
        self.store.events().map(|e| e.ts).max()
    }

    pub fn incident(&self, incident_id: &str) -> Option<&CorrelatedIncident> {
        self.incidents.iter().find(|i| i.incident_id == incident_id)
    }
}

struct State {
    store: Arc<EventStore>,
    knowledge: KnowledgeBase,
    ids: EventIdGenerator,
}

pub struct Facility {
    data_dir: Option<PathBuf>,
    registry: Arc<Registry>,
    fusion: FusionConfig,
    state: Mutex<State>,
    published: RwLock<Arc<FacilitySnapshot>>,
}

impl Facility {
    pub fn in_memory(registry: Registry, fusion: FusionConfig) -> Result<Self, FacilityError> {
        Self::build(None, registry, EventStore::in_memory(), KnowledgeBase::in_memory(), fusion)
    }

    /// Loads events and manuals under `data_dir` and re-fuses them.
    pub fn open(data_dir: &Path, registry: Registry, fusion: FusionConfig) -> Result<Self, FacilityError> {
        let store = EventStore::open(data_dir)?;
        let knowledge = KnowledgeBase::open(data_dir, &registry)?;
        Self::build(Some(data_dir.to_path_buf()), registry, store, knowledge, fusion)
    }

    fn build(
        data_dir: Option<PathBuf>,
        registry: Registry,
        store: EventStore,
        knowledge: KnowledgeBase,
        fusion: FusionConfig,
    ) -> Result<Self, FacilityError> {
        fusion.validate()?;
        let registry = Arc::new(registry);
        let state = State { ids: store.id_generator(), store: Arc::new(store), knowledge };
        let snapshot = Self::fuse(data_dir.as_deref(), &registry, &fusion, &state)?;
        Ok(Self {
            data_dir,
            registry,
            fusion,
            state: Mutex::new(state),
            published: RwLock::new(Arc::new(snapshot)),
        })
    }

    fn fuse(
        data_dir: Option<&Path>,
        registry: &Arc<Registry>,
        fusion: &FusionConfig,
        state: &State,
    ) -> Result<FacilitySnapshot, FacilityError> {
        let incidents = correlate(&state.store.time_ordered(), fusion)?;
        if let Some(dir) = data_dir {
            write_snapshot(dir, &incidents)?;
        }
        Ok(FacilitySnapshot {
            registry: Arc::clone(registry),
            store: Arc::clone(&state.store),
            incidents: Arc::new(incidents),
            knowledge: state.knowledge.index(),
            fusion: fusion.clone(),
        })
    }

    pub fn registry(&self) -> &Registry {
        &self.registry
    }

    pub fn data_dir(&self) -> Option<&Path> {
        self.data_dir.as_deref()
    }

    pub fn snapshot(&self) -> Arc<FacilitySnapshot> {
        Arc::clone(&self.published.read().expect("snapshot lock poisoned"))
    }

    fn commit(&self, state: &mut State, events: Vec<DeviceEvent>, report: &mut IngestReport) -> Result<(), FacilityError> {
        if events.is_empty() {
            return Ok(());
        }
        Arc::make_mut(&mut state.store).append(&events, &self.registry)?;
        report.accepted = events.len();
        self.republish(state)
    }

    fn republish(&self, state: &State) -> Result<(), FacilityError> {
        let snapshot = Self::fuse(self.data_dir.as_deref(), &self.registry, &self.fusion, state)?;
        *self.published.write().expect("snapshot lock poisoned") = Arc::new(snapshot);
        Ok(())
    }

    fn batch<T>(
        &self,
        items: impl IntoIterator<Item = (usize, T)>,
        parse: impl Fn(T, &Registry, &EventIdGenerator) -> Result<DeviceEvent, IngestError>,
    ) -> Result<IngestReport, FacilityError> {
        let mut state = self.state.lock().expect("facility lock poisoned");
        let mut report = IngestReport::default();
        let mut events = Vec::new();
        for (line, item) in items {
            match parse(item, &self.registry, &state.ids) {
                Ok(e) => events.push(e),
                Err(e) => report.rejected.push(Reject { line, reason: e.to_string() }),
            }
        }
        self.commit(&mut state, events, &mut report)?;
        Ok(report)
    }

    /// Pipe-delimited log text; blank lines are skipped but still counted.
    pub fn ingest_log_text(&self, text: &str) -> Result<IngestReport, FacilityError> {
        let lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| (i + 1, l));
        self.batch(lines, |line, reg, ids| parse_log_line(line, reg, ids))
    }

    pub fn ingest_rows(&self, rows: &[TableRow]) -> Result<IngestReport, FacilityError> {
        let rows = rows.iter().enumerate().map(|(i, r)| (i + 1, (i, r)));
        self.batch(rows, |(index, row), reg, ids| parse_status_row(index, row, reg, ids))
    }

    pub fn ingest_observations(&self, observations: &[VisionObservation]) -> Result<IngestReport, FacilityError> {
        let obs = observations.iter().enumerate().map(|(i, o)| (i + 1, o));
        self.batch(obs, |o, reg, ids| ingest_vision(o, reg, ids))
    }

    /// Parses, stores and indexes a manual; returns the entry count.
    pub fn add_manual(&self, manual_id: &str, kind: DeviceKind, text: &str) -> Result<usize, FacilityError> {
        let mut state = self.state.lock().expect("facility lock poisoned");
        let count = state.knowledge.add_manual(manual_id, kind, text)?;
        self.republish(&state)?;
        Ok(count)
    }
}

impl std::fmt::Debug for Facility {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Facility")
            .field("data_dir", &self.data_dir)
            .field("fusion", &self.fusion)
            .finish_non_exhaustive()
    }
}
