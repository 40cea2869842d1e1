use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use super::{DeviceEvent, EventIdGenerator, IngestError};
use crate::registry::Registry;

/// Append-only event store partitioned into `events/YYYY-MM-DD.jsonl`.
///
/// Reads are served from memory in event-id order. A store without a
/// directory keeps everything in memory.
#[derive(Debug, Clone, Default)]
pub struct EventStore {
    dir: Option<PathBuf>,
    events: BTreeMap<String, DeviceEvent>,
}

impl EventStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (or creates) the store rooted at `data_dir/events`.
    pub fn open(data_dir: &Path) -> Result<Self, IngestError> {
        let dir = data_dir.join("events");
        fs::create_dir_all(&dir)?;
        let mut files: Vec<PathBuf> = fs::read_dir(&dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        files.sort();
        let mut events = BTreeMap::new();
        for path in files {
            let reader = BufReader::new(fs::File::open(&path)?);
            for (n, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let event: DeviceEvent = serde_json::from_str(&line).map_err(|e| {
                    IngestError::StorageFailure(format!("{}:{}: {e}", path.display(), n + 1))
                })?;
                events.insert(event.event_id.clone(), event);
            }
        }
        Ok(Self {
            dir: Some(dir),
            events,
        })
    }

    /// Id generator that continues after the newest stored event.
    pub fn id_generator(&self) -> EventIdGenerator {
        self.events
            .keys()
            .next_back()
            .and_then(|last| EventIdGenerator::resume_after(last))
            .unwrap_or_default()
    }

    /// Appends events not already stored; returns how many were new.
    ///
    /// Every event must reference a registered device. Nothing is written
    /// when validation fails.
    pub fn append(&mut self, events: &[DeviceEvent], registry: &Registry) -> Result<usize, IngestError> {
        for event in events {
            if registry.device(&event.device_id).is_none() {
                return Err(IngestError::UnknownDevice(event.device_id.clone()));
            }
            if event.event_id.is_empty() {
                return Err(IngestError::InvalidEvent("empty event_id".into()));
            }
        }
        let mut fresh: BTreeMap<&str, &DeviceEvent> = BTreeMap::new();
        for event in events {
            if !self.events.contains_key(&event.event_id) {
                fresh.insert(&event.event_id, event);
            }
        }
        if fresh.is_empty() {
            return Ok(0);
        }

        if let Some(dir) = &self.dir {
            let mut by_day: BTreeMap<String, String> = BTreeMap::new();
            for event in fresh.values() {
                let day = event.ts.format("%Y-%m-%d").to_string();
                let buf = by_day.entry(day).or_default();
                buf.push_str(
                    &serde_json::to_string(event)
                        .map_err(|e| IngestError::StorageFailure(e.to_string()))?,
                );
                buf.push('\n');
            }
            for (day, lines) in by_day {
                let path = dir.join(format!("{day}.jsonl"));
                let mut file = OpenOptions::new().create(true).append(true).open(&path)?;
                file.write_all(lines.as_bytes())?;
                file.sync_data()?;
            }
        }

        let count = fresh.len();
        let owned: Vec<DeviceEvent> = fresh.into_values().cloned().collect();
        for event in owned {
            self.events.insert(event.event_id.clone(), event);
        }
        Ok(count)
    }

    pub fn get(&self, event_id: &str) -> Option<&DeviceEvent> {
        self.events.get(event_id)
    }

    /// All events in event-id order.
    pub fn events(&self) -> impl Iterator<Item = &DeviceEvent> {
        self.events.values()
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Events sorted by (ts, event_id), the order fusion consumes.
    pub fn time_ordered(&self) -> Vec<DeviceEvent> {
        let mut out: Vec<DeviceEvent> = self.events.values().cloned().collect();
        out.sort_by(|a, b| a.order_key().cmp(&b.order_key()));
        out
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::parse_log_line;
    use crate::simgen::fixture_fleet;

    fn three(reg: &Registry, ids: &EventIdGenerator) -> Vec<DeviceEvent> {
        [
            "2025-01-17T09:32:10Z | SSBRM-01 | WARN | E102 | Card reader slow",
            "2025-01-17T09:33:10Z | SSBRM-01 | ERROR | E102 | Card reader timeout",
            "2025-01-18T00:00:05Z | SSBRM-02 | INFO | OK | Self-check passed",
        ]
        .iter()
        .map(|l| parse_log_line(l, reg, ids).unwrap())
        .collect()
    }

    #[test]
    fn append_is_idempotent_and_durable() {
        let tmp = tempfile::tempdir().unwrap();
        let reg = Registry::from_manifest(fixture_fleet()).unwrap();
        let ids = EventIdGenerator::new();
        let events = three(&reg, &ids);

        let mut store = EventStore::open(tmp.path()).unwrap();
        assert_eq!(store.append(&events, &reg).unwrap(), 3);
        assert_eq!(store.append(&events, &reg).unwrap(), 0);
        assert_eq!(store.append(&[], &reg).unwrap(), 0);

        assert!(tmp.path().join("events/2025-01-17.jsonl").exists());
        assert!(tmp.path().join("events/2025-01-18.jsonl").exists());

        let reopened = EventStore::open(tmp.path()).unwrap();
        assert_eq!(reopened.len(), 3);
        let stored: Vec<_> = reopened.events().cloned().collect();
        assert_eq!(stored, events);

        let next = reopened.id_generator().next_for(&events[0].ts);
        assert!(next.as_str() > events[2].event_id.as_str());
    }

    #[test]
    fn unknown_devices_are_refused() {
        let reg = Registry::from_manifest(fixture_fleet()).unwrap();
        let ids = EventIdGenerator::new();
        let mut events = three(&reg, &ids);
        events[1].device_id = "SSBRM-99".into();
        let mut store = EventStore::in_memory();
        assert!(matches!(store.append(&events, &reg), Err(IngestError::UnknownDevice(_))));
        assert!(store.is_empty());
    }

    #[test]
    fn corrupt_file_is_a_storage_failure() {
        let tmp = tempfile::tempdir().unwrap();
        fs::create_dir_all(tmp.path().join("events")).unwrap();
        fs::write(tmp.path().join("events/2025-01-17.jsonl"), "{not json\n").unwrap();
        assert!(matches!(
            EventStore::open(tmp.path()),
            Err(IngestError::StorageFailure(_))
        ));
    }
}
