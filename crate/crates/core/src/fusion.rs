//! Correlation of canonical events into per-device incidents.
//!
//! A single deterministic pass over time-ordered events groups WARN-or-worse
//! events by device. Log and table faults chain while they stay within
//! `merge_gap_secs` of the incident's last log/table evidence; vision
//! anomalies attach to an open incident when they land within
//! `correlation_window_secs` of any member. An `OK` log or table line closes
//! every open incident on its device.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{DeviceEvent, EventSource, EventStore, FaultCode, Severity};
use crate::registry::Registry;
use crate::time::{serde_ts, serde_ts_opt, Timestamp};

#[derive(Debug, Error)]
pub enum FusionError {
    #[error("events out of order at position {position}")]
    UnsortedInput { position: usize },
    #[error("invalid fusion config: {0}")]
    InvalidConfig(String),
    #[error("unknown zone {0}")]
    UnknownZone(String),
    #[error("unknown incident {0}")]
    UnknownIncident(String),
    #[error("incident snapshot write failed: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FusionConfig {
    pub correlation_window_secs: i64,
    pub merge_gap_secs: i64,
    pub resolve_on_ok: bool,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            correlation_window_secs: 120,
            merge_gap_secs: 300,
            resolve_on_ok: true,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<(), FusionError> {
        if self.correlation_window_secs <= 0 || self.merge_gap_secs <= 0 {
            return Err(FusionError::InvalidConfig(
                "correlation_window_secs and merge_gap_secs must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum IncidentStatus {
    Open,
    Resolved,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrelatedIncident {
    pub incident_id: String,
    pub device_id: String,
    #[serde(with = "serde_ts")]
    pub window_start: Timestamp,
    #[serde(with = "serde_ts")]
    pub window_end: Timestamp,
    pub event_ids: Vec<String>,
    pub primary_code: FaultCode,
    pub max_severity: Severity,
    pub status: IncidentStatus,
    pub sources_seen: BTreeSet<EventSource>,
    /// Timestamp of the OK event that closed the incident.
    #[serde(default, with = "serde_ts_opt", skip_serializing_if = "Option::is_none")]
    pub resolved_at: Option<Timestamp>,
}

struct Builder {
    incident: CorrelatedIncident,
    member_ts: Vec<Timestamp>,
    last_log_ts: Option<Timestamp>,
}

impl Builder {
    fn open(event: &DeviceEvent) -> Self {
        let is_log = event.source != EventSource::Vision;
        Self {
            incident: CorrelatedIncident {
                incident_id: format!("INC-{}", event.event_id),
                device_id: event.device_id.clone(),
                window_start: event.ts,
                window_end: event.ts,
                event_ids: vec![event.event_id.clone()],
                primary_code: event.code.clone(),
                max_severity: event.severity,
                status: IncidentStatus::Open,
                sources_seen: BTreeSet::from([event.source]),
                resolved_at: None,
            },
            member_ts: vec![event.ts],
            last_log_ts: is_log.then_some(event.ts),
        }
    }

    fn join(&mut self, event: &DeviceEvent) {
        let inc = &mut self.incident;
        inc.window_start = inc.window_start.min(event.ts);
        inc.window_end = inc.window_end.max(event.ts);
        inc.event_ids.push(event.event_id.clone());
        inc.sources_seen.insert(event.source);
        // Input is time ordered, so a strictly greater severity is the only
        // way the primary code changes; ties keep the earliest member.
        if event.severity > inc.max_severity {
            inc.max_severity = event.severity;
            inc.primary_code = event.code.clone();
        }
        self.member_ts.push(event.ts);
        if event.source != EventSource::Vision {
            self.last_log_ts = Some(event.ts);
        }
    }

    fn is_open(&self) -> bool {
        self.incident.status == IncidentStatus::Open
    }

    /// Reference point for the merge gap of a log/table fault.
    fn log_anchor(&self) -> Timestamp {
        self.last_log_ts.unwrap_or(self.incident.window_end)
    }
}

/// Groups time-ordered events into incidents, sorted by window start.
pub fn correlate(
    events: &[DeviceEvent],
    cfg: &FusionConfig,
) -> Result<Vec<CorrelatedIncident>, FusionError> {
    cfg.validate()?;
    if let Some(position) = events
        .windows(2)
        .position(|w| w[0].order_key() > w[1].order_key())
    {
        return Err(FusionError::UnsortedInput {
            position: position + 1,
        });
    }

    let mut builders: Vec<Builder> = Vec::new();
    // device -> indices into builders, oldest first
    let mut by_device: HashMap<&str, Vec<usize>> = HashMap::new();

    for event in events {
        let slots = by_device.entry(event.device_id.as_str()).or_default();
        if event.severity >= Severity::Warn {
            let target = match event.source {
                EventSource::Log | EventSource::Table => slots.last().copied().filter(|&i| {
                    let b = &builders[i];
                    b.is_open() && (event.ts - b.log_anchor()).num_seconds() <= cfg.merge_gap_secs
                }),
                EventSource::Vision => slots.iter().rev().copied().find(|&i| {
                    let b = &builders[i];
                    b.is_open()
                        && b.member_ts.iter().any(|t| {
                            (event.ts - *t).num_seconds().abs() <= cfg.correlation_window_secs
                        })
                }),
            };
            match target {
                Some(i) => builders[i].join(event),
                None => {
                    slots.push(builders.len());
                    builders.push(Builder::open(event));
                }
            }
        } else if cfg.resolve_on_ok && event.code.is_ok() && event.source != EventSource::Vision {
            for &i in slots.iter() {
                let b = &mut builders[i];
                if b.is_open() && event.ts >= b.incident.window_start {
                    b.incident.status = IncidentStatus::Resolved;
                    b.incident.resolved_at = Some(event.ts);
                }
            }
        }
    }

    let mut out: Vec<CorrelatedIncident> = builders.into_iter().map(|b| b.incident).collect();
    out.sort_by(|a, b| {
        (a.window_start, &a.incident_id).cmp(&(b.window_start, &b.incident_id))
    });
    Ok(out)
}

/// Open incidents started at or before `as_of`, optionally restricted to a
/// zone; most severe first, then by window start.
pub fn open_incidents(
    incidents: &[CorrelatedIncident],
    as_of: Timestamp,
    zone: Option<&str>,
    registry: &Registry,
) -> Result<Vec<CorrelatedIncident>, FusionError> {
    if let Some(zone) = zone {
        if registry.zone(zone).is_none() {
            return Err(FusionError::UnknownZone(zone.to_string()));
        }
    }
    let mut out: Vec<CorrelatedIncident> = incidents
        .iter()
        .filter(|i| i.status == IncidentStatus::Open && i.window_start <= as_of)
        .filter(|i| match zone {
            None => true,
            Some(z) => registry.device(&i.device_id).is_some_and(|d| d.zone_id == z),
        })
        .cloned()
        .collect();
    out.sort_by(|a, b| {
        b.max_severity
            .cmp(&a.max_severity)
            .then(a.window_start.cmp(&b.window_start))
            .then(a.incident_id.cmp(&b.incident_id))
    });
    Ok(out)
}

/// Member events of an incident in time order.
pub fn incident_timeline(
    incident_id: &str,
    incidents: &[CorrelatedIncident],
    store: &EventStore,
) -> Result<Vec<DeviceEvent>, FusionError> {
    let incident = incidents
        .iter()
        .find(|i| i.incident_id == incident_id)
        .ok_or_else(|| FusionError::UnknownIncident(incident_id.to_string()))?;
    let mut events: Vec<DeviceEvent> = incident
        .event_ids
        .iter()
        .filter_map(|id| store.get(id).cloned())
        .collect();
    events.sort_by(|a, b| a.order_key().cmp(&b.order_key()));
    Ok(events)
}

/// JSONL rendering of an incident list, one incident per line.
pub fn snapshot_jsonl(incidents: &[CorrelatedIncident]) -> String {
    let mut out = String::new();
    for incident in incidents {
        out.push_str(&serde_json::to_string(incident).expect("incident serializes"));
        out.push('\n');
    }
    out
}

/// Replaces `incidents/current.jsonl` under `data_dir` atomically.
pub fn write_snapshot(data_dir: &Path, incidents: &[CorrelatedIncident]) -> Result<(), FusionError> {
    let dir = data_dir.join("incidents");
    fs::create_dir_all(&dir)?;
    let tmp = dir.join("current.jsonl.tmp");
    {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(snapshot_jsonl(incidents).as_bytes())?;
        file.sync_data()?;
    }
    fs::rename(&tmp, dir.join("current.jsonl"))?;
    Ok(())
}
