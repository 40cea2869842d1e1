use std::collections::BTreeMap;

use chrono::NaiveDateTime;

use super::{
    DeviceEvent, EventIdGenerator, EventSource, FaultCode, IngestError, Severity,
    VisionObservation,
};
use crate::registry::{is_valid_device_id, DeviceKind, Registry};
use crate::taxonomy;
use crate::time::{format_ts, parse_iso, Timestamp};

/// Column-mapped status table record.
pub type TableRow = BTreeMap<String, String>;

const TABLE_RESERVED: [&str; 5] = ["device_id", "ts", "status", "severity", "message"];

fn malformed(column: usize, reason: impl Into<String>) -> IngestError {
    IngestError::MalformedLine {
        column,
        reason: reason.into(),
    }
}

/// Parses `<ISO-8601 UTC> | <device_id> | <severity> | <code> | <message>`.
///
/// Columns are 1-based; a wrong field count is reported against column 1.
pub fn parse_log_line(
    line: &str,
    registry: &Registry,
    ids: &EventIdGenerator,
) -> Result<DeviceEvent, IngestError> {
    let line = line.strip_suffix('\n').unwrap_or(line);
    let line = line.strip_suffix('\r').unwrap_or(line);
    if line.contains('\n') {
        return Err(malformed(1, "embedded newline"));
    }
    let fields: Vec<&str> = line.split('|').map(str::trim).collect();
    if fields.len() != 5 {
        return Err(malformed(1, format!("expected 5 fields, found {}", fields.len())));
    }
    let ts = parse_iso(fields[0]).ok_or_else(|| malformed(1, "bad timestamp"))?;
    let device_id = fields[1];
    if !is_valid_device_id(device_id) {
        return Err(malformed(2, "bad device id"));
    }
    let severity = Severity::parse(fields[2]).ok_or_else(|| malformed(3, "bad severity"))?;
    let code = FaultCode::parse(fields[3]).ok_or_else(|| malformed(4, "bad code"))?;
    if fields[4].is_empty() {
        return Err(malformed(5, "empty message"));
    }
    registry
        .device(device_id)
        .ok_or_else(|| IngestError::UnknownDevice(device_id.to_string()))?;

    Ok(DeviceEvent {
        event_id: ids.next_for(&ts),
        device_id: device_id.to_string(),
        ts,
        source: EventSource::Log,
        severity,
        code,
        message: fields[4].to_string(),
        attributes: BTreeMap::new(),
    })
}

/// Canonical log-line form of an event.
pub fn render_log_line(event: &DeviceEvent) -> String {
    format!(
        "{} | {} | {} | {} | {}",
        format_ts(&event.ts),
        event.device_id,
        event.severity,
        event.code,
        event.message
    )
}

/// Accepts ISO-8601 or the camera overlay form `YYYY-MM-DD HH:MM:SS` (UTC).
pub fn parse_overlay_timestamp(text: &str) -> Result<Timestamp, IngestError> {
    let trimmed = text.trim();
    if let Some(ts) = parse_iso(trimmed) {
        return Ok(ts);
    }
    NaiveDateTime::parse_from_str(trimmed, "%Y-%m-%d %H:%M:%S")
        .map(|n| n.and_utc())
        .map_err(|_| IngestError::UnparsableTimestamp(text.to_string()))
}

/// Parses one status-table record. `index` is the row position used in errors.
pub fn parse_status_row(
    index: usize,
    row: &TableRow,
    registry: &Registry,
    ids: &EventIdGenerator,
) -> Result<DeviceEvent, IngestError> {
    let bad = |reason: &str| IngestError::MalformedRow {
        index,
        reason: reason.to_string(),
    };
    let field = |name: &str| row.get(name).map(|v| v.trim()).filter(|v| !v.is_empty());

    let device_id = field("device_id").ok_or_else(|| bad("missing device_id"))?;
    let ts_text = field("ts").ok_or_else(|| bad("missing ts"))?;
    let status = field("status").ok_or_else(|| bad("missing status"))?;
    let ts = parse_overlay_timestamp(ts_text).map_err(|_| bad("bad ts"))?;

    let (code, mut severity, mut message) = if status.eq_ignore_ascii_case("OK") {
        (FaultCode::ok(), Severity::Info, "status OK".to_string())
    } else {
        let spec = taxonomy::lookup(status).ok_or_else(|| bad("unknown status"))?;
        (
            FaultCode::parse(spec.code).expect("taxonomy codes are well formed"),
            spec.default_severity,
            spec.description.to_string(),
        )
    };
    if let Some(text) = field("severity") {
        severity = Severity::parse(text).ok_or_else(|| bad("bad severity"))?;
    }
    if let Some(text) = field("message") {
        message = text.to_string();
    }
    registry
        .device(device_id)
        .ok_or_else(|| IngestError::UnknownDevice(device_id.to_string()))?;

    let attributes = row
        .iter()
        .filter(|(k, _)| !TABLE_RESERVED.contains(&k.as_str()))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();

    Ok(DeviceEvent {
        event_id: ids.next_for(&ts),
        device_id: device_id.to_string(),
        ts,
        source: EventSource::Table,
        severity,
        code,
        message,
        attributes,
    })
}

/// One event per row; fails on the first bad row.
pub fn parse_status_table(
    rows: &[TableRow],
    registry: &Registry,
    ids: &EventIdGenerator,
) -> Result<Vec<DeviceEvent>, IngestError> {
    // Validate everything before issuing ids so a rejected table consumes none.
    let scratch = EventIdGenerator::new();
    for (index, row) in rows.iter().enumerate() {
        parse_status_row(index, row, registry, &scratch)?;
    }
    rows.iter()
        .enumerate()
        .map(|(index, row)| parse_status_row(index, row, registry, ids))
        .collect()
}

/// Turns a captioned frame into an event on the observed device.
pub fn ingest_vision(
    obs: &VisionObservation,
    registry: &Registry,
    ids: &EventIdGenerator,
) -> Result<DeviceEvent, IngestError> {
    let camera = registry
        .device(&obs.camera_id)
        .ok_or_else(|| IngestError::UnknownDevice(obs.camera_id.clone()))?;
    if camera.kind != DeviceKind::SurveillanceCamera {
        return Err(IngestError::NotACamera(obs.camera_id.clone()));
    }
    let ts = parse_overlay_timestamp(&obs.captured_at_text)?;
    if obs.anomaly && obs.caption.trim().is_empty() {
        return Err(IngestError::InvalidEvent(
            "anomalous observation needs a caption".into(),
        ));
    }

    let device_id = match (&obs.subject_device_id, camera.observes.as_slice()) {
        (Some(subject), _) => subject.clone(),
        (None, [only]) => only.clone(),
        (None, []) => camera.device_id.clone(),
        (None, _) if obs.anomaly => {
            return Err(IngestError::AmbiguousSubject {
                camera_id: obs.camera_id.clone(),
            })
        }
        // A calm frame covering several devices is recorded against the camera.
        (None, _) => camera.device_id.clone(),
    };
    registry
        .device(&device_id)
        .ok_or_else(|| IngestError::UnknownDevice(device_id.clone()))?;

    let (severity, code) = if obs.anomaly {
        (
            Severity::Error,
            FaultCode::parse(taxonomy::VISUAL_ANOMALY).expect("well formed"),
        )
    } else {
        (Severity::Info, FaultCode::ok())
    };
    let message = if obs.caption.trim().is_empty() {
        "no anomaly observed".to_string()
    } else {
        obs.caption.trim().to_string()
    };
    let mut attributes = BTreeMap::new();
    attributes.insert("camera_id".to_string(), obs.camera_id.clone());
    attributes.insert("caption".to_string(), obs.caption.clone());

    Ok(DeviceEvent {
        event_id: ids.next_for(&ts),
        device_id,
        ts,
        source: EventSource::Vision,
        severity,
        code,
        message,
        attributes,
    })
}
