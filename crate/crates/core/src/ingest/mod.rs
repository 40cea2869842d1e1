//! Normalization of heterogeneous telemetry into canonical [`DeviceEvent`]s.
//!
//! Three source formats are supported: pipe-delimited device log lines,
//! column-mapped status table rows, and vision observations (captions with
//! an overlay timestamp). Parsed events are appended to the day-partitioned
//! [`EventStore`].

mod ids;
mod parse;
mod store;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::time::{serde_ts, Timestamp};

pub use ids::EventIdGenerator;
pub use parse::{
    ingest_vision, parse_log_line, parse_overlay_timestamp, parse_status_row,
    parse_status_table, render_log_line, TableRow,
};
pub use store::EventStore;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed line at column {column}: {reason}")]
    MalformedLine { column: usize, reason: String },
    #[error("malformed row {index}: {reason}")]
    MalformedRow { index: usize, reason: String },
    #[error("unknown device {0}")]
    UnknownDevice(String),
    #[error("unparsable timestamp {0:?}")]
    UnparsableTimestamp(String),
    #[error("camera {camera_id} observes several devices and the observation names no subject")]
    AmbiguousSubject { camera_id: String },
    #[error("{0} is not a surveillance camera")]
    NotACamera(String),
    #[error("invalid event: {0}")]
    InvalidEvent(String),
    #[error("event store failure: {0}")]
    StorageFailure(String),
}

impl From<std::io::Error> for IngestError {
    fn from(e: std::io::Error) -> Self {
        IngestError::StorageFailure(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Severity {
    Info,
    Warn,
    Error,
    Critical,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Info => "INFO",
            Severity::Warn => "WARN",
            Severity::Error => "ERROR",
            Severity::Critical => "CRITICAL",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        match text.to_ascii_uppercase().as_str() {
            "INFO" => Some(Severity::Info),
            "WARN" | "WARNING" => Some(Severity::Warn),
            "ERROR" => Some(Severity::Error),
            "CRITICAL" => Some(Severity::Critical),
            _ => None,
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EventSource {
    Log,
    Table,
    Vision,
}

impl EventSource {
    pub fn as_str(self) -> &'static str {
        match self {
            EventSource::Log => "LOG",
            EventSource::Table => "TABLE",
            EventSource::Vision => "VISION",
        }
    }
}

fn code_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^[A-Z][0-9]{3}$").unwrap())
}

/// A fault code (`E102`) or the healthy marker `OK`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct FaultCode(String);

impl FaultCode {
    pub fn ok() -> Self {
        FaultCode("OK".to_string())
    }

    pub fn parse(text: &str) -> Option<Self> {
        (text == "OK" || code_pattern().is_match(text)).then(|| FaultCode(text.to_string()))
    }

    pub fn is_ok(&self) -> bool {
        self.0 == "OK"
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for FaultCode {
    type Error = String;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        FaultCode::parse(&value).ok_or_else(|| format!("invalid fault code {value:?}"))
    }
}

impl From<FaultCode> for String {
    fn from(c: FaultCode) -> String {
        c.0
    }
}

impl fmt::Display for FaultCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// True for strings shaped like a fault code (not `OK`).
pub fn is_fault_code(text: &str) -> bool {
    code_pattern().is_match(text)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceEvent {
    pub event_id: String,
    pub device_id: String,
    #[serde(with = "serde_ts")]
    pub ts: Timestamp,
    pub source: EventSource,
    pub severity: Severity,
    pub code: FaultCode,
    pub message: String,
    #[serde(default)]
    pub attributes: BTreeMap<String, String>,
}

impl DeviceEvent {
    /// Ordering key used by fusion: timestamp, then event id.
    pub fn order_key(&self) -> (Timestamp, &str) {
        (self.ts, &self.event_id)
    }
}

/// A caption read off a camera frame or desktop screenshot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisionObservation {
    pub camera_id: String,
    #[serde(alias = "ts")]
    pub captured_at_text: String,
    pub caption: String,
    #[serde(default)]
    pub subject_device_id: Option<String>,
    #[serde(default)]
    pub anomaly: bool,
}
