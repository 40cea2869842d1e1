//! Facility topology: zones, devices and availability lookups.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fusion::{CorrelatedIncident, IncidentStatus};
use crate::ingest::Severity;

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("duplicate id {0}")]
    DuplicateId(String),
    #[error("unknown zone {0}")]
    UnknownZone(String),
    #[error("device {0} is not a camera but lists observed devices")]
    ObservesOnNonCamera(String),
    #[error("invalid zone id {0:?}: must be non-empty lowercase")]
    InvalidZoneId(String),
    #[error("invalid device id {0:?}: expected PREFIX-NN")]
    InvalidDeviceId(String),
    #[error("unknown device {0}")]
    UnknownDevice(String),
    #[error("cannot read registry manifest {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid registry manifest {path}: {source}")]
    Manifest {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Zone {
    pub id: String,
    pub display_name: String,
}

impl Zone {
    pub fn new(id: impl Into<String>, display_name: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            display_name: display_name.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DeviceKind {
    SelfServiceMachine,
    SilentBooth,
    SmartBookshelf,
    SurveillanceCamera,
}

impl DeviceKind {
    pub const ALL: [DeviceKind; 4] = [
        DeviceKind::SelfServiceMachine,
        DeviceKind::SilentBooth,
        DeviceKind::SmartBookshelf,
        DeviceKind::SurveillanceCamera,
    ];

    /// Prefix used for device ids of this kind (`SSBRM-01`, `CAM-02`, ...).
    pub fn id_prefix(self) -> &'static str {
        match self {
            DeviceKind::SelfServiceMachine => "SSBRM",
            DeviceKind::SilentBooth => "SB",
            DeviceKind::SmartBookshelf => "SHELF",
            DeviceKind::SurveillanceCamera => "CAM",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            DeviceKind::SelfServiceMachine => "Self-service Borrowing and Returning Machine",
            DeviceKind::SilentBooth => "Silent Booth",
            DeviceKind::SmartBookshelf => "Smart Bookshelf",
            DeviceKind::SurveillanceCamera => "Surveillance Camera",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DeviceKind::SelfServiceMachine => "SELF_SERVICE_MACHINE",
            DeviceKind::SilentBooth => "SILENT_BOOTH",
            DeviceKind::SmartBookshelf => "SMART_BOOKSHELF",
            DeviceKind::SurveillanceCamera => "SURVEILLANCE_CAMERA",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(text.trim()))
    }
}

impl fmt::Display for DeviceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceDescriptor {
    pub device_id: String,
    pub kind: DeviceKind,
    pub zone_id: String,
    pub label: String,
    #[serde(default)]
    pub manual_id: Option<String>,
    #[serde(default)]
    pub observes: Vec<String>,
}

impl DeviceDescriptor {
    pub fn new(
        device_id: impl Into<String>,
        kind: DeviceKind,
        zone_id: impl Into<String>,
        label: impl Into<String>,
    ) -> Self {
        Self {
            device_id: device_id.into(),
            kind,
            zone_id: zone_id.into(),
            label: label.into(),
            manual_id: None,
            observes: Vec::new(),
        }
    }

    pub fn with_manual(mut self, manual_id: impl Into<String>) -> Self {
        self.manual_id = Some(manual_id.into());
        self
    }

    pub fn observing<I, S>(mut self, devices: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.observes = devices.into_iter().map(Into::into).collect();
        self
    }

    pub fn is_camera(&self) -> bool {
        self.kind == DeviceKind::SurveillanceCamera
    }
}

/// On-disk form of `registry.json`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RegistryManifest {
    pub zones: Vec<Zone>,
    pub devices: Vec<DeviceDescriptor>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Availability {
    Available,
    Unavailable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviceRole {
    Service,
    Monitoring,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceAvailability {
    pub device_id: String,
    pub kind: DeviceKind,
    pub label: String,
    pub status: Availability,
    pub role: DeviceRole,
    /// Open incidents that make the device unavailable.
    pub incident_ids: Vec<String>,
}

fn device_id_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^[A-Z]+-[0-9]{2}$").unwrap())
}

pub fn is_valid_device_id(id: &str) -> bool {
    device_id_pattern().is_match(id)
}

#[derive(Debug, Clone, Default)]
pub struct Registry {
    zones: Vec<Zone>,
    devices: BTreeMap<String, DeviceDescriptor>,
}

impl Registry {
    pub fn new(zones: Vec<Zone>) -> Result<Self, RegistryError> {
        let mut seen = BTreeSet::new();
        for zone in &zones {
            if zone.id.is_empty() || zone.id != zone.id.to_lowercase() {
                return Err(RegistryError::InvalidZoneId(zone.id.clone()));
            }
            if !seen.insert(zone.id.clone()) {
                return Err(RegistryError::DuplicateId(zone.id.clone()));
            }
        }
        Ok(Self {
            zones,
            devices: BTreeMap::new(),
        })
    }

    pub fn from_manifest(manifest: RegistryManifest) -> Result<Self, RegistryError> {
        let mut registry = Self::new(manifest.zones)?;
        for device in manifest.devices {
            registry.register_device(device)?;
        }
        Ok(registry)
    }

    pub fn load(path: &Path) -> Result<Self, RegistryError> {
        let text = std::fs::read_to_string(path).map_err(|source| RegistryError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let manifest: RegistryManifest =
            serde_json::from_str(&text).map_err(|source| RegistryError::Manifest {
                path: path.to_path_buf(),
                source,
            })?;
        Self::from_manifest(manifest)
    }

    pub fn manifest(&self) -> RegistryManifest {
        RegistryManifest {
            zones: self.zones.clone(),
            devices: self.devices.values().cloned().collect(),
        }
    }

    pub fn register_device(&mut self, device: DeviceDescriptor) -> Result<String, RegistryError> {
        if !is_valid_device_id(&device.device_id) {
            return Err(RegistryError::InvalidDeviceId(device.device_id));
        }
        if self.devices.contains_key(&device.device_id) {
            return Err(RegistryError::DuplicateId(device.device_id));
        }
        if self.zone(&device.zone_id).is_none() {
            return Err(RegistryError::UnknownZone(device.zone_id));
        }
        if !device.observes.is_empty() && !device.is_camera() {
            return Err(RegistryError::ObservesOnNonCamera(device.device_id));
        }
        let id = device.device_id.clone();
        self.devices.insert(id.clone(), device);
        Ok(id)
    }

    /// Zones in manifest order.
    pub fn zones(&self) -> &[Zone] {
        &self.zones
    }

    pub fn zone(&self, zone_id: &str) -> Option<&Zone> {
        self.zones.iter().find(|z| z.id == zone_id)
    }

    pub fn device(&self, device_id: &str) -> Option<&DeviceDescriptor> {
        self.devices.get(device_id)
    }

    pub fn devices(&self) -> impl Iterator<Item = &DeviceDescriptor> {
        self.devices.values()
    }

    pub fn require_zone(&self, zone_id: &str) -> Result<&Zone, RegistryError> {
        self.zone(zone_id)
            .ok_or_else(|| RegistryError::UnknownZone(zone_id.to_string()))
    }

    pub fn require_device(&self, device_id: &str) -> Result<&DeviceDescriptor, RegistryError> {
        self.device(device_id)
            .ok_or_else(|| RegistryError::UnknownDevice(device_id.to_string()))
    }

    /// Matching devices in device_id order.
    pub fn list_devices(
        &self,
        zone_id: Option<&str>,
        kind: Option<DeviceKind>,
    ) -> Result<Vec<DeviceDescriptor>, RegistryError> {
        if let Some(zone_id) = zone_id {
            self.require_zone(zone_id)?;
        }
        Ok(self
            .devices
            .values()
            .filter(|d| zone_id.is_none_or(|z| d.zone_id == z))
            .filter(|d| kind.is_none_or(|k| d.kind == k))
            .cloned()
            .collect())
    }

    /// Zones (in registry order) hosting at least one device of `kind`.
    pub fn zones_with_kind(&self, kind: DeviceKind) -> Vec<&Zone> {
        self.zones
            .iter()
            .filter(|z| {
                self.devices
                    .values()
                    .any(|d| d.kind == kind && d.zone_id == z.id)
            })
            .collect()
    }

    /// A device is unavailable iff it has an open incident of severity ERROR or worse.
    pub fn availability(
        &self,
        zone_id: &str,
        open_incidents: &[CorrelatedIncident],
    ) -> Result<BTreeMap<String, DeviceAvailability>, RegistryError> {
        self.require_zone(zone_id)?;
        for incident in open_incidents {
            self.require_device(&incident.device_id)?;
        }
        let mut out = BTreeMap::new();
        for device in self.devices.values().filter(|d| d.zone_id == zone_id) {
            let blocking: Vec<String> = open_incidents
                .iter()
                .filter(|i| {
                    i.device_id == device.device_id
                        && i.status == IncidentStatus::Open
                        && i.max_severity >= Severity::Error
                })
                .map(|i| i.incident_id.clone())
                .collect();
            let status = if blocking.is_empty() {
                Availability::Available
            } else {
                Availability::Unavailable
            };
            let role = if device.is_camera() {
                DeviceRole::Monitoring
            } else {
                DeviceRole::Service
            };
            out.insert(
                device.device_id.clone(),
                DeviceAvailability {
                    device_id: device.device_id.clone(),
                    kind: device.kind,
                    label: device.label.clone(),
                    status,
                    role,
                    incident_ids: blocking,
                },
            );
        }
        Ok(out)
    }
}
