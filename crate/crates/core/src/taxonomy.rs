//! Fixed fault-code table shared by ingestion, manuals and scenario fixtures.

use crate::ingest::Severity;
use crate::registry::DeviceKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaultSpec {
    pub code: &'static str,
    pub kind: DeviceKind,
    pub description: &'static str,
    /// Severity assigned when a status table reports this code without one.
    pub default_severity: Severity,
}

pub const VISUAL_ANOMALY: &str = "V001";

pub const FAULTS: &[FaultSpec] = &[
    FaultSpec {
        code: "E101",
        kind: DeviceKind::SelfServiceMachine,
        description: "card reader jam",
        default_severity: Severity::Error,
    },
    FaultSpec {
        code: "E102",
        kind: DeviceKind::SelfServiceMachine,
        description: "card reader timeout",
        default_severity: Severity::Error,
    },
    FaultSpec {
        code: "E201",
        kind: DeviceKind::SelfServiceMachine,
        description: "receipt printer out of paper",
        default_severity: Severity::Warn,
    },
    FaultSpec {
        code: "E301",
        kind: DeviceKind::SelfServiceMachine,
        description: "RFID antenna fault",
        default_severity: Severity::Error,
    },
    FaultSpec {
        code: "B101",
        kind: DeviceKind::SilentBooth,
        description: "door sensor fault",
        default_severity: Severity::Warn,
    },
    FaultSpec {
        code: "B201",
        kind: DeviceKind::SilentBooth,
        description: "ventilation failure",
        default_severity: Severity::Error,
    },
    FaultSpec {
        code: "S101",
        kind: DeviceKind::SmartBookshelf,
        description: "tag scan mismatch",
        default_severity: Severity::Warn,
    },
    FaultSpec {
        code: "S201",
        kind: DeviceKind::SmartBookshelf,
        description: "shelf load sensor drift",
        default_severity: Severity::Warn,
    },
    FaultSpec {
        code: VISUAL_ANOMALY,
        kind: DeviceKind::SurveillanceCamera,
        description: "visual anomaly",
        default_severity: Severity::Error,
    },
];

pub fn lookup(code: &str) -> Option<&'static FaultSpec> {
    FAULTS.iter().find(|f| f.code == code)
}

pub fn codes_for(kind: DeviceKind) -> impl Iterator<Item = &'static FaultSpec> {
    FAULTS.iter().filter(move |f| f.kind == kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::FaultCode;

    #[test]
    fn every_code_is_well_formed_and_unique() {
        let mut seen = std::collections::HashSet::new();
        for f in FAULTS {
            assert!(FaultCode::parse(f.code).is_some(), "{}", f.code);
            assert!(seen.insert(f.code));
        }
        assert_eq!(FAULTS.len(), 9);
    }
}
