use serde::{Deserialize, Serialize};

use crate::registry::DeviceKind;
use crate::router::QueryPath;

/// An operator utterance with the route and slots it should resolve to
/// against the fixture fleet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledQuery {
    pub utterance: String,
    pub path: QueryPath,
    pub zone: Option<String>,
    pub device_kind: Option<DeviceKind>,
    pub device_id: Option<String>,
}

fn q(
    utterance: &str,
    path: QueryPath,
    zone: Option<&str>,
    kind: Option<DeviceKind>,
    device: Option<&str>,
) -> LabeledQuery {
    LabeledQuery {
        utterance: utterance.into(),
        path,
        zone: zone.map(Into::into),
        device_kind: kind,
        device_id: device.map(Into::into),
    }
}

/// Forty paraphrases, ten per workflow path.
pub fn generate_query_set() -> Vec<LabeledQuery> {
    use DeviceKind::*;
    use QueryPath::*;
    vec![
        q("Which devices are deployed in the corridor?", Path1Availability, Some("corridor"), None, None),
        q("What devices are available in the reading room?", Path1Availability, Some("reading_room"), None, None),
        q("Which devices are deployed in the lobby?", Path1Availability, Some("lobby"), None, None),
        q("Give me statistics on the smart devices in the corridor.", Path1Availability, Some("corridor"), None, None),
        q("Is a silent booth available in the reading room right now?", Path1Availability, Some("reading_room"), Some(SilentBooth), Some("SB-01")),
        q("Which devices can I use in the lobby?", Path1Availability, Some("lobby"), None, None),
        q("Are any self-service machines available in the corridor?", Path1Availability, Some("corridor"), Some(SelfServiceMachine), None),
        q("What devices are deployed in the hallway?", Path1Availability, Some("corridor"), None, None),
        q("Show device statistics for the reading room", Path1Availability, Some("reading_room"), None, None),
        q("Where can I find an available smart bookshelf in the lobby?", Path1Availability, Some("lobby"), Some(SmartBookshelf), Some("SHELF-02")),

        q("Is the Self-service Borrowing and Returning Machine in the corridor experiencing any issues?", Path2FaultStatus, Some("corridor"), Some(SelfServiceMachine), None),
        q("Are there any faults in the corridor?", Path2FaultStatus, Some("corridor"), None, None),
        q("Any anomaly with devices in the reading room?", Path2FaultStatus, Some("reading_room"), None, None),
        q("Is anything broken in the lobby?", Path2FaultStatus, Some("lobby"), None, None),
        q("Does SSBRM-01 have an error?", Path2FaultStatus, Some("corridor"), Some(SelfServiceMachine), Some("SSBRM-01")),
        q("List malfunctions of the smart bookshelf in the reading room.", Path2FaultStatus, Some("reading_room"), Some(SmartBookshelf), Some("SHELF-01")),
        q("Are there any issues with the cameras in the lobby?", Path2FaultStatus, Some("lobby"), Some(SurveillanceCamera), Some("CAM-04")),
        q("Show current faults for the silent booth.", Path2FaultStatus, Some("reading_room"), Some(SilentBooth), Some("SB-01")),
        q("Any errors on the self-service machines in the lobby?", Path2FaultStatus, Some("lobby"), Some(SelfServiceMachine), Some("SSBRM-03")),
        q("Are there anomalies in the foyer?", Path2FaultStatus, Some("lobby"), None, None),

        q("Why is the Silent Booth not functioning properly?", Path3Cause, Some("reading_room"), Some(SilentBooth), Some("SB-01")),
        q("What caused the fault on SSBRM-01?", Path3Cause, Some("corridor"), Some(SelfServiceMachine), Some("SSBRM-01")),
        q("What is the cause of the error on the self-service machine in the lobby?", Path3Cause, Some("lobby"), Some(SelfServiceMachine), Some("SSBRM-03")),
        q("Why is the smart bookshelf in the reading room miscounting books?", Path3Cause, Some("reading_room"), Some(SmartBookshelf), Some("SHELF-01")),
        q("What is the reason SSBRM-01 stopped working?", Path3Cause, Some("corridor"), Some(SelfServiceMachine), Some("SSBRM-01")),
        q("Why did the self-service machine in the corridor fail?", Path3Cause, Some("corridor"), Some(SelfServiceMachine), None),
        q("Explain the cause of the booth ventilation problem.", Path3Cause, Some("reading_room"), Some(SilentBooth), Some("SB-01")),
        q("Why is CAM-02 flagging an anomaly?", Path3Cause, Some("corridor"), Some(SurveillanceCamera), Some("CAM-02")),
        q("Why is the bookshelf in the lobby malfunctioning?", Path3Cause, Some("lobby"), Some(SmartBookshelf), Some("SHELF-02")),
        q("What is the root cause of the silent booth door sensor alarm?", Path3Cause, Some("reading_room"), Some(SilentBooth), Some("SB-01")),

        q("Give me a comprehensive report on all devices in the library.", Path4Report, None, None, None),
        q("Provide a risk assessment for the corridor.", Path4Report, Some("corridor"), None, None),
        q("What is the overall health of the smart devices?", Path4Report, None, None, None),
        q("Generate a report of faults and their causes across the library.", Path4Report, None, None, None),
        q("Comprehensive risk assessment and cause analysis for every device, please.", Path4Report, None, None, None),
        q("Overall, which devices are at risk of failure?", Path4Report, None, None, None),
        q("I need a full report for the reading room.", Path4Report, Some("reading_room"), None, None),
        q("Summarize overall failure risks in the lobby.", Path4Report, Some("lobby"), None, None),
        q("Prepare a comprehensive analysis of the self-service machines.", Path4Report, None, Some(SelfServiceMachine), None),
        q("Report on the risk of the silent booth.", Path4Report, Some("reading_room"), Some(SilentBooth), Some("SB-01")),
    ]
}

/// JSONL form of the query set; byte-stable.
pub fn query_set_jsonl() -> String {
    let mut out = String::new();
    for query in generate_query_set() {
        out.push_str(&serde_json::to_string(&query).expect("serializes"));
        out.push('\n');
    }
    out
}
