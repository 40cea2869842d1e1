use super::manuals::manual_id_for;
use crate::registry::{DeviceDescriptor, DeviceKind, RegistryManifest, Zone};

fn device(id: &str, kind: DeviceKind, zone: &str, label: &str) -> DeviceDescriptor {
    DeviceDescriptor::new(id, kind, zone, label).with_manual(manual_id_for(kind))
}

/// The library fixture: three zones, ten devices, four of them cameras.
///
/// Reading room and lobby counts are fixture choices; only the corridor
/// layout (two machines watched by two cameras) comes from the scenario.
pub fn fixture_fleet() -> RegistryManifest {
    use DeviceKind::*;
    RegistryManifest {
        zones: vec![
            Zone::new("corridor", "Corridor"),
            Zone::new("reading_room", "Reading Room"),
            Zone::new("lobby", "Lobby"),
        ],
        devices: vec![
            device("SSBRM-01", SelfServiceMachine, "corridor", "Self-service Borrowing and Returning Machine #1"),
            device("SSBRM-02", SelfServiceMachine, "corridor", "Self-service Borrowing and Returning Machine #2"),
            device("CAM-01", SurveillanceCamera, "corridor", "Surveillance Camera #1 (front of machine #1)")
                .observing(["SSBRM-01"]),
            device("CAM-02", SurveillanceCamera, "corridor", "Surveillance Camera #2 (side of machines #1 and #2)")
                .observing(["SSBRM-01", "SSBRM-02"]),
            device("SB-01", SilentBooth, "reading_room", "Silent Booth #1"),
            device("SHELF-01", SmartBookshelf, "reading_room", "Smart Bookshelf #1"),
            device("CAM-03", SurveillanceCamera, "reading_room", "Surveillance Camera #3")
                .observing(["SB-01", "SHELF-01"]),
            device("SSBRM-03", SelfServiceMachine, "lobby", "Self-service Borrowing and Returning Machine #3"),
            device("SHELF-02", SmartBookshelf, "lobby", "Smart Bookshelf #2"),
            device("CAM-04", SurveillanceCamera, "lobby", "Surveillance Camera #4")
                .observing(["SSBRM-03", "SHELF-02"]),
        ],
    }
}

/// Pretty JSON for `registry.json`; byte-stable.
pub fn fleet_json() -> String {
    let mut text = serde_json::to_string_pretty(&fixture_fleet()).expect("manifest serializes");
    text.push('\n');
    text
}
