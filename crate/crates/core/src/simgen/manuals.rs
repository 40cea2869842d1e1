use crate::registry::DeviceKind;

const SSBRM_MANUAL: &str = "\
SELF-SERVICE BORROWING AND RETURNING MACHINE - PRODUCT MANUAL

SPECIFICATIONS
- Supply voltage: 220 V AC, 50 Hz
- Card reader: ISO 14443 contactless with motorized insert slot

SAFETY PRECAUTIONS
- Power isolation: Switch off and unplug the machine before opening the service panel.
- Card slot care: Never insert coins, clips or damaged cards into the card reader slot.
- Ventilation: Keep at least 10 cm of clearance around the rear vents to avoid overheating.
- Liquids: Do not place drinks on the touchscreen or book tray.
- Relocation: Use two people and the transport handles when moving the cabinet.

TROUBLESHOOTING
Symptom: E101 card reader jam, card cannot be inserted or is not ejected.
Remedy: Power down the reader, open the front cover and remove the stuck card with the
plastic extraction tool. Check the slot rollers for debris before closing.

Symptom: E102 card reader timeout, the reader does not respond after several retries.
Remedy: Clean the reader contacts with a dry lint-free cloth, reseat the reader cable
and restart the reader module from the maintenance menu.

Symptom: E201 receipt printer out of paper or printing blank receipts.
Remedy: Load a new thermal paper roll with the coated side facing the print head and
close the printer lid until it clicks.

Symptom: E301 RFID antenna fault, books on the tray are not detected.
Remedy: Remove metal objects near the tray, check the antenna connector and run the RFID
calibration routine.
";

const BOOTH_MANUAL: &str = "\
SILENT BOOTH - OWNER MANUAL

SAFETY PRECAUTIONS
1. Occupancy: The booth is designed for one person; do not exceed the rated occupancy.
2. Door: Keep the door path clear and never wedge the door open while the fan runs.
3. Airflow: Do not cover the ceiling air intake or the floor exhaust grille.

TROUBLESHOOTING
Symptom: B101 door sensor fault, booth reports the door ajar while it is closed.
Remedy: Align the magnetic door sensor with its strike plate and tighten the mounting screws.

Symptom: B201 ventilation failure, fan stalled and air feels stuffy inside the booth.
Remedy: Clean the intake filter, check that the fan connector is seated and replace the
fan if it does not spin at power on.
";

const SHELF_MANUAL: &str = "\
SMART BOOKSHELF - INSTALLATION AND USER GUIDE

SAFETY PRECAUTIONS
- Anchoring: Fix the shelf to the wall with the supplied brackets before loading books.
- Load limit: Do not exceed 40 kg per shelf board.

TROUBLESHOOTING
Symptom: S101 tag scan mismatch, inventory count differs from the books on the shelf.
Remedy: Re-run the inventory scan with the shelf doors closed and replace unreadable RFID tags.

Symptom: S201 shelf load sensor drift, reported load keeps rising with an empty board.
Remedy: Remove all books, run the zero-load calibration and recheck the load cell wiring.
";

const CAMERA_MANUAL: &str = "\
SURVEILLANCE CAMERA - OPERATION MANUAL

SAFETY PRECAUTIONS
- Mounting height: Install the camera with a certified bracket out of reach of visitors.
- Privacy: Point the camera only at service equipment, never at reading desks.

TROUBLESHOOTING
Symptom: V001 visual anomaly detected, frame shows an error dialog or an abnormal scene at the observed device.
Remedy: Review the captured frame together with the device logs for the same minute and dispatch staff to inspect the device on site.
";

/// Fixture manuals as `(manual_id, device kind, text)`.
pub fn fixture_manuals() -> Vec<(String, DeviceKind, String)> {
    vec![
        ("ssbrm-manual".into(), DeviceKind::SelfServiceMachine, SSBRM_MANUAL.into()),
        ("booth-manual".into(), DeviceKind::SilentBooth, BOOTH_MANUAL.into()),
        ("shelf-manual".into(), DeviceKind::SmartBookshelf, SHELF_MANUAL.into()),
        ("camera-manual".into(), DeviceKind::SurveillanceCamera, CAMERA_MANUAL.into()),
    ]
}

pub fn manual_id_for(kind: DeviceKind) -> &'static str {
    match kind {
        DeviceKind::SelfServiceMachine => "ssbrm-manual",
        DeviceKind::SilentBooth => "booth-manual",
        DeviceKind::SmartBookshelf => "shelf-manual",
        DeviceKind::SurveillanceCamera => "camera-manual",
    }
}
