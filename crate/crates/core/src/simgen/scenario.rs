use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use chrono::Duration;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::corpus::noise_lines;
use super::SimError;
use crate::fusion::IncidentStatus;
use crate::ingest::{EventSource, Severity, TableRow, VisionObservation};
use crate::time::{format_ts, parse_iso, serde_ts, Timestamp};

pub const SCENARIO_BASE: &str = "2025-01-17T09:32:10Z";
const NOISE_LINES: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Emission {
    LogLine {
        severity: Severity,
        code: String,
        message: String,
    },
    TableRow {
        status: String,
        #[serde(default)]
        columns: BTreeMap<String, String>,
    },
    /// Subject is the step's device.
    VisionSidecar {
        camera_id: String,
        caption: String,
        anomaly: bool,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioStep {
    pub offset_secs: i64,
    pub device_id: String,
    pub emission: Emission,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedIncident {
    pub device_id: String,
    pub member_count: usize,
    pub primary_code: String,
    pub status: IncidentStatus,
    pub sources_seen: BTreeSet<EventSource>,
}

/// Ground truth written next to a scenario's emitted files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedOutcome {
    pub scenario_id: String,
    pub seed: u64,
    pub incident_count: usize,
    /// In window-start order.
    pub incidents: Vec<ExpectedIncident>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioScript {
    pub scenario_id: String,
    pub seed: u64,
    #[serde(with = "serde_ts")]
    pub base_ts: Timestamp,
    pub steps: Vec<ScenarioStep>,
    pub expected: Vec<ExpectedIncident>,
}

impl ScenarioScript {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.steps.windows(2).any(|w| w[0].offset_secs > w[1].offset_secs) {
            return Err(SimError::InvalidScript(format!(
                "{}: step offsets must be nondecreasing",
                self.scenario_id
            )));
        }
        if self.steps.iter().any(|s| s.offset_secs < 0) {
            return Err(SimError::InvalidScript("negative offset".into()));
        }
        Ok(())
    }

    pub fn expected_outcome(&self) -> ExpectedOutcome {
        ExpectedOutcome {
            scenario_id: self.scenario_id.clone(),
            seed: self.seed,
            incident_count: self.expected.len(),
            incidents: self.expected.clone(),
        }
    }

    fn ts_at(&self, offset: i64) -> Timestamp {
        self.base_ts + Duration::seconds(offset)
    }

    /// Log lines of the script and seeded background noise, in time order.
    pub fn log_lines(&self) -> Vec<String> {
        if self.steps.is_empty() {
            return Vec::new();
        }
        let mut lines: Vec<(i64, usize, String)> = Vec::new();
        for (n, step) in self.steps.iter().enumerate() {
            if let Emission::LogLine {
                severity,
                code,
                message,
            } = &step.emission
            {
                let ts = self.ts_at(step.offset_secs);
                lines.push((
                    step.offset_secs,
                    n,
                    format!("{} | {} | {severity} | {code} | {message}", format_ts(&ts), step.device_id),
                ));
            }
        }
        let busy: Vec<&str> = self.steps.iter().map(|s| s.device_id.as_str()).collect();
        let span = self.steps.last().map_or(0, |s| s.offset_secs);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        for (k, (offset, line)) in noise_lines(&mut rng, self.base_ts, span, &busy, NOISE_LINES)
            .into_iter()
            .enumerate()
        {
            lines.push((offset, self.steps.len() + k, line));
        }
        lines.sort();
        lines.into_iter().map(|(_, _, l)| l).collect()
    }

    pub fn table_rows(&self) -> Vec<TableRow> {
        self.steps
            .iter()
            .filter_map(|step| match &step.emission {
                Emission::TableRow { status, columns } => {
                    let mut row = columns.clone();
                    row.insert("device_id".into(), step.device_id.clone());
                    row.insert("ts".into(), format_ts(&self.ts_at(step.offset_secs)));
                    row.insert("status".into(), status.clone());
                    Some(row)
                }
                _ => None,
            })
            .collect()
    }

    pub fn sidecars(&self) -> Vec<VisionObservation> {
        self.steps
            .iter()
            .filter_map(|step| match &step.emission {
                Emission::VisionSidecar {
                    camera_id,
                    caption,
                    anomaly,
                } => Some(VisionObservation {
                    camera_id: camera_id.clone(),
                    captured_at_text: self
                        .ts_at(step.offset_secs)
                        .format("%Y-%m-%d %H:%M:%S")
                        .to_string(),
                    caption: caption.clone(),
                    subject_device_id: Some(step.device_id.clone()),
                    anomaly: *anomaly,
                }),
                _ => None,
            })
            .collect()
    }
}

fn write(path: PathBuf, contents: &[u8], out: &mut Vec<PathBuf>) -> Result<(), SimError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(&path, contents)?;
    out.push(path);
    Ok(())
}

/// Writes the scenario's log file, status table, vision sidecars and
/// `expected.json` under `out_dir`; returns the files written, sorted.
pub fn run_scenario(script: &ScenarioScript, out_dir: &Path) -> Result<Vec<PathBuf>, SimError> {
    script.validate()?;
    let mut written = Vec::new();
    let id = &script.scenario_id;

    let lines = script.log_lines();
    if !lines.is_empty() {
        let mut text = lines.join("\n");
        text.push('\n');
        write(out_dir.join(format!("logs/{id}.log")), text.as_bytes(), &mut written)?;
    }

    let rows = script.table_rows();
    if !rows.is_empty() {
        let extras: BTreeSet<&String> = rows
            .iter()
            .flat_map(|r| r.keys())
            .filter(|k| !matches!(k.as_str(), "device_id" | "ts" | "status"))
            .collect();
        let mut header: Vec<&str> = vec!["device_id", "ts", "status"];
        header.extend(extras.iter().map(|s| s.as_str()));
        let mut csv_out = csv::Writer::from_writer(Vec::new());
        csv_out.write_record(&header).map_err(|e| SimError::Io(e.into()))?;
        for row in &rows {
            let record: Vec<&str> = header
                .iter()
                .map(|h| row.get(*h).map_or("", String::as_str))
                .collect();
            csv_out.write_record(&record).map_err(|e| SimError::Io(e.into()))?;
        }
        let bytes = csv_out.into_inner().map_err(|e| SimError::Io(e.into_error()))?;
        write(out_dir.join(format!("tables/{id}_status.csv")), &bytes, &mut written)?;
    }

    for obs in script.sidecars() {
        let stamp = parse_iso(&obs.captured_at_text.replace(' ', "T"))
            .map(|t| t.format("%Y%m%dT%H%M%S").to_string())
            .unwrap_or_default();
        let mut json = serde_json::to_string_pretty(&obs).expect("observation serializes");
        json.push('\n');
        write(
            out_dir.join(format!("frames/{}_{stamp}.jpg.meta.json", obs.camera_id)),
            json.as_bytes(),
            &mut written,
        )?;
    }

    let mut expected = serde_json::to_string_pretty(&script.expected_outcome()).expect("serializes");
    expected.push('\n');
    write(out_dir.join("expected.json"), expected.as_bytes(), &mut written)?;
    written.sort();
    Ok(written)
}

/// Inputs recovered from a directory written by [`run_scenario`].
#[derive(Debug, Clone, Default)]
pub struct ScenarioInputs {
    pub log_lines: Vec<String>,
    pub table_rows: Vec<TableRow>,
    pub sidecars: Vec<VisionObservation>,
    pub sidecar_paths: Vec<PathBuf>,
    pub expected: Option<ExpectedOutcome>,
}

fn sorted_files(dir: &Path, suffix: &str) -> Result<Vec<PathBuf>, SimError> {
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_string_lossy().ends_with(suffix))
        .collect();
    files.sort();
    Ok(files)
}

pub fn load_scenario_dir(dir: &Path) -> Result<ScenarioInputs, SimError> {
    let mut inputs = ScenarioInputs::default();
    for path in sorted_files(&dir.join("logs"), ".log")? {
        let text = fs::read_to_string(&path)?;
        inputs
            .log_lines
            .extend(text.lines().filter(|l| !l.trim().is_empty()).map(str::to_string));
    }
    for path in sorted_files(&dir.join("tables"), ".csv")? {
        let mut reader = csv::Reader::from_path(&path).map_err(|e| SimError::Io(e.into()))?;
        let headers = reader.headers().map_err(|e| SimError::Io(e.into()))?.clone();
        for record in reader.records() {
            let record = record.map_err(|e| SimError::Io(e.into()))?;
            let row: TableRow = headers
                .iter()
                .zip(record.iter())
                .filter(|(_, v)| !v.is_empty())
                .map(|(h, v)| (h.to_string(), v.to_string()))
                .collect();
            inputs.table_rows.push(row);
        }
    }
    for path in sorted_files(&dir.join("frames"), ".meta.json")? {
        let text = fs::read_to_string(&path)?;
        let obs: VisionObservation = serde_json::from_str(&text)
            .map_err(|e| SimError::InvalidScript(format!("{}: {e}", path.display())))?;
        inputs.sidecars.push(obs);
        inputs.sidecar_paths.push(path);
    }
    let expected = dir.join("expected.json");
    if expected.exists() {
        let text = fs::read_to_string(&expected)?;
        inputs.expected = Some(
            serde_json::from_str(&text)
                .map_err(|e| SimError::InvalidScript(format!("expected.json: {e}")))?,
        );
    }
    Ok(inputs)
}

fn log(offset: i64, device: &str, severity: Severity, code: &str, message: &str) -> ScenarioStep {
    ScenarioStep {
        offset_secs: offset,
        device_id: device.into(),
        emission: Emission::LogLine {
            severity,
            code: code.into(),
            message: message.into(),
        },
    }
}

fn frame(offset: i64, subject: &str, camera: &str, caption: &str, anomaly: bool) -> ScenarioStep {
    ScenarioStep {
        offset_secs: offset,
        device_id: subject.into(),
        emission: Emission::VisionSidecar {
            camera_id: camera.into(),
            caption: caption.into(),
            anomaly,
        },
    }
}

fn row(offset: i64, device: &str, status: &str, columns: &[(&str, &str)]) -> ScenarioStep {
    ScenarioStep {
        offset_secs: offset,
        device_id: device.into(),
        emission: Emission::TableRow {
            status: status.into(),
            columns: columns.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
        },
    }
}

fn expect(
    device: &str,
    members: usize,
    code: &str,
    status: IncidentStatus,
    sources: &[EventSource],
) -> ExpectedIncident {
    ExpectedIncident {
        device_id: device.into(),
        member_count: members,
        primary_code: code.into(),
        status,
        sources_seen: sources.iter().copied().collect(),
    }
}

/// Scripted scenarios: `S1`, `S1P` (S1 with the camera frame moved 340 s
/// past the last log fault), `S2`, `S3` and `EMPTY`.
pub fn scenario(id: &str, seed: u64) -> Option<ScenarioScript> {
    use EventSource::{Log, Table, Vision};
    use IncidentStatus::{Open, Resolved};
    use Severity::{Error, Info, Warn};

    let (steps, expected) = match id {
        "S1" => (
            vec![
                log(0, "SSBRM-01", Warn, "E102", "Card reader response slow (2.8 s)"),
                log(60, "SSBRM-01", Error, "E102", "Card reader timeout after 3 retries"),
                frame(90, "SSBRM-01", "CAM-01", "screen shows error dialog", true),
                frame(95, "SSBRM-01", "CAM-02", "side view of the machine, patron waiting at the counter", false),
                log(3600, "SSBRM-01", Info, "OK", "Self-check passed"),
            ],
            vec![expect("SSBRM-01", 3, "E102", Resolved, &[Log, Vision])],
        ),
        "S1P" => (
            vec![
                log(0, "SSBRM-01", Warn, "E102", "Card reader response slow (2.8 s)"),
                log(60, "SSBRM-01", Error, "E102", "Card reader timeout after 3 retries"),
                frame(400, "SSBRM-01", "CAM-01", "screen shows error dialog", true),
                frame(405, "SSBRM-01", "CAM-02", "side view of the machine, patron waiting at the counter", false),
                log(3600, "SSBRM-01", Info, "OK", "Self-check passed"),
            ],
            vec![
                expect("SSBRM-01", 2, "E102", Resolved, &[Log]),
                expect("SSBRM-01", 1, "V001", Resolved, &[Vision]),
            ],
        ),
        "S2" => (
            vec![
                log(0, "SSBRM-01", Warn, "E201", "Receipt printer paper low"),
                log(120, "SSBRM-01", Error, "E201", "Receipt printer out of paper"),
                log(900, "SSBRM-01", Info, "OK", "Self-check passed"),
                log(7200, "SSBRM-01", Error, "E101", "Card reader jammed"),
                log(7260, "SSBRM-01", Error, "E101", "Card reader jammed, card retained"),
            ],
            vec![
                expect("SSBRM-01", 2, "E201", Resolved, &[Log]),
                expect("SSBRM-01", 2, "E101", Open, &[Log]),
            ],
        ),
        "S3" => (
            vec![
                log(0, "SB-01", Warn, "B101", "Door sensor reports door ajar while occupied"),
                log(30, "SB-01", Error, "B201", "Ventilation fan stalled, CO2 rising"),
                frame(45, "SB-01", "CAM-03", "booth occupant waving at the camera, door propped open", true),
                row(600, "SHELF-01", "S201", &[("shelf_load", "131%")]),
                row(660, "SHELF-01", "S201", &[("shelf_load", "129%")]),
                row(700, "SHELF-02", "OK", &[("shelf_load", "64%")]),
            ],
            vec![
                expect("SB-01", 3, "B201", Open, &[Log, Vision]),
                expect("SHELF-01", 2, "S201", Open, &[Table]),
            ],
        ),
        "EMPTY" => (Vec::new(), Vec::new()),
        _ => return None,
    };
    Some(ScenarioScript {
        scenario_id: id.to_string(),
        seed,
        base_ts: parse_iso(SCENARIO_BASE).expect("valid base"),
        steps,
        expected,
    })
}

pub const SCENARIO_IDS: [&str; 5] = ["S1", "S1P", "S2", "S3", "EMPTY"];
