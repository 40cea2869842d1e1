use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::routing::{get, post};
use axum::Json;
use fsm_core::fusion::{incident_timeline, IncidentStatus};
use fsm_core::gateway::ImageInput;
use fsm_core::ingest::TableRow;
use fsm_core::knowledge::{KnowledgeError, ManualEntry};
use fsm_core::registry::{Availability, DeviceRole};
use fsm_core::router::{comprehensive_report, ComprehensiveReport};
use fsm_core::{
    CorrelatedIncident, DeviceEvent, DeviceKind, FacilityError, IngestReport, QueryIntent, QueryOutcome, QueryPath,
    Reject, VisionObservation,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{ApiError, AppState};

type ApiResult<T> = Result<Json<T>, ApiError>;

pub(crate) fn routes() -> axum::Router<Arc<AppState>> {
    axum::Router::new()
        .route("/v1/health", get(health))
        .route("/v1/logs", post(post_logs))
        .route("/v1/events", post(post_events))
        .route("/v1/events/{id}", get(get_event))
        .route("/v1/vision/observations", post(post_observations))
        .route("/v1/manuals", post(post_manual))
        .route("/v1/manuals/entries/{id}", get(get_entry))
        .route("/v1/query", post(post_query))
        .route("/v1/devices", get(get_devices))
        .route("/v1/incidents", get(get_incidents))
        .route("/v1/incidents/{id}", get(get_incident))
        .route("/v1/reports/comprehensive", get(get_report))
}

fn parse_json(body: &Bytes) -> Result<Value, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request("malformed_payload", format!("invalid JSON: {e}")))
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, FacilityError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
        .map_err(ApiError::from)
}

async fn health() -> Json<Value> {
    Json(serde_json::json!({"status": "ok"}))
}

async fn post_logs(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<IngestReport> {
    let text = String::from_utf8(body.to_vec())
        .map_err(|_| ApiError::bad_request("malformed_payload", "log body must be UTF-8 text"))?;
    let facility = Arc::clone(&state.facility);
    Ok(Json(blocking(move || facility.ingest_log_text(&text)).await?))
}

fn cell(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Null => None,
        _ => None,
    }
}

fn items(payload: Value, key: &str) -> Result<Vec<Value>, ApiError> {
    match payload {
        Value::Array(items) => Ok(items),
        Value::Object(mut obj) => match obj.remove(key) {
            Some(Value::Array(items)) => Ok(items),
            Some(_) => Err(ApiError::bad_request("malformed_payload", format!("`{key}` must be an array"))),
            None => Ok(vec![Value::Object(obj)]),
        },
        _ => Err(ApiError::bad_request("malformed_payload", "expected a JSON object or array")),
    }
}

/// Status-table records: `{"rows": [...]}` or a bare array of objects.
async fn post_events(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<IngestReport> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(Json(IngestReport::default()));
    }
    let payload = parse_json(&body)?;
    if payload.is_object() && payload.get("rows").is_none() {
        return Err(ApiError::bad_request("malformed_payload", "expected {\"rows\": [...]} or an array of rows"));
    }
    let mut rows: Vec<(usize, TableRow)> = Vec::new();
    let mut shape_rejects = Vec::new();
    for (i, item) in items(payload, "rows")?.into_iter().enumerate() {
        match item {
            Value::Object(obj) => {
                let row: TableRow = obj.iter().filter_map(|(k, v)| cell(v).map(|c| (k.clone(), c))).collect();
                rows.push((i + 1, row));
            }
            _ => shape_rejects.push(Reject { line: i + 1, reason: "row must be a JSON object".into() }),
        }
    }
    let facility = Arc::clone(&state.facility);
    let table: Vec<TableRow> = rows.iter().map(|(_, r)| r.clone()).collect();
    let mut report = blocking(move || facility.ingest_rows(&table)).await?;
    for r in &mut report.rejected {
        r.line = rows[r.line - 1].0;
    }
    report.rejected.extend(shape_rejects);
    report.rejected.sort_by_key(|r| r.line);
    Ok(Json(report))
}

#[derive(Deserialize)]
struct FrameRef {
    camera_id: String,
    image_path: std::path::PathBuf,
    #[serde(default)]
    subject_device_id: Option<String>,
}

/// Captioned observations, or frame references captioned through the gateway.
async fn post_observations(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<IngestReport> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(Json(IngestReport::default()));
    }
    let payload = parse_json(&body)?;
    let mut observations: Vec<(usize, VisionObservation)> = Vec::new();
    let mut rejected = Vec::new();
    for (i, item) in items(payload, "observations")?.into_iter().enumerate() {
        let line = i + 1;
        let obs = if item.get("image_path").is_some() {
            match serde_json::from_value::<FrameRef>(item) {
                Err(e) => Err(e.to_string()),
                Ok(frame) => match state.router.gateway().caption_image(&ImageInput::Path(frame.image_path)).await {
                    Err(e) => Err(e.to_string()),
                    Ok(c) => match c.overlay_timestamp_text {
                        None => Err("caption carries no overlay timestamp".to_string()),
                        Some(ts) => Ok(VisionObservation {
                            camera_id: frame.camera_id,
                            captured_at_text: ts,
                            caption: c.caption,
                            subject_device_id: frame.subject_device_id,
                            anomaly: c.anomaly,
                        }),
                    },
                },
            }
        } else {
            serde_json::from_value::<VisionObservation>(item).map_err(|e| e.to_string())
        };
        match obs {
            Ok(o) => observations.push((line, o)),
            Err(reason) => rejected.push(Reject { line, reason }),
        }
    }
    let facility = Arc::clone(&state.facility);
    let batch: Vec<VisionObservation> = observations.iter().map(|(_, o)| o.clone()).collect();
    let mut report = blocking(move || facility.ingest_observations(&batch)).await?;
    for r in &mut report.rejected {
        r.line = observations[r.line - 1].0;
    }
    report.rejected.extend(rejected);
    report.rejected.sort_by_key(|r| r.line);
    Ok(Json(report))
}

#[derive(Deserialize)]
struct ManualUpload {
    manual_id: String,
    device_kind: String,
    text: String,
}

#[derive(Serialize)]
struct ManualAccepted {
    manual_id: String,
    entries: usize,
}

async fn post_manual(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<ManualAccepted> {
    let upload: ManualUpload = serde_json::from_slice(&body)
        .map_err(|e| ApiError::bad_request("malformed_payload", e.to_string()))?;
    let kind = DeviceKind::parse(&upload.device_kind)
        .ok_or_else(|| ApiError::bad_request("unknown_kind", format!("unknown device kind {:?}", upload.device_kind)))?;
    let facility = Arc::clone(&state.facility);
    let id = upload.manual_id.clone();
    let entries = tokio::task::spawn_blocking(move || facility.add_manual(&id, kind, &upload.text))
        .await
        .map_err(|e| ApiError::internal(e.to_string()))?
        .map_err(|e| match e {
            FacilityError::Knowledge(KnowledgeError::Storage(m)) => ApiError::internal(m),
            other => ApiError::from(other),
        })?;
    Ok(Json(ManualAccepted { manual_id: upload.manual_id, entries }))
}

#[derive(Deserialize)]
struct QueryBody {
    #[serde(default)]
    utterance: String,
    #[serde(default)]
    zone: Option<String>,
}

async fn post_query(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<QueryOutcome> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Err(ApiError::bad_request("empty_utterance", "request body is empty"));
    }
    let q: QueryBody =
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request("malformed_payload", e.to_string()))?;
    let snapshot = state.facility.snapshot();
    let zone = q.zone.as_deref().filter(|z| !z.trim().is_empty());
    Ok(Json(state.router.answer(&q.utterance, zone, &snapshot).await?))
}

#[derive(Deserialize)]
struct DeviceFilter {
    zone: Option<String>,
    kind: Option<String>,
}

#[derive(Serialize)]
struct DeviceView {
    device_id: String,
    kind: DeviceKind,
    zone_id: String,
    label: String,
    status: Availability,
    role: DeviceRole,
    incident_ids: Vec<String>,
    observes: Vec<String>,
}

#[derive(Serialize)]
struct DeviceList {
    devices: Vec<DeviceView>,
}

fn parse_kind(kind: Option<&str>) -> Result<Option<DeviceKind>, ApiError> {
    kind.map(|k| DeviceKind::parse(k).ok_or_else(|| ApiError::bad_request("unknown_kind", format!("unknown device kind {k:?}"))))
        .transpose()
}

fn unknown_zone(zone: &str) -> ApiError {
    ApiError::new(axum::http::StatusCode::NOT_FOUND, "unknown_zone", format!("unknown zone {zone}"))
}

async fn get_devices(State(state): State<Arc<AppState>>, Query(filter): Query<DeviceFilter>) -> ApiResult<DeviceList> {
    let snap = state.facility.snapshot();
    let kind = parse_kind(filter.kind.as_deref())?;
    let zones: Vec<String> = match &filter.zone {
        Some(z) => {
            snap.registry.zone(z).ok_or_else(|| unknown_zone(z))?;
            vec![z.clone()]
        }
        None => snap.registry.zones().iter().map(|z| z.id.clone()).collect(),
    };
    let mut devices = Vec::new();
    for zone in zones {
        let facts = fsm_core::router::availability_facts(&snap, &zone, kind, None)?;
        for d in facts.devices {
            let descriptor = snap.registry.device(&d.device_id).ok_or_else(|| ApiError::internal("registry drift"))?;
            devices.push(DeviceView {
                zone_id: zone.clone(),
                observes: descriptor.observes.clone(),
                device_id: d.device_id,
                kind: d.kind,
                label: d.label,
                status: d.status,
                role: d.role,
                incident_ids: d.incident_ids,
            });
        }
    }
    Ok(Json(DeviceList { devices }))
}

#[derive(Deserialize)]
struct IncidentFilter {
    status: Option<String>,
    zone: Option<String>,
    device_id: Option<String>,
}

#[derive(Serialize)]
struct IncidentList {
    incidents: Vec<CorrelatedIncident>,
}

async fn get_incidents(State(state): State<Arc<AppState>>, Query(f): Query<IncidentFilter>) -> ApiResult<IncidentList> {
    let snap = state.facility.snapshot();
    let status = match f.status.as_deref().map(str::to_ascii_uppercase).as_deref() {
        None => None,
        Some("OPEN") => Some(IncidentStatus::Open),
        Some("RESOLVED") => Some(IncidentStatus::Resolved),
        Some(other) => return Err(ApiError::bad_request("bad_request", format!("unknown status {other}"))),
    };
    if let Some(z) = &f.zone {
        snap.registry.zone(z).ok_or_else(|| unknown_zone(z))?;
    }
    let incidents = snap
        .incidents
        .iter()
        .filter(|i| status.is_none_or(|s| i.status == s))
        .filter(|i| f.device_id.as_ref().is_none_or(|d| &i.device_id == d))
        .filter(|i| {
            f.zone
                .as_ref()
                .is_none_or(|z| snap.registry.device(&i.device_id).is_some_and(|d| &d.zone_id == z))
        })
        .cloned()
        .collect();
    Ok(Json(IncidentList { incidents }))
}

#[derive(Serialize)]
struct IncidentDetail {
    incident: CorrelatedIncident,
    timeline: Vec<DeviceEvent>,
}

async fn get_incident(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<IncidentDetail> {
    let snap = state.facility.snapshot();
    let incident = snap.incident(&id).cloned().ok_or_else(|| ApiError::not_found(format!("no incident {id}")))?;
    let timeline = incident_timeline(&id, &snap.incidents, &snap.store).map_err(|e| ApiError::internal(e.to_string()))?;
    Ok(Json(IncidentDetail { incident, timeline }))
}

async fn get_event(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<DeviceEvent> {
    let snap = state.facility.snapshot();
    snap.store.get(&id).cloned().map(Json).ok_or_else(|| ApiError::not_found(format!("no event {id}")))
}

async fn get_entry(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<ManualEntry> {
    let snap = state.facility.snapshot();
    snap.knowledge.entry(&id).cloned().map(Json).ok_or_else(|| ApiError::not_found(format!("no manual entry {id}")))
}

#[derive(Deserialize)]
struct ReportFilter {
    zone: Option<String>,
    kind: Option<String>,
}

async fn get_report(State(state): State<Arc<AppState>>, Query(f): Query<ReportFilter>) -> ApiResult<ComprehensiveReport> {
    let snap = state.facility.snapshot();
    let mut intent = QueryIntent::new(QueryPath::Path4Report);
    if let Some(z) = &f.zone {
        snap.registry.zone(z).ok_or_else(|| unknown_zone(z))?;
        intent = intent.in_zone(z);
    }
    intent.device_kind = parse_kind(f.kind.as_deref())?;
    Ok(Json(comprehensive_report(&snap, &intent)?))
}

