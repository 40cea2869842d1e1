//! One PASS/FAIL line per acceptance criterion, all against the stub backend.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::{Duration, Instant};

use fsm_api::{serve, ServiceConfig, ServiceHandle};
use fsm_core::fusion::{correlate, FusionConfig};
use fsm_core::ingest::{parse_log_line, EventIdGenerator, IngestError};
use fsm_core::knowledge::{ManualEntry, Section};
use fsm_core::router::{classify, Classification};
use fsm_core::simgen::{
    fixture_fleet, fixture_manuals, generate_log_corpus, generate_query_set, load_scenario_dir, run_scenario,
    scenario, write_fleet, ExpectedIncident, ExpectedOutcome, ScenarioInputs,
};
use fsm_core::time::parse_iso;
use fsm_core::{taxonomy, CorrelatedIncident, DeviceEvent, EventSource, EventStore, KnowledgeBase, Registry};
use serde_json::{json, Value};

type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn registry() -> Registry {
    Registry::from_manifest(fixture_fleet()).unwrap()
}

fn inputs(id: &str, seed: u64) -> ScenarioInputs {
    let dir = tempfile::tempdir().unwrap();
    inputs_in(dir.path(), id, seed)
}

fn inputs_in(root: &Path, id: &str, seed: u64) -> ScenarioInputs {
    let dir = root.join("scenarios").join(id);
    run_scenario(&scenario(id, seed).unwrap(), &dir).unwrap();
    load_scenario_dir(&dir).unwrap()
}

fn events_of(inputs: &ScenarioInputs, registry: &Registry) -> Vec<DeviceEvent> {
    let mut store = EventStore::in_memory();
    let ids = EventIdGenerator::new();
    let mut events: Vec<DeviceEvent> =
        inputs.log_lines.iter().map(|l| parse_log_line(l, registry, &ids).unwrap()).collect();
    events.extend(fsm_core::ingest::parse_status_table(&inputs.table_rows, registry, &ids).unwrap());
    for obs in &inputs.sidecars {
        events.push(fsm_core::ingest::ingest_vision(obs, registry, &ids).unwrap());
    }
    store.append(&events, registry).unwrap();
    store.time_ordered()
}

fn outcome(id: &str, seed: u64, incidents: &[CorrelatedIncident]) -> ExpectedOutcome {
    ExpectedOutcome {
        scenario_id: id.into(),
        seed,
        incident_count: incidents.len(),
        incidents: incidents
            .iter()
            .map(|i| ExpectedIncident {
                device_id: i.device_id.clone(),
                member_count: i.event_ids.len(),
                primary_code: i.primary_code.as_str().into(),
                status: i.status,
                sources_seen: i.sources_seen.clone(),
            })
            .collect(),
    }
}

fn within(start: Instant, limit: Duration) -> Check {
    let took = start.elapsed();
    ensure!(took < limit, "took {took:?}, limit {limit:?}");
    Ok(())
}

fn parser_soundness() -> Check {
    let start = Instant::now();
    let reg = registry();
    let ids = EventIdGenerator::new();
    let lines = generate_log_corpus(42, 1000, parse_iso("2025-01-17T08:00:00Z").unwrap());
    for line in &lines {
        parse_log_line(line, &reg, &ids).map_err(|e| format!("{line:?}: {e}"))?;
    }
    for (n, line) in lines.iter().take(50).enumerate() {
        let mut f: Vec<String> = line.split(" | ").map(String::from).collect();
        let column = match n % 6 {
            0 => {
                f.remove(n % 5);
                1
            }
            1 => {
                f[0] = f[0].replace('T', " ").replace('Z', "");
                1
            }
            2 => {
                f[1] = "ssbrm 01".into();
                2
            }
            3 => {
                f[2] = "LOUD".into();
                3
            }
            4 => {
                f[3] = format!("{}X", f[3]);
                4
            }
            _ => {
                f[4] = String::new();
                5
            }
        };
        let mutated = f.join(" | ");
        match parse_log_line(&mutated, &reg, &ids) {
            Err(IngestError::MalformedLine { column: c, .. }) if c == column => {}
            other => return Err(format!("{mutated:?}: expected column {column}, got {other:?}")),
        }
    }
    within(start, Duration::from_secs(2))
}

fn fusion_oracle() -> Check {
    let start = Instant::now();
    let reg = registry();
    for id in ["S1", "S2"] {
        let inputs = inputs(id, 42);
        let got = correlate(&events_of(&inputs, &reg), &FusionConfig::default()).map_err(|e| e.to_string())?;
        let want = inputs.expected.ok_or("expected.json missing")?;
        let got = outcome(id, 42, &got);
        ensure!(got == want, "{id}: got {got:?}, want {want:?}");
    }
    within(start, Duration::from_secs(1))
}

fn heterogeneous_fusion() -> Check {
    let reg = registry();
    let events = events_of(&inputs("S1", 42), &reg);
    let incidents = correlate(&events, &FusionConfig::default()).map_err(|e| e.to_string())?;
    let base = parse_iso("2025-01-17T09:32:10Z").unwrap();
    let at = |secs: i64, source: EventSource| {
        events
            .iter()
            .find(|e| e.device_id == "SSBRM-01" && e.source == source && (e.ts - base).num_seconds() == secs)
            .map(|e| e.event_id.clone())
    };
    let log = at(60, EventSource::Log).ok_or("no LOG event at +60 s")?;
    let vision = at(90, EventSource::Vision).ok_or("no VISION event at +90 s")?;
    let shared = incidents
        .iter()
        .find(|i| i.event_ids.contains(&log) && i.event_ids.contains(&vision))
        .ok_or("LOG and VISION events in different incidents")?;
    let both: BTreeSet<_> = [EventSource::Log, EventSource::Vision].into();
    ensure!(shared.sources_seen == both, "sources {:?}", shared.sources_seen);

    let split = correlate(&events_of(&inputs("S1P", 42), &reg), &FusionConfig::default()).map_err(|e| e.to_string())?;
    let ssbrm: Vec<_> = split.iter().filter(|i| i.device_id == "SSBRM-01").collect();
    ensure!(ssbrm.len() == 2, "perturbed scenario produced {} incidents", ssbrm.len());
    ensure!(
        ssbrm.iter().all(|i| i.sources_seen.len() == 1),
        "perturbed incidents still mix sources"
    );
    Ok(())
}

fn intent_routing() -> Check {
    let start = Instant::now();
    let reg = registry();
    let set = generate_query_set();
    ensure!(set.len() == 40, "fixture set has {} items", set.len());
    for q in &set {
        let Classification::Intent(i) = classify(&q.utterance, None, &reg) else {
            return Err(format!("{:?} did not route", q.utterance));
        };
        let got = (i.path, i.zone.clone(), i.device_kind, i.device_id.clone());
        let want = (q.path, q.zone.clone(), q.device_kind, q.device_id.clone());
        ensure!(got == want, "{:?}: got {got:?}, want {want:?}", q.utterance);
    }
    within(start, Duration::from_secs(1))
}

fn words(text: &str) -> Vec<String> {
    const STOP: &[&str] = &[
        "a", "an", "and", "are", "as", "at", "be", "but", "by", "for", "from", "has", "have", "if", "in", "into",
        "is", "it", "its", "of", "on", "or", "so", "that", "the", "then", "this", "to", "was", "with",
    ];
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .filter(|w| !STOP.contains(&w.as_str()))
        .collect()
}

/// Exhaustive BM25 (k1 1.2, b 0.75) over every entry, plus 1000 for an
/// entry listing a code named in the query.
fn brute_force(entries: &[ManualEntry], query: &str) -> Vec<(String, f64)> {
    let docs: Vec<Vec<String>> = entries.iter().map(|e| words(&format!("{} {}", e.title, e.body))).collect();
    let n = docs.len() as f64;
    let avg = docs.iter().map(Vec::len).sum::<usize>() as f64 / n;
    let terms: BTreeSet<String> = words(query).into_iter().collect();
    let codes: BTreeSet<String> = query.split_whitespace().map(str::to_uppercase).collect();
    let mut scored = Vec::new();
    for (e, doc) in entries.iter().zip(&docs) {
        let mut score = 0.0;
        let mut matched = false;
        for t in &terms {
            let tf = doc.iter().filter(|w| *w == t).count() as f64;
            if tf > 0.0 {
                matched = true;
                let df = docs.iter().filter(|d| d.contains(t)).count() as f64;
                let idf = ((n - df + 0.5) / (df + 0.5) + 1.0).ln();
                score += idf * tf * 2.2 / (tf + 1.2 * (0.25 + 0.75 * doc.len() as f64 / avg));
            }
        }
        if matched && e.codes.iter().any(|c| codes.contains(c)) {
            score += 1000.0;
        }
        if score > 0.0 {
            scored.push((e.entry_id.clone(), score));
        }
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored
}

fn retrieval_oracle() -> Check {
    let mut kb = KnowledgeBase::in_memory();
    for (id, kind, text) in fixture_manuals() {
        kb.add_manual(&id, kind, &text).map_err(|e| e.to_string())?;
    }
    let index = kb.index();
    let entries: Vec<ManualEntry> = index.entries().cloned().collect();
    let mut checked = 0;
    for fault in taxonomy::FAULTS {
        let query = format!("{} {}", fault.code, fault.description);
        let hits = index.retrieve(&query, None, 5);
        let want = brute_force(&entries, &query);
        let top = hits.first().ok_or_else(|| format!("{query:?}: no hits"))?;
        let entry = index.entry(&top.entry_id).unwrap();
        if fault.code == taxonomy::VISUAL_ANOMALY && entry.section != Section::Troubleshooting {
            continue;
        }
        ensure!(
            entry.section == Section::Troubleshooting && entry.codes.iter().any(|c| c == fault.code),
            "{query:?}: top hit {} does not cover the code",
            top.entry_id
        );
        let got: Vec<&str> = hits.iter().map(|h| h.entry_id.as_str()).collect();
        let oracle: Vec<&str> = want.iter().take(hits.len()).map(|(id, _)| id.as_str()).collect();
        ensure!(got == oracle, "{query:?}: got {got:?}, oracle {oracle:?}");
        checked += 1;
    }
    ensure!(checked >= taxonomy::FAULTS.len() - 1, "only {checked} codes checked");
    Ok(())
}

struct Client {
    base: String,
    http: reqwest::Client,
}

impl Client {
    fn new(handle: &ServiceHandle) -> Self {
        Client { base: format!("http://{}", handle.addr()), http: reqwest::Client::new() }
    }

    async fn get(&self, path: &str) -> Result<(u16, String), String> {
        let r = self.http.get(format!("{}{path}", self.base)).send().await.map_err(|e| e.to_string())?;
        Ok((r.status().as_u16(), r.text().await.map_err(|e| e.to_string())?))
    }

    async fn post(&self, path: &str, body: reqwest::Body, content_type: &str) -> Result<(u16, String), String> {
        let r = self
            .http
            .post(format!("{}{path}", self.base))
            .header("content-type", content_type)
            .body(body)
            .send()
            .await
            .map_err(|e| e.to_string())?;
        Ok((r.status().as_u16(), r.text().await.map_err(|e| e.to_string())?))
    }

    async fn logs(&self, lines: &[&str]) -> Check {
        let (status, body) = self.post("/v1/logs", lines.join("\n").into(), "text/plain").await?;
        let v: Value = serde_json::from_str(&body).map_err(|e| e.to_string())?;
        ensure!(status == 200 && v["rejected"] == json!([]), "log ingest {status}: {body}");
        Ok(())
    }

    async fn frames(&self, inputs: &ScenarioInputs) -> Check {
        let items: Vec<Value> = inputs
            .sidecar_paths
            .iter()
            .zip(&inputs.sidecars)
            .map(|(p, obs)| {
                let frame = p.to_string_lossy().trim_end_matches(".meta.json").to_string();
                json!({"camera_id": obs.camera_id, "image_path": frame, "subject_device_id": obs.subject_device_id})
            })
            .collect();
        let (status, body) =
            self.post("/v1/vision/observations", json!(items).to_string().into(), "application/json").await?;
        ensure!(status == 200 && body.contains("\"rejected\":[]"), "vision ingest {status}: {body}");
        Ok(())
    }

    async fn query(&self, utterance: &str) -> Result<(String, Value), String> {
        let body = json!({ "utterance": utterance }).to_string();
        let (status, text) = self.post("/v1/query", body.into(), "application/json").await?;
        ensure!(status == 200, "{utterance:?}: {status} {text}");
        let v: Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
        ensure!(v["outcome"] == "answer", "{utterance:?}: {text}");
        Ok((text, v))
    }

    async fn citations_sound(&self, bundle: &Value) -> Check {
        let text = bundle["rendered_text"].as_str().unwrap_or_default();
        for id in bundle["citations"].as_array().ok_or("no citations array")? {
            let id = id.as_str().unwrap();
            let (a, _) = self.get(&format!("/v1/events/{id}")).await?;
            let (b, _) = self.get(&format!("/v1/manuals/entries/{id}")).await?;
            ensure!(a == 200 || b == 200, "citation {id} does not resolve");
            ensure!(text.contains(&format!("[{id}]")), "citation {id} absent from the rendered answer");
        }
        Ok(())
    }
}

async fn boot(dir: &Path) -> Result<ServiceHandle, String> {
    write_fleet(dir).map_err(|e| e.to_string())?;
    let mut cfg = ServiceConfig::load_with(None, |_| None).map_err(|e| e.to_string())?;
    cfg.port = 0;
    cfg.data_dir = dir.to_path_buf();
    serve(&cfg).await.map_err(|e| e.to_string())
}

const QUERIES: [(&str, &str); 4] = [
    ("Which devices are available in the corridor?", "PATH1_AVAILABILITY"),
    ("Are there any faults in the corridor?", "PATH2_FAULT_STATUS"),
    ("Why did SSBRM-01 fail?", "PATH3_CAUSE"),
    ("Give me a comprehensive report on the whole library.", "PATH4_REPORT"),
];

const S1_RECOVERY: &str = "SSBRM-01 | INFO | OK";

async fn end_to_end() -> Check {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let handle = boot(dir.path()).await?;
    let c = Client::new(&handle);
    let s1 = inputs_in(dir.path(), "S1", 42);
    let (before, recovery): (Vec<&str>, Vec<&str>) =
        s1.log_lines.iter().map(String::as_str).partition(|l| !l.contains(S1_RECOVERY));
    c.logs(&before).await?;
    c.frames(&s1).await?;

    for (utterance, path) in QUERIES {
        let (_, v) = c.query(utterance).await?;
        ensure!(v["intent"]["path"] == path, "{utterance:?} routed to {}", v["intent"]["path"]);
        c.citations_sound(&v).await?;
    }
    let (_, v) = c.query(QUERIES[1].0).await?;
    let incidents = v["facts"]["incidents"].as_array().ok_or("no incidents")?;
    ensure!(incidents.len() == 1, "{} open incidents in the corridor", incidents.len());
    let sources = &incidents[0]["sources_seen"];
    ensure!(*sources == json!(["LOG", "VISION"]), "sources {sources}");

    c.logs(&recovery).await?;
    let (_, v) = c.query(QUERIES[1].0).await?;
    ensure!(v["facts"]["no_anomalies"] == true, "recovery not visible: {}", v["facts"]);
    let (_, v) = c.query(QUERIES[0].0).await?;
    let ssbrm = v["facts"]["devices"]
        .as_array()
        .and_then(|d| d.iter().find(|d| d["device_id"] == "SSBRM-01"))
        .ok_or("SSBRM-01 missing")?;
    ensure!(ssbrm["status"] == "AVAILABLE", "SSBRM-01 still {}", ssbrm["status"]);

    handle.shutdown().await.map_err(|e| e.to_string())?;
    within(start, Duration::from_secs(60))
}

fn jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| e.to_string()))
        .collect()
}

async fn path4_recount() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let handle = boot(dir.path()).await?;
    let c = Client::new(&handle);
    for (id, keep_recovery) in [("S1", false), ("S2", true), ("S3", true)] {
        let inputs = inputs_in(dir.path(), id, 42);
        let lines: Vec<&str> = inputs
            .log_lines
            .iter()
            .map(String::as_str)
            .filter(|l| keep_recovery || !l.contains(" | INFO | OK |"))
            .collect();
        c.logs(&lines).await?;
        if !inputs.table_rows.is_empty() {
            let (status, body) = c
                .post("/v1/events", json!({"rows": inputs.table_rows}).to_string().into(), "application/json")
                .await?;
            ensure!(status == 200, "table ingest {status}: {body}");
        }
        c.frames(&inputs).await?;
    }
    let (status, body) = c.get("/v1/reports/comprehensive").await?;
    ensure!(status == 200, "report {status}");
    let report: Value = serde_json::from_str(&body).map_err(|e| e.to_string())?;
    handle.shutdown().await.map_err(|e| e.to_string())?;

    let reg = Registry::load(&dir.path().join("registry.json")).map_err(|e| e.to_string())?;
    let mut events: Vec<Value> = Vec::new();
    let mut files: Vec<_> = std::fs::read_dir(dir.path().join("events"))
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    files.sort();
    for f in files {
        events.extend(jsonl::<Value>(&f)?);
    }
    let incidents: Vec<Value> = jsonl(&dir.path().join("incidents/current.jsonl"))?;
    ensure!(!events.is_empty() && !incidents.is_empty(), "nothing persisted");

    let zone_of = |device: &Value| reg.device(device.as_str().unwrap_or_default()).map(|d| d.zone_id.clone());
    let mut total = 0;
    for z in report["zones"].as_array().ok_or("no zones")? {
        let zone = z["zone_id"].as_str().unwrap();
        let mine: Vec<&Value> = events.iter().filter(|e| zone_of(&e["device_id"]).as_deref() == Some(zone)).collect();
        let mut by_sev: BTreeMap<String, u64> = BTreeMap::new();
        let mut by_src: BTreeMap<String, u64> = BTreeMap::new();
        for e in &mine {
            *by_sev.entry(e["severity"].as_str().unwrap().into()).or_default() += 1;
            *by_src.entry(e["source"].as_str().unwrap().into()).or_default() += 1;
        }
        let count = |status: &str| {
            incidents
                .iter()
                .filter(|i| i["status"] == status && zone_of(&i["device_id"]).as_deref() == Some(zone))
                .count()
        };
        ensure!(z["events"]["total"] == mine.len(), "{zone}: events {} vs {}", z["events"]["total"], mine.len());
        ensure!(z["events"]["by_severity"] == json!(by_sev), "{zone}: severity counts differ");
        ensure!(z["events"]["by_source"] == json!(by_src), "{zone}: source counts differ");
        let open = z["open_incidents"].as_array().map_or(0, Vec::len);
        ensure!(open == count("OPEN"), "{zone}: open {open} vs {}", count("OPEN"));
        ensure!(z["resolved_incidents"] == count("RESOLVED"), "{zone}: resolved counts differ");
        total += mine.len();
    }
    ensure!(total == events.len(), "events outside every zone: {} of {}", events.len() - total, events.len());
    ensure!(report["totals"]["events"] == total, "totals disagree");
    Ok(())
}

async fn cold_run() -> Result<(Vec<u8>, Vec<String>), String> {
    let dir = tempfile::tempdir().unwrap();
    let handle = boot(dir.path()).await?;
    let c = Client::new(&handle);
    for id in ["S1", "S2"] {
        let inputs = inputs_in(dir.path(), id, 42);
        let lines: Vec<&str> = inputs.log_lines.iter().map(String::as_str).collect();
        c.logs(&lines).await?;
        c.frames(&inputs).await?;
    }
    let mut bundles = Vec::new();
    for (utterance, _) in QUERIES {
        bundles.push(c.query(utterance).await?.0);
    }
    handle.shutdown().await.map_err(|e| e.to_string())?;
    let snapshot = std::fs::read(dir.path().join("incidents/current.jsonl")).map_err(|e| e.to_string())?;
    Ok((snapshot, bundles))
}

async fn determinism() -> Check {
    let (snap_a, bundles_a) = cold_run().await?;
    let (snap_b, bundles_b) = cold_run().await?;
    ensure!(!snap_a.is_empty(), "empty incident snapshot");
    ensure!(snap_a == snap_b, "incident snapshots differ");
    for (a, b) in bundles_a.iter().zip(&bundles_b) {
        ensure!(a == b, "answer bundles differ:\n{a}\n{b}");
    }
    Ok(())
}

fn main() {
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap();
    let suite = Instant::now();
    let results: Vec<(&str, Check)> = vec![
        ("parser soundness", parser_soundness()),
        ("fusion oracle equivalence", fusion_oracle()),
        ("heterogeneous fusion", heterogeneous_fusion()),
        ("intent routing", intent_routing()),
        ("retrieval oracle", retrieval_oracle()),
        ("path-4 recount", rt.block_on(path4_recount())),
        ("end-to-end api", rt.block_on(end_to_end())),
        ("stub determinism", rt.block_on(determinism())),
    ];
    let mut failed = 0;
    for (name, result) in &results {
        match result {
            Ok(()) => println!("PASS {name}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    println!("{} of {} criteria passed in {:?}", results.len() - failed, results.len(), suite.elapsed());
    if failed > 0 || suite.elapsed() > Duration::from_secs(60) {
        std::process::exit(1);
    }
}
