use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Facts, QueryIntent, QueryPath, RouterError, TimeRange};
use crate::facility::FacilitySnapshot;
use crate::fusion::{incident_timeline, open_incidents, CorrelatedIncident, IncidentStatus};
use crate::gateway::{ContextBlock, Slot, Slots, TemplateId};
use crate::ingest::{DeviceEvent, EventSource, Severity};
use crate::knowledge::{KnowledgeHit, KnowledgeIndex, RetrieveFilter, Section};
use crate::registry::{Availability, DeviceAvailability, DeviceKind};
use crate::time::format_ts;

const CAUSE_HITS: usize = 3;
const PREVENTION_HITS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AvailabilityFacts {
    pub zone_id: String,
    pub devices: Vec<DeviceAvailability>,
    pub available: usize,
    pub unavailable: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultFacts {
    pub zone_id: Option<String>,
    pub device_kind: Option<DeviceKind>,
    pub device_id: Option<String>,
    pub incidents: Vec<CorrelatedIncident>,
    pub no_anomalies: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauseFacts {
    pub device_id: Option<String>,
    pub incident: Option<CorrelatedIncident>,
    pub timeline: Vec<DeviceEvent>,
    pub causes: Vec<KnowledgeHit>,
    pub prevention: Vec<KnowledgeHit>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncidentAnalysis {
    pub incident: CorrelatedIncident,
    pub top_cause: Option<KnowledgeHit>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventCounts {
    pub total: usize,
    pub by_severity: BTreeMap<Severity, usize>,
    pub by_source: BTreeMap<EventSource, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneReport {
    pub zone_id: String,
    pub display_name: String,
    pub availability: AvailabilityFacts,
    pub open_incidents: Vec<IncidentAnalysis>,
    pub resolved_incidents: usize,
    pub events: EventCounts,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportTotals {
    pub zones: usize,
    pub devices: usize,
    pub available: usize,
    pub unavailable: usize,
    pub open_incidents: usize,
    pub resolved_incidents: usize,
    pub events: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindAdvice {
    pub device_kind: DeviceKind,
    pub hits: Vec<KnowledgeHit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComprehensiveReport {
    pub zone_id: Option<String>,
    pub device_kind: Option<DeviceKind>,
    pub zones: Vec<ZoneReport>,
    pub totals: ReportTotals,
    pub prevention: Vec<KindAdvice>,
}

pub(super) struct Plan {
    pub facts: Facts,
    pub citations: BTreeSet<String>,
    pub prompts: Vec<(TemplateId, Slots)>,
}

fn event_block(e: &DeviceEvent) -> ContextBlock {
    ContextBlock::telemetry(
        &e.event_id,
        format!(
            "{} {} {} {} {} ({})",
            format_ts(&e.ts),
            e.device_id,
            e.severity,
            e.code,
            e.message,
            e.source.as_str()
        ),
    )
}

fn incident_block(i: &CorrelatedIncident) -> ContextBlock {
    let status = match i.status {
        IncidentStatus::Open => "OPEN",
        IncidentStatus::Resolved => "RESOLVED",
    };
    ContextBlock::telemetry(
        &i.incident_id,
        format!(
            "{} {} {} {} from {} to {}, {} events",
            i.device_id,
            i.primary_code,
            i.max_severity,
            status,
            format_ts(&i.window_start),
            format_ts(&i.window_end),
            i.event_ids.len()
        ),
    )
}

fn entry_block(index: &KnowledgeIndex, hit: &KnowledgeHit) -> ContextBlock {
    let text = index
        .entry(&hit.entry_id)
        .map(|e| format!("{}: {}", e.title, e.body))
        .unwrap_or_default();
    ContextBlock::manual(&hit.entry_id, text)
}

fn text(s: impl Into<String>) -> Slot {
    Slot::Text(s.into())
}

/// Incident block followed by one block per member event.
fn incident_blocks(snap: &FacilitySnapshot, i: &CorrelatedIncident, out: &mut Vec<ContextBlock>) {
    out.push(incident_block(i));
    for id in &i.event_ids {
        if let Some(e) = snap.store.get(id) {
            out.push(event_block(e));
        }
    }
}

fn overlaps(i: &CorrelatedIncident, range: Option<&TimeRange>) -> bool {
    range.is_none_or(|r| i.window_start < r.end && i.window_end >= r.start)
}

fn as_of(snap: &FacilitySnapshot) -> crate::time::Timestamp {
    snap.as_of().unwrap_or(chrono::DateTime::<chrono::Utc>::MAX_UTC)
}

fn scoped_open(snap: &FacilitySnapshot, intent: &QueryIntent, zone: Option<&str>) -> Result<Vec<CorrelatedIncident>, RouterError> {
    let open = open_incidents(&snap.incidents, as_of(snap), zone, &snap.registry)?;
    Ok(open
        .into_iter()
        .filter(|i| intent.device_id.as_ref().is_none_or(|d| &i.device_id == d))
        .filter(|i| {
            intent
                .device_kind
                .is_none_or(|k| snap.registry.device(&i.device_id).is_some_and(|d| d.kind == k))
        })
        .filter(|i| overlaps(i, intent.time_range.as_ref()))
        .collect())
}

pub fn availability_facts(
    snap: &FacilitySnapshot,
    zone: &str,
    kind: Option<DeviceKind>,
    device_id: Option<&str>,
) -> Result<AvailabilityFacts, RouterError> {
    let open = open_incidents(&snap.incidents, as_of(snap), Some(zone), &snap.registry)?;
    let devices: Vec<DeviceAvailability> = snap
        .registry
        .availability(zone, &open)?
        .into_values()
        .filter(|d| kind.is_none_or(|k| d.kind == k))
        .filter(|d| device_id.is_none_or(|id| d.device_id == id))
        .collect();
    let unavailable = devices.iter().filter(|d| d.status == Availability::Unavailable).count();
    Ok(AvailabilityFacts {
        zone_id: zone.to_string(),
        available: devices.len() - unavailable,
        unavailable,
        devices,
    })
}

fn availability_evidence(
    snap: &FacilitySnapshot,
    facts: &AvailabilityFacts,
    blocks: &mut Vec<ContextBlock>,
    evidence: &mut Vec<ContextBlock>,
    citations: &mut BTreeSet<String>,
) {
    for d in &facts.devices {
        let status = match d.status {
            Availability::Available => "AVAILABLE".to_string(),
            Availability::Unavailable => format!("UNAVAILABLE ({})", d.incident_ids.join(", ")),
        };
        blocks.push(ContextBlock::telemetry(
            &d.device_id,
            format!("{} [{}] {}", d.label, d.kind.display_name(), status),
        ));
    }
    for d in &facts.devices {
        for id in &d.incident_ids {
            if let Some(i) = snap.incidents.iter().find(|i| &i.incident_id == id) {
                incident_blocks(snap, i, evidence);
                citations.extend(i.event_ids.iter().cloned());
            }
        }
    }
}

/// Query text used to look up causes and advice for an incident.
fn incident_query(snap: &FacilitySnapshot, i: &CorrelatedIncident) -> String {
    let mut parts = vec![i.primary_code.as_str().to_string()];
    for id in &i.event_ids {
        if let Some(e) = snap.store.get(id) {
            parts.push(e.message.clone());
        }
    }
    parts.join(" ")
}

/// Troubleshooting hits for an incident, empty unless some troubleshooting
/// entry for the device kind names the incident's primary code.
pub fn cause_hits(snap: &FacilitySnapshot, i: &CorrelatedIncident, k: usize) -> Vec<KnowledgeHit> {
    let Some(kind) = snap.registry.device(&i.device_id).map(|d| d.kind) else {
        return Vec::new();
    };
    let covered = snap.knowledge.entries().any(|e| {
        e.device_kind == kind
            && e.section == Section::Troubleshooting
            && e.codes.iter().any(|c| c == i.primary_code.as_str())
    });
    if !covered {
        return Vec::new();
    }
    snap.knowledge.retrieve_filtered(
        &incident_query(snap, i),
        RetrieveFilter { kind: Some(kind), section: Some(Section::Troubleshooting) },
        k,
    )
}

/// Safety and troubleshooting hits for a device kind. When the query finds
/// fewer than `k`, the kind's safety entries fill the rest in id order.
fn advice_hits(snap: &FacilitySnapshot, kind: DeviceKind, query: &str, k: usize) -> Vec<KnowledgeHit> {
    let mut hits = snap
        .knowledge
        .retrieve_filtered(query, RetrieveFilter { kind: Some(kind), section: None }, k);
    for e in snap
        .knowledge
        .entries()
        .filter(|e| e.device_kind == kind && e.section == Section::Safety)
    {
        if hits.len() >= k {
            break;
        }
        if hits.iter().all(|h| h.entry_id != e.entry_id) {
            hits.push(KnowledgeHit {
                entry_id: e.entry_id.clone(),
                manual_id: e.manual_id.clone(),
                section: e.section,
                score: 0.0,
                matched_terms: Vec::new(),
                code_match: false,
            });
        }
    }
    hits
}

fn path1(intent: &QueryIntent, snap: &FacilitySnapshot) -> Result<Plan, RouterError> {
    let zone = intent
        .zone
        .as_deref()
        .ok_or(RouterError::MissingZone)?;
    let facts = availability_facts(snap, zone, intent.device_kind, intent.device_id.as_deref())?;
    let mut blocks = Vec::new();
    let mut evidence = Vec::new();
    let mut citations = BTreeSet::new();
    availability_evidence(snap, &facts, &mut blocks, &mut evidence, &mut citations);
    let slots = Slots::from([
        ("zone".into(), text(zone)),
        ("devices".into(), Slot::Blocks(blocks)),
        ("evidence".into(), Slot::Blocks(evidence)),
    ]);
    Ok(Plan {
        facts: Facts::Availability(facts),
        citations,
        prompts: vec![(TemplateId::Availability, slots)],
    })
}

fn path2(intent: &QueryIntent, snap: &FacilitySnapshot) -> Result<Plan, RouterError> {
    if let Some(d) = &intent.device_id {
        snap.registry.require_device(d)?;
    }
    let incidents = scoped_open(snap, intent, intent.zone.as_deref())?;
    let mut blocks = Vec::new();
    let mut evidence = Vec::new();
    let mut citations = BTreeSet::new();
    for i in &incidents {
        blocks.push(incident_block(i));
        evidence.extend(i.event_ids.iter().filter_map(|id| snap.store.get(id)).map(event_block));
        citations.extend(i.event_ids.iter().cloned());
    }
    let scope = match (&intent.device_id, &intent.zone) {
        (Some(d), Some(z)) => format!("{z} (device {d})"),
        (Some(d), None) => format!("device {d}"),
        (None, Some(z)) => z.clone(),
        (None, None) => "all zones".into(),
    };
    let slots = Slots::from([
        ("zone".into(), text(scope)),
        ("incidents".into(), Slot::Blocks(blocks)),
        ("evidence".into(), Slot::Blocks(evidence)),
    ]);
    Ok(Plan {
        facts: Facts::FaultStatus(FaultFacts {
            zone_id: intent.zone.clone(),
            device_kind: intent.device_kind,
            device_id: intent.device_id.clone(),
            no_anomalies: incidents.is_empty(),
            incidents,
        }),
        citations,
        prompts: vec![(TemplateId::FaultStatus, slots)],
    })
}

/// The incident Path 3 explains: the most severe open incident among the
/// target devices, else the most recent one.
fn target_incident(snap: &FacilitySnapshot, intent: &QueryIntent) -> Result<Option<CorrelatedIncident>, RouterError> {
    let devices: BTreeSet<String> = match &intent.device_id {
        Some(d) => {
            snap.registry.require_device(d)?;
            BTreeSet::from([d.clone()])
        }
        None => snap
            .registry
            .list_devices(intent.zone.as_deref(), intent.device_kind)?
            .into_iter()
            .map(|d| d.device_id)
            .collect(),
    };
    let candidates = |i: &&CorrelatedIncident| devices.contains(&i.device_id) && overlaps(i, intent.time_range.as_ref());
    let open = open_incidents(&snap.incidents, as_of(snap), None, &snap.registry)?;
    if let Some(i) = open.iter().find(candidates) {
        return Ok(Some(i.clone()));
    }
    Ok(snap
        .incidents
        .iter()
        .filter(candidates)
        .max_by(|a, b| (a.window_end, &a.incident_id).cmp(&(b.window_end, &b.incident_id)))
        .cloned())
}

fn path3(intent: &QueryIntent, snap: &FacilitySnapshot) -> Result<Plan, RouterError> {
    let incident = target_incident(snap, intent)?;
    let mut citations = BTreeSet::new();
    let Some(incident) = incident else {
        let target = intent.device_id.clone().unwrap_or_else(|| {
            format!(
                "{} in {}",
                intent.device_kind.map(|k| k.display_name()).unwrap_or("device"),
                intent.zone.as_deref().unwrap_or("the facility")
            )
        });
        let slots = Slots::from([
            ("device".into(), text(target.clone())),
            ("timeline".into(), Slot::Blocks(Vec::new())),
            ("causes".into(), Slot::Blocks(Vec::new())),
        ]);
        return Ok(Plan {
            facts: Facts::Cause(CauseFacts {
                device_id: intent.device_id.clone(),
                incident: None,
                timeline: Vec::new(),
                causes: Vec::new(),
                prevention: Vec::new(),
                notes: vec![format!("no known malfunction for {target}")],
            }),
            citations,
            prompts: vec![(TemplateId::CauseAnalysis, slots)],
        });
    };

    let kind = snap.registry.require_device(&incident.device_id)?.kind;
    let timeline = incident_timeline(&incident.incident_id, &snap.incidents, &snap.store)?;
    let causes = cause_hits(snap, &incident, CAUSE_HITS);
    let prevention = advice_hits(snap, kind, &incident_query(snap, &incident), PREVENTION_HITS);
    let mut notes = Vec::new();
    if causes.is_empty() {
        notes.push(format!("no manual guidance for code {}", incident.primary_code));
    }

    let mut timeline_blocks = vec![incident_block(&incident)];
    timeline_blocks.extend(timeline.iter().map(event_block));
    citations.extend(timeline.iter().map(|e| e.event_id.clone()));
    citations.extend(causes.iter().map(|h| h.entry_id.clone()));
    citations.extend(prevention.iter().map(|h| h.entry_id.clone()));
    let cause_blocks = causes.iter().map(|h| entry_block(&snap.knowledge, h)).collect();
    let advice_blocks = prevention.iter().map(|h| entry_block(&snap.knowledge, h)).collect();

    let prompts = vec![
        (
            TemplateId::CauseAnalysis,
            Slots::from([
                ("device".into(), text(&incident.device_id)),
                ("timeline".into(), Slot::Blocks(timeline_blocks)),
                ("causes".into(), Slot::Blocks(cause_blocks)),
            ]),
        ),
        (
            TemplateId::PreventionAdvice,
            Slots::from([
                ("device_kind".into(), text(kind.display_name())),
                ("advice".into(), Slot::Blocks(advice_blocks)),
            ]),
        ),
    ];
    Ok(Plan {
        facts: Facts::Cause(CauseFacts {
            device_id: Some(incident.device_id.clone()),
            incident: Some(incident),
            timeline,
            causes,
            prevention,
            notes,
        }),
        citations,
        prompts,
    })
}

/// Deterministic Path 4 composition: per zone availability, open incidents
/// with their top cause, event counts, then advice per device kind.
pub fn comprehensive_report(snap: &FacilitySnapshot, intent: &QueryIntent) -> Result<ComprehensiveReport, RouterError> {
    let zones: Vec<_> = match &intent.zone {
        Some(z) => vec![snap.registry.require_zone(z)?.clone()],
        None => snap.registry.zones().to_vec(),
    };
    let in_scope = |device_id: &str, zone: &str| {
        snap.registry.device(device_id).is_some_and(|d| {
            d.zone_id == zone
                && intent.device_kind.is_none_or(|k| d.kind == k)
                && intent.device_id.as_ref().is_none_or(|id| id == device_id)
        })
    };

    let mut report = ComprehensiveReport {
        zone_id: intent.zone.clone(),
        device_kind: intent.device_kind,
        zones: Vec::new(),
        totals: ReportTotals::default(),
        prevention: Vec::new(),
    };
    for zone in &zones {
        let availability = availability_facts(snap, &zone.id, intent.device_kind, intent.device_id.as_deref())?;
        let scoped = QueryIntent { path: QueryPath::Path2FaultStatus, zone: Some(zone.id.clone()), ..intent.clone() };
        let open_incidents = scoped_open(snap, &scoped, Some(&zone.id))?
            .into_iter()
            .map(|incident| IncidentAnalysis {
                top_cause: cause_hits(snap, &incident, 1).into_iter().next(),
                incident,
            })
            .collect::<Vec<_>>();
        let resolved_incidents = snap
            .incidents
            .iter()
            .filter(|i| i.status == IncidentStatus::Resolved && in_scope(&i.device_id, &zone.id))
            .count();
        let mut events = EventCounts::default();
        for e in snap.store.events().filter(|e| in_scope(&e.device_id, &zone.id)) {
            events.total += 1;
            *events.by_severity.entry(e.severity).or_default() += 1;
            *events.by_source.entry(e.source).or_default() += 1;
        }

        let t = &mut report.totals;
        t.zones += 1;
        t.devices += availability.devices.len();
        t.available += availability.available;
        t.unavailable += availability.unavailable;
        t.open_incidents += open_incidents.len();
        t.resolved_incidents += resolved_incidents;
        t.events += events.total;
        report.zones.push(ZoneReport {
            zone_id: zone.id.clone(),
            display_name: zone.display_name.clone(),
            availability,
            open_incidents,
            resolved_incidents,
            events,
        });
    }

    let kinds: BTreeSet<DeviceKind> = report
        .zones
        .iter()
        .flat_map(|z| z.availability.devices.iter().map(|d| d.kind))
        .collect();
    for kind in DeviceKind::ALL.into_iter().filter(|k| kinds.contains(k)) {
        let query: Vec<String> = report
            .zones
            .iter()
            .flat_map(|z| &z.open_incidents)
            .filter(|a| snap.registry.device(&a.incident.device_id).is_some_and(|d| d.kind == kind))
            .map(|a| incident_query(snap, &a.incident))
            .collect();
        report.prevention.push(KindAdvice {
            device_kind: kind,
            hits: advice_hits(snap, kind, &query.join(" "), PREVENTION_HITS),
        });
    }
    Ok(report)
}

fn path4(intent: &QueryIntent, snap: &FacilitySnapshot) -> Result<Plan, RouterError> {
    let report = comprehensive_report(snap, intent)?;
    let mut blocks = Vec::new();
    let mut citations = BTreeSet::new();
    let mut seen = BTreeSet::new();
    let mut push = |block: ContextBlock, blocks: &mut Vec<ContextBlock>| {
        if seen.insert(block.label.clone()) {
            blocks.push(block);
        }
    };
    for z in &report.zones {
        push(
            ContextBlock::telemetry(
                &z.zone_id,
                format!(
                    "{}: {} devices, {} available, {} unavailable, {} open incidents, {} resolved incidents, {} events",
                    z.display_name,
                    z.availability.devices.len(),
                    z.availability.available,
                    z.availability.unavailable,
                    z.open_incidents.len(),
                    z.resolved_incidents,
                    z.events.total
                ),
            ),
            &mut blocks,
        );
        for a in &z.open_incidents {
            let mut inc = Vec::new();
            incident_blocks(snap, &a.incident, &mut inc);
            for b in inc {
                push(b, &mut blocks);
            }
            citations.extend(a.incident.event_ids.iter().cloned());
            if let Some(hit) = &a.top_cause {
                push(entry_block(&snap.knowledge, hit), &mut blocks);
                citations.insert(hit.entry_id.clone());
            }
        }
    }
    for advice in &report.prevention {
        for hit in &advice.hits {
            push(entry_block(&snap.knowledge, hit), &mut blocks);
            citations.insert(hit.entry_id.clone());
        }
    }
    let scope = match (&intent.zone, intent.device_kind) {
        (Some(z), Some(k)) => format!("{} devices in {z}", k.display_name()),
        (Some(z), None) => z.clone(),
        (None, Some(k)) => format!("{} devices across the facility", k.display_name()),
        (None, None) => "the whole facility".into(),
    };
    let slots = Slots::from([("scope".into(), text(scope)), ("sections".into(), Slot::Blocks(blocks))]);
    Ok(Plan {
        facts: Facts::Report(report),
        citations,
        prompts: vec![(TemplateId::ComprehensiveReport, slots)],
    })
}

pub(super) fn plan(intent: &QueryIntent, snap: &FacilitySnapshot) -> Result<Plan, RouterError> {
    match intent.path {
        QueryPath::Path1Availability => path1(intent, snap),
        QueryPath::Path2FaultStatus => path2(intent, snap),
        QueryPath::Path3Cause => path3(intent, snap),
        QueryPath::Path4Report => path4(intent, snap),
    }
}
