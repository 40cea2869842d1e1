use std::sync::LazyLock;

use chrono::{Days, NaiveDate};
use regex::Regex;

use super::{Clarification, QueryIntent, QueryPath, TimeRange};
use crate::registry::{DeviceKind, Registry};

const PATH4_KEYWORDS: &[&str] = &["report", "comprehensive", "risk assessment", "overall"];
const PATH3_KEYWORDS: &[&str] = &["why", "cause", "reason"];
const PATH2_KEYWORDS: &[&str] = &["fault", "anomaly", "broken", "malfunction", "issue", "error"];
const PATH1_KEYWORDS: &[&str] = &["available", "which devices", "what devices", "deployed", "statistics"];

const ZONE_SYNONYMS: &[(&str, &str)] = &[
    ("hallway", "corridor"),
    ("study room", "reading_room"),
    ("foyer", "lobby"),
    ("entrance hall", "lobby"),
    ("entrance", "lobby"),
];

const KIND_SYNONYMS: &[(&str, DeviceKind)] = &[
    ("self service borrowing and returning machine", DeviceKind::SelfServiceMachine),
    ("borrowing and returning machine", DeviceKind::SelfServiceMachine),
    ("self service machine", DeviceKind::SelfServiceMachine),
    ("kiosk", DeviceKind::SelfServiceMachine),
    ("machine", DeviceKind::SelfServiceMachine),
    ("silent booth", DeviceKind::SilentBooth),
    ("booth", DeviceKind::SilentBooth),
    ("smart bookshelf", DeviceKind::SmartBookshelf),
    ("bookshelf", DeviceKind::SmartBookshelf),
    ("shelf", DeviceKind::SmartBookshelf),
    ("shelves", DeviceKind::SmartBookshelf),
    ("surveillance camera", DeviceKind::SurveillanceCamera),
    ("camera", DeviceKind::SurveillanceCamera),
    ("surveillance", DeviceKind::SurveillanceCamera),
    ("cctv", DeviceKind::SurveillanceCamera),
];

static DEVICE_ID: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b[A-Za-z]+-\d{2}\b").unwrap());
static ISO_DATE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b(\d{4}-\d{2}-\d{2})\b").unwrap());

/// Result of the keyword cascade.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Classification {
    Intent(QueryIntent),
    Clarification(Clarification),
    /// No keyword rule fired; slots found so far are kept for a fallback.
    NoRule(QueryIntent),
}

pub(super) fn tokens(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

fn inflects(token: &str, word: &str) -> bool {
    if let Some(rest) = token.strip_prefix(word) {
        if matches!(rest, "" | "s" | "es" | "d" | "ed" | "ing") {
            return true;
        }
    }
    word.strip_suffix('y')
        .is_some_and(|stem| token.strip_prefix(stem) == Some("ies"))
}

/// First token position where the (possibly multi-word) phrase matches.
fn find_phrase(tokens: &[String], phrase: &str) -> Option<usize> {
    let words: Vec<&str> = phrase.split(' ').collect();
    if words.len() > tokens.len() {
        return None;
    }
    (0..=tokens.len() - words.len()).find(|&i| {
        words
            .iter()
            .enumerate()
            .all(|(j, w)| inflects(&tokens[i + j], w))
    })
}

fn any_keyword(tokens: &[String], keywords: &[&str]) -> bool {
    keywords.iter().any(|k| find_phrase(tokens, k).is_some())
}

fn earliest<T: Clone>(tokens: &[String], table: &[(String, T)]) -> Option<T> {
    // Longer phrases first so "silent booth" beats "booth" at the same spot.
    let mut best: Option<(usize, usize, T)> = None;
    for (phrase, value) in table {
        if let Some(pos) = find_phrase(tokens, phrase) {
            let len = phrase.split(' ').count();
            let better = match &best {
                None => true,
                Some((p, l, _)) => pos < *p || (pos == *p && len > *l),
            };
            if better {
                best = Some((pos, len, value.clone()));
            }
        }
    }
    best.map(|(_, _, v)| v)
}

fn zone_table(registry: &Registry) -> Vec<(String, String)> {
    let mut table = Vec::new();
    for zone in registry.zones() {
        table.push((tokens(&zone.id).join(" "), zone.id.clone()));
        table.push((tokens(&zone.display_name).join(" "), zone.id.clone()));
    }
    for (phrase, id) in ZONE_SYNONYMS {
        if registry.zone(id).is_some() {
            table.push((phrase.to_string(), id.to_string()));
        }
    }
    table
}

fn kind_table() -> Vec<(String, DeviceKind)> {
    let mut table: Vec<(String, DeviceKind)> = KIND_SYNONYMS
        .iter()
        .map(|(p, k)| (p.to_string(), *k))
        .collect();
    for kind in DeviceKind::ALL {
        table.push((tokens(kind.display_name()).join(" "), kind));
    }
    table
}

fn time_range(utterance: &str) -> Option<TimeRange> {
    let caps = ISO_DATE.captures(utterance)?;
    let day = NaiveDate::parse_from_str(&caps[1], "%Y-%m-%d").ok()?;
    let start = day.and_hms_opt(0, 0, 0)?.and_utc();
    let end = day.checked_add_days(Days::new(1))?.and_hms_opt(0, 0, 0)?.and_utc();
    Some(TimeRange { start, end })
}

fn clarify(message: String, missing: &[&str], intent: QueryIntent) -> Classification {
    Classification::Clarification(Clarification {
        message,
        missing: missing.iter().map(|s| s.to_string()).collect(),
        intent: Some(intent),
    })
}

/// Keyword cascade plus slot filling against the registry. `utterance` must
/// be non-empty; callers check that.
pub fn classify(utterance: &str, zone_hint: Option<&str>, registry: &Registry) -> Classification {
    let toks = tokens(utterance);
    let path = if any_keyword(&toks, PATH4_KEYWORDS) {
        Some(QueryPath::Path4Report)
    } else if any_keyword(&toks, PATH3_KEYWORDS) {
        Some(QueryPath::Path3Cause)
    } else if any_keyword(&toks, PATH2_KEYWORDS) {
        Some(QueryPath::Path2FaultStatus)
    } else if any_keyword(&toks, PATH1_KEYWORDS) {
        Some(QueryPath::Path1Availability)
    } else {
        None
    };

    let mut intent = QueryIntent {
        path: path.unwrap_or(QueryPath::Path1Availability),
        zone: earliest(&toks, &zone_table(registry)).or_else(|| zone_hint.map(str::to_string)),
        device_kind: earliest(&toks, &kind_table()),
        device_id: None,
        time_range: time_range(utterance),
    };

    let mut unknown_device = None;
    for m in DEVICE_ID.find_iter(utterance) {
        let id = m.as_str().to_ascii_uppercase();
        match registry.device(&id) {
            Some(device) => {
                intent.device_id = Some(id);
                intent.device_kind = Some(device.kind);
                intent.zone = Some(device.zone_id.clone());
                unknown_device = None;
                break;
            }
            None => unknown_device = unknown_device.or(Some(id)),
        }
    }
    if intent.zone.is_none() {
        if let Some(kind) = intent.device_kind {
            if let [only] = registry.zones_with_kind(kind).as_slice() {
                intent.zone = Some(only.id.clone());
            }
        }
    }
    if intent.device_id.is_none() {
        if let (Some(zone), Some(kind)) = (&intent.zone, intent.device_kind) {
            if let Ok(devices) = registry.list_devices(Some(zone), Some(kind)) {
                if let [only] = devices.as_slice() {
                    intent.device_id = Some(only.device_id.clone());
                }
            }
        }
    }

    let Some(path) = path else {
        return Classification::NoRule(intent);
    };
    if let Some(id) = unknown_device {
        return clarify(format!("Device {id} is not registered. Which device did you mean?"), &["device_id"], intent);
    }
    match path {
        QueryPath::Path1Availability if intent.zone.is_none() => clarify(
            "Which zone should I check? Known zones: ".to_string() + &zone_list(registry),
            &["zone"],
            intent,
        ),
        QueryPath::Path3Cause
            if intent.device_id.is_none() && (intent.zone.is_none() || intent.device_kind.is_none()) =>
        {
            let missing: Vec<&str> = [
                intent.zone.is_none().then_some("zone"),
                intent.device_kind.is_none().then_some("device_kind"),
            ]
            .into_iter()
            .flatten()
            .collect();
            clarify(
                "Which device is malfunctioning? Name a device id, or a device type and its zone.".into(),
                &missing,
                intent,
            )
        }
        _ => Classification::Intent(intent),
    }
}

fn zone_list(registry: &Registry) -> String {
    registry
        .zones()
        .iter()
        .map(|z| z.id.as_str())
        .collect::<Vec<_>>()
        .join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simgen::{fixture_fleet, generate_query_set};

    fn registry() -> Registry {
        Registry::from_manifest(fixture_fleet()).unwrap()
    }

    fn intent(c: Classification) -> QueryIntent {
        match c {
            Classification::Intent(i) => i,
            other => panic!("expected intent, got {other:?}"),
        }
    }

    #[test]
    fn inflections() {
        assert!(inflects("issues", "issue"));
        assert!(inflects("caused", "cause"));
        assert!(inflects("anomalies", "anomaly"));
        assert!(inflects("malfunctioning", "malfunction"));
        assert!(!inflects("because", "cause"));
        assert!(!inflects("default", "fault"));
    }

    #[test]
    fn corridor_statistics() {
        let i = intent(classify("Which devices are deployed in the corridor?", None, &registry()));
        assert_eq!(i.path, QueryPath::Path1Availability);
        assert_eq!(i.zone.as_deref(), Some("corridor"));
    }

    #[test]
    fn silent_booth_cause() {
        let i = intent(classify("Why is the Silent Booth not functioning properly?", None, &registry()));
        assert_eq!(i.path, QueryPath::Path3Cause);
        assert_eq!(i.device_kind, Some(DeviceKind::SilentBooth));
        assert_eq!(i.zone.as_deref(), Some("reading_room"));
        assert_eq!(i.device_id.as_deref(), Some("SB-01"));
    }

    #[test]
    fn no_rule_for_greeting() {
        assert!(matches!(classify("hello", None, &registry()), Classification::NoRule(_)));
    }

    #[test]
    fn clarifications() {
        let reg = registry();
        assert!(matches!(
            classify("Why did the self-service machine fail?", None, &reg),
            Classification::Clarification(_)
        ));
        assert!(matches!(classify("Which devices are available?", None, &reg), Classification::Clarification(_)));
        assert!(matches!(classify("Is SSBRM-77 broken?", None, &reg), Classification::Clarification(_)));
        let i = intent(classify("Which devices are available?", Some("lobby"), &reg));
        assert_eq!(i.zone.as_deref(), Some("lobby"));
        let i = intent(classify("Any faults anywhere?", None, &reg));
        assert_eq!(i.path, QueryPath::Path2FaultStatus);
        assert_eq!(i.zone, None);
    }

    #[test]
    fn date_becomes_time_range() {
        let i = intent(classify("Any faults in the corridor on 2025-01-17?", None, &registry()));
        let r = i.time_range.unwrap();
        assert_eq!(crate::time::format_ts(&r.start), "2025-01-17T00:00:00Z");
        assert_eq!(crate::time::format_ts(&r.end), "2025-01-18T00:00:00Z");
    }

    #[test]
    fn labeled_query_set_routes_exactly() {
        let reg = registry();
        for q in generate_query_set() {
            let i = intent(classify(&q.utterance, None, &reg));
            assert_eq!(i.path, q.path, "{}", q.utterance);
            assert_eq!(i.zone, q.zone, "{}", q.utterance);
            assert_eq!(i.device_kind, q.device_kind, "{}", q.utterance);
            assert_eq!(i.device_id, q.device_id, "{}", q.utterance);
        }
    }
}
