use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::KnowledgeError;
use crate::ingest::is_fault_code;
use crate::registry::DeviceKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Section {
    Safety,
    Troubleshooting,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManualEntry {
    pub entry_id: String,
    pub manual_id: String,
    pub device_kind: DeviceKind,
    pub section: Section,
    /// Symptom for troubleshooting entries, precaution heading for safety ones.
    pub title: String,
    pub body: String,
    pub codes: Vec<String>,
}

#[derive(Clone, Copy, PartialEq)]
enum Block {
    Safety,
    Troubleshooting,
    Other,
}

fn code_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\b[A-Z][0-9]{3}\b").unwrap())
}

fn marker_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)\b(symptom|remedy)\s*:").unwrap())
}

fn bullet_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*(?:[-*\u{2022}]|\d+[.)])\s+").unwrap())
}

/// Fault codes mentioned in `text`, first occurrence order.
pub fn extract_codes(text: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for m in code_regex().find_iter(text) {
        let code = m.as_str();
        if is_fault_code(code) && !out.iter().any(|c| c == code) {
            out.push(code.to_string());
        }
    }
    out
}

fn collapse(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn classify_heading(line: &str) -> Option<Block> {
    let trimmed = line.trim();
    if trimmed.is_empty() || bullet_regex().is_match(line) {
        return None;
    }
    let bare = trimmed.trim_start_matches('#').trim().trim_end_matches(':').trim();
    if bare.eq_ignore_ascii_case("safety precautions") {
        return Some(Block::Safety);
    }
    if bare.eq_ignore_ascii_case("troubleshooting") {
        return Some(Block::Troubleshooting);
    }
    let is_caps_heading = bare.chars().any(|c| c.is_alphabetic())
        && !bare.chars().any(|c| c.is_lowercase())
        && !marker_regex().is_match(trimmed);
    (trimmed.starts_with('#') || is_caps_heading).then_some(Block::Other)
}

/// Splits a manual in the canonical text layout into entries.
///
/// Recognized sections are `SAFETY PRECAUTIONS` (one entry per bullet or
/// numbered item, `heading: text`) and `TROUBLESHOOTING` (one entry per
/// `Symptom:` / `Remedy:` pair). Any other heading ends the current section.
pub fn parse_manual(
    text: &str,
    manual_id: &str,
    device_kind: DeviceKind,
) -> Result<Vec<ManualEntry>, KnowledgeError> {
    let mut blocks: Vec<(Block, String)> = Vec::new();
    let mut current: Option<(Block, String)> = None;
    for line in text.lines() {
        if let Some(kind) = classify_heading(line) {
            if let Some(done) = current.take() {
                blocks.push(done);
            }
            current = Some((kind, String::new()));
        } else if let Some((_, buf)) = current.as_mut() {
            buf.push_str(line);
            buf.push('\n');
        }
    }
    if let Some(done) = current {
        blocks.push(done);
    }
    if !blocks
        .iter()
        .any(|(k, _)| matches!(k, Block::Safety | Block::Troubleshooting))
    {
        return Err(KnowledgeError::NoRecognizedSections);
    }

    let mut safety = Vec::new();
    let mut trouble = Vec::new();
    for (kind, body) in &blocks {
        match kind {
            Block::Safety => safety.extend(safety_items(body)),
            Block::Troubleshooting => trouble.extend(symptom_pairs(body)?),
            Block::Other => {}
        }
    }

    let mut entries = Vec::new();
    for (n, (title, body)) in trouble.into_iter().enumerate() {
        entries.push(entry(manual_id, device_kind, Section::Troubleshooting, n, title, body));
    }
    for (n, (title, body)) in safety.into_iter().enumerate() {
        entries.push(entry(manual_id, device_kind, Section::Safety, n, title, body));
    }
    Ok(entries)
}

fn entry(
    manual_id: &str,
    device_kind: DeviceKind,
    section: Section,
    n: usize,
    title: String,
    body: String,
) -> ManualEntry {
    let tag = match section {
        Section::Safety => 'S',
        Section::Troubleshooting => 'T',
    };
    let codes = extract_codes(&format!("{title}\n{body}"));
    ManualEntry {
        entry_id: format!("{manual_id}-{tag}{:02}", n + 1),
        manual_id: manual_id.to_string(),
        device_kind,
        section,
        title,
        body,
        codes,
    }
}

fn safety_items(block: &str) -> Vec<(String, String)> {
    let mut items: Vec<String> = Vec::new();
    for line in block.lines() {
        if line.trim().is_empty() {
            continue;
        }
        if let Some(m) = bullet_regex().find(line) {
            items.push(line[m.end()..].to_string());
        } else if let Some(last) = items.last_mut() {
            last.push(' ');
            last.push_str(line);
        }
    }
    items
        .into_iter()
        .map(|item| {
            let item = collapse(&item);
            match item.split_once(": ") {
                Some((head, rest)) if !rest.trim().is_empty() => {
                    (head.trim().to_string(), rest.trim().to_string())
                }
                _ => (item.clone(), item),
            }
        })
        .filter(|(_, body)| !body.is_empty())
        .collect()
}

fn symptom_pairs(block: &str) -> Result<Vec<(String, String)>, KnowledgeError> {
    let markers: Vec<(bool, usize, usize)> = marker_regex()
        .captures_iter(block)
        .map(|c| {
            let whole = c.get(0).unwrap();
            let is_symptom = c[1].eq_ignore_ascii_case("symptom");
            (is_symptom, whole.start(), whole.end())
        })
        .collect();
    let mut pairs = Vec::new();
    let mut pending: Option<String> = None;
    for (i, &(is_symptom, _, end)) in markers.iter().enumerate() {
        let stop = markers.get(i + 1).map_or(block.len(), |m| m.1);
        let text = collapse(&block[end..stop]);
        if is_symptom {
            if let Some(symptom) = pending.take() {
                return Err(KnowledgeError::MalformedEntry(format!(
                    "symptom {symptom:?} has no remedy"
                )));
            }
            pending = Some(text);
        } else {
            let symptom = pending.take().ok_or_else(|| {
                KnowledgeError::MalformedEntry(format!("remedy {text:?} has no symptom"))
            })?;
            if text.is_empty() {
                return Err(KnowledgeError::MalformedEntry(format!(
                    "symptom {symptom:?} has an empty remedy"
                )));
            }
            pairs.push((symptom, text));
        }
    }
    if let Some(symptom) = pending {
        return Err(KnowledgeError::MalformedEntry(format!(
            "symptom {symptom:?} has no remedy"
        )));
    }
    Ok(pairs)
}

/// Renders entries back into the canonical manual layout.
pub fn render_manual(title: &str, entries: &[ManualEntry]) -> String {
    let mut out = format!("{title}\n\n");
    let safety: Vec<&ManualEntry> = entries.iter().filter(|e| e.section == Section::Safety).collect();
    let trouble: Vec<&ManualEntry> = entries
        .iter()
        .filter(|e| e.section == Section::Troubleshooting)
        .collect();
    if !safety.is_empty() {
        out.push_str("SAFETY PRECAUTIONS\n");
        for e in safety {
            if e.title == e.body {
                out.push_str(&format!("- {}\n", e.body));
            } else {
                out.push_str(&format!("- {}: {}\n", e.title, e.body));
            }
        }
        out.push('\n');
    }
    if !trouble.is_empty() {
        out.push_str("TROUBLESHOOTING\n");
        for e in trouble {
            out.push_str(&format!("Symptom: {}\nRemedy: {}\n\n", e.title, e.body));
        }
    }
    out
}
