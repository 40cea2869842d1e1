//! Product-manual knowledge: parsing, local storage and BM25 retrieval.
//!
//! Manuals live under `manuals/<manual_id>.txt` with their parsed entries in
//! `manuals/<manual_id>.entries.jsonl`. Nothing here talks to the network.

mod index;
mod manual;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

use crate::registry::{DeviceKind, Registry};

pub use index::{
    query_codes, tokenize, KnowledgeHit, KnowledgeIndex, RetrieveFilter, BM25_B, BM25_K1,
    CODE_BOOST, STOPWORDS,
};
pub use manual::{extract_codes, parse_manual, render_manual, ManualEntry, Section};

#[derive(Debug, Error)]
pub enum KnowledgeError {
    #[error("no SAFETY PRECAUTIONS or TROUBLESHOOTING section found")]
    NoRecognizedSections,
    #[error("malformed manual entry: {0}")]
    MalformedEntry(String),
    #[error("invalid manual id {0:?}")]
    InvalidManualId(String),
    #[error("manual store failure: {0}")]
    Storage(String),
}

impl From<std::io::Error> for KnowledgeError {
    fn from(e: std::io::Error) -> Self {
        KnowledgeError::Storage(e.to_string())
    }
}

fn valid_manual_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
}

/// Parsed manuals plus the retrieval index built over them.
#[derive(Debug, Default)]
pub struct KnowledgeBase {
    dir: Option<PathBuf>,
    manuals: BTreeMap<String, Vec<ManualEntry>>,
    index: Arc<KnowledgeIndex>,
}

impl KnowledgeBase {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Loads `data_dir/manuals`. A `.txt` manual without a parsed entries
    /// file is parsed using the device kind of a registry device bound to it.
    pub fn open(data_dir: &Path, registry: &Registry) -> Result<Self, KnowledgeError> {
        let dir = data_dir.join("manuals");
        fs::create_dir_all(&dir)?;
        let mut kb = Self {
            dir: Some(dir.clone()),
            ..Self::default()
        };
        let mut names: Vec<String> = fs::read_dir(&dir)?
            .filter_map(|e| e.ok())
            .filter_map(|e| e.file_name().into_string().ok())
            .collect();
        names.sort();
        for name in &names {
            if let Some(id) = name.strip_suffix(".entries.jsonl") {
                let text = fs::read_to_string(dir.join(name))?;
                let mut entries = Vec::new();
                for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
                    let entry: ManualEntry = serde_json::from_str(line)
                        .map_err(|e| KnowledgeError::Storage(format!("{name}:{}: {e}", n + 1)))?;
                    entries.push(entry);
                }
                kb.manuals.insert(id.to_string(), entries);
            }
        }
        for name in &names {
            let Some(id) = name.strip_suffix(".txt") else { continue };
            if kb.manuals.contains_key(id) {
                continue;
            }
            let kind = registry
                .devices()
                .find(|d| d.manual_id.as_deref() == Some(id))
                .map(|d| d.kind);
            match kind {
                Some(kind) => {
                    let text = fs::read_to_string(dir.join(name))?;
                    kb.add_manual(id, kind, &text)?;
                }
                None => tracing::warn!(manual = id, "manual not bound to any device; skipped"),
            }
        }
        kb.rebuild();
        Ok(kb)
    }

    /// Parses and stores a manual, replacing any previous version.
    pub fn add_manual(
        &mut self,
        manual_id: &str,
        kind: DeviceKind,
        text: &str,
    ) -> Result<usize, KnowledgeError> {
        if !valid_manual_id(manual_id) {
            return Err(KnowledgeError::InvalidManualId(manual_id.to_string()));
        }
        let entries = parse_manual(text, manual_id, kind)?;
        if let Some(dir) = &self.dir {
            fs::write(dir.join(format!("{manual_id}.txt")), text)?;
            let mut jsonl = String::new();
            for e in &entries {
                jsonl.push_str(&serde_json::to_string(e).map_err(|e| KnowledgeError::Storage(e.to_string()))?);
                jsonl.push('\n');
            }
            let tmp = dir.join(format!("{manual_id}.entries.jsonl.tmp"));
            fs::write(&tmp, jsonl)?;
            fs::rename(&tmp, dir.join(format!("{manual_id}.entries.jsonl")))?;
        }
        let count = entries.len();
        self.manuals.insert(manual_id.to_string(), entries);
        self.rebuild();
        Ok(count)
    }

    fn rebuild(&mut self) {
        let all: Vec<ManualEntry> = self.manuals.values().flatten().cloned().collect();
        self.index = Arc::new(KnowledgeIndex::build(&all));
    }

    /// Shared handle to the current index; later manual uploads swap in a
    /// new one without disturbing readers.
    pub fn index(&self) -> Arc<KnowledgeIndex> {
        Arc::clone(&self.index)
    }

    pub fn manual_ids(&self) -> impl Iterator<Item = &str> {
        self.manuals.keys().map(String::as_str)
    }

    pub fn entries(&self, manual_id: &str) -> Option<&[ManualEntry]> {
        self.manuals.get(manual_id).map(Vec::as_slice)
    }
}
