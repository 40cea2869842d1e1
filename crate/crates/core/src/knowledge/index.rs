use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{ManualEntry, Section};
use crate::ingest::is_fault_code;
use crate::registry::DeviceKind;

pub const BM25_K1: f64 = 1.2;
pub const BM25_B: f64 = 0.75;
/// Added when a fault code in the query is listed by the entry.
pub const CODE_BOOST: f64 = 1000.0;

pub const STOPWORDS: [&str; 30] = [
    "a", "an", "and", "are", "as", "at", "be", "but", "by", "for", "from", "has", "have", "if",
    "in", "into", "is", "it", "its", "of", "on", "or", "so", "that", "the", "then", "this", "to",
    "was", "with",
];

/// Lowercase, split on non-alphanumerics, drop stopwords.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .filter(|t| !STOPWORDS.contains(&t.as_str()))
        .collect()
}

/// Fault codes named in a query (case-insensitive), uppercased.
pub fn query_codes(query: &str) -> BTreeSet<String> {
    query
        .split(|c: char| !c.is_alphanumeric())
        .map(str::to_uppercase)
        .filter(|t| is_fault_code(t))
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RetrieveFilter {
    pub kind: Option<DeviceKind>,
    pub section: Option<Section>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeHit {
    pub entry_id: String,
    pub manual_id: String,
    pub section: Section,
    pub score: f64,
    pub matched_terms: Vec<String>,
    pub code_match: bool,
}

#[derive(Debug, Clone)]
struct IndexedEntry {
    entry: ManualEntry,
    term_freq: HashMap<String, u32>,
    length: u32,
}

/// Inverted statistics over manual entries for BM25 retrieval.
#[derive(Debug, Clone, Default)]
pub struct KnowledgeIndex {
    entries: Vec<IndexedEntry>,
    doc_freq: HashMap<String, u32>,
    postings: HashMap<String, Vec<usize>>,
    avg_len: f64,
}

impl KnowledgeIndex {
    pub fn build(entries: &[ManualEntry]) -> Self {
        let mut sorted: Vec<ManualEntry> = entries.to_vec();
        sorted.sort_by(|a, b| a.entry_id.cmp(&b.entry_id));
        let mut indexed = Vec::with_capacity(sorted.len());
        let mut doc_freq: HashMap<String, u32> = HashMap::new();
        let mut postings: HashMap<String, Vec<usize>> = HashMap::new();
        let mut total = 0u64;
        for (pos, entry) in sorted.into_iter().enumerate() {
            let tokens = tokenize(&format!("{} {}", entry.title, entry.body));
            let mut term_freq: HashMap<String, u32> = HashMap::new();
            for t in &tokens {
                *term_freq.entry(t.clone()).or_default() += 1;
            }
            for term in term_freq.keys() {
                *doc_freq.entry(term.clone()).or_default() += 1;
                postings.entry(term.clone()).or_default().push(pos);
            }
            total += tokens.len() as u64;
            indexed.push(IndexedEntry {
                entry,
                term_freq,
                length: tokens.len() as u32,
            });
        }
        let avg_len = if indexed.is_empty() {
            0.0
        } else {
            total as f64 / indexed.len() as f64
        };
        Self {
            entries: indexed,
            doc_freq,
            postings,
            avg_len,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn doc_freq(&self, term: &str) -> u32 {
        self.doc_freq.get(term).copied().unwrap_or(0)
    }

    pub fn term_freq(&self, entry_id: &str, term: &str) -> u32 {
        self.entries
            .iter()
            .find(|e| e.entry.entry_id == entry_id)
            .and_then(|e| e.term_freq.get(term).copied())
            .unwrap_or(0)
    }

    pub fn entry(&self, entry_id: &str) -> Option<&ManualEntry> {
        self.entries
            .binary_search_by(|e| e.entry.entry_id.as_str().cmp(entry_id))
            .ok()
            .map(|i| &self.entries[i].entry)
    }

    pub fn entries(&self) -> impl Iterator<Item = &ManualEntry> {
        self.entries.iter().map(|e| &e.entry)
    }

    fn idf(&self, term: &str) -> f64 {
        let n = self.entries.len() as f64;
        let df = self.doc_freq(term) as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    pub fn retrieve(&self, query: &str, kind: Option<DeviceKind>, k: usize) -> Vec<KnowledgeHit> {
        self.retrieve_filtered(query, RetrieveFilter { kind, section: None }, k)
    }

    /// Top-`k` entries with positive score, best first, ties by entry id.
    pub fn retrieve_filtered(&self, query: &str, filter: RetrieveFilter, k: usize) -> Vec<KnowledgeHit> {
        let terms: BTreeSet<String> = tokenize(query).into_iter().collect();
        if terms.is_empty() || k == 0 {
            return Vec::new();
        }
        let codes = query_codes(query);

        let mut scores: BTreeMap<usize, (f64, Vec<String>)> = BTreeMap::new();
        for term in &terms {
            let Some(posting) = self.postings.get(term) else { continue };
            let idf = self.idf(term);
            for &pos in posting {
                let doc = &self.entries[pos];
                let tf = doc.term_freq[term] as f64;
                let norm = 1.0 - BM25_B + BM25_B * doc.length as f64 / self.avg_len;
                let part = idf * tf * (BM25_K1 + 1.0) / (tf + BM25_K1 * norm);
                let slot = scores.entry(pos).or_insert((0.0, Vec::new()));
                slot.0 += part;
                slot.1.push(term.clone());
            }
        }

        let mut hits: Vec<KnowledgeHit> = scores
            .into_iter()
            .filter_map(|(pos, (mut score, matched_terms))| {
                let entry = &self.entries[pos].entry;
                if filter.kind.is_some_and(|k| entry.device_kind != k)
                    || filter.section.is_some_and(|s| entry.section != s)
                {
                    return None;
                }
                let code_match = entry.codes.iter().any(|c| codes.contains(c));
                if code_match {
                    score += CODE_BOOST;
                }
                (score > 0.0).then(|| KnowledgeHit {
                    entry_id: entry.entry_id.clone(),
                    manual_id: entry.manual_id.clone(),
                    section: entry.section,
                    score,
                    matched_terms,
                    code_match,
                })
            })
            .collect();
        hits.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then_with(|| a.entry_id.cmp(&b.entry_id))
        });
        hits.truncate(k);
        hits
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knowledge::parse_manual;

    fn fixture_entries() -> Vec<ManualEntry> {
        crate::simgen::fixture_manuals()
            .iter()
            .flat_map(|(id, kind, text)| parse_manual(text, id, *kind).unwrap())
            .collect()
    }

    #[test]
    fn tokenizer_drops_stopwords() {
        assert_eq!(tokenize("The card-reader is JAMMED, again!"), vec!["card", "reader", "jammed", "again"]);
        assert!(tokenize("the and of").is_empty());
        assert_eq!(STOPWORDS.len(), 30);
    }

    #[test]
    fn empty_index_scores_nothing() {
        let idx = KnowledgeIndex::build(&[]);
        assert!(idx.retrieve("card reader", None, 5).is_empty());
    }

    #[test]
    fn document_frequency_matches_direct_count() {
        let entries = fixture_entries();
        let idx = KnowledgeIndex::build(&entries);
        let direct = entries
            .iter()
            .filter(|e| tokenize(&format!("{} {}", e.title, e.body)).iter().any(|t| t == "reader"))
            .count();
        assert!(direct > 0);
        assert_eq!(idx.doc_freq("reader") as usize, direct);
    }

    #[test]
    fn code_query_ranks_matching_entry_first() {
        let idx = KnowledgeIndex::build(&fixture_entries());
        let hits = idx.retrieve("E102 card reader timeout", Some(DeviceKind::SelfServiceMachine), 3);
        let top = idx.entry(&hits[0].entry_id).unwrap();
        assert_eq!(top.section, Section::Troubleshooting);
        assert!(top.codes.contains(&"E102".to_string()));
        assert!(hits[0].code_match && hits[0].score >= CODE_BOOST);
        assert!(hits.windows(2).all(|w| w[0].score >= w[1].score));
    }

    #[test]
    fn stopword_query_and_large_k() {
        let entries = fixture_entries();
        let idx = KnowledgeIndex::build(&entries);
        assert!(idx.retrieve("the of and", None, 5).is_empty());
        let all = idx.retrieve("reader", None, 1000);
        let positive = entries
            .iter()
            .filter(|e| tokenize(&format!("{} {}", e.title, e.body)).contains(&"reader".to_string()))
            .count();
        assert_eq!(all.len(), positive);
    }

    #[test]
    fn code_dominance_on_fixtures() {
        let entries = fixture_entries();
        let idx = KnowledgeIndex::build(&entries);
        for spec in crate::taxonomy::FAULTS {
            let query = format!("{} {}", spec.code, spec.description);
            let hits = idx.retrieve(&query, None, entries.len());
            let first_miss = hits.iter().position(|h| !h.code_match).unwrap_or(hits.len());
            assert!(hits[first_miss..].iter().all(|h| !h.code_match), "{query}");
            assert!(first_miss > 0, "{query}");
        }
    }
}
