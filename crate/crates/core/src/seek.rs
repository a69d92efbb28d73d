//! De-anonymization of LLM output using the mapping recorded at hide time.
//!
//! Surrogates are located in three passes of decreasing strictness: exact
//! token-bounded match, case-insensitive match, then a fuzzy window match
//! scored with [`crate::textsim::similarity`]. Entries are processed
//! longest-surrogate-first and every output segment is replaced at most once.
//! Nothing is guessed: an entry that cannot be located is reported in
//! [`SeekResult::unresolved`].

use std::collections::{BTreeMap, HashMap};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hide::parse_placeholder;
use crate::text::{self, CharOffsets};
use crate::textsim::similarity_chars;
use crate::types::{
    AnonymizedDocument, EntityType, HideStrategy, MappingEntry, PlaceholderMode, SeekMatch, SeekResult,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeekConfig {
    pub fuzzy_threshold: f64,
    pub case_insensitive_pass: bool,
    /// How many characters a fuzzy window may be longer or shorter than the
    /// surrogate.
    pub window_slack: usize,
}

impl Default for SeekConfig {
    fn default() -> Self {
        SeekConfig {
            fuzzy_threshold: 0.80,
            case_insensitive_pass: true,
            window_slack: 2,
        }
    }
}

impl SeekConfig {
    pub fn validate(&self) -> Result<()> {
        if self.fuzzy_threshold > 0.0 && self.fuzzy_threshold <= 1.0 {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "fuzzy_threshold must be in (0, 1], got {}",
                self.fuzzy_threshold
            )))
        }
    }
}

/// Restores `llm_output` against `doc`. Label-based documents are handled by
/// [`seek_label`].
pub fn seek(doc: &AnonymizedDocument, llm_output: &str, cfg: &SeekConfig) -> SeekResult {
    match doc.mapping.strategy {
        HideStrategy::LabelBased { .. } => seek_label(doc, llm_output),
        HideStrategy::Generative => seek_mapping(&doc.mapping.entries, llm_output, cfg),
    }
}

struct Replacement {
    end: usize,
    text: String,
}

#[derive(Default)]
struct Claims {
    by_start: BTreeMap<usize, Replacement>,
    spans: BTreeMap<usize, usize>,
}

impl Claims {
    fn free(&self, start: usize, end: usize) -> bool {
        !text::overlaps_taken(&self.spans, start, end)
    }

    fn claim(&mut self, start: usize, end: usize, with: &str) {
        self.spans.insert(start, end);
        self.by_start.insert(
            start,
            Replacement {
                end,
                text: with.to_string(),
            },
        );
    }

    fn apply(&self, chars: &[char]) -> String {
        let mut out = String::with_capacity(chars.len());
        let mut pos = 0;
        for (&start, rep) in &self.by_start {
            out.extend(&chars[pos..start]);
            out.push_str(&rep.text);
            pos = rep.end;
        }
        out.extend(&chars[pos..]);
        out
    }
}

fn longest_first(entries: &[MappingEntry]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(entries[i].surrogate.chars().count()));
    order
}

/// Exact, token-bounded, longest-first replacement of every surrogate by its
/// original. This is the inverse of generative hiding.
pub fn restore_exact(anonymized: &str, entries: &[MappingEntry]) -> String {
    let chars: Vec<char> = anonymized.chars().collect();
    let mut claims = Claims::default();
    for i in longest_first(entries) {
        let needle: Vec<char> = entries[i].surrogate.chars().collect();
        for start in text::find_bounded(&chars, &needle) {
            let end = start + needle.len();
            if claims.free(start, end) {
                claims.claim(start, end, &entries[i].original);
            }
        }
    }
    claims.apply(&chars)
}

/// Mapping-inversion seek with exact, case-insensitive and fuzzy passes.
pub fn seek_mapping(entries: &[MappingEntry], llm_output: &str, cfg: &SeekConfig) -> SeekResult {
    let chars: Vec<char> = llm_output.chars().collect();
    let folded = text::fold_chars(&chars);
    let mut claims = Claims::default();
    let mut matches = Vec::new();
    let mut found = vec![false; entries.len()];

    for i in longest_first(entries) {
        let entry = &entries[i];
        let needle: Vec<char> = entry.surrogate.chars().collect();
        let mut hits: Vec<(usize, usize, f64)> = text::find_bounded(&chars, &needle)
            .into_iter()
            .map(|s| (s, s + needle.len(), 1.0))
            .filter(|&(s, e, _)| claims.free(s, e))
            .collect();
        if hits.is_empty() && cfg.case_insensitive_pass {
            let folded_needle = text::fold_chars(&needle);
            hits = text::find_bounded(&folded, &folded_needle)
                .into_iter()
                .map(|s| (s, s + needle.len(), 1.0))
                .filter(|&(s, e, _)| claims.free(s, e))
                .collect();
        }
        if hits.is_empty() {
            let target = if cfg.case_insensitive_pass {
                text::fold_chars(&needle)
            } else {
                needle.clone()
            };
            let hay = if cfg.case_insensitive_pass { &folded } else { &chars };
            while let Some(hit) = best_window(hay, &target, &claims, cfg) {
                claims.claim(hit.0, hit.1, &entry.original);
                record(&mut matches, entry, &chars, hit);
                found[i] = true;
            }
            continue;
        }
        for hit in hits {
            claims.claim(hit.0, hit.1, &entry.original);
            record(&mut matches, entry, &chars, hit);
            found[i] = true;
        }
    }

    matches.sort_by_key(|m: &(usize, SeekMatch)| m.0);
    SeekResult {
        text: claims.apply(&chars),
        restored: found.iter().filter(|f| **f).count(),
        unresolved: entries
            .iter()
            .zip(&found)
            .filter(|(_, f)| !**f)
            .map(|(e, _)| e.surrogate.clone())
            .collect(),
        excess: Vec::new(),
        matches: matches.into_iter().map(|(_, m)| m).collect(),
    }
}

fn record(matches: &mut Vec<(usize, SeekMatch)>, entry: &MappingEntry, chars: &[char], hit: (usize, usize, f64)) {
    matches.push((
        hit.0,
        SeekMatch {
            surrogate: entry.surrogate.clone(),
            matched_segment: chars[hit.0..hit.1].iter().collect(),
            confidence: hit.2,
        },
    ));
}

/// The unclaimed token-bounded window most similar to `target`, if its
/// similarity reaches the threshold. Ties go to the earliest window.
fn best_window(hay: &[char], target: &[char], claims: &Claims, cfg: &SeekConfig) -> Option<(usize, usize, f64)> {
    if target.is_empty() {
        return None;
    }
    let min_len = target.len().saturating_sub(cfg.window_slack).max(1);
    let max_len = target.len() + cfg.window_slack;
    let mut best: Option<(usize, usize, f64)> = None;
    for start in 0..hay.len() {
        if text::is_word(hay[start]) && start > 0 && text::is_word(hay[start - 1]) {
            continue;
        }
        if hay[start].is_whitespace() {
            continue;
        }
        for len in min_len..=max_len {
            let end = start + len;
            if end > hay.len() {
                break;
            }
            if !text::bounded(hay, start, end) || hay[end - 1].is_whitespace() || !claims.free(start, end) {
                continue;
            }
            let score = similarity_chars(&hay[start..end], target);
            if score >= cfg.fuzzy_threshold && best.is_none_or(|b| score > b.2) {
                best = Some((start, end, score));
            }
        }
    }
    best
}

static PLACEHOLDER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<[A-Z][A-Z0-9_]*>").unwrap());

/// Restores placeholders. Indexed placeholders map one-to-one to originals.
/// The k-th bare `<CODE>` in the output is read as the k-th mention of that
/// type in the document; when a type has several distinct originals that
/// reading is ambiguous and the match confidence is `1 / n_distinct`.
pub fn seek_label(doc: &AnonymizedDocument, llm_output: &str) -> SeekResult {
    let entries = &doc.mapping.entries;
    let mode = match doc.mapping.strategy {
        HideStrategy::LabelBased { placeholder_mode } => placeholder_mode,
        HideStrategy::Generative => PlaceholderMode::Indexed,
    };

    // Document mentions per type, in reading order, for bare placeholders.
    let mut mentions: HashMap<EntityType, Vec<(String, usize)>> = HashMap::new();
    let entry_index: HashMap<String, usize> = entries
        .iter()
        .enumerate()
        .map(|(i, e)| (text::fold_str(&e.original), i))
        .collect();
    if doc.spans.is_empty() {
        for (i, e) in entries.iter().enumerate() {
            mentions.entry(e.etype).or_default().push((e.original.clone(), i));
        }
    } else {
        for span in &doc.spans {
            if let Some(&i) = entry_index.get(&text::fold_str(&span.surface)) {
                mentions
                    .entry(entries[i].etype)
                    .or_default()
                    .push((span.surface.clone(), i));
            }
        }
    }
    let mut distinct: HashMap<EntityType, usize> = HashMap::new();
    for e in entries {
        *distinct.entry(e.etype).or_default() += 1;
    }
    let by_surrogate: HashMap<&str, usize> = entries
        .iter()
        .enumerate()
        .map(|(i, e)| (e.surrogate.as_str(), i))
        .collect();

    let chars: Vec<char> = llm_output.chars().collect();
    let offsets = CharOffsets::new(llm_output);
    let mut claims = Claims::default();
    let mut matches = Vec::new();
    let mut excess = Vec::new();
    let mut found = vec![false; entries.len()];
    let mut seen_bare: HashMap<EntityType, usize> = HashMap::new();

    for m in PLACEHOLDER.find_iter(llm_output) {
        let token = m.as_str();
        let (start, end) = (offsets.char_at(m.start()), offsets.char_at(m.end()));
        let resolved = match (mode, parse_placeholder(token)) {
            (PlaceholderMode::Indexed, Some((_, Some(_)))) => {
                by_surrogate.get(token).map(|&i| (entries[i].original.clone(), i, 1.0))
            }
            (PlaceholderMode::Bare, Some((etype, None))) => {
                let k = seen_bare.entry(etype).or_default();
                let hit = mentions.get(&etype).and_then(|v| v.get(*k)).map(|(surface, i)| {
                    let n = distinct.get(&etype).copied().unwrap_or(1).max(1);
                    (surface.clone(), *i, 1.0 / n as f64)
                });
                *k += 1;
                hit
            }
            _ => None,
        };
        match resolved {
            Some((original, i, confidence)) => {
                claims.claim(start, end, &original);
                found[i] = true;
                matches.push(SeekMatch {
                    surrogate: token.to_string(),
                    matched_segment: token.to_string(),
                    confidence,
                });
            }
            None => excess.push(token.to_string()),
        }
    }

    SeekResult {
        text: claims.apply(&chars),
        restored: found.iter().filter(|f| **f).count(),
        unresolved: entries
            .iter()
            .zip(&found)
            .filter(|(_, f)| !**f)
            .map(|(e, _)| e.surrogate.clone())
            .collect(),
        excess,
        matches,
    }
}
