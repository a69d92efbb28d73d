//! Character-level helpers shared by recognition, hiding and seeking.

use std::collections::BTreeMap;

/// Simple one-to-one case folding.
pub(crate) fn fold(c: char) -> char {
    c.to_lowercase().next().unwrap_or(c)
}

pub(crate) fn fold_str(s: &str) -> String {
    s.chars().map(fold).collect()
}

pub(crate) fn fold_chars(s: &[char]) -> Vec<char> {
    s.iter().copied().map(fold).collect()
}

pub(crate) fn is_word(c: char) -> bool {
    c.is_alphanumeric()
}

/// True when `text[start..end]` does not start or end inside a word.
pub(crate) fn bounded(text: &[char], start: usize, end: usize) -> bool {
    if start >= end || end > text.len() {
        return false;
    }
    if is_word(text[start]) && start > 0 && is_word(text[start - 1]) {
        return false;
    }
    if is_word(text[end - 1]) && end < text.len() && is_word(text[end]) {
        return false;
    }
    true
}

/// Start offsets of non-overlapping, token-bounded occurrences of `needle`.
pub(crate) fn find_bounded(hay: &[char], needle: &[char]) -> Vec<usize> {
    let mut out = Vec::new();
    if needle.is_empty() || needle.len() > hay.len() {
        return out;
    }
    let mut i = 0;
    while i + needle.len() <= hay.len() {
        if hay[i] == needle[0] && hay[i..i + needle.len()] == *needle && bounded(hay, i, i + needle.len()) {
            out.push(i);
            i += needle.len();
        } else {
            i += 1;
        }
    }
    out
}

pub(crate) fn contains_bounded(hay: &[char], needle: &[char]) -> bool {
    !find_bounded(hay, needle).is_empty()
}

/// Converts byte offsets of a string into character offsets.
pub(crate) struct CharOffsets {
    starts: Vec<usize>,
    byte_len: usize,
}

impl CharOffsets {
    pub(crate) fn new(s: &str) -> Self {
        CharOffsets {
            starts: s.char_indices().map(|(b, _)| b).collect(),
            byte_len: s.len(),
        }
    }

    pub(crate) fn char_at(&self, byte: usize) -> usize {
        if byte >= self.byte_len {
            return self.starts.len();
        }
        match self.starts.binary_search(&byte) {
            Ok(i) => i,
            Err(i) => i,
        }
    }
}

/// A candidate match competing for a region of text.
#[derive(Debug, Clone)]
pub(crate) struct Candidate<T> {
    pub start: usize,
    pub end: usize,
    pub rank: u32,
    pub value: T,
}

/// Greedy overlap resolution: longest first, then smaller start, then lower
/// rank. The result is sorted by start and pairwise disjoint.
pub(crate) fn select_longest<T>(mut cands: Vec<Candidate<T>>) -> Vec<Candidate<T>> {
    cands.sort_by(|a, b| {
        (b.end - b.start)
            .cmp(&(a.end - a.start))
            .then(a.start.cmp(&b.start))
            .then(a.rank.cmp(&b.rank))
    });
    let mut taken: BTreeMap<usize, usize> = BTreeMap::new();
    let mut keep = Vec::new();
    for cand in cands {
        if overlaps_taken(&taken, cand.start, cand.end) {
            continue;
        }
        taken.insert(cand.start, cand.end);
        keep.push(cand);
    }
    keep.sort_by_key(|c| c.start);
    keep
}

pub(crate) fn overlaps_taken(taken: &BTreeMap<usize, usize>, start: usize, end: usize) -> bool {
    if let Some((_, &prev_end)) = taken.range(..=start).next_back() {
        if prev_end > start {
            return true;
        }
    }
    taken.range(start..end).next().is_some()
}
