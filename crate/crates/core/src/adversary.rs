//! Re-identification attacks on anonymized text and the protection
//! evaluation built on them.
//!
//! An attacker sees only `e` and tries to produce `ĉ` close to `c`; the
//! privacy score of a document is `1 - similarity(c, ĉ)`. Attackers are
//! trained from `(c, spans, e)` triples the way an adversary with query
//! access to the hider would collect them.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use aho_corasick::{AhoCorasick, MatchKind};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::hide::{keyed_surrogate, parse_placeholder, HideEngine};
use crate::recognizer::Recognizer;
use crate::text::{self, Candidate};
use crate::textsim::privacy_score;
use crate::types::{AnonymizedDocument, EntitySpan, EntityType, HideStrategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Knowledge {
    BlackBox,
    WhiteBox,
}

pub trait Attacker: Send + Sync {
    fn name(&self) -> &str;
    fn knowledge(&self) -> Knowledge;
    /// Best guess at the original text. Deterministic for a fixed state.
    fn recover(&self, e: &str) -> String;
}

/// Returns `e` unchanged: the distance an attacker starts from.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityAttacker;

impl Attacker for IdentityAttacker {
    fn name(&self) -> &str {
        "identity"
    }
    fn knowledge(&self) -> Knowledge {
        Knowledge::BlackBox
    }
    fn recover(&self, e: &str) -> String {
        e.to_string()
    }
}

/// Knows the true mapping of every document: recovers `c` exactly.
#[derive(Debug, Clone, Default)]
pub struct OracleAttacker {
    by_e: HashMap<String, String>,
}

impl OracleAttacker {
    pub fn new(docs: &[AnonymizedDocument]) -> Self {
        OracleAttacker {
            by_e: docs
                .iter()
                .map(|d| (d.anonymized.clone(), d.original.clone()))
                .collect(),
        }
    }
}

impl Attacker for OracleAttacker {
    fn name(&self) -> &str {
        "oracle"
    }
    fn knowledge(&self) -> Knowledge {
        Knowledge::WhiteBox
    }
    fn recover(&self, e: &str) -> String {
        self.by_e.get(e).cloned().unwrap_or_else(|| e.to_string())
    }
}

/// One observation: a query the attacker sent and what came back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingPair {
    pub c: String,
    pub spans: Vec<EntitySpan>,
    pub e: String,
}

impl From<&AnonymizedDocument> for TrainingPair {
    fn from(doc: &AnonymizedDocument) -> Self {
        TrainingPair {
            c: doc.original.clone(),
            spans: doc.spans.clone(),
            e: doc.anonymized.clone(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SkipReport {
    pub skipped: Vec<(usize, String)>,
}

/// Observed surrogate to original counts, per entity type.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InversionTable {
    pub types: BTreeMap<EntityType, BTreeMap<String, BTreeMap<String, usize>>>,
    pub total_pairs: usize,
}

impl InversionTable {
    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn counts(&self, etype: EntityType, surrogate: &str) -> Option<&BTreeMap<String, usize>> {
        self.types.get(&etype)?.get(surrogate)
    }

    /// Original counts for `surrogate` pooled over types.
    fn pooled(&self) -> BTreeMap<&str, BTreeMap<&str, usize>> {
        let mut out: BTreeMap<&str, BTreeMap<&str, usize>> = BTreeMap::new();
        for table in self.types.values() {
            for (s, originals) in table {
                let slot = out.entry(s.as_str()).or_default();
                for (o, n) in originals {
                    *slot.entry(o.as_str()).or_default() += n;
                }
            }
        }
        out
    }

    /// Conditional probabilities `P(original | surrogate)` for one type.
    pub fn probabilities(&self, etype: EntityType, surrogate: &str) -> Vec<(String, f64)> {
        let Some(counts) = self.counts(etype, surrogate) else {
            return Vec::new();
        };
        let total: usize = counts.values().sum();
        counts
            .iter()
            .map(|(o, n)| (o.clone(), *n as f64 / total as f64))
            .collect()
    }

    /// Originals of `etype` ranked by how often they were seen, most first,
    /// ties by lexicographic order.
    pub fn type_prior(&self, etype: EntityType) -> Vec<String> {
        let mut totals: BTreeMap<&str, usize> = BTreeMap::new();
        if let Some(table) = self.types.get(&etype) {
            for originals in table.values() {
                for (o, n) in originals {
                    *totals.entry(o.as_str()).or_default() += n;
                }
            }
        }
        let mut ranked: Vec<(&str, usize)> = totals.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        ranked.into_iter().map(|(o, _)| o.to_string()).collect()
    }
}

/// Most frequent key; ties go to the lexicographically smallest.
fn argmax<'a>(counts: impl IntoIterator<Item = (&'a str, usize)>) -> Option<&'a str> {
    let mut best: Option<(&str, usize)> = None;
    for (o, n) in counts {
        match best {
            Some((bo, bn)) if n < bn || (n == bn && o >= bo) => {}
            _ => best = Some((o, n)),
        }
    }
    best.map(|(o, _)| o)
}

const ALIGN_BUDGET: usize = 20_000;

/// Recovers what each span of `c` became in `e` by matching the literal text
/// between spans. `None` when no alignment, or more than one, exists.
pub fn align(c: &str, spans: &[EntitySpan], e: &str) -> Option<Vec<String>> {
    let chars: Vec<char> = c.chars().collect();
    let mut literals = Vec::with_capacity(spans.len() + 1);
    let mut pos = 0;
    for s in spans {
        if s.start < pos || s.end > chars.len() {
            return None;
        }
        literals.push(chars[pos..s.start].iter().collect::<String>());
        pos = s.end;
    }
    literals.push(chars[pos..].iter().collect::<String>());
    let keys: Vec<String> = spans.iter().map(|s| text::fold_str(&s.surface)).collect();

    let rest = e.strip_prefix(literals[0].as_str())?;
    let mut search = Search {
        literals: &literals,
        keys: &keys,
        chosen: Vec::new(),
        solutions: Vec::new(),
        budget: ALIGN_BUDGET,
    };
    search.go(rest, 0);
    if search.budget == 0 || search.solutions.len() != 1 {
        return None;
    }
    search.solutions.pop()
}

struct Search<'a> {
    literals: &'a [String],
    keys: &'a [String],
    chosen: Vec<String>,
    solutions: Vec<Vec<String>>,
    budget: usize,
}

impl Search<'_> {
    fn go(&mut self, rest: &str, k: usize) {
        if self.solutions.len() > 1 || self.budget == 0 {
            return;
        }
        self.budget -= 1;
        if k == self.keys.len() {
            if rest.is_empty() {
                self.solutions.push(self.chosen.clone());
            }
            return;
        }
        let lit = self.literals[k + 1].as_str();
        let last = k + 1 == self.keys.len();
        let cuts: Vec<usize> = if last {
            rest.len()
                .checked_sub(lit.len())
                .filter(|&i| rest[i..] == *lit)
                .into_iter()
                .collect()
        } else if lit.is_empty() {
            rest.char_indices().map(|(i, _)| i).chain([rest.len()]).collect()
        } else {
            rest.match_indices(lit).map(|(i, _)| i).collect()
        };
        for cut in cuts {
            if cut == 0 || !rest.is_char_boundary(cut) {
                continue;
            }
            let value = &rest[..cut];
            // One entity, one rendering; distinct entities share a rendering
            // only as a bare placeholder.
            let ok = match (0..k).find(|&j| self.keys[j] == self.keys[k]) {
                Some(j) => self.chosen[j] == value,
                None => !self.chosen.iter().any(|v| v == value) || is_bare_placeholder(value),
            };
            if !ok {
                continue;
            }
            self.chosen.push(value.to_string());
            self.go(&rest[cut + lit.len()..], k + 1);
            self.chosen.pop();
        }
    }
}

fn is_bare_placeholder(s: &str) -> bool {
    matches!(parse_placeholder(s), Some((_, None)))
}

/// Counts every surrogate to original correspondence once per pair. Pairs
/// that do not align uniquely are skipped and reported.
pub fn train_inversion(pairs: &[TrainingPair]) -> (InversionTable, SkipReport) {
    let mut table = InversionTable::default();
    let mut report = SkipReport::default();
    for (i, pair) in pairs.iter().enumerate() {
        let Some(values) = align(&pair.c, &pair.spans, &pair.e) else {
            report.skipped.push((i, "no unique alignment between c and e".into()));
            continue;
        };
        let mut seen = std::collections::HashSet::new();
        for (span, surrogate) in pair.spans.iter().zip(values) {
            if !seen.insert((span.surface.clone(), surrogate.clone())) {
                continue;
            }
            *table
                .types
                .entry(span.etype)
                .or_default()
                .entry(surrogate)
                .or_default()
                .entry(span.surface.clone())
                .or_default() += 1;
        }
        table.total_pairs += 1;
    }
    (table, report)
}

/// Black-box attacker: replaces each known surrogate by the original it
/// most often stood for.
pub struct InversionAttacker {
    matcher: Option<AhoCorasick>,
    replacements: Vec<String>,
}

impl InversionAttacker {
    pub fn new(table: &InversionTable) -> Self {
        let pooled = table.pooled();
        let mut patterns = Vec::new();
        let mut replacements = Vec::new();
        for (s, counts) in &pooled {
            if let Some(o) = argmax(counts.iter().map(|(o, n)| (*o, *n))) {
                patterns.push(s.to_string());
                replacements.push(o.to_string());
            }
        }
        let matcher = (!patterns.is_empty()).then(|| {
            AhoCorasick::builder()
                .match_kind(MatchKind::Standard)
                .build(&patterns)
                .expect("surrogate automaton builds")
        });
        InversionAttacker { matcher, replacements }
    }
}

/// Token-bounded occurrences of the automaton's patterns in `e`, resolved
/// longest first, as byte ranges.
fn bounded_hits(ac: &AhoCorasick, e: &str) -> Vec<Candidate<usize>> {
    let cands: Vec<Candidate<usize>> = ac
        .find_overlapping_iter(e)
        .filter(|m| byte_bounded(e, m.start(), m.end()))
        .map(|m| Candidate {
            start: m.start(),
            end: m.end(),
            rank: m.pattern().as_u32(),
            value: m.pattern().as_usize(),
        })
        .collect();
    text::select_longest(cands)
}

fn byte_bounded(s: &str, start: usize, end: usize) -> bool {
    if !s.is_char_boundary(start) || !s.is_char_boundary(end) || start >= end {
        return false;
    }
    let first = s[start..].chars().next();
    let last = s[..end].chars().next_back();
    let before = s[..start].chars().next_back();
    let after = s[end..].chars().next();
    let word = |c: Option<char>| c.is_some_and(text::is_word);
    !(word(first) && word(before)) && !(word(last) && word(after))
}

fn splice(e: &str, hits: &[(usize, usize, &str)]) -> String {
    let mut out = String::with_capacity(e.len());
    let mut pos = 0;
    for &(s, t, with) in hits {
        out.push_str(&e[pos..s]);
        out.push_str(with);
        pos = t;
    }
    out.push_str(&e[pos..]);
    out
}

impl Attacker for InversionAttacker {
    fn name(&self) -> &str {
        "inversion"
    }
    fn knowledge(&self) -> Knowledge {
        Knowledge::BlackBox
    }
    fn recover(&self, e: &str) -> String {
        let Some(ac) = &self.matcher else {
            return e.to_string();
        };
        let hits: Vec<(usize, usize, &str)> = bounded_hits(ac, e)
            .into_iter()
            .map(|c| (c.start, c.end, self.replacements[c.value].as_str()))
            .collect();
        splice(e, &hits)
    }
}

/// `e` with every known surrogate replaced by its argmax original.
pub fn attack_inversion(table: &InversionTable, e: &str) -> String {
    InversionAttacker::new(table).recover(e)
}

/// White-box attacker holding the victim's hider: its recognizer finds
/// surrogates drawn from the shared word lists even when they never appeared
/// in training, placeholders of an indexed document get distinct originals,
/// and a candidate never maps to itself.
pub struct InformedAttacker {
    recognizer: Arc<Recognizer>,
    table: InversionTable,
    /// Surrogate to original, rebuilt by replaying the hider's draws over
    /// every original the attacker can name.
    codebook: HashMap<String, String>,
    pooled: BTreeMap<String, Vec<(String, usize)>>,
    priors: BTreeMap<EntityType, Vec<String>>,
}

impl InformedAttacker {
    pub fn new(engine: &HideEngine, table: InversionTable) -> Self {
        let pooled = table
            .pooled()
            .into_iter()
            .map(|(s, counts)| {
                let mut v: Vec<(String, usize)> = counts.into_iter().map(|(o, n)| (o.to_string(), n)).collect();
                v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
                (s.to_string(), v)
            })
            .collect();
        let priors = EntityType::ALL.iter().map(|&t| (t, table.type_prior(t))).collect();
        let mut names: Vec<(EntityType, &str)> = Vec::new();
        for (&t, by_surrogate) in &table.types {
            names.extend(by_surrogate.values().flat_map(|o| o.keys()).map(|o| (t, o.as_str())));
        }
        for (&t, g) in engine.recognizer.gazetteers() {
            names.extend(g.iter().map(|o| (t, o)));
        }
        names.sort_unstable();
        names.dedup();
        let mut codebook = HashMap::new();
        if engine.strategy == HideStrategy::Generative {
            let drawn: Vec<(String, &str)> = names
                .par_iter()
                .filter_map(|&(t, o)| keyed_surrogate(&engine.policy, t, o).map(|s| (s, o)))
                .collect();
            for (s, o) in drawn {
                codebook.entry(s).or_insert_with(|| o.to_string());
            }
        }
        InformedAttacker {
            recognizer: engine.recognizer.clone(),
            table,
            codebook,
            pooled,
            priors,
        }
    }

    pub fn table(&self) -> &InversionTable {
        &self.table
    }

    /// Observed pairs first, then the codebook. Only placeholders fall back to
    /// the type prior: a surrogate that is a real word is left alone rather
    /// than swapped for a blind guess.
    fn guess(&self, surface: &str, etype: Option<EntityType>, taken: &[String]) -> Option<String> {
        let free = |o: &&String| o.as_str() != surface && !taken.contains(o);
        if let Some(ranked) = self.pooled.get(surface) {
            if let Some((o, _)) = ranked.iter().find(|(o, _)| free(&o)) {
                return Some(o.clone());
            }
        }
        if let Some(o) = self.codebook.get(surface).filter(free) {
            return Some(o.clone());
        }
        parse_placeholder(surface)?;
        let prior = self.priors.get(&etype?)?;
        prior.iter().find(free).cloned()
    }
}

impl Attacker for InformedAttacker {
    fn name(&self) -> &str {
        "informed"
    }
    fn knowledge(&self) -> Knowledge {
        Knowledge::WhiteBox
    }
    fn recover(&self, e: &str) -> String {
        let chars: Vec<char> = e.chars().collect();
        // Placeholders, then whatever the victim's recognizer flags.
        let mut cands: Vec<Candidate<Option<EntityType>>> = Vec::new();
        let bytes_to_chars = text::CharOffsets::new(e);
        for m in placeholder_re().find_iter(e) {
            if let Some((t, _)) = parse_placeholder(m.as_str()) {
                cands.push(Candidate {
                    start: bytes_to_chars.char_at(m.start()),
                    end: bytes_to_chars.char_at(m.end()),
                    rank: 0,
                    value: Some(t),
                });
            }
        }
        for s in self.recognizer.recognize(e) {
            cands.push(Candidate {
                start: s.start,
                end: s.end,
                rank: 1,
                value: Some(s.etype),
            });
        }
        let mut taken: Vec<String> = Vec::new();
        let mut by_surface: HashMap<String, String> = HashMap::new();
        let mut out = String::with_capacity(e.len());
        let mut pos = 0;
        for c in text::select_longest(cands) {
            let surface: String = chars[c.start..c.end].iter().collect();
            let bare = matches!(parse_placeholder(&surface), Some((_, None)));
            let guess = match by_surface.get(&surface) {
                Some(g) => Some(g.clone()),
                None => {
                    let exclude: &[String] = if bare { &[] } else { &taken };
                    let g = self.guess(&surface, c.value, exclude);
                    if let Some(g) = &g {
                        taken.push(g.clone());
                        by_surface.insert(surface.clone(), g.clone());
                    }
                    g
                }
            };
            out.extend(&chars[pos..c.start]);
            out.push_str(guess.as_deref().unwrap_or(&surface));
            pos = c.end;
        }
        out.extend(&chars[pos..]);
        out
    }
}

fn placeholder_re() -> &'static regex::Regex {
    static RE: std::sync::LazyLock<regex::Regex> =
        std::sync::LazyLock::new(|| regex::Regex::new(r"<[A-Z][A-Z0-9_]*>").unwrap());
    &RE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtectionReport {
    pub strategy: String,
    pub attacker: String,
    pub n_docs: usize,
    pub mean_privacy_score: f64,
    /// Counts of per-document scores in ten equal-width buckets over [0, 1].
    pub histogram: [usize; 10],
    pub per_doc: Vec<f64>,
    pub excluded: Vec<(usize, String)>,
}

impl ProtectionReport {
    fn from_scores(strategy: &str, attacker: &str, scored: Vec<Result<f64, String>>) -> Self {
        let mut per_doc = Vec::new();
        let mut excluded = Vec::new();
        let mut histogram = [0; 10];
        for (i, r) in scored.into_iter().enumerate() {
            match r {
                Ok(s) => {
                    histogram[((s * 10.0) as usize).min(9)] += 1;
                    per_doc.push(s);
                }
                Err(msg) => excluded.push((i, msg)),
            }
        }
        let mean = if per_doc.is_empty() {
            0.0
        } else {
            per_doc.iter().sum::<f64>() / per_doc.len() as f64
        };
        ProtectionReport {
            strategy: strategy.to_string(),
            attacker: attacker.to_string(),
            n_docs: per_doc.len(),
            mean_privacy_score: mean,
            histogram,
            per_doc,
            excluded,
        }
    }
}

/// Recognize, hide and attack every document in parallel; documents the
/// hider rejects are excluded and listed.
pub fn evaluate_protection(corpus: &[String], engine: &HideEngine, attacker: &dyn Attacker) -> ProtectionReport {
    let scored: Vec<Result<f64, String>> = corpus
        .par_iter()
        .map(|c| {
            let doc = engine.anonymize(c).map_err(|e| e.to_string())?;
            Ok(privacy_score(c, &attacker.recover(&doc.anonymized)))
        })
        .collect();
    ProtectionReport::from_scores(engine.strategy.name(), attacker.name(), scored)
}

/// Same as [`evaluate_protection`] over documents hidden beforehand.
pub fn evaluate_hidden(docs: &[AnonymizedDocument], strategy: &str, attacker: &dyn Attacker) -> ProtectionReport {
    let scored = docs
        .par_iter()
        .map(|d| Ok(privacy_score(&d.original, &attacker.recover(&d.anonymized))))
        .collect();
    ProtectionReport::from_scores(strategy, attacker.name(), scored)
}
