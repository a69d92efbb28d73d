//! Anonymization: replace privacy entities by placeholders or surrogates.
//!
//! Both strategies replace *every* token-bounded occurrence of each entity
//! surface, not only the spans they are handed, so an entity mentioned twice
//! cannot leak through an unrecognized second mention.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::recognizer::{self, Gazetteer, Recognizer};
use crate::text;
use crate::types::{
    validate_spans, AnonymizedDocument, EntityMapping, EntitySpan, EntityType, HideStrategy, MappingEntry,
    PlaceholderMode,
};

mod surrogate;

/// Renders `<CODE>` or `<CODE_k>`.
pub fn placeholder(etype: EntityType, index: Option<usize>) -> String {
    match index {
        Some(k) => format!("<{}_{}>", etype.code(), k),
        None => format!("<{}>", etype.code()),
    }
}

/// Parses a placeholder token; `None` if `token` is not one.
pub fn parse_placeholder(token: &str) -> Option<(EntityType, Option<usize>)> {
    let inner = token.strip_prefix('<')?.strip_suffix('>')?;
    if let Ok(etype) = inner.parse::<EntityType>() {
        return Some((etype, None));
    }
    let (code, index) = inner.rsplit_once('_')?;
    if index.is_empty() || !index.bytes().all(|b| b.is_ascii_digit()) || index.starts_with('0') {
        return None;
    }
    let etype = code.parse::<EntityType>().ok()?;
    Some((etype, Some(index.parse().ok()?)))
}

/// Deterministic stand-in for a generative hiding model.
#[derive(Debug, Clone)]
pub struct SurrogatePolicy {
    pub seed: u64,
    pub surrogate_gazetteers: BTreeMap<EntityType, Gazetteer>,
    /// Relative jitter for MONEY, PERCENT and QUANTITY amounts.
    pub numeric_jitter: f64,
    /// Maximum absolute shift, in days, for DATE values.
    pub date_shift_days: i64,
}

impl SurrogatePolicy {
    /// Built-in word lists for every type, ±50% jitter, ±400 day shifts.
    pub fn with_seed(seed: u64) -> Self {
        let mut surrogate_gazetteers = BTreeMap::new();
        for etype in EntityType::ALL {
            let g = Gazetteer::builtin(etype)
                .or_else(|| surrogate::fallback_pool(etype))
                .expect("every type has a pool");
            surrogate_gazetteers.insert(etype, g);
        }
        SurrogatePolicy {
            seed,
            surrogate_gazetteers,
            numeric_jitter: 0.5,
            date_shift_days: 400,
        }
    }

    pub fn validate(&self, enabled: impl IntoIterator<Item = EntityType>) -> Result<()> {
        if !(self.numeric_jitter > 0.0 && self.numeric_jitter < 1.0) {
            return Err(Error::Config(format!(
                "numeric_jitter must be in (0, 1), got {}",
                self.numeric_jitter
            )));
        }
        if self.date_shift_days < 1 {
            return Err(Error::Config("date_shift_days must be at least 1".into()));
        }
        for etype in enabled {
            if !etype.is_rule_based() && !self.surrogate_gazetteers.contains_key(&etype) {
                return Err(Error::Config(format!("no surrogate source for {etype}")));
            }
        }
        Ok(())
    }
}

/// A distinct original (after case folding) and where it occurs.
struct Group {
    original: String,
    etype: EntityType,
}

struct Prepared {
    chars: Vec<char>,
    spans: Vec<EntitySpan>,
    /// Group index of each span.
    span_group: Vec<usize>,
    groups: Vec<Group>,
}

fn prepare(c: &str, spans: &[EntitySpan]) -> Result<Prepared> {
    if let Some(v) = validate_spans(c, spans).into_iter().next() {
        return Err(Error::InvalidSpans(v.to_string()));
    }
    let chars: Vec<char> = c.chars().collect();

    let mut groups: Vec<Group> = Vec::new();
    let mut by_key: HashMap<String, usize> = HashMap::new();
    for span in spans {
        let key = text::fold_str(&span.surface);
        by_key.entry(key).or_insert_with(|| {
            groups.push(Group {
                original: span.surface.clone(),
                etype: span.etype,
            });
            groups.len() - 1
        });
    }

    // Cover further exact mentions of every surface, longest surfaces first.
    let mut taken: BTreeMap<usize, usize> = spans.iter().map(|s| (s.start, s.end)).collect();
    let mut all: Vec<EntitySpan> = spans.to_vec();
    let mut surfaces: Vec<&EntitySpan> = Vec::new();
    let mut seen = HashSet::new();
    for span in spans {
        if seen.insert(span.surface.as_str()) {
            surfaces.push(span);
        }
    }
    surfaces.sort_by_key(|s| std::cmp::Reverse(s.surface.chars().count()));
    for proto in surfaces {
        let needle: Vec<char> = proto.surface.chars().collect();
        for start in text::find_bounded(&chars, &needle) {
            let end = start + needle.len();
            if !text::overlaps_taken(&taken, start, end) {
                taken.insert(start, end);
                let mut extra = proto.clone();
                extra.start = start;
                extra.end = end;
                all.push(extra);
            }
        }
    }
    all.sort_by_key(|s| s.start);
    let span_group = all.iter().map(|s| by_key[&text::fold_str(&s.surface)]).collect();
    Ok(Prepared {
        chars,
        spans: all,
        span_group,
        groups,
    })
}

fn render(prep: &Prepared, replacement: &[String]) -> String {
    let mut out = String::with_capacity(prep.chars.len());
    let mut pos = 0;
    for (span, &g) in prep.spans.iter().zip(&prep.span_group) {
        out.extend(&prep.chars[pos..span.start]);
        out.push_str(&replacement[g]);
        pos = span.end;
    }
    out.extend(&prep.chars[pos..]);
    out
}

/// Label-based hiding: every entity becomes `<CODE>` or `<CODE_k>`.
pub fn hide_label(c: &str, spans: &[EntitySpan], mode: PlaceholderMode) -> Result<AnonymizedDocument> {
    hide_label_continuing(c, spans, mode, &EntityMapping::new(HideStrategy::label(mode), 0))
}

/// Label-based hiding that reuses the placeholders of `prior` and continues
/// its numbering, for multi-message requests.
pub fn hide_label_continuing(
    c: &str,
    spans: &[EntitySpan],
    mode: PlaceholderMode,
    prior: &EntityMapping,
) -> Result<AnonymizedDocument> {
    let prep = prepare(c, spans)?;
    let mut next_index: HashMap<EntityType, usize> = HashMap::new();
    for entry in &prior.entries {
        if let Some((etype, Some(k))) = parse_placeholder(&entry.surrogate) {
            let n = next_index.entry(etype).or_insert(1);
            *n = (*n).max(k + 1);
        }
    }
    let mut mapping = EntityMapping::new(HideStrategy::label(mode), prior.seed);
    let mut replacement = Vec::with_capacity(prep.groups.len());
    for group in &prep.groups {
        let surrogate = match (mode, prior.find_original(&group.original)) {
            (PlaceholderMode::Indexed, Some(prev)) => prev.surrogate.clone(),
            (PlaceholderMode::Indexed, None) => {
                let n = next_index.entry(group.etype).or_insert(1);
                let p = placeholder(group.etype, Some(*n));
                *n += 1;
                p
            }
            (PlaceholderMode::Bare, _) => placeholder(group.etype, None),
        };
        mapping.entries.push(MappingEntry {
            original: group.original.clone(),
            surrogate: surrogate.clone(),
            etype: group.etype,
        });
        replacement.push(surrogate);
    }
    Ok(AnonymizedDocument {
        original: c.to_string(),
        anonymized: render(&prep, &replacement),
        mapping,
        spans: prep.spans,
    })
}

const MAX_ATTEMPTS: usize = 16;

/// Generative hiding: every entity becomes a same-type surrogate drawn from
/// `policy`. Entries in `forced` are used verbatim for matching originals;
/// all of their surrogates are kept out of the fresh draws.
pub fn hide_generative(
    c: &str,
    spans: &[EntitySpan],
    policy: &SurrogatePolicy,
    forced: &[MappingEntry],
) -> Result<AnonymizedDocument> {
    let prep = prepare(c, spans)?;
    let original_keys: HashSet<String> = prep.groups.iter().map(|g| text::fold_str(&g.original)).collect();

    let mut forced_by_key: HashMap<String, &MappingEntry> = HashMap::new();
    let mut forced_surrogates = HashSet::new();
    for entry in forced {
        let skey = text::fold_str(&entry.surrogate);
        if original_keys.contains(&skey) {
            return Err(Error::ForcedMapping(format!(
                "surrogate {:?} is an entity of this text",
                entry.surrogate
            )));
        }
        if !forced_surrogates.insert(skey) {
            return Err(Error::ForcedMapping(format!(
                "surrogate {:?} is assigned twice",
                entry.surrogate
            )));
        }
        forced_by_key.insert(text::fold_str(&entry.original), entry);
    }
    for group in &prep.groups {
        if let Some(entry) = forced_by_key.get(&text::fold_str(&group.original)) {
            if entry.etype != group.etype {
                return Err(Error::ForcedMapping(format!(
                    "{:?} is {} in the text but {} in the forced mapping",
                    group.original, group.etype, entry.etype
                )));
            }
        }
    }

    let canonical: Vec<String> = prep.groups.iter().map(|g| g.original.clone()).collect();
    let expected = render(&prep, &canonical);
    let folded_text = text::fold_chars(&prep.chars);
    let folded_originals: Vec<Vec<char>> = prep
        .groups
        .iter()
        .map(|g| text::fold_str(&g.original).chars().collect())
        .collect();
    let needs_draw = prep
        .groups
        .iter()
        .any(|g| !forced_by_key.contains_key(&text::fold_str(&g.original)));
    let attempts = if needs_draw { MAX_ATTEMPTS } else { 1 };

    for attempt in 0..attempts {
        let mut draw = surrogate::Draw {
            policy,
            rng: ChaCha8Rng::from_seed([0; 32]),
            folded_text: &folded_text,
            folded_originals: &folded_originals,
            used: forced_surrogates.clone(),
        };
        let mut mapping = EntityMapping::new(HideStrategy::Generative, policy.seed);
        let mut replacement = Vec::with_capacity(prep.groups.len());
        for group in &prep.groups {
            let surrogate = match forced_by_key.get(&text::fold_str(&group.original)) {
                Some(entry) => entry.surrogate.clone(),
                None => {
                    draw.rng =
                        ChaCha8Rng::from_seed(derive_seed(policy.seed, attempt as u64, group.etype, &group.original));
                    draw.surrogate(group.etype, &group.original)?
                }
            };
            mapping.entries.push(MappingEntry {
                original: group.original.clone(),
                surrogate: surrogate.clone(),
                etype: group.etype,
            });
            replacement.push(surrogate);
        }
        let anonymized = render(&prep, &replacement);
        if invert_generative(&anonymized, &mapping) == expected {
            return Ok(AnonymizedDocument {
                original: c.to_string(),
                anonymized,
                mapping,
                spans: prep.spans,
            });
        }
    }
    Err(Error::Unstable(attempts))
}

/// The surrogate `policy` would draw for `original` in a text holding no
/// other entity. Generative hiding agrees with this unless the draw
/// collides with the surrounding text.
pub fn keyed_surrogate(policy: &SurrogatePolicy, etype: EntityType, original: &str) -> Option<String> {
    let folded_original: Vec<char> = text::fold_str(original).chars().collect();
    let mut draw = surrogate::Draw {
        policy,
        rng: ChaCha8Rng::from_seed(derive_seed(policy.seed, 0, etype, original)),
        folded_text: &folded_original,
        folded_originals: std::slice::from_ref(&folded_original),
        used: HashSet::new(),
    };
    draw.surrogate(etype, original).ok()
}

/// Draws are keyed by the entity rather than the document, so one seed
/// maps a given surface to the same surrogate wherever it appears.
fn derive_seed(seed: u64, attempt: u64, etype: EntityType, original: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(b"hideseek/surrogates");
    h.update(seed.to_le_bytes());
    h.update(attempt.to_le_bytes());
    h.update(etype.code().as_bytes());
    h.update([0]);
    h.update(text::fold_str(original).as_bytes());
    h.finalize().into()
}

/// Longest-surrogate-first inverse substitution of a generative mapping.
pub fn invert_generative(anonymized: &str, mapping: &EntityMapping) -> String {
    crate::seek::restore_exact(anonymized, &mapping.entries)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LeakageReport {
    pub passed: bool,
    pub offending: Vec<String>,
}

/// Originals of `doc.mapping` that still occur, token-bounded, in the
/// anonymized text.
pub fn leaked_originals(doc: &AnonymizedDocument) -> Vec<String> {
    leaked_in(&doc.anonymized, doc.mapping.originals())
}

pub fn leaked_in<'a>(payload: &str, originals: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    let hay: Vec<char> = payload.chars().collect();
    originals
        .into_iter()
        .filter(|o| {
            let needle: Vec<char> = o.chars().collect();
            text::contains_bounded(&hay, &needle)
        })
        .map(String::from)
        .collect()
}

pub fn assert_leakage_free(doc: &AnonymizedDocument) -> LeakageReport {
    let offending = leaked_originals(doc);
    LeakageReport {
        passed: offending.is_empty(),
        offending,
    }
}

/// Recognition plus hiding under one strategy; the unit the gateway,
/// harness and CLI work with.
#[derive(Debug, Clone)]
pub struct HideEngine {
    pub recognizer: Arc<Recognizer>,
    pub strategy: HideStrategy,
    pub policy: SurrogatePolicy,
}

impl HideEngine {
    pub fn new(recognizer: Arc<Recognizer>, strategy: HideStrategy, policy: SurrogatePolicy) -> Result<Self> {
        if strategy == HideStrategy::Generative {
            policy.validate(recognizer.enabled_types().iter().copied())?;
        }
        Ok(HideEngine {
            recognizer,
            strategy,
            policy,
        })
    }

    pub fn builtin(strategy: HideStrategy, seed: u64) -> Result<Self> {
        HideEngine::new(
            Arc::new(Recognizer::builtin()),
            strategy,
            SurrogatePolicy::with_seed(seed),
        )
    }

    pub fn anonymize(&self, c: &str) -> Result<AnonymizedDocument> {
        let spans = self.recognizer.recognize(c);
        self.hide(c, &spans, &[])
    }

    /// Hides `c` with recognized spans merged with `manual` ones.
    pub fn anonymize_with(
        &self,
        c: &str,
        manual: &[EntitySpan],
        prior: Option<&EntityMapping>,
    ) -> Result<AnonymizedDocument> {
        let auto = self.recognizer.recognize(c);
        let spans = recognizer::merge_spans(&auto, manual)?;
        let forced = prior.map(|m| m.entries.as_slice()).unwrap_or(&[]);
        self.hide(c, &spans, forced)
    }

    pub fn hide(&self, c: &str, spans: &[EntitySpan], prior: &[MappingEntry]) -> Result<AnonymizedDocument> {
        match self.strategy {
            HideStrategy::LabelBased { placeholder_mode } => {
                let mut prior_mapping = EntityMapping::new(self.strategy, self.policy.seed);
                prior_mapping.entries = prior.to_vec();
                hide_label_continuing(c, spans, placeholder_mode, &prior_mapping)
            }
            HideStrategy::Generative => hide_generative(c, spans, &self.policy, prior),
        }
    }
}

/// Uniform non-zero integer in `[-max_abs, max_abs]`.
pub(crate) fn nonzero_in(rng: &mut impl Rng, max_abs: i64) -> i64 {
    let v = rng.random_range(1..=max_abs.max(1));
    if rng.random_bool(0.5) {
        v
    } else {
        -v
    }
}

#[cfg(test)]
mod tests;
