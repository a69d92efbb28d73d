//! Shared domain types.
//!
//! Offsets in [`EntitySpan`] count Unicode scalar values, not bytes.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::text;

/// The fourteen privacy-entity categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EntityType {
    /// Absolute or relative dates or periods.
    Date,
    /// Monetary values, including unit.
    Money,
    Percent,
    /// Measurements, as of weight or distance.
    Quantity,
    /// Times smaller than a day.
    Time,
    /// Countries, cities, states.
    Gpe,
    /// Non-GPE locations, mountain ranges, bodies of water.
    Loc,
    Person,
    /// Titles of books, songs, etc.
    WorkOfArt,
    /// Companies, agencies, institutions.
    Org,
    /// Nationalities or religious or political groups.
    Norp,
    /// Named documents made into laws.
    Law,
    /// Buildings, airports, highways, bridges.
    Fac,
    Language,
}

impl EntityType {
    pub const ALL: [EntityType; 14] = [
        EntityType::Date,
        EntityType::Money,
        EntityType::Percent,
        EntityType::Quantity,
        EntityType::Time,
        EntityType::Gpe,
        EntityType::Loc,
        EntityType::Person,
        EntityType::WorkOfArt,
        EntityType::Org,
        EntityType::Norp,
        EntityType::Law,
        EntityType::Fac,
        EntityType::Language,
    ];

    pub fn code(self) -> &'static str {
        match self {
            EntityType::Date => "DATE",
            EntityType::Money => "MONEY",
            EntityType::Percent => "PERCENT",
            EntityType::Quantity => "QUANTITY",
            EntityType::Time => "TIME",
            EntityType::Gpe => "GPE",
            EntityType::Loc => "LOC",
            EntityType::Person => "PERSON",
            EntityType::WorkOfArt => "WORK_OF_ART",
            EntityType::Org => "ORG",
            EntityType::Norp => "NORP",
            EntityType::Law => "LAW",
            EntityType::Fac => "FAC",
            EntityType::Language => "LANGUAGE",
        }
    }

    /// Types whose surrogates are derived from the value itself (shifted
    /// dates, jittered amounts) rather than drawn from a word list.
    pub fn is_rule_based(self) -> bool {
        matches!(
            self,
            EntityType::Date | EntityType::Money | EntityType::Percent | EntityType::Quantity | EntityType::Time
        )
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for EntityType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EntityType::ALL
            .iter()
            .copied()
            .find(|t| t.code() == s)
            .ok_or_else(|| Error::UnknownEntityType(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpanSource {
    #[default]
    Auto,
    Manual,
}

/// A located privacy entity. `start..end` is a half-open character range.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    pub surface: String,
    pub etype: EntityType,
    #[serde(default)]
    pub source: SpanSource,
}

impl EntitySpan {
    pub fn new(start: usize, end: usize, surface: impl Into<String>, etype: EntityType) -> Self {
        EntitySpan {
            start,
            end,
            surface: surface.into(),
            etype,
            source: SpanSource::Auto,
        }
    }

    pub fn manual(mut self) -> Self {
        self.source = SpanSource::Manual;
        self
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn overlaps(&self, other: &EntitySpan) -> bool {
        self.start < other.end && other.start < self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlaceholderMode {
    /// `<ORG>`
    Bare,
    /// `<ORG_1>`, `<ORG_2>`, ...
    Indexed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HideStrategy {
    LabelBased { placeholder_mode: PlaceholderMode },
    Generative,
}

impl HideStrategy {
    pub fn label(mode: PlaceholderMode) -> Self {
        HideStrategy::LabelBased { placeholder_mode: mode }
    }

    pub fn generative() -> Self {
        HideStrategy::Generative
    }

    pub fn is_label_based(&self) -> bool {
        matches!(self, HideStrategy::LabelBased { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            HideStrategy::LabelBased {
                placeholder_mode: PlaceholderMode::Bare,
            } => "label-based",
            HideStrategy::LabelBased {
                placeholder_mode: PlaceholderMode::Indexed,
            } => "label-based (indexed)",
            HideStrategy::Generative => "generative",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MappingEntry {
    pub original: String,
    pub surrogate: String,
    pub etype: EntityType,
}

/// The original-to-surrogate table recorded when a text is hidden.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMapping {
    pub entries: Vec<MappingEntry>,
    pub strategy: HideStrategy,
    pub seed: u64,
}

impl EntityMapping {
    pub fn new(strategy: HideStrategy, seed: u64) -> Self {
        EntityMapping {
            entries: Vec::new(),
            strategy,
            seed,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn originals(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.original.as_str())
    }

    pub fn find_original(&self, original: &str) -> Option<&MappingEntry> {
        let key = text::fold_str(original);
        self.entries.iter().find(|e| text::fold_str(&e.original) == key)
    }
}

/// A hidden text together with everything needed to restore it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnonymizedDocument {
    #[serde(rename = "c")]
    pub original: String,
    #[serde(rename = "e")]
    pub anonymized: String,
    pub mapping: EntityMapping,
    pub spans: Vec<EntitySpan>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaskType {
    Translate,
    Abstract,
    Polish,
    Classify,
}

impl TaskType {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskType::Translate => "Translate",
            TaskType::Abstract => "Abstract",
            TaskType::Polish => "Polish",
            TaskType::Classify => "Classify",
        }
    }
}

impl fmt::Display for TaskType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "translate" => Ok(TaskType::Translate),
            "abstract" => Ok(TaskType::Abstract),
            "polish" => Ok(TaskType::Polish),
            "classify" => Ok(TaskType::Classify),
            _ => Err(Error::Config(format!("unknown task {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeekMatch {
    pub surrogate: String,
    pub matched_segment: String,
    pub confidence: f64,
}

/// Output of de-anonymization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeekResult {
    #[serde(rename = "d")]
    pub text: String,
    /// Mapping entries restored at least once.
    pub restored: usize,
    /// Surrogates of mapping entries that were not found in the output.
    pub unresolved: Vec<String>,
    /// Placeholder-looking tokens in the output that belong to no entry.
    #[serde(default)]
    pub excess: Vec<String>,
    pub matches: Vec<SeekMatch>,
}

/// One corpus row carrying every pipeline symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineRecord {
    pub c: String,
    pub p: Vec<EntitySpan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<String>,
    pub task: TaskType,
}

impl PipelineRecord {
    pub fn new(c: impl Into<String>, p: Vec<EntitySpan>, task: TaskType) -> Self {
        PipelineRecord {
            c: c.into(),
            p,
            s: None,
            e: None,
            l: None,
            r: None,
            d: None,
            task,
        }
    }
}

/// A broken invariant, named by the rule it breaks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub invariant: &'static str,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.invariant, self.detail)
    }
}

pub const SPAN_OFFSETS: &str = "span-offsets";
pub const SPAN_SURFACE: &str = "span-surface";
pub const SPAN_ORDER: &str = "span-order";
pub const STAGE_ORDER: &str = "stage-order";
pub const ORIGINALS_DISTINCT: &str = "originals-distinct";
pub const SURROGATES_DISTINCT: &str = "surrogates-distinct";
pub const COLLISION_FREE: &str = "collision-free";
pub const PLACEHOLDER_FORM: &str = "placeholder-form";
pub const LEAKAGE_FREE: &str = "leakage-free";
pub const ROUND_TRIP: &str = "round-trip";

/// Checks offsets, surfaces and ordering of `spans` against `text`.
pub fn validate_spans(text: &str, spans: &[EntitySpan]) -> Vec<Violation> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    for span in spans {
        if span.start >= span.end || span.end > chars.len() {
            out.push(Violation {
                invariant: SPAN_OFFSETS,
                detail: format!("[{}, {}) outside text of length {}", span.start, span.end, chars.len()),
            });
            continue;
        }
        let actual: String = chars[span.start..span.end].iter().collect();
        if actual != span.surface {
            out.push(Violation {
                invariant: SPAN_SURFACE,
                detail: format!(
                    "surface {:?} but text has {:?} at [{}, {})",
                    span.surface, actual, span.start, span.end
                ),
            });
        }
    }
    for pair in spans.windows(2) {
        if pair[1].start < pair[0].end {
            out.push(Violation {
                invariant: SPAN_ORDER,
                detail: format!(
                    "[{}, {}) is not before [{}, {})",
                    pair[0].start, pair[0].end, pair[1].start, pair[1].end
                ),
            });
        }
    }
    out
}

pub fn validate_record(rec: &PipelineRecord) -> Vec<Violation> {
    let mut out = validate_spans(&rec.c, &rec.p);
    // Each later symbol needs the ones it is computed from.
    type Need<'a> = (&'a str, bool, &'a [(&'a str, bool)]);
    let needs: [Need; 5] = [
        ("s", rec.s.is_some(), &[]),
        ("e", rec.e.is_some(), &[]),
        ("l", rec.l.is_some(), &[("e", rec.e.is_some())]),
        ("r", rec.r.is_some(), &[("l", rec.l.is_some())]),
        ("d", rec.d.is_some(), &[("l", rec.l.is_some())]),
    ];
    for (name, present, deps) in needs {
        if !present {
            continue;
        }
        for (dep, dep_present) in deps {
            if !dep_present {
                out.push(Violation {
                    invariant: STAGE_ORDER,
                    detail: format!("{name} is populated but {dep} is not"),
                });
            }
        }
    }
    out
}

pub fn validate_mapping(mapping: &EntityMapping) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut originals = HashSet::new();
    for entry in &mapping.entries {
        if !originals.insert(text::fold_str(&entry.original)) {
            out.push(Violation {
                invariant: ORIGINALS_DISTINCT,
                detail: format!("original {:?} appears twice", entry.original),
            });
        }
    }
    let bare = matches!(
        mapping.strategy,
        HideStrategy::LabelBased {
            placeholder_mode: PlaceholderMode::Bare
        }
    );
    let mut surrogates = HashSet::new();
    for entry in &mapping.entries {
        if !bare && !surrogates.insert(entry.surrogate.as_str()) {
            out.push(Violation {
                invariant: SURROGATES_DISTINCT,
                detail: format!("surrogate {:?} appears twice", entry.surrogate),
            });
        }
        if originals.contains(&text::fold_str(&entry.surrogate)) {
            out.push(Violation {
                invariant: COLLISION_FREE,
                detail: format!("surrogate {:?} is also an original", entry.surrogate),
            });
        }
        if let HideStrategy::LabelBased { placeholder_mode } = mapping.strategy {
            match crate::hide::parse_placeholder(&entry.surrogate) {
                Some((etype, index))
                    if etype == entry.etype && index.is_some() == (placeholder_mode == PlaceholderMode::Indexed) => {}
                _ => out.push(Violation {
                    invariant: PLACEHOLDER_FORM,
                    detail: format!(
                        "{:?} is not a {} placeholder for {}",
                        entry.surrogate,
                        match placeholder_mode {
                            PlaceholderMode::Bare => "bare",
                            PlaceholderMode::Indexed => "indexed",
                        },
                        entry.etype
                    ),
                }),
            }
        }
    }
    out
}

/// Every invariant of an [`AnonymizedDocument`], including leakage and, for
/// generative documents, invertibility.
pub fn validate_document(doc: &AnonymizedDocument) -> Vec<Violation> {
    let mut out = validate_spans(&doc.original, &doc.spans);
    out.extend(validate_mapping(&doc.mapping));
    for leaked in crate::hide::leaked_originals(doc) {
        out.push(Violation {
            invariant: LEAKAGE_FREE,
            detail: format!("{leaked:?} appears in the anonymized text"),
        });
    }
    if doc.mapping.strategy == HideStrategy::Generative
        && crate::hide::invert_generative(&doc.anonymized, &doc.mapping) != doc.original
    {
        out.push(Violation {
            invariant: ROUND_TRIP,
            detail: "inverse substitution does not reproduce the original".into(),
        });
    }
    out
}
