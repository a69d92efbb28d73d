//! Privacy-entity extraction.
//!
//! Numeric and temporal types (DATE, TIME, MONEY, PERCENT, QUANTITY) come
//! from pattern rules; the named types come from gazetteers. Every candidate
//! must sit on token boundaries, and overlapping candidates are resolved
//! longest-first.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use aho_corasick::AhoCorasick;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{self, Candidate, CharOffsets};
use crate::types::{EntitySpan, EntityType, SpanSource};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CustomPattern {
    pub etype: EntityType,
    pub pattern: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecognizerConfig {
    pub enabled_types: BTreeSet<EntityType>,
    /// Extra gazetteer files, merged into the built-in lists.
    #[serde(rename = "gazetteers")]
    pub gazetteer_paths: BTreeMap<EntityType, PathBuf>,
    #[serde(rename = "patterns")]
    pub custom_patterns: Vec<CustomPattern>,
    pub builtin_gazetteers: bool,
}

impl Default for RecognizerConfig {
    fn default() -> Self {
        RecognizerConfig {
            enabled_types: EntityType::ALL.into_iter().collect(),
            gazetteer_paths: BTreeMap::new(),
            custom_patterns: Vec::new(),
            builtin_gazetteers: true,
        }
    }
}

impl RecognizerConfig {
    pub fn from_toml(src: &str) -> Result<Self> {
        toml::from_str(src).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        for etype in self.gazetteer_paths.keys() {
            if !self.enabled_types.contains(etype) {
                return Err(Error::Config(format!(
                    "gazetteer given for {etype}, which is not enabled"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gazetteer {
    pub etype: EntityType,
    pub entries: BTreeSet<String>,
}

impl Gazetteer {
    /// Parses the gazetteer file format: one entry per line, `#` starts a
    /// comment line.
    pub fn parse(etype: EntityType, src: &str) -> Result<Self> {
        let entries: BTreeSet<String> = src
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(String::from)
            .collect();
        if entries.is_empty() {
            return Err(Error::Config(format!("gazetteer for {etype} has no entries")));
        }
        Ok(Gazetteer { etype, entries })
    }

    pub fn load(etype: EntityType, path: &Path) -> Result<Self> {
        let src = fs::read_to_string(path)?;
        Gazetteer::parse(etype, &src)
    }

    /// The gazetteer shipped with the crate for `etype`, if any.
    pub fn builtin(etype: EntityType) -> Option<Self> {
        builtin_source(etype).map(|src| Gazetteer::parse(etype, src).expect("builtin gazetteer"))
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(String::as_str)
    }
}

fn builtin_source(etype: EntityType) -> Option<&'static str> {
    Some(match etype {
        EntityType::Person => include_str!("../data/gazetteers/person.txt"),
        EntityType::Org => include_str!("../data/gazetteers/org.txt"),
        EntityType::Gpe => include_str!("../data/gazetteers/gpe.txt"),
        EntityType::Loc => include_str!("../data/gazetteers/loc.txt"),
        EntityType::Norp => include_str!("../data/gazetteers/norp.txt"),
        EntityType::Fac => include_str!("../data/gazetteers/fac.txt"),
        EntityType::Law => include_str!("../data/gazetteers/law.txt"),
        EntityType::Language => include_str!("../data/gazetteers/language.txt"),
        EntityType::WorkOfArt => include_str!("../data/gazetteers/work_of_art.txt"),
        _ => return None,
    })
}

const MONTH: &str = r"(?:January|February|March|April|May|June|July|August|September|October|November|December|Jan\.?|Feb\.?|Mar\.?|Apr\.?|Jun\.?|Jul\.?|Aug\.?|Sept\.?|Sep\.?|Oct\.?|Nov\.?|Dec\.?)";
const NUMBER: &str = r"(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.\d+)?";

/// The shipped rule table as (type, pattern) pairs.
pub fn builtin_rules() -> Vec<(EntityType, String)> {
    let ord = r"(?:st|nd|rd|th)?";
    vec![
        (EntityType::Date, format!(r"{MONTH} \d{{1,2}}{ord},? \d{{4}}")),
        (EntityType::Date, format!(r"\d{{1,2}}{ord} {MONTH},? \d{{4}}")),
        (EntityType::Date, format!(r"{MONTH} \d{{4}}")),
        (EntityType::Date, format!(r"{MONTH} \d{{1,2}}{ord}")),
        (EntityType::Date, r"\d{4}-\d{2}-\d{2}".into()),
        (EntityType::Date, r"\d{1,2}/\d{1,2}/\d{4}".into()),
        (EntityType::Date, r"(?:19|20)\d{2}".into()),
        (
            EntityType::Date,
            r"(?:Monday|Tuesday|Wednesday|Thursday|Friday|Saturday|Sunday|yesterday|today|tomorrow|(?:last|next) (?:week|month|year))".into(),
        ),
        (
            EntityType::Time,
            r"\d{1,2}:\d{2}(?::\d{2})?(?: ?(?:[AaPp]\.[Mm]\.|[AaPp][Mm]))?".into(),
        ),
        (EntityType::Time, r"\d{1,2} ?(?:[AaPp]\.[Mm]\.|[AaPp][Mm])".into()),
        (EntityType::Time, r"(?:noon|midnight)".into()),
        (
            EntityType::Money,
            format!(r"[$€£¥] ?{NUMBER}(?: ?(?:million|billion|trillion|thousand|bn|m|k)\b)?"),
        ),
        (
            EntityType::Money,
            format!(r"{NUMBER} (?:(?:million|billion|trillion|thousand) )?(?:dollars|euros|yen|yuan|rupees|USD|EUR|GBP)\b"),
        ),
        (
            EntityType::Percent,
            format!(r"-?{NUMBER} ?(?:%|percent\b|per cent\b|percentage points\b)"),
        ),
        (
            EntityType::Quantity,
            format!(r"{NUMBER} ?(?:kg|kilograms?|g|grams?|tons?|tonnes?|lbs?|pounds|km|kilomet(?:er|re)s?|miles?|m|met(?:er|re)s?|cm|mm|feet|foot|ft|inches|lit(?:er|re)s?|gallons?|barrels?|acres?|hectares?|square (?:miles|kilomet(?:er|re)s|feet|met(?:er|re)s))\b"),
        ),
    ]
}

/// A compiled [`RecognizerConfig`]. Immutable; share freely.
#[derive(Debug, Clone)]
pub struct Recognizer {
    enabled: BTreeSet<EntityType>,
    rules: Vec<(EntityType, Regex)>,
    gazetteer: Option<AhoCorasick>,
    gazetteer_types: Vec<EntityType>,
    gazetteers: BTreeMap<EntityType, Gazetteer>,
}

impl Recognizer {
    pub fn new(cfg: &RecognizerConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rules = Vec::new();
        for (etype, pattern) in builtin_rules() {
            if cfg.enabled_types.contains(&etype) {
                let re = Regex::new(&pattern).map_err(|source| Error::Pattern { etype, source })?;
                rules.push((etype, re));
            }
        }
        for custom in &cfg.custom_patterns {
            let re = Regex::new(&custom.pattern).map_err(|source| Error::Pattern {
                etype: custom.etype,
                source,
            })?;
            if cfg.enabled_types.contains(&custom.etype) {
                rules.push((custom.etype, re));
            }
        }

        let mut gazetteers: BTreeMap<EntityType, Gazetteer> = BTreeMap::new();
        for &etype in &cfg.enabled_types {
            if cfg.builtin_gazetteers {
                if let Some(g) = Gazetteer::builtin(etype) {
                    gazetteers.insert(etype, g);
                }
            }
            if let Some(path) = cfg.gazetteer_paths.get(&etype) {
                let extra = Gazetteer::load(etype, path)?;
                gazetteers
                    .entry(etype)
                    .or_insert_with(|| Gazetteer {
                        etype,
                        entries: BTreeSet::new(),
                    })
                    .entries
                    .extend(extra.entries);
            }
        }

        // One surface, one type: the first type in enum order keeps it.
        let mut by_surface: BTreeMap<&str, EntityType> = BTreeMap::new();
        for (etype, g) in &gazetteers {
            for entry in g.iter() {
                by_surface.entry(entry).or_insert(*etype);
            }
        }
        let (patterns, gazetteer_types): (Vec<&str>, Vec<EntityType>) = by_surface.into_iter().unzip();
        let gazetteer = if patterns.is_empty() {
            None
        } else {
            Some(AhoCorasick::new(&patterns).map_err(|e| Error::Config(e.to_string()))?)
        };

        Ok(Recognizer {
            enabled: cfg.enabled_types.clone(),
            rules,
            gazetteer,
            gazetteer_types,
            gazetteers,
        })
    }

    /// All types enabled, built-in rules and gazetteers.
    pub fn builtin() -> Self {
        Recognizer::new(&RecognizerConfig::default()).expect("builtin recognizer")
    }

    pub fn enabled_types(&self) -> &BTreeSet<EntityType> {
        &self.enabled
    }

    pub fn gazetteers(&self) -> &BTreeMap<EntityType, Gazetteer> {
        &self.gazetteers
    }

    pub fn recognize(&self, text: &str) -> Vec<EntitySpan> {
        if text.is_empty() {
            return Vec::new();
        }
        let chars: Vec<char> = text.chars().collect();
        let offsets = CharOffsets::new(text);
        let mut cands: Vec<Candidate<EntityType>> = Vec::new();
        let mut push = |bstart: usize, bend: usize, etype: EntityType| {
            let start = offsets.char_at(bstart);
            let end = offsets.char_at(bend);
            if text::bounded(&chars, start, end) {
                cands.push(Candidate {
                    start,
                    end,
                    rank: etype as u32,
                    value: etype,
                });
            }
        };
        for (etype, re) in &self.rules {
            for m in re.find_iter(text) {
                push(m.start(), m.end(), *etype);
            }
        }
        if let Some(ac) = &self.gazetteer {
            for m in ac.find_overlapping_iter(text) {
                push(m.start(), m.end(), self.gazetteer_types[m.pattern().as_usize()]);
            }
        }
        text::select_longest(cands)
            .into_iter()
            .map(|c| EntitySpan {
                start: c.start,
                end: c.end,
                surface: chars[c.start..c.end].iter().collect(),
                etype: c.value,
                source: SpanSource::Auto,
            })
            .collect()
    }
}

pub fn recognize(text: &str, recognizer: &Recognizer) -> Vec<EntitySpan> {
    recognizer.recognize(text)
}

/// Combines recognized and user-specified spans. Manual spans always win;
/// overlapping automatic spans are resolved longest-first.
pub fn merge_spans(auto: &[EntitySpan], manual: &[EntitySpan]) -> Result<Vec<EntitySpan>> {
    let mut manual: Vec<EntitySpan> = manual.to_vec();
    manual.sort_by_key(|s| (s.start, s.end));
    for pair in manual.windows(2) {
        if pair[0].overlaps(&pair[1]) {
            return Err(Error::OverlappingManualSpans {
                first_start: pair[0].start,
                first_end: pair[0].end,
                second_start: pair[1].start,
                second_end: pair[1].end,
            });
        }
    }
    let auto_cands = auto
        .iter()
        .map(|s| Candidate {
            start: s.start,
            end: s.end,
            rank: s.etype as u32,
            value: s.clone(),
        })
        .collect();
    let mut out: Vec<EntitySpan> = text::select_longest(auto_cands)
        .into_iter()
        .map(|c| c.value)
        .filter(|a| !manual.iter().any(|m| m.overlaps(a)))
        .collect();
    out.extend(manual.into_iter().map(|mut m| {
        m.source = SpanSource::Manual;
        m
    }));
    out.sort_by_key(|s| s.start);
    Ok(out)
}

/// The ordered, de-duplicated list of entity surfaces (case-sensitive).
pub fn dedup_surfaces(spans: &[EntitySpan]) -> Vec<String> {
    let mut seen = BTreeSet::new();
    spans
        .iter()
        .filter(|s| seen.insert(s.surface.as_str()))
        .map(|s| s.surface.clone())
        .collect()
}

/// Spans for every token-bounded occurrence of user-named entities.
pub fn locate_manual(text: &str, entities: &[(String, EntityType)]) -> Vec<EntitySpan> {
    let chars: Vec<char> = text.chars().collect();
    let mut cands = Vec::new();
    for (surface, etype) in entities {
        let needle: Vec<char> = surface.chars().collect();
        for start in text::find_bounded(&chars, &needle) {
            cands.push(Candidate {
                start,
                end: start + needle.len(),
                rank: *etype as u32,
                value: *etype,
            });
        }
    }
    text::select_longest(cands)
        .into_iter()
        .map(|c| {
            EntitySpan::new(
                c.start,
                c.end,
                chars[c.start..c.end].iter().collect::<String>(),
                c.value,
            )
            .manual()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::validate_spans;

    pub(crate) const FBI: &str = "The FBI (Federal Bureau of Investigation) is currently investigating a cyber attack on a major corporation that occurred on August 10, 2023. The breach took place in the company's headquarters located in Washington DC. The FBI suspects that the attack was carried out by a foreign government.";

    fn found(text: &str) -> Vec<(String, EntityType)> {
        Recognizer::builtin()
            .recognize(text)
            .into_iter()
            .map(|s| (s.surface, s.etype))
            .collect()
    }

    #[test]
    fn empty_text() {
        assert!(Recognizer::builtin().recognize("").is_empty());
    }

    #[test]
    fn revenue_sentence_follows_rule_table() {
        assert_eq!(
            found("Revenue grew 12% to $3.5 million in 2021."),
            vec![
                ("12%".to_string(), EntityType::Percent),
                ("$3.5 million".to_string(), EntityType::Money),
                ("2021".to_string(), EntityType::Date),
            ]
        );
    }

    #[test]
    fn fbi_example_entities() {
        let spans = Recognizer::builtin().recognize(FBI);
        assert!(validate_spans(FBI, &spans).is_empty());
        let surfaces = dedup_surfaces(&spans);
        assert_eq!(
            surfaces,
            [
                "FBI",
                "Federal Bureau of Investigation",
                "August 10, 2023",
                "Washington DC"
            ]
        );
        let types: Vec<_> = spans.iter().map(|s| s.etype).collect();
        use EntityType::*;
        assert_eq!(types, [Org, Org, Date, Gpe, Org]);
    }

    #[test]
    fn token_boundaries() {
        assert!(found("USUALLY the BPM is fine").is_empty());
        assert_eq!(found("BP said").len(), 1);
    }

    #[test]
    fn rules_cover_times_and_quantities() {
        assert_eq!(
            found("At 10:30 a.m. the truck carried 12 tonnes"),
            vec![
                ("10:30 a.m.".to_string(), EntityType::Time),
                ("12 tonnes".to_string(), EntityType::Quantity),
            ]
        );
        assert_eq!(found("5 meters")[0].0, "5 meters");
    }

    #[test]
    fn longest_gazetteer_entry_wins() {
        assert_eq!(
            found("He moved to New York City."),
            vec![("New York City".to_string(), EntityType::Gpe)]
        );
    }

    #[test]
    fn disabled_types_are_ignored() {
        let cfg = RecognizerConfig {
            enabled_types: [EntityType::Date].into_iter().collect(),
            ..Default::default()
        };
        let r = Recognizer::new(&cfg).unwrap();
        let spans = r.recognize("The FBI met on August 10, 2023.");
        assert_eq!(spans.len(), 1);
        assert_eq!(spans[0].etype, EntityType::Date);
    }

    #[test]
    fn bad_pattern_fails_at_load() {
        let cfg = RecognizerConfig {
            custom_patterns: vec![CustomPattern {
                etype: EntityType::Law,
                pattern: "(unclosed".into(),
            }],
            ..Default::default()
        };
        assert!(matches!(Recognizer::new(&cfg), Err(Error::Pattern { .. })));
    }

    #[test]
    fn gazetteer_for_disabled_type_is_config_error() {
        let mut cfg = RecognizerConfig {
            enabled_types: [EntityType::Org].into_iter().collect(),
            ..Default::default()
        };
        cfg.gazetteer_paths.insert(EntityType::Person, "people.txt".into());
        assert!(matches!(Recognizer::new(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn gazetteer_file_format() {
        let g = Gazetteer::parse(EntityType::Org, "# comment\nAcme Corp\n\n  Initech  \n").unwrap();
        assert_eq!(g.entries.len(), 2);
        assert!(g.entries.contains("Initech"));
        assert!(Gazetteer::parse(EntityType::Org, "# only\n   \n").is_err());
    }

    #[test]
    fn config_file_keys() {
        let cfg = RecognizerConfig::from_toml(
            r#"
            enabled_types = ["ORG", "PERSON"]
            [gazetteers]
            ORG = "orgs.txt"
            [[patterns]]
            etype = "PERSON"
            pattern = "Agent [A-Z]\\w+"
            "#,
        )
        .unwrap();
        assert_eq!(cfg.enabled_types.len(), 2);
        assert_eq!(cfg.gazetteer_paths[&EntityType::Org], PathBuf::from("orgs.txt"));
        assert_eq!(cfg.custom_patterns[0].etype, EntityType::Person);
        assert!(cfg.builtin_gazetteers);
    }

    #[test]
    fn custom_pattern_is_used() {
        let cfg = RecognizerConfig {
            custom_patterns: vec![CustomPattern {
                etype: EntityType::Person,
                pattern: r"Agent [A-Z]\w+".into(),
            }],
            ..Default::default()
        };
        let r = Recognizer::new(&cfg).unwrap();
        let spans = r.recognize("Agent Mulder called.");
        assert_eq!(spans[0].surface, "Agent Mulder");
    }

    fn span(start: usize, end: usize, t: EntityType) -> EntitySpan {
        EntitySpan::new(start, end, "x".repeat(end - start), t)
    }

    #[test]
    fn merge_single_source() {
        let x = span(0, 3, EntityType::Person).manual();
        assert_eq!(merge_spans(&[], std::slice::from_ref(&x)).unwrap(), vec![x]);
    }

    #[test]
    fn merge_keeps_longer_auto_span() {
        // "New York" vs "New York City" starting at the same offset
        let short = span(0, 8, EntityType::Gpe);
        let long = span(0, 13, EntityType::Gpe);
        let merged = merge_spans(&[short, long.clone()], &[]).unwrap();
        assert_eq!(merged, vec![long]);
    }

    #[test]
    fn merge_manual_wins() {
        let auto = span(4, 7, EntityType::Org);
        let manual = span(4, 7, EntityType::Person).manual();
        let merged = merge_spans(&[auto], std::slice::from_ref(&manual)).unwrap();
        assert_eq!(merged, vec![manual]);
    }

    #[test]
    fn merge_rejects_overlapping_manual() {
        let a = span(0, 5, EntityType::Person).manual();
        let b = span(3, 8, EntityType::Org).manual();
        let err = merge_spans(&[], &[b, a]).unwrap_err();
        assert!(matches!(
            err,
            Error::OverlappingManualSpans {
                first_start: 0,
                first_end: 5,
                second_start: 3,
                second_end: 8
            }
        ));
    }

    #[test]
    fn dedup_is_case_sensitive_and_ordered() {
        let spans = vec![
            EntitySpan::new(0, 3, "FBI", EntityType::Org),
            EntitySpan::new(4, 7, "fbi", EntityType::Org),
            EntitySpan::new(8, 11, "FBI", EntityType::Org),
        ];
        assert_eq!(dedup_surfaces(&spans), ["FBI", "fbi"]);
        assert!(dedup_surfaces(&[]).is_empty());
    }

    #[test]
    fn manual_entities_found_everywhere() {
        let spans = locate_manual("Ada met Ada's friend Adam", &[("Ada".to_string(), EntityType::Person)]);
        let starts: Vec<_> = spans.iter().map(|s| s.start).collect();
        assert_eq!(starts, [0, 8]);
        assert!(spans.iter().all(|s| s.source == SpanSource::Manual));
    }
}
