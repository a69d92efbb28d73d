//! Offline backends. Each one reads the prompt's text slot (see
//! [`parse_prompt`]) and answers deterministically.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::LazyLock;

use regex::Regex;

use super::prompt::{parse_prompt, Payload};
use super::BackendError;
use crate::hide::{parse_placeholder, HideEngine, SurrogatePolicy};
use crate::recognizer::{self, Recognizer};
use crate::textsim::tokenize;
use crate::types::{EntityType, HideStrategy};

const BUILTIN_LEXICON: &str = include_str!("../../data/lexicon_fr.tsv");

/// Text the model is asked to work on.
pub(super) fn text_slot(prompt: &str) -> &str {
    match parse_prompt(prompt) {
        Payload::Substitute { text, .. } => text,
        Payload::Task { text, .. } => text,
        Payload::Restore { input, .. } => input,
        Payload::Plain(p) => p,
    }
}

/// Word-for-word translation through a lexicon.
#[derive(Debug, Clone)]
pub struct DictTranslator {
    words: HashMap<String, String>,
    pub target: String,
}

static TOKEN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"<[A-Z][A-Z0-9_]*>|\w+(?:['’]\w+)*").unwrap());

impl DictTranslator {
    /// Parses `source<TAB>target` lines; blank lines and `#` comments are
    /// skipped.
    pub fn parse(src: &str, target: impl Into<String>) -> Result<Self, BackendError> {
        let mut words = HashMap::new();
        for (n, line) in src.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (from, to) = line
                .split_once('\t')
                .ok_or_else(|| BackendError::Config(format!("lexicon line {}: expected source<TAB>target", n + 1)))?;
            if from.trim().is_empty() || to.trim().is_empty() {
                return Err(BackendError::Config(format!("lexicon line {}: empty field", n + 1)));
            }
            words.insert(from.trim().to_lowercase(), to.trim().to_string());
        }
        Ok(DictTranslator {
            words,
            target: target.into(),
        })
    }

    pub fn load(path: &Path, target: impl Into<String>) -> Result<Self, BackendError> {
        let src = std::fs::read_to_string(path)
            .map_err(|e| BackendError::Config(format!("reading lexicon {}: {e}", path.display())))?;
        Self::parse(&src, target)
    }

    /// The bundled English to French news lexicon.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_LEXICON, "French").expect("bundled lexicon parses")
    }

    /// Replaces known words, keeps everything else, including placeholders,
    /// byte for byte. A capitalized source word yields a capitalized target.
    pub fn translate(&self, text: &str) -> String {
        TOKEN
            .replace_all(text, |caps: &regex::Captures| {
                let tok = &caps[0];
                if tok.starts_with('<') {
                    return tok.to_string();
                }
                match self.words.get(&tok.to_lowercase()) {
                    Some(to) if tok.chars().next().is_some_and(char::is_uppercase) => capitalize(to),
                    Some(to) => to.clone(),
                    None => tok.to_string(),
                }
            })
            .into_owned()
    }
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Keyword-count classifier.
#[derive(Debug, Clone)]
pub struct KeywordClassifier {
    keywords: BTreeMap<String, Vec<String>>,
}

impl KeywordClassifier {
    pub fn new(keywords: BTreeMap<String, Vec<String>>) -> Result<Self, BackendError> {
        if keywords.is_empty() {
            return Err(BackendError::Config("keyword table has no labels".into()));
        }
        let keywords = keywords
            .into_iter()
            .map(|(label, words)| (label, words.iter().map(|w| w.to_lowercase()).collect()))
            .collect();
        Ok(KeywordClassifier { keywords })
    }

    /// The label with most keyword hits; ties go to the smallest label.
    pub fn classify(&self, text: &str) -> String {
        let tokens = tokenize(text);
        let mut best: Option<(&str, usize)> = None;
        for (label, words) in &self.keywords {
            let score = tokens.iter().filter(|t| words.contains(t)).count();
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((label, score));
            }
        }
        best.map(|(l, _)| l.to_string()).unwrap_or_default()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.keywords.keys().map(String::as_str)
    }
}

/// Answers substitution prompts with the local generative hider.
#[derive(Debug, Clone)]
pub struct Substituter {
    engine: HideEngine,
}

impl Substituter {
    pub fn new(seed: u64) -> Self {
        Substituter {
            engine: HideEngine::new(
                std::sync::Arc::new(Recognizer::builtin()),
                HideStrategy::Generative,
                SurrogatePolicy::with_seed(seed),
            )
            .expect("builtin policy is valid"),
        }
    }

    /// Given words are typed by the recognizer where it agrees, by any
    /// gazetteer that lists them otherwise, and as ORG as a last resort.
    pub fn substitute(&self, prompt: &str) -> Result<String, BackendError> {
        let (text, words) = match parse_prompt(prompt) {
            Payload::Substitute { text, words } => (text, words),
            _ => return Err(BackendError::Malformed("not a substitution prompt".into())),
        };
        let recognizer = &self.engine.recognizer;
        let auto = recognizer.recognize(text);
        let typed: Vec<(String, EntityType)> = words
            .iter()
            .map(|w| {
                let etype = auto
                    .iter()
                    .find(|s| s.surface == *w)
                    .map(|s| s.etype)
                    .or_else(|| {
                        recognizer
                            .gazetteers()
                            .values()
                            .find(|g| g.iter().any(|e| e == w))
                            .map(|g| g.etype)
                    })
                    .or_else(|| parse_placeholder(w).map(|p| p.0))
                    .unwrap_or(EntityType::Org);
                (w.clone(), etype)
            })
            .collect();
        let spans = recognizer::locate_manual(text, &typed);
        let doc = self
            .engine
            .hide(text, &spans, &[])
            .map_err(|e| BackendError::Malformed(format!("substitution failed: {e}")))?;
        Ok(doc.anonymized)
    }
}
