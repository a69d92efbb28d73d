use super::*;
use crate::types::{validate_document, EntityType::*};
use proptest::prelude::*;

pub(crate) const FBI_C: &str = "The FBI (Federal Bureau of Investigation) is currently investigating a cyber attack on a major corporation that occurred on August 10, 2023. The breach took place in the company's headquarters located in Washington DC. The FBI suspects that the attack was carried out by a foreign government.";

pub(crate) const FBI_S: &str = "The CIA (Central Intelligence Agency) is currently investigating a cyber attack on a major corporation that occurred on September 15, 2025. The breach occurred in the company's headquarters located in New York City. The CIA suspects that the attack was carried out by a foreign government.";

const FBI_LABEL_C: &str = "The FBI (Federal Bureau of Investigation) is currently investigating a cyber attack on a major corporation that occurred on August 10, 2023. The breach took place in the company's headquarters located in Washington, D.C. The FBI suspects that the attack was carried out by a foreign government.";

const FBI_LABEL_E: &str = "The <ORG> (<ORG>) is currently investigating a cyber attack on a major corporation that occurred on <DATE>. The breach took place in the company's headquarters located in <GPE>, <GPE> The <ORG> suspects that the attack was carried out by a foreign government.";

fn forced() -> Vec<MappingEntry> {
    let e = |o: &str, s: &str, t| MappingEntry {
        original: o.into(),
        surrogate: s.into(),
        etype: t,
    };
    vec![
        e("FBI", "CIA", Org),
        e("Federal Bureau of Investigation", "Central Intelligence Agency", Org),
        e("August 10, 2023", "September 15, 2025", Date),
        e("Washington DC", "New York City", Gpe),
    ]
}

fn spans_of(c: &str) -> Vec<EntitySpan> {
    Recognizer::builtin().recognize(c)
}

#[test]
fn placeholder_grammar() {
    assert_eq!(placeholder(Org, None), "<ORG>");
    assert_eq!(placeholder(WorkOfArt, Some(3)), "<WORK_OF_ART_3>");
    assert_eq!(parse_placeholder("<WORK_OF_ART>"), Some((WorkOfArt, None)));
    assert_eq!(parse_placeholder("<WORK_OF_ART_12>"), Some((WorkOfArt, Some(12))));
    assert_eq!(parse_placeholder("<ORG_0>"), None);
    assert_eq!(parse_placeholder("<ORG_>"), None);
    assert_eq!(parse_placeholder("<FOO>"), None);
    assert_eq!(parse_placeholder("ORG"), None);
}

#[test]
fn label_bare_matches_reference_example() {
    let doc = hide_label(FBI_LABEL_C, &spans_of(FBI_LABEL_C), PlaceholderMode::Bare).unwrap();
    // One gazetteer span covers "Washington, D.C." where the reference shows two.
    assert_eq!(doc.anonymized, FBI_LABEL_E.replace("<GPE>, <GPE>", "<GPE>"));
    assert!(validate_document(&doc).is_empty());
}

#[test]
fn label_indexed_numbers_by_first_occurrence() {
    let doc = hide_label(FBI_C, &spans_of(FBI_C), PlaceholderMode::Indexed).unwrap();
    assert!(doc.anonymized.starts_with("The <ORG_1> (<ORG_2>) is"));
    assert!(doc.anonymized.contains("located in <GPE_1>. The <ORG_1> suspects"));
    assert!(doc.anonymized.contains("occurred on <DATE_1>."));
    let surrogates: Vec<_> = doc.mapping.entries.iter().map(|e| e.surrogate.as_str()).collect();
    assert_eq!(surrogates, ["<ORG_1>", "<ORG_2>", "<DATE_1>", "<GPE_1>"]);
}

#[test]
fn label_continuing_reuses_and_extends() {
    let first = hide_label(
        "Apple and Google",
        &spans_of("Apple and Google"),
        PlaceholderMode::Indexed,
    )
    .unwrap();
    let text = "Google hired from Microsoft";
    let second = hide_label_continuing(text, &spans_of(text), PlaceholderMode::Indexed, &first.mapping).unwrap();
    assert_eq!(second.anonymized, "<ORG_2> hired from <ORG_3>");
}

#[test]
fn empty_spans_are_identity() {
    for doc in [
        hide_label(FBI_C, &[], PlaceholderMode::Bare).unwrap(),
        hide_generative(FBI_C, &[], &SurrogatePolicy::with_seed(1), &[]).unwrap(),
    ] {
        assert_eq!(doc.anonymized, FBI_C);
        assert!(doc.mapping.is_empty());
    }
}

#[test]
fn every_mention_is_replaced() {
    // Only the first FBI is handed in; the second must not leak.
    let c = "FBI agents met FBI staff.";
    let spans = vec![EntitySpan::new(0, 3, "FBI", Org)];
    let doc = hide_label(c, &spans, PlaceholderMode::Bare).unwrap();
    assert_eq!(doc.anonymized, "<ORG> agents met <ORG> staff.");
}

#[test]
fn forced_mapping_reproduces_entities_of_reference_example() {
    let doc = hide_generative(FBI_C, &spans_of(FBI_C), &SurrogatePolicy::with_seed(0), &forced()).unwrap();
    // The reference rewrite also paraphrases "took place" as "occurred",
    // which is not an entity and cannot come from substitution.
    assert_eq!(doc.anonymized.replace("took place", "occurred"), FBI_S);
    assert!(assert_leakage_free(&doc).passed);
    assert_eq!(invert_generative(&doc.anonymized, &doc.mapping), FBI_C);
}

#[test]
fn seed_42_golden() {
    let doc = hide_generative(FBI_C, &spans_of(FBI_C), &SurrogatePolicy::with_seed(42), &[]).unwrap();
    let got: Vec<(&str, &str)> = doc
        .mapping
        .entries
        .iter()
        .map(|e| (e.original.as_str(), e.surrogate.as_str()))
        .collect();
    assert_eq!(got, GOLDEN_42);
}

const GOLDEN_42: [(&str, &str); 4] = [
    ("FBI", "Spotify"),
    ("Federal Bureau of Investigation", "United Nations"),
    ("August 10, 2023", "October 18, 2022"),
    ("Washington DC", "Greece"),
];

#[test]
fn generative_is_deterministic_and_seed_sensitive() {
    let spans = spans_of(FBI_C);
    let a = hide_generative(FBI_C, &spans, &SurrogatePolicy::with_seed(5), &[]).unwrap();
    let b = hide_generative(FBI_C, &spans, &SurrogatePolicy::with_seed(5), &[]).unwrap();
    assert_eq!(a, b);
    let differs = (0..8).any(|s| {
        hide_generative(FBI_C, &spans, &SurrogatePolicy::with_seed(s), &[])
            .unwrap()
            .anonymized
            != a.anonymized
    });
    assert!(differs);
}

#[test]
fn leakage_pass_on_reference_rewrite() {
    let mut doc = hide_generative(FBI_C, &spans_of(FBI_C), &SurrogatePolicy::with_seed(0), &forced()).unwrap();
    doc.anonymized = FBI_S.to_string();
    assert_eq!(
        assert_leakage_free(&doc),
        LeakageReport {
            passed: true,
            offending: vec![]
        }
    );
}

#[test]
fn leakage_fail_lists_every_original() {
    let mut doc = hide_label(FBI_C, &spans_of(FBI_C), PlaceholderMode::Bare).unwrap();
    doc.anonymized = doc.original.clone();
    let report = assert_leakage_free(&doc);
    assert!(!report.passed);
    assert_eq!(
        report.offending,
        [
            "FBI",
            "Federal Bureau of Investigation",
            "August 10, 2023",
            "Washington DC"
        ]
    );
}

#[test]
fn leakage_fail_on_original_inside_surrogate() {
    let mut doc = hide_label(
        "Ann met Bob.",
        &[EntitySpan::new(0, 3, "Ann", Person)],
        PlaceholderMode::Bare,
    )
    .unwrap();
    doc.anonymized = "Mary Ann met Bob.".into();
    assert_eq!(assert_leakage_free(&doc).offending, ["Ann"]);
    // Inside a word is not a token-bounded occurrence.
    doc.anonymized = "Annabel met Bob.".into();
    assert!(assert_leakage_free(&doc).passed);
}

#[test]
fn pool_exhaustion_names_the_type() {
    let mut policy = SurrogatePolicy::with_seed(0);
    policy
        .surrogate_gazetteers
        .insert(Person, Gazetteer::parse(Person, "Zed Quill\n").unwrap());
    let c = "Ann met Bob.";
    let spans = vec![
        EntitySpan::new(0, 3, "Ann", Person),
        EntitySpan::new(8, 11, "Bob", Person),
    ];
    match hide_generative(c, &spans, &policy, &[]) {
        Err(Error::PoolExhausted(Person)) => {}
        other => panic!("expected pool exhaustion, got {other:?}"),
    }
}

#[test]
fn forced_mapping_violations_are_rejected() {
    let spans = spans_of(FBI_C);
    let policy = SurrogatePolicy::with_seed(0);
    let mut wrong_type = forced();
    wrong_type[0].etype = Person;
    assert!(matches!(
        hide_generative(FBI_C, &spans, &policy, &wrong_type),
        Err(Error::ForcedMapping(_))
    ));
    let mut collides = forced();
    collides[0].surrogate = "Washington DC".into();
    assert!(matches!(
        hide_generative(FBI_C, &spans, &policy, &collides),
        Err(Error::ForcedMapping(_))
    ));
    let mut twice = forced();
    twice[1].surrogate = "CIA".into();
    assert!(matches!(
        hide_generative(FBI_C, &spans, &policy, &twice),
        Err(Error::ForcedMapping(_))
    ));
}

#[test]
fn forced_surrogates_are_not_redrawn() {
    let c = "Ann met Bob.";
    let spans = vec![
        EntitySpan::new(0, 3, "Ann", Person),
        EntitySpan::new(8, 11, "Bob", Person),
    ];
    let mut policy = SurrogatePolicy::with_seed(0);
    policy
        .surrogate_gazetteers
        .insert(Person, Gazetteer::parse(Person, "Zed\nYan\n").unwrap());
    let forced = [MappingEntry {
        original: "Ann".into(),
        surrogate: "Zed".into(),
        etype: Person,
    }];
    let doc = hide_generative(c, &spans, &policy, &forced).unwrap();
    assert_eq!(doc.anonymized, "Zed met Yan.");
}

#[test]
fn invalid_spans_are_rejected() {
    let bad = vec![EntitySpan::new(0, 4, "Ann", Person)];
    assert!(matches!(
        hide_label("Ann met Bob.", &bad, PlaceholderMode::Bare),
        Err(Error::InvalidSpans(_))
    ));
}

#[test]
fn engine_merges_manual_entities() {
    let engine = HideEngine::builtin(HideStrategy::label(PlaceholderMode::Bare), 0).unwrap();
    let c = "Project Nightjar ships in March 2024.";
    let manual = recognizer::locate_manual(c, &[("Project Nightjar".into(), WorkOfArt)]);
    let doc = engine.anonymize_with(c, &manual, None).unwrap();
    assert_eq!(doc.anonymized, "<WORK_OF_ART> ships in <DATE>.");
}

const NAMES: [&str; 8] = ["Ann Lee", "Bob", "Carla Diaz", "Dev", "Eun", "Femi Ade", "Gus", "Hana"];
const FILLER: [&str; 8] = ["met", "and", "the", "report", "said", "on", "with", "about"];

fn corpus_doc() -> impl Strategy<Value = (String, Vec<EntitySpan>)> {
    prop::collection::vec((any::<bool>(), 0usize..8), 1..24).prop_map(|parts| {
        let mut text = String::new();
        let mut spans = Vec::new();
        for (is_name, k) in parts {
            if !text.is_empty() {
                text.push(' ');
            }
            let start = text.chars().count();
            let word = if is_name { NAMES[k] } else { FILLER[k] };
            text.push_str(word);
            if is_name {
                spans.push(EntitySpan::new(start, start + word.chars().count(), word, Person));
            }
        }
        text.push('.');
        (text, spans)
    })
}

proptest! {
    #[test]
    fn generative_round_trip((c, spans) in corpus_doc(), seed in 0u64..1000) {
        let doc = hide_generative(&c, &spans, &SurrogatePolicy::with_seed(seed), &[]).unwrap();
        prop_assert_eq!(invert_generative(&doc.anonymized, &doc.mapping), c);
        prop_assert!(validate_document(&doc).is_empty());
    }

    #[test]
    fn generative_is_consistent((c, spans) in corpus_doc(), seed in 0u64..1000) {
        let doc = hide_generative(&c, &spans, &SurrogatePolicy::with_seed(seed), &[]).unwrap();
        let hay: Vec<char> = doc.anonymized.chars().collect();
        let orig: Vec<char> = c.chars().collect();
        for e in &doc.mapping.entries {
            let o: Vec<char> = e.original.chars().collect();
            let s: Vec<char> = e.surrogate.chars().collect();
            prop_assert_eq!(text::find_bounded(&orig, &o).len(), text::find_bounded(&hay, &s).len());
            prop_assert_eq!(e.etype, Person);
        }
    }

    #[test]
    fn generative_is_deterministic((c, spans) in corpus_doc(), seed in 0u64..1000) {
        let policy = SurrogatePolicy::with_seed(seed);
        prop_assert_eq!(
            hide_generative(&c, &spans, &policy, &[]).unwrap(),
            hide_generative(&c, &spans, &policy, &[]).unwrap()
        );
    }

    #[test]
    fn label_is_leakage_free((c, spans) in corpus_doc(), indexed in any::<bool>()) {
        let mode = if indexed { PlaceholderMode::Indexed } else { PlaceholderMode::Bare };
        let doc = hide_label(&c, &spans, mode).unwrap();
        prop_assert!(assert_leakage_free(&doc).passed);
        prop_assert!(validate_document(&doc).is_empty());
    }
}
