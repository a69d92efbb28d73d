//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::State;
use axum::routing::post;
use axum::Router;
use hideseek::backend::{
    build_prompt_l, build_prompt_r, build_prompt_s, Backend, BackendKind, DictTranslator, KeywordClassifier,
};
use hideseek::eval::{default_strategies, run_grid, GridReport};
use hideseek::hide::{hide_generative, hide_label, leaked_in};
use hideseek::seek::seek;
use hideseek::synth::{self, SynthDoc};
use hideseek::textsim::{bleu, meteor_exact, prf, rouge, similarity, RougeVariant};
use hideseek::{
    HideEngine, HideStrategy, MappingEntry, PlaceholderMode, Recognizer, SeekConfig, SurrogatePolicy, TaskType,
};
use hideseek_gateway::{router, Gateway, GatewayConfig};
use serde::Deserialize;
use serde_json::{json, Value};

const ROUND_TRIP_DOCS: usize = 500;
const ROUND_TRIP_SEEDS: u64 = 5;
const ROUND_TRIP_BUDGET: Duration = Duration::from_secs(30);
const GRID_DOCS: usize = 1000;
const GRID_BUDGET: Duration = Duration::from_secs(60);
const CORPUS_SEED: u64 = 7;
const THROUGHPUT_DOCS: usize = 1000;
const THROUGHPUT_DOC_BYTES: usize = 1000;
const THROUGHPUT_BUDGET: Duration = Duration::from_secs(2);
const SIM_TOL: f64 = 1e-9;
const METRIC_TOL: f64 = 1e-6;

const FBI_C: &str = "The FBI (Federal Bureau of Investigation) is currently investigating a cyber attack on a major corporation that occurred on August 10, 2023. The breach took place in the company's headquarters located in Washington DC. The FBI suspects that the attack was carried out by a foreign government.";
const FBI_S: &str = "The CIA (Central Intelligence Agency) is currently investigating a cyber attack on a major corporation that occurred on September 15, 2025. The breach occurred in the company's headquarters located in New York City. The CIA suspects that the attack was carried out by a foreign government.";
const FBI_LABEL_C: &str = "The FBI (Federal Bureau of Investigation) is currently investigating a cyber attack on a major corporation that occurred on August 10, 2023. The breach took place in the company's headquarters located in Washington, D.C. The FBI suspects that the attack was carried out by a foreign government.";
const FBI_LABEL_E: &str = "The <ORG> (<ORG>) is currently investigating a cyber attack on a major corporation that occurred on <DATE>. The breach took place in the company's headquarters located in <GPE>, <GPE> The <ORG> suspects that the attack was carried out by a foreign government.";

type Verdict = Result<String, String>;

fn strategies() -> [HideStrategy; 3] {
    [
        HideStrategy::label(PlaceholderMode::Bare),
        HideStrategy::label(PlaceholderMode::Indexed),
        HideStrategy::generative(),
    ]
}

fn texts(n: usize) -> Vec<String> {
    synth::corpus(n, CORPUS_SEED).into_iter().map(|d| d.text).collect()
}

async fn round_trip() -> Verdict {
    let docs = texts(ROUND_TRIP_DOCS);
    let echo = Backend::from_kind(&BackendKind::MockEcho).map_err(|e| e.to_string())?;
    let cfg = SeekConfig::default();
    let started = Instant::now();
    let (mut cases, mut failures) = (0, Vec::new());
    for strategy in strategies() {
        for seed in 0..ROUND_TRIP_SEEDS {
            let engine = HideEngine::builtin(strategy, seed).map_err(|e| e.to_string())?;
            for c in &docs {
                cases += 1;
                let doc = engine.anonymize(c).map_err(|e| e.to_string())?;
                let prompt =
                    build_prompt_l(&doc.anonymized, TaskType::Translate, Some("French")).map_err(|e| e.to_string())?;
                let l = echo.complete_prompt(&prompt).await.map_err(|e| e.to_string())?;
                let r = seek(&doc, &l, &cfg);
                if r.text != *c || !r.unresolved.is_empty() {
                    failures.push(format!("{} seed {seed}: {c:?} -> {:?}", strategy.name(), r.text));
                }
            }
        }
    }
    let took = started.elapsed();
    let detail = format!(
        "{cases} cases, {} mismatches, {:.1}s",
        failures.len(),
        took.as_secs_f64()
    );
    if failures.is_empty() && took < ROUND_TRIP_BUDGET {
        Ok(detail)
    } else {
        Err(format!("{detail}; first: {:?}", failures.first()))
    }
}

#[derive(Clone)]
struct Captured(Arc<Mutex<Vec<Bytes>>>);

async fn capture(State(cap): State<Captured>, body: Bytes) -> axum::Json<Value> {
    cap.0.lock().unwrap().push(body.clone());
    let v: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);
    let last = v["messages"]
        .as_array()
        .and_then(|m| m.last())
        .map(|m| m["content"].clone());
    axum::Json(json!({"choices": [{"index": 0, "message": {"role": "assistant", "content": last}}]}))
}

async fn listen(app: Router) -> String {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    format!("http://{addr}")
}

async fn leakage() -> Verdict {
    let bodies = Arc::new(Mutex::new(Vec::new()));
    let upstream = listen(
        Router::new()
            .route("/v1/chat/completions", post(capture))
            .with_state(Captured(bodies.clone())),
    )
    .await;
    std::env::set_var("HIDESEEK_ACCEPTANCE_KEY", "sk-acceptance");
    let recognizer = Recognizer::builtin();
    let docs = texts(ROUND_TRIP_DOCS);
    let client = reqwest::Client::new();
    let (mut sent, mut leaks, mut refused) = (0, 0, 0);
    for strategy in strategies() {
        let mut cfg = GatewayConfig::new(BackendKind::RemoteChat {
            endpoint: format!("{upstream}/v1"),
            model: "m".into(),
            key_env: "HIDESEEK_ACCEPTANCE_KEY".into(),
            retry: Default::default(),
            parallelism: 8,
            timeout_secs: 10,
        });
        cfg.strategy = strategy;
        let gateway = listen(router(Arc::new(Gateway::new(cfg).map_err(|e| e.to_string())?))).await;
        bodies.lock().unwrap().clear();
        for c in &docs {
            let resp = client
                .post(format!("{gateway}/v1/chat/completions"))
                .json(&json!({"model": "m", "messages": [{"role": "user", "content": c}]}))
                .send()
                .await
                .map_err(|e| e.to_string())?;
            if !resp.status().is_success() {
                refused += 1;
            }
        }
        let captured = bodies.lock().unwrap().clone();
        for (body, c) in captured.iter().zip(&docs) {
            sent += 1;
            let payload = String::from_utf8_lossy(body);
            let originals: Vec<String> = recognizer.recognize(c).into_iter().map(|s| s.surface).collect();
            if !leaked_in(&payload, originals.iter().map(String::as_str)).is_empty() {
                leaks += 1;
            }
        }
    }
    let detail = format!("{sent} outbound payloads, {leaks} leaking, {refused} refused");
    if leaks == 0 && refused == 0 && sent == 3 * docs.len() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fixture_fidelity() -> Verdict {
    let recognizer = Recognizer::builtin();
    let entry = |o: &str, s: &str, t| MappingEntry {
        original: o.into(),
        surrogate: s.into(),
        etype: t,
    };
    use hideseek::EntityType::*;
    let forced = [
        entry("FBI", "CIA", Org),
        entry("Federal Bureau of Investigation", "Central Intelligence Agency", Org),
        entry("August 10, 2023", "September 15, 2025", Date),
        entry("Washington DC", "New York City", Gpe),
    ];
    let s = hide_generative(
        FBI_C,
        &recognizer.recognize(FBI_C),
        &SurrogatePolicy::with_seed(0),
        &forced,
    )
    .map_err(|e| e.to_string())?
    .anonymized;
    let label = hide_label(FBI_LABEL_C, &recognizer.recognize(FBI_LABEL_C), PlaceholderMode::Bare)
        .map_err(|e| e.to_string())?
        .anonymized;

    let prompt_s = build_prompt_s(FBI_C, &["FBI", "August 10, 2023", "Washington DC"]);
    let want_s = format!(
        "Substitute given words in the text into other random words.\nText: {FBI_C}\nGiven words: ['FBI', 'August 10, 2023', 'Washington DC']\nSubstituted text:"
    );
    let prompt_r = build_prompt_r("E", "L", FBI_C, TaskType::Translate);
    let want_r = format!("Input: E\nTranslate: L\nInput: {FBI_C}\nTranslate:");

    let mut problems = Vec::new();
    if s != FBI_S {
        let at = s.bytes().zip(FBI_S.bytes()).take_while(|(a, b)| a == b).count();
        problems.push(format!(
            "s differs at byte {at}: {:?} vs {:?}",
            &s[at..at + 10],
            &FBI_S[at..at + 10]
        ));
    }
    if label != FBI_LABEL_E.replace("<GPE>, <GPE>", "<GPE>") {
        problems.push(format!("label pattern: {label:?}"));
    }
    if prompt_s != want_s {
        problems.push("prompt_S render".into());
    }
    if prompt_r != want_r {
        problems.push("prompt_R render".into());
    }
    if problems.is_empty() {
        Ok("s, label pattern, prompt_S and prompt_R match".into())
    } else {
        Err(problems.join("; "))
    }
}

#[derive(Deserialize)]
struct SimPair {
    a: String,
    b: String,
    expected_ratio: f64,
}

fn similarity_oracle() -> Verdict {
    let pairs: Vec<SimPair> = include_str!("../../core/tests/fixtures/simpairs.jsonl")
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    let worst = pairs
        .iter()
        .map(|p| (similarity(&p.a, &p.b) - p.expected_ratio).abs())
        .fold(0.0, f64::max);
    let anchor = similarity("abcd", "bcde");
    let detail = format!("{} pairs, max error {worst:.1e}, (abcd, bcde) = {anchor}", pairs.len());
    if pairs.len() == 100 && worst <= SIM_TOL && anchor == 0.75 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

#[derive(Deserialize)]
struct PrfCase {
    gold: Vec<String>,
    pred: Vec<String>,
    #[serde(rename = "macro")]
    macro_avg: [f64; 3],
    #[serde(rename = "micro")]
    micro_avg: [f64; 3],
}

#[derive(Deserialize)]
struct TextCase {
    candidate: Vec<String>,
    reference: Vec<String>,
    bleu2: f64,
    bleu4: f64,
    rouge1: f64,
    rouge2: f64,
    #[serde(rename = "rougeL")]
    rouge_l: f64,
    meteor_exact: f64,
}

#[derive(Deserialize)]
struct MetricFixtures {
    prf: Vec<PrfCase>,
    text: Vec<TextCase>,
}

fn metric_correctness() -> Verdict {
    let mut checks: Vec<(String, f64, f64)> = Vec::new();
    let mut check = |name: &str, got: f64, want: f64| checks.push((name.to_string(), got, want));

    let r = prf(&["A", "A", "B"], &["A", "B", "B"]).map_err(|e| e.to_string())?;
    check("prf macro", r.macro_avg.f1, 2.0 / 3.0);
    check("prf micro", r.micro_avg.f1, 2.0 / 3.0);
    check(
        "bleu1 clipped",
        bleu(&["the", "the", "the"], &["the", "cat"], 1),
        1.0 / 3.0,
    );
    check(
        "bleu4 identity",
        bleu(&["a", "b", "c", "d"], &["a", "b", "c", "d"], 4),
        1.0,
    );
    check(
        "rouge1",
        rouge(&["the", "cat", "sat"], &["the", "cat"], RougeVariant::One),
        0.8,
    );
    check(
        "meteor identity",
        meteor_exact(&["a", "b", "c", "d", "e"], &["a", "b", "c", "d", "e"]),
        1.0 - 0.5 / 125.0,
    );

    let fx: MetricFixtures = serde_json::from_str(include_str!("../../core/tests/fixtures/metric_fixtures.json"))
        .map_err(|e| e.to_string())?;
    let n_fixtures = fx.prf.len() + fx.text.len();
    for (i, case) in fx.prf.iter().enumerate() {
        let r = prf(&case.gold, &case.pred).map_err(|e| e.to_string())?;
        let got = [
            r.macro_avg.precision,
            r.macro_avg.recall,
            r.macro_avg.f1,
            r.micro_avg.precision,
            r.micro_avg.recall,
            r.micro_avg.f1,
        ];
        let want = case.macro_avg.iter().chain(&case.micro_avg);
        for (g, w) in got.iter().zip(want) {
            check(&format!("prf fixture {i}"), *g, *w);
        }
    }
    for (i, case) in fx.text.iter().enumerate() {
        let (c, r) = (&case.candidate, &case.reference);
        let got = [
            bleu(c, r, 2),
            bleu(c, r, 4),
            rouge(c, r, RougeVariant::One),
            rouge(c, r, RougeVariant::Two),
            rouge(c, r, RougeVariant::L),
            meteor_exact(c, r),
        ];
        let want = [
            case.bleu2,
            case.bleu4,
            case.rouge1,
            case.rouge2,
            case.rouge_l,
            case.meteor_exact,
        ];
        for (g, w) in got.iter().zip(want) {
            check(&format!("text fixture {i}"), *g, w);
        }
    }
    let bad: Vec<_> = checks.iter().filter(|(_, g, w)| (g - w).abs() > METRIC_TOL).collect();
    let detail = format!(
        "{} values from hand examples and {n_fixtures} oracle fixtures",
        checks.len()
    );
    match bad.first() {
        None if n_fixtures >= 20 => Ok(detail),
        None => Err(format!("{detail}; expected at least 20 fixtures")),
        Some((name, g, w)) => Err(format!("{detail}; {} off, first {name}: {g} vs {w}", bad.len())),
    }
}

async fn grid() -> Result<(GridReport, Duration, Vec<SynthDoc>), String> {
    let docs = synth::corpus(GRID_DOCS, CORPUS_SEED);
    let classifier = KeywordClassifier::new(synth::keyword_table()).map_err(|e| e.to_string())?;
    let started = Instant::now();
    let report = run_grid(&docs, &default_strategies(), 0, &DictTranslator::builtin(), &classifier)
        .await
        .map_err(|e| e.to_string())?;
    Ok((report, started.elapsed(), docs))
}

fn protection_direction(report: &GridReport, took: Duration) -> Verdict {
    let black = |name: &str| report.row(name).map(|r| r.protection.black).unwrap_or(f64::NAN);
    let generative = black("generative");
    let labels = [black("label-based"), black("label-based (indexed)")];
    let direction = labels.iter().all(|&l| l > generative);
    let bound = report
        .rows
        .iter()
        .all(|r| r.protection.black <= r.protection.identity && r.protection.white_hider <= r.protection.identity);
    let detail = format!(
        "black-box label {:.4} / indexed {:.4} vs generative {generative:.4}; identity bound {}; {:.1}s",
        labels[0],
        labels[1],
        if bound { "holds" } else { "violated" },
        took.as_secs_f64()
    );
    if direction && bound && took < GRID_BUDGET {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn utility_recovery(report: &GridReport, docs: &[SynthDoc]) -> Verdict {
    let recognizer = Recognizer::builtin();
    let every_doc_has_entities = docs.iter().all(|d| !recognizer.recognize(&d.text).is_empty());
    let mut ok = true;
    let mut parts = Vec::new();
    for r in &report.rows {
        let (u, s) = (&r.translation.unrestored, &r.translation.restored);
        let better = |restored: f64, unrestored: f64| {
            if every_doc_has_entities {
                restored > unrestored
            } else {
                restored >= unrestored
            }
        };
        ok &= better(s.bleu2, u.bleu2) && better(s.rouge1, u.rouge1);
        parts.push(format!(
            "{}: BLEU-2 {:.2}->{:.2}, ROUGE-1 {:.2}->{:.2}",
            r.strategy,
            u.bleu2 * 100.0,
            s.bleu2 * 100.0,
            u.rouge1 * 100.0,
            s.rouge1 * 100.0
        ));
    }
    let detail = format!("{} (strict: {every_doc_has_entities})", parts.join("; "));
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn classification_budget(report: &GridReport) -> Verdict {
    let rendered = report.render();
    let pairing = report.pairing();
    let measured = report
        .rows
        .iter()
        .all(|r| r.classification.delta_f1_micro.is_finite() && r.classification.delta_f1_macro.is_finite());
    let paired = report.rows.iter().all(|r| pairing.contains_key(&r.strategy));
    let shown = rendered.contains("Δ F1 (micro)") && rendered.contains("Protection vs budget");
    let deltas: Vec<String> = report
        .rows
        .iter()
        .map(|r| format!("{} {:+.2}%", r.strategy, r.classification.delta_f1_micro * 100.0))
        .collect();
    let detail = format!(
        "Δ micro F1: {}; pairing for {} strategies",
        deltas.join(", "),
        pairing.len()
    );
    if measured && paired && shown && report.rows.len() == 3 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn throughput() -> Verdict {
    let mut docs = Vec::with_capacity(THROUGHPUT_DOCS);
    let mut pool = texts(THROUGHPUT_DOCS * 12).into_iter();
    while docs.len() < THROUGHPUT_DOCS {
        let mut doc = String::new();
        while doc.len() < THROUGHPUT_DOC_BYTES {
            if !doc.is_empty() {
                doc.push(' ');
            }
            doc.push_str(&pool.next().ok_or("corpus too small")?);
        }
        docs.push(doc);
    }
    let engine = HideEngine::builtin(HideStrategy::generative(), 0).map_err(|e| e.to_string())?;
    let cfg = SeekConfig::default();
    let bytes: usize = docs.iter().map(String::len).sum();
    let started = Instant::now();
    let mut restored = 0;
    for c in &docs {
        let doc = engine.anonymize(c).map_err(|e| e.to_string())?;
        if seek(&doc, &doc.anonymized, &cfg).text == *c {
            restored += 1;
        }
    }
    let took = started.elapsed();
    let detail = format!(
        "{} docs, {:.0} KB, {:.2}s single-threaded, {restored} restored",
        docs.len(),
        bytes as f64 / 1000.0,
        took.as_secs_f64()
    );
    if took < THROUGHPUT_BUDGET {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn line(name: &str, verdict: &Verdict) -> bool {
    match verdict {
        Ok(detail) => {
            println!("PASS  {name}: {detail}");
            true
        }
        Err(detail) => {
            println!("FAIL  {name}: {detail}");
            false
        }
    }
}

fn main() {
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .unwrap();
    let mut passed = vec![
        line("round-trip", &rt.block_on(round_trip())),
        line("leakage", &rt.block_on(leakage())),
        line("fixture fidelity", &fixture_fidelity()),
        line("similarity oracle", &similarity_oracle()),
        line("metric correctness", &metric_correctness()),
    ];
    match rt.block_on(grid()) {
        Ok((report, took, docs)) => {
            passed.push(line("protection direction", &protection_direction(&report, took)));
            passed.push(line("utility recovery", &utility_recovery(&report, &docs)));
            passed.push(line("classification budget", &classification_budget(&report)));
        }
        Err(e) => {
            for name in ["protection direction", "utility recovery", "classification budget"] {
                passed.push(line(name, &Err(e.clone())));
            }
        }
    }
    passed.push(line("throughput", &throughput()));

    let failed = passed.iter().filter(|p| !**p).count();
    println!("{} of {} criteria passed", passed.len() - failed, passed.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
