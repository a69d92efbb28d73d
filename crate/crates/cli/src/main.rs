use std::io::{self, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hideseek::adversary::{
    evaluate_hidden, train_inversion, Attacker, IdentityAttacker, InformedAttacker, InversionAttacker, TrainingPair,
};
use hideseek::backend::{build_prompt_l, Backend, BackendError, BackendKind, DictTranslator, KeywordClassifier};
use hideseek::dataset::{is_train, load_csv, synth_hide_corpus, synth_seek_corpus, to_jsonl};
use hideseek::eval::{default_strategies, run_grid};
use hideseek::seek::seek;
use hideseek::synth::{self, SynthDoc};
use hideseek::{
    AnonymizedDocument, HideEngine, HideStrategy, PipelineRecord, PlaceholderMode, Recognizer, SurrogatePolicy,
    TaskType,
};
use hideseek_gateway::GatewayConfig;
use serde::Deserialize;

mod config;
mod review;

use config::CliConfig;

#[derive(Parser)]
#[command(
    name = "hideseek",
    version,
    about = "Hide privacy entities from a hosted LLM and restore them in its answer"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML settings file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed for every random draw, or `random`. Defaults to 0.
    #[arg(long, global = true, value_name = "N|random")]
    seed: Option<SeedArg>,
    /// Print machine-readable JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Write the output here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug)]
enum SeedArg {
    Fixed(u64),
    Random,
}

impl std::str::FromStr for SeedArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "random" {
            return Ok(SeedArg::Random);
        }
        s.parse()
            .map(SeedArg::Fixed)
            .map_err(|_| format!("expected an integer or `random`, got {s:?}"))
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StrategyArg {
    Label,
    Generative,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PlaceholderArg {
    Bare,
    Indexed,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TaskArg {
    Translate,
    Abstract,
    Polish,
    Classify,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BackendArg {
    Echo,
    Dict,
    Classify,
    Substitute,
    Remote,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AttackerArg {
    Identity,
    Inversion,
    Informed,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SynthKind {
    Hide,
    Seek,
}

#[derive(Args)]
struct StrategyFlags {
    #[arg(long, value_enum)]
    strategy: Option<StrategyArg>,
    /// Placeholder style for label-based hiding.
    #[arg(long, value_enum, default_value = "bare")]
    placeholders: PlaceholderArg,
}

#[derive(Args)]
struct InputFlags {
    /// Input file; stdin when absent.
    input: Option<PathBuf>,
    /// Inline input text.
    #[arg(long, conflicts_with = "input")]
    text: Option<String>,
}

#[derive(Args)]
struct CorpusFlags {
    /// One document per line, a JSONL file of {text, label}, or a CSV with
    /// text and label columns.
    #[arg(long, value_name = "PATH", conflicts_with = "synthetic")]
    corpus: Option<PathBuf>,
    /// Generate N synthetic labeled documents instead.
    #[arg(long, value_name = "N")]
    synthetic: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Hide the entities of a text.
    Hide {
        #[command(flatten)]
        input: InputFlags,
        #[command(flatten)]
        strategy: StrategyFlags,
        /// Confirm or edit the entity list on the terminal first.
        #[arg(long)]
        review: bool,
    },
    /// Restore entities in an LLM answer given the document `hide --json` wrote.
    Seek {
        #[arg(long, value_name = "PATH")]
        doc: PathBuf,
        #[command(flatten)]
        input: InputFlags,
    },
    /// Hide, ask the backend, restore.
    Run {
        #[command(flatten)]
        input: InputFlags,
        #[command(flatten)]
        strategy: StrategyFlags,
        #[arg(long, value_enum, default_value = "translate")]
        task: TaskArg,
        #[arg(long, value_enum, default_value = "echo")]
        backend: BackendArg,
        /// Target language for translation.
        #[arg(long)]
        language: Option<String>,
        #[arg(long)]
        review: bool,
    },
    /// Measure how much of a corpus an attacker recovers.
    Attack {
        #[command(flatten)]
        corpus: CorpusFlags,
        #[command(flatten)]
        strategy: StrategyFlags,
        #[arg(long, value_enum, default_value = "inversion")]
        attacker: AttackerArg,
    },
    /// Protection and task-budget tables for every strategy.
    Eval {
        #[command(flatten)]
        corpus: CorpusFlags,
        #[arg(long)]
        language: Option<String>,
    },
    /// Write hide or seek training records as JSONL.
    Synth {
        #[arg(value_enum)]
        kind: SynthKind,
        #[command(flatten)]
        corpus: CorpusFlags,
        #[command(flatten)]
        strategy: StrategyFlags,
        #[arg(long, value_enum, default_value = "substitute")]
        backend: BackendArg,
        #[arg(long, value_enum, default_value = "translate")]
        task: TaskArg,
        #[arg(long)]
        language: Option<String>,
    },
    /// Run the chat-completions gateway.
    Serve {
        #[arg(long)]
        listen: Option<String>,
        #[command(flatten)]
        strategy: StrategyFlags,
        #[arg(long, value_enum)]
        backend: Option<BackendArg>,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<hideseek::Error> for Failure {
    fn from(e: hideseek::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<BackendError> for Failure {
    fn from(e: BackendError) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type Outcome<T> = Result<T, Failure>;

struct Ctx {
    cfg: CliConfig,
    seed: u64,
    json: bool,
    out: Option<PathBuf>,
}

impl Ctx {
    fn emit(&self, text: &str) -> Outcome<()> {
        let mut text = text.to_string();
        if !text.ends_with('\n') {
            text.push('\n');
        }
        match &self.out {
            Some(path) => std::fs::write(path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display()))),
            None => {
                io::stdout().write_all(text.as_bytes())?;
                Ok(())
            }
        }
    }

    fn strategy(&self, flags: &StrategyFlags) -> HideStrategy {
        match flags.strategy {
            Some(StrategyArg::Generative) => HideStrategy::generative(),
            Some(StrategyArg::Label) => HideStrategy::label(match flags.placeholders {
                PlaceholderArg::Bare => PlaceholderMode::Bare,
                PlaceholderArg::Indexed => PlaceholderMode::Indexed,
            }),
            None => self.cfg.strategy.unwrap_or(HideStrategy::generative()),
        }
    }

    fn engine(&self, strategy: HideStrategy) -> Outcome<HideEngine> {
        let recognizer = Arc::new(Recognizer::new(&self.cfg.recognizer)?);
        Ok(HideEngine::new(
            recognizer,
            strategy,
            SurrogatePolicy::with_seed(self.seed),
        )?)
    }

    fn language(&self, flag: &Option<String>) -> String {
        flag.clone()
            .or_else(|| self.cfg.target_language.clone())
            .unwrap_or_else(|| "French".into())
    }

    fn translator(&self, language: String) -> Outcome<DictTranslator> {
        Ok(match &self.cfg.lexicon {
            Some(path) => DictTranslator::load(path, language)?,
            None => {
                let mut t = DictTranslator::builtin();
                t.target = language;
                t
            }
        })
    }

    fn keywords(&self) -> std::collections::BTreeMap<String, Vec<String>> {
        self.cfg.keywords.clone().unwrap_or_else(synth::keyword_table)
    }

    fn backend_kind(&self, flag: BackendArg, language: String) -> Outcome<BackendKind> {
        Ok(match flag {
            BackendArg::Echo => BackendKind::MockEcho,
            BackendArg::Dict => BackendKind::MockDictTranslate {
                lexicon: self.cfg.lexicon.clone(),
                target: language,
            },
            BackendArg::Classify => BackendKind::MockClassify {
                keywords: self.keywords(),
            },
            BackendArg::Substitute => BackendKind::MockSubstitute { seed: self.seed },
            BackendArg::Remote => self
                .cfg
                .remote
                .clone()
                .ok_or_else(|| Failure::Usage("--backend remote needs a [remote] table in --config".into()))?,
        })
    }
}

fn read_input(flags: &InputFlags) -> Outcome<String> {
    let mut text = match (&flags.text, &flags.input) {
        (Some(t), _) => return Ok(t.clone()),
        (None, Some(path)) => {
            std::fs::read_to_string(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?
        }
        (None, None) => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s)?;
            s
        }
    };
    if text.ends_with('\n') {
        text.pop();
        if text.ends_with('\r') {
            text.pop();
        }
    }
    Ok(text)
}

#[derive(Deserialize)]
struct JsonDoc {
    text: String,
    #[serde(default)]
    label: Option<String>,
}

struct Doc {
    text: String,
    label: Option<String>,
}

fn load_corpus(flags: &CorpusFlags, seed: u64) -> Outcome<Vec<Doc>> {
    if let Some(n) = flags.synthetic {
        return Ok(synth::corpus(n, seed)
            .into_iter()
            .map(|d| Doc {
                text: d.text,
                label: Some(d.label),
            })
            .collect());
    }
    let Some(path) = &flags.corpus else {
        return Err(Failure::Usage("give --corpus PATH or --synthetic N".into()));
    };
    let unreadable = |e: &dyn std::fmt::Display| Failure::Runtime(format!("{}: {e}", path.display()));
    let docs: Vec<Doc> = match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => {
            let attempts = [
                ("text", Some("label")),
                ("Text", Some("Category")),
                ("text", None),
                ("Text", None),
            ];
            let mut last = None;
            let mut rows = None;
            for (text, label) in attempts {
                match load_csv(path, text, label) {
                    Ok(r) => {
                        rows = Some(r);
                        break;
                    }
                    Err(e) => last = Some(e),
                }
            }
            match rows {
                Some(r) => r
                    .into_iter()
                    .map(|r| Doc {
                        text: r.text,
                        label: r.label,
                    })
                    .collect(),
                None => return Err(last.map(Failure::from).unwrap_or_else(|| unreadable(&"no rows"))),
            }
        }
        Some("jsonl") => {
            let src = std::fs::read_to_string(path).map_err(|e| unreadable(&e))?;
            let mut out = Vec::new();
            for (i, line) in src.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
                let d: JsonDoc = serde_json::from_str(line).map_err(|e| unreadable(&format!("line {}: {e}", i + 1)))?;
                out.push(Doc {
                    text: d.text,
                    label: d.label,
                });
            }
            out
        }
        _ => {
            let src = std::fs::read_to_string(path).map_err(|e| unreadable(&e))?;
            src.lines()
                .filter(|l| !l.trim().is_empty())
                .map(|l| Doc {
                    text: l.to_string(),
                    label: None,
                })
                .collect()
        }
    };
    if docs.is_empty() {
        return Err(unreadable(&"corpus is empty"));
    }
    Ok(docs)
}

fn runtime() -> Outcome<tokio::runtime::Runtime> {
    Ok(tokio::runtime::Builder::new_multi_thread().enable_all().build()?)
}

fn task_type(t: TaskArg) -> TaskType {
    match t {
        TaskArg::Translate => TaskType::Translate,
        TaskArg::Abstract => TaskType::Abstract,
        TaskArg::Polish => TaskType::Polish,
        TaskArg::Classify => TaskType::Classify,
    }
}

fn recognize_and_review(engine: &HideEngine, c: &str, review: bool) -> Outcome<Vec<hideseek::EntitySpan>> {
    let spans = engine.recognizer.recognize(c);
    if !review {
        return Ok(spans);
    }
    let stdin = io::stdin();
    let mut input = stdin.lock();
    Ok(review::review(c, spans, &mut input, &mut io::stderr())?)
}

fn check_review_input(review: bool, input: &InputFlags) -> Outcome<()> {
    if review && input.text.is_none() && input.input.is_none() {
        return Err(Failure::Usage(
            "--review reads answers from stdin; pass the text as a file or --text".into(),
        ));
    }
    Ok(())
}

fn execute(cli: Cli) -> Outcome<()> {
    let cfg = CliConfig::load(cli.common.config.as_deref())?;
    let seed = match cli.common.seed {
        Some(SeedArg::Fixed(n)) => n,
        Some(SeedArg::Random) => {
            let n = rand::random::<u64>();
            eprintln!("seed: {n}");
            n
        }
        None => cfg.seed.unwrap_or(0),
    };
    let ctx = Ctx {
        cfg,
        seed,
        json: cli.common.json,
        out: cli.common.out,
    };

    match cli.command {
        Command::Hide {
            input,
            strategy,
            review,
        } => {
            check_review_input(review, &input)?;
            let c = read_input(&input)?;
            let engine = ctx.engine(ctx.strategy(&strategy))?;
            let spans = recognize_and_review(&engine, &c, review)?;
            let doc = engine.hide(&c, &spans, &[])?;
            if ctx.json {
                ctx.emit(&serde_json::to_string_pretty(&doc)?)
            } else {
                ctx.emit(&doc.anonymized)
            }
        }
        Command::Seek { doc, input } => {
            let src = std::fs::read_to_string(&doc).map_err(|e| Failure::Runtime(format!("{}: {e}", doc.display())))?;
            let doc: AnonymizedDocument = serde_json::from_str(&src)?;
            let l = read_input(&input)?;
            let result = seek(&doc, &l, &ctx.cfg.seek);
            if ctx.json {
                ctx.emit(&serde_json::to_string_pretty(&result)?)
            } else {
                ctx.emit(&result.text)
            }
        }
        Command::Run {
            input,
            strategy,
            task,
            backend,
            language,
            review,
        } => {
            check_review_input(review, &input)?;
            let c = read_input(&input)?;
            let task = task_type(task);
            let language = ctx.language(&language);
            let backend = Backend::from_kind(&ctx.backend_kind(backend, language.clone())?)?;
            let engine = ctx.engine(ctx.strategy(&strategy))?;
            let spans = recognize_and_review(&engine, &c, review)?;
            let doc = engine.hide(&c, &spans, &[])?;
            let prompt = build_prompt_l(&doc.anonymized, task, Some(&language))?;
            let l = runtime()?.block_on(backend.complete_prompt(&prompt))?;
            let d = seek(&doc, &l, &ctx.cfg.seek);
            if ctx.json {
                let mut rec = PipelineRecord::new(c, doc.spans.clone(), task);
                rec.e = Some(doc.anonymized);
                rec.l = Some(l);
                rec.d = Some(d.text);
                ctx.emit(&serde_json::to_string_pretty(&rec)?)
            } else {
                ctx.emit(&d.text)
            }
        }
        Command::Attack {
            corpus,
            strategy,
            attacker,
        } => {
            let docs = load_corpus(&corpus, ctx.seed)?;
            let engine = ctx.engine(ctx.strategy(&strategy))?;
            let hidden = docs
                .iter()
                .map(|d| engine.anonymize(&d.text))
                .collect::<hideseek::Result<Vec<_>>>()?;
            let (train, test): (Vec<_>, Vec<_>) = hidden.into_iter().partition(|d| is_train(&d.original));
            let pairs: Vec<TrainingPair> = train.iter().map(TrainingPair::from).collect();
            let (table, skipped) = train_inversion(&pairs);
            let attacker: Box<dyn Attacker> = match attacker {
                AttackerArg::Identity => Box::new(IdentityAttacker),
                AttackerArg::Inversion => Box::new(InversionAttacker::new(&table)),
                AttackerArg::Informed => Box::new(InformedAttacker::new(&engine, table)),
            };
            let report = evaluate_hidden(&test, engine.strategy.name(), attacker.as_ref());
            if ctx.json {
                ctx.emit(&serde_json::to_string_pretty(&report)?)
            } else {
                ctx.emit(&format!(
                    "strategy: {}\nattacker: {}\ntrain pairs: {} ({} skipped)\ntest docs: {}\nmean privacy score: {:.4}",
                    report.strategy,
                    report.attacker,
                    pairs.len(),
                    skipped.skipped.len(),
                    report.n_docs,
                    report.mean_privacy_score
                ))
            }
        }
        Command::Eval { corpus, language } => {
            let docs = load_corpus(&corpus, ctx.seed)?;
            let docs = docs
                .into_iter()
                .map(|d| match d.label {
                    Some(label) => Ok(SynthDoc { text: d.text, label }),
                    None => Err(Failure::Runtime("eval needs a labeled corpus".into())),
                })
                .collect::<Outcome<Vec<_>>>()?;
            let translator = ctx.translator(ctx.language(&language))?;
            let classifier = KeywordClassifier::new(ctx.keywords())?;
            let report = runtime()?.block_on(run_grid(
                &docs,
                &default_strategies(),
                ctx.seed,
                &translator,
                &classifier,
            ))?;
            if ctx.json {
                ctx.emit(&serde_json::to_string_pretty(&report)?)
            } else {
                ctx.emit(&report.render())
            }
        }
        Command::Synth {
            kind,
            corpus,
            strategy,
            backend,
            task,
            language,
        } => {
            let docs = load_corpus(&corpus, ctx.seed)?;
            let language = ctx.language(&language);
            let backend = Backend::from_kind(&ctx.backend_kind(backend, language.clone())?)?;
            let texts: Vec<String> = docs.into_iter().map(|d| d.text).collect();
            let rt = runtime()?;
            let (jsonl, skipped) = match kind {
                SynthKind::Hide => {
                    let recognizer = Recognizer::new(&ctx.cfg.recognizer)?;
                    let s = rt.block_on(synth_hide_corpus(&texts, &backend, &recognizer));
                    (to_jsonl(&s.records)?, s.skipped.len())
                }
                SynthKind::Seek => {
                    let engine = ctx.engine(ctx.strategy(&strategy))?;
                    let pairs = texts
                        .iter()
                        .map(|c| engine.anonymize(c).map(|d| (d.original, d.anonymized)))
                        .collect::<hideseek::Result<Vec<_>>>()?;
                    let s = rt.block_on(synth_seek_corpus(&pairs, &backend, task_type(task), Some(&language)));
                    (to_jsonl(&s.records)?, s.skipped.len())
                }
            };
            eprintln!("{skipped} document(s) skipped");
            match &ctx.out {
                Some(path) => {
                    std::fs::write(path, jsonl).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))
                }
                None => {
                    io::stdout().write_all(jsonl.as_bytes())?;
                    Ok(())
                }
            }
        }
        Command::Serve {
            listen,
            strategy,
            backend,
        } => {
            let mut gw = match (&ctx.cfg.gateway, backend) {
                (Some(g), None) => g.clone(),
                (_, Some(b)) => {
                    let mut g = GatewayConfig::new(ctx.backend_kind(b, ctx.language(&None))?);
                    g.recognizer = ctx.cfg.recognizer.clone();
                    g.seek = ctx.cfg.seek;
                    g
                }
                (None, None) => {
                    return Err(Failure::Usage(
                        "serve needs --backend or a [gateway] table in --config".into(),
                    ))
                }
            };
            if let Some(l) = listen {
                gw.listen = l;
            }
            if strategy.strategy.is_some() {
                gw.strategy = ctx.strategy(&strategy);
            }
            if ctx.cfg.gateway.is_none() || ctx.cfg.seed.is_some() {
                gw.seed = ctx.seed;
            }
            eprintln!("listening on {}", gw.listen);
            runtime()?.block_on(hideseek_gateway::serve(gw))?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
