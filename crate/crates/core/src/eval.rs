//! The protection-versus-budget grid: per hiding strategy, how much an
//! attacker recovers and how much classification and translation quality
//! the round trip costs.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use futures::future::join_all;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::{
    evaluate_hidden, train_inversion, IdentityAttacker, InformedAttacker, InversionAttacker, TrainingPair,
};
use crate::backend::{build_prompt_l, Backend, DictTranslator, KeywordClassifier};
use crate::dataset::is_train;
use crate::error::{Error, Result};
use crate::hide::HideEngine;
use crate::seek::{seek, SeekConfig};
use crate::synth::SynthDoc;
use crate::textsim::{prf, relative_delta, PrfReport, TranslationReport};
use crate::types::{AnonymizedDocument, HideStrategy, PlaceholderMode, TaskType};

pub const ATTACKERS: [&str; 3] = ["identity", "inversion", "informed"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Protection {
    pub identity: f64,
    /// Black-box: inversion table trained on observed pairs.
    pub black: f64,
    /// White-box with the hider: informed attacker.
    pub white_hider: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub skipped_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationBudget {
    pub report: PrfReport,
    /// Relative change of micro F1 against the unhidden run.
    pub delta_f1_micro: f64,
    pub delta_f1_macro: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationBudget {
    pub unrestored: TranslationReport,
    pub restored: TranslationReport,
    /// Relative change of restored METEOR against the unhidden run.
    pub delta_meteor: f64,
    /// Mapping entries seek could not locate, over all documents.
    pub unresolved: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyRow {
    pub strategy: String,
    pub protection: Protection,
    pub classification: ClassificationBudget,
    pub translation: TranslationBudget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub n_docs: usize,
    pub seed: u64,
    pub baseline_classification: PrfReport,
    pub baseline_translation: TranslationReport,
    pub rows: Vec<StrategyRow>,
}

pub fn default_strategies() -> Vec<HideStrategy> {
    vec![
        HideStrategy::label(PlaceholderMode::Bare),
        HideStrategy::label(PlaceholderMode::Indexed),
        HideStrategy::generative(),
    ]
}

/// Runs the whole grid. Privacy is measured on the test split with
/// attackers trained on the train split; task budgets use every document.
pub async fn run_grid(
    docs: &[SynthDoc],
    strategies: &[HideStrategy],
    seed: u64,
    translator: &DictTranslator,
    classifier: &KeywordClassifier,
) -> Result<GridReport> {
    if docs.is_empty() {
        return Err(Error::Empty("evaluation corpus"));
    }
    let translate = Backend::Dict(std::sync::Arc::new(translator.clone()));
    let classify = Backend::Classify(std::sync::Arc::new(classifier.clone()));
    let texts: Vec<String> = docs.iter().map(|d| d.text.clone()).collect();
    let gold: Vec<String> = docs.iter().map(|d| d.label.clone()).collect();
    let references: Vec<String> = texts.iter().map(|c| translator.translate(c)).collect();

    let plain_labels = complete_all(&classify, &texts, TaskType::Classify, None).await?;
    let baseline_classification = prf(&gold, &plain_labels)?;
    let plain_translations = complete_all(&translate, &texts, TaskType::Translate, Some(&translator.target)).await?;
    let baseline_translation = TranslationReport::score(&plain_translations, &references)?;

    let mut rows = Vec::with_capacity(strategies.len());
    for &strategy in strategies {
        let engine = HideEngine::builtin(strategy, seed)?;
        let hidden: Vec<AnonymizedDocument> = texts.par_iter().map(|c| engine.anonymize(c)).collect::<Result<_>>()?;
        let protection = protection(&engine, &hidden);

        let e_texts: Vec<String> = hidden.iter().map(|d| d.anonymized.clone()).collect();
        let hidden_labels = complete_all(&classify, &e_texts, TaskType::Classify, None).await?;
        let report = prf(&gold, &hidden_labels)?;
        let classification = ClassificationBudget {
            delta_f1_micro: relative_delta(baseline_classification.micro_avg.f1, report.micro_avg.f1),
            delta_f1_macro: relative_delta(baseline_classification.macro_avg.f1, report.macro_avg.f1),
            report,
        };

        let l = complete_all(&translate, &e_texts, TaskType::Translate, Some(&translator.target)).await?;
        let cfg = SeekConfig::default();
        let seeks: Vec<_> = hidden.par_iter().zip(&l).map(|(d, l)| seek(d, l, &cfg)).collect();
        let unresolved = seeks.iter().map(|s| s.unresolved.len()).sum();
        let restored_text: Vec<String> = seeks.into_iter().map(|s| s.text).collect();
        let unrestored = TranslationReport::score(&l, &references)?;
        let restored = TranslationReport::score(&restored_text, &references)?;
        let translation = TranslationBudget {
            delta_meteor: relative_delta(baseline_translation.meteor_exact, restored.meteor_exact),
            unrestored,
            restored,
            unresolved,
        };
        rows.push(StrategyRow {
            strategy: strategy.name().to_string(),
            protection,
            classification,
            translation,
        });
    }
    Ok(GridReport {
        n_docs: docs.len(),
        seed,
        baseline_classification,
        baseline_translation,
        rows,
    })
}

async fn complete_all(backend: &Backend, texts: &[String], task: TaskType, lang: Option<&str>) -> Result<Vec<String>> {
    let jobs = texts.iter().map(|t| async move {
        let prompt = build_prompt_l(t, task, lang)?;
        backend.complete_prompt(&prompt).await
    });
    join_all(jobs)
        .await
        .into_iter()
        .map(|r| r.map_err(Error::from))
        .collect()
}

fn protection(engine: &HideEngine, hidden: &[AnonymizedDocument]) -> Protection {
    let (train, test): (Vec<&AnonymizedDocument>, Vec<&AnonymizedDocument>) =
        hidden.iter().partition(|d| is_train(&d.original));
    let pairs: Vec<TrainingPair> = train.iter().map(|d| TrainingPair::from(*d)).collect();
    let (table, skipped) = train_inversion(&pairs);
    let test: Vec<AnonymizedDocument> = test.into_iter().cloned().collect();
    let name = engine.strategy.name();
    let identity = evaluate_hidden(&test, name, &IdentityAttacker);
    let black = evaluate_hidden(&test, name, &InversionAttacker::new(&table));
    let white = evaluate_hidden(&test, name, &InformedAttacker::new(engine, table));
    Protection {
        identity: identity.mean_privacy_score,
        black: black.mean_privacy_score,
        white_hider: white.mean_privacy_score,
        n_train: pairs.len(),
        n_test: test.len(),
        skipped_pairs: skipped.skipped.len(),
    }
}

fn pct(x: f64) -> String {
    format!("{:.2}", x * 100.0)
}

fn signed_pct(x: f64) -> String {
    format!("{:+.2}%", x * 100.0)
}

fn table(out: &mut String, header: &[&str], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<String>| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join(" | ")
    };
    let _ = writeln!(out, "{}", line(header.iter().map(|s| s.to_string()).collect()));
    let _ = writeln!(
        out,
        "{}",
        widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("-+-")
    );
    for r in rows {
        let _ = writeln!(out, "{}", line(r.clone()));
    }
}

impl GridReport {
    /// Plain-text rendering of all four tables.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "Privacy protection (mean 1 - similarity, {} docs, seed {})\n",
            self.n_docs, self.seed
        );
        table(
            &mut out,
            &["Strategy", "Identity", "Black", "White (hider)", "White (seeker)"],
            &self
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.strategy.clone(),
                        format!("{:.4}", r.protection.identity),
                        format!("{:.4}", r.protection.black),
                        format!("{:.4}", r.protection.white_hider),
                        "\\".into(),
                    ]
                })
                .collect::<Vec<_>>(),
        );

        let _ = writeln!(out, "\nClassification budget\n");
        let prf_row = |name: &str, p: &PrfReport, delta: Option<f64>| {
            vec![
                name.to_string(),
                pct(p.macro_avg.precision),
                pct(p.macro_avg.recall),
                pct(p.macro_avg.f1),
                pct(p.micro_avg.precision),
                pct(p.micro_avg.recall),
                pct(p.micro_avg.f1),
                delta.map(signed_pct).unwrap_or_else(|| "\\".into()),
            ]
        };
        let mut rows = vec![prf_row("No obscure", &self.baseline_classification, None)];
        rows.extend(self.rows.iter().map(|r| {
            prf_row(
                &r.strategy,
                &r.classification.report,
                Some(r.classification.delta_f1_micro),
            )
        }));
        table(
            &mut out,
            &[
                "Strategy",
                "P (macro)",
                "R (macro)",
                "F1 (macro)",
                "P (micro)",
                "R (micro)",
                "F1 (micro)",
                "Δ F1 (micro)",
            ],
            &rows,
        );

        let _ = writeln!(out, "\nTranslation budget (METEOR is exact-match only)\n");
        let tr_row = |name: &str, setting: &str, t: &TranslationReport, delta: Option<f64>| {
            vec![
                name.to_string(),
                setting.to_string(),
                pct(t.rouge1),
                pct(t.rouge2),
                pct(t.rouge_l),
                pct(t.bleu2),
                pct(t.bleu4),
                pct(t.meteor_exact),
                delta.map(signed_pct).unwrap_or_else(|| "\\".into()),
            ]
        };
        let mut rows = vec![tr_row("No obscure", "\\", &self.baseline_translation, None)];
        for r in &self.rows {
            let base = self.baseline_translation.meteor_exact;
            rows.push(tr_row(
                &r.strategy,
                "unrestored",
                &r.translation.unrestored,
                Some(relative_delta(base, r.translation.unrestored.meteor_exact)),
            ));
            rows.push(tr_row(
                &r.strategy,
                "restored",
                &r.translation.restored,
                Some(r.translation.delta_meteor),
            ));
        }
        table(
            &mut out,
            &[
                "Strategy",
                "Setting",
                "ROUGE-1",
                "ROUGE-2",
                "ROUGE-L",
                "BLEU-2",
                "BLEU-4",
                "METEOR (exact)",
                "Δ METEOR",
            ],
            &rows,
        );

        let _ = writeln!(out, "\nProtection vs budget\n");
        table(
            &mut out,
            &["Strategy", "Privacy (black)", "Δ F1 (micro)", "Δ METEOR (restored)"],
            &self.pairing_rows(),
        );
        if let (Some(label), Some(generative)) = (self.row("label-based"), self.row("generative")) {
            let (l, g) = (label.protection.black, generative.protection.black);
            let verdict = if l > g { "holds" } else { "does not hold" };
            let _ = writeln!(
                out,
                "\nDirection: label-based {l:.4} > generative {g:.4} (black-box privacy) {verdict}"
            );
        }
        out
    }

    fn pairing_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    r.strategy.clone(),
                    format!("{:.4}", r.protection.black),
                    signed_pct(r.classification.delta_f1_micro),
                    signed_pct(r.translation.delta_meteor),
                ]
            })
            .collect()
    }

    /// Strategy name to (black-box privacy, Δ micro F1, Δ METEOR).
    pub fn pairing(&self) -> BTreeMap<String, (f64, f64, f64)> {
        self.rows
            .iter()
            .map(|r| {
                (
                    r.strategy.clone(),
                    (
                        r.protection.black,
                        r.classification.delta_f1_micro,
                        r.translation.delta_meteor,
                    ),
                )
            })
            .collect()
    }

    pub fn row(&self, strategy: &str) -> Option<&StrategyRow> {
        self.rows.iter().find(|r| r.strategy == strategy)
    }
}
