//! Similarity and task metrics used by the evaluation harness.
//!
//! [`similarity`] is a port of the Ratcliff/Obershelp matcher with junk
//! heuristics disabled; it drives both the privacy score and the fuzzy pass
//! of [`crate::seek`]. The classification and translation metrics follow
//! their textbook definitions with the conventions noted on each function.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Character-level similarity ratio `2M / T`; two empty strings score 1.
pub fn similarity(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    similarity_chars(&a, &b)
}

pub fn similarity_chars<T: Eq + Hash + Copy>(a: &[T], b: &[T]) -> f64 {
    let total = a.len() + b.len();
    if total == 0 {
        return 1.0;
    }
    2.0 * matched(a, b) as f64 / total as f64
}

/// Total size of the matching blocks found by recursive longest-match
/// decomposition.
pub fn matched<T: Eq + Hash + Copy>(a: &[T], b: &[T]) -> usize {
    let mut b2j: HashMap<T, Vec<usize>> = HashMap::new();
    for (j, x) in b.iter().enumerate() {
        b2j.entry(*x).or_default().push(j);
    }
    let mut finder = Longest {
        a,
        b2j,
        j2len: vec![0; b.len() + 1],
        next: vec![0; b.len() + 1],
        touched: Vec::new(),
        next_touched: Vec::new(),
    };
    let mut total = 0;
    let mut stack = vec![(0, a.len(), 0, b.len())];
    while let Some((alo, ahi, blo, bhi)) = stack.pop() {
        let (i, j, k) = finder.find(alo, ahi, blo, bhi);
        if k > 0 {
            total += k;
            if alo < i && blo < j {
                stack.push((alo, i, blo, j));
            }
            if i + k < ahi && j + k < bhi {
                stack.push((i + k, ahi, j + k, bhi));
            }
        }
    }
    total
}

struct Longest<'a, T> {
    a: &'a [T],
    b2j: HashMap<T, Vec<usize>>,
    // j2len[j + 1] = length of the match ending at a[i - 1], b[j].
    j2len: Vec<usize>,
    next: Vec<usize>,
    touched: Vec<usize>,
    next_touched: Vec<usize>,
}

impl<T: Eq + Hash + Copy> Longest<'_, T> {
    /// Longest matching block in `a[alo..ahi]`, `b[blo..bhi]`; ties go to
    /// the smallest `i`, then the smallest `j`.
    fn find(&mut self, alo: usize, ahi: usize, blo: usize, bhi: usize) -> (usize, usize, usize) {
        let (mut besti, mut bestj, mut bestsize) = (alo, blo, 0);
        for &t in &self.touched {
            self.j2len[t] = 0;
        }
        self.touched.clear();
        for i in alo..ahi {
            if let Some(js) = self.b2j.get(&self.a[i]) {
                for &j in js {
                    if j < blo {
                        continue;
                    }
                    if j >= bhi {
                        break;
                    }
                    let k = self.j2len[j] + 1;
                    self.next[j + 1] = k;
                    self.next_touched.push(j + 1);
                    if k > bestsize {
                        besti = i + 1 - k;
                        bestj = j + 1 - k;
                        bestsize = k;
                    }
                }
            }
            for &t in &self.touched {
                self.j2len[t] = 0;
            }
            self.touched.clear();
            for &t in &self.next_touched {
                self.j2len[t] = self.next[t];
                self.next[t] = 0;
            }
            std::mem::swap(&mut self.touched, &mut self.next_touched);
        }
        for &t in &self.touched {
            self.j2len[t] = 0;
        }
        self.touched.clear();
        (besti, bestj, bestsize)
    }
}

/// `1 - similarity(c, c_hat)`; higher means the attacker recovered less.
pub fn privacy_score(c: &str, c_hat: &str) -> f64 {
    1.0 - similarity(c, c_hat)
}

/// Lowercases, splits on whitespace and strips leading and trailing
/// punctuation; tokens that become empty are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|t| {
            t.trim_matches(|c: char| c.is_ascii_punctuation() || is_unicode_punct(c))
                .to_lowercase()
        })
        .filter(|t| !t.is_empty())
        .collect()
}

fn is_unicode_punct(c: char) -> bool {
    matches!(
        c,
        '‘' | '’' | '“' | '”' | '«' | '»' | '…' | '–' | '—' | '¡' | '¿' | '、' | '。' | '，'
    )
}

/// `(x - base) / base`, reported as a percentage in the budget tables.
pub fn relative_delta(base: f64, x: f64) -> f64 {
    (x - base) / base
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Scores {
    fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        Scores {
            precision,
            recall,
            f1: harmonic(precision, recall),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    #[serde(flatten)]
    pub scores: Scores,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrfReport {
    pub per_class: BTreeMap<String, ClassScores>,
    pub macro_avg: Scores,
    pub micro_avg: Scores,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// One-vs-rest precision, recall and F1 over every label seen in either
/// list. Macro F1 is the mean of per-class F1; empty denominators give 0.
pub fn prf<S: AsRef<str>>(gold: &[S], pred: &[S]) -> Result<PrfReport> {
    if gold.len() != pred.len() {
        return Err(Error::LengthMismatch(gold.len(), pred.len()));
    }
    if gold.is_empty() {
        return Err(Error::Empty("label list"));
    }
    let labels: BTreeSet<&str> = gold.iter().chain(pred).map(AsRef::as_ref).collect();
    let mut per_class = BTreeMap::new();
    let (mut tp_all, mut fp_all, mut fn_all) = (0, 0, 0);
    let (mut mp, mut mr, mut mf) = (0.0, 0.0, 0.0);
    for label in &labels {
        let (mut tp, mut fp, mut fn_, mut support) = (0, 0, 0, 0);
        for (g, p) in gold.iter().zip(pred) {
            let (g, p) = (g.as_ref() == *label, p.as_ref() == *label);
            support += g as usize;
            match (g, p) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                _ => {}
            }
        }
        let scores = Scores::from_counts(tp, fp, fn_);
        mp += scores.precision;
        mr += scores.recall;
        mf += scores.f1;
        tp_all += tp;
        fp_all += fp;
        fn_all += fn_;
        per_class.insert(label.to_string(), ClassScores { scores, support });
    }
    let n = labels.len() as f64;
    Ok(PrfReport {
        per_class,
        macro_avg: Scores {
            precision: mp / n,
            recall: mr / n,
            f1: mf / n,
        },
        micro_avg: Scores::from_counts(tp_all, fp_all, fn_all),
    })
}

fn ngram_counts<S: AsRef<str>>(seq: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut counts = HashMap::new();
    if n == 0 || seq.len() < n {
        return counts;
    }
    for w in seq.windows(n) {
        *counts.entry(w.iter().map(AsRef::as_ref).collect()).or_insert(0) += 1;
    }
    counts
}

/// Clipped n-gram matches and the candidate n-gram count.
fn clipped<S: AsRef<str>>(cand: &[S], reference: &[S], n: usize) -> (usize, usize) {
    let c = ngram_counts(cand, n);
    let r = ngram_counts(reference, n);
    let hits = c.iter().map(|(g, &k)| k.min(r.get(g).copied().unwrap_or(0))).sum();
    (hits, cand.len().saturating_sub(n - 1))
}

/// Sentence BLEU without smoothing: any zero n-gram precision gives 0.
pub fn bleu<S: AsRef<str>>(candidate: &[S], reference: &[S], max_n: usize) -> f64 {
    corpus_bleu(&[(candidate, reference)], max_n)
}

/// Corpus BLEU: clipped counts and lengths are summed over all pairs before
/// the geometric mean and brevity penalty.
pub fn corpus_bleu<S: AsRef<str>>(pairs: &[(&[S], &[S])], max_n: usize) -> f64 {
    let c_len: usize = pairs.iter().map(|(c, _)| c.len()).sum();
    let r_len: usize = pairs.iter().map(|(_, r)| r.len()).sum();
    if c_len == 0 || max_n == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for n in 1..=max_n {
        let (mut num, mut den) = (0, 0);
        for (c, r) in pairs {
            let (h, d) = clipped(c, r, n);
            num += h;
            den += d;
        }
        if num == 0 || den == 0 {
            return 0.0;
        }
        log_sum += (num as f64 / den as f64).ln();
    }
    let bp = if c_len >= r_len {
        1.0
    } else {
        (1.0 - r_len as f64 / c_len as f64).exp()
    };
    bp * (log_sum / max_n as f64).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RougeVariant {
    One,
    Two,
    L,
}

/// ROUGE F1. When neither side has an n-gram of the requested order the
/// score is 1 for equal sequences and 0 otherwise.
pub fn rouge<S: AsRef<str>>(candidate: &[S], reference: &[S], variant: RougeVariant) -> f64 {
    let (hits, c_total, r_total) = match variant {
        RougeVariant::One | RougeVariant::Two => {
            let n = if variant == RougeVariant::One { 1 } else { 2 };
            let (hits, c_total) = clipped(candidate, reference, n);
            (hits, c_total, reference.len().saturating_sub(n - 1))
        }
        RougeVariant::L => (lcs(candidate, reference), candidate.len(), reference.len()),
    };
    if c_total == 0 && r_total == 0 {
        let equal = candidate.len() == reference.len()
            && candidate.iter().zip(reference).all(|(a, b)| a.as_ref() == b.as_ref());
        return if equal { 1.0 } else { 0.0 };
    }
    if c_total == 0 || r_total == 0 {
        return 0.0;
    }
    harmonic(ratio(hits, c_total), ratio(hits, r_total))
}

fn lcs<S: AsRef<str>>(a: &[S], b: &[S]) -> usize {
    let mut prev = vec![0; b.len() + 1];
    let mut cur = vec![0; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x.as_ref() == y.as_ref() {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// METEOR restricted to exact unigram matches.
///
/// Alignment is greedy left to right: a candidate token continues the
/// current chunk when the next reference position matches, otherwise it
/// takes the earliest unused matching reference token.
pub fn meteor_exact<S: AsRef<str>>(candidate: &[S], reference: &[S]) -> f64 {
    let mut used = vec![false; reference.len()];
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for (i, tok) in candidate.iter().enumerate() {
        let tok = tok.as_ref();
        let mut pick = None;
        if let Some(&(pi, pj)) = pairs.last() {
            let nxt = pj + 1;
            if pi + 1 == i && nxt < reference.len() && !used[nxt] && reference[nxt].as_ref() == tok {
                pick = Some(nxt);
            }
        }
        if pick.is_none() {
            pick = (0..reference.len()).find(|&k| !used[k] && reference[k].as_ref() == tok);
        }
        if let Some(j) = pick {
            used[j] = true;
            pairs.push((i, j));
        }
    }
    let m = pairs.len();
    if m == 0 {
        return 0.0;
    }
    let chunks = 1 + pairs
        .windows(2)
        .filter(|w| !(w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1))
        .count();
    let p = m as f64 / candidate.len() as f64;
    let r = m as f64 / reference.len() as f64;
    let fmean = 10.0 * p * r / (r + 9.0 * p);
    fmean * (1.0 - 0.5 * (chunks as f64 / m as f64).powi(3))
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TranslationReport {
    pub rouge1: f64,
    pub rouge2: f64,
    #[serde(rename = "rougeL")]
    pub rouge_l: f64,
    pub bleu2: f64,
    pub bleu4: f64,
    pub meteor_exact: f64,
}

impl TranslationReport {
    /// Corpus BLEU and mean sentence ROUGE/METEOR over tokenized pairs.
    pub fn score(candidates: &[String], references: &[String]) -> Result<Self> {
        if candidates.len() != references.len() {
            return Err(Error::LengthMismatch(candidates.len(), references.len()));
        }
        if candidates.is_empty() {
            return Err(Error::Empty("translation corpus"));
        }
        let cand: Vec<Vec<String>> = candidates.iter().map(|s| tokenize(s)).collect();
        let refs: Vec<Vec<String>> = references.iter().map(|s| tokenize(s)).collect();
        let pairs: Vec<(&[String], &[String])> = cand
            .iter()
            .zip(&refs)
            .map(|(c, r)| (c.as_slice(), r.as_slice()))
            .collect();
        let n = pairs.len() as f64;
        let mean = |f: &dyn Fn(&[String], &[String]) -> f64| pairs.iter().map(|(c, r)| f(c, r)).sum::<f64>() / n;
        Ok(TranslationReport {
            rouge1: mean(&|c, r| rouge(c, r, RougeVariant::One)),
            rouge2: mean(&|c, r| rouge(c, r, RougeVariant::Two)),
            rouge_l: mean(&|c, r| rouge(c, r, RougeVariant::L)),
            bleu2: corpus_bleu(&pairs, 2),
            bleu4: corpus_bleu(&pairs, 4),
            meteor_exact: mean(&|c, r| meteor_exact(c, r)),
        })
    }
}
