//! Training-data synthesis for hide and seek models, JSONL I/O, template
//! rendering and the train/test split.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use futures::future::join_all;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backend::prompt::{render_hide_train, render_seek_train};
use crate::backend::{build_prompt_l, build_prompt_r, build_prompt_s, Backend};
use crate::error::{Error, Result};
use crate::recognizer::{dedup_surfaces, Recognizer};
use crate::types::TaskType;

/// `(c, P(c), s)`: a substitution example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HideTrainRecord {
    pub c: String,
    pub p: Vec<String>,
    pub s: String,
}

impl HideTrainRecord {
    pub fn problems(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.p.is_empty() {
            out.push("p is empty");
        }
        if self.s == self.c {
            out.push("s equals c");
        }
        out
    }

    pub fn template(&self) -> String {
        render_hide_train(&self.c, &self.p, &self.s)
    }
}

/// `(e, l, c, r)`: a restoration example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeekTrainRecord {
    pub e: String,
    pub l: String,
    pub c: String,
    pub r: String,
    pub task: TaskType,
}

impl SeekTrainRecord {
    pub fn problems(&self) -> Vec<&'static str> {
        [
            (&self.e, "e is empty"),
            (&self.l, "l is empty"),
            (&self.c, "c is empty"),
            (&self.r, "r is empty"),
        ]
        .into_iter()
        .filter(|(f, _)| f.is_empty())
        .map(|(_, m)| m)
        .collect()
    }

    pub fn template(&self) -> String {
        render_seek_train(&self.e, &self.l, &self.c, &self.r, self.task)
    }
}

/// Records in input order plus the documents that produced none.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Synthesis<T> {
    pub records: Vec<T>,
    pub skipped: Vec<(usize, String)>,
}

fn collect<T>(results: Vec<std::result::Result<T, String>>) -> Synthesis<T> {
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(rec) => records.push(rec),
            Err(msg) => {
                log::warn!("document {i} skipped: {msg}");
                skipped.push((i, msg));
            }
        }
    }
    Synthesis { records, skipped }
}

/// Asks `backend` to rewrite each document with its entities substituted.
pub async fn synth_hide_corpus(
    corpus: &[String],
    backend: &Backend,
    recognizer: &Recognizer,
) -> Synthesis<HideTrainRecord> {
    let jobs = corpus.iter().map(|c| async move {
        let p = dedup_surfaces(&recognizer.recognize(c));
        if p.is_empty() {
            return Err("no entities".to_string());
        }
        let s = backend
            .complete_prompt(&build_prompt_s(c, &p))
            .await
            .map_err(|e| e.to_string())?;
        let rec = HideTrainRecord { c: c.clone(), p, s };
        match rec.problems().first() {
            Some(problem) => Err(problem.to_string()),
            None => Ok(rec),
        }
    });
    collect(join_all(jobs).await)
}

/// Runs each `(c, e)` through the task prompt and then the restoration
/// prompt.
pub async fn synth_seek_corpus(
    pairs: &[(String, String)],
    backend: &Backend,
    task: TaskType,
    target_language: Option<&str>,
) -> Synthesis<SeekTrainRecord> {
    let jobs = pairs.iter().map(|(c, e)| async move {
        let prompt = build_prompt_l(e, task, target_language).map_err(|e| e.to_string())?;
        let l = backend.complete_prompt(&prompt).await.map_err(|e| e.to_string())?;
        let r = backend
            .complete_prompt(&build_prompt_r(e, &l, c, task))
            .await
            .map_err(|e| e.to_string())?;
        let rec = SeekTrainRecord {
            e: e.clone(),
            l,
            c: c.clone(),
            r,
            task,
        };
        match rec.problems().first() {
            Some(problem) => Err(problem.to_string()),
            None => Ok(rec),
        }
    });
    collect(join_all(jobs).await)
}

pub fn to_jsonl<T: Serialize>(records: &[T]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// Reads one JSON value per line; blank lines are skipped and a malformed
/// line is reported with its 1-based number.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(value);
    }
    Ok(out)
}

/// Training examples as plain text, separated by blank lines.
pub fn write_templates(path: &Path, templates: impl IntoIterator<Item = String>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for (i, t) in templates.into_iter().enumerate() {
        if i > 0 {
            w.write_all(b"\n\n")?;
        }
        w.write_all(t.as_bytes())?;
    }
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Stable 80/20 membership: the first eight bytes of SHA-256 of `c`, mod
/// 100, below 80.
pub fn is_train(c: &str) -> bool {
    let digest: [u8; 32] = Sha256::digest(c.as_bytes()).into();
    let head = u64::from_be_bytes(digest[..8].try_into().expect("eight bytes"));
    head % 100 < 80
}

/// Splits `items` by [`is_train`] on the text `key` returns.
pub fn split<T: Clone>(items: &[T], key: impl Fn(&T) -> &str) -> (Vec<T>, Vec<T>) {
    items.iter().cloned().partition(|x| is_train(key(x)))
}

/// A labeled text from a CSV corpus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledText {
    pub text: String,
    pub label: Option<String>,
}

/// Loads a headed CSV, e.g. a news-classification export with `Text` and
/// `Category` columns.
pub fn load_csv(path: &Path, text_column: &str, label_column: Option<&str>) -> Result<Vec<LabeledText>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Config(format!("{}: no column {name:?}", path.display())))
    };
    let text_at = find(text_column)?;
    let label_at = label_column.map(find).transpose()?;
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| csv_error(path, e))?;
        out.push(LabeledText {
            text: row.get(text_at).unwrap_or_default().to_string(),
            label: label_at.and_then(|i| row.get(i)).map(String::from),
        });
    }
    Ok(out)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: e.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::BackendKind;

    fn block<F: std::future::Future>(f: F) -> F::Output {
        tokio::runtime::Builder::new_current_thread()
            .build()
            .unwrap()
            .block_on(f)
    }

    #[test]
    fn split_is_stable_and_near_80_20() {
        let docs: Vec<String> = (0..2000).map(|i| format!("document number {i}")).collect();
        let (train, test) = split(&docs, |s| s.as_str());
        assert_eq!(train.len() + test.len(), 2000);
        let share = train.len() as f64 / 2000.0;
        assert!((0.76..0.84).contains(&share), "{share}");
        assert_eq!(is_train("x"), is_train("x"));
    }

    #[test]
    fn echo_hide_synthesis_is_rejected() {
        // Echo answers with c itself, which is not a substitution.
        let corpus = vec!["The FBI met in Paris.".to_string(), "No entities here.".to_string()];
        let r = block(synth_hide_corpus(&corpus, &Backend::Echo, &Recognizer::builtin()));
        assert!(r.records.is_empty());
        assert_eq!(r.skipped, vec![(0, "s equals c".into()), (1, "no entities".into())]);
    }

    #[test]
    fn seek_synthesis_with_echo() {
        let pairs = vec![("Ann went to Paris.".to_string(), "Zed went to Rome.".to_string())];
        let r = block(synth_seek_corpus(&pairs, &Backend::Echo, TaskType::Abstract, None));
        assert_eq!(r.records.len(), 1);
        let rec = &r.records[0];
        assert_eq!(rec.l, rec.e);
        assert_eq!(rec.r, rec.c);
        assert_eq!(
            rec.template(),
            "Input: Zed went to Rome.\nAbstract: Zed went to Rome.\nInput: Ann went to Paris.\nAbstract: Ann went to Paris."
        );
    }

    #[test]
    fn seek_synthesis_with_dict() {
        let b = Backend::from_kind(&BackendKind::MockDictTranslate {
            lexicon: None,
            target: "French".into(),
        })
        .unwrap();
        let pairs = vec![("The FBI said.".to_string(), "The <ORG> said.".to_string())];
        let r = block(synth_seek_corpus(&pairs, &b, TaskType::Translate, Some("French")));
        assert_eq!(r.records[0].l, "Le <ORG> a dit.");
        assert_eq!(r.records[0].r, "Le FBI a dit.");
        let missing = block(synth_seek_corpus(&pairs, &b, TaskType::Translate, None));
        assert_eq!(missing.skipped.len(), 1);
    }

    #[test]
    fn jsonl_round_trip_and_line_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("hide.jsonl");
        let recs: Vec<HideTrainRecord> = (0..1000)
            .map(|i| HideTrainRecord {
                c: format!("c{i} \"quoted\" é"),
                p: vec![format!("p{i}")],
                s: format!("s{i}"),
            })
            .collect();
        write_jsonl(&path, &recs).unwrap();
        assert_eq!(read_jsonl::<HideTrainRecord>(&path).unwrap(), recs);

        write_jsonl::<HideTrainRecord>(&path, &[]).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"");

        let text = to_jsonl(&recs[..3]).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        let cut = &lines[2][..10];
        lines[2] = cut;
        std::fs::write(&path, lines.join("\n")).unwrap();
        match read_jsonl::<HideTrainRecord>(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn csv_loader_reads_named_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bbc.csv");
        std::fs::write(
            &path,
            "ArticleId,Text,Category\n1,\"Shares rose, again\",business\n2,Team won,sport\n",
        )
        .unwrap();
        let rows = load_csv(&path, "Text", Some("Category")).unwrap();
        assert_eq!(rows[0].text, "Shares rose, again");
        assert_eq!(rows[1].label.as_deref(), Some("sport"));
        assert!(load_csv(&path, "Body", None).is_err());
    }
}
