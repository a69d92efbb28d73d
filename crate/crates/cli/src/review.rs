//! Terminal review of recognized entities before anything is sent.

use std::io::{self, BufRead, Write};

use hideseek::recognizer::{locate_manual, merge_spans};
use hideseek::{EntitySpan, EntityType};

enum Decision {
    Keep,
    Drop,
    Retype(EntityType),
}

fn read_line(input: &mut impl BufRead) -> io::Result<Option<String>> {
    let mut line = String::new();
    if input.read_line(&mut line)? == 0 {
        return Ok(None);
    }
    Ok(Some(line.trim().to_string()))
}

fn parse_decision(line: &str) -> Result<Decision, String> {
    let mut words = line.split_whitespace();
    match (words.next(), words.next(), words.next()) {
        (None, ..) | (Some("k" | "keep"), None, _) => Ok(Decision::Keep),
        (Some("d" | "drop"), None, _) => Ok(Decision::Drop),
        (Some("r" | "retype"), Some(t), None) => t
            .parse()
            .map(Decision::Retype)
            .map_err(|e: hideseek::Error| e.to_string()),
        _ => Err(format!("expected keep, drop or retype TYPE, got {line:?}")),
    }
}

/// Asks about each distinct surface, then for additions. End of input keeps
/// whatever has not been reviewed yet.
pub fn review(
    text: &str,
    mut spans: Vec<EntitySpan>,
    input: &mut impl BufRead,
    prompt: &mut impl Write,
) -> io::Result<Vec<EntitySpan>> {
    let mut surfaces: Vec<(String, EntityType)> = Vec::new();
    for s in &spans {
        if !surfaces.iter().any(|(t, _)| *t == s.surface) {
            surfaces.push((s.surface.clone(), s.etype));
        }
    }
    let n = surfaces.len();
    'entities: for (i, (surface, etype)) in surfaces.iter().enumerate() {
        loop {
            write!(prompt, "[{}/{n}] {surface} ({etype}) keep/drop/retype TYPE: ", i + 1)?;
            prompt.flush()?;
            let Some(line) = read_line(input)? else {
                writeln!(prompt)?;
                break 'entities;
            };
            match parse_decision(&line) {
                Ok(Decision::Keep) => {}
                Ok(Decision::Drop) => spans.retain(|s| s.surface != *surface),
                Ok(Decision::Retype(t)) => {
                    for s in spans.iter_mut().filter(|s| s.surface == *surface) {
                        s.etype = t;
                    }
                }
                Err(msg) => {
                    writeln!(prompt, "{msg}")?;
                    continue;
                }
            }
            break;
        }
    }

    let mut added: Vec<EntitySpan> = Vec::new();
    loop {
        write!(prompt, "add entity as TYPE SURFACE (blank to finish): ")?;
        prompt.flush()?;
        let line = match read_line(input)? {
            Some(l) if !l.is_empty() => l,
            _ => break,
        };
        let Some((code, surface)) = line.split_once(char::is_whitespace) else {
            writeln!(prompt, "expected TYPE SURFACE")?;
            continue;
        };
        let etype: EntityType = match code.parse() {
            Ok(t) => t,
            Err(e) => {
                writeln!(prompt, "{e}")?;
                continue;
            }
        };
        let found = locate_manual(text, &[(surface.trim().to_string(), etype)]);
        if found.is_empty() {
            writeln!(prompt, "{:?} does not occur in the text", surface.trim())?;
            continue;
        }
        added.retain(|a| !found.iter().any(|f| f.overlaps(a)));
        added.extend(found);
    }
    merge_spans(&spans, &added).map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e.to_string()))
}
