//! Prompt templates for substitution, task processing and restoration.

use crate::types::TaskType;

use super::BackendError;

pub const PROMPT_S_INSTRUCTION: &str = "Substitute given words in the text into other random words.";

/// Renders a list the way Python's `repr` does: `['a', "it's"]`.
pub fn py_list<S: AsRef<str>>(items: &[S]) -> String {
    let inner: Vec<String> = items.iter().map(|s| py_str(s.as_ref())).collect();
    format!("[{}]", inner.join(", "))
}

fn py_str(s: &str) -> String {
    let quote = if s.contains('\'') && !s.contains('"') {
        '"'
    } else {
        '\''
    };
    let mut out = String::with_capacity(s.len() + 2);
    out.push(quote);
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if c == quote => {
                out.push('\\');
                out.push(c);
            }
            c => out.push(c),
        }
    }
    out.push(quote);
    out
}

/// The substitution prompt sent to obtain a rewrite `s` of `c`.
pub fn build_prompt_s<S: AsRef<str>>(c: &str, entities: &[S]) -> String {
    format!(
        "{PROMPT_S_INSTRUCTION}\nText: {c}\nGiven words: {}\nSubstituted text:",
        py_list(entities)
    )
}

/// The task prompt carrying the anonymized text.
pub fn build_prompt_l(e: &str, task: TaskType, target_language: Option<&str>) -> Result<String, BackendError> {
    match task {
        TaskType::Translate => match target_language {
            Some(lang) if !lang.trim().is_empty() => Ok(format!("Translate the following text to {lang}:\nText: {e}")),
            _ => Err(BackendError::Prompt("Translate requires a target language".into())),
        },
        other => Ok(format!("{} the following text:\nText: {e}", other.as_str())),
    }
}

/// The restoration prompt pairing the anonymized exchange with `c`.
pub fn build_prompt_r(e: &str, l: &str, c: &str, task: TaskType) -> String {
    format!("Input: {e}\n{task}: {l}\nInput: {c}\n{task}:")
}

/// Hide-model training example: the substitution prompt followed by `s`.
pub fn render_hide_train<S: AsRef<str>>(c: &str, p: &[S], s: &str) -> String {
    format!("{} {s}", build_prompt_s(c, p))
}

/// Seek-model training example: the restoration prompt followed by `r`.
pub fn render_seek_train(e: &str, l: &str, c: &str, r: &str, task: TaskType) -> String {
    format!("{} {r}", build_prompt_r(e, l, c, task))
}

/// What a prompt asks a model to work on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload<'a> {
    Substitute { text: &'a str, words: Vec<String> },
    Task { task: TaskType, text: &'a str },
    Restore { task: TaskType, input: &'a str },
    Plain(&'a str),
}

/// Recognizes the templates above so offline backends can act on the text
/// slot only. Anything else is returned as [`Payload::Plain`].
pub fn parse_prompt(prompt: &str) -> Payload<'_> {
    if let Some(rest) = prompt.strip_prefix(PROMPT_S_INSTRUCTION) {
        if let Some(p) = parse_s(rest) {
            return p;
        }
    }
    if let Some((head, text)) = prompt.split_once(":\nText: ") {
        if let Some(task) = task_header(head) {
            return Payload::Task { task, text };
        }
    }
    for task in [
        TaskType::Translate,
        TaskType::Abstract,
        TaskType::Polish,
        TaskType::Classify,
    ] {
        let tail = format!("\n{task}:");
        if prompt.starts_with("Input: ") && prompt.ends_with(&tail) {
            let body = &prompt[..prompt.len() - tail.len()];
            if let Some(at) = body.rfind("\nInput: ") {
                return Payload::Restore {
                    task,
                    input: &body[at + "\nInput: ".len()..],
                };
            }
        }
    }
    Payload::Plain(prompt)
}

fn task_header(head: &str) -> Option<TaskType> {
    if head.starts_with("Translate the following text to ") && !head.contains('\n') {
        return Some(TaskType::Translate);
    }
    [TaskType::Abstract, TaskType::Polish, TaskType::Classify]
        .into_iter()
        .find(|t| head == format!("{} the following text", t.as_str()))
}

fn parse_s(rest: &str) -> Option<Payload<'_>> {
    let rest = rest.strip_prefix("\nText: ")?;
    let body = rest.strip_suffix("\nSubstituted text:")?;
    let at = body.rfind("\nGiven words: ")?;
    let words = parse_py_list(&body[at + "\nGiven words: ".len()..])?;
    Some(Payload::Substitute {
        text: &body[..at],
        words,
    })
}

/// Inverse of [`py_list`].
pub fn parse_py_list(s: &str) -> Option<Vec<String>> {
    let inner = s.trim().strip_prefix('[')?.strip_suffix(']')?;
    let mut out = Vec::new();
    let mut chars = inner.chars().peekable();
    loop {
        while chars.peek().is_some_and(|c| c.is_whitespace()) {
            chars.next();
        }
        let Some(quote) = chars.next() else { break };
        if quote != '\'' && quote != '"' {
            return None;
        }
        let mut item = String::new();
        loop {
            match chars.next()? {
                '\\' => match chars.next()? {
                    'n' => item.push('\n'),
                    'r' => item.push('\r'),
                    't' => item.push('\t'),
                    c => item.push(c),
                },
                c if c == quote => break,
                c => item.push(c),
            }
        }
        out.push(item);
        while chars.peek().is_some_and(|c| c.is_whitespace()) {
            chars.next();
        }
        match chars.next() {
            Some(',') => continue,
            None => break,
            Some(_) => return None,
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FBI_C: &str = "The FBI (Federal Bureau of Investigation) is currently investigating a cyber attack on a major corporation that occurred on August 10, 2023. The breach took place in the company's headquarters located in Washington DC. The FBI suspects that the attack was carried out by a foreign government.";

    #[test]
    fn prompt_s_golden() {
        let p = build_prompt_s(FBI_C, &["FBI", "August 10, 2023", "Washington DC"]);
        assert_eq!(
            p,
            format!(
                "Substitute given words in the text into other random words.\nText: {FBI_C}\nGiven words: ['FBI', 'August 10, 2023', 'Washington DC']\nSubstituted text:"
            )
        );
        assert!(build_prompt_s::<&str>("x", &[]).contains("\nGiven words: []\n"));
    }

    #[test]
    fn prompt_l_golden() {
        assert_eq!(
            build_prompt_l("Hi <ORG>.", TaskType::Translate, Some("Chinese")).unwrap(),
            "Translate the following text to Chinese:\nText: Hi <ORG>."
        );
        assert_eq!(
            build_prompt_l("Hi.", TaskType::Abstract, None).unwrap(),
            "Abstract the following text:\nText: Hi."
        );
        assert_eq!(
            build_prompt_l("", TaskType::Polish, None).unwrap(),
            "Polish the following text:\nText: "
        );
        assert!(build_prompt_l("Hi.", TaskType::Translate, None).is_err());
    }

    #[test]
    fn prompt_r_golden() {
        assert_eq!(
            build_prompt_r("e1", "l1", "c1", TaskType::Translate),
            "Input: e1\nTranslate: l1\nInput: c1\nTranslate:"
        );
        assert_eq!(
            build_prompt_r("", "", "", TaskType::Abstract),
            "Input: \nAbstract: \nInput: \nAbstract:"
        );
    }

    #[test]
    fn training_templates() {
        assert_eq!(
            render_hide_train("c", &["P"], "s"),
            "Substitute given words in the text into other random words.\nText: c\nGiven words: ['P']\nSubstituted text: s"
        );
        assert_eq!(
            render_seek_train("e", "l", "c", "r", TaskType::Translate),
            "Input: e\nTranslate: l\nInput: c\nTranslate: r"
        );
    }

    #[test]
    fn python_repr_quoting() {
        assert_eq!(py_list(&["it's", "a\"b", "x'y\"z"]), r#"["it's", 'a"b', 'x\'y"z']"#);
        let items = ["it's", "a\"b", "x'y\"z", "back\\slash", ""];
        assert_eq!(parse_py_list(&py_list(&items)).unwrap(), items);
    }

    #[test]
    fn prompts_parse_back() {
        let s = build_prompt_s("Ann met Bob.", &["Ann", "Bob"]);
        assert_eq!(
            parse_prompt(&s),
            Payload::Substitute {
                text: "Ann met Bob.",
                words: vec!["Ann".into(), "Bob".into()]
            }
        );
        let l = build_prompt_l("two\nlines", TaskType::Translate, Some("French")).unwrap();
        assert_eq!(
            parse_prompt(&l),
            Payload::Task {
                task: TaskType::Translate,
                text: "two\nlines"
            }
        );
        let r = build_prompt_r("e", "l", "c text", TaskType::Polish);
        assert_eq!(
            parse_prompt(&r),
            Payload::Restore {
                task: TaskType::Polish,
                input: "c text"
            }
        );
        assert_eq!(parse_prompt("hello"), Payload::Plain("hello"));
    }
}
