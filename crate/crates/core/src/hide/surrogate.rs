//! Surrogate values: shifted dates and times, jittered amounts, and draws
//! from per-type word lists.

use std::collections::HashSet;
use std::sync::LazyLock;

use chrono::{Datelike, NaiveDate, TimeDelta};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use regex::Regex;

use super::{nonzero_in, SurrogatePolicy};
use crate::error::{Error, Result};
use crate::recognizer::Gazetteer;
use crate::text;
use crate::types::EntityType;

pub(super) fn fallback_pool(etype: EntityType) -> Option<Gazetteer> {
    let src = match etype {
        EntityType::Date => include_str!("../../data/surrogates/date.txt"),
        EntityType::Time => include_str!("../../data/surrogates/time.txt"),
        EntityType::Money => include_str!("../../data/surrogates/money.txt"),
        EntityType::Percent => include_str!("../../data/surrogates/percent.txt"),
        EntityType::Quantity => include_str!("../../data/surrogates/quantity.txt"),
        _ => return None,
    };
    Some(Gazetteer::parse(etype, src).expect("builtin surrogate pool"))
}

const DERIVED_TRIES: usize = 12;
const POOL_TRIES: usize = 32;

pub(super) struct Draw<'a> {
    pub policy: &'a SurrogatePolicy,
    pub rng: ChaCha8Rng,
    pub folded_text: &'a [char],
    pub folded_originals: &'a [Vec<char>],
    /// Case-folded surrogates already handed out.
    pub used: HashSet<String>,
}

impl Draw<'_> {
    pub fn surrogate(&mut self, etype: EntityType, original: &str) -> Result<String> {
        if etype.is_rule_based() {
            for _ in 0..DERIVED_TRIES {
                let candidate = match etype {
                    EntityType::Date => shift_date(original, self.policy.date_shift_days, &mut self.rng),
                    EntityType::Time => shift_time(original, &mut self.rng),
                    _ => jitter_amount(original, self.policy.numeric_jitter, &mut self.rng),
                };
                match candidate {
                    Some(c) if self.accept(&c) => return Ok(self.take(c)),
                    Some(_) => continue,
                    None => break,
                }
            }
        }
        self.pool_draw(etype)
    }

    fn pool_draw(&mut self, etype: EntityType) -> Result<String> {
        let pool: Vec<&str> = match self.policy.surrogate_gazetteers.get(&etype) {
            Some(g) => g.iter().collect(),
            None => return Err(Error::PoolExhausted(etype)),
        };
        if pool.is_empty() {
            return Err(Error::PoolExhausted(etype));
        }
        for _ in 0..POOL_TRIES {
            let pick = pool[self.rng.random_range(0..pool.len())];
            if self.accept(pick) {
                return Ok(self.take(pick.to_string()));
            }
        }
        let offset = self.rng.random_range(0..pool.len());
        for i in 0..pool.len() {
            let pick = pool[(offset + i) % pool.len()];
            if self.accept(pick) {
                return Ok(self.take(pick.to_string()));
            }
        }
        Err(Error::PoolExhausted(etype))
    }

    /// A candidate must be new, must not be an original or contain one, and
    /// must not already occur in the text.
    fn accept(&self, candidate: &str) -> bool {
        let key = text::fold_str(candidate);
        if key.is_empty() || self.used.contains(&key) {
            return false;
        }
        let folded: Vec<char> = key.chars().collect();
        if self
            .folded_originals
            .iter()
            .any(|o| *o == folded || text::contains_bounded(&folded, o))
        {
            return false;
        }
        !text::contains_bounded(self.folded_text, &folded)
    }

    fn take(&mut self, candidate: String) -> String {
        self.used.insert(text::fold_str(&candidate));
        candidate
    }
}

const MONTHS: [&str; 12] = [
    "January",
    "February",
    "March",
    "April",
    "May",
    "June",
    "July",
    "August",
    "September",
    "October",
    "November",
    "December",
];

const MONTH_RE: &str = r"(January|February|March|April|May|June|July|August|September|October|November|December|Jan|Feb|Mar|Apr|Jun|Jul|Aug|Sept|Sep|Oct|Nov|Dec)(\.?)";

static DATE_MDY: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(&format!(r"^{MONTH_RE} (\d{{1,2}})(st|nd|rd|th)?(,?) (\d{{4}})$")).unwrap());
static DATE_DMY: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(&format!(r"^(\d{{1,2}})(st|nd|rd|th)? {MONTH_RE}(,?) (\d{{4}})$")).unwrap());
static DATE_MY: LazyLock<Regex> = LazyLock::new(|| Regex::new(&format!(r"^{MONTH_RE} (\d{{4}})$")).unwrap());
static DATE_MD: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(&format!(r"^{MONTH_RE} (\d{{1,2}})(st|nd|rd|th)?$")).unwrap());
static DATE_ISO: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(\d{4})-(\d{2})-(\d{2})$").unwrap());
static DATE_US: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(\d{1,2})/(\d{1,2})/(\d{4})$").unwrap());
static DATE_YEAR: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(\d{4})$").unwrap());

#[derive(Clone, Copy)]
enum MonthStyle {
    Full,
    Abbrev { dot: bool },
}

fn month_number(name: &str) -> Option<u32> {
    let name = if name == "Sept" { "Sep" } else { name };
    MONTHS
        .iter()
        .position(|m| *m == name || m[..3] == *name)
        .map(|i| i as u32 + 1)
}

fn month_style(name: &str, dot: &str) -> MonthStyle {
    if MONTHS.contains(&name) {
        MonthStyle::Full
    } else {
        MonthStyle::Abbrev { dot: !dot.is_empty() }
    }
}

fn render_month(month: u32, style: MonthStyle) -> String {
    let full = MONTHS[month as usize - 1];
    match style {
        MonthStyle::Full => full.to_string(),
        MonthStyle::Abbrev { dot } if full.len() > 3 => {
            format!("{}{}", &full[..3], if dot { "." } else { "" })
        }
        MonthStyle::Abbrev { .. } => full.to_string(),
    }
}

fn ordinal(day: u32) -> &'static str {
    match (day % 10, day % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    }
}

fn pad(n: u32, like: &str) -> String {
    if like.len() == 2 {
        format!("{n:02}")
    } else {
        n.to_string()
    }
}

fn shift(date: NaiveDate, max_days: i64, rng: &mut ChaCha8Rng) -> Option<NaiveDate> {
    date.checked_add_signed(TimeDelta::days(nonzero_in(rng, max_days)))
}

/// Shifts a parseable date by a random non-zero number of days and renders
/// it in the original format. `None` when the format is not recognized.
pub(super) fn shift_date(surface: &str, max_days: i64, rng: &mut ChaCha8Rng) -> Option<String> {
    if let Some(m) = DATE_MDY.captures(surface) {
        let style = month_style(&m[1], &m[2]);
        let date = NaiveDate::from_ymd_opt(m[6].parse().ok()?, month_number(&m[1])?, m[3].parse().ok()?)?;
        let d = shift(date, max_days, rng)?;
        let suffix = if m.get(4).is_some() { ordinal(d.day()) } else { "" };
        return Some(format!(
            "{} {}{}{} {}",
            render_month(d.month(), style),
            d.day(),
            suffix,
            &m[5],
            d.year()
        ));
    }
    if let Some(m) = DATE_DMY.captures(surface) {
        let style = month_style(&m[3], &m[4]);
        let date = NaiveDate::from_ymd_opt(m[6].parse().ok()?, month_number(&m[3])?, m[1].parse().ok()?)?;
        let d = shift(date, max_days, rng)?;
        let suffix = if m.get(2).is_some() { ordinal(d.day()) } else { "" };
        return Some(format!(
            "{}{} {}{} {}",
            d.day(),
            suffix,
            render_month(d.month(), style),
            &m[5],
            d.year()
        ));
    }
    if let Some(m) = DATE_MY.captures(surface) {
        let style = month_style(&m[1], &m[2]);
        let date = NaiveDate::from_ymd_opt(m[3].parse().ok()?, month_number(&m[1])?, 1)?;
        let d = shift(date, max_days, rng)?;
        return Some(format!("{} {}", render_month(d.month(), style), d.year()));
    }
    if let Some(m) = DATE_MD.captures(surface) {
        let style = month_style(&m[1], &m[2]);
        // A leap year, so that February 29 parses.
        let date = NaiveDate::from_ymd_opt(2000, month_number(&m[1])?, m[3].parse().ok()?)?;
        let d = shift(date, max_days, rng)?;
        let suffix = if m.get(4).is_some() { ordinal(d.day()) } else { "" };
        return Some(format!("{} {}{}", render_month(d.month(), style), d.day(), suffix));
    }
    if let Some(m) = DATE_ISO.captures(surface) {
        let date = NaiveDate::from_ymd_opt(m[1].parse().ok()?, m[2].parse().ok()?, m[3].parse().ok()?)?;
        let d = shift(date, max_days, rng)?;
        return Some(format!("{:04}-{:02}-{:02}", d.year(), d.month(), d.day()));
    }
    if let Some(m) = DATE_US.captures(surface) {
        let date = NaiveDate::from_ymd_opt(m[3].parse().ok()?, m[1].parse().ok()?, m[2].parse().ok()?)?;
        let d = shift(date, max_days, rng)?;
        return Some(format!(
            "{}/{}/{}",
            pad(d.month(), &m[1]),
            pad(d.day(), &m[2]),
            d.year()
        ));
    }
    if let Some(m) = DATE_YEAR.captures(surface) {
        let year: i64 = m[1].parse().ok()?;
        let years = (max_days / 365).max(1);
        return Some((year + nonzero_in(rng, years)).to_string());
    }
    None
}

static TIME_HM: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(\d{1,2}):(\d{2})(:\d{2})?( ?)([AaPp]\.[Mm]\.|[AaPp][Mm])?$").unwrap());
static TIME_H: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(\d{1,2})( ?)([AaPp]\.[Mm]\.|[AaPp][Mm])$").unwrap());

/// Renders `pm` with the letter case and dots of `like` (e.g. `a.m.`).
fn meridiem_like(pm: bool, like: &str) -> String {
    like.chars()
        .map(|ch| match ch {
            'a' | 'p' => {
                if pm {
                    'p'
                } else {
                    'a'
                }
            }
            'A' | 'P' => {
                if pm {
                    'P'
                } else {
                    'A'
                }
            }
            other => other,
        })
        .collect()
}

fn to_12h(minutes: i64) -> (i64, i64, bool) {
    let h24 = minutes / 60;
    let h12 = match h24 % 12 {
        0 => 12,
        h => h,
    };
    (h12, minutes % 60, h24 >= 12)
}

pub(super) fn shift_time(surface: &str, rng: &mut ChaCha8Rng) -> Option<String> {
    const DAY: i64 = 24 * 60;
    if let Some(m) = TIME_HM.captures(surface) {
        let hour: i64 = m[1].parse().ok()?;
        let minute: i64 = m[2].parse().ok()?;
        let meridiem = m.get(5).map(|x| x.as_str());
        let mut base = match meridiem {
            Some(_) if !(1..=12).contains(&hour) || minute > 59 => return None,
            Some(mer) => {
                (hour % 12) * 60
                    + minute
                    + if mer.to_ascii_lowercase().starts_with('p') {
                        720
                    } else {
                        0
                    }
            }
            None if hour > 23 || minute > 59 => return None,
            None => hour * 60 + minute,
        };
        let delta = nonzero_in(rng, 11) * 60 + 15 * rng.random_range(0..4i64);
        base = (base + delta).rem_euclid(DAY);
        let seconds = m.get(3).map_or("", |s| s.as_str());
        return Some(match meridiem {
            Some(mer) => {
                let (h, mi, pm) = to_12h(base);
                format!("{h}:{mi:02}{seconds}{}{}", &m[4], meridiem_like(pm, mer))
            }
            None => {
                let h = base / 60;
                let hour_text = if m[1].len() == 2 {
                    format!("{h:02}")
                } else {
                    h.to_string()
                };
                format!("{hour_text}:{:02}{seconds}", base % 60)
            }
        });
    }
    if let Some(m) = TIME_H.captures(surface) {
        let hour: i64 = m[1].parse().ok()?;
        if !(1..=12).contains(&hour) {
            return None;
        }
        let mer = &m[3];
        let base = (hour % 12) * 60
            + if mer.to_ascii_lowercase().starts_with('p') {
                720
            } else {
                0
            };
        let shifted = (base + nonzero_in(rng, 11) * 60).rem_euclid(DAY);
        let (h, _, pm) = to_12h(shifted);
        return Some(format!("{h}{}{}", &m[2], meridiem_like(pm, mer)));
    }
    None
}

static AMOUNT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?:\d{1,3}(?:,\d{3})+|\d+)(?:\.(\d+))?").unwrap());

fn group_thousands(int_part: &str) -> String {
    let digits: Vec<char> = int_part.chars().collect();
    let mut out = String::new();
    for (i, d) in digits.iter().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(*d);
    }
    out
}

/// Scales the first number in `surface` by a random factor in
/// `[1 - jitter, 1 + jitter]`, keeping the surrounding unit text, decimal
/// places and thousands separators.
pub(super) fn jitter_amount(surface: &str, jitter: f64, rng: &mut ChaCha8Rng) -> Option<String> {
    let m = AMOUNT.captures(surface)?;
    let whole = m.get(0)?;
    let number = whole.as_str();
    let decimals = m.get(1).map_or(0, |d| d.as_str().len());
    let grouped = number.contains(',');
    let value: f64 = number.replace(',', "").parse().ok()?;
    let scaled = if value == 0.0 {
        rng.random_range(1..10) as f64
    } else {
        value * (1.0 + rng.random_range(-jitter..=jitter))
    };
    let mut rendered = format!("{scaled:.decimals$}");
    if rendered.replace(['.', '0'], "").is_empty() || rendered == number.replace(',', "") {
        return None;
    }
    if grouped {
        let (int_part, frac) = match rendered.split_once('.') {
            Some((i, f)) => (i.to_string(), format!(".{f}")),
            None => (rendered.clone(), String::new()),
        };
        rendered = format!("{}{}", group_thousands(&int_part), frac);
    }
    Some(format!(
        "{}{}{}",
        &surface[..whole.start()],
        rendered,
        &surface[whole.end()..]
    ))
}
