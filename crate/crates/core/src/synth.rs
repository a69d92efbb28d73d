//! Seeded generator of short news-like documents with topic labels.
//!
//! Every document mentions at least one entity and names organisations that
//! belong to its topic, so entity surfaces carry part of the class signal
//! (see [`keyword_table`]).

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::recognizer::Gazetteer;
use crate::types::EntityType;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthDoc {
    pub text: String,
    pub label: String,
}

pub const TOPICS: [&str; 5] = ["business", "entertainment", "politics", "sport", "tech"];

struct Topic {
    orgs: &'static [&'static str],
    sentences: &'static [&'static str],
    cues: &'static [&'static str],
}

const BUSINESS: Topic = Topic {
    orgs: &[
        "Goldman Sachs",
        "JPMorgan Chase",
        "Morgan Stanley",
        "HSBC",
        "Barclays",
        "Deutsche Bank",
        "BNP Paribas",
        "Unilever",
        "Nestle",
        "Shell",
        "ExxonMobil",
        "Siemens",
        "Toyota",
        "Volkswagen",
    ],
    sentences: &[
        "Shares in {ORG} rose {PERCENT} on {DATE} after the company reported quarterly profit of {MONEY}.",
        "{PERSON}, chief executive of {ORG}, told investors in {GPE} that revenue would grow.",
        "The bank said its market value had fallen by {MONEY} since {DATE}.",
        "Analysts at {ORG} expect inflation to slow to {PERCENT} by {DATE}.",
        "The merger between {ORG} and {ORG2} was approved by regulators in {GPE}.",
        "Investors sold shares as oil prices climbed and the company cut its profit forecast.",
        "{ORG} plans to ship {QUANTITY} of steel from its plant near {GPE}.",
        "The firm will pay a dividend of {MONEY} to shareholders, {PERSON} said.",
    ],
    cues: &[
        "shares",
        "profit",
        "investors",
        "revenue",
        "dividend",
        "market",
        "bank",
        "inflation",
        "merger",
        "shareholders",
        "sachs",
        "jpmorgan",
        "morgan",
        "hsbc",
        "barclays",
        "deutsche",
        "paribas",
        "unilever",
        "nestle",
        "shell",
        "exxonmobil",
        "siemens",
        "toyota",
        "volkswagen",
    ],
};

const SPORT: Topic = Topic {
    orgs: &[
        "Manchester United",
        "Real Madrid",
        "FC Barcelona",
        "Bayern Munich",
        "Juventus",
        "Liverpool FC",
        "Chelsea FC",
        "Arsenal",
        "Los Angeles Lakers",
        "Boston Celtics",
        "New York Yankees",
        "Ferrari",
        "Red Bull Racing",
    ],
    sentences: &[
        "{ORG} beat {ORG2} in the match at {FAC} on {DATE}.",
        "{PERSON} scored twice as {ORG} won the league title in front of a crowd in {GPE}.",
        "The coach of {ORG} said the team would play the final at {TIME} on {DATE}.",
        "{PERSON} ran the {QUANTITY} race in record time at the championship in {GPE}.",
        "The club signed {PERSON} from {ORG} for a transfer fee of {MONEY}.",
        "Fans celebrated the victory as the players lifted the cup.",
        "{ORG} lost the opening game but the manager praised the squad.",
        "The tournament will be held in {GPE} and {NORP} fans are expected to travel in large numbers.",
    ],
    cues: &[
        "match",
        "scored",
        "league",
        "club",
        "team",
        "coach",
        "fans",
        "tournament",
        "cup",
        "race",
        "united",
        "madrid",
        "barcelona",
        "bayern",
        "juventus",
        "liverpool",
        "chelsea",
        "arsenal",
        "lakers",
        "celtics",
        "yankees",
        "ferrari",
        "bull",
        "racing",
    ],
};

const POLITICS: Topic = Topic {
    orgs: &[
        "United Nations",
        "European Commission",
        "Labour Party",
        "Conservative Party",
        "Democratic Party",
        "Republican Party",
        "Ministry of Defence",
        "Department of Justice",
        "Supreme Court",
        "Treasury Department",
    ],
    sentences: &[
        "The {ORG} voted on {DATE} to back changes to the {LAW}, {PERSON} said.",
        "{PERSON} told parliament in {GPE} that the government would hold an election in {DATE}.",
        "Ministers from {GPE} and {GPE2} met at the {FAC} to discuss the treaty.",
        "The opposition accused the minister of breaking the {LAW}.",
        "Voters in {GPE} will decide the referendum, with polls showing {PERCENT} support.",
        "The prime minister promised {MONEY} for hospitals and schools.",
        "Officials from the {ORG} said the policy debate would continue.",
        "{NORP} lawmakers criticised the bill during the parliamentary session.",
    ],
    cues: &[
        "parliament",
        "election",
        "minister",
        "government",
        "voters",
        "referendum",
        "treaty",
        "opposition",
        "lawmakers",
        "policy",
        "nations",
        "commission",
        "labour",
        "conservative",
        "democratic",
        "republican",
        "ministry",
        "department",
        "court",
        "treasury",
        "justice",
    ],
};

const TECH: Topic = Topic {
    orgs: &[
        "Apple",
        "Google",
        "Microsoft",
        "Amazon",
        "Meta",
        "Tesla",
        "Samsung",
        "Huawei",
        "Nvidia",
        "Intel",
        "IBM",
        "OpenAI",
        "Cisco",
        "Oracle",
        "Alibaba",
        "Tencent",
    ],
    sentences: &[
        "{ORG} unveiled a new chip on {DATE} that it says is {PERCENT} faster than the previous model.",
        "{PERSON}, a software engineer at {ORG}, said the app would launch in {GPE}.",
        "The startup raised {MONEY} from investors to build data centres near {GPE}.",
        "Researchers at {ORG} trained a language model on data written in {LANGUAGE}.",
        "The company said a software update would fix the security flaw by {TIME}.",
        "Users reported that the phone and the network were down for hours.",
        "{ORG} and {ORG2} agreed to share patents on cloud computing and artificial intelligence.",
        "The device weighs {QUANTITY} and its battery lasts two days, according to {PERSON}.",
    ],
    cues: &[
        "chip",
        "software",
        "app",
        "startup",
        "data",
        "users",
        "network",
        "device",
        "battery",
        "patents",
        "apple",
        "google",
        "microsoft",
        "amazon",
        "meta",
        "tesla",
        "samsung",
        "huawei",
        "nvidia",
        "intel",
        "ibm",
        "openai",
        "cisco",
        "oracle",
        "alibaba",
        "tencent",
    ],
};

const ENTERTAINMENT: Topic = Topic {
    orgs: &[
        "Netflix",
        "Disney",
        "Warner Bros",
        "Universal Music",
        "Spotify",
        "Sony",
        "Nintendo",
    ],
    sentences: &[
        "{ORG} will release the film adaptation of {WORK} on {DATE}, {PERSON} said.",
        "{PERSON} won the award for best actress at the ceremony in {GPE}.",
        "The album topped the charts after {ORG} signed the band for {MONEY}.",
        "The festival in {GPE} sold out, with music fans queueing from {TIME}.",
        "Critics praised the new series, which was filmed near {LOC}.",
        "The singer announced a world tour and a new album.",
        "{ORG} said the show attracted {PERCENT} more viewers than the previous season.",
        "The director cast {PERSON} as the lead in the movie about {NORP} history.",
    ],
    cues: &[
        "film",
        "award",
        "album",
        "festival",
        "series",
        "singer",
        "director",
        "movie",
        "show",
        "tour",
        "netflix",
        "disney",
        "warner",
        "universal",
        "music",
        "spotify",
        "sony",
        "nintendo",
    ],
};

const NEUTRAL: &[&str] = &[
    "The statement was published on {DATE}.",
    "{PERSON} declined to comment when contacted by reporters.",
    "The announcement came during a press conference in {GPE}.",
    "More details are expected to be released later.",
    "The report was first published by {MEDIA}.",
    "Local residents said they had been waiting for news for weeks.",
    "A spokesperson confirmed the plans in an email to {MEDIA}.",
    "The meeting in {GPE} lasted until {TIME}.",
];

const MEDIA: &[&str] = &["Reuters", "BBC", "CNN", "The Guardian", "The New York Times"];

fn topic(label: &str) -> &'static Topic {
    match label {
        "business" => &BUSINESS,
        "entertainment" => &ENTERTAINMENT,
        "politics" => &POLITICS,
        "sport" => &SPORT,
        _ => &TECH,
    }
}

/// Keywords per label for the keyword classifier, organisation names of the
/// topic included.
pub fn keyword_table() -> BTreeMap<String, Vec<String>> {
    TOPICS
        .iter()
        .map(|t| (t.to_string(), topic(t).cues.iter().map(|s| s.to_string()).collect()))
        .collect()
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

struct Filler {
    rng: ChaCha8Rng,
    pools: BTreeMap<EntityType, Vec<String>>,
}

impl Filler {
    fn pick<'a>(&mut self, items: &'a [&'a str]) -> &'a str {
        items[self.rng.random_range(0..items.len())]
    }

    fn pool(&mut self, etype: EntityType) -> String {
        let pool = &self.pools[&etype];
        pool[self.rng.random_range(0..pool.len())].clone()
    }

    fn date(&mut self) -> String {
        let month = MONTHS[self.rng.random_range(0..12)];
        let day = self.rng.random_range(1..=28);
        let year = self.rng.random_range(2015..=2025);
        match self.rng.random_range(0..4) {
            0 => format!("{month} {day}, {year}"),
            1 => format!("{day} {month} {year}"),
            2 => format!("{month} {year}"),
            _ => year.to_string(),
        }
    }

    fn time(&mut self) -> String {
        let hour = self.rng.random_range(1..=12);
        let minute = self.rng.random_range(0..4) * 15;
        let mer = if self.rng.random_bool(0.5) { "a.m." } else { "p.m." };
        if minute == 0 {
            format!("{hour} {mer}")
        } else {
            format!("{hour}:{minute:02} {mer}")
        }
    }

    fn money(&mut self) -> String {
        let whole = self.rng.random_range(1..=950);
        let tenth = self.rng.random_range(0..10);
        let unit = self.pick(&["million", "billion"]);
        match self.rng.random_range(0..3) {
            0 => format!("${whole}.{tenth} {unit}"),
            1 => format!("€{whole} {unit}"),
            _ => format!("£{whole}.{tenth} {unit}"),
        }
    }

    fn percent(&mut self) -> String {
        let whole = self.rng.random_range(1..=60);
        if self.rng.random_bool(0.5) {
            format!("{whole}%")
        } else {
            format!("{whole}.{} percent", self.rng.random_range(1..10))
        }
    }

    fn quantity(&mut self) -> String {
        let n = self.rng.random_range(2..=900);
        let unit = self.pick(&["tonnes", "kilometres", "kg", "miles", "grams"]);
        format!("{n} {unit}")
    }

    fn fill(&mut self, template: &str, t: &Topic) -> String {
        let org = self.pick(t.orgs).to_string();
        let mut org2 = self.pick(t.orgs).to_string();
        while org2 == org && t.orgs.len() > 1 {
            org2 = self.pick(t.orgs).to_string();
        }
        let gpe = self.pool(EntityType::Gpe);
        let mut gpe2 = self.pool(EntityType::Gpe);
        while gpe2 == gpe {
            gpe2 = self.pool(EntityType::Gpe);
        }
        let mut out = String::with_capacity(template.len() + 64);
        let mut rest = template;
        while let Some(open) = rest.find('{') {
            out.push_str(&rest[..open]);
            let close = open + rest[open..].find('}').expect("closed slot");
            let value = match &rest[open + 1..close] {
                "ORG" => org.clone(),
                "ORG2" => org2.clone(),
                "GPE" => gpe.clone(),
                "GPE2" => gpe2.clone(),
                "PERSON" => self.pool(EntityType::Person),
                "NORP" => self.pool(EntityType::Norp),
                "FAC" => self.pool(EntityType::Fac),
                "LOC" => self.pool(EntityType::Loc),
                "LAW" => self.pool(EntityType::Law),
                "WORK" => self.pool(EntityType::WorkOfArt),
                "LANGUAGE" => self.pool(EntityType::Language),
                "MEDIA" => self.pick(MEDIA).to_string(),
                "DATE" => self.date(),
                "TIME" => self.time(),
                "MONEY" => self.money(),
                "PERCENT" => self.percent(),
                "QUANTITY" => self.quantity(),
                other => panic!("unknown slot {other}"),
            };
            out.push_str(&value);
            rest = &rest[close + 1..];
        }
        out.push_str(rest);
        out
    }
}

/// Entries usable as slot fillers: gazetteer lines that read naturally
/// after "in" or "the", without leading articles.
fn filler_pool(etype: EntityType) -> Vec<String> {
    let g = Gazetteer::builtin(etype).expect("builtin gazetteer");
    let mut v: Vec<String> = g
        .iter()
        .filter(|e| !e.starts_with("the ") && !e.contains(','))
        .map(String::from)
        .collect();
    if v.is_empty() {
        v = g.iter().map(String::from).collect();
    }
    v
}

/// `n` documents of roughly one kilobyte, reproducible from `seed`. Labels
/// cycle through [`TOPICS`] in a seeded order.
pub fn corpus(n: usize, seed: u64) -> Vec<SynthDoc> {
    let mut pools = BTreeMap::new();
    for t in [
        EntityType::Person,
        EntityType::Gpe,
        EntityType::Norp,
        EntityType::Fac,
        EntityType::Loc,
        EntityType::Law,
        EntityType::WorkOfArt,
        EntityType::Language,
    ] {
        pools.insert(t, filler_pool(t));
    }
    let mut f = Filler {
        rng: ChaCha8Rng::seed_from_u64(seed),
        pools,
    };
    (0..n)
        .map(|_| {
            let label = TOPICS[f.rng.random_range(0..TOPICS.len())];
            let t = topic(label);
            let n_sentences = f.rng.random_range(8..=12);
            let mut sentences = Vec::with_capacity(n_sentences);
            // The lead sentence always names an organisation of the topic.
            let leads: Vec<&str> = t.sentences.iter().copied().filter(|s| s.contains("{ORG}")).collect();
            let lead = leads[f.rng.random_range(0..leads.len())];
            sentences.push(f.fill(lead, t));
            for _ in 1..n_sentences {
                let template = if f.rng.random_bool(0.35) {
                    f.pick(t.sentences)
                } else {
                    f.pick(NEUTRAL)
                };
                sentences.push(f.fill(template, t));
            }
            SynthDoc {
                text: sentences.join(" "),
                label: label.to_string(),
            }
        })
        .collect()
}
