//! Template-driven synthetic corpora in the JSON-lines format.
//!
//! `restaurant` and `hotel` share most slots and phrasing (a close pair), as do
//! `tv` and `laptop`. `synthetic` is a hotel-like domain with its own names.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::da::{DialogueAct, Slot};
use crate::corpus::dataset::{domain_dir, write_jsonl, Example};
use crate::error::{Error, Result};

pub const DOMAINS: [&str; 5] = ["synthetic", "restaurant", "hotel", "tv", "laptop"];

struct SlotSpec {
    name: &'static str,
    values: Vec<String>,
    /// Phrases with `{}` marking the value.
    phrases: &'static [&'static str],
    question: &'static str,
}

struct BinarySpec {
    name: &'static str,
    yes: &'static [&'static str],
    no: &'static [&'static str],
}

struct DomainSpec {
    entity: &'static str,
    names: Vec<String>,
    slots: Vec<SlotSpec>,
    binary: Vec<BinarySpec>,
    comparable: bool,
}

fn words(s: &str) -> Vec<String> {
    s.split(',').map(|w| w.trim().to_string()).collect()
}

fn names(first: &str, second: &str) -> Vec<String> {
    let (a, b) = (words(first), words(second));
    a.iter().flat_map(|x| b.iter().map(move |y| format!("{x} {y}"))).collect()
}

fn numbered(prefix: &str, range: std::ops::RangeInclusive<u32>, suffix: &str) -> Vec<String> {
    range.map(|i| format!("{prefix}{i}{suffix}")).collect()
}

const AREA: &[&str] = &["in the {} area", "located in the {}", "in the {} part of town"];
const PRICE: &[&str] = &["in the {} price range", "with {} prices"];
const NEAR: &[&str] = &["near {}", "close to {}"];
const ADDRESS: &[&str] = &["at {}", "located at {}"];
const PHONE: &[&str] = &["with phone number {}", "reachable on {}"];
const POSTCODE: &[&str] = &["with postcode {}", "in postcode {}"];

fn venue_slots() -> Vec<SlotSpec> {
    vec![
        SlotSpec { name: "area", values: words("north, south, east, west, centre, riverside"), phrases: AREA, question: "which area" },
        SlotSpec { name: "pricerange", values: words("cheap, moderate, expensive"), phrases: PRICE, question: "what price range" },
        SlotSpec {
            name: "near",
            values: words("the station, the cathedral, the market square, the museum, the park, the harbour"),
            phrases: NEAR,
            question: "what landmark should it be near",
        },
        SlotSpec { name: "address", values: numbered("", 1..=40, " mill road"), phrases: ADDRESS, question: "what address" },
        SlotSpec { name: "phone", values: numbered("555 01", 10..=60, ""), phrases: PHONE, question: "what phone number" },
        SlotSpec { name: "postcode", values: numbered("cb", 1..=12, " 9ab"), phrases: POSTCODE, question: "which postcode" },
    ]
}

fn spec(domain: &str) -> Result<DomainSpec> {
    let d = match domain {
        "restaurant" => {
            let mut slots = venue_slots();
            slots.insert(
                0,
                SlotSpec {
                    name: "food",
                    values: words("italian, chinese, indian, french, thai, seafood, vegetarian, british"),
                    phrases: &["serving {} food", "that serves {} food"],
                    question: "what kind of food",
                },
            );
            DomainSpec {
                entity: "restaurant",
                names: names("golden, silver, royal, little, blue, green, old, happy", "kitchen, bistro, grill, table, spoon, garden"),
                slots,
                binary: vec![BinarySpec { name: "kidsallowed", yes: &["that welcomes children"], no: &["that does not allow children"] }],
                comparable: false,
            }
        }
        "hotel" | "synthetic" => {
            let (first, second) = if domain == "hotel" {
                ("golden, silver, royal, grand, little, blue, old, quiet", "lodge, inn, house, court, view, rooms")
            } else {
                ("amber, cedar, maple, harbor, summit, willow, coral, ivory", "hotel, suites, lodge, residence, manor, retreat")
            };
            DomainSpec {
                entity: "hotel",
                names: names(first, second),
                slots: venue_slots(),
                binary: vec![
                    BinarySpec { name: "dogsallowed", yes: &["that allows dogs"], no: &["that does not allow dogs"] },
                    BinarySpec { name: "hasinternet", yes: &["with internet"], no: &["without internet"] },
                ],
                comparable: false,
            }
        }
        "tv" => DomainSpec {
            entity: "television",
            names: names("typhon, hades, apollo, hermes, ares, zeus", "45, 48, 52, 60, 71"),
            slots: vec![
                SlotSpec {
                    name: "family",
                    values: words("l1, l2, l7, l9, hx"),
                    phrases: &["in the {} family", "from the {} family"],
                    question: "which family",
                },
                SlotSpec {
                    name: "screensize",
                    values: numbered("", 30..=60, " inch"),
                    phrases: &["with a {} screen", "that has a {} screen"],
                    question: "what screen size",
                },
                SlotSpec {
                    name: "resolution",
                    values: words("720p, 1080p, 4k"),
                    phrases: &["with {} resolution", "at {}"],
                    question: "what resolution",
                },
                SlotSpec {
                    name: "hdmiport",
                    values: numbered("", 1..=4, ""),
                    phrases: &["with {} hdmi ports", "that has {} hdmi ports"],
                    question: "how many hdmi ports",
                },
                SlotSpec {
                    name: "price",
                    values: numbered("", 2..=30, "00 dollars"),
                    phrases: &["priced at {}", "costing {}"],
                    question: "what price",
                },
                SlotSpec {
                    name: "powerconsumption",
                    values: numbered("", 40..=90, " watts"),
                    phrases: &["using {}", "that draws {}"],
                    question: "what power consumption",
                },
            ],
            binary: vec![BinarySpec { name: "isforbusiness", yes: &["for business use"], no: &["for home use"] }],
            comparable: true,
        },
        "laptop" => DomainSpec {
            entity: "laptop",
            names: names("satellite, tecra, portege, aspire, swift", "alpha, beta, gamma, delta, sigma"),
            slots: vec![
                SlotSpec {
                    name: "family",
                    values: words("l1, l2, l7, l9, hx"),
                    phrases: &["in the {} family", "from the {} family"],
                    question: "which family",
                },
                SlotSpec {
                    name: "memory",
                    values: numbered("", 2..=32, " gb"),
                    phrases: &["with {} of memory", "that has {} of memory"],
                    question: "how much memory",
                },
                SlotSpec {
                    name: "drive",
                    values: numbered("", 1..=8, "00 gb"),
                    phrases: &["with a {} drive", "that has a {} drive"],
                    question: "what drive size",
                },
                SlotSpec {
                    name: "battery",
                    values: numbered("", 3..=12, " hours"),
                    phrases: &["with {} of battery", "lasting {}"],
                    question: "what battery life",
                },
                SlotSpec {
                    name: "price",
                    values: numbered("", 2..=30, "00 dollars"),
                    phrases: &["priced at {}", "costing {}"],
                    question: "what price",
                },
                SlotSpec {
                    name: "weight",
                    values: numbered("", 1..=4, " kg"),
                    phrases: &["weighing {}", "that weighs {}"],
                    question: "what weight",
                },
            ],
            binary: vec![BinarySpec { name: "isforbusiness", yes: &["for business use"], no: &["for home use"] }],
            comparable: true,
        },
        other => return Err(Error::UnknownDomain(other.to_string())),
    };
    Ok(d)
}

fn fill(template: &str, value: &str) -> String {
    template.replacen("{}", value, 1)
}

fn pick<'a, R: Rng>(xs: &'a [&'a str], rng: &mut R) -> &'a str {
    xs.choose(rng).copied().unwrap_or("")
}

fn join_phrases(parts: &[String]) -> String {
    match parts {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(" , ")),
    }
}

enum Attr<'a> {
    Lexical(&'a SlotSpec, String),
    Binary(&'a BinarySpec, bool),
}

impl Attr<'_> {
    fn slot(&self) -> Slot {
        match self {
            Attr::Lexical(s, v) => Slot::new(s.name, Some(v)),
            Attr::Binary(b, yes) => Slot::new(b.name, Some(if *yes { "yes" } else { "no" })),
        }
    }

    fn phrase<R: Rng>(&self, rng: &mut R) -> String {
        match self {
            Attr::Lexical(s, v) => fill(pick(s.phrases, rng), v),
            Attr::Binary(b, yes) => pick(if *yes { b.yes } else { b.no }, rng).to_string(),
        }
    }
}

fn attrs<'a, R: Rng>(d: &'a DomainSpec, n: usize, with_binary: bool, rng: &mut R) -> Vec<Attr<'a>> {
    let mut chosen: Vec<&SlotSpec> = d.slots.iter().collect();
    chosen.shuffle(rng);
    let mut out: Vec<Attr<'a>> =
        chosen.into_iter().take(n).map(|s| Attr::Lexical(s, s.values.choose(rng).cloned().unwrap_or_default())).collect();
    if with_binary {
        if let Some(b) = d.binary.choose(rng) {
            out.push(Attr::Binary(b, rng.gen_bool(0.5)));
        }
    }
    out
}

type Realizer<'a, R> = Box<dyn Fn(&mut R) -> String + 'a>;

fn example<R: Rng>(d: &DomainSpec, rng: &mut R, refs: usize) -> Example {
    let t = d.entity;
    let roll = rng.gen_range(0..100);
    let (act, slots, realize): (&str, Vec<Slot>, Realizer<'_, R>) = if roll < 45 {
        let name = d.names.choose(rng).cloned().unwrap_or_default();
        let n = rng.gen_range(1..=3);
        let binary = rng.gen_bool(0.3);
        let a = attrs(d, n, binary, rng);
        let mut slots = vec![Slot::new("name", Some(&name))];
        slots.extend(a.iter().map(Attr::slot));
        let act = if rng.gen_bool(0.25) { "recommend" } else { "inform" };
        let f = move |rng: &mut R| {
            let parts: Vec<String> = a.iter().map(|x| x.phrase(rng)).collect();
            let body = join_phrases(&parts);
            let opener = if act == "recommend" {
                pick(&["i recommend {n} , a {t}", "you might like {n} , a {t}", "how about {n} , a {t}"], rng)
            } else {
                pick(&["{n} is a {t}", "{n} is a nice {t}", "there is a {t} called {n}"], rng)
            };
            format!("{} {body} .", opener.replace("{n}", &name).replace("{t}", t))
        };
        (act, slots, Box::new(f))
    } else if roll < 55 && d.comparable {
        let mut pool = d.names.clone();
        pool.shuffle(rng);
        let (n1, n2) = (pool[0].clone(), pool[1].clone());
        let a = attrs(d, 2, false, rng);
        let b: Vec<Attr> = a
            .iter()
            .map(|x| match x {
                Attr::Lexical(s, _) => Attr::Lexical(s, s.values.choose(rng).cloned().unwrap_or_default()),
                Attr::Binary(s, v) => Attr::Binary(s, !v),
            })
            .collect();
        let mut slots = vec![Slot::new("name", Some(&n1))];
        slots.extend(a.iter().map(Attr::slot));
        slots.push(Slot::new("name", Some(&n2)));
        slots.extend(b.iter().map(Attr::slot));
        let f = move |rng: &mut R| {
            let pa: Vec<String> = a.iter().map(|x| x.phrase(rng)).collect();
            let pb: Vec<String> = b.iter().map(|x| x.phrase(rng)).collect();
            let joiner = pick(&["whereas", "while", "but"], rng);
            format!("the {n1} is {} , {joiner} the {n2} is {} .", join_phrases(&pa), join_phrases(&pb))
        };
        ("compare", slots, Box::new(f))
    } else if roll < 65 {
        let a = attrs(d, rng.gen_range(1..=2), false, rng);
        let slots = a.iter().map(Attr::slot).collect();
        let f = move |rng: &mut R| {
            let body = join_phrases(&a.iter().map(|x| x.phrase(rng)).collect::<Vec<_>>());
            let opener = pick(&["there is no {t}", "sorry , i could not find a {t}", "i am sorry , there is no {t}"], rng);
            format!("{} {body} .", opener.replace("{t}", t))
        };
        ("inform_no_match", slots, Box::new(f))
    } else if roll < 75 {
        let count = rng.gen_range(2..=19).to_string();
        let a = attrs(d, 1, false, rng);
        let mut slots = vec![Slot::new("count", Some(&count))];
        slots.extend(a.iter().map(Attr::slot));
        let f = move |rng: &mut R| {
            let body = a[0].phrase(rng);
            let opener = pick(&["there are {c} {t}s", "i found {c} {t}s", "we have {c} {t}s"], rng);
            format!("{} {body} .", opener.replace("{c}", &count).replace("{t}", t))
        };
        ("inform_count", slots, Box::new(f))
    } else if roll < 85 {
        let s = d.slots.choose(rng).expect("domain has slots");
        let slots = vec![Slot::new(s.name, None)];
        let f = move |rng: &mut R| {
            let q = pick(&["{q} are you looking for ?", "{q} would you like ?", "could you tell me {q} you want ?"], rng);
            q.replace("{q}", s.question)
        };
        ("request", slots, Box::new(f))
    } else if roll < 93 {
        let a = attrs(d, 1, false, rng);
        let slots = a.iter().map(Attr::slot).collect();
        let f = move |rng: &mut R| {
            let body = a[0].phrase(rng);
            let q = pick(&["do you want a {t} {b} ?", "did you say a {t} {b} ?", "so you need a {t} {b} ?"], rng);
            q.replace("{t}", t).replace("{b}", &body)
        };
        ("confirm", slots, Box::new(f))
    } else {
        let f = move |rng: &mut R| {
            pick(&["thank you , goodbye .", "goodbye and have a nice day .", "thanks for using our service , goodbye ."], rng).to_string()
        };
        ("goodbye", Vec::new(), Box::new(f))
    };
    let refs = (0..refs).map(|_| realize(rng)).collect();
    Example { da: DialogueAct::new(act, slots), refs }
}

/// `n` examples with `refs` references each.
pub fn generate(domain: &str, n: usize, refs: usize, seed: u64) -> Result<Vec<Example>> {
    let d = spec(domain)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ dualnlg_tensor::init::fnv1a(domain.as_bytes()));
    Ok((0..n).map(|_| example(&d, &mut rng, refs.max(1))).collect())
}

/// Writes `<data>/<domain>/{train,valid,test}.jsonl` with a 60/20/20 split.
pub fn write_domain(data: &Path, domain: &str, n: usize, refs: usize, seed: u64) -> Result<()> {
    let all = generate(domain, n, refs, seed)?;
    let n_train = (n as f64 * 0.6).round() as usize;
    let n_valid = (n as f64 * 0.2).round() as usize;
    let dir = domain_dir(data, domain);
    std::fs::create_dir_all(&dir)?;
    write_jsonl(&dir.join("train.jsonl"), &all[..n_train])?;
    write_jsonl(&dir.join("valid.jsonl"), &all[n_train..n_train + n_valid])?;
    write_jsonl(&dir.join("test.jsonl"), &all[n_train + n_valid..])?;
    Ok(())
}
