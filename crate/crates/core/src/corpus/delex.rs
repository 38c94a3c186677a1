//! Tokenisation, delexicalisation and relexicalisation.

use crate::corpus::da::DialogueAct;

pub const PLACEHOLDER_PREFIX: &str = "SLOT_";

/// Lower-cases and splits into word tokens (alphanumerics and `_`, with an
/// apostrophe allowed inside a word) and single-character punctuation tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    let chars: Vec<char> = lower.chars().collect();
    let mut out = Vec::new();
    let mut word = String::new();
    let is_word = |c: char| c.is_alphanumeric() || c == '_';
    for (i, &c) in chars.iter().enumerate() {
        let inner_apostrophe = c == '\'' && !word.is_empty() && chars.get(i + 1).is_some_and(|n| is_word(*n));
        if is_word(c) || inner_apostrophe {
            word.push(c);
        } else {
            if !word.is_empty() {
                out.push(std::mem::take(&mut word));
            }
            if !c.is_whitespace() {
                out.push(c.to_string());
            }
        }
    }
    if !word.is_empty() {
        out.push(word);
    }
    out
}

pub fn placeholder(slot_name: &str) -> String {
    format!("{PLACEHOLDER_PREFIX}{}", slot_name.to_uppercase())
}

/// Slot name of a placeholder token, if it is one.
pub fn placeholder_slot(token: &str) -> Option<String> {
    token.strip_prefix(PLACEHOLDER_PREFIX).filter(|rest| !rest.is_empty() && !rest.chars().any(|c| c.is_lowercase())).map(str::to_lowercase)
}

/// One replaced span: the placeholder sits at `position` in the token list and
/// stands for slot `slot` of the dialogue act.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alignment {
    pub position: usize,
    pub slot: usize,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Utterance {
    pub tokens: Vec<String>,
    pub alignment: Vec<Alignment>,
}

impl Utterance {
    pub fn from_tokens(tokens: Vec<String>) -> Self {
        Self { tokens, alignment: Vec::new() }
    }

    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }

    pub fn placeholders(&self) -> impl Iterator<Item = String> + '_ {
        self.tokens.iter().filter_map(|t| placeholder_slot(t))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Delexicalized {
    pub utterance: Utterance,
    /// Lexical slot values that were not found in the text.
    pub lint: Vec<String>,
}

/// Replaces slot values by `SLOT_<NAME>` placeholders.
///
/// The surface is scanned left to right; at each position the longest value
/// among the still-unconsumed lexical slots wins, ties going to the earliest
/// slot in act order. Each slot is replaced at most once.
pub fn delexicalize(surface: &str, da: &DialogueAct) -> Delexicalized {
    let tokens = tokenize(surface);
    let values: Vec<Option<Vec<String>>> =
        da.slots.iter().map(|s| if s.is_lexical() { s.value.as_deref().map(tokenize).filter(|v| !v.is_empty()) } else { None }).collect();
    let mut consumed = vec![false; da.slots.len()];
    let mut out = Vec::with_capacity(tokens.len());
    let mut alignment = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let mut best: Option<(usize, usize)> = None;
        for (k, v) in values.iter().enumerate() {
            let Some(v) = v else { continue };
            if consumed[k] || i + v.len() > tokens.len() || tokens[i..i + v.len()] != v[..] {
                continue;
            }
            if best.is_none_or(|(_, len)| v.len() > len) {
                best = Some((k, v.len()));
            }
        }
        match best {
            Some((k, len)) => {
                consumed[k] = true;
                alignment.push(Alignment { position: out.len(), slot: k, value: tokens[i..i + len].join(" ") });
                out.push(placeholder(&da.slots[k].name));
                i += len;
            }
            None => {
                out.push(tokens[i].clone());
                i += 1;
            }
        }
    }
    let lint = values
        .iter()
        .enumerate()
        .filter(|(k, v)| v.is_some() && !consumed[*k])
        .map(|(k, _)| format!("value of `{}` not found: {}", da.slots[k].name, da.slots[k].value.as_deref().unwrap_or("")))
        .collect();
    Delexicalized { utterance: Utterance { tokens: out, alignment }, lint }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relexicalized {
    pub text: String,
    /// Placeholders for which no unconsumed slot of that name remained.
    pub redundant: Vec<String>,
}

/// Fills each placeholder with the first unconsumed lexical slot of the same
/// name. Placeholders without a match are left in place and reported.
pub fn relexicalize(tokens: &[String], da: &DialogueAct) -> Relexicalized {
    let mut consumed = vec![false; da.slots.len()];
    let mut redundant = Vec::new();
    let mut words = Vec::with_capacity(tokens.len());
    for t in tokens {
        let Some(name) = placeholder_slot(t) else {
            words.push(t.clone());
            continue;
        };
        let hit = da.slots.iter().enumerate().position(|(k, s)| !consumed[k] && s.name == name && s.is_lexical());
        match hit {
            Some(k) => {
                consumed[k] = true;
                words.push(tokenize(da.slots[k].value.as_deref().unwrap_or("")).join(" "));
            }
            None => {
                redundant.push(t.clone());
                words.push(t.clone());
            }
        }
    }
    Relexicalized { text: words.join(" "), redundant }
}
