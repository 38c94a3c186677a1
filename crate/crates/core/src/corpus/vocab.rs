//! Token and dialogue-act key tables.

use std::collections::{BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::da::DialogueAct;
use crate::error::{Error, Result};

pub const PAD: usize = 0;
pub const BOS: usize = 1;
pub const EOS: usize = 2;
pub const UNK: usize = 3;
const RESERVED: [&str; 4] = ["<pad>", "<s>", "</s>", "<unk>"];

pub const KEY_UNK: usize = 0;
pub const KEY_SENTINEL: usize = 1;
const SLOT_RESERVED: [&str; 3] = ["<unk>", "<sentinel>", "<act>"];
const VALUE_RESERVED: [&str; 4] = ["<unk>", "<sentinel>", "<none>", "<value>"];

/// Slot-name/value keys fed to the act encoder. The act type comes first as
/// an `<act>` pair; an act without slots gets a trailing sentinel pair.
pub fn da_keys(da: &DialogueAct) -> Vec<(String, String)> {
    let mut keys = vec![("<act>".to_string(), format!("act:{}", da.act_type))];
    for s in &da.slots {
        let value = match &s.value {
            None => "<none>".to_string(),
            Some(_) if s.is_lexical() => "<value>".to_string(),
            Some(v) => v.trim().to_lowercase(),
        };
        keys.push((s.name.clone(), value));
    }
    if da.slots.is_empty() {
        keys.push(("<sentinel>".to_string(), "<sentinel>".to_string()));
    }
    keys
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct Table {
    items: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Table {
    fn new(reserved: &[&str], rest: BTreeSet<String>) -> Self {
        let mut items: Vec<String> = reserved.iter().map(|s| s.to_string()).collect();
        items.extend(rest.into_iter().filter(|t| !reserved.contains(&t.as_str())));
        let mut t = Self { items, index: HashMap::new() };
        t.reindex();
        t
    }

    fn reindex(&mut self) {
        self.index = self.items.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
    }

    fn get(&self, s: &str) -> Option<usize> {
        self.index.get(s).copied()
    }
}

/// Bijective token ↔ id maps; ids 0–3 are PAD, BOS, EOS and UNK.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Vocabulary {
    tokens: Table,
    slots: Table,
    values: Table,
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.tokens.items == other.tokens.items && self.slots.items == other.slots.items && self.values.items == other.values.items
    }
}

impl Vocabulary {
    /// Builds the tables from delexicalised token sequences and their acts;
    /// entries are sorted so the result does not depend on input order.
    pub fn build<'a>(utterances: impl IntoIterator<Item = &'a [String]>, acts: impl IntoIterator<Item = &'a DialogueAct>) -> Self {
        let tokens: BTreeSet<String> = utterances.into_iter().flatten().cloned().collect();
        let mut slots = BTreeSet::new();
        let mut values = BTreeSet::new();
        for da in acts {
            for (s, v) in da_keys(da) {
                slots.insert(s);
                values.insert(v);
            }
        }
        Self {
            tokens: Table::new(&RESERVED, tokens),
            slots: Table::new(&SLOT_RESERVED, slots),
            values: Table::new(&VALUE_RESERVED, values),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.items.is_empty()
    }

    pub fn num_slot_keys(&self) -> usize {
        self.slots.items.len()
    }

    pub fn num_value_keys(&self) -> usize {
        self.values.items.len()
    }

    pub fn id(&self, token: &str) -> usize {
        self.tokens.get(token).unwrap_or(UNK)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.tokens.get(token).is_some()
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens.items[id]
    }

    /// Ids for `tokens`; unknown tokens map to UNK.
    pub fn encode(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t)).collect()
    }

    /// Tokens for `ids`, dropping PAD/BOS and stopping at EOS.
    pub fn decode(&self, ids: &[usize]) -> Vec<String> {
        ids.iter().take_while(|&&i| i != EOS).filter(|&&i| i != PAD && i != BOS).map(|&i| self.token(i).to_string()).collect()
    }

    /// `(slot key id, value key id)` pairs for an act.
    pub fn encode_da(&self, da: &DialogueAct) -> Vec<(usize, usize)> {
        da_keys(da).iter().map(|(s, v)| (self.slots.get(s).unwrap_or(KEY_UNK), self.values.get(v).unwrap_or(KEY_UNK))).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let mut v: Vocabulary = serde_json::from_str(s)?;
        for t in [&mut v.tokens, &mut v.slots, &mut v.values] {
            t.reindex();
            if t.index.len() != t.items.len() {
                return Err(Error::Vocabulary("duplicate entries".into()));
            }
        }
        if v.tokens.items.len() < RESERVED.len() || v.tokens.items[..RESERVED.len()] != RESERVED {
            return Err(Error::Vocabulary("reserved token ids are not in place".into()));
        }
        Ok(v)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Errors unless both vocabularies are identical.
    pub fn ensure_same(&self, other: &Vocabulary) -> Result<()> {
        if self != other {
            return Err(Error::Vocabulary(format!(
                "{} tokens / {} slot keys vs {} tokens / {} slot keys",
                self.len(),
                self.num_slot_keys(),
                other.len(),
                other.num_slot_keys()
            )));
        }
        Ok(())
    }
}
