use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::da::DialogueAct;
use crate::corpus::delex::placeholder_slot;
use crate::error::{Error, Result};

/// Surface keywords that realise a non-lexical slot (for example
/// `kidsallowed → ["children", "kids"]`). Slots listed here count toward the
/// required total and are satisfied when any keyword token appears.
pub type SlotKeywords = BTreeMap<String, Vec<String>>;

/// Pooled slot error counts; they add across corpus partitions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotCounts {
    /// Required realisations absent from the output.
    pub missing: usize,
    /// Placeholders beyond what the act requires.
    pub redundant: usize,
    /// Required realisations.
    pub total: usize,
    /// Non-lexical slots left out of `total` for lack of keywords.
    pub excluded: usize,
}

impl SlotCounts {
    pub fn add(&mut self, o: &SlotCounts) {
        self.missing += o.missing;
        self.redundant += o.redundant;
        self.total += o.total;
        self.excluded += o.excluded;
    }

    /// `100 · (missing + redundant) / max(total, 1)`.
    pub fn rate(&self) -> f64 {
        100.0 * (self.missing + self.redundant) as f64 / self.total.max(1) as f64
    }
}

/// Counts placeholder mismatches of one delexicalised output against its act.
pub fn slot_counts(tokens: &[String], da: &DialogueAct, keywords: &SlotKeywords) -> SlotCounts {
    let mut required: HashMap<String, usize> = HashMap::new();
    let mut c = SlotCounts::default();
    for s in &da.slots {
        if s.is_lexical() {
            *required.entry(s.name.clone()).or_insert(0) += 1;
        } else if let Some(words) = keywords.get(&s.name) {
            c.total += 1;
            if !tokens.iter().any(|t| words.contains(t)) {
                c.missing += 1;
            }
        } else {
            c.excluded += 1;
        }
    }
    let mut produced: HashMap<String, usize> = HashMap::new();
    for name in tokens.iter().filter_map(|t| placeholder_slot(t)) {
        *produced.entry(name).or_insert(0) += 1;
    }
    for (name, &req) in &required {
        let got = produced.get(name).copied().unwrap_or(0);
        c.total += req;
        c.missing += req.saturating_sub(got);
    }
    for (name, &got) in &produced {
        let req = required.get(name).copied().unwrap_or(0);
        c.redundant += got.saturating_sub(req);
    }
    c
}

/// Corpus slot error rate (percentage) from pooled counts.
pub fn slot_error_rate(generated: &[Vec<String>], das: &[DialogueAct], keywords: &SlotKeywords) -> Result<(f64, SlotCounts)> {
    if generated.len() != das.len() {
        return Err(Error::Metrics(format!("{} outputs but {} dialogue acts", generated.len(), das.len())));
    }
    let mut total = SlotCounts::default();
    for (g, da) in generated.iter().zip(das) {
        total.add(&slot_counts(g, da, keywords));
    }
    if total.excluded > 0 {
        static WARNED: std::sync::Once = std::sync::Once::new();
        WARNED.call_once(|| log::warn!("non-lexical slots without configured keywords are excluded from the slot error rate"));
        log::debug!("{} non-lexical slots excluded", total.excluded);
    }
    Ok((total.rate(), total))
}
