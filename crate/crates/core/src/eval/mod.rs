//! BLEU and slot error rate, generation files, and seed-aggregated reports.

pub mod bleu;
pub mod err;
pub mod report;

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::da::{parse_da, DialogueAct};
use crate::corpus::dataset::DelexExample;
use crate::error::{Error, Result};
use crate::model::Model;

pub use bleu::{corpus_bleu, sentence_stats, BleuStats};
pub use err::{slot_counts, slot_error_rate, SlotCounts, SlotKeywords};
pub use report::{MetricsReport, ReportRow, SeedScore};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub bleu: f64,
    /// Percentage.
    pub err: f64,
    pub counts: SlotCounts,
}

/// Scores delexicalised outputs against the examples' references and acts.
pub fn score(generated: &[Vec<String>], examples: &[DelexExample], keywords: &SlotKeywords) -> Result<Scores> {
    if generated.len() != examples.len() {
        return Err(Error::Metrics(format!("{} outputs for {} examples", generated.len(), examples.len())));
    }
    let refs: Vec<Vec<Vec<String>>> = examples.iter().map(|e| e.refs.iter().map(|u| u.tokens.clone()).collect()).collect();
    let das: Vec<DialogueAct> = examples.iter().map(|e| e.da.clone()).collect();
    let bleu = corpus_bleu(generated, &refs)?;
    let (err, counts) = slot_error_rate(generated, &das, keywords)?;
    Ok(Scores { bleu, err, counts })
}

/// Best beam hypothesis for each act, as tokens.
pub fn generate_top(model: &Model, das: &[DialogueAct], width: Option<usize>) -> Result<Vec<Vec<String>>> {
    let width = width.unwrap_or(model.config.beam_width);
    das.iter()
        .map(|da| {
            let hyps = model.generate_with(da, width)?;
            Ok(model.vocab.decode(&hyps[0].tokens))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub tokens: Vec<String>,
    pub score: f64,
}

/// One line of a generation file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub da: String,
    pub top_k: Vec<Scored>,
}

/// Decodes every example and keeps the `k` best hypotheses.
pub fn generate_records(model: &Model, examples: &[DelexExample], k: usize) -> Result<Vec<GenerationRecord>> {
    examples
        .iter()
        .map(|ex| {
            let hyps = model.generate(&ex.da)?;
            let top_k = hyps.iter().take(k.max(1)).map(|h| Scored { tokens: model.vocab.decode(&h.tokens), score: h.score }).collect();
            Ok(GenerationRecord { da: ex.da.to_string(), top_k })
        })
        .collect()
}

/// Scores the top hypothesis of each record against the aligned examples.
pub fn evaluate_records(records: &[GenerationRecord], examples: &[DelexExample], keywords: &SlotKeywords) -> Result<Scores> {
    if records.len() != examples.len() {
        return Err(Error::Metrics(format!("{} generations for {} examples", records.len(), examples.len())));
    }
    let mut gens = Vec::with_capacity(records.len());
    for (i, (r, ex)) in records.iter().zip(examples).enumerate() {
        if parse_da(&r.da)? != ex.da {
            return Err(Error::Metrics(format!("generation {} is for `{}`, expected `{}`", i + 1, r.da, ex.da)));
        }
        let top = r.top_k.first().ok_or_else(|| Error::Metrics(format!("generation {} has no hypotheses", i + 1)))?;
        gens.push(top.tokens.clone());
    }
    score(&gens, examples, keywords)
}

pub fn write_generations(path: &Path, records: &[GenerationRecord]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut f, r)?;
        f.write_all(b"\n")?;
    }
    f.flush()?;
    Ok(())
}

pub fn read_generations(path: &Path) -> Result<Vec<GenerationRecord>> {
    let f = BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in f.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Corpus {
            path: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}
