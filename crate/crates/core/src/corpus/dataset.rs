//! JSON-lines corpora: one `{"da": "...", "refs": ["...", ...]}` object per line,
//! stored as `<data>/<domain>/{train,valid,test}.jsonl`.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::da::{parse_da, DialogueAct};
use crate::corpus::delex::{delexicalize, Utterance};
use crate::error::{Error, Result};

pub const SPLITS: [&str; 3] = ["train", "valid", "test"];

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    da: String,
    refs: Vec<String>,
}

/// A dialogue act with its surface references.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub da: DialogueAct,
    pub refs: Vec<String>,
}

/// An example after delexicalisation; `refs` stay aligned with the raw ones.
#[derive(Debug, Clone, PartialEq)]
pub struct DelexExample {
    pub da: DialogueAct,
    pub refs: Vec<Utterance>,
}

impl DelexExample {
    pub fn from_example(ex: &Example) -> (Self, Vec<String>) {
        let mut lint = Vec::new();
        let refs = ex
            .refs
            .iter()
            .map(|r| {
                let d = delexicalize(r, &ex.da);
                lint.extend(d.lint.into_iter().map(|l| format!("{}: {l}", ex.da)));
                d.utterance
            })
            .collect();
        (Self { da: ex.da.clone(), refs }, lint)
    }
}

pub fn read_jsonl(path: &Path) -> Result<Vec<Example>> {
    let file = std::fs::File::open(path)?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| Error::Corpus { path: path.display().to_string(), line: i + 1, message };
        let rec: Record = serde_json::from_str(&line).map_err(|e| err(e.to_string()))?;
        let da = parse_da(&rec.da).map_err(|e| err(e.to_string()))?;
        if rec.refs.is_empty() {
            return Err(err("example has no references".into()));
        }
        out.push(Example { da, refs: rec.refs });
    }
    Ok(out)
}

pub fn write_jsonl(path: &Path, examples: &[Example]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for ex in examples {
        let rec = Record { da: ex.da.to_string(), refs: ex.refs.clone() };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// The three splits of one domain, delexicalised.
#[derive(Debug, Clone)]
pub struct Domain {
    pub name: String,
    pub train: Vec<DelexExample>,
    pub valid: Vec<DelexExample>,
    pub test: Vec<DelexExample>,
    pub lint: Vec<String>,
}

pub fn domain_dir(data: &Path, name: &str) -> PathBuf {
    data.join(name)
}

impl Domain {
    pub fn load(data: &Path, name: &str) -> Result<Self> {
        let dir = domain_dir(data, name);
        if !dir.is_dir() {
            return Err(Error::UnknownDomain(name.to_string()));
        }
        let mut lint = Vec::new();
        let mut splits = Vec::new();
        for split in SPLITS {
            let raw = read_jsonl(&dir.join(format!("{split}.jsonl")))?;
            let mut ds = Vec::with_capacity(raw.len());
            for ex in &raw {
                let (d, l) = DelexExample::from_example(ex);
                lint.extend(l);
                ds.push(d);
            }
            splits.push(ds);
        }
        let test = splits.pop().unwrap_or_default();
        let valid = splits.pop().unwrap_or_default();
        let train = splits.pop().unwrap_or_default();
        Ok(Self { name: name.to_string(), train, valid, test, lint })
    }
}

/// SHA-256 over the split files of the named domains, in the given order.
pub fn corpus_hash(data: &Path, domains: &[String]) -> Result<String> {
    let mut h = Sha256::new();
    for d in domains {
        for split in SPLITS {
            let p = domain_dir(data, d).join(format!("{split}.jsonl"));
            h.update(d.as_bytes());
            h.update(split.as_bytes());
            h.update(std::fs::read(&p).map_err(|_| Error::UnknownDomain(d.clone()))?);
        }
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}
