//! Dialogue acts, delexicalised utterances, vocabularies and data splits.

pub mod da;
pub mod dataset;
pub mod delex;
pub mod noise;
pub mod scenario;
pub mod synth;
pub mod vocab;

pub use da::{parse_da, DialogueAct, Slot};
pub use dataset::{DelexExample, Domain, Example};
pub use delex::{delexicalize, relexicalize, tokenize, Utterance};
pub use noise::corrupt_swap;
pub use scenario::{make_scenario, Pair, Scenario, ScenarioKind, ScenarioSpec};
pub use vocab::Vocabulary;
