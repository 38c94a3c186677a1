#![allow(dead_code)]

use dualnlg::corpus::scenario::{pairs, Pair};
use dualnlg::corpus::{parse_da, synth, DelexExample, DialogueAct, Vocabulary};
use dualnlg::model::config::{ModelConfig, ModelKind};
use dualnlg::model::Model;
use dualnlg::training::Encoded;

pub fn toks(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

/// A tiny hand-made corpus covering lexical, binary and value-less slots.
pub fn toy_pairs() -> Vec<Pair> {
    [
        ("inform(name='x'; area='y')", "SLOT_NAME is in the SLOT_AREA ."),
        ("inform(name='x'; kidsallowed=yes)", "SLOT_NAME welcomes children ."),
        ("request(area)", "which area do you want ?"),
        ("goodbye()", "goodbye ."),
    ]
    .iter()
    .map(|(d, u)| Pair { da: parse_da(d).unwrap(), tokens: toks(u) })
    .collect()
}

pub fn vocab_of(ps: &[Pair]) -> Vocabulary {
    Vocabulary::build(ps.iter().map(|p| p.tokens.as_slice()), ps.iter().map(|p| &p.da))
}

pub fn tiny_model(kind: ModelKind, seed: u64) -> (Model, Vec<Encoded>) {
    let ps = toy_pairs();
    let vocab = vocab_of(&ps);
    let model = Model::new(kind, ModelConfig::tiny(), &vocab, seed).unwrap();
    let enc = ps.iter().map(|p| Encoded { da: p.da.clone(), ids: vocab.encode(&p.tokens) }).collect();
    (model, enc)
}

pub fn da(s: &str) -> DialogueAct {
    parse_da(s).unwrap()
}

pub fn synthetic(domain: &str, n: usize, seed: u64) -> Vec<DelexExample> {
    synth::generate(domain, n, 2, seed).unwrap().iter().map(|e| DelexExample::from_example(e).0).collect()
}

pub fn synthetic_pairs(domain: &str, n: usize, seed: u64) -> Vec<Pair> {
    pairs(&synthetic(domain, n, seed))
}

use dualnlg::corpus::{Domain, ScenarioSpec};
use dualnlg::model::config::ConvLayer;
use dualnlg::training::TrainConfig;

/// The default 73-token frame and strides with narrow layers.
pub fn narrow_model() -> ModelConfig {
    ModelConfig {
        embed: 16,
        da_hidden: 16,
        utt_hidden: 16,
        dec_hidden: 24,
        latent: 8,
        proj: 16,
        conv: vec![
            ConvLayer { filters: 16, width: 5, stride: 2 },
            ConvLayer { filters: 24, width: 5, stride: 2 },
            ConvLayer { filters: 16, width: 16, stride: 2 },
        ],
        beam_width: 3,
        max_decode_len: 30,
        ..ModelConfig::default()
    }
}

pub fn quick_config() -> TrainConfig {
    let mut c = TrainConfig {
        model: narrow_model(),
        batch_size: 8,
        max_epochs: 3,
        patience: 2,
        seeds: vec![1],
        finetune_epochs: 2,
        valid_limit: Some(12),
        valid_beam: Some(1),
        ..TrainConfig::default()
    };
    c.anneal.kl_warmup_steps = 20;
    c.anneal.alpha_decay_steps = 20;
    c
}

pub fn synthetic_domain(name: &str, n: usize, seed: u64) -> Domain {
    let all = synthetic(name, n, seed);
    let (a, b) = ((n as f64 * 0.6).round() as usize, (n as f64 * 0.8).round() as usize);
    Domain { name: name.into(), train: all[..a].to_vec(), valid: all[a..b].to_vec(), test: all[b..].to_vec(), lint: Vec::new() }
}

pub fn spec(name: &str, target: &str, sources: &[&str]) -> ScenarioSpec {
    let s: Vec<String> = sources.iter().map(|s| s.to_string()).collect();
    ScenarioSpec::parse(name, target, &s, 0).unwrap()
}

use dualnlg::training::{batch_loss, LossOptions, Noise, Objective};
use dualnlg_tensor::gradcheck::check_gradients;
use dualnlg_tensor::Graph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const GRAD_OPTS: LossOptions = LossOptions { mc_samples: 1, train: true, denoise: true, keep_prob: 1.0 };

/// Central finite differences over every parameter entry of a tiny model on
/// two examples (plus two utterance-only ones when `unlabeled`). Returns the
/// worst relative error, the number of entries checked and the worst entry.
pub fn max_gradient_error(kind: ModelKind, obj: Objective, unlabeled: bool) -> (f64, usize, String) {
    let (mut m, enc) = tiny_model(kind, 21);
    // Zero biases over zero PAD embeddings put ReLU inputs exactly on the kink.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let biases: Vec<_> = m.store.iter().filter(|(_, p)| p.name.ends_with("bias")).map(|(id, _)| id).collect();
    for id in biases {
        m.store.value_mut(id).data_mut().iter_mut().for_each(|v| *v += rng.gen_range(-0.1..0.1));
    }
    let batch = &enc[..2];
    let unl: Vec<Vec<usize>> = if unlabeled { enc[2..].iter().map(|e| e.ids.clone()).collect() } else { Vec::new() };
    let loss_of = |s: &dualnlg_tensor::ParamStore| {
        let mut g = Graph::new(s);
        let (loss, _) = batch_loss(&mut g, &m, batch, &unl, obj, 0.7, 0.4, &mut Noise::new(5), &GRAD_OPTS).unwrap();
        (g.data(loss)[0], g.backward(loss).unwrap())
    };
    let (_, grads) = loss_of(&m.store);
    let mut store = m.store.clone();
    let r = check_gradients(&mut store, &grads, 1e-6, None, 1, |s| Ok(loss_of(s).0)).unwrap();
    (r.max_rel_error, r.checked, r.worst)
}

/// Medium widths on the default 73-token frame, with a learning rate and
/// anneal lengths suited to a few hundred labeled pairs.
pub fn desk_config() -> TrainConfig {
    let mut c = TrainConfig {
        model: ModelConfig {
            embed: 32,
            da_hidden: 32,
            utt_hidden: 32,
            dec_hidden: 64,
            latent: 16,
            proj: 32,
            conv: vec![
                ConvLayer { filters: 32, width: 5, stride: 2 },
                ConvLayer { filters: 48, width: 5, stride: 2 },
                ConvLayer { filters: 32, width: 16, stride: 2 },
            ],
            beam_width: 5,
            max_decode_len: 40,
            ..ModelConfig::default()
        },
        batch_size: 8,
        max_epochs: 60,
        patience: 10,
        seeds: vec![1, 2, 3, 4, 5],
        finetune_epochs: 60,
        valid_limit: Some(60),
        valid_beam: Some(1),
        ..TrainConfig::default()
    };
    c.lr.initial = 0.005;
    c.lr.hold_epochs = 20;
    c.anneal.kl_warmup_steps = 300;
    c.anneal.alpha_decay_steps = 300;
    c
}
