//! The generator family: encoders, latent network, decoders and decoding.

pub mod beam;
pub mod config;
pub mod decoders;
pub mod encoders;
pub mod latent;

use std::path::Path;

use dualnlg_tensor::{Graph, ParamStore, Tensor, Var};

use crate::corpus::da::DialogueAct;
use crate::corpus::vocab::Vocabulary;
use crate::error::{Error, Result};
use beam::{beam_search, BeamConfig, Hypothesis, StepModel};
use config::{ModelConfig, ModelKind};
use decoders::{DeconvDecoder, RecurrentDecoder, StepState};
use encoders::{CnnEncoder, DaEncoder, RnnEncoder, UtteranceEncoder};
use latent::{GaussianHead, Projection};

pub use beam::greedy_decode;
pub use latent::{kl_gaussians, kl_standard, reparameterize, DiagonalGaussian, GaussianVars};

/// Parameters and structure of one model. Which parts exist depends on the kind:
/// the baseline has only the act encoder and recurrent decoder; every
/// variational kind adds an utterance encoder, posterior, prior and the shared
/// projection; the autoencoder kinds add the auxiliary head and DCNN decoder.
#[derive(Debug, Clone)]
pub struct Model {
    pub kind: ModelKind,
    pub config: ModelConfig,
    pub vocab: Vocabulary,
    pub store: ParamStore,
    pub da: DaEncoder,
    pub utt: Option<UtteranceEncoder>,
    pub posterior: Option<GaussianHead>,
    pub prior: Option<GaussianHead>,
    pub aux: Option<GaussianHead>,
    pub proj: Option<Projection>,
    pub dec: RecurrentDecoder,
    pub dcnn: Option<DeconvDecoder>,
}

impl Model {
    /// Registers and initialises every parameter. Each parameter draws from
    /// its own `(seed, name)` stream, so parts shared between kinds start
    /// identical.
    pub fn new(kind: ModelKind, config: ModelConfig, vocab: &Vocabulary, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut store = ParamStore::new();
        let da = DaEncoder::register(&mut store, &config, vocab.num_slot_keys(), vocab.num_value_keys(), seed)?;
        let (h_d, h_u, z, clamp) = (config.da_dim(), config.utt_dim(kind), config.latent, config.logvar_clamp);
        let mut utt = None;
        let mut posterior = None;
        let mut prior = None;
        let mut aux = None;
        let mut proj = None;
        if kind.has_latent() {
            utt = Some(if kind.has_cnn() {
                UtteranceEncoder::Cnn(CnnEncoder::register(&mut store, &config, vocab.len(), seed)?)
            } else {
                UtteranceEncoder::Rnn(RnnEncoder::register(&mut store, &config, vocab.len(), seed)?)
            });
            posterior = Some(GaussianHead::register(&mut store, "post", h_d + h_u, z, true, clamp, seed)?);
            prior = Some(GaussianHead::register(&mut store, "prior", h_d, z, true, clamp, seed)?);
            if kind.has_autoencoder() {
                aux = Some(GaussianHead::register(&mut store, "aux", h_u, z, false, clamp, seed)?);
            }
            proj = Some(Projection::register(&mut store, z, config.proj, seed)?);
        }
        let dec = RecurrentDecoder::register(&mut store, &config, vocab.len(), kind.has_latent(), seed)?;
        let dcnn = if kind.has_autoencoder() { Some(DeconvDecoder::register(&mut store, &config, vocab.len(), seed)?) } else { None };
        Ok(Self { kind, config, vocab: vocab.clone(), store, da, utt, posterior, prior, aux, proj, dec, dcnn })
    }

    pub fn encode_da(&self, g: &mut Graph<'_>, da: &DialogueAct) -> Result<Var> {
        self.da.encode(g, &self.vocab.encode_da(da))
    }

    fn part<'a, T>(&self, p: &'a Option<T>, what: &str) -> Result<&'a T> {
        p.as_ref().ok_or_else(|| Error::Config(format!("{} model has no {what}", self.kind)))
    }

    pub fn utterance_encoder(&self) -> Result<&UtteranceEncoder> {
        self.part(&self.utt, "utterance encoder")
    }

    pub fn posterior_head(&self) -> Result<&GaussianHead> {
        self.part(&self.posterior, "posterior")
    }

    pub fn prior_head(&self) -> Result<&GaussianHead> {
        self.part(&self.prior, "prior")
    }

    pub fn aux_head(&self) -> Result<&GaussianHead> {
        self.part(&self.aux, "auxiliary posterior")
    }

    pub fn projection(&self) -> Result<&Projection> {
        self.part(&self.proj, "latent projection")
    }

    pub fn deconv(&self) -> Result<&DeconvDecoder> {
        self.part(&self.dcnn, "deconvolutional decoder")
    }

    /// What the recurrent decoder receives for a latent: `None` when the
    /// model has no latent or injection is switched off.
    pub fn decoder_latent(&self, h_e: Option<Var>) -> Option<Var> {
        if self.config.inject_latent {
            h_e
        } else {
            None
        }
    }

    /// Decode-time latent: the projection of the prior mean (or of a prior
    /// sample when `eps` is given).
    pub fn decode_latent(&self, g: &mut Graph<'_>, h_d: Var, eps: Option<Tensor>) -> Result<Option<Var>> {
        if !self.kind.has_latent() {
            return Ok(None);
        }
        let p = self.prior_head()?.forward(g, h_d)?;
        let z = match eps {
            Some(e) => reparameterize(g, p, e)?,
            None => p.mu,
        };
        Ok(Some(self.projection()?.forward(g, z)?))
    }

    /// Step-wise scorer for one act, in evaluation mode.
    pub fn decoding(&self, da: &DialogueAct, eps: Option<Tensor>) -> Result<Decoding<'_>> {
        let mut g = Graph::new(&self.store);
        let h_d = self.encode_da(&mut g, da)?;
        let h_e = self.decode_latent(&mut g, h_d, eps)?;
        let (st, term) = self.dec.start(&mut g, h_d, self.decoder_latent(h_e))?;
        let state = EvalState { h: g.value(st.h), c: g.value(st.c), d: g.value(st.d) };
        let term = term.map(|t| g.value(t));
        Ok(Decoding { model: self, start: state, term })
    }

    /// Beam search with the configured width and length normalisation.
    pub fn generate(&self, da: &DialogueAct) -> Result<Vec<Hypothesis>> {
        self.generate_with(da, self.config.beam_width)
    }

    pub fn generate_with(&self, da: &DialogueAct, width: usize) -> Result<Vec<Hypothesis>> {
        let cfg = BeamConfig { width, max_len: self.config.max_decode_len, length_penalty: self.config.length_penalty };
        beam_search(&self.decoding(da, None)?, cfg)
    }

    /// Teacher-forced next-token predictions with the decode-time latent;
    /// returns (correct, total) over the tokens of `ids` plus EOS.
    pub fn teacher_forced_accuracy(&self, da: &DialogueAct, ids: &[usize]) -> Result<(usize, usize)> {
        let dec = self.decoding(da, None)?;
        let mut state = dec.start()?;
        let mut prev = crate::corpus::vocab::BOS;
        let mut correct = 0;
        let targets: Vec<usize> = ids.iter().copied().chain(std::iter::once(crate::corpus::vocab::EOS)).collect();
        for &t in &targets {
            let (next, logp) = dec.step(&state, prev)?;
            let best = (0..logp.len()).fold(0, |b, i| if logp[i] > logp[b] { i } else { b });
            correct += usize::from(best == t);
            state = next;
            prev = t;
        }
        Ok((correct, targets.len()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(self.store.save(path)?)
    }

    /// Replaces parameter values with those of a checkpoint (matched by name).
    pub fn load_params(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let other = ParamStore::load(path)?;
        if other.len() != self.store.len() {
            return Err(Error::Vocabulary(format!(
                "checkpoint has {} parameters, a {} model has {}",
                other.len(),
                self.kind,
                self.store.len()
            )));
        }
        self.store.load_from(&other)?;
        Ok(())
    }
}

/// Recurrent state as plain tensors, for decoding outside a training graph.
#[derive(Debug, Clone)]
pub struct EvalState {
    pub h: Tensor,
    pub c: Tensor,
    pub d: Tensor,
}

pub struct Decoding<'m> {
    model: &'m Model,
    start: EvalState,
    term: Option<Tensor>,
}

impl StepModel for Decoding<'_> {
    type State = EvalState;

    fn start(&self) -> Result<EvalState> {
        Ok(self.start.clone())
    }

    fn step(&self, state: &EvalState, token: usize) -> Result<(EvalState, Vec<f64>)> {
        let mut g = Graph::new(&self.model.store);
        let st = StepState { h: g.constant(state.h.clone()), c: g.constant(state.c.clone()), d: g.constant(state.d.clone()) };
        let term = self.term.clone().map(|t| g.constant(t));
        let (next, feat) = self.model.dec.step(&mut g, st, token, term, None)?;
        let logp = self.model.dec.log_probs(&mut g, feat)?;
        Ok((EvalState { h: g.value(next.h), c: g.value(next.c), d: g.value(next.d) }, g.data(logp).to_vec()))
    }
}
