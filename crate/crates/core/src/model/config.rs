use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    /// Recurrent decoder conditioned on the act only; no latent variable.
    #[serde(rename = "ralstm")]
    Ralstm,
    /// Conditional VAE with a recurrent utterance encoder.
    #[serde(rename = "r-vnlg")]
    RVnlg,
    /// Conditional VAE with the convolutional utterance encoder.
    #[serde(rename = "c-vnlg")]
    CVnlg,
    /// C-VNLG plus the denoising CNN-DCNN autoencoder.
    #[serde(rename = "dualvae")]
    DualVae,
    /// DualVAE plus the act-conditioned DCNN reconstruction.
    #[serde(rename = "crossvae")]
    CrossVae,
}

pub const ALL_KINDS: [ModelKind; 5] = [ModelKind::Ralstm, ModelKind::RVnlg, ModelKind::CVnlg, ModelKind::DualVae, ModelKind::CrossVae];

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Ralstm => "ralstm",
            ModelKind::RVnlg => "r-vnlg",
            ModelKind::CVnlg => "c-vnlg",
            ModelKind::DualVae => "dualvae",
            ModelKind::CrossVae => "crossvae",
        }
    }

    pub fn has_latent(self) -> bool {
        self != ModelKind::Ralstm
    }

    pub fn has_cnn(self) -> bool {
        matches!(self, ModelKind::CVnlg | ModelKind::DualVae | ModelKind::CrossVae)
    }

    /// Whether the auxiliary autoencoder (and its DCNN decoder) exists.
    pub fn has_autoencoder(self) -> bool {
        matches!(self, ModelKind::DualVae | ModelKind::CrossVae)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ALL_KINDS
            .into_iter()
            .find(|k| k.name() == s.to_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown model `{s}` (expected one of ralstm, r-vnlg, c-vnlg, dualvae, crossvae)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvLayer {
    pub filters: usize,
    pub width: usize,
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub embed: usize,
    /// Hidden size per direction of the act encoder (h_D is twice this).
    pub da_hidden: usize,
    /// Hidden size per direction of the recurrent utterance encoder.
    pub utt_hidden: usize,
    pub dec_hidden: usize,
    pub latent: usize,
    /// Width of the shared projection h_e.
    pub proj: usize,
    /// Fixed utterance frame for the convolutional paths.
    pub max_len: usize,
    pub conv: Vec<ConvLayer>,
    pub keep_prob: f64,
    pub forget_bias: f64,
    pub logvar_clamp: f64,
    /// Feed h_e into the recurrent decoder's gates and initial state.
    pub inject_latent: bool,
    pub beam_width: usize,
    pub length_penalty: f64,
    /// Maximum number of generated tokens, EOS included.
    pub max_decode_len: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            embed: 100,
            da_hidden: 100,
            utt_hidden: 100,
            dec_hidden: 100,
            latent: 300,
            proj: 100,
            max_len: 73,
            conv: vec![
                ConvLayer { filters: 300, width: 5, stride: 2 },
                ConvLayer { filters: 600, width: 5, stride: 2 },
                ConvLayer { filters: 100, width: 16, stride: 2 },
            ],
            keep_prob: 0.7,
            forget_bias: 1.0,
            logvar_clamp: 10.0,
            inject_latent: true,
            beam_width: 10,
            length_penalty: 0.7,
            max_decode_len: 73,
        }
    }
}

impl ModelConfig {
    /// Feature-map lengths through the convolution stack, starting at `max_len`.
    pub fn conv_lengths(&self) -> Result<Vec<usize>> {
        let mut t = self.max_len;
        let mut out = vec![t];
        for (i, l) in self.conv.iter().enumerate() {
            if l.stride == 0 || l.width == 0 || l.filters == 0 {
                return Err(Error::Config(format!("conv layer {i} has a zero dimension")));
            }
            if t < l.width {
                return Err(Error::Config(format!("conv layer {i}: length {t} shorter than width {}", l.width)));
            }
            if !(t - l.width).is_multiple_of(l.stride) {
                return Err(Error::Config(format!(
                    "conv layer {i}: ({t} - {}) is not a multiple of stride {}; the deconvolution could not mirror it",
                    l.width, l.stride
                )));
            }
            t = (t - l.width) / l.stride + 1;
            out.push(t);
        }
        Ok(out)
    }

    pub fn da_dim(&self) -> usize {
        2 * self.da_hidden
    }

    pub fn utt_dim(&self, kind: ModelKind) -> usize {
        if kind.has_cnn() {
            self.conv.last().map_or(0, |l| l.filters)
        } else {
            2 * self.utt_hidden
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("embed", self.embed),
            ("da_hidden", self.da_hidden),
            ("utt_hidden", self.utt_hidden),
            ("dec_hidden", self.dec_hidden),
            ("latent", self.latent),
            ("proj", self.proj),
            ("beam_width", self.beam_width),
            ("max_decode_len", self.max_decode_len),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("`{name}` must be positive")));
            }
        }
        if self.conv.is_empty() {
            return Err(Error::Config("at least one conv layer is required".into()));
        }
        let lens = self.conv_lengths()?;
        if *lens.last().unwrap_or(&0) != 1 {
            return Err(Error::Config(format!("conv stack ends at length {:?}, expected 1", lens.last())));
        }
        if !(self.keep_prob > 0.0 && self.keep_prob <= 1.0) {
            return Err(Error::Config(format!("keep_prob {} outside (0, 1]", self.keep_prob)));
        }
        if !(self.logvar_clamp > 0.0) {
            return Err(Error::Config("logvar_clamp must be positive".into()));
        }
        if !(self.length_penalty >= 0.0) {
            return Err(Error::Config("length_penalty must be non-negative".into()));
        }
        Ok(())
    }

    /// A scaled-down geometry (frame 13 → 6 → 3 → 1) for fast tests.
    pub fn tiny() -> Self {
        Self {
            embed: 6,
            da_hidden: 4,
            utt_hidden: 4,
            dec_hidden: 5,
            latent: 4,
            proj: 3,
            max_len: 13,
            conv: vec![
                ConvLayer { filters: 5, width: 3, stride: 2 },
                ConvLayer { filters: 6, width: 2, stride: 2 },
                ConvLayer { filters: 4, width: 3, stride: 2 },
            ],
            keep_prob: 1.0,
            beam_width: 3,
            max_decode_len: 12,
            ..Self::default()
        }
    }
}
