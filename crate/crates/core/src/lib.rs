//! Dual latent variable generator for dialogue-act-to-text NLG.

// `!(x > 0.0)` is how the validators reject NaN along with the bad range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corpus;
pub mod error;
pub mod eval;
pub mod model;
pub mod training;

pub use error::{Error, Result};
