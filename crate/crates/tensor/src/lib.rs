//! Reverse-mode automatic differentiation over dense `f64` tensors, with the
//! operator set a convolutional/recurrent text VAE needs, plus Adam.

mod error;
pub mod gradcheck;
pub mod graph;
pub mod init;
mod kernels;
pub mod nn;
pub mod optim;
pub mod param;
mod tensor;

pub use error::{Result, TensorError};
pub use graph::{Gradients, Graph, Var};
pub use nn::{dropout, lstm_step, Linear, LstmCell};
pub use optim::{clip_grad_norm, lr_schedule, Adam, LrSchedule};
pub use param::{ParamId, ParamStore, Parameter};
pub use tensor::Tensor;
