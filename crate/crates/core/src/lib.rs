//! Sentence-pair modeling toolkit: five architectures (InferSent, SSE,
//! DecAtt, ESIM seq/tree, PWIM) over a shared stack of data ingestion,
//! encoders, alignment/interaction layers, training and evaluation, all on a
//! hand-built reverse-mode autodiff engine.

pub mod config;
pub mod data;
pub mod encoders;
pub mod evaluation;
pub mod interaction;
pub mod models;
pub mod tensor;
pub mod training;

pub use tensor::{Scalar, Tape, Tensor, TensorError};
