//! A small convolutional MNIST classifier trained with Adam.
//!
//! Everything is written out by hand: im2col convolutions on top of
//! `matrixmultiply`, explicit backward passes, and a fixed work split across
//! images so results are bit-identical for any thread count.
//!
//! - [`model`]: the classifier and its forward/backward passes
//! - [`adam`]: the optimizer
//! - [`train`]: training loop, evaluation and topologization preprocessing
//! - [`checkpoint`]: flat little-endian weight files

pub mod adam;
pub mod checkpoint;
pub mod gradcheck;
pub mod model;
pub mod ops;
pub mod real;
pub mod tensor;
pub mod train;

use thiserror::Error;

pub use adam::{Adam, AdamConfig};
pub use model::{ClassifierModel, DropoutKey, Mode};
pub use real::Real;
pub use tensor::Tensor;
pub use train::{evaluate, train, EpochMetrics, EvalSchedule, Preprocess, TrainConfig};

#[derive(Debug, Error)]
pub enum NnError {
    #[error("{layer}: expected shape {expected:?}, got {got:?}")]
    Shape {
        layer: &'static str,
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    #[error("label {0} out of range")]
    Label(u8),
    #[error("dataset {0:?} is empty")]
    EmptyDataset(String),
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error(transparent)]
    Topologize(#[from] topolayer::topologize::TopologizeError),
}
