//! Text classification with SCARN and its baselines: a convolution-plus-
//! recurrence architecture over frozen word embeddings, trained with Adam.

pub mod error;
pub mod harness;
pub mod layers;
pub mod models;
pub mod numerics;
pub mod synthetic;
pub mod textpipe;
pub mod training;

pub use error::{Error, Result};

/// Double-precision instantiations used by the CLI and most callers.
pub type Tensor64 = numerics::Tensor<f64>;
pub type ParamStore64 = numerics::ParamStore<f64>;
pub type EmbeddingTable64 = textpipe::EmbeddingTable<f64>;
pub type Model64 = models::Model<f64>;
pub type LinearModel64 = models::LinearModel<f64>;
