//! SCARN, concat-SCARN, a Kim-style CNN and the recurrent, averaging and
//! linear baselines.

mod linear;
mod model;
mod spec;

pub use linear::{fit_linear_baseline, linear_loss, LinearConfig, LinearModel};
pub use model::{build_model, label_from_probs, ForwardCache, Model, Output, Prediction};
pub use spec::{ModelKind, ModelSpec};
