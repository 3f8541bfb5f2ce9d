//! Differentiable layers with hand-derived backward passes.
//!
//! Every layer keeps its weights in a shared [`ParamStore`] and holds only
//! [`ParamId`] handles. `forward` returns the output plus a cache; `backward`
//! consumes that cache, adds parameter gradients into a gradient store with the
//! same layout, and returns the gradient with respect to the layer input.
//!
//! [`ParamStore`]: crate::numerics::ParamStore
//! [`ParamId`]: crate::numerics::ParamId

mod attention;
mod conv;
mod dense;
mod dropout;
mod lstm;
mod pool;

use serde::{Deserialize, Serialize};

use crate::numerics::{Rng, Scalar, Tensor};

pub use attention::{Attention, AttentionCache, AttentionForm};
pub use conv::{Conv1d, ConvCache};
pub use dense::{Activation, Dense, DenseCache};
pub use dropout::{dropout_backward, dropout_forward, embed_dropout_forward, embed_lookup, DropoutCache};
pub use lstm::{Lstm, LstmCache, LstmOutput};
pub use pool::{nth_max_pool, nth_max_pool_backward, Pooled};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Train,
    Eval,
}

/// Glorot-uniform matrix: `U(-a, a)` with `a = sqrt(6 / (fan_in + fan_out))`.
pub(crate) fn glorot<T: Scalar>(shape: &[usize], fan_in: usize, fan_out: usize, rng: &mut Rng) -> Tensor<T> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let mut t = Tensor::zeros(shape);
    for x in t.data_mut() {
        *x = rng.uniform_scalar(-limit, limit);
    }
    t
}

#[cfg(test)]
pub(crate) mod testutil {
    use crate::error::Result;
    use crate::numerics::{finite_diff_check, GradCheckReport, ParamStore, Rng, Scalar, Tensor};

    pub fn random_tensor(shape: &[usize], scale: f64, rng: &mut Rng) -> Tensor<f64> {
        let mut t = Tensor::zeros(shape);
        for x in t.data_mut() {
            *x = rng.uniform_range(-scale, scale);
        }
        t
    }

    /// Projects a layer output onto fixed random weights so every output
    /// element contributes to a scalar loss.
    pub fn weighted_sum<T: Scalar>(out: &Tensor<T>, weights: &Tensor<T>) -> T {
        out.data().iter().zip(weights.data()).map(|(&a, &b)| a * b).sum()
    }

    /// Gradient check where the layer input is registered as an extra parameter
    /// named `input`, so input gradients are checked alongside weights.
    pub fn check(
        params: &mut ParamStore<f64>,
        f: impl FnMut(&ParamStore<f64>) -> Result<(f64, ParamStore<f64>)>,
    ) -> GradCheckReport {
        finite_diff_check(f, params, 1e-5, 1e-4).unwrap()
    }
}
