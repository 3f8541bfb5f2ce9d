use crate::error::{Error, Result};
use crate::layers::Mode;
use crate::models::Model;
use crate::numerics::{ParamStore, Rng, Scalar};
use crate::textpipe::Example;

const CLAMP: f64 = 1e-12;

/// Cross-entropy of `probs` against `label` and its gradient with respect to
/// the logits that produced them.
///
/// A single probability is read as a sigmoid output `p(class 1)`; longer
/// vectors as a softmax. Probabilities are clamped to `[1e-12, 1 - 1e-12]`
/// before the log; the gradient is `p - onehot(label)` either way.
pub fn cross_entropy<T: Scalar>(probs: &[T], label: usize) -> Result<(T, Vec<T>)> {
    let lo = T::lit(CLAMP);
    let hi = T::lit(1.0 - CLAMP);
    let clamp = |p: T| p.max(lo).min(hi);
    match probs.len() {
        0 => Err(Error::arg("cross entropy of an empty probability vector")),
        1 => {
            if label > 1 {
                return Err(Error::arg(format!("label {label} out of range for a binary head")));
            }
            let p = probs[0];
            let loss = if label == 1 { -clamp(p).ln() } else { -(T::one() - clamp(p)).ln() };
            Ok((loss, vec![p - T::lit(label as f64)]))
        }
        n => {
            if label >= n {
                return Err(Error::arg(format!("label {label} out of range for {n} classes")));
            }
            let loss = -clamp(probs[label]).ln();
            let mut grad = probs.to_vec();
            grad[label] -= T::one();
            Ok((loss, grad))
        }
    }
}

/// Mean cross-entropy over `batch` and its gradient with respect to `params`,
/// which must share the model's layout. Examples are processed in order, so
/// the result is bit-reproducible for a given generator state.
pub fn batch_loss<T: Scalar>(
    model: &Model<T>,
    params: &ParamStore<T>,
    batch: &[&Example],
    mode: Mode,
    rng: &mut Rng,
) -> Result<(T, ParamStore<T>)> {
    if batch.is_empty() {
        return Err(Error::arg("empty batch"));
    }
    let scale = T::one() / T::lit(batch.len() as f64);
    let mut grads = params.zeros_like();
    let mut total = T::zero();
    for ex in batch {
        let (out, cache) = model.forward_example(params, ex, mode, rng)?;
        let (loss, mut dz) = cross_entropy(&out.probs, ex.label)?;
        total += loss;
        dz.iter_mut().for_each(|g| *g *= scale);
        model.backward_example(params, cache, &dz, &mut grads)?;
    }
    Ok((total * scale, grads))
}
