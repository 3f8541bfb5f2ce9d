use serde::{Deserialize, Serialize};

use super::glorot;
use crate::error::{Error, Result};
use crate::numerics::{axpy, dot, softmax_in_place, ParamId, ParamStore, Rng, Scalar, Tensor};

/// How attention scores are computed from hidden states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttentionForm {
    /// `s_t = u_a . tanh(W_a h_t + b_a)` with `W_a` square.
    #[default]
    Additive,
    /// `s_t = v . h_t + b`.
    Minimal,
    /// `s_t = tanh(v . h_t + b_t)`, one bias per position.
    PositionBiased,
}

impl AttentionForm {
    pub fn name(self) -> &'static str {
        match self {
            AttentionForm::Additive => "additive",
            AttentionForm::Minimal => "minimal",
            AttentionForm::PositionBiased => "position_biased",
        }
    }

    /// Number of scalars for hidden size `h` and `positions` timesteps.
    pub fn param_count(self, h: usize, positions: usize) -> usize {
        match self {
            AttentionForm::Additive => h * h + 2 * h,
            AttentionForm::Minimal => h + 1,
            AttentionForm::PositionBiased => h + positions,
        }
    }
}

#[derive(Debug, Clone)]
enum Weights {
    Additive { w: ParamId, b: ParamId, u: ParamId },
    Minimal { v: ParamId, b: ParamId },
    PositionBiased { v: ParamId, b: ParamId },
}

/// Soft attention pooling over a `[T, H]` sequence with a pad mask.
#[derive(Debug, Clone)]
pub struct Attention {
    form: AttentionForm,
    weights: Weights,
    hidden: usize,
    positions: usize,
}

#[derive(Debug, Clone)]
pub struct AttentionCache<T> {
    hseq: Tensor<T>,
    mask: Vec<bool>,
    alphas: Vec<T>,
    /// Additive: `tanh(W_a h_t + b_a)` rows. PositionBiased: the scores.
    inner: Vec<T>,
}

impl Attention {
    /// `positions` bounds the sequence length for the position-biased form
    /// and is ignored by the others.
    pub fn new<T: Scalar>(
        params: &mut ParamStore<T>,
        prefix: &str,
        form: AttentionForm,
        hidden: usize,
        positions: usize,
        rng: &mut Rng,
    ) -> Result<Self> {
        if hidden == 0 || (form == AttentionForm::PositionBiased && positions == 0) {
            return Err(Error::arg(format!(
                "attention needs positive sizes, got H={hidden} positions={positions}"
            )));
        }
        let weights = match form {
            AttentionForm::Additive => Weights::Additive {
                w: params.register(format!("{prefix}.w"), glorot(&[hidden, hidden], hidden, hidden, rng))?,
                b: params.register(format!("{prefix}.b"), Tensor::zeros(&[hidden]))?,
                u: params.register(format!("{prefix}.u"), glorot(&[hidden], hidden, 1, rng))?,
            },
            AttentionForm::Minimal => Weights::Minimal {
                v: params.register(format!("{prefix}.v"), glorot(&[hidden], hidden, 1, rng))?,
                b: params.register(format!("{prefix}.b"), Tensor::zeros(&[1]))?,
            },
            AttentionForm::PositionBiased => Weights::PositionBiased {
                v: params.register(format!("{prefix}.v"), glorot(&[hidden], hidden, 1, rng))?,
                b: params.register(format!("{prefix}.b"), Tensor::zeros(&[positions]))?,
            },
        };
        Ok(Attention { form, weights, hidden, positions })
    }

    pub fn form(&self) -> AttentionForm {
        self.form
    }

    /// Returns the context `Σ α_t h_t` (`[H]`) and the weights `α` (`[T]`).
    /// Masked-out positions (`mask[t] == false`) get `α_t = 0` exactly.
    pub fn forward<T: Scalar>(
        &self,
        params: &ParamStore<T>,
        hseq: &Tensor<T>,
        mask: &[bool],
    ) -> Result<(Tensor<T>, Tensor<T>, AttentionCache<T>)> {
        let h = self.hidden;
        if hseq.rank() != 2 || hseq.shape()[1] != h || mask.len() != hseq.shape()[0] {
            return Err(Error::Dimension {
                op: "attention",
                left: hseq.shape().to_vec(),
                right: vec![mask.len(), h],
            });
        }
        let steps = mask.len();
        if !mask.contains(&true) {
            return Err(Error::arg("attention over a sequence with no real positions"));
        }
        if self.form == AttentionForm::PositionBiased && steps > self.positions {
            return Err(Error::arg(format!(
                "sequence of {steps} steps exceeds {} attention positions",
                self.positions
            )));
        }
        let mut scores = vec![T::zero(); steps];
        let mut inner = Vec::new();
        match &self.weights {
            Weights::Additive { w, b, u } => {
                let (w, b, u) = (params.get(*w).data(), params.get(*b).data(), params.get(*u).data());
                inner = vec![T::zero(); steps * h];
                for t in 0..steps {
                    let ht = hseq.row(t);
                    let ut = &mut inner[t * h..(t + 1) * h];
                    for a in 0..h {
                        ut[a] = (dot(&w[a * h..(a + 1) * h], ht) + b[a]).tanh();
                    }
                    scores[t] = dot(ut, u);
                }
            }
            Weights::Minimal { v, b } => {
                let (v, b) = (params.get(*v).data(), params.get(*b).data()[0]);
                for t in 0..steps {
                    scores[t] = dot(v, hseq.row(t)) + b;
                }
            }
            Weights::PositionBiased { v, b } => {
                let (v, b) = (params.get(*v).data(), params.get(*b).data());
                for t in 0..steps {
                    scores[t] = (dot(v, hseq.row(t)) + b[t]).tanh();
                }
                inner = scores.clone();
            }
        }

        let real: Vec<usize> = (0..steps).filter(|&t| mask[t]).collect();
        let mut sub: Vec<T> = real.iter().map(|&t| scores[t]).collect();
        softmax_in_place(&mut sub)?;
        let mut alphas = vec![T::zero(); steps];
        for (&t, &a) in real.iter().zip(&sub) {
            alphas[t] = a;
        }
        let mut context = vec![T::zero(); h];
        for &t in &real {
            axpy(alphas[t], hseq.row(t), &mut context);
        }
        let cache = AttentionCache {
            hseq: hseq.clone(),
            mask: mask.to_vec(),
            alphas: alphas.clone(),
            inner,
        };
        Ok((Tensor::vector(context)?, Tensor::vector(alphas)?, cache))
    }

    /// Returns `dL/dH` (`[T, H]`) from the context gradient; rows at masked
    /// positions are zero.
    pub fn backward<T: Scalar>(
        &self,
        params: &ParamStore<T>,
        cache: AttentionCache<T>,
        dcontext: &Tensor<T>,
        grads: &mut ParamStore<T>,
    ) -> Result<Tensor<T>> {
        let h = self.hidden;
        if dcontext.shape() != [h] {
            return Err(Error::Dimension {
                op: "attention backward",
                left: dcontext.shape().to_vec(),
                right: vec![h],
            });
        }
        let dc = dcontext.data();
        let steps = cache.mask.len();
        let mut dh = Tensor::zeros(cache.hseq.shape());
        let real: Vec<usize> = (0..steps).filter(|&t| cache.mask[t]).collect();

        // softmax backward restricted to real positions
        let dalpha: Vec<T> = (0..steps).map(|t| dot(dc, cache.hseq.row(t))).collect();
        let mean: T = real.iter().map(|&t| cache.alphas[t] * dalpha[t]).sum();
        let mut ds = vec![T::zero(); steps];
        for &t in &real {
            ds[t] = cache.alphas[t] * (dalpha[t] - mean);
            axpy(cache.alphas[t], dc, dh.row_mut(t));
        }

        match &self.weights {
            Weights::Additive { w, b, u } => {
                let wv = params.get(*w).data();
                let uv = params.get(*u).data();
                let mut dpre = vec![T::zero(); h];
                for &t in &real {
                    let ut = &cache.inner[t * h..(t + 1) * h];
                    axpy(ds[t], ut, grads.get_mut(*u).data_mut());
                    for a in 0..h {
                        dpre[a] = ds[t] * uv[a] * (T::one() - ut[a] * ut[a]);
                    }
                    let ht = cache.hseq.row(t);
                    {
                        let dw = grads.get_mut(*w).data_mut();
                        for a in 0..h {
                            axpy(dpre[a], ht, &mut dw[a * h..(a + 1) * h]);
                        }
                    }
                    axpy(T::one(), &dpre, grads.get_mut(*b).data_mut());
                    let row = dh.row_mut(t);
                    for a in 0..h {
                        axpy(dpre[a], &wv[a * h..(a + 1) * h], row);
                    }
                }
            }
            Weights::Minimal { v, b } => {
                let vv = params.get(*v).data();
                for &t in &real {
                    axpy(ds[t], cache.hseq.row(t), grads.get_mut(*v).data_mut());
                    grads.get_mut(*b).data_mut()[0] += ds[t];
                    axpy(ds[t], vv, dh.row_mut(t));
                }
            }
            Weights::PositionBiased { v, b } => {
                let vv = params.get(*v).data();
                for &t in &real {
                    let s = cache.inner[t];
                    let dpre = ds[t] * (T::one() - s * s);
                    axpy(dpre, cache.hseq.row(t), grads.get_mut(*v).data_mut());
                    grads.get_mut(*b).data_mut()[t] += dpre;
                    axpy(dpre, vv, dh.row_mut(t));
                }
            }
        }
        Ok(dh)
    }
}
