use super::Mode;
use crate::error::{Error, Result};
use crate::numerics::{Rng, Scalar, Tensor};
use crate::textpipe::EmbeddingTable;

/// Scaled keep-mask of an inverted-dropout application; `None` means identity.
#[derive(Debug, Clone)]
pub struct DropoutCache<T> {
    mask: Option<Vec<T>>,
}

impl<T: Scalar> DropoutCache<T> {
    pub fn identity() -> Self {
        DropoutCache { mask: None }
    }

    pub fn from_mask(mask: Vec<T>) -> Self {
        DropoutCache { mask: Some(mask) }
    }

    pub fn mask(&self) -> Option<&[T]> {
        self.mask.as_deref()
    }
}

/// Inverted dropout: in train mode each value is kept with probability `1 - p`
/// and scaled by `1 / (1 - p)`; eval mode is the identity.
pub fn dropout_forward<T: Scalar>(x: &Tensor<T>, p: f64, mode: Mode, rng: &mut Rng) -> Result<(Tensor<T>, DropoutCache<T>)> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::arg(format!("dropout rate {p} outside [0, 1)")));
    }
    if mode == Mode::Eval || p == 0.0 {
        return Ok((x.clone(), DropoutCache::identity()));
    }
    let scale = T::lit(1.0 / (1.0 - p));
    let mask: Vec<T> = (0..x.len())
        .map(|_| if rng.bernoulli(p) { T::zero() } else { scale })
        .collect();
    let mut y = x.clone();
    for (v, &m) in y.data_mut().iter_mut().zip(&mask) {
        *v *= m;
    }
    Ok((y, DropoutCache::from_mask(mask)))
}

pub fn dropout_backward<T: Scalar>(cache: &DropoutCache<T>, dy: &Tensor<T>) -> Tensor<T> {
    match &cache.mask {
        None => dy.clone(),
        Some(mask) => {
            let mut dx = dy.clone();
            for (v, &m) in dx.data_mut().iter_mut().zip(mask) {
                *v *= m;
            }
            dx
        }
    }
}

/// Stacks the table rows for `ids` into an `[ids.len(), d]` tensor.
pub fn embed_lookup<T: Scalar>(ids: &[u32], table: &EmbeddingTable<T>) -> Result<Tensor<T>> {
    if ids.is_empty() {
        return Err(Error::arg("embedding lookup of an empty sequence"));
    }
    let d = table.dim();
    let mut data = Vec::with_capacity(ids.len() * d);
    for &id in ids {
        data.extend_from_slice(table.row(id)?);
    }
    Tensor::new(vec![ids.len(), d], data)
}

/// Row lookup followed by inverted dropout. The table is frozen, so there is
/// no gradient beyond the dropout mask.
pub fn embed_dropout_forward<T: Scalar>(
    ids: &[u32],
    table: &EmbeddingTable<T>,
    p: f64,
    mode: Mode,
    rng: &mut Rng,
) -> Result<(Tensor<T>, DropoutCache<T>)> {
    let x = embed_lookup(ids, table)?;
    dropout_forward(&x, p, mode, rng)
}
