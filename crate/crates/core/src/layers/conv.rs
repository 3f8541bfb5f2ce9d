use super::glorot;
use crate::error::{Error, Result};
use crate::numerics::{axpy, dot, ParamId, ParamStore, Rng, Scalar, Tensor};

/// Convolution over word windows. Each filter spans the full embedding width,
/// so `w` consecutive rows of an `[N, d]` input produce one row of `K` values.
/// With `w = 1` this is a per-word feature transform.
#[derive(Debug, Clone)]
pub struct Conv1d {
    weight: ParamId,
    bias: ParamId,
    in_dim: usize,
    filters: usize,
    window: usize,
}

/// Input and pre-activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ConvCache<T> {
    input: Tensor<T>,
    pre: Vec<T>,
}

impl Conv1d {
    /// Registers `{prefix}.weight` `[K, w*d]` and `{prefix}.bias` `[K]`.
    pub fn new<T: Scalar>(
        params: &mut ParamStore<T>,
        prefix: &str,
        in_dim: usize,
        filters: usize,
        window: usize,
        rng: &mut Rng,
    ) -> Result<Self> {
        if in_dim == 0 || filters == 0 || window == 0 {
            return Err(Error::arg(format!(
                "conv needs positive sizes, got d={in_dim} K={filters} w={window}"
            )));
        }
        let fan_in = window * in_dim;
        let weight = params.register(
            format!("{prefix}.weight"),
            glorot(&[filters, fan_in], fan_in, filters, rng),
        )?;
        let bias = params.register(format!("{prefix}.bias"), Tensor::zeros(&[filters]))?;
        Ok(Conv1d { weight, bias, in_dim, filters, window })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn filters(&self) -> usize {
        self.filters
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn weight(&self) -> ParamId {
        self.weight
    }

    pub fn bias(&self) -> ParamId {
        self.bias
    }

    /// `out[t, k] = relu(I[t..t+w].flatten() . L[k] + b[k])`, shape `[N-w+1, K]`.
    pub fn forward<T: Scalar>(&self, params: &ParamStore<T>, input: &Tensor<T>) -> Result<(Tensor<T>, ConvCache<T>)> {
        if input.rank() != 2 || input.shape()[1] != self.in_dim {
            return Err(Error::Dimension {
                op: "conv1d",
                left: input.shape().to_vec(),
                right: vec![self.window, self.in_dim],
            });
        }
        let n = input.shape()[0];
        if self.window > n {
            return Err(Error::arg(format!("window {} longer than sequence of {n} rows", self.window)));
        }
        let rows = n - self.window + 1;
        let span = self.window * self.in_dim;
        let w = params.get(self.weight).data();
        let b = params.get(self.bias).data();
        let x = input.data();
        let mut pre = Vec::with_capacity(rows * self.filters);
        for t in 0..rows {
            let win = &x[t * self.in_dim..t * self.in_dim + span];
            for k in 0..self.filters {
                pre.push(dot(win, &w[k * span..(k + 1) * span]) + b[k]);
            }
        }
        let out = pre.iter().map(|&v| v.max(T::zero())).collect();
        let out = Tensor::new(vec![rows, self.filters], out)?;
        Ok((out, ConvCache { input: input.clone(), pre }))
    }

    /// Adds weight and bias gradients into `grads` and returns `dL/dI`.
    pub fn backward<T: Scalar>(
        &self,
        params: &ParamStore<T>,
        cache: ConvCache<T>,
        dout: &Tensor<T>,
        grads: &mut ParamStore<T>,
    ) -> Result<Tensor<T>> {
        Ok(self.backward_impl(params, cache, dout, grads, true)?.expect("input gradient requested"))
    }

    /// Like [`Conv1d::backward`] but skips the input gradient, for inputs that
    /// are frozen embeddings.
    pub fn backward_params<T: Scalar>(
        &self,
        params: &ParamStore<T>,
        cache: ConvCache<T>,
        dout: &Tensor<T>,
        grads: &mut ParamStore<T>,
    ) -> Result<()> {
        self.backward_impl(params, cache, dout, grads, false).map(|_| ())
    }

    fn backward_impl<T: Scalar>(
        &self,
        params: &ParamStore<T>,
        cache: ConvCache<T>,
        dout: &Tensor<T>,
        grads: &mut ParamStore<T>,
        want_input: bool,
    ) -> Result<Option<Tensor<T>>> {
        let rows = cache.pre.len() / self.filters;
        if dout.shape() != [rows, self.filters] {
            return Err(Error::Dimension {
                op: "conv1d backward",
                left: dout.shape().to_vec(),
                right: vec![rows, self.filters],
            });
        }
        let span = self.window * self.in_dim;
        let x = cache.input.data();
        let dpre: Vec<T> = cache
            .pre
            .iter()
            .zip(dout.data())
            .map(|(&p, &g)| if p > T::zero() { g } else { T::zero() })
            .collect();

        {
            let db = grads.get_mut(self.bias).data_mut();
            for t in 0..rows {
                for k in 0..self.filters {
                    db[k] += dpre[t * self.filters + k];
                }
            }
        }
        {
            let dw = grads.get_mut(self.weight).data_mut();
            for t in 0..rows {
                let win = &x[t * self.in_dim..t * self.in_dim + span];
                for k in 0..self.filters {
                    let g = dpre[t * self.filters + k];
                    if g != T::zero() {
                        axpy(g, win, &mut dw[k * span..(k + 1) * span]);
                    }
                }
            }
        }
        if !want_input {
            return Ok(None);
        }
        let w = params.get(self.weight).data();
        let mut dx = Tensor::zeros(cache.input.shape());
        let dxd = dx.data_mut();
        for t in 0..rows {
            for k in 0..self.filters {
                let g = dpre[t * self.filters + k];
                if g != T::zero() {
                    axpy(g, &w[k * span..(k + 1) * span], &mut dxd[t * self.in_dim..t * self.in_dim + span]);
                }
            }
        }
        Ok(Some(dx))
    }
}
