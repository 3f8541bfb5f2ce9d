use serde::{Deserialize, Serialize};

use super::glorot;
use crate::error::{Error, Result};
use crate::numerics::{axpy, dot, sigmoid, softmax_in_place, ParamId, ParamStore, Rng, Scalar, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    None,
    Relu,
    Sigmoid,
    Softmax,
}

/// Fully connected layer `y = act(W x + b)` on a vector.
#[derive(Debug, Clone)]
pub struct Dense {
    weight: ParamId,
    bias: ParamId,
    in_dim: usize,
    out_dim: usize,
    activation: Activation,
}

#[derive(Debug, Clone)]
pub struct DenseCache<T> {
    x: Vec<T>,
    y: Vec<T>,
}

impl Dense {
    pub fn new<T: Scalar>(
        params: &mut ParamStore<T>,
        prefix: &str,
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
        rng: &mut Rng,
    ) -> Result<Self> {
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::arg(format!("dense needs positive sizes, got {in_dim} -> {out_dim}")));
        }
        let weight = params.register(format!("{prefix}.weight"), glorot(&[out_dim, in_dim], in_dim, out_dim, rng))?;
        let bias = params.register(format!("{prefix}.bias"), Tensor::zeros(&[out_dim]))?;
        Ok(Dense { weight, bias, in_dim, out_dim, activation })
    }

    pub fn weight(&self) -> ParamId {
        self.weight
    }

    pub fn bias(&self) -> ParamId {
        self.bias
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn forward<T: Scalar>(&self, params: &ParamStore<T>, x: &Tensor<T>) -> Result<(Tensor<T>, DenseCache<T>)> {
        if x.shape() != [self.in_dim] {
            return Err(Error::Dimension {
                op: "dense",
                left: vec![self.out_dim, self.in_dim],
                right: x.shape().to_vec(),
            });
        }
        let w = params.get(self.weight).data();
        let b = params.get(self.bias).data();
        let mut y: Vec<T> = (0..self.out_dim)
            .map(|o| dot(&w[o * self.in_dim..(o + 1) * self.in_dim], x.data()) + b[o])
            .collect();
        match self.activation {
            Activation::None => {}
            Activation::Relu => y.iter_mut().for_each(|v| *v = v.max(T::zero())),
            Activation::Sigmoid => y.iter_mut().for_each(|v| *v = sigmoid(*v)),
            Activation::Softmax => softmax_in_place(&mut y)?,
        }
        let cache = DenseCache { x: x.data().to_vec(), y: y.clone() };
        Ok((Tensor::vector(y)?, cache))
    }

    pub fn backward<T: Scalar>(
        &self,
        params: &ParamStore<T>,
        cache: DenseCache<T>,
        dy: &Tensor<T>,
        grads: &mut ParamStore<T>,
    ) -> Result<Tensor<T>> {
        if dy.shape() != [self.out_dim] {
            return Err(Error::Dimension {
                op: "dense backward",
                left: dy.shape().to_vec(),
                right: vec![self.out_dim],
            });
        }
        let y = &cache.y;
        let dz: Vec<T> = match self.activation {
            Activation::None => dy.data().to_vec(),
            Activation::Relu => y
                .iter()
                .zip(dy.data())
                .map(|(&v, &g)| if v > T::zero() { g } else { T::zero() })
                .collect(),
            Activation::Sigmoid => y.iter().zip(dy.data()).map(|(&v, &g)| g * v * (T::one() - v)).collect(),
            Activation::Softmax => {
                let s = dot(y, dy.data());
                y.iter().zip(dy.data()).map(|(&v, &g)| v * (g - s)).collect()
            }
        };
        let w = params.get(self.weight).data();
        let mut dx = vec![T::zero(); self.in_dim];
        for (o, &g) in dz.iter().enumerate() {
            axpy(g, &w[o * self.in_dim..(o + 1) * self.in_dim], &mut dx);
        }
        {
            let dw = grads.get_mut(self.weight).data_mut();
            for (o, &g) in dz.iter().enumerate() {
                axpy(g, &cache.x, &mut dw[o * self.in_dim..(o + 1) * self.in_dim]);
            }
        }
        axpy(T::one(), &dz, grads.get_mut(self.bias).data_mut());
        Tensor::vector(dx)
    }
}
