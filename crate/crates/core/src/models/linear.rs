use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{sigmoid, softmax_in_place, ParamStore, Scalar, Tensor};
use crate::textpipe::{FeatureMatrix, SparseVec};
use crate::training::cross_entropy;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinearConfig {
    /// L2 penalty `λ/2 ‖W‖²` on the weights (not the bias).
    pub l2: f64,
    pub max_iter: usize,
    /// Stop once the full gradient norm falls below this.
    pub tol: f64,
}

impl Default for LinearConfig {
    fn default() -> Self {
        LinearConfig { l2: 1e-4, max_iter: 5000, tol: 1e-6 }
    }
}

/// Logistic regression over sparse features: a sigmoid unit for two classes,
/// a softmax otherwise.
#[derive(Debug, Clone)]
pub struct LinearModel<T> {
    pub params: ParamStore<T>,
    pub num_classes: usize,
    pub iterations: usize,
    pub converged: bool,
    pub grad_norm: f64,
}

fn logits<T: Scalar>(weight: &Tensor<T>, bias: &[T], x: &SparseVec<T>) -> Vec<T> {
    let dim = weight.shape()[1];
    let w = weight.data();
    bias.iter()
        .enumerate()
        .map(|(c, &b)| {
            x.entries.iter().fold(b, |acc, &(j, v)| acc + w[c * dim + j as usize] * v)
        })
        .collect()
}

fn probs<T: Scalar>(mut z: Vec<T>) -> Result<Vec<T>> {
    if z.len() == 1 {
        Ok(vec![sigmoid(z[0])])
    } else {
        softmax_in_place(&mut z)?;
        Ok(z)
    }
}

/// Mean cross-entropy plus the L2 penalty, and its gradient. `params` holds
/// `linear.weight` `[width, dim]` and `linear.bias` `[width]`.
pub fn linear_loss<T: Scalar>(
    params: &ParamStore<T>,
    features: &FeatureMatrix<T>,
    labels: &[usize],
    l2: f64,
) -> Result<(T, ParamStore<T>)> {
    let weight = params.by_name("linear.weight").ok_or_else(|| Error::arg("missing linear.weight"))?;
    let bias = params.by_name("linear.bias").ok_or_else(|| Error::arg("missing linear.bias"))?;
    let dim = features.dim;
    let mut grads = params.zeros_like();
    let inv_n = T::one() / T::lit(features.len() as f64);
    let mut loss = T::zero();
    {
        let mut dw = grads.by_name("linear.weight").unwrap().clone();
        let mut db = grads.by_name("linear.bias").unwrap().clone();
        for (x, &y) in features.rows.iter().zip(labels) {
            let p = probs(logits(weight, bias.data(), x))?;
            let (l, dz) = cross_entropy(&p, y)?;
            loss += l * inv_n;
            for (c, &g) in dz.iter().enumerate() {
                let g = g * inv_n;
                db.data_mut()[c] += g;
                let row = &mut dw.data_mut()[c * dim..(c + 1) * dim];
                for &(j, v) in &x.entries {
                    row[j as usize] += g * v;
                }
            }
        }
        let lam = T::lit(l2);
        loss += lam * T::lit(0.5) * weight.sq_norm();
        for (g, &w) in dw.data_mut().iter_mut().zip(weight.data()) {
            *g += lam * w;
        }
        *grads.by_name_mut("linear.weight").unwrap() = dw;
        *grads.by_name_mut("linear.bias").unwrap() = db;
    }
    Ok((loss, grads))
}

/// Full-batch gradient descent with Armijo backtracking from zero weights.
pub fn fit_linear_baseline<T: Scalar>(
    features: &FeatureMatrix<T>,
    labels: &[usize],
    num_classes: usize,
    config: &LinearConfig,
) -> Result<LinearModel<T>> {
    if features.is_empty() || features.len() != labels.len() {
        return Err(Error::arg(format!(
            "{} feature rows for {} labels",
            features.len(),
            labels.len()
        )));
    }
    if num_classes < 2 {
        return Err(Error::arg("need at least two classes"));
    }
    if let Some(i) = features.rows.iter().position(|r| !r.all_finite()) {
        return Err(Error::arg(format!("non-finite feature in row {i}")));
    }
    if features.dim == 0 {
        return Err(Error::arg("zero-dimensional features"));
    }
    let width = if num_classes == 2 { 1 } else { num_classes };
    let mut params = ParamStore::new();
    params.register("linear.weight", Tensor::zeros(&[width, features.dim]))?;
    params.register("linear.bias", Tensor::zeros(&[width]))?;

    let mut step = 1.0;
    let mut iterations = 0;
    let mut converged = false;
    let (mut f, mut g) = linear_loss(&params, features, labels, config.l2)?;
    let mut gnorm = g.global_norm().as_f64();
    while iterations < config.max_iter {
        if gnorm < config.tol {
            converged = true;
            break;
        }
        iterations += 1;
        let mut accepted = false;
        for _ in 0..60 {
            let mut trial = params.clone();
            for (t, d) in trial.tensors_mut().iter_mut().zip(g.tensors()) {
                for (a, &b) in t.data_mut().iter_mut().zip(d.data()) {
                    *a -= T::lit(step) * b;
                }
            }
            let (ft, gt) = linear_loss(&trial, features, labels, config.l2)?;
            if ft.as_f64() <= f.as_f64() - 1e-4 * step * gnorm * gnorm {
                params = trial;
                f = ft;
                g = gt;
                gnorm = g.global_norm().as_f64();
                accepted = true;
                step *= 2.0;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // no representable descent step left
            break;
        }
    }
    if gnorm < config.tol {
        converged = true;
    }
    Ok(LinearModel { params, num_classes, iterations, converged, grad_norm: gnorm })
}

impl<T: Scalar> LinearModel<T> {
    pub fn weight(&self) -> &Tensor<T> {
        self.params.by_name("linear.weight").expect("registered")
    }

    pub fn bias(&self) -> &Tensor<T> {
        self.params.by_name("linear.bias").expect("registered")
    }

    pub fn predict_probs(&self, x: &SparseVec<T>) -> Result<Vec<T>> {
        probs(logits(self.weight(), self.bias().data(), x))
    }

    pub fn predict(&self, x: &SparseVec<T>) -> Result<usize> {
        Ok(super::label_from_probs(&self.predict_probs(x)?))
    }

    pub fn accuracy(&self, features: &FeatureMatrix<T>, labels: &[usize]) -> Result<f64> {
        if features.is_empty() {
            return Err(Error::arg("accuracy of an empty split"));
        }
        let mut correct = 0;
        for (x, &y) in features.rows.iter().zip(labels) {
            correct += usize::from(self.predict(x)? == y);
        }
        Ok(correct as f64 / features.len() as f64)
    }
}
