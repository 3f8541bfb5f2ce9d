use std::sync::Arc;

use serde::Serialize;

use crate::error::Result;
use crate::layers::{
    dropout_backward, dropout_forward, nth_max_pool, nth_max_pool_backward, Activation, Attention, AttentionForm,
    Conv1d, Dense, Lstm, Mode,
};
use crate::models::{build_model, ModelKind, ModelSpec};
use crate::numerics::{finite_diff_check, ParamStore, Rng, Tensor};
use crate::textpipe::{EmbeddingTable, Example};
use crate::training::batch_loss;

pub const AUDIT_EPSILON: f64 = 1e-5;
pub const AUDIT_TOLERANCE: f64 = 1e-4;

/// Worst gradient disagreement of one layer or model over all audited seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditEntry {
    pub subject: String,
    pub seeds: u64,
    pub max_rel_error: f64,
    pub passed: bool,
}

fn random(shape: &[usize], scale: f64, rng: &mut Rng) -> Tensor<f64> {
    let mut t = Tensor::zeros(shape);
    t.data_mut().iter_mut().for_each(|x| *x = rng.uniform_range(-scale, scale));
    t
}

fn dot(a: &Tensor<f64>, b: &Tensor<f64>) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

type LossFn<'a> = Box<dyn FnMut(&ParamStore<f64>) -> Result<(f64, ParamStore<f64>)> + 'a>;

fn check(params: &mut ParamStore<f64>, f: LossFn<'_>) -> Result<f64> {
    Ok(finite_diff_check(f, params, AUDIT_EPSILON, AUDIT_TOLERANCE)?.max_rel_error)
}

/// One layer case: the input is registered as parameter `input` so its
/// gradient is audited along with the weights.
fn layer_case(subject: &str, seed: u64) -> Result<f64> {
    let mut rng = Rng::new(seed.wrapping_mul(7919) ^ 0xA0D1);
    let mut p = ParamStore::new();
    let (steps, d, k) = (1 + rng.below(5), 1 + rng.below(5), 1 + rng.below(5));
    match subject {
        "conv1d" => {
            let w = 1 + rng.below(steps);
            let c = Conv1d::new(&mut p, "conv", d, k, w, &mut rng)?;
            *p.get_mut(c.bias()) = random(&[k], 0.3, &mut rng);
            p.register("input", random(&[steps, d], 1.0, &mut rng))?;
            let proj = random(&[steps - w + 1, k], 1.0, &mut rng);
            check(&mut p, Box::new(move |p| {
                let (y, cache) = c.forward(p, p.by_name("input").unwrap())?;
                let mut g = p.zeros_like();
                *g.by_name_mut("input").unwrap() = c.backward(p, cache, &proj, &mut g)?;
                Ok((dot(&y, &proj), g))
            }))
        }
        "lstm" => {
            let l = Lstm::new(&mut p, "lstm", d, k, &mut rng)?;
            p.register("input", random(&[steps, d], 1.0, &mut rng))?;
            let proj = random(&[steps, k], 1.0, &mut rng);
            let h0: Vec<f64> = (0..k).map(|_| rng.uniform_range(-0.5, 0.5)).collect();
            let c0: Vec<f64> = (0..k).map(|_| rng.uniform_range(-0.5, 0.5)).collect();
            check(&mut p, Box::new(move |p| {
                let (out, cache) = l.forward(p, p.by_name("input").unwrap(), Some((&h0, &c0)))?;
                let mut g = p.zeros_like();
                *g.by_name_mut("input").unwrap() = l.backward(p, cache, &proj, &mut g)?;
                Ok((dot(&out.hidden, &proj), g))
            }))
        }
        "nth_max_pool" => {
            let n = 1 + rng.below(steps);
            p.register("input", random(&[steps, k], 1.0, &mut rng))?;
            let proj = random(&[k], 1.0, &mut rng);
            check(&mut p, Box::new(move |p| {
                let pooled = nth_max_pool(p.by_name("input").unwrap(), n, &vec![true; steps])?;
                let mut g = p.zeros_like();
                *g.by_name_mut("input").unwrap() = nth_max_pool_backward(&pooled, &proj)?;
                Ok((dot(&pooled.values, &proj), g))
            }))
        }
        "dropout" => {
            let x = random(&[steps, d], 1.0, &mut rng);
            let proj = random(&[steps, d], 1.0, &mut rng);
            let (_, cache) = dropout_forward(&x, 0.5, Mode::Train, &mut rng)?;
            p.register("input", x)?;
            check(&mut p, Box::new(move |p| {
                let mut y = p.by_name("input").unwrap().clone();
                if let Some(m) = cache.mask() {
                    y.data_mut().iter_mut().zip(m).for_each(|(v, &s)| *v *= s);
                }
                let mut g = p.zeros_like();
                *g.by_name_mut("input").unwrap() = dropout_backward(&cache, &proj);
                Ok((dot(&y, &proj), g))
            }))
        }
        s if s.starts_with("attention/") => {
            let form = match &s["attention/".len()..] {
                "additive" => AttentionForm::Additive,
                "minimal" => AttentionForm::Minimal,
                _ => AttentionForm::PositionBiased,
            };
            let att = Attention::new(&mut p, "att", form, k, steps + 1, &mut rng)?;
            for t in p.tensors_mut() {
                t.data_mut().iter_mut().for_each(|x| *x += rng.uniform_range(-0.2, 0.2));
            }
            p.register("input", random(&[steps, k], 1.0, &mut rng))?;
            let proj = random(&[k], 1.0, &mut rng);
            check(&mut p, Box::new(move |p| {
                let (ctx, _, cache) = att.forward(p, p.by_name("input").unwrap(), &vec![true; steps])?;
                let mut g = p.zeros_like();
                *g.by_name_mut("input").unwrap() = att.backward(p, cache, &proj, &mut g)?;
                Ok((dot(&ctx, &proj), g))
            }))
        }
        s => {
            let act = match &s["dense/".len()..] {
                "none" => Activation::None,
                "relu" => Activation::Relu,
                "sigmoid" => Activation::Sigmoid,
                _ => Activation::Softmax,
            };
            let dense = Dense::new(&mut p, "dense", d, k, act, &mut rng)?;
            p.register("input", random(&[d], 1.0, &mut rng))?;
            let proj = random(&[k], 1.0, &mut rng);
            check(&mut p, Box::new(move |p| {
                let (y, cache) = dense.forward(p, p.by_name("input").unwrap())?;
                let mut g = p.zeros_like();
                *g.by_name_mut("input").unwrap() = dense.backward(p, cache, &proj, &mut g)?;
                Ok((dot(&y, &proj), g))
            }))
        }
    }
}

/// End-to-end loss gradient of a tiny model over a two-example batch.
/// Alternates binary and 3-class heads, and eval and train mode (with the
/// dropout stream reseeded per call so masks stay fixed).
fn model_case(kind: ModelKind, seed: u64) -> Result<f64> {
    let mut rng = Rng::new(seed ^ 0x30DE1);
    let (vocab, d, n) = (9, 4, 5);
    let classes = if seed % 2 == 0 { 2 } else { 3 };
    let mode = if seed % 4 < 2 { Mode::Eval } else { Mode::Train };
    let mut m = Tensor::zeros(&[vocab, d]);
    m.data_mut().iter_mut().skip(d).for_each(|x| *x = rng.uniform_range(-1.0, 1.0));
    let table = Arc::new(EmbeddingTable::new(m)?);
    let mut spec = ModelSpec::small(kind, d, n, classes);
    spec.filters = 3;
    spec.hidden = 3;
    spec.windows = vec![1, 2];
    spec.mlp_hidden = 4;
    let model = build_model(spec, table, &mut rng)?;
    let batch: Vec<Example> = (0..2)
        .map(|_| {
            let len = 1 + rng.below(n);
            let mut ids: Vec<u32> = (0..len).map(|_| 1 + rng.below(vocab - 1) as u32).collect();
            ids.resize(n, 0);
            Example::new(rng.below(classes), ids)
        })
        .collect::<Result<_>>()?;
    let refs: Vec<&Example> = batch.iter().collect();
    let mut params = model.params().clone();
    for t in params.tensors_mut() {
        t.data_mut().iter_mut().for_each(|x| *x += rng.uniform_range(-0.1, 0.1));
    }
    let model = &model;
    check(&mut params, Box::new(move |p| batch_loss(model, p, &refs, mode, &mut Rng::new(seed ^ 0xD0))))
}

pub const AUDIT_LAYERS: [&str; 11] = [
    "conv1d",
    "lstm",
    "nth_max_pool",
    "dropout",
    "attention/additive",
    "attention/minimal",
    "attention/position_biased",
    "dense/none",
    "dense/relu",
    "dense/sigmoid",
    "dense/softmax",
];

/// Central-difference audit of every layer and every neural model kind on
/// tiny random shapes, `seeds` seeds each.
pub fn gradient_audit(seeds: u64) -> Result<Vec<AuditEntry>> {
    let mut out = Vec::new();
    let mut record = |subject: String, errs: Vec<f64>| {
        let max = errs.iter().copied().fold(0.0, f64::max);
        out.push(AuditEntry { subject, seeds, max_rel_error: max, passed: max < AUDIT_TOLERANCE });
    };
    for layer in AUDIT_LAYERS {
        let errs = (0..seeds).map(|s| layer_case(layer, s)).collect::<Result<Vec<_>>>()?;
        record(layer.to_string(), errs);
    }
    for kind in ModelKind::NEURAL {
        let errs = (0..seeds).map(|s| model_case(kind, s)).collect::<Result<Vec<_>>>()?;
        record(format!("model/{}", kind.name()), errs);
    }
    Ok(out)
}
