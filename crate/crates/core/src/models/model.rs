use std::sync::Arc;

use super::spec::{ModelKind, ModelSpec};
use crate::error::{Error, Result};
use crate::layers::{
    dropout_backward, dropout_forward, embed_dropout_forward, nth_max_pool, nth_max_pool_backward, Activation,
    Attention, AttentionCache, Conv1d, ConvCache, Dense, DenseCache, DropoutCache, Lstm, LstmCache, Mode, Pooled,
};
use crate::numerics::{sigmoid, softmax_in_place, ParamStore, Rng, Scalar, Tensor};
use crate::textpipe::{EmbeddingTable, Example};

#[derive(Debug, Clone)]
enum Net {
    Scarn { conv: Conv1d, lstm_a: Lstm, lstm_b: Lstm, att: Attention, head: Dense },
    ConcatScarn { conv: Conv1d, lstm: Lstm, att: Attention, head: Dense },
    KimCnn { convs: Vec<Conv1d>, head: Dense },
    Lstm { lstm: Lstm, head: Dense },
    Bilstm { fwd: Lstm, bwd: Lstm, head: Dense },
    LstmAttention { lstm: Lstm, att: Attention, head: Dense },
    AvgMlp { hidden: Dense, head: Dense },
}

impl Net {
    fn head(&self) -> &Dense {
        match self {
            Net::Scarn { head, .. }
            | Net::ConcatScarn { head, .. }
            | Net::KimCnn { head, .. }
            | Net::Lstm { head, .. }
            | Net::Bilstm { head, .. }
            | Net::LstmAttention { head, .. }
            | Net::AvgMlp { head, .. } => head,
        }
    }
}

/// A neural classifier: wiring, trainable parameters and a shared handle to
/// the frozen embedding table.
#[derive(Debug, Clone)]
pub struct Model<T> {
    spec: ModelSpec,
    params: ParamStore<T>,
    table: Arc<EmbeddingTable<T>>,
    net: Net,
}

/// Per-example forward result.
#[derive(Debug, Clone, PartialEq)]
pub struct Output<T> {
    /// Pre-activation head outputs.
    pub logits: Vec<T>,
    /// `[p(class 1)]` for binary heads, a softmax vector otherwise.
    pub probs: Vec<T>,
    /// Attention weights over the real tokens, when the model attends.
    pub alphas: Option<Vec<T>>,
    /// kim_cnn: for each window, the row each filter's pooled value came from.
    pub pool_rows: Option<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone)]
enum Inner<T> {
    Scarn { conv: ConvCache<T>, lstm_a: LstmCache<T>, lstm_b: LstmCache<T>, att: AttentionCache<T> },
    ConcatScarn { conv: ConvCache<T>, lstm: LstmCache<T>, att: AttentionCache<T> },
    KimCnn { convs: Vec<(ConvCache<T>, Pooled<T>)> },
    Lstm { lstm: LstmCache<T> },
    Bilstm { fwd: LstmCache<T>, bwd: LstmCache<T> },
    LstmAttention { lstm: LstmCache<T>, att: AttentionCache<T> },
    AvgMlp { hidden: DenseCache<T> },
}

/// Everything the backward pass of one example needs. Consumed by
/// [`Model::backward_example`].
#[derive(Debug, Clone)]
pub struct ForwardCache<T> {
    inner: Inner<T>,
    steps: usize,
    head_drop: DropoutCache<T>,
    head: DenseCache<T>,
}

/// Eval-mode prediction for one example.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction<T> {
    pub label: usize,
    pub probs: Vec<T>,
    pub alphas: Option<Vec<T>>,
    pub pool_rows: Option<Vec<Vec<usize>>>,
}

/// Builds the network described by `spec` over `table`, drawing initial
/// weights from `rng`.
pub fn build_model<T: Scalar>(spec: ModelSpec, table: Arc<EmbeddingTable<T>>, rng: &mut Rng) -> Result<Model<T>> {
    spec.validate()?;
    if spec.kind.is_linear() {
        return Err(Error::Config(vec![format!(
            "kind {} is a linear baseline; fit it with fit_linear_baseline",
            spec.kind.name()
        )]));
    }
    if table.dim() != spec.embed_dim {
        return Err(Error::Config(vec![format!(
            "embed_dim {} does not match embedding table width {}",
            spec.embed_dim,
            table.dim()
        )]));
    }
    let mut p = ParamStore::new();
    let (d, k, h, n) = (spec.embed_dim, spec.filters, spec.hidden, spec.max_len);
    let out = spec.head_width();
    let none = Activation::None;
    let net = match spec.kind {
        ModelKind::Scarn => Net::Scarn {
            conv: Conv1d::new(&mut p, "conv", d, k, 1, rng)?,
            lstm_a: Lstm::new(&mut p, "lstm_a", k, h, rng)?,
            lstm_b: Lstm::new(&mut p, "lstm_b", d, h, rng)?,
            att: Attention::new(&mut p, "attention", spec.attention, h, n, rng)?,
            head: Dense::new(&mut p, "head", 2 * h, out, none, rng)?,
        },
        ModelKind::ConcatScarn => Net::ConcatScarn {
            conv: Conv1d::new(&mut p, "conv", d, k, 1, rng)?,
            lstm: Lstm::new(&mut p, "lstm", d + k, h, rng)?,
            att: Attention::new(&mut p, "attention", spec.attention, h, n, rng)?,
            head: Dense::new(&mut p, "head", h, out, none, rng)?,
        },
        ModelKind::KimCnn => {
            let mut convs = Vec::new();
            for &w in &spec.windows {
                convs.push(Conv1d::new(&mut p, &format!("conv_w{w}"), d, k, w, rng)?);
            }
            let width = k * convs.len();
            Net::KimCnn { convs, head: Dense::new(&mut p, "head", width, out, none, rng)? }
        }
        ModelKind::Lstm => Net::Lstm {
            lstm: Lstm::new(&mut p, "lstm", d, h, rng)?,
            head: Dense::new(&mut p, "head", h, out, none, rng)?,
        },
        ModelKind::Bilstm => Net::Bilstm {
            fwd: Lstm::new(&mut p, "lstm_fwd", d, h, rng)?,
            bwd: Lstm::new(&mut p, "lstm_bwd", d, h, rng)?,
            head: Dense::new(&mut p, "head", 2 * h, out, none, rng)?,
        },
        ModelKind::LstmAttention => Net::LstmAttention {
            lstm: Lstm::new(&mut p, "lstm", d, h, rng)?,
            att: Attention::new(&mut p, "attention", spec.attention, h, n, rng)?,
            head: Dense::new(&mut p, "head", h, out, none, rng)?,
        },
        ModelKind::AvgMlp => Net::AvgMlp {
            hidden: Dense::new(&mut p, "mlp", d, spec.mlp_hidden, Activation::Relu, rng)?,
            head: Dense::new(&mut p, "head", spec.mlp_hidden, out, none, rng)?,
        },
        ModelKind::LogregBow | ModelKind::LogregTfidf => unreachable!("rejected above"),
    };
    Ok(Model { spec, params: p, table, net })
}

/// Stacks `[a | b]` row by row.
fn hconcat<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    let rows = a.rows();
    let mut data = Vec::with_capacity(a.len() + b.len());
    for r in 0..rows {
        data.extend_from_slice(a.row(r));
        data.extend_from_slice(b.row(r));
    }
    Tensor::new(vec![rows, a.row_len() + b.row_len()], data)
}

fn reversed_rows<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let rows: Vec<Vec<T>> = (0..x.rows()).rev().map(|r| x.row(r).to_vec()).collect();
    Tensor::from_rows(&rows).expect("non-empty")
}

/// `[T, H]` gradient that is zero except for the last row.
fn last_row_grad<T: Scalar>(steps: usize, g: &[T]) -> Tensor<T> {
    let mut t = Tensor::zeros(&[steps, g.len()]);
    t.row_mut(steps - 1).copy_from_slice(g);
    t
}

fn vector<T: Scalar>(v: Vec<T>) -> Tensor<T> {
    Tensor::vector(v).expect("non-empty")
}

impl<T: Scalar> Model<T> {
    /// Rebuilds a model from a spec and previously trained parameters. Names and
    /// shapes must match what `spec` builds.
    pub fn from_params(spec: ModelSpec, table: Arc<EmbeddingTable<T>>, params: ParamStore<T>) -> Result<Self> {
        let mut model = build_model(spec, table, &mut Rng::new(0))?;
        if model.params.names() != params.names() {
            return Err(Error::Format(format!(
                "parameter names {:?} do not match the model definition {:?}",
                params.names(),
                model.params.names()
            )));
        }
        for ((name, want), have) in model.params.iter().zip(params.tensors()) {
            if want.shape() != have.shape() {
                return Err(Error::Format(format!(
                    "parameter {name} has shape {:?}, expected {:?}",
                    have.shape(),
                    want.shape()
                )));
            }
        }
        model.params = params;
        Ok(model)
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn kind(&self) -> ModelKind {
        self.spec.kind
    }

    pub fn params(&self) -> &ParamStore<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.params
    }

    pub fn table(&self) -> &EmbeddingTable<T> {
        &self.table
    }

    pub fn table_arc(&self) -> &Arc<EmbeddingTable<T>> {
        &self.table
    }

    /// Trainable scalars; the embedding table is frozen and not counted.
    pub fn param_count(&self) -> usize {
        self.params.scalar_count()
    }

    pub fn has_attention(&self) -> bool {
        self.spec.kind.has_attention()
    }

    /// Head weight of shape `[out, in]`, for weight surgery and inspection.
    pub fn head(&self) -> &Dense {
        self.net.head()
    }

    fn real_ids<'a>(&self, ex: &'a Example) -> Result<&'a [u32]> {
        if ex.max_len() != self.spec.max_len {
            return Err(Error::Dimension {
                op: "model input",
                left: vec![ex.max_len()],
                right: vec![self.spec.max_len],
            });
        }
        if ex.is_empty() {
            return Err(Error::arg("example has no real tokens"));
        }
        Ok(&ex.ids()[..ex.len()])
    }

    fn probs_from_logits(&self, logits: &[T]) -> Result<Vec<T>> {
        if logits.len() == 1 {
            Ok(vec![sigmoid(logits[0])])
        } else {
            let mut p = logits.to_vec();
            softmax_in_place(&mut p)?;
            Ok(p)
        }
    }

    /// Forward pass of one example with explicit parameters, so gradient checks
    /// can perturb a copy. The model processes the real (non-pad) prefix only.
    pub fn forward_example(
        &self,
        params: &ParamStore<T>,
        ex: &Example,
        mode: Mode,
        rng: &mut Rng,
    ) -> Result<(Output<T>, ForwardCache<T>)> {
        let ids = self.real_ids(ex)?;
        let steps = ids.len();
        let p = self.spec.dropout;
        let (x, _) = embed_dropout_forward(ids, &self.table, p, mode, rng)?;
        let mut alphas = None;
        let mut pool_rows = None;
        let (features, inner) = match &self.net {
            Net::Scarn { conv, lstm_a, lstm_b, att, .. } => {
                let (c, conv_c) = conv.forward(params, &x)?;
                let (a_out, la) = lstm_a.forward(params, &c, None)?;
                let (b_out, lb) = lstm_b.forward(params, &x, None)?;
                let (ctx, al, ac) = att.forward(params, &b_out.hidden, &vec![true; steps])?;
                alphas = Some(al.into_data());
                let mut f = a_out.h_last;
                f.extend_from_slice(ctx.data());
                (f, Inner::Scarn { conv: conv_c, lstm_a: la, lstm_b: lb, att: ac })
            }
            Net::ConcatScarn { conv, lstm, att, .. } => {
                let (c, conv_c) = conv.forward(params, &x)?;
                let z = hconcat(&x, &c)?;
                let (out, lc) = lstm.forward(params, &z, None)?;
                let (ctx, al, ac) = att.forward(params, &out.hidden, &vec![true; steps])?;
                alphas = Some(al.into_data());
                (ctx.into_data(), Inner::ConcatScarn { conv: conv_c, lstm: lc, att: ac })
            }
            Net::KimCnn { convs, .. } => {
                let mut f = Vec::new();
                let mut caches = Vec::new();
                let mut rows = Vec::new();
                for conv in convs {
                    // sequences shorter than the window are zero-padded up to it
                    let input = if steps < conv.window() {
                        let mut padded = Tensor::zeros(&[conv.window(), self.spec.embed_dim]);
                        padded.data_mut()[..x.len()].copy_from_slice(x.data());
                        padded
                    } else {
                        x.clone()
                    };
                    let (c, cc) = conv.forward(params, &input)?;
                    let n = self.spec.pool_n.min(c.rows());
                    let pooled = nth_max_pool(&c, n, &vec![true; c.rows()])?;
                    f.extend_from_slice(pooled.values.data());
                    rows.push(pooled.argrows.clone());
                    caches.push((cc, pooled));
                }
                pool_rows = Some(rows);
                (f, Inner::KimCnn { convs: caches })
            }
            Net::Lstm { lstm, .. } => {
                let (out, lc) = lstm.forward(params, &x, None)?;
                (out.h_last, Inner::Lstm { lstm: lc })
            }
            Net::Bilstm { fwd, bwd, .. } => {
                let (fo, fc) = fwd.forward(params, &x, None)?;
                let (bo, bc) = bwd.forward(params, &reversed_rows(&x), None)?;
                let mut f = fo.h_last;
                f.extend_from_slice(&bo.h_last);
                (f, Inner::Bilstm { fwd: fc, bwd: bc })
            }
            Net::LstmAttention { lstm, att, .. } => {
                let (out, lc) = lstm.forward(params, &x, None)?;
                let (ctx, al, ac) = att.forward(params, &out.hidden, &vec![true; steps])?;
                alphas = Some(al.into_data());
                (ctx.into_data(), Inner::LstmAttention { lstm: lc, att: ac })
            }
            Net::AvgMlp { hidden, .. } => {
                let d = self.spec.embed_dim;
                let mut mean = vec![T::zero(); d];
                for r in 0..steps {
                    for (m, &v) in mean.iter_mut().zip(x.row(r)) {
                        *m += v;
                    }
                }
                let inv = T::one() / T::lit(steps as f64);
                mean.iter_mut().for_each(|m| *m *= inv);
                let (hid, hc) = hidden.forward(params, &vector(mean))?;
                (hid.into_data(), Inner::AvgMlp { hidden: hc })
            }
        };
        let (dropped, head_drop) = dropout_forward(&vector(features), p, mode, rng)?;
        let (logits, head) = self.net.head().forward(params, &dropped)?;
        let logits = logits.into_data();
        let probs = self.probs_from_logits(&logits)?;
        let out = Output { logits, probs, alphas, pool_rows };
        Ok((out, ForwardCache { inner, steps, head_drop, head }))
    }

    /// Backward pass from the gradient of the loss with respect to the logits.
    /// Parameter gradients are added into `grads`.
    pub fn backward_example(
        &self,
        params: &ParamStore<T>,
        cache: ForwardCache<T>,
        dlogits: &[T],
        grads: &mut ParamStore<T>,
    ) -> Result<()> {
        let ForwardCache { inner, steps, head_drop, head } = cache;
        let dfeat = self.net.head().backward(params, head, &Tensor::vector(dlogits.to_vec())?, grads)?;
        let dfeat = dropout_backward(&head_drop, &dfeat).into_data();
        match (&self.net, inner) {
            (Net::Scarn { conv, lstm_a, lstm_b, att, .. }, Inner::Scarn { conv: cc, lstm_a: la, lstm_b: lb, att: ac }) => {
                let h = lstm_a.hidden();
                let dc = lstm_a.backward(params, la, &last_row_grad(steps, &dfeat[..h]), grads)?;
                conv.backward_params(params, cc, &dc, grads)?;
                let dhb = att.backward(params, ac, &vector(dfeat[h..].to_vec()), grads)?;
                lstm_b.backward_params(params, lb, &dhb, grads)?;
            }
            (Net::ConcatScarn { conv, lstm, att, .. }, Inner::ConcatScarn { conv: cc, lstm: lc, att: ac }) => {
                let dh = att.backward(params, ac, &vector(dfeat), grads)?;
                let dz = lstm.backward(params, lc, &dh, grads)?;
                let d = self.spec.embed_dim;
                let rows: Vec<Vec<T>> = (0..steps).map(|r| dz.row(r)[d..].to_vec()).collect();
                conv.backward_params(params, cc, &Tensor::from_rows(&rows)?, grads)?;
            }
            (Net::KimCnn { convs, .. }, Inner::KimCnn { convs: caches }) => {
                let k = self.spec.filters;
                for (i, (conv, (cc, pooled))) in convs.iter().zip(caches).enumerate() {
                    let dc = nth_max_pool_backward(&pooled, &vector(dfeat[i * k..(i + 1) * k].to_vec()))?;
                    conv.backward_params(params, cc, &dc, grads)?;
                }
            }
            (Net::Lstm { lstm, .. }, Inner::Lstm { lstm: lc }) => {
                lstm.backward_params(params, lc, &last_row_grad(steps, &dfeat), grads)?;
            }
            (Net::Bilstm { fwd, bwd, .. }, Inner::Bilstm { fwd: fc, bwd: bc }) => {
                let h = fwd.hidden();
                fwd.backward_params(params, fc, &last_row_grad(steps, &dfeat[..h]), grads)?;
                bwd.backward_params(params, bc, &last_row_grad(steps, &dfeat[h..]), grads)?;
            }
            (Net::LstmAttention { lstm, att, .. }, Inner::LstmAttention { lstm: lc, att: ac }) => {
                let dh = att.backward(params, ac, &vector(dfeat), grads)?;
                lstm.backward_params(params, lc, &dh, grads)?;
            }
            (Net::AvgMlp { hidden, .. }, Inner::AvgMlp { hidden: hc }) => {
                hidden.backward(params, hc, &vector(dfeat), grads)?;
            }
            _ => return Err(Error::Contract("forward cache from a different model".into())),
        }
        Ok(())
    }

    /// Class probabilities for a batch, shape `[batch, head width]`, plus the
    /// per-example caches.
    pub fn forward(&self, batch: &[Example], mode: Mode, rng: &mut Rng) -> Result<(Tensor<T>, Vec<ForwardCache<T>>)> {
        if batch.is_empty() {
            return Err(Error::arg("empty batch"));
        }
        let width = self.spec.head_width();
        let mut probs = Vec::with_capacity(batch.len() * width);
        let mut caches = Vec::with_capacity(batch.len());
        for ex in batch {
            let (out, cache) = self.forward_example(&self.params, ex, mode, rng)?;
            probs.extend(out.probs);
            caches.push(cache);
        }
        Ok((Tensor::new(vec![batch.len(), width], probs)?, caches))
    }

    /// Eval-mode forward of one example.
    pub fn infer(&self, ex: &Example) -> Result<Output<T>> {
        // eval mode draws nothing from the generator
        let mut rng = Rng::new(0);
        Ok(self.forward_example(&self.params, ex, Mode::Eval, &mut rng)?.0)
    }

    pub fn predict(&self, examples: &[Example]) -> Result<Vec<Prediction<T>>> {
        examples
            .iter()
            .map(|ex| {
                let out = self.infer(ex)?;
                Ok(Prediction {
                    label: label_from_probs(&out.probs),
                    probs: out.probs,
                    alphas: out.alphas,
                    pool_rows: out.pool_rows,
                })
            })
            .collect()
    }

    fn word_conv(&self) -> Result<&Conv1d> {
        match &self.net {
            Net::Scarn { conv, .. } | Net::ConcatScarn { conv, .. } => Ok(conv),
            _ => Err(Error::Capability(format!(
                "{} has no single-word convolution",
                self.spec.kind.name()
            ))),
        }
    }

    /// Single-word convolution output (`[K]`) for a vocabulary id.
    pub fn conv_transform(&self, id: u32) -> Result<Vec<T>> {
        let conv = self.word_conv()?;
        let x = Tensor::new(vec![1, self.spec.embed_dim], self.table.row(id)?.to_vec())?;
        Ok(conv.forward(&self.params, &x)?.0.into_data())
    }

    /// concat_scarn's per-timestep LSTM input `[embedding | conv]`, shape
    /// `[real tokens, d + K]`, in eval mode.
    pub fn concat_features(&self, ex: &Example) -> Result<Tensor<T>> {
        let Net::ConcatScarn { conv, .. } = &self.net else {
            return Err(Error::Capability(format!(
                "{} has no concatenation layer",
                self.spec.kind.name()
            )));
        };
        let ids = self.real_ids(ex)?;
        let (x, _) = embed_dropout_forward(ids, &self.table, 0.0, Mode::Eval, &mut Rng::new(0))?;
        let (c, _) = conv.forward(&self.params, &x)?;
        hconcat(&x, &c)
    }
}

/// Binary heads predict class 1 when `p >= 0.5`; otherwise the first maximum.
pub fn label_from_probs<T: Scalar>(probs: &[T]) -> usize {
    if probs.len() == 1 {
        return usize::from(probs[0] >= T::lit(0.5));
    }
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    best
}
