use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{label_from_probs, Model, ModelKind};
use crate::numerics::Scalar;
use crate::textpipe::{decode, Example, Vocab, PAD_ID, UNK_ID};

/// Where one example's max-pooled activations came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceRecord {
    pub tokens: Vec<String>,
    /// Share of pooled filters attributable to each real token; sums to 1.
    pub shares: Vec<f64>,
    pub predicted: usize,
    pub gold: usize,
    pub misclassified: bool,
}

/// For each example, counts which word positions supplied the pooled maxima.
/// A filter of window `w` selected at row `r` covers positions `r..r+w`; its
/// unit vote is split equally over the covered real positions.
pub fn run_maxpool_provenance<T: Scalar>(
    model: &Model<T>,
    examples: &[Example],
    vocab: &Vocab,
) -> Result<Vec<ProvenanceRecord>> {
    if model.kind() != ModelKind::KimCnn {
        return Err(Error::Capability(format!("{} has no max pooling", model.kind().name())));
    }
    let windows = model.spec().windows.clone();
    examples
        .iter()
        .map(|ex| {
            let out = model.infer(ex)?;
            let rows = out.pool_rows.expect("kim_cnn reports pooled rows");
            let real = ex.len();
            let mut shares = vec![0.0; real];
            for (w, argrows) in windows.iter().zip(&rows) {
                for &r in argrows {
                    let end = (r + w).min(real);
                    // a zero-padded short sentence can select a row past the real tokens
                    let start = r.min(end.saturating_sub(1));
                    let vote = 1.0 / (end - start) as f64;
                    for s in &mut shares[start..end] {
                        *s += vote;
                    }
                }
            }
            let total: f64 = shares.iter().sum();
            shares.iter_mut().for_each(|s| *s /= total);
            let predicted = label_from_probs(&out.probs);
            Ok(ProvenanceRecord {
                tokens: decode(&ex.ids()[..real], vocab),
                shares,
                predicted,
                gold: ex.label,
                misclassified: predicted != ex.label,
            })
        })
        .collect()
}

/// Attention weights of one sentence aligned to its real tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionRecord {
    pub tokens: Vec<String>,
    pub alphas: Vec<f64>,
    pub predicted: usize,
    pub gold: usize,
}

pub fn export_attention_weights<T: Scalar>(
    model: &Model<T>,
    examples: &[Example],
    vocab: &Vocab,
) -> Result<Vec<AttentionRecord>> {
    if !model.has_attention() {
        return Err(Error::Capability(format!("{} has no attention layer", model.kind().name())));
    }
    examples
        .iter()
        .map(|ex| {
            let out = model.infer(ex)?;
            let alphas = out.alphas.expect("attention models report weights");
            Ok(AttentionRecord {
                tokens: decode(&ex.ids()[..ex.len()], vocab),
                alphas: alphas.into_iter().map(Scalar::as_f64).collect(),
                predicted: label_from_probs(&out.probs),
                gold: ex.label,
            })
        })
        .collect()
}

/// Writes one JSON object per line.
pub fn write_jsonl<R: Serialize>(records: &[R], path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r)?;
        buf.push(b'\n');
    }
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Per-feature statistics of concat_scarn's `[embedding | conv]` layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcatStats {
    pub embed_dim: usize,
    pub filters: usize,
    pub mean: Vec<f64>,
    /// Population standard deviation over every real timestep.
    pub std: Vec<f64>,
}

impl ConcatStats {
    pub fn embedding_std(&self) -> &[f64] {
        &self.std[..self.embed_dim]
    }

    pub fn conv_std(&self) -> &[f64] {
        &self.std[self.embed_dim..]
    }

    pub fn embedding_mean(&self) -> &[f64] {
        &self.mean[..self.embed_dim]
    }

    pub fn conv_mean(&self) -> &[f64] {
        &self.mean[self.embed_dim..]
    }

    /// Larger segment median std over the smaller one (infinite if the
    /// smaller is zero).
    pub fn median_std_ratio(&self) -> f64 {
        let a = median(self.embedding_std());
        let b = median(self.conv_std());
        let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
        if lo == 0.0 {
            if hi == 0.0 {
                1.0
            } else {
                f64::INFINITY
            }
        } else {
            hi / lo
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("feature,segment,mean,std\n");
        for (i, (m, d)) in self.mean.iter().zip(&self.std).enumerate() {
            let seg = if i < self.embed_dim { "embedding" } else { "conv" };
            s.push_str(&format!("{i},{seg},{m},{d}\n"));
        }
        s
    }
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

pub fn concat_layer_stats<T: Scalar>(model: &Model<T>, examples: &[Example]) -> Result<ConcatStats> {
    let (d, k) = (model.spec().embed_dim, model.spec().filters);
    let width = d + k;
    let mut sum = vec![0.0; width];
    let mut sq = vec![0.0; width];
    let mut count = 0usize;
    for ex in examples {
        let z = model.concat_features(ex)?;
        for row in z.data().chunks(width) {
            for (j, &v) in row.iter().enumerate() {
                let v = v.as_f64();
                sum[j] += v;
                sq[j] += v * v;
            }
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::arg("no timesteps to summarize"));
    }
    let n = count as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let std = sq
        .iter()
        .zip(&mean)
        .map(|(q, m)| (q / n - m * m).max(0.0).sqrt())
        .collect();
    Ok(ConcatStats { embed_dim: d, filters: k, mean, std })
}

/// A word's frozen embedding and its single-word convolution output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvEmbedding {
    pub word: String,
    pub original: Vec<f64>,
    pub convolved: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvEmbeddingExport {
    pub records: Vec<ConvEmbedding>,
    /// Padding, unknown and out-of-vocabulary words.
    pub skipped: Vec<String>,
}

pub fn export_conv_embeddings<T: Scalar, S: AsRef<str>>(
    model: &Model<T>,
    words: &[S],
    vocab: &Vocab,
) -> Result<ConvEmbeddingExport> {
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for w in words {
        let w = w.as_ref();
        match vocab.get(w) {
            Some(id) if id != PAD_ID && id != UNK_ID => records.push(ConvEmbedding {
                word: w.to_string(),
                original: model.table().row(id)?.iter().map(|v| v.as_f64()).collect(),
                convolved: model.conv_transform(id)?.into_iter().map(Scalar::as_f64).collect(),
            }),
            _ => skipped.push(w.to_string()),
        }
    }
    Ok(ConvEmbeddingExport { records, skipped })
}
