use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layers::AttentionForm;
use crate::textpipe::Ordering;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Scarn,
    ConcatScarn,
    KimCnn,
    Lstm,
    Bilstm,
    LstmAttention,
    AvgMlp,
    LogregBow,
    LogregTfidf,
}

impl ModelKind {
    pub const ALL: [ModelKind; 9] = [
        ModelKind::Scarn,
        ModelKind::ConcatScarn,
        ModelKind::KimCnn,
        ModelKind::Lstm,
        ModelKind::Bilstm,
        ModelKind::LstmAttention,
        ModelKind::AvgMlp,
        ModelKind::LogregBow,
        ModelKind::LogregTfidf,
    ];

    /// Kinds trained by backpropagation through [`crate::models::Model`].
    pub const NEURAL: [ModelKind; 7] = [
        ModelKind::Scarn,
        ModelKind::ConcatScarn,
        ModelKind::KimCnn,
        ModelKind::Lstm,
        ModelKind::Bilstm,
        ModelKind::LstmAttention,
        ModelKind::AvgMlp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Scarn => "scarn",
            ModelKind::ConcatScarn => "concat_scarn",
            ModelKind::KimCnn => "kim_cnn",
            ModelKind::Lstm => "lstm",
            ModelKind::Bilstm => "bilstm",
            ModelKind::LstmAttention => "lstm_attention",
            ModelKind::AvgMlp => "avg_mlp",
            ModelKind::LogregBow => "logreg_bow",
            ModelKind::LogregTfidf => "logreg_tfidf",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn is_linear(self) -> bool {
        matches!(self, ModelKind::LogregBow | ModelKind::LogregTfidf)
    }

    pub fn has_attention(self) -> bool {
        matches!(self, ModelKind::Scarn | ModelKind::ConcatScarn | ModelKind::LstmAttention)
    }
}

fn default_filters() -> usize {
    50
}
fn default_hidden() -> usize {
    32
}
fn default_windows() -> Vec<usize> {
    vec![3, 4, 5]
}
fn default_dropout() -> f64 {
    0.5
}
fn default_pool_n() -> usize {
    1
}
fn default_mlp_hidden() -> usize {
    64
}

/// Architecture description. Everything needed to rebuild a model except the
/// embedding table and the weights.
///
/// `dropout` is applied to the embedded input and again before the output
/// layer. The head has one sigmoid unit for two classes and a softmax over
/// `num_classes` otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub embed_dim: usize,
    pub max_len: usize,
    pub num_classes: usize,
    #[serde(default = "default_filters")]
    pub filters: usize,
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    /// Convolution window sizes, kim_cnn only.
    #[serde(default = "default_windows")]
    pub windows: Vec<usize>,
    #[serde(default = "default_dropout")]
    pub dropout: f64,
    /// Word-order corruption the training data went through. Recorded, not applied.
    #[serde(default)]
    pub ordering: Ordering,
    /// Rank of the pooled order statistic, kim_cnn only.
    #[serde(default = "default_pool_n")]
    pub pool_n: usize,
    #[serde(default)]
    pub attention: AttentionForm,
    /// Hidden width of the avg_mlp baseline.
    #[serde(default = "default_mlp_hidden")]
    pub mlp_hidden: usize,
}

impl ModelSpec {
    /// Small preset: 50 filters, 32 LSTM cells.
    pub fn small(kind: ModelKind, embed_dim: usize, max_len: usize, num_classes: usize) -> Self {
        ModelSpec {
            kind,
            embed_dim,
            max_len,
            num_classes,
            filters: default_filters(),
            hidden: default_hidden(),
            windows: default_windows(),
            dropout: default_dropout(),
            ordering: Ordering::Correct,
            pool_n: default_pool_n(),
            attention: AttentionForm::default(),
            mlp_hidden: default_mlp_hidden(),
        }
    }

    /// Large preset: 100 filters, 64 LSTM cells.
    pub fn large(kind: ModelKind, embed_dim: usize, max_len: usize, num_classes: usize) -> Self {
        ModelSpec {
            filters: 100,
            hidden: 64,
            ..Self::small(kind, embed_dim, max_len, num_classes)
        }
    }

    /// Output units: 1 for a binary sigmoid head, `num_classes` otherwise.
    pub fn head_width(&self) -> usize {
        if self.num_classes == 2 {
            1
        } else {
            self.num_classes
        }
    }

    /// Checks every field and reports all offending ones at once.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        for (name, v) in [
            ("embed_dim", self.embed_dim),
            ("max_len", self.max_len),
            ("filters", self.filters),
            ("hidden", self.hidden),
            ("mlp_hidden", self.mlp_hidden),
        ] {
            if v == 0 {
                bad.push(format!("{name} must be positive"));
            }
        }
        if self.num_classes < 2 {
            bad.push(format!("num_classes must be at least 2, got {}", self.num_classes));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            bad.push(format!("dropout must be in [0, 1), got {}", self.dropout));
        }
        if self.kind == ModelKind::KimCnn {
            if self.windows.is_empty() {
                bad.push("windows must not be empty".into());
            }
            for &w in &self.windows {
                if w == 0 || w > self.max_len {
                    bad.push(format!("window {w} outside [1, max_len = {}]", self.max_len));
                }
            }
            let mut sorted = self.windows.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != self.windows.len() {
                bad.push(format!("windows must be distinct, got {:?}", self.windows));
            }
            let widest = self.windows.iter().copied().max().unwrap_or(1);
            let positions = (self.max_len + 1).saturating_sub(widest).max(1);
            if self.pool_n == 0 || self.pool_n > positions {
                bad.push(format!("pool_n {} outside [1, {positions}]", self.pool_n));
            }
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad))
        }
    }

    /// Human-readable list of fields that differ from `other`.
    pub fn diff(&self, other: &ModelSpec) -> Vec<String> {
        let a = serde_json::to_value(self).expect("spec serializes");
        let b = serde_json::to_value(other).expect("spec serializes");
        let (a, b) = (a.as_object().unwrap(), b.as_object().unwrap());
        a.iter()
            .filter(|(k, v)| b.get(*k) != Some(*v))
            .map(|(k, v)| format!("{k}: {v} vs {}", b.get(k).map(|x| x.to_string()).unwrap_or_default()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets() {
        let s = ModelSpec::small(ModelKind::Scarn, 300, 30, 2);
        assert_eq!((s.filters, s.hidden, s.head_width()), (50, 32, 1));
        let l = ModelSpec::large(ModelKind::Scarn, 300, 400, 5);
        assert_eq!((l.filters, l.hidden, l.head_width()), (100, 64, 5));
        s.validate().unwrap();
    }

    #[test]
    fn validation_lists_every_field() {
        let mut s = ModelSpec::small(ModelKind::KimCnn, 0, 4, 1);
        s.windows = vec![2, 9];
        s.dropout = 1.0;
        let Err(Error::Config(msgs)) = s.validate() else { panic!() };
        let text = msgs.join("\n");
        for key in ["embed_dim", "num_classes", "dropout", "window 9"] {
            assert!(text.contains(key), "{key} missing from {text}");
        }
    }

    #[test]
    fn json_defaults_and_unknown_fields() {
        let s: ModelSpec = serde_json::from_str(r#"{"kind":"kim_cnn","embed_dim":8,"max_len":5,"num_classes":6}"#).unwrap();
        assert_eq!(s.windows, vec![3, 4, 5]);
        assert_eq!(s.attention, AttentionForm::Additive);
        let err = serde_json::from_str::<ModelSpec>(r#"{"kind":"scarn","embed_dim":8,"max_len":5,"num_classes":2,"filtres":3}"#);
        assert!(err.unwrap_err().to_string().contains("filtres"));
    }

    #[test]
    fn kind_names_round_trip() {
        for k in ModelKind::ALL {
            assert_eq!(ModelKind::parse(k.name()), Some(k));
            assert_eq!(serde_json::to_string(&k).unwrap(), format!("\"{}\"", k.name()));
        }
    }

    #[test]
    fn diff_names_fields() {
        let a = ModelSpec::small(ModelKind::Scarn, 8, 5, 2);
        let mut b = a.clone();
        b.hidden = 7;
        let d = a.diff(&b);
        assert_eq!(d.len(), 1);
        assert!(d[0].starts_with("hidden"));
    }
}
