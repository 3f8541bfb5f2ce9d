use crate::error::{Error, Result};
use crate::models::{label_from_probs, Model};
use crate::numerics::Scalar;
use crate::textpipe::Example;

use super::cross_entropy;

/// Classification metrics over one split.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    /// Per class; 0 when the class was never predicted.
    pub precision: Vec<f64>,
    /// Per class; 0 when the class never occurs.
    pub recall: Vec<f64>,
    pub loss: f64,
    pub count: usize,
    pub correct: usize,
    pub epoch: Option<usize>,
    pub seconds: f64,
}

impl Metrics {
    /// Builds metrics from `(gold, predicted)` pairs and a summed loss.
    pub fn from_pairs(pairs: &[(usize, usize)], num_classes: usize, loss_sum: f64) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::arg("metrics of an empty split"));
        }
        let mut tp = vec![0usize; num_classes];
        let mut predicted = vec![0usize; num_classes];
        let mut actual = vec![0usize; num_classes];
        for &(gold, pred) in pairs {
            if gold >= num_classes || pred >= num_classes {
                return Err(Error::arg(format!("label outside {num_classes} classes")));
            }
            actual[gold] += 1;
            predicted[pred] += 1;
            if gold == pred {
                tp[gold] += 1;
            }
        }
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let correct: usize = tp.iter().sum();
        Ok(Metrics {
            accuracy: ratio(correct, pairs.len()),
            precision: (0..num_classes).map(|c| ratio(tp[c], predicted[c])).collect(),
            recall: (0..num_classes).map(|c| ratio(tp[c], actual[c])).collect(),
            loss: loss_sum / pairs.len() as f64,
            count: pairs.len(),
            correct,
            epoch: None,
            seconds: 0.0,
        })
    }
}

/// Eval-mode accuracy, per-class precision/recall and mean cross-entropy.
pub fn evaluate<T: Scalar>(model: &Model<T>, examples: &[Example]) -> Result<Metrics> {
    if examples.is_empty() {
        return Err(Error::arg("cannot evaluate an empty split"));
    }
    let start = std::time::Instant::now();
    let mut pairs = Vec::with_capacity(examples.len());
    let mut loss = 0.0;
    for ex in examples {
        let out = model.infer(ex)?;
        loss += cross_entropy(&out.probs, ex.label)?.0.as_f64();
        pairs.push((ex.label, label_from_probs(&out.probs)));
    }
    let mut m = Metrics::from_pairs(&pairs, model.spec().num_classes, loss)?;
    m.seconds = start.elapsed().as_secs_f64();
    Ok(m)
}
