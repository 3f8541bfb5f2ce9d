//! Planted-keyword toy corpus: each sentence is filler words plus one keyword
//! that alone determines the label. Used to exercise training end to end.

use std::sync::Arc;

use crate::error::Result;
use crate::numerics::{Rng, Scalar, Tensor};
use crate::textpipe::{Dataset, EmbeddingTable, LabeledText, PAD_ID};

pub const FILLERS: usize = 16;

/// Keyword that marks class `c`.
pub fn keyword(c: usize) -> String {
    format!("key{c}")
}

fn sentences(rng: &mut Rng, count: usize, classes: usize, max_len: usize) -> Vec<LabeledText> {
    (0..count)
        .map(|i| {
            let label = i % classes;
            let len = 2 + rng.below(max_len.max(2) - 1);
            let mut words: Vec<String> = (0..len).map(|_| format!("filler{}", rng.below(FILLERS))).collect();
            let at = rng.below(len);
            words[at] = keyword(label);
            (label, words.join(" "))
        })
        .collect()
}

/// Dataset with `sizes = (train, dev, test)` examples and a random
/// `dim`-wide embedding table aligned with its vocabulary.
pub fn planted_keyword<T: Scalar>(
    classes: usize,
    sizes: (usize, usize, usize),
    max_len: usize,
    dim: usize,
    seed: u64,
) -> Result<(Dataset, Arc<EmbeddingTable<T>>)> {
    let mut rng = Rng::new(seed);
    let train = sentences(&mut rng, sizes.0, classes, max_len);
    let dev = sentences(&mut rng, sizes.1, classes, max_len);
    let test = sentences(&mut rng, sizes.2, classes, max_len);
    let mut ds = Dataset::from_texts("planted", &train, &dev, &test, max_len, usize::MAX)?;
    ds.num_classes = classes;
    let mut m = Tensor::zeros(&[ds.vocab.len(), dim]);
    for (id, row) in m.data_mut().chunks_mut(dim).enumerate() {
        if id as u32 != PAD_ID {
            row.iter_mut().for_each(|x| *x = rng.uniform_scalar(-1.0, 1.0));
        }
    }
    Ok((ds, Arc::new(EmbeddingTable::new(m)?)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keyword_in_every_sentence() {
        let (ds, table) = planted_keyword::<f64>(3, (12, 3, 3), 6, 5, 1).unwrap();
        assert_eq!(ds.num_classes, 3);
        assert_eq!(table.vocab_size(), ds.vocab.len());
        for (ex, toks) in ds.train.examples.iter().zip(&ds.train.tokens) {
            assert!(toks.contains(&keyword(ex.label)));
            assert!(toks.len() <= 6 && toks.len() >= 2);
        }
    }

    #[test]
    fn deterministic() {
        let a = planted_keyword::<f64>(2, (5, 2, 2), 5, 3, 9).unwrap();
        let b = planted_keyword::<f64>(2, (5, 2, 2), 5, 3, 9).unwrap();
        assert_eq!(a.0.train.examples, b.0.train.examples);
        assert_eq!(a.1.fingerprint(), b.1.fingerprint());
    }
}
