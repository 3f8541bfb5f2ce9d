use std::collections::BTreeMap;

use super::vocab::{Vocab, PAD_ID};
use crate::numerics::Scalar;

/// Sparse feature row: `(feature index, value)` pairs sorted by index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVec<T> {
    pub entries: Vec<(u32, T)>,
}

impl<T: Scalar> SparseVec<T> {
    pub fn to_dense(&self, dim: usize) -> Vec<T> {
        let mut out = vec![T::zero(); dim];
        for &(i, v) in &self.entries {
            out[i as usize] = v;
        }
        out
    }

    pub fn norm(&self) -> T {
        self.entries.iter().map(|&(_, v)| v * v).sum::<T>().sqrt()
    }

    pub fn all_finite(&self) -> bool {
        self.entries.iter().all(|(_, v)| v.is_finite())
    }
}

/// Rows of sparse features over a fixed feature dimension (the vocabulary size).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T> {
    pub dim: usize,
    pub rows: Vec<SparseVec<T>>,
}

impl<T: Scalar> FeatureMatrix<T> {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

fn term_counts<S: AsRef<str>>(tokens: &[S], vocab: &Vocab) -> BTreeMap<u32, usize> {
    let mut counts = BTreeMap::new();
    for t in tokens {
        let id = vocab.id(t.as_ref());
        if id != PAD_ID {
            *counts.entry(id).or_insert(0) += 1;
        }
    }
    counts
}

/// Raw term counts indexed by vocabulary id. Out-of-vocabulary words count
/// towards the unknown id; the pad id is always zero.
pub fn bow_featurize<T: Scalar, S: AsRef<str>>(tokens: &[S], vocab: &Vocab) -> SparseVec<T> {
    SparseVec {
        entries: term_counts(tokens, vocab)
            .into_iter()
            .map(|(id, c)| (id, T::lit(c as f64)))
            .collect(),
    }
}

pub fn bow_matrix<T: Scalar, S: AsRef<str>>(corpus: &[Vec<S>], vocab: &Vocab) -> FeatureMatrix<T> {
    FeatureMatrix {
        dim: vocab.len(),
        rows: corpus.iter().map(|doc| bow_featurize(doc, vocab)).collect(),
    }
}

/// Smoothed inverse document frequencies fitted on a corpus:
/// `idf(w) = ln((1 + D) / (1 + df(w))) + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tfidf<T> {
    idf: Vec<T>,
}

impl<T: Scalar> Tfidf<T> {
    pub fn fit<S: AsRef<str>>(corpus: &[Vec<S>], vocab: &Vocab) -> Self {
        let mut df = vec![0usize; vocab.len()];
        for doc in corpus {
            for id in term_counts(doc, vocab).into_keys() {
                df[id as usize] += 1;
            }
        }
        let d = corpus.len() as f64;
        let idf = df
            .into_iter()
            .map(|n| T::lit(((1.0 + d) / (1.0 + n as f64)).ln() + 1.0))
            .collect();
        Tfidf { idf }
    }

    pub fn idf(&self) -> &[T] {
        &self.idf
    }

    /// `tf * idf` with rows scaled to unit L2 norm (empty rows stay empty).
    pub fn transform<S: AsRef<str>>(&self, tokens: &[S], vocab: &Vocab) -> SparseVec<T> {
        let mut entries: Vec<(u32, T)> = term_counts(tokens, vocab)
            .into_iter()
            .map(|(id, c)| (id, T::lit(c as f64) * self.idf[id as usize]))
            .collect();
        let norm = entries.iter().map(|&(_, v)| v * v).sum::<T>().sqrt();
        if norm > T::zero() {
            entries.iter_mut().for_each(|(_, v)| *v /= norm);
        }
        SparseVec { entries }
    }

    pub fn transform_all<S: AsRef<str>>(&self, corpus: &[Vec<S>], vocab: &Vocab) -> FeatureMatrix<T> {
        FeatureMatrix {
            dim: vocab.len(),
            rows: corpus.iter().map(|doc| self.transform(doc, vocab)).collect(),
        }
    }
}

/// Fits idf on `corpus` and transforms the same corpus.
pub fn tfidf_featurize<T: Scalar, S: AsRef<str>>(corpus: &[Vec<S>], vocab: &Vocab) -> FeatureMatrix<T> {
    Tfidf::fit(corpus, vocab).transform_all(corpus, vocab)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;
    use std::collections::HashMap;

    fn docs(d: &[&[&str]]) -> Vec<Vec<String>> {
        d.iter().map(|doc| doc.iter().map(|s| s.to_string()).collect()).collect()
    }

    #[test]
    fn counts() {
        let corpus = docs(&[&["a", "b", "a"]]);
        let v = Vocab::build(&corpus, 10).unwrap();
        let f = bow_featurize::<f64, _>(&corpus[0], &v).to_dense(v.len());
        assert_eq!(f[v.id("a") as usize], 2.0);
        assert_eq!(f[v.id("b") as usize], 1.0);
        assert_eq!(f[PAD_ID as usize], 0.0);
        let empty: Vec<String> = vec![];
        assert!(bow_featurize::<f64, _>(&empty, &v).to_dense(v.len()).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn counts_match_hashmap_oracle() {
        let mut rng = Rng::new(77);
        let words = ["x", "y", "z", "w", "q", "r"];
        for _ in 0..20 {
            let corpus: Vec<Vec<String>> = (0..5)
                .map(|_| (0..rng.below(15)).map(|_| words[rng.below(6)].to_string()).collect())
                .collect();
            let v = Vocab::build(&corpus, 5).unwrap();
            for doc in &corpus {
                let mut oracle: HashMap<u32, f64> = HashMap::new();
                for w in doc {
                    *oracle.entry(v.id(w)).or_default() += 1.0;
                }
                let dense = bow_featurize::<f64, _>(doc, &v).to_dense(v.len());
                for (i, &x) in dense.iter().enumerate() {
                    assert_eq!(x, oracle.get(&(i as u32)).copied().unwrap_or(0.0));
                }
            }
        }
    }

    #[test]
    fn single_document_idf_is_one() {
        let corpus = docs(&[&["a", "b", "b"]]);
        let v = Vocab::build(&corpus, 10).unwrap();
        let t = Tfidf::<f64>::fit(&corpus, &v);
        assert_eq!(t.idf()[v.id("a") as usize], 1.0);
        assert_eq!(t.idf()[v.id("b") as usize], 1.0);
    }

    #[test]
    fn hand_computed_three_documents() {
        let corpus = docs(&[&["a", "b"], &["a", "c", "c"], &["a", "b", "d"]]);
        let v = Vocab::build(&corpus, 10).unwrap();
        let m = tfidf_featurize::<f64, _>(&corpus, &v);
        // D = 3; df: a=3, b=2, c=1, d=1
        let idf_a = 1.0;
        let idf_b = (4.0f64 / 3.0).ln() + 1.0;
        let idf_c = 2.0f64.ln() + 1.0;
        let rows = [
            vec![("a", idf_a), ("b", idf_b)],
            vec![("a", idf_a), ("c", 2.0 * idf_c)],
            vec![("a", idf_a), ("b", idf_b), ("d", idf_c)],
        ];
        for (row, expected) in m.rows.iter().zip(rows) {
            let norm = expected.iter().map(|(_, x)| x * x).sum::<f64>().sqrt();
            let dense = row.to_dense(v.len());
            for (w, x) in expected {
                assert!((dense[v.id(w) as usize] - x / norm).abs() < 1e-12);
            }
            assert!((row.norm() - 1.0).abs() < 1e-12);
        }
        let t = Tfidf::<f64>::fit(&corpus, &v);
        let min = t.idf()[2..6].iter().copied().fold(f64::INFINITY, f64::min);
        assert_eq!(t.idf()[v.id("a") as usize], min);
    }

    #[test]
    fn empty_document_row_is_zero() {
        let corpus = docs(&[&["a"], &[]]);
        let v = Vocab::build(&corpus, 10).unwrap();
        let m = tfidf_featurize::<f64, _>(&corpus, &v);
        assert_eq!(m.rows[1].norm(), 0.0);
    }
}
