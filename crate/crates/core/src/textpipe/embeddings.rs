use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use sha2::{Digest, Sha256};

use super::vocab::{Vocab, PAD_ID};
use crate::error::{Error, Result};
use crate::numerics::{Scalar, Tensor};

/// Frozen word-vector matrix, one row per vocabulary id.
///
/// Rows of words without a pretrained vector are zero, and so is the pad row.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable<T> {
    matrix: Tensor<T>,
}

/// Counters from [`load_embeddings`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EmbeddingLoadReport {
    /// Vocabulary words that received a vector.
    pub matched: usize,
    /// Vocabulary rows left at zero, including pad and unknown.
    pub zero_rows: usize,
    /// Lines skipped for having the wrong number of values or bad numbers.
    pub malformed: usize,
    /// First few malformed line numbers (1-based).
    pub malformed_lines: Vec<usize>,
}

impl<T: Scalar> EmbeddingTable<T> {
    /// Wraps a `[V, d]` matrix; the pad row must be zero.
    pub fn new(matrix: Tensor<T>) -> Result<Self> {
        if matrix.rank() != 2 {
            return Err(Error::arg(format!("embedding matrix must be rank 2, got {:?}", matrix.shape())));
        }
        if matrix.row(PAD_ID as usize).iter().any(|&x| x != T::zero()) {
            return Err(Error::arg("pad embedding row must be zero"));
        }
        Ok(EmbeddingTable { matrix })
    }

    pub fn vocab_size(&self) -> usize {
        self.matrix.shape()[0]
    }

    pub fn dim(&self) -> usize {
        self.matrix.shape()[1]
    }

    pub fn matrix(&self) -> &Tensor<T> {
        &self.matrix
    }

    pub fn row(&self, id: u32) -> Result<&[T]> {
        let id = id as usize;
        if id >= self.vocab_size() {
            return Err(Error::Index {
                what: "embedding table",
                index: id,
                size: self.vocab_size(),
            });
        }
        Ok(self.matrix.row(id))
    }

    /// SHA-256 over the shape and the f64 bit patterns of every value.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for &d in self.matrix.shape() {
            h.update((d as u64).to_le_bytes());
        }
        for &x in self.matrix.data() {
            h.update(x.as_f64().to_bits().to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Number of values on the first line of a GloVe text file.
pub fn infer_embedding_dim(path: &Path) -> Result<usize> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut first = String::new();
    BufReader::new(file)
        .read_line(&mut first)
        .map_err(|e| Error::io(path, e))?;
    let fields = first.split_whitespace().count();
    if fields < 2 {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "no vector values on first line".into(),
        });
    }
    Ok(fields - 1)
}

/// Reads a GloVe text file (`word v1 ... vd` per line) into a table aligned with
/// `vocab`. Lines with a value count other than `dim`, or with unparsable
/// numbers, are skipped and counted. The first vector seen for a word wins.
pub fn load_embeddings<T: Scalar>(
    path: &Path,
    vocab: &Vocab,
    dim: usize,
) -> Result<(EmbeddingTable<T>, EmbeddingLoadReport)> {
    if dim == 0 {
        return Err(Error::arg("embedding dimension must be positive"));
    }
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut matrix = Tensor::<T>::zeros(&[vocab.len(), dim]);
    let mut report = EmbeddingLoadReport::default();
    let mut filled: HashSet<u32> = HashSet::new();
    let mut values: Vec<T> = Vec::with_capacity(dim);

    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(' ');
        let word = parts.next().unwrap_or_default();
        values.clear();
        let mut ok = true;
        for p in parts {
            match p.parse::<f64>() {
                Ok(x) if x.is_finite() => values.push(T::lit(x)),
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok || values.len() != dim || word.is_empty() {
            report.malformed += 1;
            if report.malformed_lines.len() < 10 {
                report.malformed_lines.push(lineno + 1);
            }
            continue;
        }
        let Some(id) = vocab.get(word) else { continue };
        if id == PAD_ID || !filled.insert(id) {
            continue;
        }
        matrix.row_mut(id as usize).copy_from_slice(&values);
    }
    report.matched = filled.len();
    report.zero_rows = vocab.len() - filled.len();
    Ok((EmbeddingTable::new(matrix)?, report))
}
