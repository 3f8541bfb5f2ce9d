use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

/// Word/id mapping. Id 0 is padding, id 1 is the unknown word, the rest are
/// corpus words by descending frequency, ties broken lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocab {
    words: Vec<String>,
    ids: HashMap<String, u32>,
}

impl From<Vec<String>> for Vocab {
    fn from(words: Vec<String>) -> Self {
        let ids = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        Vocab { words, ids }
    }
}

impl From<Vocab> for Vec<String> {
    fn from(v: Vocab) -> Self {
        v.words
    }
}

impl Vocab {
    /// Builds a vocabulary of at most `max_size` entries including the two
    /// reserved ids.
    pub fn build<S: AsRef<str>>(corpus: &[Vec<S>], max_size: usize) -> Result<Vocab> {
        if max_size < 2 {
            return Err(Error::arg(format!("max vocabulary size must be at least 2, got {max_size}")));
        }
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for doc in corpus {
            for tok in doc {
                let tok = tok.as_ref();
                if tok != PAD_TOKEN && tok != UNK_TOKEN {
                    *counts.entry(tok).or_default() += 1;
                }
            }
        }
        let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
        ranked.sort_unstable_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let mut words = vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()];
        words.extend(ranked.into_iter().take(max_size - 2).map(|(w, _)| w.to_string()));
        Ok(Vocab::from(words))
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Id of `word`, or [`UNK_ID`].
    pub fn id(&self, word: &str) -> u32 {
        self.ids.get(word).copied().unwrap_or(UNK_ID)
    }

    pub fn get(&self, word: &str) -> Option<u32> {
        self.ids.get(word).copied()
    }

    pub fn word(&self, id: u32) -> Option<&str> {
        self.words.get(id as usize).map(String::as_str)
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}

/// Maps tokens to ids, truncating to the first `max_len` or padding the tail.
pub fn encode_pad<S: AsRef<str>>(tokens: &[S], vocab: &Vocab, max_len: usize) -> Vec<u32> {
    let mut ids: Vec<u32> = tokens.iter().take(max_len).map(|t| vocab.id(t.as_ref())).collect();
    ids.resize(max_len, PAD_ID);
    ids
}

/// Inverse of [`encode_pad`] for the non-pad prefix.
pub fn decode(ids: &[u32], vocab: &Vocab) -> Vec<String> {
    ids.iter()
        .take_while(|&&id| id != PAD_ID)
        .map(|&id| vocab.word(id).unwrap_or(UNK_TOKEN).to_string())
        .collect()
}
