use serde::{Deserialize, Serialize};

use super::vocab::PAD_ID;
use crate::numerics::Rng;

/// Word-order corruption applied to the non-pad prefix of each example.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Ordering {
    #[default]
    Correct,
    Random,
    Alternate,
}

impl Ordering {
    pub fn name(self) -> &'static str {
        match self {
            Ordering::Correct => "correct",
            Ordering::Random => "random",
            Ordering::Alternate => "alternate",
        }
    }

    pub fn parse(s: &str) -> Option<Ordering> {
        match s {
            "correct" => Some(Ordering::Correct),
            "random" => Some(Ordering::Random),
            "alternate" => Some(Ordering::Alternate),
            _ => None,
        }
    }

    pub fn apply(self, ids: &[u32], rng: &mut Rng) -> Vec<u32> {
        match self {
            Ordering::Correct => ids.to_vec(),
            Ordering::Random => random_shuffle(ids, rng),
            Ordering::Alternate => alternate_shuffle(ids),
        }
    }
}

fn real_len(ids: &[u32]) -> usize {
    ids.iter().position(|&i| i == PAD_ID).unwrap_or(ids.len())
}

/// Uniform permutation of the non-pad prefix; the pad suffix stays in place.
pub fn random_shuffle(ids: &[u32], rng: &mut Rng) -> Vec<u32> {
    let mut out = ids.to_vec();
    let n = real_len(ids);
    rng.shuffle(&mut out[..n]);
    out
}

/// Swaps positions (0,1), (2,3), ... of the non-pad prefix; an odd last word stays.
pub fn alternate_shuffle(ids: &[u32]) -> Vec<u32> {
    let mut out = ids.to_vec();
    let n = real_len(ids);
    for pair in out[..n].chunks_exact_mut(2) {
        pair.swap(0, 1);
    }
    out
}
