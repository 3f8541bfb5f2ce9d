use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::ordering::Ordering;
use super::tokenize::tokenize;
use super::vocab::{encode_pad, Vocab, PAD_ID};
use crate::error::{Error, Result};
use crate::numerics::Rng;

/// One labeled, padded id sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub label: usize,
    ids: Vec<u32>,
    len: usize,
}

impl Example {
    /// Pad ids may only appear as a suffix.
    pub fn new(label: usize, ids: Vec<u32>) -> Result<Self> {
        let len = ids.iter().position(|&i| i == PAD_ID).unwrap_or(ids.len());
        if ids[len..].iter().any(|&i| i != PAD_ID) {
            return Err(Error::arg("pad ids must form a suffix"));
        }
        Ok(Example { label, ids, len })
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    /// Number of non-pad tokens.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn max_len(&self) -> usize {
        self.ids.len()
    }
}

/// Examples of one split together with their full token lists.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Split {
    pub examples: Vec<Example>,
    /// Untruncated tokens in original order, parallel to `examples`.
    pub tokens: Vec<Vec<String>>,
}

impl Split {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.examples.iter().map(|e| e.label).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitName {
    Train,
    Dev,
    Test,
}

impl SplitName {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(SplitName::Train),
            "dev" => Some(SplitName::Dev),
            "test" => Some(SplitName::Test),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub vocab: Vocab,
    pub max_len: usize,
    pub num_classes: usize,
    pub train: Split,
    pub dev: Split,
    pub test: Split,
}

/// Labeled raw text as read from a TSV line.
pub type LabeledText = (usize, String);

impl Dataset {
    /// Tokenizes, builds the vocabulary from the training split, then encodes
    /// every split to `max_len` ids.
    pub fn from_texts(
        name: impl Into<String>,
        train: &[LabeledText],
        dev: &[LabeledText],
        test: &[LabeledText],
        max_len: usize,
        max_vocab: usize,
    ) -> Result<Dataset> {
        if max_len == 0 {
            return Err(Error::arg("maximum length N must be at least 1"));
        }
        let tok = |rows: &[LabeledText]| -> Vec<(usize, Vec<String>)> {
            rows.iter().map(|(l, t)| (*l, tokenize(t))).collect()
        };
        let (train, dev, test) = (tok(train), tok(dev), tok(test));
        let corpus: Vec<Vec<String>> = train.iter().map(|(_, t)| t.clone()).collect();
        let vocab = Vocab::build(&corpus, max_vocab)?;
        let encode = |rows: Vec<(usize, Vec<String>)>| -> Result<Split> {
            let mut split = Split::default();
            for (label, tokens) in rows {
                split.examples.push(Example::new(label, encode_pad(&tokens, &vocab, max_len))?);
                split.tokens.push(tokens);
            }
            Ok(split)
        };
        let (train, dev, test) = (encode(train)?, encode(dev)?, encode(test)?);
        let num_classes = [&train, &dev, &test]
            .iter()
            .flat_map(|s| s.examples.iter().map(|e| e.label))
            .max()
            .map_or(0, |m| m + 1);
        Ok(Dataset {
            name: name.into(),
            vocab,
            max_len,
            num_classes,
            train,
            dev,
            test,
        })
    }

    pub fn split(&self, which: SplitName) -> &Split {
        match which {
            SplitName::Train => &self.train,
            SplitName::Dev => &self.dev,
            SplitName::Test => &self.test,
        }
    }

    /// Copy with every split's id sequences reordered. Random shuffles are drawn
    /// from one stream seeded by `seed`, walking train, dev, test in order.
    pub fn with_ordering(&self, ordering: Ordering, seed: u64) -> Dataset {
        let mut rng = Rng::with_stream(seed, 0x0D3E);
        let mut out = self.clone();
        for split in [&mut out.train, &mut out.dev, &mut out.test] {
            for ex in &mut split.examples {
                let ids = ordering.apply(ex.ids(), &mut rng);
                *ex = Example::new(ex.label, ids).expect("shuffles keep pads as suffix");
            }
        }
        out
    }

    pub fn summary(&self) -> DatasetSummary {
        DatasetSummary {
            name: self.name.clone(),
            train: self.train.len(),
            dev: self.dev.len(),
            test: self.test.len(),
            vocab: self.vocab.len(),
            classes: self.num_classes,
            max_len: self.max_len,
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct DatasetSummary {
    pub name: String,
    pub train: usize,
    pub dev: usize,
    pub test: usize,
    pub vocab: usize,
    pub classes: usize,
    pub max_len: usize,
}

/// Parses `<label>\t<text>` lines.
pub fn read_tsv(path: &Path) -> Result<Vec<LabeledText>> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let perr = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut rows = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let (label, text) = line
            .split_once('\t')
            .ok_or_else(|| perr(i + 1, "missing tab between label and text".into()))?;
        let label: usize = label
            .trim()
            .parse()
            .map_err(|_| perr(i + 1, format!("label {label:?} is not a non-negative integer")))?;
        if tokenize(text).is_empty() {
            return Err(perr(i + 1, "text has no tokens".into()));
        }
        rows.push((label, text.to_string()));
    }
    Ok(rows)
}

/// Loads `train.tsv`, `dev.tsv` and `test.tsv` from `dir`.
pub fn load_dataset(dir: &Path, max_len: usize, max_vocab: usize) -> Result<Dataset> {
    let file = |name: &str| -> PathBuf { dir.join(name) };
    let train = read_tsv(&file("train.tsv"))?;
    let dev = read_tsv(&file("dev.tsv"))?;
    let test = read_tsv(&file("test.tsv"))?;
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    Dataset::from_texts(name, &train, &dev, &test, max_len, max_vocab)
}

/// Size and shape defaults of the benchmark datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DatasetPreset {
    pub name: &'static str,
    pub size: usize,
    pub train: usize,
    pub dev: usize,
    pub test: usize,
    pub max_vocab: usize,
    pub classes: usize,
    pub max_len: usize,
}

pub const PRESETS: [DatasetPreset; 7] = [
    DatasetPreset { name: "imdb", size: 50000, train: 20000, dev: 5000, test: 25000, max_vocab: 30000, classes: 2, max_len: 400 },
    DatasetPreset { name: "trec", size: 5952, train: 4906, dev: 546, test: 500, max_vocab: 5000, classes: 6, max_len: 30 },
    DatasetPreset { name: "so", size: 10000, train: 8100, dev: 900, test: 1000, max_vocab: 30000, classes: 2, max_len: 30 },
    DatasetPreset { name: "rt", size: 10662, train: 8100, dev: 900, test: 1662, max_vocab: 30000, classes: 2, max_len: 30 },
    DatasetPreset { name: "pol", size: 2000, train: 1280, dev: 320, test: 400, max_vocab: 30000, classes: 2, max_len: 30 },
    DatasetPreset { name: "ar", size: 121565, train: 80000, dev: 20000, test: 21565, max_vocab: 30000, classes: 5, max_len: 100 },
    DatasetPreset { name: "sst2", size: 9613, train: 6920, dev: 872, test: 1821, max_vocab: 10000, classes: 2, max_len: 30 },
];

pub fn preset(name: &str) -> Option<DatasetPreset> {
    let key = name.to_ascii_lowercase().replace(['-', '_'], "");
    PRESETS.iter().copied().find(|p| p.name == key)
}
