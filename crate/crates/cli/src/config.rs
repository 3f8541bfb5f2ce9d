use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use scarn_core::harness::GridConfig;
use scarn_core::models::{LinearConfig, ModelKind, ModelSpec};
use scarn_core::textpipe::{load_dataset, load_embeddings, preset, Dataset, EmbeddingTable, Ordering};
use scarn_core::training::TrainConfig;

use crate::CliError;

pub const DATA_DIR_ENV: &str = "SCARN_DATA_DIR";
pub const RUNS_DIR_ENV: &str = "SCARN_RUNS_DIR";
const DEFAULT_MAX_VOCAB: usize = 30000;

/// Where a dataset and its embeddings live on disk.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Directory name under the data root holding train/dev/test TSVs.
    pub dataset: String,
    /// Overrides the data root for this run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_dir: Option<PathBuf>,
    /// GloVe-format text file; defaults to `<root>/glove<d>.txt`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embeddings: Option<PathBuf>,
    /// Vocabulary cap; defaults to the dataset preset or 30000.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_vocab: Option<usize>,
}

impl DataConfig {
    pub fn named(dataset: &str) -> Self {
        DataConfig { dataset: dataset.to_string(), ..Default::default() }
    }

    pub fn root(&self) -> PathBuf {
        if let Some(d) = &self.data_dir {
            return d.clone();
        }
        std::env::var_os(DATA_DIR_ENV).map_or_else(|| PathBuf::from("data"), PathBuf::from)
    }

    pub fn dataset_dir(&self) -> PathBuf {
        self.root().join(&self.dataset)
    }

    pub fn embeddings_path(&self, dim: usize) -> PathBuf {
        self.embeddings.clone().unwrap_or_else(|| self.root().join(format!("glove{dim}.txt")))
    }

    pub fn max_vocab(&self) -> usize {
        self.max_vocab
            .or_else(|| preset(&self.dataset).map(|p| p.max_vocab))
            .unwrap_or(DEFAULT_MAX_VOCAB)
    }

    /// Fills defaults so the echoed config fully describes the run.
    pub fn resolve(&mut self, dim: usize) {
        self.data_dir = Some(self.root());
        self.embeddings = Some(self.embeddings_path(dim));
        self.max_vocab = Some(self.max_vocab());
    }

    pub fn load(&self, max_len: usize) -> Result<Dataset, CliError> {
        let dir = self.dataset_dir();
        if !dir.is_dir() {
            return Err(CliError::Data(format!(
                "dataset directory {} not found (set {DATA_DIR_ENV} or data_dir)",
                dir.display()
            )));
        }
        let mut ds = load_dataset(&dir, max_len, self.max_vocab())?;
        ds.name = self.dataset.clone();
        Ok(ds)
    }

    pub fn load_table(&self, ds: &Dataset, dim: usize, log: &mut impl FnMut(String)) -> Result<EmbeddingTable<f64>, CliError> {
        let path = self.embeddings_path(dim);
        if !path.is_file() {
            return Err(CliError::Data(format!("embeddings file {} not found", path.display())));
        }
        let (table, report) = load_embeddings(&path, &ds.vocab, dim)?;
        log(format!(
            "embeddings {}: {} of {} vocabulary words matched, {} malformed lines",
            path.display(),
            report.matched,
            ds.vocab.len(),
            report.malformed
        ));
        Ok(table)
    }
}

fn default_seeds() -> Vec<u64> {
    vec![1]
}

/// `train` configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainRunConfig {
    pub data: DataConfig,
    pub model: ModelSpec,
    #[serde(default)]
    pub train: TrainConfig,
    /// One full training run per seed.
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
}

impl TrainRunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let mut bad = Vec::new();
        if self.model.kind.is_linear() {
            bad.push(format!("{} is a linear baseline; use the baseline command", self.model.kind.name()));
        }
        if self.seeds.is_empty() {
            bad.push("seeds must not be empty".into());
        }
        if let Err(scarn_core::Error::Config(m)) = self.model.validate() {
            bad.extend(m);
        }
        if let Err(scarn_core::Error::Config(m)) = self.train.validate() {
            bad.extend(m);
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(bad))
        }
    }
}

/// `experiment` configuration: flags are folded into this and echoed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataConfig,
    pub grid: GridConfig,
    #[serde(default)]
    pub windows: Vec<usize>,
    #[serde(default)]
    pub orderings: Vec<Ordering>,
    #[serde(default)]
    pub n_values: Vec<usize>,
}

/// `baseline` configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineConfig {
    pub data: DataConfig,
    pub model: ModelKind,
    /// Truncation length used only to encode splits; the features use full token lists.
    pub max_len: usize,
    #[serde(default)]
    pub linear: LinearConfig,
}

/// Reads a JSON config, mapping every read or schema failure to a usage error.
pub fn read_json<C: for<'de> Deserialize<'de>>(path: &Path) -> Result<C, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
}

/// Default `max_len` for a dataset: its preset, else 30.
pub fn default_max_len(dataset: &str) -> usize {
    preset(dataset).map_or(30, |p| p.max_len)
}
