use std::cmp::Ordering as CmpOrdering;
use std::fmt::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::training::format_metric;

/// One axis cell. Integers sort numerically, text lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisValue {
    Int(u64),
    Text(String),
}

impl AxisValue {
    fn cmp_key(&self, other: &Self) -> CmpOrdering {
        match (self, other) {
            (AxisValue::Int(a), AxisValue::Int(b)) => a.cmp(b),
            (AxisValue::Text(a), AxisValue::Text(b)) => a.cmp(b),
            (AxisValue::Int(_), AxisValue::Text(_)) => CmpOrdering::Less,
            (AxisValue::Text(_), AxisValue::Int(_)) => CmpOrdering::Greater,
        }
    }
}

impl fmt::Display for AxisValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxisValue::Int(v) => write!(f, "{v}"),
            AxisValue::Text(s) => f.write_str(s),
        }
    }
}

impl From<u64> for AxisValue {
    fn from(v: u64) -> Self {
        AxisValue::Int(v)
    }
}

impl From<usize> for AxisValue {
    fn from(v: usize) -> Self {
        AxisValue::Int(v as u64)
    }
}

impl From<&str> for AxisValue {
    fn from(v: &str) -> Self {
        AxisValue::Text(v.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub axes: Vec<AxisValue>,
    pub metrics: Vec<f64>,
}

/// Column layout of one experiment kind. Every name has exactly one schema.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Schema {
    pub name: &'static str,
    pub axes: &'static [&'static str],
    pub metrics: &'static [&'static str],
}

pub const WINDOW_ORDERING: Schema = Schema {
    name: "window-ordering",
    axes: &["dataset", "ordering", "window", "seed"],
    metrics: &["test_accuracy", "dev_accuracy", "best_epoch"],
};

pub const NTH_MAXPOOL: Schema = Schema {
    name: "nth-maxpool",
    axes: &["dataset", "n", "seed"],
    metrics: &["test_accuracy", "dev_accuracy", "best_epoch"],
};

pub const TRAIN: Schema = Schema {
    name: "train",
    axes: &["dataset", "model", "seed"],
    metrics: &["test_accuracy", "test_loss", "dev_accuracy", "best_epoch", "param_count"],
};

pub const BASELINE: Schema = Schema {
    name: "baseline",
    axes: &["dataset", "model"],
    metrics: &["test_accuracy", "train_accuracy", "iterations"],
};

pub const SCHEMAS: [Schema; 4] = [WINDOW_ORDERING, NTH_MAXPOOL, TRAIN, BASELINE];

/// Provenance that travels next to a result table rather than inside it, so
/// the CSV body stays byte-reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultMeta {
    pub experiment: String,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub timestamp: u64,
}

/// Rows of one experiment, kept sorted by axes.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub schema: Schema,
    pub rows: Vec<ResultRow>,
    pub config_hash: String,
    pub seeds: Vec<u64>,
}

/// Hex SHA-256 of a configuration's canonical JSON.
pub fn config_hash<S: Serialize>(config: &S) -> String {
    let json = serde_json::to_string(config).expect("config serializes");
    Sha256::digest(json.as_bytes()).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

impl ExperimentResult {
    pub fn new(schema: Schema, config_hash: String, seeds: Vec<u64>) -> Self {
        ExperimentResult { schema, rows: Vec::new(), config_hash, seeds }
    }

    pub fn push(&mut self, axes: Vec<AxisValue>, metrics: Vec<f64>) -> Result<()> {
        if axes.len() != self.schema.axes.len() || metrics.len() != self.schema.metrics.len() {
            return Err(Error::arg(format!(
                "row with {} axes and {} metrics does not fit the {} schema",
                axes.len(),
                metrics.len(),
                self.schema.name
            )));
        }
        self.rows.push(ResultRow { axes, metrics });
        self.sort();
        Ok(())
    }

    fn sort(&mut self) {
        self.rows.sort_by(|a, b| {
            a.axes
                .iter()
                .zip(&b.axes)
                .map(|(x, y)| x.cmp_key(y))
                .find(|o| o.is_ne())
                .unwrap_or(CmpOrdering::Equal)
        });
    }

    /// Column index of a metric by name.
    pub fn metric(&self, name: &str) -> Option<usize> {
        self.schema.metrics.iter().position(|m| *m == name)
    }

    pub fn axis(&self, name: &str) -> Option<usize> {
        self.schema.axes.iter().position(|m| *m == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<&str> = self.schema.axes.iter().chain(self.schema.metrics).copied().collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .axes
                .iter()
                .map(ToString::to_string)
                .chain(row.metrics.iter().map(|&m| format_metric(m)))
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Mean and population standard deviation of every metric over seeds, one
    /// row per combination of the remaining axes.
    pub fn summary_csv(&self) -> String {
        let seed_col = self.axis("seed");
        let keep: Vec<usize> = (0..self.schema.axes.len()).filter(|&i| Some(i) != seed_col).collect();
        let mut out = String::new();
        let mut header: Vec<String> = keep.iter().map(|&i| self.schema.axes[i].to_string()).collect();
        header.push("runs".into());
        for m in self.schema.metrics {
            header.push(format!("{m}_mean"));
            header.push(format!("{m}_std"));
        }
        out.push_str(&header.join(","));
        out.push('\n');
        let mut i = 0;
        while i < self.rows.len() {
            let key: Vec<&AxisValue> = keep.iter().map(|&k| &self.rows[i].axes[k]).collect();
            let mut j = i;
            while j < self.rows.len() && keep.iter().map(|&k| &self.rows[j].axes[k]).eq(key.iter().copied()) {
                j += 1;
            }
            let group = &self.rows[i..j];
            let mut cells: Vec<String> = key.iter().map(ToString::to_string).collect();
            cells.push(group.len().to_string());
            for m in 0..self.schema.metrics.len() {
                let (mean, std) = mean_std(group.iter().map(|r| r.metrics[m]));
                cells.push(format_metric(mean));
                cells.push(format_metric(std));
            }
            out.push_str(&cells.join(","));
            out.push('\n');
            i = j;
        }
        out
    }

    pub fn meta(&self, timestamp: u64) -> ResultMeta {
        ResultMeta {
            experiment: self.schema.name.to_string(),
            config_hash: self.config_hash.clone(),
            seeds: self.seeds.clone(),
            timestamp,
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Mean and population standard deviation.
pub fn mean_std(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.collect();
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_sort_by_axes_numerically() {
        let mut r = ExperimentResult::new(NTH_MAXPOOL, "h".into(), vec![1, 2]);
        for (n, seed) in [(10usize, 2u64), (2, 1), (10, 1), (2, 2)] {
            r.push(vec!["trec".into(), n.into(), seed.into()], vec![0.5, 0.5, 3.0]).unwrap();
        }
        let order: Vec<String> = r.rows.iter().map(|x| format!("{}-{}", x.axes[1], x.axes[2])).collect();
        assert_eq!(order, ["2-1", "2-2", "10-1", "10-2"]);
    }

    #[test]
    fn csv_has_fixed_header() {
        let mut r = ExperimentResult::new(WINDOW_ORDERING, "h".into(), vec![1]);
        r.push(vec!["rt".into(), "random".into(), 3usize.into(), 1u64.into()], vec![0.7512345, 0.7, 4.0])
            .unwrap();
        assert_eq!(
            r.to_csv(),
            "dataset,ordering,window,seed,test_accuracy,dev_accuracy,best_epoch\nrt,random,3,1,0.751235,0.700000,4\n"
        );
        assert!(r.push(vec!["rt".into()], vec![1.0]).is_err());
    }

    #[test]
    fn schema_names_unique() {
        for (i, a) in SCHEMAS.iter().enumerate() {
            for b in &SCHEMAS[i + 1..] {
                assert_ne!(a.name, b.name);
            }
            assert!(a.axes.iter().chain(a.metrics).all(|c| !c.contains(',')));
        }
    }

    #[test]
    fn summary_over_seeds() {
        let mut r = ExperimentResult::new(NTH_MAXPOOL, "h".into(), vec![1, 2]);
        r.push(vec!["t".into(), 1usize.into(), 1u64.into()], vec![0.8, 0.7, 1.0]).unwrap();
        r.push(vec!["t".into(), 1usize.into(), 2u64.into()], vec![0.6, 0.7, 3.0]).unwrap();
        let s = r.summary_csv();
        let line = s.lines().nth(1).unwrap();
        assert!(line.starts_with("t,1,2,0.700000,0.100000,0.700000,0,2,1"), "{line}");
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(config_hash(&[1, 2]), config_hash(&[1, 2]));
        assert_ne!(config_hash(&[1, 2]), config_hash(&[2, 1]));
        assert_eq!(config_hash(&0).len(), 64);
    }
}
