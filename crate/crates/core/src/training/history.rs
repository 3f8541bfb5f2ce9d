use std::fmt::Write;

/// One training epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean of the per-batch mean losses.
    pub train_loss: f64,
    /// `None` on epochs skipped by the evaluation cadence.
    pub dev_accuracy: Option<f64>,
    pub dev_loss: Option<f64>,
    pub seconds: f64,
    /// Batches whose gradient norm was clipped.
    pub clipped_batches: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters the model ends with, chosen by dev accuracy.
    pub best_epoch: Option<usize>,
    pub best_dev_accuracy: Option<f64>,
    /// Adam steps taken, one per batch.
    pub steps: u64,
}

pub const HISTORY_COLUMNS: [&str; 5] = ["epoch", "train_loss", "dev_accuracy", "dev_loss", "seconds"];

/// Formats a metric with 6 significant digits (integers exactly); non-finite
/// values become an empty cell.
pub fn format_metric(x: f64) -> String {
    if !x.is_finite() {
        return String::new();
    }
    // counts (epochs, parameters, iterations) print as integers
    if x.fract() == 0.0 && x.abs() < 1e15 {
        return format!("{x:.0}");
    }
    let magnitude = x.abs().log10().floor() as i64;
    let decimals = (5 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

impl History {
    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn total_clipped(&self) -> usize {
        self.epochs.iter().map(|e| e.clipped_batches).sum()
    }

    /// CSV with the columns in [`HISTORY_COLUMNS`]. `seconds` is wall-clock
    /// time and left empty when `with_seconds` is false, which makes the body
    /// reproducible.
    pub fn to_csv(&self, with_seconds: bool) -> String {
        let mut out = HISTORY_COLUMNS.join(",");
        out.push('\n');
        let opt = |v: Option<f64>| v.map(format_metric).unwrap_or_default();
        for e in &self.epochs {
            let secs = if with_seconds { format_metric(e.seconds) } else { String::new() };
            writeln!(
                out,
                "{},{},{},{},{}",
                e.epoch,
                format_metric(e.train_loss),
                opt(e.dev_accuracy),
                opt(e.dev_loss),
                secs
            )
            .unwrap();
        }
        out
    }
}
