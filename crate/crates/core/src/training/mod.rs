//! Losses, the mini-batch training loop, evaluation and checkpoints.

mod checkpoint;
mod history;
mod loss;
mod metrics;
mod train;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, Checkpoint};
pub use history::{format_metric, EpochRecord, History, HISTORY_COLUMNS};
pub use loss::{batch_loss, cross_entropy};
pub use metrics::{evaluate, Metrics};
pub use train::{streams, train, train_with_progress, TrainConfig};
