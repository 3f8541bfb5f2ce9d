//! Experiment grids, result tables and analysis exports.

mod experiments;
mod exports;
mod fixture;
mod gradaudit;
mod result;

pub use experiments::{
    baseline_result, run_linear_baseline, run_nth_maxpool_experiment, run_window_ordering_experiment, train_seeded,
    train_seeded_with_progress,
    BaselineOutcome, GridConfig, RunOutcome,
};
pub use exports::{
    concat_layer_stats, export_attention_weights, export_conv_embeddings, median, run_maxpool_provenance,
    write_jsonl, AttentionRecord, ConcatStats, ConvEmbedding, ConvEmbeddingExport, ProvenanceRecord,
};
pub use fixture::fixture_max_deviation;
pub use gradaudit::{gradient_audit, AuditEntry, AUDIT_EPSILON, AUDIT_LAYERS, AUDIT_TOLERANCE};
pub use result::{
    config_hash, mean_std, AxisValue, ExperimentResult, ResultMeta, ResultRow, Schema, BASELINE, NTH_MAXPOOL,
    SCHEMAS, TRAIN, WINDOW_ORDERING,
};

#[cfg(test)]
mod tests;
