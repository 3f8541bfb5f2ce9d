use std::sync::Arc;

use super::*;
use crate::error::Error;
use crate::models::{build_model, LinearConfig, Model, ModelKind, ModelSpec};
use crate::numerics::{Rng, Tensor};
use crate::synthetic::planted_keyword;
use crate::textpipe::{tokenize, Dataset, EmbeddingTable, Example, Ordering, PAD_TOKEN};
use crate::training::{streams, TrainConfig};

const DIM: usize = 8;

fn data(seed: u64) -> (Dataset, Arc<EmbeddingTable<f64>>) {
    planted_keyword::<f64>(2, (16, 6, 6), 7, DIM, seed).unwrap()
}

fn grid(ds: &Dataset, seeds: Vec<u64>, threads: usize) -> GridConfig {
    let mut g = GridConfig::kim_cnn(DIM, ds.max_len, ds.num_classes);
    g.spec.filters = 4;
    g.train = TrainConfig { batch_size: 4, epochs: 2, lr: 0.02, ..TrainConfig::default() };
    g.seeds = seeds;
    g.threads = threads;
    g
}

fn model(kind: ModelKind, ds: &Dataset, table: Arc<EmbeddingTable<f64>>, seed: u64) -> Model<f64> {
    let mut s = ModelSpec::small(kind, DIM, ds.max_len, ds.num_classes);
    s.filters = 4;
    s.hidden = 3;
    build_model(s, table, &mut Rng::with_stream(seed, streams::INIT)).unwrap()
}

#[test]
fn window_ordering_grid_shape() {
    let (ds, table) = data(1);
    let orderings = [Ordering::Correct, Ordering::Random, Ordering::Alternate];
    let r = run_window_ordering_experiment(&ds, table, &[1, 3], &orderings, &grid(&ds, vec![1, 2], 0)).unwrap();
    assert_eq!(r.rows.len(), 3 * 2 * 2);
    let acc = r.metric("test_accuracy").unwrap();
    assert!(r.rows.iter().all(|row| (0.0..=1.0).contains(&row.metrics[acc])));
}

#[test]
fn single_cell_is_one_row() {
    let (ds, table) = data(2);
    let r = run_window_ordering_experiment(&ds, table, &[2], &[Ordering::Correct], &grid(&ds, vec![5], 1)).unwrap();
    assert_eq!(r.rows.len(), 1);
}

#[test]
fn thread_count_does_not_change_results() {
    let (ds, table) = data(3);
    let orderings = [Ordering::Correct, Ordering::Alternate];
    let serial = run_window_ordering_experiment(&ds, table.clone(), &[1, 2], &orderings, &grid(&ds, vec![1, 2], 1)).unwrap();
    let parallel = run_window_ordering_experiment(&ds, table, &[1, 2], &orderings, &grid(&ds, vec![1, 2], 4)).unwrap();
    assert_eq!(serial.rows, parallel.rows);
    assert_eq!(serial.config_hash, parallel.config_hash);
}

#[test]
fn row_reproducible_from_seed_alone() {
    let (ds, table) = data(4);
    let g = grid(&ds, vec![3, 8], 0);
    let r = run_window_ordering_experiment(&ds, table.clone(), &[3], &[Ordering::Random], &g).unwrap();
    let mut spec = g.spec.clone();
    spec.windows = vec![3];
    spec.ordering = Ordering::Random;
    let run = train_seeded(&spec, &ds.with_ordering(Ordering::Random, 8), table, &g.train, 8).unwrap();
    let row = r.rows.iter().find(|row| row.axes[3] == AxisValue::Int(8)).unwrap();
    assert_eq!(row.metrics[r.metric("test_accuracy").unwrap()], run.test.accuracy);
}

#[test]
fn alternate_twice_restores_correct() {
    let (ds, _) = data(5);
    let twice = ds.with_ordering(Ordering::Alternate, 1).with_ordering(Ordering::Alternate, 2);
    assert_eq!(twice.train.examples, ds.train.examples);
    assert_eq!(twice.test.examples, ds.test.examples);
}

#[test]
fn invalid_windows_rejected() {
    let (ds, table) = data(6);
    let err = run_window_ordering_experiment(&ds, table.clone(), &[ds.max_len + 1], &[Ordering::Correct], &grid(&ds, vec![1], 1));
    assert!(matches!(err, Err(Error::Config(_))));
    let err = run_window_ordering_experiment(&ds, table.clone(), &[0], &[Ordering::Correct], &grid(&ds, vec![1], 1));
    assert!(matches!(err, Err(Error::Config(_))));
    let err = run_window_ordering_experiment(&ds, table, &[1], &[Ordering::Correct], &grid(&ds, vec![], 1));
    assert!(matches!(err, Err(Error::Config(_))));
}

#[test]
fn nth_maxpool_shape_and_n1_matches_trainer() {
    let (ds, table) = data(7);
    let g = grid(&ds, vec![1, 2], 0);
    let r = run_nth_maxpool_experiment(&ds, table.clone(), &[1, 2, 3], &g).unwrap();
    assert_eq!(r.rows.len(), 3 * 2);
    let run = train_seeded(&g.spec, &ds, table, &g.train, 2).unwrap();
    let row = r.rows.iter().find(|row| row.axes[1] == AxisValue::Int(1) && row.axes[2] == AxisValue::Int(2)).unwrap();
    assert_eq!(row.metrics[0], run.test.accuracy);
    assert_eq!(row.metrics[1], run.dev_accuracy);
}

#[test]
fn invalid_n_rejected() {
    let (ds, table) = data(8);
    let g = grid(&ds, vec![1], 1);
    // windows [3,4,5] over N = 7 leave 3 pooling rows
    assert!(matches!(run_nth_maxpool_experiment(&ds, table.clone(), &[4], &g), Err(Error::Config(_))));
    assert!(matches!(run_nth_maxpool_experiment(&ds, table.clone(), &[0], &g), Err(Error::Config(_))));
    assert!(run_nth_maxpool_experiment(&ds, table, &[3], &g).is_ok());
}

#[test]
fn linear_baselines_fit_training_split() {
    let (ds, _) = data(9);
    for kind in [ModelKind::LogregBow, ModelKind::LogregTfidf] {
        let out = run_linear_baseline::<f64>(&ds, kind, &LinearConfig::default()).unwrap();
        assert_eq!(out.train_accuracy, 1.0, "{kind:?}");
        let r = baseline_result(&ds, kind, &LinearConfig::default(), &out).unwrap();
        assert_eq!(r.rows.len(), 1);
    }
    let err = run_linear_baseline::<f64>(&ds, ModelKind::Scarn, &LinearConfig::default());
    assert!(matches!(err, Err(Error::Config(_))));
}

fn is_distribution(v: &[f64], tol: f64) -> bool {
    v.iter().all(|&x| x >= 0.0) && (v.iter().sum::<f64>() - 1.0).abs() <= tol
}

#[test]
fn provenance_dominating_word_takes_everything() {
    let (ds, _) = data(10);
    let mut m = Tensor::zeros(&[ds.vocab.len(), DIM]);
    let hot = ds.vocab.id(&crate::synthetic::keyword(1));
    m.row_mut(hot as usize).iter_mut().for_each(|x| *x = 5.0);
    let table = Arc::new(EmbeddingTable::new(m).unwrap());
    let mut spec = ModelSpec::small(ModelKind::KimCnn, DIM, ds.max_len, 2);
    spec.filters = 3;
    spec.windows = vec![1];
    let mut model = build_model(spec, table, &mut Rng::new(1)).unwrap();
    model.params_mut().by_name_mut("conv_w1.weight").unwrap().data_mut().iter_mut().for_each(|w| *w = 1.0);
    let examples: Vec<Example> = ds.train.examples.iter().filter(|e| e.label == 1).cloned().collect();
    let recs = run_maxpool_provenance(&model, &examples, &ds.vocab).unwrap();
    for r in recs {
        let pos = r.tokens.iter().position(|t| *t == crate::synthetic::keyword(1)).unwrap();
        assert_eq!(r.shares[pos], 1.0);
    }
}

#[test]
fn provenance_matches_recount() {
    let (ds, table) = data(11);
    let mut spec = ModelSpec::small(ModelKind::KimCnn, DIM, ds.max_len, 2);
    spec.filters = 5;
    spec.windows = vec![1, 2, 3];
    let model = build_model(spec, table, &mut Rng::new(2)).unwrap();
    let recs = run_maxpool_provenance(&model, &ds.test.examples, &ds.vocab).unwrap();
    assert_eq!(recs.len(), ds.test.len());
    for (r, ex) in recs.iter().zip(&ds.test.examples) {
        assert!(is_distribution(&r.shares, 1e-12));
        assert_eq!(r.tokens.len(), ex.len());
        assert_eq!(r.misclassified, r.predicted != r.gold);
        // recount: each filter's vote divided over its covered real positions
        let rows = model.infer(ex).unwrap().pool_rows.unwrap();
        let mut counts = vec![0.0; ex.len()];
        for (w, argrows) in [1usize, 2, 3].iter().zip(&rows) {
            for &row in argrows {
                let covered: Vec<usize> = (row..row + w).filter(|&p| p < ex.len()).collect();
                let covered = if covered.is_empty() { vec![ex.len() - 1] } else { covered };
                for &p in &covered {
                    counts[p] += 1.0 / covered.len() as f64;
                }
            }
        }
        let total = 15.0;
        for (s, c) in r.shares.iter().zip(&counts) {
            assert!((s - c / total).abs() < 1e-12);
        }
    }
}

#[test]
fn provenance_needs_pooling_model() {
    let (ds, table) = data(12);
    let m = model(ModelKind::Lstm, &ds, table, 1);
    assert!(matches!(run_maxpool_provenance(&m, &ds.test.examples, &ds.vocab), Err(Error::Capability(_))));
}

#[test]
fn attention_export_alignment() {
    let (ds, table) = data(13);
    for kind in [ModelKind::Scarn, ModelKind::ConcatScarn, ModelKind::LstmAttention] {
        let m = model(kind, &ds, table.clone(), 3);
        let recs = export_attention_weights(&m, &ds.test.examples, &ds.vocab).unwrap();
        for (r, toks) in recs.iter().zip(&ds.test.tokens) {
            assert_eq!(r.alphas.len(), r.tokens.len());
            assert!(is_distribution(&r.alphas, 1e-6));
            assert_eq!(tokenize(&r.tokens.join(" ")), r.tokens);
            assert_eq!(&r.tokens, toks);
        }
    }
}

#[test]
fn attention_single_token() {
    let (ds, table) = data(14);
    let m = model(ModelKind::Scarn, &ds, table, 4);
    let mut ids = vec![0; ds.max_len];
    ids[0] = ds.vocab.id(&crate::synthetic::keyword(0));
    let ex = Example::new(0, ids).unwrap();
    let recs = export_attention_weights(&m, &[ex], &ds.vocab).unwrap();
    assert_eq!(recs[0].alphas, vec![1.0]);
}

#[test]
fn attention_export_needs_attention() {
    let (ds, table) = data(15);
    let m = model(ModelKind::Bilstm, &ds, table, 1);
    assert!(matches!(export_attention_weights(&m, &ds.test.examples, &ds.vocab), Err(Error::Capability(_))));
}

#[test]
fn jsonl_one_record_per_line() {
    let (ds, table) = data(16);
    let m = model(ModelKind::Scarn, &ds, table, 1);
    let recs = export_attention_weights(&m, &ds.test.examples, &ds.vocab).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("att.jsonl");
    write_jsonl(&recs, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let back: Vec<AttentionRecord> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(back, recs);
}

#[test]
fn concat_stats_shape_and_constant_feature() {
    let (ds, table) = data(17);
    let mut m = table.matrix().clone();
    // pad stays zero; real tokens share feature 0
    for r in 1..m.rows() {
        m.row_mut(r)[0] = 0.25;
    }
    let table = Arc::new(EmbeddingTable::new(m).unwrap());
    let model = model(ModelKind::ConcatScarn, &ds, table, 5);
    let stats = concat_layer_stats(&model, &ds.train.examples).unwrap();
    assert_eq!(stats.mean.len(), DIM + 4);
    assert_eq!(stats.std.len(), DIM + 4);
    assert_eq!(stats.embedding_std().len(), DIM);
    assert_eq!(stats.conv_std().len(), 4);
    assert!(stats.std[0].abs() < 1e-12);
    assert!((stats.mean[0] - 0.25).abs() < 1e-12);
    assert!(stats.median_std_ratio() >= 1.0);
}

#[test]
fn concat_stats_match_direct_moments() {
    let (ds, table) = data(18);
    let model = model(ModelKind::ConcatScarn, &ds, table, 6);
    let stats = concat_layer_stats(&model, &ds.dev.examples).unwrap();
    let mut column = Vec::new();
    for ex in &ds.dev.examples {
        let z = model.concat_features(ex).unwrap();
        for r in 0..z.rows() {
            column.push(z.row(r)[DIM + 1]);
        }
    }
    let (mean, std) = mean_std(column.into_iter());
    assert!((stats.mean[DIM + 1] - mean).abs() < 1e-12);
    assert!((stats.std[DIM + 1] - std).abs() < 1e-9);
}

#[test]
fn concat_stats_need_concat_model() {
    let (ds, table) = data(19);
    let m = model(ModelKind::Scarn, &ds, table, 1);
    assert!(matches!(concat_layer_stats(&m, &ds.dev.examples), Err(Error::Capability(_))));
}

#[test]
fn median_even_and_odd() {
    assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
    assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    assert!(median(&[]).is_nan());
}

#[test]
fn conv_embeddings_skip_pad_and_oov() {
    let (ds, table) = data(20);
    let m = model(ModelKind::Scarn, &ds, table.clone(), 2);
    let k0 = crate::synthetic::keyword(0);
    let k1 = crate::synthetic::keyword(1);
    let words = [k0.as_str(), PAD_TOKEN, "zzz-not-a-word", k1.as_str()];
    let out = export_conv_embeddings(&m, &words, &ds.vocab).unwrap();
    assert_eq!(out.records.len(), 2);
    assert_eq!(out.skipped, vec![PAD_TOKEN.to_string(), "zzz-not-a-word".to_string()]);
    // single-word oracle: relu(W e + b)
    let w = m.params().by_name("conv.weight").unwrap();
    let b = m.params().by_name("conv.bias").unwrap();
    for rec in &out.records {
        let e = table.row(ds.vocab.id(&rec.word)).unwrap();
        assert_eq!(rec.original, e.to_vec());
        for k in 0..4 {
            let z: f64 = w.row(k).iter().zip(e).map(|(a, b)| a * b).sum::<f64>() + b.data()[k];
            assert!((rec.convolved[k] - z.max(0.0)).abs() < 1e-12);
        }
    }
}

#[test]
fn conv_embeddings_need_word_conv() {
    let (ds, table) = data(21);
    let m = model(ModelKind::Lstm, &ds, table, 1);
    let k0 = crate::synthetic::keyword(0);
    assert!(matches!(export_conv_embeddings(&m, &[k0], &ds.vocab), Err(Error::Capability(_))));
}
