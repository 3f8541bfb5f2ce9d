use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::result::{config_hash, AxisValue, ExperimentResult, BASELINE, NTH_MAXPOOL, WINDOW_ORDERING};
use crate::error::{Error, Result};
use crate::models::{build_model, fit_linear_baseline, LinearConfig, LinearModel, Model, ModelKind, ModelSpec};
use crate::numerics::{Rng, Scalar};
use crate::textpipe::{bow_matrix, Dataset, EmbeddingTable, FeatureMatrix, Ordering, Tfidf};
use crate::training::{evaluate, streams, train_with_progress, EpochRecord, History, Metrics, TrainConfig};

/// Shared settings of a seed-swept experiment grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Model template; the runner overrides the axis it sweeps.
    pub spec: ModelSpec,
    pub train: TrainConfig,
    pub seeds: Vec<u64>,
    /// Worker threads for independent cells; 0 means all cores.
    #[serde(default)]
    pub threads: usize,
}

impl GridConfig {
    /// kim_cnn with 50 filters and max pooling, trained with the default schedule.
    pub fn kim_cnn(embed_dim: usize, max_len: usize, num_classes: usize) -> Self {
        let mut spec = ModelSpec::small(ModelKind::KimCnn, embed_dim, max_len, num_classes);
        spec.filters = 50;
        spec.pool_n = 1;
        GridConfig { spec, train: TrainConfig::small(), seeds: vec![1, 2, 3], threads: 0 }
    }

    /// Copy with the thread count cleared: it never changes results, so it is
    /// left out of configuration hashes.
    pub fn without_threads(&self) -> GridConfig {
        GridConfig { threads: 0, ..self.clone() }
    }
}

/// Outcome of one seeded training run.
#[derive(Debug, Clone)]
pub struct RunOutcome<T> {
    pub model: Model<T>,
    pub history: History,
    pub test: Metrics,
    pub dev_accuracy: f64,
}

/// Builds from `spec` with the seed's init stream, trains with the seed, and
/// scores the selected epoch on test. Every runner and the CLI go through
/// here so equal seeds give equal numbers.
pub fn train_seeded<T: Scalar>(
    spec: &ModelSpec,
    dataset: &Dataset,
    table: Arc<EmbeddingTable<T>>,
    config: &TrainConfig,
    seed: u64,
) -> Result<RunOutcome<T>> {
    train_seeded_with_progress(spec, dataset, table, config, seed, |_| {})
}

/// [`train_seeded`] reporting each finished epoch.
pub fn train_seeded_with_progress<T: Scalar>(
    spec: &ModelSpec,
    dataset: &Dataset,
    table: Arc<EmbeddingTable<T>>,
    config: &TrainConfig,
    seed: u64,
    on_epoch: impl FnMut(&EpochRecord),
) -> Result<RunOutcome<T>> {
    let mut model = build_model(spec.clone(), table, &mut Rng::with_stream(seed, streams::INIT))?;
    let cfg = TrainConfig { seed, ..config.clone() };
    let history = train_with_progress(&mut model, dataset, &cfg, on_epoch)?;
    let test = evaluate(&model, &dataset.test.examples)?;
    let dev_accuracy = if dataset.dev.is_empty() {
        f64::NAN
    } else {
        evaluate(&model, &dataset.dev.examples)?.accuracy
    };
    Ok(RunOutcome { model, history, test, dev_accuracy })
}

fn thread_count(requested: usize, cells: usize) -> usize {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let n = if requested == 0 { cores } else { requested };
    n.clamp(1, cells.max(1))
}

/// Runs `work` over every cell on a pool of threads. Results come back in
/// cell order whatever the scheduling; the first error by cell order wins.
fn par_cells<C: Sync, R: Send>(cells: &[C], threads: usize, work: impl Fn(&C) -> Result<R> + Sync) -> Result<Vec<R>> {
    let slots: Vec<Mutex<Option<Result<R>>>> = cells.iter().map(|_| Mutex::new(None)).collect();
    let next = Mutex::new(0usize);
    std::thread::scope(|s| {
        for _ in 0..thread_count(threads, cells.len()) {
            s.spawn(|| loop {
                let i = {
                    let mut n = next.lock().unwrap();
                    let i = *n;
                    *n += 1;
                    i
                };
                if i >= cells.len() {
                    break;
                }
                let r = work(&cells[i]);
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().unwrap().expect("every cell ran")).collect()
}

fn check_seeds(seeds: &[u64]) -> Result<()> {
    if seeds.is_empty() {
        return Err(Error::Config(vec!["seeds must not be empty".into()]));
    }
    Ok(())
}

/// Trains a single-window kim_cnn for every (ordering, window, seed) and
/// records test accuracy. Orderings are applied once to all splits, with the
/// shuffles seeded per run.
pub fn run_window_ordering_experiment<T: Scalar>(
    dataset: &Dataset,
    table: Arc<EmbeddingTable<T>>,
    windows: &[usize],
    orderings: &[Ordering],
    grid: &GridConfig,
) -> Result<ExperimentResult> {
    check_seeds(&grid.seeds)?;
    let bad: Vec<String> = windows
        .iter()
        .filter(|&&w| w == 0 || w > dataset.max_len)
        .map(|w| format!("window {w} outside [1, N = {}]", dataset.max_len))
        .collect();
    if !bad.is_empty() || windows.is_empty() || orderings.is_empty() {
        let mut msgs = bad;
        if windows.is_empty() {
            msgs.push("windows must not be empty".into());
        }
        if orderings.is_empty() {
            msgs.push("orderings must not be empty".into());
        }
        return Err(Error::Config(msgs));
    }
    let mut cells = Vec::new();
    for &o in orderings {
        for &w in windows {
            for &s in &grid.seeds {
                cells.push((o, w, s));
            }
        }
    }
    let hash = config_hash(&(grid.without_threads(), windows, orderings, &dataset.name));
    let outcomes = par_cells(&cells, grid.threads, |&(ordering, window, seed)| {
        let data = dataset.with_ordering(ordering, seed);
        let mut spec = grid.spec.clone();
        spec.kind = ModelKind::KimCnn;
        spec.windows = vec![window];
        spec.ordering = ordering;
        spec.pool_n = spec.pool_n.min(dataset.max_len - window + 1);
        let run = train_seeded(&spec, &data, table.clone(), &grid.train, seed)?;
        Ok((run.test.accuracy, run.dev_accuracy, run.history.best_epoch.unwrap_or(0)))
    })?;
    let mut result = ExperimentResult::new(WINDOW_ORDERING, hash, grid.seeds.clone());
    for ((o, w, s), (test, dev, best)) in cells.into_iter().zip(outcomes) {
        let axes: Vec<AxisValue> = vec![dataset.name.as_str().into(), o.name().into(), w.into(), s.into()];
        result.push(axes, vec![test, dev, best as f64])?;
    }
    Ok(result)
}

/// Trains kim_cnn variants pooling the n-th largest activation, one run per
/// (n, seed).
pub fn run_nth_maxpool_experiment<T: Scalar>(
    dataset: &Dataset,
    table: Arc<EmbeddingTable<T>>,
    ns: &[usize],
    grid: &GridConfig,
) -> Result<ExperimentResult> {
    check_seeds(&grid.seeds)?;
    let widest = grid.spec.windows.iter().copied().max().unwrap_or(1);
    let limit = (dataset.max_len + 1).saturating_sub(widest).max(1);
    let bad: Vec<String> = ns
        .iter()
        .filter(|&&n| n == 0 || n > limit)
        .map(|n| format!("n = {n} outside [1, {limit}]"))
        .collect();
    if !bad.is_empty() || ns.is_empty() {
        let mut msgs = bad;
        if ns.is_empty() {
            msgs.push("n values must not be empty".into());
        }
        return Err(Error::Config(msgs));
    }
    let cells: Vec<(usize, u64)> = ns.iter().flat_map(|&n| grid.seeds.iter().map(move |&s| (n, s))).collect();
    let hash = config_hash(&(grid.without_threads(), ns, &dataset.name));
    let outcomes = par_cells(&cells, grid.threads, |&(n, seed)| {
        let mut spec = grid.spec.clone();
        spec.kind = ModelKind::KimCnn;
        spec.pool_n = n;
        let run = train_seeded(&spec, dataset, table.clone(), &grid.train, seed)?;
        Ok((run.test.accuracy, run.dev_accuracy, run.history.best_epoch.unwrap_or(0)))
    })?;
    let mut result = ExperimentResult::new(NTH_MAXPOOL, hash, grid.seeds.clone());
    for ((n, s), (test, dev, best)) in cells.into_iter().zip(outcomes) {
        result.push(vec![dataset.name.as_str().into(), n.into(), s.into()], vec![test, dev, best as f64])?;
    }
    Ok(result)
}

/// Fitted linear baseline and its scores.
#[derive(Debug, Clone)]
pub struct BaselineOutcome<T> {
    pub model: LinearModel<T>,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

fn features<T: Scalar>(kind: ModelKind, dataset: &Dataset) -> Result<[FeatureMatrix<T>; 2]> {
    let (train, test) = (&dataset.train.tokens, &dataset.test.tokens);
    match kind {
        ModelKind::LogregBow => Ok([bow_matrix(train, &dataset.vocab), bow_matrix(test, &dataset.vocab)]),
        ModelKind::LogregTfidf => {
            let tfidf = Tfidf::fit(train, &dataset.vocab);
            Ok([tfidf.transform_all(train, &dataset.vocab), tfidf.transform_all(test, &dataset.vocab)])
        }
        other => Err(Error::Config(vec![format!("{} is not a linear baseline", other.name())])),
    }
}

/// Fits BoW or TF-IDF logistic regression on the training split (full token
/// lists, vocabulary of the dataset) and scores it on train and test.
pub fn run_linear_baseline<T: Scalar>(
    dataset: &Dataset,
    kind: ModelKind,
    config: &LinearConfig,
) -> Result<BaselineOutcome<T>> {
    let [train_x, test_x] = features::<T>(kind, dataset)?;
    let train_y = dataset.train.labels();
    let model = fit_linear_baseline(&train_x, &train_y, dataset.num_classes, config)?;
    let train_accuracy = model.accuracy(&train_x, &train_y)?;
    let test_accuracy = model.accuracy(&test_x, &dataset.test.labels())?;
    Ok(BaselineOutcome { model, train_accuracy, test_accuracy })
}

/// Baseline outcome as a one-row result table.
pub fn baseline_result<T: Scalar>(dataset: &Dataset, kind: ModelKind, config: &LinearConfig, out: &BaselineOutcome<T>) -> Result<ExperimentResult> {
    let mut r = ExperimentResult::new(BASELINE, config_hash(&(config, kind, &dataset.name)), Vec::new());
    r.push(
        vec![dataset.name.as_str().into(), kind.name().into()],
        vec![out.test_accuracy, out.train_accuracy, out.model.iterations as f64],
    )?;
    Ok(r)
}
