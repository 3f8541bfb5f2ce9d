use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use scarn_core::harness::{
    baseline_result, concat_layer_stats, config_hash, export_attention_weights, export_conv_embeddings,
    run_linear_baseline, run_maxpool_provenance, run_nth_maxpool_experiment, run_window_ordering_experiment,
    train_seeded_with_progress, write_jsonl, ExperimentResult, GridConfig, RunOutcome, TRAIN,
};
use scarn_core::models::{LinearConfig, ModelKind, ModelSpec};
use scarn_core::textpipe::{Dataset, EmbeddingTable, Ordering, SplitName};
use scarn_core::training::{evaluate as score, format_metric, load_checkpoint, save_checkpoint, Checkpoint, EpochRecord};
use scarn_core::Model64;

use crate::config::{default_max_len, read_json, BaselineConfig, DataConfig, ExperimentConfig, TrainRunConfig};
use crate::{CliError, RunDir};

fn split_name(s: SplitName) -> &'static str {
    match s {
        SplitName::Train => "train",
        SplitName::Dev => "dev",
        SplitName::Test => "test",
    }
}

/// Loads the data and widens the class count to the model's when the splits
/// happen not to contain the highest label.
fn load_for_model(data: &DataConfig, spec: &ModelSpec) -> Result<Dataset, CliError> {
    let mut ds = data.load(spec.max_len)?;
    if ds.num_classes > spec.num_classes {
        return Err(CliError::Config(vec![format!(
            "dataset {} has {} classes but the model head has {}",
            ds.name, ds.num_classes, spec.num_classes
        )]));
    }
    ds.num_classes = spec.num_classes;
    Ok(ds)
}

fn with_table(data: &DataConfig, ds: &Dataset, dim: usize, run: &mut RunDir) -> Result<Arc<EmbeddingTable<f64>>, CliError> {
    let mut msgs = Vec::new();
    let table = data.load_table(ds, dim, &mut |m| msgs.push(m))?;
    msgs.into_iter().for_each(|m| run.log(m));
    Ok(Arc::new(table))
}

fn log_dataset(run: &mut RunDir, ds: &Dataset) {
    let s = ds.summary();
    run.log(format!(
        "dataset {}: train {} dev {} test {}, vocabulary {}, {} classes, N = {}",
        s.name, s.train, s.dev, s.test, s.vocab, s.classes, s.max_len
    ));
}

pub fn train(config_path: &Path, run_dir: Option<PathBuf>, timings: bool) -> Result<(), CliError> {
    let mut cfg: TrainRunConfig = read_json(config_path)?;
    cfg.validate()?;
    cfg.data.resolve(cfg.model.embed_dim);
    let ds = load_for_model(&cfg.data, &cfg.model)?;
    let mut run = RunDir::create(run_dir, "train", &cfg)?;
    log_dataset(&mut run, &ds);
    let table = with_table(&cfg.data, &ds, cfg.model.embed_dim, &mut run)?;

    // seeds are independent; each gets its own ordering draw, model and RNG streams
    let shared = std::sync::Mutex::new(&mut run);
    let outcomes: Vec<Result<RunOutcome<f64>, CliError>> = std::thread::scope(|s| {
        let handles: Vec<_> = cfg
            .seeds
            .iter()
            .map(|&seed| {
                let (cfg, ds, table, shared) = (&cfg, &ds, table.clone(), &shared);
                s.spawn(move || {
                    let data = ds.with_ordering(cfg.model.ordering, seed);
                    let progress = |r: &EpochRecord| {
                        shared.lock().unwrap().log(format!(
                            "seed {seed} epoch {}: train loss {} dev accuracy {} ({:.1}s)",
                            r.epoch,
                            format_metric(r.train_loss),
                            r.dev_accuracy.map_or_else(|| "-".into(), format_metric),
                            r.seconds
                        ))
                    };
                    Ok(train_seeded_with_progress(&cfg.model, &data, table, &cfg.train, seed, progress)?)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("training thread panicked")).collect()
    });

    let hash = config_hash(&cfg);
    let mut results = ExperimentResult::new(TRAIN, hash.clone(), cfg.seeds.clone());
    let multi = cfg.seeds.len() > 1;
    for (i, (&seed, outcome)) in cfg.seeds.iter().zip(outcomes).enumerate() {
        let out = outcome?;
        let h = &out.history;
        if h.total_clipped() > 0 {
            run.log(format!("seed {seed}: gradient norm clipped in {} batches", h.total_clipped()));
        }
        let best = h.best_epoch.unwrap_or(h.epochs.len());
        let mut targets = Vec::new();
        if i == 0 {
            targets.push(String::new());
        }
        if multi {
            targets.push(format!("seed-{seed}/"));
        }
        for prefix in targets {
            let ck = run.file(&format!("{prefix}checkpoint.json"));
            run.write(&format!("{prefix}history.csv"), h.to_csv(timings))?;
            save_checkpoint(&out.model, &ck, seed, best)?;
        }
        run.log(format!(
            "seed {seed}: test accuracy {} (best epoch {best}, {} parameters)",
            format_metric(out.test.accuracy),
            out.model.param_count()
        ));
        results.push(
            vec![ds.name.as_str().into(), cfg.model.kind.name().into(), seed.into()],
            vec![
                out.test.accuracy,
                out.test.loss,
                out.dev_accuracy,
                best as f64,
                out.model.param_count() as f64,
            ],
        )?;
    }
    finish(&mut run, "train", &results)
}

fn finish(run: &mut RunDir, command: &str, results: &ExperimentResult) -> Result<(), CliError> {
    let p = run.write("results.csv", results.to_csv())?;
    run.write("results_summary.csv", results.summary_csv())?;
    run.write_meta(command, results.config_hash.clone(), &results.seeds)?;
    run.log(format!("wrote {}", p.display()));
    print!("{}", results.summary_csv());
    Ok(())
}

struct Trained {
    cfg: TrainRunConfig,
    ds: Dataset,
    model: Model64,
    checkpoint: Checkpoint,
}

fn load_trained(run: &mut RunDir, checkpoint: Option<PathBuf>) -> Result<Trained, CliError> {
    let cfg: TrainRunConfig = read_json(&run.file("config.json"))?;
    let ds = load_for_model(&cfg.data, &cfg.model)?;
    let table = with_table(&cfg.data, &ds, cfg.model.embed_dim, run)?;
    let path = checkpoint.unwrap_or_else(|| run.file("checkpoint.json"));
    let (model, checkpoint) = load_checkpoint(&path, table, Some(&cfg.model))?;
    // reproduce the ordering the model was trained under
    let ds = ds.with_ordering(cfg.model.ordering, checkpoint.rng_seed);
    Ok(Trained { cfg, ds, model, checkpoint })
}

#[derive(Serialize)]
struct EvalReport<'a> {
    split: &'a str,
    accuracy: f64,
    loss: f64,
    count: usize,
    correct: usize,
    precision: Vec<f64>,
    recall: Vec<f64>,
    checkpoint_epoch: usize,
    seed: u64,
}

pub fn evaluate(run_dir: PathBuf, split: SplitName, checkpoint: Option<PathBuf>) -> Result<(), CliError> {
    let mut run = RunDir::open(run_dir)?;
    let t = load_trained(&mut run, checkpoint)?;
    let m = score(&t.model, &t.ds.split(split).examples)?;
    let name = split_name(split);
    let report = EvalReport {
        split: name,
        accuracy: m.accuracy,
        loss: m.loss,
        count: m.count,
        correct: m.correct,
        precision: m.precision,
        recall: m.recall,
        checkpoint_epoch: t.checkpoint.epoch,
        seed: t.checkpoint.rng_seed,
    };
    run.write_json(&format!("eval_{name}.json"), &report)?;
    run.log(format!("{} {name} accuracy {}", t.cfg.model.kind.name(), format_metric(report.accuracy)));
    println!("{}", serde_json::to_string_pretty(&report).map_err(scarn_core::Error::from)?);
    Ok(())
}

/// Grid flags shared by the experiment commands.
pub struct GridFlags {
    pub config: Option<PathBuf>,
    pub dataset: Option<String>,
    pub seeds: Option<Vec<u64>>,
    pub max_len: Option<usize>,
    pub embed_dim: Option<usize>,
    pub filters: Option<usize>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
    pub threads: Option<usize>,
    pub run_dir: Option<PathBuf>,
}

const DEFAULT_EMBED_DIM: usize = 100;

/// Merges an optional config file with flags (flags win) and loads the data.
fn experiment_setup(flags: &GridFlags, default_dataset: &str) -> Result<(ExperimentConfig, Dataset), CliError> {
    let mut cfg = match &flags.config {
        Some(p) => read_json::<ExperimentConfig>(p)?,
        None => {
            let dataset = flags.dataset.clone().unwrap_or_else(|| default_dataset.to_string());
            let n = flags.max_len.unwrap_or_else(|| default_max_len(&dataset));
            ExperimentConfig {
                data: DataConfig::named(&dataset),
                grid: GridConfig::kim_cnn(DEFAULT_EMBED_DIM, n, 2),
                windows: Vec::new(),
                orderings: Vec::new(),
                n_values: Vec::new(),
            }
        }
    };
    if let Some(d) = &flags.dataset {
        cfg.data.dataset = d.clone();
    }
    let g = &mut cfg.grid;
    if let Some(v) = flags.max_len {
        g.spec.max_len = v;
    }
    if let Some(v) = flags.embed_dim {
        g.spec.embed_dim = v;
    }
    if let Some(v) = flags.filters {
        g.spec.filters = v;
    }
    if let Some(v) = &flags.seeds {
        g.seeds = v.clone();
    }
    if let Some(v) = flags.epochs {
        g.train.epochs = v;
    }
    if let Some(v) = flags.batch_size {
        g.train.batch_size = v;
    }
    if let Some(v) = flags.lr {
        g.train.lr = v;
    }
    if let Some(v) = flags.threads {
        g.threads = v;
    }
    if let Err(scarn_core::Error::Config(m)) = g.train.validate() {
        return Err(CliError::Config(m));
    }
    cfg.data.resolve(g.spec.embed_dim);
    let ds = cfg.data.load(g.spec.max_len)?;
    g.spec.num_classes = ds.num_classes.max(2);
    Ok((cfg, ds))
}

fn parse_windows(raw: Option<Vec<String>>, max_len: usize) -> Result<Vec<usize>, CliError> {
    let Some(raw) = raw else {
        return Ok(vec![1, 3, 5, 7, max_len]);
    };
    raw.iter()
        .map(|w| match w.trim() {
            "N" | "n" => Ok(max_len),
            s => s.parse().map_err(|_| CliError::Usage(format!("bad window size {s:?}"))),
        })
        .collect()
}

fn parse_orderings(raw: Option<Vec<String>>) -> Result<Vec<Ordering>, CliError> {
    let Some(raw) = raw else {
        return Ok(vec![Ordering::Correct, Ordering::Random, Ordering::Alternate]);
    };
    raw.iter()
        .map(|o| Ordering::parse(o.trim()).ok_or_else(|| CliError::Usage(format!("unknown ordering {o:?}"))))
        .collect()
}

pub fn window_ordering(flags: GridFlags, windows: Option<Vec<String>>, orderings: Option<Vec<String>>) -> Result<(), CliError> {
    let (mut cfg, ds) = experiment_setup(&flags, "rt")?;
    if windows.is_some() || cfg.windows.is_empty() {
        cfg.windows = parse_windows(windows, ds.max_len)?;
    }
    if orderings.is_some() || cfg.orderings.is_empty() {
        cfg.orderings = parse_orderings(orderings)?;
    }
    let mut run = RunDir::create(flags.run_dir, "window-ordering", &cfg)?;
    log_dataset(&mut run, &ds);
    let table = with_table(&cfg.data, &ds, cfg.grid.spec.embed_dim, &mut run)?;
    run.log(format!(
        "window-ordering: windows {:?}, orderings {:?}, seeds {:?}",
        cfg.windows, cfg.orderings, cfg.grid.seeds
    ));
    let result = run_window_ordering_experiment(&ds, table, &cfg.windows, &cfg.orderings, &cfg.grid)?;
    finish(&mut run, "window-ordering", &result)
}

pub fn nth_maxpool(flags: GridFlags, n_values: Option<Vec<usize>>) -> Result<(), CliError> {
    let (mut cfg, ds) = experiment_setup(&flags, "trec")?;
    if let Some(n) = n_values {
        cfg.n_values = n;
    } else if cfg.n_values.is_empty() {
        cfg.n_values = (1..=10).collect();
    }
    let mut run = RunDir::create(flags.run_dir, "nth-maxpool", &cfg)?;
    log_dataset(&mut run, &ds);
    let table = with_table(&cfg.data, &ds, cfg.grid.spec.embed_dim, &mut run)?;
    run.log(format!("nth-maxpool: n {:?}, seeds {:?}", cfg.n_values, cfg.grid.seeds));
    let result = run_nth_maxpool_experiment(&ds, table, &cfg.n_values, &cfg.grid)?;
    finish(&mut run, "nth-maxpool", &result)
}

#[derive(Debug, Clone, Copy)]
pub enum Export {
    Attention,
    Provenance,
    ConvEmbeddings,
    ConcatStats,
}

pub fn export(
    kind: Export,
    run_dir: PathBuf,
    split: SplitName,
    limit: Option<usize>,
    words: Option<Vec<String>>,
) -> Result<(), CliError> {
    let mut run = RunDir::open(run_dir)?;
    let t = load_trained(&mut run, None)?;
    let all = &t.ds.split(split).examples;
    let examples = &all[..limit.unwrap_or(all.len()).min(all.len())];
    let name = split_name(split);
    let path = match kind {
        Export::Attention => {
            let recs = export_attention_weights(&t.model, examples, &t.ds.vocab)?;
            let p = run.file(&format!("attention_{name}.jsonl"));
            write_jsonl(&recs, &p)?;
            p
        }
        Export::Provenance => {
            let recs = run_maxpool_provenance(&t.model, examples, &t.ds.vocab)?;
            let wrong = recs.iter().filter(|r| r.misclassified).count();
            run.log(format!("provenance: {} examples, {wrong} misclassified", recs.len()));
            let p = run.file(&format!("provenance_{name}.jsonl"));
            write_jsonl(&recs, &p)?;
            p
        }
        Export::ConvEmbeddings => {
            let words = words.unwrap_or_else(|| t.ds.vocab.words().to_vec());
            let out = export_conv_embeddings(&t.model, &words, &t.ds.vocab)?;
            run.log(format!("conv embeddings: {} exported, {} skipped", out.records.len(), out.skipped.len()));
            run.write_json("conv_embeddings.json", &out)?
        }
        Export::ConcatStats => {
            let stats = concat_layer_stats(&t.model, examples)?;
            run.write(&format!("concat_stats_{name}.csv"), stats.to_csv())?;
            run.log(format!("concat stats: median std ratio {}", format_metric(stats.median_std_ratio())));
            run.write_json(&format!("concat_stats_{name}.json"), &stats)?
        }
    };
    run.log(format!("wrote {}", path.display()));
    println!("{}", path.display());
    Ok(())
}

pub struct BaselineFlags {
    pub config: Option<PathBuf>,
    pub dataset: Option<String>,
    pub model: Option<String>,
    pub max_len: Option<usize>,
    pub l2: Option<f64>,
    pub run_dir: Option<PathBuf>,
}

pub fn baseline(flags: BaselineFlags) -> Result<(), CliError> {
    let mut cfg = match &flags.config {
        Some(p) => read_json::<BaselineConfig>(p)?,
        None => {
            let dataset = flags
                .dataset
                .clone()
                .ok_or_else(|| CliError::Usage("baseline needs --dataset or --config".into()))?;
            BaselineConfig {
                max_len: default_max_len(&dataset),
                data: DataConfig::named(&dataset),
                model: ModelKind::LogregBow,
                linear: LinearConfig::default(),
            }
        }
    };
    if let Some(d) = flags.dataset {
        cfg.data.dataset = d;
    }
    if let Some(m) = flags.model {
        cfg.model = ModelKind::parse(&m).ok_or_else(|| CliError::Usage(format!("unknown model {m:?}")))?;
    }
    if !cfg.model.is_linear() {
        return Err(CliError::Config(vec![format!("{} is not a linear baseline", cfg.model.name())]));
    }
    if let Some(n) = flags.max_len {
        cfg.max_len = n;
    }
    if let Some(l2) = flags.l2 {
        cfg.linear.l2 = l2;
    }
    let max_vocab = cfg.data.max_vocab();
    cfg.data.data_dir = Some(cfg.data.root());
    cfg.data.max_vocab = Some(max_vocab);
    let ds = cfg.data.load(cfg.max_len)?;
    let mut run = RunDir::create(flags.run_dir, "baseline", &cfg)?;
    log_dataset(&mut run, &ds);
    let out = run_linear_baseline::<f64>(&ds, cfg.model, &cfg.linear)?;
    run.log(format!(
        "{}: {} iterations (converged: {}), train accuracy {}, test accuracy {}",
        cfg.model.name(),
        out.model.iterations,
        out.model.converged,
        format_metric(out.train_accuracy),
        format_metric(out.test_accuracy)
    ));
    let result = baseline_result(&ds, cfg.model, &cfg.linear, &out)?;
    finish(&mut run, "baseline", &result)
}
