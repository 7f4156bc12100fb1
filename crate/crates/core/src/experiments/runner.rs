use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::config::{DataRef, ExperimentConfig, Task, TrainSpec};
use super::metrics::{aggregate, compute_f1};
use crate::embedding::{read_table_with_dim, EMBEDDING_DIM};
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::generator::io::{
    read_blm_instances, read_manifest, read_split, read_triples, DatasetKind,
};
use crate::probe::{
    blm_items, evaluate_blm, evaluate_sentences, select_by_id, sentence_items, train_sentence_vae,
    train_two_level, BlmItem, History, Prediction, SentenceItem, TrainConfig, TrainedModel,
};

pub const EMBEDDINGS_FILE: &str = "embeddings.blme";
pub const SUMMARY_FILE: &str = "summary.json";
pub const RUN_FILE: &str = "run.json";
pub const MODEL_FILE: &str = "model.blmc";
pub const HISTORY_FILE: &str = "history.csv";
pub const PREDICTIONS_DIR: &str = "predictions";

#[derive(Debug, Clone, Default)]
pub struct Splits<T> {
    pub train: Vec<T>,
    pub dev: Vec<T>,
    pub test: Vec<T>,
}

fn check_dataset(dir: &Path, kind: DatasetKind) -> Result<()> {
    if !dir.is_dir() {
        return Err(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("dataset directory {} does not exist", dir.display()),
        )
        .into());
    }
    let manifest = read_manifest(dir)?;
    if manifest.kind != kind {
        return Err(Error::config(format!(
            "{} holds {:?} data, not {kind:?}",
            dir.display(),
            manifest.kind
        )));
    }
    Ok(())
}

fn split_items<T: Clone>(
    items: &[T],
    id_of: impl Fn(&T) -> &str + Copy,
    dir: &Path,
) -> Result<Splits<T>> {
    let split = read_split(dir)?;
    Ok(Splits {
        train: select_by_id(items, id_of, &split.train)?,
        dev: select_by_id(items, id_of, &split.dev)?,
        test: select_by_id(items, id_of, &split.test)?,
    })
}

/// Triples of a generated dataset joined with `embeddings.blme` from the
/// same directory.
pub fn load_sentence_splits(dir: &Path) -> Result<Splits<SentenceItem>> {
    check_dataset(dir, DatasetKind::Sentences)?;
    let table = read_table_with_dim(&dir.join(EMBEDDINGS_FILE), EMBEDDING_DIM)?;
    let items = sentence_items(&read_triples(dir)?, &table)?;
    split_items(&items, |i| &i.id, dir)
}

pub fn load_blm_splits(dir: &Path) -> Result<Splits<BlmItem>> {
    check_dataset(dir, DatasetKind::Blm)?;
    let table = read_table_with_dim(&dir.join(EMBEDDINGS_FILE), EMBEDDING_DIM)?;
    let items = blm_items(&read_blm_instances(dir)?, &table)?;
    split_items(&items, |i| &i.id, dir)
}

/// Training pool and test sets of one experiment.
struct Prepared<T> {
    train: Vec<T>,
    dev: Vec<T>,
    tests: Vec<Vec<T>>,
}

fn prepare<T: Clone>(
    cfg: &ExperimentConfig,
    root: &Path,
    load: fn(&Path) -> Result<Splits<T>>,
) -> Result<Prepared<T>> {
    let mut cache: BTreeMap<DataRef, Splits<T>> = BTreeMap::new();
    for d in cfg
        .train_spec
        .sources()
        .into_iter()
        .chain(cfg.test_specs.iter().copied())
    {
        if let std::collections::btree_map::Entry::Vacant(e) = cache.entry(d) {
            e.insert(load(&d.dir(root, cfg.task))?);
        }
    }
    let mut train = Vec::new();
    let mut dev = Vec::new();
    for d in cfg.train_spec.sources() {
        train.extend(cache[&d].train.iter().cloned());
        dev.extend(cache[&d].dev.iter().cloned());
    }
    let tests = cfg
        .test_specs
        .iter()
        .map(|d| cache[d].test.clone())
        .collect();
    Ok(Prepared { train, dev, tests })
}

enum Data {
    Sentences(Prepared<SentenceItem>),
    Blm(Prepared<BlmItem>),
}

impl Data {
    fn load(cfg: &ExperimentConfig, root: &Path) -> Result<Self> {
        Ok(match cfg.task {
            Task::Sentences => Data::Sentences(prepare(cfg, root, load_sentence_splits)?),
            Task::Blm => Data::Blm(prepare(cfg, root, load_blm_splits)?),
        })
    }

    fn train_and_test(
        &self,
        hp: &TrainConfig,
    ) -> Result<(TrainedModel, History, Vec<Vec<Prediction>>)> {
        match self {
            Data::Sentences(p) => {
                let (model, history) = train_sentence_vae(&p.train, &p.dev, hp)?;
                let preds = p
                    .tests
                    .iter()
                    .map(|t| evaluate_sentences(&model, t))
                    .collect::<Result<_>>()?;
                Ok((TrainedModel::Sentence(model), history, preds))
            }
            Data::Blm(p) => {
                let (model, history) = train_two_level(&p.train, &p.dev, hp)?;
                let preds = p
                    .tests
                    .iter()
                    .map(|t| evaluate_blm(&model, t))
                    .collect::<Result<_>>()?;
                Ok((TrainedModel::TwoLevel(model), history, preds))
            }
        }
    }
}

/// What `run.json` records about one seeded run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub task: Task,
    pub train_spec: TrainSpec,
    pub run: usize,
    pub seed: u64,
    pub best_epoch: usize,
    pub test_specs: Vec<DataRef>,
}

/// Scores of one test set over all runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub test: DataRef,
    pub f1_runs: Vec<f64>,
    pub f1_mean: f64,
    pub f1_sd: f64,
    /// Per run: how often each candidate label was chosen.
    pub chosen_labels: Vec<BTreeMap<String, usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub task: Task,
    pub train_spec: TrainSpec,
    pub seeds: Vec<u64>,
    pub cells: Vec<CellResult>,
}

impl RunResult {
    pub fn cell(&self, test: &DataRef) -> Option<&CellResult> {
        self.cells.iter().find(|c| &c.test == test)
    }

    /// Rebuilds the summary from per-run predictions, each indexed like
    /// `test_specs`.
    pub fn from_predictions(
        task: Task,
        train_spec: TrainSpec,
        test_specs: &[DataRef],
        runs: &[(u64, Vec<Vec<Prediction>>)],
    ) -> Result<Self> {
        let cells = test_specs
            .iter()
            .enumerate()
            .map(|(k, &test)| {
                let mut f1_runs = Vec::new();
                let mut chosen_labels = Vec::new();
                for (_, preds) in runs {
                    let p = &preds[k];
                    let pairs: Vec<(usize, usize)> =
                        p.iter().map(|p| (p.chosen, p.correct)).collect();
                    f1_runs.push(
                        compute_f1(&pairs)
                            .map_err(|_| Error::config(format!("test set {test} is empty")))?,
                    );
                    let mut hist = BTreeMap::new();
                    for x in p {
                        *hist.entry(x.chosen_label.clone()).or_insert(0) += 1;
                    }
                    chosen_labels.push(hist);
                }
                let (f1_mean, f1_sd) = aggregate(&f1_runs)?;
                Ok(CellResult {
                    test,
                    f1_runs,
                    f1_mean,
                    f1_sd,
                    chosen_labels,
                })
            })
            .collect::<Result<_>>()?;
        Ok(RunResult {
            task,
            train_spec,
            seeds: runs.iter().map(|(s, _)| *s).collect(),
            cells,
        })
    }
}

/// `<results>/<task>/<train_spec>`.
pub fn experiment_dir(results: &Path, task: Task, train_spec: TrainSpec) -> PathBuf {
    results.join(task.name()).join(train_spec.to_string())
}

fn run_dir(results: &Path, task: Task, train_spec: TrainSpec, run: usize) -> PathBuf {
    experiment_dir(results, task, train_spec).join(format!("run-{run}"))
}

fn predictions_jsonl(preds: &[Prediction]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for p in preds {
        serde_json::to_writer(&mut out, p)?;
        out.push(b'\n');
    }
    Ok(out)
}

fn to_json_pretty<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

struct RunOutput {
    seed: u64,
    predictions: Vec<Vec<Prediction>>,
}

fn write_run(
    dir: &Path,
    record: &RunRecord,
    model: &TrainedModel,
    history: &History,
    preds: &[Vec<Prediction>],
) -> Result<()> {
    model.save(&dir.join(MODEL_FILE))?;
    write_atomic(&dir.join(HISTORY_FILE), history.to_csv().as_bytes())?;
    for (test, p) in record.test_specs.iter().zip(preds) {
        write_atomic(
            &dir.join(PREDICTIONS_DIR).join(format!("{test}.jsonl")),
            &predictions_jsonl(p)?,
        )?;
    }
    write_atomic(&dir.join(RUN_FILE), &to_json_pretty(record)?)
}

/// Runs every experiment: `runs` seeded models each, on a queue of `jobs`
/// worker threads. With a results directory, every run writes its model,
/// history and predictions there and every experiment a `summary.json`.
pub fn run_experiments(
    configs: &[ExperimentConfig],
    data_root: &Path,
    results: Option<&Path>,
    jobs: usize,
) -> Result<Vec<RunResult>> {
    for cfg in configs {
        cfg.validate()?;
    }
    let data = configs
        .iter()
        .map(|c| Data::load(c, data_root))
        .collect::<Result<Vec<_>>>()?;
    let queue: Vec<(usize, usize)> = configs
        .iter()
        .enumerate()
        .flat_map(|(c, cfg)| (0..cfg.runs).map(move |r| (c, r)))
        .collect();
    let next = AtomicUsize::new(0);
    let failed = AtomicBool::new(false);
    let outputs: Mutex<HashMap<(usize, usize), Result<RunOutput>>> = Mutex::new(HashMap::new());

    let work = || {
        while !failed.load(Ordering::SeqCst) {
            let k = next.fetch_add(1, Ordering::SeqCst);
            let Some(&(c, r)) = queue.get(k) else { break };
            let cfg = &configs[c];
            let seed = cfg.run_seeds()[r];
            log::info!("{} {} run {r} (seed {seed})", cfg.task, cfg.train_spec);
            let out = (|| {
                let hp = TrainConfig {
                    seed,
                    ..cfg.hyperparameters
                };
                let (model, history, predictions) = data[c].train_and_test(&hp)?;
                if let Some(results) = results {
                    let record = RunRecord {
                        task: cfg.task,
                        train_spec: cfg.train_spec,
                        run: r,
                        seed,
                        best_epoch: history.best_epoch,
                        test_specs: cfg.test_specs.clone(),
                    };
                    write_run(
                        &run_dir(results, cfg.task, cfg.train_spec, r),
                        &record,
                        &model,
                        &history,
                        &predictions,
                    )?;
                }
                Ok(RunOutput { seed, predictions })
            })();
            if out.is_err() {
                failed.store(true, Ordering::SeqCst);
            }
            outputs
                .lock()
                .expect("no worker panicked")
                .insert((c, r), out);
        }
    };
    std::thread::scope(|s| {
        for _ in 0..jobs.max(1) {
            s.spawn(work);
        }
    });

    let mut outputs = outputs.into_inner().expect("no worker panicked");
    // Report the first failure in queue order.
    for key in &queue {
        if let Some(Err(_)) = outputs.get(key) {
            return Err(outputs.remove(key).unwrap().err().unwrap());
        }
    }
    configs
        .iter()
        .enumerate()
        .map(|(c, cfg)| {
            let runs: Vec<(u64, Vec<Vec<Prediction>>)> = (0..cfg.runs)
                .map(|r| {
                    let out = outputs
                        .remove(&(c, r))
                        .expect("every queued run finished")?;
                    Ok((out.seed, out.predictions))
                })
                .collect::<Result<_>>()?;
            let result =
                RunResult::from_predictions(cfg.task, cfg.train_spec, &cfg.test_specs, &runs)?;
            if let Some(results) = results {
                let dir = experiment_dir(results, cfg.task, cfg.train_spec);
                write_atomic(&dir.join(SUMMARY_FILE), &to_json_pretty(&result)?)?;
            }
            Ok(result)
        })
        .collect()
}

pub fn run_experiment(
    cfg: &ExperimentConfig,
    data_root: &Path,
    results: Option<&Path>,
    jobs: usize,
) -> Result<RunResult> {
    let mut all = run_experiments(std::slice::from_ref(cfg), data_root, results, jobs)?;
    Ok(all.remove(0))
}

fn read_predictions(path: &Path) -> Result<Vec<Prediction>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}

/// Recomputes an experiment's summary from the run directories under
/// `<results>/<task>/<train_spec>`.
pub fn load_run_result(dir: &Path) -> Result<RunResult> {
    let mut runs: Vec<(RunRecord, PathBuf)> = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.join(RUN_FILE).is_file() {
            let record: RunRecord = serde_json::from_slice(&std::fs::read(path.join(RUN_FILE))?)?;
            runs.push((record, path));
        }
    }
    runs.sort_by_key(|(r, _)| r.run);
    let Some((first, _)) = runs.first() else {
        return Err(Error::config(format!("no runs under {}", dir.display())));
    };
    let (task, train_spec, tests) = (first.task, first.train_spec, first.test_specs.clone());
    let mut loaded = Vec::new();
    for (record, path) in &runs {
        if record.task != task || record.train_spec != train_spec || record.test_specs != tests {
            return Err(Error::config(format!(
                "runs under {} disagree on their setup",
                dir.display()
            )));
        }
        let preds = tests
            .iter()
            .map(|t| read_predictions(&path.join(PREDICTIONS_DIR).join(format!("{t}.jsonl"))))
            .collect::<Result<Vec<_>>>()?;
        loaded.push((record.seed, preds));
    }
    RunResult::from_predictions(task, train_spec, &tests, &loaded)
}

/// Every experiment stored under a results root, in path order.
pub fn load_all_results(results: &Path) -> Result<Vec<RunResult>> {
    let mut dirs = Vec::new();
    for task in [Task::Sentences, Task::Blm] {
        let task_dir = results.join(task.name());
        if !task_dir.is_dir() {
            continue;
        }
        for entry in std::fs::read_dir(&task_dir)? {
            let path = entry?.path();
            if path.is_dir() {
                dirs.push(path);
            }
        }
    }
    dirs.sort();
    dirs.iter().map(|d| load_run_result(d)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds::Language;

    fn pred(id: &str, chosen: usize, correct: usize, label: &str) -> Prediction {
        Prediction {
            item_id: id.into(),
            chosen,
            correct,
            chosen_label: label.into(),
        }
    }

    #[test]
    fn summary_from_predictions() {
        let tests = [
            DataRef::sentences(Language::En),
            DataRef::sentences(Language::Fr),
        ];
        let run = |hit: bool| {
            vec![
                vec![
                    pred("a", 0, 0, "x"),
                    pred("b", 1, if hit { 1 } else { 2 }, "y"),
                ],
                vec![pred("c", 3, 4, "y")],
            ]
        };
        let r = RunResult::from_predictions(
            Task::Sentences,
            TrainSpec::One(tests[0]),
            &tests,
            &[(5, run(true)), (6, run(false))],
        )
        .unwrap();
        assert_eq!(r.seeds, vec![5, 6]);
        let en = r.cell(&tests[0]).unwrap();
        assert_eq!(en.f1_runs, vec![1.0, 0.5]);
        assert_eq!((en.f1_mean, en.f1_sd), (0.75, 0.25));
        assert_eq!(en.chosen_labels[0]["y"], 1);
        assert_eq!(r.cell(&tests[1]).unwrap().f1_mean, 0.0);
    }

    #[test]
    fn missing_dataset_is_an_io_error() {
        let tmp = tempfile::tempdir().unwrap();
        let err = load_sentence_splits(&tmp.path().join("nope")).unwrap_err();
        assert!(matches!(err, Error::Io(_)));
    }
}
