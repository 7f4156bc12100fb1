//! The `blmlab` command line: dataset generation, synthetic embeddings,
//! probe training, experiment matrices, reports and diagnostics.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use blmlab_core::embedding::{
    embed_all, read_table_with_dim, write_sidecar, write_table, SubspaceMode, EMBEDDING_DIM,
};
use blmlab_core::experiments::{
    export_latents, export_report, load_all_results, load_blm_splits, load_sentence_splits,
    run_experiments, ConfigFile, DataRef, ExperimentConfig, Task, EMBEDDINGS_FILE,
};
use blmlab_core::fsutil::write_atomic;
use blmlab_core::generator::io::{
    read_dataset_sentences, write_blm_dataset, write_sentence_dataset,
};
use blmlab_core::generator::{generate_blm_dataset, generate_sentence_dataset, BlmOptions};
use blmlab_core::nn::gradcheck::DEFAULT_TOLERANCE;
use blmlab_core::probe::{
    evaluate_blm, evaluate_sentences, gradient_suite, prediction_f1, train_sentence_vae,
    train_two_level, Prediction, SuiteOptions, TrainConfig, TrainedModel,
};
use blmlab_core::seeds::{parse_seed_file, SeedFile};
use blmlab_core::{Error, Language, LexicalType, Result};

/// Instances generated for lexical types II and III unless `--count` says
/// otherwise: enough for a 2000-instance training sample after the 90:10 split.
pub const DEFAULT_BLM_COUNT: usize = 2230;

#[derive(Debug, Parser)]
#[command(
    name = "blmlab",
    version,
    about = "Agreement BLM datasets and VAE probes over sentence embeddings"
)]
pub struct Cli {
    /// Root seed for generation, embedding and training [default: 0]
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// JSON file: training hyperparameters for train-*, experiments for eval
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Root directory of generated datasets
    #[arg(
        long,
        global = true,
        env = "BLMLAB_DATA_DIR",
        default_value = "data",
        value_name = "DIR"
    )]
    pub data_dir: PathBuf,

    /// Worker threads for experiment runs
    #[arg(long, global = true, default_value_t = 1, value_name = "N")]
    pub jobs: usize,

    /// Log progress to stderr (-vv for more)
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a seed file and report its records
    ValidateSeeds(SeedArgs),
    /// Generate the sentence-triple dataset of one language
    GenSentences(GenSentencesArgs),
    /// Generate BLM agreement instances of one language and lexical type
    GenBlm(GenBlmArgs),
    /// Write synthetic embeddings for generated datasets
    EmbedSynthetic(EmbedArgs),
    /// Train the sentence-level VAE on one dataset
    TrainSentence(TrainArgs),
    /// Train the two-level VAE on one BLM dataset
    TrainBlm(TrainArgs),
    /// Run experiments from --config, or score one checkpoint on a test split
    Eval(EvalArgs),
    /// Rebuild the F1 tables from stored run predictions
    Report(ReportArgs),
    /// Dump sentence latents with a 2-D PCA projection
    ExportLatents(LatentArgs),
    /// Check analytic gradients against central finite differences
    GradCheck(GradCheckArgs),
}

#[derive(Debug, Args)]
pub struct SeedArgs {
    /// Seed TSV file
    #[arg(long, value_name = "PATH")]
    pub seeds: PathBuf,

    /// Language code (en, fr, it, ro); defaults to the file name stem
    #[arg(long)]
    pub language: Option<Language>,
}

#[derive(Debug, Args)]
pub struct GenSentencesArgs {
    #[command(flatten)]
    pub seed_file: SeedArgs,

    /// Approximate number of triples, spread evenly over the 14 patterns
    #[arg(long, default_value_t = 4000)]
    pub target: usize,

    /// Output directory [default: <data-dir>/sentences/<language>]
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenBlmArgs {
    #[command(flatten)]
    pub seed_file: SeedArgs,

    /// Lexical type: I, II or III
    #[arg(long = "type", value_name = "TYPE")]
    pub lexical_type: LexicalType,

    /// Instances to generate [default: every record for I, 2230 for II and III]
    #[arg(long)]
    pub count: Option<usize>,

    /// Add a ninth candidate with an extra prepositional phrase
    #[arg(long)]
    pub extended: bool,

    /// Output directory [default: <data-dir>/blm/<language>-<type>]
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    /// Each language gets its own block of coordinates
    Disjoint,
    /// All languages share one block
    Shared,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    /// Dataset directories; each receives an embeddings.blme
    #[arg(long, value_name = "DIR", required = true, num_args = 1..)]
    pub data: Vec<PathBuf>,

    /// Standard deviation of the Gaussian noise on every coordinate
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,

    /// Placement of the per-language pattern coordinates
    #[arg(long, value_enum, default_value_t = ModeArg::Disjoint)]
    pub mode: ModeArg,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset directory holding an embeddings.blme
    #[arg(long, value_name = "DIR")]
    pub data: PathBuf,

    /// Output directory for model.blmc, history.csv and predictions.jsonl
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,

    #[command(flatten)]
    pub hp: HyperArgs,
}

/// Overrides for values from --config or the defaults.
#[derive(Debug, Args, Default)]
pub struct HyperArgs {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub margin: Option<f64>,
    #[arg(long)]
    pub kl_weight: Option<f64>,
    /// Conv channels
    #[arg(long)]
    pub channels: Option<usize>,
    /// Stop after this many epochs without a dev improvement
    #[arg(long)]
    pub patience: Option<usize>,
    /// Other context sentences used as negatives (two-level only)
    #[arg(long)]
    pub negatives: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Results root for experiments run from --config
    #[arg(long, value_name = "DIR", default_value = "results")]
    pub results: PathBuf,

    /// Checkpoint to score instead of running experiments
    #[arg(long, value_name = "PATH", requires = "data")]
    pub checkpoint: Option<PathBuf>,

    /// Dataset whose test split the checkpoint is scored on
    #[arg(long, value_name = "DIR", requires = "checkpoint")]
    pub data: Option<PathBuf>,

    /// Where to write the checkpoint's predictions (JSONL)
    #[arg(long, value_name = "PATH", requires = "checkpoint")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Results root written by eval
    #[arg(long, value_name = "DIR", default_value = "results")]
    pub results: PathBuf,

    /// Directory for report.csv and report.txt [default: the results root]
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LatentArgs {
    /// Sentence-level or two-level checkpoint
    #[arg(long, value_name = "PATH")]
    pub checkpoint: PathBuf,

    /// Dataset directories whose sentences are encoded
    #[arg(long, value_name = "DIR", required = true, num_args = 1..)]
    pub data: Vec<PathBuf>,

    /// CSV output
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GradCheckArgs {
    /// Random inputs to check, seeded from --seed upwards
    #[arg(long, default_value_t = 20)]
    pub trials: u64,

    /// Conv channels of the probes under test
    #[arg(long, default_value_t = 2)]
    pub channels: usize,

    /// Entries checked per large tensor (0 checks all)
    #[arg(long, default_value_t = 20)]
    pub entries: usize,
}

/// Exit status for a failed command: 1 for bad usage or configuration,
/// 3 for numeric failures, 2 for everything wrong with the data.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 1,
        Error::Numeric(_) => 3,
        _ => 2,
    }
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .try_init();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn read_seed_file(args: &SeedArgs) -> Result<SeedFile> {
    let language = match args.language {
        Some(l) => l,
        None => args
            .seeds
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| usage("cannot infer the language; pass --language"))?
            .parse()?,
    };
    let content = std::fs::read_to_string(&args.seeds)?;
    let file = parse_seed_file(&content, language)?;
    for (line, earlier) in &file.duplicates {
        log::warn!(
            "{}: line {line} repeats line {earlier}",
            args.seeds.display()
        );
    }
    Ok(file)
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = std::fs::read(path)?;
    serde_json::from_slice(&bytes).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn train_config(cli: &Cli, hp: &HyperArgs) -> Result<TrainConfig> {
    let mut cfg: TrainConfig = match &cli.config {
        Some(path) => load_json(path)?,
        None => TrainConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    macro_rules! set {
        ($($field:ident),*) => { $(if let Some(v) = hp.$field { cfg.$field = v; })* };
    }
    set!(
        epochs,
        batch_size,
        learning_rate,
        margin,
        kl_weight,
        channels,
        negatives
    );
    if hp.patience.is_some() {
        cfg.patience = hp.patience;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn predictions_jsonl(preds: &[Prediction]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for p in preds {
        serde_json::to_writer(&mut out, p)?;
        out.push(b'\n');
    }
    Ok(out)
}

fn dispatch(cli: &Cli) -> Result<i32> {
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::ValidateSeeds(args) => {
            let file = read_seed_file(args)?;
            println!(
                "{}: {} records ({}), {} duplicate(s)",
                args.seeds.display(),
                file.records.len(),
                file.language,
                file.duplicates.len()
            );
        }
        Command::GenSentences(args) => {
            let file = read_seed_file(&args.seed_file)?;
            let config = blmlab_core::LanguageConfig::for_language(file.language);
            let (triples, split) =
                generate_sentence_dataset(&file.records, &config, args.target, seed)?;
            let out = args.out.clone().unwrap_or_else(|| {
                DataRef::sentences(file.language).dir(&cli.data_dir, Task::Sentences)
            });
            write_sentence_dataset(&out, &triples, &split)?;
            let (tr, dv, te) = split.sizes();
            println!(
                "{} triples (train {tr}, dev {dv}, test {te}) in {}",
                triples.len(),
                out.display()
            );
        }
        Command::GenBlm(args) => {
            let file = read_seed_file(&args.seed_file)?;
            let count = args.count.unwrap_or(match args.lexical_type {
                LexicalType::I => usize::MAX,
                _ => DEFAULT_BLM_COUNT,
            });
            let options = BlmOptions {
                extended_candidate: args.extended,
            };
            let (instances, split) =
                generate_blm_dataset(&file.records, args.lexical_type, count, &options, seed)?;
            let out = args.out.clone().unwrap_or_else(|| {
                DataRef::blm(file.language, args.lexical_type).dir(&cli.data_dir, Task::Blm)
            });
            write_blm_dataset(&out, &instances, &split)?;
            let (tr, dv, te) = split.sizes();
            println!(
                "{} instances (train {tr}, dev {dv}, test {te}) in {}",
                instances.len(),
                out.display()
            );
        }
        Command::EmbedSynthetic(args) => {
            let mode = match args.mode {
                ModeArg::Disjoint => SubspaceMode::Disjoint,
                ModeArg::Shared => SubspaceMode::Shared,
            };
            let cfg = blmlab_core::embedding::SyntheticEmbedderConfig::new(mode, args.sigma, seed);
            cfg.validate().map_err(|e| usage(e.to_string()))?;
            for dir in &args.data {
                let sentences = read_dataset_sentences(dir)?;
                let table = embed_all(&sentences, &cfg)?;
                write_table(&table, &dir.join(EMBEDDINGS_FILE))?;
                write_sidecar(
                    &dir.join("embeddings.tsv"),
                    sentences.iter().map(|s| (s.id, s.text.as_str())),
                )?;
                println!(
                    "{} embeddings in {}",
                    table.len(),
                    dir.join(EMBEDDINGS_FILE).display()
                );
            }
        }
        Command::TrainSentence(args) => {
            let cfg = train_config(cli, &args.hp)?;
            let splits = load_sentence_splits(&args.data)?;
            let (model, history) = train_sentence_vae(&splits.train, &splits.dev, &cfg)?;
            let preds = evaluate_sentences(&model, &splits.test)?;
            finish_training(
                &args.out,
                &TrainedModel::Sentence(model),
                &history.to_csv(),
                &preds,
            )?;
        }
        Command::TrainBlm(args) => {
            let cfg = train_config(cli, &args.hp)?;
            let splits = load_blm_splits(&args.data)?;
            let (model, history) = train_two_level(&splits.train, &splits.dev, &cfg)?;
            let preds = evaluate_blm(&model, &splits.test)?;
            finish_training(
                &args.out,
                &TrainedModel::TwoLevel(model),
                &history.to_csv(),
                &preds,
            )?;
        }
        Command::Eval(args) => return eval(cli, args),
        Command::Report(args) => {
            let results = load_all_results(&args.results)?;
            if results.is_empty() {
                return Err(usage(format!(
                    "no experiment results under {}",
                    args.results.display()
                )));
            }
            let out = args.out.clone().unwrap_or_else(|| args.results.clone());
            export_report(&results, &out)?;
            println!(
                "{} experiment(s) reported in {}",
                results.len(),
                out.display()
            );
        }
        Command::ExportLatents(args) => {
            let model = TrainedModel::load(&args.checkpoint)?;
            let mut sentences = Vec::new();
            let mut table = blmlab_core::embedding::EmbeddingTable::new(EMBEDDING_DIM)?;
            for dir in &args.data {
                sentences.extend(read_dataset_sentences(dir)?);
                table.merge(&read_table_with_dim(
                    &dir.join(EMBEDDINGS_FILE),
                    EMBEDDING_DIM,
                )?)?;
            }
            let dump = export_latents(model.sentence_vae(), &sentences, &table)?;
            write_atomic(&args.out, dump.to_csv().as_bytes())?;
            println!(
                "{} sentences, explained variance {:.4}, in {}",
                dump.points.len(),
                dump.explained_variance,
                args.out.display()
            );
            if let Some(sep) = dump.separation() {
                println!(
                    "min inter-language centroid distance {:.6}, max cluster radius {:.6}",
                    sep.min_inter_language_distance, sep.max_intra_radius
                );
            }
        }
        Command::GradCheck(args) => return grad_check(seed, args),
    }
    Ok(0)
}

fn finish_training(
    out: &Path,
    model: &TrainedModel,
    history_csv: &str,
    preds: &[Prediction],
) -> Result<()> {
    model.save(&out.join("model.blmc"))?;
    write_atomic(&out.join("history.csv"), history_csv.as_bytes())?;
    write_atomic(&out.join("predictions.jsonl"), &predictions_jsonl(preds)?)?;
    println!(
        "test F1 {:.4} over {} items; model in {}",
        prediction_f1(preds),
        preds.len(),
        out.display()
    );
    Ok(())
}

fn eval(cli: &Cli, args: &EvalArgs) -> Result<i32> {
    match (&cli.config, &args.checkpoint) {
        (Some(_), Some(_)) => Err(usage("--config and --checkpoint cannot be combined")),
        (None, None) => Err(usage("eval needs --config or --checkpoint")),
        (Some(path), None) => {
            let mut configs: Vec<ExperimentConfig> = load_json::<ConfigFile>(path)?.into_vec();
            if let Some(seed) = cli.seed {
                configs.iter_mut().for_each(|c| c.seed = seed);
            }
            let results = run_experiments(&configs, &cli.data_dir, Some(&args.results), cli.jobs)?;
            for r in &results {
                for c in &r.cells {
                    println!(
                        "{} {} -> {}: F1 {:.4} ({:.4})",
                        r.task, r.train_spec, c.test, c.f1_mean, c.f1_sd
                    );
                }
            }
            Ok(0)
        }
        (None, Some(checkpoint)) => {
            let data = args
                .data
                .as_ref()
                .expect("clap requires --data with --checkpoint");
            let preds = match TrainedModel::load(checkpoint)? {
                TrainedModel::Sentence(m) => {
                    evaluate_sentences(&m, &load_sentence_splits(data)?.test)?
                }
                TrainedModel::TwoLevel(m) => evaluate_blm(&m, &load_blm_splits(data)?.test)?,
            };
            if let Some(out) = &args.out {
                write_atomic(out, &predictions_jsonl(&preds)?)?;
            }
            println!(
                "test F1 {:.4} over {} items",
                prediction_f1(&preds),
                preds.len()
            );
            Ok(0)
        }
    }
}

fn grad_check(seed: u64, args: &GradCheckArgs) -> Result<i32> {
    if args.trials == 0 || args.channels == 0 {
        return Err(usage("--trials and --channels must be positive"));
    }
    let opts = SuiteOptions {
        channels: args.channels,
        max_per_tensor: (args.entries > 0).then_some(args.entries),
        ..SuiteOptions::default()
    };
    let mut worst: Vec<(&'static str, f64)> = Vec::new();
    for k in 0..args.trials {
        for o in gradient_suite(seed.wrapping_add(k), opts)? {
            match worst.iter_mut().find(|(n, _)| *n == o.name) {
                Some(w) => w.1 = w.1.max(o.report.max_rel_error),
                None => worst.push((o.name, o.report.max_rel_error)),
            }
        }
    }
    for (name, err) in &worst {
        println!("{name:<18} {err:.3e}");
    }
    let max = worst.iter().map(|w| w.1).fold(0.0, f64::max);
    println!("max relative error {max:.3e} over {} trials", args.trials);
    Ok(if max < DEFAULT_TOLERANCE { 0 } else { 3 })
}
