//! End-to-end acceptance checks, one PASS/FAIL line each.
//!
//! `cargo test -p blmlab-cli --test acceptance` runs all nine; append
//! criterion numbers (`-- 2 7`) to run a subset.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use blmlab_core::generator::blm::{generate_blm_dataset, BlmOptions};
use blmlab_core::generator::io::read_split;
use blmlab_core::generator::sentence::Clause;
use blmlab_core::probe::{gradient_suite, predict_blm, predict_sentence, SuiteOptions};
use blmlab_core::probe::{SentenceVae, SentenceVaeSpec, TwoLevelModel, TwoLevelSpec};
use blmlab_core::seeds::{parse_seed_file, ExtraColumn, SeedFile};
use blmlab_core::{
    enumerate_patterns, AnswerLabel, BlmInstance, ChunkPattern, ChunkSlot, GrammNumber, Language,
    LanguageConfig, LexicalType, SeedRecord, Sentence,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use GrammNumber::{Pl, Sg};

type Outcome = Result<String, String>;

const LANGUAGES: [Language; 4] = [Language::En, Language::Fr, Language::It, Language::Ro];

fn seeds_path(language: Language) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/seeds")
        .join(format!("{}.tsv", language.code()))
}

fn seed_file(language: Language) -> SeedFile {
    parse_seed_file(
        &std::fs::read_to_string(seeds_path(language)).unwrap(),
        language,
    )
    .unwrap()
}

fn blmlab(cwd: &Path, args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_blmlab"))
        .args(args)
        .current_dir(cwd)
        .env_remove("BLMLAB_DATA_DIR")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "blmlab {} exited with {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr).trim()
        ));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// 1. Pattern enumeration

fn patterns() -> Outcome {
    let mut brute = BTreeSet::new();
    for np in [Sg, Pl] {
        for pp1 in [None, Some(Sg), Some(Pl)] {
            for pp2 in [None, Some(Sg), Some(Pl)] {
                if pp1.is_none() && pp2.is_some() {
                    continue;
                }
                brute.insert(ChunkPattern {
                    np,
                    pp1,
                    pp2,
                    vp: np,
                });
            }
        }
    }
    let got = enumerate_patterns();
    let set: BTreeSet<ChunkPattern> = got.iter().copied().collect();
    ensure(got.len() == 14 && set.len() == 14, || {
        format!("{} patterns, {} distinct", got.len(), set.len())
    })?;
    ensure(set == brute, || {
        "enumeration differs from brute force".into()
    })?;
    Ok("14 patterns, identical to brute force".into())
}

// 2. Template conformance

const CONTEXT_ROWS: [(GrammNumber, GrammNumber, Option<GrammNumber>, GrammNumber); 7] = [
    (Sg, Sg, None, Sg),
    (Pl, Sg, None, Pl),
    (Sg, Pl, None, Sg),
    (Pl, Pl, None, Pl),
    (Sg, Sg, Some(Sg), Sg),
    (Pl, Sg, Some(Sg), Pl),
    (Sg, Pl, Some(Sg), Sg),
];

/// `(np, pp1, pp2, vp, coordinated)` for each answer.
fn answer_row(
    label: AnswerLabel,
) -> (
    GrammNumber,
    GrammNumber,
    Option<GrammNumber>,
    GrammNumber,
    bool,
) {
    match label {
        AnswerLabel::Correct => (Pl, Pl, Some(Sg), Pl, false),
        AnswerLabel::Coord => (Pl, Pl, Some(Sg), Pl, true),
        AnswerLabel::Wna => (Pl, Pl, None, Pl, false),
        AnswerLabel::Wn1 => (Pl, Sg, Some(Sg), Pl, false),
        AnswerLabel::Wn2 => (Pl, Pl, Some(Pl), Pl, false),
        AnswerLabel::Aev => (Pl, Pl, Some(Pl), Sg, false),
        AnswerLabel::Aen1 => (Pl, Sg, Some(Pl), Sg, false),
        AnswerLabel::Aen2 => (Pl, Pl, Some(Sg), Sg, false),
        AnswerLabel::Extended => unreachable!("not generated by default"),
    }
}

fn upper_first(s: &str) -> String {
    let mut c = s.chars();
    c.next()
        .map(|f| f.to_uppercase().chain(c).collect())
        .unwrap_or_default()
}

fn lower_first(s: &str) -> String {
    let mut c = s.chars();
    c.next()
        .map(|f| f.to_lowercase().chain(c).collect())
        .unwrap_or_default()
}

/// The text a row must have, assembled from the seed cells of the records
/// the sentence was built from.
fn expected_text(
    sentence: &Sentence,
    by_id: &BTreeMap<&str, &SeedRecord>,
    clause: Clause,
    row: (
        GrammNumber,
        GrammNumber,
        Option<GrammNumber>,
        GrammNumber,
        bool,
    ),
    config: &LanguageConfig,
) -> Result<String, String> {
    let rec = |slot: ChunkSlot| -> Result<&SeedRecord, String> {
        let id = sentence
            .seed_ids
            .get(&slot)
            .ok_or_else(|| format!("{:?} has no {slot:?} record", sentence.text))?;
        Ok(by_id[id.as_str()])
    };
    let (np, pp1, pp2, vp, coordinated) = row;
    let subj = rec(ChunkSlot::Subj)?;
    let mut words = Vec::new();
    let subject = subj.form(ChunkSlot::Subj, np);
    if clause == Clause::Completive {
        words.push(
            subj.extra(ExtraColumn::CompletivePrefix)
                .unwrap_or_default()
                .to_string(),
        );
        words.push(lower_first(subject));
    } else {
        words.push(subject.to_string());
    }
    words.push(rec(ChunkSlot::P1)?.form(ChunkSlot::P1, pp1).to_string());
    if let Some(n) = pp2 {
        let p2 = rec(ChunkSlot::P2)?;
        if coordinated {
            words.push(config.coordination_token.clone());
            words.push(
                p2.extra(ExtraColumn::CoordP2Sg)
                    .unwrap_or(p2.form(ChunkSlot::P2, n))
                    .to_string(),
            );
        } else {
            words.push(p2.form(ChunkSlot::P2, n).to_string());
        }
    }
    if clause == Clause::Relative {
        words.push(
            subj.extra(ExtraColumn::RelativeInsert)
                .unwrap_or_default()
                .to_string(),
        );
    }
    words.push(rec(ChunkSlot::V)?.form(ChunkSlot::V, vp).to_string());
    Ok(upper_first(&format!("{}.", words.join(" "))))
}

fn conforms(inst: &BlmInstance, by_id: &BTreeMap<&str, &SeedRecord>) -> Result<(), String> {
    let config = LanguageConfig::for_language(inst.language);
    let id = &inst.instance_id;
    ensure(inst.context.len() == 7, || {
        format!("{id}: {} context rows", inst.context.len())
    })?;
    for (row, s) in inst.context.iter().enumerate() {
        let (np, pp1, pp2, vp) = CONTEXT_ROWS[row];
        let want = expected_text(s, by_id, inst.clause, (np, pp1, pp2, vp, false), &config)?;
        ensure(s.text == want, || {
            format!("{id} row {}: {:?}, expected {want:?}", row + 1, s.text)
        })?;
        ensure((np == vp) == s.pattern().is_grammatical(), || {
            format!("{id} row {}: pattern", row + 1)
        })?;
    }
    let mut labels: Vec<AnswerLabel> = inst.answers.iter().map(|a| a.label).collect();
    labels.sort();
    let mut canonical = AnswerLabel::CANONICAL.to_vec();
    canonical.sort();
    ensure(labels == canonical, || format!("{id}: labels {labels:?}"))?;
    for a in &inst.answers {
        let row = answer_row(a.label);
        let want = expected_text(&a.sentence, by_id, inst.clause, row, &config)?;
        ensure(a.sentence.text == want, || {
            format!("{id} {}: {:?}, expected {want:?}", a.label, a.sentence.text)
        })?;
        let agrees = row.0 == row.3;
        ensure(agrees != a.label.is_agreement_error(), || {
            format!("{id}: {} agreement", a.label)
        })?;
    }
    ensure(
        inst.answers[inst.correct_index].label == AnswerLabel::Correct,
        || format!("{id}: wrong correct index"),
    )
}

fn templates() -> Outcome {
    let mut per_language = Vec::new();
    for language in LANGUAGES {
        let file = seed_file(language);
        let by_id: BTreeMap<&str, &SeedRecord> =
            file.records.iter().map(|r| (r.id.as_str(), r)).collect();
        let opts = BlmOptions::default();
        let gen = |t, n| {
            generate_blm_dataset(&file.records, t, n, &opts, 17)
                .map(|d| d.0)
                .map_err(|e| e.to_string())
        };
        let mut instances = gen(LexicalType::I, usize::MAX)?;
        let rest = 1000 - instances.len();
        instances.extend(gen(LexicalType::Ii, rest / 2)?);
        instances.extend(gen(LexicalType::Iii, rest - rest / 2)?);
        ensure(instances.len() == 1000, || {
            format!("{language}: {} instances", instances.len())
        })?;
        for inst in &instances {
            conforms(inst, &by_id)?;
        }
        per_language.push(format!("{language} 1000"));
    }
    Ok(format!(
        "every context row and answer matches its template ({})",
        per_language.join(", ")
    ))
}

// 3. Published example instance

fn published_example() -> Outcome {
    let context = [
        "The owner of the parrot is coming.",
        "The owners of the parrot are coming.",
        "The owner of the parrots is coming.",
        "The owners of the parrots are coming.",
        "The owner of the parrot in the tree is coming.",
        "The owners of the parrot in the tree are coming.",
        "The owner of the parrots in the tree is coming.",
    ];
    let correct = "The owners of the parrots in the tree are coming.";
    let coord = "The owners of the parrots and the trees are coming.";
    let file = seed_file(Language::En);
    let (instances, _) = generate_blm_dataset(
        &file.records,
        LexicalType::I,
        usize::MAX,
        &BlmOptions::default(),
        0,
    )
    .map_err(|e| e.to_string())?;
    let inst = instances
        .iter()
        .find(|i| i.clause == Clause::Main && i.context[0].text == context[0])
        .ok_or("no instance starts with the parrot sentence")?;
    for (row, want) in context.iter().enumerate() {
        let got = &inst.context[row].text;
        ensure(got == want, || format!("row {}: {got:?}", row + 1))?;
    }
    let text = |l: AnswerLabel| {
        inst.answers
            .iter()
            .find(|a| a.label == l)
            .map(|a| a.sentence.text.clone())
    };
    ensure(
        text(AnswerLabel::Correct).as_deref() == Some(correct),
        || format!("Correct: {:?}", text(AnswerLabel::Correct)),
    )?;
    ensure(text(AnswerLabel::Coord).as_deref() == Some(coord), || {
        format!("Coord: {:?}", text(AnswerLabel::Coord))
    })?;
    Ok("7 context sentences, Correct and Coord answers verbatim".into())
}

// 4. Split shape

fn split_shape(tmp: &Path) -> Outcome {
    let seeds = seeds_path(Language::En);
    blmlab(
        tmp,
        &[
            "--data-dir",
            "data",
            "gen-sentences",
            "--seeds",
            seeds.to_str().unwrap(),
        ],
    )?;
    let split = read_split(&tmp.join("data/sentences/en")).map_err(|e| e.to_string())?;
    let sizes = split.sizes();
    ensure(sizes == (2576, 630, 798), || format!("split {sizes:?}"))?;
    Ok("train 2576, dev 630, test 798".into())
}

// 5. Gradient checks

fn gradients() -> Outcome {
    let seeds = 20;
    let mut worst: BTreeMap<&'static str, f64> = BTreeMap::new();
    for seed in 0..seeds {
        for c in gradient_suite(seed, SuiteOptions::default()).map_err(|e| e.to_string())? {
            let e = worst.entry(c.name).or_insert(0.0);
            *e = e.max(c.report.max_rel_error);
        }
    }
    let expected = [
        "conv2d",
        "conv_transpose2d",
        "cosine",
        "gaussian_latent",
        "linear",
        "maxmargin",
        "sentence_vae",
        "two_level",
    ];
    let names: Vec<&str> = worst.keys().copied().collect();
    ensure(names == expected, || format!("checked {names:?}"))?;
    let (name, max) = worst
        .iter()
        .fold(("", 0.0), |a, (n, e)| if *e > a.1 { (n, *e) } else { a });
    ensure(max < 1e-4, || {
        format!("{name}: max relative error {max:.3e}")
    })?;
    Ok(format!(
        "8 checks x {seeds} seeds, max relative error {max:.2e} ({name})"
    ))
}

// 6. Learnability on synthetic embeddings

fn f1_from_predictions(path: &Path) -> Result<(f64, usize), String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{path:?}: {e}"))?;
    let mut n = 0;
    let mut hits = 0;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let v: serde_json::Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
        n += 1;
        hits += usize::from(v["chosen"] == v["correct"]);
    }
    ensure(n > 0, || format!("{path:?} is empty"))?;
    Ok((hits as f64 / n as f64, n))
}

fn learnability_sentences(tmp: &Path) -> Outcome {
    let seeds = seeds_path(Language::En);
    let seeds = seeds.to_str().unwrap();
    blmlab(
        tmp,
        &[
            "gen-sentences",
            "--seeds",
            seeds,
            "--target",
            "3125",
            "--out",
            "s",
        ],
    )?;
    let (train, _, _) = read_split(&tmp.join("s"))
        .map_err(|e| e.to_string())?
        .sizes();
    ensure((1950..=2050).contains(&train), || {
        format!("{train} training triples")
    })?;
    blmlab(tmp, &["embed-synthetic", "--data", "s", "--sigma", "0.1"])?;
    blmlab(
        tmp,
        &[
            "train-sentence",
            "--data",
            "s",
            "--out",
            "m",
            "--epochs",
            "50",
            "--batch-size",
            "32",
            "--learning-rate",
            "0.003",
            "--margin",
            "0.1",
            "--kl-weight",
            "0.01",
            "--channels",
            "8",
        ],
    )?;
    let (f1, n) = f1_from_predictions(&tmp.join("m/predictions.jsonl"))?;
    ensure(f1 >= 0.95, || format!("sentence test F1 {f1:.3} < 0.95"))?;
    Ok(format!(
        "sentence VAE: {train} training triples, test F1 {f1:.3} on {n}"
    ))
}

fn learnability_blm(tmp: &Path) -> Outcome {
    let seeds = seeds_path(Language::En);
    blmlab(
        tmp,
        &[
            "gen-blm",
            "--seeds",
            seeds.to_str().unwrap(),
            "--type",
            "III",
            "--count",
            "556",
            "--out",
            "b",
        ],
    )?;
    let (train, dev, _) = read_split(&tmp.join("b"))
        .map_err(|e| e.to_string())?
        .sizes();
    ensure(train + dev == 500, || {
        format!("{} train+dev instances", train + dev)
    })?;
    blmlab(tmp, &["embed-synthetic", "--data", "b", "--sigma", "0.1"])?;
    blmlab(
        tmp,
        &[
            "train-blm",
            "--data",
            "b",
            "--out",
            "m",
            "--epochs",
            "50",
            "--batch-size",
            "32",
            "--learning-rate",
            "0.003",
            "--margin",
            "0.1",
            "--kl-weight",
            "0.01",
            "--channels",
            "8",
            "--patience",
            "5",
        ],
    )?;
    let (f1, n) = f1_from_predictions(&tmp.join("m/predictions.jsonl"))?;
    ensure(f1 >= 0.90, || format!("two-level test F1 {f1:.3} < 0.90"))?;
    Ok(format!(
        "two-level: {} instances, test F1 {f1:.3} on {n}",
        train + dev
    ))
}

fn learnability(tmp: &Path) -> Outcome {
    for d in ["sentences", "blm"] {
        std::fs::create_dir_all(tmp.join(d)).map_err(|e| e.to_string())?;
    }
    let a = learnability_sentences(&tmp.join("sentences"))?;
    let b = learnability_blm(&tmp.join("blm"))?;
    Ok(format!("{a}; {b}"))
}

// 7. Transfer failure across disjoint synthetic languages

const SEPARATION_SIGMA: &str = "0.01";

fn read_report_csv(path: &Path) -> Result<BTreeMap<(String, String), f64>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    let mut out = BTreeMap::new();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let v: f64 = f[4].parse().map_err(|_| format!("bad line {line:?}"))?;
        out.insert((f[1].to_string(), f[2].to_string()), v);
    }
    Ok(out)
}

struct Cluster {
    sum: Vec<f64>,
    points: Vec<Vec<f64>>,
}

/// Minimum distance between centroids of different languages, and the
/// largest distance of any point from its (language, pattern) centroid.
fn separation_from_csv(path: &Path) -> Result<(f64, f64, usize), String> {
    let text = std::fs::read_to_string(path).map_err(|e| e.to_string())?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or("empty latent dump")?
        .split(',')
        .collect();
    let z_cols: Vec<usize> = (0..header.len())
        .filter(|&i| header[i].starts_with('z'))
        .collect();
    let mut clusters: BTreeMap<(String, String), Cluster> = BTreeMap::new();
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let z: Vec<f64> = z_cols
            .iter()
            .map(|&i| f[i].parse().unwrap_or(f64::NAN))
            .collect();
        let c = clusters
            .entry((f[1].to_string(), f[2].to_string()))
            .or_insert_with(|| Cluster {
                sum: vec![0.0; z.len()],
                points: Vec::new(),
            });
        c.sum.iter_mut().zip(&z).for_each(|(s, v)| *s += v);
        c.points.push(z);
    }
    let dist = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let centroids: Vec<(&str, Vec<f64>)> = clusters
        .iter()
        .map(|((lang, _), c)| {
            (
                lang.as_str(),
                c.sum.iter().map(|s| s / c.points.len() as f64).collect(),
            )
        })
        .collect();
    let mut radius: f64 = 0.0;
    for ((_, c), (_, centroid)) in clusters.iter().zip(&centroids) {
        for p in &c.points {
            radius = radius.max(dist(p, centroid));
        }
    }
    let mut inter = f64::INFINITY;
    for (i, (la, a)) in centroids.iter().enumerate() {
        for (lb, b) in &centroids[i + 1..] {
            if la != lb {
                inter = inter.min(dist(a, b));
            }
        }
    }
    Ok((inter, radius, clusters.len()))
}

fn transfer(tmp: &Path) -> Outcome {
    let mut dirs = Vec::new();
    for language in LANGUAGES {
        let s = seeds_path(language);
        blmlab(
            tmp,
            &[
                "gen-sentences",
                "--seeds",
                s.to_str().unwrap(),
                "--target",
                "700",
            ],
        )?;
        dirs.push(format!("data/sentences/{}", language.code()));
    }
    let mut args = vec![
        "embed-synthetic",
        "--sigma",
        SEPARATION_SIGMA,
        "--mode",
        "disjoint",
        "--data",
    ];
    args.extend(dirs.iter().map(String::as_str));
    blmlab(tmp, &args)?;

    let hp = r#"{"epochs": 15, "batch_size": 32, "learning_rate": 0.003, "margin": 0.1}"#;
    let rows: Vec<String> = ["en", "fr", "it", "ro", "multilang"]
        .iter()
        .map(|t| {
            format!(r#"{{"task": "sentences", "train_spec": "{t}", "test_specs": ["en", "fr", "it", "ro"], "runs": 1, "hyperparameters": {hp}}}"#)
        })
        .collect();
    std::fs::write(tmp.join("exp.json"), format!("[{}]", rows.join(",\n")))
        .map_err(|e| e.to_string())?;
    blmlab(
        tmp,
        &["--config", "exp.json", "eval", "--results", "results"],
    )?;
    blmlab(tmp, &["report", "--results", "results"])?;
    let cells = read_report_csv(&tmp.join("results/report.csv"))?;
    ensure(cells.len() == 20, || {
        format!("{} report cells", cells.len())
    })?;

    let mut worst_cross: f64 = 0.0;
    let mut diag = Vec::new();
    for ((train, test), f1) in &cells {
        if train == "multilang" {
            continue;
        }
        if train == test {
            diag.push(*f1);
        } else {
            worst_cross = worst_cross.max(*f1);
        }
    }
    ensure(worst_cross <= 0.30, || {
        format!("cross-language F1 up to {worst_cross:.3} > 0.30")
    })?;

    let mut args = vec![
        "export-latents",
        "--checkpoint",
        "results/sentences/multilang/run-0/model.blmc",
        "--out",
        "latents.csv",
        "--data",
    ];
    args.extend(dirs.iter().map(String::as_str));
    blmlab(tmp, &args)?;
    let (inter, radius, clusters) = separation_from_csv(&tmp.join("latents.csv"))?;
    ensure(clusters == 56, || {
        format!("{clusters} (language, pattern) clusters")
    })?;
    ensure(inter > radius, || {
        format!("min inter-language centroid distance {inter:.3} <= max cluster radius {radius:.3}")
    })?;
    let min_diag = diag.iter().copied().fold(1.0, f64::min);
    Ok(format!(
        "12 cross-language cells <= {worst_cross:.3} (diagonal >= {min_diag:.3}); multilingual latents: \
         centroid gap {inter:.3} > radius {radius:.3} (sigma {SEPARATION_SIGMA})"
    ))
}

// 8. Chance baseline

fn random_vector(rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..768).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn chance() -> Outcome {
    let trials = 2000;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let sentence =
        SentenceVae::new(SentenceVaeSpec::with_channels(8), &mut rng).map_err(|e| e.to_string())?;
    let two_level =
        TwoLevelModel::new(TwoLevelSpec::with_channels(8), &mut rng).map_err(|e| e.to_string())?;
    let mut hits = [0usize; 2];
    for _ in 0..trials {
        let cands: Vec<Vec<f64>> = (0..8).map(|_| random_vector(&mut rng)).collect();
        let refs: Vec<&[f64]> = cands.iter().map(Vec::as_slice).collect();
        let correct = rng.random_range(0..8);
        let input = random_vector(&mut rng);
        hits[0] += usize::from(
            predict_sentence(&sentence, &input, &refs).map_err(|e| e.to_string())? == correct,
        );
        let context: Vec<Vec<f64>> = (0..7).map(|_| random_vector(&mut rng)).collect();
        let ctx: Vec<&[f64]> = context.iter().map(Vec::as_slice).collect();
        hits[1] += usize::from(
            predict_blm(&two_level, &ctx, &refs).map_err(|e| e.to_string())? == correct,
        );
    }
    let rates = hits.map(|h| h as f64 / trials as f64);
    for (name, r) in ["sentence", "two-level"].iter().zip(rates) {
        ensure((r - 0.125).abs() <= 0.05, || {
            format!("untrained {name} model: {r:.3}")
        })?;
    }
    Ok(format!(
        "untrained sentence {:.3}, two-level {:.3} over {trials} trials each",
        rates[0], rates[1]
    ))
}

// 9. Determinism

fn pipeline(dir: &Path) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
    let en = seeds_path(Language::En);
    let fr = seeds_path(Language::Fr);
    let common = ["--seed", "7", "--data-dir", "data"];
    let run = |args: &[&str]| -> Result<String, String> {
        let mut all: Vec<&str> = common.to_vec();
        all.extend(args);
        blmlab(dir, &all)
    };
    run(&[
        "gen-sentences",
        "--seeds",
        en.to_str().unwrap(),
        "--target",
        "280",
    ])?;
    run(&[
        "gen-sentences",
        "--seeds",
        fr.to_str().unwrap(),
        "--target",
        "280",
    ])?;
    run(&[
        "gen-blm",
        "--seeds",
        en.to_str().unwrap(),
        "--type",
        "II",
        "--count",
        "120",
    ])?;
    run(&[
        "embed-synthetic",
        "--data",
        "data/sentences/en",
        "data/sentences/fr",
        "data/blm/en-II",
    ])?;
    let exp = r#"[
      {"task": "sentences", "train_spec": "en", "test_specs": ["en", "fr"], "runs": 2,
       "hyperparameters": {"epochs": 3, "batch_size": 16, "channels": 4}},
      {"task": "blm", "train_spec": "en-II", "test_specs": ["en-II"], "runs": 1,
       "hyperparameters": {"epochs": 3, "batch_size": 16, "channels": 4}}
    ]"#;
    std::fs::write(dir.join("exp.json"), exp).map_err(|e| e.to_string())?;
    run(&[
        "--jobs",
        "2",
        "--config",
        "exp.json",
        "eval",
        "--results",
        "results",
    ])?;
    run(&["report", "--results", "results"])?;
    Ok(())
}

fn tree(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).into_iter().flatten().flatten() {
            let p = e.path();
            if p.is_dir() {
                stack.push(p);
            } else if let Ok(rel) = p.strip_prefix(dir) {
                out.push(rel.to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn determinism(tmp: &Path) -> Outcome {
    let (a, b) = (tmp.join("a"), tmp.join("b"));
    pipeline(&a)?;
    pipeline(&b)?;
    let files = tree(&a);
    ensure(files == tree(&b), || {
        "the two runs wrote different file sets".into()
    })?;
    let has = |suffix: &str| {
        files
            .iter()
            .filter(|f| f.to_string_lossy().ends_with(suffix))
            .count()
    };
    let (datasets, models, reports) = (
        has("manifest.json"),
        has("model.blmc"),
        has("report.txt") + has("report.csv"),
    );
    ensure(datasets == 3 && models == 3 && reports == 2, || {
        format!("{datasets} datasets, {models} checkpoints, {reports} report files")
    })?;
    let mut differing = Vec::new();
    for f in &files {
        if std::fs::read(a.join(f)).ok() != std::fs::read(b.join(f)).ok() {
            differing.push(f.display().to_string());
        }
    }
    ensure(differing.is_empty(), || {
        format!("differing files: {}", differing.join(", "))
    })?;
    Ok(format!(
        "{} files byte-identical ({datasets} datasets, {models} checkpoints, reports)",
        files.len()
    ))
}

struct Criterion {
    number: u32,
    title: &'static str,
    budget: Duration,
    run: fn(&Path) -> Outcome,
}

fn main() {
    let criteria = [
        Criterion {
            number: 1,
            title: "pattern enumeration",
            budget: Duration::from_secs(1),
            run: |_| patterns(),
        },
        Criterion {
            number: 2,
            title: "template conformance",
            budget: Duration::from_secs(10),
            run: |_| templates(),
        },
        Criterion {
            number: 3,
            title: "published example",
            budget: Duration::from_secs(1),
            run: |_| published_example(),
        },
        Criterion {
            number: 4,
            title: "split shape",
            budget: Duration::from_secs(5),
            run: split_shape,
        },
        Criterion {
            number: 5,
            title: "gradient checks",
            budget: Duration::from_secs(120),
            run: |_| gradients(),
        },
        Criterion {
            number: 6,
            title: "synthetic learnability",
            budget: Duration::from_secs(600),
            run: learnability,
        },
        Criterion {
            number: 7,
            title: "transfer failure",
            budget: Duration::from_secs(300),
            run: transfer,
        },
        Criterion {
            number: 8,
            title: "chance baseline",
            budget: Duration::from_secs(60),
            run: |_| chance(),
        },
        Criterion {
            number: 9,
            title: "determinism",
            budget: Duration::from_secs(600),
            run: determinism,
        },
    ];
    let only: HashSet<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    let mut ran = 0;
    for c in criteria
        .iter()
        .filter(|c| only.is_empty() || only.contains(&c.number))
    {
        let tmp = tempfile::tempdir().expect("temporary directory");
        let start = Instant::now();
        let mut result = (c.run)(tmp.path());
        let elapsed = start.elapsed();
        if result.is_ok() && elapsed > c.budget {
            result = Err(format!(
                "took {:.1} s, budget {} s",
                elapsed.as_secs_f64(),
                c.budget.as_secs()
            ));
        }
        let (status, detail) = match &result {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        ran += 1;
        failed += usize::from(result.is_err());
        println!(
            "criterion {} {status}: {}: {detail} [{:.1} s]",
            c.number,
            c.title,
            elapsed.as_secs_f64()
        );
        let _ = std::io::stdout().flush();
    }
    println!("acceptance: {} of {ran} passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
