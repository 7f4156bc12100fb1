use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::LexicalType;
use crate::probe::TrainConfig;
use crate::seeds::Language;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// Sentence chunk-structure detection over triples.
    Sentences,
    /// BLM agreement puzzles.
    Blm,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Sentences => "sentences",
            Task::Blm => "blm",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sentences" => Ok(Task::Sentences),
            "blm" => Ok(Task::Blm),
            _ => Err(Error::config(format!("unknown task {s:?}"))),
        }
    }
}

/// One dataset: a language, plus the lexical type for BLM data. Written
/// `fr` or `fr-II`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct DataRef {
    pub language: Language,
    pub lexical_type: Option<LexicalType>,
}

impl DataRef {
    pub fn sentences(language: Language) -> Self {
        DataRef {
            language,
            lexical_type: None,
        }
    }

    pub fn blm(language: Language, lexical_type: LexicalType) -> Self {
        DataRef {
            language,
            lexical_type: Some(lexical_type),
        }
    }

    /// `<root>/<task>/<ref>`, where generation commands put the dataset and
    /// its `embeddings.blme`.
    pub fn dir(&self, root: &Path, task: Task) -> PathBuf {
        root.join(task.name()).join(self.to_string())
    }

    fn check(&self, task: Task) -> Result<()> {
        match (task, self.lexical_type) {
            (Task::Sentences, None) | (Task::Blm, Some(_)) => Ok(()),
            (Task::Sentences, Some(_)) => Err(Error::config(format!(
                "sentence datasets have no lexical type: {self}"
            ))),
            (Task::Blm, None) => Err(Error::config(format!(
                "BLM dataset {self} needs a lexical type"
            ))),
        }
    }
}

impl fmt::Display for DataRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.lexical_type {
            Some(t) => write!(f, "{}-{}", self.language, t),
            None => write!(f, "{}", self.language),
        }
    }
}

impl FromStr for DataRef {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (lang, ty) = match s.split_once('-') {
            Some((l, t)) => (l, Some(t.parse()?)),
            None => (s, None),
        };
        Ok(DataRef {
            language: lang.parse()?,
            lexical_type: ty,
        })
    }
}

impl TryFrom<String> for DataRef {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<DataRef> for String {
    fn from(d: DataRef) -> String {
        d.to_string()
    }
}

/// What a model is trained on: one dataset, or the union of the four
/// languages' training sets (type-matched for BLM). Written `en`, `en-I`,
/// `multilang` or `multilang-I`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum TrainSpec {
    One(DataRef),
    MultiLang(Option<LexicalType>),
}

pub const MULTILANG: &str = "multilang";

impl TrainSpec {
    /// Datasets whose train and dev parts are pooled.
    pub fn sources(&self) -> Vec<DataRef> {
        match *self {
            TrainSpec::One(d) => vec![d],
            TrainSpec::MultiLang(t) => Language::ALL
                .into_iter()
                .map(|language| DataRef {
                    language,
                    lexical_type: t,
                })
                .collect(),
        }
    }

    pub fn lexical_type(&self) -> Option<LexicalType> {
        match *self {
            TrainSpec::One(d) => d.lexical_type,
            TrainSpec::MultiLang(t) => t,
        }
    }

    /// Whether a test cell lies on the diagonal of the transfer matrix.
    pub fn matches(&self, test: &DataRef) -> bool {
        matches!(self, TrainSpec::One(d) if d == test)
    }
}

impl fmt::Display for TrainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainSpec::One(d) => d.fmt(f),
            TrainSpec::MultiLang(Some(t)) => write!(f, "{MULTILANG}-{t}"),
            TrainSpec::MultiLang(None) => f.write_str(MULTILANG),
        }
    }
}

impl FromStr for TrainSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.strip_prefix(MULTILANG) {
            Some("") => Ok(TrainSpec::MultiLang(None)),
            Some(rest) => match rest.strip_prefix('-') {
                Some(t) => Ok(TrainSpec::MultiLang(Some(t.parse()?))),
                None => Err(Error::config(format!("bad training spec {s:?}"))),
            },
            None => Ok(TrainSpec::One(s.parse()?)),
        }
    }
}

impl TryFrom<String> for TrainSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<TrainSpec> for String {
    fn from(t: TrainSpec) -> String {
        t.to_string()
    }
}

fn default_runs() -> usize {
    3
}

/// One row of a transfer matrix: a training set, the test sets, and how
/// many independently seeded models to average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: Task,
    pub train_spec: TrainSpec,
    pub test_specs: Vec<DataRef>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    /// Run `k` trains with seed `seed + k`.
    #[serde(default)]
    pub seed: u64,
    /// The `seed` field inside is replaced per run.
    #[serde(default)]
    pub hyperparameters: TrainConfig,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::config("runs must be at least 1"));
        }
        if self.test_specs.is_empty() {
            return Err(Error::config("no test sets"));
        }
        for d in self.train_spec.sources().iter().chain(&self.test_specs) {
            d.check(self.task)?;
        }
        self.hyperparameters.validate()
    }

    pub fn run_seeds(&self) -> Vec<u64> {
        (0..self.runs as u64)
            .map(|k| self.seed.wrapping_add(k))
            .collect()
    }

    /// Every test set the matrix has for `task`: the four languages, times
    /// the three lexical types for BLM.
    pub fn all_test_specs(task: Task) -> Vec<DataRef> {
        match task {
            Task::Sentences => Language::ALL.into_iter().map(DataRef::sentences).collect(),
            Task::Blm => LexicalType::ALL
                .into_iter()
                .flat_map(|t| Language::ALL.into_iter().map(move |l| DataRef::blm(l, t)))
                .collect(),
        }
    }

    /// The full cross-lingual and multilingual matrix: one config per
    /// training row, each tested on every column.
    pub fn full_matrix(
        task: Task,
        runs: usize,
        seed: u64,
        hyperparameters: TrainConfig,
    ) -> Vec<ExperimentConfig> {
        let types: Vec<Option<LexicalType>> = match task {
            Task::Sentences => vec![None],
            Task::Blm => LexicalType::ALL.into_iter().map(Some).collect(),
        };
        let mut rows = Vec::new();
        for t in types {
            for language in Language::ALL {
                rows.push(TrainSpec::One(DataRef {
                    language,
                    lexical_type: t,
                }));
            }
            rows.push(TrainSpec::MultiLang(t));
        }
        rows.into_iter()
            .map(|train_spec| ExperimentConfig {
                task,
                train_spec,
                test_specs: Self::all_test_specs(task),
                runs,
                seed,
                hyperparameters,
            })
            .collect()
    }
}

/// A config file holds one experiment or a list of them.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ConfigFile {
    Many(Vec<ExperimentConfig>),
    One(Box<ExperimentConfig>),
}

impl ConfigFile {
    pub fn into_vec(self) -> Vec<ExperimentConfig> {
        match self {
            ConfigFile::Many(v) => v,
            ConfigFile::One(c) => vec![*c],
        }
    }
}
