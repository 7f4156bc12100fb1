use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::{BlmItem, SentenceItem};
use super::predict::{evaluate_blm, evaluate_sentences, prediction_f1};
use super::sentence_vae::{LossConfig, SentenceVae, SentenceVaeSpec};
use super::two_level::{TwoLevelModel, TwoLevelNoise, TwoLevelSpec};
use crate::error::{Error, Result};
use crate::generator::CONTEXT_LEN;
use crate::nn::latent::standard_normal;
use crate::nn::{Adam, AdamConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub margin: f64,
    pub kl_weight: f64,
    /// Decoupled Adam weight decay.
    pub weight_decay: f64,
    pub seed: u64,
    /// Other context sentences used as negatives per sentence (two-level only).
    pub negatives: usize,
    pub channels: usize,
    /// Stop after this many epochs without a dev improvement.
    pub patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 120,
            batch_size: 64,
            learning_rate: 1e-3,
            margin: 0.5,
            kl_weight: 0.01,
            weight_decay: 0.0,
            seed: 0,
            negatives: CONTEXT_LEN - 1,
            channels: 8,
            patience: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::config(m.to_string()));
        if self.epochs == 0 || self.batch_size == 0 || self.channels == 0 {
            return bad("epochs, batch size and channels must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if ![self.margin, self.kl_weight, self.weight_decay]
            .iter()
            .all(|v| *v >= 0.0 && v.is_finite())
        {
            return bad("margin, KL weight and weight decay must be non-negative");
        }
        if self.negatives == 0 || self.negatives >= CONTEXT_LEN {
            return bad("negatives must be between 1 and 6");
        }
        if self.patience == Some(0) {
            return bad("patience must be positive");
        }
        Ok(())
    }

    pub fn loss(&self) -> LossConfig {
        LossConfig {
            margin: self.margin,
            kl_weight: self.kl_weight,
        }
    }

    fn adam(&self) -> Adam {
        Adam::new(AdamConfig {
            lr: self.learning_rate,
            weight_decay: self.weight_decay,
            ..AdamConfig::default()
        })
    }

    /// Independent generator per purpose: 1 init, 2 order, 3 noise.
    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_loss: f64,
    pub dev_f1: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were kept.
    pub best_epoch: usize,
}

impl History {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,dev_loss,dev_f1\n");
        for r in &self.epochs {
            let _ = writeln!(
                out,
                "{},{:.8},{:.8},{:.6}",
                r.epoch, r.train_loss, r.dev_loss, r.dev_f1
            );
        }
        out
    }
}

/// Keeps the best-on-dev parameters and decides when to stop.
struct Selector<M> {
    best: Option<(M, f64, usize)>,
    patience: Option<usize>,
    stale: usize,
}

impl<M: Clone> Selector<M> {
    fn new(patience: Option<usize>) -> Self {
        Selector {
            best: None,
            patience,
            stale: 0,
        }
    }

    /// Returns true when training should stop.
    fn offer(&mut self, model: &M, f1: f64, epoch: usize) -> bool {
        let improved = self.best.as_ref().is_none_or(|(_, b, _)| f1 > *b);
        if improved {
            self.best = Some((model.clone(), f1, epoch));
            self.stale = 0;
        } else {
            self.stale += 1;
        }
        self.patience.is_some_and(|p| self.stale >= p)
    }
}

pub fn train_sentence_vae(
    train: &[SentenceItem],
    dev: &[SentenceItem],
    cfg: &TrainConfig,
) -> Result<(SentenceVae, History)> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::config("no training triples"));
    }
    let loss_cfg = cfg.loss();
    let mut model = SentenceVae::new(
        SentenceVaeSpec::with_channels(cfg.channels),
        &mut cfg.rng(1),
    )?;
    let mut opt = cfg.adam();
    let mut order_rng = cfg.rng(2);
    let mut noise_rng = cfg.rng(3);
    let latent_dim = model.spec.latent_dim;
    let mut history = History::default();
    let mut selector = Selector::new(cfg.patience);
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut order_rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            model.zero_grad();
            let s = 1.0 / batch.len() as f64;
            for &i in batch {
                let item = &train[i];
                let eps = standard_normal(latent_dim, &mut noise_rng);
                total += model.example_loss(
                    &item.input,
                    &item.positive,
                    &item.negative_refs(),
                    Some(&eps),
                    loss_cfg,
                    Some(s),
                )?;
            }
            opt.step(&mut model.params_mut())?;
        }
        let mut dev_loss = 0.0;
        for item in dev {
            dev_loss += model.example_loss(
                &item.input,
                &item.positive,
                &item.negative_refs(),
                None,
                loss_cfg,
                None,
            )?;
        }
        let record = EpochRecord {
            epoch,
            train_loss: total / train.len() as f64,
            dev_loss: if dev.is_empty() {
                0.0
            } else {
                dev_loss / dev.len() as f64
            },
            dev_f1: prediction_f1(&evaluate_sentences(&model, dev)?),
        };
        log::info!(
            "sentence epoch {epoch}: train {:.4} dev {:.4} f1 {:.3}",
            record.train_loss,
            record.dev_loss,
            record.dev_f1
        );
        history.epochs.push(record);
        let stop = selector.offer(&model, record.dev_f1, epoch);
        if stop {
            break;
        }
    }
    finish(model, selector, history, dev.is_empty())
}

fn finish<M>(
    last: M,
    selector: Selector<M>,
    mut history: History,
    no_dev: bool,
) -> Result<(M, History)> {
    if no_dev {
        history.best_epoch = history.epochs.len();
        return Ok((last, history));
    }
    let (best, _, epoch) = selector.best.expect("at least one epoch ran");
    history.best_epoch = epoch;
    Ok((best, history))
}

pub fn train_two_level(
    train: &[BlmItem],
    dev: &[BlmItem],
    cfg: &TrainConfig,
) -> Result<(TwoLevelModel, History)> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::config("no training instances"));
    }
    let loss_cfg = cfg.loss();
    let spec = TwoLevelSpec::with_channels(cfg.channels);
    let mut model = TwoLevelModel::new(spec, &mut cfg.rng(1))?;
    let mut opt = cfg.adam();
    let mut order_rng = cfg.rng(2);
    let mut noise_rng = cfg.rng(3);
    let mut history = History::default();
    let mut selector = Selector::new(cfg.patience);
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut order_rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            model.zero_grad();
            let s = 1.0 / batch.len() as f64;
            for &i in batch {
                let item = &train[i];
                let c = item.candidates();
                let noise =
                    TwoLevelNoise::sample(&spec, c.vectors.len(), cfg.negatives, &mut noise_rng);
                let loss = model.instance_loss(
                    &item.context_refs(),
                    &c.vectors,
                    c.correct,
                    &noise,
                    loss_cfg,
                    Some(s),
                )?;
                total += loss.total();
            }
            opt.step(&mut model.params_mut())?;
        }
        let mut dev_loss = 0.0;
        for item in dev {
            let c = item.candidates();
            let noise = TwoLevelNoise::mean(&spec, c.vectors.len());
            dev_loss += model
                .instance_loss(
                    &item.context_refs(),
                    &c.vectors,
                    c.correct,
                    &noise,
                    loss_cfg,
                    None,
                )?
                .total();
        }
        let record = EpochRecord {
            epoch,
            train_loss: total / train.len() as f64,
            dev_loss: if dev.is_empty() {
                0.0
            } else {
                dev_loss / dev.len() as f64
            },
            dev_f1: prediction_f1(&evaluate_blm(&model, dev)?),
        };
        log::info!(
            "two-level epoch {epoch}: train {:.4} dev {:.4} f1 {:.3}",
            record.train_loss,
            record.dev_loss,
            record.dev_f1
        );
        history.epochs.push(record);
        if selector.offer(&model, record.dev_f1, epoch) {
            break;
        }
    }
    finish(model, selector, history, dev.is_empty())
}
