use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sentence_vae::{DecodeCache, EncodeCache, LossConfig, SentenceVae, SentenceVaeSpec};
use crate::error::{Error, Result};
use crate::generator::CONTEXT_LEN;
use crate::nn::gradcheck::GradCheckable;
use crate::nn::latent::standard_normal;
use crate::nn::loss::maxmargin_with_grad;
use crate::nn::tensor::{axpy, ensure_finite};
use crate::nn::{GaussianLatent, Linear, Param, LATENT_DIM};

/// Encodes the stacked context latents to a task latent and decodes it into
/// sentence-latent space.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskVae {
    pub enc_mu: Linear,
    pub enc_logvar: Linear,
    pub dec: Linear,
}

impl TaskVae {
    pub fn new<R: Rng + ?Sized>(
        sentence_latent: usize,
        context_len: usize,
        task_latent: usize,
        rng: &mut R,
    ) -> Self {
        let n_in = sentence_latent * context_len;
        TaskVae {
            enc_mu: Linear::new(n_in, task_latent, rng),
            enc_logvar: Linear::new(n_in, task_latent, rng),
            dec: Linear::new(task_latent, sentence_latent, rng),
        }
    }

    pub fn encode(&self, stack: &[f64]) -> Result<(GaussianLatent, Vec<bool>)> {
        if stack.len() != self.enc_mu.n_in() {
            return Err(Error::shape(format!(
                "task encoder expects a stack of {} values, got {}",
                self.enc_mu.n_in(),
                stack.len()
            )));
        }
        let mu = self.enc_mu.forward(stack)?;
        let raw = self.enc_logvar.forward(stack)?;
        ensure_finite(&mu, "task latent mean")?;
        ensure_finite(&raw, "task latent log-variance")?;
        GaussianLatent::from_raw(mu, &raw)
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v = Vec::with_capacity(6);
        v.extend(self.enc_mu.params_mut());
        v.extend(self.enc_logvar.params_mut());
        v.extend(self.dec.params_mut());
        v
    }

    pub fn params(&self) -> Vec<&Param> {
        let mut v = Vec::with_capacity(6);
        v.extend(self.enc_mu.params());
        v.extend(self.enc_logvar.params());
        v.extend(self.dec.params());
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelSpec {
    pub sentence: SentenceVaeSpec,
    pub context_len: usize,
    pub task_latent_dim: usize,
}

impl TwoLevelSpec {
    pub fn with_channels(channels: usize) -> Self {
        TwoLevelSpec {
            sentence: SentenceVaeSpec::with_channels(channels),
            context_len: CONTEXT_LEN,
            task_latent_dim: LATENT_DIM,
        }
    }
}

/// The sentence VAE feeding its context latents to a [`TaskVae`]. The same
/// sentence encoder embeds the answer candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoLevelModel {
    pub spec: TwoLevelSpec,
    pub sentence: SentenceVae,
    pub task: TaskVae,
}

/// Every random draw one training step needs, fixed up front so a step is a
/// pure function of parameters and noise. All-zero `eps` means mean latents.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoLevelNoise {
    pub context_eps: Vec<Vec<f64>>,
    pub task_eps: Vec<f64>,
    pub candidate_eps: Vec<Vec<f64>>,
    /// Indices of the other context sentences used as negatives for each one.
    pub negative_sets: Vec<Vec<usize>>,
}

impl TwoLevelNoise {
    /// Mean latents everywhere, all other context sentences as negatives.
    pub fn mean(spec: &TwoLevelSpec, candidates: usize) -> Self {
        let d = spec.sentence.latent_dim;
        TwoLevelNoise {
            context_eps: vec![vec![0.0; d]; spec.context_len],
            task_eps: vec![0.0; spec.task_latent_dim],
            candidate_eps: vec![vec![0.0; d]; candidates],
            negative_sets: all_others(spec.context_len),
        }
    }

    pub fn sample<R: Rng + ?Sized>(
        spec: &TwoLevelSpec,
        candidates: usize,
        negatives: usize,
        rng: &mut R,
    ) -> Self {
        let d = spec.sentence.latent_dim;
        let context_eps = (0..spec.context_len)
            .map(|_| standard_normal(d, rng))
            .collect();
        let task_eps = standard_normal(spec.task_latent_dim, rng);
        let candidate_eps = (0..candidates).map(|_| standard_normal(d, rng)).collect();
        let negative_sets = if negatives + 1 >= spec.context_len {
            all_others(spec.context_len)
        } else {
            (0..spec.context_len)
                .map(|i| {
                    let mut picks: Vec<usize> = index::sample(rng, spec.context_len - 1, negatives)
                        .into_iter()
                        .map(|j| if j >= i { j + 1 } else { j })
                        .collect();
                    picks.sort_unstable();
                    picks
                })
                .collect()
        };
        TwoLevelNoise {
            context_eps,
            task_eps,
            candidate_eps,
            negative_sets,
        }
    }
}

fn all_others(n: usize) -> Vec<Vec<usize>> {
    (0..n)
        .map(|i| (0..n).filter(|&j| j != i).collect())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelLoss {
    /// Mean of the per-sentence losses.
    pub sentence: f64,
    pub task: f64,
}

impl TwoLevelLoss {
    pub fn total(&self) -> f64 {
        self.sentence + self.task
    }
}

struct ContextPass {
    enc: EncodeCache,
    dec: DecodeCache,
    eps_index: usize,
    d_out: Vec<f64>,
}

impl TwoLevelModel {
    pub fn new<R: Rng + ?Sized>(spec: TwoLevelSpec, rng: &mut R) -> Result<Self> {
        if spec.context_len == 0 || spec.task_latent_dim == 0 {
            return Err(Error::config(
                "context length and task latent dim must be positive",
            ));
        }
        let sentence = SentenceVae::new(spec.sentence, rng)?;
        let task = TaskVae::new(
            spec.sentence.latent_dim,
            spec.context_len,
            spec.task_latent_dim,
            rng,
        );
        Ok(TwoLevelModel {
            spec,
            sentence,
            task,
        })
    }

    /// Stacked context latent means, `context_len * latent_dim` values.
    pub fn context_stack(&self, context: &[&[f64]]) -> Result<Vec<f64>> {
        self.check_context(context)?;
        let mut stack = Vec::with_capacity(self.task.enc_mu.n_in());
        for s in context {
            stack.extend(self.sentence.encode_mean(s)?);
        }
        Ok(stack)
    }

    /// Task decoder output for mean latents at both levels.
    pub fn answer_vector(&self, context: &[&[f64]]) -> Result<Vec<f64>> {
        let stack = self.context_stack(context)?;
        let (latent, _) = self.task.encode(&stack)?;
        self.task.dec.forward(&latent.mu)
    }

    fn check_context(&self, context: &[&[f64]]) -> Result<()> {
        if context.len() != self.spec.context_len {
            return Err(Error::shape(format!(
                "expected {} context sentences, got {}",
                self.spec.context_len,
                context.len()
            )));
        }
        Ok(())
    }

    /// Both loss terms for one instance; accumulates gradients when `scale`
    /// is given.
    pub fn instance_loss(
        &mut self,
        context: &[&[f64]],
        candidates: &[&[f64]],
        correct: usize,
        noise: &TwoLevelNoise,
        cfg: LossConfig,
        scale: Option<f64>,
    ) -> Result<TwoLevelLoss> {
        self.check_context(context)?;
        if correct >= candidates.len() || candidates.len() < 2 {
            return Err(Error::shape(
                "need at least two candidates and a valid correct index",
            ));
        }
        if noise.context_eps.len() != context.len()
            || noise.candidate_eps.len() != candidates.len()
            || noise.negative_sets.len() != context.len()
        {
            return Err(Error::shape("noise does not match the instance"));
        }
        let n_ctx = context.len() as f64;

        // sentence level
        let mut sentence_loss = 0.0;
        let mut passes = Vec::with_capacity(context.len());
        for (i, s) in context.iter().enumerate() {
            let enc = self.sentence.encode(s)?;
            let z = enc.latent.reparameterize(&noise.context_eps[i]);
            let dec = self.sentence.decode(&z)?;
            let negs: Vec<&[f64]> = noise.negative_sets[i].iter().map(|&j| context[j]).collect();
            let mg = maxmargin_with_grad(&dec.output, s, &negs, cfg.margin)?;
            sentence_loss += (mg.loss + cfg.kl_weight * enc.latent.kl()) / n_ctx;
            passes.push(ContextPass {
                enc,
                dec,
                eps_index: i,
                d_out: mg.d_out,
            });
        }

        // task level
        let stack: Vec<f64> = passes
            .iter()
            .flat_map(|p| p.enc.latent.mu.iter().copied())
            .collect();
        let (task_latent, task_mask) = self.task.encode(&stack)?;
        let z_task = task_latent.reparameterize(&noise.task_eps);
        let answer = self.task.dec.forward(&z_task)?;
        let mut cand_encs = Vec::with_capacity(candidates.len());
        let mut cand_z = Vec::with_capacity(candidates.len());
        for (j, c) in candidates.iter().enumerate() {
            let enc = self.sentence.encode(c)?;
            cand_z.push(enc.latent.reparameterize(&noise.candidate_eps[j]));
            cand_encs.push(enc);
        }
        let wrong: Vec<&[f64]> = (0..candidates.len())
            .filter(|&j| j != correct)
            .map(|j| cand_z[j].as_slice())
            .collect();
        let mg = maxmargin_with_grad(&answer, &cand_z[correct], &wrong, cfg.margin)?;
        let task_loss = mg.loss + cfg.kl_weight * task_latent.kl();
        let loss = TwoLevelLoss {
            sentence: sentence_loss,
            task: task_loss,
        };
        if !loss.total().is_finite() {
            return Err(Error::numeric(format!(
                "two-level loss is {}",
                loss.total()
            )));
        }
        let Some(s) = scale else {
            return Ok(loss);
        };

        // candidates
        let mut d_cand = vec![Vec::new(); candidates.len()];
        d_cand[correct] = mg.d_positive.clone();
        let mut k = 0;
        for (j, d) in d_cand.iter_mut().enumerate() {
            if j != correct {
                *d = mg.d_negatives[k].clone();
                k += 1;
            }
        }
        for (j, enc) in cand_encs.iter().enumerate() {
            let g: Vec<f64> = d_cand[j].iter().map(|x| x * s).collect();
            let (d_mu, d_lv) = enc
                .latent
                .reparameterize_backward(&noise.candidate_eps[j], &g);
            self.sentence.encode_backward(enc, &d_mu, &d_lv)?;
        }

        // task VAE
        let d_answer: Vec<f64> = mg.d_out.iter().map(|x| x * s).collect();
        let d_z_task = self.task.dec.backward(&z_task, &d_answer)?;
        let (mut d_mu_t, mut d_lv_t) =
            task_latent.reparameterize_backward(&noise.task_eps, &d_z_task);
        let (k_mu, k_lv) = task_latent.kl_grad();
        axpy(s * cfg.kl_weight, &k_mu, &mut d_mu_t);
        axpy(s * cfg.kl_weight, &k_lv, &mut d_lv_t);
        for (g, &open) in d_lv_t.iter_mut().zip(&task_mask) {
            if !open {
                *g = 0.0;
            }
        }
        let mut d_stack = self.task.enc_mu.backward(&stack, &d_mu_t)?;
        axpy(
            1.0,
            &self.task.enc_logvar.backward(&stack, &d_lv_t)?,
            &mut d_stack,
        );

        // context sentences
        let d = self.spec.sentence.latent_dim;
        let w = s / n_ctx;
        for p in &passes {
            let d_out: Vec<f64> = p.d_out.iter().map(|x| x * w).collect();
            let d_z = self.sentence.decode_backward(&p.dec, &d_out)?;
            let (mut d_mu, mut d_lv) = p
                .enc
                .latent
                .reparameterize_backward(&noise.context_eps[p.eps_index], &d_z);
            let (k_mu, k_lv) = p.enc.latent.kl_grad();
            axpy(w * cfg.kl_weight, &k_mu, &mut d_mu);
            axpy(w * cfg.kl_weight, &k_lv, &mut d_lv);
            axpy(
                1.0,
                &d_stack[p.eps_index * d..(p.eps_index + 1) * d],
                &mut d_mu,
            );
            self.sentence.encode_backward(&p.enc, &d_mu, &d_lv)?;
        }
        Ok(loss)
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v = self.sentence.params_mut();
        v.extend(self.task.params_mut());
        v
    }

    pub fn params(&self) -> Vec<&Param> {
        let mut v = self.sentence.params();
        v.extend(self.task.params());
        v
    }

    pub fn zero_grad(&mut self) {
        self.params_mut().into_iter().for_each(Param::zero_grad);
    }
}

/// Fixed inputs for checking [`TwoLevelModel::instance_loss`] gradients.
#[derive(Debug, Clone)]
pub struct BlmExample {
    pub context: Vec<Vec<f64>>,
    pub candidates: Vec<Vec<f64>>,
    pub correct: usize,
    pub noise: TwoLevelNoise,
    pub loss: LossConfig,
}

impl BlmExample {
    fn run(&self, model: &mut TwoLevelModel, scale: Option<f64>) -> Result<f64> {
        let ctx: Vec<&[f64]> = self.context.iter().map(Vec::as_slice).collect();
        let cands: Vec<&[f64]> = self.candidates.iter().map(Vec::as_slice).collect();
        Ok(model
            .instance_loss(&ctx, &cands, self.correct, &self.noise, self.loss, scale)?
            .total())
    }
}

impl GradCheckable for TwoLevelModel {
    type Input = BlmExample;

    fn params_mut(&mut self) -> Vec<&mut Param> {
        TwoLevelModel::params_mut(self)
    }

    fn loss(&mut self, input: &BlmExample) -> Result<f64> {
        input.run(self, None)
    }

    fn loss_and_grad(&mut self, input: &BlmExample) -> Result<f64> {
        self.zero_grad();
        input.run(self, Some(1.0))
    }
}
