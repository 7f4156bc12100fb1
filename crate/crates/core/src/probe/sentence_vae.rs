use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::{GRID_COLS, GRID_ROWS};
use crate::error::{Error, Result};
use crate::nn::gradcheck::GradCheckable;
use crate::nn::loss::maxmargin_with_grad;
use crate::nn::tensor::{axpy, ensure_finite};
use crate::nn::{Conv2d, ConvSpec, ConvTranspose2d, GaussianLatent, Linear, Param, LATENT_DIM};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SentenceVaeSpec {
    pub conv: ConvSpec,
    pub latent_dim: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Default for SentenceVaeSpec {
    fn default() -> Self {
        SentenceVaeSpec::with_channels(ConvSpec::default().out_channels)
    }
}

impl SentenceVaeSpec {
    pub fn with_channels(channels: usize) -> Self {
        SentenceVaeSpec {
            conv: ConvSpec::with_channels(channels),
            latent_dim: LATENT_DIM,
            rows: GRID_ROWS,
            cols: GRID_COLS,
        }
    }

    pub fn input_len(&self) -> usize {
        self.rows * self.cols
    }

    /// Flattened size of the conv feature map.
    pub fn hidden_len(&self) -> Result<usize> {
        let (oh, ow) = self.conv.output_dims(self.rows, self.cols)?;
        Ok(self.conv.out_channels * oh * ow)
    }
}

/// Loss knobs shared by both levels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossConfig {
    pub margin: f64,
    pub kl_weight: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            margin: 0.5,
            kl_weight: 0.01,
        }
    }
}

/// Conv encoder to a Gaussian latent, linear + transposed-conv decoder back
/// to the input grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceVae {
    pub spec: SentenceVaeSpec,
    pub conv: Conv2d,
    pub mu_head: Linear,
    pub logvar_head: Linear,
    pub dec_in: Linear,
    pub deconv: ConvTranspose2d,
}

#[derive(Debug, Clone)]
pub struct EncodeCache {
    pub input: Vec<f64>,
    hidden: Vec<f64>,
    pub latent: GaussianLatent,
    logvar_mask: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct DecodeCache {
    z: Vec<f64>,
    hidden: Vec<f64>,
    pub output: Vec<f64>,
}

impl SentenceVae {
    pub fn new<R: Rng + ?Sized>(spec: SentenceVaeSpec, rng: &mut R) -> Result<Self> {
        let hidden = spec.hidden_len()?;
        if spec.latent_dim == 0 {
            return Err(Error::config("latent dim must be positive"));
        }
        Ok(SentenceVae {
            spec,
            conv: Conv2d::new(spec.conv, rng),
            mu_head: Linear::new(hidden, spec.latent_dim, rng),
            logvar_head: Linear::new(hidden, spec.latent_dim, rng),
            dec_in: Linear::new(spec.latent_dim, hidden, rng),
            deconv: ConvTranspose2d::new(spec.conv, rng),
        })
    }

    pub fn encode(&self, x: &[f64]) -> Result<EncodeCache> {
        if x.len() != self.spec.input_len() {
            return Err(Error::shape(format!(
                "sentence encoder expects {} values, got {}",
                self.spec.input_len(),
                x.len()
            )));
        }
        let hidden = self.conv.forward(x, self.spec.rows, self.spec.cols)?;
        let mu = self.mu_head.forward(&hidden)?;
        let raw = self.logvar_head.forward(&hidden)?;
        ensure_finite(&mu, "latent mean")?;
        ensure_finite(&raw, "latent log-variance")?;
        let (latent, logvar_mask) = GaussianLatent::from_raw(mu, &raw)?;
        Ok(EncodeCache {
            input: x.to_vec(),
            hidden,
            latent,
            logvar_mask,
        })
    }

    /// Latent mean only; what prediction and latent dumps use.
    pub fn encode_mean(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.encode(x)?.latent.mu)
    }

    pub fn encode_backward(
        &mut self,
        cache: &EncodeCache,
        d_mu: &[f64],
        d_logvar: &[f64],
    ) -> Result<()> {
        let mut g_hidden = self.mu_head.backward(&cache.hidden, d_mu)?;
        let d_lv: Vec<f64> = d_logvar
            .iter()
            .zip(&cache.logvar_mask)
            .map(|(&g, &open)| if open { g } else { 0.0 })
            .collect();
        if d_lv.iter().any(|&g| g != 0.0) {
            let g2 = self.logvar_head.backward(&cache.hidden, &d_lv)?;
            axpy(1.0, &g2, &mut g_hidden);
        }
        self.conv.backward(
            &cache.input,
            self.spec.rows,
            self.spec.cols,
            &g_hidden,
            false,
        )?;
        Ok(())
    }

    pub fn decode(&self, z: &[f64]) -> Result<DecodeCache> {
        let hidden = self.dec_in.forward(z)?;
        let output = self
            .deconv
            .forward(&hidden, self.spec.rows, self.spec.cols)?;
        ensure_finite(&output, "decoder output")?;
        Ok(DecodeCache {
            z: z.to_vec(),
            hidden,
            output,
        })
    }

    /// Returns `dL/dz`.
    pub fn decode_backward(&mut self, cache: &DecodeCache, d_out: &[f64]) -> Result<Vec<f64>> {
        let g_hidden =
            self.deconv
                .backward(&cache.hidden, self.spec.rows, self.spec.cols, d_out)?;
        self.dec_in.backward(&cache.z, &g_hidden)
    }

    /// Decoded vector from the latent mean.
    pub fn reconstruct(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mu = self.encode_mean(x)?;
        Ok(self.decode(&mu)?.output)
    }

    /// Max-margin + weighted KL for one (input, positive, negatives) example.
    /// `eps = None` decodes the latent mean. Gradients accumulate when
    /// `scale` is given, multiplied by it.
    pub fn example_loss(
        &mut self,
        input: &[f64],
        positive: &[f64],
        negatives: &[&[f64]],
        eps: Option<&[f64]>,
        cfg: LossConfig,
        scale: Option<f64>,
    ) -> Result<f64> {
        let enc = self.encode(input)?;
        let z = match eps {
            Some(e) => enc.latent.reparameterize(e),
            None => enc.latent.mu.clone(),
        };
        let dec = self.decode(&z)?;
        let mg = maxmargin_with_grad(&dec.output, positive, negatives, cfg.margin)?;
        let loss = mg.loss + cfg.kl_weight * enc.latent.kl();
        if !loss.is_finite() {
            return Err(Error::numeric(format!("sentence loss is {loss}")));
        }
        if let Some(s) = scale {
            let d_out: Vec<f64> = mg.d_out.iter().map(|g| g * s).collect();
            let d_z = self.decode_backward(&dec, &d_out)?;
            let (mut d_mu, mut d_lv) = match eps {
                Some(e) => enc.latent.reparameterize_backward(e, &d_z),
                None => (d_z, vec![0.0; self.spec.latent_dim]),
            };
            let (k_mu, k_lv) = enc.latent.kl_grad();
            axpy(s * cfg.kl_weight, &k_mu, &mut d_mu);
            axpy(s * cfg.kl_weight, &k_lv, &mut d_lv);
            self.encode_backward(&enc, &d_mu, &d_lv)?;
        }
        Ok(loss)
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v = Vec::with_capacity(10);
        v.extend(self.conv.params_mut());
        v.extend(self.mu_head.params_mut());
        v.extend(self.logvar_head.params_mut());
        v.extend(self.dec_in.params_mut());
        v.extend(self.deconv.params_mut());
        v
    }

    pub fn params(&self) -> Vec<&Param> {
        let mut v = Vec::with_capacity(10);
        v.extend(self.conv.params());
        v.extend(self.mu_head.params());
        v.extend(self.logvar_head.params());
        v.extend(self.dec_in.params());
        v.extend(self.deconv.params());
        v
    }

    pub fn zero_grad(&mut self) {
        self.params_mut().into_iter().for_each(Param::zero_grad);
    }

    /// Replaces every parameter value, in [`Self::params`] order.
    pub(crate) fn load_values(
        &mut self,
        values: &mut impl Iterator<Item = crate::nn::Tensor>,
    ) -> Result<()> {
        for p in self.params_mut() {
            let t = values
                .next()
                .ok_or_else(|| Error::format("checkpoint has too few tensors"))?;
            if t.shape() != p.value.shape() {
                return Err(Error::format(format!(
                    "checkpoint tensor {:?} does not fit parameter {:?}",
                    t.shape(),
                    p.value.shape()
                )));
            }
            p.value = t;
        }
        Ok(())
    }
}

/// Fixed inputs for checking [`SentenceVae::example_loss`] gradients.
#[derive(Debug, Clone)]
pub struct SentenceExample {
    pub input: Vec<f64>,
    pub positive: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
    pub eps: Option<Vec<f64>>,
    pub loss: LossConfig,
}

impl SentenceExample {
    fn run(&self, model: &mut SentenceVae, scale: Option<f64>) -> Result<f64> {
        let negs: Vec<&[f64]> = self.negatives.iter().map(Vec::as_slice).collect();
        model.example_loss(
            &self.input,
            &self.positive,
            &negs,
            self.eps.as_deref(),
            self.loss,
            scale,
        )
    }
}

impl GradCheckable for SentenceVae {
    type Input = SentenceExample;

    fn params_mut(&mut self) -> Vec<&mut Param> {
        SentenceVae::params_mut(self)
    }

    fn loss(&mut self, input: &SentenceExample) -> Result<f64> {
        input.run(self, None)
    }

    fn loss_and_grad(&mut self, input: &SentenceExample) -> Result<f64> {
        self.zero_grad();
        input.run(self, Some(1.0))
    }
}
