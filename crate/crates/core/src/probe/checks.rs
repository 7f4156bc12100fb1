//! Finite-difference checks over every differentiable building block and
//! both probes. Inputs of the single ops are wrapped as parameters so their
//! gradients are checked too.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::sentence_vae::{LossConfig, SentenceExample, SentenceVae, SentenceVaeSpec};
use super::two_level::{BlmExample, TwoLevelModel, TwoLevelNoise, TwoLevelSpec};
use crate::embedding::{GRID_COLS, GRID_ROWS};
use crate::error::Result;
use crate::generator::CONTEXT_LEN;
use crate::nn::latent::standard_normal;
use crate::nn::{
    cosine_with_grad, grad_check, maxmargin_with_grad, Conv2d, ConvSpec, ConvTranspose2d,
    GaussianLatent, GradCheckOptions, GradCheckReport, GradCheckable, Linear, MarginGrad, Param,
    Tensor, LATENT_DIM,
};

fn param(values: Vec<f64>) -> Param {
    let n = values.len();
    Param::new(Tensor::from_vec(&[n], values).expect("finite values"))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn add_into(p: &mut Param, g: &[f64]) {
    for (d, v) in p.grad.data_mut().iter_mut().zip(g) {
        *d += v;
    }
}

/// `r . layer(x)`
struct LinearCase {
    layer: Linear,
    x: Param,
    r: Vec<f64>,
}

impl GradCheckable for LinearCase {
    type Input = ();

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let [w, b] = self.layer.params_mut();
        vec![w, b, &mut self.x]
    }

    fn loss(&mut self, _: &()) -> Result<f64> {
        Ok(dot(&self.layer.forward(self.x.value.data())?, &self.r))
    }

    fn loss_and_grad(&mut self, input: &()) -> Result<f64> {
        self.params_mut().into_iter().for_each(Param::zero_grad);
        let gx = self.layer.backward(self.x.value.data(), &self.r)?;
        add_into(&mut self.x, &gx);
        self.loss(input)
    }
}

/// `r . conv(x)` over a 32x24 plane.
struct ConvCase {
    conv: Conv2d,
    x: Param,
    r: Vec<f64>,
}

impl GradCheckable for ConvCase {
    type Input = ();

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let [w, b] = self.conv.params_mut();
        vec![w, b, &mut self.x]
    }

    fn loss(&mut self, _: &()) -> Result<f64> {
        Ok(dot(
            &self
                .conv
                .forward(self.x.value.data(), GRID_ROWS, GRID_COLS)?,
            &self.r,
        ))
    }

    fn loss_and_grad(&mut self, input: &()) -> Result<f64> {
        self.params_mut().into_iter().for_each(Param::zero_grad);
        let x = self.x.value.data().to_vec();
        let gx = self
            .conv
            .backward(&x, GRID_ROWS, GRID_COLS, &self.r, true)?
            .expect("input gradient requested");
        add_into(&mut self.x, &gx);
        self.loss(input)
    }
}

/// `r . deconv(x)` back onto a 32x24 plane.
struct DeconvCase {
    deconv: ConvTranspose2d,
    x: Param,
    r: Vec<f64>,
}

impl GradCheckable for DeconvCase {
    type Input = ();

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let [w, b] = self.deconv.params_mut();
        vec![w, b, &mut self.x]
    }

    fn loss(&mut self, _: &()) -> Result<f64> {
        Ok(dot(
            &self
                .deconv
                .forward(self.x.value.data(), GRID_ROWS, GRID_COLS)?,
            &self.r,
        ))
    }

    fn loss_and_grad(&mut self, input: &()) -> Result<f64> {
        self.params_mut().into_iter().for_each(Param::zero_grad);
        let x = self.x.value.data().to_vec();
        let gx = self.deconv.backward(&x, GRID_ROWS, GRID_COLS, &self.r)?;
        add_into(&mut self.x, &gx);
        self.loss(input)
    }
}

/// `r . (mu + exp(logvar / 2) * eps) + KL`, with one raw log-variance
/// below the clamp.
struct LatentCase {
    mu: Param,
    raw_logvar: Param,
    eps: Vec<f64>,
    r: Vec<f64>,
}

impl GradCheckable for LatentCase {
    type Input = ();

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.mu, &mut self.raw_logvar]
    }

    fn loss(&mut self, _: &()) -> Result<f64> {
        let (lat, _) =
            GaussianLatent::from_raw(self.mu.value.data().to_vec(), self.raw_logvar.value.data())?;
        Ok(dot(&lat.reparameterize(&self.eps), &self.r) + lat.kl())
    }

    fn loss_and_grad(&mut self, input: &()) -> Result<f64> {
        self.mu.zero_grad();
        self.raw_logvar.zero_grad();
        let (lat, mask) =
            GaussianLatent::from_raw(self.mu.value.data().to_vec(), self.raw_logvar.value.data())?;
        let (dmu, dlv) = lat.reparameterize_backward(&self.eps, &self.r);
        let (kmu, klv) = lat.kl_grad();
        let gmu: Vec<f64> = dmu.iter().zip(&kmu).map(|(a, b)| a + b).collect();
        let glv: Vec<f64> = dlv
            .iter()
            .zip(&klv)
            .zip(&mask)
            .map(|((a, b), &live)| if live { a + b } else { 0.0 })
            .collect();
        add_into(&mut self.mu, &gmu);
        add_into(&mut self.raw_logvar, &glv);
        self.loss(input)
    }
}

struct CosineCase {
    a: Param,
    b: Param,
}

impl GradCheckable for CosineCase {
    type Input = ();

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.a, &mut self.b]
    }

    fn loss(&mut self, _: &()) -> Result<f64> {
        Ok(cosine_with_grad(self.a.value.data(), self.b.value.data())?.0)
    }

    fn loss_and_grad(&mut self, _: &()) -> Result<f64> {
        self.a.zero_grad();
        self.b.zero_grad();
        let (c, da, db) = cosine_with_grad(self.a.value.data(), self.b.value.data())?;
        add_into(&mut self.a, &da);
        add_into(&mut self.b, &db);
        Ok(c)
    }
}

/// Max-margin loss with one negative opposite the output, so active and
/// inactive hinges are both present.
struct MarginCase {
    out: Param,
    positive: Param,
    negatives: Vec<Param>,
    margin: f64,
}

impl MarginCase {
    fn compute(&self) -> Result<MarginGrad> {
        let negs: Vec<&[f64]> = self.negatives.iter().map(|p| p.value.data()).collect();
        maxmargin_with_grad(
            self.out.value.data(),
            self.positive.value.data(),
            &negs,
            self.margin,
        )
    }
}

impl GradCheckable for MarginCase {
    type Input = ();

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v = vec![&mut self.out, &mut self.positive];
        v.extend(self.negatives.iter_mut());
        v
    }

    fn loss(&mut self, _: &()) -> Result<f64> {
        Ok(self.compute()?.loss)
    }

    fn loss_and_grad(&mut self, _: &()) -> Result<f64> {
        self.params_mut().into_iter().for_each(Param::zero_grad);
        let g = self.compute()?;
        add_into(&mut self.out, &g.d_out);
        add_into(&mut self.positive, &g.d_positive);
        for (p, d) in self.negatives.iter_mut().zip(&g.d_negatives) {
            add_into(p, d);
        }
        Ok(g.loss)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteOptions {
    /// Conv channels of the probes under test.
    pub channels: usize,
    /// Entries checked per tensor of the probes; the single ops are checked
    /// exhaustively except for the conv kernels.
    pub max_per_tensor: Option<usize>,
    pub eps: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            channels: 2,
            max_per_tensor: Some(20),
            eps: crate::nn::gradcheck::DEFAULT_EPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub seed: u64,
    pub report: GradCheckReport,
}

fn run<M: GradCheckable<Input = ()>>(
    name: &'static str,
    seed: u64,
    mut case: M,
    opts: GradCheckOptions,
) -> Result<CheckOutcome> {
    Ok(CheckOutcome {
        name,
        seed,
        report: grad_check(&mut case, &(), opts)?,
    })
}

/// Checks every op and both probes with inputs drawn from `seed`.
pub fn gradient_suite(seed: u64, opts: SuiteOptions) -> Result<Vec<CheckOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let full = GradCheckOptions {
        eps: opts.eps,
        max_per_tensor: None,
        seed,
    };
    let sampled = GradCheckOptions {
        max_per_tensor: opts.max_per_tensor,
        ..full
    };
    let spec = ConvSpec::with_channels(opts.channels);
    let (oh, ow) = spec.output_dims(GRID_ROWS, GRID_COLS)?;
    let plane = GRID_ROWS * GRID_COLS;
    let mut out = Vec::new();

    out.push(run(
        "linear",
        seed,
        LinearCase {
            layer: Linear::new(7, 4, &mut rng),
            x: param(standard_normal(7, &mut rng)),
            r: standard_normal(4, &mut rng),
        },
        full,
    )?);
    out.push(run(
        "conv2d",
        seed,
        ConvCase {
            conv: Conv2d::new(spec, &mut rng),
            x: param(standard_normal(plane, &mut rng)),
            r: standard_normal(spec.out_channels * oh * ow, &mut rng),
        },
        sampled,
    )?);
    out.push(run(
        "conv_transpose2d",
        seed,
        DeconvCase {
            deconv: ConvTranspose2d::new(spec, &mut rng),
            x: param(standard_normal(spec.out_channels * oh * ow, &mut rng)),
            r: standard_normal(plane, &mut rng),
        },
        sampled,
    )?);
    let mut raw = standard_normal(LATENT_DIM, &mut rng);
    raw[0] = -40.0;
    out.push(run(
        "gaussian_latent",
        seed,
        LatentCase {
            mu: param(standard_normal(LATENT_DIM, &mut rng)),
            raw_logvar: param(raw),
            eps: standard_normal(LATENT_DIM, &mut rng),
            r: standard_normal(LATENT_DIM, &mut rng),
        },
        full,
    )?);
    out.push(run(
        "cosine",
        seed,
        CosineCase {
            a: param(standard_normal(9, &mut rng)),
            b: param(standard_normal(9, &mut rng)),
        },
        full,
    )?);
    let o = standard_normal(9, &mut rng);
    let mut negatives: Vec<Param> = (0..4)
        .map(|_| param(standard_normal(9, &mut rng)))
        .collect();
    negatives[0] = param(o.iter().map(|v| -v + 0.05 * rng.random::<f64>()).collect());
    out.push(run(
        "maxmargin",
        seed,
        MarginCase {
            out: param(o),
            positive: param(standard_normal(9, &mut rng)),
            negatives,
            margin: 0.5,
        },
        full,
    )?);

    let mut vae = SentenceVae::new(SentenceVaeSpec::with_channels(opts.channels), &mut rng)?;
    let example = SentenceExample {
        input: standard_normal(plane, &mut rng),
        positive: standard_normal(plane, &mut rng),
        negatives: (0..7).map(|_| standard_normal(plane, &mut rng)).collect(),
        eps: Some(standard_normal(LATENT_DIM, &mut rng)),
        loss: LossConfig::default(),
    };
    out.push(CheckOutcome {
        name: "sentence_vae",
        seed,
        report: grad_check(&mut vae, &example, sampled)?,
    });

    let tspec = TwoLevelSpec::with_channels(opts.channels);
    let mut two = TwoLevelModel::new(tspec, &mut rng)?;
    let example = BlmExample {
        context: (0..CONTEXT_LEN)
            .map(|_| standard_normal(plane, &mut rng))
            .collect(),
        candidates: (0..8).map(|_| standard_normal(plane, &mut rng)).collect(),
        correct: rng.random_range(0..8),
        noise: TwoLevelNoise::sample(&tspec, 8, CONTEXT_LEN - 1, &mut rng),
        loss: LossConfig::default(),
    };
    out.push(CheckOutcome {
        name: "two_level",
        seed,
        report: grad_check(&mut two, &example, sampled)?,
    });
    Ok(out)
}
