use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const LATENT_DIM: usize = 5;
pub const LOGVAR_MIN: f64 = -30.0;
pub const LOGVAR_MAX: f64 = 10.0;

/// Diagonal Gaussian posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianLatent {
    pub mu: Vec<f64>,
    /// Already clamped to `[LOGVAR_MIN, LOGVAR_MAX]`.
    pub logvar: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatentMode {
    Sample,
    Mean,
}

impl GaussianLatent {
    /// Clamps raw log-variances. The returned mask marks entries that pass
    /// gradient (clamped entries get none).
    pub fn from_raw(mu: Vec<f64>, raw_logvar: &[f64]) -> Result<(Self, Vec<bool>)> {
        if mu.len() != raw_logvar.len() {
            return Err(Error::shape("mu and logvar differ in length"));
        }
        let mask = raw_logvar
            .iter()
            .map(|&v| (LOGVAR_MIN..=LOGVAR_MAX).contains(&v))
            .collect();
        let logvar = raw_logvar
            .iter()
            .map(|v| v.clamp(LOGVAR_MIN, LOGVAR_MAX))
            .collect();
        Ok((GaussianLatent { mu, logvar }, mask))
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// `z = mu + exp(logvar / 2) * eps`.
    pub fn reparameterize(&self, eps: &[f64]) -> Vec<f64> {
        self.mu
            .iter()
            .zip(&self.logvar)
            .zip(eps)
            .map(|((m, lv), e)| m + (0.5 * lv).exp() * e)
            .collect()
    }

    /// Maps `dL/dz` to `(dL/dmu, dL/dlogvar)` for a given `eps`.
    pub fn reparameterize_backward(&self, eps: &[f64], grad_z: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let d_logvar = self
            .logvar
            .iter()
            .zip(eps)
            .zip(grad_z)
            .map(|((lv, e), g)| g * 0.5 * (0.5 * lv).exp() * e)
            .collect();
        (grad_z.to_vec(), d_logvar)
    }

    /// `KL(N(mu, sigma^2) || N(0, I))`.
    pub fn kl(&self) -> f64 {
        self.mu
            .iter()
            .zip(&self.logvar)
            .map(|(m, lv)| 0.5 * (lv.exp() + m * m - 1.0 - lv))
            .sum()
    }

    /// `(dKL/dmu, dKL/dlogvar)`.
    pub fn kl_grad(&self) -> (Vec<f64>, Vec<f64>) {
        let d_mu = self.mu.clone();
        let d_lv = self
            .logvar
            .iter()
            .map(|lv| 0.5 * (lv.exp() - 1.0))
            .collect();
        (d_mu, d_lv)
    }
}

pub fn standard_normal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Draws `z` in sample mode, returns `mu` in mean mode.
pub fn sample_latent<R: Rng + ?Sized>(
    latent: &GaussianLatent,
    rng: &mut R,
    mode: LatentMode,
) -> Vec<f64> {
    match mode {
        LatentMode::Mean => latent.mu.clone(),
        LatentMode::Sample => latent.reparameterize(&standard_normal(latent.dim(), rng)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn latent(mu: Vec<f64>, lv: Vec<f64>) -> GaussianLatent {
        GaussianLatent::from_raw(mu, &lv).unwrap().0
    }

    #[test]
    fn tiny_variance_sample_is_the_mean() {
        let l = latent(vec![0.3, -1.0, 2.0, 0.0, 5.0], vec![-30.0; 5]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let z = sample_latent(&l, &mut rng, LatentMode::Sample);
        for (a, b) in z.iter().zip(&l.mu) {
            assert!((a - b).abs() < 1e-5);
        }
        assert_eq!(sample_latent(&l, &mut rng, LatentMode::Mean), l.mu);
    }

    #[test]
    fn sample_variance_matches_exp_logvar() {
        let l = latent(
            vec![0.0, 1.0, -1.0, 0.0, 0.0],
            vec![0.0, 1.0, -1.0, 2.0, -2.0],
        );
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        let mut sum = [0.0; 5];
        let mut sq = [0.0; 5];
        for _ in 0..n {
            let z = sample_latent(&l, &mut rng, LatentMode::Sample);
            for d in 0..5 {
                sum[d] += z[d];
                sq[d] += z[d] * z[d];
            }
        }
        for d in 0..5 {
            let mean = sum[d] / n as f64;
            let var = sq[d] / n as f64 - mean * mean;
            let want = l.logvar[d].exp();
            assert!((var - want).abs() / want < 0.03, "dim {d}: {var} vs {want}");
        }
    }

    #[test]
    fn logvar_is_clamped() {
        let (l, mask) = GaussianLatent::from_raw(vec![0.0; 3], &[-100.0, 0.0, 50.0]).unwrap();
        assert_eq!(l.logvar, vec![LOGVAR_MIN, 0.0, LOGVAR_MAX]);
        assert_eq!(mask, vec![false, true, false]);
    }

    #[test]
    fn kl_values() {
        assert_eq!(latent(vec![0.0; 5], vec![0.0; 5]).kl(), 0.0);
        let mut mu = vec![0.0; 5];
        mu[0] = 1.0;
        assert!((latent(mu, vec![0.0; 5]).kl() - 0.5).abs() < 1e-12);
        assert!(latent(vec![0.0; 5], vec![1.0, -1.0, 0.5, 0.0, 2.0]).kl() > 0.0);
    }
}
