use serde::{Deserialize, Serialize};

use super::tensor::Param;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Decoupled decay: every step also shrinks weights by `lr * weight_decay`.
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

fn check_grads(params: &[&mut Param]) -> Result<()> {
    for (k, p) in params.iter().enumerate() {
        if let Some(i) = p.grad.data().iter().position(|g| !g.is_finite()) {
            return Err(Error::numeric(format!(
                "non-finite gradient in parameter {k} at {i}"
            )));
        }
    }
    Ok(())
}

impl Adam {
    pub fn new(config: AdamConfig) -> Self {
        Adam {
            config,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One update from the accumulated gradients. The parameter list must
    /// keep the same order and shapes across calls.
    pub fn step(&mut self, params: &mut [&mut Param]) -> Result<()> {
        check_grads(params)?;
        if self.m.is_empty() {
            self.m = params.iter().map(|p| vec![0.0; p.len()]).collect();
            self.v = self.m.clone();
        }
        if self.m.len() != params.len()
            || self
                .m
                .iter()
                .zip(params.iter())
                .any(|(m, p)| m.len() != p.len())
        {
            return Err(Error::shape(
                "parameter list changed between optimizer steps",
            ));
        }
        self.step += 1;
        let c = self.config;
        let bc1 = 1.0 - c.beta1.powi(self.step as i32);
        let bc2 = 1.0 - c.beta2.powi(self.step as i32);
        for (k, p) in params.iter_mut().enumerate() {
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            let grad = p.grad.data().to_vec();
            for (i, (w, g)) in p.value.data_mut().iter_mut().zip(grad).enumerate() {
                m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
                v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                *w -= c.lr * (m_hat / (v_hat.sqrt() + c.eps) + c.weight_decay * *w);
            }
        }
        Ok(())
    }
}

/// Plain gradient descent.
pub fn sgd_step(params: &mut [&mut Param], lr: f64) -> Result<()> {
    check_grads(params)?;
    for p in params.iter_mut() {
        let grad = p.grad.data().to_vec();
        for (w, g) in p.value.data_mut().iter_mut().zip(grad) {
            *w -= lr * g;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::tensor::Tensor;

    #[test]
    fn zero_gradient_leaves_params() {
        let mut p = Param::new(Tensor::from_vec(&[3], vec![1.0, -2.0, 0.5]).unwrap());
        let before = p.value.clone();
        let mut opt = Adam::new(AdamConfig::default());
        for _ in 0..5 {
            opt.step(&mut [&mut p]).unwrap();
        }
        assert_eq!(p.value, before);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = Param::new(Tensor::from_vec(&[2], vec![1.0, 1.0]).unwrap());
        p.grad.data_mut().copy_from_slice(&[3.0, -0.01]);
        let mut opt = Adam::new(AdamConfig::default());
        opt.step(&mut [&mut p]).unwrap();
        assert!((p.value.data()[0] - (1.0 - 1e-3)).abs() < 1e-9);
        assert!((p.value.data()[1] - (1.0 + 1e-3)).abs() < 1e-6);
    }

    #[test]
    fn nan_gradient_is_an_error() {
        let mut p = Param::new(Tensor::zeros(&[2]));
        p.grad.data_mut()[1] = f64::NAN;
        assert!(Adam::new(AdamConfig::default())
            .step(&mut [&mut p])
            .unwrap_err()
            .is_numeric());
        assert!(sgd_step(&mut [&mut p], 0.1).is_err());
    }
}
