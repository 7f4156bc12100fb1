use rand::Rng;

use super::tensor::{axpy, dot, Param, Tensor};
use crate::error::{Error, Result};

/// `y = x W + b` with `W` stored as `(in, out)`.
pub fn linear_forward(x: &[f64], weight: &Tensor, bias: &Tensor) -> Result<Vec<f64>> {
    let [n_in, n_out] = weight.shape() else {
        return Err(Error::shape(format!(
            "linear weight must be 2-d, got {:?}",
            weight.shape()
        )));
    };
    if x.len() != *n_in || bias.shape() != [*n_out] {
        return Err(Error::shape(format!(
            "linear {n_in}->{n_out} got input of {} and bias {:?}",
            x.len(),
            bias.shape()
        )));
    }
    let mut y = bias.data().to_vec();
    for (i, &xi) in x.iter().enumerate() {
        axpy(xi, &weight.data()[i * n_out..(i + 1) * n_out], &mut y);
    }
    Ok(y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Param,
    pub bias: Param,
}

impl Linear {
    pub fn new<R: Rng + ?Sized>(n_in: usize, n_out: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (n_in as f64).sqrt();
        Linear {
            weight: Param::new(Tensor::uniform(&[n_in, n_out], bound, rng)),
            bias: Param::new(Tensor::uniform(&[n_out], bound, rng)),
        }
    }

    pub fn n_in(&self) -> usize {
        self.weight.value.shape()[0]
    }

    pub fn n_out(&self) -> usize {
        self.weight.value.shape()[1]
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        linear_forward(x, &self.weight.value, &self.bias.value)
    }

    /// Accumulates parameter gradients and returns `dL/dx`.
    pub fn backward(&mut self, x: &[f64], grad_y: &[f64]) -> Result<Vec<f64>> {
        let (n_in, n_out) = (self.n_in(), self.n_out());
        if x.len() != n_in || grad_y.len() != n_out {
            return Err(Error::shape("linear backward got mismatched sizes"));
        }
        axpy(1.0, grad_y, self.bias.grad.data_mut());
        let wg = self.weight.grad.data_mut();
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                axpy(xi, grad_y, &mut wg[i * n_out..(i + 1) * n_out]);
            }
        }
        let w = self.weight.value.data();
        Ok((0..n_in)
            .map(|i| dot(&w[i * n_out..(i + 1) * n_out], grad_y))
            .collect())
    }

    pub fn params_mut(&mut self) -> [&mut Param; 2] {
        [&mut self.weight, &mut self.bias]
    }

    pub fn params(&self) -> [&Param; 2] {
        [&self.weight, &self.bias]
    }
}
