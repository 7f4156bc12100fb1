//! Single-input-channel valid convolution and its transpose.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tensor::{axpy, dot, Param, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub stride: usize,
    pub padding: usize,
}

impl Default for ConvSpec {
    fn default() -> Self {
        ConvSpec {
            kernel_h: 15,
            kernel_w: 15,
            in_channels: 1,
            out_channels: 8,
            stride: 1,
            padding: 0,
        }
    }
}

impl ConvSpec {
    pub fn with_channels(out_channels: usize) -> Self {
        ConvSpec {
            out_channels,
            ..ConvSpec::default()
        }
    }

    /// Output `(rows, cols)` for an input of `(in_h, in_w)`.
    pub fn output_dims(&self, in_h: usize, in_w: usize) -> Result<(usize, usize)> {
        if self.in_channels != 1 || self.stride != 1 || self.padding != 0 {
            return Err(Error::config(
                "only single-channel, stride-1, unpadded convolutions are supported",
            ));
        }
        if self.out_channels == 0 || self.kernel_h == 0 || self.kernel_w == 0 {
            return Err(Error::config("kernel and channel sizes must be positive"));
        }
        if self.kernel_h > in_h || self.kernel_w > in_w {
            return Err(Error::shape(format!(
                "{}x{} kernel does not fit a {in_h}x{in_w} input",
                self.kernel_h, self.kernel_w
            )));
        }
        Ok((in_h - self.kernel_h + 1, in_w - self.kernel_w + 1))
    }

    fn kernel_len(&self) -> usize {
        self.kernel_h * self.kernel_w
    }
}

/// Valid cross-correlation: `(1, H, W)` to `(C, H-kh+1, W-kw+1)`.
pub fn conv2d_forward(
    input: &Tensor,
    spec: &ConvSpec,
    weights: &Tensor,
    bias: &Tensor,
) -> Result<Tensor> {
    let [1, h, w] = input.shape() else {
        return Err(Error::shape(format!(
            "conv input must be (1, H, W), got {:?}",
            input.shape()
        )));
    };
    let (oh, ow) = spec.output_dims(*h, *w)?;
    if weights.shape() != [spec.out_channels, spec.kernel_h, spec.kernel_w]
        || bias.shape() != [spec.out_channels]
    {
        return Err(Error::shape("conv weights/bias do not match the spec"));
    }
    let mut out = Tensor::zeros(&[spec.out_channels, oh, ow]);
    conv_forward_raw(
        spec,
        *w,
        oh,
        ow,
        input.data(),
        weights.data(),
        bias.data(),
        out.data_mut(),
    );
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn conv_forward_raw(
    spec: &ConvSpec,
    w: usize,
    oh: usize,
    ow: usize,
    x: &[f64],
    weight: &[f64],
    bias: &[f64],
    out: &mut [f64],
) {
    let (kh, kw) = (spec.kernel_h, spec.kernel_w);
    for c in 0..spec.out_channels {
        let plane = &mut out[c * oh * ow..(c + 1) * oh * ow];
        plane.fill(bias[c]);
        let kernel = &weight[c * kh * kw..(c + 1) * kh * kw];
        for ki in 0..kh {
            for kj in 0..kw {
                let wv = kernel[ki * kw + kj];
                for i in 0..oh {
                    let start = (i + ki) * w + kj;
                    axpy(wv, &x[start..start + ow], &mut plane[i * ow..(i + 1) * ow]);
                }
            }
        }
    }
}

/// Correlates the `(oh, ow)` plane `g` against the `(h, w)` plane `x`:
/// `acc[ki, kj] += sum_ij g[i, j] * x[i + ki, j + kj]`.
fn correlate_accumulate(
    g: &[f64],
    x: &[f64],
    w: usize,
    oh: usize,
    ow: usize,
    kh: usize,
    kw: usize,
    acc: &mut [f64],
) {
    for ki in 0..kh {
        for kj in 0..kw {
            let mut s = 0.0;
            for i in 0..oh {
                let start = (i + ki) * w + kj;
                s += dot(&g[i * ow..(i + 1) * ow], &x[start..start + ow]);
            }
            acc[ki * kw + kj] += s;
        }
    }
}

/// Full convolution of the `(oh, ow)` plane `g` with one kernel into the
/// `(h, w)` plane `out`: `out[i + ki, j + kj] += g[i, j] * k[ki, kj]`.
fn scatter_accumulate(
    g: &[f64],
    kernel: &[f64],
    w: usize,
    oh: usize,
    ow: usize,
    kh: usize,
    kw: usize,
    out: &mut [f64],
) {
    for ki in 0..kh {
        for kj in 0..kw {
            let kv = kernel[ki * kw + kj];
            for i in 0..oh {
                let start = (i + ki) * w + kj;
                axpy(kv, &g[i * ow..(i + 1) * ow], &mut out[start..start + ow]);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d {
    pub spec: ConvSpec,
    pub weight: Param,
    pub bias: Param,
}

impl Conv2d {
    pub fn new<R: Rng + ?Sized>(spec: ConvSpec, rng: &mut R) -> Self {
        let bound = 1.0 / (spec.kernel_len() as f64).sqrt();
        Conv2d {
            spec,
            weight: Param::new(Tensor::uniform(
                &[spec.out_channels, spec.kernel_h, spec.kernel_w],
                bound,
                rng,
            )),
            bias: Param::new(Tensor::uniform(&[spec.out_channels], bound, rng)),
        }
    }

    /// `x` is a row-major `(h, w)` plane; returns `(C, oh, ow)` flattened.
    pub fn forward(&self, x: &[f64], h: usize, w: usize) -> Result<Vec<f64>> {
        if x.len() != h * w {
            return Err(Error::shape(format!(
                "conv input has {} values, expected {h}x{w}",
                x.len()
            )));
        }
        let (oh, ow) = self.spec.output_dims(h, w)?;
        let mut out = vec![0.0; self.spec.out_channels * oh * ow];
        conv_forward_raw(
            &self.spec,
            w,
            oh,
            ow,
            x,
            self.weight.value.data(),
            self.bias.value.data(),
            &mut out,
        );
        Ok(out)
    }

    /// Accumulates parameter gradients; returns the input gradient when asked.
    pub fn backward(
        &mut self,
        x: &[f64],
        h: usize,
        w: usize,
        grad_out: &[f64],
        want_input_grad: bool,
    ) -> Result<Option<Vec<f64>>> {
        let (oh, ow) = self.spec.output_dims(h, w)?;
        let (kh, kw) = (self.spec.kernel_h, self.spec.kernel_w);
        if grad_out.len() != self.spec.out_channels * oh * ow {
            return Err(Error::shape("conv output gradient has the wrong size"));
        }
        let mut grad_in = want_input_grad.then(|| vec![0.0; h * w]);
        for c in 0..self.spec.out_channels {
            let g = &grad_out[c * oh * ow..(c + 1) * oh * ow];
            self.bias.grad.data_mut()[c] += g.iter().sum::<f64>();
            let acc = &mut self.weight.grad.data_mut()[c * kh * kw..(c + 1) * kh * kw];
            correlate_accumulate(g, x, w, oh, ow, kh, kw, acc);
            if let Some(gi) = grad_in.as_mut() {
                let kernel = &self.weight.value.data()[c * kh * kw..(c + 1) * kh * kw];
                scatter_accumulate(g, kernel, w, oh, ow, kh, kw, gi);
            }
        }
        Ok(grad_in)
    }

    pub fn params_mut(&mut self) -> [&mut Param; 2] {
        [&mut self.weight, &mut self.bias]
    }

    pub fn params(&self) -> [&Param; 2] {
        [&self.weight, &self.bias]
    }
}

/// Adjoint of [`Conv2d`] with its own weights: `(C, oh, ow)` back to `(1, h, w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvTranspose2d {
    pub spec: ConvSpec,
    pub weight: Param,
    pub bias: Param,
}

impl ConvTranspose2d {
    pub fn new<R: Rng + ?Sized>(spec: ConvSpec, rng: &mut R) -> Self {
        let bound = 1.0 / ((spec.kernel_len() * spec.out_channels) as f64).sqrt();
        ConvTranspose2d {
            spec,
            weight: Param::new(Tensor::uniform(
                &[spec.out_channels, spec.kernel_h, spec.kernel_w],
                bound,
                rng,
            )),
            bias: Param::new(Tensor::uniform(&[1], bound, rng)),
        }
    }

    /// `x` is `(C, oh, ow)` flattened; `(h, w)` is the target plane size.
    pub fn forward(&self, x: &[f64], h: usize, w: usize) -> Result<Vec<f64>> {
        let (oh, ow) = self.spec.output_dims(h, w)?;
        let (kh, kw) = (self.spec.kernel_h, self.spec.kernel_w);
        if x.len() != self.spec.out_channels * oh * ow {
            return Err(Error::shape("transposed conv input has the wrong size"));
        }
        let mut out = vec![self.bias.value.data()[0]; h * w];
        for c in 0..self.spec.out_channels {
            let plane = &x[c * oh * ow..(c + 1) * oh * ow];
            let kernel = &self.weight.value.data()[c * kh * kw..(c + 1) * kh * kw];
            scatter_accumulate(plane, kernel, w, oh, ow, kh, kw, &mut out);
        }
        Ok(out)
    }

    /// Accumulates parameter gradients and returns the input gradient.
    pub fn backward(
        &mut self,
        x: &[f64],
        h: usize,
        w: usize,
        grad_out: &[f64],
    ) -> Result<Vec<f64>> {
        let (oh, ow) = self.spec.output_dims(h, w)?;
        let (kh, kw) = (self.spec.kernel_h, self.spec.kernel_w);
        if grad_out.len() != h * w {
            return Err(Error::shape(
                "transposed conv output gradient has the wrong size",
            ));
        }
        self.bias.grad.data_mut()[0] += grad_out.iter().sum::<f64>();
        let mut grad_in = vec![0.0; self.spec.out_channels * oh * ow];
        for c in 0..self.spec.out_channels {
            let plane = &x[c * oh * ow..(c + 1) * oh * ow];
            let acc = &mut self.weight.grad.data_mut()[c * kh * kw..(c + 1) * kh * kw];
            correlate_accumulate(plane, grad_out, w, oh, ow, kh, kw, acc);
            // d/dx[c, i, j] = sum_k w[c, k] * g[i + ki, j + kj], a valid correlation
            let kernel = &self.weight.value.data()[c * kh * kw..(c + 1) * kh * kw];
            let gi = &mut grad_in[c * oh * ow..(c + 1) * oh * ow];
            for ki in 0..kh {
                for kj in 0..kw {
                    let kv = kernel[ki * kw + kj];
                    for i in 0..oh {
                        let start = (i + ki) * w + kj;
                        axpy(
                            kv,
                            &grad_out[start..start + ow],
                            &mut gi[i * ow..(i + 1) * ow],
                        );
                    }
                }
            }
        }
        Ok(grad_in)
    }

    pub fn params_mut(&mut self) -> [&mut Param; 2] {
        [&mut self.weight, &mut self.bias]
    }

    pub fn params(&self) -> [&Param; 2] {
        [&self.weight, &self.bias]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Direct nested-loop definition of valid cross-correlation.
    fn naive_conv(
        x: &[f64],
        h: usize,
        w: usize,
        k: &[f64],
        b: &[f64],
        c: usize,
        kh: usize,
        kw: usize,
    ) -> Vec<f64> {
        let (oh, ow) = (h - kh + 1, w - kw + 1);
        let mut out = vec![0.0; c * oh * ow];
        for ch in 0..c {
            for i in 0..oh {
                for j in 0..ow {
                    let mut s = b[ch];
                    for a in 0..kh {
                        for bb in 0..kw {
                            s += k[ch * kh * kw + a * kw + bb] * x[(i + a) * w + j + bb];
                        }
                    }
                    out[ch * oh * ow + i * ow + j] = s;
                }
            }
        }
        out
    }

    #[test]
    fn output_is_18_by_10() {
        let spec = ConvSpec::with_channels(3);
        assert_eq!(spec.output_dims(32, 24).unwrap(), (18, 10));
        let input = Tensor::zeros(&[1, 32, 24]);
        let out = conv2d_forward(
            &input,
            &spec,
            &Tensor::zeros(&[3, 15, 15]),
            &Tensor::from_vec(&[3], vec![0.5, -1.0, 2.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(out.shape(), &[3, 18, 10]);
        // zero weights leave only the bias
        assert!(out.data()[..180].iter().all(|&v| v == 0.5));
        assert!(out.data()[360..].iter().all(|&v| v == 2.0));
        assert!(spec.output_dims(10, 24).is_err());
    }

    #[test]
    fn center_tap_passes_constants_through() {
        let spec = ConvSpec::with_channels(1);
        let mut k = vec![0.0; 225];
        k[7 * 15 + 7] = 1.0;
        let input = Tensor::from_vec(&[1, 32, 24], vec![3.25; 768]).unwrap();
        let out = conv2d_forward(
            &input,
            &spec,
            &Tensor::from_vec(&[1, 15, 15], k).unwrap(),
            &Tensor::zeros(&[1]),
        )
        .unwrap();
        assert!(out.data().iter().all(|&v| v == 3.25));
    }

    #[test]
    fn matches_naive_loops() {
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let spec = ConvSpec::with_channels(4);
            let conv = Conv2d::new(spec, &mut rng);
            let x = Tensor::uniform(&[32 * 24], 1.0, &mut rng);
            let fast = conv.forward(x.data(), 32, 24).unwrap();
            let slow = naive_conv(
                x.data(),
                32,
                24,
                conv.weight.value.data(),
                conv.bias.value.data(),
                4,
                15,
                15,
            );
            let err = fast
                .iter()
                .zip(&slow)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-10, "seed {seed}: {err}");
        }
    }

    #[test]
    fn transpose_is_the_adjoint() {
        // <conv(x), y> == <x, convT(y)> when both share weights and biases are zero
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let spec = ConvSpec::with_channels(2);
        let mut conv = Conv2d::new(spec, &mut rng);
        conv.bias.value.fill(0.0);
        let mut deconv = ConvTranspose2d::new(spec, &mut rng);
        deconv.weight.value = conv.weight.value.clone();
        deconv.bias.value.fill(0.0);
        let x = Tensor::uniform(&[768], 1.0, &mut rng);
        let y = Tensor::uniform(&[2 * 180], 1.0, &mut rng);
        let lhs = dot(&conv.forward(x.data(), 32, 24).unwrap(), y.data());
        let rhs = dot(x.data(), &deconv.forward(y.data(), 32, 24).unwrap());
        assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
    }
}
