//! Central finite-difference gradient checks.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::tensor::Param;
use crate::error::Result;

pub const DEFAULT_EPS: f64 = 1e-5;
pub const DEFAULT_TOLERANCE: f64 = 1e-4;
/// Denominator floor so near-zero gradients compare absolutely.
pub const REL_FLOOR: f64 = 1e-6;

/// Something with parameters and a scalar loss over a fixed input.
pub trait GradCheckable {
    type Input;

    fn params_mut(&mut self) -> Vec<&mut Param>;

    fn loss(&mut self, input: &Self::Input) -> Result<f64>;

    /// Zeroes gradients, then fills them for `input`.
    fn loss_and_grad(&mut self, input: &Self::Input) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckOptions {
    pub eps: f64,
    /// Check at most this many entries per tensor, picked at random.
    pub max_per_tensor: Option<usize>,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            eps: DEFAULT_EPS,
            max_per_tensor: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub checked: usize,
    pub worst_tensor: usize,
    pub worst_index: usize,
    pub worst_analytic: f64,
    pub worst_numeric: f64,
}

impl GradCheckReport {
    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_rel_error < tolerance
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

fn nudge<M: GradCheckable>(module: &mut M, tensor: usize, i: usize, delta: f64) {
    module.params_mut()[tensor].value.data_mut()[i] += delta;
}

pub fn grad_check<M: GradCheckable>(
    module: &mut M,
    input: &M::Input,
    opts: GradCheckOptions,
) -> Result<GradCheckReport> {
    module.loss_and_grad(input)?;
    let analytic: Vec<Vec<f64>> = module
        .params_mut()
        .iter()
        .map(|p| p.grad.data().to_vec())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        checked: 0,
        worst_tensor: 0,
        worst_index: 0,
        worst_analytic: 0.0,
        worst_numeric: 0.0,
    };
    for (t, grads) in analytic.iter().enumerate() {
        let indices: Vec<usize> = match opts.max_per_tensor {
            Some(k) if k < grads.len() => {
                let mut v = index::sample(&mut rng, grads.len(), k).into_vec();
                v.sort_unstable();
                v
            }
            _ => (0..grads.len()).collect(),
        };
        for i in indices {
            let original = module.params_mut()[t].value.data()[i];
            nudge(module, t, i, opts.eps);
            let plus = module.loss(input)?;
            module.params_mut()[t].value.data_mut()[i] = original - opts.eps;
            let minus = module.loss(input)?;
            module.params_mut()[t].value.data_mut()[i] = original;
            let numeric = (plus - minus) / (2.0 * opts.eps);
            let err = relative_error(grads[i], numeric);
            report.checked += 1;
            if err > report.max_rel_error || report.checked == 1 {
                report.max_rel_error = err;
                report.worst_tensor = t;
                report.worst_index = i;
                report.worst_analytic = grads[i];
                report.worst_numeric = numeric;
            }
        }
    }
    Ok(report)
}
