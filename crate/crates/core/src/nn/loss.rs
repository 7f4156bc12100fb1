use super::tensor::{dot, ensure_finite};
use crate::error::{Error, Result};

/// Norms below this make cosine undefined.
pub const NORM_EPS: f64 = 1e-12;

fn check_pair(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::shape(format!(
            "cosine of vectors with lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    ensure_finite(a, "cosine input")?;
    ensure_finite(b, "cosine input")?;
    let (na, nb) = (dot(a, a).sqrt(), dot(b, b).sqrt());
    if na < NORM_EPS || nb < NORM_EPS {
        return Err(Error::numeric("cosine similarity of a zero vector"));
    }
    Ok((na, nb))
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    let (na, nb) = check_pair(a, b)?;
    Ok(dot(a, b) / (na * nb))
}

/// Cosine with gradients for both arguments.
pub fn cosine_with_grad(a: &[f64], b: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let (na, nb) = check_pair(a, b)?;
    let cos = dot(a, b) / (na * nb);
    let da = a
        .iter()
        .zip(b)
        .map(|(x, y)| y / (na * nb) - cos * x / (na * na))
        .collect();
    let db = a
        .iter()
        .zip(b)
        .map(|(x, y)| x / (na * nb) - cos * y / (nb * nb))
        .collect();
    Ok((cos, da, db))
}

fn check_negatives(negatives: &[&[f64]]) -> Result<f64> {
    if negatives.is_empty() {
        return Err(Error::shape("max-margin loss needs at least one negative"));
    }
    Ok(1.0 / negatives.len() as f64)
}

/// `mean_n max(0, margin - cos(out, pos) + cos(out, neg_n))`.
pub fn maxmargin_loss(
    out: &[f64],
    positive: &[f64],
    negatives: &[&[f64]],
    margin: f64,
) -> Result<f64> {
    let scale = check_negatives(negatives)?;
    let pos = cosine_similarity(out, positive)?;
    let mut loss = 0.0;
    for neg in negatives {
        loss += (margin - pos + cosine_similarity(out, neg)?).max(0.0);
    }
    Ok(loss * scale)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginGrad {
    pub loss: f64,
    pub d_out: Vec<f64>,
    pub d_positive: Vec<f64>,
    pub d_negatives: Vec<Vec<f64>>,
}

/// Max-margin loss with gradients for the output and every target.
/// Hinges exactly at zero count as inactive.
pub fn maxmargin_with_grad(
    out: &[f64],
    positive: &[f64],
    negatives: &[&[f64]],
    margin: f64,
) -> Result<MarginGrad> {
    let scale = check_negatives(negatives)?;
    let (pos, d_out_pos, d_pos) = cosine_with_grad(out, positive)?;
    let mut g = MarginGrad {
        loss: 0.0,
        d_out: vec![0.0; out.len()],
        d_positive: vec![0.0; positive.len()],
        d_negatives: Vec::with_capacity(negatives.len()),
    };
    for neg in negatives {
        let (c, d_out_neg, d_neg) = cosine_with_grad(out, neg)?;
        let hinge = margin - pos + c;
        if hinge > 0.0 {
            g.loss += hinge * scale;
            for i in 0..out.len() {
                g.d_out[i] += scale * (d_out_neg[i] - d_out_pos[i]);
                g.d_positive[i] -= scale * d_pos[i];
            }
            g.d_negatives
                .push(d_neg.into_iter().map(|d| d * scale).collect());
        } else {
            g.d_negatives.push(vec![0.0; neg.len()]);
        }
    }
    Ok(g)
}
