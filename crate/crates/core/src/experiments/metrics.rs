use crate::error::{Error, Result};

/// Share of trials where the chosen index is the correct one.
///
/// Each trial has one correct candidate and one choice, so micro precision,
/// recall and accuracy coincide; reports call this value F1.
pub fn compute_f1(predictions: &[(usize, usize)]) -> Result<f64> {
    if predictions.is_empty() {
        return Err(Error::config("no predictions to score"));
    }
    let hits = predictions
        .iter()
        .filter(|(chosen, correct)| chosen == correct)
        .count();
    Ok(hits as f64 / predictions.len() as f64)
}

/// Mean and population standard deviation.
pub fn aggregate(values: &[f64]) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::config("no run scores to aggregate"));
    }
    if values.iter().all(|v| *v == values[0]) {
        return Ok((values[0], 0.0));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok((mean, var.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f1_cases() {
        assert_eq!(compute_f1(&[(1, 1), (0, 0)]).unwrap(), 1.0);
        assert_eq!(compute_f1(&[(1, 0), (2, 0)]).unwrap(), 0.0);
        assert_eq!(compute_f1(&[(1, 1), (2, 0)]).unwrap(), 0.5);
        assert!(compute_f1(&[]).is_err());
    }

    #[test]
    fn aggregate_cases() {
        let (m, _) = aggregate(&[0.97, 0.98, 0.975]).unwrap();
        assert!((m - 0.975).abs() < 1e-12);
        assert_eq!(aggregate(&[0.4, 0.4, 0.4]).unwrap().1, 0.0);
        assert_eq!(aggregate(&[0.0, 1.0]).unwrap(), (0.5, 0.5));
        assert!(aggregate(&[]).is_err());
    }
}
