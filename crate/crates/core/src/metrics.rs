//! Accuracy and goodness-of-fit metrics.

use crate::error::{GlrrError, Result};

fn check_pair(pred: &[f64], truth: &[f64], min_len: usize) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(GlrrError::invalid(format!(
            "length mismatch: {} predictions vs {} targets",
            pred.len(),
            truth.len()
        )));
    }
    if pred.len() < min_len {
        return Err(GlrrError::invalid(format!("need at least {min_len} values, got {}", pred.len())));
    }
    Ok(())
}

/// Root-mean-square error.
pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_pair(pred, truth, 1)?;
    let sse: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((sse / pred.len() as f64).sqrt())
}

/// Pearson sample correlation. Errors when either input is constant.
pub fn pearson_r(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_pair(pred, truth, 2)?;
    let n = pred.len() as f64;
    let mp = pred.iter().sum::<f64>() / n;
    let mt = truth.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (p, t) in pred.iter().zip(truth) {
        let (a, b) = (p - mp, t - mt);
        sxy += a * b;
        sxx += a * a;
        syy += b * b;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(GlrrError::UndefinedCorrelation(
            "one of the inputs is constant".into(),
        ));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(rmse(&[3.0, 4.0], &[0.0, 0.0]).unwrap(), 12.5f64.sqrt());
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
        assert!(rmse(&[], &[]).is_err());
    }

    #[test]
    fn pearson_examples() {
        let t = [0.1, 0.5, 0.2, 0.9];
        assert!((pearson_r(&t, &t).unwrap() - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = t.iter().map(|v| -v).collect();
        assert!((pearson_r(&neg, &t).unwrap() + 1.0).abs() < 1e-12);
        assert!(matches!(
            pearson_r(&[1.0, 1.0, 1.0], &[0.0, 1.0, 2.0]),
            Err(GlrrError::UndefinedCorrelation(_))
        ));
    }

    #[test]
    fn mean_std_basic() {
        assert_eq!(mean_std(&[2.0, 4.0]), (3.0, 1.0));
        assert_eq!(mean_std(&[5.0]), (5.0, 0.0));
    }
}
