use crate::error::{Error, Result};

/// Mean squared error `(1/N) * sum (pred_i - target_i)^2`.
pub fn mse(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.is_empty() || target.is_empty() {
        return Err(Error::Empty(1));
    }
    if pred.len() != target.len() {
        return Err(Error::ShapeMismatch {
            name: "mse".into(),
            expected: target.len(),
            actual: pred.len(),
        });
    }
    let n = pred.len() as f64;
    Ok(pred
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / n)
}

/// Coefficient of determination `1 - SS_res / SS_tot`, with `SS_tot` taken
/// about the target mean. Undefined (error) for constant targets.
pub fn r_squared(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.len() < 2 || target.len() < 2 {
        return Err(Error::Empty(2));
    }
    if pred.len() != target.len() {
        return Err(Error::ShapeMismatch {
            name: "r_squared".into(),
            expected: target.len(),
            actual: pred.len(),
        });
    }
    let mean = target.iter().sum::<f64>() / target.len() as f64;
    let ss_tot: f64 = target.iter().map(|t| (t - mean) * (t - mean)).sum();
    if ss_tot == 0.0 {
        return Err(Error::ConstantTarget);
    }
    let ss_res: f64 = pred
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}
