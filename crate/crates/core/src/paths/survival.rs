use crate::curves::SHIFT_TOLERANCE;
use crate::error::{Error, Result};

/// `S_{t_k} = exp(−∫₀^{t_k} λ)` with the trapezoidal rule.
///
/// Intensities in `[−SHIFT_TOLERANCE, 0)` come from a shift that is
/// nonnegative up to tabulation noise and are read as 0. Anything lower is
/// reported with `label`, which should identify the parameter set.
pub fn survival_path(lambda: &[f64], times: &[f64], label: &str) -> Result<Vec<f64>> {
    if lambda.len() != times.len() || times.is_empty() {
        return Err(Error::Shape(format!("{} intensities on {} nodes", lambda.len(), times.len())));
    }
    let mut out = Vec::with_capacity(times.len());
    let mut integral = 0.0;
    let mut prev = checked(lambda[0], times[0], label)?;
    out.push(1.0);
    for k in 1..times.len() {
        let cur = checked(lambda[k], times[k], label)?;
        integral += 0.5 * (times[k] - times[k - 1]) * (prev + cur);
        out.push((-integral).exp());
        prev = cur;
    }
    Ok(out)
}

fn checked(value: f64, t: f64, label: &str) -> Result<f64> {
    if value >= 0.0 {
        Ok(value)
    } else if value >= -SHIFT_TOLERANCE {
        Ok(0.0)
    } else {
        Err(Error::NegativeIntensity { t, value, params: label.to_string() })
    }
}
