use crate::error::{Error, Result};

/// Central differences inside, one-sided first-order differences at the ends.
pub fn differentiate(signal: &[f64], dt: f64) -> Result<Vec<f64>> {
    let n = signal.len();
    if n < 3 {
        return Err(Error::Preprocess(format!(
            "differentiation needs at least 3 samples, got {n}"
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Preprocess(format!("dt must be positive, got {dt}")));
    }
    let mut d = Vec::with_capacity(n);
    d.push((signal[1] - signal[0]) / dt);
    d.extend(signal.windows(3).map(|w| (w[2] - w[0]) / (2.0 * dt)));
    d.push((signal[n - 1] - signal[n - 2]) / dt);
    Ok(d)
}
