use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Fraction of spectral energy at or below `threshold_hz`.
///
/// The mean is removed, then a direct O(n^2) DFT is taken. Each bin k is
/// assigned the folded frequency `min(k, n - k) * fs / n`, so negative
/// frequencies count with their positive mirror. A signal with no energy
/// after mean removal reports 1.0.
pub fn spectral_energy_fraction(signal: &[f64], sample_rate_hz: f64, threshold_hz: f64) -> Result<f64> {
    let n = signal.len();
    if n < 8 {
        return Err(Error::Preprocess(format!(
            "spectral analysis needs at least 8 samples, got {n}"
        )));
    }
    let nyquist = sample_rate_hz / 2.0;
    if threshold_hz >= nyquist {
        if threshold_hz > nyquist {
            log::warn!("threshold {threshold_hz} Hz is above Nyquist ({nyquist} Hz); all energy counted");
        }
        return Ok(1.0);
    }

    let mean = signal.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = signal.iter().map(|v| v - mean).collect();

    let mut total = 0.0;
    let mut below = 0.0;
    for k in 0..n {
        let (mut re, mut im) = (0.0, 0.0);
        for (t, &x) in centered.iter().enumerate() {
            // (k * t) mod n keeps the angle argument small and exact.
            let angle = -2.0 * PI * ((k * t) % n) as f64 / n as f64;
            re += x * angle.cos();
            im += x * angle.sin();
        }
        let energy = re * re + im * im;
        total += energy;
        let freq = k.min(n - k) as f64 * sample_rate_hz / n as f64;
        if freq <= threshold_hz {
            below += energy;
        }
    }
    if total == 0.0 {
        return Ok(1.0);
    }
    Ok(below / total)
}
