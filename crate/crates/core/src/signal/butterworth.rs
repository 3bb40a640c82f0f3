//! Digital Butterworth low-pass design (bilinear transform with pre-warping)
//! and zero-phase forward-backward filtering.

use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const DEFAULT_ORDER: usize = 4;
pub const DEFAULT_CUTOFF_HZ: f64 = 6.0;

/// Second-order section in transposed direct form II, normalized so a0 = 1.
/// First-order sections have `b2 == a2 == 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    /// Complex response at normalized angular frequency `w` (radians/sample),
    /// returned as (re, im).
    fn response(&self, w: f64) -> (f64, f64) {
        // z^-1 = cos w - j sin w, z^-2 = cos 2w - j sin 2w
        let (c1, s1) = (w.cos(), -w.sin());
        let (c2, s2) = ((2.0 * w).cos(), -(2.0 * w).sin());
        let num = (self.b0 + self.b1 * c1 + self.b2 * c2, self.b1 * s1 + self.b2 * s2);
        let den = (1.0 + self.a1 * c1 + self.a2 * c2, self.a1 * s1 + self.a2 * s2);
        let d = den.0 * den.0 + den.1 * den.1;
        (
            (num.0 * den.0 + num.1 * den.1) / d,
            (num.1 * den.0 - num.0 * den.1) / d,
        )
    }

    fn dc_gain(&self) -> f64 {
        (self.b0 + self.b1 + self.b2) / (1.0 + self.a1 + self.a2)
    }

    /// Largest pole magnitude of 1 + a1 z^-1 + a2 z^-2.
    pub fn max_pole_radius(&self) -> f64 {
        if self.a2 == 0.0 {
            return self.a1.abs();
        }
        let disc = self.a1 * self.a1 - 4.0 * self.a2;
        if disc < 0.0 {
            // complex pair, |z|^2 = a2
            self.a2.sqrt()
        } else {
            let r = disc.sqrt();
            ((-self.a1 + r) / 2.0).abs().max(((-self.a1 - r) / 2.0).abs())
        }
    }

    /// Transposed-DF-II state for a constant input `c` in steady state.
    fn steady_state(&self, c: f64) -> [f64; 2] {
        let y = self.dc_gain() * c;
        let s2 = self.b2 * c - self.a2 * y;
        let s1 = y - self.b0 * c;
        [s1, s2]
    }

    fn run(&self, data: &mut [f64], state: [f64; 2]) {
        let [mut z1, mut z2] = state;
        for v in data.iter_mut() {
            let input = *v;
            let out = self.b0 * input + z1;
            z1 = self.b1 * input - self.a1 * out + z2;
            z2 = self.b2 * input - self.a2 * out;
            *v = out;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ButterworthFilter {
    order: usize,
    cutoff_hz: f64,
    sample_rate_hz: f64,
    sections: Vec<Biquad>,
}

impl ButterworthFilter {
    pub fn lowpass(order: usize, cutoff_hz: f64, sample_rate_hz: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::Preprocess("filter order must be at least 1".into()));
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::Preprocess(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if !(cutoff_hz > 0.0 && cutoff_hz < sample_rate_hz / 2.0) {
            return Err(Error::Preprocess(format!(
                "cutoff {cutoff_hz} Hz must lie in (0, {}) for sample rate {sample_rate_hz} Hz",
                sample_rate_hz / 2.0
            )));
        }

        let k = 2.0 * sample_rate_hz;
        // Pre-warped analog cutoff so the digital -3 dB point lands on cutoff_hz.
        let wc = k * (PI * cutoff_hz / sample_rate_hz).tan();
        let n = order as f64;

        let mut sections = Vec::with_capacity(order.div_ceil(2));
        for i in 0..order / 2 {
            // Analog pole pair wc * exp(±j theta) in the left half plane.
            let theta = PI * (2.0 * i as f64 + n + 1.0) / (2.0 * n);
            let sigma = wc * theta.cos();
            let w0_sq = wc * wc;
            let a0 = k * k - 2.0 * sigma * k + w0_sq;
            sections.push(Biquad {
                b0: w0_sq / a0,
                b1: 2.0 * w0_sq / a0,
                b2: w0_sq / a0,
                a1: 2.0 * (w0_sq - k * k) / a0,
                a2: (k * k + 2.0 * sigma * k + w0_sq) / a0,
            });
        }
        if order % 2 == 1 {
            let a0 = k + wc;
            sections.push(Biquad {
                b0: wc / a0,
                b1: wc / a0,
                b2: 0.0,
                a1: (wc - k) / a0,
                a2: 0.0,
            });
        }

        Ok(Self {
            order,
            cutoff_hz,
            sample_rate_hz,
            sections,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn cutoff_hz(&self) -> f64 {
        self.cutoff_hz
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    /// Single-pass magnitude |H(e^{j 2 pi f / fs})|.
    pub fn magnitude_at(&self, freq_hz: f64) -> f64 {
        let w = 2.0 * PI * freq_hz / self.sample_rate_hz;
        let (mut re, mut im) = (1.0, 0.0);
        for s in &self.sections {
            let (r, i) = s.response(w);
            (re, im) = (re * r - im * i, re * i + im * r);
        }
        re.hypot(im)
    }

    pub fn dc_gain(&self) -> f64 {
        self.sections.iter().map(Biquad::dc_gain).product()
    }

    /// Padding length used by [`lowpass_zero_phase`].
    pub fn pad_len(&self) -> usize {
        3 * self.order
    }

    /// Number of state variables in the cascade (two per section).
    pub fn state_len(&self) -> usize {
        2 * self.sections.len()
    }

    /// One causal pass from an explicit cascade state, laid out as
    /// `[z1, z2]` per section in cascade order.
    pub fn filter_with_state(&self, x: &[f64], state: &[f64]) -> Vec<f64> {
        assert_eq!(state.len(), self.state_len(), "cascade state length");
        let mut y = x.to_vec();
        for (s, z) in self.sections.iter().zip(state.chunks_exact(2)) {
            s.run(&mut y, [z[0], z[1]]);
        }
        y
    }

    /// One causal pass, state initialized to the steady state for `x[0]`.
    pub fn filter_causal(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        let Some(&first) = x.first() else {
            return y;
        };
        for s in &self.sections {
            s.run(&mut y, s.steady_state(first));
        }
        y
    }
}

fn reversed(x: &[f64]) -> Vec<f64> {
    x.iter().rev().copied().collect()
}

/// Forward-backward pass with initial states chosen so that filtering
/// forward-then-backward and backward-then-forward agree in the
/// least-squares sense (Gustafsson's method). The result commutes with time
/// reversal and reproduces constants exactly.
fn forward_backward(filter: &ButterworthFilter, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let m = filter.state_len();
    let zeros = vec![0.0; m];

    // obs[:, k]: zero-input response to unit state k.
    // fb_obs[:, k]: obs[:, k] reversed and filtered from rest.
    let mut obs = nalgebra::DMatrix::<f64>::zeros(n, m);
    let mut fb_obs = nalgebra::DMatrix::<f64>::zeros(n, m);
    let silent = vec![0.0; n];
    for k in 0..m {
        let mut unit = zeros.clone();
        unit[k] = 1.0;
        let col = filter.filter_with_state(&silent, &unit);
        let refiltered = filter.filter_with_state(&reversed(&col), &zeros);
        for i in 0..n {
            obs[(i, k)] = col[i];
            fb_obs[(i, k)] = refiltered[i];
        }
    }

    // [S^R - O, O^R - S]
    let mut system = nalgebra::DMatrix::<f64>::zeros(n, 2 * m);
    for i in 0..n {
        let r = n - 1 - i;
        for k in 0..m {
            system[(i, k)] = fb_obs[(r, k)] - obs[(i, k)];
            system[(i, m + k)] = obs[(r, k)] - fb_obs[(i, k)];
        }
    }

    let y_fb = reversed(&filter.filter_with_state(&reversed(&filter.filter_with_state(x, &zeros)), &zeros));
    let y_bf = filter.filter_with_state(&reversed(&filter.filter_with_state(&reversed(x), &zeros)), &zeros);
    let delta = nalgebra::DMatrix::from_iterator(n, 1, y_bf.iter().zip(&y_fb).map(|(a, b)| a - b));

    // Odd orders leave a zero column (the first-order section's z2), so use
    // the minimum-norm solution.
    let (ic, _) = crate::linalg::lstsq_min_norm(&system, &delta, 1e-12);
    let (zi_forward, zi_backward) = ic.as_slice().split_at(m);

    let forward = filter.filter_with_state(x, zi_forward);
    reversed(&filter.filter_with_state(&reversed(&forward), zi_backward))
}

/// Zero-phase low-pass: odd-reflection padding of `3 * order` samples at each
/// end, forward pass, reversal, second pass, reversal, trim. Initial states
/// for the two passes come from [`forward_backward`].
pub fn lowpass_zero_phase(signal: &[f64], filter: &ButterworthFilter) -> Result<Vec<f64>> {
    let pad = filter.pad_len();
    if signal.len() < pad {
        return Err(Error::Preprocess(format!(
            "signal has {} samples, zero-phase filtering needs at least {pad}",
            signal.len()
        )));
    }
    // Reflection uses x[1..=pad], so clamp when the signal is exactly pad long.
    let pad = pad.min(signal.len() - 1);
    let n = signal.len();
    let first = signal[0];
    let last = signal[n - 1];

    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| 2.0 * first - signal[i]));
    ext.extend_from_slice(signal);
    ext.extend((1..=pad).map(|i| 2.0 * last - signal[n - 1 - i]));

    let y = forward_backward(filter, &ext);
    Ok(y[pad..pad + n].to_vec())
}
