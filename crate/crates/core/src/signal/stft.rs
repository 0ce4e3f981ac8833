use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::NonNegMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StftConfig {
    pub sample_rate: u32,
    pub n_fft: usize,
    pub hop: usize,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self {
            sample_rate: 4000,
            n_fft: 512,
            hop: 128,
        }
    }
}

impl StftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 {
            return Err(Error::Config("sample_rate must be positive".into()));
        }
        if !self.n_fft.is_power_of_two() || self.n_fft < 2 {
            return Err(Error::Config(format!("n_fft must be a power of two, got {}", self.n_fft)));
        }
        if self.hop == 0 || self.hop > self.n_fft {
            return Err(Error::Config(format!("hop must lie in 1..=n_fft, got {}", self.hop)));
        }
        Ok(())
    }

    pub fn bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    /// Frame count for `n` samples under centre padding.
    pub fn frames(&self, n: usize) -> usize {
        n / self.hop + 1
    }

    pub fn bin_hz(&self) -> f64 {
        f64::from(self.sample_rate) / self.n_fft as f64
    }
}

/// Periodic Hann window of length `n`.
pub fn hann_window(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
        .collect()
}

/// Reflect index `i` (which may lie outside `0..n`) back into range without
/// repeating the edge sample.
fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    if m < n as isize {
        m as usize
    } else {
        (period - m) as usize
    }
}

/// Magnitude spectrogram, `n_fft/2 + 1` rows by `floor(n/hop) + 1` frames.
/// Frames are centred on multiples of `hop`, with reflect padding at both ends.
pub fn stft_magnitude(samples: &[f64], cfg: &StftConfig) -> Result<NonNegMatrix> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::EmptyInput("stft samples".into()));
    }
    let n = samples.len();
    let n_fft = cfg.n_fft;
    let bins = cfg.bins();
    let frames = cfg.frames(n);
    let half = (n_fft / 2) as isize;
    let window = hann_window(n_fft);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n_fft);

    let mut out = vec![0.0; bins * frames];
    let mut buf = vec![Complex::new(0.0, 0.0); n_fft];
    for f in 0..frames {
        let start = (f * cfg.hop) as isize - half;
        for (k, slot) in buf.iter_mut().enumerate() {
            let s = samples[reflect(start + k as isize, n)];
            *slot = Complex::new(s * window[k], 0.0);
        }
        fft.process(&mut buf);
        for (b, v) in buf.iter().take(bins).enumerate() {
            out[b * frames + f] = v.norm();
        }
    }
    NonNegMatrix::new(bins, frames, out)
}

/// Linear-interpolation resampling to `round(n·to/from)` samples. When
/// downsampling, a centred moving average spanning roughly one output period
/// is applied first.
pub fn resample_linear(samples: &[f64], from_rate: u32, to_rate: u32) -> Vec<f64> {
    if from_rate == to_rate || samples.is_empty() {
        return samples.to_vec();
    }
    let ratio = f64::from(from_rate) / f64::from(to_rate);
    let smoothed = if ratio > 1.0 {
        moving_average(samples, (ratio.ceil() as usize) / 2)
    } else {
        samples.to_vec()
    };
    let n = samples.len();
    let out_len = (n as f64 / ratio).round() as usize;
    let last = (n - 1) as f64;
    (0..out_len)
        .map(|k| {
            let pos = (k as f64 * ratio).min(last);
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            let frac = pos - lo as f64;
            smoothed[lo] * (1.0 - frac) + smoothed[hi] * frac
        })
        .collect()
}

/// Centred mean over `2·half + 1` samples; near the ends the window shrinks
/// symmetrically so linear trends pass through unchanged.
fn moving_average(samples: &[f64], half: usize) -> Vec<f64> {
    if half == 0 {
        return samples.to_vec();
    }
    let n = samples.len();
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for &s in samples {
        prefix.push(prefix.last().unwrap() + s);
    }
    (0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            (prefix[i + h + 1] - prefix[i - h]) / (2 * h + 1) as f64
        })
        .collect()
}
