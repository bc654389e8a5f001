//! Tracking-error and drift statistics.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("no samples")]
    Empty,
    #[error("stream of {samples} samples is shorter than two windows of {window}")]
    TooShort { samples: usize, window: usize },
    #[error("window must be positive")]
    BadWindow,
}

/// Summary of a sequence of errors, in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub mean: f64,
    /// Population standard deviation.
    pub sigma: f64,
    /// Maximum-likelihood Gaussian fit.
    pub gauss_mu: f64,
    pub gauss_sigma: f64,
    pub max_abs: f64,
    pub n: usize,
}

pub fn error_stats(errors: &[f64]) -> Result<ErrorStats, StatsError> {
    if errors.is_empty() {
        return Err(StatsError::Empty);
    }
    let n = errors.len();
    // Shifted by the first sample so a constant sequence is exact.
    let shift = errors[0];
    let offset = errors.iter().map(|e| e - shift).sum::<f64>() / n as f64;
    let mean = shift + offset;
    let var = errors
        .iter()
        .map(|e| (e - shift - offset) * (e - shift - offset))
        .sum::<f64>()
        / n as f64;
    let sigma = var.sqrt();
    let max_abs = errors.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    Ok(ErrorStats {
        mean,
        sigma,
        gauss_mu: mean,
        gauss_sigma: sigma,
        max_abs,
        n,
    })
}

/// Start-to-end discrepancy of a long stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    /// `|mean(first window) - mean(aligned last window)|`, in the stream's unit.
    pub discrepancy: f64,
    pub first_mean: f64,
    pub last_mean: f64,
    /// Samples by which the last window was shifted earlier to align phase.
    pub lag: usize,
    pub window: usize,
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        None
    } else {
        Some(sab / (saa * sbb).sqrt())
    }
}

/// Compares the first and last `window_s` seconds of a stream sampled at
/// `rate_hz`. The last window is shifted back by up to one window length
/// to the lag of peak correlation with the first window.
pub fn drift_report(angles: &[f64], rate_hz: f64, window_s: f64) -> Result<DriftReport, StatsError> {
    if !(window_s > 0.0 && rate_hz > 0.0) {
        return Err(StatsError::BadWindow);
    }
    let window = (window_s * rate_hz).round() as usize;
    if window == 0 {
        return Err(StatsError::BadWindow);
    }
    let n = angles.len();
    if n < 2 * window {
        return Err(StatsError::TooShort { samples: n, window });
    }
    let first = &angles[..window];
    let max_lag = window.min(n - 2 * window);
    let mut lag = 0;
    let mut best = f64::NEG_INFINITY;
    for l in 0..=max_lag {
        let start = n - window - l;
        if let Some(r) = pearson(first, &angles[start..start + window]) {
            if r > best {
                best = r;
                lag = l;
            }
        }
    }
    let start = n - window - lag;
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let first_mean = mean(first);
    let last_mean = mean(&angles[start..start + window]);
    Ok(DriftReport {
        discrepancy: (first_mean - last_mean).abs(),
        first_mean,
        last_mean,
        lag,
        window,
    })
}

/// Plot-ready histogram CSV with `bins` equal-width bins and the fitted
/// Gaussian density at each bin centre.
pub fn histogram_csv(errors: &[f64], bins: usize) -> Result<String, StatsError> {
    let stats = error_stats(errors)?;
    let bins = bins.max(1);
    let lo = errors.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = errors.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for e in errors {
        let b = (((e - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let mut out = String::from("bin_center,count,density,gauss_density\n");
    let total = errors.len() as f64;
    for (i, c) in counts.iter().enumerate() {
        let x = lo + (i as f64 + 0.5) * width;
        let density = *c as f64 / (total * width);
        let g = if stats.gauss_sigma > 0.0 {
            let z = (x - stats.gauss_mu) / stats.gauss_sigma;
            (-0.5 * z * z).exp() / (stats.gauss_sigma * (2.0 * std::f64::consts::PI).sqrt())
        } else {
            0.0
        };
        out.push_str(&format!("{x},{c},{density},{g}\n"));
    }
    Ok(out)
}
