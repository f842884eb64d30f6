//! Sample statistics with the two-sigma confidence convention
//! `mean -/+ 2 * std / sqrt(n)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sample_std: f64,
    pub count: usize,
    pub ci95_low: f64,
    pub ci95_high: f64,
}

impl Summary {
    /// Builds a summary from already computed moments.
    pub fn from_moments(mean: f64, sample_std: f64, count: usize) -> Self {
        let half = if count == 0 {
            f64::NAN
        } else {
            2.0 * sample_std / (count as f64).sqrt()
        };
        Self {
            mean,
            sample_std,
            count,
            ci95_low: mean - half,
            ci95_high: mean + half,
        }
    }

    pub fn half_width(&self) -> f64 {
        (self.ci95_high - self.ci95_low) / 2.0
    }

    pub fn contains(&self, value: f64) -> bool {
        self.ci95_low <= value && value <= self.ci95_high
    }
}

/// Mean, sample standard deviation (n-1 denominator) and two-sigma interval.
pub fn stats(samples: &[f64]) -> Result<Summary> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: samples.len(),
        });
    }
    let (mean, std) = mean_std(samples);
    Ok(Summary::from_moments(mean, std, samples.len()))
}

/// Mean and sample standard deviation; the deviation of a single sample is
/// reported as zero.
pub(crate) fn mean_std(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = samples.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}
