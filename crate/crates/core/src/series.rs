//! Sampled-signal containers: uniformly sampled time series and lag-indexed
//! cross-correlation sequences.

use crate::error::{Error, Result};

/// A uniformly sampled real signal.
#[derive(Debug, Clone)]
pub struct TimeSeries {
    /// Channel label, conventionally a [`crate::ChannelId`] rendering.
    pub channel: String,
    /// Sample period in seconds.
    pub sample_period: f64,
    /// Time of the first sample in seconds.
    pub start_time: f64,
    pub samples: Vec<f64>,
}

impl TimeSeries {
    pub fn new(
        channel: impl Into<String>,
        sample_period: f64,
        start_time: f64,
        samples: Vec<f64>,
    ) -> Result<Self> {
        if !(sample_period > 0.0) {
            return Err(Error::validation("sample period must be positive"));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::validation("time series contains non-finite samples"));
        }
        Ok(TimeSeries { channel: channel.into(), sample_period, start_time, samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 * self.sample_period
    }

    pub fn time(&self, index: usize) -> f64 {
        self.start_time + index as f64 * self.sample_period
    }

    pub fn mean(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Root-mean-square of the samples.
    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        (self.samples.iter().map(|x| x * x).sum::<f64>() / self.samples.len() as f64).sqrt()
    }

    /// Pointwise difference `self - other`; lengths and rates must match.
    pub fn subtract(&self, other: &TimeSeries) -> Result<TimeSeries> {
        if self.samples.len() != other.samples.len() {
            return Err(Error::validation(format!(
                "length mismatch: {} vs {}",
                self.samples.len(),
                other.samples.len()
            )));
        }
        if !same_rate(self.sample_period, other.sample_period) {
            return Err(Error::validation("sample period mismatch"));
        }
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a - b)
            .collect();
        TimeSeries::new(self.channel.clone(), self.sample_period, self.start_time, samples)
    }
}

pub(crate) fn same_rate(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// A cross-correlation estimate on a uniform lag grid containing lag zero.
///
/// The grid is `first_lag..=first_lag + values.len() - 1` in units of the
/// sample period; `first_lag` is negative for a two-sided sequence and zero
/// for a one-sided one.
#[derive(Debug, Clone)]
pub struct CorrelationSequence {
    pub source: String,
    pub target: String,
    pub sample_period: f64,
    /// Index of the first lag in samples (e.g. `-max_lag` steps).
    pub first_lag: i64,
    pub values: Vec<f64>,
}

impl CorrelationSequence {
    pub fn lag_seconds(&self, index: usize) -> f64 {
        (self.first_lag + index as i64) as f64 * self.sample_period
    }

    pub fn lags(&self) -> Vec<f64> {
        (0..self.values.len()).map(|i| self.lag_seconds(i)).collect()
    }

    /// Value at integer lag `lag` (in samples), if it is on the grid.
    pub fn at_lag(&self, lag: i64) -> Option<f64> {
        let idx = lag - self.first_lag;
        if idx < 0 {
            return None;
        }
        self.values.get(idx as usize).copied()
    }

    /// Restrict to the non-negative lag half, keeping lag zero.
    pub fn nonnegative(&self) -> CorrelationSequence {
        let skip = (-self.first_lag).max(0) as usize;
        CorrelationSequence {
            source: self.source.clone(),
            target: self.target.clone(),
            sample_period: self.sample_period,
            first_lag: 0.max(self.first_lag),
            values: self.values[skip.min(self.values.len())..].to_vec(),
        }
    }
}
