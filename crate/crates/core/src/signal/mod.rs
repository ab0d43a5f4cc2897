//! Per-sensor and array-level signal processing.

mod eigen;
pub mod filter;
pub mod pca;
pub mod similarity;

use std::fmt::Write as _;

use thiserror::Error;

use crate::types::SensorId;

pub use eigen::{symmetric_eigen3, Eigen3};
pub use filter::{lowpass_diff, Butterworth};
pub use pca::{pca_project, project_all, project_series, Projection, ProjectionOptions, ProjectionWindow};
pub use similarity::{cross_correlation, similarity, similarity_matrix, SimilarityMatrix, SimilarityOptions};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SignalError {
    #[error("window length {0} outside 100 < N < 1000")]
    WindowLength(usize),
    #[error("hop {0} must be in 1..=window")]
    Hop(usize),
    #[error("series of {got} samples is shorter than the required {needed}")]
    TooShort { needed: usize, got: usize },
    #[error("window must be positive, got {0} ms")]
    BadWindow(f64),
    #[error("channel sets differ: {0}")]
    Mismatch(String),
    #[error("every channel has zero variance; similarity is undefined")]
    UndefinedSimilarity,
    #[error("cutoff {cutoff} Hz is not below the Nyquist frequency {nyquist} Hz")]
    CutoffAboveNyquist { cutoff: f64, nyquist: f64 },
    #[error("channel csv line {line}: {message}")]
    Csv { line: usize, message: String },
}

/// Principal axis used for one analysis window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowAxis {
    /// First sample of the window within the series.
    pub start: usize,
    /// Unit projection axis in sensor-local coordinates.
    pub w: [f64; 3],
    /// Leading covariance eigenvalue.
    pub lambda_max: f64,
    /// Offset removed before projecting (zero in uncentered mode).
    pub mean: [f64; 3],
    pub degenerate: bool,
    pub ambiguous: bool,
}

/// Scalar acceleration series of one sensor, m/s².
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarChannel {
    pub sensor: SensorId,
    pub samples: Vec<f64>,
    /// Axes used to produce `samples`; empty when loaded from a file.
    pub axes: Vec<WindowAxis>,
}

impl ScalarChannel {
    pub fn new(sensor: SensorId, samples: Vec<f64>) -> Self {
        ScalarChannel {
            sensor,
            samples,
            axes: Vec::new(),
        }
    }
}

/// Scalar channels of one recording, sorted by sensor id, all the same length.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub rate: f64,
    pub channels: Vec<ScalarChannel>,
}

impl ChannelSet {
    pub fn new(rate: f64, mut channels: Vec<ScalarChannel>) -> Result<Self, SignalError> {
        channels.sort_by_key(|c| c.sensor);
        if channels.windows(2).any(|w| w[0].sensor == w[1].sensor) {
            return Err(SignalError::Mismatch("duplicate sensor".into()));
        }
        if let Some(first) = channels.first() {
            let n = first.samples.len();
            if let Some(c) = channels.iter().find(|c| c.samples.len() != n) {
                return Err(SignalError::Mismatch(format!(
                    "sensor {} has {} samples, expected {n}",
                    c.sensor,
                    c.samples.len()
                )));
            }
        }
        Ok(ChannelSet { rate, channels })
    }

    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, |c| c.samples.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sensors(&self) -> impl Iterator<Item = SensorId> + '_ {
        self.channels.iter().map(|c| c.sensor)
    }

    pub fn channel(&self, id: SensorId) -> Option<&ScalarChannel> {
        self.channels.iter().find(|c| c.sensor == id)
    }

    /// `sample,<id>,<id>,...` then one row per time index.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sample");
        for c in &self.channels {
            let _ = write!(out, ",{}", c.sensor);
        }
        out.push('\n');
        for t in 0..self.len() {
            let _ = write!(out, "{t}");
            for c in &self.channels {
                let _ = write!(out, ",{}", c.samples[t]);
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str, rate: f64) -> Result<Self, SignalError> {
        let err = |line: usize, message: String| SignalError::Csv { line, message };
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| err(1, "empty input".into()))?;
        let mut cols = header.split(',');
        if cols.next() != Some("sample") {
            return Err(err(1, "first column must be 'sample'".into()));
        }
        let ids = cols
            .map(|c| {
                c.trim()
                    .parse::<u32>()
                    .ok()
                    .and_then(|n| SensorId::new(n).ok())
                    .ok_or_else(|| err(1, format!("bad sensor column '{c}'")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut data = vec![Vec::new(); ids.len()];
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != ids.len() + 1 {
                return Err(err(i + 2, format!("expected {} fields", ids.len() + 1)));
            }
            for (k, f) in fields[1..].iter().enumerate() {
                let v = f
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| err(i + 2, format!("bad value '{f}'")))?;
                data[k].push(v);
            }
        }
        let channels = ids
            .into_iter()
            .zip(data)
            .map(|(id, samples)| ScalarChannel::new(id, samples))
            .collect();
        ChannelSet::new(rate, channels)
    }
}

/// Number of samples in a window of `window_ms` at `rate` (rounded down).
pub fn window_samples(window_ms: f64, rate: f64) -> usize {
    (window_ms * rate / 1000.0 + 1e-9).floor() as usize
}

/// Root-mean-square of the trailing `n` samples.
pub fn trailing_rms(samples: &[f64], n: usize) -> f64 {
    let tail = &samples[samples.len() - n..];
    (tail.iter().map(|x| x * x).sum::<f64>() / n as f64).sqrt()
}

/// Per-sensor RMS over the trailing `window_ms` of each channel.
pub fn rms_map(set: &ChannelSet, window_ms: f64) -> Result<Vec<(SensorId, f64)>, SignalError> {
    if !(window_ms > 0.0) {
        return Err(SignalError::BadWindow(window_ms));
    }
    let n = window_samples(window_ms, set.rate);
    if n == 0 || n > set.len() {
        return Err(SignalError::TooShort {
            needed: n.max(1),
            got: set.len(),
        });
    }
    Ok(set
        .channels
        .iter()
        .map(|c| (c.sensor, trailing_rms(&c.samples, n)))
        .collect())
}
