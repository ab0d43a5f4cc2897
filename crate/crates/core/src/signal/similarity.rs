//! Gesture similarity from per-sensor peak cross-correlation.
//!
//! For recordings A and B with matching sensors,
//!
//! ```text
//!          Σᵢ maxₖ |Σₜ aᵢ(t) bᵢ(t+k) τ| / (σ(aᵢ) σ(bᵢ))
//! S(A,B) = --------------------------------------------
//!          Σᵢ Σₜ bᵢ(t)² τ / σ(bᵢ)²
//! ```
//!
//! The lag k ranges over ±L samples. Only B appears in the denominator, so
//! S is not symmetric in general.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{ChannelSet, SignalError};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SimilarityOptions {
    /// Lag bound in samples; defaults to min(len - 1, rate / 2).
    pub max_lag: Option<usize>,
}

impl SimilarityOptions {
    pub fn lag_bound(&self, len: usize, rate: f64) -> usize {
        let cap = len.saturating_sub(1);
        self.max_lag
            .unwrap_or_else(|| (rate / 2.0).floor() as usize)
            .min(cap)
    }
}

/// Cross-correlation r(k) = Σₜ x(t) y(t+k) for k in -max_lag..=max_lag,
/// computed in the frequency domain. Entry `k + max_lag` holds lag k.
pub fn cross_correlation(x: &[f64], y: &[f64], max_lag: usize) -> Vec<f64> {
    let mut planner = FftPlanner::new();
    Correlator::new(&mut planner, x.len().max(y.len()), max_lag).run(x, y)
}

struct Correlator {
    size: usize,
    max_lag: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Correlator {
    fn new(planner: &mut FftPlanner<f64>, len: usize, max_lag: usize) -> Self {
        // No circular wrap for |k| <= max_lag once size >= len + max_lag.
        let size = (len + max_lag).max(1).next_power_of_two();
        Correlator {
            size,
            max_lag,
            forward: planner.plan_fft_forward(size),
            inverse: planner.plan_fft_inverse(size),
        }
    }

    fn run(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let pad = |s: &[f64]| {
            let mut v: Vec<Complex<f64>> = s.iter().map(|&r| Complex::new(r, 0.0)).collect();
            v.resize(self.size, Complex::new(0.0, 0.0));
            v
        };
        let mut fx = pad(x);
        let mut fy = pad(y);
        self.forward.process(&mut fx);
        self.forward.process(&mut fy);
        let mut prod: Vec<Complex<f64>> = fx.iter().zip(&fy).map(|(a, b)| a.conj() * b).collect();
        self.inverse.process(&mut prod);
        let scale = 1.0 / self.size as f64;
        let lag = self.max_lag as isize;
        (-lag..=lag)
            .map(|k| prod[k.rem_euclid(self.size as isize) as usize].re * scale)
            .collect()
    }
}

fn std_dev(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}

/// Similarity score of recording `a` against reference `b`.
///
/// Channels whose standard deviation is zero in either recording are left
/// out of both sums.
pub fn similarity(a: &ChannelSet, b: &ChannelSet, opts: &SimilarityOptions) -> Result<f64, SignalError> {
    if !a.sensors().eq(b.sensors()) {
        return Err(SignalError::Mismatch("recordings cover different sensors".into()));
    }
    if a.len() != b.len() {
        return Err(SignalError::Mismatch(format!("lengths {} and {}", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(SignalError::UndefinedSimilarity);
    }
    let tau = 1.0 / b.rate;
    let lag = opts.lag_bound(a.len(), b.rate);
    let mut planner = FftPlanner::new();
    let correlator = Correlator::new(&mut planner, a.len(), lag);

    let mut numerator = 0.0;
    let mut denominator = 0.0;
    let mut used = 0;
    for (ca, cb) in a.channels.iter().zip(&b.channels) {
        let (sa, sb) = (std_dev(&ca.samples), std_dev(&cb.samples));
        if sa == 0.0 || sb == 0.0 {
            continue;
        }
        used += 1;
        let peak = correlator
            .run(&ca.samples, &cb.samples)
            .into_iter()
            .map(|r| (r * tau).abs())
            .fold(0.0, f64::max);
        numerator += peak / (sa * sb);
        denominator += cb.samples.iter().map(|v| v * v).sum::<f64>() * tau / (sb * sb);
    }
    if used == 0 {
        return Err(SignalError::UndefinedSimilarity);
    }
    Ok(numerator / denominator)
}

/// Pairwise scores: entry (i, j) is S(recording i, recording j).
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl SimilarityMatrix {
    /// Header row of names, then one row per recording led by its name.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("gesture");
        for n in &self.names {
            let _ = write!(out, ",{n}");
        }
        out.push('\n');
        for (n, row) in self.names.iter().zip(&self.values) {
            out.push_str(n);
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

pub fn similarity_matrix(
    recordings: &[(String, ChannelSet)],
    opts: &SimilarityOptions,
) -> Result<SimilarityMatrix, SignalError> {
    let values = recordings
        .par_iter()
        .map(|(_, a)| {
            recordings
                .iter()
                .map(|(_, b)| similarity(a, b, opts))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SimilarityMatrix {
        names: recordings.iter().map(|(n, _)| n.clone()).collect(),
        values,
    })
}
