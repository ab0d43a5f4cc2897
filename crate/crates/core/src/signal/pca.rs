//! Orientation-invariant scalar channels by projection onto the leading
//! principal axis of each sensor's recent 3-axis history.

use rayon::prelude::*;

use super::eigen::symmetric_eigen3;
use super::{ScalarChannel, SignalError, WindowAxis};
use crate::types::SensorId;

pub const DEFAULT_WINDOW: usize = 256;
/// Top-two eigenvalue ratio below which the leading axis is ambiguous.
pub const AMBIGUITY_RATIO: f64 = 1.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionOptions {
    pub window: usize,
    pub hop: usize,
    /// Remove the window mean before forming the covariance and projecting.
    /// When false the raw second-moment matrix XᵀX/N is used and samples are
    /// projected as recorded.
    pub centered: bool,
}

impl Default for ProjectionOptions {
    fn default() -> Self {
        ProjectionOptions {
            window: DEFAULT_WINDOW,
            hop: DEFAULT_WINDOW / 2,
            centered: true,
        }
    }
}

impl ProjectionOptions {
    pub fn validate(&self) -> Result<(), SignalError> {
        if self.window <= 100 || self.window >= 1000 {
            return Err(SignalError::WindowLength(self.window));
        }
        if self.hop == 0 || self.hop > self.window {
            return Err(SignalError::Hop(self.hop));
        }
        Ok(())
    }
}

/// A full analysis window of one sensor: N samples of (x, y, z).
#[derive(Debug, Clone, Copy)]
pub struct ProjectionWindow<'a> {
    pub sensor: SensorId,
    data: &'a [[f64; 3]],
}

impl<'a> ProjectionWindow<'a> {
    pub fn new(sensor: SensorId, data: &'a [[f64; 3]]) -> Result<Self, SignalError> {
        if data.len() <= 100 || data.len() >= 1000 {
            return Err(SignalError::WindowLength(data.len()));
        }
        Ok(ProjectionWindow { sensor, data })
    }

    pub fn data(&self) -> &'a [[f64; 3]] {
        self.data
    }
}

/// Result of projecting one window.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub sensor: SensorId,
    pub axis: WindowAxis,
    pub samples: Vec<f64>,
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn mean(data: &[[f64; 3]]) -> [f64; 3] {
    let n = data.len() as f64;
    let mut m = [0.0; 3];
    for a in data {
        for k in 0..3 {
            m[k] += a[k];
        }
    }
    m.map(|x| x / n)
}

/// Leading axis of a window. The sign makes the largest-magnitude component
/// positive. When the top two eigenvalues are within [`AMBIGUITY_RATIO`],
/// the unit vector of their plane closest to the z axis is used instead.
pub fn principal_axis(data: &[[f64; 3]], centered: bool) -> WindowAxis {
    let n = data.len() as f64;
    let offset = if centered { mean(data) } else { [0.0; 3] };
    let mut cov = [[0.0; 3]; 3];
    for a in data {
        let d = [a[0] - offset[0], a[1] - offset[1], a[2] - offset[2]];
        for i in 0..3 {
            for j in i..3 {
                cov[i][j] += d[i] * d[j];
            }
        }
    }
    for i in 0..3 {
        for j in i..3 {
            cov[i][j] /= n;
            cov[j][i] = cov[i][j];
        }
    }
    let eig = symmetric_eigen3(cov);
    let [l1, l2, _] = eig.values;

    if !(l1 > 0.0) {
        return WindowAxis {
            start: 0,
            w: [0.0, 0.0, 1.0],
            lambda_max: 0.0,
            mean: offset,
            degenerate: true,
            ambiguous: false,
        };
    }

    let ambiguous = l1 < AMBIGUITY_RATIO * l2;
    let mut w = eig.vectors[0];
    if ambiguous {
        let (v1, v2) = (eig.vectors[0], eig.vectors[1]);
        let (c1, c2) = (v1[2], v2[2]);
        let blend = [c1 * v1[0] + c2 * v2[0], c1 * v1[1] + c2 * v2[1], c1 * v1[2] + c2 * v2[2]];
        let norm = dot(&blend, &blend).sqrt();
        if norm > 1e-12 {
            w = blend.map(|x| x / norm);
        }
    }
    let lead = (0..3)
        .max_by(|&i, &j| w[i].abs().total_cmp(&w[j].abs()))
        .unwrap_or(2);
    if w[lead] < 0.0 {
        w = w.map(|x| -x);
    }
    WindowAxis {
        start: 0,
        w,
        lambda_max: l1,
        mean: offset,
        degenerate: false,
        ambiguous,
    }
}

fn project<'a>(data: &'a [[f64; 3]], axis: &WindowAxis) -> impl Iterator<Item = f64> + 'a {
    let w = axis.w;
    let m = axis.mean;
    data.iter()
        .map(move |a| (a[0] - m[0]) * w[0] + (a[1] - m[1]) * w[1] + (a[2] - m[2]) * w[2])
}

/// Project one window onto its leading principal axis.
pub fn pca_project(window: &ProjectionWindow<'_>, centered: bool) -> Projection {
    let axis = principal_axis(window.data, centered);
    if axis.degenerate {
        log::debug!("sensor {}: degenerate projection window", window.sensor);
    }
    Projection {
        sensor: window.sensor,
        samples: project(window.data, &axis).collect(),
        axis,
    }
}

/// Sliding-window projection of a full series.
///
/// The series is cut into blocks of `hop` samples. Each block is projected
/// with the axis of the length-`window` span centered on it (clamped to
/// the series). Consecutive axes keep a consistent sign; the first follows
/// the largest-component rule.
pub fn project_series(
    sensor: SensorId,
    data: &[[f64; 3]],
    opts: &ProjectionOptions,
) -> Result<ScalarChannel, SignalError> {
    opts.validate()?;
    if data.len() < opts.window {
        return Err(SignalError::TooShort {
            needed: opts.window,
            got: data.len(),
        });
    }
    let n = opts.window;
    let mut samples = Vec::with_capacity(data.len());
    let mut axes = Vec::new();
    let mut previous: Option<[f64; 3]> = None;
    let mut block = 0;
    while block < data.len() {
        let end = (block + opts.hop).min(data.len());
        let center = (block + end) / 2;
        let start = center.saturating_sub(n / 2).min(data.len() - n);
        let mut axis = principal_axis(&data[start..start + n], opts.centered);
        axis.start = start;
        if let Some(p) = previous {
            if dot(&p, &axis.w) < 0.0 {
                axis.w = axis.w.map(|x| -x);
            }
        }
        previous = Some(axis.w);
        samples.extend(project(&data[block..end], &axis));
        axes.push(axis);
        block = end;
    }
    Ok(ScalarChannel {
        sensor,
        samples,
        axes,
    })
}

/// Project every sensor of a calibrated series set in parallel.
pub fn project_all(
    series: &[(SensorId, Vec<[f64; 3]>)],
    opts: &ProjectionOptions,
) -> Result<Vec<ScalarChannel>, SignalError> {
    series
        .par_iter()
        .map(|(id, data)| project_series(*id, data, opts))
        .collect()
}
