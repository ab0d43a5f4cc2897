//! Whole-hand wave field from the sensor channels by geodesic distance
//! weighting.
//!
//! Sensor i contributes to surface point p with weight f(φ(p, pᵢ)), where
//!
//! ```text
//! φ(p, pᵢ) = 17 / (d(p, pᵢ) + α) − C
//! ```
//!
//! d is the geodesic distance in mm and f is half-wave rectification, which
//! can be switched off to keep the sign. The field at p is the weighted
//! average of the channels.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{fnv64, DistanceFields, GeometryError, HandSurface, Registration};
use crate::signal::{window_samples, ChannelSet};
use crate::types::SensorId;

pub const DEFAULT_GAIN: f64 = 17.0;
pub const DEFAULT_ALPHA_MM: f64 = 25.5;
pub const DEFAULT_C: f64 = 0.087;
pub const RMS_WINDOW_MS: f64 = 250.0;

const FIELD_MAGIC: [u8; 4] = *b"HWWF";
const FIELD_VERSION: u16 = 1;
const FIELD_HEADER_LEN: usize = 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReconError {
    #[error("invalid weighting parameter: {0}")]
    Params(String),
    #[error("no channel for sensor {0}")]
    MissingChannel(SensorId),
    #[error("channel for sensor {sensor} has {found} samples, expected {expected}")]
    ChannelLength { sensor: SensorId, found: usize, expected: usize },
    #[error("{} vertices have zero total weight, first: {:?}", .0.len(), &.0[..(.0.len().min(8))])]
    Orphans(Vec<usize>),
    #[error("field has {frames} frames, window needs {window}")]
    ShortField { frames: usize, window: usize },
    #[error("wave field file: {0}")]
    Format(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Parameters of the distance weighting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightParams {
    pub gain: f64,
    /// mm
    pub alpha: f64,
    pub c: f64,
    pub rectify: bool,
}

impl Default for WeightParams {
    fn default() -> Self {
        WeightParams {
            gain: DEFAULT_GAIN,
            alpha: DEFAULT_ALPHA_MM,
            c: DEFAULT_C,
            rectify: true,
        }
    }
}

impl WeightParams {
    pub fn validate(&self) -> Result<(), ReconError> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(ReconError::Params(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.gain.is_finite() && self.c.is_finite()) {
            return Err(ReconError::Params("gain and C must be finite".into()));
        }
        Ok(())
    }

    pub fn phi(&self, d: f64) -> f64 {
        self.gain / (d + self.alpha) - self.c
    }

    /// φ after the optional rectification.
    pub fn weight(&self, d: f64) -> f64 {
        let phi = self.phi(d);
        if self.rectify {
            phi.max(0.0)
        } else {
            phi
        }
    }

    /// Distance at which φ reaches zero.
    pub fn zero_crossing(&self) -> f64 {
        self.gain / self.c - self.alpha
    }

    fn key(&self) -> [u64; 4] {
        [self.gain.to_bits(), self.alpha.to_bits(), self.c.to_bits(), u64::from(self.rectify)]
    }
}

/// Per-vertex weights of every registered sensor, stored vertex-major.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightField {
    pub params: WeightParams,
    pub sensors: Vec<SensorId>,
    vertices: usize,
    raw: Vec<f64>,
    normalized: Vec<f64>,
    sums: Vec<f64>,
}

impl WeightField {
    pub fn from_distances(fields: &DistanceFields, params: WeightParams) -> Result<Self, ReconError> {
        params.validate()?;
        let s = fields.rows.len();
        let vertices = fields.vertices();
        let mut raw = vec![0.0; vertices * s];
        for (i, row) in fields.rows.iter().enumerate() {
            for (v, &d) in row.iter().enumerate() {
                raw[v * s + i] = params.weight(d);
            }
        }
        let sums: Vec<f64> = raw.chunks_exact(s.max(1)).map(|w| w.iter().sum()).collect();
        let normalized = raw
            .chunks_exact(s.max(1))
            .zip(&sums)
            .flat_map(|(w, &sum)| w.iter().map(move |x| if usable(sum, params.rectify) { x / sum } else { 0.0 }))
            .collect();
        Ok(WeightField {
            params,
            sensors: fields.anchors.iter().map(|a| a.0).collect(),
            vertices,
            raw,
            normalized,
            sums,
        })
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    /// f(φ) of every sensor at vertex `v`, in sensor order.
    pub fn raw(&self, v: usize) -> &[f64] {
        let s = self.sensors.len();
        &self.raw[v * s..(v + 1) * s]
    }

    /// Weights at `v` divided by their sum.
    pub fn normalized(&self, v: usize) -> &[f64] {
        let s = self.sensors.len();
        &self.normalized[v * s..(v + 1) * s]
    }

    pub fn sum(&self, v: usize) -> f64 {
        self.sums[v]
    }

    /// Vertices no sensor reaches.
    pub fn orphans(&self) -> Vec<usize> {
        (0..self.vertices)
            .filter(|&v| !usable(self.sums[v], self.params.rectify))
            .collect()
    }
}

fn usable(sum: f64, rectified: bool) -> bool {
    if rectified {
        sum > 0.0
    } else {
        sum.abs() > 1e-12
    }
}

/// Weights for the registered sensors on `surface`.
pub fn weight_field(
    surface: &HandSurface,
    registration: &Registration,
    params: WeightParams,
) -> Result<WeightField, ReconError> {
    params.validate()?;
    let fields = DistanceFields::compute(surface, registration)?;
    WeightField::from_distances(&fields, params)
}

/// Weight fields keyed by a hash of surface, anchors and parameters.
#[derive(Debug, Default)]
pub struct WeightCache {
    entries: HashMap<u64, Arc<WeightField>>,
}

impl WeightCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_compute(
        &mut self,
        surface: &HandSurface,
        registration: &Registration,
        params: WeightParams,
    ) -> Result<Arc<WeightField>, ReconError> {
        let key = fnv64(
            std::iter::once(surface.content_hash())
                .chain(registration.anchors.iter().flat_map(|&(id, v)| [u64::from(id.get()), v as u64]))
                .chain(params.key()),
        );
        if let Some(w) = self.entries.get(&key) {
            return Ok(Arc::clone(w));
        }
        let w = Arc::new(weight_field(surface, registration, params)?);
        self.entries.insert(key, Arc::clone(&w));
        Ok(w)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Scalar field over surface vertices, frame-major: the value at vertex v
/// and frame t is `data[t * vertices + v]`. Units follow the input channels.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    pub rate: f64,
    pub vertices: usize,
    pub frames: usize,
    pub data: Vec<f64>,
}

impl WaveField {
    pub fn zeros(rate: f64, vertices: usize, frames: usize) -> Self {
        WaveField {
            rate,
            vertices,
            frames,
            data: vec![0.0; vertices * frames],
        }
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        &self.data[t * self.vertices..(t + 1) * self.vertices]
    }

    pub fn at(&self, v: usize, t: usize) -> f64 {
        self.data[t * self.vertices + v]
    }

    /// Time series of one vertex.
    pub fn series(&self, v: usize) -> Vec<f64> {
        (0..self.frames).map(|t| self.at(v, t)).collect()
    }

    /// The frames in `start..end`.
    pub fn slice(&self, start: usize, end: usize) -> WaveField {
        let end = end.min(self.frames);
        let start = start.min(end);
        WaveField {
            rate: self.rate,
            vertices: self.vertices,
            frames: end - start,
            data: self.data[start * self.vertices..end * self.vertices].to_vec(),
        }
    }

    /// `vertex,value` rows for one frame.
    pub fn frame_csv(&self, t: usize) -> String {
        let mut out = String::from("vertex,value\n");
        for (v, x) in self.frame(t).iter().enumerate() {
            let _ = writeln!(out, "{v},{x}");
        }
        out
    }

    /// Compact binary form; values are stored as f32, vertex-major.
    ///
    /// | offset | size      | field                   |
    /// |--------|-----------|-------------------------|
    /// | 0      | 4         | magic `HWWF`            |
    /// | 4      | 2         | version (1)             |
    /// | 6      | 2         | reserved, zero          |
    /// | 8      | 4         | vertices V              |
    /// | 12     | 4         | frames T                |
    /// | 16     | 8         | rate, Hz (f64)          |
    /// | 24     | 4·V·T     | f32 values, V rows of T |
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(FIELD_HEADER_LEN + 4 * self.data.len());
        out.extend_from_slice(&FIELD_MAGIC);
        out.extend_from_slice(&FIELD_VERSION.to_le_bytes());
        out.extend_from_slice(&0u16.to_le_bytes());
        out.extend_from_slice(&(self.vertices as u32).to_le_bytes());
        out.extend_from_slice(&(self.frames as u32).to_le_bytes());
        out.extend_from_slice(&self.rate.to_le_bytes());
        for v in 0..self.vertices {
            for t in 0..self.frames {
                out.extend_from_slice(&(self.at(v, t) as f32).to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<WaveField, ReconError> {
        let bad = |m: String| ReconError::Format(m);
        if bytes.len() < FIELD_HEADER_LEN || bytes[0..4] != FIELD_MAGIC {
            return Err(bad("bad magic".into()));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != FIELD_VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes")) as usize;
        let (vertices, frames) = (u32_at(8), u32_at(12));
        let rate = f64::from_le_bytes(bytes[16..24].try_into().expect("8 bytes"));
        let expected = vertices
            .checked_mul(frames)
            .and_then(|n| n.checked_mul(4))
            .and_then(|n| n.checked_add(FIELD_HEADER_LEN))
            .ok_or_else(|| bad("size overflow".into()))?;
        if bytes.len() != expected {
            return Err(bad(format!("expected {expected} bytes, found {}", bytes.len())));
        }
        let mut field = WaveField::zeros(rate, vertices, frames);
        for (i, chunk) in bytes[FIELD_HEADER_LEN..].chunks_exact(4).enumerate() {
            let (v, t) = (i / frames.max(1), i % frames.max(1));
            field.data[t * vertices + v] = f64::from(f32::from_le_bytes(chunk.try_into().expect("4 bytes")));
        }
        Ok(field)
    }
}

/// Weighted average of the channels at every vertex and frame.
pub fn reconstruct(channels: &ChannelSet, weights: &WeightField) -> Result<WaveField, ReconError> {
    let series = weights
        .sensors
        .iter()
        .map(|&id| {
            channels
                .channel(id)
                .map(|c| c.samples.as_slice())
                .ok_or(ReconError::MissingChannel(id))
        })
        .collect::<Result<Vec<_>, _>>()?;
    reconstruct_series(&series, channels.rate, weights)
}

/// Vector mode: each acceleration component is reconstructed separately.
pub fn reconstruct_vector(
    series: &[(SensorId, Vec<[f64; 3]>)],
    rate: f64,
    weights: &WeightField,
) -> Result<[WaveField; 3], ReconError> {
    let find = |id: SensorId| {
        series
            .iter()
            .find(|(s, _)| *s == id)
            .map(|(_, v)| v)
            .ok_or(ReconError::MissingChannel(id))
    };
    let picked = weights.sensors.iter().map(|&id| find(id)).collect::<Result<Vec<_>, _>>()?;
    let component = |axis: usize| {
        let columns: Vec<Vec<f64>> = picked.iter().map(|s| s.iter().map(|a| a[axis]).collect()).collect();
        let refs: Vec<&[f64]> = columns.iter().map(Vec::as_slice).collect();
        reconstruct_series(&refs, rate, weights)
    };
    Ok([component(0)?, component(1)?, component(2)?])
}

fn reconstruct_series(series: &[&[f64]], rate: f64, weights: &WeightField) -> Result<WaveField, ReconError> {
    let orphans = weights.orphans();
    if !orphans.is_empty() {
        return Err(ReconError::Orphans(orphans));
    }
    let frames = series.first().map_or(0, |s| s.len());
    for (&id, s) in weights.sensors.iter().zip(series) {
        if s.len() != frames {
            return Err(ReconError::ChannelLength { sensor: id, found: s.len(), expected: frames });
        }
    }
    let vertices = weights.vertices();
    let mut field = WaveField::zeros(rate, vertices, frames);
    if vertices == 0 {
        return Ok(field);
    }
    field.data.par_chunks_mut(vertices).enumerate().for_each(|(t, out)| {
        let at_t: Vec<f64> = series.iter().map(|s| s[t]).collect();
        for (v, slot) in out.iter_mut().enumerate() {
            *slot = weights.normalized(v).iter().zip(&at_t).map(|(w, a)| w * a).sum();
        }
    });
    Ok(field)
}

/// Per-vertex RMS over the trailing `window_ms`.
pub fn rms_surface_map(field: &WaveField, window_ms: f64) -> Result<Vec<f64>, ReconError> {
    let n = window_samples(window_ms, field.rate);
    if !(window_ms > 0.0) || n == 0 || n > field.frames {
        return Err(ReconError::ShortField { frames: field.frames, window: n.max(1) });
    }
    let mut acc = vec![0.0; field.vertices];
    for t in field.frames - n..field.frames {
        for (a, x) in acc.iter_mut().zip(field.frame(t)) {
            *a += x * x;
        }
    }
    Ok(acc.into_iter().map(|s| (s / n as f64).sqrt()).collect())
}

/// `vertex,rms` rows.
pub fn rms_csv(map: &[f64]) -> String {
    let mut out = String::from("vertex,rms\n");
    for (v, x) in map.iter().enumerate() {
        let _ = writeln!(out, "{v},{x}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::ScalarChannel;

    fn id(n: u32) -> SensorId {
        SensorId::new(n).unwrap()
    }

    fn fields(rows: Vec<Vec<f64>>) -> DistanceFields {
        DistanceFields {
            anchors: rows.iter().enumerate().map(|(i, _)| (SensorId::from_slot(i).unwrap(), i)).collect(),
            rows,
        }
    }

    #[test]
    fn default_constants() {
        let p = WeightParams::default();
        assert!((p.phi(0.0) - (17.0 / 25.5 - 0.087)).abs() < 1e-15);
        assert!((p.phi(0.0) - 0.579_667).abs() < 1e-6);
        assert!((p.zero_crossing() - 169.902_299).abs() < 1e-6);
        assert_eq!(p.weight(170.0), 0.0);
        assert!(p.weight(169.0) > 0.0);
        let signed = WeightParams { rectify: false, ..p };
        assert!(signed.weight(400.0) < 0.0);
        assert_eq!(signed.weight(400.0), signed.phi(400.0));
    }

    #[test]
    fn alpha_must_be_positive() {
        let f = fields(vec![vec![0.0, 1.0]]);
        for alpha in [0.0, -1.0, f64::NAN] {
            let p = WeightParams { alpha, ..Default::default() };
            assert!(matches!(WeightField::from_distances(&f, p), Err(ReconError::Params(_))));
        }
    }

    #[test]
    fn single_active_sensor() {
        let w = WeightField::from_distances(&fields(vec![vec![0.0, 30.0, 60.0], vec![60.0, 30.0, 0.0]]), Default::default())
            .unwrap();
        let set = ChannelSet::new(
            1310.0,
            vec![ScalarChannel::new(id(1), vec![1.0, -2.0]), ScalarChannel::new(id(2), vec![0.0, 0.0])],
        )
        .unwrap();
        let f = reconstruct(&set, &w).unwrap();
        for v in 0..3 {
            let share = w.normalized(v)[0];
            assert_eq!(f.at(v, 0), share);
            assert_eq!(f.at(v, 1), -2.0 * share);
        }
        assert_eq!(w.normalized(1)[0], 0.5);
    }

    #[test]
    fn orphans_reported() {
        let w = WeightField::from_distances(&fields(vec![vec![0.0, 500.0, 171.0]]), Default::default()).unwrap();
        assert_eq!(w.orphans(), vec![1, 2]);
        let set = ChannelSet::new(1310.0, vec![ScalarChannel::new(id(1), vec![1.0])]).unwrap();
        assert_eq!(reconstruct(&set, &w), Err(ReconError::Orphans(vec![1, 2])));
    }

    #[test]
    fn missing_channel() {
        let w = WeightField::from_distances(&fields(vec![vec![0.0], vec![1.0]]), Default::default()).unwrap();
        let set = ChannelSet::new(1310.0, vec![ScalarChannel::new(id(1), vec![1.0])]).unwrap();
        assert_eq!(reconstruct(&set, &w), Err(ReconError::MissingChannel(id(2))));
    }

    #[test]
    fn rms_map_windows() {
        let mut f = WaveField::zeros(1000.0, 2, 500);
        for t in 0..500 {
            f.data[2 * t] = -3.0;
            f.data[2 * t + 1] = if t % 2 == 0 { 1.0 } else { -1.0 };
        }
        assert_eq!(rms_surface_map(&f, 250.0).unwrap(), vec![3.0, 1.0]);
        assert!(matches!(rms_surface_map(&f, 501.0), Err(ReconError::ShortField { .. })));
    }

    #[test]
    fn binary_round_trip() {
        let mut f = WaveField::zeros(1310.0, 3, 4);
        for (i, x) in f.data.iter_mut().enumerate() {
            *x = i as f64 * 0.25 - 1.0;
        }
        let bytes = f.to_bytes();
        assert_eq!(bytes.len(), 24 + 4 * 12);
        assert_eq!(WaveField::from_bytes(&bytes).unwrap(), f);
        assert!(WaveField::from_bytes(&bytes[..30]).is_err());
    }
}
