//! Damped traveling waves on the hand surface from a point contact, and
//! virtual sensing of the resulting field.
//!
//! The field at vertex p is `A(d) · s(t − d / v_s)`, where d is the geodesic
//! distance from the source, s the source waveform and A the damping law
//! normalized to 1 at the source. Propagation is single-path: no reflections
//! and no dispersion.

pub mod scenario;

use std::f64::consts::TAU;

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{GeometryError, HandSurface, Registration};
use crate::recon::{WaveField, WeightParams};
use crate::types::{FrameStream, FullScale, RawSample, SensorConfig, SensorId, DEFAULT_RATE_HZ, STANDARD_GRAVITY};

pub use scenario::Scenario;

/// Upper end of the accelerometer bandwidth, Hz.
pub const MAX_FREQUENCY_HZ: f64 = 800.0;
/// Default sensor noise, g RMS per axis.
pub const DEFAULT_NOISE_G: f64 = 0.5e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid tissue parameters: {0}")]
    Tissue(String),
    #[error("invalid contact event: {0}")]
    Event(String),
    #[error("recording of {duration} s is shorter than the {needed} s the event needs")]
    TooShort { duration: f64, needed: f64 },
    #[error("sensor {0} has no anchor vertex")]
    AnchorMissing(SensorId),
    #[error("field has {found} vertices, surface has {expected}")]
    VertexCount { found: usize, expected: usize },
    #[error("scenario: {0}")]
    Scenario(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Relative amplitude as a function of distance from the source.
#[derive(Debug, Clone, PartialEq)]
pub enum Damping {
    /// max(0, gain / (d + α) − C), divided by its value at d = 0.
    Law { gain: f64, alpha: f64, c: f64 },
    /// Piecewise-linear (distance mm, amplitude) points with increasing
    /// distance, held constant past the ends and normalized at d = 0.
    Curve(Vec<(f64, f64)>),
}

impl Default for Damping {
    fn default() -> Self {
        let w = WeightParams::default();
        Damping::Law { gain: w.gain, alpha: w.alpha, c: w.c }
    }
}

impl Damping {
    fn raw(&self, d: f64) -> f64 {
        match self {
            Damping::Law { gain, alpha, c } => (gain / (d + alpha) - c).max(0.0),
            Damping::Curve(points) => {
                let i = points.partition_point(|p| p.0 <= d);
                match i {
                    0 => points[0].1,
                    i if i == points.len() => points[i - 1].1,
                    i => {
                        let ((d0, a0), (d1, a1)) = (points[i - 1], points[i]);
                        a0 + (a1 - a0) * (d - d0) / (d1 - d0)
                    }
                }
            }
        }
    }

    /// Relative amplitude at distance `d` mm; 1 at the source.
    pub fn amplitude(&self, d: f64) -> f64 {
        self.raw(d) / self.raw(0.0)
    }

    fn validate(&self) -> Result<(), SimError> {
        match self {
            Damping::Law { alpha, .. } if !(*alpha > 0.0) => Err(SimError::Tissue("damping alpha must be positive".into())),
            Damping::Law { .. } if !(self.raw(0.0) > 0.0) => Err(SimError::Tissue("damping law is zero at the source".into())),
            Damping::Curve(p) if p.is_empty() => Err(SimError::Tissue("empty damping curve".into())),
            Damping::Curve(p) => {
                let increasing = p.windows(2).all(|w| w[1].0 > w[0].0);
                let nonincreasing = p.windows(2).all(|w| w[1].1 <= w[0].1);
                if !increasing || !nonincreasing || p.iter().any(|q| q.1 < 0.0) || !(self.raw(0.0) > 0.0) {
                    return Err(SimError::Tissue(
                        "damping curve needs increasing distances and nonincreasing, nonnegative amplitudes".into(),
                    ));
                }
                Ok(())
            }
            Damping::Law { .. } => Ok(()),
        }
    }
}

/// Mechanical properties of hand tissue.
#[derive(Debug, Clone, PartialEq)]
pub struct TissueParams {
    /// Elastic modulus, Pa.
    pub youngs_modulus: f64,
    /// kg/m³
    pub density: f64,
    pub poisson: f64,
    pub damping: Damping,
}

impl Default for TissueParams {
    fn default() -> Self {
        TissueParams {
            youngs_modulus: 0.13e6,
            density: 1020.0,
            poisson: 0.5,
            damping: Damping::default(),
        }
    }
}

impl TissueParams {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.youngs_modulus > 0.0 && self.density > 0.0) {
            return Err(SimError::Tissue("modulus and density must be positive".into()));
        }
        if !(self.poisson > -1.0 && self.poisson <= 0.5) {
            return Err(SimError::Tissue(format!("Poisson ratio {} outside (-1, 0.5]", self.poisson)));
        }
        self.damping.validate()
    }

    /// Shear wave speed sqrt(E / (2ρ(1 + μ))), m/s.
    pub fn shear_speed(&self) -> f64 {
        (self.youngs_modulus / (2.0 * self.density * (1.0 + self.poisson))).sqrt()
    }
}

/// Shear wavelength at `frequency` Hz, in mm.
pub fn wavelength(params: &TissueParams, frequency: f64) -> Result<f64, SimError> {
    if !(frequency > 0.0) {
        return Err(SimError::Event(format!("frequency must be positive, got {frequency}")));
    }
    Ok(params.shear_speed() / frequency * 1000.0)
}

/// Source acceleration over time, m/s². Zero outside the event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Waveform {
    Sinusoid { frequency: f64, amplitude: f64 },
    /// Exponentially decaying carrier with time constant `decay` seconds.
    Transient { frequency: f64, amplitude: f64, decay: f64 },
}

impl Waveform {
    pub fn frequency(&self) -> f64 {
        match *self {
            Waveform::Sinusoid { frequency, .. } | Waveform::Transient { frequency, .. } => frequency,
        }
    }

    /// Value at time `t` after the event onset.
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Waveform::Sinusoid { frequency, amplitude } => amplitude * (TAU * frequency * t).sin(),
            Waveform::Transient { frequency, amplitude, decay } => {
                amplitude * (-t / decay).exp() * (TAU * frequency * t).sin()
            }
        }
    }
}

/// A contact at one surface vertex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactEvent {
    pub source: usize,
    pub waveform: Waveform,
    /// s
    pub onset: f64,
    /// s
    pub duration: f64,
}

impl ContactEvent {
    pub fn validate(&self) -> Result<(), SimError> {
        let f = self.waveform.frequency();
        if !(f > 0.0 && f <= MAX_FREQUENCY_HZ) {
            return Err(SimError::Event(format!("frequency {f} Hz outside (0, {MAX_FREQUENCY_HZ}]")));
        }
        if let Waveform::Transient { decay, .. } = self.waveform {
            if !(decay > 0.0) {
                return Err(SimError::Event("transient decay must be positive".into()));
            }
        }
        if !(self.onset >= 0.0 && self.duration > 0.0 && self.onset.is_finite() && self.duration.is_finite()) {
            return Err(SimError::Event("onset must be nonnegative and duration positive".into()));
        }
        Ok(())
    }

    /// Source value at absolute time `t`.
    pub fn source_value(&self, t: f64) -> f64 {
        let local = t - self.onset;
        if (0.0..self.duration).contains(&local) {
            self.waveform.value(local)
        } else {
            0.0
        }
    }
}

/// Ground-truth field sampled at `rate` for `duration` seconds. Values are
/// accelerations along the local surface normal, m/s².
pub fn propagate(
    surface: &HandSurface,
    event: &ContactEvent,
    params: &TissueParams,
    duration: f64,
    rate: f64,
) -> Result<WaveField, SimError> {
    params.validate()?;
    event.validate()?;
    if !(rate > 0.0) {
        return Err(SimError::Event(format!("rate must be positive, got {rate}")));
    }
    let distances = surface.distance_field(event.source)?;
    let speed_mm = params.shear_speed() * 1000.0;
    let max_delay = distances.iter().copied().fold(0.0, f64::max) / speed_mm;
    let needed = event.onset + event.duration + max_delay;
    if duration < needed {
        return Err(SimError::TooShort { duration, needed });
    }
    let amplitude: Vec<f64> = distances.iter().map(|&d| params.damping.amplitude(d)).collect();
    let delay: Vec<f64> = distances.iter().map(|&d| d / speed_mm).collect();
    let frames = (duration * rate).round() as usize;
    let vertices = surface.len();
    let mut field = WaveField::zeros(rate, vertices, frames);
    field.data.par_chunks_mut(vertices).enumerate().for_each(|(t, out)| {
        let time = t as f64 / rate;
        for (v, slot) in out.iter_mut().enumerate() {
            *slot = amplitude[v] * event.source_value(time - delay[v]);
        }
    });
    Ok(field)
}

/// How virtual sensors digitize the field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorSampling {
    pub range: FullScale,
    /// Gaussian noise per axis, g RMS.
    pub noise_g: f64,
    pub seed: u64,
    /// Output frame rate, Hz.
    pub rate: f64,
}

impl Default for SensorSampling {
    fn default() -> Self {
        SensorSampling {
            range: FullScale::G2,
            noise_g: DEFAULT_NOISE_G,
            seed: 0,
            rate: DEFAULT_RATE_HZ,
        }
    }
}

/// Linearly interpolated value of vertex `v` at time `t`, clamped to the
/// field's time span.
fn interpolate(field: &WaveField, v: usize, t: f64) -> f64 {
    let x = (t * field.rate).clamp(0.0, (field.frames - 1) as f64);
    let i = x.floor() as usize;
    let frac = x - i as f64;
    if frac == 0.0 || i + 1 >= field.frames {
        field.at(v, i)
    } else {
        field.at(v, i) * (1.0 - frac) + field.at(v, i + 1) * frac
    }
}

/// Read the field at each attached sensor's anchor, in the sensor's axes,
/// as raw counts.
///
/// The hand is taken palm down, so the hand frame's z axis points up and a
/// sensor at rest reads +1 g along it. Surface motion is along the anchor
/// vertex normal.
pub fn sample_sensors(
    field: &WaveField,
    surface: &HandSurface,
    registration: &Registration,
    config: &SensorConfig,
    sampling: &SensorSampling,
) -> Result<FrameStream, SimError> {
    if field.vertices != surface.len() {
        return Err(SimError::VertexCount { found: field.vertices, expected: surface.len() });
    }
    if !(sampling.rate > 0.0) || !(sampling.noise_g >= 0.0) {
        return Err(SimError::Event("sampling rate must be positive and noise nonnegative".into()));
    }
    let sensors: Vec<(SensorId, usize, Vector3<f64>)> = config
        .present_poses()
        .map(|p| {
            let v = registration.anchor(p.id).ok_or(SimError::AnchorMissing(p.id))?;
            Ok((p.id, v, surface.normal(v)))
        })
        .collect::<Result<_, SimError>>()?;

    let mut stream = FrameStream::new(sampling.rate, sampling.range, config.branches());
    if field.frames == 0 {
        return Ok(stream);
    }
    let same_rate = field.rate == sampling.rate;
    let frames = if same_rate {
        field.frames
    } else {
        ((field.frames - 1) as f64 / field.rate * sampling.rate).floor() as usize + 1
    };
    let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
    let noise = Normal::new(0.0, sampling.noise_g).map_err(|e| SimError::Event(e.to_string()))?;
    let gravity = Vector3::new(0.0, 0.0, STANDARD_GRAVITY);
    for k in 0..frames {
        let t = k as f64 / sampling.rate;
        let readings = sensors
            .iter()
            .map(|&(id, v, normal)| {
                let a = if same_rate { field.at(v, k) } else { interpolate(field, v, t) };
                let local = config.pose(id).to_local(&(normal * a + gravity)) / STANDARD_GRAVITY;
                let counts = [0, 1, 2].map(|axis| {
                    let n = if sampling.noise_g > 0.0 { noise.sample(&mut rng) } else { 0.0 };
                    sampling.range.quantize(local[axis] + n)
                });
                (id, counts)
            })
            .collect();
        stream.frames.push(RawSample {
            index: k as u64,
            range: sampling.range,
            readings,
        });
    }
    Ok(stream)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shear_speed_and_wavelength() {
        let p = TissueParams::default();
        let v = p.shear_speed();
        assert!((v - (0.13e6f64 / 3060.0).sqrt()).abs() < 1e-12);
        assert!((v - 6.52).abs() < 0.01);
        let l100 = wavelength(&p, 100.0).unwrap();
        assert!((l100 - 65.18).abs() < 0.05);
        assert_eq!(wavelength(&p, 200.0).unwrap(), l100 / 2.0);
        assert!(wavelength(&p, 0.0).is_err());
    }

    #[test]
    fn damping_ratio() {
        let d = Damping::default();
        let phi = |x: f64| 17.0 / (x + 25.5) - 0.087;
        assert_eq!(d.amplitude(0.0), 1.0);
        assert!((d.amplitude(50.0) / d.amplitude(100.0) - phi(50.0) / phi(100.0)).abs() < 1e-12);
        assert_eq!(d.amplitude(200.0), 0.0);
    }

    #[test]
    fn damping_curve() {
        let d = Damping::Curve(vec![(0.0, 2.0), (100.0, 1.0), (200.0, 0.0)]);
        assert!(d.validate().is_ok());
        assert_eq!(d.amplitude(50.0), 0.75);
        assert_eq!(d.amplitude(500.0), 0.0);
        assert!(Damping::Curve(vec![(0.0, 1.0), (10.0, 2.0)]).validate().is_err());
    }

    #[test]
    fn event_validation() {
        let ok = ContactEvent {
            source: 0,
            waveform: Waveform::Sinusoid { frequency: 800.0, amplitude: 1.0 },
            onset: 0.0,
            duration: 0.1,
        };
        assert!(ok.validate().is_ok());
        let high = ContactEvent { waveform: Waveform::Sinusoid { frequency: 801.0, amplitude: 1.0 }, ..ok };
        assert!(high.validate().is_err());
        assert_eq!(ok.source_value(0.1), 0.0);
        assert_eq!(ok.source_value(-0.01), 0.0);
    }
}
