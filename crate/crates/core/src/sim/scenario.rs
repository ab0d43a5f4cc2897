//! Scenario files for the simulator.
//!
//! ```toml
//! version = 1
//!
//! [source]
//! tip = "II"            # or: sensor = 31, or: vertex = 1200
//!
//! [stimulus]
//! waveform = "sinusoid" # or "transient", which also takes decay (s)
//! frequency = 100.0     # Hz
//! amplitude = 5.0       # m/s²
//! onset = 0.0           # s
//! duration = 1.0        # s
//!
//! [recording]
//! duration = 1.1        # s; defaults to just long enough
//! range = 2             # ±g
//! noise = 0.0005        # g RMS
//! seed = 7
//!
//! [tissue]              # optional overrides
//! modulus = 130000.0    # Pa
//! density = 1020.0      # kg/m³
//! poisson = 0.5
//! ```

use serde::{Deserialize, Serialize};

use super::{
    propagate, sample_sensors, ContactEvent, SensorSampling, SimError, TissueParams, Waveform, DEFAULT_NOISE_G,
};
use crate::anatomy::HandModel;
use crate::geometry::{register_sensors, HandSurface, Registration};
use crate::recon::WaveField;
use crate::types::{Digit, FrameStream, FullScale, SensorConfig, SensorId, DEFAULT_RATE_HZ};

pub const SCENARIO_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    pub source: Source,
    pub stimulus: Stimulus,
    #[serde(default)]
    pub recording: Recording,
    #[serde(default)]
    pub tissue: Tissue,
}

/// Exactly one of the three must be set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Source {
    pub vertex: Option<usize>,
    pub sensor: Option<u32>,
    pub tip: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stimulus {
    pub waveform: String,
    pub frequency: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default)]
    pub onset: f64,
    pub duration: f64,
    pub decay: Option<f64>,
}

fn default_amplitude() -> f64 {
    5.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Recording {
    pub duration: Option<f64>,
    pub range: f64,
    pub noise: f64,
    pub seed: u64,
    pub rate: f64,
}

impl Default for Recording {
    fn default() -> Self {
        Recording {
            duration: None,
            range: 2.0,
            noise: DEFAULT_NOISE_G,
            seed: 0,
            rate: DEFAULT_RATE_HZ,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tissue {
    pub modulus: f64,
    pub density: f64,
    pub poisson: f64,
}

impl Default for Tissue {
    fn default() -> Self {
        let t = TissueParams::default();
        Tissue {
            modulus: t.youngs_modulus,
            density: t.density,
            poisson: t.poisson,
        }
    }
}

/// Everything a scenario run produces.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub event: ContactEvent,
    pub registration: Registration,
    pub field: WaveField,
    pub stream: FrameStream,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let s: Scenario = toml::from_str(text).map_err(|e| SimError::Scenario(e.to_string()))?;
        if s.version != SCENARIO_VERSION {
            return Err(SimError::Scenario(format!("unsupported scenario version {}", s.version)));
        }
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario is plain data")
    }

    pub fn tissue_params(&self) -> TissueParams {
        TissueParams {
            youngs_modulus: self.tissue.modulus,
            density: self.tissue.density,
            poisson: self.tissue.poisson,
            ..TissueParams::default()
        }
    }

    pub fn waveform(&self) -> Result<Waveform, SimError> {
        let s = &self.stimulus;
        match s.waveform.as_str() {
            "sinusoid" => Ok(Waveform::Sinusoid { frequency: s.frequency, amplitude: s.amplitude }),
            "transient" => Ok(Waveform::Transient {
                frequency: s.frequency,
                amplitude: s.amplitude,
                decay: s.decay.unwrap_or(0.02),
            }),
            other => Err(SimError::Scenario(format!("unknown waveform '{other}'"))),
        }
    }

    /// Source vertex on `surface`. Fingertips are located on the reference
    /// hand scaled to the surface.
    pub fn source_vertex(&self, surface: &HandSurface, registration: &Registration) -> Result<usize, SimError> {
        let src = &self.source;
        match (src.vertex, src.sensor, src.tip.as_deref()) {
            (Some(v), None, None) => {
                if v < surface.len() {
                    Ok(v)
                } else {
                    Err(SimError::Scenario(format!("vertex {v} is not on the surface ({} vertices)", surface.len())))
                }
            }
            (None, Some(n), None) => {
                let id = SensorId::new(n).map_err(|e| SimError::Scenario(e.to_string()))?;
                registration.anchor(id).ok_or(SimError::AnchorMissing(id))
            }
            (None, None, Some(tip)) => {
                let digit: Digit = tip.parse().map_err(|e: String| SimError::Scenario(e))?;
                let apex = HandModel::standard().fingertip(digit) * surface.scale();
                Ok(surface.nearest_vertex(&apex).0)
            }
            _ => Err(SimError::Scenario("source needs exactly one of vertex, sensor or tip".into())),
        }
    }

    pub fn run(&self, surface: &HandSurface, config: &SensorConfig) -> Result<Simulation, SimError> {
        let registration = register_sensors(surface, config)?;
        let event = ContactEvent {
            source: self.source_vertex(surface, &registration)?,
            waveform: self.waveform()?,
            onset: self.stimulus.onset,
            duration: self.stimulus.duration,
        };
        event.validate()?;
        let tissue = self.tissue_params();
        tissue.validate()?;
        let rate = self.recording.rate;
        let duration = match self.recording.duration {
            Some(d) => d,
            None => {
                let far = surface.distance_field(event.source)?.into_iter().fold(0.0, f64::max);
                let needed = event.onset + event.duration + far / (tissue.shear_speed() * 1000.0);
                (needed * rate).ceil() / rate
            }
        };
        let field = propagate(surface, &event, &tissue, duration, rate)?;
        let sampling = SensorSampling {
            range: FullScale::from_g(self.recording.range).map_err(|e| SimError::Scenario(e.to_string()))?,
            noise_g: self.recording.noise,
            seed: self.recording.seed,
            rate: DEFAULT_RATE_HZ,
        };
        let stream = sample_sensors(&field, surface, &registration, config, &sampling)?;
        Ok(Simulation { event, registration, field, stream })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TAP: &str = r#"
version = 1
[source]
tip = "II"
[stimulus]
waveform = "transient"
frequency = 250.0
duration = 0.1
decay = 0.01
[recording]
seed = 3
"#;

    #[test]
    fn parse_with_defaults() {
        let s = Scenario::from_toml(TAP).unwrap();
        assert_eq!(s.stimulus.amplitude, 5.0);
        assert_eq!(s.recording.range, 2.0);
        assert_eq!(s.recording.seed, 3);
        assert!(matches!(s.waveform().unwrap(), Waveform::Transient { decay, .. } if decay == 0.01));
        assert_eq!(Scenario::from_toml(&s.to_toml()).unwrap(), s);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(Scenario::from_toml(&TAP.replace("version = 1", "version = 2")).is_err());
        assert!(Scenario::from_toml(&format!("{TAP}\nbogus = 1\n")).is_err());
        let both = TAP.replace("tip = \"II\"", "tip = \"II\"\nvertex = 3");
        let s = Scenario::from_toml(&both).unwrap();
        let surface = crate::geometry::fixture::fixture_surface().unwrap();
        let reg = Registration { anchors: vec![], snaps: vec![], max_snap: 0.0 };
        assert!(s.source_vertex(&surface, &reg).is_err());
    }
}
