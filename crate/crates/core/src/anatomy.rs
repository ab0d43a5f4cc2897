//! Anthropometric hand model and the default sensor layout.
//!
//! The hand frame has its origin at the wrist center, x across the back of
//! the hand (digit I toward -x, digit V toward +x), y toward the fingertips
//! and z out of the dorsum. Units are millimeters.
//!
//! The model is a union of elliptic tubes: one for the palm and one per
//! digit, with rounded tips on the digits. Sensor placements are stored as a
//! versioned table of surface coordinates on those tubes.

use nalgebra::{Matrix3, Vector3};

use crate::types::{Anatomy, ConfigError, Digit, SensorConfig, SensorId, SensorPose};

/// Version of the placement table below.
pub const LAYOUT_VERSION: u32 = 1;

/// Surface region of the hand model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Palm,
    Digit(Digit),
}

impl Region {
    /// 0 for the palm, 1..=5 for digits I..V.
    pub fn code(self) -> u8 {
        match self {
            Region::Palm => 0,
            Region::Digit(d) => d.index() as u8 + 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Region> {
        match code {
            0 => Some(Region::Palm),
            1..=5 => Some(Region::Digit(Digit::ALL[code as usize - 1])),
            _ => None,
        }
    }
}

/// An elliptic tube along `dir`, optionally closed by a half-ellipsoid cap
/// at its far end.
#[derive(Debug, Clone)]
pub struct Segment {
    pub region: Region,
    pub start: Vector3<f64>,
    pub dir: Vector3<f64>,
    pub length: f64,
    pub half_width: f64,
    pub half_height: f64,
    /// Length of the rounded tip beyond `length`; zero for an open end.
    pub cap: f64,
}

impl Segment {
    fn new(region: Region, start: [f64; 3], dir: [f64; 2], length: f64, hw: f64, hh: f64, cap: f64) -> Self {
        Segment {
            region,
            start: Vector3::from(start),
            dir: Vector3::new(dir[0], dir[1], 0.0).normalize(),
            length,
            half_width: hw,
            half_height: hh,
            cap,
        }
    }

    /// Lateral and dorsal unit vectors of the cross-section.
    pub fn frame(&self) -> (Vector3<f64>, Vector3<f64>) {
        let lateral = self.dir.cross(&Vector3::z()).normalize();
        let up = lateral.cross(&self.dir);
        (lateral, up)
    }

    /// Point and outward normal on the tube wall at arc parameter `t` and
    /// angle `theta` (radians; π/2 is the dorsal top).
    pub fn wall(&self, t: f64, theta: f64) -> (Vector3<f64>, Vector3<f64>) {
        let (lat, up) = self.frame();
        let (s, c) = theta.sin_cos();
        let p = self.start + self.dir * t + lat * (self.half_width * c) + up * (self.half_height * s);
        let n = (lat * (c / self.half_width) + up * (s / self.half_height)).normalize();
        (p, n)
    }

    /// Point and normal on the tip cap at elevation `beta` (0 at the rim,
    /// π/2 at the apex).
    pub fn tip(&self, beta: f64, theta: f64) -> (Vector3<f64>, Vector3<f64>) {
        let (lat, up) = self.frame();
        let (s, c) = theta.sin_cos();
        let (sb, cb) = beta.sin_cos();
        let center = self.start + self.dir * self.length;
        let p = center
            + lat * (self.half_width * c * cb)
            + up * (self.half_height * s * cb)
            + self.dir * (self.cap * sb);
        let n = (lat * (c * cb / self.half_width)
            + up * (s * cb / self.half_height)
            + self.dir * (sb / self.cap))
            .normalize();
        (p, n)
    }

    pub fn apex(&self) -> Vector3<f64> {
        self.start + self.dir * (self.length + self.cap)
    }

    /// Strict interior test, shrunk by `margin` mm.
    pub fn contains(&self, p: &Vector3<f64>, margin: f64) -> bool {
        let (lat, up) = self.frame();
        let d = p - self.start;
        let t = d.dot(&self.dir);
        let u = d.dot(&lat) / (self.half_width - margin);
        let v = d.dot(&up) / (self.half_height - margin);
        let radial = u * u + v * v;
        if t > margin && t < self.length {
            radial < 1.0
        } else if self.cap > 0.0 && t >= self.length {
            let w = (t - self.length) / (self.cap - margin);
            radial + w * w < 1.0
        } else {
            false
        }
    }
}

/// Placement of one sensor on the model surface.
#[derive(Debug, Clone, Copy)]
enum Site {
    /// On a digit tube at arc parameter `t` (mm) and angle (degrees).
    Digit(Digit, f64, f64),
    /// On the dorsal palm surface at (x, y) in mm.
    Palm(f64, f64),
}

// Digit II-V tubes start 10 mm inside the palm, so the metacarpophalangeal
// joint sits at t = 10.
const KNUCKLE: f64 = 10.0;

/// Digit tube geometry: base x, splay direction, phalanx lengths
/// (proximal, middle, distal), half width and half height.
struct Finger {
    digit: Digit,
    base_x: f64,
    dir: [f64; 2],
    phalanges: [f64; 3],
    hw: f64,
    hh: f64,
}

const PALM_LENGTH: f64 = 95.0;
const PALM_HALF_WIDTH: f64 = 45.0;
const PALM_HALF_HEIGHT: f64 = 13.0;

fn fingers() -> [Finger; 4] {
    let splay = |deg: f64| {
        let r = deg.to_radians();
        [r.sin(), r.cos()]
    };
    [
        Finger { digit: Digit::II, base_x: -30.0, dir: splay(-8.0), phalanges: [40.0, 23.0, 20.0], hw: 7.0, hh: 6.0 },
        Finger { digit: Digit::III, base_x: -10.0, dir: splay(-2.5), phalanges: [45.0, 27.0, 21.0], hw: 7.0, hh: 6.0 },
        Finger { digit: Digit::IV, base_x: 10.0, dir: splay(3.0), phalanges: [42.0, 26.0, 21.0], hw: 7.0, hh: 6.0 },
        Finger { digit: Digit::V, base_x: 30.0, dir: splay(10.0), phalanges: [32.0, 18.0, 18.0], hw: 6.5, hh: 5.5 },
    ]
}

/// Sensor placement table, layout version 1.
fn site(id: SensorId) -> Site {
    let n = id.get();
    if id.digit() == Digit::I {
        return match n {
            41 => Site::Palm(-36.0, 55.0),
            42 => Site::Palm(-26.5, 47.0),
            43 => Site::Palm(-28.0, 12.0),
            44 => Site::Digit(Digit::I, 30.0, 90.0),
            45 => Site::Digit(Digit::I, 88.0, 90.0),
            _ => Site::Digit(Digit::I, 62.0, 90.0),
        };
    }
    let finger = fingers()
        .into_iter()
        .find(|f| f.digit == id.digit())
        .expect("digits II-V have finger entries");
    let [pp, mp, dp] = finger.phalanges;
    let x = finger.base_x;
    let side = if id.is_odd() { 0.0 } else { 180.0 };
    match Anatomy::of(id) {
        Anatomy::DP => Site::Digit(finger.digit, KNUCKLE + pp + mp + 0.5 * dp, side),
        Anatomy::MP => Site::Digit(finger.digit, KNUCKLE + pp + 0.5 * mp, side),
        Anatomy::PP => Site::Digit(finger.digit, KNUCKLE + 0.5 * pp, 90.0),
        Anatomy::MH => Site::Palm(x, 88.0),
        Anatomy::MS => Site::Palm(0.92 * x, 60.0),
        Anatomy::MB => Site::Palm(0.85 * x, 35.0),
        _ => Site::Palm(0.7 * x, 12.0),
    }
}

/// The reference hand at scale 1.
#[derive(Debug, Clone)]
pub struct HandModel {
    pub segments: Vec<Segment>,
}

impl HandModel {
    pub fn standard() -> Self {
        let mut segments = vec![Segment::new(
            Region::Palm,
            [0.0, 0.0, 0.0],
            [0.0, 1.0],
            PALM_LENGTH,
            PALM_HALF_WIDTH,
            PALM_HALF_HEIGHT,
            0.0,
        )];
        segments.push(Segment::new(
            Region::Digit(Digit::I),
            [-30.0, 18.0, 0.0],
            [-0.6, 0.8],
            100.0,
            9.0,
            8.0,
            7.0,
        ));
        for f in fingers() {
            let length = KNUCKLE + f.phalanges.iter().sum::<f64>();
            segments.push(Segment::new(
                Region::Digit(f.digit),
                [f.base_x, PALM_LENGTH - KNUCKLE, 0.0],
                f.dir,
                length,
                f.hw,
                f.hh,
                f.hh,
            ));
        }
        HandModel { segments }
    }

    pub fn segment(&self, region: Region) -> &Segment {
        self.segments
            .iter()
            .find(|s| s.region == region)
            .expect("model has one segment per region")
    }

    pub fn palm(&self) -> &Segment {
        self.segment(Region::Palm)
    }

    /// Apex of a digit's rounded tip.
    pub fn fingertip(&self, digit: Digit) -> Vector3<f64> {
        self.segment(Region::Digit(digit)).apex()
    }

    /// Whether `p` lies inside any segment other than `except`.
    pub fn inside_other(&self, p: &Vector3<f64>, except: Region, margin: f64) -> bool {
        self.segments
            .iter()
            .filter(|s| s.region != except)
            .any(|s| {
                if s.region == Region::Palm {
                    // Palm is closed at its distal end by a flat cap.
                    let y = p.y;
                    let u = p.x / (s.half_width - margin);
                    let v = p.z / (s.half_height - margin);
                    y > s.start.y + margin && y < s.start.y + s.length && u * u + v * v < 1.0
                } else {
                    s.contains(p, margin)
                }
            })
    }

    /// Surface point, outward normal and longitudinal direction of a sensor.
    pub fn sensor_site(&self, id: SensorId) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
        match site(id) {
            Site::Digit(digit, t, theta) => {
                let seg = self.segment(Region::Digit(digit));
                let (p, n) = seg.wall(t, theta.to_radians());
                (p, n, seg.dir)
            }
            Site::Palm(x, y) => {
                let palm = self.palm();
                let theta = (x / palm.half_width).acos();
                let (p, n) = palm.wall(y, theta);
                (p, n, palm.dir)
            }
        }
    }
}

/// Sensor frame with z along the outward surface normal and y along the
/// limb, projected off the normal.
fn sensor_frame(normal: &Vector3<f64>, along: &Vector3<f64>) -> Matrix3<f64> {
    let z = normal.normalize();
    let y = (along - z * along.dot(&z)).normalize();
    let x = y.cross(&z);
    Matrix3::from_columns(&[x, y, z])
}

/// The 42-sensor layout on the reference hand, with positions scaled by
/// `hand_scale` about the wrist origin.
pub fn default_config(hand_scale: f64) -> Result<SensorConfig, ConfigError> {
    if !(0.5..=2.0).contains(&hand_scale) {
        return Err(ConfigError::ScaleOutOfRange(hand_scale));
    }
    let model = HandModel::standard();
    let poses = SensorId::all()
        .map(|id| {
            let (p, n, along) = model.sensor_site(id);
            SensorPose::new(id, p * hand_scale, sensor_frame(&n, &along))
        })
        .collect::<Result<Vec<_>, _>>()?;
    SensorConfig::new(poses)
}
