//! Shared domain types: sensor numbering, poses, the array configuration,
//! raw and calibrated samples, and frame streams.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

/// Standard gravity, m/s² per g.
pub const STANDARD_GRAVITY: f64 = 9.80665;

/// Effective frame rate of the acquisition system, frames/s.
pub const DEFAULT_RATE_HZ: f64 = 1310.0;

/// Number of accelerometers on a complete array.
pub const SENSOR_COUNT: usize = 42;

/// Tolerance used for orthonormality and determinant checks on poses.
const ROTATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("sensor id {0} does not exist (valid: 1-9, 11-19, 21-29, 31-39, 41-46)")]
    UnknownSensor(u32),
    #[error("hand scale {0} outside [0.5, 2.0]")]
    ScaleOutOfRange(f64),
    #[error("orientation of sensor {0} is not a proper rotation")]
    NotARotation(SensorId),
    #[error("expected {SENSOR_COUNT} unique sensors, got {0}")]
    WrongSensorSet(usize),
    #[error("sensor {id} has anatomy {found}, expected {expected}")]
    AnatomyMismatch {
        id: SensorId,
        found: Anatomy,
        expected: Anatomy,
    },
    #[error("config parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibrationError {
    #[error("unsupported full-scale range ±{0} g (supported: 2, 4, 6, 8, 16)")]
    UnknownRange(f64),
    #[error("sample {0} is already calibrated")]
    NotRaw(u64),
    #[error("sensor {id} count {count} exceeds the ±{range} g output range")]
    CountOutOfRange { id: SensorId, count: i16, range: FullScale },
}

/// Sensor number as printed on the array. Numbers 10, 20, 30 and 40 are
/// not populated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SensorId(u8);

impl SensorId {
    pub fn new(id: u32) -> Result<Self, ConfigError> {
        let valid = match id {
            1..=9 | 11..=19 | 21..=29 | 31..=39 | 41..=46 => true,
            _ => false,
        };
        if valid {
            Ok(SensorId(id as u8))
        } else {
            Err(ConfigError::UnknownSensor(id))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn digit(self) -> Digit {
        match self.0 {
            1..=9 => Digit::V,
            11..=19 => Digit::IV,
            21..=29 => Digit::III,
            31..=39 => Digit::II,
            _ => Digit::I,
        }
    }

    /// Odd sensors sit on the SEL=1 address of their bus.
    pub fn is_odd(self) -> bool {
        self.0 % 2 == 1
    }

    /// All 42 ids in ascending order.
    pub fn all() -> impl Iterator<Item = SensorId> {
        (1u32..=46).filter_map(|i| SensorId::new(i).ok())
    }

    /// Dense index 0..42 in ascending id order.
    pub fn slot(self) -> usize {
        let n = self.0 as usize;
        if n <= 9 {
            n - 1
        } else {
            // Each decade above the first skips one number.
            n - 1 - n / 10
        }
    }

    pub fn from_slot(slot: usize) -> Option<SensorId> {
        SensorId::all().nth(slot)
    }
}

impl fmt::Display for SensorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Digits of the hand; each owns one branch of the flexible circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Digit {
    I,
    II,
    III,
    IV,
    V,
}

impl Digit {
    pub const ALL: [Digit; 5] = [Digit::I, Digit::II, Digit::III, Digit::IV, Digit::V];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn sensors(self) -> impl Iterator<Item = SensorId> {
        SensorId::all().filter(move |s| s.digit() == self)
    }

    pub fn roman(self) -> &'static str {
        match self {
            Digit::I => "I",
            Digit::II => "II",
            Digit::III => "III",
            Digit::IV => "IV",
            Digit::V => "V",
        }
    }
}

impl FromStr for Digit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "I" | "1" => Ok(Digit::I),
            "II" | "2" => Ok(Digit::II),
            "III" | "3" => Ok(Digit::III),
            "IV" | "4" => Ok(Digit::IV),
            "V" | "5" => Ok(Digit::V),
            other => Err(format!("unknown digit '{other}'")),
        }
    }
}

/// Set of branches present on the device. Removing a branch removes all of
/// its sensors from every frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BranchSet(u8);

impl BranchSet {
    pub const ALL: BranchSet = BranchSet(0b1_1111);

    pub fn empty() -> Self {
        BranchSet(0)
    }

    pub fn from_bits(bits: u8) -> Option<Self> {
        (bits & !Self::ALL.0 == 0).then_some(BranchSet(bits))
    }

    pub fn bits(self) -> u8 {
        self.0
    }

    pub fn contains(self, digit: Digit) -> bool {
        self.0 & (1 << digit.index()) != 0
    }

    pub fn with(self, digit: Digit) -> Self {
        BranchSet(self.0 | 1 << digit.index())
    }

    pub fn without(self, digit: Digit) -> Self {
        BranchSet(self.0 & !(1 << digit.index()))
    }

    pub fn digits(self) -> impl Iterator<Item = Digit> {
        Digit::ALL.into_iter().filter(move |d| self.contains(*d))
    }

    pub fn sensors(self) -> impl Iterator<Item = SensorId> {
        SensorId::all().filter(move |s| self.contains(s.digit()))
    }
}

impl Default for BranchSet {
    fn default() -> Self {
        BranchSet::ALL
    }
}

/// Anatomical location of a sensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Anatomy {
    /// Distal phalanx
    DP,
    /// Middle phalanx
    MP,
    /// Proximal phalanx
    PP,
    /// Metacarpal head
    MH,
    /// Metacarpal shaft
    MS,
    /// Metacarpal base
    MB,
    /// Carpals
    C,
    /// Between the metacarpal shafts of digits I and II
    InterMsI2,
    /// Between metacarpal shaft and base of digit II
    MsMb2,
}

impl Anatomy {
    /// Anatomical assignment of each sensor number.
    pub fn of(id: SensorId) -> Anatomy {
        match id.get() {
            41 => Anatomy::InterMsI2,
            42 => Anatomy::MsMb2,
            43 => Anatomy::C,
            44 => Anatomy::MS,
            45 => Anatomy::DP,
            46 => Anatomy::PP,
            n => match n % 10 {
                1 | 2 => Anatomy::DP,
                3 | 4 => Anatomy::MP,
                5 => Anatomy::MH,
                6 => Anatomy::PP,
                7 => Anatomy::MB,
                8 => Anatomy::MS,
                _ => Anatomy::C,
            },
        }
    }

    pub fn code(self) -> &'static str {
        match self {
            Anatomy::DP => "DP",
            Anatomy::MP => "MP",
            Anatomy::PP => "PP",
            Anatomy::MH => "MH",
            Anatomy::MS => "MS",
            Anatomy::MB => "MB",
            Anatomy::C => "C",
            Anatomy::InterMsI2 => "InterMS_I_II",
            Anatomy::MsMb2 => "MS_MB_II",
        }
    }
}

impl fmt::Display for Anatomy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Anatomy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "DP" => Anatomy::DP,
            "MP" => Anatomy::MP,
            "PP" => Anatomy::PP,
            "MH" => Anatomy::MH,
            "MS" => Anatomy::MS,
            "MB" => Anatomy::MB,
            "C" => Anatomy::C,
            "InterMS_I_II" => Anatomy::InterMsI2,
            "MS_MB_II" => Anatomy::MsMb2,
            other => return Err(format!("unknown anatomy '{other}'")),
        })
    }
}

/// Position (mm, hand frame) and orientation of one sensor. Columns of
/// `orientation` are the sensor's local x, y, z axes in the hand frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorPose {
    pub id: SensorId,
    pub anatomy: Anatomy,
    pub position: Vector3<f64>,
    pub orientation: Matrix3<f64>,
}

impl SensorPose {
    pub fn new(
        id: SensorId,
        position: Vector3<f64>,
        orientation: Matrix3<f64>,
    ) -> Result<Self, ConfigError> {
        let gram = orientation.transpose() * orientation - Matrix3::identity();
        let orthonormal = gram.iter().all(|e| e.abs() <= ROTATION_TOLERANCE);
        let proper = (orientation.determinant() - 1.0).abs() <= ROTATION_TOLERANCE;
        if !orthonormal || !proper {
            return Err(ConfigError::NotARotation(id));
        }
        Ok(SensorPose {
            id,
            anatomy: Anatomy::of(id),
            position,
            orientation,
        })
    }

    /// Express a hand-frame vector in the sensor's local axes.
    pub fn to_local(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.orientation.transpose() * v
    }
}

/// The full array: 42 poses in ascending id order plus the set of branches
/// currently attached.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorConfig {
    sensors: Vec<SensorPose>,
    present: BranchSet,
}

const CONFIG_HEADER: &str = "handwave-sensor-config v1";

impl SensorConfig {
    pub fn new(mut sensors: Vec<SensorPose>) -> Result<Self, ConfigError> {
        sensors.sort_by_key(|p| p.id);
        sensors.dedup_by_key(|p| p.id);
        if sensors.len() != SENSOR_COUNT {
            return Err(ConfigError::WrongSensorSet(sensors.len()));
        }
        for pose in &sensors {
            let expected = Anatomy::of(pose.id);
            if pose.anatomy != expected {
                return Err(ConfigError::AnatomyMismatch {
                    id: pose.id,
                    found: pose.anatomy,
                    expected,
                });
            }
        }
        Ok(SensorConfig {
            sensors,
            present: BranchSet::ALL,
        })
    }

    pub fn with_branches(mut self, present: BranchSet) -> Self {
        self.present = present;
        self
    }

    pub fn branches(&self) -> BranchSet {
        self.present
    }

    /// All poses, including those on absent branches.
    pub fn poses(&self) -> &[SensorPose] {
        &self.sensors
    }

    pub fn present_poses(&self) -> impl Iterator<Item = &SensorPose> {
        self.sensors
            .iter()
            .filter(|p| self.present.contains(p.id.digit()))
    }

    pub fn pose(&self, id: SensorId) -> &SensorPose {
        &self.sensors[id.slot()]
    }

    /// Multiply every position by `factor` about the hand-frame origin.
    pub fn scaled(&self, factor: f64) -> SensorConfig {
        let mut out = self.clone();
        for pose in &mut out.sensors {
            pose.position *= factor;
        }
        out
    }

    /// One line per sensor: id, anatomy, position, then the nine orientation
    /// entries in row-major order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(CONFIG_HEADER);
        out.push('\n');
        out.push_str(&format!("branches={:05b}\n", self.present.bits()));
        for p in &self.sensors {
            let r = &p.orientation;
            out.push_str(&format!(
                "id={} anatomy={} position={:?},{:?},{:?} orientation={:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?}\n",
                p.id,
                p.anatomy,
                p.position.x,
                p.position.y,
                p.position.z,
                r[(0, 0)],
                r[(0, 1)],
                r[(0, 2)],
                r[(1, 0)],
                r[(1, 1)],
                r[(1, 2)],
                r[(2, 0)],
                r[(2, 1)],
                r[(2, 2)],
            ));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let err = |line: usize, message: String| ConfigError::Parse { line, message };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == CONFIG_HEADER => {}
            _ => return Err(err(1, format!("expected header '{CONFIG_HEADER}'"))),
        }
        let mut present = BranchSet::ALL;
        let mut poses = Vec::new();
        for (idx, line) in lines {
            let lineno = idx + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(bits) = line.strip_prefix("branches=") {
                present = u8::from_str_radix(bits, 2)
                    .ok()
                    .and_then(BranchSet::from_bits)
                    .ok_or_else(|| err(lineno, format!("bad branch mask '{bits}'")))?;
                continue;
            }
            let mut id = None;
            let mut anatomy = None;
            let mut position = None;
            let mut orientation = None;
            for field in line.split_whitespace() {
                let (key, value) = field
                    .split_once('=')
                    .ok_or_else(|| err(lineno, format!("expected key=value, got '{field}'")))?;
                match key {
                    "id" => {
                        let n: u32 = value
                            .parse()
                            .map_err(|_| err(lineno, format!("bad id '{value}'")))?;
                        id = Some(SensorId::new(n).map_err(|e| err(lineno, e.to_string()))?);
                    }
                    "anatomy" => anatomy = Some(value.parse::<Anatomy>().map_err(|e| err(lineno, e))?),
                    "position" => {
                        let v = parse_floats(value, 3).map_err(|e| err(lineno, e))?;
                        position = Some(Vector3::new(v[0], v[1], v[2]));
                    }
                    "orientation" => {
                        let v = parse_floats(value, 9).map_err(|e| err(lineno, e))?;
                        orientation = Some(Matrix3::from_row_slice(&v));
                    }
                    other => return Err(err(lineno, format!("unknown key '{other}'"))),
                }
            }
            let (Some(id), Some(anatomy), Some(position), Some(orientation)) =
                (id, anatomy, position, orientation)
            else {
                return Err(err(lineno, "missing one of id, anatomy, position, orientation".into()));
            };
            let mut pose = SensorPose::new(id, position, orientation)?;
            pose.anatomy = anatomy;
            poses.push(pose);
        }
        Ok(SensorConfig::new(poses)?.with_branches(present))
    }
}

fn parse_floats(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let v = s
        .split(',')
        .map(|x| x.parse::<f64>().map_err(|_| format!("bad number '{x}'")))
        .collect::<Result<Vec<_>, _>>()?;
    if v.len() != n {
        return Err(format!("expected {n} numbers, got {}", v.len()));
    }
    Ok(v)
}

/// Selectable full-scale range of the accelerometers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FullScale {
    G2,
    G4,
    G6,
    G8,
    G16,
}

impl FullScale {
    pub fn from_g(g: f64) -> Result<Self, CalibrationError> {
        match g {
            x if x == 2.0 => Ok(FullScale::G2),
            x if x == 4.0 => Ok(FullScale::G4),
            x if x == 6.0 => Ok(FullScale::G6),
            x if x == 8.0 => Ok(FullScale::G8),
            x if x == 16.0 => Ok(FullScale::G16),
            other => Err(CalibrationError::UnknownRange(other)),
        }
    }

    pub fn g(self) -> u8 {
        match self {
            FullScale::G2 => 2,
            FullScale::G4 => 4,
            FullScale::G6 => 6,
            FullScale::G8 => 8,
            FullScale::G16 => 16,
        }
    }

    /// Sensitivity in g per count. The ±2 g and ±16 g values are the device
    /// endpoints (0.06 and 0.73 mg); the ±4/±6/±8 g settings scale the ±2 g
    /// value by range/2.
    pub fn sensitivity_g(self) -> f64 {
        match self {
            FullScale::G16 => 0.73e-3,
            other => 0.06e-3 * f64::from(other.g()) / 2.0,
        }
    }

    /// Largest count magnitude whose calibrated value stays within the range.
    pub fn max_count(self) -> i16 {
        let limit = (f64::from(self.g()) / self.sensitivity_g()).floor();
        limit.min(f64::from(i16::MAX)) as i16
    }

    /// Quantize an acceleration in g to counts, saturating at the range.
    pub fn quantize(self, value_g: f64) -> i16 {
        let max = f64::from(self.max_count());
        (value_g / self.sensitivity_g()).round().clamp(-max, max) as i16
    }
}

impl fmt::Display for FullScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.g())
    }
}

/// One acquisition frame in raw counts. Readings are sorted by sensor id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawSample {
    pub index: u64,
    pub range: FullScale,
    pub readings: Vec<(SensorId, [i16; 3])>,
}

impl RawSample {
    pub fn reading(&self, id: SensorId) -> Option<[i16; 3]> {
        self.readings
            .binary_search_by_key(&id, |(s, _)| *s)
            .ok()
            .map(|i| self.readings[i].1)
    }

    /// Convert counts to m/s² using the sensitivity of `range`.
    pub fn calibrate(&self, range: FullScale) -> Result<Sample, CalibrationError> {
        let sens = range.sensitivity_g() * STANDARD_GRAVITY;
        let max = range.max_count();
        let readings = self
            .readings
            .iter()
            .map(|&(id, counts)| {
                if let Some(&count) = counts.iter().find(|c| c.unsigned_abs() > max.unsigned_abs()) {
                    return Err(CalibrationError::CountOutOfRange { id, count, range });
                }
                Ok((id, counts.map(|c| f64::from(c) * sens)))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Sample {
            index: self.index,
            unit: Unit::MetersPerSecondSquared,
            readings,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unit {
    G,
    MetersPerSecondSquared,
}

/// One frame of calibrated acceleration.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub index: u64,
    pub unit: Unit,
    pub readings: Vec<(SensorId, [f64; 3])>,
}

impl Sample {
    pub fn reading(&self, id: SensorId) -> Option<[f64; 3]> {
        self.readings
            .binary_search_by_key(&id, |(s, _)| *s)
            .ok()
            .map(|i| self.readings[i].1)
    }
}

/// Ordered raw frames at a fixed rate. Frame indices increase strictly;
/// a jump larger than one marks dropped frames.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameStream {
    pub rate: f64,
    pub range: FullScale,
    pub branches: BranchSet,
    pub frames: Vec<RawSample>,
}

impl FrameStream {
    pub fn new(rate: f64, range: FullScale, branches: BranchSet) -> Self {
        FrameStream {
            rate,
            range,
            branches,
            frames: Vec::new(),
        }
    }

    /// Sample period in seconds.
    pub fn period(&self) -> f64 {
        1.0 / self.rate
    }

    pub fn timestamp(&self, index: u64) -> f64 {
        index as f64 / self.rate
    }

    pub fn sensors(&self) -> Vec<SensorId> {
        self.branches.sensors().collect()
    }

    /// Per-sensor calibrated 3-axis series in m/s², ascending sensor id.
    pub fn calibrated_series(&self) -> Result<Vec<(SensorId, Vec<[f64; 3]>)>, CalibrationError> {
        let sens = self.range.sensitivity_g() * STANDARD_GRAVITY;
        let max = self.range.max_count().unsigned_abs();
        let ids = self.sensors();
        let mut out: Vec<(SensorId, Vec<[f64; 3]>)> = ids
            .iter()
            .map(|&id| (id, Vec::with_capacity(self.frames.len())))
            .collect();
        for frame in &self.frames {
            for (slot, &(id, counts)) in frame.readings.iter().enumerate() {
                if let Some(&count) = counts.iter().find(|c| c.unsigned_abs() > max) {
                    return Err(CalibrationError::CountOutOfRange {
                        id,
                        count,
                        range: self.range,
                    });
                }
                out[slot].1.push(counts.map(|c| f64::from(c) * sens));
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbering_skips_decades() {
        let ids: Vec<u8> = SensorId::all().map(SensorId::get).collect();
        assert_eq!(ids.len(), SENSOR_COUNT);
        for skipped in [10u8, 20, 30, 40] {
            assert!(!ids.contains(&skipped));
            assert!(SensorId::new(u32::from(skipped)).is_err());
        }
        assert!(SensorId::new(0).is_err());
        assert!(SensorId::new(47).is_err());
        for (slot, id) in SensorId::all().enumerate() {
            assert_eq!(id.slot(), slot);
            assert_eq!(SensorId::from_slot(slot), Some(id));
        }
    }

    #[test]
    fn branch_partition() {
        let count = |d: Digit| d.sensors().count();
        assert_eq!(count(Digit::V), 9);
        assert_eq!(count(Digit::IV), 9);
        assert_eq!(count(Digit::III), 9);
        assert_eq!(count(Digit::II), 9);
        assert_eq!(count(Digit::I), 6);
        assert!(Digit::V.sensors().map(SensorId::get).eq(1..=9));
        let without_thumb = BranchSet::ALL.without(Digit::I);
        assert_eq!(without_thumb.sensors().count(), 36);
        assert!(without_thumb.sensors().all(|s| s.get() < 41));
    }

    #[test]
    fn anatomy_table() {
        let id = |n| SensorId::new(n).unwrap();
        let expect = |ids: &[u32], a: Anatomy| {
            for &n in ids {
                assert_eq!(Anatomy::of(id(n)), a, "sensor {n}");
            }
        };
        expect(&[1, 2, 11, 12, 21, 22, 31, 32, 45], Anatomy::DP);
        expect(&[3, 4, 13, 14, 23, 24, 33, 34], Anatomy::MP);
        expect(&[6, 16, 26, 36, 46], Anatomy::PP);
        expect(&[5, 15, 25, 35], Anatomy::MH);
        expect(&[8, 18, 28, 38, 44], Anatomy::MS);
        expect(&[7, 17, 27, 37], Anatomy::MB);
        expect(&[9, 19, 29, 39, 43], Anatomy::C);
        expect(&[41], Anatomy::InterMsI2);
        expect(&[42], Anatomy::MsMb2);
    }

    #[test]
    fn sensitivities() {
        assert_eq!(FullScale::G2.sensitivity_g(), 0.06e-3);
        assert!((FullScale::G4.sensitivity_g() - 0.12e-3).abs() < 1e-18);
        assert!((FullScale::G8.sensitivity_g() - 0.24e-3).abs() < 1e-18);
        assert_eq!(FullScale::G16.sensitivity_g(), 0.73e-3);
        assert_eq!(FullScale::G2.max_count(), i16::MAX);
        assert_eq!(FullScale::G16.max_count(), 21917);
        assert!(matches!(FullScale::from_g(3.0), Err(CalibrationError::UnknownRange(_))));
    }

    fn raw(counts: [i16; 3]) -> RawSample {
        RawSample {
            index: 0,
            range: FullScale::G2,
            readings: vec![(SensorId::new(31).unwrap(), counts)],
        }
    }

    #[test]
    fn calibrate_examples() {
        // 16384 counts × 0.06 mg = 0.98304 g
        let s = raw([16384, 0, 32767]).calibrate(FullScale::G2).unwrap();
        let [x, y, z] = s.readings[0].1;
        assert!((x / STANDARD_GRAVITY - 0.98304).abs() < 1e-12);
        assert_eq!(y, 0.0);
        assert!((z / STANDARD_GRAVITY - 1.96602).abs() < 1e-12);
        assert!(z / STANDARD_GRAVITY <= 2.0 * 1.001);
        assert_eq!(s.unit, Unit::MetersPerSecondSquared);
    }

    #[test]
    fn calibrate_rejects_counts_beyond_range() {
        let err = raw([30000, 0, 0]).calibrate(FullScale::G16).unwrap_err();
        assert!(matches!(err, CalibrationError::CountOutOfRange { count: 30000, .. }));
    }

    #[test]
    fn pose_rejects_reflection() {
        let id = SensorId::new(1).unwrap();
        let reflect = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(SensorPose::new(id, Vector3::zeros(), reflect).is_err());
        let skew = Matrix3::new(1.0, 1e-6, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(SensorPose::new(id, Vector3::zeros(), skew).is_err());
    }
}
