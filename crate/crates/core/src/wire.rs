//! Acquisition wire format.
//!
//! Each frame carries one complete sampling period: the WHO_AM_I status of
//! every device, then the 6-byte payloads of the SEL=1 (odd) group followed
//! by the SEL=0 (even) group. Payload bytes are XL, XH, YL, YH, ZL, ZH.
//!
//! Stream header (20 bytes, little-endian):
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 4    | magic `HWAV`                            |
//! | 4      | 2    | format version (1)                      |
//! | 6      | 1    | branch mask, bit d = digit I..V         |
//! | 7      | 1    | full-scale range in g                   |
//! | 8      | 4    | frame rate in mHz                       |
//! | 12     | 4    | topology hash (FNV-1a over bus table)   |
//! | 16     | 1    | sensors per frame                       |
//! | 17     | 1    | buses                                   |
//! | 18     | 2    | header checksum: sum of bytes 0-17      |
//!
//! Frame record:
//!
//! | offset      | size   | field                                  |
//! |-------------|--------|----------------------------------------|
//! | 0           | 2      | sync `A5 5A`                           |
//! | 2           | 4      | frame counter                          |
//! | 6           | S      | WHO_AM_I byte per device, bus order    |
//! | 6+S         | 6·odd  | odd group payloads, ascending id       |
//! | 6+S+6·odd   | 6·even | even group payloads, ascending id      |
//! | 6+7S        | 2      | checksum: sum of payload bytes mod 2¹⁶ |

use std::fmt::Write as _;

use thiserror::Error;

use crate::types::{BranchSet, Digit, FrameStream, FullScale, RawSample, SensorId};

pub const STREAM_MAGIC: [u8; 4] = *b"HWAV";
pub const FORMAT_VERSION: u16 = 1;
pub const HEADER_LEN: usize = 20;
pub const FRAME_SYNC: [u8; 2] = [0xA5, 0x5A];
/// Identity register value of the accelerometers.
pub const WHO_AM_I: u8 = 0x3F;
/// 7-bit I²C address of a device with SEL pulled up.
pub const ADDR_SEL1: u8 = 0b001_1101;
/// 7-bit I²C address of a device with SEL grounded.
pub const ADDR_SEL0: u8 = 0b001_1110;

const PAYLOAD_LEN: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WireError {
    #[error("bad stream magic")]
    BadMagic,
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),
    #[error("invalid header: {0}")]
    BadHeader(String),
    #[error("topology hash mismatch: header {found:#010x}, expected {expected:#010x}")]
    TopologyMismatch { expected: u32, found: u32 },
    #[error("corrupt frame {frame} at byte {offset}: {kind}")]
    CorruptFrame {
        frame: usize,
        offset: usize,
        kind: Corruption,
    },
    #[error("sample {index} has no reading for sensor {sensor}")]
    MissingSensor { index: u64, sensor: SensorId },
    #[error("sample {index} has a reading for sensor {sensor}, which is not on the topology")]
    UnexpectedSensor { index: u64, sensor: SensorId },
    #[error("sample {index} uses range ±{found} g, stream is ±{expected} g")]
    RangeMismatch {
        index: u64,
        expected: FullScale,
        found: FullScale,
    },
    #[error("frame index {0} does not fit the 32-bit frame counter")]
    CounterOverflow(u64),
    #[error("frame index {index} does not follow {previous}")]
    OutOfOrder { previous: u64, index: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corruption {
    BadSync,
    Checksum { stored: u16, computed: u16 },
    CounterRegression { previous: u32, found: u32 },
}

impl std::fmt::Display for Corruption {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Corruption::BadSync => f.write_str("missing frame sync"),
            Corruption::Checksum { stored, computed } => {
                write!(f, "checksum {stored:#06x} != computed {computed:#06x}")
            }
            Corruption::CounterRegression { previous, found } => {
                write!(f, "frame counter went from {previous} to {found}")
            }
        }
    }
}

/// One I²C bus: the SEL=1 device and, except on the last bus of digits
/// II-V, a SEL=0 partner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bus {
    pub index: u8,
    pub digit: Digit,
    pub sel1: SensorId,
    pub sel0: Option<SensorId>,
}

impl Bus {
    pub fn devices(&self) -> impl Iterator<Item = SensorId> {
        std::iter::once(self.sel1).chain(self.sel0)
    }
}

/// The 23 buses in ascending index order, restricted to the attached branches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BusTopology {
    buses: Vec<Bus>,
    branches: BranchSet,
}

impl BusTopology {
    pub fn full() -> Self {
        Self::with_branches(BranchSet::ALL)
    }

    pub fn with_branches(branches: BranchSet) -> Self {
        let mut buses = Vec::new();
        let mut index = 0u8;
        for odd in SensorId::all().filter(|s| s.is_odd()) {
            let even = SensorId::new(u32::from(odd.get()) + 1)
                .ok()
                .filter(|e| e.digit() == odd.digit());
            if branches.contains(odd.digit()) {
                buses.push(Bus {
                    index,
                    digit: odd.digit(),
                    sel1: odd,
                    sel0: even,
                });
            }
            index += 1;
        }
        BusTopology { buses, branches }
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn branches(&self) -> BranchSet {
        self.branches
    }

    /// SEL=1 devices in ascending id order.
    pub fn odd_group(&self) -> Vec<SensorId> {
        self.buses.iter().map(|b| b.sel1).collect()
    }

    /// SEL=0 devices in ascending id order.
    pub fn even_group(&self) -> Vec<SensorId> {
        self.buses.iter().filter_map(|b| b.sel0).collect()
    }

    pub fn sensor_count(&self) -> usize {
        self.buses.iter().map(|b| b.devices().count()).sum()
    }

    /// Bytes of one encoded frame.
    pub fn frame_len(&self) -> usize {
        let s = self.sensor_count();
        2 + 4 + s + PAYLOAD_LEN * s + 2
    }

    /// FNV-1a over (bus index, SEL=1 id, SEL=0 id or 0) for each bus.
    pub fn hash(&self) -> u32 {
        let mut h: u32 = 0x811c_9dc5;
        for b in &self.buses {
            for byte in [b.index, b.sel1.get(), b.sel0.map_or(0, SensorId::get)] {
                h ^= u32::from(byte);
                h = h.wrapping_mul(0x0100_0193);
            }
        }
        h
    }
}

/// Stream-level metadata carried in the header.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamHeader {
    pub branches: BranchSet,
    pub range: FullScale,
    pub rate: f64,
    pub topology_hash: u32,
}

impl StreamHeader {
    pub fn for_stream(stream: &FrameStream) -> Self {
        StreamHeader {
            branches: stream.branches,
            range: stream.range,
            rate: stream.rate,
            topology_hash: BusTopology::with_branches(stream.branches).hash(),
        }
    }

    pub fn encode(&self) -> [u8; HEADER_LEN] {
        let topo = BusTopology::with_branches(self.branches);
        let mut out = [0u8; HEADER_LEN];
        out[0..4].copy_from_slice(&STREAM_MAGIC);
        out[4..6].copy_from_slice(&FORMAT_VERSION.to_le_bytes());
        out[6] = self.branches.bits();
        out[7] = self.range.g();
        let millihertz = (self.rate * 1000.0).round() as u32;
        out[8..12].copy_from_slice(&millihertz.to_le_bytes());
        out[12..16].copy_from_slice(&self.topology_hash.to_le_bytes());
        out[16] = topo.sensor_count() as u8;
        out[17] = topo.buses().len() as u8;
        let sum = checksum(&out[..18]);
        out[18..20].copy_from_slice(&sum.to_le_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, WireError> {
        if bytes.len() < 4 || bytes[0..4] != STREAM_MAGIC {
            return Err(WireError::BadMagic);
        }
        if bytes.len() < HEADER_LEN {
            return Err(WireError::BadHeader(format!(
                "header needs {HEADER_LEN} bytes, stream has {}",
                bytes.len()
            )));
        }
        let stored = u16::from_le_bytes([bytes[18], bytes[19]]);
        let computed = checksum(&bytes[..18]);
        if stored != computed {
            return Err(WireError::BadHeader(format!(
                "header checksum {stored:#06x} != computed {computed:#06x}"
            )));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != FORMAT_VERSION {
            return Err(WireError::UnsupportedVersion(version));
        }
        let branches = BranchSet::from_bits(bytes[6])
            .ok_or_else(|| WireError::BadHeader(format!("branch mask {:#04x}", bytes[6])))?;
        let range = FullScale::from_g(f64::from(bytes[7]))
            .map_err(|e| WireError::BadHeader(e.to_string()))?;
        let millihertz = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if millihertz == 0 {
            return Err(WireError::BadHeader("zero frame rate".into()));
        }
        let topology_hash = u32::from_le_bytes(bytes[12..16].try_into().unwrap());
        let topo = BusTopology::with_branches(branches);
        if topology_hash != topo.hash() {
            return Err(WireError::TopologyMismatch {
                expected: topo.hash(),
                found: topology_hash,
            });
        }
        if usize::from(bytes[16]) != topo.sensor_count() || usize::from(bytes[17]) != topo.buses().len() {
            return Err(WireError::BadHeader(format!(
                "{} sensors on {} buses do not match branch mask",
                bytes[16], bytes[17]
            )));
        }
        Ok(StreamHeader {
            branches,
            range,
            rate: f64::from(millihertz) / 1000.0,
            topology_hash,
        })
    }
}

fn put_payload(out: &mut Vec<u8>, counts: [i16; 3]) {
    for axis in counts {
        // Low byte first, then high byte.
        out.extend_from_slice(&axis.to_le_bytes());
    }
}

/// Encode one raw frame as a frame record.
pub fn encode_frame(sample: &RawSample, topology: &BusTopology) -> Result<Vec<u8>, WireError> {
    let counter = u32::try_from(sample.index).map_err(|_| WireError::CounterOverflow(sample.index))?;
    let present = topology.branches();
    if let Some(&(sensor, _)) = sample.readings.iter().find(|(s, _)| !present.contains(s.digit())) {
        return Err(WireError::UnexpectedSensor {
            index: sample.index,
            sensor,
        });
    }
    let reading = |sensor: SensorId| {
        sample.reading(sensor).ok_or(WireError::MissingSensor {
            index: sample.index,
            sensor,
        })
    };

    let mut out = Vec::with_capacity(topology.frame_len());
    out.extend_from_slice(&FRAME_SYNC);
    out.extend_from_slice(&counter.to_le_bytes());
    for bus in topology.buses() {
        for _ in bus.devices() {
            out.push(WHO_AM_I);
        }
    }
    let payload_start = out.len();
    for sensor in topology.odd_group().into_iter().chain(topology.even_group()) {
        put_payload(&mut out, reading(sensor)?);
    }
    let checksum = checksum(&out[payload_start..]);
    out.extend_from_slice(&checksum.to_le_bytes());
    Ok(out)
}

fn checksum(payload: &[u8]) -> u16 {
    payload
        .iter()
        .fold(0u16, |acc, &b| acc.wrapping_add(u16::from(b)))
}

/// Encode a whole stream: header followed by one record per frame.
pub fn encode_stream(stream: &FrameStream) -> Result<Vec<u8>, WireError> {
    let topology = BusTopology::with_branches(stream.branches);
    let header = StreamHeader::for_stream(stream);
    let mut out = Vec::with_capacity(HEADER_LEN + stream.frames.len() * topology.frame_len());
    out.extend_from_slice(&header.encode());
    let mut previous: Option<u64> = None;
    for frame in &stream.frames {
        if frame.range != stream.range {
            return Err(WireError::RangeMismatch {
                index: frame.index,
                expected: stream.range,
                found: frame.range,
            });
        }
        if let Some(p) = previous.filter(|&p| frame.index <= p) {
            return Err(WireError::OutOfOrder {
                previous: p,
                index: frame.index,
            });
        }
        previous = Some(frame.index);
        out.extend_from_slice(&encode_frame(frame, &topology)?);
    }
    Ok(out)
}

/// Frames lost between two received frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DropEvent {
    /// Counter of the last frame received before the gap.
    pub after: u64,
    /// Number of missing frames.
    pub missing: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecodeWarning {
    /// Trailing bytes too short for a full record.
    PartialFrame { offset: usize, bytes: usize },
    /// A device reported an unexpected identity.
    WhoAmI { frame: u64, sensor: SensorId, value: u8 },
}

impl std::fmt::Display for DecodeWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DecodeWarning::PartialFrame { offset, bytes } => {
                write!(f, "partial frame of {bytes} bytes at offset {offset}")
            }
            DecodeWarning::WhoAmI { frame, sensor, value } => {
                write!(f, "frame {frame}: sensor {sensor} WHO_AM_I {value:#04x}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub stream: FrameStream,
    pub drops: Vec<DropEvent>,
    pub warnings: Vec<DecodeWarning>,
}

/// Incremental decoder over an in-memory stream. Yields one frame per call;
/// drop events and warnings accumulate on the decoder.
pub struct FrameDecoder<'a> {
    bytes: &'a [u8],
    offset: usize,
    header: StreamHeader,
    topology: BusTopology,
    odd: Vec<SensorId>,
    even: Vec<SensorId>,
    device_order: Vec<SensorId>,
    record: usize,
    previous: Option<u32>,
    failed: bool,
    pub drops: Vec<DropEvent>,
    pub warnings: Vec<DecodeWarning>,
}

impl<'a> FrameDecoder<'a> {
    pub fn new(bytes: &'a [u8]) -> Result<Self, WireError> {
        let header = StreamHeader::decode(bytes)?;
        let topology = BusTopology::with_branches(header.branches);
        let device_order = topology.buses().iter().flat_map(Bus::devices).collect();
        Ok(FrameDecoder {
            bytes,
            offset: HEADER_LEN,
            header,
            odd: topology.odd_group(),
            even: topology.even_group(),
            topology,
            device_order,
            record: 0,
            previous: None,
            failed: false,
            drops: Vec::new(),
            warnings: Vec::new(),
        })
    }

    pub fn header(&self) -> &StreamHeader {
        &self.header
    }

    fn corrupt(&mut self, offset: usize, kind: Corruption) -> WireError {
        self.failed = true;
        WireError::CorruptFrame {
            frame: self.record,
            offset,
            kind,
        }
    }

    fn next_frame(&mut self) -> Option<Result<RawSample, WireError>> {
        if self.failed {
            return None;
        }
        let len = self.topology.frame_len();
        let start = self.offset;
        let remaining = self.bytes.len() - start;
        if remaining == 0 {
            return None;
        }
        if remaining < len {
            self.warnings.push(DecodeWarning::PartialFrame {
                offset: start,
                bytes: remaining,
            });
            self.offset = self.bytes.len();
            return None;
        }
        let rec = &self.bytes[start..start + len];
        if rec[0..2] != FRAME_SYNC {
            return Some(Err(self.corrupt(start, Corruption::BadSync)));
        }
        let counter = u32::from_le_bytes(rec[2..6].try_into().unwrap());
        let n = self.device_order.len();
        let payload = &rec[6 + n..len - 2];
        let stored = u16::from_le_bytes([rec[len - 2], rec[len - 1]]);
        let computed = checksum(payload);
        if stored != computed {
            return Some(Err(self.corrupt(start, Corruption::Checksum { stored, computed })));
        }
        if let Some(previous) = self.previous {
            if counter <= previous {
                return Some(Err(self.corrupt(start, Corruption::CounterRegression { previous, found: counter })));
            }
            if counter > previous + 1 {
                self.drops.push(DropEvent {
                    after: u64::from(previous),
                    missing: u64::from(counter - previous - 1),
                });
            }
        }
        for (i, &who) in rec[6..6 + n].iter().enumerate() {
            if who != WHO_AM_I {
                self.warnings.push(DecodeWarning::WhoAmI {
                    frame: u64::from(counter),
                    sensor: self.device_order[i],
                    value: who,
                });
            }
        }
        let mut readings: Vec<(SensorId, [i16; 3])> = self
            .odd
            .iter()
            .chain(&self.even)
            .zip(payload.chunks_exact(PAYLOAD_LEN))
            .map(|(&id, p)| {
                let axis = |k: usize| i16::from_le_bytes([p[2 * k], p[2 * k + 1]]);
                (id, [axis(0), axis(1), axis(2)])
            })
            .collect();
        readings.sort_unstable_by_key(|(id, _)| *id);
        self.previous = Some(counter);
        self.offset += len;
        self.record += 1;
        Some(Ok(RawSample {
            index: u64::from(counter),
            range: self.header.range,
            readings,
        }))
    }
}

impl Iterator for FrameDecoder<'_> {
    type Item = Result<RawSample, WireError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_frame()
    }
}

/// Decode a complete stream. Corrupt frames are errors; gaps in the frame
/// counter and truncated tails are reported alongside the frames.
pub fn decode_stream(bytes: &[u8]) -> Result<Decoded, WireError> {
    let mut decoder = FrameDecoder::new(bytes)?;
    let mut stream = FrameStream::new(decoder.header.rate, decoder.header.range, decoder.header.branches);
    for frame in decoder.by_ref() {
        stream.frames.push(frame?);
    }
    if !decoder.drops.is_empty() {
        log::warn!("{} gaps in frame counter", decoder.drops.len());
    }
    Ok(Decoded {
        stream,
        drops: decoder.drops,
        warnings: decoder.warnings,
    })
}

/// CSV of raw counts: `frame,s1_x,s1_y,s1_z,...` with one row per frame
/// and sensors in ascending id order.
pub fn frames_to_csv(stream: &FrameStream) -> String {
    let ids = stream.sensors();
    let mut out = String::from("frame");
    for id in &ids {
        let _ = write!(out, ",s{id}_x,s{id}_y,s{id}_z");
    }
    out.push('\n');
    for frame in &stream.frames {
        let _ = write!(out, "{}", frame.index);
        for (_, [x, y, z]) in &frame.readings {
            let _ = write!(out, ",{x},{y},{z}");
        }
        out.push('\n');
    }
    out
}

/// Parse the CSV written by [`frames_to_csv`]. The present branches are
/// inferred from the columns.
pub fn frames_from_csv(text: &str, rate: f64, range: FullScale) -> Result<FrameStream, WireError> {
    let bad = |line: usize, msg: String| WireError::BadHeader(format!("csv line {line}: {msg}"));
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| bad(1, "empty input".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.first() != Some(&"frame") || (cols.len() - 1) % 3 != 0 {
        return Err(bad(1, "expected frame followed by x,y,z columns per sensor".into()));
    }
    let mut ids = Vec::new();
    for triple in cols[1..].chunks(3) {
        let id = triple[0]
            .strip_prefix('s')
            .and_then(|s| s.strip_suffix("_x"))
            .and_then(|s| s.parse::<u32>().ok())
            .and_then(|n| SensorId::new(n).ok())
            .ok_or_else(|| bad(1, format!("bad column '{}'", triple[0])))?;
        ids.push(id);
    }
    let mut branches = BranchSet::empty();
    for id in &ids {
        branches = branches.with(id.digit());
    }
    if !branches.sensors().eq(ids.iter().copied()) {
        return Err(bad(1, "columns must cover whole branches in ascending id order".into()));
    }
    let mut stream = FrameStream::new(rate, range, branches);
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(bad(i + 2, format!("expected {} fields", cols.len())));
        }
        let index: u64 = fields[0].parse().map_err(|_| bad(i + 2, "bad frame index".into()))?;
        let mut readings = Vec::with_capacity(ids.len());
        for (k, &id) in ids.iter().enumerate() {
            let mut axes = [0i16; 3];
            for (a, axis) in axes.iter_mut().enumerate() {
                let f = fields[1 + 3 * k + a];
                *axis = f.parse().map_err(|_| bad(i + 2, format!("bad count '{f}'")))?;
            }
            readings.push((id, axes));
        }
        stream.frames.push(RawSample { index, range, readings });
    }
    Ok(stream)
}

/// Bus clocks per frame and per-transaction costs of the sampling schedule.
///
/// Every byte costs 9 clocks (8 data bits plus acknowledge); every
/// transaction adds start, repeated start and stop conditions plus a fixed
/// controller idle period. Per device and frame the controller runs three
/// transactions: a WHO_AM_I read, a status read and a 6-byte burst read of
/// the axis registers. The two devices on a bus are served one after
/// the other; buses run in parallel. The idle period is fitted so that a
/// 1.6 MHz clock yields the measured 1310 frames/s.
pub mod schedule {
    use super::BusTopology;

    pub const CLOCKS_PER_BYTE: u32 = 9;
    pub const CONDITION_CLOCKS: u32 = 3;
    pub const TRANSACTION_IDLE_CLOCKS: u32 = 150;

    // address(W) + register + address(R) + data
    const WHO_AM_I_BYTES: u32 = 4;
    const STATUS_BYTES: u32 = 4;
    const DATA_BYTES: u32 = 3 + 6;

    /// Bus clocks to service one device once.
    pub fn device_clocks() -> u32 {
        let bytes = WHO_AM_I_BYTES + STATUS_BYTES + DATA_BYTES;
        bytes * CLOCKS_PER_BYTE + 3 * (CONDITION_CLOCKS + TRANSACTION_IDLE_CLOCKS)
    }

    /// Bus clocks per frame on each bus, in bus order.
    pub fn bus_clocks(topology: &BusTopology) -> Vec<u32> {
        topology
            .buses()
            .iter()
            .map(|b| b.devices().count() as u32 * device_clocks())
            .collect()
    }

    /// Achievable frame rate: the slowest bus bounds the frame period.
    pub fn throughput(bus_clock_hz: f64, topology: &BusTopology) -> f64 {
        let slowest = bus_clocks(topology).into_iter().max().unwrap_or(0);
        if slowest == 0 || bus_clock_hz <= 0.0 {
            return 0.0;
        }
        bus_clock_hz / f64::from(slowest)
    }
}

pub use schedule::throughput as schedule_throughput;

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(index: u64, f: impl Fn(SensorId) -> [i16; 3]) -> RawSample {
        RawSample {
            index,
            range: FullScale::G2,
            readings: SensorId::all().map(|s| (s, f(s))).collect(),
        }
    }

    #[test]
    fn topology_shape() {
        let t = BusTopology::full();
        assert_eq!(t.buses().len(), 23);
        assert_eq!(t.odd_group().len(), 23);
        assert_eq!(t.even_group().len(), 19);
        let singles: Vec<_> = t.buses().iter().filter(|b| b.sel0.is_none()).collect();
        // The last bus of each long branch carries one device: 9, 19, 29, 39.
        let ids: Vec<u8> = singles.iter().map(|b| b.sel1.get()).collect();
        assert_eq!(ids, vec![9, 19, 29, 39]);
        for (digit, n) in [(Digit::I, 3), (Digit::II, 5), (Digit::III, 5), (Digit::IV, 5), (Digit::V, 5)] {
            assert_eq!(t.buses().iter().filter(|b| b.digit == digit).count(), n);
        }
        assert!(t.odd_group().windows(2).all(|w| w[0] < w[1]));
        assert!(t.even_group().iter().all(|s| !s.is_odd()));
        assert_eq!(t.frame_len(), 2 + 4 + 42 + 252 + 2);
    }

    #[test]
    fn little_endian_axis_bytes() {
        let topo = BusTopology::full();
        let s31 = SensorId::new(31).unwrap();
        let frame = sample(0, |s| if s == s31 { [0x4000, 0, 0] } else { [0; 3] });
        let bytes = encode_frame(&frame, &topo).unwrap();
        let slot = topo.odd_group().iter().position(|&s| s == s31).unwrap();
        let at = 6 + 42 + slot * 6;
        assert_eq!(&bytes[at..at + 2], &[0x00, 0x40]);
    }

    #[test]
    fn zero_frame_has_zero_checksum() {
        let topo = BusTopology::full();
        let bytes = encode_frame(&sample(5, |_| [0; 3]), &topo).unwrap();
        assert!(bytes[6 + 42..bytes.len() - 2].iter().all(|&b| b == 0));
        assert_eq!(&bytes[bytes.len() - 2..], &[0, 0]);
    }

    #[test]
    fn missing_sensor_is_named() {
        let mut frame = sample(0, |_| [1, 2, 3]);
        frame.readings.retain(|(s, _)| s.get() != 17);
        let err = encode_frame(&frame, &BusTopology::full()).unwrap_err();
        assert!(matches!(err, WireError::MissingSensor { sensor, .. } if sensor.get() == 17));
    }

    #[test]
    fn empty_stream_decodes_to_no_frames() {
        let stream = FrameStream::new(1310.0, FullScale::G2, BranchSet::ALL);
        let bytes = encode_stream(&stream).unwrap();
        assert_eq!(bytes.len(), HEADER_LEN);
        let d = decode_stream(&bytes).unwrap();
        assert!(d.stream.frames.is_empty());
        assert!(d.warnings.is_empty());
    }

    #[test]
    fn flipped_byte_is_a_corrupt_frame() {
        let mut stream = FrameStream::new(1310.0, FullScale::G2, BranchSet::ALL);
        for i in 0..4 {
            stream.frames.push(sample(i, |s| [s.get() as i16, -(i as i16), 7]));
        }
        let mut bytes = encode_stream(&stream).unwrap();
        let len = BusTopology::full().frame_len();
        bytes[HEADER_LEN + 2 * len + 100] ^= 0x10;
        let err = decode_stream(&bytes).unwrap_err();
        assert!(matches!(err, WireError::CorruptFrame { frame: 2, kind: Corruption::Checksum { .. }, .. }));
    }

    #[test]
    fn gaps_and_tails_are_reported() {
        let mut stream = FrameStream::new(1310.0, FullScale::G4, BranchSet::ALL);
        for i in [0, 1, 4, 5] {
            stream.frames.push(RawSample { range: FullScale::G4, ..sample(i, |_| [1, 1, 1]) });
        }
        let mut bytes = encode_stream(&stream).unwrap();
        let full = bytes.len();
        bytes.extend_from_slice(&[0xA5, 0x5A, 9]);
        let d = decode_stream(&bytes).unwrap();
        assert_eq!(d.stream, stream);
        assert_eq!(d.drops, vec![DropEvent { after: 1, missing: 2 }]);
        assert_eq!(d.warnings, vec![DecodeWarning::PartialFrame { offset: full, bytes: 3 }]);
    }

    #[test]
    fn who_am_i_mismatch_warns() {
        let mut stream = FrameStream::new(1310.0, FullScale::G2, BranchSet::ALL);
        stream.frames.push(sample(0, |_| [0; 3]));
        let mut bytes = encode_stream(&stream).unwrap();
        bytes[HEADER_LEN + 6] = 0x33;
        let d = decode_stream(&bytes).unwrap();
        assert_eq!(d.stream, stream);
        assert_eq!(
            d.warnings,
            vec![DecodeWarning::WhoAmI { frame: 0, sensor: SensorId::new(1).unwrap(), value: 0x33 }]
        );
    }

    #[test]
    fn header_errors() {
        assert_eq!(decode_stream(b"nope").unwrap_err(), WireError::BadMagic);
        assert_eq!(decode_stream(b"").unwrap_err(), WireError::BadMagic);
        let stream = FrameStream::new(1310.0, FullScale::G2, BranchSet::ALL);
        let mut bytes = encode_stream(&stream).unwrap();
        bytes[12] ^= 1;
        assert!(matches!(decode_stream(&bytes), Err(WireError::BadHeader(m)) if m.contains("checksum")));
        // a consistent header with a foreign topology hash
        bytes[18] ^= 1;
        assert!(matches!(decode_stream(&bytes), Err(WireError::TopologyMismatch { .. })));
        let mut bytes = encode_stream(&stream).unwrap();
        bytes[8] ^= 0x10;
        assert!(decode_stream(&bytes).is_err());
    }

    #[test]
    fn branch_removal() {
        let branches = BranchSet::ALL.without(Digit::V).without(Digit::I);
        let topo = BusTopology::with_branches(branches);
        assert_eq!(topo.buses().len(), 15);
        assert_eq!(topo.sensor_count(), 27);
        let mut stream = FrameStream::new(1310.0, FullScale::G8, branches);
        stream.frames.push(RawSample {
            index: 3,
            range: FullScale::G8,
            readings: branches.sensors().map(|s| (s, [s.get() as i16; 3])).collect(),
        });
        let d = decode_stream(&encode_stream(&stream).unwrap()).unwrap();
        assert_eq!(d.stream, stream);
        let full = sample(3, |_| [0; 3]);
        assert!(matches!(encode_frame(&full, &topo), Err(WireError::UnexpectedSensor { .. })));
    }

    #[test]
    fn csv_round_trip() {
        let mut stream = FrameStream::new(1310.0, FullScale::G2, BranchSet::ALL);
        for i in 0..3 {
            stream.frames.push(sample(i, |s| [s.get() as i16, -32768, 32767]));
        }
        let csv = frames_to_csv(&stream);
        assert_eq!(frames_from_csv(&csv, 1310.0, FullScale::G2).unwrap(), stream);
    }

    #[test]
    fn throughput_model() {
        let topo = BusTopology::full();
        let rate = schedule_throughput(1.6e6, &topo);
        assert!((1295.0..=1325.0).contains(&rate), "{rate}");
        let half = schedule_throughput(0.8e6, &topo);
        assert!((half / rate - 0.5).abs() < 0.01);
        // The paired buses set the pace, not the single-device ones.
        let clocks = schedule::bus_clocks(&topo);
        let single = clocks[4];
        assert!(clocks.iter().filter(|&&c| c != single).all(|&c| c == 2 * single));
        assert_eq!(rate, 1.6e6 / f64::from(2 * single));
    }
}
