//! Point-cloud readers and writers, and the distance-field matrix format.
//!
//! Distance-field file (little-endian):
//!
//! | offset   | size     | field                                  |
//! |----------|----------|----------------------------------------|
//! | 0        | 4        | magic `HWDF`                           |
//! | 4        | 2        | version (1)                            |
//! | 6        | 2        | reserved, zero                         |
//! | 8        | 4        | rows R (one per sensor)                |
//! | 12       | 4        | columns V (vertices)                   |
//! | 16       | 8·R      | per row: sensor id u32, anchor u32     |
//! | 16+8R    | 8·R·V    | distances, f64 mm, row-major           |

use std::fmt::Write as _;

use nalgebra::Vector3;

use super::{DistanceFields, GeometryError, PointCloud};
use crate::anatomy::Region;
use crate::types::SensorId;

const DF_MAGIC: [u8; 4] = *b"HWDF";
const DF_VERSION: u16 = 1;

fn format_err(line: usize, msg: impl std::fmt::Display) -> GeometryError {
    GeometryError::Format(format!("line {line}: {msg}"))
}

/// ASCII PLY with a `vertex` element carrying x, y, z and optionally
/// nx, ny, nz and an integer `region` (0 palm, 1-5 digits I-V). Other
/// elements such as faces are skipped.
pub fn read_ply(text: &str) -> Result<PointCloud, GeometryError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, "ply")) => {}
        _ => return Err(GeometryError::Format("missing 'ply' magic line".into())),
    }

    struct Element {
        name: String,
        count: usize,
        props: Vec<String>,
    }
    let mut elements: Vec<Element> = Vec::new();
    let mut format_seen = false;
    loop {
        let Some((ln, line)) = lines.next() else {
            return Err(GeometryError::Format("header has no end_header".into()));
        };
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.as_slice() {
            ["end_header"] => break,
            ["format", "ascii", _] => format_seen = true,
            ["format", other, ..] => {
                return Err(format_err(ln, format!("unsupported PLY format '{other}', only ascii")));
            }
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["element", name, count] => {
                let count = count.parse().map_err(|_| format_err(ln, "bad element count"))?;
                elements.push(Element { name: name.to_string(), count, props: Vec::new() });
            }
            ["property", "list", _, _, name] => match elements.last_mut() {
                Some(e) => e.props.push(name.to_string()),
                None => return Err(format_err(ln, "property before element")),
            },
            ["property", _, name] => match elements.last_mut() {
                Some(e) => e.props.push(name.to_string()),
                None => return Err(format_err(ln, "property before element")),
            },
            _ => return Err(format_err(ln, format!("unrecognized header line '{line}'"))),
        }
    }
    if !format_seen {
        return Err(GeometryError::Format("header has no format line".into()));
    }

    let mut cloud = PointCloud::default();
    for element in &elements {
        if element.name != "vertex" {
            for _ in 0..element.count {
                lines.next().ok_or_else(|| GeometryError::Format(format!("truncated {} element", element.name)))?;
            }
            continue;
        }
        let col = |name: &str| element.props.iter().position(|p| p == name);
        let (Some(x), Some(y), Some(z)) = (col("x"), col("y"), col("z")) else {
            return Err(GeometryError::Format("vertex element lacks x, y or z".into()));
        };
        let normal_cols = match (col("nx"), col("ny"), col("nz")) {
            (Some(a), Some(b), Some(c)) => Some([a, b, c]),
            _ => None,
        };
        let region_col = col("region");
        let mut normals = Vec::new();
        let mut regions = Vec::new();
        for _ in 0..element.count {
            let (ln, line) = lines.next().ok_or_else(|| GeometryError::Format("truncated vertex element".into()))?;
            let values: Vec<f64> = line
                .split_whitespace()
                .map(|w| w.parse::<f64>().map_err(|_| format_err(ln, format!("bad number '{w}'"))))
                .collect::<Result<_, _>>()?;
            if values.len() < element.props.len() {
                return Err(format_err(ln, format!("expected {} values", element.props.len())));
            }
            cloud.points.push(Vector3::new(values[x], values[y], values[z]));
            if let Some([a, b, c]) = normal_cols {
                normals.push(Vector3::new(values[a], values[b], values[c]));
            }
            if let Some(r) = region_col {
                let code = values[r];
                let region = (code.fract() == 0.0 && (0.0..=255.0).contains(&code))
                    .then(|| Region::from_code(code as u8))
                    .flatten()
                    .ok_or_else(|| format_err(ln, format!("bad region code {code}")))?;
                regions.push(region);
            }
        }
        if normal_cols.is_some() {
            cloud.normals = Some(normals);
        }
        if region_col.is_some() {
            cloud.regions = Some(regions);
        }
    }
    if cloud.points.is_empty() && !elements.iter().any(|e| e.name == "vertex") {
        return Err(GeometryError::Format("no vertex element".into()));
    }
    Ok(cloud)
}

/// Write ASCII PLY with six decimals per coordinate and four per normal
/// component. Normals and regions are written when present.
pub fn write_ply(cloud: &PointCloud, comment: &str) -> String {
    let mut out = String::from("ply\nformat ascii 1.0\n");
    for line in comment.lines() {
        let _ = writeln!(out, "comment {line}");
    }
    let _ = writeln!(out, "element vertex {}", cloud.points.len());
    out.push_str("property double x\nproperty double y\nproperty double z\n");
    if cloud.normals.is_some() {
        out.push_str("property double nx\nproperty double ny\nproperty double nz\n");
    }
    if cloud.regions.is_some() {
        out.push_str("property uchar region\n");
    }
    out.push_str("end_header\n");
    for (i, p) in cloud.points.iter().enumerate() {
        let _ = write!(out, "{} {} {}", fixed(p.x, 6), fixed(p.y, 6), fixed(p.z, 6));
        if let Some(n) = &cloud.normals {
            let _ = write!(out, " {} {} {}", fixed(n[i].x, 4), fixed(n[i].y, 4), fixed(n[i].z, 4));
        }
        if let Some(r) = &cloud.regions {
            let _ = write!(out, " {}", r[i].code());
        }
        out.push('\n');
    }
    out
}

/// Fixed-point text without a sign on values that round to zero.
fn fixed(x: f64, decimals: usize) -> String {
    let s = format!("{x:.decimals$}");
    match s.strip_prefix('-') {
        Some(rest) if rest.bytes().all(|b| b == b'0' || b == b'.') => rest.to_string(),
        _ => s,
    }
}

/// Whitespace-separated `x y z` or `x y z nx ny nz` per line; blank lines
/// and `#` comments are ignored.
pub fn read_xyz(text: &str) -> Result<PointCloud, GeometryError> {
    let mut cloud = PointCloud::default();
    let mut normals = Vec::new();
    let mut with_normals = None;
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let values: Vec<f64> = line
            .split_whitespace()
            .map(|w| w.parse::<f64>().map_err(|_| format_err(i + 1, format!("bad number '{w}'"))))
            .collect::<Result<_, _>>()?;
        let has = match values.len() {
            3 => false,
            6 => true,
            n => return Err(format_err(i + 1, format!("expected 3 or 6 values, got {n}"))),
        };
        if *with_normals.get_or_insert(has) != has {
            return Err(format_err(i + 1, "inconsistent column count"));
        }
        cloud.points.push(Vector3::new(values[0], values[1], values[2]));
        if has {
            normals.push(Vector3::new(values[3], values[4], values[5]));
        }
    }
    if with_normals == Some(true) {
        cloud.normals = Some(normals);
    }
    Ok(cloud)
}

/// Reader and writer for distance-field matrices.
pub struct DistanceFieldFile;

impl DistanceFieldFile {
    pub fn encode(fields: &DistanceFields) -> Vec<u8> {
        let rows = fields.rows.len();
        let cols = fields.vertices();
        let mut out = Vec::with_capacity(16 + 8 * rows + 8 * rows * cols);
        out.extend_from_slice(&DF_MAGIC);
        out.extend_from_slice(&DF_VERSION.to_le_bytes());
        out.extend_from_slice(&0u16.to_le_bytes());
        out.extend_from_slice(&(rows as u32).to_le_bytes());
        out.extend_from_slice(&(cols as u32).to_le_bytes());
        for &(id, anchor) in &fields.anchors {
            out.extend_from_slice(&u32::from(id.get()).to_le_bytes());
            out.extend_from_slice(&(anchor as u32).to_le_bytes());
        }
        for row in &fields.rows {
            for d in row {
                out.extend_from_slice(&d.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<DistanceFields, GeometryError> {
        let bad = |msg: &str| GeometryError::Format(format!("distance field: {msg}"));
        if bytes.len() < 16 || bytes[0..4] != DF_MAGIC {
            return Err(bad("bad magic"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes")) as usize;
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != DF_VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let (rows, cols) = (u32_at(8), u32_at(12));
        let expected = rows
            .checked_mul(cols)
            .and_then(|rc| rc.checked_mul(8))
            .and_then(|b| b.checked_add(16 + 8 * rows))
            .ok_or_else(|| bad("size overflow"))?;
        if bytes.len() != expected {
            return Err(bad(&format!("expected {expected} bytes, found {}", bytes.len())));
        }
        let mut anchors = Vec::with_capacity(rows);
        for r in 0..rows {
            let id = u32_at(16 + 8 * r);
            let id = SensorId::new(id as u32).map_err(|_| bad(&format!("bad sensor id {id}")))?;
            let anchor = u32_at(20 + 8 * r);
            if anchor >= cols {
                return Err(bad(&format!("anchor {anchor} out of range")));
            }
            anchors.push((id, anchor));
        }
        let data = &bytes[16 + 8 * rows..];
        let rows = data
            .chunks_exact(8 * cols.max(1))
            .take(rows)
            .map(|row| {
                row.chunks_exact(8)
                    .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
                    .collect()
            })
            .collect();
        Ok(DistanceFields { anchors, rows })
    }
}
