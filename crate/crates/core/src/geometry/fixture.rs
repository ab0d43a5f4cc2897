//! Low-resolution hand surface sampled from the reference hand model in a
//! neutral open posture. The generated cloud is committed as
//! `assets/hand_fixture.ply`; a test keeps the two in sync.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::Vector3;

use super::{build_surface, io, GeometryError, HandSurface, PointCloud, DEFAULT_NEIGHBORS};
use crate::anatomy::{HandModel, Region, Segment, LAYOUT_VERSION};

/// Target point spacing of the committed fixture, mm.
pub const FIXTURE_SPACING: f64 = 3.0;

pub const FIXTURE_PLY: &str = include_str!("../../assets/hand_fixture.ply");

// Points closer than this to another segment's interior are kept, so the
// seams between segments stay sampled.
const SEAM_MARGIN: f64 = 0.3;

/// Ramanujan's approximation of an ellipse perimeter.
fn perimeter(a: f64, b: f64) -> f64 {
    PI * (3.0 * (a + b) - ((3.0 * a + b) * (a + 3.0 * b)).sqrt())
}

fn ring_count(length: f64, spacing: f64, min: usize) -> usize {
    ((length / spacing).round() as usize).max(min)
}

fn sample_segment(seg: &Segment, spacing: f64, out: &mut Vec<(Vector3<f64>, Vector3<f64>)>) {
    let around = ring_count(perimeter(seg.half_width, seg.half_height), spacing, 6);
    let rings = ring_count(seg.length, spacing, 1);
    for j in 0..=rings {
        let t = seg.length * j as f64 / rings as f64;
        // stagger alternate rings so neighbors are not all axis-aligned
        let phase = if j % 2 == 0 { 0.0 } else { 0.5 };
        for i in 0..around {
            out.push(seg.wall(t, TAU * (i as f64 + phase) / around as f64));
        }
    }
    if seg.cap <= 0.0 {
        return;
    }
    let mean_radius = 0.5 * (seg.half_width + seg.half_height);
    let arc = FRAC_PI_2 * 0.5 * (mean_radius + seg.cap);
    let levels = ring_count(arc, spacing, 2);
    for j in 1..levels {
        let beta = FRAC_PI_2 * j as f64 / levels as f64;
        let n = ring_count(perimeter(seg.half_width, seg.half_height) * beta.cos(), spacing, 3);
        let phase = if (rings + j) % 2 == 0 { 0.0 } else { 0.5 };
        for i in 0..n {
            out.push(seg.tip(beta, TAU * (i as f64 + phase) / n as f64));
        }
    }
    out.push(seg.tip(FRAC_PI_2, 0.0));
}

/// Flat ellipse closing the distal end of the palm.
fn sample_palm_cap(palm: &Segment, spacing: f64, out: &mut Vec<(Vector3<f64>, Vector3<f64>)>) {
    let y = palm.start.y + palm.length;
    let (a, b) = (palm.half_width, palm.half_height);
    let nx = (a / spacing).floor() as i64;
    let nz = (b / spacing).floor() as i64;
    for iz in -nz..=nz {
        for ix in -nx..=nx {
            let (x, z) = (ix as f64 * spacing, iz as f64 * spacing);
            // stay half a step inside the rim ring
            let r = ((x / (a - 0.5 * spacing)).powi(2) + (z / (b - 0.5 * spacing)).powi(2)).sqrt();
            if r < 1.0 {
                out.push((Vector3::new(x, y, z), Vector3::y()));
            }
        }
    }
}

/// Sample the model surface at roughly `spacing` mm, dropping points that
/// fall inside another segment.
pub fn hand_cloud(spacing: f64) -> PointCloud {
    let model = HandModel::standard();
    let mut cloud = PointCloud {
        points: Vec::new(),
        normals: Some(Vec::new()),
        regions: Some(Vec::new()),
    };
    for seg in &model.segments {
        let mut samples = Vec::new();
        sample_segment(seg, spacing, &mut samples);
        if seg.region == Region::Palm {
            sample_palm_cap(seg, spacing, &mut samples);
        }
        for (p, n) in samples {
            if model.inside_other(&p, seg.region, SEAM_MARGIN) {
                continue;
            }
            cloud.points.push(p);
            cloud.normals.as_mut().expect("set above").push(n);
            cloud.regions.as_mut().expect("set above").push(seg.region);
        }
    }
    cloud
}

/// PLY text of the fixture cloud, as committed.
pub fn fixture_ply_text() -> String {
    let comment = format!("handwave hand fixture, layout {LAYOUT_VERSION}, spacing {FIXTURE_SPACING} mm");
    io::write_ply(&hand_cloud(FIXTURE_SPACING), &comment)
}

/// Surface graph of the committed fixture.
pub fn fixture_surface() -> Result<HandSurface, GeometryError> {
    build_surface(&io::read_ply(FIXTURE_PLY)?, DEFAULT_NEIGHBORS)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn committed_fixture_matches_generator() {
        let text = fixture_ply_text();
        if std::env::var_os("HANDWAVE_BLESS").is_some() {
            let path = concat!(env!("CARGO_MANIFEST_DIR"), "/assets/hand_fixture.ply");
            std::fs::write(path, &text).unwrap();
            return;
        }
        assert!(text == FIXTURE_PLY, "fixture is stale; rerun with HANDWAVE_BLESS=1");
    }

    #[test]
    fn cloud_has_all_regions() {
        let c = hand_cloud(FIXTURE_SPACING);
        let regions = c.regions.unwrap();
        for code in 0..6 {
            assert!(regions.iter().any(|r| r.code() == code));
        }
    }
}
