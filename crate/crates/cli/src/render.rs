//! Binary PGM heatmaps.

use handwave_core::geometry::HandSurface;

fn pgm(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

fn gray(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Square matrix with values in [0, 1], `cell` pixels per entry.
pub fn matrix_pgm(values: &[Vec<f64>], cell: usize) -> Vec<u8> {
    let n = values.len();
    let side = n * cell;
    let mut pixels = vec![0u8; side * side];
    for (r, row) in values.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            for y in r * cell..(r + 1) * cell {
                pixels[y * side + c * cell..y * side + (c + 1) * cell].fill(gray(v));
            }
        }
    }
    pgm(side, side, &pixels)
}

/// Dorsal view of a per-vertex map: one pixel per millimeter, brightest
/// value wins where vertices overlap, scaled to the map's maximum.
pub fn surface_pgm(surface: &HandSurface, values: &[f64]) -> Vec<u8> {
    const MARGIN: f64 = 4.0;
    const SPLAT: i64 = 1;
    let pts: Vec<_> = surface.vertices().collect();
    let (mut lo, mut hi) = ([f64::MAX; 2], [f64::MIN; 2]);
    for p in &pts {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let width = (hi[0] - lo[0] + 2.0 * MARGIN).ceil() as usize;
    let height = (hi[1] - lo[1] + 2.0 * MARGIN).ceil() as usize;
    let peak = values.iter().fold(0.0f64, |m, v| m.max(*v));
    let mut pixels = vec![0u8; width * height];
    for (p, &v) in pts.iter().zip(values) {
        let level = if peak > 0.0 { gray(v / peak) } else { 0 };
        let x = (p[0] - lo[0] + MARGIN) as i64;
        // fingertips at the top
        let y = (hi[1] - p[1] + MARGIN) as i64;
        for dy in -SPLAT..=SPLAT {
            for dx in -SPLAT..=SPLAT {
                let (px, py) = (x + dx, y + dy);
                if px >= 0 && py >= 0 && (px as usize) < width && (py as usize) < height {
                    let i = py as usize * width + px as usize;
                    pixels[i] = pixels[i].max(level);
                }
            }
        }
    }
    pgm(width, height, &pixels)
}
