//! Hand surface as a k-nearest-neighbor graph over scanned points, with
//! graph geodesics and sensor registration.
//!
//! Coordinates are kept at the scale they were loaded with; the surface
//! scale γ is applied on the way out, so a γ-scaled surface reports every
//! length multiplied by γ and nothing else changes.

pub mod fixture;
pub mod io;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::Vector3;
use rayon::prelude::*;
use thiserror::Error;

use crate::anatomy::Region;
use crate::signal::symmetric_eigen3;
use crate::types::{SensorConfig, SensorId};

pub use io::{read_ply, read_xyz, write_ply, DistanceFieldFile};

pub const DEFAULT_NEIGHBORS: usize = 8;
/// Registration fails when a sensor is farther than this from every vertex.
pub const MAX_SNAP_MM: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("need at least 4 points, got {0}")]
    TooFewPoints(usize),
    #[error("point {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("points {0} and {1} coincide")]
    Duplicate(usize, usize),
    #[error("neighbor count must be at least 1")]
    ZeroNeighbors,
    #[error("scale must be positive and finite, got {0}")]
    BadScale(f64),
    #[error("vertex {0} is not on the surface")]
    NoSuchVertex(usize),
    #[error("vertex {b} is unreachable from vertex {a}")]
    Unreachable { a: usize, b: usize },
    #[error("sensor {sensor} is {distance:.2} mm from the nearest vertex (limit {limit} mm)")]
    SnapTooFar { sensor: SensorId, distance: f64, limit: f64 },
    #[error("sensors {first} and {second} both snap to vertex {vertex}")]
    SharedAnchor { first: SensorId, second: SensorId, vertex: usize },
    #[error("{field} has {found} entries for {expected} points")]
    AttributeLength { field: &'static str, found: usize, expected: usize },
    #[error("{0}")]
    Format(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for GeometryError {
    fn from(e: std::io::Error) -> Self {
        GeometryError::Io(e.to_string())
    }
}

/// Raw input: positions in mm with optional per-point normals and region
/// labels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vector3<f64>>,
    pub normals: Option<Vec<Vector3<f64>>>,
    pub regions: Option<Vec<Region>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vector3<f64>>) -> Self {
        PointCloud {
            points,
            normals: None,
            regions: None,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Immutable surface graph. Adjacency is stored in compressed rows; edge
/// weights are the Euclidean lengths at scale 1.
#[derive(Debug, Clone, PartialEq)]
pub struct HandSurface {
    vertices: Vec<Vector3<f64>>,
    normals: Vec<Vector3<f64>>,
    regions: Option<Vec<Region>>,
    offsets: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<f64>,
    scale: f64,
    k: usize,
    warnings: Vec<String>,
}

/// Build the neighbor graph with `k` neighbors per point, raising `k` until
/// the graph is a single component.
pub fn build_surface(cloud: &PointCloud, k: usize) -> Result<HandSurface, GeometryError> {
    let n = cloud.points.len();
    if n < 4 {
        return Err(GeometryError::TooFewPoints(n));
    }
    if k == 0 {
        return Err(GeometryError::ZeroNeighbors);
    }
    if let Some(i) = cloud.points.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
        return Err(GeometryError::NonFinite(i));
    }
    for (field, len) in [
        ("normals", cloud.normals.as_ref().map(Vec::len)),
        ("regions", cloud.regions.as_ref().map(Vec::len)),
    ] {
        if let Some(found) = len.filter(|&l| l != n) {
            return Err(GeometryError::AttributeLength { field, found, expected: n });
        }
    }

    let grid = Grid::new(&cloud.points);
    let mut k_used = k.min(n - 1);
    let mut warnings = Vec::new();
    let (offsets, targets, weights) = loop {
        let graph = knn_graph(&cloud.points, &grid, k_used)?;
        let components = count_components(&graph.0, &graph.1);
        if components == 1 {
            break graph;
        }
        let next = k_used + 1;
        let msg = format!("neighbor graph has {components} components at k={k_used}; retrying with k={next}");
        log::debug!("{msg}");
        if k_used == k.min(n - 1) {
            warnings.push(msg);
        }
        k_used = next;
    };
    if k_used != k.min(n - 1) {
        let msg = format!("raised neighbor count from {k} to {k_used} to connect the surface");
        log::warn!("{msg}");
        warnings.push(msg);
    }

    let normals = match &cloud.normals {
        Some(given) => given.iter().map(|v| v.try_normalize(0.0).unwrap_or_else(Vector3::z)).collect(),
        None => estimate_normals(&cloud.points, &offsets, &targets),
    };
    Ok(HandSurface {
        vertices: cloud.points.clone(),
        normals,
        regions: cloud.regions.clone(),
        offsets,
        targets,
        weights,
        scale: 1.0,
        k: k_used,
        warnings,
    })
}

impl HandSurface {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Neighbor count the graph was finally built with.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Copy with every length multiplied by `gamma`.
    pub fn scaled(&self, gamma: f64) -> Result<HandSurface, GeometryError> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(GeometryError::BadScale(gamma));
        }
        let mut out = self.clone();
        out.scale *= gamma;
        Ok(out)
    }

    pub fn vertex(&self, i: usize) -> Vector3<f64> {
        self.vertices[i] * self.scale
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vector3<f64>> + '_ {
        self.vertices.iter().map(move |v| v * self.scale)
    }

    /// Unit outward normal.
    pub fn normal(&self, i: usize) -> Vector3<f64> {
        self.normals[i]
    }

    pub fn region(&self, i: usize) -> Option<Region> {
        self.regions.as_ref().map(|r| r[i])
    }

    pub fn regions(&self) -> Option<&[Region]> {
        self.regions.as_deref()
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    /// Neighbors of `i` with scaled edge lengths.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[i]..self.offsets[i + 1];
        self.targets[range.clone()]
            .iter()
            .zip(&self.weights[range])
            .map(move |(&j, &w)| (j as usize, w * self.scale))
    }

    pub fn mean_edge_length(&self) -> f64 {
        self.weights.iter().sum::<f64>() / self.weights.len() as f64 * self.scale
    }

    /// FNV-1a over coordinates, adjacency and scale; used to key caches.
    pub fn content_hash(&self) -> u64 {
        let mut h = Fnv64::new();
        h.write_u64(self.vertices.len() as u64);
        for v in &self.vertices {
            for c in v.iter() {
                h.write_u64(c.to_bits());
            }
        }
        for &t in &self.targets {
            h.write_u64(u64::from(t));
        }
        for &o in &self.offsets {
            h.write_u64(o as u64);
        }
        h.write_u64(self.scale.to_bits());
        h.finish()
    }

    fn check(&self, v: usize) -> Result<(), GeometryError> {
        if v < self.len() {
            Ok(())
        } else {
            Err(GeometryError::NoSuchVertex(v))
        }
    }

    /// Shortest-path distance along graph edges, in mm.
    pub fn geodesic(&self, a: usize, b: usize) -> Result<f64, GeometryError> {
        self.check(a)?;
        self.check(b)?;
        let dist = self.dijkstra(a, Some(b));
        if dist[b].is_finite() {
            Ok(dist[b] * self.scale)
        } else {
            Err(GeometryError::Unreachable { a, b })
        }
    }

    /// Distances from `source` to every vertex.
    pub fn distance_field(&self, source: usize) -> Result<Vec<f64>, GeometryError> {
        self.check(source)?;
        let dist = self.dijkstra(source, None);
        if let Some(b) = dist.iter().position(|d| !d.is_finite()) {
            return Err(GeometryError::Unreachable { a: source, b });
        }
        Ok(dist.into_iter().map(|d| d * self.scale).collect())
    }

    /// Unscaled distances; stops once `target` is settled.
    fn dijkstra(&self, source: usize, target: Option<usize>) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.len()];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(Entry { dist: 0.0, vertex: source });
        while let Some(Entry { dist: d, vertex: u }) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            if target == Some(u) {
                break;
            }
            for e in self.offsets[u]..self.offsets[u + 1] {
                let v = self.targets[e] as usize;
                let nd = d + self.weights[e];
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(Entry { dist: nd, vertex: v });
                }
            }
        }
        dist
    }

    /// Nearest vertex to `p` (scaled coordinates) and its distance; the
    /// lowest index wins ties.
    pub fn nearest_vertex(&self, p: &Vector3<f64>) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (i, v) in self.vertices().enumerate() {
            let d = (v - p).norm();
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    }
}

/// Min-heap entry ordered by distance, then vertex index.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    vertex: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Fnv64(u64);

impl Fnv64 {
    fn new() -> Self {
        Fnv64(0xcbf2_9ce4_8422_2325)
    }

    fn write_u64(&mut self, x: u64) {
        for b in x.to_le_bytes() {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    fn finish(&self) -> u64 {
        self.0
    }
}

pub(crate) fn fnv64(words: impl IntoIterator<Item = u64>) -> u64 {
    let mut h = Fnv64::new();
    for w in words {
        h.write_u64(w);
    }
    h.finish()
}

/// Uniform bucket grid for neighbor search.
struct Grid {
    origin: Vector3<f64>,
    cell: f64,
    dims: [usize; 3],
    starts: Vec<usize>,
    items: Vec<u32>,
}

impl Grid {
    fn new(points: &[Vector3<f64>]) -> Self {
        let mut lo = points[0];
        let mut hi = points[0];
        for p in points {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        let ext = hi - lo;
        let mut e = [ext.x, ext.y, ext.z];
        e.sort_by(|a, b| b.total_cmp(a));
        let n = points.len() as f64;
        // Size cells for about two points each on a surface-like cloud.
        let spacing = if e[1] > 0.0 { (e[0] * e[1] / n).sqrt() } else { e[0] / n };
        let mut cell = (2.0 * spacing).max(e[0] * 1e-9).max(f64::MIN_POSITIVE);
        let dims = loop {
            let d = [ext.x, ext.y, ext.z].map(|x| (x / cell).floor() as usize + 1);
            if (d[0] as f64) * (d[1] as f64) * (d[2] as f64) <= 8.0 * n + 64.0 {
                break d;
            }
            cell *= 1.5;
        };
        let index = |p: &Vector3<f64>| {
            let c = |axis: usize| (((p[axis] - lo[axis]) / cell) as usize).min(dims[axis] - 1);
            (c(2) * dims[1] + c(1)) * dims[0] + c(0)
        };
        let mut counts = vec![0usize; dims[0] * dims[1] * dims[2] + 1];
        for p in points {
            counts[index(p) + 1] += 1;
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let mut fill = counts.clone();
        let mut items = vec![0u32; points.len()];
        for (i, p) in points.iter().enumerate() {
            let c = index(p);
            items[fill[c]] = i as u32;
            fill[c] += 1;
        }
        Grid { origin: lo, cell, dims, starts: counts, items }
    }

    fn coords(&self, p: &Vector3<f64>) -> [usize; 3] {
        [0, 1, 2].map(|a| (((p[a] - self.origin[a]) / self.cell) as usize).min(self.dims[a] - 1))
    }

    fn cell_items(&self, c: [usize; 3]) -> &[u32] {
        let i = (c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0];
        &self.items[self.starts[i]..self.starts[i + 1]]
    }

    /// The `k` nearest other points to point `i`, by (distance, index).
    fn nearest(&self, points: &[Vector3<f64>], i: usize, k: usize) -> Vec<(f64, u32)> {
        let p = &points[i];
        let c = self.coords(p);
        let max_ring = *self.dims.iter().max().unwrap_or(&1);
        let mut best: Vec<(f64, u32)> = Vec::with_capacity(k + 1);
        for r in 0..=max_ring {
            let r = r as isize;
            for dz in -r..=r {
                for dy in -r..=r {
                    for dx in -r..=r {
                        if dx.abs().max(dy.abs()).max(dz.abs()) != r {
                            continue;
                        }
                        let q = [c[0] as isize + dx, c[1] as isize + dy, c[2] as isize + dz];
                        if (0..3).any(|a| q[a] < 0 || q[a] >= self.dims[a] as isize) {
                            continue;
                        }
                        for &j in self.cell_items(q.map(|x| x as usize)) {
                            if j as usize == i {
                                continue;
                            }
                            let d = (points[j as usize] - p).norm();
                            let cand = (d, j);
                            if best.len() < k || cmp_cand(&cand, &best[best.len() - 1]) == Ordering::Less {
                                let at = best.partition_point(|b| cmp_cand(b, &cand) == Ordering::Less);
                                best.insert(at, cand);
                                best.truncate(k);
                            }
                        }
                    }
                }
            }
            // Points in rings beyond r are at least r cells away.
            if best.len() == k && best[k - 1].0 < r as f64 * self.cell {
                break;
            }
        }
        best
    }
}

fn cmp_cand(a: &(f64, u32), b: &(f64, u32)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

type Csr = (Vec<usize>, Vec<u32>, Vec<f64>);

/// Symmetric union of the k-nearest-neighbor relation.
fn knn_graph(points: &[Vector3<f64>], grid: &Grid, k: usize) -> Result<Csr, GeometryError> {
    let n = points.len();
    let lists: Vec<Vec<(f64, u32)>> = (0..n).into_par_iter().map(|i| grid.nearest(points, i, k)).collect();
    let mut adj: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
    for (i, list) in lists.iter().enumerate() {
        for &(d, j) in list {
            if d == 0.0 {
                let (a, b) = (i.min(j as usize), i.max(j as usize));
                return Err(GeometryError::Duplicate(a, b));
            }
            adj[i].push((j, d));
            adj[j as usize].push((i as u32, d));
        }
    }
    let mut offsets = Vec::with_capacity(n + 1);
    let mut targets = Vec::new();
    let mut weights = Vec::new();
    offsets.push(0);
    for list in &mut adj {
        list.sort_by_key(|e| e.0);
        list.dedup_by_key(|e| e.0);
        for &(j, d) in list.iter() {
            targets.push(j);
            weights.push(d);
        }
        offsets.push(targets.len());
    }
    Ok((offsets, targets, weights))
}

fn count_components(offsets: &[usize], targets: &[u32]) -> usize {
    let n = offsets.len() - 1;
    let mut seen = vec![false; n];
    let mut components = 0;
    let mut stack = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        components += 1;
        seen[s] = true;
        stack.push(s);
        while let Some(u) = stack.pop() {
            for &v in &targets[offsets[u]..offsets[u + 1]] {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    stack.push(v as usize);
                }
            }
        }
    }
    components
}

/// Smallest principal direction of each vertex's neighborhood, flipped to
/// point away from the cloud centroid.
fn estimate_normals(points: &[Vector3<f64>], offsets: &[usize], targets: &[u32]) -> Vec<Vector3<f64>> {
    let centroid = points.iter().sum::<Vector3<f64>>() / points.len() as f64;
    (0..points.len())
        .into_par_iter()
        .map(|i| {
            let hood: Vec<Vector3<f64>> = std::iter::once(points[i])
                .chain(targets[offsets[i]..offsets[i + 1]].iter().map(|&j| points[j as usize]))
                .collect();
            let mean = hood.iter().sum::<Vector3<f64>>() / hood.len() as f64;
            let mut cov = [[0.0; 3]; 3];
            for p in &hood {
                let d = p - mean;
                for r in 0..3 {
                    for c in 0..3 {
                        cov[r][c] += d[r] * d[c];
                    }
                }
            }
            let e = symmetric_eigen3(cov);
            let n = Vector3::from(e.vectors[2]);
            if n.dot(&(points[i] - centroid)) < 0.0 {
                -n
            } else {
                n
            }
        })
        .collect()
}

/// Sensor-to-vertex assignment, in ascending sensor order.
#[derive(Debug, Clone, PartialEq)]
pub struct Registration {
    pub anchors: Vec<(SensorId, usize)>,
    /// Snap distance per anchor, mm.
    pub snaps: Vec<f64>,
    pub max_snap: f64,
}

impl Registration {
    pub fn anchor(&self, id: SensorId) -> Option<usize> {
        self.anchors.iter().find(|(s, _)| *s == id).map(|&(_, v)| v)
    }
}

/// Snap the attached sensors of `config` to their nearest vertices.
pub fn register_sensors(surface: &HandSurface, config: &SensorConfig) -> Result<Registration, GeometryError> {
    let sites: Vec<(SensorId, Vector3<f64>)> = config.present_poses().map(|p| (p.id, p.position)).collect();
    register_points(surface, &sites)
}

/// Snap arbitrary sensor positions; input order does not matter.
pub fn register_points(
    surface: &HandSurface,
    sites: &[(SensorId, Vector3<f64>)],
) -> Result<Registration, GeometryError> {
    let mut sites = sites.to_vec();
    sites.sort_by_key(|s| s.0);
    let mut anchors: Vec<(SensorId, usize)> = Vec::with_capacity(sites.len());
    let mut snaps = Vec::with_capacity(sites.len());
    for (id, p) in &sites {
        let (v, d) = surface.nearest_vertex(p);
        if d > MAX_SNAP_MM {
            return Err(GeometryError::SnapTooFar { sensor: *id, distance: d, limit: MAX_SNAP_MM });
        }
        if let Some(&(first, _)) = anchors.iter().find(|(_, a)| *a == v) {
            return Err(GeometryError::SharedAnchor { first, second: *id, vertex: v });
        }
        anchors.push((*id, v));
        snaps.push(d);
    }
    let max_snap = snaps.iter().copied().fold(0.0, f64::max);
    Ok(Registration { anchors, snaps, max_snap })
}

/// One single-source distance field per registered sensor. Row order
/// follows the registration.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceFields {
    pub anchors: Vec<(SensorId, usize)>,
    pub rows: Vec<Vec<f64>>,
}

impl DistanceFields {
    pub fn compute(surface: &HandSurface, registration: &Registration) -> Result<Self, GeometryError> {
        let rows = registration
            .anchors
            .par_iter()
            .map(|&(_, v)| surface.distance_field(v))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(DistanceFields {
            anchors: registration.anchors.clone(),
            rows,
        })
    }

    pub fn vertices(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn row(&self, id: SensorId) -> Option<&[f64]> {
        self.anchors
            .iter()
            .position(|(s, _)| *s == id)
            .map(|i| self.rows[i].as_slice())
    }
}
