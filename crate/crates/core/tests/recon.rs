mod common;

use std::sync::OnceLock;

use handwave_core::geometry::fixture::fixture_surface;
use handwave_core::geometry::{register_sensors, DistanceFields, HandSurface, Registration};
use handwave_core::recon::{
    reconstruct, reconstruct_vector, rms_surface_map, weight_field, WaveField, WeightCache, WeightField, WeightParams,
};
use handwave_core::signal::{ChannelSet, ScalarChannel};
use handwave_core::{default_config, SensorId};
use proptest::prelude::*;
use rand::Rng;

struct Setup {
    surface: HandSurface,
    registration: Registration,
    distances: DistanceFields,
    weights: WeightField,
}

fn setup() -> &'static Setup {
    static S: OnceLock<Setup> = OnceLock::new();
    S.get_or_init(|| {
        let surface = fixture_surface().unwrap();
        let registration = register_sensors(&surface, &default_config(1.0).unwrap()).unwrap();
        let distances = DistanceFields::compute(&surface, &registration).unwrap();
        let weights = WeightField::from_distances(&distances, WeightParams::default()).unwrap();
        Setup { surface, registration, distances, weights }
    })
}

fn channels(values: impl Fn(usize, usize) -> f64, frames: usize) -> ChannelSet {
    let chans = SensorId::all()
        .enumerate()
        .map(|(i, id)| ScalarChannel::new(id, (0..frames).map(|t| values(i, t)).collect()))
        .collect();
    ChannelSet::new(1310.0, chans).unwrap()
}

#[test]
fn every_fixture_vertex_is_covered() {
    let s = setup();
    assert!(s.weights.orphans().is_empty());
    for v in 0..s.weights.vertices() {
        let total: f64 = s.weights.normalized(v).iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(s.weights.raw(v).iter().all(|&w| w >= 0.0));
    }
}

#[test]
fn own_anchor_carries_the_largest_weight() {
    let s = setup();
    for (i, &(_, anchor)) in s.registration.anchors.iter().enumerate() {
        let at_anchor = s.weights.raw(anchor)[i];
        assert!((at_anchor - WeightParams::default().phi(0.0)).abs() < 1e-15);
        assert!((0..s.weights.vertices()).all(|v| s.weights.raw(v)[i] <= at_anchor));
    }
}

#[test]
fn identical_channels_reproduce_the_signal() {
    let s = setup();
    let set = channels(|_, t| (t as f64 * 0.37).sin() * 3.0, 64);
    let f = reconstruct(&set, &s.weights).unwrap();
    for t in 0..64 {
        let expected = (t as f64 * 0.37).sin() * 3.0;
        assert!(f.frame(t).iter().all(|v| (v - expected).abs() < 1e-12));
    }
}

#[test]
fn weights_shrink_with_distance() {
    let s = setup();
    let p = WeightParams::default();
    for row in &s.distances.rows {
        let mut pairs: Vec<(f64, f64)> = row.iter().map(|&d| (d, p.weight(d))).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!(pairs.windows(2).all(|w| w[1].1 <= w[0].1));
        assert!(pairs.iter().filter(|q| q.0 >= p.zero_crossing()).all(|q| q.1 == 0.0));
    }
}

#[test]
fn scaled_surface_with_scaled_constants_matches() {
    let s = setup();
    for gamma in [2.0, 0.5, 1.37] {
        let big = s.surface.scaled(gamma).unwrap();
        let reg = Registration {
            anchors: s.registration.anchors.clone(),
            snaps: s.registration.snaps.clone(),
            max_snap: s.registration.max_snap,
        };
        let p = WeightParams { gain: 17.0 * gamma, alpha: 25.5 * gamma, ..Default::default() };
        let w = weight_field(&big, &reg, p).unwrap();
        for v in (0..w.vertices()).step_by(13) {
            for (a, b) in w.raw(v).iter().zip(s.weights.raw(v)) {
                if gamma == 2.0 || gamma == 0.5 {
                    assert_eq!(a, b);
                } else {
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn cache_reuses_fields() {
    let s = setup();
    let mut cache = WeightCache::new();
    let a = cache.get_or_compute(&s.surface, &s.registration, WeightParams::default()).unwrap();
    let b = cache.get_or_compute(&s.surface, &s.registration, WeightParams::default()).unwrap();
    assert!(std::sync::Arc::ptr_eq(&a, &b));
    assert_eq!(*a, s.weights);
    let signed = WeightParams { rectify: false, ..Default::default() };
    cache.get_or_compute(&s.surface, &s.registration, signed).unwrap();
    assert_eq!(cache.len(), 2);
}

#[test]
fn vector_mode_is_componentwise() {
    let s = setup();
    let series: Vec<(SensorId, Vec<[f64; 3]>)> = SensorId::all()
        .map(|id| (id, (0..8).map(|t| [id.get() as f64, t as f64, -1.0]).collect()))
        .collect();
    let [x, y, z] = reconstruct_vector(&series, 1310.0, &s.weights).unwrap();
    let scalar_x = reconstruct(&channels(|i, _| SensorId::from_slot(i).unwrap().get() as f64, 8), &s.weights).unwrap();
    assert_eq!(x, scalar_x);
    assert!(y.frame(5).iter().all(|v| (v - 5.0).abs() < 1e-12));
    assert!(z.data.iter().all(|v| (v + 1.0).abs() < 1e-12));
}

#[test]
fn full_window_rms_is_global_rms() {
    let mut f = WaveField::zeros(1000.0, 3, 250);
    let mut r = common::rng(4);
    for x in f.data.iter_mut() {
        *x = r.random_range(-2.0..2.0);
    }
    let map = rms_surface_map(&f, 250.0).unwrap();
    for v in 0..3 {
        let s = f.series(v);
        let global = (s.iter().map(|x| x * x).sum::<f64>() / s.len() as f64).sqrt();
        assert!((map[v] - global).abs() < 1e-9);
    }
    let c = WaveField { data: vec![-1.5; 3 * 400], ..WaveField::zeros(1000.0, 3, 400) };
    assert!(rms_surface_map(&c, 250.0).unwrap().iter().all(|&x| (x - 1.5).abs() < 1e-12));
}

#[test]
fn wave_field_file_round_trip() {
    let s = setup();
    let set = channels(|i, t| (i * t) as f64 * 0.001, 20);
    let f = reconstruct(&set, &s.weights).unwrap();
    let back = WaveField::from_bytes(&f.to_bytes()).unwrap();
    assert_eq!((back.vertices, back.frames, back.rate), (f.vertices, f.frames, f.rate));
    for (a, b) in back.data.iter().zip(&f.data) {
        assert_eq!(*a, f64::from(*b as f32));
    }
    assert!(f.frame_csv(3).starts_with("vertex,value\n0,"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn reconstruction_is_convex(seed in any::<u64>()) {
        let s = setup();
        let mut r = common::rng(seed);
        let data: Vec<Vec<f64>> = (0..42).map(|_| (0..16).map(|_| r.random_range(-10.0..10.0)).collect()).collect();
        let set = channels(|i, t| data[i][t], 16);
        let f = reconstruct(&set, &s.weights).unwrap();
        for t in 0..16 {
            let bound = data.iter().map(|c| c[t].abs()).fold(0.0, f64::max);
            let lo = data.iter().map(|c| c[t]).fold(f64::INFINITY, f64::min);
            let hi = data.iter().map(|c| c[t]).fold(f64::NEG_INFINITY, f64::max);
            for &v in f.frame(t) {
                prop_assert!(v.abs() <= bound * (1.0 + 1e-12));
                prop_assert!(v >= lo - 1e-12 * bound && v <= hi + 1e-12 * bound);
            }
        }
    }

    #[test]
    fn reconstruction_is_linear(seed in any::<u64>(), k in -5.0f64..5.0) {
        let s = setup();
        let mut r = common::rng(seed);
        let data: Vec<f64> = (0..42 * 4).map(|_| r.random_range(-1.0..1.0)).collect();
        let a = reconstruct(&channels(|i, t| data[i * 4 + t], 4), &s.weights).unwrap();
        let b = reconstruct(&channels(|i, t| k * data[i * 4 + t], 4), &s.weights).unwrap();
        for (x, y) in a.data.iter().zip(&b.data) {
            prop_assert!((k * x - y).abs() < 1e-12);
        }
    }
}
