//! Acceptance checks. Prints one line per criterion and exits nonzero if
//! any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use handwave_core::anatomy::HandModel;
use handwave_core::geometry::fixture::fixture_surface;
use handwave_core::geometry::register_sensors;
use handwave_core::recon::{reconstruct, rms_surface_map, weight_field, WeightParams};
use handwave_core::signal::{
    cross_correlation, pca_project, project_all, similarity, ChannelSet, ProjectionOptions, ProjectionWindow,
    ScalarChannel, SimilarityOptions,
};
use handwave_core::sim::{propagate, sample_sensors, wavelength, ContactEvent, SensorSampling, TissueParams, Waveform};
use handwave_core::wire::{decode_stream, encode_stream, schedule_throughput, BusTopology};
use handwave_core::{default_config, BranchSet, Digit, FullScale, SensorId};
use nalgebra::{Rotation3, Vector3};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn wire_round_trip() -> Outcome {
    let started = Instant::now();
    let ranges = [FullScale::G2, FullScale::G4, FullScale::G6, FullScale::G8, FullScale::G16];
    let mut frames = 0;
    for (seed, &range) in ranges.iter().enumerate() {
        let stream = common::random_stream(seed as u64, 1000, BranchSet::ALL, range, seed % 2 == 1);
        let decoded = decode_stream(&encode_stream(&stream).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        ensure(decoded.stream == stream, || format!("round trip differs for {range:?}"))?;
        frames += stream.frames.len();
    }

    let base = common::random_stream(99, 30, BranchSet::ALL, FullScale::G2, false);
    let clean = encode_stream(&base).unwrap();
    let mut r = common::rng(100);
    let (mut errors, mut flagged) = (0, 0);
    let cases = 2000;
    for case in 0..cases {
        let mut bytes = clean.clone();
        if case % 2 == 0 {
            let i = r.random_range(0..bytes.len());
            bytes[i] ^= r.random_range(1..=255u8);
        } else {
            for _ in 0..r.random_range(1..20) {
                let i = r.random_range(0..bytes.len());
                match r.random_range(0..3) {
                    0 => bytes[i] = r.random(),
                    1 => bytes.insert(i, r.random()),
                    _ => {
                        bytes.remove(i);
                    }
                }
            }
            let cut = r.random_range(0..=bytes.len());
            bytes.truncate(cut);
        }
        match catch_unwind(|| decode_stream(&bytes)) {
            Err(_) => return Err(format!("decoder panicked on fuzz case {case}")),
            Ok(Err(_)) => errors += 1,
            Ok(Ok(d)) => {
                let noticed = !d.warnings.is_empty() || !d.drops.is_empty() || d.stream != base;
                ensure(noticed || bytes == clean, || format!("fuzz case {case} went unnoticed"))?;
                flagged += 1;
            }
        }
    }
    let secs = started.elapsed().as_secs_f64();
    ensure(secs < 10.0, || format!("took {secs:.2} s"))?;
    Ok(format!(
        "{frames} frames bit-exact; {cases} corrupt streams: {errors} errors, {flagged} flagged, 0 panics; {secs:.2} s"
    ))
}

fn throughput() -> Outcome {
    let r = schedule_throughput(1.6e6, &BusTopology::full());
    ensure((1295.0..=1325.0).contains(&r), || format!("{r:.1} frames/s"))?;
    Ok(format!("{r:.1} frames/s at 1.6 MHz"))
}

fn pca_projection() -> Outcome {
    let sid = SensorId::new(31).unwrap();
    let mut worst_var = 0.0f64;
    for seed in 0..100 {
        let data = common::random_window(seed, 101 + (seed as usize * 37) % 898);
        let p = pca_project(&ProjectionWindow::new(sid, &data).unwrap(), true);
        let (lambda, _) = common::dense_top_eigen(&data, true);
        let n = p.samples.len() as f64;
        let mean = p.samples.iter().sum::<f64>() / n;
        let var = p.samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        worst_var = worst_var.max((var / lambda - 1.0).abs());
    }
    ensure(worst_var < 1e-9, || format!("variance off by {worst_var:e}"))?;

    let data = common::random_window(7, 256);
    let base = pca_project(&ProjectionWindow::new(sid, &data).unwrap(), true).samples;
    let mut r = common::rng(8);
    let mut worst_corr = 0.0f64;
    for _ in 0..100 {
        let rot = Rotation3::new(Vector3::new(r.random_range(-3.0..3.0), r.random_range(-3.0..3.0), r.random_range(-3.0..3.0)));
        let turned: Vec<[f64; 3]> = data.iter().map(|a| (rot * Vector3::from(*a)).into()).collect();
        let p = pca_project(&ProjectionWindow::new(sid, &turned).unwrap(), true).samples;
        worst_corr = worst_corr.max((common::pearson(&base, &p).abs() - 1.0).abs());
    }
    ensure(worst_corr < 1e-9, || format!("|corr| off by {worst_corr:e}"))?;
    Ok(format!("max relative variance error {worst_var:.1e}; max ||corr|-1| {worst_corr:.1e}"))
}

fn similarity_checks() -> Outcome {
    let noise = |seed: u64, n: usize| -> Vec<f64> {
        let mut r = common::rng(seed);
        (0..n).map(|_| StandardNormal.sample(&mut r)).collect()
    };
    let set = |f: &dyn Fn(usize) -> Vec<f64>| {
        let chans = SensorId::all().enumerate().map(|(i, id)| ScalarChannel::new(id, f(i))).collect();
        ChannelSet::new(1310.0, chans).unwrap()
    };
    let a = set(&|i| noise(200 + i as u64, 1000));
    let neg = set(&|i| noise(200 + i as u64, 1000).into_iter().map(|v| -v).collect());
    let opts = SimilarityOptions::default();
    let s_aa = similarity(&a, &a, &opts).map_err(|e| e.to_string())?;
    let s_neg = similarity(&a, &neg, &opts).map_err(|e| e.to_string())?;
    ensure((s_aa - 1.0).abs() < 1e-9, || format!("S(A,A) = {s_aa}"))?;
    ensure((s_neg - 1.0).abs() < 1e-9, || format!("S(A,-A) = {s_neg}"))?;

    let (x, y) = (noise(1, 1000), noise(2, 1000));
    let fast = cross_correlation(&x, &y, 999);
    let slow = common::direct_xcorr(&x, &y, 999);
    let err = fast.iter().zip(&slow).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    ensure(err < 1e-9, || format!("FFT vs direct differ by {err:e}"))?;
    Ok(format!("S(A,A) - 1 = {:.1e}; S(A,-A) - 1 = {:.1e}; FFT vs direct {err:.1e}", s_aa - 1.0, s_neg - 1.0))
}

fn interpolation_constants() -> Outcome {
    let p = WeightParams::default();
    let direct = 17.0 / 25.5 - 8.7e-2;
    let phi0 = p.phi(0.0);
    ensure((phi0 - direct).abs() < 1e-6, || format!("phi(0) = {phi0}, direct {direct}"))?;

    let surface = fixture_surface().map_err(|e| e.to_string())?;
    let registration = register_sensors(&surface, &default_config(1.0).unwrap()).map_err(|e| e.to_string())?;
    let spacing = surface.mean_edge_length();
    let zero = p.zero_crossing();
    ensure((zero - 169.91).abs() <= spacing, || format!("zero crossing {zero:.3} mm"))?;
    let mut beyond = 0;
    for &(_, anchor) in &registration.anchors {
        for (v, d) in surface.distance_field(anchor).map_err(|e| e.to_string())?.into_iter().enumerate() {
            if d >= 169.91 {
                ensure(p.weight(d) == 0.0, || format!("weight {} at vertex {v}, d = {d:.2}", p.weight(d)))?;
                beyond += 1;
            }
        }
    }
    Ok(format!(
        "phi(0) = {phi0:.6}; zero crossing {zero:.4} mm (spacing {spacing:.2} mm); {beyond} vertex-sensor pairs beyond 169.91 mm all zero"
    ))
}

/// Everything the fixture-mesh criteria share: a 1 s, 100 Hz tap on the
/// digit II fingertip, sampled, encoded, decoded, projected and
/// reconstructed.
struct Loop {
    sensors: Vec<(SensorId, usize)>,
    source: usize,
    truth: handwave_core::recon::WaveField,
    channels: ChannelSet,
    recon: handwave_core::recon::WaveField,
    weights: handwave_core::recon::WeightField,
    surface: handwave_core::geometry::HandSurface,
}

fn run_loop() -> Result<Loop, String> {
    let surface = fixture_surface().map_err(|e| e.to_string())?;
    let config = default_config(1.0).unwrap();
    let registration = register_sensors(&surface, &config).map_err(|e| e.to_string())?;
    let source = surface.nearest_vertex(&HandModel::standard().fingertip(Digit::II)).0;
    let event = ContactEvent {
        source,
        waveform: Waveform::Sinusoid { frequency: 100.0, amplitude: 5.0 },
        onset: 0.0,
        duration: 1.0,
    };
    let truth = propagate(&surface, &event, &TissueParams::default(), 1.05, 1310.0).map_err(|e| e.to_string())?;
    let stream = sample_sensors(&truth, &surface, &registration, &config, &SensorSampling { seed: 1, ..Default::default() })
        .map_err(|e| e.to_string())?;
    let decoded = decode_stream(&encode_stream(&stream).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let series = decoded.stream.calibrated_series().map_err(|e| e.to_string())?;
    let projected = project_all(&series, &ProjectionOptions::default()).map_err(|e| e.to_string())?;
    let channels = ChannelSet::new(decoded.stream.rate, projected).map_err(|e| e.to_string())?;
    let weights = weight_field(&surface, &registration, WeightParams::default()).map_err(|e| e.to_string())?;
    let recon = reconstruct(&channels, &weights).map_err(|e| e.to_string())?;
    Ok(Loop { sensors: registration.anchors.clone(), source, truth, channels, recon, weights, surface })
}

fn reconstruction_properties(l: &Loop) -> Outcome {
    let mut worst_sum = 0.0f64;
    for v in 0..l.weights.vertices() {
        worst_sum = worst_sum.max((l.weights.normalized(v).iter().sum::<f64>() - 1.0).abs());
    }
    ensure(worst_sum < 1e-12, || format!("weights sum off by {worst_sum:e}"))?;

    let frames = l.recon.frames;
    for t in 0..frames {
        let bound = l.channels.channels.iter().fold(0.0f64, |m, c| m.max(c.samples[t].abs()));
        for (v, a) in l.recon.frame(t).iter().enumerate() {
            // a few ulps of slack for the weighted sum
            ensure(a.abs() <= bound * (1.0 + 1e-12), || format!("vertex {v} frame {t}: |{a}| > {bound}"))?;
        }
    }
    Ok(format!(
        "max |sum - 1| {worst_sum:.1e} over {} vertices; convexity holds on {} vertex-frames",
        l.weights.vertices(),
        l.weights.vertices() * frames
    ))
}

fn end_to_end(l: &Loop, started: Instant) -> Outcome {
    let dist = l.surface.distance_field(l.source).map_err(|e| e.to_string())?;
    let &(nearest, _) = l.sensors.iter().min_by(|a, b| dist[a.1].total_cmp(&dist[b.1])).unwrap();
    let ch = l.channels.channel(nearest).unwrap();
    let peak = common::peak_frequency(&ch.samples[..1310], 1310.0);
    ensure((peak - 100.0).abs() <= 1.0, || format!("sensor {nearest} peaks at {peak:.2} Hz"))?;

    // RMS over the stimulus second
    let truth = rms_surface_map(&l.truth.slice(0, 1310), 1000.0).map_err(|e| e.to_string())?;
    let recon = rms_surface_map(&l.recon.slice(0, 1310), 1000.0).map_err(|e| e.to_string())?;
    let argmax = (0..recon.len()).max_by(|&a, &b| recon[a].total_cmp(&recon[b])).unwrap();
    let region = l.surface.region(argmax);
    let on_digit = region == Some(handwave_core::Region::Digit(Digit::II));
    ensure(on_digit, || format!("RMS argmax vertex {argmax} is on {region:?}"))?;
    let corr = common::pearson(&truth, &recon);
    ensure(corr >= 0.8, || format!("RMS correlation {corr:.3}"))?;
    let secs = started.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("took {secs:.1} s"))?;
    Ok(format!(
        "sensor {nearest} peak {peak:.2} Hz; argmax vertex {argmax} on digit II; RMS correlation {corr:.3}; {secs:.2} s"
    ))
}

fn shear_speed() -> Outcome {
    let p = TissueParams::default();
    let v = p.shear_speed();
    ensure((4.4..=17.5).contains(&v), || format!("v_s = {v:.3} m/s"))?;
    ensure((v - 6.52).abs() < 0.01, || format!("v_s = {v:.4} m/s"))?;
    let lambda = wavelength(&p, 100.0).map_err(|e| e.to_string())?;
    ensure(lambda > 10.0, || format!("wavelength {lambda:.2} mm"))?;
    Ok(format!("v_s = {v:.4} m/s; wavelength at 100 Hz {lambda:.2} mm"))
}

fn performance() -> Outcome {
    let mut stream = common::random_stream(42, 13_100, BranchSet::ALL, FullScale::G2, false);
    // -32768 is outside every range's calibrated span
    for frame in &mut stream.frames {
        for (_, counts) in &mut frame.readings {
            *counts = counts.map(|c| c.max(-i16::MAX));
        }
    }
    let bytes = encode_stream(&stream).map_err(|e| e.to_string())?;
    let started = Instant::now();
    let decoded = decode_stream(&bytes).map_err(|e| e.to_string())?;
    let series = decoded.stream.calibrated_series().map_err(|e| e.to_string())?;
    let projected = project_all(&series, &ProjectionOptions::default()).map_err(|e| e.to_string())?;
    let secs = started.elapsed().as_secs_f64();
    ensure(projected.len() == 42 && projected.iter().all(|c| c.samples.len() == 13_100), || "wrong output shape".into())?;
    ensure(secs < 10.0, || format!("took {secs:.2} s"))?;
    Ok(format!("10 s x 1310 Hz x 126 channels decoded and projected in {secs:.3} s"))
}

fn main() -> ExitCode {
    let mut failures = 0;
    let mut report = |n: usize, name: &str, outcome: std::thread::Result<Outcome>| {
        let line = match outcome {
            Ok(Ok(detail)) => format!("[PASS] {n} {name}: {detail}"),
            Ok(Err(detail)) => format!("[FAIL] {n} {name}: {detail}"),
            Err(_) => format!("[FAIL] {n} {name}: panicked"),
        };
        if line.starts_with("[FAIL]") {
            failures += 1;
        }
        println!("{line}");
    };

    report(1, "wire round trip", catch_unwind(wire_round_trip));
    report(2, "throughput model", catch_unwind(throughput));
    report(3, "PCA projection", catch_unwind(pca_projection));
    report(4, "similarity", catch_unwind(similarity_checks));
    report(5, "interpolation constants", catch_unwind(interpolation_constants));

    let started = Instant::now();
    match catch_unwind(run_loop) {
        Ok(Ok(l)) => {
            report(6, "reconstruction properties", catch_unwind(AssertUnwindSafe(|| reconstruction_properties(&l))));
            report(7, "end-to-end loop", catch_unwind(AssertUnwindSafe(|| end_to_end(&l, started))));
        }
        other => {
            let why = match other {
                Ok(Err(e)) => e,
                _ => "panicked".into(),
            };
            report(6, "reconstruction properties", Ok(Err(format!("simulation failed: {why}"))));
            report(7, "end-to-end loop", Ok(Err(format!("simulation failed: {why}"))));
        }
    }

    report(8, "shear speed", catch_unwind(shear_speed));
    report(9, "performance", catch_unwind(performance));

    if failures == 0 {
        println!("acceptance: all 9 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} of 9 criteria fail");
        ExitCode::FAILURE
    }
}
