//! Reference implementations the library is checked against. They favor
//! the plainest possible formulation over speed.
#![allow(dead_code)]

use handwave_core::{BranchSet, FrameStream, FullScale, RawSample};
use nalgebra::{Matrix3, Rotation3, SymmetricEigen, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Stream of `frames` random frames; with `gaps`, some indices are skipped.
pub fn random_stream(seed: u64, frames: usize, branches: BranchSet, range: FullScale, gaps: bool) -> FrameStream {
    let mut r = rng(seed);
    let mut stream = FrameStream::new(1310.0, range, branches);
    let mut index = r.random_range(0..1000u64);
    for _ in 0..frames {
        let readings = branches
            .sensors()
            .map(|s| (s, [r.random::<i16>(), r.random::<i16>(), r.random::<i16>()]))
            .collect();
        stream.frames.push(RawSample { index, range, readings });
        index += if gaps && r.random_bool(0.05) { r.random_range(2..5) } else { 1 };
    }
    stream
}

/// Σₜ x(t) y(t+k) for k in -lag..=lag, straight from the definition.
pub fn direct_xcorr(x: &[f64], y: &[f64], lag: usize) -> Vec<f64> {
    let lag = lag as isize;
    (-lag..=lag)
        .map(|k| {
            let mut s = 0.0;
            for t in 0..x.len() as isize {
                let u = t + k;
                if u >= 0 && (u as usize) < y.len() {
                    s += x[t as usize] * y[u as usize];
                }
            }
            s
        })
        .collect()
}

/// Leading eigenpair of the window covariance from nalgebra's dense solver.
pub fn dense_top_eigen(window: &[[f64; 3]], centered: bool) -> (f64, [f64; 3]) {
    let n = window.len() as f64;
    let mut mean = [0.0; 3];
    if centered {
        for s in window {
            for k in 0..3 {
                mean[k] += s[k] / n;
            }
        }
    }
    let mut cov = Matrix3::zeros();
    for s in window {
        for r in 0..3 {
            for c in 0..3 {
                cov[(r, c)] += (s[r] - mean[r]) * (s[c] - mean[c]) / n;
            }
        }
    }
    let e = SymmetricEigen::new(cov);
    let i = e.eigenvalues.imax();
    let v = e.eigenvectors.column(i);
    (e.eigenvalues[i], [v[0], v[1], v[2]])
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

/// Power of `x` at frequency `f` by direct correlation with a complex tone.
pub fn tone_power(x: &[f64], rate: f64, f: f64) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (t, v) in x.iter().enumerate() {
        let ph = std::f64::consts::TAU * f * t as f64 / rate;
        re += v * ph.cos();
        im -= v * ph.sin();
    }
    re * re + im * im
}

/// Frequency of the strongest tone: coarse scan at 1 Hz, then 0.01 Hz
/// around the best coarse bin.
pub fn peak_frequency(x: &[f64], rate: f64) -> f64 {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let x: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let scan = |lo: f64, hi: f64, step: f64| {
        let mut best = (lo, f64::MIN);
        let mut f = lo;
        while f <= hi {
            let p = tone_power(&x, rate, f);
            if p > best.1 {
                best = (f, p);
            }
            f += step;
        }
        best.0
    };
    let coarse = scan(1.0, rate / 2.0 - 1.0, 1.0);
    scan(coarse - 1.0, coarse + 1.0, 0.01)
}

/// Fraction of signal energy within ±`band` Hz of `f`, from a direct DFT.
pub fn energy_fraction(x: &[f64], rate: f64, f: f64, band: f64) -> f64 {
    let n = x.len();
    let mut total = 0.0;
    let mut near = 0.0;
    for k in 0..=n / 2 {
        let fk = k as f64 * rate / n as f64;
        let p = tone_power(x, rate, fk);
        let w = if k == 0 || 2 * k == n { 1.0 } else { 2.0 };
        total += w * p;
        if (fk - f).abs() <= band {
            near += w * p;
        }
    }
    near / total
}

/// Anisotropic Gaussian cloud (axis scales 3 : 1 : 0.3) in a random
/// orientation with a gravity-like offset.
pub fn random_window(seed: u64, len: usize) -> Vec<[f64; 3]> {
    let mut r = rng(seed);
    let rot = Rotation3::new(Vector3::new(r.random_range(-3.0..3.0), r.random_range(-3.0..3.0), r.random_range(-3.0..3.0)));
    let offset = Vector3::new(0.3, -0.2, 9.8);
    (0..len)
        .map(|_| {
            let z: [f64; 3] = [0, 1, 2].map(|_| StandardNormal.sample(&mut r));
            let v = rot * Vector3::new(3.0 * z[0], z[1], 0.3 * z[2]) + offset;
            [v.x, v.y, v.z]
        })
        .collect()
}
