//! Zero-phase Butterworth low-pass and differentiation, for turning a
//! vibrometer velocity trace into acceleration.

use super::SignalError;

/// One second-order section, transposed direct form II.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Biquad {
    b: [f64; 3],
    // a[0] is normalized to 1
    a: [f64; 2],
}

impl Biquad {
    fn lowpass(cutoff: f64, rate: f64, q: f64) -> Self {
        let w0 = 2.0 * std::f64::consts::PI * cutoff / rate;
        let (sin, cos) = w0.sin_cos();
        let alpha = sin / (2.0 * q);
        let a0 = 1.0 + alpha;
        let b0 = (1.0 - cos) / 2.0 / a0;
        Biquad {
            b: [b0, 2.0 * b0, b0],
            a: [-2.0 * cos / a0, (1.0 - alpha) / a0],
        }
    }

    /// Filter in place, starting from the steady state for a constant input
    /// equal to the first sample.
    fn run(&self, x: &mut [f64]) {
        let Some(&x0) = x.first() else { return };
        let [b0, b1, b2] = self.b;
        let [a1, a2] = self.a;
        // Unit DC gain: y = x at rest.
        let mut s1 = (1.0 - b0) * x0;
        let mut s2 = (b2 - a2) * x0;
        for v in x.iter_mut() {
            let input = *v;
            let y = b0 * input + s1;
            s1 = b1 * input - a1 * y + s2;
            s2 = b2 * input - a2 * y;
            *v = y;
        }
    }
}

/// Even-order Butterworth low-pass as a cascade of second-order sections.
#[derive(Debug, Clone, PartialEq)]
pub struct Butterworth {
    sections: Vec<Biquad>,
}

impl Butterworth {
    /// `order` is rounded up to the next even number.
    pub fn lowpass(order: usize, cutoff: f64, rate: f64) -> Result<Self, SignalError> {
        let nyquist = rate / 2.0;
        if !(cutoff > 0.0 && cutoff < nyquist) {
            return Err(SignalError::CutoffAboveNyquist { cutoff, nyquist });
        }
        let pairs = order.div_ceil(2).max(1);
        let n = 2 * pairs;
        let sections = (0..pairs)
            .map(|k| {
                let theta = std::f64::consts::PI * (2 * k + 1) as f64 / (2 * n) as f64;
                Biquad::lowpass(cutoff, rate, 1.0 / (2.0 * theta.cos()))
            })
            .collect();
        Ok(Butterworth { sections })
    }

    pub fn order(&self) -> usize {
        2 * self.sections.len()
    }

    /// Causal filtering.
    pub fn apply(&self, x: &mut [f64]) {
        for s in &self.sections {
            s.run(x);
        }
    }

    /// Forward-backward filtering with odd reflection at both ends; the
    /// result has zero phase and twice the attenuation in dB.
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        if n < 2 {
            return x.to_vec();
        }
        let pad = (3 * (self.order() + 1)).min(n - 1);
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));
        self.apply(&mut ext);
        ext.reverse();
        self.apply(&mut ext);
        ext.reverse();
        ext[pad..pad + n].to_vec()
    }
}

/// Central-difference derivative; one-sided at the ends.
pub fn differentiate(x: &[f64], rate: f64) -> Vec<f64> {
    let n = x.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| match i {
            0 => (x[1] - x[0]) * rate,
            i if i == n - 1 => (x[n - 1] - x[n - 2]) * rate,
            i => (x[i + 1] - x[i - 1]) * rate / 2.0,
        })
        .collect()
}

/// Low-pass a velocity trace at `cutoff` (4th-order Butterworth, applied
/// forward and backward) and differentiate it to acceleration.
pub fn lowpass_diff(velocity: &[f64], rate: f64, cutoff: f64) -> Result<Vec<f64>, SignalError> {
    let filter = Butterworth::lowpass(4, cutoff, rate)?;
    Ok(differentiate(&filter.filtfilt(velocity), rate))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const RATE: f64 = 22_000.0;

    fn tone(freq: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| (2.0 * PI * freq * i as f64 / RATE).sin()).collect()
    }

    fn amplitude(x: &[f64]) -> f64 {
        x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    #[test]
    fn sinusoid_derivative() {
        let v = tone(100.0, 22_000);
        let a = lowpass_diff(&v, RATE, 1000.0).unwrap();
        let mid = &a[5_000..17_000];
        let expected = 2.0 * PI * 100.0;
        assert!((amplitude(mid) / expected - 1.0).abs() < 0.01);
        // in phase with the analytic derivative
        for i in (5_000..17_000).step_by(37) {
            let truth = expected * (2.0 * PI * 100.0 * i as f64 / RATE).cos();
            assert!((a[i] - truth).abs() < 0.01 * expected);
        }
    }

    #[test]
    fn constant_velocity() {
        let a = lowpass_diff(&vec![3.25; 5000], RATE, 1000.0).unwrap();
        assert!(a.iter().all(|x| x.abs() < 1e-9));
    }

    #[test]
    fn stopband_attenuation() {
        let f = Butterworth::lowpass(4, 1000.0, RATE).unwrap();
        let x = tone(2000.0, 22_000);
        let y = f.filtfilt(&x);
        let gain = amplitude(&y[4_000..18_000]) / amplitude(&x[4_000..18_000]);
        assert!(20.0 * gain.log10() <= -20.0, "gain {gain}");
    }

    #[test]
    fn cutoff_must_be_below_nyquist() {
        assert!(matches!(lowpass_diff(&[0.0; 10], RATE, 11_000.0), Err(SignalError::CutoffAboveNyquist { .. })));
        assert!(lowpass_diff(&[0.0; 10], RATE, 10_999.0).is_ok());
    }
}
