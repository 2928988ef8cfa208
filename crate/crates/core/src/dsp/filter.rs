//! Butterworth bandpass filtering on cascaded second-order sections.
//!
//! Coefficients come from the analog Butterworth prototype via the
//! lowpass-to-bandpass transform and a bilinear transform with frequency
//! pre-warping. At the corner ratios used here (0.1 Hz lower edge at a 125 Hz
//! rate) a direct-form transfer function of order 10 is ill-conditioned;
//! second-order sections keep the poles well separated.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::io::Signal;

/// Bandpass filter specification.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct FilterSpec {
    pub low_cut: f64,
    pub high_cut: f64,
    pub order: usize,
    pub sample_rate: f64,
}

impl Default for FilterSpec {
    fn default() -> Self {
        FilterSpec::study_default()
    }
}

impl FilterSpec {
    /// The study default: 0.1–15 Hz, 5th order, at 125 Hz.
    pub fn study_default() -> FilterSpec {
        FilterSpec {
            low_cut: 0.1,
            high_cut: 15.0,
            order: 5,
            sample_rate: crate::EOG_SAMPLE_RATE_HZ,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.order < 1 {
            return Err(Error::invalid_parameter("order", "must be >= 1"));
        }
        if !(self.sample_rate > 0.0) || !self.sample_rate.is_finite() {
            return Err(Error::NonPositiveSampleRate {
                value: self.sample_rate,
            });
        }
        if !(self.low_cut > 0.0 && self.low_cut < self.high_cut) {
            return Err(Error::invalid_parameter(
                "low_cut",
                format!(
                    "need 0 < low_cut < high_cut, got {} and {}",
                    self.low_cut, self.high_cut
                ),
            ));
        }
        if !(self.high_cut < self.sample_rate / 2.0) {
            return Err(Error::invalid_parameter(
                "high_cut",
                format!(
                    "must stay below Nyquist ({} Hz), got {}",
                    self.sample_rate / 2.0,
                    self.high_cut
                ),
            ));
        }
        Ok(())
    }
}

/// One second-order section, coefficients normalized so a0 = 1.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Biquad {
    /// Direct form II transposed, single pass over the block.
    fn run(&self, x: &mut [f64]) {
        let (mut s1, mut s2) = (0.0, 0.0);
        for v in x.iter_mut() {
            let input = *v;
            let y = self.b[0] * input + s1;
            s1 = self.b[1] * input - self.a[0] * y + s2;
            s2 = self.b[2] * input - self.a[1] * y;
            *v = y;
        }
    }
}

/// Design the digital bandpass as second-order sections.
pub(crate) fn design_bandpass(spec: &FilterSpec) -> Result<Vec<Biquad>> {
    spec.validate()?;
    let fs = spec.sample_rate;
    let k = 2.0 * fs; // bilinear constant

    // Pre-warped analog edge frequencies.
    let w1 = k * (PI * spec.low_cut / fs).tan();
    let w2 = k * (PI * spec.high_cut / fs).tan();
    let w0sq = w1 * w2;
    let bw = w2 - w1;

    // Analog lowpass prototype poles on the unit circle, then the
    // lowpass-to-bandpass substitution s -> (s^2 + w0^2)/(bw*s).
    let n = spec.order;
    let mut z_poles: Vec<Complex64> = Vec::with_capacity(2 * n);
    for m in 0..n {
        let theta = PI * (2.0 * m as f64 + n as f64 + 1.0) / (2.0 * n as f64);
        let proto = Complex64::new(theta.cos(), theta.sin());
        let pb = proto * bw;
        let disc = (pb * pb - Complex64::new(4.0 * w0sq, 0.0)).sqrt();
        for s in [(pb + disc) / 2.0, (pb - disc) / 2.0] {
            // Bilinear transform of the pole.
            z_poles.push((Complex64::new(k, 0.0) + s) / (Complex64::new(k, 0.0) - s));
        }
    }

    // Group poles into conjugate pairs (plus pure real pairs for odd-order
    // prototypes). Zeros are n at z=+1 and n at z=-1, one of each per
    // section: numerator (1 - z^-2).
    const IM_TOL: f64 = 1e-10;
    let mut upper: Vec<Complex64> = z_poles.iter().copied().filter(|p| p.im > IM_TOL).collect();
    let mut reals: Vec<f64> = z_poles
        .iter()
        .filter(|p| p.im.abs() <= IM_TOL)
        .map(|p| p.re)
        .collect();
    upper.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).expect("finite poles"));
    reals.sort_by(|a, b| a.partial_cmp(b).expect("finite poles"));
    debug_assert_eq!(upper.len() * 2 + reals.len(), 2 * n);
    debug_assert_eq!(reals.len() % 2, 0);

    let mut sections: Vec<Biquad> = Vec::with_capacity(n);
    for p in upper {
        sections.push(Biquad {
            b: [1.0, 0.0, -1.0],
            a: [-2.0 * p.re, p.norm_sqr()],
        });
    }
    for pair in reals.chunks(2) {
        sections.push(Biquad {
            b: [1.0, 0.0, -1.0],
            a: [-(pair[0] + pair[1]), pair[0] * pair[1]],
        });
    }

    // Normalize to unit gain at the (digital) center frequency.
    let wc = 2.0 * (w0sq.sqrt() / k).atan();
    let z = Complex64::new(wc.cos(), wc.sin());
    let zi = z.inv();
    let mut gain = Complex64::new(1.0, 0.0);
    for s in &sections {
        let num = Complex64::new(s.b[0], 0.0) + zi * s.b[1] + zi * zi * s.b[2];
        let den = Complex64::new(1.0, 0.0) + zi * s.a[0] + zi * zi * s.a[1];
        gain *= num / den;
    }
    let scale = (1.0 / gain.norm()).powf(1.0 / sections.len() as f64);
    for s in &mut sections {
        for b in &mut s.b {
            *b *= scale;
        }
    }
    Ok(sections)
}

/// Causal single-pass Butterworth bandpass. Output length equals input
/// length; state starts at rest.
pub fn bandpass_filter(signal: &Signal, spec: &FilterSpec) -> Result<Signal> {
    spec.validate()?;
    if signal.len() <= 3 * spec.order {
        return Err(Error::SignalTooShort {
            need: 3 * spec.order + 1,
            got: signal.len(),
        });
    }
    if (signal.sample_rate - spec.sample_rate).abs() > 1e-9 {
        return Err(Error::invalid_parameter(
            "sample_rate",
            format!(
                "filter designed for {} Hz, signal is {} Hz",
                spec.sample_rate, signal.sample_rate
            ),
        ));
    }
    let sections = design_bandpass(spec)?;
    let mut samples = signal.samples.clone();
    for s in &sections {
        s.run(&mut samples);
    }
    Signal::new(samples, signal.sample_rate)
}

/// Forward-backward variant with zero phase, for sensitivity analysis. The
/// pipelines use the causal pass by default.
pub fn bandpass_filter_zero_phase(signal: &Signal, spec: &FilterSpec) -> Result<Signal> {
    let forward = bandpass_filter(signal, spec)?;
    let mut reversed = forward.samples;
    reversed.reverse();
    let sections = design_bandpass(spec)?;
    for s in &sections {
        s.run(&mut reversed);
    }
    reversed.reverse();
    Signal::new(reversed, signal.sample_rate)
}
