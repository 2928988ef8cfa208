//! Deterministic signal conditioning: detrending, mean filtering,
//! normalization, gap filling/resampling, and the composite pursuit
//! preprocessing chains.
//!
//! Every operation here is a pure, reentrant function; callers may process
//! channels in parallel.

mod filter;

pub use filter::{bandpass_filter, bandpass_filter_zero_phase, FilterSpec};

use crate::error::{Error, Result};
use crate::io::{GazeLog, Signal};

/// Remove the least-squares line. The output has zero mean and zero
/// least-squares slope.
pub fn detrend(signal: &Signal) -> Result<Signal> {
    let n = signal.len();
    if n < 2 {
        return Err(Error::SignalTooShort { need: 2, got: n });
    }
    let nf = n as f64;
    let t_mean = (nf - 1.0) / 2.0;
    let x_mean = signal.samples.iter().sum::<f64>() / nf;
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &x) in signal.samples.iter().enumerate() {
        let dt = i as f64 - t_mean;
        num += dt * (x - x_mean);
        den += dt * dt;
    }
    let slope = num / den;
    let samples = signal
        .samples
        .iter()
        .enumerate()
        .map(|(i, &x)| x - x_mean - slope * (i as f64 - t_mean))
        .collect();
    Signal::new(samples, signal.sample_rate)
}

/// Centered moving average. The window shrinks at the boundaries instead of
/// padding, so output length equals input length. For even window sizes the
/// extra sample sits on the right.
pub fn mean_filter(signal: &Signal, window: usize) -> Result<Signal> {
    if window < 1 {
        return Err(Error::invalid_parameter("window", "must be >= 1"));
    }
    if signal.is_empty() {
        return Err(Error::SignalTooShort { need: 1, got: 0 });
    }
    let n = signal.len();
    let left = (window - 1) / 2;
    let right = window / 2;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for &x in &signal.samples {
        prefix.push(prefix.last().unwrap() + x);
    }
    let samples = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(left);
            let hi = (i + right + 1).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect();
    Signal::new(samples, signal.sample_rate)
}

/// Affine map sending min to -1 and max to +1. Constant signals map to all
/// zeros so degenerate trials flow through batch analysis.
pub fn normalize(signal: &Signal) -> Result<Signal> {
    if signal.is_empty() {
        return Err(Error::SignalTooShort { need: 1, got: 0 });
    }
    let min = signal.samples.iter().copied().fold(f64::INFINITY, f64::min);
    let max = signal
        .samples
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    let samples = if span == 0.0 {
        vec![0.0; signal.len()]
    } else {
        signal
            .samples
            .iter()
            .map(|&x| 2.0 * (x - min) / span - 1.0)
            .collect()
    };
    Signal::new(samples, signal.sample_rate)
}

fn fill_axis(timestamps: &[f64], values: &[Option<f64>]) -> Result<Vec<f64>> {
    let valid: Vec<(f64, f64)> = timestamps
        .iter()
        .zip(values)
        .filter_map(|(&t, v)| v.map(|x| (t, x)))
        .collect();
    if valid.len() < 2 {
        return Err(Error::Degenerate {
            detail: format!("need >= 2 valid gaze samples per axis, got {}", valid.len()),
        });
    }
    let filled = timestamps
        .iter()
        .map(|&t| interp(&valid, t))
        .collect();
    Ok(filled)
}

/// Piecewise-linear evaluation over sorted (t, v) knots; clamps outside the
/// knot range.
fn interp(knots: &[(f64, f64)], t: f64) -> f64 {
    if t <= knots[0].0 {
        return knots[0].1;
    }
    if t >= knots[knots.len() - 1].0 {
        return knots[knots.len() - 1].1;
    }
    let hi = knots.partition_point(|&(kt, _)| kt < t);
    let (t0, v0) = knots[hi - 1];
    let (t1, v1) = knots[hi];
    if t1 == t0 {
        return v0;
    }
    v0 + (v1 - v0) * (t - t0) / (t1 - t0)
}

/// Interpolate gaps over timestamps and resample both axes to a uniform grid
/// at `target_rate`.
///
/// The grid spans the log's full timestamp range, so the output length is
/// `floor(span * target_rate) + 1`; leading/trailing gaps clamp to the
/// nearest valid sample. Callers apply the bandpass / mean-filter /
/// normalize chain afterwards.
pub fn fill_and_resample(log: &GazeLog, target_rate: f64) -> Result<(Signal, Signal)> {
    if !(target_rate > 0.0) || !target_rate.is_finite() {
        return Err(Error::NonPositiveSampleRate { value: target_rate });
    }
    if log.len() < 2 {
        return Err(Error::SignalTooShort {
            need: 2,
            got: log.len(),
        });
    }
    let t0 = log.timestamps[0];
    let span = log.timestamps[log.len() - 1] - t0;
    let n_out = (span * target_rate).floor() as usize + 1;

    let mut out = Vec::with_capacity(2);
    for values in [&log.horizontal, &log.vertical] {
        let filled = fill_axis(&log.timestamps, values)?;
        let knots: Vec<(f64, f64)> = log.timestamps.iter().copied().zip(filled).collect();
        let samples: Vec<f64> = (0..n_out)
            .map(|k| interp(&knots, t0 + k as f64 / target_rate))
            .collect();
        out.push(Signal::new(samples, target_rate)?);
    }
    let vertical = out.pop().expect("two axes");
    let horizontal = out.pop().expect("two axes");
    Ok((horizontal, vertical))
}

/// The pursuit conditioning chain applied to EOG-side signals:
/// detrend, mean filter (length 50), then normalize to [-1, 1].
pub fn preprocess_eog(signal: &Signal) -> Result<Signal> {
    preprocess_eog_with(signal, DEFAULT_MEAN_FILTER_LEN)
}

pub fn preprocess_eog_with(signal: &Signal, mean_window: usize) -> Result<Signal> {
    if signal.len() < mean_window {
        return Err(Error::SignalTooShort {
            need: mean_window,
            got: signal.len(),
        });
    }
    normalize(&mean_filter(&detrend(signal)?, mean_window)?)
}

/// Mean filter length used throughout the pursuit analysis.
pub const DEFAULT_MEAN_FILTER_LEN: usize = 50;

/// Order of the bandpass relative to the pursuit-specific detrend step.
/// Both orderings are defensible; `BandpassFirst` is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PursuitOrder {
    BandpassFirst,
    DetrendFirst,
}

/// Settings for the full pursuit conditioning chains.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct PursuitConditioning {
    pub filter: FilterSpec,
    pub mean_window: usize,
    pub order: PursuitOrder,
    pub zero_phase: bool,
}

impl Default for PursuitConditioning {
    fn default() -> Self {
        PursuitConditioning {
            filter: FilterSpec::study_default(),
            mean_window: DEFAULT_MEAN_FILTER_LEN,
            order: PursuitOrder::BandpassFirst,
            zero_phase: false,
        }
    }
}

impl PursuitConditioning {
    fn bandpass(&self, signal: &Signal) -> Result<Signal> {
        if self.zero_phase {
            bandpass_filter_zero_phase(signal, &self.filter)
        } else {
            bandpass_filter(signal, &self.filter)
        }
    }

    /// The linear part of the EOG chain: bandpass and detrend in the
    /// configured order, then the mean filter. Since every stage is linear,
    /// conditioning a montage differential equals differencing the
    /// per-channel results, which lets batch analyses precompute this once
    /// per channel.
    pub fn condition_eog_linear(&self, signal: &Signal) -> Result<Signal> {
        let x = match self.order {
            PursuitOrder::BandpassFirst => detrend(&self.bandpass(signal)?)?,
            PursuitOrder::DetrendFirst => self.bandpass(&detrend(signal)?)?,
        };
        mean_filter(&x, self.mean_window)
    }

    /// Full EOG-side chain: bandpass and detrend in the configured order,
    /// then mean filter and normalize.
    pub fn condition_eog(&self, signal: &Signal) -> Result<Signal> {
        normalize(&self.condition_eog_linear(signal)?)
    }

    /// Camera-side chain: fill gaps, resample to the EOG rate, bandpass,
    /// mean filter, normalize. Returns (horizontal, vertical).
    pub fn condition_camera(&self, log: &GazeLog, target_rate: f64) -> Result<(Signal, Signal)> {
        let (h, v) = fill_and_resample(log, target_rate)?;
        let run = |s: &Signal| -> Result<Signal> {
            normalize(&mean_filter(&self.bandpass(s)?, self.mean_window)?)
        };
        Ok((run(&h)?, run(&v)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::EOG_SAMPLE_RATE_HZ;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn sig(samples: Vec<f64>) -> Signal {
        Signal::new(samples, EOG_SAMPLE_RATE_HZ).unwrap()
    }

    #[test]
    fn detrend_removes_a_pure_line() {
        let out = detrend(&sig(vec![0.0, 1.0, 2.0, 3.0])).unwrap();
        for v in out.samples {
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn detrend_zeroes_a_constant() {
        let out = detrend(&sig(vec![5.0, 5.0, 5.0])).unwrap();
        assert_eq!(out.samples, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn detrend_matches_normal_equations_on_sine_plus_line() {
        let n = 300;
        let raw: Vec<f64> = (0..n)
            .map(|i| (i as f64 * 0.21).sin() + 0.03 * i as f64 - 2.0)
            .collect();

        // Oracle: explicit normal-equations fit of the same data.
        let nf = n as f64;
        let sum_t: f64 = (0..n).map(|i| i as f64).sum();
        let sum_tt: f64 = (0..n).map(|i| (i as f64).powi(2)).sum();
        let sum_x: f64 = raw.iter().sum();
        let sum_tx: f64 = raw.iter().enumerate().map(|(i, x)| i as f64 * x).sum();
        let det = nf * sum_tt - sum_t * sum_t;
        let slope = (nf * sum_tx - sum_t * sum_x) / det;
        let intercept = (sum_x * sum_tt - sum_t * sum_tx) / det;

        let out = detrend(&sig(raw.clone())).unwrap();
        for (i, &x) in raw.iter().enumerate() {
            let expect = x - intercept - slope * i as f64;
            assert_abs_diff_eq!(out.samples[i], expect, epsilon = 1e-9);
        }
    }

    #[test]
    fn mean_filter_window_one_is_identity() {
        let x = sig(vec![3.0, -1.0, 4.0, 1.5]);
        assert_eq!(mean_filter(&x, 1).unwrap().samples, x.samples);
    }

    #[test]
    fn mean_filter_keeps_constants() {
        let x = sig(vec![2.0; 20]);
        let out = mean_filter(&x, 7).unwrap();
        for v in out.samples {
            assert_abs_diff_eq!(v, 2.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn mean_filter_impulse_window_three() {
        // Hand-computed windowed sums with boundary shrink.
        let out = mean_filter(&sig(vec![0.0, 0.0, 1.0, 0.0, 0.0]), 3).unwrap();
        let expect = [0.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0];
        for (got, want) in out.samples.iter().zip(expect) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn mean_filter_preserves_mean_of_constant_padded_input() {
        let w = 9;
        let mut x = vec![1.5; 40];
        for (i, v) in x.iter_mut().enumerate().take(25).skip(12) {
            *v = 1.5 + ((i * 7) % 5) as f64;
        }
        let input = sig(x);
        let out = mean_filter(&input, w).unwrap();
        let mean_in: f64 = input.samples.iter().sum::<f64>() / input.len() as f64;
        let mean_out: f64 = out.samples.iter().sum::<f64>() / out.len() as f64;
        assert_abs_diff_eq!(mean_in, mean_out, epsilon = 1e-12);
    }

    #[test]
    fn normalize_symmetric_map() {
        let out = normalize(&sig(vec![0.0, 5.0, 10.0])).unwrap();
        assert_eq!(out.samples, vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn normalize_constant_is_zero() {
        let out = normalize(&sig(vec![7.0, 7.0, 7.0])).unwrap();
        assert_eq!(out.samples, vec![0.0, 0.0, 0.0]);
    }

    proptest! {
        #[test]
        fn normalize_hits_plus_minus_one(values in proptest::collection::vec(-1e4..1e4f64, 2..200)) {
            prop_assume!(values.iter().any(|&v| v != values[0]));
            let out = normalize(&sig(values)).unwrap();
            let min = out.samples.iter().copied().fold(f64::INFINITY, f64::min);
            let max = out.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!((min + 1.0).abs() < 1e-12);
            prop_assert!((max - 1.0).abs() < 1e-12);
        }

        #[test]
        fn normalize_is_idempotent(values in proptest::collection::vec(-1e4..1e4f64, 2..100)) {
            prop_assume!(values.iter().any(|&v| v != values[0]));
            let once = normalize(&sig(values)).unwrap();
            let twice = normalize(&once).unwrap();
            for (a, b) in once.samples.iter().zip(&twice.samples) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn conditioning_is_length_preserving(values in proptest::collection::vec(-100.0..100.0f64, 60..200)) {
            let x = sig(values);
            prop_assert_eq!(detrend(&x).unwrap().len(), x.len());
            prop_assert_eq!(mean_filter(&x, 50).unwrap().len(), x.len());
            prop_assert_eq!(normalize(&x).unwrap().len(), x.len());
        }
    }

    fn ramp_log(rate: f64, n: usize, gap_at: Option<usize>) -> GazeLog {
        let timestamps: Vec<f64> = (0..n).map(|i| i as f64 / rate).collect();
        let h: Vec<Option<f64>> = (0..n)
            .map(|i| {
                if Some(i) == gap_at {
                    None
                } else {
                    Some(0.5 * i as f64 / rate)
                }
            })
            .collect();
        let v = vec![Some(0.0); n];
        GazeLog::new(timestamps, h, v, rate).unwrap()
    }

    #[test]
    fn resampling_a_ramp_is_exact() {
        let log = ramp_log(60.0, 120, None);
        let (h, _) = fill_and_resample(&log, 125.0).unwrap();
        let span = log.timestamps[119] - log.timestamps[0];
        assert_eq!(h.len(), (span * 125.0).floor() as usize + 1);
        for (k, &v) in h.samples.iter().enumerate() {
            let t = k as f64 / 125.0;
            assert_abs_diff_eq!(v, 0.5 * t, epsilon = 1e-9);
        }
    }

    #[test]
    fn interior_gap_on_a_ramp_is_invisible() {
        let full = fill_and_resample(&ramp_log(60.0, 120, None), 125.0).unwrap().0;
        let gapped = fill_and_resample(&ramp_log(60.0, 120, Some(57)), 125.0)
            .unwrap()
            .0;
        for (a, b) in full.samples.iter().zip(&gapped.samples) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-9);
        }
    }

    #[test]
    fn sine_resampling_error_is_bounded() {
        // Linear interpolation of a 1 Hz unit sine sampled at 60 Hz: the
        // mid-gap error bound is (h^2 / 8) * max|f''| = w^2 / (8 * 60^2)
        // = 1.371e-3, and the 125 Hz grid never lands exactly mid-gap.
        let rate = 60.0;
        let n = 5 * 60 + 1;
        let timestamps: Vec<f64> = (0..n).map(|i| i as f64 / rate).collect();
        let h: Vec<Option<f64>> = timestamps
            .iter()
            .map(|&t| Some((2.0 * std::f64::consts::PI * t).sin()))
            .collect();
        let v = vec![Some(0.0); n];
        let log = GazeLog::new(timestamps, h, v, rate).unwrap();
        let (res, _) = fill_and_resample(&log, 125.0).unwrap();
        let max_err = res
            .samples
            .iter()
            .enumerate()
            .map(|(k, &x)| {
                let t = k as f64 / 125.0;
                (x - (2.0 * std::f64::consts::PI * t).sin()).abs()
            })
            .fold(0.0, f64::max);
        assert!(max_err < 1.38e-3, "max error {max_err}");
        assert!(max_err > 1e-5, "suspiciously exact: {max_err}");
    }

    #[test]
    fn too_few_valid_samples_error() {
        let log = GazeLog::new(
            vec![0.0, 0.1, 0.2],
            vec![Some(1.0), None, None],
            vec![Some(0.0), Some(0.0), Some(0.0)],
            60.0,
        )
        .unwrap();
        assert!(fill_and_resample(&log, 125.0).is_err());
    }

    #[test]
    fn preprocess_constant_is_zero() {
        let out = preprocess_eog(&sig(vec![42.0; 80])).unwrap();
        assert!(out.samples.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn preprocess_equals_manual_composition() {
        let raw: Vec<f64> = (0..400)
            .map(|i| (i as f64 * 0.05).sin() * 30.0 + 0.02 * i as f64 + ((i * 31) % 17) as f64)
            .collect();
        let x = sig(raw);
        let manual = normalize(&mean_filter(&detrend(&x).unwrap(), 50).unwrap()).unwrap();
        let composed = preprocess_eog(&x).unwrap();
        assert_eq!(manual.samples, composed.samples);
    }

    proptest! {
        #[test]
        fn preprocess_output_in_unit_range(values in proptest::collection::vec(-500.0..500.0f64, 60..300)) {
            let out = preprocess_eog(&sig(values)).unwrap();
            for v in out.samples {
                prop_assert!((-1.0..=1.0).contains(&v));
            }
        }
    }
}
