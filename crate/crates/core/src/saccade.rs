//! Saccade segmentation, average waveforms, voltage deflections, the
//! deflection-to-angle regressor with leave-one-subject-out evaluation, and
//! Bland-Altman agreement.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::dsp;
use crate::error::{Error, Result};
use crate::io::Signal;
use crate::stats;
use crate::synth::ProtocolEvent;
use crate::Direction;

/// Which way a deflection is signed. The source convention subtracts the
/// mean of the last ten samples from the mean of the first ten; the flipped
/// variant reads as "post minus pre" for physical intuition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeflectionSign {
    FirstMinusLast,
    LastMinusFirst,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SaccadeParams {
    /// Threshold on the smoothed gold-EOG derivative, µV per sample.
    pub velocity_threshold_uv_per_sample: f64,
    pub min_duration_s: f64,
    pub max_duration_s: f64,
    /// Half-width of the search window around each protocol jump, seconds.
    pub search_margin_s: f64,
    /// Margin added on both sides of a labeled saccade for the waveform
    /// window, so the saccade sits near the window center.
    pub window_margin_s: f64,
    /// Margin for deflection windows. Kept tight so the slow high-pass
    /// droop of neighboring saccades stays out of the first/last-ten-sample
    /// means.
    pub deflection_margin_s: f64,
    /// Minimum |level change| / pre-saccade SD.
    pub min_snr: f64,
    /// Mean-filter length applied to the derivative before thresholding.
    pub smooth_window: usize,
    /// Length every analysis window is resampled to for averaging.
    pub resample_len: usize,
    pub deflection_sign: DeflectionSign,
    /// Include return-to-center saccades in regression data.
    pub include_returns: bool,
}

impl Default for SaccadeParams {
    fn default() -> Self {
        SaccadeParams {
            velocity_threshold_uv_per_sample: 3.0,
            min_duration_s: 0.016,
            max_duration_s: 0.6,
            search_margin_s: 0.5,
            window_margin_s: 0.5,
            deflection_margin_s: 0.08,
            min_snr: 3.0,
            smooth_window: 5,
            resample_len: 250,
            deflection_sign: DeflectionSign::FirstMinusLast,
            include_returns: false,
        }
    }
}

/// A labeled saccade; invalid events carry their exclusion reason and are
/// data, not failures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaccadeEvent {
    pub subject_id: String,
    pub saccade_id: usize,
    pub direction: Direction,
    pub target_angle_deg: f64,
    pub outward: bool,
    pub start_idx: usize,
    pub end_idx: usize,
    pub valid: bool,
    pub invalid_reason: Option<String>,
}

impl SaccadeEvent {
    /// Signed gaze change of this saccade on its axis, degrees.
    pub fn angle_change_deg(&self) -> f64 {
        self.direction.sign() * self.target_angle_deg
    }
}

/// Locate saccade start/end inside each annotated protocol window by
/// thresholding the smoothed derivative of the gold-standard signal.
///
/// The caller passes the gold channel matching the events' axis. Events
/// failing the threshold, duration or SNR checks come back invalid with a
/// reason.
pub fn segment_saccades(
    gold: &Signal,
    events: &[ProtocolEvent],
    params: &SaccadeParams,
    subject_id: &str,
) -> Result<Vec<SaccadeEvent>> {
    if gold.len() < 2 {
        return Err(Error::SignalTooShort {
            need: 2,
            got: gold.len(),
        });
    }
    let fs = gold.sample_rate;
    let deriv_raw = Signal::new(
        gold.samples.windows(2).map(|w| w[1] - w[0]).collect(),
        fs,
    )?;
    let deriv = dsp::mean_filter(&deriv_raw, params.smooth_window.max(1))?;
    let margin = (params.search_margin_s * fs).round() as usize;
    let thr = params.velocity_threshold_uv_per_sample;

    let mut out = Vec::with_capacity(events.len());
    for ev in events {
        let lo = ev.jump_idx.saturating_sub(margin);
        let hi = (ev.jump_idx + margin).min(deriv.len());
        let base = SaccadeEvent {
            subject_id: subject_id.to_string(),
            saccade_id: ev.saccade_id,
            direction: ev.direction,
            target_angle_deg: ev.target_angle_deg,
            outward: ev.outward,
            start_idx: ev.jump_idx,
            end_idx: ev.jump_idx + 1,
            valid: false,
            invalid_reason: None,
        };
        if hi <= lo {
            out.push(SaccadeEvent {
                invalid_reason: Some("protocol window outside the signal".into()),
                ..base
            });
            continue;
        }
        let window = &deriv.samples[lo..hi];
        let (peak_off, peak_val) = window
            .iter()
            .enumerate()
            .map(|(i, v)| (i, v.abs()))
            .max_by(|a, b| a.1.partial_cmp(&b.1).expect("finite derivative"))
            .expect("window non-empty");
        if peak_val < thr {
            out.push(SaccadeEvent {
                invalid_reason: Some("no threshold crossing".into()),
                ..base
            });
            continue;
        }
        let peak = lo + peak_off;
        let mut start = peak;
        while start > lo && deriv.samples[start - 1].abs() >= thr {
            start -= 1;
        }
        let mut end = peak + 1;
        while end < hi && deriv.samples[end].abs() >= thr {
            end += 1;
        }
        // Derivative index i covers the transition between samples i and
        // i+1; the saccade spans samples [start, end + 1).
        let (start_idx, end_idx) = (start, end + 1);

        let duration = (end_idx - start_idx) as f64 / fs;
        if duration < params.min_duration_s {
            out.push(SaccadeEvent {
                start_idx,
                end_idx,
                invalid_reason: Some(format!("too short: {duration:.3} s")),
                ..base
            });
            continue;
        }
        if duration > params.max_duration_s {
            out.push(SaccadeEvent {
                start_idx,
                end_idx,
                invalid_reason: Some(format!("too long: {duration:.3} s")),
                ..base
            });
            continue;
        }

        // SNR: level change across the saccade against the pre-saccade
        // noise floor. The pre window is detrended first so the slow
        // high-pass droop left by the previous saccade does not count as
        // noise.
        let snr_win = margin.min(25);
        let pre_lo = start_idx.saturating_sub(snr_win);
        let pre = &gold.samples[pre_lo..start_idx];
        let post_hi = (end_idx + snr_win).min(gold.len());
        let post = &gold.samples[end_idx..post_hi];
        if pre.len() >= 5 && post.len() >= 5 {
            let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
            let change = (mean(post) - mean(pre)).abs();
            let snr = change / detrended_sd(pre).max(1e-9);
            if snr < params.min_snr {
                out.push(SaccadeEvent {
                    start_idx,
                    end_idx,
                    invalid_reason: Some(format!("low snr: {snr:.2}")),
                    ..base
                });
                continue;
            }
        }

        out.push(SaccadeEvent {
            start_idx,
            end_idx,
            valid: true,
            invalid_reason: None,
            ..base
        });
    }
    Ok(out)
}

/// Residual SD after removing the least-squares line.
fn detrended_sd(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let t_mean = (n - 1.0) / 2.0;
    let x_mean = samples.iter().sum::<f64>() / n;
    let (mut num, mut den) = (0.0, 0.0);
    for (i, &x) in samples.iter().enumerate() {
        let dt = i as f64 - t_mean;
        num += dt * (x - x_mean);
        den += dt * dt;
    }
    let slope = if den > 0.0 { num / den } else { 0.0 };
    let ss: f64 = samples
        .iter()
        .enumerate()
        .map(|(i, &x)| (x - x_mean - slope * (i as f64 - t_mean)).powi(2))
        .sum();
    (ss / n).sqrt()
}

/// Analysis window around a labeled saccade: `[start - margin, end + margin)`
/// clamped, so the saccade sits approximately at the center.
pub fn analysis_window(event: &SaccadeEvent, margin: usize, signal_len: usize) -> (usize, usize) {
    let lo = event.start_idx.saturating_sub(margin);
    let hi = (event.end_idx + margin).min(signal_len);
    (lo, hi)
}

/// Slice the wide (waveform) analysis window out of a signal.
pub fn event_window<'a>(
    signal: &'a Signal,
    event: &SaccadeEvent,
    params: &SaccadeParams,
) -> &'a [f64] {
    let margin = (params.window_margin_s * signal.sample_rate).round() as usize;
    let (lo, hi) = analysis_window(event, margin, signal.len());
    &signal.samples[lo..hi]
}

/// Slice the tight deflection window out of a signal. The margin is at
/// least ten samples so the first/last-ten means exist.
pub fn deflection_window<'a>(
    signal: &'a Signal,
    event: &SaccadeEvent,
    params: &SaccadeParams,
) -> &'a [f64] {
    let margin = ((params.deflection_margin_s * signal.sample_rate).round() as usize).max(10);
    let (lo, hi) = analysis_window(event, margin, signal.len());
    &signal.samples[lo..hi]
}

/// Scalar voltage deflection of a saccade window: mean of the first ten
/// samples minus mean of the last ten.
pub fn voltage_deflection(window: &[f64]) -> Result<f64> {
    if window.len() < 20 {
        return Err(Error::SignalTooShort {
            need: 20,
            got: window.len(),
        });
    }
    let first: f64 = window[..10].iter().sum::<f64>() / 10.0;
    let last: f64 = window[window.len() - 10..].iter().sum::<f64>() / 10.0;
    Ok(first - last)
}

/// Mean waveform of one (direction, angle) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformCell {
    pub direction: Direction,
    pub angle_deg: f64,
    pub n: usize,
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

/// Baseline-shifted, resampled analysis windows of the valid events, keyed
/// by (direction, angle). Windows from several recordings can be pooled
/// before averaging.
pub fn baselined_windows(
    events: &[SaccadeEvent],
    signal: &Signal,
    params: &SaccadeParams,
) -> Vec<(Direction, f64, Vec<f64>)> {
    let margin = (params.window_margin_s * signal.sample_rate).round() as usize;
    let mut out = Vec::new();
    for ev in events.iter().filter(|e| e.valid) {
        let (lo, hi) = analysis_window(ev, margin, signal.len());
        if hi - lo < 2 {
            continue;
        }
        let window = &signal.samples[lo..hi];
        // Baseline: mean of the pre-saccade part of the window.
        let pre_len = (ev.start_idx - lo).max(1).min(window.len());
        let baseline = window[..pre_len].iter().sum::<f64>() / pre_len as f64;
        let resampled = resample_linear(window, params.resample_len)
            .into_iter()
            .map(|v| v - baseline)
            .collect::<Vec<f64>>();
        out.push((ev.direction, ev.target_angle_deg, resampled));
    }
    out
}

/// Pointwise mean and SD of pooled windows per (direction, angle) cell.
pub fn average_windows(
    windows: &[(Direction, f64, Vec<f64>)],
    resample_len: usize,
) -> Vec<WaveformCell> {
    let mut cells: BTreeMap<(Direction, i64), Vec<&Vec<f64>>> = BTreeMap::new();
    for (direction, angle, w) in windows {
        cells
            .entry((*direction, centi_deg(*angle)))
            .or_default()
            .push(w);
    }
    let mut out = Vec::with_capacity(cells.len());
    for ((direction, angle_key), group) in cells {
        let n = group.len();
        let mut mean = vec![0.0; resample_len];
        for w in &group {
            for (m, v) in mean.iter_mut().zip(w.iter()) {
                *m += v;
            }
        }
        for m in mean.iter_mut() {
            *m /= n as f64;
        }
        let mut sd = vec![0.0; resample_len];
        if n > 1 {
            for w in &group {
                for (s, (m, v)) in sd.iter_mut().zip(mean.iter().zip(w.iter())) {
                    *s += (v - m).powi(2);
                }
            }
            for s in sd.iter_mut() {
                *s = (*s / n as f64).sqrt();
            }
        }
        out.push(WaveformCell {
            direction,
            angle_deg: angle_key as f64 / 100.0,
            n,
            mean,
            sd,
        });
    }
    out
}

/// Per (direction, angle): baseline-shifted event windows resampled to a
/// common length, averaged pointwise with their SD. Cells without valid
/// events are simply absent.
pub fn average_saccade_waveform(
    events: &[SaccadeEvent],
    signal: &Signal,
    params: &SaccadeParams,
) -> Result<Vec<WaveformCell>> {
    let windows = baselined_windows(events, signal, params);
    Ok(average_windows(&windows, params.resample_len))
}

fn centi_deg(angle: f64) -> i64 {
    (angle * 100.0).round() as i64
}

fn resample_linear(window: &[f64], target_len: usize) -> Vec<f64> {
    if target_len == 0 || window.is_empty() {
        return Vec::new();
    }
    if window.len() == 1 || target_len == 1 {
        return vec![window[0]; target_len];
    }
    let scale = (window.len() - 1) as f64 / (target_len - 1) as f64;
    (0..target_len)
        .map(|i| {
            let x = i as f64 * scale;
            let lo = x.floor() as usize;
            let hi = (lo + 1).min(window.len() - 1);
            let frac = x - lo as f64;
            window[lo] * (1.0 - frac) + window[hi] * frac
        })
        .collect()
}

/// One saccade's contribution to the regression set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeflectionSample {
    pub subject_id: String,
    pub direction: Direction,
    /// Nominal fixation offset, degrees (table cell).
    pub target_angle_deg: f64,
    /// Signed gaze change from ground truth, degrees.
    pub true_angle_change_deg: f64,
    pub deflection_uv: f64,
}

/// Extract deflection samples for the valid events of one recording's
/// montage (or gold) signal.
pub fn deflection_samples(
    events: &[SaccadeEvent],
    signal: &Signal,
    params: &SaccadeParams,
) -> Result<Vec<DeflectionSample>> {
    let mut out = Vec::new();
    for ev in events.iter().filter(|e| e.valid) {
        if !ev.outward && !params.include_returns {
            continue;
        }
        let window = deflection_window(signal, ev, params);
        let raw = voltage_deflection(window)?;
        let deflection = match params.deflection_sign {
            DeflectionSign::FirstMinusLast => raw,
            DeflectionSign::LastMinusFirst => -raw,
        };
        out.push(DeflectionSample {
            subject_id: ev.subject_id.clone(),
            direction: ev.direction,
            target_angle_deg: ev.target_angle_deg,
            true_angle_change_deg: ev.angle_change_deg(),
            deflection_uv: deflection,
        });
    }
    Ok(out)
}

/// Mean deflection per angle for one direction, sorted by angle.
pub fn mean_deflection_per_angle(
    samples: &[DeflectionSample],
    direction: Direction,
) -> Vec<(f64, f64)> {
    let mut groups: BTreeMap<i64, Vec<f64>> = BTreeMap::new();
    for s in samples.iter().filter(|s| s.direction == direction) {
        groups
            .entry(centi_deg(s.target_angle_deg))
            .or_default()
            .push(s.deflection_uv);
    }
    groups
        .into_iter()
        .map(|(angle_key, ds)| {
            (
                angle_key as f64 / 100.0,
                ds.iter().sum::<f64>() / ds.len() as f64,
            )
        })
        .collect()
}

/// Pearson correlation between per-angle mean deflection and the angle for
/// one direction.
pub fn deflection_linearity(
    samples: &[DeflectionSample],
    direction: Direction,
) -> Result<stats::CorrelationResult> {
    let per_angle = mean_deflection_per_angle(samples, direction);
    if per_angle.len() < 3 {
        return Err(Error::Degenerate {
            detail: format!(
                "need >= 3 angles with samples for direction {direction}, got {}",
                per_angle.len()
            ),
        });
    }
    let angles: Vec<f64> = per_angle.iter().map(|(a, _)| *a).collect();
    let deflections: Vec<f64> = per_angle.iter().map(|(_, d)| *d).collect();
    let r = stats::pearson(&deflections, &angles)?;
    Ok(stats::CorrelationResult {
        r,
        lag: 0,
        p_value: stats::pearson_p_value(r, angles.len()),
    })
}

/// Pearson correlation between two signal sources' per-angle mean
/// deflections in one direction (ear montage vs gold standard).
pub fn deflection_agreement(
    samples_a: &[DeflectionSample],
    samples_b: &[DeflectionSample],
    direction: Direction,
) -> Result<stats::CorrelationResult> {
    let a = mean_deflection_per_angle(samples_a, direction);
    let b = mean_deflection_per_angle(samples_b, direction);
    if a.len() != b.len() || a.iter().zip(&b).any(|(x, y)| x.0 != y.0) {
        return Err(Error::Degenerate {
            detail: "deflection sources cover different angle sets".into(),
        });
    }
    if a.len() < 3 {
        return Err(Error::Degenerate {
            detail: "need >= 3 angles for agreement".into(),
        });
    }
    let da: Vec<f64> = a.iter().map(|(_, d)| *d).collect();
    let db: Vec<f64> = b.iter().map(|(_, d)| *d).collect();
    let r = stats::pearson(&da, &db)?;
    Ok(stats::CorrelationResult {
        r,
        lag: 0,
        p_value: stats::pearson_p_value(r, da.len()),
    })
}

/// Linear deflection-to-angle model: `angle = slope * deflection +
/// intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    /// deg/µV
    pub slope: f64,
    /// deg
    pub intercept: f64,
}

impl RegressionModel {
    pub fn predict(&self, deflection_uv: f64) -> f64 {
        self.slope * deflection_uv + self.intercept
    }
}

/// Least-squares fit of signed angle change on deflection.
pub fn fit_angle_regressor(samples: &[DeflectionSample]) -> Result<RegressionModel> {
    if samples.len() < 2 {
        return Err(Error::Degenerate {
            detail: format!("regression needs >= 2 samples, got {}", samples.len()),
        });
    }
    let n = samples.len() as f64;
    let mx = samples.iter().map(|s| s.deflection_uv).sum::<f64>() / n;
    let my = samples.iter().map(|s| s.true_angle_change_deg).sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for s in samples {
        let dx = s.deflection_uv - mx;
        sxx += dx * dx;
        sxy += dx * (s.true_angle_change_deg - my);
    }
    if sxx == 0.0 {
        return Err(Error::Degenerate {
            detail: "rank-deficient regression: all deflections identical".into(),
        });
    }
    let slope = sxy / sxx;
    Ok(RegressionModel {
        slope,
        intercept: my - slope * mx,
    })
}

/// Leave-one-subject-out predictions, in input order.
pub fn loso_predictions(samples: &[DeflectionSample]) -> Result<Vec<f64>> {
    let mut subjects: Vec<&str> = samples.iter().map(|s| s.subject_id.as_str()).collect();
    subjects.sort_unstable();
    subjects.dedup();
    if subjects.len() < 2 {
        return Err(Error::Degenerate {
            detail: "leave-one-subject-out needs >= 2 subjects".into(),
        });
    }
    let mut preds = vec![0.0; samples.len()];
    for subject in subjects {
        let train: Vec<DeflectionSample> = samples
            .iter()
            .filter(|s| s.subject_id != subject)
            .cloned()
            .collect();
        let model = fit_angle_regressor(&train)?;
        for (i, s) in samples.iter().enumerate() {
            if s.subject_id == subject {
                preds[i] = model.predict(s.deflection_uv);
            }
        }
    }
    Ok(preds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaeCell {
    pub direction: Direction,
    pub angle_deg: f64,
    pub mae_deg: f64,
    pub sd_deg: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaeTotal {
    pub mae_deg: f64,
    pub sd_deg: f64,
    pub n: usize,
}

/// Mean absolute error table: one row per (direction, angle), totals per
/// direction, and a grand total.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaeTable {
    pub rows: Vec<MaeCell>,
    pub direction_totals: BTreeMap<Direction, MaeTotal>,
    pub total: MaeTotal,
}

fn mae_of(errors: &[f64]) -> MaeTotal {
    let n = errors.len();
    let mean = errors.iter().sum::<f64>() / n as f64;
    let sd = (errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    MaeTotal {
        mae_deg: mean,
        sd_deg: sd,
        n,
    }
}

/// Leave-one-subject-out evaluation of the angle regressor.
pub fn loso_evaluate(samples: &[DeflectionSample]) -> Result<MaeTable> {
    let preds = loso_predictions(samples)?;
    let errors: Vec<f64> = preds
        .iter()
        .zip(samples)
        .map(|(p, s)| (p - s.true_angle_change_deg).abs())
        .collect();

    let mut cells: BTreeMap<(Direction, i64), Vec<f64>> = BTreeMap::new();
    let mut directions: BTreeMap<Direction, Vec<f64>> = BTreeMap::new();
    for (err, s) in errors.iter().zip(samples) {
        cells
            .entry((s.direction, centi_deg(s.target_angle_deg)))
            .or_default()
            .push(*err);
        directions.entry(s.direction).or_default().push(*err);
    }
    let rows = cells
        .into_iter()
        .map(|((direction, angle_key), errs)| {
            let t = mae_of(&errs);
            MaeCell {
                direction,
                angle_deg: angle_key as f64 / 100.0,
                mae_deg: t.mae_deg,
                sd_deg: t.sd_deg,
                n: t.n,
            }
        })
        .collect();
    let direction_totals = directions
        .into_iter()
        .map(|(d, errs)| (d, mae_of(&errs)))
        .collect();
    Ok(MaeTable {
        rows,
        direction_totals,
        total: mae_of(&errors),
    })
}

/// Table-style rendering of an MAE cell.
pub fn format_mae_cell(mae_deg: f64, sd_deg: f64) -> String {
    format!("{mae_deg:.2}° ± {sd_deg:.2}°")
}

/// Figure-style rendering of a deflection value.
pub fn format_deflection_uv(deflection: f64) -> String {
    format!("{deflection:.2} µV")
}

/// Agreement between two paired prediction sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlandAltmanSummary {
    pub mean_difference: f64,
    pub sd_difference: f64,
    pub loa_low: f64,
    pub loa_high: f64,
    /// Per-pair (mean, difference) points.
    pub points: Vec<(f64, f64)>,
}

/// Bland-Altman analysis of two paired measurement sets: differences a-b
/// against means, with limits of agreement at mean ± 1.96 SD.
pub fn bland_altman(pred_a: &[f64], pred_b: &[f64]) -> Result<BlandAltmanSummary> {
    if pred_a.len() != pred_b.len() {
        return Err(Error::invalid_parameter(
            "predictions",
            format!("lengths differ: {} vs {}", pred_a.len(), pred_b.len()),
        ));
    }
    if pred_a.len() < 2 {
        return Err(Error::SignalTooShort {
            need: 2,
            got: pred_a.len(),
        });
    }
    let points: Vec<(f64, f64)> = pred_a
        .iter()
        .zip(pred_b)
        .map(|(&a, &b)| ((a + b) / 2.0, a - b))
        .collect();
    let n = points.len() as f64;
    let mean_difference = points.iter().map(|(_, d)| d).sum::<f64>() / n;
    let sd_difference = (points
        .iter()
        .map(|(_, d)| (d - mean_difference).powi(2))
        .sum::<f64>()
        / (n - 1.0))
        .sqrt();
    Ok(BlandAltmanSummary {
        mean_difference,
        sd_difference,
        loa_low: mean_difference - 1.96 * sd_difference,
        loa_high: mean_difference + 1.96 * sd_difference,
        points,
    })
}

/// Two-sided normal tail helper used by agreement diagnostics in reports.
pub fn normal_two_sided_p(z: f64) -> f64 {
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    (2.0 * normal.cdf(-z.abs())).clamp(0.0, 1.0)
}
