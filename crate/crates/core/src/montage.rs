//! Electrode montage enumeration, ranking against gold-standard EOG and
//! eye-tracker ground truth, and montage significance testing.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dsp::PursuitConditioning;
use crate::error::{Error, Result};
use crate::io::{ElectrodeLayout, GazeLog, Recording, Signal};
use crate::stats;
use crate::{Axis, EOG_SAMPLE_RATE_HZ, GOLD_HORIZONTAL_LABEL, GOLD_VERTICAL_LABEL};

/// A bipolar electrode pair, classified by the axis its connecting vector
/// aligns with.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Montage {
    pub a: String,
    pub b: String,
    pub axis_class: Axis,
}

impl Montage {
    pub fn name(&self) -> String {
        format!("{}-{}", self.a, self.b)
    }
}

impl std::fmt::Display for Montage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{}", self.a, self.b)
    }
}

/// Default alignment tolerance in degrees. On the default ring this
/// reproduces an axis partition whose families match the montages the
/// analyses name (L1-L4 horizontal, L2-L7 vertical, and every Lk-Rk pair
/// horizontal).
pub const DEFAULT_AXIS_TOLERANCE_DEG: f64 = 15.0;

/// All unordered electrode pairs whose connecting vector lies within
/// `tolerance_deg` of the requested axis. Horizontal means within tolerance
/// of the horizontal plane; vertical means within tolerance of the vertical
/// axis; diagonal pairs fall in neither list.
pub fn classify_montages(
    layout: &ElectrodeLayout,
    axis: Axis,
    tolerance_deg: f64,
) -> Vec<Montage> {
    let labels: Vec<&str> = layout.labels().collect();
    let mut montages = Vec::new();
    for i in 0..labels.len() {
        for j in (i + 1)..labels.len() {
            let pa = layout.position(labels[i]).expect("label exists");
            let pb = layout.position(labels[j]).expect("label exists");
            let d = [pb[0] - pa[0], pb[1] - pa[1], pb[2] - pa[2]];
            let planar = (d[0] * d[0] + d[1] * d[1]).sqrt();
            let elevation_deg = d[2].abs().atan2(planar).to_degrees();
            let matches = match axis {
                Axis::Horizontal => elevation_deg <= tolerance_deg,
                Axis::Vertical => elevation_deg >= 90.0 - tolerance_deg,
            };
            if matches {
                montages.push(Montage {
                    a: labels[i].to_string(),
                    b: labels[j].to_string(),
                    axis_class: axis,
                });
            }
        }
    }
    montages
}

/// Sample-wise bipolar difference `channel_a - channel_b`.
pub fn differential_signal(rec: &Recording, montage: &Montage) -> Result<Signal> {
    let a = rec.channel(&montage.a)?;
    let b = rec.channel(&montage.b)?;
    Signal::new(
        a.iter().zip(b).map(|(x, y)| x - y).collect(),
        rec.sample_rate,
    )
}

/// One smooth-pursuit trial: a recording, the matching eye-tracker log, and
/// the axis the target moved on.
#[derive(Debug, Clone)]
pub struct PursuitTrial {
    pub recording: Recording,
    pub gaze: GazeLog,
    pub axis: Axis,
}

/// How per-trial correlations are aggregated into a montage score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Fisher mean per subject first, then a grand Fisher mean (default).
    WithinSubject,
    /// One Fisher mean over all trials pooled.
    Pooled,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankParams {
    pub conditioning: PursuitConditioning,
    /// Lag window against gold-standard EOG, samples.
    pub max_lag_eog: usize,
    /// Lag window against the eye tracker, samples.
    pub max_lag_cam: usize,
    pub aggregation: Aggregation,
}

impl Default for RankParams {
    fn default() -> Self {
        RankParams {
            conditioning: PursuitConditioning::default(),
            max_lag_eog: 12,
            max_lag_cam: 64,
            aggregation: Aggregation::WithinSubject,
        }
    }
}

/// Per-montage entry of a [`CorrelationReport`].
///
/// Montage polarity is arbitrary (swapping the pair flips every r), so the
/// ranking scores aggregate magnitudes: `mean_r_*` is the Fisher mean of the
/// per-subject |Fisher means|. The signed per-subject values are kept for
/// inspection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MontageEntry {
    pub montage: Montage,
    pub mean_r_eog: f64,
    pub mean_r_cam: f64,
    pub sd_r_eog: f64,
    pub sd_r_cam: f64,
    pub per_subject_r_eog: BTreeMap<String, f64>,
    pub per_subject_r_cam: BTreeMap<String, f64>,
    pub n_trials: usize,
    pub n_excluded: usize,
}

/// Friedman gate plus the optional Bonferroni-corrected Wilcoxon matrix for
/// one ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceBlock {
    pub friedman_statistic: f64,
    pub friedman_p: f64,
    pub n_subjects: usize,
    /// Present only when the Friedman gate opened (p < alpha).
    pub posthoc: Option<PosthocMatrix>,
    pub posthoc_skipped_reason: Option<String>,
}

/// Symmetric matrix of corrected pairwise p-values; the diagonal is absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosthocMatrix {
    pub labels: Vec<String>,
    pub p_corrected: Vec<Vec<Option<f64>>>,
}

/// Montage ranking with optional significance blocks per ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub axis: Axis,
    /// Sorted by `mean_r_eog` descending.
    pub montages: Vec<MontageEntry>,
    pub eog: Option<SignificanceBlock>,
    pub cam: Option<SignificanceBlock>,
}

impl CorrelationReport {
    pub fn empty(axis: Axis) -> CorrelationReport {
        CorrelationReport {
            axis,
            montages: Vec::new(),
            eog: None,
            cam: None,
        }
    }
}

/// Gold-standard channel label for an axis.
pub fn gold_label(axis: Axis) -> &'static str {
    match axis {
        Axis::Horizontal => GOLD_HORIZONTAL_LABEL,
        Axis::Vertical => GOLD_VERTICAL_LABEL,
    }
}

/// Figure-style rendering of a correlation value.
pub fn format_correlation(r: f64) -> String {
    format!("r = {r:.2}")
}

struct PreparedTrial {
    subject: String,
    gold: Signal,
    cam: Signal,
    /// Per-channel linear conditioning (everything before normalize);
    /// montage differentials become a single subtraction.
    channels: BTreeMap<String, Vec<f64>>,
    sample_rate: f64,
}

/// Correlate every montage's conditioned differential against conditioned
/// gold EOG (lag window `max_lag_eog`) and the filled/resampled eye-tracker
/// axis (lag window `max_lag_cam`) on every trial of the requested axis,
/// then aggregate with Fisher means.
///
/// Trials whose correlation is undefined (flatlined signal) are excluded
/// and tallied per montage. The six-second trial windows are used whole; no
/// onset trimming.
pub fn rank_montages(
    trials: &[PursuitTrial],
    montages: &[Montage],
    axis: Axis,
    params: &RankParams,
) -> Result<CorrelationReport> {
    let axis_trials: Vec<&PursuitTrial> = trials.iter().filter(|t| t.axis == axis).collect();
    if axis_trials.is_empty() {
        return Err(Error::Degenerate {
            detail: format!("no {axis} pursuit trials supplied"),
        });
    }
    if montages.is_empty() {
        return Err(Error::Degenerate {
            detail: "no montages to rank".into(),
        });
    }

    // Labels every montage touches; their linear conditioning is computed
    // once per trial.
    let mut needed: BTreeSet<&str> = BTreeSet::new();
    for m in montages {
        needed.insert(m.a.as_str());
        needed.insert(m.b.as_str());
    }

    let prepared: Vec<PreparedTrial> = axis_trials
        .par_iter()
        .map(|trial| -> Result<PreparedTrial> {
            let cond = &params.conditioning;
            let gold_linear = cond.condition_eog_linear(&trial.recording.channel_signal(gold_label(axis))?)?;
            let gold = crate::dsp::normalize(&gold_linear)?;
            let (cam_h, cam_v) = cond.condition_camera(&trial.gaze, EOG_SAMPLE_RATE_HZ)?;
            let cam = match axis {
                Axis::Horizontal => cam_h,
                Axis::Vertical => cam_v,
            };
            let mut channels = BTreeMap::new();
            for label in &needed {
                let filtered = cond.condition_eog_linear(&trial.recording.channel_signal(label)?)?;
                channels.insert(label.to_string(), filtered.samples);
            }
            Ok(PreparedTrial {
                subject: trial.recording.subject_id.clone(),
                gold,
                cam,
                channels,
                sample_rate: trial.recording.sample_rate,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    // (montage, trial) correlation grid; embarrassingly parallel.
    let grid: Vec<Result<Vec<Option<(f64, f64)>>>> = montages
        .par_iter()
        .map(|montage| {
            prepared
                .iter()
                .map(|prep| -> Result<Option<(f64, f64)>> {
                    let a = &prep.channels[&montage.a];
                    let b = &prep.channels[&montage.b];
                    let diff_linear = Signal::new(
                        a.iter().zip(b).map(|(x, y)| x - y).collect(),
                        prep.sample_rate,
                    )?;
                    let diff = match crate::dsp::normalize(&diff_linear) {
                        Ok(d) => d,
                        Err(Error::UndefinedCorrelation { .. }) => return Ok(None),
                        Err(e) => return Err(e),
                    };
                    let r_eog = match stats::max_lagged_correlation(
                        &diff.samples,
                        &prep.gold.samples,
                        params.max_lag_eog,
                    ) {
                        Ok(res) => res.r,
                        Err(Error::UndefinedCorrelation { .. }) => return Ok(None),
                        Err(e) => return Err(e),
                    };
                    let r_cam = match stats::max_lagged_correlation(
                        &diff.samples,
                        &prep.cam.samples,
                        params.max_lag_cam,
                    ) {
                        Ok(res) => res.r,
                        Err(Error::UndefinedCorrelation { .. }) => return Ok(None),
                        Err(e) => return Err(e),
                    };
                    Ok(Some((r_eog, r_cam)))
                })
                .collect()
        })
        .collect();

    let mut entries = Vec::with_capacity(montages.len());
    for (montage, row) in montages.iter().zip(grid) {
        let row = row?;
        let mut by_subject: BTreeMap<String, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
        let mut pooled_eog = Vec::new();
        let mut pooled_cam = Vec::new();
        let mut n_excluded = 0usize;
        for (prep, cell) in prepared.iter().zip(row) {
            match cell {
                Some((r_eog, r_cam)) => {
                    let slot = by_subject.entry(prep.subject.clone()).or_default();
                    slot.0.push(r_eog);
                    slot.1.push(r_cam);
                    pooled_eog.push(r_eog);
                    pooled_cam.push(r_cam);
                }
                None => n_excluded += 1,
            }
        }
        if pooled_eog.is_empty() {
            entries.push(MontageEntry {
                montage: montage.clone(),
                mean_r_eog: 0.0,
                mean_r_cam: 0.0,
                sd_r_eog: 0.0,
                sd_r_cam: 0.0,
                per_subject_r_eog: BTreeMap::new(),
                per_subject_r_cam: BTreeMap::new(),
                n_trials: 0,
                n_excluded,
            });
            continue;
        }

        let mut per_subject_r_eog = BTreeMap::new();
        let mut per_subject_r_cam = BTreeMap::new();
        for (subject, (rs_eog, rs_cam)) in &by_subject {
            per_subject_r_eog.insert(subject.clone(), stats::fisher_mean(rs_eog)?);
            per_subject_r_cam.insert(subject.clone(), stats::fisher_mean(rs_cam)?);
        }
        let magnitudes =
            |m: &BTreeMap<String, f64>| -> Vec<f64> { m.values().map(|r| r.abs()).collect() };
        let (mean_r_eog, mean_r_cam, sd_base_eog, sd_base_cam) = match params.aggregation {
            Aggregation::WithinSubject => {
                let abs_eog = magnitudes(&per_subject_r_eog);
                let abs_cam = magnitudes(&per_subject_r_cam);
                (
                    stats::fisher_mean(&abs_eog)?,
                    stats::fisher_mean(&abs_cam)?,
                    abs_eog,
                    abs_cam,
                )
            }
            Aggregation::Pooled => (
                stats::fisher_mean(&pooled_eog)?.abs(),
                stats::fisher_mean(&pooled_cam)?.abs(),
                pooled_eog.iter().map(|r| r.abs()).collect(),
                pooled_cam.iter().map(|r| r.abs()).collect(),
            ),
        };
        entries.push(MontageEntry {
            montage: montage.clone(),
            mean_r_eog,
            mean_r_cam,
            sd_r_eog: std_dev(&sd_base_eog),
            sd_r_cam: std_dev(&sd_base_cam),
            per_subject_r_eog,
            per_subject_r_cam,
            n_trials: pooled_eog.len(),
            n_excluded,
        });
    }

    entries.sort_by(|a, b| {
        b.mean_r_eog
            .partial_cmp(&a.mean_r_eog)
            .expect("finite scores")
            .then_with(|| a.montage.name().cmp(&b.montage.name()))
    });
    Ok(CorrelationReport {
        axis,
        montages: entries,
        eog: None,
        cam: None,
    })
}

fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Augment a report with Friedman gates and, where the gate opens at
/// `alpha`, the Bonferroni-corrected pairwise Wilcoxon matrices.
///
/// Subjects must be present for every montage; the test matrices use the
/// magnitude of each subject's Fisher-mean correlation.
pub fn montage_significance(report: &CorrelationReport, alpha: f64) -> Result<CorrelationReport> {
    if report.montages.len() < 2 {
        return Err(Error::Degenerate {
            detail: "significance testing needs >= 2 montages".into(),
        });
    }
    let mut subjects: BTreeSet<String> = report.montages[0]
        .per_subject_r_eog
        .keys()
        .cloned()
        .collect();
    for entry in &report.montages[1..] {
        subjects = subjects
            .intersection(&entry.per_subject_r_eog.keys().cloned().collect())
            .cloned()
            .collect();
    }
    if subjects.len() < 5 {
        return Err(Error::Degenerate {
            detail: format!(
                "significance testing needs >= 5 subjects with complete data, got {}",
                subjects.len()
            ),
        });
    }
    let subjects: Vec<String> = subjects.into_iter().collect();

    let mut augmented = report.clone();
    for (ground_truth, slot) in [("eog", &mut augmented.eog), ("cam", &mut augmented.cam)] {
        let matrix: Vec<Vec<f64>> = subjects
            .iter()
            .map(|s| {
                report
                    .montages
                    .iter()
                    .map(|entry| {
                        let map = if ground_truth == "eog" {
                            &entry.per_subject_r_eog
                        } else {
                            &entry.per_subject_r_cam
                        };
                        map[s].abs()
                    })
                    .collect()
            })
            .collect();
        let (statistic, p) = stats::friedman(&matrix)?;
        let block = if p < alpha {
            let k = report.montages.len();
            let mut pairs = Vec::new();
            for i in 0..k {
                for j in (i + 1)..k {
                    let col_i: Vec<f64> = matrix.iter().map(|row| row[i]).collect();
                    let col_j: Vec<f64> = matrix.iter().map(|row| row[j]).collect();
                    let p_pair = match stats::wilcoxon_signed_rank(&col_i, &col_j) {
                        Ok(p) => p,
                        // Identical columns: no detectable difference.
                        Err(Error::Degenerate { .. }) => 1.0,
                        Err(e) => return Err(e),
                    };
                    pairs.push(p_pair);
                }
            }
            let corrected = stats::bonferroni(&pairs)?;
            let mut p_matrix = vec![vec![None; k]; k];
            let mut idx = 0;
            for i in 0..k {
                for j in (i + 1)..k {
                    p_matrix[i][j] = Some(corrected[idx]);
                    p_matrix[j][i] = Some(corrected[idx]);
                    idx += 1;
                }
            }
            SignificanceBlock {
                friedman_statistic: statistic,
                friedman_p: p,
                n_subjects: subjects.len(),
                posthoc: Some(PosthocMatrix {
                    labels: report.montages.iter().map(|e| e.montage.name()).collect(),
                    p_corrected: p_matrix,
                }),
                posthoc_skipped_reason: None,
            }
        } else {
            SignificanceBlock {
                friedman_statistic: statistic,
                friedman_p: p,
                n_subjects: subjects.len(),
                posthoc: None,
                posthoc_skipped_reason: Some(format!(
                    "friedman p = {p:.4} >= alpha = {alpha}; cannot reject the null hypothesis"
                )),
            }
        };
        *slot = Some(block);
    }
    Ok(augmented)
}
