//! End-to-end runners: synthetic study generation and the montage, saccade
//! and regression analyses the CLI wires together.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dsp::{bandpass_filter, FilterSpec};
use crate::error::{Error, Result};
use crate::io::{ElectrodeLayout, GazeLog, Recording, ScreenGeometry, Signal};
use crate::montage::{
    classify_montages, differential_signal, montage_significance, rank_montages,
    CorrelationReport, Montage, PursuitTrial, RankParams,
};
use crate::saccade::{
    average_windows, baselined_windows, bland_altman, deflection_samples, loso_evaluate,
    loso_predictions, segment_saccades, BlandAltmanSummary, DeflectionSample, MaeTable,
    SaccadeEvent, SaccadeParams, WaveformCell,
};
use crate::synth::{
    self, pursuit_trajectory, saccade_protocol, simulate_recording, subject_model, GazeTrajectory,
    HeadModel, NoiseConfig, ProtocolEvent,
};
use crate::{Axis, Direction};

/// The fixation angles of the study protocol, degrees.
pub const DEFAULT_PROTOCOL_ANGLES_DEG: [f64; 6] = [2.5, 5.0, 7.5, 10.0, 12.5, 15.0];

/// Target frequencies of the smooth-pursuit stimulus, Hz.
pub const DEFAULT_PURSUIT_FREQUENCIES_HZ: [f64; 3] = [0.33, 0.5, 1.0];

/// Parameters of a full synthetic study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub n_subjects: usize,
    pub pursuit_amplitudes_deg: Vec<f64>,
    pub pursuit_frequencies_hz: Vec<f64>,
    pub pursuit_axes: Vec<Axis>,
    pub pursuit_duration_s: f64,
    pub saccade_angles_deg: Vec<f64>,
    pub saccade_directions: Vec<Direction>,
    pub fixation_s: f64,
    pub rest_s: f64,
    pub saccade_cycles: usize,
    pub noise: NoiseConfig,
    /// Relative SD of the per-subject anthropometric jitter.
    pub subject_jitter_sd: f64,
    pub seed: u64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            n_subjects: 16,
            pursuit_amplitudes_deg: DEFAULT_PROTOCOL_ANGLES_DEG.to_vec(),
            pursuit_frequencies_hz: DEFAULT_PURSUIT_FREQUENCIES_HZ.to_vec(),
            pursuit_axes: vec![Axis::Horizontal, Axis::Vertical],
            pursuit_duration_s: 6.0,
            saccade_angles_deg: DEFAULT_PROTOCOL_ANGLES_DEG.to_vec(),
            saccade_directions: vec![
                Direction::Left,
                Direction::Right,
                Direction::Up,
                Direction::Down,
            ],
            fixation_s: 2.0,
            rest_s: 2.0,
            saccade_cycles: 1,
            noise: NoiseConfig::default(),
            subject_jitter_sd: 0.03,
            seed: 0,
        }
    }
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_subjects == 0 {
            return Err(Error::invalid_parameter("n_subjects", "must be >= 1"));
        }
        if self.saccade_cycles == 0 {
            return Err(Error::invalid_parameter("saccade_cycles", "must be >= 1"));
        }
        if self.subject_jitter_sd < 0.0 || self.subject_jitter_sd > 0.2 {
            return Err(Error::invalid_parameter(
                "subject_jitter_sd",
                "must lie in [0, 0.2]",
            ));
        }
        self.noise.validate()
    }
}

/// One saccade-protocol recording with its annotations.
#[derive(Debug, Clone)]
pub struct SaccadeRun {
    pub recording: Recording,
    pub gaze: GazeLog,
    pub events: Vec<ProtocolEvent>,
}

#[derive(Debug, Clone)]
pub struct SubjectData {
    pub subject_id: String,
    pub model: HeadModel,
    pub pursuit: Vec<PursuitTrial>,
    pub saccade_runs: Vec<SaccadeRun>,
}

#[derive(Debug, Clone)]
pub struct SyntheticStudy {
    pub layout: ElectrodeLayout,
    pub screen: ScreenGeometry,
    pub subjects: Vec<SubjectData>,
}

impl SyntheticStudy {
    pub fn pursuit_trials(&self) -> Vec<PursuitTrial> {
        self.subjects
            .iter()
            .flat_map(|s| s.pursuit.iter().cloned())
            .collect()
    }

    pub fn saccade_runs(&self) -> Vec<&SaccadeRun> {
        self.subjects.iter().flat_map(|s| &s.saccade_runs).collect()
    }
}

pub fn subject_label(idx: usize) -> String {
    format!("S{:02}", idx + 1)
}

/// Generate the whole study: per subject, every pursuit trial of the
/// protocol grid plus the saccade-protocol cycles. Deterministic in the
/// config seed; subjects are independent and generated in parallel.
pub fn synthesize_study(cfg: &StudyConfig) -> Result<SyntheticStudy> {
    cfg.validate()?;
    let subjects: Vec<SubjectData> = (0..cfg.n_subjects)
        .into_par_iter()
        .map(|s_idx| -> Result<SubjectData> {
            let subject_id = subject_label(s_idx);
            let model = subject_model(cfg.seed, s_idx, cfg.subject_jitter_sd)?;
            let mut pursuit = Vec::new();
            let mut trial_idx = 0u64;
            for &axis in &cfg.pursuit_axes {
                for &freq in &cfg.pursuit_frequencies_hz {
                    for &amp in &cfg.pursuit_amplitudes_deg {
                        let phase_seed =
                            synth::mix_seed(cfg.seed, 0x9A5E, (s_idx as u64) << 16 | trial_idx);
                        let traj = pursuit_trajectory(
                            amp,
                            freq,
                            cfg.pursuit_duration_s,
                            axis,
                            phase_seed,
                        )?;
                        let mut noise = cfg.noise.clone();
                        noise.seed =
                            synth::mix_seed(cfg.noise.seed, 0x0152, (s_idx as u64) << 16 | trial_idx);
                        let tag = format!("pursuit:{axis}:f{freq}:a{amp}");
                        let (recording, gaze) =
                            simulate_recording(&model, &traj, &noise, &subject_id, &tag)?;
                        pursuit.push(PursuitTrial {
                            recording,
                            gaze,
                            axis,
                        });
                        trial_idx += 1;
                    }
                }
            }
            let mut saccade_runs = Vec::new();
            for cycle in 0..cfg.saccade_cycles {
                let traj: GazeTrajectory = saccade_protocol(
                    &cfg.saccade_angles_deg,
                    &cfg.saccade_directions,
                    cfg.fixation_s,
                    cfg.rest_s,
                )?;
                let mut noise = cfg.noise.clone();
                noise.seed = synth::mix_seed(
                    cfg.noise.seed,
                    0x5ACC,
                    (s_idx as u64) << 16 | cycle as u64,
                );
                let tag = format!("saccade:c{cycle}");
                let (recording, gaze) =
                    simulate_recording(&model, &traj, &noise, &subject_id, &tag)?;
                saccade_runs.push(SaccadeRun {
                    recording,
                    gaze,
                    events: traj.events,
                });
            }
            Ok(SubjectData {
                subject_id,
                model,
                pursuit,
                saccade_runs,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SyntheticStudy {
        layout: synth::ear_ring_layout(),
        screen: ScreenGeometry::study_default(),
        subjects,
    })
}

/// Classify montages for the axis, rank them on the pursuit trials, and
/// attach significance blocks when the study is large enough.
pub fn run_montage_ranking(
    trials: &[PursuitTrial],
    layout: &ElectrodeLayout,
    axis: Axis,
    params: &RankParams,
    tolerance_deg: f64,
    alpha: f64,
) -> Result<CorrelationReport> {
    let montages = classify_montages(layout, axis, tolerance_deg);
    let report = rank_montages(trials, &montages, axis, params)?;
    match montage_significance(&report, alpha) {
        Ok(augmented) => Ok(augmented),
        // Too few montages or subjects for the tests: ship the bare ranking.
        Err(Error::Degenerate { .. }) => Ok(report),
        Err(e) => Err(e),
    }
}

/// Hand-labeled start/end overrides keyed by (subject, saccade id).
#[derive(Debug, Clone, Default)]
pub struct LabelOverrides(pub BTreeMap<(String, usize), (usize, usize)>);

/// Load overrides from CSV with header
/// `subject_id,saccade_id,start_idx,end_idx`.
pub fn load_label_overrides(path: &Path) -> Result<LabelOverrides> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::MalformedFile {
            what: "label overrides",
            path: path.to_path_buf(),
            row: 0,
            detail: e.to_string(),
        })?;
    let mut map = BTreeMap::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::MalformedFile {
            what: "label overrides",
            path: path.to_path_buf(),
            row: row_idx + 1,
            detail: e.to_string(),
        })?;
        let malformed = |detail: &str| Error::MalformedFile {
            what: "label overrides",
            path: path.to_path_buf(),
            row: row_idx + 1,
            detail: detail.to_string(),
        };
        let subject = record.get(0).ok_or_else(|| malformed("missing subject"))?;
        let id: usize = record
            .get(1)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| malformed("bad saccade_id"))?;
        let start: usize = record
            .get(2)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| malformed("bad start_idx"))?;
        let end: usize = record
            .get(3)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| malformed("bad end_idx"))?;
        if start >= end {
            return Err(malformed("start_idx must be < end_idx"));
        }
        map.insert((subject.trim().to_string(), id), (start, end));
    }
    Ok(LabelOverrides(map))
}

fn apply_overrides(events: &mut [SaccadeEvent], overrides: &LabelOverrides) {
    for ev in events.iter_mut() {
        if let Some(&(start, end)) = overrides
            .0
            .get(&(ev.subject_id.clone(), ev.saccade_id))
        {
            ev.start_idx = start;
            ev.end_idx = end;
            ev.valid = true;
            ev.invalid_reason = None;
        }
    }
}

/// Everything the saccade analysis produces for one montage pair.
#[derive(Debug, Clone)]
pub struct SaccadeAnalysis {
    pub montage_horizontal: Montage,
    pub montage_vertical: Montage,
    pub events: Vec<SaccadeEvent>,
    pub ear_horizontal: Vec<DeflectionSample>,
    pub gold_horizontal: Vec<DeflectionSample>,
    pub ear_vertical: Vec<DeflectionSample>,
    pub gold_vertical: Vec<DeflectionSample>,
    pub ear_waveforms: Vec<WaveformCell>,
    pub gold_waveforms: Vec<WaveformCell>,
}

/// Segment saccades on the gold channels and extract deflections and
/// average waveforms for both the selected ear montages and the gold
/// standard.
pub fn run_saccade_analysis(
    runs: &[&SaccadeRun],
    montage_horizontal: &Montage,
    montage_vertical: &Montage,
    params: &SaccadeParams,
    filter: &FilterSpec,
    overrides: Option<&LabelOverrides>,
) -> Result<SaccadeAnalysis> {
    if runs.is_empty() {
        return Err(Error::Degenerate {
            detail: "no saccade recordings supplied".into(),
        });
    }

    struct RunOutput {
        events: Vec<SaccadeEvent>,
        ear_h: Vec<DeflectionSample>,
        gold_h: Vec<DeflectionSample>,
        ear_v: Vec<DeflectionSample>,
        gold_v: Vec<DeflectionSample>,
        ear_windows: Vec<(Direction, f64, Vec<f64>)>,
        gold_windows: Vec<(Direction, f64, Vec<f64>)>,
    }

    let outputs: Vec<RunOutput> = runs
        .par_iter()
        .map(|run| -> Result<RunOutput> {
            let subject = run.recording.subject_id.clone();
            let mut events_all = Vec::new();
            let mut ear_h = Vec::new();
            let mut gold_h = Vec::new();
            let mut ear_v = Vec::new();
            let mut gold_v = Vec::new();
            let mut ear_windows = Vec::new();
            let mut gold_windows = Vec::new();

            for (axis, montage) in [
                (Axis::Horizontal, montage_horizontal),
                (Axis::Vertical, montage_vertical),
            ] {
                let protocol: Vec<ProtocolEvent> = run
                    .events
                    .iter()
                    .filter(|e| e.direction.axis() == axis)
                    .cloned()
                    .collect();
                if protocol.is_empty() {
                    continue;
                }
                let gold_raw = run
                    .recording
                    .channel_signal(crate::montage::gold_label(axis))?;
                let gold: Signal = bandpass_filter(&gold_raw, filter)?;
                let mut events = segment_saccades(&gold, &protocol, params, &subject)?;
                if let Some(ov) = overrides {
                    apply_overrides(&mut events, ov);
                }
                let ear =
                    bandpass_filter(&differential_signal(&run.recording, montage)?, filter)?;
                let ear_samples = deflection_samples(&events, &ear, params)?;
                let gold_samples = deflection_samples(&events, &gold, params)?;
                match axis {
                    Axis::Horizontal => {
                        ear_h.extend(ear_samples);
                        gold_h.extend(gold_samples);
                    }
                    Axis::Vertical => {
                        ear_v.extend(ear_samples);
                        gold_v.extend(gold_samples);
                    }
                }
                ear_windows.extend(baselined_windows(&events, &ear, params));
                gold_windows.extend(baselined_windows(&events, &gold, params));
                events_all.extend(events);
            }
            Ok(RunOutput {
                events: events_all,
                ear_h,
                gold_h,
                ear_v,
                gold_v,
                ear_windows,
                gold_windows,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut analysis = SaccadeAnalysis {
        montage_horizontal: montage_horizontal.clone(),
        montage_vertical: montage_vertical.clone(),
        events: Vec::new(),
        ear_horizontal: Vec::new(),
        gold_horizontal: Vec::new(),
        ear_vertical: Vec::new(),
        gold_vertical: Vec::new(),
        ear_waveforms: Vec::new(),
        gold_waveforms: Vec::new(),
    };
    let mut ear_windows = Vec::new();
    let mut gold_windows = Vec::new();
    for out in outputs {
        analysis.events.extend(out.events);
        analysis.ear_horizontal.extend(out.ear_h);
        analysis.gold_horizontal.extend(out.gold_h);
        analysis.ear_vertical.extend(out.ear_v);
        analysis.gold_vertical.extend(out.gold_v);
        ear_windows.extend(out.ear_windows);
        gold_windows.extend(out.gold_windows);
    }
    analysis.ear_waveforms = average_windows(&ear_windows, params.resample_len);
    analysis.gold_waveforms = average_windows(&gold_windows, params.resample_len);
    Ok(analysis)
}

/// Per-direction deflection statistics: linearity against the angle for
/// both sources plus the agreement between them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionDeflectionStats {
    pub direction: Direction,
    pub ear_linearity: Option<crate::stats::CorrelationResult>,
    pub gold_linearity: Option<crate::stats::CorrelationResult>,
    pub ear_gold_agreement: Option<crate::stats::CorrelationResult>,
    pub mean_deflections_uv: Vec<(f64, f64, f64)>,
}

/// Deflection-versus-angle summary across all four directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeflectionSummary {
    pub directions: Vec<DirectionDeflectionStats>,
}

/// Summarize linearity and source agreement of the mean deflections, one
/// block per direction. Degenerate directions (no trend, too few angles)
/// report `None` rather than failing.
pub fn summarize_deflections(analysis: &SaccadeAnalysis) -> DeflectionSummary {
    use crate::saccade::{deflection_agreement, deflection_linearity, mean_deflection_per_angle};
    let directions = [
        Direction::Left,
        Direction::Right,
        Direction::Up,
        Direction::Down,
    ]
    .into_iter()
    .map(|direction| {
        let (ear, gold) = match direction.axis() {
            Axis::Horizontal => (&analysis.ear_horizontal, &analysis.gold_horizontal),
            Axis::Vertical => (&analysis.ear_vertical, &analysis.gold_vertical),
        };
        let ear_means = mean_deflection_per_angle(ear, direction);
        let gold_means = mean_deflection_per_angle(gold, direction);
        let mean_deflections_uv = ear_means
            .iter()
            .zip(&gold_means)
            .map(|((angle, e), (_, g))| (*angle, *e, *g))
            .collect();
        DirectionDeflectionStats {
            direction,
            ear_linearity: deflection_linearity(ear, direction).ok(),
            gold_linearity: deflection_linearity(gold, direction).ok(),
            ear_gold_agreement: deflection_agreement(ear, gold, direction).ok(),
            mean_deflections_uv,
        }
    })
    .collect();
    DeflectionSummary { directions }
}

/// MAE tables for the ear-montage model and the gold-standard model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub ear: MaeTable,
    pub gold: MaeTable,
}

/// Gaze-angle prediction report. Vertical results are produced when the
/// data allows but are flagged as not recommended: vertical ear-EOG does
/// not track eye movements reliably.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazePredictionReport {
    pub horizontal: ModelComparison,
    pub vertical: Option<ModelComparison>,
    pub vertical_recommended: bool,
}

/// Fit and LOSO-evaluate the deflection-to-angle regressors and compute the
/// Bland-Altman agreement between the two horizontal models' predictions.
pub fn run_regression(
    analysis: &SaccadeAnalysis,
) -> Result<(GazePredictionReport, BlandAltmanSummary)> {
    let horizontal = ModelComparison {
        ear: loso_evaluate(&analysis.ear_horizontal)?,
        gold: loso_evaluate(&analysis.gold_horizontal)?,
    };
    let vertical = match (
        loso_evaluate(&analysis.ear_vertical),
        loso_evaluate(&analysis.gold_vertical),
    ) {
        (Ok(ear), Ok(gold)) => Some(ModelComparison { ear, gold }),
        _ => None,
    };
    let ear_preds = loso_predictions(&analysis.ear_horizontal)?;
    let gold_preds = loso_predictions(&analysis.gold_horizontal)?;
    let agreement = bland_altman(&ear_preds, &gold_preds)?;
    Ok((
        GazePredictionReport {
            horizontal,
            vertical,
            vertical_recommended: false,
        },
        agreement,
    ))
}
