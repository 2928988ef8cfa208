//! Pipeline configuration: one JSON file with every study constant as a
//! named, defaulted key, plus `--override key=value` dotted-path overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use eargaze::dsp::{FilterSpec, PursuitConditioning, PursuitOrder};
use eargaze::montage::{Aggregation, RankParams};
use eargaze::pipeline::StudyConfig;
use eargaze::saccade::SaccadeParams;
use eargaze::synth::NoiseConfig;
use eargaze::{Axis, Direction};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudySection {
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
    pub subject_jitter_sd: f64,
}

impl Default for StudySection {
    fn default() -> Self {
        let base = StudyConfig::default();
        StudySection {
            n_subjects: base.n_subjects,
            pursuit_amplitudes_deg: base.pursuit_amplitudes_deg,
            pursuit_frequencies_hz: base.pursuit_frequencies_hz,
            pursuit_axes: base.pursuit_axes,
            pursuit_duration_s: base.pursuit_duration_s,
            saccade_angles_deg: base.saccade_angles_deg,
            saccade_directions: base.saccade_directions,
            fixation_s: base.fixation_s,
            rest_s: base.rest_s,
            saccade_cycles: base.saccade_cycles,
            subject_jitter_sd: base.subject_jitter_sd,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    pub pursuit_order: PursuitOrder,
    pub zero_phase: bool,
    pub mean_filter_len: usize,
    pub max_lag_eog: usize,
    pub max_lag_cam: usize,
    pub alpha: f64,
    pub tolerance_deg: f64,
    pub aggregation: Aggregation,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            pursuit_order: PursuitOrder::BandpassFirst,
            zero_phase: false,
            mean_filter_len: eargaze::dsp::DEFAULT_MEAN_FILTER_LEN,
            max_lag_eog: 12,
            max_lag_cam: 64,
            alpha: 0.05,
            tolerance_deg: eargaze::montage::DEFAULT_AXIS_TOLERANCE_DEG,
            aggregation: Aggregation::WithinSubject,
        }
    }
}

/// Top-level configuration. Every parameter the analyses consume has a
/// named key here; the `noise.seed` field is always overwritten by the
/// top-level `seed`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Existing dataset to analyze; `null` makes `pipeline` synthesize one.
    pub data_dir: Option<PathBuf>,
    /// Electrode layout JSON; `null` uses the built-in headphone ring.
    pub layout_path: Option<PathBuf>,
    /// Screen geometry JSON; `null` uses the study defaults.
    pub screen_path: Option<PathBuf>,
    pub study: StudySection,
    pub noise: NoiseConfig,
    pub filter: FilterSpec,
    pub analysis: AnalysisSection,
    pub segmentation: SaccadeParams,
    /// Montage like "L3-R3"; `null` takes the top-ranked montage from
    /// `correlation_report.json`.
    pub montage_horizontal: Option<String>,
    pub montage_vertical: Option<String>,
    /// Optional CSV with hand-labeled saccade start/end overrides.
    pub label_overrides: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            out_dir: PathBuf::from("out"),
            data_dir: None,
            layout_path: None,
            screen_path: None,
            study: StudySection::default(),
            noise: NoiseConfig::default(),
            filter: FilterSpec::study_default(),
            analysis: AnalysisSection::default(),
            segmentation: SaccadeParams::default(),
            montage_horizontal: None,
            montage_vertical: None,
            label_overrides: None,
        }
    }
}

impl PipelineConfig {
    /// Load from JSON, apply dotted-path overrides and the --seed/--out
    /// shortcuts, then validate.
    pub fn load(
        path: Option<&Path>,
        overrides: &[String],
        seed: Option<u64>,
        out: Option<&Path>,
    ) -> Result<(PipelineConfig, serde_json::Value), CliError> {
        let mut value: serde_json::Value = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    CliError::Config(format!("cannot read config {}: {e}", p.display()))
                })?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Config(format!("config {}: {e}", p.display())))?
            }
            None => serde_json::json!({}),
        };
        for ov in overrides {
            apply_override(&mut value, ov)?;
        }
        if let Some(seed) = seed {
            value["seed"] = serde_json::json!(seed);
        }
        if let Some(out) = out {
            value["out_dir"] = serde_json::json!(out);
        }
        let mut config: PipelineConfig = serde_json::from_value(value)
            .map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
        config.noise.seed = config.seed;
        config.validate()?;
        // Canonical form for hashing and the manifest.
        let canonical = serde_json::to_value(&config).expect("config serializes");
        Ok((config, canonical))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.filter
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.noise
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.study_config()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        let a = &self.analysis;
        if a.mean_filter_len == 0 {
            return Err(CliError::Config("mean_filter_len must be >= 1".into()));
        }
        if !(a.alpha > 0.0 && a.alpha < 1.0) {
            return Err(CliError::Config("alpha must lie in (0, 1)".into()));
        }
        if !(a.tolerance_deg > 0.0 && a.tolerance_deg <= 45.0) {
            return Err(CliError::Config("tolerance_deg must lie in (0, 45]".into()));
        }
        let s = &self.segmentation;
        if !(s.velocity_threshold_uv_per_sample > 0.0)
            || !(s.min_duration_s > 0.0)
            || !(s.max_duration_s > s.min_duration_s)
            || !(s.search_margin_s > 0.0)
            || !(s.window_margin_s >= 0.0)
            || !(s.deflection_margin_s >= 0.0)
            || s.resample_len < 2
        {
            return Err(CliError::Config("invalid segmentation parameters".into()));
        }
        for m in [&self.montage_horizontal, &self.montage_vertical]
            .into_iter()
            .flatten()
        {
            parse_montage_name(m)?;
        }
        Ok(())
    }

    pub fn study_config(&self) -> StudyConfig {
        let s = &self.study;
        StudyConfig {
            n_subjects: s.n_subjects,
            pursuit_amplitudes_deg: s.pursuit_amplitudes_deg.clone(),
            pursuit_frequencies_hz: s.pursuit_frequencies_hz.clone(),
            pursuit_axes: s.pursuit_axes.clone(),
            pursuit_duration_s: s.pursuit_duration_s,
            saccade_angles_deg: s.saccade_angles_deg.clone(),
            saccade_directions: s.saccade_directions.clone(),
            fixation_s: s.fixation_s,
            rest_s: s.rest_s,
            saccade_cycles: s.saccade_cycles,
            noise: self.noise.clone(),
            subject_jitter_sd: s.subject_jitter_sd,
            seed: self.seed,
        }
    }

    pub fn rank_params(&self) -> RankParams {
        RankParams {
            conditioning: PursuitConditioning {
                filter: self.filter,
                mean_window: self.analysis.mean_filter_len,
                order: self.analysis.pursuit_order,
                zero_phase: self.analysis.zero_phase,
            },
            max_lag_eog: self.analysis.max_lag_eog,
            max_lag_cam: self.analysis.max_lag_cam,
            aggregation: self.analysis.aggregation,
        }
    }
}

/// Parse "A-B" into electrode labels.
pub fn parse_montage_name(name: &str) -> Result<(String, String), CliError> {
    match name.split_once('-') {
        Some((a, b)) if !a.is_empty() && !b.is_empty() => Ok((a.to_string(), b.to_string())),
        _ => Err(CliError::Config(format!(
            "montage must look like 'L3-R3', got '{name}'"
        ))),
    }
}

/// Set a dotted-path key in the config JSON; the value parses as JSON when
/// possible and falls back to a string.
fn apply_override(value: &mut serde_json::Value, expr: &str) -> Result<(), CliError> {
    let (key, raw) = expr
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override must be key=value, got '{expr}'")))?;
    let parsed: serde_json::Value = serde_json::from_str(raw)
        .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
    let mut node = value;
    let parts: Vec<&str> = key.split('.').collect();
    for part in &parts[..parts.len() - 1] {
        node = node
            .as_object_mut()
            .ok_or_else(|| CliError::Config(format!("override path '{key}' hits a non-object")))?
            .entry(part.to_string())
            .or_insert_with(|| serde_json::json!({}));
    }
    node.as_object_mut()
        .ok_or_else(|| CliError::Config(format!("override path '{key}' hits a non-object")))?
        .insert(parts[parts.len() - 1].to_string(), parsed);
    Ok(())
}
