//! Command implementations: dataset I/O, analysis wiring, and the manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use eargaze::dsp::bandpass_filter;
use eargaze::io::{
    load_gaze_log, load_layout, load_recording, load_screen_geometry, write_gaze_log,
    write_layout, write_recording, write_report, write_screen_geometry, ElectrodeLayout,
    Recording, ScreenGeometry,
};
use eargaze::montage::{CorrelationReport, Montage, PursuitTrial};
use eargaze::pipeline::{
    load_label_overrides, run_montage_ranking, run_regression, run_saccade_analysis,
    synthesize_study, LabelOverrides, SaccadeAnalysis, SaccadeRun, SyntheticStudy,
};
use eargaze::synth::{load_protocol_events, write_protocol_events};
use eargaze::{Axis, Error};

use crate::config::{parse_montage_name, PipelineConfig};
use crate::CliError;

/// Both axes' montage rankings in one report file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CombinedCorrelationReport {
    pub horizontal: CorrelationReport,
    pub vertical: CorrelationReport,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config_hash: String,
    pub config: serde_json::Value,
    pub artifacts: Vec<String>,
}

pub fn config_hash(canonical: &serde_json::Value) -> String {
    let bytes = serde_json::to_vec(canonical).expect("config serializes");
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Core(Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn ensure_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| io_error(path, e))
}

struct OutputTracker {
    out_dir: PathBuf,
    artifacts: Vec<String>,
}

impl OutputTracker {
    fn new(out_dir: &Path) -> Result<OutputTracker, CliError> {
        ensure_dir(out_dir)?;
        Ok(OutputTracker {
            out_dir: out_dir.to_path_buf(),
            artifacts: Vec::new(),
        })
    }

    fn path(&mut self, rel: &str) -> PathBuf {
        self.artifacts.push(rel.to_string());
        self.out_dir.join(rel)
    }

    fn finish(
        mut self,
        command: &str,
        config: &serde_json::Value,
        seed: u64,
    ) -> Result<(), CliError> {
        let manifest = Manifest {
            tool: "eargaze".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            config_hash: config_hash(config),
            config: config.clone(),
            artifacts: std::mem::take(&mut self.artifacts),
        };
        let path = self.out_dir.join("manifest.json");
        write_report(&manifest, &path)?;
        println!("wrote {}", path.display());
        Ok(())
    }
}

/// The dataset directory a run reads from: explicit `data_dir` or the
/// `data/` folder under the output directory.
fn data_dir(config: &PipelineConfig) -> PathBuf {
    config
        .data_dir
        .clone()
        .unwrap_or_else(|| config.out_dir.join("data"))
}

fn load_layout_or_default(config: &PipelineConfig, dir: &Path) -> Result<ElectrodeLayout, CliError> {
    if let Some(path) = &config.layout_path {
        return Ok(load_layout(path)?);
    }
    let local = dir.join("layout.json");
    if local.exists() {
        return Ok(load_layout(&local)?);
    }
    Ok(eargaze::synth::ear_ring_layout())
}

fn load_screen_or_default(config: &PipelineConfig, dir: &Path) -> Result<ScreenGeometry, CliError> {
    if let Some(path) = &config.screen_path {
        return Ok(load_screen_geometry(path)?);
    }
    let local = dir.join("screen.json");
    if local.exists() {
        return Ok(load_screen_geometry(&local)?);
    }
    Ok(ScreenGeometry::study_default())
}

/// Write a synthesized study as dataset files (recordings, gaze logs,
/// protocol annotations, layout and screen geometry).
fn write_study(study: &SyntheticStudy, dir: &Path) -> Result<Vec<String>, CliError> {
    ensure_dir(dir)?;
    let mut written = Vec::new();
    fn put(written: &mut Vec<String>, dir: &Path, rel: String) -> PathBuf {
        written.push(format!("data/{rel}"));
        dir.join(rel)
    }
    write_layout(&study.layout, &put(&mut written, dir, "layout.json".into()))?;
    write_screen_geometry(&study.screen, &put(&mut written, dir, "screen.json".into()))?;
    for subject in &study.subjects {
        for (i, trial) in subject.pursuit.iter().enumerate() {
            let axis = match trial.axis {
                Axis::Horizontal => "h",
                Axis::Vertical => "v",
            };
            let stem = format!("{}_pursuit_{axis}_{i:03}", subject.subject_id);
            write_recording(&trial.recording, &put(&mut written, dir, format!("{stem}.csv")))?;
            written.push(format!("data/{stem}.meta.json"));
            write_gaze_log(
                &trial.gaze,
                &study.screen,
                &put(&mut written, dir, format!("{stem}.gaze.csv")),
            )?;
        }
        for (c, run) in subject.saccade_runs.iter().enumerate() {
            let stem = format!("{}_saccade_{c:02}", subject.subject_id);
            write_recording(&run.recording, &put(&mut written, dir, format!("{stem}.csv")))?;
            written.push(format!("data/{stem}.meta.json"));
            write_gaze_log(
                &run.gaze,
                &study.screen,
                &put(&mut written, dir, format!("{stem}.gaze.csv")),
            )?;
            write_protocol_events(
                &run.events,
                &put(&mut written, dir, format!("{stem}.protocol.csv")),
            )?;
        }
    }
    written.sort();
    Ok(written)
}

/// A dataset loaded back from disk.
pub struct Dataset {
    pub layout: ElectrodeLayout,
    pub pursuit: Vec<PursuitTrial>,
    pub saccade_runs: Vec<SaccadeRun>,
}

fn parse_pursuit_axis(tag: &str) -> Option<Axis> {
    let mut parts = tag.split(':');
    if parts.next() != Some("pursuit") {
        return None;
    }
    match parts.next() {
        Some("horizontal") => Some(Axis::Horizontal),
        Some("vertical") => Some(Axis::Vertical),
        _ => None,
    }
}

/// Load every recording in the directory, pairing each with its gaze log
/// and, for saccade runs, the protocol annotations. Trial kind comes from
/// the task tag.
pub fn load_dataset(config: &PipelineConfig) -> Result<Dataset, CliError> {
    let dir = data_dir(config);
    if !dir.is_dir() {
        return Err(CliError::Config(format!(
            "data directory {} does not exist (run `synth` or set data_dir)",
            dir.display()
        )));
    }
    let layout = load_layout_or_default(config, &dir)?;
    let screen = load_screen_or_default(config, &dir)?;

    let mut stems: Vec<String> = Vec::new();
    for entry in std::fs::read_dir(&dir).map_err(|e| io_error(&dir, e))? {
        let entry = entry.map_err(|e| io_error(&dir, e))?;
        let name = entry.file_name().to_string_lossy().to_string();
        if let Some(stem) = name.strip_suffix(".csv") {
            if !stem.ends_with(".gaze") && !stem.ends_with(".protocol") {
                stems.push(stem.to_string());
            }
        }
    }
    stems.sort();

    let mut pursuit = Vec::new();
    let mut saccade_runs = Vec::new();
    for stem in stems {
        let rec_path = dir.join(format!("{stem}.csv"));
        let recording: Recording = load_recording(&rec_path, &layout)?;
        let gaze_path = dir.join(format!("{stem}.gaze.csv"));
        let gaze = load_gaze_log(&gaze_path, &screen)?;
        if let Some(axis) = parse_pursuit_axis(&recording.task_tag) {
            pursuit.push(PursuitTrial {
                recording,
                gaze,
                axis,
            });
        } else if recording.task_tag.starts_with("saccade") {
            let protocol_path = dir.join(format!("{stem}.protocol.csv"));
            let events = load_protocol_events(&protocol_path)?;
            saccade_runs.push(SaccadeRun {
                recording,
                gaze,
                events,
            });
        } else {
            return Err(CliError::Core(Error::MalformedFile {
                what: "recording",
                path: rec_path,
                row: 0,
                detail: format!("unrecognized task tag '{}'", recording.task_tag),
            }));
        }
    }
    Ok(Dataset {
        layout,
        pursuit,
        saccade_runs,
    })
}

pub fn cmd_synth(
    config: &PipelineConfig,
    canonical: &serde_json::Value,
) -> Result<(), CliError> {
    let study = synthesize_study(&config.study_config())?;
    let mut tracker = OutputTracker::new(&config.out_dir)?;
    let files = write_study(&study, &config.out_dir.join("data"))?;
    tracker.artifacts.extend(files);
    println!(
        "synthesized {} subjects into {}",
        study.subjects.len(),
        config.out_dir.join("data").display()
    );
    tracker.finish("synth", canonical, config.seed)
}

pub fn cmd_preprocess(
    config: &PipelineConfig,
    canonical: &serde_json::Value,
) -> Result<(), CliError> {
    let dataset = load_dataset(config)?;
    let mut tracker = OutputTracker::new(&config.out_dir)?;
    let pre_dir = config.out_dir.join("preprocessed");
    ensure_dir(&pre_dir)?;
    let mut n = 0usize;
    for recording in dataset
        .pursuit
        .iter()
        .map(|t| &t.recording)
        .chain(dataset.saccade_runs.iter().map(|r| &r.recording))
    {
        let mut channels = BTreeMap::new();
        for label in recording.labels() {
            let filtered = bandpass_filter(&recording.channel_signal(label)?, &config.filter)?;
            channels.insert(label.to_string(), filtered.samples);
        }
        let conditioned = Recording::new(
            recording.subject_id.clone(),
            recording.sample_rate,
            channels,
            recording.reference_label.clone(),
            recording.task_tag.clone(),
            &dataset.layout,
        )?;
        let stem = format!(
            "{}_{}",
            recording.subject_id,
            recording.task_tag.replace(':', "_")
        );
        let rel = format!("preprocessed/{stem}.csv");
        write_recording(&conditioned, &tracker.path(&rel))?;
        tracker.artifacts.push(format!("preprocessed/{stem}.meta.json"));
        n += 1;
    }
    println!("filtered {n} recordings into {}", pre_dir.display());
    tracker.finish("preprocess", canonical, config.seed)
}

fn rank_both_axes(
    config: &PipelineConfig,
    dataset: &Dataset,
) -> Result<CombinedCorrelationReport, CliError> {
    let params = config.rank_params();
    let horizontal = run_montage_ranking(
        &dataset.pursuit,
        &dataset.layout,
        Axis::Horizontal,
        &params,
        config.analysis.tolerance_deg,
        config.analysis.alpha,
    )?;
    let vertical = run_montage_ranking(
        &dataset.pursuit,
        &dataset.layout,
        Axis::Vertical,
        &params,
        config.analysis.tolerance_deg,
        config.analysis.alpha,
    )?;
    Ok(CombinedCorrelationReport {
        horizontal,
        vertical,
    })
}

fn write_montage_outputs(
    report: &CombinedCorrelationReport,
    tracker: &mut OutputTracker,
) -> Result<(), CliError> {
    write_report(report, &tracker.path("correlation_report.json"))?;
    let mut csv = String::from(
        "axis,montage,mean_r_eog,mean_r_cam,sd_r_eog,sd_r_cam,n_trials,n_excluded\n",
    );
    for (axis, rep) in [("horizontal", &report.horizontal), ("vertical", &report.vertical)] {
        for e in &rep.montages {
            csv.push_str(&format!(
                "{axis},{},{},{},{},{},{},{}\n",
                e.montage.name(),
                e.mean_r_eog,
                e.mean_r_cam,
                e.sd_r_eog,
                e.sd_r_cam,
                e.n_trials,
                e.n_excluded
            ));
        }
    }
    let path = tracker.path("montage_correlations.csv");
    std::fs::write(&path, csv).map_err(|e| io_error(&path, e))?;
    Ok(())
}

pub fn cmd_montages(
    config: &PipelineConfig,
    canonical: &serde_json::Value,
) -> Result<(), CliError> {
    let dataset = load_dataset(config)?;
    let report = rank_both_axes(config, &dataset)?;
    let mut tracker = OutputTracker::new(&config.out_dir)?;
    write_montage_outputs(&report, &mut tracker)?;
    println!(
        "ranked {} horizontal and {} vertical montages",
        report.horizontal.montages.len(),
        report.vertical.montages.len()
    );
    tracker.finish("montages", canonical, config.seed)
}

/// Montage selection: explicit config value, else the top-ranked entry of
/// the correlation report in the output directory.
fn resolve_montage(
    configured: &Option<String>,
    axis: Axis,
    layout: &ElectrodeLayout,
    report: Option<&CombinedCorrelationReport>,
) -> Result<Montage, CliError> {
    if let Some(name) = configured {
        let (a, b) = parse_montage_name(name)?;
        for label in [&a, &b] {
            if !layout.contains(label) {
                return Err(CliError::Core(Error::UnknownLabel {
                    label: label.clone(),
                }));
            }
        }
        return Ok(Montage {
            a,
            b,
            axis_class: axis,
        });
    }
    let report = report.ok_or_else(|| {
        CliError::Config(format!(
            "no {axis} montage configured and no correlation_report.json found; \
             run `montages` first or set montage_{axis}"
        ))
    })?;
    let ranking = match axis {
        Axis::Horizontal => &report.horizontal,
        Axis::Vertical => &report.vertical,
    };
    ranking
        .montages
        .first()
        .map(|e| e.montage.clone())
        .ok_or_else(|| CliError::Config(format!("correlation report has no {axis} montages")))
}

fn load_report_if_present(out_dir: &Path) -> Result<Option<CombinedCorrelationReport>, CliError> {
    let path = out_dir.join("correlation_report.json");
    if path.exists() {
        Ok(Some(eargaze::io::read_report(&path)?))
    } else {
        Ok(None)
    }
}

fn saccade_analysis(
    config: &PipelineConfig,
    dataset: &Dataset,
    report: Option<&CombinedCorrelationReport>,
) -> Result<SaccadeAnalysis, CliError> {
    let montage_h = resolve_montage(
        &config.montage_horizontal,
        Axis::Horizontal,
        &dataset.layout,
        report,
    )?;
    let montage_v = resolve_montage(
        &config.montage_vertical,
        Axis::Vertical,
        &dataset.layout,
        report,
    )?;
    let overrides: Option<LabelOverrides> = match &config.label_overrides {
        Some(path) => Some(load_label_overrides(path)?),
        None => None,
    };
    let runs: Vec<&SaccadeRun> = dataset.saccade_runs.iter().collect();
    Ok(run_saccade_analysis(
        &runs,
        &montage_h,
        &montage_v,
        &config.segmentation,
        &config.filter,
        overrides.as_ref(),
    )?)
}

fn write_saccade_outputs(
    analysis: &SaccadeAnalysis,
    tracker: &mut OutputTracker,
) -> Result<(), CliError> {
    let mut events_csv = String::from(
        "subject_id,saccade_id,direction,target_angle_deg,outward,start_idx,end_idx,valid,invalid_reason\n",
    );
    for e in &analysis.events {
        events_csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            e.subject_id,
            e.saccade_id,
            e.direction,
            e.target_angle_deg,
            e.outward,
            e.start_idx,
            e.end_idx,
            e.valid,
            e.invalid_reason.as_deref().unwrap_or("")
        ));
    }
    let path = tracker.path("saccade_events.csv");
    std::fs::write(&path, events_csv).map_err(|e| io_error(&path, e))?;

    let mut deflections_csv = String::from(
        "subject_id,direction,target_angle_deg,true_angle_change_deg,ear_deflection_uv,gold_deflection_uv\n",
    );
    for (ear, gold) in analysis
        .ear_horizontal
        .iter()
        .zip(&analysis.gold_horizontal)
        .chain(analysis.ear_vertical.iter().zip(&analysis.gold_vertical))
    {
        deflections_csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            ear.subject_id,
            ear.direction,
            ear.target_angle_deg,
            ear.true_angle_change_deg,
            ear.deflection_uv,
            gold.deflection_uv
        ));
    }
    let path = tracker.path("deflections.csv");
    std::fs::write(&path, deflections_csv).map_err(|e| io_error(&path, e))?;

    let mut waveforms_csv = String::from("source,direction,angle_deg,sample_idx,mean_uv,sd_uv\n");
    for (source, cells) in [
        ("ear", &analysis.ear_waveforms),
        ("gold", &analysis.gold_waveforms),
    ] {
        for cell in cells.iter() {
            for (i, (m, s)) in cell.mean.iter().zip(&cell.sd).enumerate() {
                waveforms_csv.push_str(&format!(
                    "{source},{},{},{i},{m},{s}\n",
                    cell.direction, cell.angle_deg
                ));
            }
        }
    }
    let path = tracker.path("waveforms.csv");
    std::fs::write(&path, waveforms_csv).map_err(|e| io_error(&path, e))?;

    let summary = eargaze::pipeline::summarize_deflections(analysis);
    write_report(&summary, &tracker.path("deflection_summary.json"))?;
    Ok(())
}

pub fn cmd_saccades(
    config: &PipelineConfig,
    canonical: &serde_json::Value,
) -> Result<(), CliError> {
    let dataset = load_dataset(config)?;
    let report = load_report_if_present(&config.out_dir)?;
    let analysis = saccade_analysis(config, &dataset, report.as_ref())?;
    let mut tracker = OutputTracker::new(&config.out_dir)?;
    write_saccade_outputs(&analysis, &mut tracker)?;
    let valid = analysis.events.iter().filter(|e| e.valid).count();
    println!(
        "labeled {} saccades ({} valid) on montages {} / {}",
        analysis.events.len(),
        valid,
        analysis.montage_horizontal.name(),
        analysis.montage_vertical.name()
    );
    tracker.finish("saccades", canonical, config.seed)
}

fn write_regression_outputs(
    analysis: &SaccadeAnalysis,
    tracker: &mut OutputTracker,
) -> Result<(), CliError> {
    let (report, agreement) = run_regression(analysis)?;
    write_report(&report, &tracker.path("mae_table.json"))?;
    write_report(&agreement, &tracker.path("bland_altman.json"))?;
    println!(
        "horizontal MAE: ear {} vs gold {}",
        eargaze::saccade::format_mae_cell(
            report.horizontal.ear.total.mae_deg,
            report.horizontal.ear.total.sd_deg
        ),
        eargaze::saccade::format_mae_cell(
            report.horizontal.gold.total.mae_deg,
            report.horizontal.gold.total.sd_deg
        ),
    );
    Ok(())
}

pub fn cmd_regress(
    config: &PipelineConfig,
    canonical: &serde_json::Value,
) -> Result<(), CliError> {
    let dataset = load_dataset(config)?;
    let report = load_report_if_present(&config.out_dir)?;
    let analysis = saccade_analysis(config, &dataset, report.as_ref())?;
    let mut tracker = OutputTracker::new(&config.out_dir)?;
    write_regression_outputs(&analysis, &mut tracker)?;
    tracker.finish("regress", canonical, config.seed)
}

pub fn cmd_pipeline(
    config: &PipelineConfig,
    canonical: &serde_json::Value,
) -> Result<(), CliError> {
    let mut tracker = OutputTracker::new(&config.out_dir)?;
    if config.data_dir.is_none() {
        let study = synthesize_study(&config.study_config())?;
        let files = write_study(&study, &config.out_dir.join("data"))?;
        tracker.artifacts.extend(files);
        println!("synthesized {} subjects", study.subjects.len());
    }
    let dataset = load_dataset(config)?;
    println!(
        "loaded {} pursuit trials and {} saccade runs",
        dataset.pursuit.len(),
        dataset.saccade_runs.len()
    );
    let report = rank_both_axes(config, &dataset)?;
    write_montage_outputs(&report, &mut tracker)?;
    println!(
        "top horizontal montage: {}",
        report
            .horizontal
            .montages
            .first()
            .map(|e| e.montage.name())
            .unwrap_or_default()
    );
    let analysis = saccade_analysis(config, &dataset, Some(&report))?;
    write_saccade_outputs(&analysis, &mut tracker)?;
    write_regression_outputs(&analysis, &mut tracker)?;
    tracker.finish("pipeline", canonical, config.seed)
}
