//! Data types and file I/O: recordings, gaze logs, electrode layouts, screen
//! geometry and analysis reports.
//!
//! File formats (see also `docs/formats.md`):
//!
//! * Recording CSV: header `timestamp_s,<label>,...`, potentials in µV, with a
//!   sidecar `<name>.meta.json` carrying subject id, sample rate, reference
//!   label and task tag.
//! * Gaze log CSV: header `timestamp_s,gaze_x_px,gaze_y_px`; empty fields mark
//!   missing samples. Pixels are offsets from the screen center, right/up
//!   positive; conversion to visual angles happens at load time against a
//!   [`ScreenGeometry`].
//! * Layout JSON: `{"electrodes":[{"label","x_mm","y_mm","z_mm","side"}]}` in
//!   a head-centered frame (x right, y forward, z up, millimetres).
//!
//! All loaded values are immutable after construction and safe to share
//! across threads.

use std::collections::BTreeMap;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{GOLD_HORIZONTAL_LABEL, GOLD_VERTICAL_LABEL};

/// Channel labels that are always accepted even when absent from the layout:
/// the gold-standard EOG pairs are glued around the eyes, not on the ear
/// rings.
pub const RESERVED_CHANNEL_LABELS: [&str; 2] = [GOLD_HORIZONTAL_LABEL, GOLD_VERTICAL_LABEL];

/// A uniformly sampled scalar series: electrode potentials in µV or gaze
/// angles in degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
}

impl Signal {
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Signal> {
        if !(sample_rate > 0.0) || !sample_rate.is_finite() {
            return Err(Error::NonPositiveSampleRate { value: sample_rate });
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid_parameter(
                "samples",
                format!("non-finite value at index {i}"),
            ));
        }
        Ok(Signal {
            samples,
            sample_rate,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Which ear an electrode belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EarSide {
    Left,
    Right,
}

/// One electrode of a layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Electrode {
    pub label: String,
    /// Head-centered position in mm: x right, y forward, z up.
    pub position: [f64; 3],
    pub side: EarSide,
}

/// 3-D electrode positions around both ears.
#[derive(Debug, Clone, PartialEq)]
pub struct ElectrodeLayout {
    positions: BTreeMap<String, [f64; 3]>,
    sides: BTreeMap<String, EarSide>,
}

impl ElectrodeLayout {
    pub fn new(electrodes: Vec<Electrode>) -> Result<ElectrodeLayout> {
        let mut positions = BTreeMap::new();
        let mut sides = BTreeMap::new();
        for e in &electrodes {
            if positions.insert(e.label.clone(), e.position).is_some() {
                return Err(Error::invalid_parameter(
                    "layout",
                    format!("duplicate electrode label '{}'", e.label),
                ));
            }
            sides.insert(e.label.clone(), e.side);
        }
        let labels: Vec<&String> = positions.keys().collect();
        for i in 0..labels.len() {
            for j in (i + 1)..labels.len() {
                let a = positions[labels[i]];
                let b = positions[labels[j]];
                let d2: f64 = (0..3).map(|k| (a[k] - b[k]).powi(2)).sum();
                if d2 == 0.0 {
                    return Err(Error::invalid_parameter(
                        "layout",
                        format!("electrodes '{}' and '{}' coincide", labels[i], labels[j]),
                    ));
                }
            }
        }
        for side in [EarSide::Left, EarSide::Right] {
            let n = sides.values().filter(|s| **s == side).count();
            if n < 2 {
                return Err(Error::invalid_parameter(
                    "layout",
                    format!("{side:?} ear has {n} electrodes, need at least 2"),
                ));
            }
        }
        Ok(ElectrodeLayout { positions, sides })
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.positions.keys().map(|s| s.as_str())
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn contains(&self, label: &str) -> bool {
        self.positions.contains_key(label)
    }

    pub fn position(&self, label: &str) -> Result<[f64; 3]> {
        self.positions.get(label).copied().ok_or(Error::UnknownLabel {
            label: label.to_string(),
        })
    }

    pub fn side(&self, label: &str) -> Result<EarSide> {
        self.sides.get(label).copied().ok_or(Error::UnknownLabel {
            label: label.to_string(),
        })
    }
}

/// Monitor geometry used to convert on-screen pixels to visual angles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenGeometry {
    pub width_px: u32,
    pub height_px: u32,
    pub pixel_pitch_mm: f64,
    pub viewing_distance_mm: f64,
}

impl ScreenGeometry {
    /// The study's setup: 23" 1920x1080 monitor (0.26 mm/px, so a 30 px dot
    /// is 7.8 mm wide) viewed from 50 cm.
    pub fn study_default() -> ScreenGeometry {
        ScreenGeometry {
            width_px: 1920,
            height_px: 1080,
            pixel_pitch_mm: 0.26,
            viewing_distance_mm: 500.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width_px == 0 || self.height_px == 0 {
            return Err(Error::invalid_parameter("screen", "zero width or height"));
        }
        for (name, v) in [
            ("pixel_pitch_mm", self.pixel_pitch_mm),
            ("viewing_distance_mm", self.viewing_distance_mm),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid_parameter(
                    "screen",
                    format!("{name} must be positive, got {v}"),
                ));
            }
        }
        Ok(())
    }
}

/// Convert a pixel offset from the screen center to visual angles in degrees.
///
/// `point_px` is (x, y) with x right and y up; the returned angles are signed
/// the same way. Per axis: `angle = atan(offset_px * pitch / distance)`.
pub fn pixels_to_visual_angle(point_px: (f64, f64), geom: &ScreenGeometry) -> (f64, f64) {
    let to_deg = |px: f64| {
        (px * geom.pixel_pitch_mm / geom.viewing_distance_mm)
            .atan()
            .to_degrees()
    };
    (to_deg(point_px.0), to_deg(point_px.1))
}

/// Inverse of [`pixels_to_visual_angle`].
pub fn visual_angle_to_pixels(angle_deg: (f64, f64), geom: &ScreenGeometry) -> (f64, f64) {
    let to_px = |deg: f64| deg.to_radians().tan() * geom.viewing_distance_mm / geom.pixel_pitch_mm;
    (to_px(angle_deg.0), to_px(angle_deg.1))
}

/// Ground-truth gaze angles over time, as recorded by an eye tracker.
///
/// Missing samples stay `None` so interpolation is an explicit downstream
/// step ([`crate::dsp::fill_and_resample`]).
#[derive(Debug, Clone, PartialEq)]
pub struct GazeLog {
    /// Seconds; strictly increasing.
    pub timestamps: Vec<f64>,
    /// Horizontal gaze angle in degrees, right positive.
    pub horizontal: Vec<Option<f64>>,
    /// Vertical gaze angle in degrees, up positive.
    pub vertical: Vec<Option<f64>>,
    pub nominal_rate: f64,
}

impl GazeLog {
    pub fn new(
        timestamps: Vec<f64>,
        horizontal: Vec<Option<f64>>,
        vertical: Vec<Option<f64>>,
        nominal_rate: f64,
    ) -> Result<GazeLog> {
        if !(nominal_rate > 0.0) || !nominal_rate.is_finite() {
            return Err(Error::NonPositiveSampleRate {
                value: nominal_rate,
            });
        }
        if horizontal.len() != timestamps.len() || vertical.len() != timestamps.len() {
            return Err(Error::invalid_parameter(
                "gaze_log",
                "timestamps and angle sequences differ in length",
            ));
        }
        for (i, w) in timestamps.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(Error::NonMonotoneTimestamps { row: i + 1 });
            }
        }
        for axis in [&horizontal, &vertical] {
            if let Some(i) = axis.iter().position(|v| v.map_or(false, |x| !x.is_finite())) {
                return Err(Error::invalid_parameter(
                    "gaze_log",
                    format!("non-finite angle at index {i}"),
                ));
            }
        }
        Ok(GazeLog {
            timestamps,
            horizontal,
            vertical,
            nominal_rate,
        })
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }
}

/// A multichannel potential recording with one shared sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub subject_id: String,
    pub sample_rate: f64,
    channels: BTreeMap<String, Vec<f64>>,
    pub reference_label: String,
    pub task_tag: String,
}

impl Recording {
    /// Validates that all channels share one length, labels are unique and
    /// known to the layout (or reserved gold-EOG labels), and the reference
    /// label does not itself appear among the differential outputs.
    pub fn new(
        subject_id: impl Into<String>,
        sample_rate: f64,
        channels: BTreeMap<String, Vec<f64>>,
        reference_label: impl Into<String>,
        task_tag: impl Into<String>,
        layout: &ElectrodeLayout,
    ) -> Result<Recording> {
        if !(sample_rate > 0.0) || !sample_rate.is_finite() {
            return Err(Error::NonPositiveSampleRate { value: sample_rate });
        }
        let reference_label = reference_label.into();
        let mut len: Option<usize> = None;
        for (label, samples) in &channels {
            if !layout.contains(label) && !RESERVED_CHANNEL_LABELS.contains(&label.as_str()) {
                return Err(Error::UnknownLabel {
                    label: label.clone(),
                });
            }
            match len {
                None => len = Some(samples.len()),
                Some(n) if n != samples.len() => {
                    return Err(Error::InconsistentChannels {
                        detail: format!(
                            "channel '{label}' has {} samples, expected {n}",
                            samples.len()
                        ),
                    })
                }
                _ => {}
            }
            if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
                return Err(Error::invalid_parameter(
                    "channels",
                    format!("non-finite sample in channel '{label}' at index {i}"),
                ));
            }
        }
        if channels.contains_key(&reference_label) {
            return Err(Error::InconsistentChannels {
                detail: format!(
                    "reference label '{reference_label}' must not appear among channels"
                ),
            });
        }
        Ok(Recording {
            subject_id: subject_id.into(),
            sample_rate,
            channels,
            reference_label,
            task_tag: task_tag.into(),
        })
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.channels.keys().map(|s| s.as_str())
    }

    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn n_samples(&self) -> usize {
        self.channels.values().next().map_or(0, |v| v.len())
    }

    pub fn channel(&self, label: &str) -> Result<&[f64]> {
        self.channels
            .get(label)
            .map(|v| v.as_slice())
            .ok_or(Error::UnknownLabel {
                label: label.to_string(),
            })
    }

    pub fn channel_signal(&self, label: &str) -> Result<Signal> {
        Ok(Signal {
            samples: self.channel(label)?.to_vec(),
            sample_rate: self.sample_rate,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RecordingMeta {
    subject_id: String,
    sample_rate_hz: f64,
    reference_label: String,
    task_tag: String,
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn meta_path(path: &Path) -> std::path::PathBuf {
    path.with_extension("meta.json")
}

/// Load a recording CSV plus its `<name>.meta.json` sidecar.
pub fn load_recording(path: &Path, layout: &ElectrodeLayout) -> Result<Recording> {
    let meta_file = meta_path(path);
    let meta_text = std::fs::read_to_string(&meta_file).map_err(|e| io_err(&meta_file, e))?;
    let meta: RecordingMeta = serde_json::from_str(&meta_text).map_err(|e| Error::Json {
        path: meta_file.clone(),
        detail: e.to_string(),
    })?;
    if !(meta.sample_rate_hz > 0.0) || !meta.sample_rate_hz.is_finite() {
        return Err(Error::NonPositiveSampleRate {
            value: meta.sample_rate_hz,
        });
    }

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error("recording", path, 0, e))?;
    let headers = reader
        .headers()
        .map_err(|e| csv_error("recording", path, 0, e))?
        .clone();
    if headers.is_empty() || headers.get(0) != Some("timestamp_s") {
        return Err(Error::MalformedFile {
            what: "recording",
            path: path.to_path_buf(),
            row: 0,
            detail: "first column must be 'timestamp_s'".into(),
        });
    }
    let labels: Vec<String> = headers.iter().skip(1).map(|s| s.to_string()).collect();
    for label in &labels {
        if !layout.contains(label) && !RESERVED_CHANNEL_LABELS.contains(&label.as_str()) {
            return Err(Error::UnknownLabel {
                label: label.clone(),
            });
        }
    }

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); labels.len()];
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error("recording", path, row_idx + 1, e))?;
        if record.len() != labels.len() + 1 {
            return Err(Error::InconsistentChannels {
                detail: format!(
                    "row {} has {} fields, expected {}",
                    row_idx + 1,
                    record.len(),
                    labels.len() + 1
                ),
            });
        }
        for (c, field) in record.iter().skip(1).enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| Error::MalformedFile {
                what: "recording",
                path: path.to_path_buf(),
                row: row_idx + 1,
                detail: format!("cannot parse '{field}' as a potential"),
            })?;
            columns[c].push(v);
        }
    }

    let channels: BTreeMap<String, Vec<f64>> = labels.into_iter().zip(columns).collect();
    Recording::new(
        meta.subject_id,
        meta.sample_rate_hz,
        channels,
        meta.reference_label,
        meta.task_tag,
        layout,
    )
}

fn csv_error(what: &'static str, path: &Path, row: usize, e: csv::Error) -> Error {
    if matches!(e.kind(), csv::ErrorKind::UnequalLengths { .. }) {
        return Error::InconsistentChannels {
            detail: format!("{what} rows differ in field count: {e}"),
        };
    }
    Error::MalformedFile {
        what,
        path: path.to_path_buf(),
        row,
        detail: e.to_string(),
    }
}

/// Write a recording as CSV plus its metadata sidecar.
pub fn write_recording(rec: &Recording, path: &Path) -> Result<()> {
    let meta = RecordingMeta {
        subject_id: rec.subject_id.clone(),
        sample_rate_hz: rec.sample_rate,
        reference_label: rec.reference_label.clone(),
        task_tag: rec.task_tag.clone(),
    };
    let meta_file = meta_path(path);
    let meta_text = serde_json::to_string_pretty(&meta).expect("meta serializes");
    std::fs::write(&meta_file, meta_text + "\n").map_err(|e| io_err(&meta_file, e))?;

    let mut out = String::new();
    out.push_str("timestamp_s");
    let labels: Vec<&str> = rec.labels().collect();
    for label in &labels {
        out.push(',');
        out.push_str(label);
    }
    out.push('\n');
    for i in 0..rec.n_samples() {
        out.push_str(&format!("{}", i as f64 / rec.sample_rate));
        for label in &labels {
            out.push(',');
            out.push_str(&format!("{}", rec.channel(label).expect("label exists")[i]));
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Load a gaze log CSV, converting center-relative pixels to visual angles.
///
/// Empty fields become gaps. The nominal rate is estimated from the timestamp
/// span.
pub fn load_gaze_log(path: &Path, geom: &ScreenGeometry) -> Result<GazeLog> {
    geom.validate()?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error("gaze log", path, 0, e))?;
    let headers = reader
        .headers()
        .map_err(|e| csv_error("gaze log", path, 0, e))?
        .clone();
    let expected = ["timestamp_s", "gaze_x_px", "gaze_y_px"];
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(Error::MalformedFile {
            what: "gaze log",
            path: path.to_path_buf(),
            row: 0,
            detail: format!("header must be {expected:?}, got {got:?}"),
        });
    }

    let mut timestamps = Vec::new();
    let mut horizontal = Vec::new();
    let mut vertical = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error("gaze log", path, row_idx + 1, e))?;
        let parse_opt = |field: &str| -> Result<Option<f64>> {
            let t = field.trim();
            if t.is_empty() {
                return Ok(None);
            }
            t.parse::<f64>().map(Some).map_err(|_| Error::MalformedFile {
                what: "gaze log",
                path: path.to_path_buf(),
                row: row_idx + 1,
                detail: format!("cannot parse '{field}'"),
            })
        };
        let ts: f64 = record
            .get(0)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| Error::MalformedFile {
                what: "gaze log",
                path: path.to_path_buf(),
                row: row_idx + 1,
                detail: "cannot parse timestamp".into(),
            })?;
        let x_px = parse_opt(record.get(1).unwrap_or(""))?;
        let y_px = parse_opt(record.get(2).unwrap_or(""))?;
        timestamps.push(ts);
        horizontal.push(x_px.map(|px| pixels_to_visual_angle((px, 0.0), geom).0));
        vertical.push(y_px.map(|px| pixels_to_visual_angle((0.0, px), geom).1));
    }

    let nominal_rate = if timestamps.len() >= 2 {
        let span = timestamps[timestamps.len() - 1] - timestamps[0];
        if span > 0.0 {
            (timestamps.len() - 1) as f64 / span
        } else {
            return Err(Error::NonMonotoneTimestamps { row: 1 });
        }
    } else {
        crate::GAZE_SAMPLE_RATE_HZ
    };
    GazeLog::new(timestamps, horizontal, vertical, nominal_rate)
}

/// Write a gaze log as CSV, converting visual angles back to pixels.
pub fn write_gaze_log(log: &GazeLog, geom: &ScreenGeometry, path: &Path) -> Result<()> {
    geom.validate()?;
    let mut out = String::from("timestamp_s,gaze_x_px,gaze_y_px\n");
    for i in 0..log.len() {
        out.push_str(&format!("{}", log.timestamps[i]));
        out.push(',');
        if let Some(deg) = log.horizontal[i] {
            out.push_str(&format!("{}", visual_angle_to_pixels((deg, 0.0), geom).0));
        }
        out.push(',');
        if let Some(deg) = log.vertical[i] {
            out.push_str(&format!("{}", visual_angle_to_pixels((0.0, deg), geom).1));
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| io_err(path, e))
}

#[derive(Debug, Serialize, Deserialize)]
struct LayoutFile {
    electrodes: Vec<ElectrodeRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ElectrodeRecord {
    label: String,
    x_mm: f64,
    y_mm: f64,
    z_mm: f64,
    side: EarSide,
}

pub fn load_layout(path: &Path) -> Result<ElectrodeLayout> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let file: LayoutFile = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })?;
    ElectrodeLayout::new(
        file.electrodes
            .into_iter()
            .map(|r| Electrode {
                label: r.label,
                position: [r.x_mm, r.y_mm, r.z_mm],
                side: r.side,
            })
            .collect(),
    )
}

pub fn write_layout(layout: &ElectrodeLayout, path: &Path) -> Result<()> {
    let file = LayoutFile {
        electrodes: layout
            .labels()
            .map(|label| {
                let p = layout.position(label).expect("label exists");
                ElectrodeRecord {
                    label: label.to_string(),
                    x_mm: p[0],
                    y_mm: p[1],
                    z_mm: p[2],
                    side: layout.side(label).expect("label exists"),
                }
            })
            .collect(),
    };
    let text = serde_json::to_string_pretty(&file).expect("layout serializes");
    std::fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

pub fn load_screen_geometry(path: &Path) -> Result<ScreenGeometry> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let geom: ScreenGeometry = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })?;
    geom.validate()?;
    Ok(geom)
}

pub fn write_screen_geometry(geom: &ScreenGeometry, path: &Path) -> Result<()> {
    geom.validate()?;
    let text = serde_json::to_string_pretty(geom).expect("geometry serializes");
    std::fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

/// Write any report as pretty-printed JSON.
///
/// Floats use the shortest representation that parses back bit-identically,
/// so re-loading a report reproduces it exactly.
pub fn write_report<T: Serialize>(report: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(report).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })?;
    std::fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

pub fn read_report<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn tiny_layout() -> ElectrodeLayout {
        ElectrodeLayout::new(vec![
            Electrode {
                label: "L1".into(),
                position: [-75.0, 40.0, 0.0],
                side: EarSide::Left,
            },
            Electrode {
                label: "L2".into(),
                position: [-75.0, -40.0, 0.0],
                side: EarSide::Left,
            },
            Electrode {
                label: "R1".into(),
                position: [75.0, 40.0, 0.0],
                side: EarSide::Right,
            },
            Electrode {
                label: "R2".into(),
                position: [75.0, -40.0, 0.0],
                side: EarSide::Right,
            },
        ])
        .unwrap()
    }

    #[test]
    fn center_pixel_maps_to_zero_angle() {
        let geom = ScreenGeometry::study_default();
        assert_eq!(pixels_to_visual_angle((0.0, 0.0), &geom), (0.0, 0.0));
    }

    #[test]
    fn thirty_pixels_at_study_geometry() {
        // 30 px * 0.26 mm/px = 7.8 mm at 500 mm viewing distance.
        let geom = ScreenGeometry::study_default();
        let (h, v) = pixels_to_visual_angle((30.0, 0.0), &geom);
        let oracle = (7.8_f64 / 500.0).atan().to_degrees();
        assert_abs_diff_eq!(h, oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(h, 0.8937, epsilon = 1e-4);
        assert_eq!(v, 0.0);
    }

    #[test]
    fn fifteen_degrees_round_trips() {
        let geom = ScreenGeometry::study_default();
        let px = visual_angle_to_pixels((15.0, 0.0), &geom).0;
        let oracle = 500.0 * 15.0_f64.to_radians().tan() / 0.26;
        assert_abs_diff_eq!(px, oracle, epsilon = 1e-9);
        assert_abs_diff_eq!(px, 515.3, epsilon = 0.1);
        let back = pixels_to_visual_angle((px, 0.0), &geom).0;
        assert_abs_diff_eq!(back, 15.0, epsilon = 1e-9);
    }

    proptest! {
        #[test]
        fn pixel_conversion_is_odd(px in -2000.0..2000.0f64) {
            let geom = ScreenGeometry::study_default();
            let pos = pixels_to_visual_angle((px, px), &geom);
            let neg = pixels_to_visual_angle((-px, -px), &geom);
            prop_assert!((pos.0 + neg.0).abs() < 1e-12);
            prop_assert!((pos.1 + neg.1).abs() < 1e-12);
        }

        #[test]
        fn pixel_conversion_is_monotone(a in -2000.0..2000.0f64, b in -2000.0..2000.0f64) {
            let geom = ScreenGeometry::study_default();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let va = pixels_to_visual_angle((lo, 0.0), &geom).0;
            let vb = pixels_to_visual_angle((hi, 0.0), &geom).0;
            prop_assert!(va <= vb);
        }
    }

    #[test]
    fn recording_round_trip() {
        let layout = tiny_layout();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rec.csv");
        let mut channels = BTreeMap::new();
        channels.insert("L1".into(), vec![1.0, 2.5, -3.125, 0.0]);
        channels.insert("R1".into(), vec![0.25, -1.0, 7.0, 2.0]);
        let rec = Recording::new("S01", 125.0, channels, "REF", "pursuit", &layout).unwrap();
        write_recording(&rec, &path).unwrap();
        let loaded = load_recording(&path, &layout).unwrap();
        assert_eq!(loaded, rec);
        assert_eq!(loaded.n_channels(), 2);
        assert_eq!(loaded.n_samples(), 4);
    }

    proptest! {
        #[test]
        fn recording_round_trips_for_arbitrary_values(
            a in proptest::collection::vec(-1e6..1e6f64, 1..40),
            rate in 1.0..2000.0f64,
        ) {
            let layout = tiny_layout();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("rec.csv");
            let b: Vec<f64> = a.iter().map(|v| v / 3.0).collect();
            let mut channels = BTreeMap::new();
            channels.insert("L1".into(), a);
            channels.insert("R2".into(), b);
            let rec = Recording::new("P", rate, channels, "REF", "tag", &layout).unwrap();
            write_recording(&rec, &path).unwrap();
            let loaded = load_recording(&path, &layout).unwrap();
            prop_assert_eq!(loaded, rec);
        }
    }

    #[test]
    fn unknown_label_is_rejected() {
        let layout = tiny_layout();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rec.csv");
        std::fs::write(&path, "timestamp_s,L9\n0.0,1.0\n").unwrap();
        std::fs::write(
            meta_path(&path),
            r#"{"subject_id":"S01","sample_rate_hz":125.0,"reference_label":"REF","task_tag":"t"}"#,
        )
        .unwrap();
        match load_recording(&path, &layout) {
            Err(Error::UnknownLabel { label }) => assert_eq!(label, "L9"),
            other => panic!("expected UnknownLabel, got {other:?}"),
        }
    }

    #[test]
    fn ragged_rows_are_an_inconsistency() {
        let layout = tiny_layout();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rec.csv");
        std::fs::write(&path, "timestamp_s,L1,R1\n0.0,1.0,2.0\n0.008,1.0\n").unwrap();
        std::fs::write(
            meta_path(&path),
            r#"{"subject_id":"S01","sample_rate_hz":125.0,"reference_label":"REF","task_tag":"t"}"#,
        )
        .unwrap();
        assert!(matches!(
            load_recording(&path, &layout),
            Err(Error::InconsistentChannels { .. })
        ));
    }

    #[test]
    fn non_positive_sample_rate_is_rejected() {
        let layout = tiny_layout();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rec.csv");
        std::fs::write(&path, "timestamp_s,L1\n0.0,1.0\n").unwrap();
        std::fs::write(
            meta_path(&path),
            r#"{"subject_id":"S01","sample_rate_hz":0.0,"reference_label":"REF","task_tag":"t"}"#,
        )
        .unwrap();
        assert!(matches!(
            load_recording(&path, &layout),
            Err(Error::NonPositiveSampleRate { .. })
        ));
    }

    #[test]
    fn reference_label_must_not_be_a_channel() {
        let layout = tiny_layout();
        let mut channels = BTreeMap::new();
        channels.insert("L1".into(), vec![1.0]);
        let err = Recording::new("S01", 125.0, channels, "L1", "t", &layout).unwrap_err();
        assert!(matches!(err, Error::InconsistentChannels { .. }));
    }

    #[test]
    fn gaze_log_without_gaps() {
        let geom = ScreenGeometry::study_default();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gaze.csv");
        std::fs::write(
            &path,
            "timestamp_s,gaze_x_px,gaze_y_px\n0.0,0.0,0.0\n0.016,30.0,0.0\n0.033,60.0,0.0\n",
        )
        .unwrap();
        let log = load_gaze_log(&path, &geom).unwrap();
        assert_eq!(log.len(), 3);
        assert!(log.horizontal.iter().all(|v| v.is_some()));
        assert_abs_diff_eq!(log.horizontal[1].unwrap(), 0.8937, epsilon = 1e-4);
    }

    #[test]
    fn empty_fields_become_gaps() {
        let geom = ScreenGeometry::study_default();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gaze.csv");
        std::fs::write(
            &path,
            "timestamp_s,gaze_x_px,gaze_y_px\n0.0,0.0,0.0\n0.016,,\n0.033,60.0,1.0\n",
        )
        .unwrap();
        let log = load_gaze_log(&path, &geom).unwrap();
        assert_eq!(log.horizontal[1], None);
        assert_eq!(log.vertical[1], None);
        assert!(log.horizontal[2].is_some());
    }

    #[test]
    fn duplicate_timestamps_are_rejected() {
        let geom = ScreenGeometry::study_default();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gaze.csv");
        std::fs::write(
            &path,
            "timestamp_s,gaze_x_px,gaze_y_px\n0.0,0.0,0.0\n0.0,1.0,1.0\n",
        )
        .unwrap();
        assert!(matches!(
            load_gaze_log(&path, &geom),
            Err(Error::NonMonotoneTimestamps { .. })
        ));
    }

    #[test]
    fn gaze_log_round_trips_within_float_error() {
        let geom = ScreenGeometry::study_default();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gaze.csv");
        let log = GazeLog::new(
            vec![0.0, 0.0167, 0.0333, 0.05],
            vec![Some(1.5), None, Some(-3.25), Some(0.0)],
            vec![Some(0.0), Some(2.0), None, Some(-1.0)],
            60.0,
        )
        .unwrap();
        write_gaze_log(&log, &geom, &path).unwrap();
        let loaded = load_gaze_log(&path, &geom).unwrap();
        assert_eq!(loaded.len(), log.len());
        for i in 0..log.len() {
            match (log.horizontal[i], loaded.horizontal[i]) {
                (Some(a), Some(b)) => assert_abs_diff_eq!(a, b, epsilon = 1e-9),
                (None, None) => {}
                other => panic!("gap mismatch at {i}: {other:?}"),
            }
        }
    }

    #[test]
    fn layout_round_trip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("layout.json");
        let layout = tiny_layout();
        write_layout(&layout, &path).unwrap();
        let loaded = load_layout(&path).unwrap();
        assert_eq!(loaded, layout);

        // Coincident electrodes are rejected.
        let bad = ElectrodeLayout::new(vec![
            Electrode {
                label: "A".into(),
                position: [0.0, 0.0, 0.0],
                side: EarSide::Left,
            },
            Electrode {
                label: "B".into(),
                position: [0.0, 0.0, 0.0],
                side: EarSide::Left,
            },
            Electrode {
                label: "C".into(),
                position: [1.0, 0.0, 0.0],
                side: EarSide::Right,
            },
            Electrode {
                label: "D".into(),
                position: [2.0, 0.0, 0.0],
                side: EarSide::Right,
            },
        ]);
        assert!(bad.is_err());
    }

    #[test]
    fn unwritable_report_path_is_an_io_error() {
        let err = write_report(&serde_json::json!({"x": 1}), Path::new("/nonexistent/dir/r.json"))
            .unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn report_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        let value = serde_json::json!({
            "name": "fixture",
            "values": [0.1, 0.25, 1e-12, 123456.789012345],
        });
        write_report(&value, &path).unwrap();
        let loaded: serde_json::Value = read_report(&path).unwrap();
        assert_eq!(loaded, value);
    }
}
