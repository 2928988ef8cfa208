//! Gaze trajectory generators for the study protocols, plus the protocol
//! event annotations that drive saccade analysis.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;

use crate::error::{Error, Result};
use crate::{Axis, Direction, EOG_SAMPLE_RATE_HZ};

/// One annotated saccade of a protocol: the gaze jumps to a new fixation at
/// `jump_idx`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ProtocolEvent {
    pub saccade_id: usize,
    /// Direction of the gaze shift itself (a return from a left fixation
    /// moves right).
    pub direction: Direction,
    /// Magnitude of the fixation offset from center, degrees.
    pub target_angle_deg: f64,
    /// Center-to-target saccade; returns to center carry `false`.
    pub outward: bool,
    /// First sample index at the new fixation value.
    pub jump_idx: usize,
}

/// Ground-truth gaze angles over time with optional protocol annotations.
#[derive(Debug, Clone, PartialEq)]
pub struct GazeTrajectory {
    pub sample_rate: f64,
    /// Degrees, right positive.
    pub horizontal: Vec<f64>,
    /// Degrees, up positive.
    pub vertical: Vec<f64>,
    pub events: Vec<ProtocolEvent>,
}

impl GazeTrajectory {
    pub fn new(
        sample_rate: f64,
        horizontal: Vec<f64>,
        vertical: Vec<f64>,
        events: Vec<ProtocolEvent>,
    ) -> Result<GazeTrajectory> {
        if !(sample_rate > 0.0) {
            return Err(Error::NonPositiveSampleRate { value: sample_rate });
        }
        if horizontal.len() != vertical.len() {
            return Err(Error::invalid_parameter(
                "trajectory",
                "axis sequences differ in length",
            ));
        }
        for axis in [&horizontal, &vertical] {
            if let Some(v) = axis.iter().find(|v| !v.is_finite() || v.abs() > 90.0) {
                return Err(Error::invalid_parameter(
                    "trajectory",
                    format!("gaze angle out of range: {v}"),
                ));
            }
        }
        for e in &events {
            if e.jump_idx >= horizontal.len() {
                return Err(Error::invalid_parameter(
                    "trajectory",
                    format!("event jump index {} out of bounds", e.jump_idx),
                ));
            }
        }
        Ok(GazeTrajectory {
            sample_rate,
            horizontal,
            vertical,
            events,
        })
    }

    pub fn len(&self) -> usize {
        self.horizontal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.horizontal.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.sample_rate
    }

    pub fn axis(&self, axis: Axis) -> &[f64] {
        match axis {
            Axis::Horizontal => &self.horizontal,
            Axis::Vertical => &self.vertical,
        }
    }
}

/// Smooth pursuit: simple harmonic motion `A * sin(2*pi*f*t + phi0)` on one
/// axis, zero on the other, at the EOG rate. The start phase is drawn
/// uniformly from the seed, mirroring the randomized start position of the
/// on-screen target.
pub fn pursuit_trajectory(
    amplitude_deg: f64,
    frequency_hz: f64,
    duration_s: f64,
    axis: Axis,
    phase_seed: u64,
) -> Result<GazeTrajectory> {
    let mut rng = ChaCha8Rng::seed_from_u64(phase_seed);
    let phase = rng.random::<f64>() * std::f64::consts::TAU;
    pursuit_trajectory_with_phase(amplitude_deg, frequency_hz, duration_s, axis, phase)
}

/// As [`pursuit_trajectory`] but with an explicit start phase in radians.
pub fn pursuit_trajectory_with_phase(
    amplitude_deg: f64,
    frequency_hz: f64,
    duration_s: f64,
    axis: Axis,
    phase: f64,
) -> Result<GazeTrajectory> {
    if !(amplitude_deg > 0.0 && amplitude_deg < 90.0) {
        return Err(Error::invalid_parameter(
            "amplitude_deg",
            format!("must lie in (0, 90), got {amplitude_deg}"),
        ));
    }
    if !(frequency_hz > 0.0) {
        return Err(Error::invalid_parameter("frequency_hz", "must be positive"));
    }
    if !(duration_s > 0.0) {
        return Err(Error::invalid_parameter("duration_s", "must be positive"));
    }
    let fs = EOG_SAMPLE_RATE_HZ;
    let n = (duration_s * fs).round() as usize;
    let moving: Vec<f64> = (0..n)
        .map(|k| {
            let t = k as f64 / fs;
            amplitude_deg * (std::f64::consts::TAU * frequency_hz * t + phase).sin()
        })
        .collect();
    let still = vec![0.0; n];
    let (horizontal, vertical) = match axis {
        Axis::Horizontal => (moving, still),
        Axis::Vertical => (still, moving),
    };
    GazeTrajectory::new(fs, horizontal, vertical, Vec::new())
}

/// The fixation-jump protocol: rest at center, then for every direction and
/// angle jump out, fixate, and return to center. Every saccade (outward and
/// return) is annotated.
pub fn saccade_protocol(
    angles_deg: &[f64],
    directions: &[Direction],
    fixation_s: f64,
    rest_s: f64,
) -> Result<GazeTrajectory> {
    if angles_deg.is_empty() || directions.is_empty() {
        return Err(Error::invalid_parameter(
            "protocol",
            "need at least one angle and one direction",
        ));
    }
    for &a in angles_deg {
        if !(a > 0.0 && a <= 90.0) {
            return Err(Error::invalid_parameter(
                "angles_deg",
                format!("angles must lie in (0, 90], got {a}"),
            ));
        }
    }
    if !(fixation_s > 0.0) || !(rest_s > 0.0) {
        return Err(Error::invalid_parameter(
            "durations",
            "fixation and rest durations must be positive",
        ));
    }
    let fs = EOG_SAMPLE_RATE_HZ;
    let n_fix = (fixation_s * fs).round() as usize;
    let n_rest = (rest_s * fs).round() as usize;

    let mut horizontal = Vec::new();
    let mut vertical = Vec::new();
    let mut events = Vec::new();
    let push_hold = |h: &mut Vec<f64>, v: &mut Vec<f64>, hv: f64, vv: f64, n: usize| {
        h.extend(std::iter::repeat(hv).take(n));
        v.extend(std::iter::repeat(vv).take(n));
    };

    push_hold(&mut horizontal, &mut vertical, 0.0, 0.0, n_rest);
    let mut saccade_id = 0;
    for &dir in directions {
        for &angle in angles_deg {
            let (hv, vv) = match dir.axis() {
                Axis::Horizontal => (dir.sign() * angle, 0.0),
                Axis::Vertical => (0.0, dir.sign() * angle),
            };
            events.push(ProtocolEvent {
                saccade_id,
                direction: dir,
                target_angle_deg: angle,
                outward: true,
                jump_idx: horizontal.len(),
            });
            saccade_id += 1;
            push_hold(&mut horizontal, &mut vertical, hv, vv, n_fix);
            events.push(ProtocolEvent {
                saccade_id,
                direction: dir.opposite(),
                target_angle_deg: angle,
                outward: false,
                jump_idx: horizontal.len(),
            });
            saccade_id += 1;
            push_hold(&mut horizontal, &mut vertical, 0.0, 0.0, n_rest);
        }
    }
    GazeTrajectory::new(fs, horizontal, vertical, events)
}

/// Write protocol annotations as a CSV sidecar so analysis on loaded data can
/// locate the saccade windows.
pub fn write_protocol_events(events: &[ProtocolEvent], path: &Path) -> Result<()> {
    let mut out = String::from("saccade_id,direction,target_angle_deg,outward,jump_idx\n");
    for e in events {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            e.saccade_id, e.direction, e.target_angle_deg, e.outward, e.jump_idx
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn load_protocol_events(path: &Path) -> Result<Vec<ProtocolEvent>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::MalformedFile {
            what: "protocol events",
            path: path.to_path_buf(),
            row: 0,
            detail: e.to_string(),
        })?;
    let mut events = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::MalformedFile {
            what: "protocol events",
            path: path.to_path_buf(),
            row: row_idx + 1,
            detail: e.to_string(),
        })?;
        let field = |i: usize| record.get(i).unwrap_or("").trim().to_string();
        let malformed = |detail: String| Error::MalformedFile {
            what: "protocol events",
            path: path.to_path_buf(),
            row: row_idx + 1,
            detail,
        };
        events.push(ProtocolEvent {
            saccade_id: field(0)
                .parse()
                .map_err(|_| malformed("bad saccade_id".into()))?,
            direction: field(1).parse()?,
            target_angle_deg: field(2)
                .parse()
                .map_err(|_| malformed("bad target_angle_deg".into()))?,
            outward: field(3)
                .parse()
                .map_err(|_| malformed("bad outward flag".into()))?,
            jump_idx: field(4)
                .parse()
                .map_err(|_| malformed("bad jump_idx".into()))?,
        });
    }
    Ok(events)
}
