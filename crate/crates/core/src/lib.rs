//! # eargaze — ear-EOG eye tracking analysis
//!
//! Library behind the `eargaze` CLI. It covers the full analysis chain for
//! electrooculography recorded from electrodes placed around the ears:
//!
//! * [`io`] — recordings, gaze logs, electrode layouts, screen geometry and
//!   report files (CSV + JSON formats, see `docs/formats.md`).
//! * [`dsp`] — deterministic signal conditioning: Butterworth bandpass,
//!   detrend, mean filter, normalization, gap filling and resampling.
//! * [`stats`] — Pearson and lagged correlation, Fisher-z aggregation,
//!   Friedman test, Wilcoxon signed-rank, Bonferroni correction.
//! * [`montage`] — enumeration and ranking of axis-aligned electrode pairs
//!   against gold-standard EOG and eye-tracker ground truth.
//! * [`saccade`] — saccade segmentation, average waveforms, voltage
//!   deflections, deflection→angle regression with LOSO cross-validation and
//!   Bland-Altman agreement.
//! * [`synth`] — a corneo-retinal dipole head model that generates gaze
//!   trajectories and multichannel electrode potentials. Synthetic and real
//!   data share the same file formats, so the generator doubles as a
//!   verification oracle for the whole pipeline.
//! * [`pipeline`] — end-to-end study synthesis and analysis runners used by
//!   the CLI.
//!
//! All analysis functions are pure: results are a function of inputs and an
//! explicit RNG seed, and loaded values are immutable, so callers are free to
//! process subjects, trials and montages in parallel.

pub mod dsp;
pub mod error;
pub mod io;
pub mod montage;
pub mod pipeline;
pub mod saccade;
pub mod stats;
pub mod synth;

pub use error::{Error, ErrorCategory, Result};

/// Sample rate of all EOG channels (Hz).
pub const EOG_SAMPLE_RATE_HZ: f64 = 125.0;

/// Nominal sample rate of eye-tracker gaze logs (Hz).
pub const GAZE_SAMPLE_RATE_HZ: f64 = 60.0;

/// Reserved channel label for the horizontal gold-standard EOG pair.
pub const GOLD_HORIZONTAL_LABEL: &str = "hEOG";

/// Reserved channel label for the vertical gold-standard EOG pair.
pub const GOLD_VERTICAL_LABEL: &str = "vEOG";

/// Axis of eye movement an analysis refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Horizontal,
    Vertical,
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Axis::Horizontal => write!(f, "horizontal"),
            Axis::Vertical => write!(f, "vertical"),
        }
    }
}

/// Cardinal saccade direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Left,
    Right,
    Up,
    Down,
}

impl Direction {
    pub fn axis(self) -> Axis {
        match self {
            Direction::Left | Direction::Right => Axis::Horizontal,
            Direction::Up | Direction::Down => Axis::Vertical,
        }
    }

    /// Sign of the angle on this direction's axis (right/up positive).
    pub fn sign(self) -> f64 {
        match self {
            Direction::Right | Direction::Up => 1.0,
            Direction::Left | Direction::Down => -1.0,
        }
    }

    pub fn opposite(self) -> Direction {
        match self {
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Direction::Left => write!(f, "left"),
            Direction::Right => write!(f, "right"),
            Direction::Up => write!(f, "up"),
            Direction::Down => write!(f, "down"),
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(Direction::Left),
            "right" => Ok(Direction::Right),
            "up" => Ok(Direction::Up),
            "down" => Ok(Direction::Down),
            other => Err(Error::invalid_parameter(
                "direction",
                format!("expected left/right/up/down, got '{other}'"),
            )),
        }
    }
}
