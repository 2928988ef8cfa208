//! Synthetic signal generation from a corneo-retinal dipole head model.
//!
//! Each eye is modeled as a point dipole oriented along the gaze direction;
//! an electrode at displacement `r` from an eye sees `V = k * (p_hat .
//! r_hat) / |r|^2`. This deliberately ignores tissue conductivity: it is the
//! simplest model that reproduces the qualitative structure the analyses
//! depend on (amplitude grows toward the eyes, horizontal movements dominate
//! vertical ones at ear level), and a single scalar moment `k` is calibrated
//! so a 15 degree horizontal saccade deflects the eye-level cross-ear
//! montage by about 40 µV.
//!
//! Everything here is a pure function of inputs and the explicit RNG seed.

mod trajectory;

pub use trajectory::{
    load_protocol_events, pursuit_trajectory, pursuit_trajectory_with_phase, saccade_protocol,
    write_protocol_events, GazeTrajectory, ProtocolEvent,
};

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::io::{EarSide, Electrode, ElectrodeLayout, GazeLog, Recording};
use crate::{
    EOG_SAMPLE_RATE_HZ, GAZE_SAMPLE_RATE_HZ, GOLD_HORIZONTAL_LABEL, GOLD_VERTICAL_LABEL,
};

type Vec3 = [f64; 3];

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// Anthropometric defaults, mm (study means).
pub const DEFAULT_INTER_EYE_INNER_MM: f64 = 31.6;
pub const DEFAULT_INTER_EYE_OUTER_MM: f64 = 105.3;
pub const DEFAULT_EYE_TO_FRONTAL_ELECTRODE_MM: f64 = 52.2;

/// Ear-canal half spacing (mm); a typical head breadth is assumed.
pub const EAR_HALF_SPACING_MM: f64 = 75.0;

/// Radius of the electrode ring around each ear canal (mm).
pub const RING_RADIUS_MM: f64 = 40.0;

/// Deflection scale the dipole moment is calibrated to: a 15 degree
/// rightward saccade on the eye-level cross-ear montage.
pub const CALIBRATION_DEFLECTION_UV: f64 = 40.16;
pub const CALIBRATION_ANGLE_DEG: f64 = 15.0;

/// Labels of the front eye-level ring electrodes (the calibration montage).
pub const FRONT_EYE_LEVEL_LEFT: &str = "L3";
pub const FRONT_EYE_LEVEL_RIGHT: &str = "R3";

/// Reference electrode label used by the simulator; it has no channel of its
/// own and is not part of the ring layout.
pub const REFERENCE_LABEL: &str = "REF";

/// Ring angles per label, degrees in the (y, z) plane: 0 = front at eye
/// level, 90 = top, 180 = back, 270 = bottom. The assignment keeps the
/// montage families used by the analyses axis-aligned: L1-L4 and R5-R8 are
/// horizontal chords, L1-L8, L2-L7 and L4-L5 are vertical chords.
const RING_ANGLES_DEG: [(u8, f64); 8] = [
    (1, 45.0),
    (2, 90.0),
    (3, 0.0),
    (4, 135.0),
    (5, 225.0),
    (6, 180.0),
    (7, 270.0),
    (8, 315.0),
];

/// The default headphone layout: 8 electrodes per ear, evenly spaced on a
/// 40 mm ring around each ear canal, two of them at eye level (front/back).
pub fn ear_ring_layout() -> ElectrodeLayout {
    let mut electrodes = Vec::with_capacity(16);
    for (side, x, prefix) in [
        (EarSide::Left, -EAR_HALF_SPACING_MM, "L"),
        (EarSide::Right, EAR_HALF_SPACING_MM, "R"),
    ] {
        for (idx, angle_deg) in RING_ANGLES_DEG {
            let a = angle_deg.to_radians();
            electrodes.push(Electrode {
                label: format!("{prefix}{idx}"),
                position: [x, RING_RADIUS_MM * a.cos(), RING_RADIUS_MM * a.sin()],
                side,
            });
        }
    }
    ElectrodeLayout::new(electrodes).expect("default ring layout is valid")
}

/// Positions of the four gold-standard electrodes glued around the left eye.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldElectrodes {
    pub horizontal_plus: Vec3,
    pub horizontal_minus: Vec3,
    pub vertical_plus: Vec3,
    pub vertical_minus: Vec3,
}

/// Dipole head model: eye positions, dipole strength, electrode layout and
/// the anthropometric distances the geometry was derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadModel {
    /// [left, right] eye centers, mm.
    pub eye_centers: [Vec3; 2],
    /// Dipole strength, µV*mm^2.
    pub dipole_moment: f64,
    pub layout: ElectrodeLayout,
    pub inter_eye_inner_mm: f64,
    pub inter_eye_outer_mm: f64,
    pub eye_to_frontal_electrode_mm: f64,
    pub reference_label: String,
    pub reference_position: Vec3,
    pub gold: GoldElectrodes,
}

impl HeadModel {
    /// Build the geometry from anthropometric distances with a unit dipole
    /// moment; see [`HeadModel::study_default`] for the calibrated variant.
    pub fn with_anthropometrics(
        inter_eye_inner_mm: f64,
        inter_eye_outer_mm: f64,
        eye_to_frontal_electrode_mm: f64,
    ) -> Result<HeadModel> {
        for (name, v) in [
            ("inter_eye_inner_mm", inter_eye_inner_mm),
            ("inter_eye_outer_mm", inter_eye_outer_mm),
            ("eye_to_frontal_electrode_mm", eye_to_frontal_electrode_mm),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid_parameter(
                    "head_model",
                    format!("{name} must be positive, got {v}"),
                ));
            }
        }
        if inter_eye_inner_mm >= inter_eye_outer_mm {
            return Err(Error::invalid_parameter(
                "head_model",
                "inner eye distance must be smaller than outer",
            ));
        }
        // Eye centers midway between the inner and outer eye-corner
        // half-spacings, at electrode eye level (z = 0). The forward offset
        // places the eye at the stated distance from the front eye-level
        // ring electrode.
        let eye_x = (inter_eye_inner_mm + inter_eye_outer_mm) / 4.0;
        let dx = EAR_HALF_SPACING_MM - eye_x;
        let d2 = eye_to_frontal_electrode_mm.powi(2) - dx * dx;
        if d2 <= 0.0 {
            return Err(Error::invalid_parameter(
                "head_model",
                "eye-to-electrode distance is shorter than the ear-eye lateral offset",
            ));
        }
        let eye_y = RING_RADIUS_MM + d2.sqrt();
        // Gold pairs around the left eye, oriented so the first-minus-last
        // deflection convention signs them like the ear montages: positive
        // for rightward and downward saccades.
        let gold = GoldElectrodes {
            horizontal_plus: [-inter_eye_outer_mm / 2.0, eye_y, 0.0],
            horizontal_minus: [-inter_eye_inner_mm / 2.0, eye_y, 0.0],
            vertical_plus: [-eye_x, eye_y, 25.0],
            vertical_minus: [-eye_x, eye_y, -25.0],
        };
        Ok(HeadModel {
            eye_centers: [[-eye_x, eye_y, 0.0], [eye_x, eye_y, 0.0]],
            dipole_moment: 1.0,
            layout: ear_ring_layout(),
            inter_eye_inner_mm,
            inter_eye_outer_mm,
            eye_to_frontal_electrode_mm,
            reference_label: REFERENCE_LABEL.to_string(),
            reference_position: [-EAR_HALF_SPACING_MM, 0.0, -60.0],
            gold,
        })
    }

    /// Default model with study-mean anthropometrics and the dipole moment
    /// calibrated so a 15 degree rightward saccade deflects the eye-level
    /// cross-ear montage (L3-R3) by exactly 40.16 µV on the raw potentials.
    pub fn study_default() -> HeadModel {
        let mut model = HeadModel::with_anthropometrics(
            DEFAULT_INTER_EYE_INNER_MM,
            DEFAULT_INTER_EYE_OUTER_MM,
            DEFAULT_EYE_TO_FRONTAL_ELECTRODE_MM,
        )
        .expect("study defaults are valid");
        model.calibrate_moment();
        model
    }

    /// Set the dipole moment so the calibration saccade produces the target
    /// deflection. Deflection here is `V(before) - V(after)` of the montage,
    /// the same convention the saccade analysis uses.
    pub fn calibrate_moment(&mut self) {
        self.dipole_moment = 1.0;
        let diff = |h: f64| -> f64 {
            let left = self
                .montage_potential((h, 0.0), FRONT_EYE_LEVEL_LEFT)
                .expect("calibration labels exist");
            let right = self
                .montage_potential((h, 0.0), FRONT_EYE_LEVEL_RIGHT)
                .expect("calibration labels exist");
            left - right
        };
        let unit_deflection = diff(0.0) - diff(CALIBRATION_ANGLE_DEG);
        self.dipole_moment = CALIBRATION_DEFLECTION_UV / unit_deflection.abs();
    }

    /// Total model potential at a ring electrode for a gaze direction,
    /// summed over both eyes.
    pub fn montage_potential(&self, gaze_deg: (f64, f64), label: &str) -> Result<f64> {
        let pos = self.layout.position(label)?;
        self.potential_at(gaze_deg, pos)
    }

    /// Total model potential at an arbitrary point, summed over both eyes.
    pub fn potential_at(&self, gaze_deg: (f64, f64), point: Vec3) -> Result<f64> {
        let mut v = 0.0;
        for eye in self.eye_centers {
            v += dipole_potential(gaze_deg, eye, self.dipole_moment, point)?;
        }
        Ok(v)
    }

    pub fn validate(&self) -> Result<()> {
        if self.eye_centers[0] == self.eye_centers[1] {
            return Err(Error::invalid_parameter("head_model", "eyes coincide"));
        }
        if !self.dipole_moment.is_finite() {
            return Err(Error::invalid_parameter(
                "head_model",
                "non-finite dipole moment",
            ));
        }
        Ok(())
    }
}

/// A subject-specific model: the shared headphone geometry with the
/// anthropometric distances jittered by a relative factor drawn from the
/// seed. The dipole moment stays at the study calibration so per-subject
/// gains genuinely differ.
pub fn subject_model(base_seed: u64, subject_idx: usize, jitter_sd: f64) -> Result<HeadModel> {
    let default = HeadModel::study_default();
    if jitter_sd == 0.0 {
        return Ok(default);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(base_seed, 0xA11CE, subject_idx as u64));
    let mut factor = || 1.0 + jitter_sd * gaussian(&mut rng);
    let mut model = HeadModel::with_anthropometrics(
        DEFAULT_INTER_EYE_INNER_MM * factor().clamp(0.7, 1.3),
        DEFAULT_INTER_EYE_OUTER_MM * factor().clamp(0.7, 1.3),
        DEFAULT_EYE_TO_FRONTAL_ELECTRODE_MM * factor().clamp(0.7, 1.3),
    )?;
    model.dipole_moment = default.dipole_moment;
    Ok(model)
}

/// Gaze unit vector for (horizontal, vertical) angles in degrees.
///
/// Straight ahead is +y; the rotation applies yaw (horizontal, about z)
/// first, then pitch (vertical). Composition order matters above small
/// angles, hence it is fixed here:
/// `p = (cos v sin h, cos v cos h, sin v)`.
pub fn gaze_direction(horizontal_deg: f64, vertical_deg: f64) -> Vec3 {
    let h = horizontal_deg.to_radians();
    let v = vertical_deg.to_radians();
    [v.cos() * h.sin(), v.cos() * h.cos(), v.sin()]
}

/// Potential (µV) of one eye's corneo-retinal dipole at an electrode:
/// `k * (p_hat . r_hat) / |r|^2` with r from the eye center to the
/// electrode.
pub fn dipole_potential(
    gaze_deg: (f64, f64),
    eye_center: Vec3,
    moment: f64,
    electrode: Vec3,
) -> Result<f64> {
    let r = sub(electrode, eye_center);
    let dist = norm(r);
    if dist < 1e-9 {
        return Err(Error::invalid_parameter(
            "electrode",
            "electrode coincides with the eye center",
        ));
    }
    let p = gaze_direction(gaze_deg.0, gaze_deg.1);
    Ok(moment * dot(p, r) / (dist * dist * dist))
}

/// Additive noise model for the simulator. Amplitudes in µV; every physical
/// electrode gets independent drift/mains phases and white noise derived
/// from the seed.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct NoiseConfig {
    pub drift_amplitude_uv: f64,
    pub drift_period_s: f64,
    pub white_noise_sd_uv: f64,
    pub mains_amplitude_uv: f64,
    pub mains_frequency_hz: f64,
    /// Fraction of gaze-log samples dropped to exercise gap filling.
    pub gaze_missing_fraction: f64,
    /// Uniform timestamp jitter half-width for the gaze log, seconds.
    pub gaze_jitter_s: f64,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            drift_amplitude_uv: 20.0,
            drift_period_s: 30.0,
            white_noise_sd_uv: 2.0,
            mains_amplitude_uv: 1.0,
            mains_frequency_hz: 50.0,
            gaze_missing_fraction: 0.02,
            gaze_jitter_s: 0.002,
            seed: 0,
        }
    }
}

impl NoiseConfig {
    /// All noise components zeroed; the gaze log stays gap-free and
    /// jitter-free.
    pub fn noiseless(seed: u64) -> NoiseConfig {
        NoiseConfig {
            drift_amplitude_uv: 0.0,
            drift_period_s: 30.0,
            white_noise_sd_uv: 0.0,
            mains_amplitude_uv: 0.0,
            mains_frequency_hz: 50.0,
            gaze_missing_fraction: 0.0,
            gaze_jitter_s: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("drift_amplitude_uv", self.drift_amplitude_uv),
            ("white_noise_sd_uv", self.white_noise_sd_uv),
            ("mains_amplitude_uv", self.mains_amplitude_uv),
            ("gaze_jitter_s", self.gaze_jitter_s),
        ] {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::invalid_parameter(
                    "noise",
                    format!("{name} must be non-negative, got {v}"),
                ));
            }
        }
        if !(self.drift_period_s > 0.0) || !(self.mains_frequency_hz > 0.0) {
            return Err(Error::invalid_parameter(
                "noise",
                "drift period and mains frequency must be positive",
            ));
        }
        if !(0.0..=0.9).contains(&self.gaze_missing_fraction) {
            return Err(Error::invalid_parameter(
                "noise",
                "gaze_missing_fraction must lie in [0, 0.9]",
            ));
        }
        if self.gaze_jitter_s >= 0.5 / GAZE_SAMPLE_RATE_HZ {
            return Err(Error::invalid_parameter(
                "noise",
                "gaze jitter must stay below half the gaze sample spacing",
            ));
        }
        Ok(())
    }
}

pub(crate) fn mix_seed(seed: u64, salt: u64, index: u64) -> u64 {
    // SplitMix64 over (seed, salt, index) for decorrelated streams.
    let mut z = seed
        .wrapping_add(salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; u1 in (0, 1].
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Synthesize a multichannel recording and a 60 Hz gaze log from a head
/// model, a trajectory at the EOG rate, and a noise configuration.
///
/// Every physical electrode (16 ring, reference, 4 gold) gets its own raw
/// potential series `dipole + drift + white + mains`; ring channels are the
/// raw series referenced to the reference electrode, and the reserved
/// hEOG/vEOG channels are the bipolar gold pairs. The gaze log is a
/// nearest-sample decimation of the trajectory with jittered timestamps and
/// a configurable fraction of missing samples. Deterministic given the
/// seed.
pub fn simulate_recording(
    model: &HeadModel,
    traj: &GazeTrajectory,
    noise: &NoiseConfig,
    subject_id: &str,
    task_tag: &str,
) -> Result<(Recording, GazeLog)> {
    model.validate()?;
    noise.validate()?;
    if (traj.sample_rate - EOG_SAMPLE_RATE_HZ).abs() > 1e-9 {
        return Err(Error::invalid_parameter(
            "trajectory",
            format!(
                "simulator expects {EOG_SAMPLE_RATE_HZ} Hz trajectories, got {}",
                traj.sample_rate
            ),
        ));
    }
    if traj.is_empty() {
        return Err(Error::SignalTooShort { need: 1, got: 0 });
    }

    // Electrode table: ring labels in layout order, then reference, then the
    // gold electrodes. The position in this table keys the noise stream.
    let mut electrodes: Vec<(Option<String>, Vec3)> = model
        .layout
        .labels()
        .map(|l| {
            (
                Some(l.to_string()),
                model.layout.position(l).expect("label exists"),
            )
        })
        .collect();
    let ref_idx = electrodes.len();
    electrodes.push((None, model.reference_position));
    let gold_idx = electrodes.len();
    electrodes.push((None, model.gold.horizontal_plus));
    electrodes.push((None, model.gold.horizontal_minus));
    electrodes.push((None, model.gold.vertical_plus));
    electrodes.push((None, model.gold.vertical_minus));

    let n = traj.len();
    let fs = EOG_SAMPLE_RATE_HZ;
    let mut raw: Vec<Vec<f64>> = Vec::with_capacity(electrodes.len());
    for (e_idx, (_, pos)) in electrodes.iter().enumerate() {
        let mut series = Vec::with_capacity(n);
        for k in 0..n {
            let gaze = (traj.horizontal[k], traj.vertical[k]);
            series.push(model.potential_at(gaze, *pos)?);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(noise.seed, 0xE1EC, e_idx as u64));
        let drift_phase = rng.random::<f64>() * std::f64::consts::TAU;
        let mains_phase = rng.random::<f64>() * std::f64::consts::TAU;
        if noise.drift_amplitude_uv > 0.0 || noise.mains_amplitude_uv > 0.0 {
            for (k, v) in series.iter_mut().enumerate() {
                let t = k as f64 / fs;
                *v += noise.drift_amplitude_uv
                    * (std::f64::consts::TAU * t / noise.drift_period_s + drift_phase).sin();
                *v += noise.mains_amplitude_uv
                    * (std::f64::consts::TAU * noise.mains_frequency_hz * t + mains_phase).sin();
            }
        }
        if noise.white_noise_sd_uv > 0.0 {
            for v in series.iter_mut() {
                *v += noise.white_noise_sd_uv * gaussian(&mut rng);
            }
        }
        raw.push(series);
    }

    let mut channels: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for (e_idx, (label, _)) in electrodes.iter().enumerate() {
        if let Some(label) = label {
            let series = raw[e_idx]
                .iter()
                .zip(&raw[ref_idx])
                .map(|(v, r)| v - r)
                .collect();
            channels.insert(label.clone(), series);
        }
    }
    let bipolar = |plus: usize, minus: usize| -> Vec<f64> {
        raw[plus]
            .iter()
            .zip(&raw[minus])
            .map(|(a, b)| a - b)
            .collect()
    };
    channels.insert(GOLD_HORIZONTAL_LABEL.into(), bipolar(gold_idx, gold_idx + 1));
    channels.insert(GOLD_VERTICAL_LABEL.into(), bipolar(gold_idx + 2, gold_idx + 3));

    let recording = Recording::new(
        subject_id,
        fs,
        channels,
        model.reference_label.clone(),
        task_tag,
        &model.layout,
    )?;

    let gaze_log = decimate_to_gaze_log(traj, noise)?;
    Ok((recording, gaze_log))
}

/// 60 Hz gaze log from the 125 Hz trajectory: nearest-sample decimation with
/// jittered timestamps and seeded dropouts. The first and last samples are
/// always kept valid so downstream interpolation is well defined.
fn decimate_to_gaze_log(traj: &GazeTrajectory, noise: &NoiseConfig) -> Result<GazeLog> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(noise.seed, 0x6A2E, 0));
    let duration = (traj.len() - 1) as f64 / traj.sample_rate;
    let n60 = (duration * GAZE_SAMPLE_RATE_HZ).floor() as usize + 1;
    let mut timestamps = Vec::with_capacity(n60);
    let mut horizontal = Vec::with_capacity(n60);
    let mut vertical = Vec::with_capacity(n60);
    for k in 0..n60 {
        let jitter = if noise.gaze_jitter_s > 0.0 {
            (2.0 * rng.random::<f64>() - 1.0) * noise.gaze_jitter_s
        } else {
            0.0
        };
        let t = (k as f64 / GAZE_SAMPLE_RATE_HZ + jitter).clamp(0.0, duration);
        let idx = ((t * traj.sample_rate).round() as usize).min(traj.len() - 1);
        let missing = k != 0
            && k != n60 - 1
            && noise.gaze_missing_fraction > 0.0
            && rng.random::<f64>() < noise.gaze_missing_fraction;
        timestamps.push(t);
        if missing {
            horizontal.push(None);
            vertical.push(None);
        } else {
            horizontal.push(Some(traj.horizontal[idx]));
            vertical.push(Some(traj.vertical[idx]));
        }
    }
    // Jitter is bounded below half the spacing, so timestamps stay strictly
    // increasing except possibly at the clamped ends; nudge those.
    for i in 1..timestamps.len() {
        if timestamps[i] <= timestamps[i - 1] {
            timestamps[i] = timestamps[i - 1] + 1e-6;
        }
    }
    GazeLog::new(timestamps, horizontal, vertical, GAZE_SAMPLE_RATE_HZ)
}

/// Montage differential of the noiseless model for a whole trajectory; the
/// analytic oracle tests compare pipeline outputs against.
pub fn analytic_differential(
    model: &HeadModel,
    traj: &GazeTrajectory,
    label_a: &str,
    label_b: &str,
) -> Result<Vec<f64>> {
    (0..traj.len())
        .map(|k| {
            let gaze = (traj.horizontal[k], traj.vertical[k]);
            Ok(model.montage_potential(gaze, label_a)? - model.montage_potential(gaze, label_b)?)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::pearson;
    use crate::Axis;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ring_layout_shape() {
        let layout = ear_ring_layout();
        assert_eq!(layout.len(), 16);
        // Two eye-level electrodes per ear: front (L3/R3) and back (L6/R6).
        for (label, y) in [("L3", 40.0), ("L6", -40.0), ("R3", 40.0), ("R6", -40.0)] {
            let p = layout.position(label).unwrap();
            assert_abs_diff_eq!(p[1], y, epsilon = 1e-12);
            assert_abs_diff_eq!(p[2], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn perpendicular_gaze_gives_zero_potential() {
        // p along +y, r along +x: dot product zero.
        let v = dipole_potential((0.0, 0.0), [0.0, 0.0, 0.0], 100.0, [10.0, 0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn inverse_square_law() {
        let eye = [0.0, 0.0, 0.0];
        let near = dipole_potential((0.0, 0.0), eye, 50.0, [0.0, 20.0, 0.0]).unwrap();
        let far = dipole_potential((0.0, 0.0), eye, 50.0, [0.0, 40.0, 0.0]).unwrap();
        assert_abs_diff_eq!(far, near / 4.0, epsilon = 1e-12);
    }

    #[test]
    fn front_back_antisymmetry_at_calibrated_moment() {
        // k chosen so the electrode 52.2 mm straight ahead reads 100 µV;
        // the mirrored electrode behind the eye reads -100 µV.
        let eye = [0.0, 0.0, 0.0];
        let d = 52.2;
        let k = 100.0 * d * d;
        let ahead = dipole_potential((0.0, 0.0), eye, k, [0.0, d, 0.0]).unwrap();
        let behind = dipole_potential((0.0, 0.0), eye, k, [0.0, -d, 0.0]).unwrap();
        assert_abs_diff_eq!(ahead, 100.0, epsilon = 1e-9);
        assert_abs_diff_eq!(behind, -100.0, epsilon = 1e-9);
    }

    #[test]
    fn coincident_electrode_errors() {
        let eye = [1.0, 2.0, 3.0];
        assert!(dipole_potential((0.0, 0.0), eye, 1.0, eye).is_err());
    }

    #[test]
    fn calibration_hits_the_target_deflection() {
        let model = HeadModel::study_default();
        let at = |h: f64| {
            model.montage_potential((h, 0.0), "L3").unwrap()
                - model.montage_potential((h, 0.0), "R3").unwrap()
        };
        let deflection = at(0.0) - at(15.0);
        assert_abs_diff_eq!(deflection, CALIBRATION_DEFLECTION_UV, epsilon = 1e-9);
        // Left saccades deflect with the opposite sign.
        let left = at(0.0) - at(-15.0);
        assert_abs_diff_eq!(left, -CALIBRATION_DEFLECTION_UV, epsilon = 1e-9);
    }

    #[test]
    fn straight_gaze_mirror_pairs_cancel() {
        let model = HeadModel::study_default();
        let traj =
            GazeTrajectory::new(EOG_SAMPLE_RATE_HZ, vec![0.0; 10], vec![0.0; 10], Vec::new())
                .unwrap();
        let (rec, _) =
            simulate_recording(&model, &traj, &NoiseConfig::noiseless(1), "S", "t").unwrap();
        for i in 1..=8 {
            let l = rec.channel(&format!("L{i}")).unwrap();
            let r = rec.channel(&format!("R{i}")).unwrap();
            for k in 0..l.len() {
                assert_abs_diff_eq!(l[k] - r[k], 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn vertical_gaze_keeps_eye_level_mirror_pairs_silent() {
        let model = HeadModel::study_default();
        let traj = pursuit_trajectory_with_phase(10.0, 0.5, 2.0, Axis::Vertical, 0.3).unwrap();
        let (rec, _) =
            simulate_recording(&model, &traj, &NoiseConfig::noiseless(1), "S", "t").unwrap();
        let l3 = rec.channel("L3").unwrap();
        let r3 = rec.channel("R3").unwrap();
        for k in 0..l3.len() {
            assert_abs_diff_eq!(l3[k] - r3[k], 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn horizontal_pursuit_correlates_with_gaze_on_eye_level_pair() {
        let model = HeadModel::study_default();
        let traj = pursuit_trajectory_with_phase(15.0, 1.0, 6.0, Axis::Horizontal, 0.7).unwrap();
        let (rec, _) =
            simulate_recording(&model, &traj, &NoiseConfig::noiseless(1), "S", "t").unwrap();
        let diff: Vec<f64> = rec
            .channel("L3")
            .unwrap()
            .iter()
            .zip(rec.channel("R3").unwrap())
            .map(|(a, b)| a - b)
            .collect();
        let r = pearson(&diff, &traj.horizontal).unwrap();
        assert!(r.abs() >= 0.999, "r = {r}");

        // The recording matches the dipole formula evaluated analytically.
        let oracle = analytic_differential(&model, &traj, "L3", "R3").unwrap();
        for k in 0..diff.len() {
            assert_abs_diff_eq!(diff[k], oracle[k], epsilon = 1e-9);
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let model = HeadModel::study_default();
        let traj = pursuit_trajectory_with_phase(10.0, 0.5, 3.0, Axis::Horizontal, 0.0).unwrap();
        let noise = NoiseConfig::default();
        let (a, ga) = simulate_recording(&model, &traj, &noise, "S", "t").unwrap();
        let (b, gb) = simulate_recording(&model, &traj, &noise, "S", "t").unwrap();
        assert_eq!(a, b);
        assert_eq!(ga, gb);
    }

    #[test]
    fn noiseless_channels_scale_linearly_with_moment() {
        let mut model = HeadModel::study_default();
        let traj = pursuit_trajectory_with_phase(10.0, 0.5, 1.0, Axis::Horizontal, 0.2).unwrap();
        let (base, _) =
            simulate_recording(&model, &traj, &NoiseConfig::noiseless(0), "S", "t").unwrap();
        model.dipole_moment *= 3.0;
        let (scaled, _) =
            simulate_recording(&model, &traj, &NoiseConfig::noiseless(0), "S", "t").unwrap();
        for label in base.labels() {
            let a = base.channel(label).unwrap();
            let b = scaled.channel(label).unwrap();
            for k in 0..a.len() {
                assert_abs_diff_eq!(b[k], 3.0 * a[k], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn montage_differential_is_reference_invariant() {
        let model = HeadModel::study_default();
        let traj = pursuit_trajectory_with_phase(12.0, 1.0, 1.0, Axis::Horizontal, 0.9).unwrap();
        let noiseless = NoiseConfig::noiseless(0);
        let (rec_a, _) = simulate_recording(&model, &traj, &noiseless, "S", "t").unwrap();
        let mut moved = model.clone();
        moved.reference_position = [EAR_HALF_SPACING_MM, -10.0, 30.0];
        let (rec_b, _) = simulate_recording(&moved, &traj, &noiseless, "S", "t").unwrap();
        let diff = |rec: &Recording| -> Vec<f64> {
            rec.channel("L1")
                .unwrap()
                .iter()
                .zip(rec.channel("R4").unwrap())
                .map(|(a, b)| a - b)
                .collect()
        };
        let da = diff(&rec_a);
        let db = diff(&rec_b);
        for k in 0..da.len() {
            assert_abs_diff_eq!(da[k], db[k], epsilon = 1e-9);
        }
    }

    #[test]
    fn gaze_log_respects_missing_fraction_and_monotonicity() {
        let model = HeadModel::study_default();
        let traj = pursuit_trajectory_with_phase(10.0, 0.33, 6.0, Axis::Horizontal, 0.0).unwrap();
        let noise = NoiseConfig {
            gaze_missing_fraction: 0.2,
            ..NoiseConfig::default()
        };
        let (_, log) = simulate_recording(&model, &traj, &noise, "S", "t").unwrap();
        assert!(log.horizontal[0].is_some());
        assert!(log.horizontal[log.len() - 1].is_some());
        let missing = log.horizontal.iter().filter(|v| v.is_none()).count();
        assert!(missing > 0, "expected some dropouts");
        for w in log.timestamps.windows(2) {
            assert!(w[1] > w[0]);
        }
        // Roughly 60 Hz over 6 s.
        assert!((355..=365).contains(&log.len()), "len {}", log.len());
    }

    #[test]
    fn subject_models_vary_but_share_the_device() {
        let a = subject_model(42, 0, 0.03).unwrap();
        let b = subject_model(42, 1, 0.03).unwrap();
        assert_ne!(a.eye_centers, b.eye_centers);
        assert_eq!(a.layout, b.layout);
        assert_eq!(a.dipole_moment, b.dipole_moment);
        // Deterministic per (seed, index).
        let a2 = subject_model(42, 0, 0.03).unwrap();
        assert_eq!(a.eye_centers, a2.eye_centers);
    }
}
