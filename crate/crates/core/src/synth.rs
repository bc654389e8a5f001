//! Seeded synthetic logs.

use std::f64::consts::TAU;

use nalgebra::{Isometry3, Translation3, UnitQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::io::{MagRecord, TactileRecord, WristRecord};
use crate::kinematics::Kinematics;
use crate::mag::{CalibrationSet, CalibrationState, FieldModel, FieldSimulator, MagError};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    pub duration_s: f64,
    pub glove_rate_hz: f64,
    pub tracker_rate_hz: f64,
    pub tactile_rate_hz: f64,
    /// Per-axis field noise as a fraction of the field amplitude.
    pub noise_fraction: f64,
    pub quantization_bits: Option<u32>,
    pub tactile_rows: usize,
    pub tactile_cols: usize,
    /// Peak contact force of the tactile blobs.
    pub tactile_peak: f64,
    pub tactile: bool,
    pub wrist: bool,
    pub seed: u64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self {
            duration_s: 60.0,
            glove_rate_hz: 260.0,
            tracker_rate_hz: 250.0,
            tactile_rate_hz: 60.0,
            noise_fraction: 0.002,
            quantization_bits: Some(16),
            tactile_rows: 7,
            tactile_cols: 6,
            tactile_peak: 8.0,
            tactile: true,
            wrist: true,
            seed: 7,
        }
    }
}

/// A generated session together with its ground truth.
#[derive(Debug, Clone)]
pub struct SyntheticLog {
    pub mag: Vec<MagRecord>,
    pub calibration: CalibrationSet,
    pub tactile: Vec<TactileRecord>,
    pub wrist: Vec<WristRecord>,
    /// Commanded joint angles, one vector per glove tick.
    pub truth: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy)]
struct Wave {
    center: f64,
    amplitude: f64,
    freq: f64,
    phase: f64,
}

impl Wave {
    fn at(&self, t: f64) -> f64 {
        self.center + self.amplitude * (TAU * self.freq * t + self.phase).sin()
    }
}

/// Sinusoidal joint motion inside each joint's limits.
fn joint_waves(model: &Kinematics, rng: &mut ChaCha8Rng) -> Vec<Wave> {
    model
        .joints()
        .iter()
        .map(|j| {
            let mid = 0.5 * (j.limit_min + j.limit_max);
            let half = 0.5 * (j.limit_max - j.limit_min);
            Wave {
                center: mid,
                amplitude: half * rng.random_range(0.3..0.7),
                freq: rng.random_range(0.15..0.6),
                phase: rng.random_range(0.0..TAU),
            }
        })
        .collect()
}

pub fn tick_times(duration_s: f64, rate_hz: f64) -> Vec<f64> {
    let n = (duration_s * rate_hz).round() as usize;
    (0..n).map(|i| i as f64 / rate_hz).collect()
}

/// Generates glove, tracker and tactile streams for `model`.
pub fn generate(model: &Kinematics, options: &SynthOptions) -> Result<SyntheticLog, MagError> {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let waves = joint_waves(model, &mut rng);
    let mut calibration = CalibrationSet::default();
    let mut sims = Vec::with_capacity(waves.len());
    for j in 0..waves.len() {
        let b0 = rng.random_range(0.8..1.2);
        let ox = rng.random_range(-0.2..0.2);
        let oy = rng.random_range(-0.2..0.2);
        calibration.insert(j, CalibrationState::from_parameters(ox, oy, b0));
        let field = FieldModel::new(b0, ox, oy)
            .with_noise(options.noise_fraction * b0)
            .with_quantization(options.quantization_bits);
        sims.push(FieldSimulator::new(field, rng.random())?);
    }

    let times = tick_times(options.duration_s, options.glove_rate_hz);
    let mut mag = Vec::with_capacity(times.len() * waves.len());
    let mut truth = Vec::with_capacity(times.len());
    for &t in &times {
        let theta: Vec<f64> = waves.iter().map(|w| w.at(t)).collect();
        for (j, (sim, &th)) in sims.iter_mut().zip(&theta).enumerate() {
            let s = sim.sample(th, t);
            mag.push(MagRecord {
                t,
                joint: j,
                bx: s.bx,
                by: s.by,
            });
        }
        truth.push(theta);
    }

    let wrist = if options.wrist {
        tick_times(options.duration_s, options.tracker_rate_hz)
            .into_iter()
            .map(|t| WristRecord::from_isometry(t, &wrist_pose(t)))
            .collect()
    } else {
        Vec::new()
    };

    let tactile = if options.tactile {
        tactile_frames(options, &mut rng)
    } else {
        Vec::new()
    };

    Ok(SyntheticLog {
        mag,
        calibration,
        tactile,
        wrist,
        truth,
    })
}

fn wrist_pose(t: f64) -> Isometry3<f64> {
    let s = (TAU * 0.2 * t).sin();
    let c = (TAU * 0.13 * t).cos();
    Isometry3::from_parts(
        Translation3::new(0.4 + 0.05 * s, 0.1 * c - 0.1, 1.0 + 0.03 * s * c),
        UnitQuaternion::from_euler_angles(0.2 * s, 0.15 * c, 0.25 * s),
    )
}

/// A Gaussian contact blob per finger drifting across the pad, with a
/// force envelope that repeatedly presses and releases.
fn tactile_frames(options: &SynthOptions, rng: &mut ChaCha8Rng) -> Vec<TactileRecord> {
    let (rows, cols) = (options.tactile_rows, options.tactile_cols);
    let params: Vec<(f64, f64, f64)> = (0..5)
        .map(|_| {
            (
                rng.random_range(0.2..0.8),
                rng.random_range(0.3..1.0),
                rng.random_range(0.0..TAU),
            )
        })
        .collect();
    let mut out = Vec::new();
    for t in tick_times(options.duration_s, options.tactile_rate_hz) {
        for (finger, &(centre, freq, phase)) in params.iter().enumerate() {
            let envelope = (TAU * freq * t + phase).sin().max(0.0);
            let u0 = centre + 0.2 * (TAU * 0.1 * t + phase).sin();
            let v0 = 0.5 + 0.25 * (TAU * 0.07 * t + phase).cos();
            let values = (0..rows)
                .flat_map(|r| (0..cols).map(move |c| (r, c)))
                .map(|(r, c)| {
                    let u = (c as f64 + 0.5) / cols as f64 - u0;
                    let v = (r as f64 + 0.5) / rows as f64 - v0;
                    options.tactile_peak * envelope * (-(u * u + v * v) / 0.03).exp()
                })
                .collect();
            out.push(TactileRecord {
                t,
                finger,
                rows,
                cols,
                values,
            });
        }
    }
    out
}

/// Piecewise-linear sweep through `waypoints` (angle, seconds to reach it
/// from the previous waypoint), sampled at `rate_hz`. Holds are expressed
/// by repeating an angle.
pub fn waypoint_trajectory(start: f64, waypoints: &[(f64, f64)], rate_hz: f64) -> Vec<(f64, f64)> {
    let total: f64 = waypoints.iter().map(|w| w.1).sum();
    let n = (total * rate_hz).round() as usize;
    (0..=n)
        .map(|i| {
            let t = i as f64 / rate_hz;
            let mut t0 = 0.0;
            let mut a0 = start;
            for &(a1, dur) in waypoints {
                if t <= t0 + dur {
                    let f = if dur > 0.0 { (t - t0) / dur } else { 1.0 };
                    return (t, a0 + (a1 - a0) * f);
                }
                t0 += dur;
                a0 = a1;
            }
            (t, a0)
        })
        .collect()
}

/// Triangle-wave reciprocation between `lo` and `hi`.
pub fn reciprocation(lo: f64, hi: f64, period_s: f64, duration_s: f64, rate_hz: f64) -> Vec<(f64, f64)> {
    tick_times(duration_s, rate_hz)
        .into_iter()
        .map(|t| {
            let phase = (t / period_s).fract();
            let f = if phase < 0.5 { 2.0 * phase } else { 2.0 - 2.0 * phase };
            (t, lo + (hi - lo) * f)
        })
        .collect()
}
