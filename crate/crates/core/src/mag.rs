//! Two-axis magnetic joint encoders.
//!
//! A diametrically magnetised ring magnet above a magnetometer produces a
//! field whose in-plane components trace a circle as the joint rotates:
//!
//! ```text
//! bx = b0 * cos(theta) + ox
//! by = b0 * sin(theta) + oy
//! ```
//!
//! Offsets are estimated from the per-axis extrema of a calibration sweep and
//! the angle is recovered with a four-quadrant arctangent of the
//! offset-corrected components.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of instrumented joints on the glove.
pub const JOINT_COUNT: usize = 21;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MagError {
    #[error("empty calibration sweep")]
    EmptySweep,
    #[error("insufficient angular coverage: {axis} range {range} below {required}")]
    InsufficientCoverage {
        axis: &'static str,
        range: f64,
        required: f64,
    },
    #[error("field magnitude too small: ({dx}, {dy}) below {epsilon}")]
    FieldTooSmall { dx: f64, dy: f64, epsilon: f64 },
    #[error("non-finite sample at t = {0}")]
    NonFinite(f64),
    #[error("timestamps not strictly increasing: {prev} then {next}")]
    NonMonotonic { prev: f64, next: f64 },
    #[error("joint id {0} out of range 0..{JOINT_COUNT}")]
    BadJoint(usize),
    #[error("quantization depth {0} outside 0..=24")]
    BadQuantization(u32),
    #[error("amplitude must be positive, got {0}")]
    BadAmplitude(f64),
}

/// One two-axis magnetometer reading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagSample {
    pub bx: f64,
    pub by: f64,
    /// Seconds.
    pub timestamp: f64,
}

impl MagSample {
    pub fn new(bx: f64, by: f64, timestamp: f64) -> Self {
        Self { bx, by, timestamp }
    }

    pub fn is_finite(&self) -> bool {
        self.bx.is_finite() && self.by.is_finite()
    }
}

/// A decoded joint angle in `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointAngle {
    pub joint_id: usize,
    pub theta: f64,
}

/// Thresholds used when finalising a calibration and decoding with it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationOptions {
    /// Flux amplitude the sensor is expected to see (ADC units).
    pub expected_b0: f64,
    /// Each axis must span more than this fraction of `expected_b0`.
    pub min_range_fraction: f64,
    /// Decoding fails when both corrected components fall below this
    /// fraction of the calibrated amplitude.
    pub magnitude_fraction: f64,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            expected_b0: 1.0,
            min_range_fraction: 0.5,
            magnitude_fraction: 0.1,
        }
    }
}

/// Offsets and amplitude estimated from a calibration sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationState {
    pub ox: f64,
    pub oy: f64,
    pub b0: f64,
    pub bx_min: f64,
    pub bx_max: f64,
    pub by_min: f64,
    pub by_max: f64,
    /// Fraction of `b0` below which a reading is treated as a missing magnet.
    #[serde(default = "default_magnitude_fraction")]
    pub magnitude_fraction: f64,
}

fn default_magnitude_fraction() -> f64 {
    CalibrationOptions::default().magnitude_fraction
}

impl CalibrationState {
    /// Builds a state directly from known offsets and amplitude, as if a
    /// noiseless full-circle sweep had been observed.
    pub fn from_parameters(ox: f64, oy: f64, b0: f64) -> Self {
        Self {
            ox,
            oy,
            b0,
            bx_min: ox - b0,
            bx_max: ox + b0,
            by_min: oy - b0,
            by_max: oy + b0,
            magnitude_fraction: default_magnitude_fraction(),
        }
    }

    pub fn magnitude_epsilon(&self) -> f64 {
        self.magnitude_fraction * self.b0
    }
}

/// Running extrema of a calibration sweep for one joint.
///
/// Single writer per joint stream; finalise once the sweep is complete.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationAccumulator {
    bx_min: f64,
    bx_max: f64,
    by_min: f64,
    by_max: f64,
    count: usize,
}

impl Default for CalibrationAccumulator {
    fn default() -> Self {
        Self {
            bx_min: f64::INFINITY,
            bx_max: f64::NEG_INFINITY,
            by_min: f64::INFINITY,
            by_max: f64::NEG_INFINITY,
            count: 0,
        }
    }
}

impl CalibrationAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, sample: &MagSample) -> Result<(), MagError> {
        if !sample.is_finite() {
            return Err(MagError::NonFinite(sample.timestamp));
        }
        self.bx_min = self.bx_min.min(sample.bx);
        self.bx_max = self.bx_max.max(sample.bx);
        self.by_min = self.by_min.min(sample.by);
        self.by_max = self.by_max.max(sample.by);
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn finalize(&self, options: &CalibrationOptions) -> Result<CalibrationState, MagError> {
        if self.count == 0 {
            return Err(MagError::EmptySweep);
        }
        let required = options.min_range_fraction * options.expected_b0;
        let x_range = self.bx_max - self.bx_min;
        let y_range = self.by_max - self.by_min;
        for (axis, range) in [("x", x_range), ("y", y_range)] {
            if range <= required {
                return Err(MagError::InsufficientCoverage {
                    axis,
                    range,
                    required,
                });
            }
        }
        Ok(CalibrationState {
            ox: (self.bx_max + self.bx_min) / 2.0,
            oy: (self.by_max + self.by_min) / 2.0,
            b0: (x_range / 2.0 + y_range / 2.0) / 2.0,
            bx_min: self.bx_min,
            bx_max: self.bx_max,
            by_min: self.by_min,
            by_max: self.by_max,
            magnitude_fraction: options.magnitude_fraction,
        })
    }
}

/// Estimates offsets and amplitude from a sweep through the joint's range.
pub fn calibrate(
    sweep: &[MagSample],
    options: &CalibrationOptions,
) -> Result<CalibrationState, MagError> {
    let mut acc = CalibrationAccumulator::new();
    for s in sweep {
        acc.push(s)?;
    }
    acc.finalize(options)
}

/// Maps an angle into `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(TAU);
    if t > PI {
        t -= TAU;
    }
    if t <= -PI {
        t += TAU;
    }
    t
}

/// Recovers the joint angle from offset-corrected field components.
pub fn decode_angle(
    joint_id: usize,
    sample: &MagSample,
    calib: &CalibrationState,
) -> Result<JointAngle, MagError> {
    if !sample.is_finite() {
        return Err(MagError::NonFinite(sample.timestamp));
    }
    let dx = sample.bx - calib.ox;
    let dy = sample.by - calib.oy;
    let epsilon = calib.magnitude_epsilon();
    if dx.abs() < epsilon && dy.abs() < epsilon {
        return Err(MagError::FieldTooSmall { dx, dy, epsilon });
    }
    let mut theta = dy.atan2(dx);
    // atan2 yields -pi for (negative, -0.0); the half-open range excludes it.
    if theta <= -PI {
        theta = PI;
    }
    Ok(JointAngle { joint_id, theta })
}

/// Forward field model with optional Gaussian noise and ADC quantization.
///
/// Quantization is uniform over a full-scale range of `±2·b0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldModel {
    pub b0: f64,
    pub ox: f64,
    pub oy: f64,
    pub noise_sigma: f64,
    pub quantization_bits: Option<u32>,
}

impl FieldModel {
    pub fn new(b0: f64, ox: f64, oy: f64) -> Self {
        Self {
            b0,
            ox,
            oy,
            noise_sigma: 0.0,
            quantization_bits: None,
        }
    }

    pub fn with_noise(mut self, sigma: f64) -> Self {
        self.noise_sigma = sigma;
        self
    }

    pub fn with_quantization(mut self, bits: Option<u32>) -> Self {
        self.quantization_bits = bits;
        self
    }

    fn validate(&self) -> Result<(), MagError> {
        if !(self.b0 > 0.0) || !self.b0.is_finite() {
            return Err(MagError::BadAmplitude(self.b0));
        }
        if let Some(bits) = self.quantization_bits {
            if bits > 24 {
                return Err(MagError::BadQuantization(bits));
            }
        }
        Ok(())
    }

    fn quantize(&self, v: f64) -> f64 {
        match self.quantization_bits {
            None => v,
            Some(bits) => {
                let full = 2.0 * self.b0;
                let step = 2.0 * full / f64::from(1u32 << bits);
                ((v.clamp(-full, full)) / step).round() * step
            }
        }
    }

    /// Noiseless, unquantized field at `theta`.
    pub fn ideal(&self, theta: f64) -> (f64, f64) {
        (
            self.b0 * theta.cos() + self.ox,
            self.b0 * theta.sin() + self.oy,
        )
    }
}

/// Seeded generator of synthetic magnetometer readings.
#[derive(Debug, Clone)]
pub struct FieldSimulator {
    model: FieldModel,
    rng: ChaCha8Rng,
    noise: Option<Normal<f64>>,
}

impl FieldSimulator {
    pub fn new(model: FieldModel, seed: u64) -> Result<Self, MagError> {
        model.validate()?;
        let noise = if model.noise_sigma > 0.0 {
            Some(Normal::new(0.0, model.noise_sigma).expect("finite positive sigma"))
        } else {
            None
        };
        Ok(Self {
            model,
            rng: ChaCha8Rng::seed_from_u64(seed),
            noise,
        })
    }

    pub fn model(&self) -> &FieldModel {
        &self.model
    }

    pub fn sample(&mut self, theta: f64, timestamp: f64) -> MagSample {
        let (mut bx, mut by) = self.model.ideal(theta);
        if let Some(noise) = &self.noise {
            bx += noise.sample(&mut self.rng);
            by += noise.sample(&mut self.rng);
        }
        MagSample::new(self.model.quantize(bx), self.model.quantize(by), timestamp)
    }

    /// Draws a uniform value; used to build noisy sweeps with bounded noise.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }
}

/// Generates a single reading from the forward model.
pub fn simulate_field(
    theta: f64,
    model: &FieldModel,
    seed: u64,
) -> Result<MagSample, MagError> {
    let mut sim = FieldSimulator::new(*model, seed)?;
    Ok(sim.sample(theta, 0.0))
}

/// Removes `2·pi` jumps so consecutive differences stay below `pi`.
pub fn unwrap_stream(angles: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(angles.len());
    let mut turns = 0.0;
    let mut prev: Option<f64> = None;
    for &a in angles {
        if let Some(p) = prev {
            let d = a - p;
            if d > PI {
                turns -= TAU;
            } else if d < -PI {
                turns += TAU;
            }
        }
        out.push(a + turns);
        prev = Some(a);
    }
    out
}

/// Per-joint calibration document, keyed by joint id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSet {
    pub joints: BTreeMap<String, CalibrationState>,
}

impl CalibrationSet {
    pub fn insert(&mut self, joint: usize, state: CalibrationState) {
        self.joints.insert(joint.to_string(), state);
    }

    pub fn get(&self, joint: usize) -> Option<&CalibrationState> {
        self.joints.get(&joint.to_string())
    }

    pub fn to_toml(&self) -> Result<String, toml::ser::Error> {
        toml::to_string(self)
    }

    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}

/// Checks stream-level invariants: finite readings, strictly increasing time.
pub fn validate_stream(samples: &[MagSample]) -> Result<(), MagError> {
    let mut prev: Option<f64> = None;
    for s in samples {
        if !s.is_finite() || !s.timestamp.is_finite() {
            return Err(MagError::NonFinite(s.timestamp));
        }
        if let Some(p) = prev {
            if s.timestamp <= p {
                return Err(MagError::NonMonotonic {
                    prev: p,
                    next: s.timestamp,
                });
            }
        }
        prev = Some(s.timestamp);
    }
    Ok(())
}
