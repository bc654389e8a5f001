//! Hand and arm retargeting.
//!
//! Hand retargeting matches robot fingertip poses to scaled glove fingertip
//! poses while keeping thumb-finger distances close to the operator's when
//! the fingers are closing. Arm retargeting maps the operator's wrist pose
//! increment onto the robot end effector and solves an inverse kinematics
//! problem. Both are box-constrained and warm-started from the previous
//! frame's solution.

mod arm;
mod hand;
pub mod solver;

use nalgebra::{Isometry3, Translation3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kinematics::ModelError;

pub use arm::{solve_arm_ik, ArmObjective, FROBENIUS_EPSILON};
pub use hand::{
    hand_cost, opposition_targets, solve_hand_retarget, solve_hand_retarget_observed, HandObjective,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RetargetError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("expected {expected} targets, found {found}")]
    TargetCount { expected: usize, found: usize },
    #[error("expected {expected} opposition targets, found {found}")]
    OppositionCount { expected: usize, found: usize },
    #[error("invalid retarget configuration: {0}")]
    Config(String),
    #[error("arm model must be a single serial chain")]
    NotSerial,
}

/// Weights, thresholds and solver limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetargetConfig {
    /// Fingertip (or end-effector) position weight.
    pub w1: f64,
    /// Orientation weight.
    pub w2: f64,
    /// Pull toward the previous solution.
    pub alpha: f64,
    /// Opposition weight saturates at `w_max` below this distance (m).
    pub d_min: f64,
    /// Opposition weight vanishes above this distance (m).
    pub d_max: f64,
    pub w_max: f64,
    pub tol: f64,
    pub max_iters: usize,
    /// Scale on wrist position increments.
    pub wrist_lambda: f64,
}

impl Default for RetargetConfig {
    fn default() -> Self {
        Self {
            w1: 1.0,
            w2: 0.05,
            alpha: 0.01,
            d_min: 0.005,
            d_max: 0.03,
            w_max: 10.0,
            tol: 1e-8,
            max_iters: 100,
            wrist_lambda: 0.8,
        }
    }
}

impl RetargetConfig {
    pub fn validate(&self) -> Result<(), RetargetError> {
        let weights = [self.w1, self.w2, self.alpha, self.w_max];
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(RetargetError::Config("weights must be finite and >= 0".into()));
        }
        if !(self.d_min > 0.0 && self.d_min < self.d_max) || !self.d_max.is_finite() {
            return Err(RetargetError::Config("require 0 < d_min < d_max".into()));
        }
        if !(self.tol > 0.0) {
            return Err(RetargetError::Config("tol must be positive".into()));
        }
        if !(self.wrist_lambda > 0.0) {
            return Err(RetargetError::Config("wrist_lambda must be positive".into()));
        }
        Ok(())
    }

    /// Copy with every objective weight multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            w1: self.w1 * c,
            w2: self.w2 * c,
            alpha: self.alpha * c,
            w_max: self.w_max * c,
            ..self.clone()
        }
    }

    pub(crate) fn solver_options(&self) -> solver::SolverOptions {
        solver::SolverOptions {
            tol: self.tol,
            max_iters: self.max_iters,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetargetResult {
    pub theta: Vec<f64>,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl From<solver::Solution> for RetargetResult {
    fn from(s: solver::Solution) -> Self {
        Self {
            theta: s.x,
            cost: s.cost,
            iterations: s.iterations,
            converged: s.converged,
        }
    }
}

/// Gain on one thumb-finger distance term: `w_max` at or below `d_min`,
/// zero at or above `d_max`, linear in between.
pub fn opposition_weight(d: f64, config: &RetargetConfig) -> f64 {
    if d >= config.d_max {
        0.0
    } else if d <= config.d_min {
        config.w_max
    } else {
        config.w_max * (config.d_max - d) / (config.d_max - config.d_min)
    }
}

/// Position and rotation increment of the operator's wrist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WristDelta {
    pub dp: nalgebra::Vector3<f64>,
    pub dq: nalgebra::UnitQuaternion<f64>,
    pub lambda: f64,
}

impl WristDelta {
    /// Increment of `now` relative to `init`; the rotation is expressed in
    /// the world frame, `dq = q_now * q_init^-1`.
    pub fn between(now: &Isometry3<f64>, init: &Isometry3<f64>, lambda: f64) -> Self {
        Self {
            dp: now.translation.vector - init.translation.vector,
            dq: now.rotation * init.rotation.inverse(),
            lambda,
        }
    }

    /// Applies the scaled increment to a robot end-effector pose.
    pub fn apply(&self, robot_init: &Isometry3<f64>) -> Isometry3<f64> {
        Isometry3::from_parts(
            Translation3::from(robot_init.translation.vector + self.lambda * self.dp),
            self.dq * robot_init.rotation,
        )
    }
}

/// Robot end-effector target from the operator's current and initial wrist
/// poses and the robot's initial end-effector pose.
pub fn wrist_target(
    pose_now: &Isometry3<f64>,
    pose_init: &Isometry3<f64>,
    robot_init: &Isometry3<f64>,
    lambda: f64,
) -> Isometry3<f64> {
    WristDelta::between(pose_now, pose_init, lambda).apply(robot_init)
}
