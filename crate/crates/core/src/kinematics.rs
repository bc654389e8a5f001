//! Serial-chain kinematics and the 21-DoF glove hand model.
//!
//! A [`Kinematics`] is a set of independent revolute chains rooted at a
//! common base frame (the wrist for a hand, the shoulder mount for an arm).
//! Every joint frame is placed by a fixed rest transform relative to the
//! previous joint's rotated frame, and every chain ends in a fixed tip
//! transform.

use std::fmt;

use nalgebra::{Isometry3, Matrix3, Quaternion, Translation3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mag::JOINT_COUNT;

/// Unit tolerance for axes and rest quaternions.
const UNIT_TOLERANCE: f64 = 1e-9;

/// Finger names in chain order.
pub const FINGER_NAMES: [&str; 5] = ["thumb", "index", "middle", "ring", "pinky"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("expected {expected} joints, found {found}")]
    JointCount { expected: usize, found: usize },
    #[error("expected {expected} fingers, found {found}")]
    FingerCount { expected: usize, found: usize },
    #[error("finger {finger} must have {expected} joints, found {found}")]
    ChainLength {
        finger: usize,
        expected: usize,
        found: usize,
    },
    #[error("joint {0} axis is not a unit vector")]
    NonUnitAxis(usize),
    #[error("joint {joint} has inverted limits: min {min} >= max {max}")]
    InvertedLimits { joint: usize, min: f64, max: f64 },
    #[error("joint {joint} limits [{min}, {max}] outside [-pi, pi]")]
    LimitRange { joint: usize, min: f64, max: f64 },
    #[error("joint {0} rest rotation is not a unit quaternion")]
    NonUnitRotation(usize),
    #[error("chain {0} tip rotation is not a unit quaternion")]
    NonUnitTip(usize),
    #[error("joint {joint} parent mismatch: declared {declared:?}, chain implies {implied:?}")]
    Parent {
        joint: usize,
        declared: Option<usize>,
        implied: Option<usize>,
    },
    #[error("joint {0} is not used by exactly one chain")]
    Coverage(usize),
    #[error("chain {0} scale must be positive")]
    Scale(usize),
    #[error("joint vector has {found} entries, model has {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

/// A rigid transform as written in configuration documents.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformDoc {
    #[serde(default)]
    pub xyz: [f64; 3],
    /// Unit quaternion `[w, x, y, z]`.
    #[serde(default = "identity_quat")]
    pub quat: [f64; 4],
}

fn identity_quat() -> [f64; 4] {
    [1.0, 0.0, 0.0, 0.0]
}

impl Default for TransformDoc {
    fn default() -> Self {
        Self {
            xyz: [0.0; 3],
            quat: identity_quat(),
        }
    }
}

impl TransformDoc {
    fn to_isometry(self) -> Option<Isometry3<f64>> {
        let [w, x, y, z] = self.quat;
        let q = Quaternion::new(w, x, y, z);
        if (q.norm() - 1.0).abs() > UNIT_TOLERANCE || !self.xyz.iter().all(|v| v.is_finite()) {
            return None;
        }
        Some(Isometry3::from_parts(
            Translation3::new(self.xyz[0], self.xyz[1], self.xyz[2]),
            UnitQuaternion::new_unchecked(q),
        ))
    }

    pub fn from_isometry(iso: &Isometry3<f64>) -> Self {
        let q = iso.rotation.quaternion();
        Self {
            xyz: [iso.translation.x, iso.translation.y, iso.translation.z],
            quat: [q.w, q.i, q.j, q.k],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDoc {
    #[serde(default)]
    pub name: String,
    pub axis: [f64; 3],
    /// `[min, max]` in radians.
    pub limits: [f64; 2],
    /// Index of the parent joint; absent for chain roots.
    #[serde(default)]
    pub parent: Option<usize>,
    #[serde(default)]
    pub origin: TransformDoc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainDoc {
    #[serde(default)]
    pub name: String,
    pub joints: Vec<usize>,
    #[serde(default)]
    pub tip: TransformDoc,
    /// Default target scale for this chain.
    #[serde(default = "unit_scale")]
    pub lambda: f64,
}

fn unit_scale() -> f64 {
    1.0
}

/// Document form of a kinematic model (`[model]` or `[model.arm]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDoc {
    pub joints: Vec<JointDoc>,
    #[serde(alias = "fingers")]
    pub chains: Vec<ChainDoc>,
}

/// One revolute joint.
#[derive(Debug, Clone, PartialEq)]
pub struct JointSpec {
    pub name: String,
    /// Rotation axis in the joint frame.
    pub axis: Unit<Vector3<f64>>,
    pub limit_min: f64,
    pub limit_max: f64,
    pub parent: Option<usize>,
    /// Rest transform from the parent's rotated frame (or the base).
    pub origin: Isometry3<f64>,
}

impl JointSpec {
    pub fn clamp(&self, theta: f64) -> f64 {
        theta.clamp(self.limit_min, self.limit_max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub name: String,
    pub joints: Vec<usize>,
    pub tip: Isometry3<f64>,
    pub lambda: f64,
}

/// World-frame quantities of one chain at a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    /// Origin of each joint in the base frame.
    pub origins: Vec<Vector3<f64>>,
    /// Rotation axis of each joint in the base frame.
    pub axes: Vec<Vector3<f64>>,
    pub tip: Isometry3<f64>,
}

impl ChainState {
    pub fn position(&self) -> Vector3<f64> {
        self.tip.translation.vector
    }

    pub fn rotation(&self) -> Matrix3<f64> {
        self.tip.rotation.to_rotation_matrix().into_inner()
    }

    /// Derivative of the tip position with respect to the chain's `k`-th joint.
    pub fn position_derivative(&self, k: usize) -> Vector3<f64> {
        self.axes[k].cross(&(self.position() - self.origins[k]))
    }
}

/// A validated set of revolute chains sharing a base frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Kinematics {
    joints: Vec<JointSpec>,
    chains: Vec<Chain>,
}

impl Kinematics {
    /// Validates structural invariants that hold for every model: unit axes,
    /// ordered limits, unit rest rotations, chains that partition the joints
    /// with consistent parent links.
    pub fn new(joints: Vec<JointSpec>, chains: Vec<Chain>) -> Result<Self, ModelError> {
        for (i, j) in joints.iter().enumerate() {
            if !j.limit_min.is_finite() || !j.limit_max.is_finite() {
                return Err(ModelError::NonFinite("joint limits"));
            }
            if j.limit_min >= j.limit_max {
                return Err(ModelError::InvertedLimits {
                    joint: i,
                    min: j.limit_min,
                    max: j.limit_max,
                });
            }
            let pi = std::f64::consts::PI;
            if j.limit_min < -pi || j.limit_max > pi {
                return Err(ModelError::LimitRange {
                    joint: i,
                    min: j.limit_min,
                    max: j.limit_max,
                });
            }
        }
        let mut owner = vec![None; joints.len()];
        for (c, chain) in chains.iter().enumerate() {
            if !(chain.lambda > 0.0) {
                return Err(ModelError::Scale(c));
            }
            let mut prev = None;
            for &j in &chain.joints {
                if j >= joints.len() || owner[j].is_some() {
                    return Err(ModelError::Coverage(j.min(joints.len().saturating_sub(1))));
                }
                owner[j] = Some(c);
                if joints[j].parent != prev {
                    return Err(ModelError::Parent {
                        joint: j,
                        declared: joints[j].parent,
                        implied: prev,
                    });
                }
                prev = Some(j);
            }
        }
        if let Some(j) = owner.iter().position(Option::is_none) {
            return Err(ModelError::Coverage(j));
        }
        Ok(Self { joints, chains })
    }

    /// Builds a model from its document form.
    pub fn from_doc(doc: &ModelDoc) -> Result<Self, ModelError> {
        let mut joints = Vec::with_capacity(doc.joints.len());
        for (i, j) in doc.joints.iter().enumerate() {
            let axis = Vector3::from(j.axis);
            if !axis.iter().all(|v| v.is_finite()) || (axis.norm() - 1.0).abs() > UNIT_TOLERANCE {
                return Err(ModelError::NonUnitAxis(i));
            }
            let origin = j.origin.to_isometry().ok_or(ModelError::NonUnitRotation(i))?;
            joints.push(JointSpec {
                name: j.name.clone(),
                axis: Unit::new_unchecked(axis),
                limit_min: j.limits[0],
                limit_max: j.limits[1],
                parent: j.parent,
                origin,
            });
        }
        let mut chains = Vec::with_capacity(doc.chains.len());
        for (c, ch) in doc.chains.iter().enumerate() {
            chains.push(Chain {
                name: ch.name.clone(),
                joints: ch.joints.clone(),
                tip: ch.tip.to_isometry().ok_or(ModelError::NonUnitTip(c))?,
                lambda: ch.lambda,
            });
        }
        Self::new(joints, chains)
    }

    pub fn to_doc(&self) -> ModelDoc {
        ModelDoc {
            joints: self
                .joints
                .iter()
                .map(|j| JointDoc {
                    name: j.name.clone(),
                    axis: [j.axis.x, j.axis.y, j.axis.z],
                    limits: [j.limit_min, j.limit_max],
                    parent: j.parent,
                    origin: TransformDoc::from_isometry(&j.origin),
                })
                .collect(),
            chains: self
                .chains
                .iter()
                .map(|c| ChainDoc {
                    name: c.name.clone(),
                    joints: c.joints.clone(),
                    tip: TransformDoc::from_isometry(&c.tip),
                    lambda: c.lambda,
                })
                .collect(),
        }
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn joints(&self) -> &[JointSpec] {
        &self.joints
    }

    pub fn chains(&self) -> &[Chain] {
        &self.chains
    }

    pub fn lower_limits(&self) -> Vec<f64> {
        self.joints.iter().map(|j| j.limit_min).collect()
    }

    pub fn upper_limits(&self) -> Vec<f64> {
        self.joints.iter().map(|j| j.limit_max).collect()
    }

    pub fn clamp(&self, theta: &[f64]) -> Vec<f64> {
        self.joints
            .iter()
            .zip(theta)
            .map(|(j, &t)| j.clamp(t))
            .collect()
    }

    /// Indices of joints whose value lies outside its limits.
    pub fn limit_violations(&self, theta: &[f64]) -> Vec<usize> {
        self.joints
            .iter()
            .zip(theta)
            .enumerate()
            .filter(|(_, (j, &t))| t < j.limit_min || t > j.limit_max)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn check_dimension(&self, theta: &[f64]) -> Result<(), ModelError> {
        if theta.len() != self.dof() {
            return Err(ModelError::Dimension {
                expected: self.dof(),
                found: theta.len(),
            });
        }
        Ok(())
    }

    /// Composes rest transforms and joint rotations along one chain.
    pub fn chain_state(&self, chain: usize, theta: &[f64]) -> ChainState {
        let ch = &self.chains[chain];
        let mut frame = Isometry3::identity();
        let mut origins = Vec::with_capacity(ch.joints.len());
        let mut axes = Vec::with_capacity(ch.joints.len());
        for &j in &ch.joints {
            let spec = &self.joints[j];
            frame *= spec.origin;
            origins.push(frame.translation.vector);
            axes.push(frame.rotation * spec.axis.into_inner());
            frame.rotation *= UnitQuaternion::from_axis_angle(&spec.axis, theta[j]);
        }
        ChainState {
            origins,
            axes,
            tip: frame * ch.tip,
        }
    }

    /// States of every chain; `theta` must have `dof()` entries.
    pub fn forward(&self, theta: &[f64]) -> Vec<ChainState> {
        (0..self.chains.len())
            .map(|c| self.chain_state(c, theta))
            .collect()
    }

    /// Tip poses of every chain.
    pub fn tip_poses(&self, theta: &[f64]) -> Result<Vec<FingertipPose>, ModelError> {
        self.check_dimension(theta)?;
        Ok(self
            .forward(theta)
            .into_iter()
            .enumerate()
            .map(|(c, s)| FingertipPose::from_isometry(c, &s.tip))
            .collect())
    }

    /// Sum of rest and tip translation lengths along a chain.
    pub fn chain_length(&self, chain: usize) -> f64 {
        let ch = &self.chains[chain];
        ch.joints
            .iter()
            .skip(1)
            .map(|&j| self.joints[j].origin.translation.vector.norm())
            .sum::<f64>()
            + ch.tip.translation.vector.norm()
    }

    /// Per-chain default scale factors.
    pub fn default_lambdas(&self) -> Vec<f64> {
        self.chains.iter().map(|c| c.lambda).collect()
    }
}

/// Position and orientation of one fingertip in the wrist frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FingertipPose {
    pub finger_id: usize,
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion<f64>,
}

impl FingertipPose {
    pub fn new(finger_id: usize, position: Vector3<f64>, orientation: UnitQuaternion<f64>) -> Self {
        Self {
            finger_id,
            position,
            orientation,
        }
    }

    pub fn from_isometry(finger_id: usize, iso: &Isometry3<f64>) -> Self {
        Self::new(finger_id, iso.translation.vector, iso.rotation)
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        self.orientation.to_rotation_matrix().into_inner()
    }
}

impl fmt::Display for FingertipPose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let q = self.orientation.quaternion();
        write!(
            f,
            "{} p=({:.6}, {:.6}, {:.6}) q=({:.6}, {:.6}, {:.6}, {:.6})",
            FINGER_NAMES.get(self.finger_id).unwrap_or(&"chain"),
            self.position.x,
            self.position.y,
            self.position.z,
            q.w,
            q.i,
            q.j,
            q.k
        )
    }
}

/// The glove's 21-DoF hand: a thumb chain of five joints followed by four
/// finger chains of four joints each.
#[derive(Debug, Clone, PartialEq)]
pub struct HandModel {
    kinematics: Kinematics,
}

impl HandModel {
    pub const THUMB_JOINTS: usize = 5;
    pub const FINGER_JOINTS: usize = 4;

    pub fn new(kinematics: Kinematics) -> Result<Self, ModelError> {
        if kinematics.dof() != JOINT_COUNT {
            return Err(ModelError::JointCount {
                expected: JOINT_COUNT,
                found: kinematics.dof(),
            });
        }
        if kinematics.chains().len() != FINGER_NAMES.len() {
            return Err(ModelError::FingerCount {
                expected: FINGER_NAMES.len(),
                found: kinematics.chains().len(),
            });
        }
        for (f, chain) in kinematics.chains().iter().enumerate() {
            let expected = if f == 0 {
                Self::THUMB_JOINTS
            } else {
                Self::FINGER_JOINTS
            };
            if chain.joints.len() != expected {
                return Err(ModelError::ChainLength {
                    finger: f,
                    expected,
                    found: chain.joints.len(),
                });
            }
        }
        Ok(Self { kinematics })
    }

    /// The model bundled with the crate.
    pub fn default_model() -> Self {
        let config = crate::config::PipelineConfig::bundled();
        load_model(&config.model.hand).expect("bundled model is valid")
    }

    pub fn kinematics(&self) -> &Kinematics {
        &self.kinematics
    }
}

impl std::ops::Deref for HandModel {
    type Target = Kinematics;

    fn deref(&self) -> &Kinematics {
        &self.kinematics
    }
}

/// Validates a hand model document.
pub fn load_model(doc: &ModelDoc) -> Result<HandModel, ModelError> {
    if doc.joints.len() != JOINT_COUNT {
        return Err(ModelError::JointCount {
            expected: JOINT_COUNT,
            found: doc.joints.len(),
        });
    }
    HandModel::new(Kinematics::from_doc(doc)?)
}

/// Fingertip poses of the hand at `theta`. Limits are not enforced here;
/// callers may inspect [`Kinematics::limit_violations`].
pub fn forward_kinematics(
    model: &HandModel,
    theta: &[f64],
) -> Result<Vec<FingertipPose>, ModelError> {
    model.tip_poses(theta)
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("scale for finger {finger} must be positive, got {value}")]
pub struct ScaleError {
    pub finger: usize,
    pub value: f64,
}

/// Scales fingertip positions per finger, leaving orientations untouched.
pub fn scale_targets(
    poses: &[FingertipPose],
    lambdas: &[f64],
) -> Result<Vec<FingertipPose>, ScaleError> {
    poses
        .iter()
        .map(|p| {
            let value = lambdas.get(p.finger_id).copied().unwrap_or(f64::NAN);
            if !(value > 0.0) || !value.is_finite() {
                return Err(ScaleError {
                    finger: p.finger_id,
                    value,
                });
            }
            Ok(FingertipPose {
                position: p.position * value,
                ..*p
            })
        })
        .collect()
}
