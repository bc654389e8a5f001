//! Signal chain of a tactile teleoperation glove: magnetic joint encoders,
//! hand kinematics, hand and arm retargeting, tactile feedback mapping,
//! actuator driver encoding and resistive tactile sensor readout.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod actuator;
pub mod bench;
pub mod config;
pub mod io;
pub mod kinematics;
pub mod mag;
pub mod replay;
pub mod retarget;
pub mod scan;
pub mod stats;
pub mod synth;
pub mod tactile;

pub use config::PipelineConfig;
pub use kinematics::{FingertipPose, HandModel, Kinematics};
pub use mag::{CalibrationState, JointAngle, MagSample};
pub use retarget::{RetargetConfig, RetargetResult};
pub use tactile::{SensorGrid, TaxelPattern, TaxelState};
