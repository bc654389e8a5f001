use nalgebra::{DMatrix, DVector, Isometry3, Matrix3, Vector3};

use super::solver::{minimize, Objective};
use super::{RetargetConfig, RetargetError, RetargetResult};
use crate::kinematics::Kinematics;

/// Smoothing of the unsquared orientation distance near an exact match.
pub const FROBENIUS_EPSILON: f64 = 1e-9;

/// End-effector pose objective with an unsquared Frobenius orientation
/// term, smoothed as `sqrt(f + eps^2) - eps` so it vanishes at a match.
#[derive(Debug, Clone)]
pub struct ArmObjective<'a> {
    kin: &'a Kinematics,
    target_position: Vector3<f64>,
    target_rotation: Matrix3<f64>,
    theta_last: &'a [f64],
    config: &'a RetargetConfig,
}

impl<'a> ArmObjective<'a> {
    pub fn new(
        kin: &'a Kinematics,
        target: &Isometry3<f64>,
        theta_last: &'a [f64],
        config: &'a RetargetConfig,
    ) -> Result<Self, RetargetError> {
        if kin.chains().len() != 1 {
            return Err(RetargetError::NotSerial);
        }
        kin.check_dimension(theta_last)?;
        Ok(Self {
            kin,
            target_position: target.translation.vector,
            target_rotation: target.rotation.to_rotation_matrix().into_inner(),
            theta_last,
            config,
        })
    }

    fn accumulate(&self, theta: &[f64], grad: Option<(&mut DVector<f64>, &mut DMatrix<f64>)>) -> f64 {
        let cfg = self.config;
        let state = self.kin.chain_state(0, theta);
        let joints = &self.kin.chains()[0].joints;
        let dp = state.position() - self.target_position;
        let rot = state.rotation();
        let dr = rot - self.target_rotation;
        let f = dr.norm_squared();
        let s = (f + FROBENIUS_EPSILON * FROBENIUS_EPSILON).sqrt();
        let reg: f64 = theta
            .iter()
            .zip(self.theta_last)
            .map(|(t, l)| (t - l) * (t - l))
            .sum();
        let cost = cfg.w1 * dp.norm_squared() + cfg.w2 * (s - FROBENIUS_EPSILON) + cfg.alpha * reg;

        if let Some((g, h)) = grad {
            let n = joints.len();
            let jp: Vec<Vector3<f64>> = (0..n).map(|k| state.position_derivative(k)).collect();
            let jr: Vec<Matrix3<f64>> = (0..n).map(|k| state.axes[k].cross_matrix() * rot).collect();
            // d/dθ of w2·sqrt(f + ε²) is w2·(∂f/∂θ)/(2s) with ∂f/∂θ = 2⟨∂R, R - R*⟩.
            let orient = cfg.w2 / s;
            for a in 0..n {
                let ja = joints[a];
                g[ja] += 2.0 * cfg.w1 * jp[a].dot(&dp) + orient * jr[a].dot(&dr);
                for b in a..n {
                    let jb = joints[b];
                    let v = 2.0 * cfg.w1 * jp[a].dot(&jp[b]) + orient * jr[a].dot(&jr[b]);
                    h[(ja, jb)] += v;
                    if a != b {
                        h[(jb, ja)] += v;
                    }
                }
            }
            for (k, (&t, &l)) in theta.iter().zip(self.theta_last).enumerate() {
                g[k] += 2.0 * cfg.alpha * (t - l);
                h[(k, k)] += 2.0 * cfg.alpha;
            }
        }
        cost
    }
}

impl Objective for ArmObjective<'_> {
    fn dim(&self) -> usize {
        self.kin.dof()
    }

    fn cost(&self, x: &[f64]) -> f64 {
        self.accumulate(x, None)
    }

    fn evaluate(&self, x: &[f64], grad: &mut DVector<f64>, curvature: &mut DMatrix<f64>) -> f64 {
        self.accumulate(x, Some((grad, curvature)))
    }
}

/// Inverse kinematics for a serial arm, warm-started at `theta_last`.
pub fn solve_arm_ik(
    target: &Isometry3<f64>,
    theta_last: &[f64],
    arm: &Kinematics,
    config: &RetargetConfig,
) -> Result<RetargetResult, RetargetError> {
    config.validate()?;
    let obj = ArmObjective::new(arm, target, theta_last, config)?;
    let solution = minimize(
        &obj,
        theta_last,
        &arm.lower_limits(),
        &arm.upper_limits(),
        config.solver_options(),
        |_| {},
    );
    Ok(solution.into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::PipelineConfig;

    fn default_arm() -> Kinematics {
        let doc = PipelineConfig::bundled().model.arm.unwrap();
        Kinematics::from_doc(&doc).unwrap()
    }

    #[test]
    fn fixed_point() {
        let arm = default_arm();
        let theta = vec![0.3, -0.4, 0.9, 0.2, -0.5, 0.7];
        let target = arm.chain_state(0, &theta).tip;
        let cfg = RetargetConfig::default();
        let r = solve_arm_ik(&target, &theta, &arm, &cfg).unwrap();
        assert!(r.converged);
        assert_eq!(r.theta, theta);
        assert!(r.cost <= 1e-9);
    }

    #[test]
    fn reaches_perturbed_target() {
        let arm = default_arm();
        let start = vec![0.1, -0.3, 1.0, 0.3, -0.2, 0.4];
        let goal = vec![0.2, -0.2, 0.8, 0.4, -0.3, 0.5];
        let target = arm.chain_state(0, &goal).tip;
        let cfg = RetargetConfig {
            alpha: 0.0,
            ..Default::default()
        };
        let r = solve_arm_ik(&target, &start, &arm, &cfg).unwrap();
        let reached = arm.chain_state(0, &r.theta).tip;
        assert!((reached.translation.vector - target.translation.vector).norm() < 1e-6);
        assert!(reached.rotation.angle_to(&target.rotation) < 1e-5);
    }
}
