use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use super::solver::{minimize, Objective};
use super::{opposition_weight, RetargetConfig, RetargetError, RetargetResult};
use crate::kinematics::{ChainState, FingertipPose, Kinematics};

/// Fingertip matching objective with thumb-finger opposition and a pull
/// toward the previous solution.
///
/// Chain 0 is the thumb; opposition distances are measured from its tip to
/// the tip of every other chain. Each opposition gain is evaluated at the
/// current distance and treated as a constant when differentiating.
#[derive(Debug, Clone)]
pub struct HandObjective<'a> {
    kin: &'a Kinematics,
    target_positions: Vec<Vector3<f64>>,
    target_rotations: Vec<Matrix3<f64>>,
    theta_last: &'a [f64],
    opposition: &'a [f64],
    config: &'a RetargetConfig,
    frozen_weights: Option<Vec<f64>>,
}

impl<'a> HandObjective<'a> {
    pub fn new(
        kin: &'a Kinematics,
        targets: &[FingertipPose],
        theta_last: &'a [f64],
        opposition: &'a [f64],
        config: &'a RetargetConfig,
    ) -> Result<Self, RetargetError> {
        kin.check_dimension(theta_last)?;
        let chains = kin.chains().len();
        if targets.len() != chains {
            return Err(RetargetError::TargetCount {
                expected: chains,
                found: targets.len(),
            });
        }
        let pairs = chains.saturating_sub(1);
        if opposition.len() != pairs {
            return Err(RetargetError::OppositionCount {
                expected: pairs,
                found: opposition.len(),
            });
        }
        let mut ordered: Vec<Option<&FingertipPose>> = vec![None; chains];
        for t in targets {
            match ordered.get_mut(t.finger_id) {
                Some(slot @ None) => *slot = Some(t),
                _ => {
                    return Err(RetargetError::TargetCount {
                        expected: chains,
                        found: targets.len(),
                    })
                }
            }
        }
        let ordered: Vec<&FingertipPose> = ordered.into_iter().map(|t| t.unwrap()).collect();
        Ok(Self {
            kin,
            target_positions: ordered.iter().map(|t| t.position).collect(),
            target_rotations: ordered.iter().map(|t| t.rotation_matrix()).collect(),
            theta_last,
            opposition,
            config,
            frozen_weights: None,
        })
    }

    /// Evaluates opposition terms with fixed gains instead of gains at the
    /// current distances.
    pub fn with_frozen_weights(mut self, weights: Vec<f64>) -> Self {
        self.frozen_weights = Some(weights);
        self
    }

    /// Opposition gains at `theta`.
    pub fn opposition_weights(&self, theta: &[f64]) -> Vec<f64> {
        let states = self.kin.forward(theta);
        opposition_distances(&states)
            .into_iter()
            .map(|d| opposition_weight(d, self.config))
            .collect()
    }

    fn weight(&self, j: usize, d: f64) -> f64 {
        match &self.frozen_weights {
            Some(w) => w[j],
            None => opposition_weight(d, self.config),
        }
    }

    fn accumulate(
        &self,
        theta: &[f64],
        mut grad: Option<(&mut DVector<f64>, &mut DMatrix<f64>)>,
    ) -> f64 {
        let cfg = self.config;
        let states = self.kin.forward(theta);
        let mut cost = 0.0;

        for (c, (state, chain)) in states.iter().zip(self.kin.chains()).enumerate() {
            let dp = state.position() - self.target_positions[c];
            let rot = state.rotation();
            let dr = rot - self.target_rotations[c];
            cost += cfg.w1 * dp.norm_squared() + cfg.w2 * dr.norm_squared();
            if let Some((g, h)) = grad.as_mut() {
                let n = chain.joints.len();
                let jp: Vec<Vector3<f64>> = (0..n).map(|k| state.position_derivative(k)).collect();
                let jr: Vec<Matrix3<f64>> =
                    (0..n).map(|k| state.axes[k].cross_matrix() * rot).collect();
                for a in 0..n {
                    let ja = chain.joints[a];
                    g[ja] += 2.0 * (cfg.w1 * jp[a].dot(&dp) + cfg.w2 * jr[a].dot(&dr));
                    for b in a..n {
                        let jb = chain.joints[b];
                        let v = 2.0 * (cfg.w1 * jp[a].dot(&jp[b]) + cfg.w2 * jr[a].dot(&jr[b]));
                        h[(ja, jb)] += v;
                        if a != b {
                            h[(jb, ja)] += v;
                        }
                    }
                }
            }
        }

        for (k, (&t, &last)) in theta.iter().zip(self.theta_last).enumerate() {
            let r = t - last;
            cost += cfg.alpha * r * r;
            if let Some((g, h)) = grad.as_mut() {
                g[k] += 2.0 * cfg.alpha * r;
                h[(k, k)] += 2.0 * cfg.alpha;
            }
        }

        if states.len() > 1 {
            let thumb = &states[0];
            let thumb_joints = &self.kin.chains()[0].joints;
            for (j, state) in states.iter().enumerate().skip(1) {
                let diff = thumb.position() - state.position();
                let d = diff.norm();
                let w = self.weight(j - 1, d);
                let r = d - self.opposition[j - 1];
                cost += w * r * r;
                if w == 0.0 || d == 0.0 {
                    continue;
                }
                if let Some((g, h)) = grad.as_mut() {
                    let u = diff / d;
                    let finger_joints = &self.kin.chains()[j].joints;
                    // Row of d(distance)/d(theta) over thumb and finger joints.
                    let row: Vec<(usize, f64)> = thumb_joints
                        .iter()
                        .enumerate()
                        .map(|(k, &q)| (q, u.dot(&thumb.position_derivative(k))))
                        .chain(
                            finger_joints
                                .iter()
                                .enumerate()
                                .map(|(k, &q)| (q, -u.dot(&state.position_derivative(k)))),
                        )
                        .collect();
                    for &(a, ra) in &row {
                        g[a] += 2.0 * w * r * ra;
                        for &(b, rb) in &row {
                            h[(a, b)] += 2.0 * w * ra * rb;
                        }
                    }
                }
            }
        }
        cost
    }
}

impl Objective for HandObjective<'_> {
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

fn opposition_distances(states: &[ChainState]) -> Vec<f64> {
    let thumb = states[0].position();
    states[1..]
        .iter()
        .map(|s| (thumb - s.position()).norm())
        .collect()
}

/// Thumb-to-finger distances of a set of fingertip targets.
pub fn opposition_targets(targets: &[FingertipPose]) -> Vec<f64> {
    let Some(thumb) = targets.iter().find(|t| t.finger_id == 0) else {
        return Vec::new();
    };
    let mut others: Vec<&FingertipPose> = targets.iter().filter(|t| t.finger_id != 0).collect();
    others.sort_by_key(|t| t.finger_id);
    others
        .iter()
        .map(|t| (thumb.position - t.position).norm())
        .collect()
}

/// Cost and analytic gradient of the hand retargeting objective.
pub fn hand_cost(
    theta: &[f64],
    targets: &[FingertipPose],
    theta_last: &[f64],
    opposition: &[f64],
    config: &RetargetConfig,
    model: &Kinematics,
) -> Result<(f64, Vec<f64>), RetargetError> {
    model.check_dimension(theta)?;
    let obj = HandObjective::new(model, targets, theta_last, opposition, config)?;
    let n = model.dof();
    let mut g = DVector::zeros(n);
    let mut h = DMatrix::zeros(n, n);
    let cost = obj.evaluate(theta, &mut g, &mut h);
    Ok((cost, g.iter().copied().collect()))
}

/// Solves for robot joint angles, warm-started at `theta_last`.
pub fn solve_hand_retarget(
    targets: &[FingertipPose],
    theta_last: &[f64],
    opposition: &[f64],
    config: &RetargetConfig,
    model: &Kinematics,
) -> Result<RetargetResult, RetargetError> {
    solve_hand_retarget_observed(targets, theta_last, opposition, config, model, |_| {})
}

/// As [`solve_hand_retarget`], reporting the cost after every iterate.
pub fn solve_hand_retarget_observed(
    targets: &[FingertipPose],
    theta_last: &[f64],
    opposition: &[f64],
    config: &RetargetConfig,
    model: &Kinematics,
    observer: impl FnMut(f64),
) -> Result<RetargetResult, RetargetError> {
    config.validate()?;
    let obj = HandObjective::new(model, targets, theta_last, opposition, config)?;
    let solution = minimize(
        &obj,
        theta_last,
        &model.lower_limits(),
        &model.upper_limits(),
        config.solver_options(),
        observer,
    );
    Ok(solution.into())
}
