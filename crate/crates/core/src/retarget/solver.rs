//! Box-constrained minimization by projected Newton steps.
//!
//! Each iteration fixes the variables sitting on a bound whose gradient
//! pushes outward, takes a damped Newton step on the remaining variables
//! using the objective's positive semidefinite curvature model, and
//! backtracks along the projected path until the Armijo condition holds.
//! When the Newton direction fails to descend the solver falls back to a
//! projected-gradient step. Every accepted step lowers the objective.

use nalgebra::{DMatrix, DVector};

/// A smooth-enough objective with a Gauss-Newton style curvature model.
pub trait Objective {
    fn dim(&self) -> usize;

    fn cost(&self, x: &[f64]) -> f64;

    /// Returns the cost and fills the gradient and a positive semidefinite
    /// curvature matrix. Both buffers arrive zeroed.
    fn evaluate(&self, x: &[f64], grad: &mut DVector<f64>, curvature: &mut DMatrix<f64>) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Projected-gradient infinity norm and relative-decrease threshold.
    pub tol: f64,
    pub max_iters: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: Vec<f64>,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 40;
/// Damping relative to the largest curvature diagonal.
const RELATIVE_DAMPING: f64 = 1e-10;

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, &lo), &hi) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(lo, hi);
    }
}

fn projected_gradient_norm(x: &[f64], g: &DVector<f64>, lower: &[f64], upper: &[f64]) -> f64 {
    x.iter()
        .zip(g.iter())
        .zip(lower.iter().zip(upper))
        .map(|((&xi, &gi), (&lo, &hi))| ((xi - gi).clamp(lo, hi) - xi).abs())
        .fold(0.0, f64::max)
}

/// Backtracks along `P(x + t d)`; returns the accepted point and its cost.
fn line_search<O: Objective + ?Sized>(
    obj: &O,
    x: &[f64],
    f: f64,
    g: &DVector<f64>,
    d: &DVector<f64>,
    lower: &[f64],
    upper: &[f64],
) -> Option<(Vec<f64>, f64)> {
    let mut t = 1.0;
    let mut trial = vec![0.0; x.len()];
    for _ in 0..MAX_BACKTRACKS {
        for i in 0..x.len() {
            trial[i] = x[i] + t * d[i];
        }
        project(&mut trial, lower, upper);
        let slope: f64 = (0..x.len()).map(|i| g[i] * (trial[i] - x[i])).sum();
        if slope < 0.0 {
            let ft = obj.cost(&trial);
            if ft <= f + ARMIJO * slope {
                return Some((trial, ft));
            }
        } else if trial == x {
            return None;
        }
        t *= 0.5;
    }
    None
}

/// Newton direction on the free variables; `None` if the reduced system is
/// not positive definite or the direction does not descend.
fn newton_direction(
    g: &DVector<f64>,
    h: &DMatrix<f64>,
    free: &[usize],
) -> Option<DVector<f64>> {
    let n = free.len();
    let mut d = DVector::zeros(g.len());
    if n == 0 {
        return None;
    }
    let max_diag = free.iter().map(|&i| h[(i, i)]).fold(0.0, f64::max);
    let mu = RELATIVE_DAMPING * max_diag.max(f64::MIN_POSITIVE) + f64::MIN_POSITIVE;
    let reduced = DMatrix::from_fn(n, n, |r, c| {
        h[(free[r], free[c])] + if r == c { mu } else { 0.0 }
    });
    let rhs = DVector::from_fn(n, |r, _| -g[free[r]]);
    let step = reduced.cholesky()?.solve(&rhs);
    for (r, &i) in free.iter().enumerate() {
        d[i] = step[r];
    }
    if d.dot(g) < 0.0 && d.iter().all(|v| v.is_finite()) {
        Some(d)
    } else {
        None
    }
}

/// Minimizes `obj` over the box `[lower, upper]` starting from `x0`
/// (projected into the box first). `observer` sees the cost after the
/// initial evaluation and after every accepted step.
pub fn minimize<O: Objective + ?Sized>(
    obj: &O,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    options: SolverOptions,
    mut observer: impl FnMut(f64),
) -> Solution {
    let n = obj.dim();
    let mut x = x0.to_vec();
    project(&mut x, lower, upper);
    let mut g = DVector::zeros(n);
    let mut h = DMatrix::zeros(n, n);
    let mut f = obj.evaluate(&x, &mut g, &mut h);
    observer(f);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < options.max_iters {
        let pg = projected_gradient_norm(&x, &g, lower, upper);
        if pg <= options.tol {
            converged = true;
            break;
        }
        let active_eps = pg.min(1e-12);
        let free: Vec<usize> = (0..n)
            .filter(|&i| {
                let at_lower = x[i] <= lower[i] + active_eps && g[i] > 0.0;
                let at_upper = x[i] >= upper[i] - active_eps && g[i] < 0.0;
                !(at_lower || at_upper)
            })
            .collect();
        let mut step = newton_direction(&g, &h, &free)
            .and_then(|d| line_search(obj, &x, f, &g, &d, lower, upper));
        if step.is_none() {
            let scale = (0..n).map(|i| h[(i, i)]).fold(0.0, f64::max);
            let scale = if scale > 0.0 { 1.0 / scale } else { 1.0 };
            let d = -&g * scale;
            step = line_search(obj, &x, f, &g, &d, lower, upper);
        }
        let Some((next, f_next)) = step else {
            // No descent is available along either direction: the cost
            // cannot decrease further at working precision.
            converged = true;
            break;
        };
        iterations += 1;
        let decrease = f - f_next;
        x = next;
        g.fill(0.0);
        h.fill(0.0);
        f = obj.evaluate(&x, &mut g, &mut h);
        observer(f);
        if decrease <= options.tol * f.abs().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }
    if !converged && projected_gradient_norm(&x, &g, lower, upper) <= options.tol {
        converged = true;
    }
    Solution {
        x,
        cost: f,
        iterations,
        converged,
    }
}
