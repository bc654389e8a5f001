//! Independent reference implementations used as test oracles. Nothing
//! here calls into the library's numerical code.

#![allow(dead_code)]

use glove_core::kinematics::ModelDoc;

pub type Mat4 = [[f64; 4]; 4];

pub fn identity4() -> Mat4 {
    let mut m = [[0.0; 4]; 4];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    m
}

pub fn mul4(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut m = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    m
}

/// Homogeneous transform from a translation and a `[w, x, y, z]` quaternion.
pub fn transform(xyz: [f64; 3], q: [f64; 4]) -> Mat4 {
    let [w, x, y, z] = q;
    [
        [1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y), xyz[0]],
        [2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x), xyz[1]],
        [2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y), xyz[2]],
        [0.0, 0.0, 0.0, 1.0],
    ]
}

/// Rodrigues rotation about a unit axis.
pub fn rotation(axis: [f64; 3], angle: f64) -> Mat4 {
    let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let [x, y, z] = [axis[0] / n, axis[1] / n, axis[2] / n];
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    [
        [t * x * x + c, t * x * y - s * z, t * x * z + s * y, 0.0],
        [t * x * y + s * z, t * y * y + c, t * y * z - s * x, 0.0],
        [t * x * z - s * y, t * y * z + s * x, t * z * z + c, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ]
}

/// Tip transform of every chain, walking parent links from the tip joint
/// back to the root.
pub fn fk_oracle(doc: &ModelDoc, theta: &[f64]) -> Vec<Mat4> {
    doc.chains
        .iter()
        .map(|chain| {
            let mut path = Vec::new();
            let mut j = Some(*chain.joints.last().unwrap());
            while let Some(k) = j {
                path.push(k);
                j = doc.joints[k].parent;
            }
            path.reverse();
            let mut m = identity4();
            for k in path {
                let jd = &doc.joints[k];
                m = mul4(&m, &transform(jd.origin.xyz, jd.origin.quat));
                m = mul4(&m, &rotation(jd.axis, theta[k]));
            }
            mul4(&m, &transform(chain.tip.xyz, chain.tip.quat))
        })
        .collect()
}

pub fn translation(m: &Mat4) -> [f64; 3] {
    [m[0][3], m[1][3], m[2][3]]
}

/// Bilinear sample by scanning every cell for the one containing `(u, v)`.
/// Node `(r, c)` sits at `((c + 0.5) / cols, (r + 0.5) / rows)`; points
/// outside the node hull clamp to it.
pub fn bilinear_oracle(values: &[f64], rows: usize, cols: usize, u: f64, v: f64) -> f64 {
    let node_u = |c: usize| (c as f64 + 0.5) / cols as f64;
    let node_v = |r: usize| (r as f64 + 0.5) / rows as f64;
    let u = u.clamp(node_u(0), node_u(cols - 1));
    let v = v.clamp(node_v(0), node_v(rows - 1));
    let locate = |x: f64, n: usize, node: &dyn Fn(usize) -> f64| -> (usize, usize, f64) {
        if n == 1 {
            return (0, 0, 0.0);
        }
        for i in 0..n - 1 {
            let (a, b) = (node(i), node(i + 1));
            if x >= a && x <= b {
                return (i, i + 1, (x - a) / (b - a));
            }
        }
        (n - 2, n - 1, 1.0)
    };
    let (c0, c1, tx) = locate(u, cols, &node_u);
    let (r0, r1, ty) = locate(v, rows, &node_v);
    let at = |r: usize, c: usize| values[r * cols + c];
    (1.0 - ty) * ((1.0 - tx) * at(r0, c0) + tx * at(r0, c1))
        + ty * ((1.0 - tx) * at(r1, c0) + tx * at(r1, c1))
}

/// Planar two-link arm about z, links along x.
#[derive(Debug, Clone, Copy)]
pub struct Planar {
    pub l1: f64,
    pub l2: f64,
}

impl Planar {
    pub fn tip(&self, t1: f64, t2: f64) -> [f64; 2] {
        [
            self.l1 * t1.cos() + self.l2 * (t1 + t2).cos(),
            self.l1 * t1.sin() + self.l2 * (t1 + t2).sin(),
        ]
    }

    /// Closed-form inverse kinematics with the elbow on the positive side.
    pub fn ik(&self, x: f64, y: f64) -> (f64, f64) {
        let c2 = (x * x + y * y - self.l1 * self.l1 - self.l2 * self.l2) / (2.0 * self.l1 * self.l2);
        let t2 = c2.clamp(-1.0, 1.0).acos();
        let t1 = y.atan2(x) - (self.l2 * t2.sin()).atan2(self.l1 + self.l2 * t2.cos());
        (t1, t2)
    }

    /// Hand-objective cost for one planar chain with tip orientation
    /// `phi` = t1 + t2: squared position error, squared Frobenius distance
    /// of z-rotations, and a pull toward `last`.
    pub fn cost(&self, t: [f64; 2], target: [f64; 2], phi: f64, last: [f64; 2], w: [f64; 3]) -> f64 {
        let p = self.tip(t[0], t[1]);
        let dp = (p[0] - target[0]).powi(2) + (p[1] - target[1]).powi(2);
        let dr = 4.0 * (1.0 - (t[0] + t[1] - phi).cos());
        let reg = (t[0] - last[0]).powi(2) + (t[1] - last[1]).powi(2);
        w[0] * dp + w[1] * dr + w[2] * reg
    }
}

/// Exhaustive grid search over a box followed by successively finer local
/// grids around the incumbent.
pub fn grid_minimize(
    f: impl Fn([f64; 2]) -> f64,
    lo: [f64; 2],
    hi: [f64; 2],
    n: usize,
) -> [f64; 2] {
    let mut best = lo;
    let mut best_f = f64::INFINITY;
    let scan = |lo: [f64; 2], hi: [f64; 2], best: &mut [f64; 2], best_f: &mut f64| {
        for i in 0..n {
            for j in 0..n {
                let x = [
                    lo[0] + (hi[0] - lo[0]) * i as f64 / (n - 1) as f64,
                    lo[1] + (hi[1] - lo[1]) * j as f64 / (n - 1) as f64,
                ];
                let v = f(x);
                if v < *best_f {
                    *best_f = v;
                    *best = x;
                }
            }
        }
    };
    scan(lo, hi, &mut best, &mut best_f);
    let mut half = [(hi[0] - lo[0]) / (n - 1) as f64, (hi[1] - lo[1]) / (n - 1) as f64];
    for _ in 0..6 {
        let a = [(best[0] - half[0]).max(lo[0]), (best[1] - half[1]).max(lo[1])];
        let b = [(best[0] + half[0]).min(hi[0]), (best[1] + half[1]).min(hi[1])];
        let small = n.min(101);
        let local = |lo: [f64; 2], hi: [f64; 2], best: &mut [f64; 2], best_f: &mut f64| {
            for i in 0..small {
                for j in 0..small {
                    let x = [
                        lo[0] + (hi[0] - lo[0]) * i as f64 / (small - 1) as f64,
                        lo[1] + (hi[1] - lo[1]) * j as f64 / (small - 1) as f64,
                    ];
                    let v = f(x);
                    if v < *best_f {
                        *best_f = v;
                        *best = x;
                    }
                }
            }
        };
        local(a, b, &mut best, &mut best_f);
        half = [half[0] * 2.0 / (small - 1) as f64, half[1] * 2.0 / (small - 1) as f64];
    }
    best
}

/// 3x3 rotation matrix of a `[w, x, y, z]` quaternion.
pub fn quat_matrix(q: [f64; 4]) -> [[f64; 3]; 3] {
    let m = transform([0.0; 3], q);
    [
        [m[0][0], m[0][1], m[0][2]],
        [m[1][0], m[1][1], m[1][2]],
        [m[2][0], m[2][1], m[2][2]],
    ]
}

pub fn mul3(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    m
}

pub fn transpose3(a: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = a[j][i];
        }
    }
    m
}
