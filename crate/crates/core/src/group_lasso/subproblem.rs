//! Exact minimizer of a two-variable group-lasso block:
//! `min_θ ½ θᵀAθ − bᵀθ + c‖θ‖₂` for symmetric positive semidefinite `A`.

/// Eigendecomposition `A = V diag(values) Vᵀ` of a symmetric 2×2 matrix;
/// `vectors[k]` is the unit eigenvector of `values[k]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigen2 {
    pub values: [f64; 2],
    pub vectors: [[f64; 2]; 2],
}

impl Eigen2 {
    pub fn of(a: [[f64; 2]; 2]) -> Self {
        let (p, q, r) = (a[0][0], 0.5 * (a[0][1] + a[1][0]), a[1][1]);
        let scale = p.abs().max(q.abs()).max(r.abs());
        if q.abs() <= f64::EPSILON * scale * 1e-3 || scale == 0.0 {
            return Self {
                values: [p, r],
                vectors: [[1.0, 0.0], [0.0, 1.0]],
            };
        }
        let half_diff = 0.5 * (p - r);
        let radius = half_diff.hypot(q);
        let mid = 0.5 * (p + r);
        let (big, small) = (mid + radius, mid - radius);
        // Eigenvector of `big`: (q, big - p) or (big - r, q), whichever is better conditioned.
        let (vx, vy) = if half_diff >= 0.0 {
            (half_diff + radius, q)
        } else {
            (q, radius - half_diff)
        };
        let norm = vx.hypot(vy);
        let v0 = [vx / norm, vy / norm];
        let v1 = [-v0[1], v0[0]];
        Self {
            values: [big, small],
            vectors: [v0, v1],
        }
    }

    /// Directions whose eigenvalue is numerically zero carry no information.
    fn is_live(&self, k: usize) -> bool {
        let top = self.values[0].abs().max(self.values[1].abs());
        top > 0.0 && self.values[k] > 1e-12 * top
    }
}

/// Minimizer of `½ θᵀAθ − bᵀθ + c‖θ‖₂`, with `b` assumed in the range of `A`.
///
/// Null-space components are set to zero, so a group whose columns vanish
/// stays exactly zero.
pub fn solve_block(eig: &Eigen2, b: [f64; 2], c: f64) -> [f64; 2] {
    let mut proj = [0.0; 2];
    let mut vals = [0.0; 2];
    let mut live = [false; 2];
    for k in 0..2 {
        live[k] = eig.is_live(k);
        if live[k] {
            proj[k] = eig.vectors[k][0] * b[0] + eig.vectors[k][1] * b[1];
            vals[k] = eig.values[k];
        }
    }
    let norm = proj[0].hypot(proj[1]);
    // The rotation into the eigenbasis can lift a norm equal to `c` by a few
    // ulps; such a block sits exactly at the threshold and stays zero.
    if norm <= c * (1.0 + 8.0 * f64::EPSILON) || norm == 0.0 {
        return [0.0; 2];
    }
    let coords: [f64; 2] = if c == 0.0 {
        [0, 1].map(|k| if live[k] { proj[k] / vals[k] } else { 0.0 })
    } else {
        let s = block_norm(&proj, &vals, &live, norm, c);
        [0, 1].map(|k| if live[k] { proj[k] * s / (vals[k] * s + c) } else { 0.0 })
    };
    [
        eig.vectors[0][0] * coords[0] + eig.vectors[1][0] * coords[1],
        eig.vectors[0][1] * coords[0] + eig.vectors[1][1] * coords[1],
    ]
}

/// Root `s > 0` of `Σ_k proj_k² / (vals_k s + c)² = 1`, i.e. the norm of
/// the block solution.
fn block_norm(proj: &[f64; 2], vals: &[f64; 2], live: &[bool; 2], norm: f64, c: f64) -> f64 {
    let live_vals: Vec<f64> = (0..2).filter(|&k| live[k]).map(|k| vals[k]).collect();
    let d_max = live_vals.iter().copied().fold(f64::MIN, f64::max);
    let d_min = live_vals.iter().copied().fold(f64::MAX, f64::min);
    let excess = norm - c;
    if d_max == d_min {
        return excess / d_max;
    }
    let g = |s: f64| -> (f64, f64) {
        let mut value = -1.0;
        let mut slope = 0.0;
        for k in 0..2 {
            if live[k] && proj[k] != 0.0 {
                let den = vals[k] * s + c;
                value += proj[k] * proj[k] / (den * den);
                slope -= 2.0 * proj[k] * proj[k] * vals[k] / (den * den * den);
            }
        }
        (value, slope)
    };
    // g is convex and decreasing with g(lo) >= 0 >= g(hi): Newton from the
    // left end increases monotonically to the root.
    let lo = excess / d_max;
    let hi = excess / d_min;
    let mut s = lo;
    for _ in 0..200 {
        let (value, slope) = g(s);
        if value <= 0.0 || slope == 0.0 {
            break;
        }
        let next = (s - value / slope).min(hi);
        if next <= s * (1.0 + 4.0 * f64::EPSILON) {
            s = next.max(s);
            break;
        }
        s = next;
    }
    s
}
