//! Two-variable linear feasibility and convex polygon clipping.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Half-plane `a · w ≤ b` with `|a| = 1`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct HalfPlane {
    pub a: [f64; 2],
    pub b: f64,
}

impl HalfPlane {
    /// Normalizes `a · w ≤ b`. Returns `Err(feasible)` for a degenerate
    /// `a = 0`, which is satisfied by every `w` or by none.
    pub fn new(a: [f64; 2], b: f64, tol: f64) -> Result<HalfPlane, bool> {
        let n = a[0].hypot(a[1]);
        if n == 0.0 {
            return Err(b >= -tol);
        }
        Ok(HalfPlane { a: [a[0] / n, a[1] / n], b: b / n })
    }

    fn slack(&self, w: [f64; 2]) -> f64 {
        self.b - (self.a[0] * w[0] + self.a[1] * w[1])
    }
}

/// Whether `{w : a_i · w ≤ b_i + tol ∀i} ∩ [lo, hi]²` is nonempty, by
/// randomized incremental linear programming over a deterministic shuffle.
pub(crate) fn feasible_2d(planes: &[HalfPlane], lo: [f64; 2], hi: [f64; 2], tol: f64, seed: u64) -> bool {
    let mut hs = planes.to_vec();
    hs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    // Generic objective avoids ties between box corners.
    let c = [0.8, 0.6];
    let mut v = [if c[0] > 0.0 { hi[0] } else { lo[0] }, if c[1] > 0.0 { hi[1] } else { lo[1] }];
    for i in 0..hs.len() {
        let h = hs[i];
        if h.slack(v) >= -tol {
            continue;
        }
        // New optimum lies on the line a·w = b.
        let p0 = [h.a[0] * h.b, h.a[1] * h.b];
        let d = [-h.a[1], h.a[0]];
        let (mut s_lo, mut s_hi) = (f64::NEG_INFINITY, f64::INFINITY);
        let mut clip = |coef: f64, rhs: f64| -> bool {
            // coef · s ≤ rhs
            if coef.abs() < 1e-15 {
                return rhs >= -tol;
            }
            let s = rhs / coef;
            if coef > 0.0 {
                s_hi = s_hi.min(s + tol / coef);
            } else {
                s_lo = s_lo.max(s + tol / coef);
            }
            true
        };
        let mut ok = true;
        for k in 0..2 {
            ok &= clip(d[k], hi[k] - p0[k]);
            ok &= clip(-d[k], p0[k] - lo[k]);
        }
        for g in &hs[..i] {
            ok &= clip(g.a[0] * d[0] + g.a[1] * d[1], g.slack(p0));
        }
        if !ok || s_lo > s_hi {
            return false;
        }
        let cd = c[0] * d[0] + c[1] * d[1];
        let s = if cd > 0.0 { s_hi } else { s_lo };
        v = [p0[0] + s * d[0], p0[1] + s * d[1]];
    }
    true
}

/// Convex polygon `[lo, hi]²` clipped by every half-plane (relaxed by
/// `tol`). Vertices in order; empty when the intersection is empty.
pub(crate) fn clip_box(planes: &[HalfPlane], lo: [f64; 2], hi: [f64; 2], tol: f64) -> Vec<[f64; 2]> {
    let mut poly = vec![[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]];
    for h in planes {
        if poly.is_empty() {
            break;
        }
        let mut out = Vec::with_capacity(poly.len() + 1);
        for k in 0..poly.len() {
            let p = poly[k];
            let q = poly[(k + 1) % poly.len()];
            let sp = h.slack(p) + tol;
            let sq = h.slack(q) + tol;
            if sp >= 0.0 {
                out.push(p);
            }
            if (sp >= 0.0) != (sq >= 0.0) {
                let t = sp / (sp - sq);
                out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
            }
        }
        poly = out;
    }
    poly
}

/// Euclidean distance from `x` to a convex polygon (0 inside).
pub(crate) fn distance_to_polygon(x: [f64; 2], poly: &[[f64; 2]]) -> f64 {
    match poly.len() {
        0 => return f64::INFINITY,
        1 => return (poly[0][0] - x[0]).hypot(poly[0][1] - x[1]),
        _ => {}
    }
    let n = poly.len();
    // Orientation-independent inside test.
    let mut sign = 0.0f64;
    let mut inside = true;
    for k in 0..n {
        let p = poly[k];
        let q = poly[(k + 1) % n];
        let cross = (q[0] - p[0]) * (x[1] - p[1]) - (q[1] - p[1]) * (x[0] - p[0]);
        if cross != 0.0 {
            if sign == 0.0 {
                sign = cross.signum();
            } else if cross.signum() != sign {
                inside = false;
                break;
            }
        }
    }
    if inside && n >= 3 {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for k in 0..n {
        let p = poly[k];
        let q = poly[(k + 1) % n];
        let e = [q[0] - p[0], q[1] - p[1]];
        let len2 = e[0] * e[0] + e[1] * e[1];
        let t = if len2 > 0.0 { (((x[0] - p[0]) * e[0] + (x[1] - p[1]) * e[1]) / len2).clamp(0.0, 1.0) } else { 0.0 };
        let c = [p[0] + t * e[0], p[1] + t * e[1]];
        best = best.min((c[0] - x[0]).hypot(c[1] - x[1]));
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn hp(a: [f64; 2], b: f64) -> HalfPlane {
        HalfPlane::new(a, b, 0.0).unwrap()
    }

    #[test]
    fn simple_cases() {
        let lo = [-10.0, -10.0];
        let hi = [10.0, 10.0];
        assert!(feasible_2d(&[], lo, hi, 1e-9, 1));
        // x ≤ 1 and x ≥ 2.
        assert!(!feasible_2d(&[hp([1.0, 0.0], 1.0), hp([-1.0, 0.0], -2.0)], lo, hi, 1e-9, 1));
        // Triangle x ≥ 0, y ≥ 0, x + y ≤ 1.
        let tri = [hp([-1.0, 0.0], 0.0), hp([0.0, -1.0], 0.0), hp([1.0, 1.0], 1.0)];
        assert!(feasible_2d(&tri, lo, hi, 1e-9, 3));
        let poly = clip_box(&tri, lo, hi, 0.0);
        assert!(distance_to_polygon([0.2, 0.2], &poly) == 0.0);
        assert!((distance_to_polygon([2.0, 0.0], &poly) - 1.0).abs() < 1e-12);
        assert!(matches!(HalfPlane::new([0.0, 0.0], -1.0, 1e-9), Err(false)));
    }

    #[test]
    fn lp_agrees_with_clipping() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for trial in 0..2000 {
            let m = rng.random_range(1..12);
            let planes: Vec<HalfPlane> = (0..m)
                .map(|_| {
                    let th: f64 = rng.random::<f64>() * std::f64::consts::TAU;
                    hp([th.cos(), th.sin()], rng.random::<f64>() * 2.0 - 0.7)
                })
                .collect();
            let lo = [-5.0, -5.0];
            let hi = [5.0, 5.0];
            let a = feasible_2d(&planes, lo, hi, 1e-9, trial);
            let b = !clip_box(&planes, lo, hi, 1e-9).is_empty();
            assert_eq!(a, b, "trial {trial}");
        }
    }
}
