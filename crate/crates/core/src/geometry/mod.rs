//! Metric measure spaces: Euclidean boxes, flat tori and hyperbolic balls.
//!
//! Hyperbolic points live on the hyperboloid `x0² − |x|² = 1, x0 > 0` of
//! Minkowski space; the Poincaré ball is available only for export.

mod index;
mod sample;

pub use index::SpatialIndex;
pub use sample::{hyperbolic_radial_cdf, uniform_direction};

use crate::error::{input, Error, Result};
use crate::numeric::{integrate, unit_ball_volume};
use serde::{Deserialize, Serialize};

/// Largest number of stored coordinates (hyperbolic points use `d + 1`).
pub const MAX_COORDS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    c: [f64; MAX_COORDS],
    n: u8,
}

impl Point {
    pub fn new(coords: &[f64]) -> Result<Self> {
        if coords.is_empty() || coords.len() > MAX_COORDS {
            return input(format!("points carry 1..={MAX_COORDS} coordinates, got {}", coords.len()));
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return input("non-finite coordinate");
        }
        let mut c = [0.0; MAX_COORDS];
        c[..coords.len()].copy_from_slice(coords);
        Ok(Point { c, n: coords.len() as u8 })
    }

    pub(crate) fn from_array(c: [f64; MAX_COORDS], n: usize) -> Self {
        Point { c, n: n as u8 }
    }

    pub fn coords(&self) -> &[f64] {
        &self.c[..self.n as usize]
    }

    pub fn len(&self) -> usize {
        self.n as usize
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

impl std::ops::Index<usize> for Point {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.coords()[i]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    EuclideanBox,
    /// Boundary-free testing space with closed-form Poisson moments.
    FlatTorus,
    /// Curvature −1.
    HyperbolicBall,
}

/// A metric measure space together with its default carrier set.
///
/// `extent` is the side of the carrier box `[−e/2, e/2]^d` (Euclidean and
/// torus) or the radius of the carrier ball around the origin (hyperbolic).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Space {
    kind: SpaceKind,
    dim: usize,
    extent: f64,
}

/// Measurable region of a space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Window {
    /// The carrier of the space.
    Full,
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Point, radius: f64 },
}

impl Window {
    pub fn centered_box(dim: usize, side: f64) -> Window {
        Window::Box { lo: vec![-0.5 * side; dim], hi: vec![0.5 * side; dim] }
    }
}

impl Space {
    pub fn new(kind: SpaceKind, dim: usize, extent: f64) -> Result<Self> {
        if dim == 0 {
            return input("dimension must be at least 1");
        }
        if !(extent > 0.0) {
            return input(format!("extent must be positive, got {extent}"));
        }
        let max_dim = match kind {
            SpaceKind::HyperbolicBall => MAX_COORDS - 1,
            _ => MAX_COORDS,
        };
        if dim > max_dim {
            return Err(Error::Unsupported(format!("{kind:?} supports dimension ≤ {max_dim}")));
        }
        Ok(Space { kind, dim, extent })
    }

    pub fn euclidean(dim: usize, side: f64) -> Result<Self> {
        Space::new(SpaceKind::EuclideanBox, dim, side)
    }

    pub fn torus(dim: usize, side: f64) -> Result<Self> {
        Space::new(SpaceKind::FlatTorus, dim, side)
    }

    pub fn hyperbolic(dim: usize, radius: f64) -> Result<Self> {
        Space::new(SpaceKind::HyperbolicBall, dim, radius)
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn is_hyperbolic(&self) -> bool {
        self.kind == SpaceKind::HyperbolicBall
    }

    /// Number of stored coordinates per point.
    pub fn coord_len(&self) -> usize {
        if self.is_hyperbolic() {
            self.dim + 1
        } else {
            self.dim
        }
    }

    pub fn origin(&self) -> Point {
        let mut c = [0.0; MAX_COORDS];
        if self.is_hyperbolic() {
            c[0] = 1.0;
        }
        Point::from_array(c, self.coord_len())
    }

    /// Builds a point from intrinsic coordinates: Cartesian for Euclidean and
    /// torus (torus coordinates are wrapped into `[−L/2, L/2)`), hyperboloid
    /// spatial part `(x1..xd)` for hyperbolic space (`x0` is recomputed).
    pub fn point(&self, coords: &[f64]) -> Result<Point> {
        if coords.len() != self.dim {
            return input(format!("expected {} coordinates, got {}", self.dim, coords.len()));
        }
        match self.kind {
            SpaceKind::EuclideanBox => Point::new(coords),
            SpaceKind::FlatTorus => {
                let w: Vec<f64> = coords.iter().map(|&x| self.wrap(x)).collect();
                Point::new(&w)
            }
            SpaceKind::HyperbolicBall => {
                let s2: f64 = coords.iter().map(|x| x * x).sum();
                let mut c = vec![(1.0 + s2).sqrt()];
                c.extend_from_slice(coords);
                Point::new(&c)
            }
        }
    }

    /// Checks the coordinate layout of a point for this space.
    pub fn validate(&self, p: &Point) -> Result<()> {
        if p.len() != self.coord_len() {
            return input(format!("point has {} coordinates, space expects {}", p.len(), self.coord_len()));
        }
        if self.is_hyperbolic() {
            let x0 = p[0];
            let m = minkowski(p, p);
            // Tolerance scales with x0² since the norm is a difference of squares.
            if x0 < 1.0 - 1e-12 || (m + 1.0).abs() > 1e-9 * x0 * x0 {
                return input(format!("point is off the hyperboloid (⟨x,x⟩ = {m}, x0 = {x0})"));
            }
        }
        Ok(())
    }

    #[inline]
    pub(crate) fn wrap(&self, x: f64) -> f64 {
        let l = self.extent;
        let y = x - l * (x / l + 0.5).floor();
        if y >= 0.5 * l {
            y - l
        } else {
            y
        }
    }

    /// Distance with a dimension check.
    pub fn distance(&self, a: &Point, b: &Point) -> Result<f64> {
        if a.len() != self.coord_len() || b.len() != self.coord_len() {
            return input("dimension mismatch in distance");
        }
        Ok(self.dist(a, b))
    }

    /// Distance without checks; callers guarantee matching layouts.
    #[inline]
    pub fn dist(&self, a: &Point, b: &Point) -> f64 {
        match self.kind {
            SpaceKind::EuclideanBox => {
                let mut s = 0.0;
                for i in 0..self.dim {
                    let d = a.c[i] - b.c[i];
                    s += d * d;
                }
                s.sqrt()
            }
            SpaceKind::FlatTorus => {
                let l = self.extent;
                let mut s = 0.0;
                for i in 0..self.dim {
                    let mut d = (a.c[i] - b.c[i]).abs();
                    d %= l;
                    if d > 0.5 * l {
                        d = l - d;
                    }
                    s += d * d;
                }
                s.sqrt()
            }
            SpaceKind::HyperbolicBall => {
                // |a − b|²_Mink = 2(cosh d − 1) = 4 sinh²(d/2).
                let d0 = a.c[0] - b.c[0];
                let mut s = -d0 * d0;
                for i in 1..=self.dim {
                    let d = a.c[i] - b.c[i];
                    s += d * d;
                }
                2.0 * (0.5 * s.max(0.0).sqrt()).asinh()
            }
        }
    }

    /// Volume of a ball of radius `r` in this space.
    pub fn ball_volume(&self, r: f64) -> f64 {
        if !(r > 0.0) {
            return 0.0;
        }
        let d = self.dim;
        match self.kind {
            SpaceKind::EuclideanBox => unit_ball_volume(d) * r.powi(d as i32),
            SpaceKind::FlatTorus => torus_ball_volume(d, 0.5 * self.extent, r),
            SpaceKind::HyperbolicBall => hyperbolic_ball_volume(d, r),
        }
    }

    /// Polar volume element: `ν(B_r) = ∫_0^r polar_density(u) du`.
    pub fn polar_density(&self, u: f64) -> f64 {
        let d = self.dim;
        let area = d as f64 * unit_ball_volume(d);
        match self.kind {
            SpaceKind::HyperbolicBall => area * u.sinh().powi(d as i32 - 1),
            _ => area * u.powi(d as i32 - 1),
        }
    }

    /// The carrier region of the space as a concrete window.
    pub fn carrier(&self) -> Window {
        match self.kind {
            SpaceKind::HyperbolicBall => Window::Ball { center: self.origin(), radius: self.extent },
            _ => Window::centered_box(self.dim, self.extent),
        }
    }

    pub fn resolve(&self, w: &Window) -> Window {
        match w {
            Window::Full => self.carrier(),
            other => other.clone(),
        }
    }

    pub fn check_window(&self, w: &Window) -> Result<()> {
        match self.resolve(w) {
            Window::Box { lo, hi } => {
                if self.is_hyperbolic() {
                    return Err(Error::Unsupported("box windows in hyperbolic space".into()));
                }
                if lo.len() != self.dim || hi.len() != self.dim {
                    return input("box window dimension mismatch");
                }
                for (a, b) in lo.iter().zip(&hi) {
                    if !(a.is_finite() && b.is_finite()) {
                        return input("box window bounds must be finite");
                    }
                    if b <= a {
                        return input("empty box window");
                    }
                    if self.kind == SpaceKind::FlatTorus && b - a > self.extent {
                        return input("box window wider than the torus");
                    }
                }
                Ok(())
            }
            Window::Ball { center, radius } => {
                self.validate(&center)?;
                if !(radius > 0.0) || !radius.is_finite() {
                    return input("ball window needs a positive finite radius");
                }
                if self.kind == SpaceKind::FlatTorus && radius > 0.5 * self.extent {
                    return input("ball window larger than half the torus side");
                }
                Ok(())
            }
            Window::Full => unreachable!(),
        }
    }

    /// ν(W).
    pub fn volume(&self, w: &Window) -> Result<f64> {
        self.check_window(w)?;
        Ok(match self.resolve(w) {
            Window::Box { lo, hi } => lo.iter().zip(&hi).map(|(a, b)| b - a).product(),
            Window::Ball { radius, .. } => self.ball_volume(radius),
            Window::Full => unreachable!(),
        })
    }

    /// Closed membership test.
    pub fn contains(&self, w: &Window, p: &Point) -> bool {
        match w {
            Window::Full => match self.kind {
                SpaceKind::FlatTorus => true,
                _ => self.contains(&self.carrier(), p),
            },
            Window::Box { lo, hi } => (0..self.dim).all(|i| {
                let x = p[i];
                if self.kind == SpaceKind::FlatTorus {
                    let shifted = lo[i] + (x - lo[i]).rem_euclid(self.extent);
                    shifted <= hi[i]
                } else {
                    lo[i] <= x && x <= hi[i]
                }
            }),
            Window::Ball { center, radius } => self.dist(center, p) <= *radius,
        }
    }

    /// `inf_{z ∈ W} d(p, z)`; exact for boxes and balls.
    pub fn distance_to_window(&self, p: &Point, w: &Window) -> f64 {
        match self.resolve(w) {
            Window::Box { lo, hi } => {
                let mut s = 0.0;
                for i in 0..self.dim {
                    let x = p[i];
                    let g = if self.kind == SpaceKind::FlatTorus {
                        let l = self.extent;
                        let t = (x - lo[i]).rem_euclid(l);
                        let width = hi[i] - lo[i];
                        if t <= width {
                            0.0
                        } else {
                            (t - width).min(l - t)
                        }
                    } else {
                        (lo[i] - x).max(x - hi[i]).max(0.0)
                    };
                    s += g * g;
                }
                s.sqrt()
            }
            Window::Ball { center, radius } => (self.dist(p, &center) - radius).max(0.0),
            Window::Full => unreachable!(),
        }
    }

    /// The point at distance `r` from `center` along the unit direction
    /// `dir` (tangent direction at the origin for hyperbolic space, carried
    /// to `center` by the boost fixing the geodesic through both points).
    pub fn point_at(&self, center: &Point, r: f64, dir: &[f64]) -> Point {
        debug_assert_eq!(dir.len(), self.dim);
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut c = [0.0; MAX_COORDS];
        match self.kind {
            SpaceKind::HyperbolicBall => {
                let (s, ch) = (r.sinh(), r.cosh());
                let mut x = [0.0; MAX_COORDS];
                x[0] = ch;
                for i in 0..self.dim {
                    x[i + 1] = s * dir[i] / norm;
                }
                c = boost(center, &x, self.dim);
            }
            _ => {
                for i in 0..self.dim {
                    let v = center[i] + r * dir[i] / norm;
                    c[i] = if self.kind == SpaceKind::FlatTorus { self.wrap(v) } else { v };
                }
            }
        }
        Point::from_array(c, self.coord_len())
    }

    /// Geodesic distance from the origin (hyperbolic) or Euclidean norm.
    pub fn radius_of(&self, p: &Point) -> f64 {
        self.dist(&self.origin(), p)
    }

    /// Poincaré-ball coordinates of a hyperbolic point (export only).
    pub fn to_poincare(&self, p: &Point) -> Vec<f64> {
        if !self.is_hyperbolic() {
            return p.coords().to_vec();
        }
        (1..=self.dim).map(|i| p[i] / (1.0 + p[0])).collect()
    }

    pub fn sample_uniform<R: rand::Rng + ?Sized>(&self, region: &Window, n: usize, rng: &mut R) -> Result<Vec<Point>> {
        sample::sample_uniform(self, region, n, rng)
    }
}

/// Minkowski bilinear form `−a0 b0 + Σ ai bi`.
pub(crate) fn minkowski(a: &Point, b: &Point) -> f64 {
    let mut s = -a.c[0] * b.c[0];
    for i in 1..a.len() {
        s += a.c[i] * b.c[i];
    }
    s
}

/// Lorentz boost taking the origin to `c`, applied to `x`.
pub(crate) fn boost(c: &Point, x: &[f64; MAX_COORDS], dim: usize) -> [f64; MAX_COORDS] {
    let c0 = c.c[0];
    let mut cx = 0.0;
    for i in 1..=dim {
        cx += c.c[i] * x[i];
    }
    let mut y = [0.0; MAX_COORDS];
    y[0] = c0 * x[0] + cx;
    let k = cx / (1.0 + c0);
    for i in 1..=dim {
        y[i] = c.c[i] * x[0] + x[i] + c.c[i] * k;
    }
    y
}

fn hyperbolic_ball_volume(d: usize, r: f64) -> f64 {
    let pi = std::f64::consts::PI;
    match d {
        1 => 2.0 * r,
        2 => 4.0 * pi * (0.5 * r).sinh().powi(2),
        3 if r > 1.0 => pi * ((2.0 * r).sinh() - 2.0 * r),
        _ => {
            let area = d as f64 * unit_ball_volume(d);
            let v = integrate(|u: f64| u.sinh().powi(d as i32 - 1), 0.0, r, 1e-13, 0.0)
                .expect("smooth integrand on a finite interval");
            area * v
        }
    }
}

/// Volume of the intrinsic ball of radius `r` on the torus `[−a, a)^d`.
fn torus_ball_volume(d: usize, a: f64, r: f64) -> f64 {
    if r <= a {
        return unit_ball_volume(d) * r.powi(d as i32);
    }
    if r * r >= d as f64 * a * a {
        return (2.0 * a).powi(d as i32);
    }
    match d {
        1 => 2.0 * a,
        2 => {
            let seg = r * r * (a / r).acos() - a * (r * r - a * a).sqrt();
            std::f64::consts::PI * r * r - 4.0 * seg
        }
        _ => {
            let lim = r.min(a);
            2.0 * integrate(
                |x: f64| torus_ball_volume(d - 1, a, (r * r - x * x).max(0.0).sqrt()),
                0.0,
                lim,
                1e-12,
                0.0,
            )
            .expect("bounded integrand")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn euclidean_distance() {
        let s = Space::euclidean(2, 10.0).unwrap();
        let a = s.point(&[0.0, 0.0]).unwrap();
        let b = s.point(&[3.0, 4.0]).unwrap();
        assert_eq!(s.distance(&a, &b).unwrap(), 5.0);
        assert_eq!(s.distance(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn torus_wraps() {
        let s = Space::torus(1, 10.0).unwrap();
        let a = s.point(&[4.5]).unwrap();
        let b = s.point(&[-4.5]).unwrap();
        assert!((s.dist(&a, &b) - 1.0).abs() < 1e-12);
        assert_eq!(s.point(&[5.0]).unwrap()[0], -5.0);
    }

    #[test]
    fn hyperbolic_radial_point_has_distance_r() {
        let s = Space::hyperbolic(2, 5.0).unwrap();
        let o = s.origin();
        let p = s.point_at(&o, 1.0, &[1.0, 0.0]);
        s.validate(&p).unwrap();
        assert!((s.dist(&o, &p) - 1.0).abs() < 1e-15);
        let far = s.point_at(&p, 2.5, &[0.0, 1.0]);
        assert!((s.dist(&p, &far) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let s = Space::euclidean(2, 1.0).unwrap();
        let a = Point::new(&[0.0, 0.0]).unwrap();
        let b = Point::new(&[0.0, 0.0, 0.0]).unwrap();
        assert!(s.distance(&a, &b).is_err());
    }

    #[test]
    fn volumes() {
        let e3 = Space::euclidean(3, 1.0).unwrap();
        assert!((e3.ball_volume(1.0) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert_eq!(e3.ball_volume(0.0), 0.0);
        let h2 = Space::hyperbolic(2, 1.0).unwrap();
        assert!((h2.ball_volume(1.0) - 2.0 * PI * (1f64.cosh() - 1.0)).abs() < 1e-13);
        let h3 = Space::hyperbolic(3, 1.0).unwrap();
        for r in [0.3f64, 1.0, 1.5, 4.0] {
            let closed = PI * ((2.0f64 * r).sinh() - 2.0 * r);
            assert!((h3.ball_volume(r) / closed - 1.0).abs() < 1e-10, "r={r}");
        }
    }

    #[test]
    fn torus_ball_volume_saturates() {
        let t2 = Space::torus(2, 2.0).unwrap();
        assert!((t2.ball_volume(0.5) - PI * 0.25).abs() < 1e-14);
        assert_eq!(t2.ball_volume(2.0), 4.0);
        // Area of the unit-radius disk clipped by the square [−1,1]² at r=1.2.
        let r: f64 = 1.2;
        let seg = r * r * (1.0 / r).acos() - (r * r - 1.0).sqrt();
        assert!((t2.ball_volume(r) - (PI * r * r - 4.0 * seg)).abs() < 1e-12);
        let t3 = Space::torus(3, 2.0).unwrap();
        let v = t3.ball_volume(1.2);
        assert!(v > 4.0 * PI / 3.0 && v < 8.0);
    }

    #[test]
    fn window_distances() {
        let s = Space::euclidean(2, 10.0).unwrap();
        let w = Window::Box { lo: vec![-1.0, -1.0], hi: vec![1.0, 1.0] };
        let p = s.point(&[2.0, 0.0]).unwrap();
        assert_eq!(s.distance_to_window(&p, &w), 1.0);
        assert_eq!(s.distance_to_window(&s.origin(), &w), 0.0);
        let h = Space::hyperbolic(2, 3.0).unwrap();
        let q = h.point_at(&h.origin(), 3.7, &[0.6, 0.8]);
        assert!((h.distance_to_window(&q, &Window::Full) - 0.7).abs() < 1e-12);
    }

    #[test]
    fn torus_window_distance_wraps() {
        let s = Space::torus(1, 10.0).unwrap();
        let w = Window::Box { lo: vec![-1.0], hi: vec![1.0] };
        let p = s.point(&[4.5]).unwrap();
        assert!((s.distance_to_window(&p, &w) - 3.5).abs() < 1e-12);
        assert!(s.contains(&w, &s.point(&[0.5]).unwrap()));
        assert!(!s.contains(&w, &p));
    }

    #[test]
    fn poincare_export_inside_unit_ball() {
        let h = Space::hyperbolic(3, 5.0).unwrap();
        let p = h.point_at(&h.origin(), 4.0, &[1.0, 2.0, 2.0]);
        let b = h.to_poincare(&p);
        let n: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((n - (2.0f64).tanh()).abs() < 1e-12);
    }
}
