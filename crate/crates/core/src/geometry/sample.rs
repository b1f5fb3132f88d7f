use super::{boost, Point, Space, SpaceKind, Window, MAX_COORDS};
use crate::error::{input, Result};
use crate::numeric::{integrate, Pchip};
use rand::Rng;
use rand_distr::StandardNormal;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

const RADIAL_KNOTS: usize = 1 << 14;

/// Uniform direction on the unit sphere `S^{d−1}`.
pub fn uniform_direction<R: Rng + ?Sized>(d: usize, rng: &mut R) -> [f64; MAX_COORDS] {
    let mut v = [0.0; MAX_COORDS];
    if d == 1 {
        v[0] = if rng.random::<bool>() { 1.0 } else { -1.0 };
        return v;
    }
    loop {
        let mut s = 0.0;
        for x in v.iter_mut().take(d) {
            *x = rng.sample(StandardNormal);
            s += *x * *x;
        }
        if s > 1e-300 {
            let n = s.sqrt();
            for x in v.iter_mut().take(d) {
                *x /= n;
            }
            return v;
        }
    }
}

/// CDF of the geodesic radius of a uniform point in the hyperbolic ball
/// `B(o, big_r)`: `∫_0^r sinh^{d−1} / ∫_0^R sinh^{d−1}`.
pub fn hyperbolic_radial_cdf(d: usize, big_r: f64, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    if r >= big_r {
        return 1.0;
    }
    let s = Space::hyperbolic(d, big_r).expect("valid hyperbolic space");
    s.ball_volume(r) / s.ball_volume(big_r)
}

struct RadialTable {
    /// Radius as a function of `F^{1/d}`.
    inverse: Pchip,
}

impl RadialTable {
    fn build(d: usize, big_r: f64) -> Self {
        let n = RADIAL_KNOTS;
        let h = big_r / n as f64;
        let mut cum = vec![0.0; n + 1];
        for i in 0..n {
            let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
            let part = integrate(|u: f64| u.sinh().powi(d as i32 - 1), a, b, 1e-14, 0.0).expect("finite interval");
            cum[i + 1] = cum[i] + part;
        }
        let total = cum[n];
        let mut s = Vec::with_capacity(n + 1);
        let mut r = Vec::with_capacity(n + 1);
        for (i, c) in cum.iter().enumerate() {
            let v = (c / total).powf(1.0 / d as f64);
            if i > 0 && v <= *s.last().unwrap() {
                continue;
            }
            s.push(v);
            r.push(i as f64 * h);
        }
        *s.last_mut().unwrap() = 1.0;
        RadialTable { inverse: Pchip::new(s, r).expect("strictly increasing table") }
    }
}

fn radial_table(d: usize, big_r: f64) -> Arc<RadialTable> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u64), Arc<RadialTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key = (d, big_r.to_bits());
    if let Some(t) = cache.lock().unwrap().get(&key) {
        return t.clone();
    }
    let t = Arc::new(RadialTable::build(d, big_r));
    cache.lock().unwrap().entry(key).or_insert(t).clone()
}

/// Inverse of [`hyperbolic_radial_cdf`] at `u ∈ [0, 1]`.
pub(crate) fn hyperbolic_radius_quantile(d: usize, big_r: f64, u: f64) -> f64 {
    match d {
        1 => u * big_r,
        2 => {
            // (cosh r − 1) = u (cosh R − 1), written with sinh² for accuracy near 0.
            let s = (0.5 * big_r).sinh() * u.sqrt();
            2.0 * s.asinh()
        }
        _ => radial_table(d, big_r).inverse.eval(u.powf(1.0 / d as f64)),
    }
}

pub(super) fn sample_uniform<R: Rng + ?Sized>(space: &Space, region: &Window, n: usize, rng: &mut R) -> Result<Vec<Point>> {
    space.check_window(region)?;
    let region = space.resolve(region);
    if space.volume(&region)? <= 0.0 {
        return input("empty sampling region");
    }
    let d = space.dim();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut c = [0.0; MAX_COORDS];
        match (&region, space.kind()) {
            (Window::Box { lo, hi }, kind) => {
                for i in 0..d {
                    let x = lo[i] + (hi[i] - lo[i]) * rng.random::<f64>();
                    c[i] = if kind == SpaceKind::FlatTorus { space.wrap(x) } else { x };
                }
            }
            (Window::Ball { center, radius }, SpaceKind::HyperbolicBall) => {
                let r = hyperbolic_radius_quantile(d, *radius, rng.random::<f64>());
                let dir = uniform_direction(d, rng);
                let mut x = [0.0; MAX_COORDS];
                x[0] = r.cosh();
                let sh = r.sinh();
                for i in 0..d {
                    x[i + 1] = sh * dir[i];
                }
                c = boost(center, &x, d);
            }
            (Window::Ball { center, radius }, kind) => {
                let r = radius * rng.random::<f64>().powf(1.0 / d as f64);
                let dir = uniform_direction(d, rng);
                for i in 0..d {
                    let x = center[i] + r * dir[i];
                    c[i] = if kind == SpaceKind::FlatTorus { space.wrap(x) } else { x };
                }
            }
            (Window::Full, _) => unreachable!(),
        }
        out.push(Point::from_array(c, space.coord_len()));
    }
    Ok(out)
}
