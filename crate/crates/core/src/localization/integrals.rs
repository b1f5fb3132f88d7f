//! Integral ingredients I_ψ(θ), I_φ(θ′), G_q and the hyperbolic decay check.

use super::profile::DecayFit;
use crate::error::{input, Error, Result};
use crate::geometry::{SpaceKind, Window};
use crate::numeric::{integrate, integrate_to_infinity, unit_ball_volume};
use crate::process::{SpaceTimeDomain, TimeMeasure};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

const REL_TOL: f64 = 1e-8;
const DIVERGENCE_CAP: f64 = 1e300;

type LnFn = dyn Fn(f64) -> f64 + Send + Sync;

/// A localization profile ψ (or φ) as a function on `[0, ∞)` with values in
/// `[0, 2]`, stored through its logarithm so that fast decay does not
/// underflow.
#[derive(Clone)]
pub enum PsiModel {
    /// `ψ = height · 1{r < delta}`, with `ψ(0) = 2`.
    Step { height: f64, delta: f64 },
    /// `ψ(r) = min(2, 8 exp(fitted ln ψ̂(r)))`.
    Fitted(DecayFit),
    /// `ψ(r) = min(2, exp(−τ(r)))`.
    Tau { name: String, tau: Arc<LnFn> },
}

impl std::fmt::Debug for PsiModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PsiModel::Step { height, delta } => write!(f, "Step {{ height: {height}, delta: {delta} }}"),
            PsiModel::Fitted(fit) => write!(f, "Fitted({:?})", fit.model),
            PsiModel::Tau { name, .. } => write!(f, "Tau({name})"),
        }
    }
}

impl PsiModel {
    pub fn tau<F: Fn(f64) -> f64 + Send + Sync + 'static>(name: &str, tau: F) -> Self {
        PsiModel::Tau { name: name.to_string(), tau: Arc::new(tau) }
    }

    /// `ln ψ(r)`; `−∞` where ψ vanishes.
    pub fn ln_psi(&self, r: f64) -> f64 {
        let ln2 = std::f64::consts::LN_2;
        if r <= 0.0 {
            return ln2;
        }
        match self {
            PsiModel::Step { height, delta } => {
                if r < *delta && *height > 0.0 {
                    height.ln().min(ln2)
                } else {
                    f64::NEG_INFINITY
                }
            }
            PsiModel::Fitted(fit) => (8f64.ln() + fit.ln_raw(r)).min(ln2),
            PsiModel::Tau { tau, .. } => (-tau(r)).min(ln2),
        }
    }

    pub fn psi(&self, r: f64) -> f64 {
        self.ln_psi(r).exp()
    }

    /// `τ(r) = −ln ψ(r)`.
    pub fn tau_at(&self, r: f64) -> f64 {
        -self.ln_psi(r)
    }
}

/// Value of an integral ingredient; `value = ∞` comes with the reason.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Integral {
    pub value: f64,
    pub violation: Option<String>,
}

impl Integral {
    fn finite(value: f64) -> Self {
        Integral { value, violation: None }
    }

    fn diverged(reason: impl Into<String>) -> Self {
        Integral { value: f64::INFINITY, violation: Some(reason.into()) }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

/// `ln sinh u` without overflow.
fn ln_sinh(u: f64) -> f64 {
    if u > 20.0 {
        u + (-(-2.0 * u).exp()).ln_1p() - std::f64::consts::LN_2
    } else {
        u.sinh().ln()
    }
}

/// Logarithm of the polar volume element of a space of curvature 0 or −1.
fn ln_polar(dim: usize, hyperbolic: bool, u: f64) -> f64 {
    let area = (dim as f64 * unit_ball_volume(dim)).ln();
    if dim == 1 {
        return area;
    }
    let radial = if hyperbolic { ln_sinh(u) } else { u.ln() };
    area + (dim - 1) as f64 * radial
}

/// `∫_0^limit f(u) du` with `limit = None` meaning `∞`.
fn radial_integral<F: Fn(f64) -> f64>(f: F, limit: Option<f64>, block: f64) -> Result<f64> {
    match limit {
        Some(l) if l <= 0.0 => Ok(0.0),
        Some(l) => {
            let v = integrate(&f, 0.0, l, REL_TOL, 0.0)?;
            Ok(if v > DIVERGENCE_CAP { f64::INFINITY } else { v })
        }
        // A non-negative integrand whose blocks never stop contributing is
        // treated as divergent.
        None => match integrate_to_infinity(&f, 0.0, block, REL_TOL, DIVERGENCE_CAP) {
            Err(Error::Diagnostic(_)) => Ok(f64::INFINITY),
            other => other,
        },
    }
}

/// Largest distance between two points of the carrier, measured in the
/// space (Euclidean cover for the torus).
fn carrier_diameter(domain: &SpaceTimeDomain) -> f64 {
    let space = &domain.space;
    let d = space.dim() as f64;
    match (space.kind(), space.resolve(&domain.carrier)) {
        (SpaceKind::HyperbolicBall, Window::Ball { radius, .. }) => 2.0 * radius,
        (SpaceKind::FlatTorus, _) => 0.5 * space.extent() * d.sqrt(),
        (_, Window::Box { lo, hi }) => lo.iter().zip(&hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt(),
        (_, Window::Ball { radius, .. }) => 2.0 * radius,
        (_, Window::Full) => unreachable!(),
    }
}

/// `I_ψ(θ) = max(1, sup_x ∫ ψ(d(x,z)/2)^θ ν(dz))`, bounded above by the
/// radial integral around a point with a full ball of radius
/// `limit` (the carrier diameter, or `None` for the whole space). On the
/// torus the integral is taken on the universal cover, which dominates
/// the torus integral.
pub fn integral_i_psi_radial(
    model: &PsiModel,
    dim: usize,
    hyperbolic: bool,
    intensity: f64,
    theta: f64,
    limit: Option<f64>,
) -> Result<Integral> {
    if !(theta > 0.0) {
        return input(format!("θ must be positive, got {theta}"));
    }
    if let PsiModel::Step { height, delta } = model {
        // ψ(u/2) = height on u < 2δ.
        let r = limit.map_or(2.0 * delta, |l| l.min(2.0 * delta));
        let vol = radial_integral(|u| ln_polar(dim, hyperbolic, u).exp(), Some(r), 1.0)?;
        let v = intensity * height.min(2.0).powf(theta) * vol;
        return Ok(Integral::finite(v.max(1.0)));
    }
    let f = |u: f64| {
        let e = theta * model.ln_psi(0.5 * u) + ln_polar(dim, hyperbolic, u);
        e.exp()
    };
    let v = radial_integral(f, limit, 1.0)?;
    if !v.is_finite() {
        let mut reason = format!("∫ ψ(d/2)^θ dν diverges for θ = {theta}");
        if hyperbolic {
            let check = hyperbolic_condition(model, dim, theta);
            reason.push_str(&format!(
                "; hyperbolic decay condition liminf τ(r)/((d−1)r/θ) > 1 gives liminf ≈ {:.4}",
                check.liminf
            ));
        }
        return Ok(Integral::diverged(reason));
    }
    Ok(Integral::finite((intensity * v).max(1.0)))
}

/// I_ψ(θ) on a domain's carrier.
pub fn integral_i_psi(model: &PsiModel, domain: &SpaceTimeDomain, theta: f64) -> Result<Integral> {
    let space = &domain.space;
    integral_i_psi_radial(
        model,
        space.dim(),
        space.is_hyperbolic(),
        domain.intensity,
        theta,
        Some(carrier_diameter(domain)),
    )
}

/// `I_φ(θ′) = max(1, ∫ φ(t)^{θ′} μ(dt))` over the untruncated time measure
/// (`horizon = None`) or over `[0, horizon]`.
pub fn integral_i_phi(model: &PsiModel, time: &TimeMeasure, theta_prime: f64, horizon: Option<f64>) -> Result<Integral> {
    if !(theta_prime > 0.0) {
        return input(format!("θ′ must be positive, got {theta_prime}"));
    }
    let beta = match *time {
        TimeMeasure::None => return Ok(Integral::finite(model.psi(0.0).powf(theta_prime).max(1.0))),
        TimeMeasure::Lebesgue { .. } => 0.0,
        TimeMeasure::PowerDensity { beta, .. } => beta,
    };
    let f = |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        (theta_prime * model.ln_psi(t) + beta * t.ln()).exp()
    };
    let v = radial_integral(f, horizon, 1.0)?;
    if !v.is_finite() {
        return Ok(Integral::diverged(format!("∫ φ^θ′ dμ diverges for θ′ = {theta_prime}")));
    }
    Ok(Integral::finite(v.max(1.0)))
}

/// Geometry of `X ∖ W` as seen from W.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum HaloShape {
    /// X = W.
    None,
    /// Box W with side lengths `widths`, free room `room_lo[i]`, `room_hi[i]`
    /// on either side along axis i (`∞` for an unbounded X).
    Box { widths: Vec<f64>, room_lo: Vec<f64>, room_hi: Vec<f64> },
    /// Ball W of radius `inner` inside a concentric ball X of radius
    /// `outer` (`None` for the whole space).
    Concentric { dim: usize, hyperbolic: bool, inner: f64, outer: Option<f64> },
}

/// Halo shape of a domain. Boxes in a torus see `(side − width)/2` of room
/// on each side.
pub fn halo_shape(domain: &SpaceTimeDomain) -> Result<HaloShape> {
    let space = &domain.space;
    let w = space.resolve(&domain.window);
    let x = space.resolve(&domain.carrier);
    if w == x {
        return Ok(HaloShape::None);
    }
    match (w, x) {
        (Window::Box { lo, hi }, Window::Box { lo: xlo, hi: xhi }) => {
            let widths: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| b - a).collect();
            if space.kind() == SpaceKind::FlatTorus {
                let room: Vec<f64> = widths.iter().map(|a| 0.5 * (space.extent() - a).max(0.0)).collect();
                return Ok(HaloShape::Box { widths, room_lo: room.clone(), room_hi: room });
            }
            let room_lo = lo.iter().zip(&xlo).map(|(a, b)| (a - b).max(0.0)).collect();
            let room_hi = hi.iter().zip(&xhi).map(|(a, b)| (b - a).max(0.0)).collect();
            Ok(HaloShape::Box { widths, room_lo, room_hi })
        }
        (Window::Ball { center, radius }, Window::Ball { center: c2, radius: r2 }) if space.dist(&center, &c2) == 0.0 => {
            Ok(HaloShape::Concentric { dim: space.dim(), hyperbolic: space.is_hyperbolic(), inner: radius, outer: Some(r2) })
        }
        _ => Err(Error::Unsupported("halo integral for this window/carrier pair".into())),
    }
}

/// `∫_0^room ψ(g)^q dg`, `room = ∞` allowed.
fn gap_integral<F: Fn(f64) -> f64>(f: &F, room: f64) -> Result<f64> {
    radial_integral(f, room.is_finite().then_some(room), 1.0)
}

/// `G_q = 2^q ν(W) + ∫_{X∖W} ψ(d(x,W))^q ν(dx)`.
pub fn integral_g_q_shape(model: &PsiModel, shape: &HaloShape, intensity: f64, nu_window: f64, q: f64) -> Result<Integral> {
    if !(q >= 0.0) {
        return input(format!("q must be non-negative, got {q}"));
    }
    let base = 2f64.powf(q) * nu_window;
    let f = |g: f64| if g <= 0.0 { 2f64.powf(q) } else { (q * model.ln_psi(g)).exp() };
    let halo = match shape {
        HaloShape::None => 0.0,
        HaloShape::Box { widths, room_lo, room_hi } => match widths.len() {
            1 => gap_integral(&f, room_lo[0])? + gap_integral(&f, room_hi[0])?,
            2 => {
                let side = |i: usize| -> Result<f64> { Ok(gap_integral(&f, room_lo[i])? + gap_integral(&f, room_hi[i])?) };
                let edges = widths[1] * side(0)? + widths[0] * side(1)?;
                // Corner regions: four quadrants of gap pairs.
                let mut corners = 0.0;
                for &r0 in &[room_lo[0], room_hi[0]] {
                    for &r1 in &[room_lo[1], room_hi[1]] {
                        let inner = |g0: f64| -> f64 {
                            let h = |g1: f64| f((g0 * g0 + g1 * g1).sqrt());
                            gap_integral(&h, r1).unwrap_or(f64::NAN)
                        };
                        corners += gap_integral(&inner, r0)?;
                    }
                }
                edges + corners
            }
            d => return Err(Error::Unsupported(format!("box halo integral in dimension {d}"))),
        },
        HaloShape::Concentric { dim, hyperbolic, inner, outer } => {
            let g = |u: f64| (q * model.ln_psi(u) + ln_polar(*dim, *hyperbolic, u + inner)).exp();
            radial_integral(g, outer.map(|o| o - inner), 1.0)?
        }
    };
    if halo.is_nan() {
        return Err(Error::Diagnostic("halo quadrature failed".into()));
    }
    let total = base + intensity * halo;
    if !total.is_finite() {
        return Ok(Integral::diverged(format!("halo integral of ψ(d(x,W))^q diverges for q = {q}")));
    }
    Ok(Integral::finite(total))
}

/// G_q on a domain.
pub fn integral_g_q(model: &PsiModel, domain: &SpaceTimeDomain, q: f64) -> Result<Integral> {
    integral_g_q_shape(model, &halo_shape(domain)?, domain.intensity, domain.nu_window(), q)
}

/// Verdict of the hyperbolic decay condition
/// `liminf_{r→∞} τ(r) / ((1/θ)(d−1) r) > 1` for `ψ = min(2, e^{−τ})`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperbolicCheck {
    /// Smallest ratio over `r = 2^k`, `k = 20..=40`.
    pub liminf: f64,
    pub holds: bool,
    /// The radial integral of `ψ(u/2)^θ sinh^{d−1} u` converges only when
    /// the ratio exceeds 2; reported separately.
    pub integrable: bool,
}

pub fn hyperbolic_condition(model: &PsiModel, dim: usize, theta: f64) -> HyperbolicCheck {
    let slope = (dim.max(2) - 1) as f64 / theta;
    let liminf = (20..=40)
        .map(|k| {
            let r = 2f64.powi(k);
            model.tau_at(r) / (slope * r)
        })
        .fold(f64::INFINITY, f64::min);
    HyperbolicCheck { liminf, holds: liminf > 1.0, integrable: liminf > 2.0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Space;
    use std::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn step_profile_integral() {
        let m = PsiModel::Step { height: 2.0, delta: 0.5 };
        let theta = 1.0 / 240.0;
        let i = integral_i_psi_radial(&m, 2, false, 1.0, theta, None).unwrap();
        assert!(rel(i.value, (2f64.powf(theta) * 4.0 * PI * 0.25).max(1.0)) < 1e-9);
        let big = PsiModel::Step { height: 2.0, delta: 3.0 };
        let i = integral_i_psi_radial(&big, 2, false, 1.0, theta, None).unwrap();
        assert!(rel(i.value, 2f64.powf(theta) * 4.0 * PI * 9.0) < 1e-9);
        let zero = PsiModel::Step { height: 0.0, delta: 0.0 };
        assert_eq!(integral_i_psi_radial(&zero, 3, false, 1.0, theta, None).unwrap().value, 1.0);
    }

    #[test]
    fn hyperbolic_verdicts() {
        let theta = 1.0 / 240.0;
        let quad = PsiModel::tau("r^2", |r| r * r);
        let lin = PsiModel::tau("r", |r| r);
        assert!(hyperbolic_condition(&quad, 2, theta).holds);
        let c = hyperbolic_condition(&lin, 2, theta);
        assert!(!c.holds);
        assert!((c.liminf - 1.0 / 240.0).abs() < 1e-12);
        assert!(integral_i_psi_radial(&quad, 2, true, 1.0, theta, None).unwrap().is_finite());
        let div = integral_i_psi_radial(&lin, 2, true, 1.0, theta, None).unwrap();
        assert!(!div.is_finite());
        assert!(div.violation.unwrap().contains("hyperbolic"));
    }

    #[test]
    fn hyperbolic_quadratic_matches_direct_sum() {
        // 2π ∫ sinh(u) exp(−θ u²/4) du by a plain midpoint rule.
        let theta = 1.0 / 240.0;
        let m = PsiModel::tau("r^2", |r| r * r);
        let v = integral_i_psi_radial(&m, 2, true, 1.0, theta, None).unwrap().value;
        let h = 1e-3;
        let mut s = 0.0;
        let mut k = 0;
        loop {
            let u = (k as f64 + 0.5) * h;
            let ln = ln_sinh(u) - theta * u * u / 4.0;
            if u > 2000.0 {
                break;
            }
            s += (ln - 240.0).exp();
            k += 1;
        }
        let direct = 2.0 * PI * s * h * 240f64.exp();
        assert!(rel(v, direct) < 1e-6, "{v} vs {direct}");
    }

    #[test]
    fn g_q_equal_window_and_unbounded() {
        let space = Space::torus(2, 10.0).unwrap();
        let dom = SpaceTimeDomain::space_only(space, Window::Full, 1.0).unwrap();
        let m = PsiModel::Step { height: 2.0, delta: 0.3 };
        let g = integral_g_q(&m, &dom, 1.0 / 120.0).unwrap();
        assert!(rel(g.value, 2f64.powf(1.0 / 120.0) * 100.0) < 1e-12);
        // q = 0 with ψ > 0 everywhere and X = ℝ²: infinite.
        let exp = PsiModel::tau("r", |r| r);
        let shape = HaloShape::Box { widths: vec![1.0, 1.0], room_lo: vec![f64::INFINITY; 2], room_hi: vec![f64::INFINITY; 2] };
        let g = integral_g_q_shape(&exp, &shape, 1.0, 1.0, 0.0).unwrap();
        assert!(!g.is_finite());
    }

    #[test]
    fn g_q_box_halo_matches_coarea() {
        // ν({0 < d(x,W) ≤ u}) = perimeter·u + π u² for a square W in ℝ².
        let q = 1.0 / 120.0;
        let c = 2.0;
        let m = PsiModel::tau("2r", move |r| c * r);
        for side in [4.0, 16.0, 64.0] {
            let shape = HaloShape::Box {
                widths: vec![side, side],
                room_lo: vec![f64::INFINITY; 2],
                room_hi: vec![f64::INFINITY; 2],
            };
            let g = integral_g_q_shape(&m, &shape, 1.0, side * side, q).unwrap().value;
            let psi_q = |u: f64| (q * m.ln_psi(u)).exp();
            let coarea = integrate_to_infinity(|u| psi_q(u) * (4.0 * side + 2.0 * PI * u), 0.0, 1.0, 1e-10, 1e300).unwrap();
            let expected = 2f64.powf(q) * side * side + coarea;
            assert!(rel(g, expected) < 1e-6, "side {side}: {g} vs {expected}");
        }
    }

    #[test]
    fn concentric_hyperbolic_halo() {
        let m = PsiModel::tau("r^2", |r| r * r);
        let shape = HaloShape::Concentric { dim: 2, hyperbolic: true, inner: 1.0, outer: None };
        let q = 3.0 / 200.0;
        let g = integral_g_q_shape(&m, &shape, 1.0, 0.0, q).unwrap().value;
        let direct = integrate(
            |u: f64| 2.0 * PI * u.sinh() * (-q * (u - 1.0).powi(2)).exp().min(2f64.powf(q)),
            1.0,
            200.0,
            1e-10,
            0.0,
        )
        .unwrap();
        assert!(rel(g, direct) < 1e-6, "{g} vs {direct}");
    }

    #[test]
    fn i_phi_lebesgue() {
        // φ(t) = min(2, e^{−t}): ∫_0^∞ min(2, e^{−t})^θ dt = 1/θ.
        let m = PsiModel::tau("t", |t| t);
        let theta = 1.0 / 120.0;
        let i = integral_i_phi(&m, &TimeMeasure::Lebesgue { t_max: 5.0 }, theta, None).unwrap();
        assert!(rel(i.value, 120.0) < 1e-7, "{}", i.value);
        let i = integral_i_phi(&m, &TimeMeasure::Lebesgue { t_max: 5.0 }, theta, Some(5.0)).unwrap();
        assert!(rel(i.value, 120.0 * (1.0 - (-5.0 * theta).exp())) < 1e-7);
    }
}
