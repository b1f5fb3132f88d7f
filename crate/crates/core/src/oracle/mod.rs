//! Slow reference implementations used to cross-check the fast paths.
//!
//! Everything here is written from the definitions with plain loops and
//! uses nothing from the crate beyond points, spaces and windows. Size caps
//! keep these out of production loops.

use crate::error::{input, Error, Result};
use crate::geometry::{Point, Space, Window};
use crate::process::MarkedPoint;
use crate::scores::{KernelFn, UStatKernel};
use serde::{Deserialize, Serialize};

pub const USTAT_CAP: usize = 300;
pub const GROWTH_CAP: usize = 500;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub instance: String,
    pub primary: f64,
    pub oracle: f64,
    pub tolerance: f64,
    pub discrepancy: f64,
    pub agree: bool,
}

impl OracleReport {
    pub fn compare(instance: impl Into<String>, primary: f64, oracle: f64, tolerance: f64) -> Self {
        let discrepancy = if primary == oracle { 0.0 } else { (primary - oracle).abs() };
        OracleReport { instance: instance.into(), primary, oracle, tolerance, discrepancy, agree: discrepancy <= tolerance }
    }
}

/// `Σ_{p ∈ χ ∩ W} Σ_{ordered distinct x_1..x_{k−1} ∈ χ∖{p}} f_δ(p, x_1, …)`
/// by nested loops over all tuples.
pub fn naive_ustat(space: &Space, window: &Window, kernel: &UStatKernel, points: &[MarkedPoint]) -> Result<f64> {
    if points.len() > USTAT_CAP {
        return input(format!("naive U-statistic limited to {USTAT_CAP} points, got {}", points.len()));
    }
    let k = kernel.order;
    let mut total = 0.0;
    let mut tuple: Vec<usize> = Vec::with_capacity(k);
    for p in 0..points.len() {
        if !space.contains(window, &points[p].loc) {
            continue;
        }
        tuple.clear();
        tuple.push(p);
        extend(space, kernel, points, &mut tuple, &mut total);
    }
    Ok(total)
}

fn extend(space: &Space, kernel: &UStatKernel, points: &[MarkedPoint], tuple: &mut Vec<usize>, total: &mut f64) {
    if tuple.len() == kernel.order {
        let mut close = true;
        for a in 0..tuple.len() {
            for b in a + 1..tuple.len() {
                if space.dist(&points[tuple[a]].loc, &points[tuple[b]].loc) >= kernel.delta {
                    close = false;
                }
            }
        }
        if close {
            *total += match &kernel.kernel {
                KernelFn::Clique { weight } => *weight,
                KernelFn::Custom { f, .. } => {
                    let refs: Vec<&MarkedPoint> = tuple.iter().map(|&i| &points[i]).collect();
                    f(&refs)
                }
            };
        }
        return;
    }
    for x in 0..points.len() {
        if tuple.contains(&x) {
            continue;
        }
        tuple.push(x);
        extend(space, kernel, points, tuple, total);
        tuple.pop();
    }
}

/// Input to [`naive_birth_growth`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NaiveSeed {
    pub loc: Point,
    pub birth: f64,
    pub speed: f64,
}

/// Chronological sweep without any spatial index: seed i is accepted iff
/// it is born by `t0` and no accepted seed j born strictly earlier has
/// `d(x_i, x_j) < (t_i − t_j) · R_j`. Birth times must be distinct.
pub fn naive_birth_growth(space: &Space, seeds: &[NaiveSeed], t0: f64) -> Result<Vec<bool>> {
    let n = seeds.len();
    if n > GROWTH_CAP {
        return input(format!("naive birth-growth limited to {GROWTH_CAP} seeds, got {n}"));
    }
    for i in 0..n {
        for j in i + 1..n {
            if seeds[i].birth == seeds[j].birth {
                return input(format!("seeds {i} and {j} share a birth time"));
            }
        }
    }
    let mut flags = vec![false; n];
    let mut done = vec![false; n];
    // Repeatedly take the earliest unprocessed seed.
    for _ in 0..n {
        let mut next = None;
        for i in 0..n {
            if !done[i] && next.is_none_or(|j: usize| seeds[i].birth < seeds[j].birth) {
                next = Some(i);
            }
        }
        let i = next.expect("an unprocessed seed remains");
        done[i] = true;
        if seeds[i].birth > t0 {
            continue;
        }
        let mut covered = false;
        for j in 0..n {
            if flags[j] && seeds[j].birth < seeds[i].birth {
                let grown = (seeds[i].birth - seeds[j].birth) * seeds[j].speed;
                if space.dist(&seeds[i].loc, &seeds[j].loc) < grown {
                    covered = true;
                }
            }
        }
        flags[i] = !covered;
    }
    Ok(flags)
}

/// Models with closed-form Poisson means on a flat torus.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TorusModel {
    /// Number of points with no other point within distance ρ.
    Isolated { rho: f64 },
    /// Number of unordered pairs at distance below δ.
    DeltaEdges { delta: f64 },
}

/// Mean of a torus model over the whole torus `[0, side)^d` at the given
/// intensity: `ν e^{−κ_d ρ^d λ}` or `ν κ_d δ^d λ / 2` with `ν = λ side^d`.
pub fn torus_closed_forms(model: TorusModel, dim: usize, side: f64, intensity: f64) -> Result<f64> {
    let kappa = match dim {
        1 => 2.0,
        2 => std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI / 3.0,
        _ => return Err(Error::Unsupported(format!("torus closed forms in dimension {dim}"))),
    };
    let nu = intensity * side.powi(dim as i32);
    match model {
        TorusModel::Isolated { rho } => {
            if !(0.0..side / 4.0).contains(&rho) {
                return input("isolation radius must lie in [0, side/4)");
            }
            Ok(nu * (-kappa * rho.powi(dim as i32) * intensity).exp())
        }
        TorusModel::DeltaEdges { delta } => {
            if !(0.0..side / 4.0).contains(&delta) {
                return input("edge range must lie in [0, side/4)");
            }
            Ok(nu * kappa * delta.powi(dim as i32) * intensity / 2.0)
        }
    }
}

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Φ(x). Near the origin, `Φ(x) = ½ + φ(x) Σ x^{2n+1}/(2n+1)!!` (all terms
/// positive); in the tails, `1 − Φ(x) = φ(x)·K(x)` with the Mills-ratio
/// continued fraction `K = 1/(x + 1/(x + 2/(x + 3/(x + …))))` evaluated by
/// the modified Lentz method. Odd symmetry about ½ is built in.
pub fn normal_cdf_reference(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let a = x.abs();
    let pdf = FRAC_1_SQRT_2PI * (-0.5 * a * a).exp();
    if a < 3.0 {
        let mut term = a;
        let mut sum = a;
        let mut n = 0.0;
        while term > 1e-18 * sum {
            n += 1.0;
            term *= a * a / (2.0 * n + 1.0);
            sum += term;
        }
        let half_mass = pdf * sum;
        return if x >= 0.0 { 0.5 + half_mass } else { 0.5 - half_mass };
    }
    let upper = if a.is_infinite() { 0.0 } else { pdf * mills_ratio(a) };
    if x > 0.0 {
        1.0 - upper
    } else {
        upper
    }
}

/// `K(a) = b0 + a1/(b1 + a2/(b2 + …))` with `b0 = 0`, `a1 = 1`, then
/// `b_n = a`, `a_{n+1} = n`.
fn mills_ratio(a: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = TINY;
    let mut c = f;
    let mut d = 0.0;
    for n in 1..5000 {
        let an = if n == 1 { 1.0 } else { (n - 1) as f64 };
        d = a + an * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = a + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::fixed_atom_id;

    fn mp(space: &Space, id: u64, c: &[f64]) -> MarkedPoint {
        MarkedPoint { id, loc: space.point(c).unwrap(), time: None, mark: 1.0 }
    }

    #[test]
    fn ustat_small_cases() {
        let space = Space::euclidean(2, 10.0).unwrap();
        let k = UStatKernel::edge_count(0.5).unwrap();
        assert_eq!(naive_ustat(&space, &Window::Full, &k, &[]).unwrap(), 0.0);
        let pts = [mp(&space, 1, &[0.0, 0.0]), mp(&space, 2, &[0.3, 0.0])];
        assert_eq!(naive_ustat(&space, &Window::Full, &k, &pts).unwrap(), 1.0);
        let many: Vec<MarkedPoint> = (0..301).map(|i| mp(&space, fixed_atom_id(i), &[0.0, 0.0])).collect();
        assert!(naive_ustat(&space, &Window::Full, &k, &many).is_err());
    }

    #[test]
    fn growth_small_cases() {
        let space = Space::euclidean(1, 100.0).unwrap();
        let s = |x: f64, t: f64, r: f64| NaiveSeed { loc: space.point(&[x]).unwrap(), birth: t, speed: r };
        assert_eq!(naive_birth_growth(&space, &[s(0.0, 1.0, 1.0)], 10.0).unwrap(), vec![true]);
        assert_eq!(naive_birth_growth(&space, &[s(0.0, 0.0, 1.0), s(0.5, 1.0, 1.0)], 10.0).unwrap(), vec![true, false]);
        assert_eq!(naive_birth_growth(&space, &[s(0.0, 0.0, 1.0), s(2.0, 1.0, 1.0)], 10.0).unwrap(), vec![true, true]);
        assert!(naive_birth_growth(&space, &[s(0.0, 1.0, 1.0), s(3.0, 1.0, 1.0)], 10.0).is_err());
    }

    #[test]
    fn closed_forms() {
        let v = torus_closed_forms(TorusModel::Isolated { rho: 0.3 }, 2, 10.0, 1.0).unwrap();
        assert!((v - 100.0 * (-std::f64::consts::PI * 0.09).exp()).abs() < 1e-12);
        assert!((v - 75.3713).abs() < 1e-4);
        assert_eq!(torus_closed_forms(TorusModel::DeltaEdges { delta: 0.0 }, 2, 10.0, 1.0).unwrap(), 0.0);
        assert!((torus_closed_forms(TorusModel::Isolated { rho: 1e-9 }, 2, 10.0, 1.0).unwrap() - 100.0).abs() < 1e-12);
        assert!(torus_closed_forms(TorusModel::Isolated { rho: 3.0 }, 2, 10.0, 1.0).is_err());
    }

    #[test]
    fn normal_cdf_pinned_values() {
        // 50-digit values.
        let table = [
            (-8.0, 6.2209605742717841235e-16),
            (-5.0, 2.8665157187919391167e-7),
            (-3.0, 0.0013498980316300945267),
            (-1.5, 0.066807201268858066004),
            (0.5, 0.69146246127401310364),
            (1.96, 0.97500210485177956379),
            (2.5, 0.99379033467422386483),
            (3.0, 0.99865010196836990547),
            (4.2, 0.99998665425098409367),
            (7.0, 0.99999999999872018746),
        ];
        for (x, want) in table {
            let got = normal_cdf_reference(x);
            assert!((got - want).abs() <= 1e-15, "Φ({x}) = {got}, want {want}");
        }
        assert_eq!(normal_cdf_reference(0.0), 0.5);
        assert_eq!(normal_cdf_reference(1.96), 0.9750021048517795);
    }

    #[test]
    fn normal_cdf_symmetry_and_monotonicity() {
        let mut prev = 0.0;
        for i in -800..=800 {
            let x = i as f64 / 100.0;
            let p = normal_cdf_reference(x);
            assert!(p >= prev, "not monotone at {x}");
            prev = p;
            assert!((normal_cdf_reference(-x) - (1.0 - p)).abs() <= 1e-15);
        }
    }
}
