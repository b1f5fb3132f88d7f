use crate::error::{input, Error, Result};
use crate::geometry::{Point, Space, SpatialIndex, Window};
use crate::process::domain::SpaceTimeDomain;
use crate::process::rng::RandomStream;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use std::sync::{Arc, OnceLock};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkedPoint {
    pub id: u64,
    pub loc: Point,
    /// Time (or weight) coordinate, present iff the domain is space-time.
    pub time: Option<f64>,
    pub mark: f64,
}

impl MarkedPoint {
    pub fn time_or_zero(&self) -> f64 {
        self.time.unwrap_or(0.0)
    }
}

/// Finite configuration of marked points, sorted by id.
#[derive(Clone, Debug)]
pub struct Configuration {
    domain: Arc<SpaceTimeDomain>,
    points: Vec<MarkedPoint>,
    index: OnceLock<Arc<SpatialIndex>>,
}

impl PartialEq for Configuration {
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points && *self.domain == *other.domain
    }
}

impl Configuration {
    pub fn new(domain: Arc<SpaceTimeDomain>, mut points: Vec<MarkedPoint>) -> Result<Self> {
        for p in &points {
            domain.check_point(p)?;
        }
        points.sort_by_key(|p| p.id);
        if points.windows(2).any(|w| w[0].id == w[1].id) {
            return input("duplicate point ids in configuration");
        }
        Ok(Configuration::from_sorted(domain, points))
    }

    pub fn empty(domain: Arc<SpaceTimeDomain>) -> Self {
        Configuration::from_sorted(domain, Vec::new())
    }

    pub(crate) fn from_sorted(domain: Arc<SpaceTimeDomain>, points: Vec<MarkedPoint>) -> Self {
        debug_assert!(points.windows(2).all(|w| w[0].id < w[1].id));
        Configuration { domain, points, index: OnceLock::new() }
    }

    pub fn domain(&self) -> &Arc<SpaceTimeDomain> {
        &self.domain
    }

    pub fn space(&self) -> &Space {
        &self.domain.space
    }

    pub fn points(&self) -> &[MarkedPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn position(&self, id: u64) -> Option<usize> {
        self.points.binary_search_by_key(&id, |p| p.id).ok()
    }

    pub fn get(&self, id: u64) -> Option<&MarkedPoint> {
        self.position(id).map(|i| &self.points[i])
    }

    /// Smallest id strictly above every id in use (below the fixed-atom range).
    pub fn next_id(&self) -> u64 {
        self.points.iter().rev().map(|p| p.id).find(|&id| id < FIXED_ATOM_BASE).map_or(0, |id| id + 1)
    }

    pub fn index(&self) -> &SpatialIndex {
        self.index.get_or_init(|| {
            let locs: Vec<Point> = self.points.iter().map(|p| p.loc).collect();
            Arc::new(SpatialIndex::build(&self.domain.space, &locs))
        })
    }

    /// Multiset union. An extra point equal to a stored point (same id and
    /// content) is the same atom and is kept once; an extra whose id is taken
    /// by a different point is relabelled with a fresh id.
    pub fn augment(&self, extra: &[MarkedPoint]) -> Result<Configuration> {
        if extra.len() > 7 {
            return input("augment accepts at most 7 extra points");
        }
        let mut points = self.points.clone();
        let mut next = self.next_id();
        for e in extra {
            self.domain.check_point(e)?;
            match points.binary_search_by_key(&e.id, |p| p.id) {
                Ok(i) if points[i] == *e => {}
                Ok(_) => {
                    let mut q = *e;
                    while points.binary_search_by_key(&next, |p| p.id).is_ok() {
                        next += 1;
                    }
                    q.id = next;
                    next += 1;
                    let pos = points.binary_search_by_key(&q.id, |p| p.id).unwrap_err();
                    points.insert(pos, q);
                }
                Err(pos) => points.insert(pos, *e),
            }
        }
        Ok(Configuration::from_sorted(self.domain.clone(), points))
    }

    /// Points with `d(center, loc) < r`.
    pub fn restrict_space(&self, center: &Point, r: f64) -> Configuration {
        let space = self.domain.space;
        let points = if r == f64::INFINITY {
            self.points.clone()
        } else {
            self.points.iter().filter(|p| space.dist(center, &p.loc) < r).copied().collect()
        };
        Configuration::from_sorted(self.domain.clone(), points)
    }

    /// Points with time `< s`.
    pub fn restrict_time(&self, s: f64) -> Result<Configuration> {
        if !self.domain.is_space_time() {
            return Err(Error::Domain("time restriction on a space-only domain".into()));
        }
        let points = self.points.iter().filter(|p| p.time.is_some_and(|t| t < s)).copied().collect();
        Ok(Configuration::from_sorted(self.domain.clone(), points))
    }

    /// Points whose location lies in `w`.
    pub fn count_in(&self, w: &Window) -> usize {
        self.points.iter().filter(|p| self.domain.space.contains(w, &p.loc)).count()
    }
}

/// Ids at or above this value are reserved for fixed atoms added by the
/// difference-operator machinery.
pub const FIXED_ATOM_BASE: u64 = u64::MAX - 1024;

/// Id of the `k`-th fixed atom.
pub fn fixed_atom_id(k: u64) -> u64 {
    u64::MAX - 1 - k
}

/// Poisson process on `region` (times and marks drawn from the domain).
pub fn sample_poisson(domain: &Arc<SpaceTimeDomain>, region: &Window, stream: RandomStream) -> Result<Configuration> {
    let mass = domain.total_mass(region)?;
    let mut rng = stream.rng();
    let n = poisson_count(mass, &mut rng)?;
    let space = domain.space;
    let locs = space.sample_uniform(region, n, &mut rng)?;
    let mut points = Vec::with_capacity(n);
    for (i, loc) in locs.into_iter().enumerate() {
        let time = domain.sample_time(&mut rng);
        let mark = domain.marks.sample(&mut rng);
        points.push(MarkedPoint { id: i as u64, loc, time, mark });
    }
    Ok(Configuration::from_sorted(domain.clone(), points))
}

pub(crate) fn poisson_count<R: Rng + ?Sized>(mass: f64, rng: &mut R) -> Result<usize> {
    if mass <= 0.0 {
        return Ok(0);
    }
    let d = Poisson::new(mass).map_err(|e| Error::Config(format!("poisson mean {mass}: {e}")))?;
    Ok(d.sample(rng) as usize)
}

/// Read-only view of `base ∪ extras` without copying the base.
///
/// Extras are kept sorted by id; an extra identical to a base point is
/// dropped (same atom).
#[derive(Clone, Debug)]
pub struct View<'a> {
    base: &'a Configuration,
    extras: Vec<MarkedPoint>,
}

impl<'a> View<'a> {
    pub fn of(base: &'a Configuration) -> Self {
        View { base, extras: Vec::new() }
    }

    pub fn new(base: &'a Configuration, extras: &[MarkedPoint]) -> Self {
        let mut ex: Vec<MarkedPoint> = extras.iter().filter(|e| base.get(e.id) != Some(*e)).copied().collect();
        ex.sort_by_key(|p| p.id);
        ex.dedup_by_key(|p| p.id);
        debug_assert!(ex.iter().all(|e| base.get(e.id).is_none()), "view extra collides with a base id");
        View { base, extras: ex }
    }

    /// This view with one more point.
    pub fn with(&self, p: &MarkedPoint) -> View<'a> {
        let mut ex = self.extras.clone();
        ex.push(*p);
        View::new(self.base, &ex)
    }

    pub fn base(&self) -> &'a Configuration {
        self.base
    }

    pub fn extras(&self) -> &[MarkedPoint] {
        &self.extras
    }

    pub fn domain(&self) -> &'a Arc<SpaceTimeDomain> {
        self.base.domain()
    }

    pub fn space(&self) -> &'a Space {
        self.base.space()
    }

    pub fn len(&self) -> usize {
        self.base.len() + self.extras.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, id: u64) -> Option<&MarkedPoint> {
        self.base.get(id).or_else(|| self.extras.iter().find(|e| e.id == id))
    }

    /// All points in id order.
    pub fn iter(&self) -> impl Iterator<Item = &MarkedPoint> + '_ {
        MergeById { a: self.base.points(), b: &self.extras, i: 0, j: 0 }
    }

    /// Calls `f(point, distance)` for points strictly within `r` of `loc`,
    /// in unspecified order.
    pub fn for_each_within<'s, F: FnMut(&'s MarkedPoint, f64)>(&'s self, loc: &Point, r: f64, mut f: F) {
        let pts = self.base.points();
        self.base.index().for_each_within(loc, r, |i, d| f(&pts[i], d));
        let space = self.space();
        for e in &self.extras {
            let d = space.dist(loc, &e.loc);
            if d < r {
                f(e, d);
            }
        }
    }

    /// Points strictly within `r` of `loc`, other than `exclude`, sorted by id.
    pub fn neighbors<'s>(&'s self, loc: &Point, r: f64, exclude: Option<u64>) -> Vec<(&'s MarkedPoint, f64)> {
        let mut out = Vec::new();
        self.for_each_within(loc, r, |p, d| {
            if Some(p.id) != exclude {
                out.push((p, d));
            }
        });
        out.sort_unstable_by_key(|(p, _)| p.id);
        out
    }

    /// Copies the view into an owned configuration.
    pub fn materialize(&self) -> Configuration {
        Configuration::from_sorted(self.base.domain().clone(), self.iter().copied().collect())
    }
}

struct MergeById<'a> {
    a: &'a [MarkedPoint],
    b: &'a [MarkedPoint],
    i: usize,
    j: usize,
}

impl<'a> Iterator for MergeById<'a> {
    type Item = &'a MarkedPoint;
    fn next(&mut self) -> Option<&'a MarkedPoint> {
        match (self.a.get(self.i), self.b.get(self.j)) {
            (Some(x), Some(y)) => {
                if x.id < y.id {
                    self.i += 1;
                    Some(x)
                } else {
                    self.j += 1;
                    Some(y)
                }
            }
            (Some(x), None) => {
                self.i += 1;
                Some(x)
            }
            (None, Some(y)) => {
                self.j += 1;
                Some(y)
            }
            (None, None) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::domain::{MarkLaw, TimeMeasure};

    fn torus_domain() -> Arc<SpaceTimeDomain> {
        let s = Space::torus(2, 10.0).unwrap();
        Arc::new(SpaceTimeDomain::space_only(s, Window::Full, 1.0).unwrap())
    }

    fn timed_domain() -> Arc<SpaceTimeDomain> {
        let s = Space::euclidean(1, 10.0).unwrap();
        Arc::new(
            SpaceTimeDomain::new(
                s,
                Window::Full,
                Window::Full,
                2.0,
                TimeMeasure::Lebesgue { t_max: 5.0 },
                MarkLaw::PointMass { value: 3.0 },
            )
            .unwrap(),
        )
    }

    #[test]
    fn zero_mass_is_empty() {
        let d = Arc::new(SpaceTimeDomain::space_only(Space::torus(2, 10.0).unwrap(), Window::Full, 0.0).unwrap());
        assert!(sample_poisson(&d, &Window::Full, RandomStream::new(1)).unwrap().is_empty());
    }

    #[test]
    fn point_mass_marks_and_times() {
        let d = timed_domain();
        let c = sample_poisson(&d, &Window::Full, RandomStream::new(4)).unwrap();
        assert!(c.len() > 50);
        assert!(c.points().iter().all(|p| p.mark == 3.0 && p.time.is_some()));
    }

    #[test]
    fn augment_semantics() {
        let d = torus_domain();
        let c = sample_poisson(&d, &Window::Full, RandomStream::new(2)).unwrap();
        assert_eq!(c.augment(&[]).unwrap(), c);
        let extra: Vec<MarkedPoint> = (0..6)
            .map(|k| MarkedPoint { id: fixed_atom_id(k), loc: d.space.origin(), time: None, mark: 1.0 })
            .collect();
        let a = c.augment(&extra).unwrap();
        assert_eq!(a.len(), c.len() + 6);
        let twice = c.augment(&extra[..2]).unwrap().augment(&extra[2..]).unwrap();
        assert_eq!(twice, a);
        // Re-adding a stored atom is a no-op.
        assert_eq!(c.augment(&[c.points()[0]]).unwrap(), c);
        // Id collision with different content relabels.
        let mut q = c.points()[0];
        q.loc = d.space.point(&[1.0, 1.0]).unwrap();
        assert_eq!(c.augment(&[q]).unwrap().len(), c.len() + 1);
    }

    #[test]
    fn restrictions() {
        let d = torus_domain();
        let c = sample_poisson(&d, &Window::Full, RandomStream::new(3)).unwrap();
        let o = d.space.origin();
        assert_eq!(c.restrict_space(&o, f64::INFINITY), c);
        assert!(c.restrict_space(&o, 0.0).is_empty());
        let r = c.restrict_space(&o, 3.0);
        let brute: Vec<u64> = c.points().iter().filter(|p| d.space.dist(&o, &p.loc) < 3.0).map(|p| p.id).collect();
        assert_eq!(r.points().iter().map(|p| p.id).collect::<Vec<_>>(), brute);
        assert_eq!(c.restrict_space(&o, 4.0).restrict_space(&o, 2.0), c.restrict_space(&o, 2.0));
        assert!(matches!(c.restrict_time(1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn time_restriction_is_strict() {
        let d = timed_domain();
        let c = sample_poisson(&d, &Window::Full, RandomStream::new(5)).unwrap();
        assert!(c.restrict_time(f64::NEG_INFINITY).unwrap().is_empty());
        assert_eq!(c.restrict_time(f64::INFINITY).unwrap(), c);
        let t = c.points()[3].time.unwrap();
        let r = c.restrict_time(t).unwrap();
        assert!(r.get(c.points()[3].id).is_none());
        assert!(r.points().iter().all(|p| p.time.unwrap() < t));
    }

    #[test]
    fn view_matches_materialized_union() {
        let d = torus_domain();
        let c = sample_poisson(&d, &Window::Full, RandomStream::new(6)).unwrap();
        let p = MarkedPoint { id: fixed_atom_id(0), loc: d.space.point(&[0.5, 0.5]).unwrap(), time: None, mark: 1.0 };
        let q = MarkedPoint { id: fixed_atom_id(1), loc: d.space.point(&[0.7, 0.5]).unwrap(), time: None, mark: 1.0 };
        let v = View::new(&c, &[p, q]);
        let m = c.augment(&[q, p]).unwrap();
        assert_eq!(v.materialize(), m);
        let ids: Vec<u64> = v.neighbors(&p.loc, 2.0, Some(p.id)).iter().map(|(x, _)| x.id).collect();
        let brute: Vec<u64> =
            m.points().iter().filter(|x| x.id != p.id && d.space.dist(&p.loc, &x.loc) < 2.0).map(|x| x.id).collect();
        assert_eq!(ids, brute);
    }
}
