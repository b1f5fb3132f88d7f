use super::ScoreFamily;
use crate::geometry::{Point, Space, SpaceKind, Window};
use crate::process::{MarkedPoint, View};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnnScoreConfig {
    pub k: usize,
    pub alpha: f64,
}

/// `ξ(x) = Σ_{y ∈ V_k(x)} (½·1{x ∈ V_k(y)} + 1{x ∉ V_k(y)}) d(x, y)^α`,
/// so that `Σ ξ` is the α-powered length of the undirected kNN graph.
#[derive(Clone, Copy, Debug)]
pub struct KnnScore {
    pub cfg: KnnScoreConfig,
}

impl KnnScore {
    pub fn new(cfg: KnnScoreConfig) -> Self {
        assert!(cfg.k >= 1, "k must be at least 1");
        assert!(cfg.alpha >= 0.0, "α must be non-negative");
        KnnScore { cfg }
    }
}

/// The `k` nearest points of `view` to `loc` other than `exclude`, ordered
/// by `(distance, id)`; all of them when at most `k` exist.
pub fn k_nearest(view: &View, loc: &Point, exclude: Option<u64>, k: usize) -> Vec<(u64, f64)> {
    let others = view.len() - usize::from(exclude.is_some_and(|id| view.get(id).is_some()));
    let collect = |r: f64| {
        let mut v: Vec<(u64, f64)> = Vec::new();
        view.for_each_within(loc, r, |q, d| {
            if Some(q.id) != exclude {
                v.push((q.id, d));
            }
        });
        v
    };
    let mut found = if others <= k {
        collect(f64::INFINITY)
    } else {
        let mut r = initial_radius(view, k);
        loop {
            let v = collect(r);
            if v.len() >= k {
                break v;
            }
            r *= 2.0;
        }
    };
    found.sort_unstable_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    found.truncate(k);
    found
}

fn initial_radius(view: &View, k: usize) -> f64 {
    let space = view.space();
    let carrier = view.domain().carrier.clone();
    let vol = space.volume(&carrier).unwrap_or(1.0);
    let target = 2.0 * (k as f64) * vol / view.len().max(1) as f64;
    radius_for_volume(space, target)
}

/// Smallest `r` with `ball_volume(r) ≥ v` (to bisection accuracy).
fn radius_for_volume(space: &Space, v: f64) -> f64 {
    let d = space.dim() as f64;
    let kappa = space.ball_volume(1.0);
    if space.kind() != SpaceKind::HyperbolicBall {
        return (v / kappa).powf(1.0 / d).max(1e-12);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while space.ball_volume(hi) < v {
        hi *= 2.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if space.ball_volume(mid) < v {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi.max(1e-12)
}

/// Whether `x` is among the `k` nearest neighbours of `y` in `view`.
fn in_knn_of(view: &View, y: &MarkedPoint, x_id: u64, d_yx: f64, k: usize) -> bool {
    let mut closer = 0usize;
    view.for_each_within(&y.loc, d_yx.next_up(), |z, d| {
        if z.id != y.id && z.id != x_id && (d < d_yx || (d == d_yx && z.id < x_id)) {
            closer += 1;
        }
    });
    closer < k
}

impl KnnScore {
    fn edge_weight(&self, d: f64, mutual: bool) -> f64 {
        let w = if mutual { 0.5 } else { 1.0 };
        w * d.powf(self.cfg.alpha)
    }
}

impl ScoreFamily for KnnScore {
    fn name(&self) -> String {
        format!("knn(k={}, α={})", self.cfg.k, self.cfg.alpha)
    }

    fn score(&self, p: &MarkedPoint, view: &View) -> f64 {
        let owned;
        let v = if view.get(p.id).is_some() {
            view
        } else {
            owned = view.with(p);
            &owned
        };
        let k = self.cfg.k;
        let mut total = 0.0;
        for (yid, d) in k_nearest(v, &p.loc, Some(p.id), k) {
            let y = v.get(yid).expect("neighbour in view");
            total += self.edge_weight(d, in_knn_of(v, y, p.id, d, k));
        }
        total
    }

    fn window_sum(&self, view: &View, window: &Window) -> f64 {
        let space = view.space();
        let k = self.cfg.k;
        let mut lists: HashMap<u64, Vec<(u64, f64)>> = HashMap::new();
        let mut total = 0.0;
        for x in view.iter().filter(|q| space.contains(window, &q.loc)) {
            let nx = lists.entry(x.id).or_insert_with(|| k_nearest(view, &x.loc, Some(x.id), k)).clone();
            for (yid, d) in nx {
                let ny = lists.entry(yid).or_insert_with(|| {
                    let y = view.get(yid).expect("neighbour in view");
                    k_nearest(view, &y.loc, Some(yid), k)
                });
                let mutual = ny.iter().any(|(id, _)| *id == x.id);
                total += self.edge_weight(d, mutual);
            }
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::{Configuration, SpaceTimeDomain};
    use std::sync::Arc;

    fn line(xs: &[f64]) -> Configuration {
        let s = Space::euclidean(1, 20.0).unwrap();
        let d = Arc::new(SpaceTimeDomain::space_only(s, Window::Full, 1.0).unwrap());
        let pts = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| MarkedPoint { id: i as u64, loc: s.point(&[x]).unwrap(), time: None, mark: 1.0 })
            .collect();
        Configuration::new(d, pts).unwrap()
    }

    #[test]
    fn two_points_mutual_edge() {
        let c = line(&[0.0, 2.5]);
        let s = KnnScore::new(KnnScoreConfig { k: 1, alpha: 1.0 });
        assert_eq!(s.evaluate(&c.points()[0], &c), 1.25);
        assert_eq!(s.window_sum(&View::of(&c), &Window::Full), 2.5);
    }

    #[test]
    fn three_points_on_a_line() {
        let c = line(&[0.0, 1.0, 3.0]);
        let s = KnnScore::new(KnnScoreConfig { k: 1, alpha: 1.0 });
        let v: Vec<f64> = c.points().iter().map(|p| s.evaluate(p, &c)).collect();
        assert_eq!(v, vec![0.5, 0.5, 2.0]);
        assert_eq!(s.window_sum(&View::of(&c), &Window::Full), 3.0);
        let s0 = KnnScore::new(KnnScoreConfig { k: 1, alpha: 0.0 });
        assert_eq!(s0.window_sum(&View::of(&c), &Window::Full), 2.0);
    }

    #[test]
    fn fewer_than_k_uses_all() {
        let c = line(&[0.0, 1.0]);
        let s = KnnScore::new(KnnScoreConfig { k: 5, alpha: 1.0 });
        assert_eq!(s.evaluate(&c.points()[0], &c), 0.5);
    }

    #[test]
    fn ties_broken_by_id() {
        let c = line(&[0.0, -1.0, 1.0]);
        let nn = k_nearest(&View::of(&c), &c.points()[0].loc, Some(0), 1);
        assert_eq!(nn, vec![(1, 1.0)]);
    }
}
