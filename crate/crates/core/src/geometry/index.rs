use super::{Point, Space, SpaceKind};

/// Fixed-radius neighbour search over an immutable point list.
///
/// Euclidean and torus spaces use a uniform cell grid (cell side tied to
/// the point density, torus cells wrap around); hyperbolic space uses a
/// vantage-point tree because its volume growth defeats uniform grids.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    space: Space,
    points: Vec<Point>,
    kind: IndexKind,
}

#[derive(Debug, Clone)]
enum IndexKind {
    Scan,
    Grid(Grid),
    Tree(VpTree),
}

const SCAN_LIMIT: usize = 24;

impl SpatialIndex {
    pub fn build(space: &Space, points: &[Point]) -> Self {
        let points = points.to_vec();
        let kind = if points.len() <= SCAN_LIMIT {
            IndexKind::Scan
        } else {
            match space.kind() {
                SpaceKind::HyperbolicBall => IndexKind::Tree(VpTree::build(space, &points)),
                _ => IndexKind::Grid(Grid::build(space, &points)),
            }
        };
        SpatialIndex { space: *space, points, kind }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &Point {
        &self.points[i]
    }

    /// Positions `i` with `d(p, points[i]) < r`, ascending.
    pub fn neighbors_within(&self, p: &Point, r: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.for_each_within(p, r, |i, _| out.push(i));
        out.sort_unstable();
        out
    }

    /// Calls `f(i, distance)` for every point strictly within `r` of `p`, in
    /// unspecified order.
    pub fn for_each_within<F: FnMut(usize, f64)>(&self, p: &Point, r: f64, mut f: F) {
        if !(r > 0.0) {
            return;
        }
        match &self.kind {
            IndexKind::Scan => {
                for (i, q) in self.points.iter().enumerate() {
                    let d = self.space.dist(p, q);
                    if d < r {
                        f(i, d);
                    }
                }
            }
            IndexKind::Grid(g) => g.query(&self.space, &self.points, p, r, &mut f),
            IndexKind::Tree(t) => t.query(&self.space, &self.points, p, r, &mut f),
        }
    }
}

#[derive(Debug, Clone)]
struct Grid {
    d: usize,
    origin: [f64; 4],
    cell: f64,
    dims: [usize; 4],
    torus: bool,
    start: Vec<u32>,
    items: Vec<u32>,
}

impl Grid {
    fn build(space: &Space, points: &[Point]) -> Self {
        let d = space.dim();
        let n = points.len();
        let torus = space.kind() == SpaceKind::FlatTorus;
        let mut origin = [0.0; 4];
        let mut span = [0.0f64; 4];
        if torus {
            for k in 0..d {
                origin[k] = -0.5 * space.extent();
                span[k] = space.extent();
            }
        } else {
            for k in 0..d {
                let lo = points.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
                let hi = points.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
                origin[k] = lo;
                span[k] = hi - lo;
            }
        }
        // About two points per cell.
        let vol: f64 = (0..d).map(|k| span[k].max(1e-12)).product();
        let mut cell = (2.0 * vol / n as f64).powf(1.0 / d as f64);
        if !(cell > 0.0) || !cell.is_finite() {
            cell = 1.0;
        }
        let mut dims = [1usize; 4];
        loop {
            let mut total = 1usize;
            for k in 0..d {
                dims[k] = if torus {
                    ((span[k] / cell).floor() as usize).max(1)
                } else {
                    ((span[k] / cell).floor() as usize + 1).max(1)
                };
                total = total.saturating_mul(dims[k]);
            }
            if total <= 4 * n + 16 {
                break;
            }
            cell *= 1.5;
        }
        if torus {
            // Cells tile the torus exactly.
            cell = space.extent() / dims[0] as f64;
            for k in 1..d {
                dims[k] = dims[0];
            }
        }
        let mut g = Grid { d, origin, cell, dims, torus, start: Vec::new(), items: Vec::new() };
        let total: usize = (0..d).map(|k| dims[k]).product();
        let mut counts = vec![0u32; total + 1];
        let cells: Vec<usize> = points.iter().map(|p| g.flat(&g.cell_of(p))).collect();
        for &c in &cells {
            counts[c + 1] += 1;
        }
        for i in 0..total {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut items = vec![0u32; n];
        for (i, &c) in cells.iter().enumerate() {
            items[fill[c] as usize] = i as u32;
            fill[c] += 1;
        }
        g.start = counts;
        g.items = items;
        g
    }

    fn cell_of(&self, p: &Point) -> [usize; 4] {
        let mut c = [0usize; 4];
        for k in 0..self.d {
            let v = ((p[k] - self.origin[k]) / self.cell).floor();
            c[k] = (v.max(0.0) as usize).min(self.dims[k] - 1);
        }
        c
    }

    fn flat(&self, c: &[usize; 4]) -> usize {
        let mut idx = 0;
        for k in (0..self.d).rev() {
            idx = idx * self.dims[k] + c[k];
        }
        idx
    }

    fn query<F: FnMut(usize, f64)>(&self, space: &Space, points: &[Point], p: &Point, r: f64, f: &mut F) {
        let mut ranges: [Vec<usize>; 4] = Default::default();
        for k in 0..self.d {
            let m = self.dims[k];
            if self.torus {
                let reach = (r / self.cell).ceil();
                if !reach.is_finite() || 2.0 * reach + 1.0 >= m as f64 {
                    ranges[k] = (0..m).collect();
                } else {
                    let reach = reach as i64;
                    let c = (((p[k] - self.origin[k]) / self.cell).floor() as i64).clamp(0, m as i64 - 1);
                    ranges[k] = (-reach..=reach).map(|o| (c + o).rem_euclid(m as i64) as usize).collect();
                }
            } else {
                let lo = ((p[k] - r - self.origin[k]) / self.cell).floor();
                let hi = ((p[k] + r - self.origin[k]) / self.cell).floor();
                if hi < 0.0 || lo > (m - 1) as f64 {
                    return;
                }
                let lo = lo.max(0.0) as usize;
                let hi = if hi.is_finite() { (hi as usize).min(m - 1) } else { m - 1 };
                ranges[k] = (lo..=hi).collect();
            }
        }
        let mut pos = [0usize; 4];
        loop {
            let mut cell = [0usize; 4];
            for k in 0..self.d {
                cell[k] = ranges[k][pos[k]];
            }
            let c = self.flat(&cell);
            for &i in &self.items[self.start[c] as usize..self.start[c + 1] as usize] {
                let d = space.dist(p, &points[i as usize]);
                if d < r {
                    f(i as usize, d);
                }
            }
            let mut k = 0;
            loop {
                if k == self.d {
                    return;
                }
                pos[k] += 1;
                if pos[k] < ranges[k].len() {
                    break;
                }
                pos[k] = 0;
                k += 1;
            }
        }
    }
}

#[derive(Debug, Clone)]
struct VpTree {
    nodes: Vec<VpNode>,
    perm: Vec<u32>,
}

#[derive(Debug, Clone)]
enum VpNode {
    Leaf { start: u32, end: u32 },
    Inner { vp: u32, mu: f64, inside: u32, outside: u32 },
}

const VP_LEAF: usize = 8;

impl VpTree {
    fn build(space: &Space, points: &[Point]) -> Self {
        let mut perm: Vec<u32> = (0..points.len() as u32).collect();
        let mut nodes = Vec::new();
        let mut scratch = Vec::new();
        Self::build_rec(space, points, &mut perm, 0, points.len(), &mut nodes, &mut scratch);
        VpTree { nodes, perm }
    }

    fn build_rec(
        space: &Space,
        points: &[Point],
        perm: &mut [u32],
        start: usize,
        end: usize,
        nodes: &mut Vec<VpNode>,
        scratch: &mut Vec<(f64, u32)>,
    ) -> u32 {
        let id = nodes.len() as u32;
        if end - start <= VP_LEAF {
            nodes.push(VpNode::Leaf { start: start as u32, end: end as u32 });
            return id;
        }
        nodes.push(VpNode::Leaf { start: 0, end: 0 });
        let vp = perm[start];
        let vpp = points[vp as usize];
        scratch.clear();
        scratch.extend(perm[start + 1..end].iter().map(|&i| (space.dist(&vpp, &points[i as usize]), i)));
        let mid = scratch.len() / 2;
        scratch.select_nth_unstable_by(mid, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mu = scratch[mid].0;
        for (k, &(_, i)) in scratch.iter().enumerate() {
            perm[start + 1 + k] = i;
        }
        // Inside: scratch[..=mid] (distance ≤ mu), outside: the rest (≥ mu).
        let split = start + 1 + mid + 1;
        let inside = Self::build_rec(space, points, perm, start + 1, split, nodes, scratch);
        let outside = Self::build_rec(space, points, perm, split, end, nodes, scratch);
        nodes[id as usize] = VpNode::Inner { vp, mu, inside, outside };
        id
    }

    fn query<F: FnMut(usize, f64)>(&self, space: &Space, points: &[Point], p: &Point, r: f64, f: &mut F) {
        let mut stack = vec![0u32];
        while let Some(n) = stack.pop() {
            match self.nodes[n as usize] {
                VpNode::Leaf { start, end } => {
                    for &i in &self.perm[start as usize..end as usize] {
                        let d = space.dist(p, &points[i as usize]);
                        if d < r {
                            f(i as usize, d);
                        }
                    }
                }
                VpNode::Inner { vp, mu, inside, outside } => {
                    let dv = space.dist(p, &points[vp as usize]);
                    if dv < r {
                        f(vp as usize, dv);
                    }
                    // Conservative slack absorbs rounding in the triangle inequality.
                    let slack = 1e-9 * (1.0 + mu + dv);
                    if dv - r <= mu + slack {
                        stack.push(inside);
                    }
                    if dv + r >= mu - slack {
                        stack.push(outside);
                    }
                }
            }
        }
    }
}
