use super::ScoreFamily;
use crate::error::{config, Error, Result};
use crate::geometry::Space;
use crate::process::{Configuration, MarkedPoint, View};
use std::fmt;
use std::sync::Arc;

type KernelClosure = dyn Fn(&[&MarkedPoint]) -> f64 + Send + Sync;

/// Kernel on `k` marked points; only consulted when all pairwise distances
/// are below δ, so it vanishes off the δ-cliques by construction.
#[derive(Clone)]
pub enum KernelFn {
    /// Constant `weight` on δ-cliques. With `k = 2` and weight ½, H is the
    /// edge count of the δ-geometric graph.
    Clique { weight: f64 },
    /// Symmetric user kernel with declared `sup |f|`.
    Custom { f: Arc<KernelClosure>, sup: f64 },
}

impl fmt::Debug for KernelFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelFn::Clique { weight } => write!(f, "Clique({weight})"),
            KernelFn::Custom { sup, .. } => write!(f, "Custom(sup={sup})"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct UStatKernel {
    pub order: usize,
    pub delta: f64,
    pub kernel: KernelFn,
}

impl UStatKernel {
    pub fn new(order: usize, delta: f64, kernel: KernelFn) -> Result<Self> {
        if order > 4 {
            return Err(Error::Unsupported(format!("U-statistics of order {order} (maximum 4)")));
        }
        if order < 2 {
            return config("U-statistic order must be at least 2");
        }
        if !(delta > 0.0) {
            return config("U-statistic range δ must be positive");
        }
        Ok(UStatKernel { order, delta, kernel })
    }

    /// `½·1{d < δ}` on pairs.
    pub fn edge_count(delta: f64) -> Result<Self> {
        UStatKernel::new(2, delta, KernelFn::Clique { weight: 0.5 })
    }

    pub fn sup(&self) -> f64 {
        match &self.kernel {
            KernelFn::Clique { weight } => weight.abs(),
            KernelFn::Custom { sup, .. } => *sup,
        }
    }

    /// `f_δ(points)`: zero unless every pairwise distance is below δ.
    pub fn value(&self, space: &Space, points: &[&MarkedPoint]) -> f64 {
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                if space.dist(&points[i].loc, &points[j].loc) >= self.delta {
                    return 0.0;
                }
            }
        }
        self.clique_value(points)
    }

    fn clique_value(&self, points: &[&MarkedPoint]) -> f64 {
        match &self.kernel {
            KernelFn::Clique { weight } => *weight,
            KernelFn::Custom { f, .. } => f(points),
        }
    }
}

/// `ξ(p, χ) = Σ over ordered (k−1)-tuples of distinct points of χ∖{p}` of
/// `f_δ(p, x_1, …, x_{k−1})`.
#[derive(Clone, Debug)]
pub struct UStatScore {
    pub kernel: UStatKernel,
}

impl UStatScore {
    pub fn new(kernel: UStatKernel) -> Self {
        UStatScore { kernel }
    }
}

impl ScoreFamily for UStatScore {
    fn name(&self) -> String {
        format!("ustat(k={}, δ={})", self.kernel.order, self.kernel.delta)
    }

    fn score(&self, p: &MarkedPoint, view: &View) -> f64 {
        let delta = self.kernel.delta;
        let nbrs = view.neighbors(&p.loc, delta, Some(p.id));
        let m = nbrs.len();
        let k = self.kernel.order;
        if m + 1 < k {
            return 0.0;
        }
        let space = view.space();
        // Adjacency among neighbours (distance < δ).
        let mut adj = vec![false; m * m];
        if k > 2 {
            for i in 0..m {
                for j in i + 1..m {
                    let a = space.dist(&nbrs[i].0.loc, &nbrs[j].0.loc) < delta;
                    adj[i * m + j] = a;
                    adj[j * m + i] = a;
                }
            }
        }
        let mut tuple: Vec<&MarkedPoint> = Vec::with_capacity(k);
        tuple.push(p);
        let mut chosen: Vec<usize> = Vec::with_capacity(k);
        let mut total = 0.0;
        enumerate(&self.kernel, &nbrs, &adj, m, k - 1, &mut chosen, &mut tuple, &mut total);
        let cap = self.kernel.sup() * (m as f64).powi(k as i32 - 1);
        assert!(total.abs() <= cap * (1.0 + 1e-12), "U-statistic score {total} exceeds ‖f‖∞·m^(k−1) = {cap}");
        total
    }

    fn evaluate_space_restricted(&self, p: &MarkedPoint, chi: &Configuration, r: f64) -> f64 {
        if r < self.kernel.delta {
            0.0
        } else {
            // Only points within δ ≤ r enter, so restricting the input is a no-op.
            self.evaluate(p, chi)
        }
    }

    fn interaction_range(&self) -> Option<f64> {
        Some(self.kernel.delta)
    }
}

#[allow(clippy::too_many_arguments)]
fn enumerate<'a>(
    kernel: &UStatKernel,
    nbrs: &[(&'a MarkedPoint, f64)],
    adj: &[bool],
    m: usize,
    remaining: usize,
    chosen: &mut Vec<usize>,
    tuple: &mut Vec<&'a MarkedPoint>,
    total: &mut f64,
) {
    if remaining == 0 {
        *total += kernel.clique_value(tuple);
        return;
    }
    for i in 0..m {
        if chosen.contains(&i) || chosen.iter().any(|&j| !adj[i * m + j]) {
            continue;
        }
        chosen.push(i);
        tuple.push(nbrs[i].0);
        enumerate(kernel, nbrs, adj, m, remaining - 1, chosen, tuple, total);
        tuple.pop();
        chosen.pop();
    }
}
