//! Synthetic graph sources.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::catalog::{binomial, Catalog};
use crate::derive_seed;
use crate::efrw::RateModel;
use crate::error::{Error, Result};
use crate::graph::{pair_count, pair_index, pairs, Graph};

/// `G(n, p)`: every pair is an edge independently with probability `p`.
pub fn sample_gnp(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if n == 0 {
        return Err(Error::InvalidParameter("G(n, p) needs n >= 1".into()));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p = {p} is outside [0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges: Vec<_> = pairs(n).filter(|_| rng.random::<f64>() < p).collect();
    Graph::from_edges(n, edges)
}

/// Default simulated time for [`simulate_efrw`].
pub fn default_burn_in(nu: f64) -> f64 {
    10.0 * (1.0 + nu)
}

/// Binary sum tree over per-pair event rates.
struct RateTree {
    leaves: usize,
    sums: Vec<f64>,
}

impl RateTree {
    fn new(len: usize) -> Self {
        let leaves = len.next_power_of_two().max(1);
        RateTree {
            leaves,
            sums: vec![0.0; 2 * leaves],
        }
    }

    fn total(&self) -> f64 {
        self.sums[1]
    }

    fn set(&mut self, i: usize, rate: f64) {
        let mut node = i + self.leaves;
        self.sums[node] = rate;
        while node > 1 {
            node /= 2;
            self.sums[node] = self.sums[2 * node] + self.sums[2 * node + 1];
        }
    }

    /// Leaf whose cumulative rate interval contains `target`.
    fn find(&self, mut target: f64) -> usize {
        let mut node = 1;
        while node < self.leaves {
            let left = self.sums[2 * node];
            if target < left || self.sums[2 * node + 1] <= 0.0 {
                node *= 2;
            } else {
                target -= left;
                node = 2 * node + 1;
            }
        }
        node - self.leaves
    }
}

struct WalkState {
    n: usize,
    nu: f64,
    lambda: f64,
    adjacent: Vec<bool>,
    common: Vec<u32>,
    tree: RateTree,
}

impl WalkState {
    fn empty(n: usize, nu: f64, lambda: f64) -> Self {
        let m = pair_count(n);
        let mut tree = RateTree::new(m);
        for i in 0..m {
            tree.set(i, nu);
        }
        WalkState {
            n,
            nu,
            lambda,
            adjacent: vec![false; m],
            common: vec![0; m],
            tree,
        }
    }

    fn idx(&self, u: usize, v: usize) -> usize {
        if u < v {
            pair_index(self.n, u, v)
        } else {
            pair_index(self.n, v, u)
        }
    }

    fn rate(&self, i: usize) -> f64 {
        if self.adjacent[i] {
            1.0
        } else {
            self.nu + self.lambda * self.common[i] as f64
        }
    }

    fn flip(&mut self, u: usize, v: usize) {
        let i = self.idx(u, v);
        let added = !self.adjacent[i];
        self.adjacent[i] = added;
        self.tree.set(i, self.rate(i));
        for w in 0..self.n {
            if w == u || w == v {
                continue;
            }
            // Pair (u, w) gains or loses v as a common neighbour iff v ~ w, and symmetrically.
            for (a, b) in [(u, v), (v, u)] {
                if self.adjacent[self.idx(b, w)] {
                    let j = self.idx(a, w);
                    if added {
                        self.common[j] += 1;
                    } else {
                        self.common[j] -= 1;
                    }
                    if !self.adjacent[j] && self.lambda > 0.0 {
                        self.tree.set(j, self.rate(j));
                    }
                }
            }
        }
    }
}

/// Continuous-time walk on labeled `n`-node graphs started from the empty
/// graph; returns the state at time `burn_in`.
///
/// An absent pair `(u, v)` forms at rate `nu + lambda * |N(u) & N(v)|` and a
/// present edge is deleted at rate 1. `model.k` is not used.
pub fn simulate_efrw(n: usize, model: &RateModel, burn_in: f64, seed: u64) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidParameter("the walk needs n >= 2".into()));
    }
    if !(burn_in > 0.0 && burn_in.is_finite()) {
        return Err(Error::InvalidParameter(format!("burn-in must be positive, got {burn_in}")));
    }
    RateModel::new(model.k, model.nu, model.lambda)?;
    let index: Vec<(usize, usize)> = pairs(n).collect();
    let mut state = WalkState::empty(n, model.nu, model.lambda);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = 0.0;
    loop {
        let total = state.tree.total();
        t += -(1.0 - rng.random::<f64>()).ln() / total;
        if t > burn_in {
            break;
        }
        let i = state.tree.find(rng.random::<f64>() * total);
        let (u, v) = index[i.min(index.len() - 1)];
        state.flip(u, v);
    }
    let edges = index
        .iter()
        .zip(&state.adjacent)
        .filter(|(_, &a)| a)
        .map(|(&e, _)| e);
    Graph::from_edges(n, edges)
}

/// `count` independent walks; walk `i` uses `derive_seed(seed, i)`.
pub fn simulate_efrw_collection(
    n: usize,
    model: &RateModel,
    burn_in: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<Graph>> {
    (0..count)
        .into_par_iter()
        .map(|i| simulate_efrw(n, model, burn_in, derive_seed(seed, i as u64)))
        .collect()
}

/// Clique order `c` in `0..=n` minimizing `|C(c, 2) - p C(n, 2)|`, smaller on ties.
pub fn near_clique_size(n: usize, p: f64) -> usize {
    let target = p * binomial(n, 2) as f64;
    let mut best = 0;
    let mut best_gap = f64::INFINITY;
    for c in 0..=n {
        let gap = (binomial(c, 2) as f64 - target).abs();
        if gap < best_gap {
            best = c;
            best_gap = gap;
        }
    }
    best
}

fn near_clique(n: usize, c: usize) -> Graph {
    let edges = pairs(c);
    Graph::from_edges(n, edges).expect("clique pairs are valid")
}

/// A clique plus isolated nodes for each size, with density closest to `p`.
pub fn near_clique_sequence(p: f64, sizes: &[usize]) -> Result<Vec<Graph>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p = {p} is outside [0, 1]")));
    }
    if let Some(n) = sizes.iter().find(|&&n| n < 2) {
        return Err(Error::InvalidParameter(format!("near-clique size {n} is below 2")));
    }
    Ok(sizes
        .iter()
        .map(|&n| near_clique(n, near_clique_size(n, p)))
        .collect())
}

/// At most one non-trivial component, and that component is complete.
pub fn is_near_clique(g: &Graph) -> bool {
    let big: Vec<_> = g.components().into_iter().filter(|c| c.len() > 1).collect();
    match big.as_slice() {
        [] => true,
        [c] => {
            let s = c.len();
            c.iter().all(|&u| g.degree(u) == s - 1)
        }
        _ => false,
    }
}

/// Classes of the `k`-node induced subgraphs of a near-clique with clique order `c` on `n` nodes.
fn near_clique_classes(catalog: &Catalog, n: usize, c: usize) -> Vec<usize> {
    let k = catalog.k();
    (0..=k)
        .filter(|&j| j <= c && k - j <= n - c)
        .map(|j| {
            catalog
                .class_of(&near_clique(k, j))
                .expect("k-node graph has a class")
        })
        .collect()
}

/// Graphs of each size, with density tending to `p`, containing no induced copy of `f`.
///
/// Near-cliques are used when `f` is not a near-clique, complements of
/// near-cliques otherwise. Each output is checked: its shape is verified and
/// the class of every `k`-subset configuration is compared with `f`.
pub fn f_free_sequence(f: &Graph, p: f64, sizes: &[usize]) -> Result<Vec<Graph>> {
    let k = f.n();
    let m = pair_count(k);
    if f.edge_count() == 0 || f.edge_count() == m {
        return Err(Error::InvalidInput("f must be neither empty nor complete".into()));
    }
    let catalog = Catalog::shared(k)?;
    let target = catalog.class_of(f)?;
    let flip = is_near_clique(f);
    let base = near_clique_sequence(if flip { 1.0 - p } else { p }, sizes)?;
    let target_base = if flip { catalog.complement_of(target) } else { target };
    base.into_iter()
        .map(|g| {
            if !is_near_clique(&g) {
                return Err(Error::Numerical("near-clique construction is malformed".into()));
            }
            let n = g.n();
            let c = g.components().iter().map(Vec::len).max().unwrap_or(0);
            let c = if g.edge_count() == 0 { 0 } else { c };
            if near_clique_classes(catalog, n, c).contains(&target_base) {
                return Err(Error::Numerical(format!(
                    "construction of size {n} contains an induced copy of f"
                )));
            }
            Ok(if flip { g.complement() } else { g })
        })
        .collect()
}

/// `K_{n/2, n/2}`.
pub fn balanced_bipartite(n: usize) -> Result<Graph> {
    if n < 2 || n % 2 == 1 {
        return Err(Error::InvalidInput(format!(
            "balanced bipartite graph needs an even n >= 2, got {n}"
        )));
    }
    Ok(Graph::complete_bipartite(n / 2, n / 2))
}
