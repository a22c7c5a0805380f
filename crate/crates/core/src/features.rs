//! Global structural features: components, k-cores, degeneracy and k-braces.
//!
//! The k-brace follows Ugander et al. (2012): edges whose endpoints share
//! fewer than `k` neighbors are removed until none remain, and the 2-core
//! of what is left is taken.

use crate::graph::Graph;

/// Nodes of the k-core, ascending.
pub fn k_core_nodes(g: &Graph, k: usize) -> Vec<usize> {
    let n = g.n();
    let mut degree: Vec<usize> = (0..n).map(|u| g.degree(u)).collect();
    let mut alive = vec![true; n];
    let mut stack: Vec<usize> = (0..n).filter(|&u| degree[u] < k).collect();
    for &u in &stack {
        alive[u] = false;
    }
    while let Some(u) = stack.pop() {
        for &v in g.neighbors(u) {
            if alive[v] {
                degree[v] -= 1;
                if degree[v] < k {
                    alive[v] = false;
                    stack.push(v);
                }
            }
        }
    }
    (0..n).filter(|&u| alive[u]).collect()
}

/// Maximal subgraph of minimum degree at least `k`, relabeled in node order.
pub fn k_core(g: &Graph, k: usize) -> Graph {
    g.induced_subgraph(&k_core_nodes(g, k))
        .expect("core nodes are distinct and in range")
}

/// Core number of every node.
pub fn core_numbers(g: &Graph) -> Vec<usize> {
    let n = g.n();
    let mut degree: Vec<usize> = (0..n).map(|u| g.degree(u)).collect();
    let max_degree = degree.iter().copied().max().unwrap_or(0);
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); max_degree + 1];
    for u in 0..n {
        buckets[degree[u]].push(u);
    }
    let mut core = vec![0; n];
    let mut done = vec![false; n];
    let mut level = 0;
    for _ in 0..n {
        let u = loop {
            // Bucket entries go stale when a degree drops; skip them.
            while buckets[level].is_empty() {
                level += 1;
            }
            let u = buckets[level].pop().expect("bucket is non-empty");
            if !done[u] && degree[u] == level {
                break u;
            }
        };
        done[u] = true;
        core[u] = level;
        for &v in g.neighbors(u) {
            if !done[v] && degree[v] > level {
                degree[v] -= 1;
                buckets[degree[v]].push(v);
            }
        }
    }
    core
}

/// Largest `k` with a non-empty k-core; 0 for a graph without nodes.
pub fn degeneracy(g: &Graph) -> usize {
    core_numbers(g).into_iter().max().unwrap_or(0)
}

fn bitsets(g: &Graph) -> Vec<Vec<u64>> {
    let words = g.n().div_ceil(64);
    (0..g.n())
        .map(|u| {
            let mut row = vec![0u64; words];
            for &v in g.neighbors(u) {
                row[v / 64] |= 1 << (v % 64);
            }
            row
        })
        .collect()
}

fn shared(a: &[u64], b: &[u64]) -> usize {
    a.iter().zip(b).map(|(x, y)| (x & y).count_ones() as usize).sum()
}

/// Edges remaining after embeddedness pruning, before the 2-core step.
fn embedded_edges(g: &Graph, k: usize) -> Vec<(usize, usize)> {
    let mut rows = bitsets(g);
    let mut edges: Vec<(usize, usize)> = g.edges().collect();
    loop {
        let (keep, drop): (Vec<_>, Vec<_>) = edges
            .iter()
            .partition(|&&(u, v)| shared(&rows[u], &rows[v]) >= k);
        if drop.is_empty() {
            return edges;
        }
        for (u, v) in drop {
            rows[u][v / 64] &= !(1 << (v % 64));
            rows[v][u / 64] &= !(1 << (u % 64));
        }
        edges = keep;
    }
}

/// Edges of the k-brace in the original labels, ascending.
pub fn k_brace_edges(g: &Graph, k: usize) -> Vec<(usize, usize)> {
    let pruned = Graph::from_edges(g.n(), embedded_edges(g, k)).expect("subset of valid edges");
    let core = k_core_nodes(&pruned, 2);
    let mut inside = vec![false; g.n()];
    for &u in &core {
        inside[u] = true;
    }
    pruned
        .edges()
        .filter(|&(u, v)| inside[u] && inside[v])
        .collect()
}

/// The k-brace, relabeled in node order; nodes are those of its 2-core.
pub fn k_brace(g: &Graph, k: usize) -> Graph {
    let edges = k_brace_edges(g, k);
    let mut nodes: Vec<usize> = edges.iter().flat_map(|&(u, v)| [u, v]).collect();
    nodes.sort_unstable();
    nodes.dedup();
    let mut relabel = vec![usize::MAX; g.n()];
    for (i, &u) in nodes.iter().enumerate() {
        relabel[u] = i;
    }
    Graph::from_edges(nodes.len(), edges.iter().map(|&(u, v)| (relabel[u], relabel[v])))
        .expect("relabeled edges are valid")
}

/// Component sizes in descending order and the number of components.
pub fn component_stats(g: &Graph) -> (Vec<usize>, usize) {
    let mut sizes: Vec<usize> = g.components().iter().map(Vec::len).collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    let count = sizes.len();
    (sizes, count)
}

/// What "size" means for a core or brace.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SizeMeasure {
    #[default]
    Nodes,
    Edges,
}

/// The 16 global features of a graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlobalFeatures {
    /// Sizes of the two largest components, 0 where absent.
    pub largest_components: [usize; 2],
    /// k = 0, 1, 2, 3.
    pub kcore_sizes: [usize; 4],
    /// k = 0, 1, 2.
    pub kcore_components: [usize; 3],
    pub degeneracy: usize,
    /// k = 1, 2, 3.
    pub kbrace_sizes: [usize; 3],
    /// k = 1, 2, 3.
    pub kbrace_components: [usize; 3],
}

impl GlobalFeatures {
    pub const LEN: usize = 16;

    pub const NAMES: [&'static str; 16] = [
        "component_1",
        "component_2",
        "core_0",
        "core_1",
        "core_2",
        "core_3",
        "core_components_0",
        "core_components_1",
        "core_components_2",
        "degeneracy",
        "brace_1",
        "brace_2",
        "brace_3",
        "brace_components_1",
        "brace_components_2",
        "brace_components_3",
    ];

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(Self::LEN);
        v.extend(self.largest_components);
        v.extend(self.kcore_sizes);
        v.extend(self.kcore_components);
        v.push(self.degeneracy);
        v.extend(self.kbrace_sizes);
        v.extend(self.kbrace_components);
        v.into_iter().map(|x| x as f64).collect()
    }

    /// Isolated nodes: components of the 0-core minus those of the 1-core.
    pub fn singletons(&self) -> usize {
        self.kcore_components[0] - self.kcore_components[1]
    }
}

pub fn global_features(g: &Graph) -> GlobalFeatures {
    global_features_with(g, SizeMeasure::Nodes)
}

pub fn global_features_with(g: &Graph, measure: SizeMeasure) -> GlobalFeatures {
    let size = |h: &Graph| match measure {
        SizeMeasure::Nodes => h.n(),
        SizeMeasure::Edges => h.edge_count(),
    };
    let (sizes, _) = component_stats(g);
    let cores: Vec<Graph> = (0..4).map(|k| k_core(g, k)).collect();
    let braces: Vec<Graph> = (1..4).map(|k| k_brace(g, k)).collect();
    GlobalFeatures {
        largest_components: [
            sizes.first().copied().unwrap_or(0),
            sizes.get(1).copied().unwrap_or(0),
        ],
        kcore_sizes: std::array::from_fn(|k| size(&cores[k])),
        kcore_components: std::array::from_fn(|k| component_stats(&cores[k]).1),
        degeneracy: degeneracy(g),
        kbrace_sizes: std::array::from_fn(|k| size(&braces[k])),
        kbrace_components: std::array::from_fn(|k| component_stats(&braces[k]).1),
    }
}
