//! Catalog of unlabeled `k`-node graphs and the combinatorial tables built on it.
//!
//! Classes are ordered by `(edge_count, canonical code)`. Frequency vectors,
//! generator matrices, LP columns and CSV headers all use this order. Index 0
//! is always the empty graph and the last index is the clique.

use std::sync::OnceLock;

use itertools::Itertools;
use num_bigint::BigInt;
use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::graph::{pair_count, pairs, CanonicalCode, Graph, MAX_CANONICAL_NODES};

pub const MIN_CATALOG_K: usize = 2;
pub const MAX_CATALOG_K: usize = 5;

/// One unlabeled graph on `k` nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphClass {
    pub index: usize,
    pub code: CanonicalCode,
    pub representative: Graph,
    pub edge_count: usize,
    pub aut: u64,
}

impl GraphClass {
    /// Number of labeled graphs on `k` nodes in this class, `k! / aut`.
    pub fn labelings(&self) -> u64 {
        factorial(self.code.k) / self.aut
    }
}

/// All classes on a fixed node count `j` plus their extension table.
#[derive(Clone, Debug)]
pub struct Level {
    pub size: usize,
    pub classes: Vec<GraphClass>,
    /// Maps a labeled code on `size` nodes to its class index.
    by_labeled: Vec<u16>,
    /// `ext[f][f']`: edge-supersets of `f`'s representative isomorphic to `f'`.
    ext: Vec<Vec<u64>>,
}

impl Level {
    fn build(size: usize) -> Level {
        let m = pair_count(size);
        let codes: Vec<CanonicalCode> = (0..1u64 << m)
            .map(|c| {
                Graph::from_labeled_code(size, c)
                    .canonical_code()
                    .expect("catalog sizes are canonicalizable")
            })
            .collect();
        let mut distinct: Vec<(usize, CanonicalCode)> = codes
            .iter()
            .map(|c| (c.bits.count_ones() as usize, *c))
            .collect();
        distinct.sort_unstable_by_key(|&(e, c)| (e, c.bits));
        distinct.dedup();

        let classes: Vec<GraphClass> = distinct
            .into_iter()
            .enumerate()
            .map(|(index, (edge_count, code))| {
                let representative = code.to_graph();
                let aut = aut_count(&representative).expect("catalog sizes are small");
                GraphClass {
                    index,
                    code,
                    representative,
                    edge_count,
                    aut,
                }
            })
            .collect();
        let by_labeled = codes
            .iter()
            .map(|c| {
                classes
                    .binary_search_by_key(&(c.bits.count_ones() as usize, c.bits), |h| {
                        (h.edge_count, h.code.bits)
                    })
                    .expect("every labeled graph has a class") as u16
            })
            .collect();

        let mut level = Level {
            size,
            classes,
            by_labeled,
            ext: Vec::new(),
        };
        level.ext = level
            .classes
            .iter()
            .map(|f| level.extension_row(&f.representative))
            .collect();
        level
    }

    /// Extension counts from the labeled graph `f` to every class of this level.
    fn extension_row(&self, f: &Graph) -> Vec<u64> {
        let n = self.size;
        let m = pair_count(n);
        let base = f.labeled_code();
        let free: Vec<u64> = (0..m)
            .map(|idx| 1u64 << (m - 1 - idx))
            .filter(|bit| base & bit == 0)
            .collect();
        let mut row = vec![0u64; self.classes.len()];
        for mask in 0..1u64 << free.len() {
            let code = free
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .fold(base, |acc, (_, bit)| acc | bit);
            row[self.class_of_code(code)] += 1;
        }
        row
    }

    #[inline]
    pub fn class_of_code(&self, labeled_code: u64) -> usize {
        self.by_labeled[labeled_code as usize] as usize
    }

    pub fn class_of(&self, g: &Graph) -> Result<usize> {
        if g.n() != self.size {
            return Err(Error::InvalidInput(format!(
                "graph has {} nodes, catalog level has {}",
                g.n(),
                self.size
            )));
        }
        Ok(self.class_of_code(g.labeled_code()))
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// `ext(F, F')` for classes of this level.
    pub fn ext(&self, f: usize, f_prime: usize) -> u64 {
        self.ext[f][f_prime]
    }
}

/// Adding one edge to a class representative moves it to another class.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AddTransition {
    pub from: usize,
    pub to: usize,
    /// Common neighbors of the new edge's endpoints (3-paths it closes).
    pub closed_paths: usize,
    /// Labeled slots in `from`'s representative producing `to` with this
    /// common-neighbor count.
    pub multiplicity: u64,
}

/// Removing one edge of a class representative.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DeleteTransition {
    pub from: usize,
    pub to: usize,
    pub multiplicity: u64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TransitionStructure {
    pub additions: Vec<AddTransition>,
    pub deletions: Vec<DeleteTransition>,
}

/// Unlabeled graphs on `k` nodes with every smaller level, the subgraph
/// frequency matrices `s(F, H)` and the edge-walk transition structure.
#[derive(Clone, Debug)]
pub struct Catalog {
    k: usize,
    levels: Vec<Level>,
    /// `subgraph_counts[j][f][h]`: `j`-subsets of `H`'s representative inducing `F`.
    subgraph_counts: Vec<Vec<Vec<u64>>>,
    complements: Vec<usize>,
    transitions: TransitionStructure,
}

impl Catalog {
    /// Enumerates every unlabeled graph on up to `k` nodes, `2 <= k <= 5`.
    pub fn build(k: usize) -> Result<Catalog> {
        if !(MIN_CATALOG_K..=MAX_CATALOG_K).contains(&k) {
            return Err(Error::UnsupportedSize {
                size: k,
                reason: "catalogs are built for 2 <= k <= 5",
            });
        }
        let levels: Vec<Level> = (0..=k).map(Level::build).collect();
        let top = &levels[k];
        let subgraph_counts = levels
            .iter()
            .map(|lower| {
                lower
                    .classes
                    .iter()
                    .map(|f| {
                        top.classes
                            .iter()
                            .map(|h| subgraph_count_in(lower, f.index, &h.representative))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let complements = top
            .classes
            .iter()
            .map(|h| top.class_of_code(h.representative.complement().labeled_code()))
            .collect();
        let mut catalog = Catalog {
            k,
            levels,
            subgraph_counts,
            complements,
            transitions: TransitionStructure::default(),
        };
        catalog.transitions = transition_structure(&catalog);
        Ok(catalog)
    }

    /// Process-wide cached catalog for `k`.
    pub fn shared(k: usize) -> Result<&'static Catalog> {
        static CACHE: [OnceLock<Catalog>; MAX_CATALOG_K + 1] =
            [const { OnceLock::new() }; MAX_CATALOG_K + 1];
        if !(MIN_CATALOG_K..=MAX_CATALOG_K).contains(&k) {
            return Err(Error::UnsupportedSize {
                size: k,
                reason: "catalogs are built for 2 <= k <= 5",
            });
        }
        Ok(CACHE[k].get_or_init(|| Catalog::build(k).expect("k checked above")))
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Classes on `k` nodes in catalog order.
    pub fn classes(&self) -> &[GraphClass] {
        &self.levels[self.k].classes
    }

    pub fn len(&self) -> usize {
        self.classes().len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes().is_empty()
    }

    /// Classes on `j <= k` nodes.
    pub fn level(&self, j: usize) -> &Level {
        &self.levels[j]
    }

    pub fn top(&self) -> &Level {
        &self.levels[self.k]
    }

    /// Class index of a `k`-node graph.
    pub fn class_of(&self, g: &Graph) -> Result<usize> {
        self.top().class_of(g)
    }

    /// Index of the complement of class `h`.
    pub fn complement_of(&self, h: usize) -> usize {
        self.complements[h]
    }

    /// Exact `s(F, H)` for `F` the `f`-th class on `j` nodes and `H` the
    /// `h`-th class on `k` nodes.
    pub fn subgraph_ratio(&self, j: usize, f: usize, h: usize) -> BigRational {
        BigRational::new(
            BigInt::from(self.subgraph_counts[j][f][h]),
            BigInt::from(binomial(self.k, j)),
        )
    }

    pub fn subgraph_frequency(&self, j: usize, f: usize, h: usize) -> f64 {
        self.subgraph_counts[j][f][h] as f64 / binomial(self.k, j) as f64
    }

    /// `s(K_2, H)` for every `k`-class: the edge density of each class.
    pub fn edge_fractions(&self) -> Vec<f64> {
        let m = pair_count(self.k) as f64;
        self.classes()
            .iter()
            .map(|h| h.edge_count as f64 / m)
            .collect()
    }

    pub fn transitions(&self) -> &TransitionStructure {
        &self.transitions
    }
}

fn subgraph_count_in(lower: &Level, f: usize, h: &Graph) -> u64 {
    (0..h.n())
        .combinations(lower.size)
        .filter(|nodes| {
            let sub = h.induced_subgraph(nodes).expect("distinct in-range nodes");
            lower.class_of_code(sub.labeled_code()) == f
        })
        .count() as u64
}

/// Number of permutations of the nodes of `f` that map `f` onto itself.
pub fn aut_count(f: &Graph) -> Result<u64> {
    let n = f.n();
    if n > MAX_CANONICAL_NODES {
        return Err(Error::UnsupportedSize {
            size: n,
            reason: "automorphisms are counted by enumerating n! permutations (n <= 8)",
        });
    }
    Ok((0..n).permutations(n).filter(|p| f.permute(p) == *f).count() as u64)
}

/// `ext(F, F')`: edge-supersets of `f`'s edge set on the same labeled nodes
/// that are isomorphic to `f_prime`.
pub fn ext_count(f: &Graph, f_prime: &Graph) -> Result<u64> {
    if f.n() != f_prime.n() {
        return Err(Error::InvalidPair(format!(
            "ext needs equal node counts, got {} and {}",
            f.n(),
            f_prime.n()
        )));
    }
    if f_prime.edge_count() < f.edge_count() {
        return Ok(0);
    }
    let target = f_prime.canonical_code()?;
    let missing: Vec<(usize, usize)> = pairs(f.n()).filter(|&(u, v)| !f.has_edge(u, v)).collect();
    let extra = f_prime.edge_count() - f.edge_count();
    let mut count = 0u64;
    for added in missing.iter().combinations(extra) {
        let g = Graph::from_edges(f.n(), f.edges().chain(added.into_iter().copied()))
            .expect("added pairs are non-edges");
        if g.canonical_code()? == target {
            count += 1;
        }
    }
    Ok(count)
}

/// Number of `f.n()`-subsets of `h` inducing a copy of `f`, divided by
/// `C(h.n(), f.n())`.
pub fn pairwise_frequency(f: &Graph, h: &Graph) -> Result<f64> {
    let (j, k) = (f.n(), h.n());
    if j > k {
        return Err(Error::InvalidPair(format!(
            "subgraph has {j} nodes, host has {k}"
        )));
    }
    let target = f.canonical_code()?;
    let mut hits = 0u64;
    for nodes in (0..k).combinations(j) {
        if h.induced_subgraph(&nodes)?.canonical_code()? == target {
            hits += 1;
        }
    }
    Ok(hits as f64 / binomial(k, j) as f64)
}

/// Single-edge additions and deletions between classes of the top level,
/// with multiplicities counted on each class representative.
pub fn transition_structure(catalog: &Catalog) -> TransitionStructure {
    let top = catalog.top();
    let mut out = TransitionStructure::default();
    for class in &top.classes {
        let rep = &class.representative;
        let mut adds: Vec<(usize, usize)> = Vec::new();
        let mut dels: Vec<usize> = Vec::new();
        for (u, v) in pairs(rep.n()) {
            let flipped = rep.labeled_code() ^ 1 << (pair_count(rep.n()) - 1 - crate::graph::pair_index(rep.n(), u, v));
            let to = top.class_of_code(flipped);
            if rep.has_edge(u, v) {
                dels.push(to);
            } else {
                adds.push((to, rep.common_neighbors(u, v)));
            }
        }
        adds.sort_unstable();
        for ((to, c), group) in &adds.iter().chunk_by(|x| **x) {
            out.additions.push(AddTransition {
                from: class.index,
                to,
                closed_paths: c,
                multiplicity: group.count() as u64,
            });
        }
        dels.sort_unstable();
        for (to, group) in &dels.iter().chunk_by(|x| **x) {
            out.deletions.push(DeleteTransition {
                from: class.index,
                to,
                multiplicity: group.count() as u64,
            });
        }
    }
    out
}

pub fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k as u64).fold(1u64, |acc, i| acc * (n as u64 - i) / (i + 1))
}
