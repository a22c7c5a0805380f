//! Undirected simple graphs on contiguous node labels `0..n`.
//!
//! Adjacency is kept as sorted neighbor lists, so degree queries are O(1),
//! edge queries are O(log d) and common-neighbor counts are a linear merge.

use std::fmt;

use itertools::Itertools;

use crate::error::{Error, Result};

/// Largest node count accepted by [`Graph::canonical_code`].
pub const MAX_CANONICAL_NODES: usize = 8;

/// An undirected simple graph with nodes `0..n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    edge_count: usize,
}

impl Graph {
    /// Graph on `n` nodes with no edges.
    pub fn empty(n: usize) -> Self {
        Graph {
            adj: vec![Vec::new(); n],
            edge_count: 0,
        }
    }

    /// Builds a graph from an edge list, rejecting self-loops, duplicates and
    /// out-of-range endpoints.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = Graph::empty(n);
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidEdge(u, v, "endpoint out of range"));
            }
            if u == v {
                return Err(Error::InvalidEdge(u, v, "self-loop"));
            }
            if !g.insert_edge(u, v) {
                return Err(Error::InvalidEdge(u, v, "duplicate edge"));
            }
        }
        Ok(g)
    }

    pub fn complete(n: usize) -> Self {
        let adj = (0..n)
            .map(|u| (0..n).filter(|&v| v != u).collect())
            .collect();
        Graph {
            adj,
            edge_count: n * n.saturating_sub(1) / 2,
        }
    }

    /// Cycle `0-1-...-(n-1)-0`; requires `n >= 3`.
    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "a cycle needs at least three nodes");
        Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).expect("valid cycle")
    }

    /// Path `0-1-...-(n-1)`.
    pub fn path(n: usize) -> Self {
        Graph::from_edges(n, (1..n).map(|i| (i - 1, i))).expect("valid path")
    }

    /// Star with center `0` and `n - 1` leaves.
    pub fn star(n: usize) -> Self {
        Graph::from_edges(n, (1..n).map(|i| (0, i))).expect("valid star")
    }

    /// Complete bipartite graph with sides `0..a` and `a..a+b`.
    pub fn complete_bipartite(a: usize, b: usize) -> Self {
        let edges = (0..a).cartesian_product(a..a + b);
        Graph::from_edges(a + b, edges).expect("valid bipartite graph")
    }

    /// Builds the graph whose edges are the set bits of a labeled code
    /// (see [`Graph::labeled_code`]).
    pub fn from_labeled_code(n: usize, code: u64) -> Self {
        let m = pair_count(n);
        let mut g = Graph::empty(n);
        for (idx, (i, j)) in pairs(n).enumerate() {
            if code >> (m - 1 - idx) & 1 == 1 {
                g.insert_edge(i, j);
            }
        }
        g
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.adj.len()
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    #[inline]
    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].len()
    }

    /// Sorted neighbors of `u`.
    #[inline]
    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adj[u]
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u != v && self.adj[u].binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, nb)| nb.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    /// Number of common neighbors of `u` and `v` (the embeddedness of the
    /// pair when it is an edge).
    pub fn common_neighbors(&self, u: usize, v: usize) -> usize {
        let (a, b) = (&self.adj[u], &self.adj[v]);
        let (mut i, mut j, mut count) = (0, 0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    count += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        count
    }

    /// Inserts `{u, v}`; returns false if it was already present.
    pub(crate) fn insert_edge(&mut self, u: usize, v: usize) -> bool {
        match self.adj[u].binary_search(&v) {
            Ok(_) => false,
            Err(pos) => {
                self.adj[u].insert(pos, v);
                let pos = self.adj[v].binary_search(&u).unwrap_err();
                self.adj[v].insert(pos, u);
                self.edge_count += 1;
                true
            }
        }
    }

    /// Fraction of node pairs that are edges, `|E| / C(n, 2)`.
    pub fn edge_density(&self) -> Result<f64> {
        let n = self.n();
        if n < 2 {
            return Err(Error::DegenerateInput(format!(
                "edge density needs at least 2 nodes, got {n}"
            )));
        }
        Ok(self.edge_count as f64 / pair_count(n) as f64)
    }

    /// The graph on the same nodes whose edges are exactly the non-edges of `self`.
    pub fn complement(&self) -> Graph {
        let n = self.n();
        let adj: Vec<Vec<usize>> = (0..n)
            .map(|u| {
                let mut nb = self.adj[u].iter().peekable();
                (0..n)
                    .filter(|&v| {
                        while nb.peek().is_some_and(|&&w| w < v) {
                            nb.next();
                        }
                        v != u && nb.peek() != Some(&&v)
                    })
                    .collect()
            })
            .collect();
        Graph {
            adj,
            edge_count: pair_count(n) - self.edge_count,
        }
    }

    /// Subgraph induced by `nodes`, relabeled so that `nodes[i]` becomes `i`.
    pub fn induced_subgraph(&self, nodes: &[usize]) -> Result<Graph> {
        let n = self.n();
        let mut position = vec![usize::MAX; n];
        for (i, &u) in nodes.iter().enumerate() {
            if u >= n {
                return Err(Error::InvalidSubset(format!("node {u} out of range (n = {n})")));
            }
            if position[u] != usize::MAX {
                return Err(Error::InvalidSubset(format!("node {u} listed twice")));
            }
            position[u] = i;
        }
        let mut sub = Graph::empty(nodes.len());
        for (i, &u) in nodes.iter().enumerate() {
            for &v in &self.adj[u] {
                let j = position[v];
                if j != usize::MAX && i < j {
                    sub.insert_edge(i, j);
                }
            }
        }
        Ok(sub)
    }

    /// Relabels node `u` as `perm[u]`.
    pub fn permute(&self, perm: &[usize]) -> Graph {
        assert_eq!(perm.len(), self.n(), "permutation length must equal node count");
        let mut g = Graph::empty(self.n());
        for (u, v) in self.edges() {
            g.insert_edge(perm[u], perm[v]);
        }
        g
    }

    /// Upper-triangular adjacency bit-string packed into an integer. Pairs are
    /// ordered `(0,1), (0,2), ..., (0,n-1), (1,2), ...` and the first pair is
    /// the most significant bit, so integer order is lexicographic order.
    pub fn labeled_code(&self) -> u64 {
        let n = self.n();
        assert!(pair_count(n) <= 64, "labeled code supports at most 11 nodes");
        let m = pair_count(n);
        pairs(n)
            .enumerate()
            .filter(|&(_, (i, j))| self.has_edge(i, j))
            .fold(0u64, |acc, (idx, _)| acc | 1 << (m - 1 - idx))
    }

    /// Lexicographically minimal labeled code over all node permutations.
    pub fn canonical_code(&self) -> Result<CanonicalCode> {
        let n = self.n();
        if n > MAX_CANONICAL_NODES {
            return Err(Error::UnsupportedSize {
                size: n,
                reason: "canonical codes enumerate all n! permutations (n <= 8)",
            });
        }
        let edges: Vec<(usize, usize)> = self.edges().collect();
        let m = pair_count(n);
        let bits = (0..n)
            .permutations(n)
            .map(|perm| {
                edges.iter().fold(0u64, |acc, &(u, v)| {
                    let (a, b) = minmax(perm[u], perm[v]);
                    acc | 1 << (m - 1 - pair_index(n, a, b))
                })
            })
            .min()
            .unwrap_or(0);
        Ok(CanonicalCode { k: n, bits })
    }

    /// Connected components, each as a sorted node list, ordered by smallest node.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        let mut stack = Vec::new();
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            stack.push(s);
            let mut comp = Vec::new();
            while let Some(u) = stack.pop() {
                comp.push(u);
                for &v in &self.adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}

/// Minimal upper-triangular adjacency bit-string of a graph on `k` nodes; equal
/// codes identify isomorphic graphs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalCode {
    pub k: usize,
    pub bits: u64,
}

impl CanonicalCode {
    /// The representative graph whose labeled code is this canonical code.
    pub fn to_graph(&self) -> Graph {
        Graph::from_labeled_code(self.k, self.bits)
    }
}

impl fmt::Display for CanonicalCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = pair_count(self.k);
        for idx in 0..m {
            let bit = self.bits >> (m - 1 - idx) & 1;
            write!(f, "{bit}")?;
        }
        Ok(())
    }
}

/// `C(n, 2)`.
#[inline]
pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Index of pair `(i, j)`, `i < j`, in the labeled-code pair order.
#[inline]
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// All pairs `(i, j)` with `i < j < n` in labeled-code order.
pub fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

#[inline]
fn minmax(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Brute-force isomorphism test over all bijections.
    fn isomorphic(a: &Graph, b: &Graph) -> bool {
        a.n() == b.n()
            && a.edge_count() == b.edge_count()
            && (0..a.n())
                .permutations(a.n())
                .any(|p| a.permute(&p) == *b)
    }

    #[test]
    fn density_examples() {
        assert_eq!(Graph::complete(4).edge_density().unwrap(), 1.0);
        assert_eq!(Graph::empty(10).edge_density().unwrap(), 0.0);
        let k55 = Graph::complete_bipartite(5, 5);
        assert_eq!(k55.edge_count(), 25);
        assert!((k55.edge_density().unwrap() - 25.0 / 45.0).abs() < 1e-15);
        assert!(matches!(Graph::empty(1).edge_density(), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(Graph::from_edges(3, [(0, 0)]).is_err());
        assert!(Graph::from_edges(3, [(0, 1), (1, 0)]).is_err());
        assert!(Graph::from_edges(3, [(0, 3)]).is_err());
    }

    #[test]
    fn complement_examples() {
        assert_eq!(Graph::empty(3).complement(), Graph::complete(3));
        let c4 = Graph::complete_bipartite(2, 2);
        let matching = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        assert_eq!(c4.complement(), matching);
        let c5 = Graph::cycle(5);
        assert_eq!(
            c5.complement().canonical_code().unwrap(),
            c5.canonical_code().unwrap()
        );
    }

    #[test]
    fn induced_subgraph_examples() {
        let c5 = Graph::cycle(5);
        let sub = c5.induced_subgraph(&[0, 1, 2]).unwrap();
        assert!(sub.has_edge(0, 1) && sub.has_edge(1, 2) && !sub.has_edge(0, 2));
        assert_eq!(c5.induced_subgraph(&[3]).unwrap(), Graph::empty(1));
        let k55 = Graph::complete_bipartite(5, 5);
        assert_eq!(k55.induced_subgraph(&[0, 2, 4]).unwrap(), Graph::empty(3));
        assert!(matches!(
            c5.induced_subgraph(&[0, 0]),
            Err(Error::InvalidSubset(_))
        ));
        assert!(matches!(
            c5.induced_subgraph(&[7]),
            Err(Error::InvalidSubset(_))
        ));
    }

    #[test]
    fn canonical_code_examples() {
        let p1 = Graph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        let p2 = Graph::from_edges(3, [(0, 2), (1, 2)]).unwrap();
        assert_eq!(p1.canonical_code().unwrap(), p2.canonical_code().unwrap());
        assert_ne!(
            p1.canonical_code().unwrap(),
            Graph::complete(3).canonical_code().unwrap()
        );
        let p4 = Graph::path(4);
        let star = Graph::star(4);
        let tri = Graph::from_edges(4, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let codes = [&p4, &star, &tri].map(|g| g.canonical_code().unwrap());
        assert_ne!(codes[0], codes[1]);
        assert_ne!(codes[0], codes[2]);
        assert_ne!(codes[1], codes[2]);
        for a in [&p4, &star, &tri] {
            for b in [&p4, &star, &tri] {
                assert_eq!(isomorphic(a, b), a == b);
            }
        }
        assert!(matches!(
            Graph::empty(9).canonical_code(),
            Err(Error::UnsupportedSize { .. })
        ));
    }

    #[test]
    fn canonical_code_matches_brute_force_isomorphism_on_four_nodes() {
        let graphs: Vec<Graph> = (0..64).map(|c| Graph::from_labeled_code(4, c)).collect();
        for a in &graphs {
            for b in graphs.iter().step_by(3) {
                let same = a.canonical_code().unwrap() == b.canonical_code().unwrap();
                assert_eq!(same, isomorphic(a, b));
            }
        }
    }

    #[test]
    fn labeled_code_round_trip() {
        for code in 0..1024u64 {
            assert_eq!(Graph::from_labeled_code(5, code).labeled_code(), code);
        }
        let g = Graph::from_edges(3, [(0, 1)]).unwrap();
        assert_eq!(g.labeled_code(), 0b100);
        assert_eq!(g.canonical_code().unwrap().to_string(), "001");
    }

    fn arb_graph(max_n: usize) -> impl Strategy<Value = Graph> {
        (2..=max_n).prop_flat_map(|n| {
            proptest::collection::vec(any::<bool>(), pair_count(n)).prop_map(move |bits| {
                Graph::from_edges(n, pairs(n).zip(bits).filter(|(_, b)| *b).map(|(e, _)| e))
                    .unwrap()
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn canonical_code_is_permutation_invariant(g in arb_graph(6), seed in any::<u64>()) {
            let code = g.canonical_code().unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut perm: Vec<usize> = (0..g.n()).collect();
            for _ in 0..100 {
                perm.shuffle(&mut rng);
                prop_assert_eq!(g.permute(&perm).canonical_code().unwrap(), code);
            }
        }

        #[test]
        fn complement_density_and_involution(g in arb_graph(12)) {
            let d = g.edge_density().unwrap();
            let c = g.complement();
            prop_assert!((c.edge_density().unwrap() - (1.0 - d)).abs() < 1e-12);
            prop_assert_eq!(c.complement(), g);
        }

        #[test]
        fn full_induced_subgraph_is_identity(g in arb_graph(10)) {
            let all: Vec<usize> = (0..g.n()).collect();
            prop_assert_eq!(g.induced_subgraph(&all).unwrap(), g);
        }
    }
}
