//! Induced `k`-node subgraph frequencies of a graph.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::catalog::{binomial, Catalog};
use crate::error::{Error, Result};
use crate::graph::{pair_count, pair_index, Graph};

/// Default number of uniform draws for a sampled census.
pub const DEFAULT_SAMPLES: u64 = 11_000;

/// Largest number of `k`-subsets an exact census will enumerate.
pub const EXACT_SUBSET_LIMIT: u64 = 100_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CensusMode {
    Exact,
    Sampled,
}

/// Frequencies of the `k`-node classes, indexed in catalog order.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyVector {
    pub k: usize,
    pub values: Vec<f64>,
    pub mode: CensusMode,
    /// Number of draws for a sampled census, 0 for an exact one.
    pub sample_count: u64,
}

impl FrequencyVector {
    pub fn from_counts(counts: &CensusCounts, mode: CensusMode) -> FrequencyVector {
        let total = counts.total as f64;
        FrequencyVector {
            k: counts.k,
            values: counts.counts.iter().map(|&c| c as f64 / total).collect(),
            mode,
            sample_count: if mode == CensusMode::Sampled { counts.total } else { 0 },
        }
    }

    /// Edge density implied by the vector, `sum_H s(K_2, H) x_H`.
    pub fn edge_density(&self) -> Result<f64> {
        let catalog = Catalog::shared(self.k)?;
        Ok(catalog
            .edge_fractions()
            .iter()
            .zip(&self.values)
            .map(|(s, x)| s * x)
            .sum())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Integer class counts behind a census.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CensusCounts {
    pub k: usize,
    pub counts: Vec<u64>,
    pub total: u64,
}

/// How to compute a census.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CensusMethod {
    Exact,
    Sampled { samples: u64 },
    /// Exact when `C(n, k)` is within [`EXACT_SUBSET_LIMIT`], sampled otherwise.
    Auto { samples: u64 },
}

impl Default for CensusMethod {
    fn default() -> Self {
        CensusMethod::Auto {
            samples: DEFAULT_SAMPLES,
        }
    }
}

/// Dense adjacency rows used by the subset enumeration.
struct BitAdjacency {
    words: usize,
    rows: Vec<u64>,
}

impl BitAdjacency {
    fn new(g: &Graph) -> Self {
        let words = g.n().div_ceil(64);
        let mut rows = vec![0u64; words * g.n()];
        for (u, v) in g.edges() {
            rows[u * words + v / 64] |= 1 << (v % 64);
            rows[v * words + u / 64] |= 1 << (u % 64);
        }
        BitAdjacency { words, rows }
    }

    #[inline]
    fn has(&self, u: usize, v: usize) -> bool {
        self.rows[u * self.words + v / 64] >> (v % 64) & 1 == 1
    }
}

/// Bit of pair `(i, j)` in a `k`-node labeled code.
fn pair_bits(k: usize) -> Vec<Vec<u64>> {
    let m = pair_count(k);
    (0..k)
        .map(|j| (0..j).map(|i| 1u64 << (m - 1 - pair_index(k, i, j))).collect())
        .collect()
}

fn check_sizes(g: &Graph, k: usize) -> Result<&'static Catalog> {
    let catalog = Catalog::shared(k)?;
    if g.n() < k {
        return Err(Error::DegenerateInput(format!(
            "graph has {} nodes, census needs at least k = {k}",
            g.n()
        )));
    }
    Ok(catalog)
}

/// Counts every `k`-subset of `g` by class.
pub fn exact_census_counts(g: &Graph, k: usize) -> Result<CensusCounts> {
    let catalog = check_sizes(g, k)?;
    let total = binomial(g.n(), k);
    if total > EXACT_SUBSET_LIMIT {
        return Err(Error::SizeLimit(format!(
            "C({}, {k}) = {total} subsets exceeds the exact limit {EXACT_SUBSET_LIMIT}; use a sampled census",
            g.n()
        )));
    }
    let adj = BitAdjacency::new(g);
    let bits = pair_bits(k);
    let mut by_code = vec![0u64; 1 << pair_count(k)];
    let mut chosen = vec![0usize; k];
    enumerate(&adj, g.n(), &bits, &mut chosen, 0, 0, 0, &mut by_code);

    let top = catalog.top();
    let mut counts = vec![0u64; catalog.len()];
    for (code, &c) in by_code.iter().enumerate() {
        counts[top.class_of_code(code as u64)] += c;
    }
    debug_assert_eq!(counts.iter().sum::<u64>(), total);
    Ok(CensusCounts { k, counts, total })
}

#[allow(clippy::too_many_arguments)]
fn enumerate(
    adj: &BitAdjacency,
    n: usize,
    bits: &[Vec<u64>],
    chosen: &mut [usize],
    depth: usize,
    start: usize,
    code: u64,
    out: &mut [u64],
) {
    let k = chosen.len();
    if depth == k {
        out[code as usize] += 1;
        return;
    }
    for v in start..=n - (k - depth) {
        let mut c = code;
        for (i, &u) in chosen[..depth].iter().enumerate() {
            if adj.has(u, v) {
                c |= bits[depth][i];
            }
        }
        chosen[depth] = v;
        enumerate(adj, n, bits, chosen, depth + 1, v + 1, c, out);
    }
}

/// Exact induced `k`-subgraph frequencies of `g`.
pub fn exact_census(g: &Graph, k: usize) -> Result<FrequencyVector> {
    let counts = exact_census_counts(g, k)?;
    Ok(FrequencyVector::from_counts(&counts, CensusMode::Exact))
}

/// Class counts of `samples` uniform `k`-subsets drawn with replacement.
pub fn sampled_census_counts(g: &Graph, k: usize, samples: u64, seed: u64) -> Result<CensusCounts> {
    let catalog = check_sizes(g, k)?;
    if samples == 0 {
        return Err(Error::InvalidParameter("sampled census needs at least one sample".into()));
    }
    let adj = BitAdjacency::new(g);
    let bits = pair_bits(k);
    let top = catalog.top();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; catalog.len()];
    for _ in 0..samples {
        let nodes = rand::seq::index::sample(&mut rng, g.n(), k);
        let mut code = 0u64;
        for j in 1..k {
            for i in 0..j {
                if adj.has(nodes.index(i), nodes.index(j)) {
                    code |= bits[j][i];
                }
            }
        }
        counts[top.class_of_code(code)] += 1;
    }
    Ok(CensusCounts {
        k,
        counts,
        total: samples,
    })
}

/// Estimated induced `k`-subgraph frequencies from `samples` uniform draws.
pub fn sampled_census(g: &Graph, k: usize, samples: u64, seed: u64) -> Result<FrequencyVector> {
    let counts = sampled_census_counts(g, k, samples, seed)?;
    Ok(FrequencyVector::from_counts(&counts, CensusMode::Sampled))
}

/// Census by the requested method.
pub fn census(g: &Graph, k: usize, method: CensusMethod, seed: u64) -> Result<FrequencyVector> {
    match method {
        CensusMethod::Exact => exact_census(g, k),
        CensusMethod::Sampled { samples } => sampled_census(g, k, samples, seed),
        CensusMethod::Auto { samples } => {
            check_sizes(g, k)?;
            if binomial(g.n(), k) <= EXACT_SUBSET_LIMIT {
                exact_census(g, k)
            } else {
                sampled_census(g, k, samples, seed)
            }
        }
    }
}

/// Census of every graph in a collection, in parallel. Graph `i` is sampled
/// with seed `derive_seed(seed, i)`, so results do not depend on thread count.
pub fn census_collection(
    graphs: &[Graph],
    k: usize,
    method: CensusMethod,
    seed: u64,
) -> Vec<Result<FrequencyVector>> {
    graphs
        .par_iter()
        .enumerate()
        .map(|(i, g)| census(g, k, method, crate::derive_seed(seed, i as u64)))
        .collect()
}

/// Class probabilities of `G(k, p)`: `(k!/aut(H)) p^|E(H)| (1-p)^(C(k,2)-|E(H)|)`.
pub fn gnp_frequency_curve(k: usize, p: f64) -> Result<FrequencyVector> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p = {p} is outside [0, 1]")));
    }
    let catalog = Catalog::shared(k)?;
    let m = pair_count(k) as i32;
    let values = catalog
        .classes()
        .iter()
        .map(|h| {
            let e = h.edge_count as i32;
            h.labelings() as f64 * p.powi(e) * (1.0 - p).powi(m - e)
        })
        .collect();
    Ok(FrequencyVector {
        k,
        values,
        mode: CensusMode::Exact,
        sample_count: 0,
    })
}
