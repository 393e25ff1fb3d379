//! Per-round Erdős–Rényi graph sampling.
//!
//! Every protocol round runs on a freshly sampled G(n, p) with p = a/n.
//! Sampling walks the linearized unordered-pair index with geometric gaps, so
//! the expected cost is O(n + m) rather than O(n^2) Bernoulli draws — sparse
//! graphs at n = 1e5 stay cheap.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Experiment universe: node count `n` and expected-degree parameter `a`,
/// with derived edge probability `p = a/n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    n: usize,
    a: f64,
    p: f64,
}

impl ModelParams {
    /// Validates n >= 2, a > 0 and a <= n (so p = a/n lies in (0, 1]).
    pub fn new(n: usize, a: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParams(format!("n must be >= 2, got {n}")));
        }
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::InvalidParams(format!("a must be positive and finite, got {a}")));
        }
        if a > n as f64 {
            return Err(Error::InvalidParams(format!("a = {a} exceeds n = {n}, so p = a/n would exceed 1")));
        }
        Ok(ModelParams { n, a, p: a / n as f64 })
    }

    /// Degenerate constructor from an explicit edge probability in [0, 1].
    /// Unlike [`ModelParams::new`] this admits p = 0 (the empty graph), which
    /// is useful for boundary tests but cannot complete a spread.
    pub fn from_edge_probability(n: usize, p: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParams(format!("n must be >= 2, got {n}")));
        }
        if !(0.0..=1.0).contains(&p) || !p.is_finite() {
            return Err(Error::InvalidParams(format!("p must lie in [0, 1], got {p}")));
        }
        Ok(ModelParams { n, a: p * n as f64, p })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

/// Seed for one reproducible generator stream. Distinct `(master_seed,
/// stream_id)` pairs give statistically independent streams; the same pair
/// replays the identical run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        SeedSpec { master_seed, stream_id }
    }

    /// Instantiate the generator for this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// The stream shifted by `offset`, wrapping. Used to shard trials.
    pub fn with_stream_offset(&self, offset: u64) -> Self {
        SeedSpec {
            master_seed: self.master_seed,
            stream_id: self.stream_id.wrapping_add(offset),
        }
    }
}

/// One sampled undirected graph, CSR adjacency with per-node sorted neighbor
/// lists over dense node ids 0..n-1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundGraph {
    n: usize,
    offsets: Vec<u32>,
    neighbors: Vec<u32>,
}

impl RoundGraph {
    /// Build from an explicit edge list (unordered pairs, no self-loops, no
    /// duplicates). Intended for hand-built fixtures.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<Self> {
        let mut canon: Vec<(u32, u32)> = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(Error::InvalidParams(format!("edge ({u}, {v}) out of range for n = {n}")));
            }
            if u == v {
                return Err(Error::InvalidParams(format!("self-loop at node {u}")));
            }
            canon.push((u.min(v), u.max(v)));
        }
        canon.sort_unstable();
        canon.dedup();
        if canon.len() != edges.len() {
            return Err(Error::InvalidParams("duplicate edges in edge list".into()));
        }
        Ok(Self::from_sorted_pairs(n, &canon))
    }

    /// `pairs` must be sorted lexicographically with u < v in each pair; this
    /// ordering is what keeps the per-node neighbor lists sorted.
    fn from_sorted_pairs(n: usize, pairs: &[(u32, u32)]) -> Self {
        let mut degree = vec![0u32; n];
        for &(u, v) in pairs {
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let mut offsets = vec![0u32; n + 1];
        for v in 0..n {
            offsets[v + 1] = offsets[v] + degree[v];
        }
        let mut cursor: Vec<u32> = offsets[..n].to_vec();
        let mut neighbors = vec![0u32; pairs.len() * 2];
        for &(u, v) in pairs {
            neighbors[cursor[u as usize] as usize] = v;
            cursor[u as usize] += 1;
            neighbors[cursor[v as usize] as usize] = u;
            cursor[v as usize] += 1;
        }
        RoundGraph { n, offsets, neighbors }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn degree(&self, v: u32) -> usize {
        (self.offsets[v as usize + 1] - self.offsets[v as usize]) as usize
    }

    pub fn neighbors(&self, v: u32) -> &[u32] {
        &self.neighbors[self.offsets[v as usize] as usize..self.offsets[v as usize + 1] as usize]
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }
}

/// Total number of unordered pairs over n nodes.
fn pair_count(n: usize) -> u64 {
    let n = n as u64;
    n * (n - 1) / 2
}

/// Index of the first pair whose smaller endpoint is `u`, in the
/// lexicographic enumeration of pairs (u, v) with u < v.
fn row_base(u: u64, n: u64) -> u64 {
    u * (2 * n - u - 1) / 2
}

/// Invert the lexicographic pair index: `idx` in [0, C(n,2)) -> (u, v), u < v.
fn pair_from_index(idx: u64, n: usize) -> (u32, u32) {
    let nn = n as u64;
    debug_assert!(idx < pair_count(n));
    // Float guess from the row-base quadratic, then exact integer correction.
    let b = 2.0 * nn as f64 - 1.0;
    let disc = (b * b - 8.0 * idx as f64).max(0.0);
    let mut u = ((b - disc.sqrt()) / 2.0).floor() as u64;
    u = u.min(nn - 2);
    while row_base(u, nn) > idx {
        u -= 1;
    }
    while u + 1 <= nn - 2 && row_base(u + 1, nn) <= idx {
        u += 1;
    }
    let v = u + 1 + (idx - row_base(u, nn));
    (u as u32, v as u32)
}

/// Sample one fresh G(n, p): each of the C(n,2) unordered pairs is an edge
/// independently with probability p.
pub fn sample_round_graph(params: &ModelParams, rng: &mut impl Rng) -> RoundGraph {
    let n = params.n();
    let p = params.p();
    let total = pair_count(n);
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    if p >= 1.0 {
        pairs.reserve(total as usize);
        for u in 0..n as u32 {
            for v in (u + 1)..n as u32 {
                pairs.push((u, v));
            }
        }
    } else if p > 0.0 {
        pairs.reserve((p * total as f64 * 1.25) as usize + 8);
        let gap = Geometric::new(p).expect("p in (0,1)");
        let mut cur: u64 = 0;
        loop {
            match cur.checked_add(gap.sample(rng)) {
                Some(next) if next < total => {
                    pairs.push(pair_from_index(next, n));
                    cur = next + 1;
                }
                _ => break,
            }
        }
    }
    RoundGraph::from_sorted_pairs(n, &pairs)
}

/// Uniformly random neighbor of `v`, or `None` when `v` is isolated.
pub fn choose_uniform_neighbor(g: &RoundGraph, v: u32, rng: &mut impl Rng) -> Option<u32> {
    let nbrs = g.neighbors(v);
    if nbrs.is_empty() {
        None
    } else {
        Some(nbrs[rng.random_range(0..nbrs.len())])
    }
}
