//! Exact ground truth for small instances by exhaustive enumeration.
//!
//! For n <= 6 every labeled graph (weighted by p^m (1-p)^(C-m)) and every
//! informed-node choice combination is enumerated. Fixing the informed set to
//! {0..k-1} is justified by exchangeability: before edges are sampled every
//! uninformed node is interchangeable, so the informed-count process is a
//! Markov chain whose transitions depend on k alone.
//!
//! Per graph, Pull success indicators of distinct uninformed nodes are
//! independent, so the newly-informed count is a Poisson-binomial convolution;
//! Push requires enumerating the informed nodes' choice vectors (each choice
//! weighted by 1/deg); Push&Pull convolves pull Bernoullis on top of each
//! push-choice combination.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ROW_SUM_TOL;
use crate::error::{Error, Result};
use crate::graph::ModelParams;
use crate::protocols::ProtocolKind;

/// Size guard for the exhaustive oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleLimits {
    max_n: usize,
}

impl OracleLimits {
    pub const HARD_CAP: usize = 6;

    /// `max_n` up to the hard cap of 6 (32768 graphs x up to 5^6 choice
    /// combinations: minutes, not hours).
    pub fn new(max_n: usize) -> Result<Self> {
        if !(2..=Self::HARD_CAP).contains(&max_n) {
            return Err(Error::InvalidParams(format!(
                "oracle max_n must lie in [2, {}], got {max_n}",
                Self::HARD_CAP
            )));
        }
        Ok(OracleLimits { max_n })
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }

    fn admit(&self, n: usize) -> Result<()> {
        if n > self.max_n {
            return Err(Error::OracleTooLarge { n, max_n: self.max_n });
        }
        Ok(())
    }
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits { max_n: 5 }
    }
}

/// Exact informed-count Markov chain of one protocol on G(n, p).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    pub n: usize,
    pub a: f64,
    pub p: f64,
    pub kind: ProtocolKind,
    /// `rows[k-1][j]` is P(k -> k + j); row k covers k' in [k, n].
    pub rows: Vec<Vec<f64>>,
}

impl TransitionMatrix {
    pub fn row(&self, k: usize) -> &[f64] {
        &self.rows[k - 1]
    }
}

/// Adjacency bitmasks of one enumerated labeled graph.
struct SmallGraph {
    n: usize,
    adj: [u8; OracleLimits::HARD_CAP],
    deg: [u8; OracleLimits::HARD_CAP],
}

impl SmallGraph {
    fn from_mask(n: usize, pairs: &[(u8, u8)], mask: u32) -> Self {
        let mut adj = [0u8; OracleLimits::HARD_CAP];
        for (bit, &(u, v)) in pairs.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                adj[u as usize] |= 1 << v;
                adj[v as usize] |= 1 << u;
            }
        }
        let mut deg = [0u8; OracleLimits::HARD_CAP];
        for v in 0..n {
            deg[v] = adj[v].count_ones() as u8;
        }
        SmallGraph { n, adj, deg }
    }

    /// Pull success probability of node `y` given this graph: the fraction of
    /// y's neighbors that are informed (0 when isolated).
    fn pull_success(&self, informed: u8, y: usize) -> f64 {
        if self.deg[y] == 0 {
            0.0
        } else {
            (self.adj[y] & informed).count_ones() as f64 / self.deg[y] as f64
        }
    }

    /// Probability that no informed node pushes any node of `targets`
    /// (a bitmask), exploiting that informed choosers act independently
    /// given the graph. With one target this is P[target not pushed]; with
    /// two it is P[neither pushed] since each chooser hits at most one.
    fn push_miss_probability(&self, informed: u8, targets: u8) -> f64 {
        let mut miss = 1.0;
        for x in 0..self.n {
            if informed >> x & 1 == 1 && self.deg[x] > 0 {
                let hits = (self.adj[x] & targets).count_ones() as f64;
                miss *= 1.0 - hits / self.deg[x] as f64;
            }
        }
        miss
    }
}

/// Lexicographic unordered pairs over n nodes; bit order of the graph mask.
fn pair_list(n: usize) -> Vec<(u8, u8)> {
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for u in 0..n as u8 {
        for v in (u + 1)..n as u8 {
            pairs.push((u, v));
        }
    }
    pairs
}

/// Fold `fold` over every labeled graph with its sampling weight, in fixed
/// chunks merged in index order: the reduction tree is independent of the
/// worker count, so results are bit-identical however many threads run.
fn fold_graphs<T>(
    n: usize,
    p: f64,
    zero: impl Fn() -> T + Sync,
    fold: impl Fn(&mut T, &SmallGraph, f64) + Sync,
    merge: impl Fn(&mut T, T),
) -> T
where
    T: Send,
{
    let pairs = pair_list(n);
    let c = pairs.len();
    let total: u32 = 1 << c;
    // Edge-count weight tables.
    let mut pow_p = vec![1.0f64; c + 1];
    let mut pow_q = vec![1.0f64; c + 1];
    for i in 0..c {
        pow_p[i + 1] = pow_p[i] * p;
        pow_q[i + 1] = pow_q[i] * (1.0 - p);
    }
    const CHUNK: u32 = 4096;
    let starts: Vec<u32> = (0..total).step_by(CHUNK as usize).collect();
    let partials: Vec<T> = starts
        .par_iter()
        .map(|&start| {
            let mut acc = zero();
            for mask in start..total.min(start + CHUNK) {
                let ones = mask.count_ones() as usize;
                let weight = pow_p[ones] * pow_q[c - ones];
                if weight == 0.0 {
                    continue;
                }
                let g = SmallGraph::from_mask(n, &pairs, mask);
                fold(&mut acc, &g, weight);
            }
            acc
        })
        .collect();
    let mut out = zero();
    for partial in partials {
        merge(&mut out, partial);
    }
    out
}

/// In-place Poisson-binomial step: fold Bernoulli(q) into `dist[0..=len]`.
fn convolve_bernoulli(dist: &mut [f64], len: usize, q: f64) {
    for j in (0..=len).rev() {
        let move_up = dist[j] * q;
        dist[j] -= move_up;
        dist[j + 1] += move_up;
    }
}

/// Distribution of newly informed nodes for one graph, informed set and kind,
/// accumulated into `acc[newly] += weight * P[newly]`.
fn accumulate_row(g: &SmallGraph, informed: u8, kind: ProtocolKind, weight: f64, acc: &mut [f64]) {
    let n = g.n;
    let uninformed: Vec<usize> = (0..n).filter(|&v| informed >> v & 1 == 0).collect();
    let u = uninformed.len();
    match kind {
        ProtocolKind::Pull => {
            let mut dist = [0.0f64; OracleLimits::HARD_CAP + 1];
            dist[0] = 1.0;
            for (i, &y) in uninformed.iter().enumerate() {
                convolve_bernoulli(&mut dist, i, g.pull_success(informed, y));
            }
            for j in 0..=u {
                acc[j] += weight * dist[j];
            }
        }
        ProtocolKind::Push => {
            push_choice_dfs(g, informed, 0, 0u8, weight, &mut |hits, w| {
                acc[hits.count_ones() as usize] += w;
            });
        }
        ProtocolKind::PushPull => {
            push_choice_dfs(g, informed, 0, 0u8, weight, &mut |hits, w| {
                let mut dist = [0.0f64; OracleLimits::HARD_CAP + 1];
                dist[0] = 1.0;
                for (i, &y) in uninformed.iter().enumerate() {
                    let q = if hits >> y & 1 == 1 {
                        1.0
                    } else {
                        g.pull_success(informed, y)
                    };
                    convolve_bernoulli(&mut dist, i, q);
                }
                for j in 0..=u {
                    acc[j] += w * dist[j];
                }
            });
        }
    }
}

/// Enumerate the informed nodes' push choices (nodes taken in id order, each
/// neighbor with weight 1/deg, isolated nodes skipped), calling `leaf` with
/// the bitmask of uninformed nodes hit and the combined weight.
fn push_choice_dfs(
    g: &SmallGraph,
    informed: u8,
    from: usize,
    hits: u8,
    weight: f64,
    leaf: &mut impl FnMut(u8, f64),
) {
    let mut x = from;
    while x < g.n {
        if informed >> x & 1 == 1 && g.deg[x] > 0 {
            let share = weight / g.deg[x] as f64;
            let mut nbrs = g.adj[x];
            while nbrs != 0 {
                let t = nbrs.trailing_zeros() as usize;
                nbrs &= nbrs - 1;
                let new_hits = if informed >> t & 1 == 0 { hits | 1 << t } else { hits };
                push_choice_dfs(g, informed, x + 1, new_hits, share, leaf);
            }
            return;
        }
        x += 1;
    }
    leaf(hits, weight);
}

fn canonical_informed(k: usize) -> u8 {
    ((1u16 << k) - 1) as u8
}

fn transition_row_with_informed(
    params: &ModelParams,
    k: usize,
    kind: ProtocolKind,
    informed: u8,
) -> Vec<f64> {
    let n = params.n();
    let u = n - k;
    if u == 0 {
        return vec![1.0];
    }
    fold_graphs(
        n,
        params.p(),
        || vec![0.0f64; u + 1],
        |acc, g, w| accumulate_row(g, informed, kind, w, acc),
        |acc, partial| {
            for (a, b) in acc.iter_mut().zip(partial) {
                *a += b;
            }
        },
    )
}

/// Exact transition distribution out of k informed nodes: entry j of the
/// returned vector is P(k -> k + j).
pub fn exact_transition_row(
    params: &ModelParams,
    k: usize,
    kind: ProtocolKind,
    limits: &OracleLimits,
) -> Result<Vec<f64>> {
    let n = params.n();
    limits.admit(n)?;
    assert!((1..=n).contains(&k));
    Ok(transition_row_with_informed(params, k, kind, canonical_informed(k)))
}

/// Exact informed-count Markov chain for all k.
pub fn transition_matrix(
    params: &ModelParams,
    kind: ProtocolKind,
    limits: &OracleLimits,
) -> Result<TransitionMatrix> {
    let n = params.n();
    limits.admit(n)?;
    let rows = (1..=n)
        .map(|k| exact_transition_row(params, k, kind, limits))
        .collect::<Result<Vec<_>>>()?;
    Ok(TransitionMatrix { n, a: params.a(), p: params.p(), kind, rows })
}

/// Exact expected rumor spreading time E[T(1, n)] by back-substitution on
/// the upper-triangular chain: E_n = 0 and
/// E_k = (1 + sum_{k' > k} P(k -> k') E_{k'}) / (1 - P(k -> k)).
pub fn exact_expected_time(
    params: &ModelParams,
    kind: ProtocolKind,
    limits: &OracleLimits,
) -> Result<f64> {
    let matrix = transition_matrix(params, kind, limits)?;
    expected_time_from_matrix(&matrix)
}

/// Back-substitution on an already-computed matrix.
pub fn expected_time_from_matrix(matrix: &TransitionMatrix) -> Result<f64> {
    let n = matrix.n;
    let mut expected = vec![0.0f64; n + 1];
    for k in (1..n).rev() {
        let row = matrix.row(k);
        let stay = row[0];
        if stay >= 1.0 - 1e-15 {
            return Err(Error::NonProgressing { k });
        }
        let mut future = 0.0;
        for (j, &prob) in row.iter().enumerate().skip(1) {
            future += prob * expected[k + j];
        }
        expected[k] = (1.0 + future) / (1.0 - stay);
    }
    Ok(expected[1])
}

fn pk_for_graph(g: &SmallGraph, informed: u8, kind: ProtocolKind, probe: usize) -> f64 {
    match kind {
        ProtocolKind::Pull => g.pull_success(informed, probe),
        ProtocolKind::Push => 1.0 - g.push_miss_probability(informed, 1 << probe),
        ProtocolKind::PushPull => {
            let miss_push = g.push_miss_probability(informed, 1 << probe);
            1.0 - miss_push * (1.0 - g.pull_success(informed, probe))
        }
    }
}

fn exact_pk_with_informed(
    params: &ModelParams,
    kind: ProtocolKind,
    informed: u8,
    probe: usize,
) -> f64 {
    fold_graphs(
        params.n(),
        params.p(),
        || 0.0f64,
        |acc, g, w| *acc += w * pk_for_graph(g, informed, kind, probe),
        |acc, partial| *acc += partial,
    )
}

/// Exact marginal probability that a fixed uninformed node becomes informed
/// in a round starting with k informed nodes.
pub fn exact_pk(
    params: &ModelParams,
    k: usize,
    kind: ProtocolKind,
    limits: &OracleLimits,
) -> Result<f64> {
    let n = params.n();
    limits.admit(n)?;
    assert!((1..n).contains(&k));
    Ok(exact_pk_with_informed(params, kind, canonical_informed(k), k))
}

/// Joint and marginal success probabilities of two probe nodes on one graph.
/// Given the graph, y's pull choice is independent of everything else and
/// informed choosers are independent of each other, so inclusion-exclusion
/// over "probe not pushed" events gives the joint push pattern.
fn pair_moments_for_graph(
    g: &SmallGraph,
    informed: u8,
    kind: ProtocolKind,
    y1: usize,
    y2: usize,
) -> (f64, f64, f64) {
    let s1 = g.pull_success(informed, y1);
    let s2 = g.pull_success(informed, y2);
    match kind {
        ProtocolKind::Pull => (s1, s2, s1 * s2),
        ProtocolKind::Push | ProtocolKind::PushPull => {
            let m1 = g.push_miss_probability(informed, 1 << y1);
            let m2 = g.push_miss_probability(informed, 1 << y2);
            let m12 = g.push_miss_probability(informed, (1 << y1) | (1 << y2));
            if kind == ProtocolKind::Push {
                (1.0 - m1, 1.0 - m2, 1.0 - m1 - m2 + m12)
            } else {
                let both_pushed = 1.0 - m1 - m2 + m12;
                let only_1 = m2 - m12;
                let only_2 = m1 - m12;
                let e12 = both_pushed
                    + only_1 * s2
                    + only_2 * s1
                    + m12 * s1 * s2;
                (1.0 - m1 * (1.0 - s1), 1.0 - m2 * (1.0 - s2), e12)
            }
        }
    }
}

/// Exact covariance of two fixed uninformed nodes' success indicators in a
/// round starting with k informed nodes. Requires k <= n - 2.
pub fn exact_pair_covariance(
    params: &ModelParams,
    k: usize,
    kind: ProtocolKind,
    limits: &OracleLimits,
) -> Result<f64> {
    let n = params.n();
    limits.admit(n)?;
    if k > n - 2 {
        return Err(Error::InvalidParams(format!(
            "pair covariance needs two uninformed nodes: k = {k} > n - 2 = {}",
            n - 2
        )));
    }
    assert!(k >= 1);
    let informed = canonical_informed(k);
    let (e1, e2, e12) = fold_graphs(
        n,
        params.p(),
        || (0.0f64, 0.0f64, 0.0f64),
        |acc, g, w| {
            let (p1, p2, p12) = pair_moments_for_graph(g, informed, kind, k, k + 1);
            acc.0 += w * p1;
            acc.1 += w * p2;
            acc.2 += w * p12;
        },
        |acc, partial| {
            acc.0 += partial.0;
            acc.1 += partial.1;
            acc.2 += partial.2;
        },
    );
    Ok(e12 - e1 * e2)
}

/// Everything the oracle knows about one instance, keyed by (n, a, kind).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub n: usize,
    pub a: f64,
    pub kind: ProtocolKind,
    pub expected_time: f64,
    pub matrix: TransitionMatrix,
    /// p_k for k = 1..n-1.
    pub pk: Vec<f64>,
    /// Pair covariance for k = 1..n-2.
    pub pair_covariance: Vec<f64>,
}

pub fn oracle_summary(
    params: &ModelParams,
    kind: ProtocolKind,
    limits: &OracleLimits,
) -> Result<OracleSummary> {
    let n = params.n();
    let matrix = transition_matrix(params, kind, limits)?;
    let expected_time = expected_time_from_matrix(&matrix)?;
    let pk = (1..n)
        .map(|k| exact_pk(params, k, kind, limits))
        .collect::<Result<Vec<_>>>()?;
    let pair_covariance = (1..n.saturating_sub(1))
        .map(|k| exact_pair_covariance(params, k, kind, limits))
        .collect::<Result<Vec<_>>>()?;
    Ok(OracleSummary { n, a: params.a(), kind, expected_time, matrix, pk, pair_covariance })
}

/// Validate structural invariants of a transition matrix: rows sum to one,
/// no mass on k' < k, absorbing final row.
pub fn validate_matrix(matrix: &TransitionMatrix) -> Result<()> {
    for (i, row) in matrix.rows.iter().enumerate() {
        let k = i + 1;
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::InvalidParams(format!("row {k} sums to {sum}")));
        }
        if row.iter().any(|&x| x < -ROW_SUM_TOL) {
            return Err(Error::InvalidParams(format!("row {k} has negative mass")));
        }
        if row.len() != matrix.n - k + 1 {
            return Err(Error::InvalidParams(format!("row {k} has wrong support")));
        }
    }
    if matrix.rows.last().map(|r| r.as_slice()) != Some(&[1.0][..]) {
        return Err(Error::InvalidParams("final row must be absorbing".into()));
    }
    Ok(())
}
