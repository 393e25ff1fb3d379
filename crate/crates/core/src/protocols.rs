//! Synchronous rounds of the Push, Pull and Push&Pull protocols.
//!
//! A round is evaluated against the round-start informed set: choices are
//! drawn first, then all updates apply at once. A node pushed this round can
//! therefore not be pulled from in the same round. Isolated nodes make no
//! choice and take no action.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{choose_uniform_neighbor, sample_round_graph, ModelParams, RoundGraph, SeedSpec};

/// The three rumor spreading protocols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    Push,
    Pull,
    PushPull,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 3] = [ProtocolKind::Push, ProtocolKind::Pull, ProtocolKind::PushPull];

    pub fn name(&self) -> &'static str {
        match self {
            ProtocolKind::Push => "push",
            ProtocolKind::Pull => "pull",
            ProtocolKind::PushPull => "pushpull",
        }
    }
}

impl std::str::FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "push" => Ok(ProtocolKind::Push),
            "pull" => Ok(ProtocolKind::Pull),
            "pushpull" | "push-pull" | "push&pull" => Ok(ProtocolKind::PushPull),
            other => Err(Error::InvalidParams(format!(
                "unknown protocol '{other}' (expected push, pull or pushpull)"
            ))),
        }
    }
}

impl std::fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Informed-set state of one spread.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpreadState {
    informed: Vec<bool>,
    count: usize,
    round: u64,
}

impl SpreadState {
    /// Fresh spread with node 0 informed (the conventional start node).
    pub fn new(n: usize) -> Self {
        let mut informed = vec![false; n];
        informed[0] = true;
        SpreadState { informed, count: 1, round: 0 }
    }

    /// Spread with an explicit informed set; used for single-round
    /// experiments that start from k informed nodes.
    pub fn with_informed(n: usize, ids: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut informed = vec![false; n];
        let mut count = 0;
        for id in ids {
            if id >= n {
                return Err(Error::InvalidParams(format!("informed node {id} out of range for n = {n}")));
            }
            if !informed[id] {
                informed[id] = true;
                count += 1;
            }
        }
        if count == 0 {
            return Err(Error::InvalidParams("informed set must not be empty".into()));
        }
        Ok(SpreadState { informed, count, round: 0 })
    }

    pub fn n(&self) -> usize {
        self.informed.len()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn is_informed(&self, v: u32) -> bool {
        self.informed[v as usize]
    }

    pub fn all_informed(&self) -> bool {
        self.count == self.informed.len()
    }
}

/// Per-node events of one round. `pushed[y]` records that some round-start
/// informed node chose y; `pulled[y]` that y's chosen neighbor was informed
/// at round start. Both flags are recorded only for nodes that were
/// uninformed at round start.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundOutcome {
    pub newly_informed: Vec<u32>,
    pub pushed: Vec<bool>,
    pub pulled: Vec<bool>,
}

/// Draw one uniform neighbor choice for every node that contacts a peer
/// under `kind`, in ascending node order. Non-choosers and isolated nodes
/// get `None`.
fn draw_choices(
    kind: ProtocolKind,
    g: &RoundGraph,
    informed: &[bool],
    rng: &mut impl Rng,
) -> Vec<Option<u32>> {
    let n = g.n();
    let mut choices = vec![None; n];
    for v in 0..n {
        let chooses = match kind {
            ProtocolKind::Push => informed[v],
            ProtocolKind::Pull => !informed[v],
            ProtocolKind::PushPull => true,
        };
        if chooses {
            choices[v] = choose_uniform_neighbor(g, v as u32, rng);
        }
    }
    choices
}

/// Resolve a choice vector into round events. Reads only the choices the
/// protocol actually makes: informed nodes' entries for Push, uninformed
/// nodes' entries for Pull, all entries for Push&Pull.
fn apply_choices(
    kind: ProtocolKind,
    informed: &[bool],
    choices: &[Option<u32>],
) -> RoundOutcome {
    let n = informed.len();
    let mut pushed = vec![false; n];
    let mut pulled = vec![false; n];
    if kind != ProtocolKind::Pull {
        for v in 0..n {
            if informed[v] {
                if let Some(t) = choices[v] {
                    if !informed[t as usize] {
                        pushed[t as usize] = true;
                    }
                }
            }
        }
    }
    if kind != ProtocolKind::Push {
        for y in 0..n {
            if !informed[y] {
                if let Some(t) = choices[y] {
                    if informed[t as usize] {
                        pulled[y] = true;
                    }
                }
            }
        }
    }
    let newly_informed = (0..n as u32)
        .filter(|&y| {
            !informed[y as usize]
                && match kind {
                    ProtocolKind::Push => pushed[y as usize],
                    ProtocolKind::Pull => pulled[y as usize],
                    ProtocolKind::PushPull => pushed[y as usize] || pulled[y as usize],
                }
        })
        .collect();
    RoundOutcome { newly_informed, pushed, pulled }
}

/// Execute one synchronous round of `kind` on `g`, updating `state`.
///
/// Errors with [`Error::AllInformed`] when there is nothing left to do;
/// calling in that situation is a caller bug.
pub fn run_round(
    state: &mut SpreadState,
    kind: ProtocolKind,
    g: &RoundGraph,
    rng: &mut impl Rng,
) -> Result<RoundOutcome> {
    if state.all_informed() {
        return Err(Error::AllInformed { n: state.n() });
    }
    assert_eq!(state.n(), g.n(), "graph node count must match spread state");
    let choices = draw_choices(kind, g, &state.informed, rng);
    let outcome = apply_choices(kind, &state.informed, &choices);
    for &y in &outcome.newly_informed {
        state.informed[y as usize] = true;
    }
    state.count += outcome.newly_informed.len();
    state.round += 1;
    Ok(outcome)
}

/// Informed-count trajectory of one completed spread.
#[derive(Debug, Clone, PartialEq)]
pub struct SpreadTrace {
    pub protocol: ProtocolKind,
    pub params: ModelParams,
    pub seed: SeedSpec,
    /// I_0 = 1, ..., I_T = n; nondecreasing.
    pub counts: Vec<u32>,
}

impl SpreadTrace {
    /// Total rounds T = T(1, n).
    pub fn total_rounds(&self) -> u64 {
        (self.counts.len() - 1) as u64
    }
}

/// Round budget that comfortably covers both spreading phases plus slack;
/// spreads that exceed it signal pathological parameters.
pub fn default_max_rounds(params: &ModelParams) -> u64 {
    let n = params.n() as f64;
    (1e4 * (n.log2() + n.ln() / params.a() + 10.0)).ceil() as u64
}

/// Run a full spread of `kind` from node 0, sampling a fresh graph each
/// round, and record the informed-count trace.
pub fn run_to_completion(
    params: &ModelParams,
    kind: ProtocolKind,
    seed: SeedSpec,
    max_rounds: u64,
) -> Result<SpreadTrace> {
    assert!(max_rounds >= 1);
    let mut rng = seed.rng();
    let mut state = SpreadState::new(params.n());
    let mut counts = Vec::with_capacity(32);
    counts.push(1u32);
    while !state.all_informed() {
        if state.round >= max_rounds {
            return Err(Error::RoundLimitExceeded { seed, max_rounds });
        }
        let g = sample_round_graph(params, &mut rng);
        run_round(&mut state, kind, &g, &mut rng)?;
        counts.push(state.count() as u32);
    }
    Ok(SpreadTrace { protocol: kind, params: *params, seed, counts })
}

/// First-passage phase time: rounds from the first index with I >= k to the
/// first index with I >= m.
///
/// The textbook definition conditions on hitting k exactly, which a trace may
/// jump over; this first-passage variant is the documented deviation and is
/// what the fractional-threshold phase bounds use anyway.
pub fn phase_time(trace: &SpreadTrace, k: u32, m: u32) -> u64 {
    assert!(1 <= k && k <= m && m as usize <= trace.params.n());
    let first_at_least = |threshold: u32| {
        trace
            .counts
            .iter()
            .position(|&c| c >= threshold)
            .expect("trace ends at n, so every threshold <= n is hit")
    };
    (first_at_least(m) - first_at_least(k)) as u64
}

/// Flat JSONL record of a trace: one JSON object per line with fields
/// {protocol, n, a, master_seed, stream_id, T, counts}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub protocol: ProtocolKind,
    pub n: usize,
    pub a: f64,
    pub master_seed: u64,
    pub stream_id: u64,
    #[serde(rename = "T")]
    pub rounds: u64,
    pub counts: CountsRepr,
}

/// Informed counts, either plain or run-length compressed as
/// [value, repeat] pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CountsRepr {
    Plain(Vec<u32>),
    RunLength(Vec<(u32, u32)>),
}

impl CountsRepr {
    pub fn run_length(counts: &[u32]) -> Self {
        let mut pairs: Vec<(u32, u32)> = Vec::new();
        for &c in counts {
            match pairs.last_mut() {
                Some((value, repeat)) if *value == c => *repeat += 1,
                _ => pairs.push((c, 1)),
            }
        }
        CountsRepr::RunLength(pairs)
    }

    pub fn expand(&self) -> Vec<u32> {
        match self {
            CountsRepr::Plain(v) => v.clone(),
            CountsRepr::RunLength(pairs) => {
                let mut out = Vec::new();
                for &(value, repeat) in pairs {
                    out.extend(std::iter::repeat(value).take(repeat as usize));
                }
                out
            }
        }
    }
}

impl SpreadTrace {
    pub fn to_record(&self, rle: bool) -> TraceRecord {
        TraceRecord {
            protocol: self.protocol,
            n: self.params.n(),
            a: self.params.a(),
            master_seed: self.seed.master_seed,
            stream_id: self.seed.stream_id,
            rounds: self.total_rounds(),
            counts: if rle {
                CountsRepr::run_length(&self.counts)
            } else {
                CountsRepr::Plain(self.counts.clone())
            },
        }
    }
}

impl TraceRecord {
    /// Rebuild the trace, validating the trace invariants.
    pub fn into_trace(self) -> Result<SpreadTrace> {
        let params = ModelParams::new(self.n, self.a)?;
        let counts = self.counts.expand();
        let ok = counts.first() == Some(&1)
            && counts.last() == Some(&(self.n as u32))
            && counts.windows(2).all(|w| w[0] <= w[1])
            && counts.len() as u64 == self.rounds + 1;
        if !ok {
            return Err(Error::InvalidParams("trace record violates count invariants".into()));
        }
        Ok(SpreadTrace {
            protocol: self.protocol,
            params,
            seed: SeedSpec::new(self.master_seed, self.stream_id),
            counts,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn all_informed_round_is_an_error() {
        let params = ModelParams::new(3, 1.0).unwrap();
        let mut state = SpreadState::with_informed(3, [0, 1, 2]).unwrap();
        let g = sample_round_graph(&params, &mut SeedSpec::new(1, 0).rng());
        let err = run_round(&mut state, ProtocolKind::Pull, &g, &mut SeedSpec::new(1, 1).rng());
        assert_eq!(err, Err(Error::AllInformed { n: 3 }));
    }

    #[test]
    fn two_nodes_with_edge_complete_in_one_round() {
        let g = RoundGraph::from_edges(2, &[(0, 1)]).unwrap();
        for kind in ProtocolKind::ALL {
            let mut state = SpreadState::new(2);
            let outcome = run_round(&mut state, kind, &g, &mut SeedSpec::new(2, 0).rng()).unwrap();
            assert_eq!(outcome.newly_informed, vec![1], "{kind}");
            assert!(state.all_informed());
        }
    }

    /// Exhaustive 3-node Pull check: over all 8 labeled graphs at p = 1/2
    /// with node 0 informed, a fixed uninformed node succeeds with
    /// probability 3/8 — which must also equal the closed form.
    #[test]
    fn three_node_pull_success_is_three_eighths() {
        let mut expected = 0.0;
        for mask in 0u32..8 {
            // Pair order: (0,1), (0,2), (1,2).
            let mut edges = Vec::new();
            for (bit, pair) in [(0, (0u32, 1u32)), (1, (0, 2)), (2, (1, 2))] {
                if mask >> bit & 1 == 1 {
                    edges.push(pair);
                }
            }
            let g = RoundGraph::from_edges(3, &edges).unwrap();
            // Node 1 pulls from its uniform neighbor; success iff node 0 chosen.
            let deg = g.degree(1);
            if deg > 0 && g.has_edge(1, 0) {
                expected += (1.0 / 8.0) / deg as f64;
            }
        }
        assert_eq!(expected, 3.0 / 8.0);
        let params = ModelParams::new(3, 1.5).unwrap();
        let closed = crate::analytics::pull_success_probability_exact(&params, 1);
        assert!((closed - 3.0 / 8.0).abs() < 1e-15);

        // Statistical cross-check through run_round itself.
        let mut rng = SeedSpec::new(23, 0).rng();
        let samples = 200_000u64;
        let mut hits = 0u64;
        for _ in 0..samples {
            let g = sample_round_graph(&params, &mut rng);
            let mut state = SpreadState::new(3);
            let outcome = run_round(&mut state, ProtocolKind::Pull, &g, &mut rng).unwrap();
            if outcome.pulled[1] {
                hits += 1;
            }
        }
        let freq = hits as f64 / samples as f64;
        let sigma = (0.375f64 * 0.625 / samples as f64).sqrt();
        assert!((freq - 0.375).abs() < 4.0 * sigma, "freq {freq}");
    }

    #[test]
    fn phase_time_examples() {
        let params = ModelParams::new(8, 2.0).unwrap();
        let trace = SpreadTrace {
            protocol: ProtocolKind::Pull,
            params,
            seed: SeedSpec::new(0, 0),
            counts: vec![1, 1, 3, 7, 8],
        };
        assert_eq!(phase_time(&trace, 1, 1), 0);
        assert_eq!(phase_time(&trace, 1, 8), trace.total_rounds());
        assert_eq!(phase_time(&trace, 2, 8), 2);
    }

    #[test]
    fn complete_two_node_graph_takes_one_round() {
        let params = ModelParams::new(2, 2.0).unwrap();
        for kind in ProtocolKind::ALL {
            for stream in 0..20 {
                let trace =
                    run_to_completion(&params, kind, SeedSpec::new(31, stream), 100).unwrap();
                assert_eq!(trace.total_rounds(), 1, "{kind}");
            }
        }
    }

    #[test]
    fn two_node_spread_time_is_geometric_with_mean_two() {
        // a = 1 on two nodes: the edge appears with p = 1/2, so T is
        // geometric(1/2) with mean 2 and variance 2.
        let params = ModelParams::new(2, 1.0).unwrap();
        let trials = 100_000u64;
        let mut total = 0u64;
        for t in 0..trials {
            let trace =
                run_to_completion(&params, ProtocolKind::Push, SeedSpec::new(37, t), 10_000)
                    .unwrap();
            total += trace.total_rounds();
        }
        let mean = total as f64 / trials as f64;
        let sigma = (2.0f64).sqrt() / (trials as f64).sqrt();
        assert!((mean - 2.0).abs() < 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn round_limit_is_reported_with_seed() {
        let params = ModelParams::new(50, 1e-6).unwrap();
        let seed = SeedSpec::new(41, 9);
        match run_to_completion(&params, ProtocolKind::PushPull, seed, 3) {
            Err(Error::RoundLimitExceeded { seed: s, max_rounds: 3 }) => assert_eq!(s, seed),
            other => panic!("expected round limit error, got {other:?}"),
        }
    }

    #[test]
    fn replay_reproduces_traces() {
        let params = ModelParams::new(64, 1.2).unwrap();
        let seed = SeedSpec::new(43, 7);
        let a = run_to_completion(&params, ProtocolKind::PushPull, seed, 10_000).unwrap();
        let b = run_to_completion(&params, ProtocolKind::PushPull, seed, 10_000).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn trace_reconstructs_total_rounds() {
        let params = ModelParams::new(32, 1.5).unwrap();
        let trace =
            run_to_completion(&params, ProtocolKind::Pull, SeedSpec::new(47, 0), 10_000).unwrap();
        assert_eq!(phase_time(&trace, 1, 32), trace.total_rounds());
        assert!(trace.counts.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(trace.counts[0], 1);
        assert_eq!(*trace.counts.last().unwrap(), 32);
    }

    #[test]
    fn record_roundtrip_and_shape() {
        let params = ModelParams::new(16, 1.0).unwrap();
        let trace =
            run_to_completion(&params, ProtocolKind::Push, SeedSpec::new(53, 3), 10_000).unwrap();
        for rle in [false, true] {
            let line = serde_json::to_string(&trace.to_record(rle)).unwrap();
            let parsed: TraceRecord = serde_json::from_str(&line).unwrap();
            assert_eq!(parsed.into_trace().unwrap(), trace);
        }
        let line = serde_json::to_string(&trace.to_record(false)).unwrap();
        assert!(line.contains("\"protocol\":\"push\""));
        assert!(line.contains("\"T\":"));
    }

    /// Start-node exchangeability: the distribution of I_1 does not depend on
    /// which node starts informed. Two-sample chi-square on 1e5 trials each.
    #[test]
    fn start_node_does_not_change_round_one_distribution() {
        let n = 8;
        let params = ModelParams::new(n, 1.5).unwrap();
        let trials = 100_000usize;
        let run_one = |start: usize, master: u64| {
            let mut counts = vec![0u64; n + 1];
            for t in 0..trials {
                let mut rng = SeedSpec::new(master, t as u64).rng();
                let g = sample_round_graph(&params, &mut rng);
                let mut state = SpreadState::with_informed(n, [start]).unwrap();
                run_round(&mut state, ProtocolKind::PushPull, &g, &mut rng).unwrap();
                counts[state.count()] += 1;
            }
            counts
        };
        let a = run_one(0, 59);
        let b = run_one(n - 1, 61);
        let mut chi2 = 0.0;
        let mut dof: i64 = -1;
        for i in 0..=n {
            let pooled = (a[i] + b[i]) as f64;
            if pooled < 10.0 {
                continue;
            }
            let ea = pooled / 2.0;
            let da = a[i] as f64 - ea;
            let db = b[i] as f64 - ea;
            chi2 += da * da / ea + db * db / ea;
            dof += 1;
        }
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let p_value = 1.0 - ChiSquared::new(dof.max(1) as f64).unwrap().cdf(chi2);
        assert!(p_value > 0.001, "chi2 = {chi2}, dof = {dof}, p = {p_value}");
    }

    proptest! {
        /// Push&Pull newly-informed set equals the union of the Push-only and
        /// Pull-only sets resolved from the same graph and choice vector.
        #[test]
        fn pushpull_is_union_of_push_and_pull(
            n in 3usize..24,
            a_frac in 0.05f64..1.0,
            k_frac in 0.0f64..1.0,
            seed in any::<u64>(),
        ) {
            let a = a_frac * n as f64;
            let params = ModelParams::new(n, a).unwrap();
            let k = 1 + ((n - 1) as f64 * k_frac) as usize;
            let informed_vec: Vec<bool> =
                (0..n).map(|v| v < k).collect();
            let mut rng = SeedSpec::new(seed, 0).rng();
            let g = sample_round_graph(&params, &mut rng);
            // Full choice vector: every non-isolated node chooses.
            let choices = draw_choices(ProtocolKind::PushPull, &g, &informed_vec, &mut rng);
            let push = apply_choices(ProtocolKind::Push, &informed_vec, &choices);
            let pull = apply_choices(ProtocolKind::Pull, &informed_vec, &choices);
            let both = apply_choices(ProtocolKind::PushPull, &informed_vec, &choices);
            let mut union: Vec<u32> = push
                .newly_informed
                .iter()
                .chain(pull.newly_informed.iter())
                .copied()
                .collect();
            union.sort_unstable();
            union.dedup();
            prop_assert_eq!(both.newly_informed, union);
        }

        /// Monotonicity: informed sets only grow, counts are nondecreasing.
        #[test]
        fn informed_sets_only_grow(n in 2usize..32, seed in any::<u64>()) {
            let params = ModelParams::new(n, 1.0).unwrap();
            let mut rng = SeedSpec::new(seed, 0).rng();
            let mut state = SpreadState::new(n);
            let mut previously: Vec<bool> = (0..n).map(|v| state.is_informed(v as u32)).collect();
            for _ in 0..16 {
                if state.all_informed() {
                    break;
                }
                let g = sample_round_graph(&params, &mut rng);
                let before = state.count();
                run_round(&mut state, ProtocolKind::PushPull, &g, &mut rng).unwrap();
                prop_assert!(state.count() >= before);
                for v in 0..n as u32 {
                    if previously[v as usize] {
                        prop_assert!(state.is_informed(v));
                    }
                    previously[v as usize] = state.is_informed(v);
                }
            }
        }

        #[test]
        fn run_length_roundtrips(counts in proptest::collection::vec(1u32..40, 1..64)) {
            let mut sorted = counts.clone();
            sorted.sort_unstable();
            let rle = CountsRepr::run_length(&sorted);
            prop_assert_eq!(rle.expand(), sorted);
        }
    }
}
