//! Seeded, reproducible Monte Carlo estimation.
//!
//! Trials are sharded by stream id: trial i runs on
//! `seed.with_stream_offset(i)`, workers produce an index-ordered vector and
//! reductions run left to right, so every report is a pure function of the
//! inputs and the seed — never of the worker count.
//!
//! Node-pooled estimators report standard errors clustered by round: the
//! within-round correlation between node indicators is exactly the covariance
//! phenomenon under study, so pooling node-level Bernoullis would understate
//! the error.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::predict_expected_time;
use crate::error::{Error, Result};
use crate::graph::{sample_round_graph, ModelParams, SeedSpec};
use crate::protocols::{
    default_max_rounds, run_round, run_to_completion, ProtocolKind, RoundOutcome, SpreadState,
    SpreadTrace,
};
use crate::stats::{fit_line, mean_sd, mean_se};

/// Minimum trials for spreading-time estimation.
pub const MIN_TRIALS: u64 = 100;

/// Minimum conditioning events for the conditional pull estimator.
pub const MIN_CONDITIONING_EVENTS: u64 = 1_000;

/// Tail frequencies enter the decay fit only with at least this many hits.
pub const TAIL_FIT_MIN_HITS: u64 = 30;

/// Point estimate with uncertainty and full replay information.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub point: f64,
    pub std_error: f64,
    pub ci95: (f64, f64),
    pub samples: u64,
    pub seed: SeedSpec,
}

impl EstimateReport {
    fn new(point: f64, std_error: f64, samples: u64, seed: SeedSpec) -> Self {
        EstimateReport {
            point,
            std_error,
            ci95: (point - 1.96 * std_error, point + 1.96 * std_error),
            samples,
            seed,
        }
    }
}

/// Empirical two-sided tail of the spreading time around its mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub r: u32,
    /// Fraction of trials with T >= mean + r.
    pub upper_freq: f64,
    /// Fraction of trials with T <= mean - r.
    pub lower_freq: f64,
}

/// Tail table plus a log-linear decay fit over rows with enough hits. The
/// fitted rate is an empirical surrogate for the exponential deviation
/// bounds, whose constants are existential; no claim is made about matching
/// any particular constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailTable {
    pub mean_t: f64,
    pub rows: Vec<TailRow>,
    pub fitted_decay_rate: f64,
    pub fit_r_squared: f64,
    pub fit_points: usize,
}

impl TailTable {
    fn from_times(times: &[f64]) -> Self {
        let trials = times.len() as f64;
        let (mean, _) = mean_sd(times);
        let r_max = times
            .iter()
            .map(|t| (t - mean).abs().ceil() as u32)
            .max()
            .unwrap_or(0);
        let mut rows = Vec::with_capacity(r_max as usize + 1);
        let mut fit_xs = Vec::new();
        let mut fit_ys = Vec::new();
        for r in 0..=r_max {
            let upper = times.iter().filter(|&&t| t >= mean + r as f64).count() as u64;
            let lower = times.iter().filter(|&&t| t <= mean - r as f64).count() as u64;
            rows.push(TailRow {
                r,
                upper_freq: upper as f64 / trials,
                lower_freq: lower as f64 / trials,
            });
            // For r >= 1 the two sides are disjoint, so their sum is the
            // two-sided deviation frequency P[|T - mean| >= r].
            if r >= 1 && upper + lower >= TAIL_FIT_MIN_HITS {
                fit_xs.push(r as f64);
                fit_ys.push(((upper + lower) as f64 / trials).ln());
            }
        }
        let fit = fit_line(&fit_xs, &fit_ys);
        TailTable {
            mean_t: mean,
            rows,
            fitted_decay_rate: fit.map_or(0.0, |f| -f.slope),
            fit_r_squared: fit.map_or(0.0, |f| f.r_squared),
            fit_points: fit.map_or(0, |f| f.points),
        }
    }

    /// Plot-ready CSV: r, upper_freq, lower_freq.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["r", "upper_freq", "lower_freq"])?;
        for row in &self.rows {
            w.write_record(&[
                row.r.to_string(),
                row.upper_freq.to_string(),
                row.lower_freq.to_string(),
            ])?;
        }
        w.flush()
    }
}

/// Run `trials` independent spreads in parallel, ordered by trial index.
/// Trial i uses `seed.with_stream_offset(i)`. The first failure (by trial
/// index) is reported, independent of scheduling.
pub fn run_trials(
    params: &ModelParams,
    kind: ProtocolKind,
    trials: u64,
    seed: SeedSpec,
    max_rounds: u64,
) -> Result<Vec<SpreadTrace>> {
    let results: Vec<Result<SpreadTrace>> = (0..trials)
        .into_par_iter()
        .map(|i| run_to_completion(params, kind, seed.with_stream_offset(i), max_rounds))
        .collect();
    results.into_iter().collect()
}

/// Estimate the mean spreading time and its empirical tail.
pub fn estimate_spreading_time(
    params: &ModelParams,
    kind: ProtocolKind,
    trials: u64,
    seed: SeedSpec,
) -> Result<(EstimateReport, TailTable)> {
    if trials < MIN_TRIALS {
        return Err(Error::InvalidParams(format!(
            "need at least {MIN_TRIALS} trials, got {trials}"
        )));
    }
    let traces = run_trials(params, kind, trials, seed, default_max_rounds(params))?;
    let times: Vec<f64> = traces.iter().map(|t| t.total_rounds() as f64).collect();
    Ok(summarize_times(&times, trials, seed))
}

/// Mean/SE report and tail table for an already-collected vector of
/// spreading times (ordered by trial index).
pub fn summarize_times(times: &[f64], trials: u64, seed: SeedSpec) -> (EstimateReport, TailTable) {
    let (mean, se) = mean_se(times);
    (EstimateReport::new(mean, se, trials, seed), TailTable::from_times(times))
}

/// Run `samples` independent single rounds from the canonical informed set
/// {0..k-1} and map each outcome, ordered by sample index.
fn single_rounds<T: Send>(
    params: &ModelParams,
    kind: ProtocolKind,
    k: usize,
    samples: u64,
    seed: SeedSpec,
    map: impl Fn(&RoundOutcome) -> T + Sync,
) -> Vec<T> {
    let n = params.n();
    assert!(k >= 1 && k < n, "single-round experiments need 1 <= k < n");
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = seed.with_stream_offset(i).rng();
            let g = sample_round_graph(params, &mut rng);
            let mut state = SpreadState::with_informed(n, 0..k).expect("valid informed set");
            let outcome = run_round(&mut state, kind, &g, &mut rng).expect("k < n");
            map(&outcome)
        })
        .collect()
}

/// Estimate the per-node success probability p_k from single rounds.
///
/// Every uninformed node is an unbiased probe by exchangeability, so the
/// per-round estimate is newly/(n-k); the standard error is computed over
/// per-round means.
pub fn estimate_pk(
    params: &ModelParams,
    kind: ProtocolKind,
    k: usize,
    samples: u64,
    seed: SeedSpec,
) -> EstimateReport {
    let u = (params.n() - k) as f64;
    let per_round = single_rounds(params, kind, k, samples, seed, |outcome| {
        outcome.newly_informed.len() as f64 / u
    });
    let (mean, se) = mean_se(&per_round);
    EstimateReport::new(mean, se, samples, seed)
}

/// Estimate the covariance of the success indicators of the two probe nodes
/// k and k+1 across single rounds.
pub fn estimate_pair_covariance(
    params: &ModelParams,
    kind: ProtocolKind,
    k: usize,
    samples: u64,
    seed: SeedSpec,
) -> Result<EstimateReport> {
    let n = params.n();
    if k > n - 2 {
        return Err(Error::InvalidParams(format!(
            "pair covariance needs two uninformed probes: k = {k} > n - 2 = {}",
            n - 2
        )));
    }
    let probe1 = k as u32;
    let probe2 = k as u32 + 1;
    let pairs = single_rounds(params, kind, k, samples, seed, |outcome| {
        let hit = |v: u32| outcome.newly_informed.binary_search(&v).is_ok();
        (hit(probe1) as u8 as f64, hit(probe2) as u8 as f64)
    });
    let m = pairs.len() as f64;
    let m1 = pairs.iter().map(|p| p.0).sum::<f64>() / m;
    let m2 = pairs.iter().map(|p| p.1).sum::<f64>() / m;
    let products: Vec<f64> = pairs.iter().map(|p| (p.0 - m1) * (p.1 - m2)).collect();
    let (mean_product, se) = mean_se(&products);
    // Product-moment estimator with the usual m/(m-1) correction.
    let cov = mean_product * m / (m - 1.0);
    Ok(EstimateReport::new(cov, se, samples, seed))
}

/// Per-round tallies of a conditional (numerator within denominator) event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
struct RoundTally {
    num: u64,
    den: u64,
}

/// Ratio estimate with cluster-robust (per-round) standard error; events
/// within one round are correlated.
fn clustered_ratio(tallies: &[RoundTally]) -> (f64, f64, u64, u64) {
    let num: u64 = tallies.iter().map(|t| t.num).sum();
    let den: u64 = tallies.iter().map(|t| t.den).sum();
    if den == 0 {
        return (0.0, 0.0, 0, 0);
    }
    let p = num as f64 / den as f64;
    let rounds = tallies.len() as f64;
    let ss: f64 = tallies
        .iter()
        .map(|t| {
            let resid = t.num as f64 - p * t.den as f64;
            resid * resid
        })
        .sum();
    let se = (ss * rounds / (rounds - 1.0)).sqrt() / den as f64;
    (p, se, num, den)
}

/// Conditional pull estimate with the event counts that back it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalPullReport {
    pub estimate: EstimateReport,
    /// Conditioning events: (round, node) pairs with pushed = true.
    pub pushed_events: u64,
    /// Events with pushed and pulled both true.
    pub pulled_too_events: u64,
}

/// Over Push&Pull single rounds, the fraction of pushed uninformed nodes
/// that also pulled — the finite-n observable of the conditional pull limit.
pub fn estimate_conditional_pull_given_push(
    params: &ModelParams,
    k: usize,
    samples: u64,
    seed: SeedSpec,
) -> Result<ConditionalPullReport> {
    let tallies = single_rounds(params, ProtocolKind::PushPull, k, samples, seed, |outcome| {
        let mut tally = RoundTally { num: 0, den: 0 };
        for y in 0..outcome.pushed.len() {
            if outcome.pushed[y] {
                tally.den += 1;
                if outcome.pulled[y] {
                    tally.num += 1;
                }
            }
        }
        tally
    });
    let (p, se, num, den) = clustered_ratio(&tallies);
    if den < MIN_CONDITIONING_EVENTS {
        return Err(Error::InsufficientConditioningEvents {
            observed: den,
            required: MIN_CONDITIONING_EVENTS,
        });
    }
    Ok(ConditionalPullReport {
        estimate: EstimateReport::new(p, se, samples, seed),
        pushed_events: den,
        pulled_too_events: num,
    })
}

/// Push/pull interference estimate: among newly informed nodes, the fraction
/// informed by a push and a pull in the same round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub estimate: EstimateReport,
    pub newly_informed_events: u64,
    pub overlap_events: u64,
}

/// Fraction of newly informed nodes per Push&Pull round with both pushed and
/// pulled true. On sparse evolving graphs this stays bounded away from zero
/// even for small informed fractions — one of the two operations is wasted.
pub fn estimate_push_pull_overlap(
    params: &ModelParams,
    k: usize,
    samples: u64,
    seed: SeedSpec,
) -> OverlapReport {
    let tallies = single_rounds(params, ProtocolKind::PushPull, k, samples, seed, |outcome| {
        let mut tally = RoundTally { num: 0, den: 0 };
        for &y in &outcome.newly_informed {
            tally.den += 1;
            if outcome.pushed[y as usize] && outcome.pulled[y as usize] {
                tally.num += 1;
            }
        }
        tally
    });
    let (p, se, num, den) = clustered_ratio(&tallies);
    OverlapReport {
        estimate: EstimateReport::new(p, se, samples, seed),
        newly_informed_events: den,
        overlap_events: num,
    }
}

/// One grid point of a leading-constant fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapEntry {
    pub n: usize,
    pub mean_t: f64,
    pub std_error: f64,
    pub predicted_leading: f64,
    /// mean_t - predicted_leading; the theory says this is O(1) in n.
    pub gap: f64,
}

/// Gap sequence of measured means against the leading-order predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub protocol: ProtocolKind,
    pub a: f64,
    pub trials_per_point: u64,
    pub seed: SeedSpec,
    pub entries: Vec<GapEntry>,
    /// max gap - min gap across the grid.
    pub spread: f64,
}

impl GapReport {
    /// Plot-ready CSV: n, mean_t, std_error, predicted_leading, gap.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["n", "mean_t", "std_error", "predicted_leading", "gap"])?;
        for e in &self.entries {
            w.write_record(&[
                e.n.to_string(),
                e.mean_t.to_string(),
                e.std_error.to_string(),
                e.predicted_leading.to_string(),
                e.gap.to_string(),
            ])?;
        }
        w.flush()
    }
}

/// Measure mean T across an n grid and report gaps against the leading-term
/// predictor of `kind`. A bounded spread is the observable form of the
/// additive O(1) constant; the grid must be sorted, have at least three
/// points and span at least two octaves.
pub fn fit_leading_constant(
    kind: ProtocolKind,
    a: f64,
    n_grid: &[usize],
    trials: u64,
    seed: SeedSpec,
) -> Result<GapReport> {
    if n_grid.len() < 3 || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParams("n grid must be sorted with at least 3 points".into()));
    }
    if (n_grid[n_grid.len() - 1] as f64) < 4.0 * n_grid[0] as f64 {
        return Err(Error::InvalidParams("n grid must span at least two octaves".into()));
    }
    let mut entries = Vec::with_capacity(n_grid.len());
    for (idx, &n) in n_grid.iter().enumerate() {
        let params = ModelParams::new(n, a)?;
        let point_seed = seed.with_stream_offset(idx as u64 * trials);
        let (report, _) = estimate_spreading_time(&params, kind, trials, point_seed)?;
        let predicted = predict_expected_time(kind, &params).total_leading;
        entries.push(GapEntry {
            n,
            mean_t: report.point,
            std_error: report.std_error,
            predicted_leading: predicted,
            gap: report.point - predicted,
        });
    }
    let spread = entries.iter().map(|e| e.gap).fold(f64::NEG_INFINITY, f64::max)
        - entries.iter().map(|e| e.gap).fold(f64::INFINITY, f64::min);
    Ok(GapReport { protocol: kind, a, trials_per_point: trials, seed, entries, spread })
}
