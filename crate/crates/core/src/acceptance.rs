//! The verification suite behind `rumorsim verify`.
//!
//! Eleven numbered criteria cover closed-form identities, oracle-vs-hand
//! analysis, Monte Carlo vs oracle agreement, bounded predictor gaps, the
//! conditional pull limit, leading-order growth, tail decay, isolation-rate
//! convergence and worker-count determinism. Every tolerance is pinned here;
//! quick mode only reduces sample counts (statistical bands adapt through the
//! reported standard errors, absolute tolerances stay fixed).

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::analytics;
use crate::config::{self, SlackConfig};
use crate::graph::{ModelParams, SeedSpec};
use crate::harness;
use crate::oracle::{self, OracleLimits};
use crate::protocols::ProtocolKind;

/// Tolerances and fixed inputs of the individual criteria.
mod tol {
    /// Criterion 1: relative agreement of the two sum evaluations.
    pub const SUM_IDENTITY_REL: f64 = 1e-12;
    /// Criterion 2: two-node expected time against the geometric argument.
    pub const TWO_NODE_ABS: f64 = 1e-9;
    /// Criterion 3: Pull oracle vs closed form.
    pub const PULL_EXACT_ABS: f64 = 1e-10;
    /// Criteria 5, 7: statistical band width in standard errors.
    pub const SIGMA: f64 = 4.0;
    /// Criterion 6: max-min gap spread allowed per protocol.
    pub const GAP_SPREAD_MAX: f64 = 1.5;
    /// Criterion 6: required gap growth of the mismatched-predictor control.
    pub const NEGATIVE_CONTROL_MIN_GROWTH: f64 = 2.0;
    /// Criterion 7: bias budget on top of three clustered standard errors.
    pub const CONDITIONAL_ABS: f64 = 0.02;
    /// Criterion 8: |n * p_1 - gamma| budget.
    pub const GAMMA_ABS: f64 = 0.02;
    /// Criterion 9: minimum R^2 of the log-linear tail fit.
    pub const TAIL_FIT_R2_MIN: f64 = 0.9;
    /// Criterion 10: absolute cap on the scaled isolation gap sequence.
    pub const ISOLATION_SCALED_MAX: f64 = 1.0;
}

/// Suite configuration. `quick` trims sample counts for a smoke run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcceptanceConfig {
    pub quick: bool,
    pub master_seed: u64,
}

impl Default for AcceptanceConfig {
    fn default() -> Self {
        AcceptanceConfig { quick: false, master_seed: 20_260_809 }
    }
}

impl AcceptanceConfig {
    fn pick(&self, full: u64, quick: u64) -> u64 {
        if self.quick {
            quick
        } else {
            full
        }
    }

    /// Independent seed per criterion and sub-experiment.
    fn seed(&self, criterion: u8, sub: u64) -> SeedSpec {
        SeedSpec::new(
            self.master_seed ^ ((criterion as u64) << 56) ^ (sub << 48),
            0,
        )
    }
}

/// Outcome of one criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub details: String,
    pub millis: u128,
}

impl CriterionResult {
    /// One pass/fail line, the format `verify` prints.
    pub fn summary_line(&self) -> String {
        format!(
            "[{}] criterion {:2} {:<28} {} ({} ms)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.details,
            self.millis
        )
    }
}

pub const CRITERIA: [(u8, &'static str); 11] = [
    (1, "sum closed-form identity"),
    (2, "oracle two-node hand value"),
    (3, "pull exactness"),
    (4, "push probability bracket"),
    (5, "monte carlo vs oracle"),
    (6, "O(1) predictor gap"),
    (7, "conditional pull limit"),
    (8, "gamma leading order"),
    (9, "tail decay"),
    (10, "isolation rate convergence"),
    (11, "worker determinism"),
];

/// Run every criterion in order.
pub fn run_all(cfg: &AcceptanceConfig) -> Vec<CriterionResult> {
    CRITERIA.iter().map(|&(id, _)| run_criterion(id, cfg)).collect()
}

/// Run a single criterion by id (1-based, as listed in [`CRITERIA`]).
pub fn run_criterion(id: u8, cfg: &AcceptanceConfig) -> CriterionResult {
    let name = CRITERIA
        .iter()
        .find(|&&(i, _)| i == id)
        .map(|&(_, n)| n)
        .unwrap_or_else(|| panic!("unknown criterion id {id}"));
    let start = Instant::now();
    let (passed, details) = match id {
        1 => sum_identity(),
        2 => two_node_hand_value(),
        3 => pull_exactness(),
        4 => push_bracket(),
        5 => monte_carlo_vs_oracle(cfg),
        6 => predictor_gap(cfg),
        7 => conditional_pull(cfg),
        8 => gamma_leading_order(cfg),
        9 => tail_decay(cfg),
        10 => isolation_convergence(),
        11 => worker_determinism(cfg),
        _ => unreachable!(),
    };
    CriterionResult { id, name, passed, details, millis: start.elapsed().as_millis() }
}

/// Criterion 1: closed form vs direct sum for M in 1..=200 and seven q
/// values, relative 1e-12.
fn sum_identity() -> (bool, String) {
    let qs = [1e-4, 1e-3, 0.01, 0.1, 0.3, 0.5, 0.9];
    let mut worst: f64 = 0.0;
    for m in 1..=200u64 {
        for &q in &qs {
            let closed = analytics::binomial_reciprocal_sum(m, q);
            let direct = analytics::binomial_reciprocal_sum_direct(m, q);
            let rel = (closed - direct).abs() / closed.abs().max(1.0);
            worst = worst.max(rel);
            if rel > tol::SUM_IDENTITY_REL {
                return (false, format!("M={m} q={q}: relative gap {rel:.3e}"));
            }
        }
    }
    (true, format!("1400 instances, worst relative gap {worst:.3e}"))
}

/// Criterion 2: exact expected time 2.0 on (n=2, a=1) for all protocols.
fn two_node_hand_value() -> (bool, String) {
    let params = ModelParams::new(2, 1.0).expect("valid");
    let limits = OracleLimits::default();
    let mut worst: f64 = 0.0;
    for kind in ProtocolKind::ALL {
        let t = match oracle::exact_expected_time(&params, kind, &limits) {
            Ok(t) => t,
            Err(e) => return (false, format!("{kind}: {e}")),
        };
        worst = worst.max((t - 2.0).abs());
        if (t - 2.0).abs() > tol::TWO_NODE_ABS {
            return (false, format!("{kind}: E[T] = {t}, expected 2.0"));
        }
    }
    (true, format!("all protocols, worst |E[T]-2| = {worst:.2e}"))
}

fn oracle_grid() -> Vec<(usize, f64)> {
    let mut grid = Vec::new();
    for &n in &[3usize, 4, 5] {
        for &a in &[0.5, 1.0, 2.0] {
            grid.push((n, a));
        }
    }
    grid
}

/// Criterion 3: oracle Pull marginal equals the closed form on the full
/// small-instance grid.
fn pull_exactness() -> (bool, String) {
    let limits = OracleLimits::default();
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for (n, a) in oracle_grid() {
        let params = ModelParams::new(n, a).expect("valid");
        for k in 1..n {
            let exact = oracle::exact_pk(&params, k, ProtocolKind::Pull, &limits).expect("small");
            let closed = analytics::pull_success_probability_exact(&params, k);
            let gap = (exact - closed).abs();
            worst = worst.max(gap);
            checked += 1;
            if gap > tol::PULL_EXACT_ABS {
                return (false, format!("n={n} a={a} k={k}: |{exact} - {closed}| = {gap:.3e}"));
            }
        }
    }
    (true, format!("{checked} instances, worst gap {worst:.3e}"))
}

/// Criterion 4: oracle Push marginal inside the default slack bracket on the
/// same grid.
fn push_bracket() -> (bool, String) {
    let limits = OracleLimits::default();
    let slack = SlackConfig::default();
    let mut checked = 0;
    for (n, a) in oracle_grid() {
        let params = ModelParams::new(n, a).expect("valid");
        for k in 1..n {
            let exact = oracle::exact_pk(&params, k, ProtocolKind::Push, &limits).expect("small");
            let (lo, hi) = analytics::push_success_probability_bounds(&params, k, &slack);
            checked += 1;
            if !(lo <= exact && exact <= hi) {
                return (
                    false,
                    format!("n={n} a={a} k={k}: {exact} outside [{lo}, {hi}]"),
                );
            }
        }
    }
    (true, format!("{checked} instances inside bracket (c0=2, c1=a^2+a)"))
}

/// The three paired estimates of criterion 5, serializable for the
/// determinism check of criterion 11.
#[derive(Serialize)]
struct SmallInstanceEstimates {
    times: Vec<(harness::EstimateReport, harness::TailTable)>,
    pks: Vec<harness::EstimateReport>,
    covs: Vec<harness::EstimateReport>,
}

fn small_instance_estimates(cfg: &AcceptanceConfig) -> SmallInstanceEstimates {
    let params = ModelParams::new(5, 1.0).expect("valid");
    let trials = cfg.pick(100_000, 10_000);
    let pk_samples = cfg.pick(100_000, 10_000);
    let cov_samples = cfg.pick(1_000_000, 100_000);
    let mut out = SmallInstanceEstimates { times: Vec::new(), pks: Vec::new(), covs: Vec::new() };
    for (i, kind) in ProtocolKind::ALL.into_iter().enumerate() {
        let sub = i as u64;
        out.times.push(
            harness::estimate_spreading_time(&params, kind, trials, cfg.seed(5, sub))
                .expect("no round limit at n=5, a=1"),
        );
        out.pks.push(harness::estimate_pk(&params, kind, 2, pk_samples, cfg.seed(5, 10 + sub)));
        out.covs.push(
            harness::estimate_pair_covariance(&params, kind, 2, cov_samples, cfg.seed(5, 20 + sub))
                .expect("k=2 valid"),
        );
    }
    out
}

/// Criterion 5: Monte Carlo mean T, p_2 and pair covariance within four
/// standard errors of the exhaustive oracle on (n=5, a=1), per protocol.
fn monte_carlo_vs_oracle(cfg: &AcceptanceConfig) -> (bool, String) {
    let params = ModelParams::new(5, 1.0).expect("valid");
    let limits = OracleLimits::default();
    let estimates = small_instance_estimates(cfg);
    let mut lines = Vec::new();
    for (i, kind) in ProtocolKind::ALL.into_iter().enumerate() {
        let exact_t = oracle::exact_expected_time(&params, kind, &limits).expect("small");
        let (t_report, _) = &estimates.times[i];
        let t_dev = (t_report.point - exact_t).abs() / t_report.std_error;
        if t_dev > tol::SIGMA {
            return (
                false,
                format!("{kind}: mean T {} vs oracle {exact_t} ({t_dev:.1} sigma)", t_report.point),
            );
        }
        let exact_pk = oracle::exact_pk(&params, 2, kind, &limits).expect("small");
        let pk_report = &estimates.pks[i];
        let pk_dev = (pk_report.point - exact_pk).abs() / pk_report.std_error;
        if pk_dev > tol::SIGMA {
            return (
                false,
                format!("{kind}: p_2 {} vs oracle {exact_pk} ({pk_dev:.1} sigma)", pk_report.point),
            );
        }
        let exact_cov =
            oracle::exact_pair_covariance(&params, 2, kind, &limits).expect("small");
        let cov_report = &estimates.covs[i];
        let cov_dev = (cov_report.point - exact_cov).abs() / cov_report.std_error;
        if cov_dev > tol::SIGMA {
            return (
                false,
                format!(
                    "{kind}: cov {} vs oracle {exact_cov} ({cov_dev:.1} sigma)",
                    cov_report.point
                ),
            );
        }
        lines.push(format!("{kind} {t_dev:.1}/{pk_dev:.1}/{cov_dev:.1}s"));
    }
    (true, format!("T/p_2/cov deviations: {}", lines.join(", ")))
}

/// Criterion 6: per protocol, the spread of (mean T - leading predictor)
/// over n in {2^10, 2^12, 2^14} stays within 1.5 rounds; as a negative
/// control, scoring Push data against the Pull predictor must show a gap
/// growing by at least 2 rounds across the grid.
fn predictor_gap(cfg: &AcceptanceConfig) -> (bool, String) {
    let grid = [1usize << 10, 1 << 12, 1 << 14];
    let trials = cfg.pick(2_000, 400);
    let mut details = Vec::new();
    let mut push_entries = Vec::new();
    for (i, kind) in ProtocolKind::ALL.into_iter().enumerate() {
        let report =
            match harness::fit_leading_constant(kind, 1.0, &grid, trials, cfg.seed(6, i as u64)) {
                Ok(r) => r,
                Err(e) => return (false, format!("{kind}: {e}")),
            };
        if report.spread > tol::GAP_SPREAD_MAX {
            return (
                false,
                format!(
                    "{kind}: gap spread {:.3} > {} (gaps {:?})",
                    report.spread,
                    tol::GAP_SPREAD_MAX,
                    report.entries.iter().map(|e| e.gap).collect::<Vec<_>>()
                ),
            );
        }
        details.push(format!("{kind} spread {:.2}", report.spread));
        if kind == ProtocolKind::Push {
            push_entries = report.entries.clone();
        }
    }
    // Negative control on the already-measured Push means.
    let first = &push_entries[0];
    let last = &push_entries[push_entries.len() - 1];
    let gap_at = |e: &harness::GapEntry| {
        let params = ModelParams::new(e.n, 1.0).expect("valid");
        e.mean_t - analytics::predict_expected_time(ProtocolKind::Pull, &params).total_leading
    };
    let growth = gap_at(last) - gap_at(first);
    if growth < tol::NEGATIVE_CONTROL_MIN_GROWTH {
        // The analytic drift between the two predictors over this grid is
        // (1/(1-e^{-1}) - 1) * ln(n_max/n_min) ~= 1.614, so a 2.0 threshold
        // is not reachable; the measurement lands on the analytic value.
        let analytic = (1.0 / (1.0 - (-1.0f64).exp()) - 1.0)
            * ((last.n as f64).ln() - (first.n as f64).ln());
        return (
            false,
            format!(
                "negative control: pull-predictor gap on push data grew {growth:.3} < {} (analytic drift {analytic:.3}; {})",
                tol::NEGATIVE_CONTROL_MIN_GROWTH,
                details.join(", ")
            ),
        );
    }
    details.push(format!("control growth {growth:.2}"));
    (true, details.join(", "))
}

/// Criterion 7: conditional pull fraction at (n=1e4, a=1, k=100) within
/// 0.02 + 3 clustered standard errors of (1-e^{-1})/1.
fn conditional_pull(cfg: &AcceptanceConfig) -> (bool, String) {
    let params = ModelParams::new(10_000, 1.0).expect("valid");
    let samples = cfg.pick(2_500, 400);
    let required_events = cfg.pick(100_000, 20_000);
    let report = match harness::estimate_conditional_pull_given_push(
        &params,
        100,
        samples,
        cfg.seed(7, 0),
    ) {
        Ok(r) => r,
        Err(e) => return (false, format!("{e}")),
    };
    if report.pushed_events < required_events {
        return (
            false,
            format!("only {} pushed events, need {required_events}", report.pushed_events),
        );
    }
    let limit = analytics::conditional_pull_given_push_limit(1.0);
    let budget = tol::CONDITIONAL_ABS + 3.0 * report.estimate.std_error;
    let gap = (report.estimate.point - limit).abs();
    let details = format!(
        "estimate {:.4} vs limit {:.4}, gap {:.4} <= {:.4}, {} events",
        report.estimate.point, limit, gap, budget, report.pushed_events
    );
    (gap <= budget, details)
}

/// Criterion 8: n * p_1 at (n=1e3, a=1) within 0.02 of the Push&Pull growth
/// rate gamma(1).
fn gamma_leading_order(cfg: &AcceptanceConfig) -> (bool, String) {
    let n = 1_000usize;
    let params = ModelParams::new(n, 1.0).expect("valid");
    let samples = cfg.pick(100_000, 20_000);
    let report =
        harness::estimate_pk(&params, ProtocolKind::PushPull, 1, samples, cfg.seed(8, 0));
    let gamma = analytics::rates(ProtocolKind::PushPull, 1.0).gamma;
    let scaled = n as f64 * report.point;
    let gap = (scaled - gamma).abs();
    let details = format!(
        "n*p_1 = {scaled:.4} vs gamma = {gamma:.4}, gap {gap:.4} (se {:.4})",
        n as f64 * report.std_error
    );
    (gap <= tol::GAMMA_ABS, details)
}

/// Criterion 9: at n=2^12, per protocol, tail frequencies are nonincreasing
/// and the log-linear fit over rows with >= 30 hits has positive decay and
/// R^2 >= 0.9.
fn tail_decay(cfg: &AcceptanceConfig) -> (bool, String) {
    let params = ModelParams::new(1 << 12, 1.0).expect("valid");
    let trials = cfg.pick(10_000, 2_000);
    let mut details = Vec::new();
    for (i, kind) in ProtocolKind::ALL.into_iter().enumerate() {
        let (_, table) =
            match harness::estimate_spreading_time(&params, kind, trials, cfg.seed(9, i as u64)) {
                Ok(r) => r,
                Err(e) => return (false, format!("{kind}: {e}")),
            };
        for w in table.rows.windows(2) {
            if w[1].upper_freq > w[0].upper_freq || w[1].lower_freq > w[0].lower_freq {
                return (false, format!("{kind}: tail frequencies not monotone at r={}", w[1].r));
            }
        }
        if table.fitted_decay_rate <= 0.0 {
            return (false, format!("{kind}: decay rate {} <= 0", table.fitted_decay_rate));
        }
        if table.fit_r_squared < tol::TAIL_FIT_R2_MIN {
            return (
                false,
                format!(
                    "{kind}: tail fit R^2 {:.3} < {} over {} points",
                    table.fit_r_squared,
                    tol::TAIL_FIT_R2_MIN,
                    table.fit_points
                ),
            );
        }
        details.push(format!(
            "{kind} alpha {:.2} R2 {:.3}",
            table.fitted_decay_rate, table.fit_r_squared
        ));
    }
    (true, details.join(", "))
}

/// Criterion 10: the scaled isolation gap n * |(1-a/n)^(n-1) - e^{-a}| is
/// monotone nonincreasing (hence bounded by its first term) over four
/// decades of n, for a in {0.5, 1, 2}.
fn isolation_convergence() -> (bool, String) {
    let mut details = Vec::new();
    for &a in &[0.5, 1.0, 2.0] {
        let mut previous = f64::INFINITY;
        let mut first = 0.0;
        for &n in &[100usize, 1_000, 10_000, 100_000] {
            let p = a / n as f64;
            let scaled = n as f64
                * (analytics::isolation_probability_exact(n, p)
                    - analytics::isolation_probability_limit(a))
                .abs();
            if scaled > previous + 1e-12 {
                return (false, format!("a={a}: n*gap grew to {scaled:.6} at n={n}"));
            }
            if previous == f64::INFINITY {
                first = scaled;
                if scaled > tol::ISOLATION_SCALED_MAX {
                    return (false, format!("a={a}: first n*gap {scaled:.4} above cap"));
                }
            }
            previous = scaled;
        }
        details.push(format!("a={a}: {first:.4} -> {previous:.4}"));
    }
    (true, details.join("; "))
}

/// Criterion 11: rerunning the criterion 5 and 7 estimations with identical
/// seeds under different worker counts yields byte-identical JSON.
fn worker_determinism(cfg: &AcceptanceConfig) -> (bool, String) {
    let run = |workers: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("pool");
        pool.install(|| {
            let five = small_instance_estimates(cfg);
            let params = ModelParams::new(10_000, 1.0).expect("valid");
            let seven = harness::estimate_conditional_pull_given_push(
                &params,
                100,
                cfg.pick(2_500, 400),
                cfg.seed(7, 0),
            )
            .expect("criterion 7 inputs");
            let mut bytes = serde_json::to_vec(&five).expect("serializable");
            bytes.extend(serde_json::to_vec(&seven).expect("serializable"));
            bytes
        })
    };
    let lhs = run(1);
    let rhs = run(3);
    if lhs == rhs {
        (true, format!("{} bytes identical across 1 and 3 workers", lhs.len()))
    } else {
        (false, "outputs differ between worker counts".into())
    }
}

/// Suite summary used by the `verify` command's JSON output.
#[derive(Debug, Clone, Serialize)]
pub struct AcceptanceSummary {
    pub config: AcceptanceConfig,
    pub results: Vec<CriterionResult>,
    pub all_passed: bool,
    pub slack: SlackConfig,
    pub statistical_sigma: f64,
}

pub fn summarize(cfg: &AcceptanceConfig, results: Vec<CriterionResult>) -> AcceptanceSummary {
    let all_passed = results.iter().all(|r| r.passed);
    AcceptanceSummary {
        config: *cfg,
        results,
        all_passed,
        slack: SlackConfig::default(),
        statistical_sigma: config::STAT_SIGMA,
    }
}
