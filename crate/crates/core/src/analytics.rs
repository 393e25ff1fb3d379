//! Closed forms for per-round success probabilities, growth/shrink rates,
//! leading-order spreading time predictors and the growth/shrinking condition
//! diagnostics.
//!
//! All quantities are evaluated in double precision; direct-sum cross-check
//! evaluators use compensated summation.

use serde::{Deserialize, Serialize};

use crate::config::SlackConfig;
use crate::error::{Error, Result};
use crate::graph::ModelParams;
use crate::protocols::ProtocolKind;
use crate::stats::KahanSum;

/// Exact probability that a fixed node is isolated in one sampled round:
/// (1 - p)^(n-1).
pub fn isolation_probability_exact(n: usize, p: f64) -> f64 {
    debug_assert!(n >= 2 && (0.0..=1.0).contains(&p));
    (1.0 - p).powi(n as i32 - 1)
}

/// Large-n limit of the isolation probability at p = a/n: e^{-a}. The exact
/// value differs from this by O(1/n).
pub fn isolation_probability_limit(a: f64) -> f64 {
    (-a).exp()
}

/// Closed form (1 - (1-q)^M) / (M q) of the binomial reciprocal sum
/// `sum_{i=0}^{M-1} C(M-1, i) q^i (1-q)^{M-1-i} / (i+1)`.
///
/// At q = 0 the continuous extension 1 is returned explicitly (every term of
/// the sum collapses onto i = 0).
pub fn binomial_reciprocal_sum(m: u64, q: f64) -> f64 {
    assert!(m >= 1, "M must be at least 1");
    assert!((0.0..=1.0).contains(&q));
    if q == 0.0 || m == 1 {
        // Single-term sum is exactly 1; the closed form would lose an ulp to
        // the 1 - (1 - q) cancellation.
        return 1.0;
    }
    let mf = m as f64;
    (1.0 - (1.0 - q).powf(mf)) / (mf * q)
}

/// Direct-summation evaluator of the same sum, for cross-checking the closed
/// form. Terms follow the binomial pmf recurrence; compensated summation
/// keeps twelve digits over the documented domain (M <= ~10^3).
pub fn binomial_reciprocal_sum_direct(m: u64, q: f64) -> f64 {
    assert!(m >= 1, "M must be at least 1");
    assert!((0.0..=1.0).contains(&q));
    if q == 0.0 {
        return 1.0;
    }
    if q == 1.0 {
        // Only the i = M-1 term survives.
        return 1.0 / m as f64;
    }
    let trials = (m - 1) as f64;
    let mut term = (1.0 - q).powf(trials); // pmf at i = 0
    let mut acc = KahanSum::default();
    for i in 0..m {
        acc.add(term / (i + 1) as f64);
        let i_f = i as f64;
        term *= (trials - i_f) / (i_f + 1.0) * (q / (1.0 - q));
    }
    acc.value()
}

/// Exact non-asymptotic Pull success probability for a round that starts
/// with k informed nodes: (1 - (1-p)^(n-1)) * k / (n-1).
///
/// A non-isolated uninformed node's chosen neighbor is uniform over the
/// other n-1 nodes by exchangeability. k = 0 is outside the precondition and
/// returns 0 as the natural extension.
pub fn pull_success_probability_exact(params: &ModelParams, k: usize) -> f64 {
    let n = params.n();
    assert!(k <= n - 1, "k must be at most n-1");
    if k == 0 {
        return 0.0;
    }
    (1.0 - isolation_probability_exact(n, params.p())) * k as f64 / (n - 1) as f64
}

/// Probability that an uninformed node with exactly one informed neighbor
/// pulls the rumor: (1 - (1 - a/n)^((1-mu) n)) / (a (1-mu)).
///
/// `mu` is the informed fraction k/n and must make mu*n integral.
pub fn pull_given_single_informed_neighbor(params: &ModelParams, mu: f64) -> f64 {
    assert!(mu > 0.0 && mu < 1.0, "mu must lie in (0,1)");
    let n = params.n() as f64;
    debug_assert!(
        ((mu * n).round() - mu * n).abs() < 1e-9,
        "mu * n must be integral"
    );
    let a = params.a();
    (1.0 - (1.0 - a / n).powf((1.0 - mu) * n)) / (a * (1.0 - mu))
}

/// mu -> 0, n -> infinity limit of the probability that a pushed node also
/// pulls: (1 - e^{-a}) / a.
pub fn conditional_pull_given_push_limit(a: f64) -> f64 {
    assert!(a > 0.0);
    (1.0 - (-a).exp()) / a
}

/// Bracket for the exact Push per-round success probability at k informed:
///
///   lower = mu (1-e^{-a}) (1 - (k + c0)/(2n) (1-e^{-a}))
///   upper = mu (1-e^{-a} + c1/n)
///
/// with mu = k/n and the slack constants from `slack` (defaults calibrated on
/// the n <= 5 exhaustive oracle).
pub fn push_success_probability_bounds(
    params: &ModelParams,
    k: usize,
    slack: &SlackConfig,
) -> (f64, f64) {
    let n = params.n();
    assert!((1..n).contains(&k));
    let a = params.a();
    let mu = k as f64 / n as f64;
    let q = 1.0 - (-a).exp();
    let lower = mu * q * (1.0 - (k as f64 + slack.push_lower_c0) / (2.0 * n as f64) * q);
    let upper = mu * (q + slack.c1(a) / n as f64);
    (lower.max(0.0), upper)
}

/// Growth rate gamma and shrink rate rho of a protocol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub gamma: f64,
    pub rho: f64,
}

/// Asymptotic growth/shrink rates:
///
/// * Push:      gamma = 1 - e^{-a},                        rho = 1 - e^{-a}
/// * Pull:      gamma = 1 - e^{-a},                        rho = a
/// * Push&Pull: gamma = 2(1-e^{-a}) - (1-e^{-a})^2 / a,    rho = a
pub fn rates(kind: ProtocolKind, a: f64) -> Rates {
    assert!(a > 0.0);
    let q = 1.0 - (-a).exp();
    match kind {
        ProtocolKind::Push => Rates { gamma: q, rho: q },
        ProtocolKind::Pull => Rates { gamma: q, rho: a },
        ProtocolKind::PushPull => Rates { gamma: 2.0 * q - q * q / a, rho: a },
    }
}

/// Finite-n rates for Pull, whose per-round success probability is exactly
/// closed form: gamma_n from p_k = gamma_n k/n, rho_n from the exact
/// isolation probability. The asymptotic [`rates`] drop the O(1/n) parts.
pub fn pull_rates_exact(params: &ModelParams) -> Rates {
    let n = params.n();
    let iso = isolation_probability_exact(n, params.p());
    Rates {
        gamma: (1.0 - iso) * n as f64 / (n - 1) as f64,
        rho: -iso.ln(),
    }
}

/// Leading-order expected spreading time split into its two phases. The
/// additive O(1) constant is unknown and deliberately excluded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictorResult {
    pub protocol: ProtocolKind,
    pub n: usize,
    pub a: f64,
    pub growth_rate: f64,
    pub shrink_rate: f64,
    /// log_{1+gamma}(n) rounds for the growth phase.
    pub growth_term: f64,
    /// ln(n)/rho rounds for the shrinking phase.
    pub shrink_term: f64,
    /// growth_term + shrink_term; excludes the additive O(1) constant.
    pub total_leading: f64,
}

/// Evaluate the leading-order expected-time predictor for `kind` on
/// `params`. Requires n >= 3 so both phases are meaningful.
pub fn predict_expected_time(kind: ProtocolKind, params: &ModelParams) -> PredictorResult {
    let n = params.n();
    assert!(n >= 3, "predictor needs n >= 3");
    let a = params.a();
    let r = rates(kind, a);
    let ln_n = (n as f64).ln();
    let growth_term = ln_n / (1.0 + r.gamma).ln();
    let shrink_term = ln_n / r.rho;
    PredictorResult {
        protocol: kind,
        n,
        a,
        growth_rate: r.gamma,
        shrink_rate: r.rho,
        growth_term,
        shrink_term,
        total_leading: growth_term + shrink_term,
    }
}

/// Per-k success probability / covariance readings used by the condition
/// diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousRoundStats {
    /// Informed count at round start.
    pub k: usize,
    /// Per-node success probability in that round.
    pub p_k: f64,
    /// Covariance bound between two uninformed nodes' success indicators.
    pub c_k: f64,
    /// Informed fraction k/n.
    pub mu: f64,
}

impl HomogeneousRoundStats {
    pub fn new(n: usize, k: usize, p_k: f64, c_k: f64) -> Self {
        assert!(k >= 1 && k < n);
        assert!((0.0..=1.0).contains(&p_k));
        assert!(c_k >= 0.0);
        HomogeneousRoundStats { k, p_k, c_k, mu: k as f64 / n as f64 }
    }
}

/// Phase-fraction and slack constants of the growth/shrinking conditions.
/// `a_cond`, `b_cond`, `c_cond` are the condition constants, renamed so they
/// cannot be confused with the edge parameter `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionParams {
    /// Growth phase covers k < f * n.
    pub f: f64,
    /// Shrinking phase covers u = n - k <= g * n.
    pub g: f64,
    pub a_cond: f64,
    pub b_cond: f64,
    pub c_cond: f64,
}

impl ConditionParams {
    pub fn new(f: f64, g: f64, a_cond: f64, b_cond: f64, c_cond: f64) -> Result<Self> {
        if !(0.0 < f && f < 1.0) || !(0.0 < g && g < 1.0) {
            return Err(Error::InvalidParams("phase fractions f, g must lie in (0,1)".into()));
        }
        if a_cond < 0.0 || b_cond < 0.0 || c_cond < 0.0 {
            return Err(Error::InvalidParams("condition constants must be nonnegative".into()));
        }
        Ok(ConditionParams { f, g, a_cond, b_cond, c_cond })
    }
}

/// Which time bound a condition check certifies. `Upper` pairs with the
/// p_k lower bound (fast enough growth certifies an upper time bound);
/// `Lower` pairs with the p_k upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConditionSide {
    Upper,
    Lower,
}

/// One failed pointwise inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionViolation {
    pub k: usize,
    pub quantity: String,
    pub value: f64,
    pub bound: f64,
}

/// Outcome of a condition check with all inputs echoed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub passed: bool,
    pub side: ConditionSide,
    pub rate: f64,
    pub n: usize,
    pub cond: ConditionParams,
    pub checked: usize,
    pub first_violation: Option<ConditionViolation>,
    pub warning: Option<String>,
}

/// Check the exponential growth conditions over `stats` (entries with
/// k < f*n): on the `Upper` side `p_k >= gamma mu (1 - a_cond mu - b_cond/ln n)`,
/// on the `Lower` side `p_k <= gamma mu (1 + a_cond mu + b_cond/ln n)`;
/// both sides require `c_k <= c_cond k / n^2`. Reports the first violation.
pub fn check_growth_conditions(
    n: usize,
    stats: &[HomogeneousRoundStats],
    gamma: f64,
    cond: &ConditionParams,
    side: ConditionSide,
) -> Result<ConditionReport> {
    assert!(gamma > 0.0);
    if side == ConditionSide::Upper && cond.a_cond * cond.f >= 1.0 {
        return Err(Error::InvalidParams(format!(
            "upper growth check requires a_cond * f < 1, got {}",
            cond.a_cond * cond.f
        )));
    }
    let ln_n = (n as f64).ln();
    let mut checked = 0;
    let mut first_violation = None;
    for s in stats {
        if (s.k as f64) >= cond.f * n as f64 {
            continue;
        }
        checked += 1;
        let mu = s.k as f64 / n as f64;
        let p_bound = match side {
            ConditionSide::Upper => gamma * mu * (1.0 - cond.a_cond * mu - cond.b_cond / ln_n),
            ConditionSide::Lower => gamma * mu * (1.0 + cond.a_cond * mu + cond.b_cond / ln_n),
        };
        let p_ok = match side {
            ConditionSide::Upper => s.p_k >= p_bound,
            ConditionSide::Lower => s.p_k <= p_bound,
        };
        if !p_ok {
            first_violation = Some(ConditionViolation {
                k: s.k,
                quantity: "p_k".into(),
                value: s.p_k,
                bound: p_bound,
            });
            break;
        }
        let c_bound = cond.c_cond * s.k as f64 / (n as f64 * n as f64);
        if s.c_k > c_bound {
            first_violation = Some(ConditionViolation {
                k: s.k,
                quantity: "c_k".into(),
                value: s.c_k,
                bound: c_bound,
            });
            break;
        }
    }
    let warning = (checked == 0).then(|| "no stats below f*n; check is vacuous".to_string());
    Ok(ConditionReport {
        passed: first_violation.is_none(),
        side,
        rate: gamma,
        n,
        cond: *cond,
        checked,
        first_violation,
        warning,
    })
}

/// Check the exponential shrinking conditions over `stats` (entries with
/// u = n - k <= g*n): on the `Upper` side `1 - p_{n-u} <= e^{-rho} + a_cond u/n`
/// (additionally requiring `e^{-rho} + a_cond g < 1`), on the `Lower` side
/// `1 - p_{n-u} >= e^{-rho} - a_cond u/n`; both sides require `c_k <= c_cond/u`.
pub fn check_shrink_conditions(
    n: usize,
    stats: &[HomogeneousRoundStats],
    rho: f64,
    cond: &ConditionParams,
    side: ConditionSide,
) -> Result<ConditionReport> {
    assert!(rho > 0.0);
    let survival = (-rho).exp();
    if side == ConditionSide::Upper && survival + cond.a_cond * cond.g >= 1.0 {
        return Err(Error::InvalidParams(format!(
            "upper shrink check requires e^-rho + a_cond * g < 1, got {}",
            survival + cond.a_cond * cond.g
        )));
    }
    let mut checked = 0;
    let mut first_violation = None;
    for s in stats {
        let u = n - s.k;
        if u == 0 || (u as f64) > cond.g * n as f64 {
            continue;
        }
        checked += 1;
        let fail = 1.0 - s.p_k;
        let bound = match side {
            ConditionSide::Upper => survival + cond.a_cond * u as f64 / n as f64,
            ConditionSide::Lower => survival - cond.a_cond * u as f64 / n as f64,
        };
        let ok = match side {
            ConditionSide::Upper => fail <= bound,
            ConditionSide::Lower => fail >= bound,
        };
        if !ok {
            first_violation = Some(ConditionViolation {
                k: s.k,
                quantity: "1-p_k".into(),
                value: fail,
                bound,
            });
            break;
        }
        let c_bound = cond.c_cond / u as f64;
        if s.c_k > c_bound {
            first_violation = Some(ConditionViolation {
                k: s.k,
                quantity: "c_k".into(),
                value: s.c_k,
                bound: c_bound,
            });
            break;
        }
    }
    let warning = (checked == 0).then(|| "no stats inside the shrink window; check is vacuous".to_string());
    Ok(ConditionReport {
        passed: first_violation.is_none(),
        side,
        rate: rho,
        n,
        cond: *cond,
        checked,
        first_violation,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // High-precision reference values, frozen from 30-digit evaluation.
    const EXP_NEG_1: f64 = 0.367879441171442321;
    const PULL_LIMIT_A1: f64 = 0.632120558828557678;
    const GAMMA_PP_A1: f64 = 0.864664716763387308;
    const GAMMA_PP_LN2: f64 = 0.639326239777759148;
    const PULL_LIMIT_LN2: f64 = 0.721347520444481704;
    const ISOLATION_N100_A1: f64 = 0.369729637649726773;
    const PL_GIVEN_INF1_N1E4_MU01: f64 = 0.634789598783003908;
    const PULL_TOTAL_N1024_A1: f64 = 21.0807941453793693;
    const PUSH_TOTAL_N1024_A1: f64 = 25.1147492805597230;
    const PUSHPULL_TOTAL_N1024_A1: f64 = 18.0559787457590549;

    #[test]
    fn isolation_probability_boundaries_and_value() {
        assert_eq!(isolation_probability_exact(17, 0.0), 1.0);
        assert_eq!(isolation_probability_exact(17, 1.0), 0.0);
        let exact = isolation_probability_exact(100, 0.01);
        assert!((exact - ISOLATION_N100_A1).abs() < 1e-15);
        // Gap to the limit is O(1/n): about 0.00185 at n = 100.
        assert!((exact - isolation_probability_limit(1.0) - 0.001850196478).abs() < 1e-9);
    }

    #[test]
    fn isolation_gap_vanishes_at_rate_one_over_n() {
        for &a in &[0.5, 1.0, 2.0] {
            let mut previous = f64::INFINITY;
            for &n in &[100usize, 1_000, 10_000, 100_000] {
                let p = a / n as f64;
                let scaled = n as f64
                    * (isolation_probability_exact(n, p) - isolation_probability_limit(a)).abs();
                assert!(scaled <= previous + 1e-12, "n*gap grew at n={n}, a={a}");
                assert!(scaled < 1.0);
                previous = scaled;
            }
        }
    }

    #[test]
    fn binomial_reciprocal_sum_trivia() {
        for &q in &[0.1, 0.5, 0.9, 1.0] {
            assert_eq!(binomial_reciprocal_sum(1, q), 1.0);
            assert_eq!(binomial_reciprocal_sum_direct(1, q), 1.0);
        }
        // M=2, q=0.5: direct sum 1 * 0.5 + 0.5 * 0.5 = 0.75.
        assert!((binomial_reciprocal_sum(2, 0.5) - 0.75).abs() < 1e-15);
        assert!((binomial_reciprocal_sum_direct(2, 0.5) - 0.75).abs() < 1e-15);
        // q=0 continuous extension.
        assert_eq!(binomial_reciprocal_sum(7, 0.0), 1.0);
        assert_eq!(binomial_reciprocal_sum_direct(7, 0.0), 1.0);
    }

    #[test]
    fn closed_form_matches_direct_sum() {
        // Includes the (M=150, q=0.013) instance plus a sweep.
        for &(m, q) in &[(150u64, 0.013), (1, 0.3), (2, 0.5), (200, 0.9), (97, 1e-4)] {
            let closed = binomial_reciprocal_sum(m, q);
            let direct = binomial_reciprocal_sum_direct(m, q);
            let tol = 1e-12 * closed.abs().max(1.0);
            assert!((closed - direct).abs() <= tol, "M={m} q={q}: {closed} vs {direct}");
        }
    }

    #[test]
    fn pull_success_examples() {
        let params = ModelParams::new(3, 1.5).unwrap();
        assert_eq!(pull_success_probability_exact(&params, 0), 0.0);
        assert!((pull_success_probability_exact(&params, 1) - 0.375).abs() < 1e-15);
        // (n=5, a=1, k=2): (1 - 0.8^4) * 2/4 = 0.2952.
        let params = ModelParams::new(5, 1.0).unwrap();
        assert!((pull_success_probability_exact(&params, 2) - 0.2952).abs() < 1e-15);
    }

    #[test]
    fn single_informed_neighbor_pull_examples() {
        // p = 1 on two nodes: the forced neighbor is the informed one.
        let params = ModelParams::new(2, 2.0).unwrap();
        assert!((pull_given_single_informed_neighbor(&params, 0.5) - 1.0).abs() < 1e-15);

        let params = ModelParams::new(10_000, 1.0).unwrap();
        let v = pull_given_single_informed_neighbor(&params, 0.01);
        assert!((v - PL_GIVEN_INF1_N1E4_MU01).abs() < 1e-12);
        // Within the O(mu) + O(1/n) budget of the limit (gap is ~0.0027).
        assert!((v - PULL_LIMIT_A1).abs() < 0.005);
    }

    #[test]
    fn single_informed_neighbor_is_binomial_reciprocal_sum() {
        // Same expression, two code paths.
        for &(n, a, k) in &[(100usize, 1.0, 10usize), (1_000, 0.5, 1), (64, 2.0, 32), (10_000, 1.0, 100)] {
            let params = ModelParams::new(n, a).unwrap();
            let mu = k as f64 / n as f64;
            let via_formula = pull_given_single_informed_neighbor(&params, mu);
            let m = ((1.0 - mu) * n as f64).round() as u64;
            let via_lemma = binomial_reciprocal_sum(m, params.p());
            let tol = 1e-12 * via_formula.max(1.0);
            assert!((via_formula - via_lemma).abs() <= tol, "n={n} a={a} k={k}");
        }
    }

    #[test]
    fn conditional_pull_limit_values() {
        assert!((conditional_pull_given_push_limit(1.0) - PULL_LIMIT_A1).abs() < 1e-15);
        let ln2 = std::f64::consts::LN_2;
        assert!((conditional_pull_given_push_limit(ln2) - PULL_LIMIT_LN2).abs() < 1e-15);
        // a -> 0+ tends to 1.
        assert!((conditional_pull_given_push_limit(1e-8) - 1.0).abs() < 1e-7);
    }

    #[test]
    fn push_bounds_have_leading_order_agreement() {
        let slack = SlackConfig::default();
        // mu -> 0 with fixed a: both bounds approach mu (1 - e^{-a}).
        let params = ModelParams::new(1_000_000, 1.0).unwrap();
        let (lo, hi) = push_success_probability_bounds(&params, 1, &slack);
        let mu = 1.0 / 1e6;
        let leading = mu * (1.0 - EXP_NEG_1);
        assert!((lo / leading - 1.0).abs() < 1e-5);
        assert!((hi / leading - 1.0).abs() < 1e-5);
        assert!(lo <= hi);
    }

    #[test]
    fn rates_examples_and_identity() {
        let r = rates(ProtocolKind::PushPull, std::f64::consts::LN_2);
        assert!((r.gamma - GAMMA_PP_LN2).abs() < 1e-15);
        assert_eq!(r.rho, std::f64::consts::LN_2);

        let r = rates(ProtocolKind::Pull, 1.0);
        assert!((r.gamma - PULL_LIMIT_A1).abs() < 1e-15);
        assert_eq!(r.rho, 1.0);

        assert!((rates(ProtocolKind::PushPull, 1.0).gamma - GAMMA_PP_A1).abs() < 1e-15);

        // gamma_pushpull = (1-e^{-a}) (2 - (1-e^{-a})/a), and interference is
        // strictly positive: gamma_pushpull < 2 (1-e^{-a}).
        let mut a: f64 = 0.05;
        while a < 8.0 {
            let q = 1.0 - (-a).exp();
            let g = rates(ProtocolKind::PushPull, a).gamma;
            assert!((g - q * (2.0 - q / a)).abs() < 1e-14, "a={a}");
            assert!(g < 2.0 * q);
            assert!(g > 0.0);
            a += 0.07;
        }
    }

    #[test]
    fn predictor_examples() {
        let params = ModelParams::new(1024, 1.0).unwrap();
        let pull = predict_expected_time(ProtocolKind::Pull, &params);
        assert!((pull.total_leading - PULL_TOTAL_N1024_A1).abs() < 1e-9);
        let push = predict_expected_time(ProtocolKind::Push, &params);
        assert!((push.total_leading - PUSH_TOTAL_N1024_A1).abs() < 1e-9);
        let pp = predict_expected_time(ProtocolKind::PushPull, &params);
        assert!((pp.total_leading - PUSHPULL_TOTAL_N1024_A1).abs() < 1e-9);
        assert!((pull.growth_term - pull.total_leading + pull.shrink_term).abs() < 1e-12);
        // PushPull beats Pull for any (n, a): larger gamma, same rho.
        assert!(pp.total_leading < pull.total_leading);
    }

    #[test]
    fn predictor_is_monotone_in_n() {
        for kind in ProtocolKind::ALL {
            for &a in &[0.5, 1.0, 3.0] {
                let mut last = 0.0;
                for &n in &[8usize, 64, 512, 4096, 65536] {
                    let t = predict_expected_time(kind, &ModelParams::new(n, a).unwrap());
                    assert!(t.total_leading > last, "{kind} n={n}");
                    last = t.total_leading;
                }
            }
        }
    }

    fn exact_pull_stats(n: usize, a: f64) -> Vec<HomogeneousRoundStats> {
        let params = ModelParams::new(n, a).unwrap();
        (1..n)
            .map(|k| {
                HomogeneousRoundStats::new(
                    n,
                    k,
                    pull_success_probability_exact(&params, k),
                    0.0,
                )
            })
            .collect()
    }

    #[test]
    fn growth_conditions_pass_on_exact_pull_values() {
        let n = 1_000;
        let stats = exact_pull_stats(n, 1.0);
        let cond = ConditionParams::new(0.5, 0.5, 1.0, 1.0, 10.0).unwrap();
        let gamma = rates(ProtocolKind::Pull, 1.0).gamma;
        for side in [ConditionSide::Upper, ConditionSide::Lower] {
            let report = check_growth_conditions(n, &stats, gamma, &cond, side).unwrap();
            assert!(report.passed, "{side:?}: {:?}", report.first_violation);
            assert!(report.checked > 0);
        }
    }

    #[test]
    fn shrink_conditions_pass_on_exact_pull_values() {
        let n = 1_000;
        let stats = exact_pull_stats(n, 1.0);
        let cond = ConditionParams::new(0.5, 0.5, 1.0, 1.0, 10.0).unwrap();
        let rho = rates(ProtocolKind::Pull, 1.0).rho;
        for side in [ConditionSide::Upper, ConditionSide::Lower] {
            let report = check_shrink_conditions(n, &stats, rho, &cond, side).unwrap();
            assert!(report.passed, "{side:?}: {:?}", report.first_violation);
            assert!(report.checked > 0);
        }
    }

    #[test]
    fn fabricated_violation_is_located() {
        let n = 100;
        let mut stats = exact_pull_stats(n, 1.0);
        stats[1].p_k = 0.0; // k = 2
        let cond = ConditionParams::new(0.5, 0.5, 1.0, 1.0, 10.0).unwrap();
        let gamma = rates(ProtocolKind::Pull, 1.0).gamma;
        let report =
            check_growth_conditions(n, &stats, gamma, &cond, ConditionSide::Upper).unwrap();
        assert!(!report.passed);
        let v = report.first_violation.unwrap();
        assert_eq!(v.k, 2);
        assert_eq!(v.quantity, "p_k");
    }

    #[test]
    fn vacuous_checks_warn() {
        let cond = ConditionParams::new(0.5, 0.5, 1.0, 1.0, 10.0).unwrap();
        let report =
            check_growth_conditions(100, &[], 0.5, &cond, ConditionSide::Upper).unwrap();
        assert!(report.passed);
        assert!(report.warning.is_some());
    }

    #[test]
    fn condition_params_are_validated() {
        assert!(ConditionParams::new(0.0, 0.5, 1.0, 1.0, 1.0).is_err());
        assert!(ConditionParams::new(0.5, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(ConditionParams::new(0.5, 0.5, -1.0, 1.0, 1.0).is_err());
        // a_cond * f >= 1 rejected for upper growth checks.
        let cond = ConditionParams::new(0.5, 0.5, 2.5, 0.0, 1.0).unwrap();
        assert!(check_growth_conditions(10, &[], 0.5, &cond, ConditionSide::Upper).is_err());
        assert!(check_growth_conditions(10, &[], 0.5, &cond, ConditionSide::Lower).is_ok());
    }

    #[test]
    fn pull_exact_rates_converge_to_asymptotic() {
        let asymptotic = rates(ProtocolKind::Pull, 1.0);
        let exact = pull_rates_exact(&ModelParams::new(100_000, 1.0).unwrap());
        assert!((exact.gamma - asymptotic.gamma).abs() < 1e-4);
        assert!((exact.rho - asymptotic.rho).abs() < 1e-4);
    }
}
