use crate::graph::SeedSpec;

/// Errors produced by simulation, oracle and estimation entry points.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Model or experiment parameters violate a documented invariant.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// `run_round` was called on a state where every node is already informed.
    #[error("all {n} nodes already informed; no round to run")]
    AllInformed { n: usize },

    /// A spread did not complete within the round budget. Carries the seed of
    /// the offending run so it can be replayed.
    #[error("spread incomplete after {max_rounds} rounds (master_seed={}, stream_id={})", seed.master_seed, seed.stream_id)]
    RoundLimitExceeded { seed: SeedSpec, max_rounds: u64 },

    /// Exhaustive enumeration was requested for an instance above the cap.
    #[error("exact oracle limited to n <= {max_n}, got n = {n}")]
    OracleTooLarge { n: usize, max_n: usize },

    /// A transition row has no forward mass, so expected-time back-substitution
    /// would divide by zero. Only possible for p = 0.
    #[error("informed count {k} cannot progress (self-transition probability 1)")]
    NonProgressing { k: usize },

    /// Too few conditioning events were observed for a conditional estimate.
    #[error("only {observed} conditioning events observed, need at least {required}; increase k or samples")]
    InsufficientConditioningEvents { observed: u64, required: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
