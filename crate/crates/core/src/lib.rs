//! Rumor spreading on evolving random graphs.
//!
//! Simulates the Push, Pull and Push&Pull protocols where every synchronous
//! round runs on a freshly sampled Erdős–Rényi graph G(n, a/n), and verifies
//! the closed-form theory of that setting three ways:
//!
//! * [`analytics`] — exact per-round success probabilities, growth/shrink
//!   rates, leading-order expected-time predictors and growth/shrinking
//!   condition diagnostics;
//! * [`oracle`] — exhaustive enumeration of all labeled graphs and contact
//!   choices for n <= 6, yielding the exact informed-count Markov chain,
//!   expected spreading times, per-node success probabilities and pair
//!   covariances;
//! * [`harness`] — seeded, reproducible Monte Carlo estimation of spreading
//!   times, single-round probabilities, covariances, conditional pull events
//!   and push/pull interference.
//!
//! The [`acceptance`] module bundles the verification suite the `rumorsim
//! verify` command runs.

pub mod acceptance;
pub mod analytics;
pub mod config;
pub mod error;
pub mod graph;
pub mod harness;
pub mod oracle;
pub mod protocols;
pub mod stats;

pub use error::{Error, Result};
pub use graph::{ModelParams, RoundGraph, SeedSpec};
pub use protocols::{ProtocolKind, SpreadTrace};
