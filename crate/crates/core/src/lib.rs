//! Match excitement from a Poisson scoring model.
//!
//! Given pre-match scoring rates and a minute-level goal-timing profile, the
//! crate computes in-play outcome probabilities (exactly, or by simulation),
//! per-match suspense and surprise, benchmark ranges from simulated matches,
//! rate calibration from betting odds, and the statistics used to compare
//! observed leagues against the benchmark.
//!
//! The `parallel` feature (on by default) runs grid simulation and Monte Carlo
//! rollouts on rayon; without it everything runs sequentially with identical
//! results.

pub mod analysis;
pub mod analytic;
pub mod benchmark;
pub mod calibration;
pub mod domain;
pub mod error;
pub mod ingest;
pub mod mc;
pub mod metrics;
pub mod par;
pub mod pipeline;
pub mod report;
pub mod stats;

pub use analysis::MatchRecord;
pub use domain::{
    MatchEvent, MatchExcitement, MatchState, MatchTimeline, MinuteWeights, ProbTriple,
    RngSeedPolicy, ScoringRates, Side,
};
pub use error::{Error, Result};
