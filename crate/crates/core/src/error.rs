use std::path::PathBuf;

use thiserror::Error;

use crate::domain::Side;

#[derive(Debug, Error)]
pub enum Error {
    #[error("scoring rate {value} for {side} is outside [0, {max}]")]
    RateOutOfRange { side: Side, value: f64, max: f64 },

    #[error("invalid minute weights: {0}")]
    InvalidWeights(String),

    #[error("invalid minute {minute}{}", added.map(|a| format!("+{a}")).unwrap_or_default())]
    InvalidMinute { minute: u32, added: Option<u32> },

    #[error("probabilities ({0}, {1}, {2}) are not on the simplex")]
    NotOnSimplex(f64, f64, f64),

    #[error("per-minute scoring probability {value:.6} for {side} at minute {minute} exceeds 1")]
    ScheduleOverflow { side: Side, minute: u8, value: f64 },

    #[error("no next minute after minute {0}")]
    NoNextMinute(u8),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid odds for {match_id}: {reason}")]
    InvalidOdds { match_id: String, reason: String },

    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },

    #[error("non-positive outcome values for matches: {}", .0.join(", "))]
    NonPositiveOutcome(Vec<String>),

    #[error("singular design matrix; collinear columns: {}", .0.join(", "))]
    SingularDesign(Vec<String>),

    #[error("{}:{line}: {reason}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        reason: String,
    },

    #[error("{}: {reason}", path.display())]
    Format { path: PathBuf, reason: String },

    #[error("no goals recorded for league {0}; use uniform weights instead")]
    NoGoals(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
