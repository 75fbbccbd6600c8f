//! Shared match-model types.
//!
//! Minutes run 1..=90 with minute 0 standing for the pre-kickoff state.
//! Stoppage time is folded into minutes 45 and 90 before a timeline is built,
//! so every match has the same length.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Regulation length in minutes.
pub const MINUTES: usize = 90;

/// Operational cap on a team's scoring rate (goals per match).
pub const MAX_RATE: f64 = 8.0;

const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Home,
    Away,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Home => Side::Away,
            Side::Away => Side::Home,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Home => "home",
            Side::Away => "away",
        })
    }
}

/// Expected goals per match for each side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoringRates {
    pub home: f64,
    pub away: f64,
}

impl ScoringRates {
    pub fn new(home: f64, away: f64) -> Result<Self> {
        for (side, value) in [(Side::Home, home), (Side::Away, away)] {
            if !(0.0..=MAX_RATE).contains(&value) {
                return Err(Error::RateOutOfRange {
                    side,
                    value,
                    max: MAX_RATE,
                });
            }
        }
        Ok(Self { home, away })
    }

    pub fn balanced(rate: f64) -> Result<Self> {
        Self::new(rate, rate)
    }

    pub fn mirrored(self) -> Self {
        Self {
            home: self.away,
            away: self.home,
        }
    }

    pub fn get(&self, side: Side) -> f64 {
        match side {
            Side::Home => self.home,
            Side::Away => self.away,
        }
    }
}

/// Per-minute share of a match's goals; 90 non-negative entries summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct MinuteWeights {
    weights: [f64; MINUTES],
}

impl MinuteWeights {
    pub fn new(weights: &[f64]) -> Result<Self> {
        if weights.len() != MINUTES {
            return Err(Error::InvalidWeights(format!(
                "expected {MINUTES} entries, got {}",
                weights.len()
            )));
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w >= 0.0))
        {
            return Err(Error::InvalidWeights(format!(
                "minute {} has weight {w}",
                i + 1
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::InvalidWeights(format!(
                "weights sum to {total}, not 1"
            )));
        }
        let mut arr = [0.0; MINUTES];
        arr.copy_from_slice(weights);
        Ok(Self { weights: arr })
    }

    /// Normalizes non-negative counts (or unnormalized masses) into weights.
    pub fn from_counts(counts: &[f64]) -> Result<Self> {
        let total: f64 = counts.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidWeights("counts have no mass".into()));
        }
        let normalized: Vec<f64> = counts.iter().map(|c| c / total).collect();
        Self::new(&normalized)
    }

    pub fn uniform() -> Self {
        Self {
            weights: [1.0 / MINUTES as f64; MINUTES],
        }
    }

    /// Weight of `minute` (1..=90).
    pub fn at(&self, minute: usize) -> f64 {
        self.weights[minute - 1]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    /// Total weight of minutes strictly after `minute`.
    pub fn tail_after(&self, minute: usize) -> f64 {
        self.weights[minute.min(MINUTES)..].iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Goal,
    RedCard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchEvent {
    pub minute: u8,
    pub side: Side,
    pub kind: EventKind,
}

impl MatchEvent {
    pub fn goal(minute: u8, side: Side) -> Self {
        Self {
            minute,
            side,
            kind: EventKind::Goal,
        }
    }

    pub fn red_card(minute: u8, side: Side) -> Self {
        Self {
            minute,
            side,
            kind: EventKind::RedCard,
        }
    }
}

/// Goals and red cards in minute order (stable within a minute).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MatchTimeline {
    events: Vec<MatchEvent>,
}

impl MatchTimeline {
    pub fn new(mut events: Vec<MatchEvent>) -> Result<Self> {
        if let Some(e) = events
            .iter()
            .find(|e| e.minute == 0 || e.minute as usize > MINUTES)
        {
            return Err(Error::InvalidMinute {
                minute: e.minute as u32,
                added: None,
            });
        }
        events.sort_by_key(|e| e.minute);
        Ok(Self { events })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn events(&self) -> &[MatchEvent] {
        &self.events
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn goals(&self) -> impl Iterator<Item = &MatchEvent> {
        self.events.iter().filter(|e| e.kind == EventKind::Goal)
    }

    pub fn has_red_cards(&self) -> bool {
        self.events.iter().any(|e| e.kind == EventKind::RedCard)
    }

    /// Same events with home and away swapped.
    pub fn mirrored(&self) -> Self {
        let events = self
            .events
            .iter()
            .map(|e| MatchEvent {
                side: e.side.other(),
                ..*e
            })
            .collect();
        Self { events }
    }

    pub fn final_state(&self) -> MatchState {
        replay_state(self, MINUTES as u8)
    }
}

/// Score and dismissals after a given minute (0 = before kickoff).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MatchState {
    pub minute: u8,
    pub score_home: u32,
    pub score_away: u32,
    pub red_cards_home: u32,
    pub red_cards_away: u32,
}

impl MatchState {
    pub fn kickoff() -> Self {
        Self::default()
    }

    /// Home goals minus away goals.
    pub fn lead(&self) -> i32 {
        self.score_home as i32 - self.score_away as i32
    }

    pub fn mirrored(&self) -> Self {
        Self {
            minute: self.minute,
            score_home: self.score_away,
            score_away: self.score_home,
            red_cards_home: self.red_cards_away,
            red_cards_away: self.red_cards_home,
        }
    }
}

/// Home win, draw, away win probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbTriple {
    pub home: f64,
    pub draw: f64,
    pub away: f64,
}

impl ProbTriple {
    pub const HOME_WIN: ProbTriple = ProbTriple {
        home: 1.0,
        draw: 0.0,
        away: 0.0,
    };
    pub const DRAW: ProbTriple = ProbTriple {
        home: 0.0,
        draw: 1.0,
        away: 0.0,
    };
    pub const AWAY_WIN: ProbTriple = ProbTriple {
        home: 0.0,
        draw: 0.0,
        away: 1.0,
    };

    pub fn new(home: f64, draw: f64, away: f64) -> Result<Self> {
        let in_unit = |p: f64| (-SIMPLEX_TOL..=1.0 + SIMPLEX_TOL).contains(&p);
        if !(in_unit(home) && in_unit(draw) && in_unit(away))
            || (home + draw + away - 1.0).abs() > SIMPLEX_TOL
        {
            return Err(Error::NotOnSimplex(home, draw, away));
        }
        Ok(Self { home, draw, away })
    }

    /// Vertex for a decided match with the given home lead.
    pub fn decided(lead: i32) -> Self {
        match lead.signum() {
            1 => Self::HOME_WIN,
            0 => Self::DRAW,
            _ => Self::AWAY_WIN,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.home, self.draw, self.away]
    }

    pub fn mirrored(&self) -> Self {
        Self {
            home: self.away,
            draw: self.draw,
            away: self.home,
        }
    }

    pub fn distance(&self, other: &ProbTriple) -> f64 {
        self.squared_distance(other).sqrt()
    }

    pub fn squared_distance(&self, other: &ProbTriple) -> f64 {
        let dh = self.home - other.home;
        let dd = self.draw - other.draw;
        let da = self.away - other.away;
        dh * dh + dd * dd + da * da
    }

    pub fn is_vertex(&self) -> bool {
        self.as_array().iter().filter(|&&p| p == 1.0).count() == 1
    }
}

/// Probabilities that each side scores in a given minute. Independent events.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ScoreProbPair {
    pub home: f64,
    pub away: f64,
}

/// Per-match suspense and surprise with the trajectories behind them.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchExcitement {
    pub suspense: f64,
    pub surprise: f64,
    /// Outcome probabilities after each minute 0..=90.
    pub prob_path: Vec<ProbTriple>,
    /// Suspense contribution of minutes 1..=90.
    pub per_minute_suspense: Vec<f64>,
    /// Surprise contribution of minutes 1..=90.
    pub per_minute_surprise: Vec<f64>,
}

/// Deterministic random streams.
///
/// Every stream is a ChaCha8 generator. The 256-bit key is four consecutive
/// SplitMix64 outputs seeded with `global_seed ^ lane * 0x9E3779B97F4A7C15`,
/// and the ChaCha stream id is the match index. A `(global_seed, lane,
/// match_index)` triple therefore always yields the same sequence, no matter
/// which worker thread draws from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngSeedPolicy {
    pub global_seed: u64,
}

impl RngSeedPolicy {
    pub fn new(global_seed: u64) -> Self {
        Self { global_seed }
    }

    /// Stream used to generate match `match_index`.
    pub fn stream(&self, match_index: u64) -> ChaCha8Rng {
        self.substream(match_index, 0)
    }

    /// Independent stream for a (match, lane) pair. Lanes separate work
    /// items that share a match index, e.g. grid pairs or rollout chunks.
    pub fn substream(&self, match_index: u64, lane: u64) -> ChaCha8Rng {
        let mut state = self.global_seed ^ lane.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(match_index);
        rng
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Maps a raw event minute (with optional stoppage time) onto 1..=90.
pub fn fold_injury_time(raw_minute: u32, raw_added: u32) -> Result<u8> {
    let invalid = || Error::InvalidMinute {
        minute: raw_minute,
        added: Some(raw_added),
    };
    if raw_minute == 0 || raw_minute as usize > MINUTES {
        return Err(invalid());
    }
    if raw_added > 0 && raw_minute != 45 && raw_minute != 90 {
        return Err(invalid());
    }
    Ok(raw_minute as u8)
}

/// Goals and red cards among events at or before `minute`.
pub fn replay_state(timeline: &MatchTimeline, minute: u8) -> MatchState {
    let mut state = MatchState {
        minute,
        ..MatchState::default()
    };
    for event in timeline.events().iter().take_while(|e| e.minute <= minute) {
        let slot = match (event.kind, event.side) {
            (EventKind::Goal, Side::Home) => &mut state.score_home,
            (EventKind::Goal, Side::Away) => &mut state.score_away,
            (EventKind::RedCard, Side::Home) => &mut state.red_cards_home,
            (EventKind::RedCard, Side::Away) => &mut state.red_cards_away,
        };
        *slot += 1;
    }
    state
}
