//! Monte Carlo rollouts of the per-minute Bernoulli scoring chain.
//!
//! Each minute draws one `u64` per team (home first) and scores when the draw
//! falls below `p · 2^64`. Rollouts are split into fixed-size chunks with
//! their own seed lanes, so counts do not depend on how chunks are scheduled.
//!
//! Rollout `r` of a chunk reads its draws for minute `m` from a fixed position
//! of the chunk's stream, whatever minute it starts from. Estimates for
//! neighbouring minutes of a path therefore share their random numbers, and
//! the minute-to-minute changes are not swamped by independent noise.

use rand::RngCore;
use rand_chacha::ChaCha8Rng;

use crate::analytic::{build_schedule, RateSchedule};
use crate::domain::{
    replay_state, MatchEvent, MatchState, MatchTimeline, MinuteWeights, ProbTriple, RngSeedPolicy,
    ScoringRates, Side, MINUTES,
};
use crate::error::{Error, Result};
use crate::par;

pub const DEFAULT_REPLICATIONS: u32 = 100_000;
/// Replication count for quick runs and CI.
pub const FAST_REPLICATIONS: u32 = 10_000;

const CHUNK: u32 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub replications: u32,
    pub seed: RngSeedPolicy,
}

impl McConfig {
    pub fn new(replications: u32, seed: RngSeedPolicy) -> Result<Self> {
        if replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        Ok(Self { replications, seed })
    }

    pub fn fast(seed: RngSeedPolicy) -> Self {
        Self {
            replications: FAST_REPLICATIONS,
            seed,
        }
    }
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            replications: DEFAULT_REPLICATIONS,
            seed: RngSeedPolicy::new(0),
        }
    }
}

fn threshold(p: f64) -> u64 {
    if p <= 0.0 {
        0
    } else if p >= 1.0 {
        u64::MAX
    } else {
        (p * 18_446_744_073_709_551_616.0) as u64
    }
}

#[inline]
fn bernoulli<R: RngCore>(rng: &mut R, threshold: u64) -> bool {
    rng.next_u64() < threshold
}

/// Goals of one simulated match as per-minute bit masks (bit `m-1` = minute `m`).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimulatedMatch {
    pub home_goals: u128,
    pub away_goals: u128,
}

impl SimulatedMatch {
    /// Home lead after every minute 0..=90.
    pub fn leads(&self) -> [i32; MINUTES + 1] {
        let mut leads = [0; MINUTES + 1];
        for minute in 1..=MINUTES {
            let bit = 1u128 << (minute - 1);
            leads[minute] = leads[minute - 1] + i32::from(self.home_goals & bit != 0)
                - i32::from(self.away_goals & bit != 0);
        }
        leads
    }

    pub fn score(&self) -> (u32, u32) {
        (self.home_goals.count_ones(), self.away_goals.count_ones())
    }

    pub fn timeline(&self) -> MatchTimeline {
        let mut events = Vec::new();
        for minute in 1..=MINUTES {
            let bit = 1u128 << (minute - 1);
            if self.home_goals & bit != 0 {
                events.push(MatchEvent::goal(minute as u8, Side::Home));
            }
            if self.away_goals & bit != 0 {
                events.push(MatchEvent::goal(minute as u8, Side::Away));
            }
        }
        MatchTimeline::new(events).expect("minutes are in range")
    }
}

/// Card-free match generator with precomputed per-minute thresholds.
#[derive(Debug, Clone)]
pub struct MatchSimulator {
    home: [u64; MINUTES],
    away: [u64; MINUTES],
}

impl MatchSimulator {
    pub fn new(rates: ScoringRates, weights: &MinuteWeights) -> Result<Self> {
        let schedule = build_schedule(rates, weights, &MatchTimeline::empty())?;
        let mut home = [0; MINUTES];
        let mut away = [0; MINUTES];
        for i in 0..MINUTES {
            home[i] = threshold(schedule.per_minute(Side::Home)[i]);
            away[i] = threshold(schedule.per_minute(Side::Away)[i]);
        }
        Ok(Self { home, away })
    }

    pub fn simulate<R: RngCore>(&self, rng: &mut R) -> SimulatedMatch {
        let mut out = SimulatedMatch::default();
        for i in 0..MINUTES {
            if bernoulli(rng, self.home[i]) {
                out.home_goals |= 1 << i;
            }
            if bernoulli(rng, self.away[i]) {
                out.away_goals |= 1 << i;
            }
        }
        out
    }
}

/// Simulates one card-free match minute by minute.
pub fn simulate_match<R: RngCore>(
    rates: ScoringRates,
    weights: &MinuteWeights,
    rng: &mut R,
) -> Result<MatchTimeline> {
    Ok(MatchSimulator::new(rates, weights)?
        .simulate(rng)
        .timeline())
}

fn rollout_lane(chunk: u32) -> u64 {
    (1 << 63) | chunk as u64
}

/// 32-bit words consumed per minute (two `u64` draws).
const WORDS_PER_MINUTE: u128 = 4;

fn seek(rng: &mut ChaCha8Rng, rollout: u32, first_minute: usize) {
    let start = rollout as u128 * MINUTES as u128 + (first_minute as u128 - 1);
    rng.set_word_pos(start * WORDS_PER_MINUTE);
}

/// Outcome frequencies over `config.replications` rollouts from `state`.
///
/// The rollouts keep the dismissals in force at `state` for the rest of the
/// match. `match_index` selects the seed stream.
pub fn mc_outcome_probs(
    state: &MatchState,
    schedule: &RateSchedule,
    config: &McConfig,
    match_index: u64,
) -> ProbTriple {
    let first = state.minute as usize + 1;
    let thresholds: Vec<(u64, u64)> = (first..=MINUTES)
        .map(|m| {
            (
                threshold(schedule.projected(
                    Side::Home,
                    m,
                    state.red_cards_home,
                    state.red_cards_away,
                )),
                threshold(schedule.projected(
                    Side::Away,
                    m,
                    state.red_cards_home,
                    state.red_cards_away,
                )),
            )
        })
        .collect();
    let lead = state.lead();
    if thresholds.iter().all(|&(h, a)| h == 0 && a == 0) {
        return ProbTriple::decided(lead);
    }

    let chunks = config.replications.div_ceil(CHUNK);
    let counts = par::map_range(chunks as usize, |chunk| {
        let chunk = chunk as u32;
        let reps = CHUNK.min(config.replications - chunk * CHUNK);
        let mut rng = config.seed.substream(match_index, rollout_lane(chunk));
        let mut tally = [0u32; 3];
        for r in 0..reps {
            seek(&mut rng, r, first);
            let mut l = lead;
            for &(h, a) in &thresholds {
                l += i32::from(bernoulli(&mut rng, h)) - i32::from(bernoulli(&mut rng, a));
            }
            tally[(1 - l.signum()) as usize] += 1;
        }
        tally
    });
    let mut total = [0u64; 3];
    for tally in counts {
        for k in 0..3 {
            total[k] += tally[k] as u64;
        }
    }
    let n = config.replications as f64;
    ProbTriple {
        home: total[0] as f64 / n,
        draw: total[1] as f64 / n,
        away: total[2] as f64 / n,
    }
}

/// Conditional rollouts from every minute 0..=90 of an observed match.
pub fn mc_prob_path(
    timeline: &MatchTimeline,
    rates: ScoringRates,
    weights: &MinuteWeights,
    config: &McConfig,
    match_index: u64,
) -> Result<Vec<ProbTriple>> {
    let schedule = build_schedule(rates, weights, timeline)?;
    Ok(par::map_range(MINUTES + 1, |minute| {
        let state = replay_state(timeline, minute as u8);
        mc_outcome_probs(&state, &schedule, config, match_index)
    }))
}
