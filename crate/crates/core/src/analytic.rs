//! Exact in-play outcome probabilities for the independent-scoring match.
//!
//! Each team's goals over the remaining minutes are a sum of independent
//! per-minute Bernoulli draws. [`RemainderModel::Bernoulli`] evaluates that
//! sum exactly (a Poisson-binomial law built by backward recursion over the
//! minutes); [`RemainderModel::Poisson`] replaces it with a Poisson variable
//! of the same mean. Outcome probabilities then follow from convolving the two
//! teams' remaining-goal distributions against the current score.

use crate::domain::{
    replay_state, EventKind, MatchState, MatchTimeline, MinuteWeights, ProbTriple, ScoreProbPair,
    ScoringRates, Side, MINUTES,
};
use crate::error::{Error, Result};

/// Scoring-rate factor for a team that has received a red card.
pub const RED_CARD_OWN_FACTOR: f64 = 2.0 / 3.0;
/// Scoring-rate factor for the opponent of a team with a red card.
pub const RED_CARD_OPPONENT_FACTOR: f64 = 1.2;

/// Poisson tail mass below which the convolution is truncated.
const POISSON_TAIL: f64 = 1e-12;
/// Bernoulli-sum probabilities below this are dropped from the tail.
const PMF_FLOOR: f64 = 1e-18;
/// Leads in `-TABLE_LEAD..=TABLE_LEAD` are precomputed per regime.
const TABLE_LEAD: i32 = 12;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum RemainderModel {
    /// Exact distribution of the remaining per-minute Bernoulli draws.
    #[default]
    Bernoulli,
    /// Poisson with the same mean as the remaining draws.
    Poisson,
}

/// Multiplier on a team's scoring rate given dismissals on both sides.
pub fn card_multiplier(own_cards: u32, opponent_cards: u32) -> f64 {
    RED_CARD_OWN_FACTOR.powi(own_cards as i32)
        * RED_CARD_OPPONENT_FACTOR.powi(opponent_cards as i32)
}

/// Per-minute goal probabilities for both teams.
///
/// `base_*` entries are `λ · w_t` without dismissals. `per_minute_*` entries
/// are the realized schedule: a red card at minute `m` scales minutes
/// `m+1..=90`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSchedule {
    base_home: [f64; MINUTES],
    base_away: [f64; MINUTES],
    per_minute_home: [f64; MINUTES],
    per_minute_away: [f64; MINUTES],
}

impl RateSchedule {
    /// Realized probabilities for minutes 1..=90.
    pub fn per_minute(&self, side: Side) -> &[f64; MINUTES] {
        match side {
            Side::Home => &self.per_minute_home,
            Side::Away => &self.per_minute_away,
        }
    }

    /// Probabilities for minutes 1..=90 ignoring dismissals.
    pub fn base(&self, side: Side) -> &[f64; MINUTES] {
        match side {
            Side::Home => &self.base_home,
            Side::Away => &self.base_away,
        }
    }

    /// Probability that `side` scores in `minute` when `red_home`/`red_away`
    /// dismissals are in force.
    pub fn projected(&self, side: Side, minute: usize, red_home: u32, red_away: u32) -> f64 {
        let (own, opp) = match side {
            Side::Home => (red_home, red_away),
            Side::Away => (red_away, red_home),
        };
        self.base(side)[minute - 1] * card_multiplier(own, opp)
    }

    fn check_regime(&self, from_minute: usize, red_home: u32, red_away: u32) -> Result<()> {
        for side in [Side::Home, Side::Away] {
            for minute in from_minute..=MINUTES {
                let value = self.projected(side, minute, red_home, red_away);
                if value > 1.0 {
                    return Err(Error::ScheduleOverflow {
                        side,
                        minute: minute as u8,
                        value,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Spreads the match rates over the minutes and applies dismissals.
///
/// Every regime the timeline passes through is validated over its remaining
/// minutes, since in-play probabilities project the current regime forward.
pub fn build_schedule(
    rates: ScoringRates,
    weights: &MinuteWeights,
    timeline: &MatchTimeline,
) -> Result<RateSchedule> {
    let mut schedule = RateSchedule {
        base_home: [0.0; MINUTES],
        base_away: [0.0; MINUTES],
        per_minute_home: [0.0; MINUTES],
        per_minute_away: [0.0; MINUTES],
    };
    for (i, w) in weights.as_slice().iter().enumerate() {
        schedule.base_home[i] = rates.home * w;
        schedule.base_away[i] = rates.away * w;
    }
    schedule.check_regime(1, 0, 0)?;

    let cards: Vec<_> = timeline
        .events()
        .iter()
        .filter(|e| e.kind == EventKind::RedCard)
        .collect();
    let (mut red_home, mut red_away) = (0, 0);
    let mut next_card = 0;
    for minute in 1..=MINUTES {
        // cards shown before this minute are in force
        while next_card < cards.len() && (cards[next_card].minute as usize) < minute {
            match cards[next_card].side {
                Side::Home => red_home += 1,
                Side::Away => red_away += 1,
            }
            next_card += 1;
            schedule.check_regime(minute, red_home, red_away)?;
        }
        schedule.per_minute_home[minute - 1] =
            schedule.projected(Side::Home, minute, red_home, red_away);
        schedule.per_minute_away[minute - 1] =
            schedule.projected(Side::Away, minute, red_home, red_away);
    }
    Ok(schedule)
}

/// Expected goals per team over minutes `minute+1..=90` of the realized schedule.
pub fn remaining_means(schedule: &RateSchedule, minute: u8) -> (f64, f64) {
    let from = (minute as usize).min(MINUTES);
    (
        schedule.per_minute_home[from..].iter().sum(),
        schedule.per_minute_away[from..].iter().sum(),
    )
}

/// Truncated Poisson probability mass function.
pub fn poisson_pmf(mean: f64) -> Vec<f64> {
    if mean <= 0.0 {
        return vec![1.0];
    }
    let mut pmf = Vec::with_capacity(48);
    let mut p = (-mean).exp();
    let mut cumulative = 0.0;
    let mut k = 0usize;
    loop {
        pmf.push(p);
        cumulative += p;
        k += 1;
        if (k as f64 > mean && 1.0 - cumulative < POISSON_TAIL) || k > 400 {
            break;
        }
        p *= mean / k as f64;
    }
    pmf
}

/// Distribution of the number of successes among independent Bernoulli draws.
pub fn bernoulli_sum_pmf(probs: &[f64]) -> Vec<f64> {
    let mut pmf = vec![1.0];
    for &p in probs {
        add_bernoulli(&mut pmf, p);
    }
    pmf
}

fn add_bernoulli(pmf: &mut Vec<f64>, p: f64) {
    if p <= 0.0 {
        return;
    }
    pmf.push(0.0);
    for k in (1..pmf.len()).rev() {
        pmf[k] = pmf[k] * (1.0 - p) + pmf[k - 1] * p;
    }
    pmf[0] *= 1.0 - p;
    while pmf.len() > 1 && *pmf.last().unwrap() < PMF_FLOOR {
        pmf.pop();
    }
}

/// Outcome probabilities when the home side leads by `lead` and the
/// remaining goals follow `home` and `away` (independent pmfs).
pub fn outcome_from_pmfs(lead: i32, home: &[f64], away: &[f64]) -> ProbTriple {
    // survival[k] = P(home remaining >= k)
    let mut survival = vec![0.0; home.len() + 1];
    for k in (0..home.len()).rev() {
        survival[k] = survival[k + 1] + home[k];
    }
    let total_home = survival[0];
    let sf = |k: i64| -> f64 {
        if k <= 0 {
            total_home
        } else if k as usize >= survival.len() {
            0.0
        } else {
            survival[k as usize]
        }
    };
    let lead = lead as i64;
    let (mut p_home, mut p_draw, mut p_away) = (0.0, 0.0, 0.0);
    for (j, &pa) in away.iter().enumerate() {
        if pa == 0.0 {
            continue;
        }
        // home side wins iff home_remaining > j - lead
        let tie = j as i64 - lead;
        let at_least_tie = sf(tie);
        let beyond_tie = sf(tie + 1);
        p_home += pa * beyond_tie;
        p_draw += pa * (at_least_tie - beyond_tie);
        p_away += pa * (total_home - at_least_tie);
    }
    let total = p_home + p_draw + p_away;
    ProbTriple {
        home: p_home / total,
        draw: p_draw / total,
        away: p_away / total,
    }
}

/// Remaining-goal distributions for one team after every minute 0..=90.
#[derive(Debug, Clone)]
struct RemainingGoals {
    after: Vec<Vec<f64>>,
}

impl RemainingGoals {
    fn build(per_minute: &[f64; MINUTES], model: RemainderModel) -> Self {
        let mut after = vec![Vec::new(); MINUTES + 1];
        match model {
            RemainderModel::Bernoulli => {
                let mut pmf = vec![1.0];
                after[MINUTES] = pmf.clone();
                for minute in (0..MINUTES).rev() {
                    add_bernoulli(&mut pmf, per_minute[minute]);
                    after[minute] = pmf.clone();
                }
            }
            RemainderModel::Poisson => {
                let mut mean = 0.0;
                after[MINUTES] = vec![1.0];
                for minute in (0..MINUTES).rev() {
                    mean += per_minute[minute];
                    after[minute] = poisson_pmf(mean);
                }
            }
        }
        Self { after }
    }
}

/// In-play probabilities under one fixed set of dismissals.
///
/// Outcome triples for leads within ±12 are precomputed for every minute;
/// larger leads fall back to a direct convolution.
#[derive(Debug, Clone)]
pub struct Regime {
    red_home: u32,
    red_away: u32,
    home: [f64; MINUTES],
    away: [f64; MINUTES],
    remaining_home: RemainingGoals,
    remaining_away: RemainingGoals,
    table: Vec<ProbTriple>,
}

impl Regime {
    pub fn new(
        schedule: &RateSchedule,
        red_home: u32,
        red_away: u32,
        model: RemainderModel,
    ) -> Result<Self> {
        schedule.check_regime(1, red_home, red_away)?;
        let mut home = [0.0; MINUTES];
        let mut away = [0.0; MINUTES];
        for minute in 1..=MINUTES {
            home[minute - 1] = schedule.projected(Side::Home, minute, red_home, red_away);
            away[minute - 1] = schedule.projected(Side::Away, minute, red_home, red_away);
        }
        let remaining_home = RemainingGoals::build(&home, model);
        let remaining_away = RemainingGoals::build(&away, model);
        let width = (2 * TABLE_LEAD + 1) as usize;
        let mut table = Vec::with_capacity((MINUTES + 1) * width);
        for minute in 0..=MINUTES {
            for lead in -TABLE_LEAD..=TABLE_LEAD {
                table.push(outcome_from_pmfs(
                    lead,
                    &remaining_home.after[minute],
                    &remaining_away.after[minute],
                ));
            }
        }
        Ok(Self {
            red_home,
            red_away,
            home,
            away,
            remaining_home,
            remaining_away,
            table,
        })
    }

    /// Regime for a card-free match.
    pub fn without_cards(
        rates: ScoringRates,
        weights: &MinuteWeights,
        model: RemainderModel,
    ) -> Result<Self> {
        let schedule = build_schedule(rates, weights, &MatchTimeline::empty())?;
        Self::new(&schedule, 0, 0, model)
    }

    pub fn red_cards(&self) -> (u32, u32) {
        (self.red_home, self.red_away)
    }

    /// Outcome probabilities after `minute` with the home side leading by `lead`.
    pub fn outcome(&self, minute: u8, lead: i32) -> ProbTriple {
        let minute = minute as usize;
        if lead.abs() <= TABLE_LEAD {
            let width = (2 * TABLE_LEAD + 1) as usize;
            self.table[minute * width + (lead + TABLE_LEAD) as usize]
        } else {
            outcome_from_pmfs(
                lead,
                &self.remaining_home.after[minute],
                &self.remaining_away.after[minute],
            )
        }
    }

    /// Scoring probabilities for `minute` (1..=90).
    pub fn scoring(&self, minute: u8) -> ScoreProbPair {
        let i = minute as usize - 1;
        ScoreProbPair {
            home: self.home[i],
            away: self.away[i],
        }
    }

    /// Expected remaining goals after `minute`.
    pub fn remaining_means(&self, minute: u8) -> (f64, f64) {
        let from = minute as usize;
        (
            self.home[from..].iter().sum(),
            self.away[from..].iter().sum(),
        )
    }
}

/// Regimes for one match, built on demand as dismissals accumulate.
#[derive(Debug, Clone)]
pub struct InPlayModel {
    schedule: RateSchedule,
    model: RemainderModel,
    regimes: Vec<Regime>,
}

impl InPlayModel {
    pub fn new(
        rates: ScoringRates,
        weights: &MinuteWeights,
        timeline: &MatchTimeline,
        model: RemainderModel,
    ) -> Result<Self> {
        let schedule = build_schedule(rates, weights, timeline)?;
        Ok(Self {
            schedule,
            model,
            regimes: Vec::new(),
        })
    }

    pub fn schedule(&self) -> &RateSchedule {
        &self.schedule
    }

    pub fn regime(&mut self, red_home: u32, red_away: u32) -> Result<&Regime> {
        let idx = match self
            .regimes
            .iter()
            .position(|r| r.red_cards() == (red_home, red_away))
        {
            Some(i) => i,
            None => {
                self.regimes
                    .push(Regime::new(&self.schedule, red_home, red_away, self.model)?);
                self.regimes.len() - 1
            }
        };
        Ok(&self.regimes[idx])
    }
}

/// Outcome probabilities from `state`, projecting the dismissals in force
/// over the remaining minutes.
pub fn outcome_probs(state: &MatchState, schedule: &RateSchedule) -> ProbTriple {
    outcome_probs_with(state, schedule, RemainderModel::default())
}

pub fn outcome_probs_with(
    state: &MatchState,
    schedule: &RateSchedule,
    model: RemainderModel,
) -> ProbTriple {
    let remaining = |side| -> Vec<f64> {
        let probs: Vec<f64> = ((state.minute as usize + 1)..=MINUTES)
            .map(|m| schedule.projected(side, m, state.red_cards_home, state.red_cards_away))
            .collect();
        match model {
            RemainderModel::Bernoulli => bernoulli_sum_pmf(&probs),
            RemainderModel::Poisson => poisson_pmf(probs.iter().sum()),
        }
    };
    outcome_from_pmfs(state.lead(), &remaining(Side::Home), &remaining(Side::Away))
}

/// Probabilities that each side scores in the minute after `state`.
pub fn next_minute_scoring(state: &MatchState, schedule: &RateSchedule) -> Result<ScoreProbPair> {
    if state.minute as usize >= MINUTES {
        return Err(Error::NoNextMinute(state.minute));
    }
    let minute = state.minute as usize + 1;
    Ok(ScoreProbPair {
        home: schedule.projected(
            Side::Home,
            minute,
            state.red_cards_home,
            state.red_cards_away,
        ),
        away: schedule.projected(
            Side::Away,
            minute,
            state.red_cards_home,
            state.red_cards_away,
        ),
    })
}

/// Outcome probabilities after every minute 0..=90 of an observed match.
pub fn prob_path(
    timeline: &MatchTimeline,
    rates: ScoringRates,
    weights: &MinuteWeights,
) -> Result<Vec<ProbTriple>> {
    prob_path_with(timeline, rates, weights, RemainderModel::default())
}

pub fn prob_path_with(
    timeline: &MatchTimeline,
    rates: ScoringRates,
    weights: &MinuteWeights,
    model: RemainderModel,
) -> Result<Vec<ProbTriple>> {
    let mut engine = InPlayModel::new(rates, weights, timeline, model)?;
    (0..=MINUTES as u8)
        .map(|minute| {
            let state = replay_state(timeline, minute);
            let regime = engine.regime(state.red_cards_home, state.red_cards_away)?;
            Ok(regime.outcome(minute, state.lead()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::MatchEvent;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    /// Brute-force double sum over goal counts.
    fn brute_force(lead: i32, mu_home: f64, mu_away: f64, max_goals: u32) -> [f64; 3] {
        let pois = |mu: f64, k: u32| (-mu).exp() * mu.powi(k as i32) / factorial(k);
        let mut out = [0.0; 3];
        for h in 0..=max_goals {
            for a in 0..=max_goals {
                let p = pois(mu_home, h) * pois(mu_away, a);
                let diff = lead + h as i32 - a as i32;
                out[if diff > 0 {
                    0
                } else if diff == 0 {
                    1
                } else {
                    2
                }] += p;
            }
        }
        out
    }

    fn poisson_state(mu_home: f64, mu_away: f64, lead: i32) -> ProbTriple {
        outcome_from_pmfs(lead, &poisson_pmf(mu_home), &poisson_pmf(mu_away))
    }

    #[test]
    fn uniform_schedule_and_red_cards() {
        let w = MinuteWeights::uniform();
        let s = build_schedule(
            ScoringRates::new(1.5, 1.5).unwrap(),
            &w,
            &MatchTimeline::empty(),
        )
        .unwrap();
        assert!(s
            .per_minute(Side::Home)
            .iter()
            .all(|p| (p - 1.5 / 90.0).abs() < 1e-15));
        let total: f64 = s.per_minute(Side::Home).iter().sum();
        assert_abs_diff_eq!(total, 1.5, epsilon = 1e-9);

        let tl = MatchTimeline::new(vec![MatchEvent::red_card(30, Side::Home)]).unwrap();
        let s = build_schedule(ScoringRates::new(1.5, 1.5).unwrap(), &w, &tl).unwrap();
        assert_abs_diff_eq!(s.per_minute(Side::Home)[29], 1.5 / 90.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            s.per_minute(Side::Home)[30],
            1.5 / 90.0 * 2.0 / 3.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            s.per_minute(Side::Away)[30],
            1.5 / 90.0 * 1.2,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            s.per_minute(Side::Away)[89],
            1.5 / 90.0 * 1.2,
            epsilon = 1e-15
        );

        let s = build_schedule(
            ScoringRates::new(0.0, 1.0).unwrap(),
            &w,
            &MatchTimeline::empty(),
        )
        .unwrap();
        assert!(s.per_minute(Side::Home).iter().all(|&p| p == 0.0));
    }

    #[test]
    fn cards_compound() {
        let w = MinuteWeights::uniform();
        let tl = MatchTimeline::new(vec![
            MatchEvent::red_card(10, Side::Away),
            MatchEvent::red_card(20, Side::Away),
        ])
        .unwrap();
        let s = build_schedule(ScoringRates::new(0.9, 0.9).unwrap(), &w, &tl).unwrap();
        assert_abs_diff_eq!(s.per_minute(Side::Home)[20], 0.01 * 1.44, epsilon = 1e-15);
        assert_abs_diff_eq!(
            s.per_minute(Side::Away)[20],
            0.01 * 4.0 / 9.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn overflowing_schedule_names_minute() {
        let mut counts = vec![0.0; 90];
        counts[89] = 1.0;
        let w = MinuteWeights::from_counts(&counts).unwrap();
        let err = build_schedule(
            ScoringRates::new(2.0, 0.5).unwrap(),
            &w,
            &MatchTimeline::empty(),
        )
        .unwrap_err();
        assert!(matches!(
            err,
            Error::ScheduleOverflow {
                minute: 90,
                side: Side::Home,
                ..
            }
        ));

        // fine without cards, overflows once an away dismissal boosts home
        let err = build_schedule(
            ScoringRates::new(0.9, 0.5).unwrap(),
            &w,
            &MatchTimeline::new(vec![MatchEvent::red_card(40, Side::Away)]).unwrap(),
        )
        .unwrap_err();
        assert!(matches!(
            err,
            Error::ScheduleOverflow {
                side: Side::Home,
                ..
            }
        ));
    }

    #[test]
    fn remaining_means_sum_the_tail() {
        let w = MinuteWeights::uniform();
        let s = build_schedule(
            ScoringRates::new(2.0, 1.0).unwrap(),
            &w,
            &MatchTimeline::empty(),
        )
        .unwrap();
        let (h, a) = remaining_means(&s, 0);
        assert_abs_diff_eq!(h, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a, 1.0, epsilon = 1e-12);
        assert_eq!(remaining_means(&s, 90), (0.0, 0.0));

        let w = crate::ingest::reference_weights();
        let s = build_schedule(
            ScoringRates::new(1.8, 1.0).unwrap(),
            &w,
            &MatchTimeline::empty(),
        )
        .unwrap();
        let oracle: f64 = (46..=90).map(|m| 1.8 * w.as_slice()[m - 1]).sum();
        assert_abs_diff_eq!(remaining_means(&s, 45).0, oracle, epsilon = 1e-12);
    }

    #[test]
    fn poisson_outcomes_match_brute_force() {
        let p = poisson_state(0.0, 0.0, 1);
        assert_eq!(p, ProbTriple::HOME_WIN);

        let p = poisson_state(0.5, 0.5, 0);
        let oracle = brute_force(0, 0.5, 0.5, 30);
        // e^{-1} * sum 0.25^k / (k!)^2
        let series: f64 = (0..20)
            .map(|k| 0.25f64.powi(k) / factorial(k as u32).powi(2))
            .sum::<f64>()
            * (-1.0f64).exp();
        assert_abs_diff_eq!(p.draw, series, epsilon = 1e-12);
        assert_abs_diff_eq!(p.draw, oracle[1], epsilon = 1e-12);
        assert_abs_diff_eq!(p.draw, 0.4658, epsilon = 1e-4);
        assert_abs_diff_eq!(p.home, p.away, epsilon = 1e-15);
        assert_abs_diff_eq!(p.home, 0.2671, epsilon = 1e-4);

        let p = poisson_state(2.0, 0.0, 0);
        assert_eq!(p.away, 0.0);
        assert_abs_diff_eq!(p.draw, (-2.0f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(p.home, 1.0 - (-2.0f64).exp(), epsilon = 1e-12);
    }

    #[test]
    fn poisson_truncation_is_tight() {
        for &(mh, ma) in &[(0.2, 8.0), (8.0, 8.0), (3.3, 1.1), (8.0, 0.05)] {
            for lead in -3..=3 {
                let p = poisson_state(mh, ma, lead);
                let oracle = brute_force(lead, mh, ma, 100);
                for (x, y) in p.as_array().iter().zip(oracle) {
                    assert!((x - y).abs() < 1e-10, "{mh} {ma} {lead}: {x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn bernoulli_sum_matches_enumeration() {
        let probs = [0.1, 0.3, 0.05, 0.6];
        let pmf = bernoulli_sum_pmf(&probs);
        let mut oracle = [0.0; 5];
        for mask in 0u32..16 {
            let p: f64 = (0..4)
                .map(|i| {
                    if mask & (1 << i) != 0 {
                        probs[i]
                    } else {
                        1.0 - probs[i]
                    }
                })
                .product();
            oracle[mask.count_ones() as usize] += p;
        }
        for (a, b) in pmf.iter().zip(oracle) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn path_endpoints() {
        let w = MinuteWeights::uniform();
        let zero = ScoringRates::new(0.0, 0.0).unwrap();
        let path = prob_path(&MatchTimeline::empty(), zero, &w).unwrap();
        assert_eq!(path.len(), 91);
        assert!(path.iter().all(|p| *p == ProbTriple::DRAW));

        let tl = MatchTimeline::new(vec![
            MatchEvent::goal(12, Side::Home),
            MatchEvent::goal(40, Side::Away),
            MatchEvent::goal(88, Side::Home),
        ])
        .unwrap();
        let path = prob_path(&tl, ScoringRates::new(1.4, 1.1).unwrap(), &w).unwrap();
        assert_eq!(path[90], ProbTriple::HOME_WIN);

        let path = prob_path(
            &MatchTimeline::empty(),
            ScoringRates::balanced(0.5).unwrap(),
            &w,
        )
        .unwrap();
        assert_abs_diff_eq!(path[0].draw, 0.4658, epsilon = 1e-3);
        assert_abs_diff_eq!(path[0].home, 0.2671, epsilon = 1e-3);
        let poisson = prob_path_with(
            &MatchTimeline::empty(),
            ScoringRates::balanced(0.5).unwrap(),
            &w,
            RemainderModel::Poisson,
        )
        .unwrap();
        assert_abs_diff_eq!(poisson[0].draw, 0.4658, epsilon = 1e-4);
    }

    #[test]
    fn next_minute_lookup() {
        let w = MinuteWeights::uniform();
        let tl = MatchTimeline::new(vec![MatchEvent::red_card(30, Side::Home)]).unwrap();
        let s = build_schedule(ScoringRates::new(1.5, 0.0).unwrap(), &w, &tl).unwrap();
        let at10 = next_minute_scoring(&replay_state(&tl, 10), &s).unwrap();
        assert_abs_diff_eq!(at10.home, 1.5 / 90.0, epsilon = 1e-15);
        assert_eq!(at10.away, 0.0);
        let at30 = next_minute_scoring(&replay_state(&tl, 30), &s).unwrap();
        assert_abs_diff_eq!(at30.home, 1.5 / 90.0 * 2.0 / 3.0, epsilon = 1e-15);
        assert!(matches!(
            next_minute_scoring(&replay_state(&tl, 90), &s),
            Err(Error::NoNextMinute(90))
        ));
    }

    #[test]
    fn in_play_probabilities_ignore_future_cards() {
        let w = MinuteWeights::uniform();
        let rates = ScoringRates::new(1.3, 1.3).unwrap();
        let tl = MatchTimeline::new(vec![MatchEvent::red_card(60, Side::Home)]).unwrap();
        let with_card = prob_path(&tl, rates, &w).unwrap();
        let without = prob_path(&MatchTimeline::empty(), rates, &w).unwrap();
        assert_eq!(with_card[..60], without[..60]);
        assert!(with_card[60].away > without[60].away);
    }

    #[test]
    fn martingale_identity_holds_exactly() {
        let w = crate::ingest::reference_weights();
        let tl = MatchTimeline::new(vec![MatchEvent::red_card(20, Side::Away)]).unwrap();
        let schedule = build_schedule(ScoringRates::new(2.1, 1.2).unwrap(), &w, &tl).unwrap();
        for minute in [0u8, 25, 44, 70, 89] {
            for lead in -2..=2 {
                let state = MatchState {
                    minute,
                    score_home: (lead.max(0)) as u32,
                    score_away: (-lead).max(0) as u32,
                    red_cards_home: 0,
                    red_cards_away: 1,
                };
                let now = outcome_probs(&state, &schedule);
                let next = next_minute_scoring(&state, &schedule).unwrap();
                let after = |dl: i32| {
                    let s = MatchState {
                        minute: minute + 1,
                        score_home: (lead + dl).max(0) as u32,
                        score_away: (-(lead + dl)).max(0) as u32,
                        ..state
                    };
                    outcome_probs(&s, &schedule)
                };
                let (up, down, level) = (after(1), after(-1), after(0));
                let w_up = next.home * (1.0 - next.away);
                let w_down = next.away * (1.0 - next.home);
                let w_level = 1.0 - w_up - w_down;
                for (k, x) in now.as_array().iter().enumerate() {
                    let expected = w_up * up.as_array()[k]
                        + w_down * down.as_array()[k]
                        + w_level * level.as_array()[k];
                    assert!(
                        (x - expected).abs() < 1e-12,
                        "minute {minute} lead {lead}: {x} vs {expected}"
                    );
                }
            }
        }
    }

    #[test]
    fn regime_table_matches_direct_computation() {
        let w = crate::ingest::reference_weights();
        let rates = ScoringRates::new(2.4, 0.7).unwrap();
        let schedule = build_schedule(rates, &w, &MatchTimeline::empty()).unwrap();
        let regime = Regime::new(&schedule, 1, 0, RemainderModel::Bernoulli).unwrap();
        for minute in [0u8, 33, 90] {
            for lead in [-15, -3, 0, 2, 14] {
                let state = MatchState {
                    minute,
                    score_home: lead.max(0) as u32,
                    score_away: (-lead).max(0) as u32,
                    red_cards_home: 1,
                    red_cards_away: 0,
                };
                let direct = outcome_probs(&state, &schedule);
                let fast = regime.outcome(minute, lead);
                assert!(direct.squared_distance(&fast) < 1e-24);
            }
        }
    }

    proptest! {
        #[test]
        fn swap_symmetry(h in 0.0f64..5.0, a in 0.0f64..5.0, goals in prop::collection::vec((1u8..=90, any::<bool>()), 0..6)) {
            let w = MinuteWeights::uniform();
            let events = goals.iter().map(|&(m, home)| MatchEvent::goal(m, if home { Side::Home } else { Side::Away })).collect();
            let tl = MatchTimeline::new(events).unwrap();
            let rates = ScoringRates::new(h, a).unwrap();
            let p = prob_path(&tl, rates, &w).unwrap();
            let q = prob_path(&tl.mirrored(), rates.mirrored(), &w).unwrap();
            for (x, y) in p.iter().zip(&q) {
                prop_assert!((x.home - y.away).abs() < 1e-12);
                prop_assert!((x.draw - y.draw).abs() < 1e-12);
                prop_assert!((x.home + x.draw + x.away - 1.0).abs() < 1e-9);
                prop_assert!(x.as_array().iter().all(|v| (0.0..=1.0).contains(v)));
            }
        }

        #[test]
        fn decided_when_nothing_remains(lead in -5i32..=5) {
            let p = outcome_from_pmfs(lead, &[1.0], &[1.0]);
            prop_assert!(p.is_vertex());
            prop_assert_eq!(p, ProbTriple::decided(lead));
        }
    }
}
