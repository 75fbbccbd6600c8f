//! Match-level surprise and suspense.
//!
//! Surprise adds up how far the outcome probabilities actually moved each
//! minute. Suspense adds up, for each minute, the root of the
//! scoring-probability-weighted squared moves that a goal by either side in
//! the following minute would cause.

use crate::analytic::{build_schedule, Regime, RemainderModel};
use crate::domain::{
    replay_state, MatchExcitement, MatchTimeline, MinuteWeights, ProbTriple, ScoreProbPair,
    ScoringRates, MINUTES,
};
use crate::error::{Error, Result};
use crate::mc::{mc_prob_path, McConfig};

/// Which engine produces the outcome-probability path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Engine {
    Analytic(RemainderModel),
    /// Rollout estimates for the path; hypothetical post-goal triples stay analytic.
    MonteCarlo(McConfig),
}

impl Default for Engine {
    fn default() -> Self {
        Engine::Analytic(RemainderModel::default())
    }
}

fn check_path(path: &[ProbTriple]) -> Result<()> {
    if path.len() != MINUTES + 1 {
        return Err(Error::Dimension(format!(
            "path has {} entries, expected {}",
            path.len(),
            MINUTES + 1
        )));
    }
    Ok(())
}

/// Total and per-minute surprise of a 91-entry probability path.
pub fn surprise(path: &[ProbTriple]) -> Result<(f64, Vec<f64>)> {
    check_path(path)?;
    let per_minute: Vec<f64> = path.windows(2).map(|w| w[1].distance(&w[0])).collect();
    Ok((per_minute.iter().sum(), per_minute))
}

/// One minute's suspense: beliefs `current` against the triples that would
/// follow a home goal (`if_home`) or an away goal (`if_away`) next minute.
#[inline]
pub fn suspense_term(
    current: &ProbTriple,
    scoring: ScoreProbPair,
    if_home: &ProbTriple,
    if_away: &ProbTriple,
) -> f64 {
    (scoring.home * if_home.squared_distance(current)
        + scoring.away * if_away.squared_distance(current))
    .sqrt()
}

/// Total and per-minute suspense.
///
/// `scoring[t-1]` and `conditional[t-1]` belong to minute `t` (1..=90): the
/// scoring probabilities for minute `t+1` and the triples after a home or an
/// away goal in minute `t+1`. Minute 90 has no successor, so callers pass zero
/// scoring probabilities there.
pub fn suspense(
    path: &[ProbTriple],
    scoring: &[ScoreProbPair],
    conditional: &[(ProbTriple, ProbTriple)],
) -> Result<(f64, Vec<f64>)> {
    check_path(path)?;
    if scoring.len() != MINUTES || conditional.len() != MINUTES {
        return Err(Error::Dimension(format!(
            "expected {MINUTES} scoring and conditional entries, got {} and {}",
            scoring.len(),
            conditional.len()
        )));
    }
    let per_minute: Vec<f64> = (1..=MINUTES)
        .map(|t| {
            let (if_home, if_away) = &conditional[t - 1];
            suspense_term(&path[t], scoring[t - 1], if_home, if_away)
        })
        .collect();
    Ok((per_minute.iter().sum(), per_minute))
}

/// Suspense and surprise of one observed (or simulated) match.
pub fn excitement(
    timeline: &MatchTimeline,
    rates: ScoringRates,
    weights: &MinuteWeights,
    engine: &Engine,
) -> Result<MatchExcitement> {
    excitement_indexed(timeline, rates, weights, engine, 0)
}

/// As [`excitement`], with `match_index` selecting the Monte Carlo seed stream.
pub fn excitement_indexed(
    timeline: &MatchTimeline,
    rates: ScoringRates,
    weights: &MinuteWeights,
    engine: &Engine,
    match_index: u64,
) -> Result<MatchExcitement> {
    let remainder = match engine {
        Engine::Analytic(model) => *model,
        Engine::MonteCarlo(_) => RemainderModel::Bernoulli,
    };
    let schedule = build_schedule(rates, weights, timeline)?;
    let states: Vec<_> = (0..=MINUTES as u8)
        .map(|m| replay_state(timeline, m))
        .collect();

    let mut regimes: Vec<Regime> = Vec::new();
    let mut regime_of = Vec::with_capacity(states.len());
    for s in &states {
        let cards = (s.red_cards_home, s.red_cards_away);
        let idx = match regimes.iter().position(|r| r.red_cards() == cards) {
            Some(i) => i,
            None => {
                regimes.push(Regime::new(&schedule, cards.0, cards.1, remainder)?);
                regimes.len() - 1
            }
        };
        regime_of.push(idx);
    }

    let prob_path = match engine {
        Engine::Analytic(_) => states
            .iter()
            .zip(&regime_of)
            .map(|(s, &r)| regimes[r].outcome(s.minute, s.lead()))
            .collect(),
        Engine::MonteCarlo(config) => mc_prob_path(timeline, rates, weights, config, match_index)?,
    };

    let mut scoring = Vec::with_capacity(MINUTES);
    let mut conditional = Vec::with_capacity(MINUTES);
    for t in 1..=MINUTES {
        if t == MINUTES {
            scoring.push(ScoreProbPair::default());
            conditional.push((prob_path[t], prob_path[t]));
            continue;
        }
        let regime = &regimes[regime_of[t]];
        let lead = states[t].lead();
        let next = (t + 1) as u8;
        scoring.push(regime.scoring(next));
        conditional.push((
            regime.outcome(next, lead + 1),
            regime.outcome(next, lead - 1),
        ));
    }

    let (surprise_total, per_minute_surprise) = surprise(&prob_path)?;
    let (suspense_total, per_minute_suspense) = suspense(&prob_path, &scoring, &conditional)?;
    Ok(MatchExcitement {
        suspense: suspense_total,
        surprise: surprise_total,
        prob_path,
        per_minute_suspense,
        per_minute_surprise,
    })
}

/// Suspense and surprise totals for a card-free match given its lead after
/// every minute. Allocation-free; used for large simulation batches.
pub fn totals_from_leads(regime: &Regime, leads: &[i32; MINUTES + 1]) -> (f64, f64) {
    let mut suspense = 0.0;
    let mut surprise = 0.0;
    let mut previous = regime.outcome(0, 0);
    for t in 1..=MINUTES {
        let lead = leads[t];
        let current = regime.outcome(t as u8, lead);
        surprise += current.distance(&previous);
        if t < MINUTES {
            let next = (t + 1) as u8;
            suspense += suspense_term(
                &current,
                regime.scoring(next),
                &regime.outcome(next, lead + 1),
                &regime.outcome(next, lead - 1),
            );
        }
        previous = current;
    }
    (suspense, surprise)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{MatchEvent, RngSeedPolicy, Side};
    use crate::mc::MatchSimulator;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn constant_path(p: ProbTriple) -> Vec<ProbTriple> {
        vec![p; MINUTES + 1]
    }

    #[test]
    fn surprise_of_simple_paths() {
        let mid = ProbTriple::new(0.5, 0.5, 0.0).unwrap();
        assert_eq!(surprise(&constant_path(mid)).unwrap().0, 0.0);

        let mut path = constant_path(mid);
        for p in path.iter_mut().skip(40) {
            *p = ProbTriple::HOME_WIN;
        }
        let (total, per_minute) = surprise(&path).unwrap();
        assert_abs_diff_eq!(total, 0.5f64.sqrt(), epsilon = 1e-15);
        assert_eq!(per_minute.iter().filter(|&&x| x > 0.0).count(), 1);
        assert!(surprise(&path[..90]).is_err());
    }

    #[test]
    fn suspense_is_zero_when_beliefs_cannot_move() {
        let path = constant_path(ProbTriple::HOME_WIN);
        let scoring = vec![
            ScoreProbPair {
                home: 0.02,
                away: 0.03
            };
            MINUTES
        ];
        let conditional = vec![(ProbTriple::HOME_WIN, ProbTriple::HOME_WIN); MINUTES];
        let (total, per_minute) = suspense(&path, &scoring, &conditional).unwrap();
        assert_eq!(total, 0.0);
        assert!(per_minute.iter().all(|&x| x == 0.0));
        assert!(suspense(&path, &scoring[..89], &conditional).is_err());
    }

    #[test]
    fn scoreless_rates_give_no_excitement() {
        let e = excitement(
            &MatchTimeline::empty(),
            ScoringRates::new(0.0, 0.0).unwrap(),
            &MinuteWeights::uniform(),
            &Engine::default(),
        )
        .unwrap();
        assert_eq!(e.suspense, 0.0);
        assert_eq!(e.surprise, 0.0);
    }

    #[test]
    fn record_invariants() {
        let w = crate::ingest::reference_weights();
        let tl = MatchTimeline::new(vec![
            MatchEvent::goal(3, Side::Home),
            MatchEvent::red_card(33, Side::Home),
            MatchEvent::goal(45, Side::Away),
            MatchEvent::goal(90, Side::Away),
        ])
        .unwrap();
        let e = excitement(
            &tl,
            ScoringRates::new(1.9, 1.3).unwrap(),
            &w,
            &Engine::default(),
        )
        .unwrap();
        assert_eq!(e.prob_path.len(), 91);
        assert_eq!(e.per_minute_suspense.len(), 90);
        assert_eq!(e.per_minute_suspense[89], 0.0);
        assert_abs_diff_eq!(
            e.suspense,
            e.per_minute_suspense.iter().sum::<f64>(),
            epsilon = 1e-9
        );
        assert_abs_diff_eq!(
            e.surprise,
            e.per_minute_surprise.iter().sum::<f64>(),
            epsilon = 1e-9
        );
        assert!(e
            .per_minute_surprise
            .iter()
            .all(|&s| (0.0..=2f64.sqrt()).contains(&s)));
        assert_eq!(e.prob_path[90], ProbTriple::AWAY_WIN);
    }

    #[test]
    fn fast_totals_match_full_record() {
        let w = crate::ingest::reference_weights();
        let rates = ScoringRates::new(1.4, 2.2).unwrap();
        let regime = Regime::without_cards(rates, &w, RemainderModel::Bernoulli).unwrap();
        let sim = MatchSimulator::new(rates, &w).unwrap();
        let policy = RngSeedPolicy::new(3);
        for i in 0..50 {
            let m = sim.simulate(&mut policy.stream(i));
            let (sus, sur) = totals_from_leads(&regime, &m.leads());
            let e = excitement(&m.timeline(), rates, &w, &Engine::default()).unwrap();
            assert_abs_diff_eq!(sus, e.suspense, epsilon = 1e-12);
            assert_abs_diff_eq!(sur, e.surprise, epsilon = 1e-12);
        }
    }

    #[test]
    fn suspense_versus_next_minute_belief_variance() {
        let w = crate::ingest::reference_weights();
        for rates in [(0.5, 0.5), (1.2, 1.5), (2.5, 2.5), (8.0, 8.0), (0.3, 4.0)] {
            let regime = Regime::without_cards(
                ScoringRates::new(rates.0, rates.1).unwrap(),
                &w,
                RemainderModel::Bernoulli,
            )
            .unwrap();
            for t in 0..MINUTES as u8 {
                for lead in -3..=3 {
                    let now = regime.outcome(t, lead);
                    let sc = regime.scoring(t + 1);
                    let (up, down, level) = (
                        regime.outcome(t + 1, lead + 1),
                        regime.outcome(t + 1, lead - 1),
                        regime.outcome(t + 1, lead),
                    );
                    let (du, dd, dl) = (
                        up.squared_distance(&now),
                        down.squared_distance(&now),
                        level.squared_distance(&now),
                    );
                    let term = suspense_term(&now, sc, &up, &down);

                    // exclusive branches: home goal, away goal, neither (a distribution
                    // only while the two scoring probabilities sum to at most one)
                    if sc.home + sc.away <= 1.0 {
                        let exclusive =
                            sc.home * du + sc.away * dd + (1.0 - sc.home - sc.away) * dl;
                        assert!(term * term <= exclusive + 1e-12);
                    }

                    // exact next-minute distribution; both scoring lands on the level triple
                    let (w_up, w_down) = (sc.home * (1.0 - sc.away), sc.away * (1.0 - sc.home));
                    let exact = w_up * du + w_down * dd + (1.0 - w_up - w_down) * dl;
                    let gap = term * term - exact;
                    let overlap = sc.home * sc.away * (du + dd) - (1.0 - w_up - w_down) * dl;
                    assert!((gap - overlap).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn monte_carlo_engine_agrees_with_analytic() {
        let w = crate::ingest::reference_weights();
        let tl = MatchTimeline::new(vec![
            MatchEvent::goal(38, Side::Home),
            MatchEvent::goal(71, Side::Away),
        ])
        .unwrap();
        let rates = ScoringRates::new(1.3, 1.1).unwrap();
        let analytic = excitement(&tl, rates, &w, &Engine::default()).unwrap();
        let mc = excitement(
            &tl,
            rates,
            &w,
            &Engine::MonteCarlo(McConfig {
                replications: 100_000,
                seed: RngSeedPolicy::new(2),
            }),
        )
        .unwrap();
        assert!(
            (analytic.suspense - mc.suspense).abs() < 0.05,
            "{} vs {}",
            analytic.suspense,
            mc.suspense
        );
        // rollout noise inflates path length
        assert!(
            (analytic.surprise - mc.surprise).abs() < 0.2,
            "{} vs {}",
            analytic.surprise,
            mc.surprise
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn metrics_invariant_under_relabeling(h in 0.0f64..4.0, a in 0.0f64..4.0,
            events in prop::collection::vec((1u8..=90, any::<bool>(), 0u8..5), 0..6)) {
            let w = MinuteWeights::uniform();
            let evs = events.iter().map(|&(m, home, k)| {
                let side = if home { Side::Home } else { Side::Away };
                if k == 0 { MatchEvent::red_card(m, side) } else { MatchEvent::goal(m, side) }
            }).collect();
            let tl = MatchTimeline::new(evs).unwrap();
            let rates = ScoringRates::new(h, a).unwrap();
            let e = excitement(&tl, rates, &w, &Engine::default()).unwrap();
            let m = excitement(&tl.mirrored(), rates.mirrored(), &w, &Engine::default()).unwrap();
            prop_assert!((e.suspense - m.suspense).abs() < 1e-9);
            prop_assert!((e.surprise - m.surprise).abs() < 1e-9);
            prop_assert!(e.surprise <= 90.0 * 2f64.sqrt());
            prop_assert!(e.prob_path[90].is_vertex());
            let constant = e.prob_path.iter().all(|p| p.squared_distance(&e.prob_path[0]) == 0.0);
            prop_assert_eq!(constant, e.surprise == 0.0);
        }
    }
}
