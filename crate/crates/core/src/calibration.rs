//! Scoring rates from closing odds.
//!
//! Bookmaker margins are removed by multiplicative normalization, then the
//! pair of rates is chosen to minimize the squared gap between the Poisson
//! model's outcome and over/under probabilities and the market's.

use crate::analytic::{outcome_from_pmfs, poisson_pmf};
use crate::domain::{ProbTriple, ScoringRates};
use crate::error::{Error, Result};

pub const MIN_CALIBRATED_RATE: f64 = 0.01;
pub const MAX_CALIBRATED_RATE: f64 = 8.0;
/// Total goals assumed when no 2.5 line is quoted.
pub const DEFAULT_TOTAL: f64 = 2.6;
pub const MAX_ITERATIONS: usize = 200;
const TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverUnderLine {
    pub threshold: f64,
    pub over: f64,
    pub under: f64,
}

/// Decimal closing odds for one match.
#[derive(Debug, Clone, PartialEq)]
pub struct OddsRecord {
    pub match_id: String,
    pub home: f64,
    pub draw: f64,
    pub away: f64,
    pub lines: Vec<OverUnderLine>,
}

fn is_half_integer(x: f64) -> bool {
    x > 0.0 && (x - 0.5).fract() == 0.0
}

impl OddsRecord {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Error::InvalidOdds {
            match_id: self.match_id.clone(),
            reason,
        };
        for (name, odds) in [
            ("home", self.home),
            ("draw", self.draw),
            ("away", self.away),
        ] {
            if !(odds > 1.0 && odds.is_finite()) {
                return Err(bad(format!("{name} odds {odds} must exceed 1")));
            }
        }
        for (i, line) in self.lines.iter().enumerate() {
            if !is_half_integer(line.threshold) {
                return Err(bad(format!(
                    "threshold {} is not a half-integer",
                    line.threshold
                )));
            }
            if self.lines[..i]
                .iter()
                .any(|l| l.threshold == line.threshold)
            {
                return Err(bad(format!("duplicate threshold {}", line.threshold)));
            }
            if !(line.over > 1.0
                && line.under > 1.0
                && line.over.is_finite()
                && line.under.is_finite())
            {
                return Err(bad(format!(
                    "over/under odds at {} must exceed 1",
                    line.threshold
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TotalsProb {
    pub threshold: f64,
    pub p_over: f64,
}

/// Margin-free outcome and over/under probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpliedProbs {
    pub outcome: ProbTriple,
    pub totals: Vec<TotalsProb>,
}

impl ImpliedProbs {
    pub fn mirrored(&self) -> Self {
        Self {
            outcome: self.outcome.mirrored(),
            totals: self.totals.clone(),
        }
    }

    fn total_at(&self, threshold: f64) -> Option<f64> {
        self.totals
            .iter()
            .find(|t| t.threshold == threshold)
            .map(|t| t.p_over)
    }
}

pub fn deoverround(record: &OddsRecord) -> Result<ImpliedProbs> {
    record.validate()?;
    let inv = [1.0 / record.home, 1.0 / record.draw, 1.0 / record.away];
    let book: f64 = inv.iter().sum();
    let outcome = ProbTriple {
        home: inv[0] / book,
        draw: inv[1] / book,
        away: inv[2] / book,
    };
    let totals = record
        .lines
        .iter()
        .map(|l| {
            let (o, u) = (1.0 / l.over, 1.0 / l.under);
            TotalsProb {
                threshold: l.threshold,
                p_over: o / (o + u),
            }
        })
        .collect();
    Ok(ImpliedProbs { outcome, totals })
}

/// P(total goals > threshold) when total goals ~ Poisson(`total_rate`).
pub fn p_over(total_rate: f64, threshold: f64) -> f64 {
    let max_under = threshold.floor() as usize;
    if total_rate <= 0.0 {
        return 0.0;
    }
    let mut term = (-total_rate).exp();
    let mut cdf = term;
    for k in 1..=max_under {
        term *= total_rate / k as f64;
        cdf += term;
    }
    (1.0 - cdf).max(0.0)
}

/// Full-match outcome and over/under probabilities of the Poisson model.
pub fn model_probs(rates: ScoringRates, thresholds: &[f64]) -> ImpliedProbs {
    let outcome = outcome_from_pmfs(0, &poisson_pmf(rates.home), &poisson_pmf(rates.away));
    let total = rates.home + rates.away;
    let totals = thresholds
        .iter()
        .map(|&t| TotalsProb {
            threshold: t,
            p_over: p_over(total, t),
        })
        .collect();
    ImpliedProbs { outcome, totals }
}

/// Squared-error loss between model and market probabilities.
pub fn objective(rates: ScoringRates, implied: &ImpliedProbs) -> f64 {
    let thresholds: Vec<f64> = implied.totals.iter().map(|t| t.threshold).collect();
    let model = model_probs(rates, &thresholds);
    let outcome: f64 = model
        .outcome
        .as_array()
        .iter()
        .zip(implied.outcome.as_array())
        .map(|(m, i)| (m - i).powi(2))
        .sum();
    let totals: f64 = model
        .totals
        .iter()
        .zip(&implied.totals)
        .map(|(m, i)| (m.p_over - i.p_over).powi(2))
        .sum();
    outcome + totals
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub rates: ScoringRates,
    pub initial: ScoringRates,
    pub objective: f64,
    pub initial_objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn clamp_rate(x: f64) -> f64 {
    x.clamp(MIN_CALIBRATED_RATE, MAX_CALIBRATED_RATE)
}

/// Starting point: total goals from the 2.5 line, split by win probabilities.
pub fn initial_guess(implied: &ImpliedProbs) -> ScoringRates {
    let total = implied
        .total_at(2.5)
        .map(|target| {
            // p_over is increasing in the total rate
            let (mut lo, mut hi) = (2.0 * MIN_CALIBRATED_RATE, 2.0 * MAX_CALIBRATED_RATE);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if p_over(mid, 2.5) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .unwrap_or(DEFAULT_TOTAL);
    let decisive = implied.outcome.home + implied.outcome.away;
    let home_share = if decisive > 0.0 {
        implied.outcome.home / decisive
    } else {
        0.5
    };
    ScoringRates {
        home: clamp_rate(total * home_share),
        away: clamp_rate(total * (1.0 - home_share)),
    }
}

/// Fits scoring rates to market probabilities with bounded Nelder-Mead.
pub fn calibrate(implied: &ImpliedProbs) -> Calibration {
    let initial = initial_guess(implied);
    let f = |x: [f64; 2]| {
        objective(
            ScoringRates {
                home: x[0],
                away: x[1],
            },
            implied,
        )
    };
    let start = [initial.home, initial.away];
    let initial_objective = f(start);
    let (best, value, iterations, converged) = nelder_mead(f, start, 0.1, MAX_ITERATIONS);
    Calibration {
        rates: ScoringRates {
            home: best[0],
            away: best[1],
        },
        initial,
        objective: value,
        initial_objective,
        iterations,
        converged,
    }
}

/// Nelder-Mead over the box [MIN_CALIBRATED_RATE, MAX_CALIBRATED_RATE]^2;
/// trial points are projected onto the box. Restarts once from the best
/// point after the first convergence.
fn nelder_mead<F: Fn([f64; 2]) -> f64>(
    f: F,
    start: [f64; 2],
    step: f64,
    max_iter: usize,
) -> ([f64; 2], f64, usize, bool) {
    let project = |x: [f64; 2]| [clamp_rate(x[0]), clamp_rate(x[1])];
    let eval = |x: [f64; 2]| {
        let x = project(x);
        (x, f(x))
    };
    let mut iterations = 0;
    let mut best = eval(start);
    for round in 0..2 {
        let x0 = best.0;
        let mut simplex = [
            best,
            eval([x0[0] + step, x0[1]]),
            eval([x0[0], x0[1] + step]),
        ];
        let mut converged = false;
        while iterations < max_iter {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let spread = simplex[2].1 - simplex[0].1;
            let diameter = simplex[1..]
                .iter()
                .map(|v| {
                    (v.0[0] - simplex[0].0[0])
                        .abs()
                        .max((v.0[1] - simplex[0].0[1]).abs())
                })
                .fold(0.0, f64::max);
            if spread < TOLERANCE && diameter < 1e-6 {
                converged = true;
                break;
            }
            iterations += 1;
            let centroid = [
                (simplex[0].0[0] + simplex[1].0[0]) / 2.0,
                (simplex[0].0[1] + simplex[1].0[1]) / 2.0,
            ];
            let along = |t: f64| {
                [
                    centroid[0] + t * (simplex[2].0[0] - centroid[0]),
                    centroid[1] + t * (simplex[2].0[1] - centroid[1]),
                ]
            };
            let reflected = eval(along(-1.0));
            if reflected.1 < simplex[0].1 {
                let expanded = eval(along(-2.0));
                simplex[2] = if expanded.1 < reflected.1 {
                    expanded
                } else {
                    reflected
                };
            } else if reflected.1 < simplex[1].1 {
                simplex[2] = reflected;
            } else {
                let contracted = if reflected.1 < simplex[2].1 {
                    eval(along(-0.5))
                } else {
                    eval(along(0.5))
                };
                if contracted.1 < simplex[2].1.min(reflected.1) {
                    simplex[2] = contracted;
                } else {
                    let anchor = simplex[0].0;
                    for v in simplex[1..].iter_mut() {
                        *v = eval([
                            anchor[0] + 0.5 * (v.0[0] - anchor[0]),
                            anchor[1] + 0.5 * (v.0[1] - anchor[1]),
                        ]);
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[0].1 <= best.1 {
            best = simplex[0];
        }
        if !converged {
            return (best.0, best.1, iterations, false);
        }
        if round == 1 {
            return (best.0, best.1, iterations, true);
        }
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const LINES: [f64; 6] = [0.5, 1.5, 2.5, 3.5, 4.5, 5.5];

    fn record(h: f64, d: f64, a: f64, lines: Vec<OverUnderLine>) -> OddsRecord {
        OddsRecord {
            match_id: "m".into(),
            home: h,
            draw: d,
            away: a,
            lines,
        }
    }

    #[test]
    fn removes_margin_multiplicatively() {
        let p = deoverround(&record(2.0, 3.5, 4.0, vec![])).unwrap();
        let book = 0.5 + 1.0 / 3.5 + 0.25;
        assert_abs_diff_eq!(p.outcome.home, 0.5 / book, epsilon = 1e-12);
        assert_abs_diff_eq!(p.outcome.home, 0.4828, epsilon = 1e-4);
        assert_abs_diff_eq!(p.outcome.draw, 0.2759, epsilon = 1e-4);
        assert_abs_diff_eq!(p.outcome.away, 0.2414, epsilon = 1e-4);

        let p = deoverround(&record(
            3.0,
            3.0,
            3.0,
            vec![OverUnderLine {
                threshold: 2.5,
                over: 1.9,
                under: 1.9,
            }],
        ))
        .unwrap();
        assert_abs_diff_eq!(p.outcome.home, 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.totals[0].p_over, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_odds() {
        assert!(deoverround(&record(1.0, 3.0, 3.0, vec![])).is_err());
        assert!(deoverround(&record(-2.0, 3.0, 3.0, vec![])).is_err());
        let dup = vec![
            OverUnderLine {
                threshold: 2.5,
                over: 1.9,
                under: 1.9,
            },
            OverUnderLine {
                threshold: 2.5,
                over: 1.8,
                under: 2.0,
            },
        ];
        assert!(deoverround(&record(2.0, 3.0, 3.0, dup)).is_err());
        let push = vec![OverUnderLine {
            threshold: 2.0,
            over: 1.9,
            under: 1.9,
        }];
        assert!(deoverround(&record(2.0, 3.0, 3.0, push)).is_err());
    }

    #[test]
    fn model_probabilities() {
        let m = model_probs(
            ScoringRates {
                home: 0.0,
                away: 0.0,
            },
            &[0.5],
        );
        assert_eq!(m.outcome, ProbTriple::DRAW);
        assert_eq!(m.totals[0].p_over, 0.0);

        let m = model_probs(
            ScoringRates {
                home: 1.25,
                away: 1.25,
            },
            &[0.5],
        );
        assert_abs_diff_eq!(m.totals[0].p_over, 1.0 - (-2.5f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(m.totals[0].p_over, 0.9179, epsilon = 1e-4);
        assert_abs_diff_eq!(m.outcome.home, m.outcome.away, epsilon = 1e-15);

        // P(X >= 3) for X ~ Poisson(2.5)
        let direct = 1.0 - (-2.5f64).exp() * (1.0 + 2.5 + 2.5 * 2.5 / 2.0);
        assert_abs_diff_eq!(p_over(2.5, 2.5), direct, epsilon = 1e-14);
    }

    #[test]
    fn recovers_rates_from_full_market() {
        let truth = ScoringRates {
            home: 1.8,
            away: 1.1,
        };
        let c = calibrate(&model_probs(truth, &LINES));
        assert!(c.converged);
        assert!(
            (c.rates.home - 1.8).abs() < 0.02 && (c.rates.away - 1.1).abs() < 0.02,
            "{c:?}"
        );
        assert!(c.objective <= c.initial_objective);
    }

    #[test]
    fn symmetric_market_gives_equal_rates() {
        let c = calibrate(&model_probs(
            ScoringRates {
                home: 1.5,
                away: 1.5,
            },
            &LINES,
        ));
        assert!(
            (c.rates.home - 1.5).abs() < 0.02 && (c.rates.away - 1.5).abs() < 0.02,
            "{c:?}"
        );
    }

    #[test]
    fn outcome_only_market_reproduces_outcome() {
        let implied = model_probs(
            ScoringRates {
                home: 2.0,
                away: 0.5,
            },
            &[],
        );
        let c = calibrate(&implied);
        let fitted = model_probs(c.rates, &[]).outcome;
        for (a, b) in fitted.as_array().iter().zip(implied.outcome.as_array()) {
            assert!((a - b).abs() < 1e-4, "{fitted:?} vs {:?}", implied.outcome);
        }
    }

    #[test]
    fn initial_guess_inverts_the_main_line() {
        let implied = model_probs(
            ScoringRates {
                home: 2.0,
                away: 1.0,
            },
            &[2.5],
        );
        let g = initial_guess(&implied);
        assert_abs_diff_eq!(g.home + g.away, 3.0, epsilon = 1e-9);
        assert!(g.home > g.away);
        let g = initial_guess(&model_probs(
            ScoringRates {
                home: 1.0,
                away: 1.0,
            },
            &[],
        ));
        assert_abs_diff_eq!(g.home + g.away, DEFAULT_TOTAL, epsilon = 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn swapping_sides_swaps_rates(h in 0.2f64..4.0, a in 0.2f64..4.0) {
            let implied = model_probs(ScoringRates { home: h, away: a }, &LINES);
            let c = calibrate(&implied);
            let m = calibrate(&implied.mirrored());
            prop_assert!((c.rates.home - m.rates.away).abs() < 1e-3);
            prop_assert!((c.rates.away - m.rates.home).abs() < 1e-3);
            prop_assert!(c.objective <= c.initial_objective);
        }
    }
}
