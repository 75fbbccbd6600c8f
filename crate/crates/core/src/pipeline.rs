//! Odds and timelines in, scored match records out.

use std::collections::BTreeMap;

use crate::analysis::MatchRecord;
use crate::calibration::{calibrate, deoverround, Calibration, OddsRecord};
use crate::domain::MinuteWeights;
use crate::error::{Error, Result};
use crate::ingest::{join_odds, LoadedMatch};
use crate::metrics::{excitement_indexed, Engine};
use crate::par;

/// Calibrations with a larger final loss are reported as poor fits.
pub const POOR_FIT_OBJECTIVE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub enum DiagnosticKind {
    /// Match has no odds; not scored.
    NoOdds,
    /// Odds row whose match is not in the match file.
    UnknownMatch,
    /// Scored, but the optimizer hit its iteration cap.
    NotConverged,
    /// Scored, but the fitted model is far from the market.
    PoorFit,
    /// Could not be scored.
    Failed(String),
}

impl DiagnosticKind {
    pub fn code(&self) -> &'static str {
        match self {
            DiagnosticKind::NoOdds => "no_odds",
            DiagnosticKind::UnknownMatch => "unknown_match",
            DiagnosticKind::NotConverged => "not_converged",
            DiagnosticKind::PoorFit => "poor_fit",
            DiagnosticKind::Failed(_) => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub match_id: String,
    pub kind: DiagnosticKind,
    pub calibration: Option<Calibration>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Scored {
    pub records: Vec<MatchRecord>,
    pub diagnostics: Vec<Diagnostic>,
}

/// Calibrates every match with odds and scores it with the weights of its league.
///
/// Matches keep their input order; the Monte Carlo seed stream of a match is
/// its position in `matches`.
pub fn score_matches(
    matches: &[LoadedMatch],
    odds: Vec<OddsRecord>,
    weights: &BTreeMap<String, MinuteWeights>,
    engine: &Engine,
) -> Result<Scored> {
    for m in matches {
        if !weights.contains_key(&m.info.league) {
            return Err(Error::Config(format!(
                "no minute weights for league {}",
                m.info.league
            )));
        }
    }
    let join = join_odds(matches, odds);
    let outcomes = par::map_slice(&join.matched, |(i, odds)| {
        let m = &matches[*i];
        let result = deoverround(odds).and_then(|implied| {
            let cal = calibrate(&implied);
            let ex = excitement_indexed(
                &m.timeline,
                cal.rates,
                &weights[&m.info.league],
                engine,
                *i as u64,
            )?;
            Ok((cal, ex))
        });
        (m, result)
    });

    let mut scored = Scored::default();
    for (m, result) in outcomes {
        let id = m.info.match_id.clone();
        match result {
            Ok((cal, ex)) => {
                let kind = if !cal.converged {
                    Some(DiagnosticKind::NotConverged)
                } else if cal.objective > POOR_FIT_OBJECTIVE {
                    Some(DiagnosticKind::PoorFit)
                } else {
                    None
                };
                if let Some(kind) = kind {
                    scored.diagnostics.push(Diagnostic {
                        match_id: id.clone(),
                        kind,
                        calibration: Some(cal.clone()),
                    });
                }
                scored.records.push(MatchRecord {
                    match_id: id,
                    league: m.info.league.clone(),
                    season: m.info.season,
                    date: m.info.date.clone(),
                    home_team: m.info.home.clone(),
                    away_team: m.info.away.clone(),
                    rates: cal.rates,
                    pre_match: ex.prob_path[0],
                    suspense: ex.suspense,
                    surprise: ex.surprise,
                });
            }
            Err(e) => scored.diagnostics.push(Diagnostic {
                match_id: id,
                kind: DiagnosticKind::Failed(e.to_string()),
                calibration: None,
            }),
        }
    }
    scored
        .diagnostics
        .extend(join.without_odds.into_iter().map(|match_id| Diagnostic {
            match_id,
            kind: DiagnosticKind::NoOdds,
            calibration: None,
        }));
    scored
        .diagnostics
        .extend(join.unmatched_odds.into_iter().map(|match_id| Diagnostic {
            match_id,
            kind: DiagnosticKind::UnknownMatch,
            calibration: None,
        }));
    Ok(scored)
}

/// Calibration per odds record, in input order; invalid records are `Err`.
pub fn calibrate_all(odds: &[OddsRecord]) -> Vec<Result<Calibration>> {
    par::map_slice(odds, |o| deoverround(o).map(|implied| calibrate(&implied)))
}
