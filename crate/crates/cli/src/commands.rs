use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use log::{info, warn};

use suspense_core::analysis::tables::{
    league_table, write_correlations, write_descriptives, write_league_table, write_team_seasons, write_trends_long,
    write_trends_table,
};
use suspense_core::analysis::{describe, trend_table, uncertainty_correlation, GroupBy};
use suspense_core::analytic::RemainderModel;
use suspense_core::benchmark::{
    benchmark_range, load_range, simulate_grid, simulate_pair_matches, surface, write_grid, write_range, write_surface,
    GridSpec, DEFAULT_MATCHES,
};
use suspense_core::ingest::{
    estimate_weights, load_excitement, load_matches, load_odds, load_weights, persist_excitement, reference_weights,
    write_matches, write_weights, LoadedMatch, MatchInfo,
};
use suspense_core::mc::McConfig;
use suspense_core::metrics::Engine;
use suspense_core::pipeline::{calibrate_all, score_matches, DiagnosticKind};
use suspense_core::report::{fmt_f64, write_csv};
use suspense_core::{MinuteWeights, RngSeedPolicy, ScoringRates};

use super::{
    input, BenchmarkArgs, CalibrateArgs, EngineKind, ScoreArgs, SimulateArgs, TrendsArgs, UsageError, WeightArgs,
    WeightsArgs,
};

fn out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Weights for the simulation commands, with a league label.
fn simulation_weights(args: &WeightArgs) -> Result<(String, MinuteWeights)> {
    if args.uniform {
        return Ok(("UNIFORM".into(), MinuteWeights::uniform()));
    }
    let Some(path) = &args.weights else {
        return Ok(("REF".into(), reference_weights()));
    };
    let mut all = load_weights(&input(path)?)?;
    match &args.league {
        Some(league) => match all.remove(league) {
            Some(w) => Ok((league.clone(), w)),
            None => Err(UsageError(format!("league {league} not in {}", path.display())).into()),
        },
        None if all.len() == 1 => Ok(all.pop_first().expect("one league")),
        None => Err(UsageError(format!(
            "{} holds {} leagues; pick one with --league",
            path.display(),
            all.len()
        ))
        .into()),
    }
}

fn check_rate(name: &str, x: f64) -> Result<()> {
    if !(x.is_finite() && x >= 0.0) {
        return Err(UsageError(format!("--{name} must be a non-negative number, got {x}")).into());
    }
    Ok(())
}

pub fn benchmark(a: &BenchmarkArgs, prov: &str) -> Result<()> {
    for (name, x) in [("lambda-min", a.lambda_min), ("lambda-max", a.lambda_max), ("lambda-low", a.lambda_low), ("lambda-high", a.lambda_high)] {
        check_rate(name, x)?;
    }
    if a.lambda_low > a.lambda_high {
        return Err(UsageError("--lambda-low exceeds --lambda-high".into()).into());
    }
    let spec = GridSpec {
        lambda_min: a.lambda_min,
        lambda_max: a.lambda_max,
        step: a.step,
        matches_per_pair: a.matches,
        unordered: !a.ordered,
    };
    spec.validate().map_err(|e| UsageError(e.to_string()))?;
    let (_, weights) = simulation_weights(&a.weights)?;
    out_dir(&a.out)?;

    let seed = RngSeedPolicy::new(a.seed);
    info!("simulating {} pairs x {} matches", spec.pairs().len(), a.matches);
    let grid = simulate_grid(&spec, &weights, &seed)?;
    let range = benchmark_range(&weights, a.lambda_low, a.lambda_high, a.matches, &seed)?;
    write_grid(&a.out.join("grid.csv"), prov, &grid)?;
    write_surface(&a.out.join("heatmap.csv"), prov, &surface(&grid, spec.unordered))?;
    write_range(&a.out.join("benchmark_range.csv"), prov, &range)?;
    Ok(())
}

pub fn simulate(a: &SimulateArgs, prov: &str) -> Result<()> {
    check_rate("home", a.home)?;
    check_rate("away", a.away)?;
    let rates = ScoringRates::new(a.home, a.away).map_err(|e| UsageError(e.to_string()))?;
    let (league, weights) = simulation_weights(&a.weights)?;
    out_dir(&a.out)?;

    let sims = simulate_pair_matches(rates, &weights, a.matches, &RngSeedPolicy::new(a.seed))?;
    let width = a.matches.to_string().len();
    let id = |i: usize| format!("sim{:0width$}", i + 1);
    let rows = sims.iter().enumerate().map(|(i, (m, (suspense, surprise)))| {
        let (h, aw) = m.score();
        vec![id(i), h.to_string(), aw.to_string(), fmt_f64(*suspense), fmt_f64(*surprise)]
    });
    write_csv(&a.out.join("simulated.csv"), prov, &["match_id", "home_goals", "away_goals", "suspense", "surprise"], rows)?;

    let matches: Vec<LoadedMatch> = sims
        .iter()
        .enumerate()
        .map(|(i, (m, _))| LoadedMatch {
            info: MatchInfo {
                match_id: id(i),
                league: league.clone(),
                season: 0,
                date: String::new(),
                home: "HOME".into(),
                away: "AWAY".into(),
            },
            timeline: m.timeline(),
        })
        .collect();
    write_matches(&a.out.join("matches.csv"), prov, &matches)?;
    Ok(())
}

pub fn score(a: &ScoreArgs, prov: &str) -> Result<()> {
    let matches_path = input(&a.matches)?;
    let odds_path = input(&a.odds)?;
    let weights_path = a.weights.as_deref().map(input).transpose()?;
    out_dir(&a.out)?;

    let matches = load_matches(&matches_path)?;
    let odds = load_odds(&odds_path)?;
    let weights: BTreeMap<String, MinuteWeights> = match weights_path {
        Some(p) => load_weights(&p)?,
        None => estimate_weights(&matches)?,
    };
    let engine = match a.engine {
        EngineKind::Analytic => Engine::Analytic(RemainderModel::Bernoulli),
        EngineKind::Mc => Engine::MonteCarlo(McConfig::new(a.reps, RngSeedPolicy::new(a.seed))?),
    };
    let scored = score_matches(&matches, odds, &weights, &engine)?;
    info!("scored {} of {} matches", scored.records.len(), matches.len());
    for d in &scored.diagnostics {
        warn!("{}: {}", d.match_id, d.kind.code());
    }

    persist_excitement(&scored.records, &a.out.join("excitement.csv"), prov)?;
    let rows = scored.diagnostics.iter().map(|d| {
        let message = match &d.kind {
            DiagnosticKind::Failed(msg) => msg.clone(),
            _ => String::new(),
        };
        let (objective, iterations, converged) = match &d.calibration {
            Some(c) => (fmt_f64(c.objective), c.iterations.to_string(), c.converged.to_string()),
            None => Default::default(),
        };
        vec![d.match_id.clone(), d.kind.code().to_string(), objective, iterations, converged, message]
    });
    write_csv(
        &a.out.join("diagnostics.csv"),
        prov,
        &["match_id", "status", "objective", "iterations", "converged", "message"],
        rows,
    )?;
    Ok(())
}

pub fn calibrate(a: &CalibrateArgs, prov: &str) -> Result<()> {
    let odds_path = input(&a.odds)?;
    out_dir(&a.out)?;
    let odds = load_odds(&odds_path)?;
    let rows = odds.iter().zip(calibrate_all(&odds)).map(|(o, c)| match c {
        Ok(c) => vec![
            o.match_id.clone(),
            fmt_f64(c.rates.home),
            fmt_f64(c.rates.away),
            fmt_f64(c.objective),
            c.iterations.to_string(),
            c.converged.to_string(),
            String::new(),
        ],
        Err(e) => {
            let mut row = vec![o.match_id.clone()];
            row.extend(std::iter::repeat_n(String::new(), 5));
            row.push(e.to_string());
            row
        }
    });
    write_csv(
        &a.out.join("calibrated.csv"),
        prov,
        &["match_id", "lambda_home", "lambda_away", "objective", "iterations", "converged", "error"],
        rows,
    )?;
    Ok(())
}

pub fn trends(a: &TrendsArgs, prov: &str) -> Result<()> {
    let excitement_path = input(&a.excitement)?;
    let range_path = a.range.as_deref().map(input).transpose()?;
    out_dir(&a.out)?;

    let mut records = load_excitement(&excitement_path)?;
    if !a.league.is_empty() {
        records.retain(|r| a.league.contains(&r.league));
    }
    if records.is_empty() {
        bail!("no matches left after filtering");
    }
    let range = match range_path {
        Some(p) => load_range(&p)?,
        None => benchmark_range(&reference_weights(), 0.5, 2.5, DEFAULT_MATCHES, &RngSeedPolicy::new(a.seed))?,
    };

    let columns = trend_table(&records, &a.top_teams, a.base_season)?;
    write_trends_table(&a.out.join("trends.csv"), prov, &columns)?;
    write_trends_long(&a.out.join("trends_long.csv"), prov, &columns)?;
    write_league_table(&a.out.join("descriptives.csv"), prov, &league_table(&records, &range), &range)?;
    write_descriptives(&a.out.join("league_seasons.csv"), prov, &describe(&records, GroupBy::LeagueSeason))?;
    write_team_seasons(&a.out.join("team_seasons.csv"), prov, &records, &range)?;
    write_correlations(&a.out.join("correlations.csv"), prov, records.len(), uncertainty_correlation(&records))?;
    Ok(())
}

pub fn weights(a: &WeightsArgs, prov: &str) -> Result<()> {
    let matches_path = a.matches.as_deref().map(input).transpose()?;
    out_dir(&a.out)?;
    let weights = match matches_path {
        Some(p) => estimate_weights(&load_matches(&p)?)?,
        None => BTreeMap::from([("REF".to_string(), reference_weights())]),
    };
    write_weights(&a.out.join("weights.csv"), prov, &weights)?;
    Ok(())
}
