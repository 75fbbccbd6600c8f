//! Reading and writing the on-disk formats.
//!
//! * matches: `match_id,league,season,date,home,away,events`, where `events`
//!   joins `minute[+added]:H|A:goal|red` tokens with `;`
//! * odds: `match_id,odds_h,odds_d,odds_a,threshold,over,under`, one row per
//!   over/under line with the 1X2 prices repeated (threshold columns empty for
//!   a 1X2-only match)
//! * weights: `league,minute,weight`
//! * excitement: versioned per-match results, see [`EXCITEMENT_COLUMNS`]
//!
//! All files are UTF-8 with a header row. Lines starting with `#` are comments.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader};
use std::path::Path;

use log::warn;
use serde::Deserialize;

use crate::analysis::MatchRecord;
use crate::calibration::{OddsRecord, OverUnderLine};
use crate::domain::{
    fold_injury_time, EventKind, MatchEvent, MatchTimeline, MinuteWeights, ProbTriple,
    ScoringRates, Side, MINUTES,
};
use crate::error::{Error, Result};
use crate::report::{fmt_f64, write_csv};

pub const MATCH_COLUMNS: [&str; 7] = [
    "match_id", "league", "season", "date", "home", "away", "events",
];
pub const ODDS_COLUMNS: [&str; 7] = [
    "match_id",
    "odds_h",
    "odds_d",
    "odds_a",
    "threshold",
    "over",
    "under",
];
pub const WEIGHT_COLUMNS: [&str; 3] = ["league", "minute", "weight"];
pub const EXCITEMENT_COLUMNS: [&str; 13] = [
    "match_id",
    "league",
    "season",
    "date",
    "home",
    "away",
    "lambda_home",
    "lambda_away",
    "p_home",
    "p_draw",
    "p_away",
    "suspense",
    "surprise",
];
pub const EXCITEMENT_TAG: &str = "excitement/v1";

const REFERENCE_WEIGHTS: &str = include_str!("../data/reference_weights.csv");

/// Bundled late-skewed goal-timing profile with stoppage-time mass at 45 and 90.
pub fn reference_weights() -> MinuteWeights {
    let mut counts = vec![0.0; MINUTES];
    for line in REFERENCE_WEIGHTS.lines().skip(1) {
        let mut parts = line.split(',').skip(1);
        let minute: usize = parts.next().unwrap().parse().unwrap();
        counts[minute - 1] = parts.next().unwrap().parse().unwrap();
    }
    MinuteWeights::new(&counts).expect("bundled weights are valid")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchInfo {
    pub match_id: String,
    pub league: String,
    pub season: i32,
    pub date: String,
    pub home: String,
    pub away: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedMatch {
    pub info: MatchInfo,
    pub timeline: MatchTimeline,
}

fn parse_error(path: &Path, line: u64, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

fn reader(path: &Path, expected: &[&str]) -> Result<csv::Reader<File>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(File::open(path)?);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(expected.iter().copied()) {
        return Err(Error::Format {
            path: path.to_path_buf(),
            reason: format!(
                "expected columns {}, found {}",
                expected.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    Ok(rdr)
}

fn rows<T: for<'de> Deserialize<'de>>(path: &Path, expected: &[&str]) -> Result<Vec<(u64, T)>> {
    let mut rdr = reader(path, expected)?;
    let mut out = Vec::new();
    for result in rdr.deserialize::<T>() {
        match result {
            Ok(row) => out.push(row),
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                return Err(parse_error(path, line, e.to_string()));
            }
        }
    }
    // positions are only exposed on errors; re-read them for good rows
    let mut rdr = reader(path, expected)?;
    let lines: Vec<u64> = rdr
        .records()
        .map(|r| r.map(|r| r.position().map(|p| p.line()).unwrap_or(0)))
        .collect::<std::result::Result<_, _>>()?;
    Ok(lines.into_iter().zip(out).collect())
}

/// Parses one `minute[+added]:side:kind` token.
pub fn parse_event(token: &str) -> std::result::Result<MatchEvent, String> {
    let mut parts = token.trim().split(':');
    let (Some(time), Some(side), Some(kind), None) =
        (parts.next(), parts.next(), parts.next(), parts.next())
    else {
        return Err(format!("malformed event {token:?}"));
    };
    let (minute, added) = match time.split_once('+') {
        Some((m, a)) => (m, a),
        None => (time, "0"),
    };
    let minute: u32 = minute
        .parse()
        .map_err(|_| format!("bad minute in {token:?}"))?;
    let added: u32 = added
        .parse()
        .map_err(|_| format!("bad added time in {token:?}"))?;
    let minute = fold_injury_time(minute, added).map_err(|e| e.to_string())?;
    let side = match side {
        "H" => Side::Home,
        "A" => Side::Away,
        other => return Err(format!("unknown team {other:?} in {token:?}")),
    };
    let kind = match kind {
        "goal" => EventKind::Goal,
        "red" => EventKind::RedCard,
        other => return Err(format!("unknown event kind {other:?} in {token:?}")),
    };
    Ok(MatchEvent { minute, side, kind })
}

pub fn parse_events(field: &str) -> std::result::Result<MatchTimeline, String> {
    let events = field
        .split(';')
        .filter(|t| !t.trim().is_empty())
        .map(parse_event)
        .collect::<std::result::Result<Vec<_>, _>>()?;
    MatchTimeline::new(events).map_err(|e| e.to_string())
}

#[derive(Debug, Deserialize)]
struct MatchRow {
    match_id: String,
    league: String,
    season: i32,
    date: String,
    home: String,
    away: String,
    events: String,
}

pub fn load_matches(path: &Path) -> Result<Vec<LoadedMatch>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, row) in rows::<MatchRow>(path, &MATCH_COLUMNS)? {
        if !seen.insert(row.match_id.clone()) {
            return Err(parse_error(
                path,
                line,
                format!("duplicate match_id {}", row.match_id),
            ));
        }
        let timeline = parse_events(&row.events).map_err(|e| parse_error(path, line, e))?;
        out.push(LoadedMatch {
            info: MatchInfo {
                match_id: row.match_id,
                league: row.league,
                season: row.season,
                date: row.date,
                home: row.home,
                away: row.away,
            },
            timeline,
        });
    }
    Ok(out)
}

/// Empirical goal-timing distribution of a set of timelines (both sides pooled).
pub fn estimate_weights_for<'a>(
    league: &str,
    timelines: impl IntoIterator<Item = &'a MatchTimeline>,
) -> Result<MinuteWeights> {
    let mut counts = vec![0.0; MINUTES];
    for timeline in timelines {
        for goal in timeline.goals() {
            counts[goal.minute as usize - 1] += 1.0;
        }
    }
    if counts.iter().all(|&c| c == 0.0) {
        return Err(Error::NoGoals(league.to_string()));
    }
    MinuteWeights::from_counts(&counts)
}

/// One weight distribution per league.
pub fn estimate_weights(matches: &[LoadedMatch]) -> Result<BTreeMap<String, MinuteWeights>> {
    let mut by_league: BTreeMap<&str, Vec<&MatchTimeline>> = BTreeMap::new();
    for m in matches {
        by_league
            .entry(&m.info.league)
            .or_default()
            .push(&m.timeline);
    }
    by_league
        .into_iter()
        .map(|(league, tls)| Ok((league.to_string(), estimate_weights_for(league, tls)?)))
        .collect()
}

#[derive(Debug, Deserialize)]
struct WeightRow {
    league: String,
    minute: usize,
    weight: f64,
}

pub fn load_weights(path: &Path) -> Result<BTreeMap<String, MinuteWeights>> {
    let mut raw: BTreeMap<String, Vec<Option<f64>>> = BTreeMap::new();
    for (line, row) in rows::<WeightRow>(path, &WEIGHT_COLUMNS)? {
        if !(1..=MINUTES).contains(&row.minute) {
            return Err(parse_error(
                path,
                line,
                format!("minute {} outside 1..=90", row.minute),
            ));
        }
        let slots = raw
            .entry(row.league.clone())
            .or_insert_with(|| vec![None; MINUTES]);
        if slots[row.minute - 1].replace(row.weight).is_some() {
            return Err(parse_error(
                path,
                line,
                format!("duplicate minute {} for {}", row.minute, row.league),
            ));
        }
    }
    raw.into_iter()
        .map(|(league, slots)| {
            let weights: Option<Vec<f64>> = slots.into_iter().collect();
            let weights = weights.ok_or_else(|| Error::Format {
                path: path.to_path_buf(),
                reason: format!("league {league} is missing minutes"),
            })?;
            Ok((league, MinuteWeights::new(&weights)?))
        })
        .collect()
}

pub fn write_weights(
    path: &Path,
    provenance: &str,
    weights: &BTreeMap<String, MinuteWeights>,
) -> Result<()> {
    let rows = weights.iter().flat_map(|(league, w)| {
        w.as_slice()
            .iter()
            .enumerate()
            .map(move |(i, x)| vec![league.clone(), (i + 1).to_string(), fmt_f64(*x)])
    });
    write_csv(path, provenance, &WEIGHT_COLUMNS, rows)
}

#[derive(Debug, Deserialize)]
struct OddsRow {
    match_id: String,
    odds_h: f64,
    odds_d: f64,
    odds_a: f64,
    threshold: Option<f64>,
    over: Option<f64>,
    under: Option<f64>,
}

/// Odds records in first-appearance order.
pub fn load_odds(path: &Path) -> Result<Vec<OddsRecord>> {
    let mut records: Vec<OddsRecord> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for (line, row) in rows::<OddsRow>(path, &ODDS_COLUMNS)? {
        let i = *index.entry(row.match_id.clone()).or_insert_with(|| {
            records.push(OddsRecord {
                match_id: row.match_id.clone(),
                home: row.odds_h,
                draw: row.odds_d,
                away: row.odds_a,
                lines: Vec::new(),
            });
            records.len() - 1
        });
        let rec = &mut records[i];
        if (rec.home, rec.draw, rec.away) != (row.odds_h, row.odds_d, row.odds_a) {
            return Err(parse_error(
                path,
                line,
                format!("1X2 odds differ between rows of {}", row.match_id),
            ));
        }
        match (row.threshold, row.over, row.under) {
            (None, None, None) => {}
            (Some(threshold), Some(over), Some(under)) => {
                if rec.lines.iter().any(|l| l.threshold == threshold) {
                    return Err(parse_error(
                        path,
                        line,
                        format!("duplicate threshold {threshold} for {}", row.match_id),
                    ));
                }
                rec.lines.push(OverUnderLine {
                    threshold,
                    over,
                    under,
                });
            }
            _ => {
                return Err(parse_error(
                    path,
                    line,
                    "threshold, over and under must be given together",
                ))
            }
        }
        rec.validate()
            .map_err(|e| parse_error(path, line, e.to_string()))?;
    }
    Ok(records)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OddsJoin {
    /// `(index into matches, odds)` for every match with odds.
    pub matched: Vec<(usize, OddsRecord)>,
    /// Matches without odds; excluded from calibration.
    pub without_odds: Vec<String>,
    /// Odds rows whose match_id is not among the matches.
    pub unmatched_odds: Vec<String>,
}

pub fn join_odds(matches: &[LoadedMatch], odds: Vec<OddsRecord>) -> OddsJoin {
    let mut by_id: HashMap<String, OddsRecord> = HashMap::new();
    let mut order = Vec::new();
    for rec in odds {
        order.push(rec.match_id.clone());
        by_id.insert(rec.match_id.clone(), rec);
    }
    let mut join = OddsJoin::default();
    for (i, m) in matches.iter().enumerate() {
        match by_id.remove(&m.info.match_id) {
            Some(rec) => join.matched.push((i, rec)),
            None => join.without_odds.push(m.info.match_id.clone()),
        }
    }
    join.unmatched_odds = order
        .into_iter()
        .filter(|id| by_id.contains_key(id))
        .collect();
    for id in &join.unmatched_odds {
        warn!("odds for unknown match {id}");
    }
    join
}

fn excitement_row(r: &MatchRecord) -> Vec<String> {
    vec![
        r.match_id.clone(),
        r.league.clone(),
        r.season.to_string(),
        r.date.clone(),
        r.home_team.clone(),
        r.away_team.clone(),
        fmt_f64(r.rates.home),
        fmt_f64(r.rates.away),
        fmt_f64(r.pre_match.home),
        fmt_f64(r.pre_match.draw),
        fmt_f64(r.pre_match.away),
        fmt_f64(r.suspense),
        fmt_f64(r.surprise),
    ]
}

/// Writes records under the versioned header; `provenance` is appended to the tag line.
pub fn persist_excitement(records: &[MatchRecord], path: &Path, provenance: &str) -> Result<()> {
    let tag = if provenance.is_empty() {
        EXCITEMENT_TAG.to_string()
    } else {
        format!("{EXCITEMENT_TAG} {provenance}")
    };
    write_csv(
        path,
        &tag,
        &EXCITEMENT_COLUMNS,
        records.iter().map(excitement_row),
    )
}

fn check_tag(path: &Path, first_line: &str) -> Result<()> {
    let tag = first_line
        .strip_prefix("# ")
        .and_then(|rest| rest.split_whitespace().next());
    if tag != Some(EXCITEMENT_TAG) {
        return Err(Error::Format {
            path: path.to_path_buf(),
            reason: format!(
                "version tag mismatch: expected {EXCITEMENT_TAG}, found {first_line:?}"
            ),
        });
    }
    Ok(())
}

/// Appends a shard; creates the file with its header when absent or empty.
pub fn append_excitement(records: &[MatchRecord], path: &Path) -> Result<()> {
    let fresh = std::fs::metadata(path)
        .map(|m| m.len() == 0)
        .unwrap_or(true);
    if fresh {
        return persist_excitement(records, path, "");
    }
    let mut first = String::new();
    BufReader::new(File::open(path)?).read_line(&mut first)?;
    check_tag(path, first.trim_end())?;
    let file = OpenOptions::new().append(true).open(path)?;
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(file);
    for r in records {
        writer.write_record(excitement_row(r))?;
    }
    writer.flush()?;
    Ok(())
}

#[derive(Debug, Deserialize)]
struct ExcitementRow {
    match_id: String,
    league: String,
    season: i32,
    date: String,
    home: String,
    away: String,
    lambda_home: f64,
    lambda_away: f64,
    p_home: f64,
    p_draw: f64,
    p_away: f64,
    suspense: f64,
    surprise: f64,
}

pub fn load_excitement(path: &Path) -> Result<Vec<MatchRecord>> {
    let mut first = String::new();
    BufReader::new(File::open(path)?).read_line(&mut first)?;
    check_tag(path, first.trim_end())?;
    rows::<ExcitementRow>(path, &EXCITEMENT_COLUMNS)?
        .into_iter()
        .map(|(line, r)| {
            let pre_match = ProbTriple::new(r.p_home, r.p_draw, r.p_away)
                .map_err(|e| parse_error(path, line, e.to_string()))?;
            Ok(MatchRecord {
                match_id: r.match_id,
                league: r.league,
                season: r.season,
                date: r.date,
                home_team: r.home,
                away_team: r.away,
                rates: ScoringRates {
                    home: r.lambda_home,
                    away: r.lambda_away,
                },
                pre_match,
                suspense: r.suspense,
                surprise: r.surprise,
            })
        })
        .collect()
}

/// Writes a matches CSV (used for fixtures and round trips).
pub fn write_matches(path: &Path, provenance: &str, matches: &[LoadedMatch]) -> Result<()> {
    let rows = matches.iter().map(|m| {
        let events: Vec<String> = m
            .timeline
            .events()
            .iter()
            .map(|e| {
                let side = if e.side == Side::Home { "H" } else { "A" };
                let kind = if e.kind == EventKind::Goal {
                    "goal"
                } else {
                    "red"
                };
                format!("{}:{side}:{kind}", e.minute)
            })
            .collect();
        vec![
            m.info.match_id.clone(),
            m.info.league.clone(),
            m.info.season.to_string(),
            m.info.date.clone(),
            m.info.home.clone(),
            m.info.away.clone(),
            events.join(";"),
        ]
    });
    write_csv(path, provenance, &MATCH_COLUMNS, rows)
}

/// Writes an odds CSV, one row per over/under line.
pub fn write_odds(path: &Path, provenance: &str, odds: &[OddsRecord]) -> Result<()> {
    let rows = odds.iter().flat_map(|r| {
        let base = [
            r.match_id.clone(),
            fmt_f64(r.home),
            fmt_f64(r.draw),
            fmt_f64(r.away),
        ];
        let mut out: Vec<Vec<String>> = r
            .lines
            .iter()
            .map(|l| {
                let mut row = base.to_vec();
                row.extend([fmt_f64(l.threshold), fmt_f64(l.over), fmt_f64(l.under)]);
                row
            })
            .collect();
        if out.is_empty() {
            let mut row = base.to_vec();
            row.extend([String::new(), String::new(), String::new()]);
            out.push(row);
        }
        out
    });
    write_csv(path, provenance, &ODDS_COLUMNS, rows)
}
