//! Descriptive statistics, benchmark t-tests and trend regressions over scored matches.

pub mod ols;
pub mod tables;

use std::collections::{BTreeMap, BTreeSet};

use log::warn;
use nalgebra::DMatrix;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::benchmark::BenchmarkRange;
use crate::domain::{ProbTriple, ScoringRates};
use crate::error::{Error, Result};
use crate::stats::{pearson, quantile_sorted, Summary};

pub use ols::{ols, Covariance, OlsFit};

/// One scored match.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchRecord {
    pub match_id: String,
    pub league: String,
    /// Season start year.
    pub season: i32,
    pub date: String,
    pub home_team: String,
    pub away_team: String,
    pub rates: ScoringRates,
    pub pre_match: ProbTriple,
    pub suspense: f64,
    pub surprise: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Suspense,
    Surprise,
}

impl Metric {
    pub const BOTH: [Metric; 2] = [Metric::Suspense, Metric::Surprise];

    pub fn of(self, r: &MatchRecord) -> f64 {
        match self {
            Metric::Suspense => r.suspense,
            Metric::Surprise => r.surprise,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Suspense => "suspense",
            Metric::Surprise => "surprise",
        }
    }

    /// Lower end of the benchmark range for this metric.
    pub fn lower_bound(self, range: &BenchmarkRange) -> f64 {
        match self {
            Metric::Suspense => range.suspense_low,
            Metric::Surprise => range.surprise_low,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBy {
    All,
    League,
    /// Each match counts towards both of its teams.
    TeamSeason,
    LeagueSeason,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroupKey {
    pub league: String,
    pub team: Option<String>,
    pub season: Option<i32>,
}

impl GroupKey {
    pub fn label(&self) -> String {
        let mut parts = vec![self.league.clone()];
        parts.extend(self.team.clone());
        parts.extend(self.season.map(|s| s.to_string()));
        parts.join(" ")
    }
}

pub const ALL_LEAGUES: &str = "All";

/// Records per group, in key order.
pub fn group(records: &[MatchRecord], by: GroupBy) -> BTreeMap<GroupKey, Vec<&MatchRecord>> {
    let mut groups: BTreeMap<GroupKey, Vec<&MatchRecord>> = BTreeMap::new();
    for r in records {
        let mut push = |key: GroupKey| groups.entry(key).or_default().push(r);
        match by {
            GroupBy::All => push(GroupKey {
                league: ALL_LEAGUES.into(),
                team: None,
                season: None,
            }),
            GroupBy::League => push(GroupKey {
                league: r.league.clone(),
                team: None,
                season: None,
            }),
            GroupBy::LeagueSeason => push(GroupKey {
                league: r.league.clone(),
                team: None,
                season: Some(r.season),
            }),
            GroupBy::TeamSeason => {
                push(GroupKey {
                    league: r.league.clone(),
                    team: Some(r.home_team.clone()),
                    season: Some(r.season),
                });
                if r.away_team != r.home_team {
                    push(GroupKey {
                        league: r.league.clone(),
                        team: Some(r.away_team.clone()),
                        season: Some(r.season),
                    });
                }
            }
        }
    }
    groups
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupSummary {
    pub key: GroupKey,
    pub suspense: Summary,
    pub surprise: Summary,
}

impl GroupSummary {
    pub fn get(&self, metric: Metric) -> &Summary {
        match metric {
            Metric::Suspense => &self.suspense,
            Metric::Surprise => &self.surprise,
        }
    }

    /// Single-match groups report SD 0; this flags them.
    pub fn singleton(&self) -> bool {
        self.suspense.n == 1
    }
}

pub fn describe(records: &[MatchRecord], by: GroupBy) -> Vec<GroupSummary> {
    group(records, by)
        .into_iter()
        .filter_map(|(key, rs)| {
            let s: Vec<f64> = rs.iter().map(|r| r.suspense).collect();
            let p: Vec<f64> = rs.iter().map(|r| r.surprise).collect();
            match (Summary::of(&s), Summary::of(&p)) {
                (Some(suspense), Some(surprise)) => Some(GroupSummary {
                    key,
                    suspense,
                    surprise,
                }),
                _ => {
                    warn!("empty group {} omitted", key.label());
                    None
                }
            }
        })
        .collect()
}

/// `***`, `**`, `*` at the 1%, 5% and 10% levels.
pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub n: usize,
    pub mean: f64,
    pub t: f64,
    /// P(T <= t) under the null: small when the mean is below the benchmark.
    pub p_one_sided: f64,
    /// Zero sample variance; `p` is then 0, 1/2 or 1.
    pub degenerate: bool,
}

impl TTest {
    pub fn stars(&self) -> &'static str {
        stars(self.p_one_sided)
    }
}

/// One-sample t-test of `mean < benchmark`.
pub fn ttest_below(values: &[f64], benchmark: f64) -> Result<TTest> {
    if values.len() < 2 {
        return Err(Error::TooFewObservations {
            needed: 2,
            got: values.len(),
        });
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Config(format!(
            "non-finite value {bad} in t-test sample"
        )));
    }
    let s = Summary::of(values).expect("non-empty");
    let diff = s.mean - benchmark;
    if s.sd == 0.0 {
        let (t, p) = if diff < 0.0 {
            (f64::NEG_INFINITY, 0.0)
        } else if diff > 0.0 {
            (f64::INFINITY, 1.0)
        } else {
            (0.0, 0.5)
        };
        return Ok(TTest {
            n: s.n,
            mean: s.mean,
            t,
            p_one_sided: p,
            degenerate: true,
        });
    }
    let t = diff / s.std_error();
    let dist = StudentsT::new(0.0, 1.0, (s.n - 1) as f64).expect("df >= 1");
    Ok(TTest {
        n: s.n,
        mean: s.mean,
        t,
        p_one_sided: dist.cdf(t),
        degenerate: false,
    })
}

/// Pearson correlation of |p_home - p_away| with suspense and with surprise.
pub fn uncertainty_correlation(records: &[MatchRecord]) -> (f64, f64) {
    let gap: Vec<f64> = records
        .iter()
        .map(|r| (r.pre_match.home - r.pre_match.away).abs())
        .collect();
    let s: Vec<f64> = records.iter().map(|r| r.suspense).collect();
    let p: Vec<f64> = records.iter().map(|r| r.surprise).collect();
    (pearson(&gap, &s), pearson(&gap, &p))
}

pub const BAND_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct BandFlag {
    pub key: GroupKey,
    pub n: usize,
    /// `None` when the group is too small to test.
    pub suspense: Option<TTest>,
    pub surprise: Option<TTest>,
}

impl BandFlag {
    pub fn testable(&self) -> bool {
        self.suspense.is_some()
    }

    pub fn below(&self, metric: Metric) -> bool {
        let t = match metric {
            Metric::Suspense => &self.suspense,
            Metric::Surprise => &self.surprise,
        };
        t.is_some_and(|t| t.p_one_sided < BAND_ALPHA)
    }

    pub fn marker(&self, metric: Metric) -> &'static str {
        if !self.testable() {
            "untestable"
        } else if self.below(metric) {
            "*"
        } else {
            ""
        }
    }
}

/// Per-group tests of each metric against the lower benchmark bound.
pub fn band_flags(
    groups: &BTreeMap<GroupKey, Vec<&MatchRecord>>,
    range: &BenchmarkRange,
) -> Vec<BandFlag> {
    groups
        .iter()
        .map(|(key, rs)| {
            let test = |m: Metric| {
                let v: Vec<f64> = rs.iter().map(|r| m.of(r)).collect();
                ttest_below(&v, m.lower_bound(range)).ok()
            };
            BandFlag {
                key: key.clone(),
                n: rs.len(),
                suspense: test(Metric::Suspense),
                surprise: test(Metric::Surprise),
            }
        })
        .collect()
}

/// Five-number summary plus mean, for box plots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

impl BoxStats {
    pub fn of(values: &[f64]) -> Option<BoxStats> {
        let s = Summary::of(values)?;
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Some(BoxStats {
            min: s.min,
            q1: quantile_sorted(&sorted, 0.25),
            median: s.median,
            q3: quantile_sorted(&sorted, 0.75),
            max: s.max,
            mean: s.mean,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrendOutcome {
    LnSuspense,
    LnSurprise,
}

impl TrendOutcome {
    pub fn metric(self) -> Metric {
        match self {
            TrendOutcome::LnSuspense => Metric::Suspense,
            TrendOutcome::LnSurprise => Metric::Surprise,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TrendOutcome::LnSuspense => "ln_suspense",
            TrendOutcome::LnSurprise => "ln_surprise",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendModelSpec {
    pub outcome: TrendOutcome,
    /// Season coded as `season - base_season`; defaults to the earliest season.
    pub base_season: Option<i32>,
    pub top_teams: Vec<String>,
}

impl TrendModelSpec {
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for t in &self.top_teams {
            if !seen.insert(t) {
                return Err(Error::Config(format!("top team {t} listed twice")));
            }
        }
        Ok(())
    }
}

pub const TERM_CONST: &str = "const";
pub const TERM_SEASON: &str = "season";

pub fn team_term(team: &str) -> String {
    team.to_string()
}

pub fn interaction_term(team: &str) -> String {
    format!("{team} x season")
}

/// Cluster index per record: unordered (home, away) pair, numbered in sorted order.
pub fn pair_clusters(records: &[MatchRecord]) -> Vec<usize> {
    let key = |r: &MatchRecord| {
        if r.home_team <= r.away_team {
            (r.home_team.clone(), r.away_team.clone())
        } else {
            (r.away_team.clone(), r.home_team.clone())
        }
    };
    let ids: BTreeMap<(String, String), usize> = records
        .iter()
        .map(key)
        .collect::<BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(i, k)| (k, i))
        .collect();
    records.iter().map(|r| ids[&key(r)]).collect()
}

/// Log-linear trend: ln(outcome) on season, team involvement and team x season,
/// clustered on the unordered team pair.
pub fn trend_ols(records: &[MatchRecord], spec: &TrendModelSpec) -> Result<OlsFit> {
    spec.validate()?;
    let metric = spec.outcome.metric();
    let bad: Vec<String> = records
        .iter()
        .filter(|r| !(metric.of(r) > 0.0))
        .map(|r| r.match_id.clone())
        .collect();
    if !bad.is_empty() {
        return Err(Error::NonPositiveOutcome(bad));
    }
    let base = match spec.base_season {
        Some(b) => b,
        None => records
            .iter()
            .map(|r| r.season)
            .min()
            .ok_or(Error::TooFewObservations { needed: 2, got: 0 })?,
    };
    let mut terms = vec![TERM_CONST.to_string(), TERM_SEASON.to_string()];
    terms.extend(spec.top_teams.iter().map(|t| team_term(t)));
    terms.extend(spec.top_teams.iter().map(|t| interaction_term(t)));

    let k = terms.len();
    let teams = spec.top_teams.len();
    let x = DMatrix::from_fn(records.len(), k, |i, j| {
        let r = &records[i];
        let season = f64::from(r.season - base);
        let involved = |t: &str| {
            if r.home_team == t || r.away_team == t {
                1.0
            } else {
                0.0
            }
        };
        match j {
            0 => 1.0,
            1 => season,
            j if j < 2 + teams => involved(&spec.top_teams[j - 2]),
            j => involved(&spec.top_teams[j - 2 - teams]) * season,
        }
    });
    let y: Vec<f64> = records.iter().map(|r| metric.of(r).ln()).collect();
    ols(&y, &x, &terms, &Covariance::Cluster(pair_clusters(records)))
}

/// One column of a trend table.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendColumn {
    pub column: usize,
    pub outcome: TrendOutcome,
    pub interactions: bool,
    pub fit: OlsFit,
}

/// Columns (1)-(2) for ln suspense, (3)-(4) for ln surprise; the even
/// columns add the top-team terms and are skipped when there are none.
pub fn trend_table(
    records: &[MatchRecord],
    top_teams: &[String],
    base_season: Option<i32>,
) -> Result<Vec<TrendColumn>> {
    let mut out = Vec::new();
    for (i, outcome) in [TrendOutcome::LnSuspense, TrendOutcome::LnSurprise]
        .into_iter()
        .enumerate()
    {
        let plain = TrendModelSpec {
            outcome,
            base_season,
            top_teams: Vec::new(),
        };
        out.push(TrendColumn {
            column: 2 * i + 1,
            outcome,
            interactions: false,
            fit: trend_ols(records, &plain)?,
        });
        if !top_teams.is_empty() {
            let full = TrendModelSpec {
                outcome,
                base_season,
                top_teams: top_teams.to_vec(),
            };
            out.push(TrendColumn {
                column: 2 * i + 2,
                outcome,
                interactions: true,
                fit: trend_ols(records, &full)?,
            });
        }
    }
    Ok(out)
}
