//! CSV layouts for the descriptive table, trend tables and box-plot sources.

use std::path::Path;

use super::{
    band_flags, group, stars, ttest_below, BoxStats, GroupBy, GroupSummary, MatchRecord, Metric,
    TrendColumn,
};
use crate::benchmark::BenchmarkRange;
use crate::error::Result;
use crate::report::{fmt_f64, write_csv};
use crate::stats::Summary;

fn summary_cells(s: &Summary) -> [String; 5] {
    [s.mean, s.median, s.sd, s.min, s.max].map(fmt_f64)
}

pub const DESCRIPTIVE_COLUMNS: [&str; 15] = [
    "league",
    "team",
    "season",
    "n",
    "single",
    "suspense_mean",
    "suspense_median",
    "suspense_sd",
    "suspense_min",
    "suspense_max",
    "surprise_mean",
    "surprise_median",
    "surprise_sd",
    "surprise_min",
    "surprise_max",
];

/// Any grouping from [`describe`], one row per group.
pub fn write_descriptives(path: &Path, provenance: &str, groups: &[GroupSummary]) -> Result<()> {
    let rows = groups.iter().map(|g| {
        let mut row = vec![
            g.key.league.clone(),
            g.key.team.clone().unwrap_or_default(),
            g.key.season.map(|s| s.to_string()).unwrap_or_default(),
            g.suspense.n.to_string(),
            u8::from(g.singleton()).to_string(),
        ];
        row.extend(summary_cells(&g.suspense));
        row.extend(summary_cells(&g.surprise));
        row
    });
    write_csv(path, provenance, &DESCRIPTIVE_COLUMNS, rows)
}

pub const LEAGUE_TABLE_COLUMNS: [&str; 18] = [
    "league",
    "n",
    "suspense_mean",
    "suspense_stars",
    "suspense_median",
    "suspense_sd",
    "suspense_min",
    "suspense_max",
    "suspense_p",
    "surprise_mean",
    "surprise_stars",
    "surprise_median",
    "surprise_sd",
    "surprise_min",
    "surprise_max",
    "surprise_p",
    "suspense_benchmark",
    "surprise_benchmark",
];

#[derive(Debug, Clone, PartialEq)]
pub struct LeagueRow {
    pub summary: GroupSummary,
    /// One-sided p-values against the lower benchmark bounds; `None` for n < 2.
    pub suspense_p: Option<f64>,
    pub surprise_p: Option<f64>,
}

/// Per-league rows followed by the pooled row (when there is more than one league).
pub fn league_table(records: &[MatchRecord], range: &BenchmarkRange) -> Vec<LeagueRow> {
    let mut groups: Vec<_> = group(records, GroupBy::League).into_iter().collect();
    if groups.len() > 1 {
        groups.extend(group(records, GroupBy::All));
    }
    groups
        .into_iter()
        .map(|(key, rs)| {
            let values = |m: Metric| rs.iter().map(|r| m.of(r)).collect::<Vec<f64>>();
            let p = |m: Metric| {
                ttest_below(&values(m), m.lower_bound(range))
                    .ok()
                    .map(|t| t.p_one_sided)
            };
            let summary = GroupSummary {
                key: key.clone(),
                suspense: Summary::of(&values(Metric::Suspense)).expect("groups are non-empty"),
                surprise: Summary::of(&values(Metric::Surprise)).expect("groups are non-empty"),
            };
            LeagueRow {
                suspense_p: p(Metric::Suspense),
                surprise_p: p(Metric::Surprise),
                summary,
            }
        })
        .collect()
}

pub fn write_league_table(
    path: &Path,
    provenance: &str,
    rows: &[LeagueRow],
    range: &BenchmarkRange,
) -> Result<()> {
    let opt = |p: Option<f64>| p.map(fmt_f64).unwrap_or_default();
    let star = |p: Option<f64>| p.map(stars).unwrap_or_default().to_string();
    let out = rows.iter().map(|r| {
        let s = &r.summary;
        let mut row = vec![s.key.league.clone(), s.suspense.n.to_string()];
        let susp = summary_cells(&s.suspense);
        row.push(susp[0].clone());
        row.push(star(r.suspense_p));
        row.extend(susp[1..].iter().cloned());
        row.push(opt(r.suspense_p));
        let surp = summary_cells(&s.surprise);
        row.push(surp[0].clone());
        row.push(star(r.surprise_p));
        row.extend(surp[1..].iter().cloned());
        row.push(opt(r.surprise_p));
        row.push(fmt_f64(range.suspense_low));
        row.push(fmt_f64(range.surprise_low));
        row
    });
    write_csv(path, provenance, &LEAGUE_TABLE_COLUMNS, out)
}

pub const TEAM_SEASON_COLUMNS: [&str; 18] = [
    "league",
    "team",
    "season",
    "n",
    "suspense_min",
    "suspense_q1",
    "suspense_median",
    "suspense_q3",
    "suspense_max",
    "suspense_mean",
    "suspense_marker",
    "surprise_min",
    "surprise_q1",
    "surprise_median",
    "surprise_q3",
    "surprise_max",
    "surprise_mean",
    "surprise_marker",
];

/// Box-plot source: quartiles per team-season with the below-band marker.
pub fn write_team_seasons(
    path: &Path,
    provenance: &str,
    records: &[MatchRecord],
    range: &BenchmarkRange,
) -> Result<()> {
    let groups = group(records, GroupBy::TeamSeason);
    let flags = band_flags(&groups, range);
    let rows = groups.iter().zip(&flags).map(|((key, rs), flag)| {
        let mut row = vec![
            key.league.clone(),
            key.team.clone().unwrap_or_default(),
            key.season.map(|s| s.to_string()).unwrap_or_default(),
            rs.len().to_string(),
        ];
        for m in Metric::BOTH {
            let v: Vec<f64> = rs.iter().map(|r| m.of(r)).collect();
            let b = BoxStats::of(&v).expect("groups are non-empty");
            row.extend([b.min, b.q1, b.median, b.q3, b.max, b.mean].map(fmt_f64));
            row.push(flag.marker(m).to_string());
        }
        row
    });
    write_csv(path, provenance, &TEAM_SEASON_COLUMNS, rows)
}

pub const TREND_LONG_COLUMNS: [&str; 12] = [
    "column",
    "outcome",
    "term",
    "estimate",
    "std_error",
    "t",
    "p",
    "stars",
    "n",
    "clusters",
    "r_squared",
    "df",
];

/// Tidy form: one row per (column, term).
pub fn write_trends_long(path: &Path, provenance: &str, columns: &[TrendColumn]) -> Result<()> {
    let rows = columns.iter().flat_map(|c| {
        let f = &c.fit;
        (0..f.k).map(move |j| {
            vec![
                c.column.to_string(),
                c.outcome.name().to_string(),
                f.terms[j].clone(),
                fmt_f64(f.estimates[j]),
                fmt_f64(f.std_errors[j]),
                fmt_f64(f.t_values[j]),
                fmt_f64(f.p_values[j]),
                stars(f.p_values[j]).to_string(),
                f.n.to_string(),
                f.clusters.map(|g| g.to_string()).unwrap_or_default(),
                fmt_f64(f.r_squared),
                fmt_f64(f.df),
            ]
        })
    });
    write_csv(path, provenance, &TREND_LONG_COLUMNS, rows)
}

/// Regression-table layout: a starred estimate row and a bracketed SE row per
/// term, then N, clusters and R-squared; one column per model.
pub fn write_trends_table(path: &Path, provenance: &str, columns: &[TrendColumn]) -> Result<()> {
    let mut terms: Vec<&str> = Vec::new();
    for c in columns {
        for t in &c.fit.terms {
            if !terms.contains(&t.as_str()) {
                terms.push(t);
            }
        }
    }
    // constant last, as regression tables usually print it
    if let Some(i) = terms.iter().position(|t| *t == super::TERM_CONST) {
        let c = terms.remove(i);
        terms.push(c);
    }
    let mut header = vec!["term".to_string()];
    header.extend(
        columns
            .iter()
            .map(|c| format!("({}) {}", c.column, c.outcome.name())),
    );
    let header: Vec<&str> = header.iter().map(String::as_str).collect();

    let mut rows: Vec<Vec<String>> = Vec::new();
    for term in &terms {
        let mut est = vec![term.to_string()];
        let mut se = vec![String::new()];
        for c in columns {
            match c.fit.terms.iter().position(|t| t == term) {
                Some(j) => {
                    est.push(format!(
                        "{:.3}{}",
                        c.fit.estimates[j],
                        stars(c.fit.p_values[j])
                    ));
                    se.push(format!("({:.3})", c.fit.std_errors[j]));
                }
                None => {
                    est.push(String::new());
                    se.push(String::new());
                }
            }
        }
        rows.push(est);
        rows.push(se);
    }
    let footer = |label: &str, f: &dyn Fn(&TrendColumn) -> String| {
        let mut row = vec![label.to_string()];
        row.extend(columns.iter().map(f));
        row
    };
    rows.push(footer("N", &|c| c.fit.n.to_string()));
    rows.push(footer("clusters", &|c| {
        c.fit.clusters.map(|g| g.to_string()).unwrap_or_default()
    }));
    rows.push(footer("R2", &|c| format!("{:.3}", c.fit.r_squared)));
    write_csv(path, provenance, &header, rows)
}

pub fn write_correlations(
    path: &Path,
    provenance: &str,
    n: usize,
    correlations: (f64, f64),
) -> Result<()> {
    let rows = [("suspense", correlations.0), ("surprise", correlations.1)].map(|(m, c)| {
        vec![
            m.to_string(),
            "abs_home_minus_away".to_string(),
            n.to_string(),
            fmt_f64(c),
        ]
    });
    write_csv(
        path,
        provenance,
        &["metric", "against", "n", "pearson"],
        rows,
    )
}
