//! Simulated matches over a grid of scoring rates and the balanced-match
//! benchmark range.
//!
//! Timelines come from the per-minute Bernoulli simulator; their probability
//! paths use the exact analytic engine. Each rate pair owns a seed lane
//! derived from the rates themselves, so a pair produces the same sample
//! whether it is simulated alone, inside a grid, or for a benchmark range.

use std::path::Path;

use crate::analytic::{Regime, RemainderModel};
use crate::domain::{MinuteWeights, RngSeedPolicy, ScoringRates};
use crate::error::{Error, Result};
use crate::mc::{MatchSimulator, SimulatedMatch};
use crate::metrics::totals_from_leads;
use crate::par;
use crate::report::{fmt_f64, write_csv};
use crate::stats::Summary;

pub const DEFAULT_MATCHES: u32 = 10_000;
pub const DEFAULT_LAMBDA_LOW: f64 = 0.5;
pub const DEFAULT_LAMBDA_HIGH: f64 = 2.5;

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub step: f64,
    pub matches_per_pair: u32,
    /// Only pairs with `lambda_home <= lambda_away`.
    pub unordered: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            lambda_min: 0.0,
            lambda_max: 5.0,
            step: 0.1,
            matches_per_pair: DEFAULT_MATCHES,
            unordered: true,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) {
            return Err(Error::Config(format!(
                "grid step {} must be positive",
                self.step
            )));
        }
        if !(self.lambda_min >= 0.0 && self.lambda_min <= self.lambda_max) {
            return Err(Error::Config(format!(
                "bad grid bounds [{}, {}]",
                self.lambda_min, self.lambda_max
            )));
        }
        if self.matches_per_pair == 0 {
            return Err(Error::Config("matches per pair must be positive".into()));
        }
        Ok(())
    }

    /// Grid values, rounded to 1e-9: 0.1 * 3 reads as 0.3.
    pub fn values(&self) -> Vec<f64> {
        let count = ((self.lambda_max - self.lambda_min) / self.step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| ((self.lambda_min + i as f64 * self.step) * 1e9).round() / 1e9)
            .collect()
    }

    pub fn pairs(&self) -> Vec<ScoringRates> {
        let values = self.values();
        let mut pairs = Vec::new();
        for (i, &h) in values.iter().enumerate() {
            for &a in if self.unordered {
                &values[i..]
            } else {
                &values[..]
            } {
                pairs.push(ScoringRates { home: h, away: a });
            }
        }
        pairs
    }
}

/// Seed lane of a rate pair.
pub fn pair_lane(rates: ScoringRates) -> u64 {
    let micro = |x: f64| (x * 1e6).round() as u64;
    (1 << 62) | (micro(rates.home) << 23) | micro(rates.away)
}

/// Suspense and surprise totals of `matches` simulated card-free matches.
pub fn simulate_pair_values(
    rates: ScoringRates,
    weights: &MinuteWeights,
    matches: u32,
    seed: &RngSeedPolicy,
) -> Result<Vec<(f64, f64)>> {
    let rates = ScoringRates::new(rates.home, rates.away)?;
    let simulator = MatchSimulator::new(rates, weights)?;
    let regime = Regime::without_cards(rates, weights, RemainderModel::Bernoulli)?;
    let lane = pair_lane(rates);
    Ok(par::map_range(matches as usize, |i| {
        let simulated = simulator.simulate(&mut seed.substream(i as u64, lane));
        totals_from_leads(&regime, &simulated.leads())
    }))
}

/// The simulated matches behind [`simulate_pair_values`], with their totals.
pub fn simulate_pair_matches(
    rates: ScoringRates,
    weights: &MinuteWeights,
    matches: u32,
    seed: &RngSeedPolicy,
) -> Result<Vec<(SimulatedMatch, (f64, f64))>> {
    let rates = ScoringRates::new(rates.home, rates.away)?;
    let simulator = MatchSimulator::new(rates, weights)?;
    let regime = Regime::without_cards(rates, weights, RemainderModel::Bernoulli)?;
    let lane = pair_lane(rates);
    Ok(par::map_range(matches as usize, |i| {
        let simulated = simulator.simulate(&mut seed.substream(i as u64, lane));
        let totals = totals_from_leads(&regime, &simulated.leads());
        (simulated, totals)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSummary {
    pub rates: ScoringRates,
    pub suspense: Summary,
    pub surprise: Summary,
}

pub fn simulate_pair(
    rates: ScoringRates,
    weights: &MinuteWeights,
    matches: u32,
    seed: &RngSeedPolicy,
) -> Result<PairSummary> {
    if matches == 0 {
        return Err(Error::Config("matches must be positive".into()));
    }
    let values = simulate_pair_values(rates, weights, matches, seed)?;
    let (sus, sur): (Vec<f64>, Vec<f64>) = values.into_iter().unzip();
    Ok(PairSummary {
        rates,
        suspense: Summary::of(&sus).expect("non-empty"),
        surprise: Summary::of(&sur).expect("non-empty"),
    })
}

/// One summary row per rate pair of the grid.
pub fn simulate_grid(
    spec: &GridSpec,
    weights: &MinuteWeights,
    seed: &RngSeedPolicy,
) -> Result<Vec<PairSummary>> {
    spec.validate()?;
    let pairs = spec.pairs();
    par::map_slice(&pairs, |&rates| {
        simulate_pair(rates, weights, spec.matches_per_pair, seed)
    })
    .into_iter()
    .collect()
}

/// Mean suspense and surprise of balanced matches at a low and a high rate.
///
/// Suspense is higher at low rates and surprise at high rates, so the suspense
/// bounds come from (high, low) and the surprise bounds from (low, high).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkRange {
    pub suspense_low: f64,
    pub suspense_high: f64,
    pub surprise_low: f64,
    pub surprise_high: f64,
    pub lambda_low: f64,
    pub lambda_high: f64,
}

pub fn benchmark_range(
    weights: &MinuteWeights,
    lambda_low: f64,
    lambda_high: f64,
    matches: u32,
    seed: &RngSeedPolicy,
) -> Result<BenchmarkRange> {
    if lambda_low > lambda_high {
        return Err(Error::Config(format!(
            "lambda_low {lambda_low} exceeds lambda_high {lambda_high}"
        )));
    }
    let low = simulate_pair(ScoringRates::balanced(lambda_low)?, weights, matches, seed)?;
    let high = simulate_pair(ScoringRates::balanced(lambda_high)?, weights, matches, seed)?;
    let (suspense_low, suspense_high) = min_max(high.suspense.mean, low.suspense.mean);
    let (surprise_low, surprise_high) = min_max(low.surprise.mean, high.surprise.mean);
    Ok(BenchmarkRange {
        suspense_low,
        suspense_high,
        surprise_low,
        surprise_high,
        lambda_low,
        lambda_high,
    })
}

fn min_max(a: f64, b: f64) -> (f64, f64) {
    (a.min(b), a.max(b))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatmapCell {
    pub lambda_home: f64,
    pub lambda_away: f64,
    pub mean_suspense: f64,
    pub mean_surprise: f64,
}

/// Full square of cells; with an unordered grid each off-diagonal row is
/// mirrored to its (away, home) counterpart.
pub fn surface(grid: &[PairSummary], unordered: bool) -> Vec<HeatmapCell> {
    let mut cells: Vec<HeatmapCell> = Vec::with_capacity(grid.len() * 2);
    for row in grid {
        let cell = HeatmapCell {
            lambda_home: row.rates.home,
            lambda_away: row.rates.away,
            mean_suspense: row.suspense.mean,
            mean_surprise: row.surprise.mean,
        };
        cells.push(cell);
        if unordered && row.rates.home != row.rates.away {
            cells.push(HeatmapCell {
                lambda_home: cell.lambda_away,
                lambda_away: cell.lambda_home,
                ..cell
            });
        }
    }
    cells.sort_by(|a, b| {
        a.lambda_home
            .total_cmp(&b.lambda_home)
            .then(a.lambda_away.total_cmp(&b.lambda_away))
    });
    cells
}

pub const GRID_COLUMNS: [&str; 13] = [
    "lambda_home",
    "lambda_away",
    "n",
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

pub fn write_grid(path: &Path, provenance: &str, grid: &[PairSummary]) -> Result<()> {
    let rows = grid.iter().map(|r| {
        let mut row = vec![
            fmt_f64(r.rates.home),
            fmt_f64(r.rates.away),
            r.suspense.n.to_string(),
        ];
        for s in [&r.suspense, &r.surprise] {
            row.extend([s.mean, s.median, s.sd, s.min, s.max].map(fmt_f64));
        }
        row
    });
    write_csv(path, provenance, &GRID_COLUMNS, rows)
}

pub fn write_surface(path: &Path, provenance: &str, cells: &[HeatmapCell]) -> Result<()> {
    let rows = cells.iter().map(|c| {
        [
            c.lambda_home,
            c.lambda_away,
            c.mean_suspense,
            c.mean_surprise,
        ]
        .map(fmt_f64)
        .to_vec()
    });
    write_csv(
        path,
        provenance,
        &[
            "lambda_home",
            "lambda_away",
            "mean_suspense",
            "mean_surprise",
        ],
        rows,
    )
}

pub fn write_range(path: &Path, provenance: &str, range: &BenchmarkRange) -> Result<()> {
    let rows = [
        vec![
            "suspense".to_string(),
            fmt_f64(range.suspense_low),
            fmt_f64(range.suspense_high),
        ],
        vec![
            "surprise".to_string(),
            fmt_f64(range.surprise_low),
            fmt_f64(range.surprise_high),
        ],
    ]
    .into_iter()
    .map(|mut r| {
        r.extend([fmt_f64(range.lambda_low), fmt_f64(range.lambda_high)]);
        r
    });
    write_csv(
        path,
        provenance,
        &["metric", "lower", "upper", "lambda_low", "lambda_high"],
        rows,
    )
}

/// Reads a file written by [`write_range`].
pub fn load_range(path: &Path) -> Result<BenchmarkRange> {
    let bad = |reason: String| Error::Format {
        path: path.to_path_buf(),
        reason,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)?;
    let mut bounds = std::collections::HashMap::new();
    let mut lambdas = None;
    for record in rdr.records() {
        let record = record?;
        let num = |i: usize| -> Result<f64> {
            record
                .get(i)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| bad(format!("bad number in column {}", i + 1)))
        };
        bounds.insert(
            record.get(0).unwrap_or_default().to_string(),
            (num(1)?, num(2)?),
        );
        lambdas = Some((num(3)?, num(4)?));
    }
    let get = |m: &str| {
        bounds
            .get(m)
            .copied()
            .ok_or_else(|| bad(format!("missing {m} row")))
    };
    let (suspense_low, suspense_high) = get("suspense")?;
    let (surprise_low, surprise_high) = get("surprise")?;
    let (lambda_low, lambda_high) = lambdas.expect("rows were read");
    Ok(BenchmarkRange {
        suspense_low,
        suspense_high,
        surprise_low,
        surprise_high,
        lambda_low,
        lambda_high,
    })
}
