//! Travel-time reliability over departure instants and the entropic
//! certainty equivalent.

use thiserror::Error;

use crate::panel::ODPanel;
use crate::stats::{quantile_sorted, sorted};

pub const DEFAULT_HALF_LIFE_S: f64 = 1200.0;

pub const RELIABILITY_HEADER: [&str; 6] = [
    "scenario",
    "delta_p50_s",
    "delta_iqr_s",
    "delta_rbi_abs_s",
    "delta_rbi_rel",
    "delta_ce_s",
];

#[derive(Debug, Error, PartialEq)]
pub enum ReliabilityError {
    #[error("empty sample")]
    EmptySample,
    #[error("sample contains a non-finite value")]
    NonFinite,
    #[error("weights must be positive, finite and one per value")]
    InvalidWeights,
    #[error("no OD pair in common with the baseline on any day")]
    EmptySupport,
}

/// Risk aversion for which an extra `half_life` seconds halves the weight of
/// an outcome.
pub fn rho_from_halflife(half_life_s: f64) -> f64 {
    std::f64::consts::LN_2 / half_life_s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReliabilityStats {
    pub median: f64,
    /// `Q75 - Q25`
    pub iqr: f64,
    /// `Q95 - Q50`
    pub rbi_abs: f64,
    /// `Q95 / Q50 - 1`; undefined for a zero median.
    pub rbi_rel: Option<f64>,
}

pub fn reliability_stats(times: &[f64]) -> Result<ReliabilityStats, ReliabilityError> {
    check(times)?;
    let s = sorted(times);
    let q = |p| quantile_sorted(&s, p);
    let (q25, q50, q75, q95) = (q(0.25), q(0.5), q(0.75), q(0.95));
    Ok(ReliabilityStats {
        median: q50,
        iqr: q75 - q25,
        rbi_abs: q95 - q50,
        rbi_rel: (q50 != 0.0).then(|| q95 / q50 - 1.0),
    })
}

fn check(times: &[f64]) -> Result<(), ReliabilityError> {
    if times.is_empty() {
        return Err(ReliabilityError::EmptySample);
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(ReliabilityError::NonFinite);
    }
    Ok(())
}

/// `-(1/rho) ln E[exp(-rho T)]`, optionally weighted.
///
/// Evaluated relative to the smallest time, so every exponent is `<= 0` and
/// nothing overflows; `ln_1p`/`exp_m1` keep precision when `rho` is tiny.
pub fn certainty_equivalent(times: &[f64], weights: Option<&[f64]>, rho: f64) -> Result<f64, ReliabilityError> {
    check(times)?;
    if let Some(w) = weights {
        if w.len() != times.len() || w.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(ReliabilityError::InvalidWeights);
        }
    }
    let weight = |i: usize| weights.map_or(1.0, |w| w[i]);
    let lo = times.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = times.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = (0..times.len()).map(weight).sum();
    // E[exp(-rho (T - lo))] - 1, in [-1, 0]
    let x: f64 = times
        .iter()
        .enumerate()
        .map(|(i, t)| weight(i) * (-rho * (t - lo)).exp_m1())
        .sum::<f64>()
        / total;
    let ce = lo - x.ln_1p() / rho;
    Ok(ce.clamp(lo, hi))
}

/// Per-pair metrics from one day's instants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairMetrics {
    pub stats: ReliabilityStats,
    pub ce: f64,
}

/// Per-pair metrics of one scenario on one day, row-major `N x N`; `None`
/// where the pair is on the diagonal or unreachable at some instant.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricTable {
    pub day: String,
    pub cells: Vec<Option<PairMetrics>>,
}

pub fn metric_tables(panel: &ODPanel, scenario: &str, rho: f64) -> Vec<MetricTable> {
    let n = panel.n();
    panel
        .days()
        .into_iter()
        .filter_map(|day| {
            let blocks: Vec<&Vec<Option<u32>>> = panel
                .partitions
                .iter()
                .filter(|p| p.key.scenario == scenario && p.key.day == day)
                .map(|p| &p.times)
                .collect();
            if blocks.is_empty() {
                return None;
            }
            let cells = (0..n * n)
                .map(|c| {
                    if c / n == c % n {
                        return None;
                    }
                    let times: Vec<f64> = blocks.iter().map(|b| b[c].map(f64::from)).collect::<Option<_>>()?;
                    Some(PairMetrics {
                        stats: reliability_stats(&times).ok()?,
                        ce: certainty_equivalent(&times, None, rho).ok()?,
                    })
                })
                .collect();
            Some(MetricTable { day: day.to_string(), cells })
        })
        .collect()
}

/// Day-averaged differences of OD-mean metrics, scenario minus baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioDeltaReport {
    pub delta_p50_s: f64,
    pub delta_iqr_s: f64,
    pub delta_rbi_abs_s: f64,
    /// Over pairs with a non-zero median in both scenarios.
    pub delta_rbi_rel: f64,
    pub delta_ce_s: f64,
    /// Days with at least one common pair.
    pub days: usize,
    pub rho: f64,
}

impl ScenarioDeltaReport {
    pub fn record(&self, scenario: &str) -> Vec<String> {
        let mut r = vec![scenario.to_string()];
        r.extend(
            [
                self.delta_p50_s,
                self.delta_iqr_s,
                self.delta_rbi_abs_s,
                self.delta_rbi_rel,
                self.delta_ce_s,
            ]
            .iter()
            .map(|v| crate::diagnostics::format_num(*v)),
        );
        r
    }
}

/// For each day present in both, averages each metric over the pairs
/// defined in both tables, differences them, then averages over days.
pub fn scenario_delta_report(
    base: &[MetricTable],
    scen: &[MetricTable],
    rho: f64,
) -> Result<ScenarioDeltaReport, ReliabilityError> {
    let mut acc = [0.0; 5];
    let mut days = 0usize;
    for b in base {
        let Some(s) = scen.iter().find(|s| s.day == b.day) else {
            continue;
        };
        let common: Vec<(&PairMetrics, &PairMetrics)> = b
            .cells
            .iter()
            .zip(&s.cells)
            .filter_map(|(x, y)| Some((x.as_ref()?, y.as_ref()?)))
            .collect();
        if common.is_empty() {
            continue;
        }
        let m = common.len() as f64;
        let avg = |f: &dyn Fn(&PairMetrics) -> f64| {
            (common.iter().map(|(_, y)| f(y)).sum::<f64>() - common.iter().map(|(x, _)| f(x)).sum::<f64>()) / m
        };
        acc[0] += avg(&|p| p.stats.median);
        acc[1] += avg(&|p| p.stats.iqr);
        acc[2] += avg(&|p| p.stats.rbi_abs);
        acc[4] += avg(&|p| p.ce);
        let rel: Vec<(f64, f64)> = common
            .iter()
            .filter_map(|(x, y)| Some((x.stats.rbi_rel?, y.stats.rbi_rel?)))
            .collect();
        if !rel.is_empty() {
            acc[3] += rel.iter().map(|(x, y)| y - x).sum::<f64>() / rel.len() as f64;
        }
        days += 1;
    }
    if days == 0 {
        return Err(ReliabilityError::EmptySupport);
    }
    let k = days as f64;
    Ok(ScenarioDeltaReport {
        delta_p50_s: acc[0] / k,
        delta_iqr_s: acc[1] / k,
        delta_rbi_abs_s: acc[2] / k,
        delta_rbi_rel: acc[3] / k,
        delta_ce_s: acc[4] / k,
        days,
        rho,
    })
}

/// Report for `scenario` against `baseline` straight from a panel.
pub fn panel_delta_report(
    panel: &ODPanel,
    baseline: &str,
    scenario: &str,
    rho: f64,
) -> Result<ScenarioDeltaReport, ReliabilityError> {
    scenario_delta_report(&metric_tables(panel, baseline, rho), &metric_tables(panel, scenario, rho), rho)
}
