//! Distributional and spatial comparisons of a scenario against a baseline.
//!
//! Travel-time changes are `scenario - baseline`, so negative values are
//! savings. Pairs enter a comparison only when finite in both matrices.

use thiserror::Error;

use crate::panel::{aggregate_over_instants, ODMatrix, ODPanel};
use crate::stats::{ecdf_sorted, mean, population_variance, quantile_sorted, sorted};

#[derive(Debug, Error, PartialEq)]
pub enum DiagnosticsError {
    #[error("no finite pairs in common: {0}")]
    EmptySupport(String),
    #[error("symmetric part has zero norm")]
    ZeroSymmetricNorm,
    #[error("matrices are over different nodes")]
    NodeMismatch,
}

/// Columns of the summary export, one row per comparison.
pub const SUMMARY_HEADER: [&str; 7] = [
    "comparison",
    "mean_dt_s",
    "median_dt_s",
    "improved_pct",
    "equal_pm1s_pct",
    "better_5pct_pct",
    "better_10pct_pct",
];

/// Columns of the percentile export.
pub const PERCENTILE_HEADER: [&str; 7] = [
    "comparison",
    "p0_dt_s",
    "p20_dt_s",
    "p40_dt_s",
    "p60_dt_s",
    "p80_dt_s",
    "p100_dt_s",
];

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaSummary {
    /// Pairs finite in both matrices.
    pub support: usize,
    /// Off-diagonal pairs left out because either side is unreachable.
    pub excluded: usize,
    pub mean_dt_s: f64,
    pub median_dt_s: f64,
    /// Share with `dt < 0`, percent.
    pub improved_pct: f64,
    /// Share with `dt < -1 s`; with `equal_pm1s_pct` and `worsened_pct` it
    /// partitions the support.
    pub improved_beyond_1s_pct: f64,
    /// Share with `|dt| <= 1 s`.
    pub equal_pm1s_pct: f64,
    /// Share with `dt > 1 s`.
    pub worsened_pct: f64,
    /// Share with `dt / baseline <= -0.05`.
    pub better_5pct_pct: f64,
    pub better_10pct_pct: f64,
    /// `p = 0, 0.1, ..., 1`.
    pub deciles: [f64; 11],
}

impl DeltaSummary {
    pub fn decile(&self, p_pct: usize) -> f64 {
        self.deciles[p_pct / 10]
    }

    pub fn summary_record(&self, comparison: &str) -> Vec<String> {
        let mut r = vec![comparison.to_string()];
        r.extend(
            [
                self.mean_dt_s,
                self.median_dt_s,
                self.improved_pct,
                self.equal_pm1s_pct,
                self.better_5pct_pct,
                self.better_10pct_pct,
            ]
            .iter()
            .map(|v| format_num(*v)),
        );
        r
    }

    pub fn percentile_record(&self, comparison: &str) -> Vec<String> {
        let mut r = vec![comparison.to_string()];
        r.extend([0, 20, 40, 60, 80, 100].iter().map(|p| format_num(self.decile(*p))));
        r
    }
}

/// Shortest decimal form that round-trips; `-0` prints as `0`.
pub fn format_num(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else {
        format!("{v}")
    }
}

/// `(baseline, scenario)` values over off-diagonal pairs finite in both,
/// with the count of excluded pairs.
pub fn common_support(base: &ODMatrix, scen: &ODMatrix) -> Result<(Vec<(f64, f64)>, usize), DiagnosticsError> {
    if base.node_ids != scen.node_ids {
        return Err(DiagnosticsError::NodeMismatch);
    }
    let n = base.n();
    let mut pairs = Vec::new();
    let mut excluded = 0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            match (base.get(i, j), scen.get(i, j)) {
                (Some(b), Some(s)) => pairs.push((b, s)),
                _ => excluded += 1,
            }
        }
    }
    Ok((pairs, excluded))
}

pub fn delta_summary(base: &ODMatrix, scen: &ODMatrix) -> Result<DeltaSummary, DiagnosticsError> {
    let (pairs, excluded) = common_support(base, scen)?;
    let mut s = summarise_pairs(&pairs)?;
    s.excluded = excluded;
    Ok(s)
}

/// Summary of `(baseline, scenario)` pairs.
pub fn summarise_pairs(pairs: &[(f64, f64)]) -> Result<DeltaSummary, DiagnosticsError> {
    if pairs.is_empty() {
        return Err(DiagnosticsError::EmptySupport("delta summary".into()));
    }
    let dt: Vec<f64> = pairs.iter().map(|(b, s)| s - b).collect();
    let n = dt.len() as f64;
    let pct = |f: &dyn Fn(usize) -> bool| 100.0 * (0..dt.len()).filter(|&k| f(k)).count() as f64 / n;
    // relative bands need a positive baseline; a zero baseline cannot improve
    let better = |k: usize, frac: f64| pairs[k].0 > 0.0 && dt[k] / pairs[k].0 <= -frac;
    let sorted_dt = sorted(&dt);
    let mut deciles = [0.0; 11];
    for (k, d) in deciles.iter_mut().enumerate() {
        *d = quantile_sorted(&sorted_dt, k as f64 / 10.0);
    }
    Ok(DeltaSummary {
        support: dt.len(),
        excluded: 0,
        mean_dt_s: mean(&dt),
        median_dt_s: quantile_sorted(&sorted_dt, 0.5),
        improved_pct: pct(&|k| dt[k] < 0.0),
        improved_beyond_1s_pct: pct(&|k| dt[k] < -1.0),
        equal_pm1s_pct: pct(&|k| dt[k].abs() <= 1.0),
        worsened_pct: pct(&|k| dt[k] > 1.0),
        better_5pct_pct: pct(&|k| better(k, 0.05)),
        better_10pct_pct: pct(&|k| better(k, 0.10)),
        deciles,
    })
}

/// Points and values of a curve; abscissae strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSeries {
    pub abscissa: Vec<f64>,
    pub values: Vec<f64>,
}

/// `p = 0.01, 0.02, ..., 0.99`.
pub fn default_p_grid() -> Vec<f64> {
    (1..100).map(|k| f64::from(k) / 100.0).collect()
}

/// `0, step, 2 step, ...` up to the first multiple of `step` at or above the
/// largest value in either sample.
pub fn default_t_grid(base: &[f64], scen: &[f64], step: f64) -> Vec<f64> {
    let max = base.iter().chain(scen).copied().fold(0.0, f64::max);
    let steps = (max / step).ceil() as usize;
    (0..=steps).map(|k| k as f64 * step).collect()
}

/// `Q_scen(p) - Q_base(p)` on `p_grid`.
pub fn shift_function(base: &[f64], scen: &[f64], p_grid: &[f64]) -> Result<CurveSeries, DiagnosticsError> {
    if base.is_empty() || scen.is_empty() {
        return Err(DiagnosticsError::EmptySupport("shift function".into()));
    }
    let (b, s) = (sorted(base), sorted(scen));
    Ok(CurveSeries {
        abscissa: p_grid.to_vec(),
        values: p_grid.iter().map(|&p| quantile_sorted(&s, p) - quantile_sorted(&b, p)).collect(),
    })
}

/// `F_scen(t) - F_base(t)` on `t_grid`, in percentage points.
pub fn delta_ecdf(base: &[f64], scen: &[f64], t_grid: &[f64]) -> Result<CurveSeries, DiagnosticsError> {
    if base.is_empty() || scen.is_empty() {
        return Err(DiagnosticsError::EmptySupport("delta ECDF".into()));
    }
    let (b, s) = (sorted(base), sorted(scen));
    Ok(CurveSeries {
        abscissa: t_grid.to_vec(),
        values: t_grid
            .iter()
            .map(|&t| 100.0 * (ecdf_sorted(&s, t) - ecdf_sorted(&b, t)))
            .collect(),
    })
}

/// Largest `|F_scen - F_base|` over all sample points, in percentage points.
pub fn delta_ecdf_sup(base: &[f64], scen: &[f64]) -> Result<f64, DiagnosticsError> {
    let mut points: Vec<f64> = base.iter().chain(scen).copied().collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    let c = delta_ecdf(base, scen, &points)?;
    Ok(c.values.iter().fold(0.0, |m, v| m.max(v.abs())))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OriginDelta {
    pub origin_id: String,
    /// Seconds, negative is faster (or less variable).
    pub delta_s: f64,
    /// Destinations (times days, for dispersion) in the common support.
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OriginDeltas {
    /// In panel node order.
    pub deltas: Vec<OriginDelta>,
    /// Origins with no destination in common with the baseline.
    pub omitted: Vec<String>,
}

/// Change in mean outbound travel time per origin, over slice means, for
/// all days or one day. Destinations count when finite in both scenarios.
pub fn per_origin_deltas(panel: &ODPanel, baseline: &str, scenario: &str, day: Option<&str>) -> OriginDeltas {
    let b = aggregate_over_instants(panel, baseline, day);
    let s = aggregate_over_instants(panel, scenario, day);
    let n = panel.n();
    let mut out = OriginDeltas {
        deltas: Vec::new(),
        omitted: Vec::new(),
    };
    for (i, node) in panel.nodes.iter().enumerate() {
        let (mut sb, mut ss, mut m) = (0.0, 0.0, 0usize);
        for j in (0..n).filter(|&j| j != i) {
            if let (Some(x), Some(y)) = (b.get(i, j), s.get(i, j)) {
                sb += x;
                ss += y;
                m += 1;
            }
        }
        if m == 0 {
            out.omitted.push(node.id.clone());
        } else {
            out.deltas.push(OriginDelta {
                origin_id: node.id.clone(),
                delta_s: ss / m as f64 - sb / m as f64,
                support: m,
            });
        }
    }
    out
}

/// Change in the dispersion of outbound times across instants: per pair and
/// day the population variance over instants, averaged over destinations,
/// then over days, square-rooted, and differenced against the baseline.
///
/// A (destination, day) counts when every instant is finite in both
/// scenarios; days without any such destination are skipped.
pub fn per_origin_sd_delta(panel: &ODPanel, baseline: &str, scenario: &str) -> OriginDeltas {
    let n = panel.n();
    let days: Vec<&str> = panel.days().into_iter().collect();
    let mut out = OriginDeltas {
        deltas: Vec::new(),
        omitted: Vec::new(),
    };
    let blocks = |sc: &str, d: &str| -> Vec<&Vec<Option<u32>>> {
        panel
            .partitions
            .iter()
            .filter(|p| p.key.scenario == sc && p.key.day == d)
            .map(|p| &p.times)
            .collect()
    };
    let per_day: Vec<_> = days.iter().map(|d| (blocks(baseline, d), blocks(scenario, d))).collect();
    for (i, node) in panel.nodes.iter().enumerate() {
        let (mut vb_sum, mut vs_sum, mut used_days, mut support) = (0.0, 0.0, 0usize, 0usize);
        for (bb, ss) in &per_day {
            if bb.is_empty() || ss.is_empty() {
                continue;
            }
            let (mut vb, mut vs, mut m) = (0.0, 0.0, 0usize);
            for j in (0..n).filter(|&j| j != i) {
                let c = i * n + j;
                let xb: Option<Vec<f64>> = bb.iter().map(|t| t[c].map(f64::from)).collect();
                let xs: Option<Vec<f64>> = ss.iter().map(|t| t[c].map(f64::from)).collect();
                if let (Some(xb), Some(xs)) = (xb, xs) {
                    vb += population_variance(&xb);
                    vs += population_variance(&xs);
                    m += 1;
                }
            }
            if m > 0 {
                vb_sum += vb / m as f64;
                vs_sum += vs / m as f64;
                used_days += 1;
                support += m;
            }
        }
        if used_days == 0 {
            out.omitted.push(node.id.clone());
        } else {
            let k = used_days as f64;
            out.deltas.push(OriginDelta {
                origin_id: node.id.clone(),
                delta_s: (vs_sum / k).sqrt() - (vb_sum / k).sqrt(),
                support,
            });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalityReport {
    pub norm_a: f64,
    pub norm_s: f64,
    pub norm_k: f64,
    /// `|K| / |S|`
    pub di: f64,
    /// `DI^2 / (1 + DI^2)`, the share of squared norm in the skew part.
    pub variance_fraction: f64,
    /// Ordered pairs dropped because either direction is unreachable.
    pub excluded_pairs: usize,
}

pub fn variance_fraction(di: f64) -> f64 {
    di * di / (1.0 + di * di)
}

/// Splits `A` into `S = (A + A^T) / 2` and `K = (A - A^T) / 2` over pairs
/// finite in both directions.
pub fn directionality(m: &ODMatrix) -> Result<DirectionalityReport, DiagnosticsError> {
    let n = m.n();
    let (mut a2, mut s2, mut k2, mut excluded) = (0.0, 0.0, 0.0, 0usize);
    for i in 0..n {
        for j in 0..n {
            match (m.get(i, j), m.get(j, i)) {
                (Some(x), Some(y)) => {
                    let (s, k) = ((x + y) / 2.0, (x - y) / 2.0);
                    a2 += x * x;
                    s2 += s * s;
                    k2 += k * k;
                }
                _ => excluded += usize::from(i != j),
            }
        }
    }
    if s2 == 0.0 {
        return Err(DiagnosticsError::ZeroSymmetricNorm);
    }
    let di = (k2 / s2).sqrt();
    Ok(DirectionalityReport {
        norm_a: a2.sqrt(),
        norm_s: s2.sqrt(),
        norm_k: k2.sqrt(),
        di,
        variance_fraction: variance_fraction(di),
        excluded_pairs: excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_counted_summary() {
        let pairs = [(100.0, 90.0), (100.0, 90.0), (100.0, 100.0), (100.0, 105.0)];
        let s = summarise_pairs(&pairs).unwrap();
        assert_eq!(s.mean_dt_s, -3.75);
        assert_eq!(s.improved_pct, 50.0);
        assert_eq!(s.equal_pm1s_pct, 25.0);
        assert_eq!(s.better_5pct_pct, 50.0);
        assert_eq!(s.better_10pct_pct, 50.0);
        assert_eq!(s.improved_beyond_1s_pct + s.equal_pm1s_pct + s.worsened_pct, 100.0);
    }

    #[test]
    fn two_by_two_decomposition() {
        let m = ODMatrix::from_rows(
            vec!["a".into(), "b".into()],
            &[vec![Some(0.0), Some(10.0)], vec![Some(20.0), Some(0.0)]],
            "test",
        );
        let r = directionality(&m).unwrap();
        assert!((r.norm_s - 450f64.sqrt()).abs() < 1e-12);
        assert!((r.norm_k - 50f64.sqrt()).abs() < 1e-12);
        assert!((r.di - 1.0 / 3.0).abs() < 1e-12);
        assert!((r.variance_fraction - 0.1).abs() < 1e-12);
    }

    #[test]
    fn small_di_fraction() {
        assert!((variance_fraction(0.035) * 100.0 - 0.1224).abs() < 0.0005);
    }

    #[test]
    fn zero_matrix_has_no_direction() {
        let m = ODMatrix::from_rows(vec!["a".into()], &[vec![Some(0.0)]], "t");
        assert_eq!(directionality(&m), Err(DiagnosticsError::ZeroSymmetricNorm));
    }

    #[test]
    fn median_shift_example() {
        let c = shift_function(&[100.0, 200.0, 300.0, 400.0], &[90.0, 150.0, 300.0, 400.0], &[0.5]).unwrap();
        assert_eq!(c.values, [-25.0]);
    }

    #[test]
    fn ecdf_example() {
        let c = delta_ecdf(&[100.0, 200.0], &[100.0, 100.0], &[150.0]).unwrap();
        assert_eq!(c.values, [50.0]);
    }

    #[test]
    fn t_grid_covers_range() {
        let g = default_t_grid(&[0.0, 130.0], &[61.0], 60.0);
        assert_eq!(g, [0.0, 60.0, 120.0, 180.0]);
    }
}
