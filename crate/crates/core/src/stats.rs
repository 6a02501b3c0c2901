//! Sample statistics shared by the diagnostics and reliability modules.
//!
//! Every quantile in the crate uses one rule: linear interpolation between
//! order statistics at the 1-based rank `h = (n - 1) p + 1` ("type 7").

/// Tag recorded in run manifests for the quantile convention.
pub const QUANTILE_RULE: &str = "type-7 (h = (n-1)p + 1, linear interpolation)";

/// Sorts a copy of `values` ascending. NaNs are rejected by callers.
pub fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Type-7 quantile of an ascending slice. `p` is clamped to `[0, 1]`.
///
/// Panics on an empty slice.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of an empty sample");
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    // ranks such as 30 * 0.7 come out a hair off the integer
    let h = if (h - h.round()).abs() < 1e-9 { h.round() } else { h };
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= n {
        return sorted[n - 1];
    }
    if frac == 0.0 {
        return sorted[lo];
    }
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population variance (divides by `n`).
pub fn population_variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64
}

/// Fraction of an ascending sample that is `<= t`.
pub fn ecdf_sorted(sorted: &[f64], t: f64) -> f64 {
    sorted.partition_point(|&v| v <= t) as f64 / sorted.len() as f64
}
