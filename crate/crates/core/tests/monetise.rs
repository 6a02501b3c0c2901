use odscope_core::monetise::{annual_benefit, appendix_tables, breakeven_capex, crf, AppendixGrids};
use proptest::prelude::*;

/// Printed annual benefits, million euro per year.
const BENEFITS: [(&str, f64, f64, f64, f64); 8] = [
    ("Partial", 16.5, 400.0, 12.0, 22.0),
    ("Partial", 16.5, 400.0, 15.0, 27.5),
    ("Partial", 16.5, 500.0, 12.0, 27.5),
    ("Partial", 16.5, 500.0, 15.0, 34.4),
    ("Full", 36.1, 400.0, 12.0, 48.1),
    ("Full", 36.1, 400.0, 15.0, 60.2),
    ("Full", 36.1, 500.0, 12.0, 60.2),
    ("Full", 36.1, 500.0, 15.0, 75.2),
];

/// Printed capital-recovery factors, rows r = 3, 4, 5 %, columns n = 30, 40, 50.
const CRF: [[f64; 3]; 3] = [
    [0.051019, 0.043262, 0.038865],
    [0.057830, 0.050523, 0.046550],
    [0.065051, 0.058278, 0.054777],
];

/// Printed breakeven CAPEX, billion euro: (r, B, [O&M 0, 40, 60]).
const CAPEX: [(f64, f64, [f64; 3]); 6] = [
    (0.03, 60.2, [1.392, 0.467, 0.005]),
    (0.03, 75.2, [1.738, 0.814, 0.351]),
    (0.04, 60.2, [1.192, 0.400, 0.004]),
    (0.04, 75.2, [1.488, 0.697, 0.301]),
    (0.05, 60.2, [1.033, 0.347, 0.003]),
    (0.05, 75.2, [1.290, 0.604, 0.261]),
];

#[test]
fn benefit_table_cells() {
    let t = appendix_tables(&AppendixGrids::default());
    assert_eq!(t.benefits.len(), 8);
    for (row, (label, dt, q, vot, b)) in t.benefits.iter().zip(BENEFITS) {
        assert_eq!((row.scenario.as_str(), row.mean_dt_s, row.trips_m, row.vot), (label, dt, q, vot));
        assert!((row.benefit_m - b).abs() <= 0.05, "{label} {q} {vot}: {}", row.benefit_m);
    }
    let printed: Vec<String> = t.benefit_records().iter().map(|r| r[4].clone()).collect();
    assert_eq!(printed, ["22.0", "27.5", "27.5", "34.4", "48.1", "60.2", "60.2", "75.2"]);
}

#[test]
fn crf_table_cells() {
    let t = appendix_tables(&AppendixGrids::default());
    assert_eq!(t.crf.len(), 9);
    for (k, c) in t.crf.iter().enumerate() {
        assert!((c.crf - CRF[k / 3][k % 3]).abs() <= 5e-7, "r {} n {}", c.r, c.n);
    }
    let cell = t.crf.iter().find(|c| c.r == 0.05 && c.n == 50).unwrap();
    assert!((cell.crf - 0.054777).abs() <= 5e-7);
}

#[test]
fn capex_table_cells() {
    let t = appendix_tables(&AppendixGrids::default());
    assert_eq!(t.capex.len(), 18);
    for (k, c) in t.capex.iter().enumerate() {
        let (r, b, row) = CAPEX[k / 3];
        assert_eq!((c.r, c.benefit_m, c.n), (r, b, 40));
        assert!((c.capex_bn - row[k % 3]).abs() <= 0.001, "r {r} B {b} O&M {}: {}", c.om_m, c.capex_bn);
    }
    let printed: Vec<String> = t.capex_records().iter().map(|r| r[4].clone()).collect();
    assert_eq!(printed[2], "0.005");
}

proptest! {
    #[test]
    fn benefit_is_linear(dt in 0.0f64..100.0, q in 1.0f64..1e9, vot in 0.0f64..50.0, k in 0.0f64..10.0) {
        let b = annual_benefit(dt, q, vot);
        for scaled in [annual_benefit(k * dt, q, vot), annual_benefit(dt, k * q, vot), annual_benefit(dt, q, k * vot)] {
            prop_assert!((scaled - k * b).abs() <= 1e-9 * (1.0 + k * b));
        }
    }

    #[test]
    fn crf_monotone(r in 0.001f64..0.2, dr in 0.001f64..0.05, n in 1u32..100) {
        prop_assert!(crf(r + dr, n) > crf(r, n));
        prop_assert!(crf(r, n + 1) < crf(r, n));
    }

    #[test]
    fn capex_scales_with_savings(dt in 0.1f64..100.0, k in 0.1f64..10.0, r in 0.01f64..0.1, n in 1u32..60) {
        let f = crf(r, n);
        let a = breakeven_capex(annual_benefit(dt, 4e8, 12.0), 0.0, f);
        let b = breakeven_capex(annual_benefit(k * dt, 4e8, 12.0), 0.0, f);
        prop_assert!((b - k * a).abs() <= 1e-9 * b.abs().max(1.0));
    }
}
