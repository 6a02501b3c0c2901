use odscope_core::diagnostics::{
    default_p_grid, delta_ecdf, delta_ecdf_sup, delta_summary, directionality, per_origin_deltas, per_origin_sd_delta,
    shift_function, summarise_pairs, variance_fraction, DiagnosticsError,
};
use odscope_core::panel::{ODMatrix, ODPanel, Node, Partition, PartitionKey};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Quantile by 1-based rank h = (n-1)p + 1, written independently of the
/// library: integer part and fraction of h, then linear interpolation.
fn oracle_quantile(sample: &[i64], p: f64) -> f64 {
    let mut v = sample.to_vec();
    v.sort();
    let n = v.len();
    let h = (n as f64 - 1.0) * p + 1.0;
    let lo = h.floor();
    let k = lo as usize;
    if k >= n {
        return v[n - 1] as f64;
    }
    v[k - 1] as f64 + (h - lo) * (v[k] - v[k - 1]) as f64
}

/// Two-sample Kolmogorov-Smirnov statistic by merging the sorted samples.
fn ks(a: &[i64], b: &[i64]) -> f64 {
    let (mut a, mut b) = (a.to_vec(), b.to_vec());
    a.sort();
    b.sort();
    let (mut i, mut j, mut d) = (0usize, 0usize, 0f64);
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            _ => unreachable!(),
        };
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// Equal, up to the rounding of the interpolation fraction; equal bit for
/// bit whenever the rank is a whole number.
fn assert_close(got: f64, want: f64) {
    if want.fract() == 0.0 && got.fract() == 0.0 {
        assert_eq!(got, want);
    }
    assert!((got - want).abs() <= 1e-9, "{got} vs {want}");
}

fn sample(rng: &mut ChaCha8Rng) -> Vec<i64> {
    let n = rng.random_range(1..200);
    let spread = rng.random_range(1..5000);
    (0..n).map(|_| rng.random_range(-spread..spread)).collect()
}

fn floats(v: &[i64]) -> Vec<f64> {
    v.iter().map(|x| *x as f64).collect()
}

fn matrix(rows: &[&[Option<f64>]]) -> ODMatrix {
    let ids = (0..rows.len()).map(|i| format!("n{i}")).collect();
    ODMatrix::from_rows(ids, &rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>(), "test")
}

#[test]
fn identical_matrices_summarise_to_zero() {
    let m = matrix(&[&[Some(0.0), Some(300.0), None], &[Some(320.0), Some(0.0), Some(900.0)], &[Some(10.0), Some(5.0), Some(0.0)]]);
    let s = delta_summary(&m, &m).unwrap();
    assert_eq!((s.mean_dt_s, s.median_dt_s, s.improved_pct, s.equal_pm1s_pct), (0.0, 0.0, 0.0, 100.0));
    assert_eq!((s.support, s.excluded), (5, 1));
    assert_eq!(s.summary_record("same"), ["same", "0", "0", "0", "100", "0", "0"]);
}

#[test]
fn empty_support() {
    let m = matrix(&[&[Some(0.0), None], &[None, Some(0.0)]]);
    assert!(matches!(delta_summary(&m, &m), Err(DiagnosticsError::EmptySupport(_))));
    assert!(shift_function(&[], &[1.0], &[0.5]).is_err());
    assert!(delta_ecdf(&[1.0], &[], &[0.5]).is_err());
}

#[test]
fn deciles_and_shift_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..100 {
        let base = sample(&mut rng);
        let scen: Vec<i64> = base.iter().map(|b| b + rng.random_range(-300..300)).collect();
        let pairs: Vec<(f64, f64)> = base.iter().zip(&scen).map(|(b, s)| (*b as f64, *s as f64)).collect();
        let dt: Vec<i64> = base.iter().zip(&scen).map(|(b, s)| s - b).collect();
        let s = summarise_pairs(&pairs).unwrap();
        for k in 0..=10 {
            assert_close(s.deciles[k], oracle_quantile(&dt, k as f64 / 10.0));
        }
        assert_close(s.median_dt_s, oracle_quantile(&dt, 0.5));
        let other = sample(&mut rng);
        let grid = default_p_grid();
        let c = shift_function(&floats(&base), &floats(&other), &grid).unwrap();
        for (p, v) in grid.iter().zip(&c.values) {
            assert_close(*v, oracle_quantile(&other, *p) - oracle_quantile(&base, *p));
        }
    }
}

#[test]
fn ecdf_sup_is_ks_statistic() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let (a, b) = (sample(&mut rng), sample(&mut rng));
        let sup = delta_ecdf_sup(&floats(&a), &floats(&b)).unwrap();
        assert!((sup - 100.0 * ks(&a, &b)).abs() < 1e-12);
    }
}

#[test]
fn uniform_shift_is_equivariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let base: Vec<f64> = floats(&sample(&mut rng)).iter().map(|x| x.abs() + 60.0).collect();
    let scen: Vec<f64> = base.iter().map(|x| x - 50.0).collect();
    let c = shift_function(&base, &scen, &default_p_grid()).unwrap();
    assert!(c.values.iter().all(|v| (v + 50.0).abs() < 1e-9));
    let pairs: Vec<(f64, f64)> = base.iter().copied().zip(scen.iter().copied()).collect();
    let s = summarise_pairs(&pairs).unwrap();
    assert!((s.mean_dt_s + 50.0).abs() < 1e-9);
    assert!(s.deciles.iter().all(|d| (d + 50.0).abs() < 1e-9));
}

#[test]
fn shares_partition_support() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let pairs: Vec<(f64, f64)> = (0..rng.random_range(1..100))
            .map(|_| (rng.random_range(0..2000) as f64, rng.random_range(0..2000) as f64))
            .collect();
        let s = summarise_pairs(&pairs).unwrap();
        assert!((s.improved_beyond_1s_pct + s.equal_pm1s_pct + s.worsened_pct - 100.0).abs() < 1e-9);
        assert!(s.improved_pct >= s.improved_beyond_1s_pct);
        assert!(s.better_10pct_pct <= s.better_5pct_pct && s.better_5pct_pct <= s.improved_pct);
        assert!(s.deciles.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn frobenius_pythagoras() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..100 {
        let rows: Vec<Vec<Option<f64>>> = (0..50)
            .map(|_| (0..50).map(|_| Some(rng.random_range(0.0..5000.0))).collect())
            .collect();
        let m = ODMatrix::from_rows((0..50).map(|i| i.to_string()).collect(), &rows, "random");
        let r = directionality(&m).unwrap();
        let lhs = r.norm_a * r.norm_a;
        let rhs = r.norm_s * r.norm_s + r.norm_k * r.norm_k;
        assert!((lhs - rhs).abs() <= 1e-9 * lhs);
    }
}

#[test]
fn symmetric_matrix_has_no_direction() {
    let m = matrix(&[&[Some(0.0), Some(7.0), None], &[Some(7.0), Some(0.0), Some(3.0)], &[Some(1.0), Some(3.0), Some(0.0)]]);
    let r = directionality(&m).unwrap();
    assert_eq!((r.di, r.variance_fraction, r.excluded_pairs), (0.0, 0.0, 2));
}

#[test]
fn small_asymmetry_share() {
    assert!((100.0 * variance_fraction(0.035) - 0.1224).abs() <= 0.0005);
}

fn node(i: usize) -> Node {
    Node { id: format!("n{i}"), lat: 50.8, lon: 4.3 + i as f64 * 0.01 }
}

fn part(scenario: &str, day: &str, k: usize, times: Vec<Option<u32>>) -> Partition {
    Partition {
        key: PartitionKey {
            scenario: scenario.into(),
            day: day.into(),
            start_time: ["0750", "0800", "0810"][k].into(),
            snapshot: ["t-10", "t", "t+10"][k].into(),
        },
        times,
    }
}

#[test]
fn one_improved_destination_from_one_origin() {
    let z = Some(0);
    let t = Some(600);
    let base = vec![z, t, t, t, z, t, t, t, z];
    let mut scen = base.clone();
    scen[1] = Some(510);
    let mut partitions = Vec::new();
    for k in 0..3 {
        partitions.push(part("baseline", "0610", k, base.clone()));
        partitions.push(part("full", "0610", k, scen.clone()));
    }
    let panel = ODPanel { nodes: (0..3).map(node).collect(), dropped: vec![], partitions };
    let d = per_origin_deltas(&panel, "baseline", "full", None);
    let v: Vec<f64> = d.deltas.iter().map(|x| x.delta_s).collect();
    assert_eq!(v, [-45.0, 0.0, 0.0]);
    // negative means faster
    assert!(v[0] < 0.0);
    assert_eq!(per_origin_deltas(&panel, "baseline", "full", Some("0610")).deltas, d.deltas);
    assert!(per_origin_deltas(&panel, "baseline", "baseline", None).deltas.iter().all(|x| x.delta_s == 0.0));
}

#[test]
fn dispersion_hand_example() {
    let z = Some(0);
    let c = Some(900);
    let mut partitions = Vec::new();
    for (k, t) in [600, 660, 720].iter().enumerate() {
        partitions.push(part("baseline", "0612", k, vec![z, c, c, c, z, c, c, c, z]));
        partitions.push(part("full", "0612", k, vec![z, Some(*t), c, c, z, c, c, c, z]));
    }
    let panel = ODPanel { nodes: (0..3).map(node).collect(), dropped: vec![], partitions };
    let d = per_origin_sd_delta(&panel, "baseline", "full");
    assert!((d.deltas[0].delta_s - 1200f64.sqrt()).abs() < 1e-12);
    assert_eq!(d.deltas[0].support, 2);
    assert_eq!(d.deltas[1].delta_s, 0.0);
    let back = per_origin_sd_delta(&panel, "full", "baseline");
    // less variability comes out negative
    assert!(back.deltas[0].delta_s < 0.0);
}

#[test]
fn unreachable_origin_is_omitted() {
    let z = Some(0);
    let times = vec![z, None, None, None, z, Some(5), None, Some(5), z];
    let partitions = (0..3).flat_map(|k| [part("baseline", "0610", k, times.clone()), part("full", "0610", k, times.clone())]).collect();
    let panel = ODPanel { nodes: (0..3).map(node).collect(), dropped: vec![], partitions };
    assert_eq!(per_origin_deltas(&panel, "baseline", "full", None).omitted, ["n0"]);
    assert_eq!(per_origin_sd_delta(&panel, "baseline", "full").omitted, ["n0"]);
}
