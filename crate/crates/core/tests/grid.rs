use std::path::PathBuf;

use odscope_core::geo::{destination, haversine_m, LocalProjection};
use odscope_core::grid::{
    detect_holes, expected_access_overhead, generate_grid, generate_grid_with_offset, Boundary, GridError, Lattice,
};
use odscope_core::LatLon;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(name)
}

fn outline() -> Boundary {
    Boundary::from_geojson(&std::fs::read_to_string(data("data/brussels_outline.geojson")).unwrap()).unwrap()
}

#[test]
fn outline_count_matches_golden() {
    let g = generate_grid(&outline(), 500.0).unwrap();
    let golden = data("tests/golden/brussels_outline_500.txt");
    if std::env::var_os("UPDATE_GOLDEN").is_some() || !golden.exists() {
        std::fs::write(&golden, format!("{}\n", g.len())).unwrap();
    }
    let want: usize = std::fs::read_to_string(&golden).unwrap().trim().parse().unwrap();
    assert_eq!(g.len(), want);
}

/// Winding number, an independent inside test over projected vertices.
fn winding(ring: &[(f64, f64)], p: (f64, f64)) -> i32 {
    let mut w = 0;
    for s in ring.windows(2) {
        let (a, b) = (s[0], s[1]);
        let cross = (b.0 - a.0) * (p.1 - a.1) - (p.0 - a.0) * (b.1 - a.1);
        if a.1 <= p.1 && b.1 > p.1 && cross > 0.0 {
            w += 1;
        } else if a.1 > p.1 && b.1 <= p.1 && cross < 0.0 {
            w -= 1;
        }
    }
    w
}

fn planar_ring(g: &Lattice, b: &Boundary) -> Vec<(f64, f64)> {
    b.polygons[0].rings[0].iter().map(|p| g.projection.forward(*p)).collect()
}

#[test]
fn outline_centroids_inside_and_evenly_spaced() {
    let b = outline();
    let g = generate_grid(&b, 500.0).unwrap();
    let ring = planar_ring(&g, &b);
    for c in &g.centroids {
        assert_ne!(winding(&ring, (c.x, c.y)), 0, "{} outside", c.id);
        let (x, y) = g.projection.forward(c.coord());
        assert!((x - c.x).abs() < 1e-6 && (y - c.y).abs() < 1e-6);
        assert!(((c.x - g.anchor.0) / 500.0 - 0.5 - f64::from(c.col)).abs() < 1e-9);
        assert!(((c.y - g.anchor.1) / 500.0 - 0.5 - f64::from(c.row)).abs() < 1e-9);
    }
    // every lattice point inside the ring was kept
    let rows = g.centroids.iter().map(|c| c.row).max().unwrap() + 2;
    let cols = g.centroids.iter().map(|c| c.col).max().unwrap() + 2;
    let mut expected = 0;
    for r in 0..rows {
        for c in 0..cols {
            let p = (g.anchor.0 + (f64::from(c) + 0.5) * 500.0, g.anchor.1 + (f64::from(r) + 0.5) * 500.0);
            expected += usize::from(winding(&ring, p) != 0);
        }
    }
    assert_eq!(g.len(), expected);
    let order: Vec<(u32, u32)> = g.centroids.iter().map(|c| (c.row, c.col)).collect();
    let mut sorted = order.clone();
    sorted.sort();
    assert_eq!(order, sorted);
}

#[test]
fn access_overhead_closed_form() {
    let (d, t) = expected_access_overhead(500.0, 1.3);
    assert!((d - 191.30).abs() <= 0.01, "{d}");
    assert!((t - 147.15).abs() < 0.01, "{t}");
    let (unit, _) = expected_access_overhead(1.0, 1.0);
    assert!((unit - 0.38260).abs() < 1e-5);
}

#[test]
fn access_overhead_agrees_with_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(191);
    let n = 10_000_000;
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..n {
        let x: f64 = rng.random_range(-0.5..0.5);
        let y: f64 = rng.random_range(-0.5..0.5);
        let d = x.hypot(y);
        sum += d;
        sq += d * d;
    }
    let mean = sum / n as f64;
    let se = ((sq / n as f64 - mean * mean) / n as f64).sqrt();
    let (exact, _) = expected_access_overhead(1.0, 1.0);
    assert!((mean - exact).abs() <= 3.0 * se, "mc {mean} exact {exact} se {se}");
    assert!((mean - 0.38260).abs() < 1e-4);
}

#[test]
fn holes_basic() {
    let g = generate_grid(&outline(), 500.0).unwrap();
    let expected = g.coords();
    assert!(detect_holes(&expected, &expected, 35.0).is_empty());
    let mut observed = expected.clone();
    observed.remove(17);
    assert_eq!(detect_holes(&expected, &observed, 35.0), [17]);
}

#[test]
fn hole_tolerance_boundary() {
    let c = LatLon::new(50.85, 4.35);
    for (bearing, dist, hole) in [(0.0, 34.0, false), (77.0, 34.0, false), (0.0, 36.0, true), (200.0, 36.0, true)] {
        let p = destination(c, bearing, dist);
        assert!((haversine_m(c, p) - dist).abs() < 1e-6);
        assert_eq!(detect_holes(&[c], &[p], 35.0).len(), usize::from(hole), "{bearing} {dist}");
    }
}

#[test]
fn marked_holes_reach_geojson() {
    let mut g = generate_grid(&outline(), 500.0).unwrap();
    let mut observed = g.coords();
    observed.swap_remove(3);
    g.mark_holes(&observed, 35.0);
    assert_eq!(g.holes, [3]);
    let v = g.to_geojson();
    let feats = v["features"].as_array().unwrap();
    assert_eq!(feats.len(), g.len());
    assert_eq!(feats[3]["properties"]["is_hole"], true);
    assert_eq!(feats[4]["properties"]["is_hole"], false);
    assert_eq!(feats[0]["geometry"]["coordinates"][0].as_array().unwrap().len(), 5);
    assert_eq!(v["metadata"]["cell_size_m"], 500.0);
}

#[test]
fn offset_moves_anchor() {
    let b = outline();
    let g0 = generate_grid(&b, 500.0).unwrap();
    let g1 = generate_grid_with_offset(&b, 500.0, (-250.0, -250.0)).unwrap();
    assert!((g1.anchor.0 - g0.anchor.0 + 250.0).abs() < 1e-9);
    assert_ne!(g0.centroids[0].coord(), g1.centroids[0].coord());
}

#[test]
fn open_ring_in_geojson_is_rejected() {
    let text = r#"{"type":"Polygon","coordinates":[[[4.34,50.84],[4.36,50.84],[4.36,50.86],[4.34,50.86]]]}"#;
    assert!(matches!(Boundary::from_geojson(text), Err(GridError::InvalidPolygon(_))));
}

fn rotated(b: &Boundary, k: usize, reverse: bool) -> Boundary {
    let mut ring = b.polygons[0].rings[0].clone();
    ring.pop();
    if reverse {
        ring.reverse();
    }
    let k = k % ring.len();
    ring.rotate_left(k);
    Boundary::from_ring(&ring).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn start_vertex_does_not_matter(k in 0usize..64, reverse in any::<bool>(), size in 200.0f64..900.0) {
        let b = outline();
        let g0 = generate_grid(&b, size).unwrap();
        let g1 = generate_grid(&rotated(&b, k, reverse), size).unwrap();
        prop_assert_eq!(g0, g1);
    }

    #[test]
    fn random_squares_tile_exactly(lat in 40.0f64..60.0, lon in -10.0f64..20.0, n in 1u32..6) {
        let c = LatLon::new(lat, lon);
        let proj = LocalProjection::new(c);
        let h = f64::from(n) * 250.0;
        let ring: Vec<LatLon> = [(-h, -h), (h, -h), (h, h), (-h, h)].iter().map(|(x, y)| proj.inverse(*x, *y)).collect();
        let g = generate_grid(&Boundary::from_ring(&ring).unwrap(), 500.0).unwrap();
        prop_assert_eq!(g.len() as u32, n * n);
    }
}
