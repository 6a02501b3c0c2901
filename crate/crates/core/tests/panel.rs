mod support;

use std::collections::BTreeMap;

use odscope_core::geo::destination;
use odscope_core::gtfs::{Feed, Route, Service, Stop, StopTime, Trip, WeeklyCalendar};
use odscope_core::panel::{
    aggregate_over_instants, compute_panel, drop_unreachable, read_panel_csv, write_partition_csv, Node, ODPanel,
    Partition, PartitionKey, PanelError, RouteOptions, SliceSpec,
};
use odscope_core::router::{oracle_earliest_arrival, NetworkParams, Query, TimetableNetwork};
use odscope_core::LatLon;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::{service_day, CENTER};

/// Five stops 800 m apart heading east, trips every 10 min both ways.
fn line_feed() -> (Feed, Vec<LatLon>) {
    let mut f = Feed::default();
    let coords: Vec<LatLon> = (0..5).map(|i| destination(CENTER, 90.0, 800.0 * i as f64)).collect();
    for (i, c) in coords.iter().enumerate() {
        let id = format!("S{i}");
        f.stops.insert(id.clone(), Stop { id, name: format!("S{i}"), lat: c.lat, lon: c.lon, location_type: 0, parent_station: None });
    }
    f.routes.insert("L".into(), Route { id: "L".into(), agency_id: None, short_name: "1".into(), long_name: String::new(), route_type: 0 });
    let day = service_day();
    f.services.insert("S".into(), Service { weekly: Some(WeeklyCalendar { days: [true; 7], start: day, end: day }), ..Default::default() });
    for k in 0..12u32 {
        for dir in 0..2 {
            let start = 7 * 3600 + k * 600 + dir * 120;
            let order: Vec<usize> = if dir == 0 { (0..5).collect() } else { (0..5).rev().collect() };
            let id = format!("T{dir}{k:02}");
            f.trips.insert(id.clone(), Trip {
                id,
                route_id: "L".into(),
                service_id: "S".into(),
                headsign: None,
                direction_id: Some(dir as u8),
                stop_times: order.iter().enumerate().map(|(i, s)| {
                    let t = start + 150 * i as u32;
                    StopTime { stop_id: format!("S{s}"), arrival: t, departure: t }
                }).collect(),
            });
        }
    }
    f.validate().unwrap();
    (f, coords)
}

fn nodes_near(coords: &[LatLon]) -> Vec<Node> {
    coords
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let p = destination(*c, 0.0, 200.0);
            Node { id: format!("n{i}"), lat: p.lat, lon: p.lon }
        })
        .collect()
}

fn slice() -> SliceSpec {
    SliceSpec::around(service_day(), "AM", 8 * 3600)
}

fn networks(feed: &Feed, scenarios: &[&str]) -> BTreeMap<String, BTreeMap<chrono::NaiveDate, TimetableNetwork>> {
    let net = TimetableNetwork::build(feed, service_day(), NetworkParams::default());
    scenarios
        .iter()
        .map(|s| (s.to_string(), BTreeMap::from([(service_day(), net.clone())])))
        .collect()
}

#[test]
fn three_nodes_three_instants_eighteen_rows() {
    let (feed, coords) = line_feed();
    let nodes = nodes_near(&coords[..3]);
    let p = compute_panel(&networks(&feed, &["baseline"]), &nodes, &[slice()], RouteOptions::default()).unwrap();
    assert_eq!(p.rows().count(), 18);
    assert_eq!(p.row_count(), 18);
    assert!(p.rows().all(|r| r.origin.id != r.destination.id));
    let labels: Vec<&str> = p.partitions.iter().map(|x| x.key.snapshot.as_str()).collect();
    assert_eq!(labels, ["t-10", "t", "t+10"]);
    assert_eq!(p.partitions[0].key.start_time, "0750");
}

#[test]
fn identical_scenarios_identical_times() {
    let (feed, coords) = line_feed();
    let p = compute_panel(&networks(&feed, &["a", "b"]), &nodes_near(&coords), &[slice()], RouteOptions::default()).unwrap();
    let a: Vec<_> = p.select("a", None).map(|x| &x.times).collect();
    let b: Vec<_> = p.select("b", None).map(|x| &x.times).collect();
    assert_eq!(a, b);
}

#[test]
fn panel_values_equal_oracle() {
    let (feed, coords) = line_feed();
    let nodes = nodes_near(&coords);
    let nets = networks(&feed, &["baseline"]);
    let p = compute_panel(&nets, &nodes, &[slice()], RouteOptions::default()).unwrap();
    let net = &nets["baseline"][&service_day()];
    let points: Vec<LatLon> = nodes.iter().map(Node::coord).collect();
    let mut reachable = 0;
    for part in &p.partitions {
        let dep = part.key.start_time[..2].parse::<u32>().unwrap() * 3600 + part.key.start_time[2..].parse::<u32>().unwrap() * 60;
        for (i, o) in points.iter().enumerate() {
            let want = oracle_earliest_arrival(net, &Query::new(*o, points.clone(), dep)).unwrap();
            for j in 0..points.len() {
                if i != j {
                    assert_eq!(part.times[i * points.len() + j], want.times[j], "{i}->{j} at {dep}");
                    reachable += usize::from(want.times[j].is_some());
                }
            }
        }
    }
    assert_eq!(reachable, 60);
}

#[test]
fn isolated_node_is_dropped() {
    let (feed, coords) = line_feed();
    let mut nodes = nodes_near(&coords);
    let far = destination(CENTER, 180.0, 10_000.0);
    nodes.push(Node { id: "zz".into(), lat: far.lat, lon: far.lon });
    let p = compute_panel(&networks(&feed, &["baseline", "full"]), &nodes, &[slice()], RouteOptions::default()).unwrap();
    let before = p.row_count();
    assert_eq!(before, 2 * 3 * 6 * 5);
    let (kept, dropped) = drop_unreachable(&p);
    assert_eq!(dropped, ["zz"]);
    assert_eq!(kept.n(), 5);
    assert_eq!(kept.row_count(), 2 * 3 * 5 * 4);
    assert_eq!(kept.dropped.len(), 1);
    let (again, none) = drop_unreachable(&kept);
    assert!(none.is_empty());
    assert_eq!(again, kept);
}

#[test]
fn missing_network_is_reported() {
    let (feed, coords) = line_feed();
    let mut s = slice();
    s.date = s.date.succ_opt().unwrap();
    s.day_code = s.date.format("%m%d").to_string();
    let err = compute_panel(&networks(&feed, &["baseline"]), &nodes_near(&coords), &[s], RouteOptions::default());
    assert!(matches!(err, Err(PanelError::MissingNetwork { .. })));
}

fn to_csv(p: &ODPanel) -> Vec<Vec<u8>> {
    p.partitions
        .iter()
        .map(|part| {
            let mut buf = Vec::new();
            write_partition_csv(&mut buf, &p.nodes, part).unwrap();
            buf
        })
        .collect()
}

#[test]
fn csv_round_trip_and_header() {
    let (feed, coords) = line_feed();
    let mut nodes = nodes_near(&coords);
    let far = destination(CENTER, 180.0, 10_000.0);
    nodes.push(Node { id: "zz".into(), lat: far.lat, lon: far.lon });
    let p = compute_panel(&networks(&feed, &["baseline"]), &nodes, &[slice()], RouteOptions::default()).unwrap();
    let files = to_csv(&p);
    let text = String::from_utf8(files[0].clone()).unwrap();
    assert!(text.starts_with(
        "origin_id,destination_id,origin_lon,origin_lat,destination_lon,destination_lat,scenario,snapshot_time,time_s,day,start_time\n"
    ));
    assert!(text.contains(",baseline,t-10,NA,0610,0750\n"));
    let back = read_panel_csv(files.iter().map(|f| f.as_slice())).unwrap();
    assert_eq!(back.partitions, p.partitions);
    assert_eq!(to_csv(&back), files);
}

#[test]
fn malformed_panel_csv() {
    let head = "origin_id,destination_id,origin_lon,origin_lat,destination_lon,destination_lat,scenario,snapshot_time,time_s,day,start_time\n";
    let bad = format!("{head}a,b,4.3,50.8,4.4,50.8,baseline,t,soon,0610,0800\n");
    assert!(matches!(read_panel_csv([bad.as_bytes()]), Err(PanelError::Csv { line: 2, .. })));
    assert!(read_panel_csv(["origin,destination\n".as_bytes()]).is_err());
    let partial = format!("{head}a,b,4.3,50.8,4.4,50.8,baseline,t,10,0610,0800\n");
    assert!(matches!(read_panel_csv([partial.as_bytes()]), Err(PanelError::Inconsistent(_))));
}

#[test]
fn thread_count_does_not_change_results() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let feed = support::random_feed(&mut rng, 20, 50);
    let nodes: Vec<Node> = (0..25)
        .map(|i| {
            let p = support::random_point(&mut rng, 2000.0);
            Node { id: format!("n{i:02}"), lat: p.lat, lon: p.lon }
        })
        .collect();
    let nets = networks(&feed, &["baseline"]);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| compute_panel(&nets, &nodes, &[slice()], RouteOptions::default()).unwrap())
    };
    assert_eq!(to_csv(&run(1)), to_csv(&run(8)));
}

fn random_panel(seed: u64) -> ODPanel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..7);
    let nodes: Vec<Node> = (0..n).map(|i| Node { id: format!("n{i}"), lat: 50.0, lon: 4.0 + i as f64 * 0.01 }).collect();
    // some nodes never reachable
    let dead: Vec<bool> = (0..n).map(|_| rng.random_bool(0.25)).collect();
    let mut partitions = Vec::new();
    for scenario in ["baseline", "full"] {
        for day in ["0610", "0612"] {
            for (k, start) in ["0750", "0800", "0810"].iter().enumerate() {
                let times = (0..n * n)
                    .map(|c| {
                        let (i, j) = (c / n, c % n);
                        if i == j {
                            Some(0)
                        } else if dead[i] || dead[j] || rng.random_bool(0.1) {
                            None
                        } else {
                            Some(rng.random_range(60..4000))
                        }
                    })
                    .collect();
                partitions.push(Partition {
                    key: PartitionKey {
                        scenario: scenario.into(),
                        day: day.into(),
                        start_time: start.to_string(),
                        snapshot: ["t-10", "t", "t+10"][k].into(),
                    },
                    times,
                });
            }
        }
    }
    ODPanel { nodes, dropped: vec![], partitions }
}

proptest! {
    #[test]
    fn averaging_commutes_with_dropping(seed in any::<u64>()) {
        let p = random_panel(seed);
        let (kept, _) = drop_unreachable(&p);
        let pos: Vec<usize> = kept.nodes.iter().map(|k| p.nodes.iter().position(|n| n.id == k.id).unwrap()).collect();
        for scenario in ["baseline", "full"] {
            for day in [None, Some("0610"), Some("0612")] {
                let full = aggregate_over_instants(&p, scenario, day);
                let small = aggregate_over_instants(&kept, scenario, day);
                for (a, &i) in pos.iter().enumerate() {
                    for (b, &j) in pos.iter().enumerate() {
                        prop_assert_eq!(small.get(a, b), full.get(i, j));
                    }
                }
            }
        }
    }

    #[test]
    fn row_count_is_conserved(seed in any::<u64>()) {
        let p = random_panel(seed);
        let n = p.n();
        prop_assert_eq!(p.rows().count(), p.partitions.len() * n * (n - 1));
        let (kept, dropped) = drop_unreachable(&p);
        prop_assert_eq!(kept.n() + dropped.len(), n);
        for node in &kept.nodes {
            let i = p.nodes.iter().position(|x| x.id == node.id).unwrap();
            let alive = p.partitions.iter().any(|part| (0..n).any(|j| j != i && (part.times[i * n + j].is_some() || part.times[j * n + i].is_some())));
            prop_assert!(alive);
        }
    }
}
