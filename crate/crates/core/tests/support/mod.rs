//! Random small timetables shared by the router tests and the acceptance
//! suite.
#![allow(dead_code)]

use chrono::NaiveDate;
use odscope_core::geo::destination;
use odscope_core::gtfs::{Feed, Route, Service, Stop, StopTime, Trip, WeeklyCalendar};
use odscope_core::router::{NetworkParams, Query, WalkParams};
use odscope_core::LatLon;
use rand::Rng;

pub const CENTER: LatLon = LatLon::new(50.846, 4.352);

pub fn service_day() -> NaiveDate {
    NaiveDate::from_ymd_opt(2025, 6, 10).unwrap()
}

/// Uniform point in a square of `half_side` metres around the centre.
pub fn random_point(rng: &mut impl Rng, half_side: f64) -> LatLon {
    let east = destination(CENTER, 90.0, rng.random_range(-half_side..half_side));
    destination(east, 0.0, rng.random_range(-half_side..half_side))
}

/// Up to `max_stops` stops and `max_trips` trips on a few lines; some trips
/// of a line overtake others and some run on another service day.
pub fn random_feed(rng: &mut impl Rng, max_stops: usize, max_trips: usize) -> Feed {
    let mut f = Feed::default();
    let n_stops = rng.random_range(2..=max_stops);
    for i in 0..n_stops {
        let c = random_point(rng, 2000.0);
        let id = format!("s{i}");
        f.stops.insert(
            id.clone(),
            Stop { id, name: format!("Stop {i}"), lat: c.lat, lon: c.lon, location_type: 0, parent_station: None },
        );
    }
    // a few stops are exact duplicates, as in co-located platforms
    if n_stops > 3 && rng.random_bool(0.5) {
        let c = f.stops["s0"].clone();
        if let Some(s) = f.stops.get_mut("s1") {
            s.lat = c.lat;
            s.lon = c.lon;
        }
    }
    let day = service_day();
    for (id, days) in [("ON", [true; 7]), ("OFF", [false; 7])] {
        f.services.insert(
            id.into(),
            Service {
                weekly: Some(WeeklyCalendar { days, start: day, end: day }),
                ..Default::default()
            },
        );
    }
    let n_lines = rng.random_range(1..=5);
    let lines: Vec<Vec<usize>> = (0..n_lines)
        .map(|_| {
            let len = rng.random_range(2..=n_stops.min(6));
            let mut seq: Vec<usize> = Vec::new();
            while seq.len() < len {
                let s = rng.random_range(0..n_stops);
                if !seq.contains(&s) {
                    seq.push(s);
                }
            }
            seq
        })
        .collect();
    for (l, _) in lines.iter().enumerate() {
        f.routes.insert(
            format!("L{l}"),
            Route { id: format!("L{l}"), agency_id: None, short_name: l.to_string(), long_name: String::new(), route_type: 3 },
        );
    }
    let n_trips = rng.random_range(0..=max_trips);
    for k in 0..n_trips {
        let l = rng.random_range(0..lines.len());
        let mut t = rng.random_range(25_200..32_400u32);
        let mut stop_times = Vec::new();
        for (i, &s) in lines[l].iter().enumerate() {
            if i > 0 {
                t += rng.random_range(30..600);
            }
            let dwell = if rng.random_bool(0.3) { rng.random_range(0..60) } else { 0 };
            stop_times.push(StopTime { stop_id: format!("s{s}"), arrival: t, departure: t + dwell });
            t += dwell;
        }
        let id = format!("t{k:03}");
        f.trips.insert(
            id.clone(),
            Trip {
                id,
                route_id: format!("L{l}"),
                service_id: if rng.random_bool(0.9) { "ON" } else { "OFF" }.into(),
                headsign: None,
                direction_id: None,
                stop_times,
            },
        );
    }
    f.validate().unwrap();
    f
}

pub fn random_params(rng: &mut impl Rng) -> NetworkParams {
    NetworkParams {
        walk: WalkParams {
            speed: rng.random_range(0.8..2.0),
            detour: rng.random_range(1.0..1.6),
            max_access_m: rng.random_range(200.0..1500.0),
        },
        transfer_radius_m: rng.random_range(0.0..800.0),
        transfer_slack_s: if rng.random_bool(0.5) { 0 } else { rng.random_range(0..180) },
    }
}

/// Origin and destinations near the network; some destinations sit on stops.
pub fn random_query(rng: &mut impl Rng, feed: &Feed) -> Query {
    let origin = if !feed.stops.is_empty() && rng.random_bool(0.3) {
        let i = rng.random_range(0..feed.stops.len());
        feed.stops.values().nth(i).unwrap().coord()
    } else {
        random_point(rng, 2300.0)
    };
    let mut destinations: Vec<LatLon> = (0..6).map(|_| random_point(rng, 2300.0)).collect();
    destinations.extend(feed.stops.values().take(4).map(Stop::coord));
    Query {
        origin,
        destinations,
        departure: rng.random_range(24_000..33_000),
        max_rounds: rng.random_range(1..=5),
        max_walk_m: if rng.random_bool(0.5) { None } else { Some(rng.random_range(100.0..1500.0)) },
    }
}
