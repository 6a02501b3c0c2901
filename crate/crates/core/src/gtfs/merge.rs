use std::collections::BTreeSet;

use super::{Agency, Feed, GtfsError, Route, Stop, StopTime, Trip};

fn prefixed(prefix: &str, id: &str) -> String {
    format!("{prefix}:{id}")
}

/// Merges feeds into one, rewriting every identifier as `prefix:original`.
///
/// Timetable values are untouched. Stops of different agencies stay distinct
/// entities; the router links co-located stops through foot transfers.
pub fn merge_feeds(feeds: &[Feed], prefixes: &[&str]) -> Result<Feed, GtfsError> {
    if feeds.len() != prefixes.len() {
        return Err(GtfsError::PrefixCountMismatch {
            feeds: feeds.len(),
            prefixes: prefixes.len(),
        });
    }
    let mut seen = BTreeSet::new();
    for p in prefixes {
        if !seen.insert(*p) {
            return Err(GtfsError::DuplicatePrefix(p.to_string()));
        }
    }

    let mut out = Feed::default();
    for (feed, &p) in feeds.iter().zip(prefixes) {
        out.agencies.extend(feed.agencies.iter().map(|a| Agency {
            id: prefixed(p, &a.id),
            ..a.clone()
        }));
        for s in feed.stops.values() {
            let stop = Stop {
                id: prefixed(p, &s.id),
                parent_station: s.parent_station.as_deref().map(|x| prefixed(p, x)),
                ..s.clone()
            };
            out.stops.insert(stop.id.clone(), stop);
        }
        for r in feed.routes.values() {
            let route = Route {
                id: prefixed(p, &r.id),
                agency_id: r.agency_id.as_deref().map(|x| prefixed(p, x)),
                ..r.clone()
            };
            out.routes.insert(route.id.clone(), route);
        }
        for (id, s) in &feed.services {
            out.services.insert(prefixed(p, id), s.clone());
        }
        for t in feed.trips.values() {
            let trip = Trip {
                id: prefixed(p, &t.id),
                route_id: prefixed(p, &t.route_id),
                service_id: prefixed(p, &t.service_id),
                stop_times: t
                    .stop_times
                    .iter()
                    .map(|st| StopTime {
                        stop_id: prefixed(p, &st.stop_id),
                        ..st.clone()
                    })
                    .collect(),
                ..t.clone()
            };
            out.trips.insert(trip.id.clone(), trip);
        }
        for (trip, fs) in &feed.frequencies {
            out.frequencies.insert(prefixed(p, trip), fs.clone());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gtfs::{Service, WeeklyCalendar};
    use chrono::NaiveDate;

    pub(crate) fn one_trip_feed() -> Feed {
        let mut f = Feed::default();
        for (id, lat) in [("A", 50.0), ("B", 50.01)] {
            f.stops.insert(
                id.into(),
                Stop {
                    id: id.into(),
                    name: id.into(),
                    lat,
                    lon: 4.0,
                    location_type: 0,
                    parent_station: None,
                },
            );
        }
        f.routes.insert(
            "R".into(),
            Route {
                id: "R".into(),
                agency_id: None,
                short_name: "1".into(),
                long_name: String::new(),
                route_type: 3,
            },
        );
        f.services.insert(
            "S".into(),
            Service {
                weekly: Some(WeeklyCalendar {
                    days: [true; 7],
                    start: NaiveDate::from_ymd_opt(2025, 1, 1).unwrap(),
                    end: NaiveDate::from_ymd_opt(2025, 12, 31).unwrap(),
                }),
                ..Default::default()
            },
        );
        f.trips.insert(
            "T".into(),
            Trip {
                id: "T".into(),
                route_id: "R".into(),
                service_id: "S".into(),
                headsign: None,
                direction_id: None,
                stop_times: vec![
                    StopTime { stop_id: "A".into(), arrival: 28_800, departure: 28_800 },
                    StopTime { stop_id: "B".into(), arrival: 29_100, departure: 29_100 },
                ],
            },
        );
        f
    }

    #[test]
    fn single_feed_is_renamed() {
        let f = one_trip_feed();
        let m = merge_feeds(std::slice::from_ref(&f), &["stib"]).unwrap();
        assert!(m.stops.keys().all(|k| k.starts_with("stib:")));
        assert!(m.trips.keys().all(|k| k.starts_with("stib:")));
        let t = &m.trips["stib:T"];
        assert_eq!(t.route_id, "stib:R");
        assert_eq!(t.service_id, "stib:S");
        assert_eq!(t.stop_times[0].stop_id, "stib:A");
        assert_eq!(t.stop_times[1].arrival, 29_100);
        m.validate().unwrap();
    }

    #[test]
    fn counts_add_up() {
        let f = one_trip_feed();
        let m = merge_feeds(&[f.clone(), f], &["a", "b"]).unwrap();
        assert_eq!(m.trips.len(), 2);
        assert_eq!(m.stops.len(), 4);
        assert_eq!(m.stop_time_count(), 4);
    }

    #[test]
    fn duplicate_prefix() {
        let f = one_trip_feed();
        let err = merge_feeds(&[f.clone(), f], &["a", "a"]).unwrap_err();
        assert!(matches!(err, GtfsError::DuplicatePrefix(p) if p == "a"));
    }

    #[test]
    fn prefix_count_must_match() {
        let err = merge_feeds(&[one_trip_feed()], &[]).unwrap_err();
        assert!(matches!(err, GtfsError::PrefixCountMismatch { .. }));
    }
}
