use std::collections::{BTreeMap, BTreeSet, HashSet};

use chrono::NaiveDate;

use crate::geo::haversine_m;
use crate::gtfs::{expand_trip, service_dates, Feed, Frequency, Route, Service, Stop, StopTime, Trip};
use crate::stats;

use super::runtime::derive_run_times;
use super::{Edit, LineDefinition, RouteSelector, RunTimeSource, ScenarioError, ScenarioSpec, Station};

/// An extension reuses an existing stop of the same name this close.
const STOP_REUSE_RADIUS_M: f64 = 200.0;

struct Editor<'a> {
    base: &'a Feed,
    feed: Feed,
    dates: &'a [NaiveDate],
    removed: Vec<Route>,
}

/// Applies the edits of `spec` to `base` in order.
///
/// `dates` are the service days on which added lines run. Trips that no edit
/// touches are carried over unchanged.
pub fn apply_scenario(base: &Feed, spec: &ScenarioSpec, dates: &[NaiveDate]) -> Result<Feed, ScenarioError> {
    spec.validate()
        .map_err(|(i, m)| ScenarioError::InvalidEdit(format!("edit {i}: {m}")))?;
    let mut ed = Editor {
        base,
        feed: base.clone(),
        dates,
        removed: Vec::new(),
    };
    for edit in &spec.edits {
        match edit {
            Edit::AddLine(line) => ed.add_line(line)?,
            Edit::RemoveLine { route } => ed.remove_line(route)?,
            Edit::CurtailLine { route, from, to } => ed.curtail(route, from, to)?,
            Edit::ExtendLine {
                route,
                anchor,
                stations,
                run_times,
                dwell_s,
            } => ed.extend(route, anchor, stations, run_times, *dwell_s)?,
            Edit::ScaleSupply { route, factor } => {
                let ids = ed.resolve(route)?;
                scale_routes(&mut ed.feed, &ids, *factor);
            }
        }
    }
    debug_assert!(ed.feed.validate().is_ok());
    Ok(ed.feed)
}

/// Thins the trips of the selected routes to `⌈factor·n⌉` per service day
/// and direction, dropping evenly spaced departures.
///
/// With `m` trips to drop out of `n`, the ones at 0-based departure ranks
/// `⌊(i + 0.5)·n/m⌋`, `i = 0..m`, stop running on that day.
pub fn scale_supply(feed: &Feed, selector: &RouteSelector, factor: f64) -> Result<Feed, ScenarioError> {
    if !(factor > 0.0 && factor <= 1.0) {
        return Err(ScenarioError::InvalidEdit(format!("scale factor {factor} is outside (0, 1]")));
    }
    let ids = resolve(feed, &[], selector)?;
    let mut out = feed.clone();
    scale_routes(&mut out, &ids, factor);
    Ok(out)
}

fn names_equal(a: &str, b: &str) -> bool {
    a.trim().to_lowercase() == b.trim().to_lowercase()
}

fn resolve(feed: &Feed, removed: &[Route], sel: &RouteSelector) -> Result<BTreeSet<String>, ScenarioError> {
    let ids: BTreeSet<String> = feed
        .routes
        .values()
        .filter(|r| sel.matches(r))
        .map(|r| r.id.clone())
        .collect();
    if !ids.is_empty() {
        return Ok(ids);
    }
    if removed.iter().any(|r| sel.matches(r)) {
        Err(ScenarioError::EditConflict(sel.0.clone()))
    } else {
        Err(ScenarioError::UnresolvedSelector(sel.0.clone()))
    }
}

/// Ranks removed when keeping `⌈factor·n⌉` of `n` ordered trips.
pub(crate) fn removed_ranks(n: usize, factor: f64) -> Vec<usize> {
    // the epsilon keeps 0.8 * 10 at 8 despite binary rounding
    let kept = ((factor * n as f64) - 1e-9).ceil().max(0.0) as usize;
    let m = n - kept.min(n);
    (0..m).map(|i| ((2 * i + 1) * n) / (2 * m)).collect()
}

fn scale_routes(feed: &mut Feed, routes: &BTreeSet<String>, factor: f64) {
    // thinning counts departures, so headway-based templates are expanded first
    let templates: Vec<String> = feed
        .frequencies
        .keys()
        .filter(|id| feed.trips.get(*id).is_some_and(|t| routes.contains(&t.route_id)))
        .cloned()
        .collect();
    for id in templates {
        let fs = feed.frequencies.remove(&id).unwrap_or_default();
        if let Some(template) = feed.trips.remove(&id) {
            for t in expand_trip(&template, &fs) {
                feed.trips.insert(t.id.clone(), t);
            }
        }
    }
    let trips: Vec<&Trip> = feed.trips.values().filter(|t| routes.contains(&t.route_id)).collect();
    let services: BTreeSet<&str> = trips.iter().map(|t| t.service_id.as_str()).collect();
    let mut cut: BTreeMap<String, BTreeSet<NaiveDate>> = BTreeMap::new();
    for date in service_dates(feed, services.iter().copied()) {
        let mut groups: BTreeMap<Option<u8>, Vec<&Trip>> = BTreeMap::new();
        for t in &trips {
            if feed.services[&t.service_id].is_active(date) {
                groups.entry(t.direction_id).or_default().push(t);
            }
        }
        for mut group in groups.into_values() {
            group.sort_by(|a, b| (a.first_departure(), &a.id).cmp(&(b.first_departure(), &b.id)));
            for r in removed_ranks(group.len(), factor) {
                cut.entry(group[r].id.clone()).or_default().insert(date);
            }
        }
    }

    // trips sharing a service and a set of cut dates share a derived service
    let mut derived: BTreeMap<(String, BTreeSet<NaiveDate>), String> = BTreeMap::new();
    for (trip_id, dates) in cut {
        let service_id = feed.trips[&trip_id].service_id.clone();
        let key = (service_id.clone(), dates);
        let next = derived.values().filter(|v| v.starts_with(&format!("{service_id}#cut"))).count();
        let new_id = derived
            .entry(key.clone())
            .or_insert_with(|| format!("{service_id}#cut{next}"))
            .clone();
        if !feed.services.contains_key(&new_id) {
            let mut s: Service = feed.services[&service_id].clone();
            for d in &key.1 {
                s.added.remove(d);
                s.removed.insert(*d);
            }
            feed.services.insert(new_id.clone(), s);
        }
        feed.trips.get_mut(&trip_id).expect("trip exists").service_id = new_id;
    }
}

impl Editor<'_> {
    fn resolve(&self, sel: &RouteSelector) -> Result<BTreeSet<String>, ScenarioError> {
        resolve(&self.feed, &self.removed, sel)
    }

    fn add_line(&mut self, line: &LineDefinition) -> Result<(), ScenarioError> {
        if self.feed.routes.contains_key(&line.route_id) {
            return Err(ScenarioError::InvalidEdit(format!("route {} already exists", line.route_id)));
        }
        let coords: Vec<_> = line.stations.iter().map(Station::coord).collect();
        let segments = derive_run_times(&coords, &line.calibration)?;

        let rid = &line.route_id;
        self.feed.routes.insert(
            rid.clone(),
            Route {
                id: rid.clone(),
                agency_id: None,
                short_name: line.short_name.clone(),
                long_name: line.long_name.clone(),
                route_type: line.route_type,
            },
        );
        let stop_ids: Vec<String> = (0..line.stations.len()).map(|i| format!("scn:{rid}:{:02}", i + 1)).collect();
        for (id, st) in stop_ids.iter().zip(&line.stations) {
            self.feed.stops.insert(
                id.clone(),
                Stop {
                    id: id.clone(),
                    name: st.name.clone(),
                    lat: st.lat,
                    lon: st.lon,
                    location_type: 0,
                    parent_station: None,
                },
            );
        }

        let day_types: BTreeSet<_> = line.headways.iter().map(|b| b.days).collect();
        for d in &day_types {
            let service = Service {
                weekly: None,
                added: self.dates.iter().copied().filter(|x| d.matches(*x)).collect(),
                removed: BTreeSet::new(),
            };
            self.feed.services.insert(format!("scn:{rid}:{}", d.tag()), service);
        }

        let directions: &[u8] = if line.bidirectional { &[0, 1] } else { &[0] };
        for &dir in directions {
            let (ids, segs): (Vec<&String>, Vec<u32>) = if dir == 0 {
                (stop_ids.iter().collect(), segments.clone())
            } else {
                (stop_ids.iter().rev().collect(), segments.iter().rev().copied().collect())
            };
            let headsign = line.stations[if dir == 0 { line.stations.len() - 1 } else { 0 }].name.clone();
            let calls = timed_calls(&ids, &segs, line.dwell_s);
            for (b, band) in line.headways.iter().enumerate() {
                let template = Trip {
                    id: format!("scn:{rid}:{dir}:{b}"),
                    route_id: rid.clone(),
                    service_id: format!("scn:{rid}:{}", band.days.tag()),
                    headsign: Some(headsign.clone()),
                    direction_id: Some(dir),
                    stop_times: calls.clone(),
                };
                let freq = Frequency {
                    start: band.start,
                    end: band.end,
                    headway: band.headway_s,
                    exact_times: true,
                };
                for trip in expand_trip(&template, &[freq]) {
                    self.feed.trips.insert(trip.id.clone(), trip);
                }
            }
        }
        Ok(())
    }

    fn remove_line(&mut self, sel: &RouteSelector) -> Result<(), ScenarioError> {
        let ids = self.resolve(sel)?;
        let gone: HashSet<String> = self
            .feed
            .trips
            .values()
            .filter(|t| ids.contains(&t.route_id))
            .map(|t| t.id.clone())
            .collect();
        self.feed.trips.retain(|id, _| !gone.contains(id));
        self.feed.frequencies.retain(|id, _| !gone.contains(id));
        for id in ids {
            if let Some(r) = self.feed.routes.remove(&id) {
                self.removed.push(r);
            }
        }
        Ok(())
    }

    fn stop_name(&self, stop_id: &str) -> &str {
        self.feed.stops.get(stop_id).map(|s| s.name.as_str()).unwrap_or("")
    }

    fn curtail(&mut self, sel: &RouteSelector, from: &str, to: &str) -> Result<(), ScenarioError> {
        let ids = self.resolve(sel)?;
        // stops lying between the two named ends on any trip of the line
        let mut span: HashSet<String> = HashSet::new();
        for t in self.feed.trips.values().filter(|t| ids.contains(&t.route_id)) {
            let pos = |name: &str| t.stop_times.iter().position(|st| names_equal(self.stop_name(&st.stop_id), name));
            if let (Some(a), Some(b)) = (pos(from), pos(to)) {
                let (lo, hi) = (a.min(b), a.max(b));
                span.extend(t.stop_times[lo..=hi].iter().map(|st| st.stop_id.clone()));
            }
        }
        if span.is_empty() {
            return Err(ScenarioError::InvalidEdit(format!(
                "no trip of route {sel} serves both {from:?} and {to:?}"
            )));
        }

        let mut dropped = Vec::new();
        for t in self.feed.trips.values_mut().filter(|t| ids.contains(&t.route_id)) {
            // longest run of consecutive calls inside the span
            let (mut best, mut cur_start) = ((0, 0), 0);
            for (i, st) in t.stop_times.iter().enumerate() {
                if !span.contains(&st.stop_id) {
                    cur_start = i + 1;
                } else if i + 1 - cur_start > best.1 - best.0 {
                    best = (cur_start, i + 1);
                }
            }
            if best.1 - best.0 < 2 {
                dropped.push(t.id.clone());
            } else if best != (0, t.stop_times.len()) {
                t.stop_times = t.stop_times[best.0..best.1].to_vec();
            }
        }
        for id in dropped {
            self.feed.trips.remove(&id);
            self.feed.frequencies.remove(&id);
        }
        Ok(())
    }

    /// Median running time between two named stops, either way, in the
    /// unedited base timetable.
    fn observed_segment(&self, a: &str, b: &str) -> Option<u32> {
        let name = |id: &str| self.base.stops.get(id).map(|s| s.name.as_str()).unwrap_or("");
        let mut samples = Vec::new();
        for t in self.base.trips.values() {
            for w in t.stop_times.windows(2) {
                let (x, y) = (name(&w[0].stop_id), name(&w[1].stop_id));
                if (names_equal(x, a) && names_equal(y, b)) || (names_equal(x, b) && names_equal(y, a)) {
                    samples.push(f64::from(w[1].arrival - w[0].departure));
                }
            }
        }
        if samples.is_empty() {
            return None;
        }
        Some(stats::quantile_sorted(&stats::sorted(&samples), 0.5).round() as u32)
    }

    fn stop_for(&mut self, route_id: &str, st: &Station) -> String {
        let near = self
            .feed
            .stops
            .values()
            .filter(|s| names_equal(&s.name, &st.name) && s.location_type == 0)
            .map(|s| (haversine_m(s.coord(), st.coord()), s.id.clone()))
            .filter(|(d, _)| *d <= STOP_REUSE_RADIUS_M)
            .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        if let Some((_, id)) = near {
            return id;
        }
        let slug: String = st
            .name
            .chars()
            .map(|c| if c.is_alphanumeric() { c.to_ascii_lowercase() } else { '-' })
            .collect();
        let id = format!("scn:{route_id}:{slug}");
        self.feed.stops.insert(
            id.clone(),
            Stop {
                id: id.clone(),
                name: st.name.clone(),
                lat: st.lat,
                lon: st.lon,
                location_type: 0,
                parent_station: None,
            },
        );
        id
    }

    fn extend(
        &mut self,
        sel: &RouteSelector,
        anchor: &str,
        stations: &[Station],
        source: &RunTimeSource,
        dwell: u32,
    ) -> Result<(), ScenarioError> {
        let ids = self.resolve(sel)?;
        let anchor_stop = self
            .feed
            .trips
            .values()
            .filter(|t| ids.contains(&t.route_id))
            .flat_map(|t| [t.stop_times.first(), t.stop_times.last()])
            .flatten()
            .map(|st| st.stop_id.clone())
            .find(|id| names_equal(self.stop_name(id), anchor))
            .ok_or_else(|| ScenarioError::InvalidEdit(format!("route {sel} has no trip ending at {anchor:?}")))?;

        let anchor_coord = self.feed.stops[&anchor_stop].coord();
        let mut names = vec![anchor.to_string()];
        names.extend(stations.iter().map(|s| s.name.clone()));
        let mut coords = vec![anchor_coord];
        coords.extend(stations.iter().map(Station::coord));

        let segments: Vec<u32> = match source {
            RunTimeSource::Derived { calibration } => derive_run_times(&coords, calibration)?,
            RunTimeSource::Observed { fallback } => {
                let derived = derive_run_times(&coords, fallback)?;
                (0..stations.len())
                    .map(|i| self.observed_segment(&names[i], &names[i + 1]).unwrap_or(derived[i]))
                    .collect()
            }
        };

        let route_id = ids.iter().next().expect("resolved").clone();
        let new_stops: Vec<String> = stations.iter().map(|s| self.stop_for(&route_id, s)).collect();

        for t in self.feed.trips.values_mut().filter(|t| ids.contains(&t.route_id)) {
            let ends_here = t.stop_times.last().is_some_and(|s| names_equal_stop(&self.feed.stops, &s.stop_id, anchor));
            let starts_here = t.stop_times.first().is_some_and(|s| names_equal_stop(&self.feed.stops, &s.stop_id, anchor));
            if ends_here {
                let mut clock = t.stop_times.last().expect("non-empty").departure;
                for (k, (stop, seg)) in new_stops.iter().zip(&segments).enumerate() {
                    let arrival = clock + seg;
                    let departure = if k + 1 == new_stops.len() { arrival } else { arrival + dwell };
                    t.stop_times.push(StopTime {
                        stop_id: stop.clone(),
                        arrival,
                        departure,
                    });
                    clock = departure;
                }
            } else if starts_here {
                let mut clock = t.stop_times[0].arrival;
                let mut prefix = Vec::with_capacity(new_stops.len());
                for (k, (stop, seg)) in new_stops.iter().zip(&segments).enumerate() {
                    let departure = clock.checked_sub(*seg);
                    let arrival = departure.and_then(|d| d.checked_sub(if k + 1 == new_stops.len() { 0 } else { dwell }));
                    let (Some(departure), Some(arrival)) = (departure, arrival) else {
                        return Err(ScenarioError::InvalidEdit(format!(
                            "extending trip {} before {anchor:?} would start before midnight",
                            t.id
                        )));
                    };
                    prefix.push(StopTime {
                        stop_id: stop.clone(),
                        arrival,
                        departure,
                    });
                    clock = arrival;
                }
                prefix.reverse();
                prefix.append(&mut t.stop_times);
                t.stop_times = prefix;
            }
        }
        Ok(())
    }
}

fn names_equal_stop(stops: &BTreeMap<String, Stop>, stop_id: &str, name: &str) -> bool {
    stops.get(stop_id).is_some_and(|s| names_equal(&s.name, name))
}

/// Stop times starting at 0 for a stop sequence with the given running
/// times; intermediate stops hold for `dwell`.
fn timed_calls(stop_ids: &[&String], segments: &[u32], dwell: u32) -> Vec<StopTime> {
    let mut out = Vec::with_capacity(stop_ids.len());
    let mut clock = 0;
    for (i, id) in stop_ids.iter().enumerate() {
        if i > 0 {
            clock += segments[i - 1];
        }
        let departure = if i == 0 || i + 1 == stop_ids.len() { clock } else { clock + dwell };
        out.push(StopTime {
            stop_id: (*id).clone(),
            arrival: clock,
            departure,
        });
        clock = departure;
    }
    out
}
