use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;

use crate::geo::LatLon;
use crate::gtfs::{expand_frequencies, service_on_date, Feed, Trip};

use super::{NetworkParams, StopIndex};

/// Trips sharing one stop sequence, ordered so that no trip overtakes
/// another: for trips `a` before `b`, every arrival and departure of `a` is
/// no later than that of `b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    pub stops: Vec<u32>,
    pub trip_ids: Vec<String>,
    /// Row-major `trips × stops`.
    arrivals: Vec<u32>,
    departures: Vec<u32>,
}

impl Pattern {
    pub fn len(&self) -> usize {
        self.stops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stops.is_empty()
    }

    pub fn trip_count(&self) -> usize {
        self.trip_ids.len()
    }

    pub fn arrival(&self, trip: usize, pos: usize) -> u32 {
        self.arrivals[trip * self.stops.len() + pos]
    }

    pub fn departure(&self, trip: usize, pos: usize) -> u32 {
        self.departures[trip * self.stops.len() + pos]
    }

    /// First trip leaving position `pos` at or after `t`.
    pub(crate) fn first_departing(&self, pos: usize, t: u32) -> Option<usize> {
        let n = self.stops.len();
        let (mut lo, mut hi) = (0, self.trip_count());
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.departures[mid * n + pos] < t {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        (lo < self.trip_count()).then_some(lo)
    }

    fn push(&mut self, trip: &Trip, times: &[(u32, u32)]) {
        self.trip_ids.push(trip.id.clone());
        self.arrivals.extend(times.iter().map(|t| t.0));
        self.departures.extend(times.iter().map(|t| t.1));
    }

    fn last_times(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let n = self.stops.len();
        let k = self.trip_count() - 1;
        (0..n).map(move |p| (self.arrivals[k * n + p], self.departures[k * n + p]))
    }
}

/// Immutable routing structure for one service day.
#[derive(Debug, Clone)]
pub struct TimetableNetwork {
    pub date: NaiveDate,
    pub params: NetworkParams,
    pub stop_ids: Vec<String>,
    pub coords: Vec<LatLon>,
    pub patterns: Vec<Pattern>,
    /// For every stop, the `(pattern, position)` pairs serving it.
    pub stop_patterns: Vec<Vec<(u32, u32)>>,
    /// Foot transfers `(other stop, seconds)`, symmetric.
    pub transfers: Vec<Vec<(u32, u32)>>,
    pub index: StopIndex,
}

impl TimetableNetwork {
    /// Builds the network of trips running on `date`.
    ///
    /// Every plain stop (`location_type` 0) of the feed is a potential access
    /// point, together with any other stop an active trip calls at.
    /// Frequency-based trips run as their expanded departures.
    pub fn build(feed: &Feed, date: NaiveDate, params: NetworkParams) -> Self {
        if !feed.frequencies.is_empty() {
            return Self::build(&expand_frequencies(feed.clone()), date, params);
        }
        let active = service_on_date(feed, date);
        let mut used: BTreeSet<&str> = feed
            .stops
            .values()
            .filter(|s| s.location_type == 0)
            .map(|s| s.id.as_str())
            .collect();
        for id in &active {
            used.extend(feed.trips[id].stop_times.iter().map(|st| st.stop_id.as_str()));
        }
        let stop_ids: Vec<String> = used.iter().map(|s| s.to_string()).collect();
        let slot: BTreeMap<&str, u32> = used.iter().enumerate().map(|(i, s)| (*s, i as u32)).collect();
        let coords: Vec<LatLon> = stop_ids.iter().map(|id| feed.stops[id].coord()).collect();

        // group by stop sequence, then split into non-overtaking chains
        let mut by_sequence: BTreeMap<Vec<u32>, Vec<&Trip>> = BTreeMap::new();
        for id in &active {
            let trip = &feed.trips[id];
            if trip.stop_times.len() < 2 {
                continue;
            }
            let seq = trip.stop_times.iter().map(|st| slot[st.stop_id.as_str()]).collect();
            by_sequence.entry(seq).or_default().push(trip);
        }
        let mut patterns = Vec::new();
        for (stops, mut trips) in by_sequence {
            trips.sort_by(|a, b| {
                let key = |t: &Trip| (t.stop_times[0].departure, t.stop_times.last().map(|s| s.arrival), t.id.clone());
                key(a).cmp(&key(b))
            });
            let mut chains: Vec<Pattern> = Vec::new();
            for trip in trips {
                let times: Vec<(u32, u32)> = trip.stop_times.iter().map(|s| (s.arrival, s.departure)).collect();
                let fits = |p: &Pattern| p.last_times().zip(&times).all(|(a, b)| a.0 <= b.0 && a.1 <= b.1);
                match chains.iter_mut().find(|p| fits(p)) {
                    Some(p) => p.push(trip, &times),
                    None => {
                        let mut p = Pattern {
                            stops: stops.clone(),
                            trip_ids: Vec::new(),
                            arrivals: Vec::new(),
                            departures: Vec::new(),
                        };
                        p.push(trip, &times);
                        chains.push(p);
                    }
                }
            }
            patterns.extend(chains);
        }

        let mut stop_patterns = vec![Vec::new(); stop_ids.len()];
        for (pi, p) in patterns.iter().enumerate() {
            for (pos, &s) in p.stops.iter().enumerate() {
                stop_patterns[s as usize].push((pi as u32, pos as u32));
            }
        }

        let index = StopIndex::new(&coords);
        let mut transfers = vec![Vec::new(); stop_ids.len()];
        for (i, c) in coords.iter().enumerate() {
            for (j, d) in index.within(*c, params.transfer_radius_m) {
                if (j as usize) > i {
                    let secs = params.walk.seconds(d);
                    transfers[i].push((j, secs));
                    transfers[j as usize].push((i as u32, secs));
                }
            }
        }
        for t in &mut transfers {
            t.sort_unstable();
        }

        Self {
            date,
            params,
            stop_ids,
            coords,
            patterns,
            stop_patterns,
            transfers,
            index,
        }
    }

    pub fn stop_count(&self) -> usize {
        self.stop_ids.len()
    }

    pub fn trip_count(&self) -> usize {
        self.patterns.iter().map(Pattern::trip_count).sum()
    }

    /// Stops within walking range of `p`, with walk seconds.
    pub fn walkable_stops(&self, p: LatLon, max_walk_m: f64) -> Vec<(u32, u32)> {
        self.index
            .within(p, max_walk_m)
            .into_iter()
            .map(|(i, d)| (i, self.params.walk.seconds(d)))
            .collect()
    }
}
