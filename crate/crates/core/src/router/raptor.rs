use crate::geo::{haversine_m, LatLon};

use super::{Query, TimetableNetwork, TravelTimeResult};

const INF: u32 = u32::MAX;

/// Destinations with their egress stops resolved once, so that one set of
/// destinations can be queried from many origins.
#[derive(Debug, Clone)]
pub struct Targets {
    pub points: Vec<LatLon>,
    pub max_walk_m: f64,
    /// Per destination, `(stop, walk seconds)` within walking range.
    egress: Vec<Vec<(u32, u32)>>,
}

impl Targets {
    pub fn new(network: &TimetableNetwork, points: &[LatLon], max_walk_m: f64) -> Self {
        Self {
            points: points.to_vec(),
            max_walk_m,
            egress: points.iter().map(|p| network.walkable_stops(*p, max_walk_m)).collect(),
        }
    }
}

/// Earliest-arrival travel times from one origin to every destination.
pub fn earliest_arrival(network: &TimetableNetwork, query: &Query) -> TravelTimeResult {
    let max_walk = query.max_walk_m.unwrap_or(network.params.walk.max_access_m);
    let targets = Targets::new(network, &query.destinations, max_walk);
    earliest_arrival_to(network, query.origin, query.departure, &targets, query.max_rounds)
}

/// Round-based earliest arrival: round `k` finds the best arrivals using at
/// most `k` vehicles, scanning only patterns touched by stops improved in
/// round `k - 1`.
pub fn earliest_arrival_to(
    network: &TimetableNetwork,
    origin: LatLon,
    departure: u32,
    targets: &Targets,
    max_rounds: u8,
) -> TravelTimeResult {
    let n = network.stop_count();
    let walk = network.params.walk;
    let slack = network.params.transfer_slack_s;

    // earliest time one can board at each stop, and earliest vehicle arrival
    let mut ready = vec![INF; n];
    let mut arrival = vec![INF; n];
    let mut marked = vec![false; n];
    let mut marked_list = Vec::new();

    let access = network.walkable_stops(origin, targets.max_walk_m);
    for &(s, secs) in &access {
        let t = departure.saturating_add(secs);
        if t < ready[s as usize] {
            ready[s as usize] = t;
        }
        if !marked[s as usize] {
            marked[s as usize] = true;
            marked_list.push(s);
        }
    }

    let mut first_pos: Vec<u32> = vec![u32::MAX; network.patterns.len()];
    let mut queued: Vec<u32> = Vec::new();
    let mut improved = vec![false; n];
    let mut improved_list: Vec<u32> = Vec::new();

    for _round in 0..max_rounds {
        if marked_list.is_empty() {
            break;
        }
        for &s in &marked_list {
            marked[s as usize] = false;
            for &(p, pos) in &network.stop_patterns[s as usize] {
                let slot = &mut first_pos[p as usize];
                if *slot == u32::MAX {
                    queued.push(p);
                }
                *slot = (*slot).min(pos);
            }
        }
        marked_list.clear();
        queued.sort_unstable();

        for &p in &queued {
            let pattern = &network.patterns[p as usize];
            let start = first_pos[p as usize] as usize;
            first_pos[p as usize] = u32::MAX;
            let mut trip: Option<usize> = None;
            for pos in start..pattern.len() {
                let s = pattern.stops[pos] as usize;
                if let Some(t) = trip {
                    let a = pattern.arrival(t, pos);
                    if a < arrival[s] {
                        arrival[s] = a;
                        if !improved[s] {
                            improved[s] = true;
                            improved_list.push(s as u32);
                        }
                    }
                }
                let r = ready[s];
                if r != INF && pos + 1 < pattern.len() && trip.is_none_or(|t| r <= pattern.departure(t, pos)) {
                    if let Some(earlier) = pattern.first_departing(pos, r) {
                        if trip.is_none_or(|t| earlier < t) {
                            trip = Some(earlier);
                        }
                    }
                }
            }
        }
        queued.clear();

        // foot transfers from stops reached by vehicle this round
        improved_list.sort_unstable();
        for &s in &improved_list {
            improved[s as usize] = false;
            let a = arrival[s as usize];
            let mut relax = |q: u32, t: u32| {
                if t < ready[q as usize] {
                    ready[q as usize] = t;
                    if !marked[q as usize] {
                        marked[q as usize] = true;
                        marked_list.push(q);
                    }
                }
            };
            relax(s, a.saturating_add(slack));
            for &(q, w) in &network.transfers[s as usize] {
                relax(q, a.saturating_add(w).saturating_add(slack));
            }
        }
        improved_list.clear();
    }

    let mut out_of_range = access.is_empty();
    let times = targets
        .points
        .iter()
        .zip(&targets.egress)
        .map(|(dest, egress)| {
            let mut best = INF;
            let d = haversine_m(origin, *dest);
            if d <= targets.max_walk_m {
                out_of_range = false;
                best = departure.saturating_add(walk.seconds(d));
            }
            for &(s, secs) in egress {
                let a = arrival[s as usize];
                if a != INF {
                    best = best.min(a.saturating_add(secs));
                }
            }
            (best != INF).then(|| best - departure)
        })
        .collect();
    if out_of_range {
        log::debug!(
            "origin ({:.5}, {:.5}) has no stop and no destination within {} m",
            origin.lat,
            origin.lon,
            targets.max_walk_m
        );
    }
    TravelTimeResult {
        times,
        origin_out_of_range: out_of_range,
    }
}
