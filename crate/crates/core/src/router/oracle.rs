use std::collections::VecDeque;

use crate::geo::haversine_m;

use super::{Query, RouterError, TimetableNetwork, TravelTimeResult};

pub const ORACLE_MAX_STOPS: usize = 200;
pub const ORACLE_MAX_TRIPS: usize = 2000;

const UNSEEN: u32 = u32::MAX;

/// Exhaustive reference router for small networks.
///
/// Builds the time-expanded event graph (waiting chains per stop, one
/// boarding and one arrival node per trip call) and finds, by 0-1 BFS, the
/// fewest vehicles needed to reach every event. An arrival event counts if
/// it needs at most `max_rounds` vehicles. Access and egress stops are found
/// by brute force.
pub fn oracle_earliest_arrival(network: &TimetableNetwork, query: &Query) -> Result<TravelTimeResult, RouterError> {
    let (stops, trips) = (network.stop_count(), network.trip_count());
    if stops > ORACLE_MAX_STOPS || trips > ORACLE_MAX_TRIPS {
        return Err(RouterError::InstanceTooLarge {
            stops,
            trips,
            max_stops: ORACLE_MAX_STOPS,
            max_trips: ORACLE_MAX_TRIPS,
        });
    }
    let walk = network.params.walk;
    let slack = network.params.transfer_slack_s;
    let max_walk = query.max_walk_m.unwrap_or(walk.max_access_m);

    // every trip call as (stop, arrival, departure), trips laid out flat
    let mut calls: Vec<Vec<(usize, u32, u32)>> = Vec::new();
    for p in &network.patterns {
        for t in 0..p.trip_count() {
            calls.push(
                (0..p.len())
                    .map(|pos| (p.stops[pos] as usize, p.arrival(t, pos), p.departure(t, pos)))
                    .collect(),
            );
        }
    }

    // waiting chain: distinct departure times per stop
    let mut wait_times: Vec<Vec<u32>> = vec![Vec::new(); stops];
    for c in &calls {
        for &(s, _, dep) in &c[..c.len() - 1] {
            wait_times[s].push(dep);
        }
    }
    for w in &mut wait_times {
        w.sort_unstable();
        w.dedup();
    }
    let mut wait_base = Vec::with_capacity(stops + 1);
    let mut total = 0usize;
    for w in &wait_times {
        wait_base.push(total);
        total += w.len();
    }
    // per trip: 2 nodes per call, boarding at 2i and arrival at 2i + 1
    let mut trip_base = Vec::with_capacity(calls.len());
    for c in &calls {
        trip_base.push(total);
        total += 2 * c.len();
    }
    // boarding events reachable from each waiting node
    let mut boardings: Vec<Vec<usize>> = vec![Vec::new(); total];
    for (ti, c) in calls.iter().enumerate() {
        for (i, &(s, _, dep)) in c[..c.len() - 1].iter().enumerate() {
            let k = wait_times[s].binary_search(&dep).expect("departure indexed");
            boardings[wait_base[s] + k].push(trip_base[ti] + 2 * i);
        }
    }
    let wait_node = |s: usize, t: u32| -> Option<usize> {
        let k = wait_times[s].partition_point(|&x| x < t);
        (k < wait_times[s].len()).then_some(wait_base[s] + k)
    };

    let mut dist = vec![UNSEEN; total];
    let mut deque = VecDeque::new();
    for (s, c) in network.coords.iter().enumerate() {
        let d = haversine_m(query.origin, *c);
        if d <= max_walk {
            if let Some(n) = wait_node(s, query.departure.saturating_add(walk.seconds(d))) {
                if dist[n] != 0 {
                    dist[n] = 0;
                    deque.push_front(n);
                }
            }
        }
    }

    // node kinds are recovered from the layout
    let trip_of = |n: usize| -> Option<(usize, usize)> {
        if trip_base.is_empty() || n < trip_base[0] {
            return None;
        }
        let ti = trip_base.partition_point(|&b| b <= n) - 1;
        Some((ti, n - trip_base[ti]))
    };

    while let Some(n) = deque.pop_front() {
        let dn = dist[n];
        let mut push = |m: usize, cost: u32, deque: &mut VecDeque<usize>| {
            if dn + cost < dist[m] {
                dist[m] = dn + cost;
                if cost == 0 {
                    deque.push_front(m);
                } else {
                    deque.push_back(m);
                }
            }
        };
        match trip_of(n) {
            None => {
                let s = wait_base.partition_point(|&b| b <= n) - 1;
                if n + 1 < wait_base[s] + wait_times[s].len() {
                    push(n + 1, 0, &mut deque);
                }
                for &b in &boardings[n] {
                    push(b, 1, &mut deque);
                }
            }
            Some((ti, off)) => {
                let i = off / 2;
                let c = &calls[ti];
                if off % 2 == 0 {
                    push(trip_base[ti] + 2 * (i + 1) + 1, 0, &mut deque);
                } else {
                    if i + 1 < c.len() {
                        push(trip_base[ti] + 2 * i, 0, &mut deque);
                    }
                    let (s, arr, _) = c[i];
                    if let Some(m) = wait_node(s, arr.saturating_add(slack)) {
                        push(m, 0, &mut deque);
                    }
                    for &(q, w) in &network.transfers[s] {
                        if let Some(m) = wait_node(q as usize, arr.saturating_add(w).saturating_add(slack)) {
                            push(m, 0, &mut deque);
                        }
                    }
                }
            }
        }
    }

    let mut arrival = vec![u32::MAX; stops];
    for (ti, c) in calls.iter().enumerate() {
        for (i, &(s, arr, _)) in c.iter().enumerate().skip(1) {
            if dist[trip_base[ti] + 2 * i + 1] <= u32::from(query.max_rounds) {
                arrival[s] = arrival[s].min(arr);
            }
        }
    }

    let mut any_stop = network.coords.iter().any(|c| haversine_m(query.origin, *c) <= max_walk);
    let times = query
        .destinations
        .iter()
        .map(|dest| {
            let mut best = u32::MAX;
            let d = haversine_m(query.origin, *dest);
            if d <= max_walk {
                any_stop = true;
                best = query.departure.saturating_add(walk.seconds(d));
            }
            for (s, c) in network.coords.iter().enumerate() {
                let e = haversine_m(*c, *dest);
                if e <= max_walk && arrival[s] != u32::MAX {
                    best = best.min(arrival[s].saturating_add(walk.seconds(e)));
                }
            }
            (best != u32::MAX).then(|| best - query.departure)
        })
        .collect();
    Ok(TravelTimeResult {
        times,
        origin_out_of_range: !any_stop,
    })
}
