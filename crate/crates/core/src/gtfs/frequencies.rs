use super::time::format_time;
use super::{Feed, Frequency, StopTime, Trip};

/// Explicit copies of a headway-based template trip.
///
/// Departures run at `start, start + headway, ...` while `< end`, each copy
/// keeping the template's offsets relative to its first departure. Copies are
/// named `<template>@HH:MM:SS`.
pub fn expand_trip(template: &Trip, frequencies: &[Frequency]) -> Vec<Trip> {
    let Some(origin) = template.first_departure() else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for f in frequencies {
        let mut start = f.start;
        while start < f.end {
            let stop_times = template
                .stop_times
                .iter()
                .map(|st| StopTime {
                    stop_id: st.stop_id.clone(),
                    arrival: st.arrival.saturating_sub(origin) + start,
                    departure: st.departure - origin + start,
                })
                .collect();
            out.push(Trip {
                id: format!("{}@{}", template.id, format_time(start)),
                stop_times,
                ..template.clone()
            });
            start += f.headway;
        }
    }
    out
}

/// Replaces every frequency-based trip by explicit trips.
pub fn expand_frequencies(mut feed: Feed) -> Feed {
    let frequencies = std::mem::take(&mut feed.frequencies);
    for (trip_id, fs) in frequencies {
        let Some(template) = feed.trips.remove(&trip_id) else { continue };
        for trip in expand_trip(&template, &fs) {
            feed.trips.insert(trip.id.clone(), trip);
        }
    }
    feed
}
