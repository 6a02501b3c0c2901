//! GTFS ingestion: parsing, validation, multi-agency merging and writing.
//!
//! A [`Feed`] keeps every table in ordered maps so that serialisation is
//! canonical: writing the same feed twice gives byte-identical files.

mod calendar;
mod frequencies;
mod merge;
mod read;
pub mod time;
mod write;

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::geo::LatLon;

pub use calendar::{service_dates, service_on_date};
pub use frequencies::{expand_frequencies, expand_trip};
pub use merge::merge_feeds;
pub use read::parse_feed;
pub use write::write_feed;

#[derive(Debug, thiserror::Error)]
pub enum GtfsError {
    #[error("required GTFS table {file} is missing")]
    MissingFile { file: String },
    #[error("{file}:{line}: {reason}")]
    MalformedRow { file: String, line: u64, reason: String },
    #[error("{file}:{line}: {field} references undefined id {id:?}")]
    DanglingReference {
        file: String,
        line: u64,
        field: String,
        id: String,
    },
    #[error("duplicate feed prefix {0:?}")]
    DuplicatePrefix(String),
    #[error("{feeds} feeds but {prefixes} prefixes")]
    PrefixCountMismatch { feeds: usize, prefixes: usize },
    #[error("cannot open {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot read zip archive {path}: {reason}")]
    Archive { path: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agency {
    pub id: String,
    pub name: String,
    pub url: String,
    pub timezone: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stop {
    pub id: String,
    pub name: String,
    pub lat: f64,
    pub lon: f64,
    /// GTFS `location_type`: 0 stop/platform, 1 station, 2 entrance.
    pub location_type: u8,
    pub parent_station: Option<String>,
}

impl Stop {
    pub fn coord(&self) -> LatLon {
        LatLon::new(self.lat, self.lon)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Route {
    pub id: String,
    pub agency_id: Option<String>,
    pub short_name: String,
    pub long_name: String,
    pub route_type: u16,
}

/// One call of a trip at a stop. Times are seconds after midnight of the
/// service day and may exceed 86 400 for overnight trips.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopTime {
    pub stop_id: String,
    pub arrival: u32,
    pub departure: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trip {
    pub id: String,
    pub route_id: String,
    pub service_id: String,
    pub headsign: Option<String>,
    pub direction_id: Option<u8>,
    pub stop_times: Vec<StopTime>,
}

impl Trip {
    /// Departure time at the first stop, if the trip has any stop times.
    pub fn first_departure(&self) -> Option<u32> {
        self.stop_times.first().map(|st| st.departure)
    }
}

/// Weekly pattern from `calendar.txt`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeeklyCalendar {
    /// Monday first.
    pub days: [bool; 7],
    pub start: NaiveDate,
    pub end: NaiveDate,
}

/// A service id with its weekly rule and `calendar_dates.txt` exceptions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Service {
    pub weekly: Option<WeeklyCalendar>,
    pub added: BTreeSet<NaiveDate>,
    pub removed: BTreeSet<NaiveDate>,
}

impl Service {
    pub fn is_active(&self, date: NaiveDate) -> bool {
        use chrono::Datelike;
        if self.removed.contains(&date) {
            return false;
        }
        if self.added.contains(&date) {
            return true;
        }
        self.weekly.as_ref().is_some_and(|w| {
            w.start <= date && date <= w.end && w.days[date.weekday().num_days_from_monday() as usize]
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Frequency {
    pub start: u32,
    pub end: u32,
    pub headway: u32,
    /// Retained for round-tripping; every frequency is expanded as exact
    /// departures because the router is deterministic.
    pub exact_times: bool,
}

/// An in-memory GTFS timetable.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Feed {
    pub agencies: Vec<Agency>,
    pub stops: BTreeMap<String, Stop>,
    pub routes: BTreeMap<String, Route>,
    pub trips: BTreeMap<String, Trip>,
    pub services: BTreeMap<String, Service>,
    pub frequencies: BTreeMap<String, Vec<Frequency>>,
}

impl Feed {
    pub fn stop_time_count(&self) -> usize {
        self.trips.values().map(|t| t.stop_times.len()).sum()
    }

    /// Checks the referential and ordering invariants, reporting the first
    /// violation. Parsed feeds always pass; this is for feeds built in code.
    pub fn validate(&self) -> Result<(), GtfsError> {
        for stop in self.stops.values() {
            if !stop.coord().is_valid() {
                return Err(malformed("stops.txt", 0, format!("stop {} has invalid coordinates", stop.id)));
            }
        }
        for trip in self.trips.values() {
            if !self.routes.contains_key(&trip.route_id) {
                return Err(dangling("trips.txt", 0, "route_id", &trip.route_id));
            }
            if !self.services.contains_key(&trip.service_id) {
                return Err(dangling("trips.txt", 0, "service_id", &trip.service_id));
            }
            for st in &trip.stop_times {
                if !self.stops.contains_key(&st.stop_id) {
                    return Err(dangling("stop_times.txt", 0, "stop_id", &st.stop_id));
                }
            }
            check_monotone(trip).map_err(|reason| malformed("stop_times.txt", 0, reason))?;
        }
        for trip_id in self.frequencies.keys() {
            if !self.trips.contains_key(trip_id) {
                return Err(dangling("frequencies.txt", 0, "trip_id", trip_id));
            }
        }
        Ok(())
    }
}

pub(crate) fn check_monotone(trip: &Trip) -> Result<(), String> {
    let mut last = 0u32;
    for (i, st) in trip.stop_times.iter().enumerate() {
        if st.arrival < last || st.departure < st.arrival {
            return Err(format!(
                "trip {} goes back in time at stop index {i} ({})",
                trip.id, st.stop_id
            ));
        }
        last = st.departure;
    }
    Ok(())
}

pub(crate) fn malformed(file: &str, line: u64, reason: impl Into<String>) -> GtfsError {
    GtfsError::MalformedRow {
        file: file.to_string(),
        line,
        reason: reason.into(),
    }
}

pub(crate) fn dangling(file: &str, line: u64, field: &str, id: &str) -> GtfsError {
    GtfsError::DanglingReference {
        file: file.to_string(),
        line,
        field: field.to_string(),
        id: id.to_string(),
    }
}
