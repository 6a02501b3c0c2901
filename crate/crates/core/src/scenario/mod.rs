//! Counterfactual networks built by editing a base feed.
//!
//! A [`ScenarioSpec`] is an ordered list of [`Edit`]s. Specs are plain TOML:
//!
//! ```toml
//! name = "short-metro"
//!
//! [[edits]]
//! kind = "add_line"
//! route_id = "m3"
//! short_name = "3"
//! bidirectional = true
//! stations = [
//!     { name = "Albert", lat = 50.8166, lon = 4.3478 },
//!     { name = "Horta", lat = 50.8255, lon = 4.3450 },
//! ]
//! headways = [{ days = "weekday", start = "07:00:00", end = "09:00:00", headway_s = 300 }]
//!
//! [[edits]]
//! kind = "scale_supply"
//! route = "m3"
//! factor = 0.8
//! ```
//!
//! Routes are selected by id or short name; `"stib:4"` also matches the
//! route with short name `4` among ids prefixed `stib:`.

mod apply;
mod builtin;
mod runtime;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::gtfs::{GtfsError, Route};

pub use apply::{apply_scenario, scale_supply};
pub use builtin::{builtin_scenario, builtin_scenarios, load_station_catalog, metro3_catalog, BUILTIN_NAMES};
pub use runtime::{derive_run_times, line_runtime};

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("consecutive stations {index} and {} share coordinates and the minimum segment time is 0", index + 1)]
    DegenerateSegment { index: usize },
    #[error("route selector {0:?} matches no route")]
    UnresolvedSelector(String),
    #[error("route selector {0:?} refers to a route removed by an earlier edit")]
    EditConflict(String),
    #[error("invalid edit: {0}")]
    InvalidEdit(String),
    #[error("scenario spec line {line}: {message}")]
    Spec { line: usize, message: String },
    #[error(transparent)]
    Gtfs(#[from] GtfsError),
}

/// Converts great-circle distance to running time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunTimeCalibration {
    /// m/s, including acceleration and braking but not dwell.
    pub commercial_speed: f64,
    /// Lower bound per segment, seconds.
    pub min_segment_time: u32,
}

/// Metro running: 15 m/s between stations; with 30 s dwells this gives
/// about 32 km/h overall, close to the existing Brussels metro lines.
pub const METRO_CALIBRATION: RunTimeCalibration = RunTimeCalibration {
    commercial_speed: 15.0,
    min_segment_time: 30,
};

/// Surface tram running, used where no observed segment exists.
pub const TRAM_CALIBRATION: RunTimeCalibration = RunTimeCalibration {
    commercial_speed: 5.5,
    min_segment_time: 45,
};

pub const DEFAULT_DWELL_S: u32 = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Station {
    pub name: String,
    pub lat: f64,
    pub lon: f64,
}

impl Station {
    pub fn coord(&self) -> crate::LatLon {
        crate::LatLon::new(self.lat, self.lon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DayType {
    Weekday,
    Saturday,
    Sunday,
    All,
}

impl DayType {
    pub fn matches(self, date: chrono::NaiveDate) -> bool {
        use chrono::{Datelike, Weekday};
        match (self, date.weekday()) {
            (DayType::All, _) => true,
            (DayType::Saturday, Weekday::Sat) => true,
            (DayType::Sunday, Weekday::Sun) => true,
            (DayType::Weekday, Weekday::Sat | Weekday::Sun) => false,
            (DayType::Weekday, _) => true,
            _ => false,
        }
    }

    fn tag(self) -> &'static str {
        match self {
            DayType::Weekday => "wk",
            DayType::Saturday => "sa",
            DayType::Sunday => "su",
            DayType::All => "all",
        }
    }
}

/// Departures every `headway_s` in `[start, end)` on days of `days`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeadwayBand {
    pub days: DayType,
    #[serde(with = "clock")]
    pub start: u32,
    #[serde(with = "clock")]
    pub end: u32,
    pub headway_s: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineDefinition {
    pub route_id: String,
    #[serde(default)]
    pub short_name: String,
    #[serde(default)]
    pub long_name: String,
    /// GTFS route_type, 1 = metro.
    #[serde(default = "metro_route_type")]
    pub route_type: u16,
    pub stations: Vec<Station>,
    #[serde(default = "default_dwell")]
    pub dwell_s: u32,
    pub headways: Vec<HeadwayBand>,
    #[serde(default = "metro_calibration")]
    pub calibration: RunTimeCalibration,
    /// Also run the reverse direction on the same bands.
    #[serde(default)]
    pub bidirectional: bool,
}

fn metro_route_type() -> u16 {
    1
}
fn default_dwell() -> u32 {
    DEFAULT_DWELL_S
}
fn metro_calibration() -> RunTimeCalibration {
    METRO_CALIBRATION
}

/// Selects routes by id or short name, see the module docs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RouteSelector(pub String);

impl RouteSelector {
    pub fn new(s: impl Into<String>) -> Self {
        Self(s.into())
    }

    pub fn matches(&self, route: &Route) -> bool {
        let s = self.0.as_str();
        if route.id == s || (!route.short_name.is_empty() && route.short_name == s) {
            return true;
        }
        match s.split_once(':') {
            Some((prefix, short)) => {
                route.id.starts_with(&format!("{prefix}:")) && !short.is_empty() && route.short_name == short
            }
            None => false,
        }
    }
}

impl fmt::Display for RouteSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Where an extension's running times come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum RunTimeSource {
    /// Median of observed times between the same stop names anywhere in the
    /// feed; segments never run before use `fallback`.
    Observed { fallback: RunTimeCalibration },
    Derived { calibration: RunTimeCalibration },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Edit {
    AddLine(LineDefinition),
    RemoveLine {
        route: RouteSelector,
    },
    /// Cuts every trip down to the stops between `from` and `to`
    /// (stop names, either direction).
    CurtailLine {
        route: RouteSelector,
        from: String,
        to: String,
    },
    /// Continues trips that end at `anchor` through `stations`; trips
    /// starting at `anchor` get the same stations prepended in reverse.
    ExtendLine {
        route: RouteSelector,
        anchor: String,
        stations: Vec<Station>,
        run_times: RunTimeSource,
        #[serde(default)]
        dwell_s: u32,
    },
    ScaleSupply {
        route: RouteSelector,
        factor: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    #[serde(default)]
    pub edits: Vec<Edit>,
}

impl ScenarioSpec {
    pub fn empty(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            edits: Vec::new(),
        }
    }

    /// Parses a TOML spec; errors carry the offending line.
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let line_of = |offset: usize| text[..offset.min(text.len())].matches('\n').count() + 1;
        let table: toml::Table = toml::from_str(text).map_err(|e| ScenarioError::Spec {
            line: e.span().map(|s| line_of(s.start)).unwrap_or(0),
            message: e.message().to_string(),
        })?;
        let spec: ScenarioSpec = match toml::from_str(text) {
            Ok(spec) => spec,
            Err(e) => {
                // tagged edits lose their spans, so find the failing edit by hand
                let edits = table.get("edits").and_then(|v| v.as_array());
                let failing = edits.into_iter().flatten().enumerate().find_map(|(i, v)| {
                    Edit::deserialize(v.clone()).err().map(|err| (i, v, err.message().to_string()))
                });
                return Err(match failing {
                    Some((i, v, message)) => {
                        let field = message
                            .split('`')
                            .nth(1)
                            .map(str::to_string)
                            .or_else(|| culprit_field(v));
                        ScenarioError::Spec {
                            line: field_line(text, i, field.as_deref()),
                            message: match field {
                                Some(f) if !message.contains('`') => format!("{f}: {message}"),
                                _ => message,
                            },
                        }
                    }
                    None => ScenarioError::Spec {
                        line: e.span().map(|s| line_of(s.start)).unwrap_or(0),
                        message: e.message().to_string(),
                    },
                });
            }
        };
        spec.validate().map_err(|(i, message)| ScenarioError::Spec {
            line: edit_line(text, i),
            message,
        })?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario specs always serialise")
    }

    /// Checks value ranges, reporting the index of the first bad edit.
    pub fn validate(&self) -> Result<(), (usize, String)> {
        for (i, edit) in self.edits.iter().enumerate() {
            edit.validate().map_err(|m| (i, m))?;
        }
        Ok(())
    }
}

/// Line of the field named in a deserialisation message (as `` `name` ``)
/// within the `i`-th edit, falling back to the edit header.
/// The key of a failing edit table whose removal makes it parse or merely
/// reports that key as missing; type errors do not name their field.
fn culprit_field(edit: &toml::Value) -> Option<String> {
    let table = edit.as_table()?;
    // a bad tag is reported by name, so `kind` is never the silent culprit
    table.keys().filter(|k| *k != "kind").find(|k| {
        let mut t = table.clone();
        t.remove(*k);
        match Edit::deserialize(toml::Value::Table(t)) {
            Ok(_) => true,
            Err(e) => e.message().contains(&format!("missing field `{k}`")),
        }
    }).cloned()
}

fn field_line(text: &str, i: usize, field: Option<&str>) -> usize {
    let header = edit_line(text, i);
    let Some(field) = field else {
        return header;
    };
    text.lines()
        .enumerate()
        .skip(header)
        .take_while(|(_, l)| !l.trim_start().starts_with('['))
        .find(|(_, l)| l.trim_start().strip_prefix(field).is_some_and(|r| r.trim_start().starts_with('=')))
        .map(|(n, _)| n + 1)
        .unwrap_or(header)
}

/// Line of the `i`-th `[[edits]]` header, or 0 if it cannot be located.
fn edit_line(text: &str, i: usize) -> usize {
    text.lines()
        .enumerate()
        .filter(|(_, l)| l.trim() == "[[edits]]")
        .nth(i)
        .map(|(n, _)| n + 1)
        .unwrap_or(0)
}

impl Edit {
    fn validate(&self) -> Result<(), String> {
        match self {
            Edit::AddLine(l) => {
                if l.stations.len() < 2 {
                    return Err(format!("line {} needs at least 2 stations", l.route_id));
                }
                if l.calibration.commercial_speed <= 0.0 || !l.calibration.commercial_speed.is_finite() {
                    return Err("commercial_speed must be positive".into());
                }
                if l.headways.is_empty() {
                    return Err(format!("line {} has no headway band", l.route_id));
                }
                for b in &l.headways {
                    if b.headway_s == 0 {
                        return Err("headway_s must be positive".into());
                    }
                    if b.end < b.start {
                        return Err("headway band ends before it starts".into());
                    }
                }
                check_stations(&l.stations)
            }
            Edit::ExtendLine { stations, run_times, .. } => {
                if stations.is_empty() {
                    return Err("extension without stations".into());
                }
                let cal = match run_times {
                    RunTimeSource::Observed { fallback } => fallback,
                    RunTimeSource::Derived { calibration } => calibration,
                };
                if cal.commercial_speed <= 0.0 || !cal.commercial_speed.is_finite() {
                    return Err("commercial_speed must be positive".into());
                }
                check_stations(stations)
            }
            Edit::ScaleSupply { factor, .. } => {
                if !(*factor > 0.0 && *factor <= 1.0) {
                    return Err(format!("scale factor {factor} is outside (0, 1]"));
                }
                Ok(())
            }
            Edit::RemoveLine { .. } | Edit::CurtailLine { .. } => Ok(()),
        }
    }
}

fn check_stations(stations: &[Station]) -> Result<(), String> {
    match stations.iter().find(|s| !s.coord().is_valid()) {
        Some(s) => Err(format!("station {} has invalid coordinates", s.name)),
        None => Ok(()),
    }
}

mod clock {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::gtfs::time::{format_time, parse_time};

    pub fn serialize<S: Serializer>(secs: &u32, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_time(*secs))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u32, D::Error> {
        let s = String::deserialize(d)?;
        parse_time(&s).ok_or_else(|| serde::de::Error::custom(format!("invalid time {s:?}, expected HH:MM:SS")))
    }
}
