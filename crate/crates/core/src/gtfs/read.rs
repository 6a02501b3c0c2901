use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use csv::StringRecord;

use super::time::parse_time;
use super::{
    check_monotone, dangling, malformed, Agency, Feed, Frequency, GtfsError, Route, Service, Stop,
    StopTime, Trip, WeeklyCalendar,
};

enum Source {
    Dir(PathBuf),
    Zip(BTreeMap<String, Vec<u8>>),
}

impl Source {
    fn open(path: &Path) -> Result<Self, GtfsError> {
        let io_err = |source| GtfsError::Io {
            path: path.display().to_string(),
            source,
        };
        let meta = fs::metadata(path).map_err(io_err)?;
        if meta.is_dir() {
            return Ok(Source::Dir(path.to_path_buf()));
        }
        let archive_err = |reason: String| GtfsError::Archive {
            path: path.display().to_string(),
            reason,
        };
        let file = fs::File::open(path).map_err(io_err)?;
        let mut zip = zip::ZipArchive::new(file).map_err(|e| archive_err(e.to_string()))?;
        let mut tables = BTreeMap::new();
        for i in 0..zip.len() {
            let mut entry = zip.by_index(i).map_err(|e| archive_err(e.to_string()))?;
            if entry.is_dir() {
                continue;
            }
            // feeds are sometimes zipped with a top-level folder
            let name = entry.name().rsplit('/').next().unwrap_or_default().to_string();
            let mut buf = Vec::new();
            entry
                .read_to_end(&mut buf)
                .map_err(|e| archive_err(e.to_string()))?;
            tables.insert(name, buf);
        }
        Ok(Source::Zip(tables))
    }

    fn get(&self, file: &str) -> Result<Option<Vec<u8>>, GtfsError> {
        match self {
            Source::Dir(dir) => {
                let p = dir.join(file);
                if !p.exists() {
                    return Ok(None);
                }
                fs::read(&p).map(Some).map_err(|source| GtfsError::Io {
                    path: p.display().to_string(),
                    source,
                })
            }
            Source::Zip(tables) => Ok(tables.get(file).cloned()),
        }
    }
}

struct Table {
    file: &'static str,
    cols: HashMap<String, usize>,
    rows: Vec<(u64, StringRecord)>,
}

impl Table {
    fn load(source: &Source, file: &'static str) -> Result<Option<Table>, GtfsError> {
        let Some(mut bytes) = source.get(file)? else {
            return Ok(None);
        };
        if bytes.starts_with(&[0xEF, 0xBB, 0xBF]) {
            bytes.drain(..3);
        }
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(bytes.as_slice());
        let headers = reader
            .headers()
            .map_err(|e| malformed(file, 1, e.to_string()))?
            .clone();
        let cols = headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.to_string(), i))
            .collect();
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                malformed(file, line, e.to_string())
            })?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            rows.push((line, rec));
        }
        Ok(Some(Table { file, cols, rows }))
    }

    fn require_file(source: &Source, file: &'static str) -> Result<Table, GtfsError> {
        Table::load(source, file)?.ok_or_else(|| GtfsError::MissingFile {
            file: file.to_string(),
        })
    }

    fn col(&self, name: &str) -> Option<usize> {
        self.cols.get(name).copied()
    }

    fn require(&self, name: &str) -> Result<usize, GtfsError> {
        self.col(name)
            .ok_or_else(|| malformed(self.file, 1, format!("missing column {name}")))
    }
}

fn field(rec: &StringRecord, idx: Option<usize>) -> &str {
    idx.and_then(|i| rec.get(i)).unwrap_or("")
}

fn non_empty(rec: &StringRecord, idx: Option<usize>) -> Option<String> {
    let v = field(rec, idx);
    (!v.is_empty()).then(|| v.to_string())
}

fn parse_num<T: std::str::FromStr>(
    file: &str,
    line: u64,
    name: &str,
    value: &str,
) -> Result<T, GtfsError> {
    value
        .parse()
        .map_err(|_| malformed(file, line, format!("invalid {name} {value:?}")))
}

fn parse_date(file: &str, line: u64, value: &str) -> Result<NaiveDate, GtfsError> {
    NaiveDate::parse_from_str(value, "%Y%m%d")
        .map_err(|_| malformed(file, line, format!("invalid date {value:?}")))
}

/// Reads a GTFS feed from a directory or a zip archive.
pub fn parse_feed(path: impl AsRef<Path>) -> Result<Feed, GtfsError> {
    let source = Source::open(path.as_ref())?;

    // fail fast on absent required tables before parsing anything
    let stops_t = Table::require_file(&source, "stops.txt")?;
    let routes_t = Table::require_file(&source, "routes.txt")?;
    let trips_t = Table::require_file(&source, "trips.txt")?;
    let stop_times_t = Table::require_file(&source, "stop_times.txt")?;
    let calendar_t = Table::load(&source, "calendar.txt")?;
    let calendar_dates_t = Table::load(&source, "calendar_dates.txt")?;
    if calendar_t.is_none() && calendar_dates_t.is_none() {
        return Err(GtfsError::MissingFile {
            file: "calendar.txt or calendar_dates.txt".to_string(),
        });
    }

    let mut feed = Feed::default();
    if let Some(t) = Table::load(&source, "agency.txt")? {
        feed.agencies = read_agencies(&t)?;
    }
    feed.stops = read_stops(&stops_t)?;
    feed.routes = read_routes(&routes_t, &feed.agencies)?;
    if let Some(t) = &calendar_t {
        read_calendar(t, &mut feed.services)?;
    }
    if let Some(t) = &calendar_dates_t {
        read_calendar_dates(t, &mut feed.services)?;
    }
    feed.trips = read_trips(&trips_t, &feed)?;
    read_stop_times(&stop_times_t, &mut feed)?;
    if let Some(t) = Table::load(&source, "frequencies.txt")? {
        feed.frequencies = read_frequencies(&t, &feed)?;
    }
    Ok(feed)
}

fn read_agencies(t: &Table) -> Result<Vec<Agency>, GtfsError> {
    let (id, name, url, tz) = (
        t.col("agency_id"),
        t.col("agency_name"),
        t.col("agency_url"),
        t.col("agency_timezone"),
    );
    let mut out: Vec<Agency> = Vec::new();
    for (line, rec) in &t.rows {
        let agency = Agency {
            id: field(rec, id).to_string(),
            name: field(rec, name).to_string(),
            url: field(rec, url).to_string(),
            timezone: field(rec, tz).to_string(),
        };
        if out.iter().any(|a| a.id == agency.id) {
            return Err(malformed(t.file, *line, format!("duplicate agency_id {:?}", agency.id)));
        }
        out.push(agency);
    }
    Ok(out)
}

fn read_stops(t: &Table) -> Result<BTreeMap<String, Stop>, GtfsError> {
    let id = t.require("stop_id")?;
    let (name, lat, lon, loc, parent) = (
        t.col("stop_name"),
        t.col("stop_lat"),
        t.col("stop_lon"),
        t.col("location_type"),
        t.col("parent_station"),
    );
    let mut stops = BTreeMap::new();
    for (line, rec) in &t.rows {
        let line = *line;
        let location_type: u8 = match field(rec, loc) {
            "" => 0,
            v => parse_num(t.file, line, "location_type", v)?,
        };
        // generic nodes and boarding areas carry no routable position
        if location_type >= 3 {
            continue;
        }
        let stop = Stop {
            id: rec[id].to_string(),
            name: field(rec, name).to_string(),
            lat: parse_num(t.file, line, "stop_lat", field(rec, lat))?,
            lon: parse_num(t.file, line, "stop_lon", field(rec, lon))?,
            location_type,
            parent_station: non_empty(rec, parent),
        };
        if stop.id.is_empty() {
            return Err(malformed(t.file, line, "empty stop_id"));
        }
        if !stop.coord().is_valid() {
            return Err(malformed(
                t.file,
                line,
                format!("coordinates out of range ({}, {})", stop.lat, stop.lon),
            ));
        }
        if stops.insert(stop.id.clone(), stop).is_some() {
            return Err(malformed(t.file, line, format!("duplicate stop_id {:?}", &rec[id])));
        }
    }
    Ok(stops)
}

fn read_routes(t: &Table, agencies: &[Agency]) -> Result<BTreeMap<String, Route>, GtfsError> {
    let id = t.require("route_id")?;
    let (agency, short, long, kind) = (
        t.col("agency_id"),
        t.col("route_short_name"),
        t.col("route_long_name"),
        t.col("route_type"),
    );
    let mut routes = BTreeMap::new();
    for (line, rec) in &t.rows {
        let line = *line;
        let route = Route {
            id: rec[id].to_string(),
            agency_id: non_empty(rec, agency),
            short_name: field(rec, short).to_string(),
            long_name: field(rec, long).to_string(),
            route_type: parse_num(t.file, line, "route_type", field(rec, kind))?,
        };
        if let Some(a) = &route.agency_id {
            if !agencies.is_empty() && !agencies.iter().any(|x| &x.id == a) {
                return Err(dangling(t.file, line, "agency_id", a));
            }
        }
        if routes.insert(route.id.clone(), route).is_some() {
            return Err(malformed(t.file, line, format!("duplicate route_id {:?}", &rec[id])));
        }
    }
    Ok(routes)
}

fn read_calendar(t: &Table, services: &mut BTreeMap<String, Service>) -> Result<(), GtfsError> {
    const DAYS: [&str; 7] = [
        "monday",
        "tuesday",
        "wednesday",
        "thursday",
        "friday",
        "saturday",
        "sunday",
    ];
    let id = t.require("service_id")?;
    let day_cols = DAYS
        .iter()
        .map(|d| t.require(d))
        .collect::<Result<Vec<_>, _>>()?;
    let (start, end) = (t.require("start_date")?, t.require("end_date")?);
    for (line, rec) in &t.rows {
        let line = *line;
        let mut days = [false; 7];
        for (d, &c) in day_cols.iter().enumerate() {
            days[d] = match &rec[c] {
                "1" => true,
                "0" => false,
                v => return Err(malformed(t.file, line, format!("invalid day flag {v:?}"))),
            };
        }
        let weekly = WeeklyCalendar {
            days,
            start: parse_date(t.file, line, &rec[start])?,
            end: parse_date(t.file, line, &rec[end])?,
        };
        let service = services.entry(rec[id].to_string()).or_default();
        if service.weekly.replace(weekly).is_some() {
            return Err(malformed(t.file, line, format!("duplicate service_id {:?}", &rec[id])));
        }
    }
    Ok(())
}

fn read_calendar_dates(t: &Table, services: &mut BTreeMap<String, Service>) -> Result<(), GtfsError> {
    let (id, date, kind) = (
        t.require("service_id")?,
        t.require("date")?,
        t.require("exception_type")?,
    );
    for (line, rec) in &t.rows {
        let line = *line;
        let d = parse_date(t.file, line, &rec[date])?;
        let service = services.entry(rec[id].to_string()).or_default();
        match &rec[kind] {
            "1" => {
                service.added.insert(d);
            }
            "2" => {
                service.removed.insert(d);
            }
            v => return Err(malformed(t.file, line, format!("invalid exception_type {v:?}"))),
        }
    }
    Ok(())
}

fn read_trips(t: &Table, feed: &Feed) -> Result<BTreeMap<String, Trip>, GtfsError> {
    let (route, service, id) = (
        t.require("route_id")?,
        t.require("service_id")?,
        t.require("trip_id")?,
    );
    let (headsign, direction) = (t.col("trip_headsign"), t.col("direction_id"));
    let mut trips = BTreeMap::new();
    for (line, rec) in &t.rows {
        let line = *line;
        if !feed.routes.contains_key(&rec[route]) {
            return Err(dangling(t.file, line, "route_id", &rec[route]));
        }
        if !feed.services.contains_key(&rec[service]) {
            return Err(dangling(t.file, line, "service_id", &rec[service]));
        }
        let direction_id = match field(rec, direction) {
            "" => None,
            v => Some(parse_num(t.file, line, "direction_id", v)?),
        };
        let trip = Trip {
            id: rec[id].to_string(),
            route_id: rec[route].to_string(),
            service_id: rec[service].to_string(),
            headsign: non_empty(rec, headsign),
            direction_id,
            stop_times: Vec::new(),
        };
        if trips.insert(trip.id.clone(), trip).is_some() {
            return Err(malformed(t.file, line, format!("duplicate trip_id {:?}", &rec[id])));
        }
    }
    Ok(trips)
}

struct RawStopTime {
    line: u64,
    sequence: u32,
    stop_id: String,
    arrival: Option<u32>,
    departure: Option<u32>,
}

fn read_stop_times(t: &Table, feed: &mut Feed) -> Result<(), GtfsError> {
    let (trip, arr, dep, stop, seq) = (
        t.require("trip_id")?,
        t.require("arrival_time")?,
        t.require("departure_time")?,
        t.require("stop_id")?,
        t.require("stop_sequence")?,
    );
    let time = |line: u64, v: &str| -> Result<Option<u32>, GtfsError> {
        if v.is_empty() {
            return Ok(None);
        }
        parse_time(v)
            .map(Some)
            .ok_or_else(|| malformed(t.file, line, format!("invalid time {v:?}")))
    };
    let mut by_trip: BTreeMap<String, Vec<RawStopTime>> = BTreeMap::new();
    for (line, rec) in &t.rows {
        let line = *line;
        if !feed.trips.contains_key(&rec[trip]) {
            return Err(dangling(t.file, line, "trip_id", &rec[trip]));
        }
        if !feed.stops.contains_key(&rec[stop]) {
            return Err(dangling(t.file, line, "stop_id", &rec[stop]));
        }
        by_trip.entry(rec[trip].to_string()).or_default().push(RawStopTime {
            line,
            sequence: parse_num(t.file, line, "stop_sequence", &rec[seq])?,
            stop_id: rec[stop].to_string(),
            arrival: time(line, &rec[arr])?,
            departure: time(line, &rec[dep])?,
        });
    }
    for (trip_id, mut raw) in by_trip {
        raw.sort_by_key(|r| r.sequence);
        if let Some(w) = raw.windows(2).find(|w| w[0].sequence == w[1].sequence) {
            return Err(malformed(
                t.file,
                w[1].line,
                format!("duplicate stop_sequence {} in trip {trip_id}", w[1].sequence),
            ));
        }
        let stop_times = fill_times(t.file, &raw)?;
        let trip = feed.trips.get_mut(&trip_id).expect("checked above");
        trip.stop_times = stop_times;
        if let Err(reason) = check_monotone(trip) {
            let line = first_backwards_line(&raw, &trip.stop_times);
            return Err(malformed(t.file, line, reason));
        }
    }
    Ok(())
}

/// Resolves one-sided times and linearly interpolates untimed intermediate
/// stops between their timed neighbours.
fn fill_times(file: &str, raw: &[RawStopTime]) -> Result<Vec<StopTime>, GtfsError> {
    let timed: Vec<Option<(u32, u32)>> = raw
        .iter()
        .map(|r| match (r.arrival, r.departure) {
            (Some(a), Some(d)) => Some((a, d)),
            (Some(a), None) => Some((a, a)),
            (None, Some(d)) => Some((d, d)),
            (None, None) => None,
        })
        .collect();
    for idx in [0, raw.len() - 1] {
        if timed[idx].is_none() {
            return Err(malformed(
                file,
                raw[idx].line,
                "first and last stop of a trip must be timed",
            ));
        }
    }
    let mut out = Vec::with_capacity(raw.len());
    let mut prev = 0usize;
    for (i, r) in raw.iter().enumerate() {
        let (arrival, departure) = match timed[i] {
            Some(t) => {
                prev = i;
                t
            }
            None => {
                let next = (i + 1..raw.len()).find(|&j| timed[j].is_some()).expect("last is timed");
                let from = timed[prev].expect("timed").1;
                let to = timed[next].expect("timed").0;
                if to < from {
                    return Err(malformed(file, r.line, "cannot interpolate backwards in time"));
                }
                let t = from + ((to - from) as u64 * (i - prev) as u64 / (next - prev) as u64) as u32;
                (t, t)
            }
        };
        out.push(StopTime {
            stop_id: r.stop_id.clone(),
            arrival,
            departure,
        });
    }
    Ok(out)
}

fn first_backwards_line(raw: &[RawStopTime], st: &[StopTime]) -> u64 {
    let mut last = 0;
    for (r, s) in raw.iter().zip(st) {
        if s.arrival < last || s.departure < s.arrival {
            return r.line;
        }
        last = s.departure;
    }
    raw.first().map(|r| r.line).unwrap_or(0)
}

fn read_frequencies(t: &Table, feed: &Feed) -> Result<BTreeMap<String, Vec<Frequency>>, GtfsError> {
    let (trip, start, end, headway) = (
        t.require("trip_id")?,
        t.require("start_time")?,
        t.require("end_time")?,
        t.require("headway_secs")?,
    );
    let exact = t.col("exact_times");
    let mut out: BTreeMap<String, Vec<Frequency>> = BTreeMap::new();
    for (line, rec) in &t.rows {
        let line = *line;
        if !feed.trips.contains_key(&rec[trip]) {
            return Err(dangling(t.file, line, "trip_id", &rec[trip]));
        }
        let time = |v: &str| {
            parse_time(v).ok_or_else(|| malformed(t.file, line, format!("invalid time {v:?}")))
        };
        let freq = Frequency {
            start: time(&rec[start])?,
            end: time(&rec[end])?,
            headway: parse_num(t.file, line, "headway_secs", &rec[headway])?,
            exact_times: field(rec, exact) == "1",
        };
        if freq.headway == 0 || freq.end < freq.start {
            return Err(malformed(t.file, line, "frequency needs headway > 0 and end >= start"));
        }
        out.entry(rec[trip].to_string()).or_default().push(freq);
    }
    Ok(out)
}
