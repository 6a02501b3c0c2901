use std::fs;
use std::path::Path;

use super::time::format_time;
use super::{Feed, GtfsError};

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> GtfsError + '_ {
    move |source| GtfsError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_table(dir: &Path, file: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), GtfsError> {
    let path = dir.join(file);
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(Vec::new());
    let to_io = |e: csv::Error| GtfsError::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e),
    };
    w.write_record(header).map_err(to_io)?;
    for row in rows {
        w.write_record(&row).map_err(to_io)?;
    }
    let bytes = w.into_inner().map_err(|e| to_io(e.into_error().into()))?;
    fs::write(&path, bytes).map_err(io_err(&path))
}

/// Writes `feed` as a plain GTFS directory, creating it if needed.
///
/// Output is canonical (sorted ids, CRLF line ends, `stop_sequence`
/// numbered from 1), so parse → write → parse is the identity and two writes
/// of one feed are byte-identical.
pub fn write_feed(feed: &Feed, dir: impl AsRef<Path>) -> Result<(), GtfsError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(io_err(dir))?;

    if !feed.agencies.is_empty() {
        let rows = feed
            .agencies
            .iter()
            .map(|a| vec![a.id.clone(), a.name.clone(), a.url.clone(), a.timezone.clone()])
            .collect();
        write_table(
            dir,
            "agency.txt",
            &["agency_id", "agency_name", "agency_url", "agency_timezone"],
            rows,
        )?;
    }

    let rows = feed
        .stops
        .values()
        .map(|s| {
            vec![
                s.id.clone(),
                s.name.clone(),
                s.lat.to_string(),
                s.lon.to_string(),
                s.location_type.to_string(),
                s.parent_station.clone().unwrap_or_default(),
            ]
        })
        .collect();
    write_table(
        dir,
        "stops.txt",
        &["stop_id", "stop_name", "stop_lat", "stop_lon", "location_type", "parent_station"],
        rows,
    )?;

    let rows = feed
        .routes
        .values()
        .map(|r| {
            vec![
                r.id.clone(),
                r.agency_id.clone().unwrap_or_default(),
                r.short_name.clone(),
                r.long_name.clone(),
                r.route_type.to_string(),
            ]
        })
        .collect();
    write_table(
        dir,
        "routes.txt",
        &["route_id", "agency_id", "route_short_name", "route_long_name", "route_type"],
        rows,
    )?;

    let rows = feed
        .trips
        .values()
        .map(|t| {
            vec![
                t.route_id.clone(),
                t.service_id.clone(),
                t.id.clone(),
                t.headsign.clone().unwrap_or_default(),
                t.direction_id.map(|d| d.to_string()).unwrap_or_default(),
            ]
        })
        .collect();
    write_table(
        dir,
        "trips.txt",
        &["route_id", "service_id", "trip_id", "trip_headsign", "direction_id"],
        rows,
    )?;

    let rows = feed
        .trips
        .values()
        .flat_map(|t| {
            t.stop_times.iter().enumerate().map(move |(i, st)| {
                vec![
                    t.id.clone(),
                    format_time(st.arrival),
                    format_time(st.departure),
                    st.stop_id.clone(),
                    (i + 1).to_string(),
                ]
            })
        })
        .collect();
    write_table(
        dir,
        "stop_times.txt",
        &["trip_id", "arrival_time", "departure_time", "stop_id", "stop_sequence"],
        rows,
    )?;

    let weekly: Vec<Vec<String>> = feed
        .services
        .iter()
        .filter_map(|(id, s)| {
            let w = s.weekly.as_ref()?;
            let mut row = vec![id.clone()];
            row.extend(w.days.iter().map(|&d| if d { "1" } else { "0" }.to_string()));
            row.push(w.start.format("%Y%m%d").to_string());
            row.push(w.end.format("%Y%m%d").to_string());
            Some(row)
        })
        .collect();
    // a service without weekly rule and without exceptions would be lost;
    // it is kept alive through a calendar row that never runs
    let empty: Vec<Vec<String>> = feed
        .services
        .iter()
        .filter(|(_, s)| s.weekly.is_none() && s.added.is_empty() && s.removed.is_empty())
        .map(|(id, _)| {
            let mut row = vec![id.clone()];
            row.extend(std::iter::repeat_n("0".to_string(), 7));
            row.extend(["20000101".to_string(), "20000101".to_string()]);
            row
        })
        .collect();
    if !weekly.is_empty() || !empty.is_empty() {
        let mut rows = weekly;
        rows.extend(empty);
        rows.sort();
        write_table(
            dir,
            "calendar.txt",
            &[
                "service_id",
                "monday",
                "tuesday",
                "wednesday",
                "thursday",
                "friday",
                "saturday",
                "sunday",
                "start_date",
                "end_date",
            ],
            rows,
        )?;
    }

    let exceptions: Vec<Vec<String>> = feed
        .services
        .iter()
        .flat_map(|(id, s)| {
            let added = s.added.iter().map(move |d| (id, *d, "1"));
            let removed = s.removed.iter().map(move |d| (id, *d, "2"));
            let mut all: Vec<_> = added.chain(removed).collect();
            all.sort_by_key(|(_, d, _)| *d);
            all.into_iter()
                .map(|(id, d, k)| vec![id.clone(), d.format("%Y%m%d").to_string(), k.to_string()])
        })
        .collect();
    if !exceptions.is_empty() {
        write_table(
            dir,
            "calendar_dates.txt",
            &["service_id", "date", "exception_type"],
            exceptions,
        )?;
    }

    if !feed.frequencies.is_empty() {
        let rows = feed
            .frequencies
            .iter()
            .flat_map(|(trip, fs)| {
                fs.iter().map(move |f| {
                    vec![
                        trip.clone(),
                        format_time(f.start),
                        format_time(f.end),
                        f.headway.to_string(),
                        if f.exact_times { "1" } else { "0" }.to_string(),
                    ]
                })
            })
            .collect();
        write_table(
            dir,
            "frequencies.txt",
            &["trip_id", "start_time", "end_time", "headway_secs", "exact_times"],
            rows,
        )?;
    }
    Ok(())
}
