use std::path::Path;

use serde::Deserialize;

use super::{
    DayType, Edit, HeadwayBand, LineDefinition, RouteSelector, RunTimeSource, ScenarioError, ScenarioSpec,
    Station, DEFAULT_DWELL_S, METRO_CALIBRATION, TRAM_CALIBRATION,
};

const METRO3_CSV: &str = include_str!("../../data/metro3_stations.csv");

pub const BUILTIN_NAMES: [&str; 3] = ["baseline", "partial", "full"];

/// Stations of the partial conversion: Albert up to Gare du Nord.
const PARTIAL_STATIONS: usize = 11;

/// Share of metro departures kept on the partial corridor.
const PARTIAL_SUPPLY_FACTOR: f64 = 0.8;

#[derive(Deserialize)]
struct CatalogRow {
    order: u32,
    name: String,
    lat: f64,
    lon: f64,
}

fn parse_catalog(reader: impl std::io::Read, origin: &str) -> Result<Vec<Station>, ScenarioError> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = Vec::new();
    for (i, row) in rdr.deserialize::<CatalogRow>().enumerate() {
        let row = row.map_err(|e| ScenarioError::InvalidEdit(format!("{origin}: row {}: {e}", i + 1)))?;
        rows.push(row);
    }
    rows.sort_by_key(|r| r.order);
    let stations: Vec<Station> = rows
        .into_iter()
        .map(|r| Station {
            name: r.name,
            lat: r.lat,
            lon: r.lon,
        })
        .collect();
    if stations.len() < 2 || stations.iter().any(|s| !s.coord().is_valid()) {
        return Err(ScenarioError::InvalidEdit(format!("{origin}: station catalog needs 2+ valid stations")));
    }
    Ok(stations)
}

/// The packaged Metro 3 station list, Albert to Bordet.
pub fn metro3_catalog() -> Vec<Station> {
    parse_catalog(METRO3_CSV.as_bytes(), "packaged catalog").expect("packaged catalog is valid")
}

/// Reads a replacement catalog with columns `order,name,lat,lon`.
pub fn load_station_catalog(path: impl AsRef<Path>) -> Result<Vec<Station>, ScenarioError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| {
        ScenarioError::Gtfs(crate::gtfs::GtfsError::Io {
            path: path.display().to_string(),
            source,
        })
    })?;
    parse_catalog(file, &path.display().to_string())
}

fn band(days: DayType, start: u32, end: u32, headway_s: u32) -> HeadwayBand {
    HeadwayBand {
        days,
        start,
        end,
        headway_s,
    }
}

/// Metro service pattern: 5 min at weekday peaks, 7 min off-peak and on
/// Saturdays, 10 min in the evening and on Sundays.
fn metro_headways() -> Vec<HeadwayBand> {
    let h = |x: u32| x * 3600;
    vec![
        band(DayType::Weekday, h(5) + 1800, h(7), 600),
        band(DayType::Weekday, h(7), h(10), 300),
        band(DayType::Weekday, h(10), h(16), 420),
        band(DayType::Weekday, h(16), h(19), 300),
        band(DayType::Weekday, h(19), h(24) + 1800, 600),
        band(DayType::Saturday, h(6), h(20), 420),
        band(DayType::Saturday, h(20), h(24) + 1800, 600),
        band(DayType::Sunday, h(6), h(24) + 1800, 600),
    ]
}

fn metro_line(stations: &[Station]) -> LineDefinition {
    LineDefinition {
        route_id: "metro3".into(),
        short_name: "3".into(),
        long_name: format!(
            "{} - {}",
            stations[0].name,
            stations.last().expect("non-empty").name
        ),
        route_type: 1,
        stations: stations.to_vec(),
        dwell_s: DEFAULT_DWELL_S,
        headways: metro_headways(),
        calibration: METRO_CALIBRATION,
        bidirectional: true,
    }
}

/// Tram restructuring that accompanies the metro in both conversions.
fn tram_edits(stations: &[Station]) -> Vec<Edit> {
    let albert = stations
        .iter()
        .find(|s| s.name == "Albert")
        .cloned()
        .unwrap_or_else(|| stations[0].clone());
    vec![
        Edit::CurtailLine {
            route: RouteSelector::new("stib:4"),
            from: "Stalle".into(),
            to: "Albert".into(),
        },
        Edit::ExtendLine {
            route: RouteSelector::new("stib:7"),
            anchor: "Vanderkindere".into(),
            stations: vec![albert],
            run_times: RunTimeSource::Observed {
                fallback: TRAM_CALIBRATION,
            },
            dwell_s: 0,
        },
        Edit::CurtailLine {
            route: RouteSelector::new("stib:10"),
            from: "Esplanade".into(),
            to: "Rogier".into(),
        },
    ]
}

/// The three reference scenarios: status quo, partial conversion between
/// Albert and Gare du Nord with reduced supply, and the full line.
pub fn builtin_scenarios(catalog: &[Station]) -> Vec<ScenarioSpec> {
    let partial_stations = &catalog[..PARTIAL_STATIONS.min(catalog.len())];
    let mut partial = vec![
        Edit::AddLine(metro_line(partial_stations)),
        Edit::ScaleSupply {
            route: RouteSelector::new("metro3"),
            factor: PARTIAL_SUPPLY_FACTOR,
        },
    ];
    partial.extend(tram_edits(catalog));
    let mut full = vec![Edit::AddLine(metro_line(catalog))];
    full.extend(tram_edits(catalog));
    vec![
        ScenarioSpec::empty("baseline"),
        ScenarioSpec {
            name: "partial".into(),
            edits: partial,
        },
        ScenarioSpec {
            name: "full".into(),
            edits: full,
        },
    ]
}

pub fn builtin_scenario(name: &str, catalog: &[Station]) -> Option<ScenarioSpec> {
    builtin_scenarios(catalog).into_iter().find(|s| s.name == name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::line_runtime;

    fn add_line(spec: &ScenarioSpec) -> &LineDefinition {
        spec.edits
            .iter()
            .find_map(|e| match e {
                Edit::AddLine(l) => Some(l),
                _ => None,
            })
            .unwrap()
    }

    #[test]
    fn catalog_runs_albert_to_bordet() {
        let c = metro3_catalog();
        assert_eq!(c.len(), 18);
        assert_eq!(c[0].name, "Albert");
        assert_eq!(c[10].name, "Gare du Nord");
        assert_eq!(c[17].name, "Bordet");
    }

    #[test]
    fn three_builtins() {
        let specs = builtin_scenarios(&metro3_catalog());
        let names: Vec<_> = specs.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names, BUILTIN_NAMES);
        assert!(specs[0].edits.is_empty());
        let partial = add_line(&specs[1]);
        assert_eq!(partial.stations.len(), 11);
        assert_eq!(partial.stations.last().unwrap().name, "Gare du Nord");
        assert!(specs[1]
            .edits
            .iter()
            .any(|e| matches!(e, Edit::ScaleSupply { factor, .. } if *factor == 0.8)));
        let full = add_line(&specs[2]);
        assert_eq!(full.stations.len(), 18);
        assert_eq!(full.stations.last().unwrap().name, "Bordet");
    }

    #[test]
    fn full_line_under_twenty_minutes() {
        let line = add_line(&builtin_scenario("full", &metro3_catalog()).unwrap()).clone();
        let coords: Vec<_> = line.stations.iter().map(Station::coord).collect();
        let total = line_runtime(&coords, &line.calibration, line.dwell_s).unwrap();
        assert!(total < 1200, "{total} s");
        assert!(total > 900, "{total} s");
    }
}
