//! Argument value parsers and option groups shared by several commands.

use std::path::PathBuf;

use chrono::NaiveDate;
use odscope_core::grid::DEFAULT_CELL_SIZE_M;
use odscope_core::gtfs::time::parse_time;
use odscope_core::panel::{RouteOptions, SliceSpec};
use odscope_core::router::{NetworkParams, WalkParams, DEFAULT_MAX_ROUNDS};
use serde_json::{json, Value};

/// `YYYY-MM-DD` or `YYYYMMDD`.
pub fn parse_date(s: &str) -> Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .or_else(|_| NaiveDate::parse_from_str(s, "%Y%m%d"))
        .map_err(|_| format!("invalid date {s:?}, expected YYYY-MM-DD"))
}

/// A date or an inclusive range `FROM..TO`.
pub fn parse_date_range(s: &str) -> Result<Vec<NaiveDate>, String> {
    match s.split_once("..") {
        Some((a, b)) => {
            let (a, b) = (parse_date(a)?, parse_date(b)?);
            if b < a {
                return Err(format!("empty date range {s:?}"));
            }
            Ok(a.iter_days().take_while(|d| *d <= b).collect())
        }
        None => Ok(vec![parse_date(s)?]),
    }
}

/// `HH:MM` or `HH:MM:SS`.
pub fn parse_clock(s: &str) -> Result<u32, String> {
    let full = if s.matches(':').count() == 1 { format!("{s}:00") } else { s.to_string() };
    parse_time(&full).ok_or_else(|| format!("invalid time {s:?}, expected HH:MM"))
}

/// `DATE,BAND,HH:MM`: instants ten minutes either side of the centre.
pub fn parse_slice(s: &str) -> Result<SliceSpec, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [date, band, center] = parts[..] else {
        return Err(format!("invalid slice {s:?}, expected DATE,BAND,HH:MM"));
    };
    if band.is_empty() || !band.chars().all(|c| c.is_ascii_alphanumeric()) {
        return Err(format!("slice band {band:?} must be alphanumeric"));
    }
    let center = parse_clock(center)?;
    if center < 600 {
        return Err("slice centre must be at 00:10 or later".into());
    }
    Ok(SliceSpec::around(parse_date(date)?, band, center))
}

/// `NAME=PATH`
pub fn parse_named_path(s: &str) -> Result<(String, PathBuf), String> {
    let (name, path) = s.split_once('=').ok_or_else(|| format!("expected NAME=PATH, got {s:?}"))?;
    check_name(name)?;
    Ok((name.to_string(), PathBuf::from(path)))
}

/// Scenario names become file-name components.
pub fn check_name(name: &str) -> Result<(), String> {
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-') {
        return Err(format!("scenario name {name:?} may only hold letters, digits and '-'"));
    }
    Ok(())
}

#[derive(clap::Args, Debug, Clone)]
pub struct LatticeArgs {
    /// Boundary polygon(s) as GeoJSON.
    #[arg(long)]
    pub boundary: PathBuf,
    /// Lattice spacing in metres.
    #[arg(long, default_value_t = DEFAULT_CELL_SIZE_M)]
    pub cell_size: f64,
    /// Shift of the lattice anchor eastwards, metres.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub offset_east: f64,
    /// Shift of the lattice anchor northwards, metres.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub offset_north: f64,
}

impl LatticeArgs {
    pub fn parameters(&self) -> Value {
        json!({
            "cell_size_m": self.cell_size,
            "offset_m": [self.offset_east, self.offset_north],
        })
    }
}

#[derive(clap::Args, Debug, Clone)]
pub struct RoutingArgs {
    /// Walking speed, m/s.
    #[arg(long, default_value_t = WalkParams::default().speed)]
    pub walk_speed: f64,
    /// Factor on straight-line distance for walking.
    #[arg(long, default_value_t = WalkParams::default().detour)]
    pub detour: f64,
    /// Longest access, egress or direct walk, metres.
    #[arg(long, default_value_t = WalkParams::default().max_access_m)]
    pub max_walk: f64,
    /// Stops closer than this are linked by a foot transfer, metres.
    #[arg(long, default_value_t = NetworkParams::default().transfer_radius_m)]
    pub transfer_radius: f64,
    /// Extra seconds required at every transfer.
    #[arg(long, default_value_t = 0)]
    pub transfer_slack: u32,
    /// Most vehicles per journey.
    #[arg(long, default_value_t = DEFAULT_MAX_ROUNDS)]
    pub max_rounds: u8,
}

impl RoutingArgs {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("walk speed", self.walk_speed),
            ("detour", self.detour),
            ("max walk", self.max_walk),
        ];
        for (what, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("{what} must be positive"));
            }
        }
        if !(self.transfer_radius.is_finite() && self.transfer_radius >= 0.0) {
            return Err("transfer radius must be non-negative".into());
        }
        if self.max_rounds == 0 {
            return Err("max rounds must be at least 1".into());
        }
        Ok(())
    }

    pub fn network(&self) -> NetworkParams {
        NetworkParams {
            walk: WalkParams {
                speed: self.walk_speed,
                detour: self.detour,
                max_access_m: self.max_walk,
            },
            transfer_radius_m: self.transfer_radius,
            transfer_slack_s: self.transfer_slack,
        }
    }

    pub fn route_options(&self) -> RouteOptions {
        RouteOptions {
            max_rounds: self.max_rounds,
            max_walk_m: None,
        }
    }

    pub fn parameters(&self) -> Value {
        json!({
            "walk_speed_mps": self.walk_speed,
            "walk_detour": self.detour,
            "max_walk_m": self.max_walk,
            "transfer_radius_m": self.transfer_radius,
            "transfer_slack_s": self.transfer_slack,
            "max_rounds": self.max_rounds,
        })
    }
}
