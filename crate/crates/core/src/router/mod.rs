//! Earliest-arrival routing on a single service day.
//!
//! Journeys start with a walk from the origin to a boarding stop, alternate
//! vehicle rides with foot transfers (one walk hop between stops, plus a
//! fixed slack before every boarding after the first), and end with a walk
//! from the last alighting stop. Walking directly from origin to destination
//! is also a journey. Walk times use great-circle distance inflated by a
//! detour factor.

mod index;
mod network;
mod oracle;
mod raptor;

use serde::{Deserialize, Serialize};

use crate::geo::LatLon;

pub use index::StopIndex;
pub use network::{Pattern, TimetableNetwork};
pub use oracle::{oracle_earliest_arrival, ORACLE_MAX_STOPS, ORACLE_MAX_TRIPS};
pub use raptor::{earliest_arrival, earliest_arrival_to, Targets};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkParams {
    /// m/s
    pub speed: f64,
    /// Multiplier on great-circle distance standing in for street circuity.
    pub detour: f64,
    /// Longest access, egress or direct walk, metres.
    pub max_access_m: f64,
}

impl Default for WalkParams {
    fn default() -> Self {
        Self {
            speed: 1.3,
            detour: 1.3,
            max_access_m: 1500.0,
        }
    }
}

impl WalkParams {
    /// Seconds to walk `distance_m`, rounded up to the next whole second.
    pub fn seconds(&self, distance_m: f64) -> u32 {
        // the epsilon keeps exact quotients such as 130 m at 1.3 m/s at 100 s
        (distance_m * self.detour / self.speed - 1e-6).ceil().max(0.0) as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub walk: WalkParams,
    /// Stops closer than this are linked by a foot transfer, metres.
    pub transfer_radius_m: f64,
    /// Extra seconds required before every boarding after the first.
    pub transfer_slack_s: u32,
}

impl Default for NetworkParams {
    fn default() -> Self {
        Self {
            walk: WalkParams::default(),
            transfer_radius_m: 100.0,
            transfer_slack_s: 0,
        }
    }
}

pub const DEFAULT_MAX_ROUNDS: u8 = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub origin: LatLon,
    pub destinations: Vec<LatLon>,
    /// Seconds after midnight of the network's service day.
    pub departure: u32,
    /// Most vehicles boarded in one journey, at least 1.
    pub max_rounds: u8,
    /// Longest single walk leg, metres; `None` uses the network's limit.
    pub max_walk_m: Option<f64>,
}

impl Query {
    pub fn new(origin: LatLon, destinations: Vec<LatLon>, departure: u32) -> Self {
        Self {
            origin,
            destinations,
            departure,
            max_rounds: DEFAULT_MAX_ROUNDS,
            max_walk_m: None,
        }
    }
}

/// Door-to-door seconds per destination; `None` is unreachable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TravelTimeResult {
    pub times: Vec<Option<u32>>,
    /// No stop and no destination was within walking range of the origin.
    pub origin_out_of_range: bool,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum RouterError {
    #[error("oracle limited to {max_stops} stops and {max_trips} trips, network has {stops} and {trips}")]
    InstanceTooLarge {
        stops: usize,
        trips: usize,
        max_stops: usize,
        max_trips: usize,
    },
}
