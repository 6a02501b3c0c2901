//! Schedule-based public transport accessibility toolkit.
//!
//! The crate is organised along the pipeline it supports:
//!
//! - [`gtfs`]: parsing, validating, merging and writing GTFS feeds.
//! - [`scenario`]: declarative network edits producing counterfactual feeds.
//! - [`router`]: an immutable timetable network with a round-based
//!   earliest-arrival router and a time-expanded reference search.
//! - [`grid`]: the regular sampling lattice and grid-hole detection.
//! - [`panel`]: origin-destination travel-time panels over scenarios,
//!   service days and departure instants.
//! - [`diagnostics`], [`reliability`], [`monetise`]: the analytics layered on
//!   top of a panel.

pub mod diagnostics;
pub mod geo;
pub mod grid;
pub mod gtfs;
pub mod monetise;
pub mod panel;
pub mod reliability;
pub mod router;
pub mod scenario;
pub mod stats;

pub use geo::LatLon;
