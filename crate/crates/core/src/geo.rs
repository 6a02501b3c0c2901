//! Spherical geometry helpers.

use serde::{Deserialize, Serialize};

/// Mean Earth radius (IUGG), metres.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// A WGS84 coordinate in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

impl LatLon {
    pub const fn new(lat: f64, lon: f64) -> Self {
        Self { lat, lon }
    }

    pub fn is_valid(&self) -> bool {
        self.lat.is_finite()
            && self.lon.is_finite()
            && (-90.0..=90.0).contains(&self.lat)
            && (-180.0..=180.0).contains(&self.lon)
    }
}

/// Great-circle distance in metres.
pub fn haversine_m(a: LatLon, b: LatLon) -> f64 {
    EARTH_RADIUS_M * central_angle(a, b)
}

fn central_angle(a: LatLon, b: LatLon) -> f64 {
    let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
    let dp = p2 - p1;
    let dl = (b.lon - a.lon).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * h.sqrt().min(1.0).asin()
}

/// Point reached by travelling `distance_m` from `start` along the initial
/// bearing `bearing_deg` (clockwise from north).
pub fn destination(start: LatLon, bearing_deg: f64, distance_m: f64) -> LatLon {
    let delta = distance_m / EARTH_RADIUS_M;
    let theta = bearing_deg.to_radians();
    let p1 = start.lat.to_radians();
    let l1 = start.lon.to_radians();
    let p2 = (p1.sin() * delta.cos() + p1.cos() * delta.sin() * theta.cos()).asin();
    let l2 = l1
        + (theta.sin() * delta.sin() * p1.cos()).atan2(delta.cos() - p1.sin() * p2.sin());
    LatLon::new(p2.to_degrees(), l2.to_degrees())
}

/// Spherical azimuthal equidistant projection around a fixed centre.
///
/// Distances and azimuths from the centre are exact; at city scale the
/// distortion elsewhere is well below a metre per kilometre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalProjection {
    pub center: LatLon,
}

impl LocalProjection {
    pub fn new(center: LatLon) -> Self {
        Self { center }
    }

    /// Projects to planar metres (x east, y north).
    pub fn forward(&self, p: LatLon) -> (f64, f64) {
        let c = central_angle(self.center, p);
        if c == 0.0 {
            return (0.0, 0.0);
        }
        let (p0, p1) = (self.center.lat.to_radians(), p.lat.to_radians());
        let dl = (p.lon - self.center.lon).to_radians();
        let k = c / c.sin();
        let x = EARTH_RADIUS_M * k * p1.cos() * dl.sin();
        let y = EARTH_RADIUS_M * k * (p0.cos() * p1.sin() - p0.sin() * p1.cos() * dl.cos());
        (x, y)
    }

    pub fn inverse(&self, x: f64, y: f64) -> LatLon {
        let rho = x.hypot(y);
        if rho == 0.0 {
            return self.center;
        }
        let c = rho / EARTH_RADIUS_M;
        let p0 = self.center.lat.to_radians();
        let lat = (c.cos() * p0.sin() + y * c.sin() * p0.cos() / rho).asin();
        let lon = self.center.lon.to_radians()
            + (x * c.sin()).atan2(rho * p0.cos() * c.cos() - y * p0.sin() * c.sin());
        LatLon::new(lat.to_degrees(), lon.to_degrees())
    }
}
