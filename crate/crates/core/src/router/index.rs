use std::collections::HashMap;

use crate::geo::{haversine_m, LatLon, EARTH_RADIUS_M};

/// Bucket size of the index in degrees (about 550 m of latitude).
const CELL_DEG: f64 = 0.005;

/// Radius queries over a fixed point set, exact in great-circle distance.
#[derive(Debug, Clone, Default)]
pub struct StopIndex {
    points: Vec<LatLon>,
    buckets: HashMap<(i32, i32), Vec<u32>>,
}

fn cell(v: f64) -> i32 {
    (v / CELL_DEG).floor() as i32
}

impl StopIndex {
    pub fn new(points: &[LatLon]) -> Self {
        let mut buckets: HashMap<(i32, i32), Vec<u32>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            buckets.entry((cell(p.lat), cell(p.lon))).or_default().push(i as u32);
        }
        Self {
            points: points.to_vec(),
            buckets,
        }
    }

    /// Indices and distances of points within `radius_m` of `p`, sorted by
    /// index.
    pub fn within(&self, p: LatLon, radius_m: f64) -> Vec<(u32, f64)> {
        let mut out = Vec::new();
        if self.points.is_empty() || radius_m < 0.0 {
            return out;
        }
        let dlat = (radius_m / EARTH_RADIUS_M).to_degrees();
        let lat_lo = (p.lat - dlat).max(-90.0);
        let lat_hi = (p.lat + dlat).min(90.0);
        let widest = lat_lo.abs().max(lat_hi.abs()).to_radians().cos();
        let dlon = if widest > 1e-9 { dlat / widest } else { f64::INFINITY };
        let (lon_lo, lon_hi) = (p.lon - dlon, p.lon + dlon);
        let (c_lat_lo, c_lat_hi) = (cell(lat_lo), cell(lat_hi));
        let cells = (c_lat_hi - c_lat_lo + 1) as f64 * ((lon_hi - lon_lo) / CELL_DEG + 2.0);
        // near the poles, across the antimeridian, or for huge radii a full
        // scan is simpler and no slower
        if lon_lo < -180.0 || lon_hi > 180.0 || cells > self.buckets.len() as f64 {
            self.scan(p, radius_m, self.buckets.values(), &mut out);
        } else {
            for a in c_lat_lo..=c_lat_hi {
                for b in cell(lon_lo)..=cell(lon_hi) {
                    if let Some(v) = self.buckets.get(&(a, b)) {
                        self.scan(p, radius_m, std::iter::once(v), &mut out);
                    }
                }
            }
        }
        out.sort_by_key(|&(i, _)| i);
        out.dedup_by_key(|&mut (i, _)| i);
        out
    }

    fn scan<'a>(&self, p: LatLon, radius_m: f64, buckets: impl Iterator<Item = &'a Vec<u32>>, out: &mut Vec<(u32, f64)>) {
        for v in buckets {
            for &i in v {
                let d = haversine_m(p, self.points[i as usize]);
                if d <= radius_m {
                    out.push((i, d));
                }
            }
        }
    }
}
