//! Regular sampling lattice clipped to a boundary polygon, and grid holes.
//!
//! The lattice lives in a local azimuthal equidistant plane centred on the
//! middle of the boundary's longitude/latitude bounding box. Cells are
//! `cell_size` squares anchored at the projected bounding box's south-west
//! corner (plus an optional offset); a cell's centre is a centroid when it
//! falls inside the boundary.

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::geo::{haversine_m, LatLon, LocalProjection};
use crate::router::StopIndex;

pub const DEFAULT_CELL_SIZE_M: f64 = 500.0;
pub const DEFAULT_HOLE_TOLERANCE_M: f64 = 35.0;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("invalid boundary polygon: {0}")]
    InvalidPolygon(String),
    #[error("cell size must be positive and finite, got {0}")]
    InvalidCellSize(f64),
}

/// One polygon: the exterior ring followed by interior rings. Rings are
/// closed (first vertex repeated last).
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    pub rings: Vec<Vec<LatLon>>,
}

/// A simple polygon or multipolygon.
#[derive(Debug, Clone, PartialEq)]
pub struct Boundary {
    pub polygons: Vec<Polygon>,
}

fn invalid(msg: impl Into<String>) -> GridError {
    GridError::InvalidPolygon(msg.into())
}

impl Boundary {
    /// Reads a GeoJSON Polygon, MultiPolygon, Feature or FeatureCollection
    /// (all polygonal features are combined).
    pub fn from_geojson(text: &str) -> Result<Self, GridError> {
        let v: Value = serde_json::from_str(text).map_err(|e| invalid(format!("not JSON: {e}")))?;
        let mut polygons = Vec::new();
        collect_polygons(&v, &mut polygons)?;
        let b = Self { polygons };
        b.validate()?;
        Ok(b)
    }

    /// A single exterior ring; the ring is closed if needed.
    pub fn from_ring(ring: &[LatLon]) -> Result<Self, GridError> {
        let mut ring = ring.to_vec();
        if ring.first() != ring.last() {
            if let Some(&first) = ring.first() {
                ring.push(first);
            }
        }
        let b = Self {
            polygons: vec![Polygon { rings: vec![ring] }],
        };
        b.validate()?;
        Ok(b)
    }

    fn vertices(&self) -> impl Iterator<Item = &LatLon> {
        self.polygons.iter().flat_map(|p| p.rings.iter().flatten())
    }

    /// Middle of the longitude/latitude bounding box.
    pub fn bbox_center(&self) -> LatLon {
        let (mut lat0, mut lat1, mut lon0, mut lon1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for p in self.vertices() {
            lat0 = lat0.min(p.lat);
            lat1 = lat1.max(p.lat);
            lon0 = lon0.min(p.lon);
            lon1 = lon1.max(p.lon);
        }
        LatLon::new((lat0 + lat1) / 2.0, (lon0 + lon1) / 2.0)
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if self.polygons.is_empty() {
            return Err(invalid("no polygon"));
        }
        let proj = LocalProjection::new(self.bbox_center());
        for (pi, poly) in self.polygons.iter().enumerate() {
            if poly.rings.is_empty() {
                return Err(invalid(format!("polygon {pi} has no ring")));
            }
            let mut planar = Vec::new();
            for (ri, ring) in poly.rings.iter().enumerate() {
                if ring.len() < 4 {
                    return Err(invalid(format!("polygon {pi} ring {ri} has fewer than 4 positions")));
                }
                if ring.first() != ring.last() {
                    return Err(invalid(format!("polygon {pi} ring {ri} is not closed")));
                }
                if let Some(p) = ring.iter().find(|p| !p.is_valid()) {
                    return Err(invalid(format!("polygon {pi} ring {ri} has invalid position ({}, {})", p.lon, p.lat)));
                }
                let xy: Vec<(f64, f64)> = ring.iter().map(|p| proj.forward(*p)).collect();
                if signed_area(&xy).abs() < 1e-6 {
                    return Err(invalid(format!("polygon {pi} ring {ri} has zero area")));
                }
                planar.push(xy);
            }
            if let Some((a, b)) = first_crossing(&planar) {
                return Err(invalid(format!("polygon {pi} is not simple: edges {a} and {b} intersect")));
            }
        }
        Ok(())
    }
}

fn position(v: &Value) -> Result<LatLon, GridError> {
    match v.as_array().map(Vec::as_slice) {
        Some([lon, lat, ..]) => match (lon.as_f64(), lat.as_f64()) {
            (Some(lon), Some(lat)) => Ok(LatLon::new(lat, lon)),
            _ => Err(invalid("position is not numeric")),
        },
        _ => Err(invalid("position needs longitude and latitude")),
    }
}

fn polygon_coords(v: &Value) -> Result<Polygon, GridError> {
    let rings = v.as_array().ok_or_else(|| invalid("polygon coordinates are not an array"))?;
    let rings = rings
        .iter()
        .map(|r| {
            r.as_array()
                .ok_or_else(|| invalid("ring is not an array"))?
                .iter()
                .map(position)
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Polygon { rings })
}

fn collect_polygons(v: &Value, out: &mut Vec<Polygon>) -> Result<(), GridError> {
    let kind = v.get("type").and_then(Value::as_str).unwrap_or("");
    match kind {
        "Polygon" => out.push(polygon_coords(&v["coordinates"])?),
        "MultiPolygon" => {
            for p in v["coordinates"].as_array().ok_or_else(|| invalid("multipolygon coordinates"))? {
                out.push(polygon_coords(p)?);
            }
        }
        "Feature" => collect_polygons(&v["geometry"], out)?,
        "FeatureCollection" => {
            for f in v["features"].as_array().ok_or_else(|| invalid("features is not an array"))? {
                collect_polygons(f, out)?;
            }
        }
        other => return Err(invalid(format!("unsupported GeoJSON type {other:?}"))),
    }
    Ok(())
}

fn signed_area(ring: &[(f64, f64)]) -> f64 {
    ring.windows(2).map(|w| w[0].0 * w[1].1 - w[1].0 * w[0].1).sum::<f64>() / 2.0
}

fn orient(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

fn on_segment(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> bool {
    p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

fn segments_touch(a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64)) -> bool {
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0)) && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0)) {
        return true;
    }
    (o1 == 0.0 && on_segment(a, b, c))
        || (o2 == 0.0 && on_segment(a, b, d))
        || (o3 == 0.0 && on_segment(c, d, a))
        || (o4 == 0.0 && on_segment(c, d, b))
}

/// First pair of non-adjacent edges (numbered across rings) that touch.
fn first_crossing(rings: &[Vec<(f64, f64)>]) -> Option<(usize, usize)> {
    let mut edges = Vec::new();
    for (ri, ring) in rings.iter().enumerate() {
        let n = ring.len() - 1;
        for i in 0..n {
            edges.push((ri, i, n, ring[i], ring[i + 1]));
        }
    }
    for (x, &(ra, ia, na, a0, a1)) in edges.iter().enumerate() {
        for (y, &(rb, ib, _, b0, b1)) in edges.iter().enumerate().skip(x + 1) {
            let adjacent = ra == rb && (ib == ia + 1 || (ia == 0 && ib == na - 1));
            if !adjacent && segments_touch(a0, a1, b0, b1) {
                return Some((x, y));
            }
        }
    }
    None
}

/// Even-odd point-in-ring test in the plane.
fn in_ring(ring: &[(f64, f64)], p: (f64, f64)) -> bool {
    let mut inside = false;
    for w in ring.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if (y0 > p.1) != (y1 > p.1) {
            let x = x0 + (p.1 - y0) * (x1 - x0) / (y1 - y0);
            if p.0 < x {
                inside = !inside;
            }
        }
    }
    inside
}

#[derive(Debug, Clone, PartialEq)]
pub struct Centroid {
    pub id: String,
    pub row: u32,
    pub col: u32,
    pub lat: f64,
    pub lon: f64,
    /// Projected metres.
    pub x: f64,
    pub y: f64,
}

impl Centroid {
    pub fn coord(&self) -> LatLon {
        LatLon::new(self.lat, self.lon)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    pub cell_size: f64,
    pub projection: LocalProjection,
    /// Projected south-west corner of cell (0, 0).
    pub anchor: (f64, f64),
    /// Row-major, south to north, west to east.
    pub centroids: Vec<Centroid>,
    /// Indices into `centroids`, ascending.
    pub holes: Vec<usize>,
}

/// Lattice with the anchor at the bounding-box corner.
pub fn generate_grid(boundary: &Boundary, cell_size: f64) -> Result<Lattice, GridError> {
    generate_grid_with_offset(boundary, cell_size, (0.0, 0.0))
}

/// Lattice whose anchor is shifted by `offset` metres (east, north) from the
/// projected bounding-box corner.
pub fn generate_grid_with_offset(boundary: &Boundary, cell_size: f64, offset: (f64, f64)) -> Result<Lattice, GridError> {
    if !(cell_size.is_finite() && cell_size > 0.0) {
        return Err(GridError::InvalidCellSize(cell_size));
    }
    boundary.validate()?;
    let projection = LocalProjection::new(boundary.bbox_center());
    let planar: Vec<Vec<Vec<(f64, f64)>>> = boundary
        .polygons
        .iter()
        .map(|p| p.rings.iter().map(|r| r.iter().map(|v| projection.forward(*v)).collect()).collect())
        .collect();
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for &(x, y) in planar.iter().flatten().flatten() {
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    let anchor = (x0 + offset.0, y0 + offset.1);
    let cols = ((x1 - anchor.0) / cell_size).ceil().max(0.0) as u32;
    let rows = ((y1 - anchor.1) / cell_size).ceil().max(0.0) as u32;
    let inside = |p: (f64, f64)| {
        planar
            .iter()
            .any(|rings| in_ring(&rings[0], p) && !rings[1..].iter().any(|h| in_ring(h, p)))
    };
    let mut centroids = Vec::new();
    for row in 0..rows {
        for col in 0..cols {
            let x = anchor.0 + (f64::from(col) + 0.5) * cell_size;
            let y = anchor.1 + (f64::from(row) + 0.5) * cell_size;
            if inside((x, y)) {
                let c = projection.inverse(x, y);
                centroids.push(Centroid {
                    id: format!("r{row:03}c{col:03}"),
                    row,
                    col,
                    lat: c.lat,
                    lon: c.lon,
                    x,
                    y,
                });
            }
        }
    }
    Ok(Lattice {
        cell_size,
        projection,
        anchor,
        centroids,
        holes: Vec::new(),
    })
}

/// Mean distance from a uniform point in a square cell to its centre, and
/// the time to walk it.
pub fn expected_access_overhead(cell_size: f64, walk_speed: f64) -> (f64, f64) {
    let s2 = std::f64::consts::SQRT_2;
    let d = cell_size * (s2 + (1.0 + s2).ln()) / 6.0;
    (d, d / walk_speed)
}

/// Indices of `expected` positions with no `observed` point within `tol_m`,
/// in the order of `expected`.
pub fn detect_holes(expected: &[LatLon], observed: &[LatLon], tol_m: f64) -> Vec<usize> {
    let index = StopIndex::new(observed);
    expected
        .iter()
        .enumerate()
        .filter(|(_, p)| index.within(**p, tol_m).is_empty())
        .map(|(i, _)| i)
        .collect()
}

impl Lattice {
    pub fn len(&self) -> usize {
        self.centroids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.is_empty()
    }

    pub fn coords(&self) -> Vec<LatLon> {
        self.centroids.iter().map(Centroid::coord).collect()
    }

    /// Records as holes the centroids with no observed origin nearby.
    pub fn mark_holes(&mut self, observed: &[LatLon], tol_m: f64) {
        self.holes = detect_holes(&self.coords(), observed, tol_m);
    }

    pub fn is_hole(&self, i: usize) -> bool {
        self.holes.binary_search(&i).is_ok()
    }

    /// Closed counter-clockwise corner ring of tile `i`.
    pub fn tile(&self, i: usize) -> Vec<LatLon> {
        let c = &self.centroids[i];
        let h = self.cell_size / 2.0;
        [(-h, -h), (h, -h), (h, h), (-h, h), (-h, -h)]
            .iter()
            .map(|(dx, dy)| self.projection.inverse(c.x + dx, c.y + dy))
            .collect()
    }

    /// Lattice construction details carried in exported metadata.
    pub fn metadata(&self) -> Value {
        json!({
            "projection": "azimuthal equidistant (spherical)",
            "projection_center": [self.projection.center.lon, self.projection.center.lat],
            "cell_size_m": self.cell_size,
            "anchor_m": [self.anchor.0, self.anchor.1],
            "centroids": self.centroids.len(),
            "holes": self.holes.len(),
        })
    }

    /// FeatureCollection of square tiles with `{id, lon, lat, is_hole}` and
    /// whatever `extra` adds per tile.
    pub fn to_geojson_with(&self, mut extra: impl FnMut(usize, &mut Map<String, Value>)) -> Value {
        let features: Vec<Value> = self
            .centroids
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let mut props = Map::new();
                props.insert("id".into(), json!(c.id));
                props.insert("lon".into(), json!(c.lon));
                props.insert("lat".into(), json!(c.lat));
                props.insert("is_hole".into(), json!(self.is_hole(i)));
                extra(i, &mut props);
                let ring: Vec<Value> = self.tile(i).iter().map(|p| json!([p.lon, p.lat])).collect();
                json!({
                    "type": "Feature",
                    "geometry": {"type": "Polygon", "coordinates": [ring]},
                    "properties": props,
                })
            })
            .collect();
        json!({
            "type": "FeatureCollection",
            "metadata": self.metadata(),
            "features": features,
        })
    }

    pub fn to_geojson(&self) -> Value {
        self.to_geojson_with(|_, _| {})
    }

    /// Nearest centroid index to `p` within `tol_m`.
    pub fn locate(&self, p: LatLon, tol_m: f64) -> Option<usize> {
        self.centroids
            .iter()
            .enumerate()
            .map(|(i, c)| (i, haversine_m(p, c.coord())))
            .filter(|&(_, d)| d <= tol_m)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
    }
}
