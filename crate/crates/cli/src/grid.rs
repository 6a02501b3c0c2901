use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use odscope_core::grid::{generate_grid_with_offset, Boundary, Lattice, DEFAULT_HOLE_TOLERANCE_M};
use odscope_core::panel::Node;
use odscope_core::LatLon;
use serde::Deserialize;
use serde_json::json;

use crate::args::LatticeArgs;
use crate::manifest::{base_name, bytes_digest, RunManifest};
use crate::output::{create_dir, write_csv, write_json};

#[derive(clap::Args, Debug)]
pub struct Args {
    #[command(flatten)]
    lattice: LatticeArgs,
    /// CSV with `lat,lon` columns of observed origins; centroids without
    /// one nearby are flagged as holes.
    #[arg(long)]
    observed: Option<PathBuf>,
    /// Distance within which an observed origin matches a centroid, metres.
    #[arg(long, default_value_t = DEFAULT_HOLE_TOLERANCE_M)]
    hole_tolerance: f64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: Args) -> Result<()> {
    let (mut lattice, boundary_bytes) = load_lattice(&args.lattice)?;
    let mut params = args.lattice.parameters();
    let mut manifest = RunManifest::new("grid", json!(null));
    manifest.input(format!("boundary:{}", base_name(&args.lattice.boundary)), bytes_digest(&boundary_bytes));
    if let Some(path) = &args.observed {
        lattice.mark_holes(&read_points(path)?, args.hole_tolerance);
        manifest.input(format!("observed:{}", base_name(path)), crate::manifest::file_digest(path)?);
        params["hole_tolerance_m"] = json!(args.hole_tolerance);
    }
    manifest.parameters = params;

    create_dir(&args.out)?;
    let mut geo = lattice.to_geojson();
    geo["metadata"]["parameters"] = manifest.parameters.clone();
    write_json(&args.out, "grid.geojson", &geo, &mut manifest)?;
    let rows: Vec<Vec<String>> = nodes(&lattice).iter().map(node_record).collect();
    write_csv(&args.out, "nodes.csv", &NODE_HEADER, &rows, &mut manifest)?;
    manifest.write(&args.out)?;
    println!("{} centroids, {} holes", lattice.len(), lattice.holes.len());
    Ok(())
}

pub const NODE_HEADER: [&str; 3] = ["id", "lat", "lon"];

pub fn node_record(n: &Node) -> Vec<String> {
    vec![n.id.clone(), format!("{:.6}", n.lat), format!("{:.6}", n.lon)]
}

/// Lattice of a boundary file, with the file's bytes for digesting.
pub fn load_lattice(a: &LatticeArgs) -> Result<(Lattice, Vec<u8>)> {
    let bytes = fs::read(&a.boundary).with_context(|| format!("cannot read boundary {}", a.boundary.display()))?;
    let text = String::from_utf8_lossy(&bytes);
    let boundary = Boundary::from_geojson(&text).with_context(|| format!("invalid boundary {}", a.boundary.display()))?;
    let lattice = generate_grid_with_offset(&boundary, a.cell_size, (a.offset_east, a.offset_north))?;
    if lattice.is_empty() {
        bail!("no lattice centroid falls inside {}", a.boundary.display());
    }
    Ok((lattice, bytes))
}

/// Centroids as panel nodes, in id order.
pub fn nodes(lattice: &Lattice) -> Vec<Node> {
    let mut out: Vec<Node> = lattice
        .centroids
        .iter()
        .map(|c| Node {
            id: c.id.clone(),
            lat: c.lat,
            lon: c.lon,
        })
        .collect();
    out.sort_by(|a, b| a.id.cmp(&b.id));
    out
}

#[derive(Deserialize)]
struct PointRow {
    lat: f64,
    lon: f64,
}

fn read_points(path: &Path) -> Result<Vec<LatLon>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut out = Vec::new();
    for (i, row) in r.deserialize::<PointRow>().enumerate() {
        let row = row.with_context(|| format!("{}: row {}", path.display(), i + 2))?;
        out.push(LatLon::new(row.lat, row.lon));
    }
    Ok(out)
}
