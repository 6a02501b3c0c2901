use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use odscope_core::gtfs::time::format_time;
use odscope_core::panel::{compute_block, partition_key, standard_slices, write_partition_csv, Partition, SliceSpec};
use odscope_core::router::TimetableNetwork;
use serde_json::json;

use crate::args::{parse_named_path, parse_slice, LatticeArgs, RoutingArgs};
use crate::grid::{load_lattice, node_record, nodes, NODE_HEADER};
use crate::ingest::read_feed;
use crate::manifest::{bytes_digest, feed_digest, file_digest, write_atomic, RunManifest};
use crate::output::{create_dir, write_csv, write_file};
use crate::usage;

pub const PARTITION_DIR: &str = "partitions";
pub const BOUNDARY_FILE: &str = "boundary.geojson";

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Scenario feed as NAME=PATH; repeat for each scenario.
    #[arg(long = "scenario", value_parser = parse_named_path, required = true)]
    scenarios: Vec<(String, PathBuf)>,
    #[command(flatten)]
    lattice: LatticeArgs,
    /// Service day and departure band as DATE,BAND,HH:MM, computed at the
    /// given time and ten minutes either side; repeat as needed. Defaults to
    /// the three standard slices.
    #[arg(long = "slice", value_parser = parse_slice)]
    slices: Vec<SliceSpec>,
    #[command(flatten)]
    routing: RoutingArgs,
    /// Worker threads; all cores when omitted. Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory; rerunning into it computes only missing partitions.
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: Args) -> Result<()> {
    args.routing.validate().map_err(usage)?;
    if args.threads == Some(0) {
        return Err(usage("--threads must be at least 1"));
    }
    let names: BTreeSet<&str> = args.scenarios.iter().map(|(n, _)| n.as_str()).collect();
    if names.len() != args.scenarios.len() {
        return Err(usage("scenario names must be distinct"));
    }
    let slices = if args.slices.is_empty() { standard_slices() } else { args.slices.clone() };
    let mut keys = BTreeSet::new();
    for s in &slices {
        for &t in &s.instants {
            if !keys.insert((s.day_code.clone(), t)) {
                return Err(usage(format!("slices overlap on {} at {}", s.date, format_time(t))));
            }
        }
    }

    let (lattice, boundary_bytes) = load_lattice(&args.lattice)?;
    let nodes = nodes(&lattice);

    let mut params = args.lattice.parameters();
    params["routing"] = args.routing.parameters();
    params["slices"] = json!(slices
        .iter()
        .map(|s| json!({
            "date": s.date.to_string(),
            "band": s.band,
            "center": format_time(s.center),
            "instants": s.instants.iter().map(|t| format_time(*t)).collect::<Vec<_>>(),
        }))
        .collect::<Vec<_>>());
    params["scenarios"] = json!(args.scenarios.iter().map(|(n, _)| n).collect::<Vec<_>>());
    params["nodes"] = json!(nodes.len());
    let mut manifest = RunManifest::new("matrix", params);
    manifest.input("boundary", bytes_digest(&boundary_bytes));
    for (name, path) in &args.scenarios {
        if !path.exists() {
            read_feed(path)?;
        }
        manifest.input(format!("feed:{name}"), feed_digest(path)?);
    }

    // a previous run into the same directory is resumed only when it asked
    // for exactly the same thing
    if let Some(old) = RunManifest::read(&args.out)? {
        if old.command != "matrix" || old.parameters != manifest.parameters || old.inputs != manifest.inputs {
            bail!(
                "{} holds a run with different inputs or parameters; use another --out",
                args.out.display()
            );
        }
        for a in old.outputs {
            let path = args.out.join(&a.name);
            if a.name.starts_with(PARTITION_DIR) && path.exists() && file_digest(&path)? == a.sha256 {
                manifest.outputs.push(a);
            }
        }
    }
    create_dir(&args.out.join(PARTITION_DIR))?;
    manifest.write(&args.out)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads.unwrap_or(0))
        .build()
        .context("cannot start worker threads")?;
    let network_params = args.routing.network();
    let opts = args.routing.route_options();
    let (mut computed, mut reused) = (0usize, 0usize);
    for (name, path) in &args.scenarios {
        let mut networks: BTreeMap<NaiveDate, TimetableNetwork> = BTreeMap::new();
        let mut feed = None;
        for slice in &slices {
            for &instant in &slice.instants {
                let key = partition_key(name, slice, instant);
                let rel = format!("{PARTITION_DIR}/{}", key.file_name());
                if manifest.output_digest(&rel).is_some() {
                    reused += 1;
                    continue;
                }
                if feed.is_none() {
                    feed = Some(read_feed(path)?);
                }
                let network = networks.entry(slice.date).or_insert_with(|| {
                    log::info!("building {name} network for {}", slice.date);
                    TimetableNetwork::build(feed.as_ref().expect("feed read above"), slice.date, network_params)
                });
                log::info!("computing {rel}");
                let times = pool.install(|| compute_block(network, &nodes, instant, opts));
                let mut bytes = Vec::new();
                write_partition_csv(&mut bytes, &nodes, &Partition { key, times })?;
                write_atomic(&args.out.join(&rel), &bytes)?;
                manifest.output(&args.out, &rel)?;
                manifest.write(&args.out)?;
                computed += 1;
            }
        }
    }

    let rows: Vec<Vec<String>> = nodes.iter().map(node_record).collect();
    write_csv(&args.out, "nodes.csv", &NODE_HEADER, &rows, &mut manifest)?;
    write_file(&args.out, BOUNDARY_FILE, &boundary_bytes, &mut manifest)?;
    manifest.write(&args.out)?;
    println!(
        "{} nodes, {} partitions: {computed} computed, {reused} reused",
        nodes.len(),
        computed + reused
    );
    Ok(())
}
