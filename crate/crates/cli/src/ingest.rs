use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use odscope_core::gtfs::{merge_feeds, parse_feed, service_dates, write_feed, Feed, GtfsError};
use serde_json::{json, Value};

use crate::manifest::{base_name, feed_digest, RunManifest};
use crate::output::{create_dir, write_json};
use crate::usage;

#[derive(clap::Args, Debug)]
pub struct Args {
    /// GTFS directory or zip archive; repeat for several feeds.
    #[arg(long = "feed", required = true)]
    feeds: Vec<PathBuf>,
    /// Identifier prefix per feed, in the order of --feed. Needed when
    /// merging more than one feed.
    #[arg(long = "prefix")]
    prefixes: Vec<String>,
    /// Output GTFS directory; the report and manifest are written alongside.
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: Args) -> Result<()> {
    if args.feeds.len() > 1 && args.prefixes.len() != args.feeds.len() {
        return Err(usage(format!(
            "{} feeds need {} --prefix values, got {}",
            args.feeds.len(),
            args.feeds.len(),
            args.prefixes.len()
        )));
    }
    if args.feeds.len() == 1 && args.prefixes.len() > 1 {
        return Err(usage("one feed takes at most one --prefix"));
    }

    let mut manifest = RunManifest::new("ingest", json!({ "prefixes": args.prefixes }));
    let mut feeds = Vec::new();
    let mut inputs = Vec::new();
    for (i, path) in args.feeds.iter().enumerate() {
        let feed = read_feed(path)?;
        let name = args.prefixes.get(i).cloned().unwrap_or_else(|| base_name(path));
        manifest.input(format!("feed:{name}"), feed_digest(path)?);
        let mut c = counts(&feed);
        c.insert("name".into(), json!(name));
        inputs.push(Value::Object(c));
        feeds.push(feed);
    }
    let merged = if args.prefixes.is_empty() {
        feeds.pop().expect("one feed")
    } else {
        let prefixes: Vec<&str> = args.prefixes.iter().map(String::as_str).collect();
        merge_feeds(&feeds, &prefixes)?
    };

    create_dir(&args.out)?;
    write_feed(&merged, &args.out)?;
    for table in crate::manifest::txt_tables(&args.out)? {
        manifest.output(&args.out, &table)?;
    }
    let report = json!({
        "inputs": inputs,
        "merged": Value::Object(counts(&merged)),
        "warnings": warnings(&merged),
    });
    write_json(&args.out, "ingest_report.json", &report, &mut manifest)?;
    manifest.write(&args.out)?;
    println!(
        "merged {} feed(s): {} stops, {} routes, {} trips",
        args.feeds.len(),
        merged.stops.len(),
        merged.routes.len(),
        merged.trips.len()
    );
    Ok(())
}

/// Parses a feed, reporting a path that does not exist as a missing table.
pub fn read_feed(path: &Path) -> Result<Feed> {
    if !path.exists() {
        return Err(GtfsError::MissingFile {
            file: format!("{} (no such feed)", path.display()),
        })
        .with_context(|| format!("cannot read feed {}", path.display()));
    }
    parse_feed(path).with_context(|| format!("cannot read feed {}", path.display()))
}

fn counts(feed: &Feed) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("agencies".into(), json!(feed.agencies.len()));
    m.insert("stops".into(), json!(feed.stops.len()));
    m.insert("routes".into(), json!(feed.routes.len()));
    m.insert("trips".into(), json!(feed.trips.len()));
    m.insert("stop_times".into(), json!(feed.stop_time_count()));
    m.insert("services".into(), json!(feed.services.len()));
    m.insert("frequency_templates".into(), json!(feed.frequencies.len()));
    m
}

/// Suspicious but valid content.
fn warnings(feed: &Feed) -> Vec<String> {
    let mut out = Vec::new();
    let called: BTreeSet<&str> = feed
        .trips
        .values()
        .flat_map(|t| t.stop_times.iter().map(|s| s.stop_id.as_str()))
        .collect();
    for s in feed.stops.values() {
        if s.location_type == 0 && !called.contains(s.id.as_str()) {
            out.push(format!("stop {} is served by no trip", s.id));
        }
    }
    let served: BTreeSet<&str> = feed.trips.values().map(|t| t.route_id.as_str()).collect();
    for r in feed.routes.keys() {
        if !served.contains(r.as_str()) {
            out.push(format!("route {r} has no trips"));
        }
    }
    for id in feed.services.keys() {
        if service_dates(feed, [id.as_str()]).is_empty() {
            out.push(format!("service {id} is never active"));
        }
    }
    for t in feed.trips.values() {
        if t.stop_times.len() < 2 {
            out.push(format!("trip {} has fewer than two stop times", t.id));
        }
    }
    out
}
