use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use chrono::NaiveDate;
use clap::ArgGroup;
use odscope_core::gtfs::write_feed;
use odscope_core::panel::standard_slices;
use odscope_core::scenario::{
    apply_scenario, builtin_scenario, load_station_catalog, metro3_catalog, ScenarioSpec, BUILTIN_NAMES,
};
use serde_json::json;

use crate::args::parse_date_range;
use crate::ingest::read_feed;
use crate::manifest::{base_name, bytes_digest, feed_digest, txt_tables, RunManifest};
use crate::output::{create_dir, write_file};
use crate::usage;

#[derive(clap::Args, Debug)]
#[command(group(ArgGroup::new("source").required(true).args(["builtin", "spec"])))]
pub struct Args {
    /// Base GTFS directory or zip archive.
    #[arg(long)]
    base: PathBuf,
    /// One of the packaged scenarios: baseline, partial, full.
    #[arg(long)]
    builtin: Option<String>,
    /// Scenario spec file (TOML).
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Station catalog (order,name,lat,lon) replacing the packaged metro
    /// line for builtin scenarios.
    #[arg(long, requires = "builtin")]
    stations: Option<PathBuf>,
    /// Service days on which added lines run: a date or FROM..TO; repeat
    /// as needed. Defaults to the days of the standard slices.
    #[arg(long = "dates", value_parser = parse_date_range)]
    dates: Vec<Vec<NaiveDate>>,
    /// Output GTFS directory.
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: Args) -> Result<()> {
    let (spec, spec_text) = match (&args.builtin, &args.spec) {
        (Some(name), _) => {
            let catalog = match &args.stations {
                Some(p) => load_station_catalog(p)?,
                None => metro3_catalog(),
            };
            let spec = builtin_scenario(name, &catalog).ok_or_else(|| {
                usage(format!("unknown builtin scenario {name:?}; choose from {}", BUILTIN_NAMES.join(", ")))
            })?;
            let text = spec.to_toml();
            (spec, text)
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            let spec = ScenarioSpec::from_toml(&text).with_context(|| format!("invalid scenario spec {}", path.display()))?;
            (spec, text)
        }
        (None, None) => unreachable!("clap requires one source"),
    };
    let base = read_feed(&args.base)?;
    let mut dates: Vec<NaiveDate> = args.dates.iter().flatten().copied().collect();
    if dates.is_empty() {
        dates = standard_slices().iter().map(|s| s.date).collect();
    }
    dates.sort();
    dates.dedup();

    let mut manifest = RunManifest::new(
        "scenario",
        json!({
            "scenario": spec.name,
            "dates": dates.iter().map(|d| d.to_string()).collect::<Vec<_>>(),
        }),
    );
    manifest.input(format!("base:{}", base_name(&args.base)), feed_digest(&args.base)?);
    manifest.input("spec", bytes_digest(spec_text.as_bytes()));

    create_dir(&args.out)?;
    if fs::canonicalize(&args.out)? == fs::canonicalize(&args.base)? {
        return Err(usage("--out must differ from --base"));
    }
    for stale in txt_tables(&args.out)? {
        fs::remove_file(args.out.join(stale))?;
    }
    if spec.edits.is_empty() && args.base.is_dir() {
        // no edits: carry the tables over byte for byte
        for name in txt_tables(&args.base)? {
            let bytes = fs::read(args.base.join(&name))?;
            write_file(&args.out, &name, &bytes, &mut manifest)?;
        }
    } else {
        let feed = apply_scenario(&base, &spec, &dates).with_context(|| format!("cannot apply scenario {}", spec.name))?;
        write_feed(&feed, &args.out)?;
        for name in txt_tables(&args.out)? {
            manifest.output(&args.out, &name)?;
        }
    }
    write_file(&args.out, "scenario.toml", spec_text.as_bytes(), &mut manifest)?;
    manifest.write(&args.out)?;
    println!("scenario {} written with {} edit(s)", spec.name, spec.edits.len());
    Ok(())
}
