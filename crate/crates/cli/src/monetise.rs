use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use odscope_core::monetise::{appendix_tables, monetise, AppendixGrids, AppendixTables, MonetisationInput};
use serde_json::json;

use crate::manifest::{base_name, file_digest, RunManifest};
use crate::output::{create_dir, csv_bytes, write_csv, write_file};
use crate::usage;

pub const MONETISE_HEADER: [&str; 10] = [
    "mean_dt_s",
    "trips_per_year",
    "vot_eur_per_h",
    "r",
    "n",
    "om_eur_per_year",
    "benefit_eur_per_year",
    "crf",
    "capex_star_eur",
    "benefit_below_om",
];

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Emit the three sensitivity tables instead of a single evaluation.
    #[arg(long, conflicts_with_all = ["mean_dt", "summary"])]
    appendix: bool,
    /// Mean travel-time change per trip, seconds.
    #[arg(long, allow_negative_numbers = true, conflicts_with = "summary")]
    mean_dt: Option<f64>,
    /// Take the mean change from an `analyze` summary.csv ...
    #[arg(long, requires = "comparison")]
    summary: Option<PathBuf>,
    /// ... for this comparison.
    #[arg(long, requires = "summary")]
    comparison: Option<String>,
    /// Trips per year.
    #[arg(long)]
    trips: Option<f64>,
    /// Value of time, euro per hour.
    #[arg(long)]
    vot: Option<f64>,
    /// Discount rate per year, e.g. 0.04.
    #[arg(long)]
    rate: Option<f64>,
    /// Horizon in years.
    #[arg(long)]
    years: Option<u32>,
    /// Operations and maintenance, euro per year.
    #[arg(long, default_value_t = 0.0)]
    om: f64,
    /// Output directory; without it a single evaluation is printed to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(args: Args) -> Result<()> {
    if args.appendix {
        let out = args.out.as_ref().ok_or_else(|| usage("--appendix needs --out"))?;
        return write_appendix(out);
    }
    let need = |v: Option<f64>, flag: &str| v.ok_or_else(|| usage(format!("missing --{flag}")));
    let (mean_dt, source) = match (&args.mean_dt, &args.summary) {
        (Some(v), _) => (*v, None),
        (None, Some(path)) => {
            let c = args.comparison.as_deref().expect("clap requires --comparison");
            (summary_mean(path, c)?, Some(path))
        }
        (None, None) => return Err(usage("give --mean-dt or --summary with --comparison")),
    };
    let input = MonetisationInput {
        mean_dt_s: mean_dt,
        trips_per_year: need(args.trips, "trips")?,
        vot_per_h: need(args.vot, "vot")?,
        r: need(args.rate, "rate")?,
        n: args.years.ok_or_else(|| usage("missing --years"))?,
        om_per_year: args.om,
    };
    let r = monetise(&input)?;
    if r.benefit_below_om() {
        log::warn!("annual benefit does not cover O&M; break-even capital is negative");
    }
    let row = vec![
        input.mean_dt_s.to_string(),
        input.trips_per_year.to_string(),
        input.vot_per_h.to_string(),
        input.r.to_string(),
        input.n.to_string(),
        input.om_per_year.to_string(),
        format!("{:.2}", r.benefit),
        format!("{:.6}", r.crf),
        format!("{:.2}", r.capex_star),
        r.benefit_below_om().to_string(),
    ];
    let Some(out) = &args.out else {
        print!("{}", String::from_utf8(csv_bytes(&MONETISE_HEADER, &[row])?)?);
        return Ok(());
    };
    let mut manifest = RunManifest::new(
        "monetise",
        json!({
            "mean_dt_s": input.mean_dt_s,
            "trips_per_year": input.trips_per_year,
            "vot_eur_per_h": input.vot_per_h,
            "r": input.r,
            "n": input.n,
            "om_eur_per_year": input.om_per_year,
            "comparison": args.comparison,
        }),
    );
    if let Some(p) = source {
        manifest.input(format!("summary:{}", base_name(p)), file_digest(p)?);
    }
    create_dir(out)?;
    write_csv(out, "monetise.csv", &MONETISE_HEADER, &[row], &mut manifest)?;
    manifest.write(out)
}

fn write_appendix(out: &Path) -> Result<()> {
    let grids = AppendixGrids::default();
    let t = appendix_tables(&grids);
    let mut manifest = RunManifest::new(
        "monetise",
        json!({
            "appendix": true,
            "scenarios": grids.scenarios,
            "trips_m_per_year": grids.trips_m,
            "vot_eur_per_h": grids.vots,
            "crf_rates": grids.crf_rates,
            "crf_horizons": grids.crf_horizons,
            "capex_rates": grids.capex_rates,
            "capex_horizon": grids.capex_horizon,
            "capex_benefits_meur": grids.capex_benefits_m,
            "capex_om_meur": grids.capex_om_m,
        }),
    );
    create_dir(out)?;
    write_file(out, "benefit.csv", &csv_bytes(&AppendixTables::BENEFIT_HEADER, &t.benefit_records())?, &mut manifest)?;
    write_file(out, "crf.csv", &csv_bytes(&AppendixTables::CRF_HEADER, &t.crf_records())?, &mut manifest)?;
    write_file(out, "capex.csv", &csv_bytes(&AppendixTables::CAPEX_HEADER, &t.capex_records())?, &mut manifest)?;
    manifest.write(out)
}

/// `mean_dt_s` of one comparison in a summary CSV.
fn summary_mean(path: &Path, comparison: &str) -> Result<f64> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("cannot read {}", path.display()))?;
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| anyhow!("{} has no {name} column", path.display()))
    };
    let (ci, mi) = (col("comparison")?, col("mean_dt_s")?);
    for rec in r.records() {
        let rec = rec?;
        if &rec[ci] == comparison {
            return rec[mi]
                .parse()
                .with_context(|| format!("{}: invalid mean_dt_s {:?}", path.display(), &rec[mi]));
        }
    }
    Err(anyhow!("{} has no row for comparison {comparison:?}", path.display()))
}
