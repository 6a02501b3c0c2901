use std::collections::HashMap;
use std::fs;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use odscope_core::diagnostics::{
    common_support, default_p_grid, default_t_grid, delta_ecdf, delta_ecdf_sup, delta_summary, directionality,
    format_num, per_origin_deltas, per_origin_sd_delta, shift_function, OriginDeltas, PERCENTILE_HEADER,
    SUMMARY_HEADER,
};
use odscope_core::grid::{generate_grid_with_offset, Boundary, DEFAULT_HOLE_TOLERANCE_M};
use odscope_core::panel::{aggregate_over_instants, drop_unreachable, read_panel_csv, ODPanel};
use odscope_core::reliability::{panel_delta_report, rho_from_halflife, DEFAULT_HALF_LIFE_S, RELIABILITY_HEADER};
use odscope_core::stats::QUANTILE_RULE;
use serde_json::{json, Map};

use crate::manifest::{file_digest, RunManifest, MANIFEST_FILE};
use crate::matrix::{BOUNDARY_FILE, PARTITION_DIR};
use crate::output::{create_dir, write_csv, write_json};
use crate::usage;

pub const DECILE_HEADER: [&str; 12] = [
    "comparison",
    "p0_dt_s",
    "p10_dt_s",
    "p20_dt_s",
    "p30_dt_s",
    "p40_dt_s",
    "p50_dt_s",
    "p60_dt_s",
    "p70_dt_s",
    "p80_dt_s",
    "p90_dt_s",
    "p100_dt_s",
];
pub const SHIFT_HEADER: [&str; 2] = ["p", "delta_q_s"];
pub const DECDF_HEADER: [&str; 2] = ["t_s", "delta_ecdf_pp"];
pub const DIRECTIONALITY_HEADER: [&str; 7] = [
    "scenario",
    "norm_a",
    "norm_s",
    "norm_k",
    "di",
    "variance_fraction",
    "excluded_pairs",
];

/// Origin id to (delta, support).
type DeltaById = HashMap<String, (f64, usize)>;

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Panel directory written by `matrix`.
    #[arg(long)]
    panel: PathBuf,
    /// Scenario every other one is compared against.
    #[arg(long, default_value = "baseline")]
    baseline: String,
    /// Scenario to compare; repeat as needed. Defaults to every scenario
    /// other than the baseline.
    #[arg(long = "compare")]
    compare: Vec<String>,
    /// Extra seconds that halve the weight of an outcome in the certainty
    /// equivalent.
    #[arg(long, default_value_t = DEFAULT_HALF_LIFE_S)]
    half_life: f64,
    /// Spacing of the travel-time grid of the ECDF difference, seconds.
    #[arg(long, default_value_t = 60.0)]
    ecdf_step: f64,
    /// Distance within which a panel node matches a lattice centroid, metres.
    #[arg(long, default_value_t = DEFAULT_HOLE_TOLERANCE_M)]
    hole_tolerance: f64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

pub fn run(args: Args) -> Result<()> {
    for (what, v) in [("half life", args.half_life), ("ECDF step", args.ecdf_step)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(usage(format!("{what} must be positive")));
        }
    }
    let rho = rho_from_halflife(args.half_life);
    let panel_manifest = RunManifest::read(&args.panel)?
        .filter(|m| m.command == "matrix")
        .ok_or_else(|| anyhow!("{} has no panel manifest", args.panel.display()))?;
    let raw = load_panel(&args, &panel_manifest)?;
    let (panel, dropped) = drop_unreachable(&raw);

    let scenarios: Vec<&str> = panel.scenarios().into_iter().collect();
    if !scenarios.contains(&args.baseline.as_str()) {
        bail!(
            "baseline scenario {:?} is not in the panel (found: {})",
            args.baseline,
            scenarios.join(", ")
        );
    }
    let comparisons: Vec<String> = if args.compare.is_empty() {
        scenarios.iter().filter(|s| **s != args.baseline).map(|s| s.to_string()).collect()
    } else {
        args.compare.clone()
    };
    for c in &comparisons {
        if !scenarios.contains(&c.as_str()) {
            bail!("scenario {c:?} is not in the panel (found: {})", scenarios.join(", "));
        }
    }

    let parameters = json!({
        "baseline": args.baseline,
        "comparisons": comparisons,
        "half_life_s": args.half_life,
        "rho_per_s": rho,
        "quantile_rule": QUANTILE_RULE,
        "ecdf_step_s": args.ecdf_step,
        "shift_p_grid": "0.01, 0.02, ..., 0.99",
        "hole_tolerance_m": args.hole_tolerance,
        "panel": panel_manifest.parameters,
    });
    let mut manifest = RunManifest::new("analyze", parameters.clone());
    manifest.input("panel:manifest", file_digest(&args.panel.join(MANIFEST_FILE))?);
    for a in &panel_manifest.outputs {
        manifest.input(format!("panel:{}", a.name), a.sha256.clone());
    }

    let mut lattice = {
        let text = fs::read_to_string(args.panel.join(BOUNDARY_FILE))
            .with_context(|| format!("cannot read the panel boundary in {}", args.panel.display()))?;
        let p = &panel_manifest.parameters;
        let cell = p["cell_size_m"].as_f64().ok_or_else(|| anyhow!("panel manifest lacks cell_size_m"))?;
        let offset = (p["offset_m"][0].as_f64().unwrap_or(0.0), p["offset_m"][1].as_f64().unwrap_or(0.0));
        generate_grid_with_offset(&Boundary::from_geojson(&text)?, cell, offset)?
    };
    let observed: Vec<_> = panel.nodes.iter().map(|n| n.coord()).collect();
    lattice.mark_holes(&observed, args.hole_tolerance);

    create_dir(&args.out)?;
    let (mut summary, mut percentiles, mut deciles, mut reliability) = (vec![], vec![], vec![], vec![]);
    let mut report = Map::new();
    for c in &comparisons {
        let base = aggregate_over_instants(&panel, &args.baseline, None);
        let scen = aggregate_over_instants(&panel, c, None);
        let s = delta_summary(&base, &scen).with_context(|| format!("comparing {c} with {}", args.baseline))?;
        summary.push(s.summary_record(c));
        percentiles.push(s.percentile_record(c));
        let mut d = vec![c.clone()];
        d.extend(s.deciles.iter().map(|v| format_num(*v)));
        deciles.push(d);

        let (pairs, _) = common_support(&base, &scen)?;
        let bv: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let sv: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let shift = shift_function(&bv, &sv, &default_p_grid())?;
        let decdf = delta_ecdf(&bv, &sv, &default_t_grid(&bv, &sv, args.ecdf_step))?;
        write_csv(&args.out, &format!("shift_{c}.csv"), &SHIFT_HEADER, &curve_rows(&shift.abscissa, &shift.values), &mut manifest)?;
        write_csv(&args.out, &format!("decdf_{c}.csv"), &DECDF_HEADER, &curve_rows(&decdf.abscissa, &decdf.values), &mut manifest)?;

        let rel = panel_delta_report(&panel, &args.baseline, c, rho)
            .with_context(|| format!("reliability of {c} against {}", args.baseline))?;
        reliability.push(rel.record(c));

        let all_days = per_origin_deltas(&panel, &args.baseline, c, None);
        let sd = per_origin_sd_delta(&panel, &args.baseline, c);
        let by_day: Vec<(String, OriginDeltas)> = panel
            .days()
            .into_iter()
            .map(|d| (d.to_string(), per_origin_deltas(&panel, &args.baseline, c, Some(d))))
            .collect();
        let lookup = |o: &OriginDeltas| -> DeltaById {
            o.deltas.iter().map(|d| (d.origin_id.clone(), (d.delta_s, d.support))).collect()
        };
        let (all_map, sd_map) = (lookup(&all_days), lookup(&sd));
        let day_maps: Vec<(String, DeltaById)> =
            by_day.iter().map(|(d, o)| (d.clone(), lookup(o))).collect();
        let mut geo = lattice.to_geojson_with(|i, props| {
            let id = &lattice.centroids[i].id;
            let get = |m: &DeltaById| m.get(id).map(|v| v.0);
            props.insert("delta_out_s".into(), json!(get(&all_map)));
            props.insert("delta_sd_s".into(), json!(get(&sd_map)));
            props.insert("support".into(), json!(all_map.get(id).map(|v| v.1)));
            for (day, m) in &day_maps {
                props.insert(format!("delta_out_s_{day}"), json!(get(m)));
            }
        });
        geo["metadata"]["baseline"] = json!(args.baseline);
        geo["metadata"]["scenario"] = json!(c);
        geo["metadata"]["parameters"] = parameters.clone();
        write_json(&args.out, &format!("origins_{c}.geojson"), &geo, &mut manifest)?;

        report.insert(
            c.clone(),
            json!({
                "support_pairs": s.support,
                "excluded_pairs": s.excluded,
                "improved_beyond_1s_pct": s.improved_beyond_1s_pct,
                "worsened_pct": s.worsened_pct,
                "delta_ecdf_sup_pp": delta_ecdf_sup(&bv, &sv)?,
                "reliability_days": rel.days,
                "origins_without_support": all_days.omitted,
            }),
        );
    }

    let mut direction = Vec::new();
    for sc in &scenarios {
        let d = directionality(&aggregate_over_instants(&panel, sc, None)).with_context(|| format!("directionality of {sc}"))?;
        let mut r = vec![sc.to_string()];
        r.extend([d.norm_a, d.norm_s, d.norm_k, d.di, d.variance_fraction].iter().map(|v| format_num(*v)));
        r.push(d.excluded_pairs.to_string());
        direction.push(r);
    }

    write_csv(&args.out, "summary.csv", &SUMMARY_HEADER, &summary, &mut manifest)?;
    write_csv(&args.out, "percentiles.csv", &PERCENTILE_HEADER, &percentiles, &mut manifest)?;
    write_csv(&args.out, "deciles.csv", &DECILE_HEADER, &deciles, &mut manifest)?;
    write_csv(&args.out, "reliability.csv", &RELIABILITY_HEADER, &reliability, &mut manifest)?;
    write_csv(&args.out, "directionality.csv", &DIRECTIONALITY_HEADER, &direction, &mut manifest)?;
    let report = json!({
        "nodes": panel.n(),
        "dropped_nodes": dropped,
        "holes": lattice.holes.iter().map(|&i| lattice.centroids[i].id.clone()).collect::<Vec<_>>(),
        "comparisons": report,
    });
    write_json(&args.out, "analysis_report.json", &report, &mut manifest)?;
    manifest.write(&args.out)?;
    println!(
        "{} comparison(s) over {} nodes ({} dropped as unreachable)",
        comparisons.len(),
        panel.n(),
        dropped.len()
    );
    Ok(())
}

/// Reads the partitions listed in the panel manifest after checking their
/// digests.
fn load_panel(args: &Args, m: &RunManifest) -> Result<ODPanel> {
    let scenarios = m.parameters["scenarios"].as_array().map_or(0, Vec::len);
    let instants: usize = m.parameters["slices"]
        .as_array()
        .map_or(0, |s| s.iter().map(|x| x["instants"].as_array().map_or(0, Vec::len)).sum());
    let listed: Vec<_> = m.outputs.iter().filter(|a| a.name.starts_with(PARTITION_DIR)).collect();
    if listed.len() != scenarios * instants {
        bail!(
            "panel holds {} of {} partitions; rerun matrix into {} to complete it",
            listed.len(),
            scenarios * instants,
            args.panel.display()
        );
    }
    let mut sources = Vec::new();
    for a in listed {
        let path = args.panel.join(&a.name);
        let bytes = fs::read(&path).with_context(|| format!("cannot read {}", path.display()))?;
        if crate::manifest::bytes_digest(&bytes) != a.sha256 {
            bail!("{} does not match its manifest digest", path.display());
        }
        sources.push(bytes);
    }
    Ok(read_panel_csv(sources.iter().map(|b| b.as_slice()))?)
}

fn curve_rows(x: &[f64], y: &[f64]) -> Vec<Vec<String>> {
    x.iter().zip(y).map(|(a, b)| vec![format_num(*a), format_num(*b)]).collect()
}
