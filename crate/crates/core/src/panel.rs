//! Origin-destination travel-time panels.
//!
//! A panel holds one dense `N x N` travel-time block per partition, a
//! partition being one (scenario, service day, departure instant). Its long
//! form has one row per ordered pair of distinct nodes per partition.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::LatLon;
use crate::gtfs::time::hhmm;
use crate::router::{earliest_arrival_to, Targets, TimetableNetwork, DEFAULT_MAX_ROUNDS};

pub const PANEL_HEADER: [&str; 11] = [
    "origin_id",
    "destination_id",
    "origin_lon",
    "origin_lat",
    "destination_lon",
    "destination_lat",
    "scenario",
    "snapshot_time",
    "time_s",
    "day",
    "start_time",
];

pub const NA: &str = "NA";

#[derive(Debug, Error)]
pub enum PanelError {
    #[error("no network for scenario {scenario} on {date}")]
    MissingNetwork { scenario: String, date: NaiveDate },
    #[error("invalid slice {day_code}: {reason}")]
    InvalidSlice { day_code: String, reason: String },
    #[error("panel CSV line {line}: {reason}")]
    Csv { line: u64, reason: String },
    #[error("inconsistent panel: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub lat: f64,
    pub lon: f64,
}

impl Node {
    pub fn coord(&self) -> LatLon {
        LatLon::new(self.lat, self.lon)
    }
}

/// One service day and its departure instants.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceSpec {
    /// `MMDD`
    pub day_code: String,
    pub date: NaiveDate,
    /// Free label such as `AM`, `PM`, `SAT`.
    pub band: String,
    /// Central instant `t`, seconds past midnight.
    pub center: u32,
    /// Sorted seconds past midnight.
    pub instants: Vec<u32>,
}

impl SliceSpec {
    /// Instants `t - 10 min`, `t`, `t + 10 min`.
    pub fn around(date: NaiveDate, band: &str, center: u32) -> Self {
        Self {
            day_code: date.format("%m%d").to_string(),
            date,
            band: band.into(),
            center,
            instants: vec![center.saturating_sub(600), center, center + 600],
        }
    }

    pub fn validate(&self) -> Result<(), PanelError> {
        let bad = |reason: &str| PanelError::InvalidSlice {
            day_code: self.day_code.clone(),
            reason: reason.into(),
        };
        if self.instants.is_empty() {
            return Err(bad("no instants"));
        }
        if self.instants.windows(2).any(|w| w[0] >= w[1]) {
            return Err(bad("instants must be strictly increasing"));
        }
        if self.day_code != self.date.format("%m%d").to_string() {
            return Err(bad("day code does not match date"));
        }
        Ok(())
    }

    /// `t`, `t-10`, `t+10`: offset of `instant` from the centre in minutes.
    pub fn label(&self, instant: u32) -> String {
        snapshot_label(i64::from(instant) - i64::from(self.center))
    }
}

pub fn snapshot_label(offset_s: i64) -> String {
    let minutes = offset_s / 60;
    match minutes {
        0 => "t".into(),
        m if m > 0 => format!("t+{m}"),
        m => format!("t{m}"),
    }
}

/// Tuesday AM peak, Thursday PM peak and Saturday midday of June/July 2025.
pub fn standard_slices() -> Vec<SliceSpec> {
    let d = |m, day| NaiveDate::from_ymd_opt(2025, m, day).expect("valid date");
    vec![
        SliceSpec::around(d(6, 10), "AM", 8 * 3600),
        SliceSpec::around(d(6, 12), "PM", 17 * 3600 + 1800),
        SliceSpec::around(d(7, 12), "SAT", 13 * 3600),
    ]
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PartitionKey {
    pub scenario: String,
    /// `MMDD`
    pub day: String,
    /// `HHMM` of the departure instant.
    pub start_time: String,
    pub snapshot: String,
}

impl PartitionKey {
    pub fn file_name(&self) -> String {
        format!("{}_{}_{}.csv", self.scenario, self.day, self.start_time)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub key: PartitionKey,
    /// Row-major `N x N`; the diagonal is `Some(0)`.
    pub times: Vec<Option<u32>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ODPanel {
    pub nodes: Vec<Node>,
    /// Nodes removed by [`drop_unreachable`].
    pub dropped: Vec<Node>,
    /// Sorted by key.
    pub partitions: Vec<Partition>,
}

/// One long-form row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PanelRow<'a> {
    pub origin: &'a Node,
    pub destination: &'a Node,
    pub key: &'a PartitionKey,
    pub time_s: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RouteOptions {
    pub max_rounds: u8,
    /// Access/egress/direct walk limit; the network default when `None`.
    pub max_walk_m: Option<f64>,
}

impl Default for RouteOptions {
    fn default() -> Self {
        Self {
            max_rounds: DEFAULT_MAX_ROUNDS,
            max_walk_m: None,
        }
    }
}

/// Travel times from every node to every node at one departure instant,
/// one origin per task.
pub fn compute_block(network: &TimetableNetwork, nodes: &[Node], departure: u32, opts: RouteOptions) -> Vec<Option<u32>> {
    let points: Vec<LatLon> = nodes.iter().map(Node::coord).collect();
    let max_walk = opts.max_walk_m.unwrap_or(network.params.walk.max_access_m);
    let targets = Targets::new(network, &points, max_walk);
    let rows: Vec<Vec<Option<u32>>> = points
        .par_iter()
        .enumerate()
        .map(|(i, o)| {
            let mut row = earliest_arrival_to(network, *o, departure, &targets, opts.max_rounds).times;
            row[i] = Some(0);
            row
        })
        .collect();
    rows.concat()
}

/// Runs every (scenario, slice, instant) partition.
pub fn compute_panel(
    networks: &BTreeMap<String, BTreeMap<NaiveDate, TimetableNetwork>>,
    nodes: &[Node],
    slices: &[SliceSpec],
    opts: RouteOptions,
) -> Result<ODPanel, PanelError> {
    let mut partitions = Vec::new();
    for (scenario, by_date) in networks {
        for slice in slices {
            slice.validate()?;
            let network = by_date.get(&slice.date).ok_or_else(|| PanelError::MissingNetwork {
                scenario: scenario.clone(),
                date: slice.date,
            })?;
            for &instant in &slice.instants {
                partitions.push(Partition {
                    key: partition_key(scenario, slice, instant),
                    times: compute_block(network, nodes, instant, opts),
                });
            }
        }
    }
    partitions.sort_by(|a, b| a.key.cmp(&b.key));
    Ok(ODPanel {
        nodes: nodes.to_vec(),
        dropped: Vec::new(),
        partitions,
    })
}

pub fn partition_key(scenario: &str, slice: &SliceSpec, instant: u32) -> PartitionKey {
    PartitionKey {
        scenario: scenario.into(),
        day: slice.day_code.clone(),
        start_time: hhmm(instant),
        snapshot: slice.label(instant),
    }
}

impl ODPanel {
    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn row_count(&self) -> usize {
        let n = self.n();
        self.partitions.len() * n * n.saturating_sub(1)
    }

    pub fn rows(&self) -> impl Iterator<Item = PanelRow<'_>> {
        let n = self.n();
        self.partitions.iter().flat_map(move |p| {
            (0..n).flat_map(move |i| {
                (0..n).filter(move |&j| j != i).map(move |j| PanelRow {
                    origin: &self.nodes[i],
                    destination: &self.nodes[j],
                    key: &p.key,
                    time_s: p.times[i * n + j],
                })
            })
        })
    }

    pub fn scenarios(&self) -> BTreeSet<&str> {
        self.partitions.iter().map(|p| p.key.scenario.as_str()).collect()
    }

    pub fn days(&self) -> BTreeSet<&str> {
        self.partitions.iter().map(|p| p.key.day.as_str()).collect()
    }

    /// Partitions of `scenario`, optionally restricted to one day.
    pub fn select<'a>(&'a self, scenario: &'a str, day: Option<&'a str>) -> impl Iterator<Item = &'a Partition> + 'a {
        self.partitions
            .iter()
            .filter(move |p| p.key.scenario == scenario && day.is_none_or(|d| p.key.day == d))
    }
}

/// Writes one partition in long form.
pub fn write_partition_csv<W: Write>(out: W, nodes: &[Node], partition: &Partition) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(PANEL_HEADER)?;
    let n = nodes.len();
    let k = &partition.key;
    for (i, o) in nodes.iter().enumerate() {
        let (olon, olat) = (format!("{:.6}", o.lon), format!("{:.6}", o.lat));
        for (j, d) in nodes.iter().enumerate() {
            if i == j {
                continue;
            }
            let t = partition.times[i * n + j].map_or_else(|| NA.to_string(), |t| t.to_string());
            w.write_record([
                o.id.as_str(),
                d.id.as_str(),
                &olon,
                &olat,
                &format!("{:.6}", d.lon),
                &format!("{:.6}", d.lat),
                &k.scenario,
                &k.snapshot,
                &t,
                &k.day,
                &k.start_time,
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads long-form partitions back into a panel. Nodes are ordered by id;
/// every partition must cover every ordered pair exactly once.
pub fn read_panel_csv<R: Read>(sources: impl IntoIterator<Item = R>) -> Result<ODPanel, PanelError> {
    type Cells = BTreeMap<(String, String), Option<u32>>;
    let mut nodes: BTreeMap<String, Node> = BTreeMap::new();
    let mut parts: BTreeMap<PartitionKey, Cells> = BTreeMap::new();
    for src in sources {
        let mut r = csv::ReaderBuilder::new().from_reader(src);
        let header = r.headers().map_err(|e| PanelError::Csv { line: 1, reason: e.to_string() })?;
        if header.iter().ne(PANEL_HEADER) {
            return Err(PanelError::Csv {
                line: 1,
                reason: format!("header must be {}", PANEL_HEADER.join(",")),
            });
        }
        for rec in r.records() {
            let rec = rec.map_err(|e| PanelError::Csv {
                line: e.position().map_or(0, |p| p.line()),
                reason: e.to_string(),
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            let bad = |reason: String| PanelError::Csv { line, reason };
            let num = |i: usize| rec[i].parse::<f64>().map_err(|_| bad(format!("{} is not a number", PANEL_HEADER[i])));
            let time = match &rec[8] {
                NA => None,
                s => Some(s.parse::<u32>().map_err(|_| bad(format!("time_s {s:?} is neither an integer nor NA")))?),
            };
            for (id, lon, lat) in [(&rec[0], num(2)?, num(3)?), (&rec[1], num(4)?, num(5)?)] {
                let node = nodes.entry(id.to_string()).or_insert_with(|| Node { id: id.to_string(), lat, lon });
                if node.lat != lat || node.lon != lon {
                    return Err(bad(format!("node {id} appears with two positions")));
                }
            }
            if rec[0] == rec[1] {
                return Err(bad("origin equals destination".into()));
            }
            let key = PartitionKey {
                scenario: rec[6].to_string(),
                day: rec[9].to_string(),
                start_time: rec[10].to_string(),
                snapshot: rec[7].to_string(),
            };
            let cells = parts.entry(key).or_default();
            if cells.insert((rec[0].to_string(), rec[1].to_string()), time).is_some() {
                return Err(bad(format!("duplicate pair {} -> {}", &rec[0], &rec[1])));
            }
        }
    }
    let nodes: Vec<Node> = nodes.into_values().collect();
    let index: BTreeMap<&str, usize> = nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
    let n = nodes.len();
    let mut partitions = Vec::new();
    for (key, cells) in parts {
        if cells.len() != n * n.saturating_sub(1) {
            return Err(PanelError::Inconsistent(format!(
                "partition {} has {} pairs, expected {}",
                key.file_name(),
                cells.len(),
                n * n.saturating_sub(1)
            )));
        }
        let mut times = vec![None; n * n];
        for i in 0..n {
            times[i * n + i] = Some(0);
        }
        for ((o, d), t) in cells {
            times[index[o.as_str()] * n + index[d.as_str()]] = t;
        }
        partitions.push(Partition { key, times });
    }
    Ok(ODPanel {
        nodes,
        dropped: Vec::new(),
        partitions,
    })
}

/// Drops nodes that are unreachable in every row they appear in, as origin
/// and as destination, across all partitions.
pub fn drop_unreachable(panel: &ODPanel) -> (ODPanel, Vec<String>) {
    let n = panel.n();
    let keep: Vec<bool> = (0..n)
        .map(|i| {
            panel.partitions.iter().any(|p| {
                (0..n).any(|j| j != i && (p.times[i * n + j].is_some() || p.times[j * n + i].is_some()))
            })
        })
        .collect();
    let kept: Vec<usize> = (0..n).filter(|&i| keep[i]).collect();
    let dropped: Vec<Node> = (0..n).filter(|&i| !keep[i]).map(|i| panel.nodes[i].clone()).collect();
    let partitions = panel
        .partitions
        .iter()
        .map(|p| Partition {
            key: p.key.clone(),
            times: kept
                .iter()
                .flat_map(|&i| kept.iter().map(move |&j| p.times[i * n + j]))
                .collect(),
        })
        .collect();
    let ids = dropped.iter().map(|d| d.id.clone()).collect();
    let mut all_dropped = panel.dropped.clone();
    all_dropped.extend(dropped);
    (
        ODPanel {
            nodes: kept.iter().map(|&i| panel.nodes[i].clone()).collect(),
            dropped: all_dropped,
            partitions,
        },
        ids,
    )
}

/// Dense square travel-time matrix in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct ODMatrix {
    pub node_ids: Vec<String>,
    /// Row-major; `None` is unreachable or excluded.
    pub values: Vec<Option<f64>>,
    pub provenance: String,
}

impl ODMatrix {
    pub fn n(&self) -> usize {
        self.node_ids.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i * self.n() + j]
    }

    /// Matrix from rows; panics if not square.
    pub fn from_rows(node_ids: Vec<String>, rows: &[Vec<Option<f64>>], provenance: &str) -> Self {
        assert!(rows.iter().all(|r| r.len() == rows.len()) && rows.len() == node_ids.len());
        Self {
            node_ids,
            values: rows.concat(),
            provenance: provenance.into(),
        }
    }
}

/// Mean over the selected partitions of each pair; unreachable if any
/// selected partition is unreachable for that pair.
pub fn aggregate_over_instants(panel: &ODPanel, scenario: &str, day: Option<&str>) -> ODMatrix {
    let n = panel.n();
    let selected: Vec<&Partition> = panel.select(scenario, day).collect();
    let values = (0..n * n)
        .map(|c| {
            if selected.is_empty() {
                return None;
            }
            let mut sum = 0.0;
            for p in &selected {
                sum += f64::from(p.times[c]?);
            }
            Some(sum / selected.len() as f64)
        })
        .collect();
    ODMatrix {
        node_ids: panel.nodes.iter().map(|n| n.id.clone()).collect(),
        values,
        provenance: match day {
            Some(d) => format!("{scenario} mean over instants of {d}"),
            None => format!("{scenario} mean over all partitions"),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(id: &str) -> Node {
        Node { id: id.into(), lat: 50.85, lon: 4.35 }
    }

    fn panel(times: &[[Option<u32>; 4]]) -> ODPanel {
        ODPanel {
            nodes: vec![node("a"), node("b")],
            dropped: vec![],
            partitions: times
                .iter()
                .enumerate()
                .map(|(k, t)| Partition {
                    key: PartitionKey {
                        scenario: "s".into(),
                        day: "0610".into(),
                        start_time: format!("08{k:02}"),
                        snapshot: "t".into(),
                    },
                    times: t.to_vec(),
                })
                .collect(),
        }
    }

    #[test]
    fn labels() {
        let s = SliceSpec::around(NaiveDate::from_ymd_opt(2025, 6, 10).unwrap(), "AM", 28_800);
        let l: Vec<String> = s.instants.iter().map(|i| s.label(*i)).collect();
        assert_eq!(l, ["t-10", "t", "t+10"]);
        assert_eq!(s.day_code, "0610");
    }

    #[test]
    fn strict_mean() {
        let z = Some(0);
        let p = panel(&[[z, Some(600), None, z], [z, Some(660), Some(5), z], [z, Some(900), Some(7), z]]);
        let m = aggregate_over_instants(&p, "s", None);
        assert_eq!(m.get(0, 1), Some(720.0));
        assert_eq!(m.get(1, 0), None);
        assert_eq!(m.get(0, 0), Some(0.0));
    }

    #[test]
    fn constant_mean() {
        let z = Some(0);
        let t = Some(3119);
        let p = panel(&[[z, t, t, z], [z, t, t, z], [z, t, t, z]]);
        assert_eq!(aggregate_over_instants(&p, "s", Some("0610")).get(1, 0), Some(3119.0));
    }

    #[test]
    fn unsorted_instants_rejected() {
        let mut s = standard_slices().remove(0);
        s.instants.reverse();
        assert!(s.validate().is_err());
    }
}
