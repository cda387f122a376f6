// SPDX-License-Identifier: MIT OR Apache-2.0

//! File formats: comparison CSV in, trajectory/band/heat-map CSV and
//! group/change-point/truth JSON out.

use std::collections::HashMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use dynrank_core::changepoint::{CvResult, SegmentFit};
use dynrank_core::grouping::GroupFit;
use dynrank_core::uncertainty::ConfidenceBand;
use dynrank_core::{
    validate_dataset, ComparisonDataset, ComparisonRecord, GroupPartition, ScoreTrajectory,
};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const CSV_HEADER: [&str; 4] = ["item_i", "item_j", "time", "outcome"];

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::data(format!("{}: {e}", path.display()))
}

/// Parses a comparison CSV. Labels get ids in order of first appearance.
///
/// `outcome = 1` is a comparison won by `item_j`. The horizon is `horizon`
/// when given, otherwise 1 when every time is at most 1 and the largest
/// time otherwise.
pub fn read_comparisons(path: &Path, horizon: Option<f64>) -> CliResult<ComparisonDataset> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    parse_comparisons(file, horizon).map_err(|e| match e {
        CliError::Data(msg) => CliError::Data(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_comparisons(input: impl std::io::Read, horizon: Option<f64>) -> CliResult<ComparisonDataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = rdr.headers().map_err(CliError::data)?.clone();
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(CliError::data(format!(
            "line 1: expected header {}, found {}",
            CSV_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut labels: Vec<String> = Vec::new();
    let mut id_of = |name: &str| -> usize {
        *ids.entry(name.to_string()).or_insert_with(|| {
            labels.push(name.to_string());
            labels.len() - 1
        })
    };
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::data(format!("line {line}: {e}"))
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let bad = |msg: String| CliError::data(format!("line {line}: {msg}"));
        let (a, b) = (&row[0], &row[1]);
        if a.is_empty() || b.is_empty() {
            return Err(bad("empty item label".into()));
        }
        if a == b {
            return Err(bad(format!("item {a:?} compared with itself")));
        }
        let time: f64 = row[2]
            .parse()
            .map_err(|_| bad(format!("time {:?} is not a number", &row[2])))?;
        if !(time.is_finite() && time >= 0.0) {
            return Err(bad(format!("time {time} must be finite and nonnegative")));
        }
        if let Some(v) = horizon.filter(|&v| time > v) {
            return Err(bad(format!("time {time} lies past the horizon {v}")));
        }
        let outcome = match &row[3] {
            "0" => 0,
            "1" => 1,
            other => return Err(bad(format!("outcome {other:?} must be 0 or 1"))),
        };
        records.push(ComparisonRecord::new(id_of(a), id_of(b), time, outcome));
    }
    if labels.len() < 2 {
        return Err(CliError::data("need comparisons between at least two items"));
    }
    let max_time = records.iter().map(|r| r.time).fold(0.0, f64::max);
    let horizon = horizon.unwrap_or(if max_time <= 1.0 { 1.0 } else { max_time });
    let n = labels.len();
    let ds = ComparisonDataset::new(records, n, horizon, Some(labels));
    if let Some(v) = validate_dataset(&ds).first() {
        return Err(CliError::data(v.to_string()));
    }
    Ok(ds)
}

pub fn write_comparisons(path: &Path, ds: &ComparisonDataset) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(CSV_HEADER).map_err(|e| io_err(path, e))?;
    for r in ds.records() {
        w.write_record([
            ds.label(r.item_i),
            ds.label(r.item_j),
            r.time.to_string(),
            r.outcome.to_string(),
        ])
        .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn labels_of(ds: &ComparisonDataset) -> Vec<String> {
    (0..ds.n_items()).map(|i| ds.label(i)).collect()
}

/// `t,<label_0>,...` with one row per grid point.
pub fn write_trajectory(path: &Path, traj: &ScoreTrajectory, labels: &[String]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    let mut head = vec!["t".to_string()];
    head.extend(labels.iter().cloned());
    w.write_record(&head).map_err(|e| io_err(path, e))?;
    for (k, &t) in traj.grid().points().iter().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(traj.at(k).iter().map(|v| v.to_string()));
        w.write_record(&row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Trajectory table as read back: grid times, item labels, and rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryTable {
    pub times: Vec<f64>,
    pub labels: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn read_trajectory(path: &Path) -> CliResult<TrajectoryTable> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
    let header = rdr.headers().map_err(|e| io_err(path, e))?.clone();
    if header.get(0) != Some("t") || header.len() < 3 {
        return Err(io_err(path, "line 1: expected header t,<item>,<item>,..."));
    }
    let labels: Vec<String> = header.iter().skip(1).map(String::from).collect();
    let mut times = Vec::new();
    let mut rows = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| io_err(path, e))?;
        let line = row.position().map_or(0, |p| p.line());
        let vals: Vec<f64> = row
            .iter()
            .map(|v| v.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| io_err(path, format!("line {line}: non-numeric value")))?;
        times.push(vals[0]);
        rows.push(vals[1..].to_vec());
    }
    Ok(TrajectoryTable { times, labels, rows })
}

/// `t,group,score,lower,upper` in long format; one row per grid point and
/// group.
pub fn write_bands(path: &Path, traj_times: &[f64], group_scores: &dynrank_core::linalg::Matrix, band: &ConfidenceBand) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(["t", "group", "score", "lower", "upper"]).map_err(|e| io_err(path, e))?;
    for (k, &t) in traj_times.iter().enumerate() {
        for g in 0..group_scores.cols() {
            let s = group_scores[(k, g)];
            let hw = band.half_widths[(k, g)];
            w.write_record([
                t.to_string(),
                g.to_string(),
                s.to_string(),
                (s - hw).to_string(),
                (s + hw).to_string(),
            ])
            .map_err(|e| io_err(path, e))?;
        }
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// `item,opponent,win_rate,comparisons` for every ordered pair: the share of
/// their comparisons that `item` won.
pub fn write_heatmap(path: &Path, ds: &ComparisonDataset) -> CliResult<()> {
    let n = ds.n_items();
    let mut wins = vec![0usize; n * n];
    let mut counts = vec![0usize; n * n];
    for r in ds.records() {
        let (i, j) = (r.item_i, r.item_j);
        counts[i * n + j] += 1;
        counts[j * n + i] += 1;
        if r.outcome == 1 {
            wins[j * n + i] += 1;
        } else {
            wins[i * n + j] += 1;
        }
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(["item", "opponent", "win_rate", "comparisons"]).map_err(|e| io_err(path, e))?;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let c = counts[i * n + j];
            let rate = if c > 0 { (wins[i * n + j] as f64 / c as f64).to_string() } else { String::new() };
            w.write_record([ds.label(i), ds.label(j), rate, c.to_string()])
                .map_err(|e| io_err(path, e))?;
        }
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("output serializes");
    text.push('\n');
    let mut f = File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| io_err(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| io_err(path, e))
}

fn named_groups(part: &GroupPartition, labels: &[String]) -> Vec<Vec<String>> {
    part.groups()
        .iter()
        .map(|g| {
            let mut g = g.clone();
            g.sort_unstable();
            g.iter().map(|&i| labels[i].clone()).collect()
        })
        .collect()
}

/// Maps named groups back to a partition over `labels`.
pub fn partition_from_names(groups: &[Vec<String>], labels: &[String]) -> CliResult<GroupPartition> {
    let index: HashMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let ids = groups
        .iter()
        .map(|g| {
            g.iter()
                .map(|name| {
                    index
                        .get(name.as_str())
                        .copied()
                        .ok_or_else(|| CliError::data(format!("unknown item {name:?}")))
                })
                .collect::<CliResult<Vec<usize>>>()
        })
        .collect::<CliResult<Vec<_>>>()?;
    GroupPartition::from_groups(&ids).map_err(|e| CliError::data(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathEntry {
    pub lambda: f64,
    pub ebic: f64,
    pub groups: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupsFile {
    pub lambda: f64,
    pub ebic: f64,
    /// Items in the order used to form the gaps.
    pub order: Vec<String>,
    /// Gap rows after which a new group starts.
    pub boundaries: Vec<usize>,
    pub groups: Vec<Vec<String>>,
    /// `‖θ̂_i‖₂ / √m` per gap row.
    pub theta_norms: Vec<f64>,
    pub lambda_path: Vec<PathEntry>,
    pub config: RunConfig,
}

impl GroupsFile {
    pub fn new(fit: &GroupFit, ds: &ComparisonDataset, config: &RunConfig) -> Self {
        let labels = labels_of(ds);
        let sm = (fit.path.theta.cols() as f64).sqrt();
        GroupsFile {
            lambda: fit.lambda,
            ebic: fit.ebic,
            order: fit.perm.iter().map(|&i| labels[i].clone()).collect(),
            boundaries: fit.partition.boundaries().to_vec(),
            groups: named_groups(&fit.partition, &labels),
            theta_norms: fit.path.row_norms().iter().map(|v| v / sm).collect(),
            lambda_path: fit
                .lambda_path
                .iter()
                .map(|p| PathEntry { lambda: p.lambda, ebic: p.ebic, groups: p.groups })
                .collect(),
            config: config.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentOut {
    pub a: f64,
    pub b: f64,
    pub groups: Vec<Vec<String>>,
    #[serde(rename = "L")]
    pub cost: f64,
    #[serde(rename = "B")]
    pub group_count: usize,
}

impl SegmentOut {
    pub fn new(s: &SegmentFit, labels: &[String]) -> Self {
        SegmentOut {
            a: s.start,
            b: s.end,
            groups: named_groups(&s.partition, labels),
            cost: s.cost,
            group_count: s.group_count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvEntry {
    pub gamma1: f64,
    pub gamma2: f64,
    pub log_likelihood: f64,
    pub change_points: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChangePointsFile {
    /// `dp` or `naive`.
    pub method: String,
    pub change_points: Vec<f64>,
    pub segments: Vec<SegmentOut>,
    pub objective: Option<f64>,
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
    pub cross_validation: Option<Vec<CvEntry>>,
    pub config: RunConfig,
}

impl ChangePointsFile {
    pub fn cv_entries(cv: &CvResult) -> Vec<CvEntry> {
        cv.scores
            .iter()
            .map(|s| CvEntry {
                gamma1: s.gamma1,
                gamma2: s.gamma2,
                log_likelihood: s.log_likelihood,
                change_points: s.change_points,
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthSpec {
    pub setting: String,
    pub n: usize,
    pub per_pair: usize,
    pub seed: u64,
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    /// True groups of every phase.
    pub partition: Vec<Vec<Vec<String>>>,
    pub change_points: Vec<f64>,
    pub spec: TruthSpec,
}

impl TruthFile {
    pub fn new(truth: &dynrank_core::simulation::Truth, labels: &[String], spec: TruthSpec) -> Self {
        TruthFile {
            partition: truth.partitions.iter().map(|p| named_groups(p, labels)).collect(),
            change_points: truth.change_points(),
            spec,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_follow_first_appearance() {
        let text = "item_i,item_j,time,outcome\nb,a,0.1,1\nc,a,0.2,0\n";
        let ds = parse_comparisons(text.as_bytes(), None).unwrap();
        assert_eq!(ds.labels().unwrap(), ["b", "a", "c"]);
        assert_eq!(ds.records()[1], ComparisonRecord::new(2, 1, 0.2, 0));
        assert_eq!(ds.horizon(), 1.0);
    }

    #[test]
    fn horizon_is_inferred_from_times() {
        let text = "item_i,item_j,time,outcome\na,b,3.5,1\na,b,7,0\n";
        assert_eq!(parse_comparisons(text.as_bytes(), None).unwrap().horizon(), 7.0);
        assert_eq!(parse_comparisons(text.as_bytes(), Some(10.0)).unwrap().horizon(), 10.0);
    }

    #[test]
    fn bad_rows_name_their_line() {
        let cases = [
            ("item_i,item_j,time,outcome\na,b,0.1,1\na,b,0.2,2\n", "line 3"),
            ("item_i,item_j,time,outcome\na,b,x,1\n", "line 2"),
            ("item_i,item_j,time,outcome\na,a,0.1,1\n", "line 2"),
            ("item_i,item_j,time,outcome\na,b,-1,1\n", "line 2"),
            ("i,j,t,y\na,b,0.1,1\n", "line 1"),
        ];
        for (text, line) in cases {
            let e = parse_comparisons(text.as_bytes(), None).unwrap_err();
            assert_eq!(e.exit_code(), 3);
            assert!(e.to_string().contains(line), "{e} lacks {line}");
        }
    }

    #[test]
    fn time_past_given_horizon_is_rejected() {
        let text = "item_i,item_j,time,outcome\na,b,2,1\n";
        let e = parse_comparisons(text.as_bytes(), Some(1.0)).unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
    }

    #[test]
    fn named_partition_roundtrip() {
        let labels: Vec<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
        let p = GroupPartition::from_groups(&[vec![2, 0], vec![1]]).unwrap();
        let back = partition_from_names(&named_groups(&p, &labels), &labels).unwrap();
        assert!(back.same_grouping(&p));
    }
}
