// SPDX-License-Identifier: MIT OR Apache-2.0

//! The subcommands, each reading its inputs, running the estimator and
//! writing its artifacts into an output directory.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use dynrank_core::changepoint::{detect_from_cache, naive_from_cache};
use dynrank_core::grouping::{recognize_groups, refit};
use dynrank_core::metrics::{grouping_confusion, hausdorff, mean_kendall_tau_b, trajectory_mse};
use dynrank_core::simulation::{default_labels, sample_dataset, Setting};
use dynrank_core::spectral::krc_estimate;
use dynrank_core::uncertainty::confidence_band;
use dynrank_core::{make_grid, ComparisonDataset, ScoreTrajectory};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::io::{self, ChangePointsFile, GroupsFile, SegmentOut, TruthFile, TruthSpec};
use crate::replicate::{
    change_cache, change_replicate, choose_gammas, grouping_replicate, run_pool, setting_by_name, ChangeSummary,
    GroupingSummary, SimParams,
};

/// Bandwidth used on real data when none is configured.
pub const DEFAULT_BANDWIDTH: f64 = 0.05;

fn prepare_out(dir: &Path, cfg: &RunConfig) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::config(format!("{}: {e}", dir.display())))?;
    cfg.write_provenance(dir)
}

fn labels_of(ds: &ComparisonDataset) -> Vec<String> {
    (0..ds.n_items()).map(|i| ds.label(i)).collect()
}

fn load(input: &Path, cfg: &RunConfig) -> CliResult<ComparisonDataset> {
    cfg.validate()?;
    io::read_comparisons(input, cfg.horizon)
}

pub fn simulate(setting_name: &str, cfg: &RunConfig, out: &Path) -> CliResult<PathBuf> {
    cfg.validate()?;
    let setting = setting_by_name(setting_name)?;
    let p = SimParams::resolve(&setting, cfg);
    let sim = sample_dataset(&setting, p.n, p.per_pair, cfg.seed)?;
    let labels = default_labels(p.n);
    let ds = ComparisonDataset::new(
        sim.dataset.records().to_vec(),
        p.n,
        sim.dataset.horizon(),
        Some(labels.clone()),
    );
    prepare_out(out, cfg)?;
    let csv = out.join("comparisons.csv");
    io::write_comparisons(&csv, &ds)?;
    let spec = TruthSpec {
        setting: setting_name.to_string(),
        n: p.n,
        per_pair: p.per_pair,
        seed: cfg.seed,
        horizon: ds.horizon(),
    };
    io::write_json(&out.join("truth.json"), &TruthFile::new(&sim.truth, &labels, spec))?;
    Ok(csv)
}

pub fn estimate(input: &Path, cfg: &RunConfig, out: &Path) -> CliResult<()> {
    let ds = load(input, cfg)?;
    let kernel = cfg.kernel_spec(DEFAULT_BANDWIDTH)?;
    let grid = make_grid(0.0, ds.horizon(), cfg.grid_points)?;
    let est = krc_estimate(&ds, &kernel, &grid)?;
    for w in &est.warnings {
        eprintln!("warning: {w:?}");
    }
    prepare_out(out, cfg)?;
    io::write_trajectory(&out.join("trajectory.csv"), &est.trajectory, &labels_of(&ds))?;
    io::write_heatmap(&out.join("heatmap.csv"), &ds)
}

pub fn group(input: &Path, cfg: &RunConfig, out: &Path, with_refit: bool) -> CliResult<GroupsFile> {
    let ds = load(input, cfg)?;
    let kernel = cfg.kernel_spec(DEFAULT_BANDWIDTH)?;
    let grid = make_grid(0.0, ds.horizon(), cfg.grid_points)?;
    let fit = recognize_groups(&ds, &kernel, &grid, &cfg.grouping_options())?;
    prepare_out(out, cfg)?;
    let file = GroupsFile::new(&fit, &ds, cfg);
    io::write_json(&out.join("groups.json"), &file)?;
    if with_refit {
        let rf = refit(&ds, &kernel, &grid, &fit.partition)?;
        io::write_trajectory(&out.join("trajectory.csv"), &rf.item_scores, &labels_of(&ds))?;
    }
    Ok(file)
}

pub fn detect(input: &Path, cfg: &RunConfig, out: &Path, naive: bool) -> CliResult<ChangePointsFile> {
    let ds = load(input, cfg)?;
    let kernel = cfg.kernel_spec(DEFAULT_BANDWIDTH)?;
    let labels = labels_of(&ds);
    let file = if naive {
        let cache = change_cache(&ds, &kernel, cfg)?;
        let change_points = naive_from_cache(&cache)?;
        // one segment per interval between consecutive candidates
        let segments = (1..cache.knots().len())
            .map(|r| SegmentOut::new(cache.get(r - 1, r).expect("naive fits exist"), &labels))
            .collect();
        ChangePointsFile {
            method: "naive".into(),
            change_points,
            segments,
            objective: None,
            gamma1: None,
            gamma2: None,
            cross_validation: None,
            config: cfg.clone(),
        }
    } else {
        let ((g1, g2), cv) = choose_gammas(&ds, &kernel, cfg)?;
        let cache = change_cache(&ds, &kernel, cfg)?;
        let r = detect_from_cache(&cache, g1, g2)?;
        ChangePointsFile {
            method: "dp".into(),
            change_points: r.change_points.clone(),
            segments: r.segments.iter().map(|s| SegmentOut::new(s, &labels)).collect(),
            objective: Some(r.objective),
            gamma1: Some(g1),
            gamma2: Some(g2),
            cross_validation: cv.as_ref().map(ChangePointsFile::cv_entries),
            config: cfg.clone(),
        }
    };
    prepare_out(out, cfg)?;
    io::write_json(&out.join("changepoints.json"), &file)?;
    Ok(file)
}

/// Pointwise bands for the group-level refit. Groups come from `groups`
/// when given, otherwise they are estimated first.
pub fn uq(input: &Path, groups: Option<&Path>, cfg: &RunConfig, out: &Path) -> CliResult<()> {
    let ds = load(input, cfg)?;
    let kernel = cfg.kernel_spec(DEFAULT_BANDWIDTH)?;
    let grid = make_grid(0.0, ds.horizon(), cfg.grid_points)?;
    let partition = match groups {
        Some(path) => {
            let file: GroupsFile = io::read_json(path)?;
            io::partition_from_names(&file.groups, &labels_of(&ds))?
        }
        None => recognize_groups(&ds, &kernel, &grid, &cfg.grouping_options())?.partition,
    };
    let rf = refit(&ds, &kernel, &grid, &partition)?;
    let band = confidence_band(&rf, ds.comparisons_per_pair(), &kernel, cfg.level)?;
    prepare_out(out, cfg)?;
    io::write_bands(&out.join("bands.csv"), grid.points(), &rf.group_scores, &band)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Evaluation {
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub kendall_tau: Option<f64>,
    pub mse: Option<f64>,
    pub hausdorff: Option<f64>,
    pub detected: Option<usize>,
    pub true_count: Option<usize>,
    pub exact: Option<bool>,
}

fn trajectory_against_truth(
    path: &Path,
    truth: &dynrank_core::simulation::Truth,
    labels: &[String],
    horizon: f64,
) -> CliResult<(f64, f64)> {
    let table = io::read_trajectory(path)?;
    let index: HashMap<&str, usize> = table.labels.iter().enumerate().map(|(c, l)| (l.as_str(), c)).collect();
    let cols: Vec<usize> = labels
        .iter()
        .map(|l| index.get(l.as_str()).copied().ok_or_else(|| CliError::data(format!("trajectory lacks item {l:?}"))))
        .collect::<CliResult<_>>()?;
    let grid = make_grid(0.0, horizon, table.times.len()).map_err(|e| CliError::data(e.to_string()))?;
    if grid.points().iter().zip(&table.times).any(|(a, b)| (a - b).abs() > 1e-9) {
        return Err(CliError::data("trajectory times are not the midpoint grid of the horizon"));
    }
    let rows: Vec<f64> = table.rows.iter().flat_map(|r| cols.iter().map(|&c| r[c])).collect();
    let m = table.times.len();
    let est = ScoreTrajectory::new(grid.clone(), dynrank_core::linalg::Matrix::from_vec(m, labels.len(), rows))
        .map_err(|e| CliError::data(e.to_string()))?;
    let tau = mean_kendall_tau_b(&est, &truth.group_level_trajectory(&grid)?)?;
    let mse = trajectory_mse(&est, &truth.trajectory(&grid)?)?;
    Ok((tau, mse))
}

/// Scores estimates against the truth of a simulated run. Groups are
/// compared with the partition of the first phase.
pub fn evaluate(
    truth_path: &Path,
    groups: Option<&Path>,
    trajectory: Option<&Path>,
    changepoints: Option<&Path>,
) -> CliResult<Evaluation> {
    let tf: TruthFile = io::read_json(truth_path)?;
    let setting: Setting = setting_by_name(&tf.spec.setting)?;
    let sim = sample_dataset(&setting, tf.spec.n, tf.spec.per_pair, tf.spec.seed)?;
    let truth = sim.truth;
    let labels = default_labels(tf.spec.n);
    let mut ev = Evaluation::default();
    if let Some(path) = groups {
        let gf: GroupsFile = io::read_json(path)?;
        let est = io::partition_from_names(&gf.groups, &labels)?;
        let c = grouping_confusion(&est, &truth.partitions[0])?;
        ev.sensitivity = Some(c.sensitivity());
        ev.specificity = Some(c.specificity());
    }
    if let Some(path) = trajectory {
        let (tau, mse) = trajectory_against_truth(path, &truth, &labels, tf.spec.horizon)?;
        ev.kendall_tau = Some(tau);
        ev.mse = Some(mse);
    }
    if let Some(path) = changepoints {
        let cf: ChangePointsFile = io::read_json(path)?;
        let real = truth.change_points();
        ev.hausdorff = Some(hausdorff(&cf.change_points, &real, tf.spec.horizon));
        ev.detected = Some(cf.change_points.len());
        ev.true_count = Some(real.len());
        ev.exact = Some(cf.change_points.len() == real.len());
    }
    Ok(ev)
}

/// Runs `reps` replicates of a setting and writes per-replicate rows plus
/// a summary. Returns the printable summary table.
pub fn replicate(setting_name: &str, cfg: &RunConfig, out: &Path) -> CliResult<String> {
    cfg.validate()?;
    let setting = setting_by_name(setting_name)?;
    prepare_out(out, cfg)?;
    let rows_path = out.join("replicates.csv");
    let write_err = |e: csv::Error| CliError::config(format!("{}: {e}", rows_path.display()));
    match setting {
        Setting::Grouping(_) => {
            let rows = run_pool(cfg.reps, cfg.seed, cfg.jobs, |s| grouping_replicate(&setting, cfg, s))?;
            let mut w = csv::Writer::from_path(&rows_path).map_err(write_err)?;
            for r in &rows {
                w.serialize(r).map_err(write_err)?;
            }
            w.flush().map_err(|e| CliError::config(e.to_string()))?;
            let summary = GroupingSummary::of(&rows);
            io::write_json(&out.join("summary.json"), &summary)?;
            Ok(summary.table())
        }
        Setting::Change(_) => {
            let rows = run_pool(cfg.reps, cfg.seed, cfg.jobs, |s| change_replicate(&setting, cfg, s))?;
            let mut w = csv::Writer::from_path(&rows_path).map_err(write_err)?;
            w.write_record([
                "seed", "gamma1", "gamma2", "change_points", "hausdorff", "exact",
                "naive_change_points", "naive_hausdorff", "naive_exact",
            ])
            .map_err(write_err)?;
            let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";");
            for r in &rows {
                w.write_record([
                    r.seed.to_string(),
                    r.gamma1.to_string(),
                    r.gamma2.to_string(),
                    join(&r.change_points),
                    r.hausdorff.to_string(),
                    r.exact.to_string(),
                    join(&r.naive_change_points),
                    r.naive_hausdorff.to_string(),
                    r.naive_exact.to_string(),
                ])
                .map_err(write_err)?;
            }
            w.flush().map_err(|e| CliError::config(e.to_string()))?;
            let summary = ChangeSummary::of(&rows);
            io::write_json(&out.join("summary.json"), &summary)?;
            Ok(summary.table())
        }
    }
}
