// SPDX-License-Identifier: MIT OR Apache-2.0

//! Simulation replicates: one dataset per seed, every estimator run on it,
//! and the metrics collected into rows.

use dynrank_core::changepoint::{
    cross_validate_gammas, detect_from_cache, naive_from_cache, ChangePointResult, CvResult, SegmentCache,
};
use dynrank_core::grouping::{recognize_groups, refit};
use dynrank_core::metrics::{grouping_confusion, hausdorff, mean_kendall_tau_b, trajectory_mse};
use dynrank_core::simulation::{builtin_setting, sample_dataset, Setting, SimulatedData};
use dynrank_core::{make_grid, ComparisonDataset, KernelSpec};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// Bandwidth of the static baseline relative to the horizon: wide enough
/// that every comparison gets nearly the same weight.
pub const STATIC_BANDWIDTH_FACTOR: f64 = 100.0;

/// Size of one simulated replicate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimParams {
    pub n: usize,
    pub per_pair: usize,
    pub bandwidth: f64,
}

impl SimParams {
    /// Resolves `n`, `M` and `h` from the config, falling back to the
    /// setting's reference values; `M = round(Mh / h)` unless `per_pair` is
    /// set.
    pub fn resolve(setting: &Setting, cfg: &RunConfig) -> Self {
        let h = cfg.bandwidth.unwrap_or(setting.default_bandwidth());
        let (n, mh) = match setting {
            Setting::Grouping(_) => (20, 5.0),
            Setting::Change(_) => (10, 10.0),
        };
        let per_pair = cfg
            .per_pair
            .unwrap_or_else(|| ((cfg.mh.unwrap_or(mh) / h).round() as usize).max(1));
        SimParams {
            n: cfg.n.unwrap_or(n),
            per_pair,
            bandwidth: h,
        }
    }
}

pub fn setting_by_name(name: &str) -> CliResult<Setting> {
    builtin_setting(name).map_err(CliError::config)
}

/// Metrics of one grouping replicate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupingRow {
    pub seed: u64,
    pub groups: usize,
    pub sensitivity: f64,
    pub specificity: f64,
    pub tau_ours: f64,
    pub tau_refit: f64,
    pub tau_krc: f64,
    pub mse_ours: f64,
    pub mse_refit: f64,
    pub mse_krc: f64,
    pub static_sensitivity: f64,
    pub static_specificity: f64,
}

/// Groups with the static baseline: one grid point at the middle of the
/// horizon and a bandwidth spanning all of it.
pub fn static_grouping(
    ds: &ComparisonDataset,
    cfg: &RunConfig,
) -> CliResult<dynrank_core::grouping::GroupFit> {
    let v = ds.horizon();
    let kernel = KernelSpec::epanechnikov(STATIC_BANDWIDTH_FACTOR * v)?;
    let grid = make_grid(0.0, v, 1)?;
    Ok(recognize_groups(ds, &kernel, &grid, &cfg.grouping_options())?)
}

/// Runs grouping, refit, kernel rank centrality and the static baseline on
/// one simulated dataset.
///
/// Kendall's τ-b is taken against the group-level truth (tied within
/// groups); MSE against the exact, perturbed truth.
pub fn grouping_replicate(setting: &Setting, cfg: &RunConfig, seed: u64) -> CliResult<GroupingRow> {
    let p = SimParams::resolve(setting, cfg);
    let sim = sample_dataset(setting, p.n, p.per_pair, seed)?;
    let ds = &sim.dataset;
    let kernel = cfg.kernel_spec(p.bandwidth)?;
    let grid = make_grid(0.0, ds.horizon(), cfg.grid_points)?;
    let fit = recognize_groups(ds, &kernel, &grid, &cfg.grouping_options())?;
    let rf = refit(ds, &kernel, &grid, &fit.partition)?;
    let fused = fit.fused_trajectory()?;
    let truth_part = sim.truth.partition_at(0.0);
    let conf = grouping_confusion(&fit.partition, truth_part)?;
    let tied = sim.truth.group_level_trajectory(&grid)?;
    let exact = sim.truth.trajectory(&grid)?;
    let stat = static_grouping(ds, cfg)?;
    let sconf = grouping_confusion(&stat.partition, truth_part)?;
    Ok(GroupingRow {
        seed,
        groups: fit.partition.group_count(),
        sensitivity: conf.sensitivity(),
        specificity: conf.specificity(),
        tau_ours: mean_kendall_tau_b(&fused, &tied)?,
        tau_refit: mean_kendall_tau_b(&rf.item_scores, &tied)?,
        tau_krc: mean_kendall_tau_b(&fit.pilot, &tied)?,
        mse_ours: trajectory_mse(&fused, &exact)?,
        mse_refit: trajectory_mse(&rf.item_scores, &exact)?,
        mse_krc: trajectory_mse(&fit.pilot, &exact)?,
        static_sensitivity: sconf.sensitivity(),
        static_specificity: sconf.specificity(),
    })
}

/// Metrics of one change-detection replicate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChangeRow {
    pub seed: u64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub change_points: Vec<f64>,
    pub hausdorff: f64,
    /// Detected count equals the true count.
    pub exact: bool,
    pub naive_change_points: Vec<f64>,
    pub naive_hausdorff: f64,
    pub naive_exact: bool,
}

/// Segment fits of every candidate interval of `ds`.
pub fn change_cache(ds: &ComparisonDataset, kernel: &KernelSpec, cfg: &RunConfig) -> CliResult<SegmentCache> {
    let cands = cfg.candidate_set(ds.horizon())?;
    Ok(SegmentCache::compute(ds, kernel, &cands.knots(), &cfg.segment_options())?)
}

/// Picks the penalties: the fixed pair when configured, otherwise by
/// cross-validation over the grids.
pub fn choose_gammas(
    ds: &ComparisonDataset,
    kernel: &KernelSpec,
    cfg: &RunConfig,
) -> CliResult<((f64, f64), Option<CvResult>)> {
    cfg.validate_detect()?;
    if let (Some(g1), Some(g2)) = (cfg.gamma1, cfg.gamma2) {
        return Ok(((g1, g2), None));
    }
    let cands = cfg.candidate_set(ds.horizon())?;
    let cv = cross_validate_gammas(
        ds,
        kernel,
        &cands,
        &cfg.gamma1_grid,
        &cfg.gamma2_grid,
        &cfg.cv_options(),
        &cfg.segment_options(),
    )?;
    Ok(((cv.gamma1, cv.gamma2), Some(cv)))
}

/// Change points by the dynamic program plus the naive comparator, both
/// read off one shared segment cache.
pub fn detect_both(
    ds: &ComparisonDataset,
    kernel: &KernelSpec,
    cfg: &RunConfig,
) -> CliResult<(ChangePointResult, Vec<f64>, Option<CvResult>)> {
    let ((g1, g2), cv) = choose_gammas(ds, kernel, cfg)?;
    let cache = change_cache(ds, kernel, cfg)?;
    let dp = detect_from_cache(&cache, g1, g2)?;
    let naive = naive_from_cache(&cache)?;
    Ok((dp, naive, cv))
}

pub fn change_replicate(setting: &Setting, cfg: &RunConfig, seed: u64) -> CliResult<ChangeRow> {
    let p = SimParams::resolve(setting, cfg);
    let sim = sample_dataset(setting, p.n, p.per_pair, seed)?;
    let kernel = cfg.kernel_spec(p.bandwidth)?;
    // each replicate uses its own fold split
    let cfg = RunConfig { seed, ..cfg.clone() };
    let (dp, naive, _) = detect_both(&sim.dataset, &kernel, &cfg)?;
    Ok(change_row(&sim, seed, &dp, naive))
}

fn change_row(sim: &SimulatedData, seed: u64, dp: &ChangePointResult, naive: Vec<f64>) -> ChangeRow {
    let truth = sim.truth.change_points();
    let v = sim.dataset.horizon();
    ChangeRow {
        seed,
        gamma1: dp.gammas.0,
        gamma2: dp.gammas.1,
        hausdorff: hausdorff(&dp.change_points, &truth, v),
        exact: dp.change_points.len() == truth.len(),
        change_points: dp.change_points.clone(),
        naive_hausdorff: hausdorff(&naive, &truth, v),
        naive_exact: naive.len() == truth.len(),
        naive_change_points: naive,
    }
}

/// Runs `f(seed)` for `reps` consecutive seeds from `base_seed` on a pool
/// of `jobs` threads (0 for all cores). Rows come back in seed order.
pub fn run_pool<T: Send>(
    reps: usize,
    base_seed: u64,
    jobs: usize,
    f: impl Fn(u64) -> CliResult<T> + Sync,
) -> CliResult<Vec<T>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(CliError::config)?;
    pool.install(|| {
        (0..reps as u64)
            .into_par_iter()
            .map(|r| f(base_seed.wrapping_add(r)))
            .collect()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl MeanSd {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.into_iter().collect();
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let sd = if v.len() > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        MeanSd { mean, sd }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupingSummary {
    pub reps: usize,
    pub sensitivity: MeanSd,
    pub specificity: MeanSd,
    pub tau_ours: MeanSd,
    pub tau_refit: MeanSd,
    pub tau_krc: MeanSd,
    pub mse_ours: MeanSd,
    pub mse_refit: MeanSd,
    pub mse_krc: MeanSd,
    pub static_sensitivity: MeanSd,
    pub static_specificity: MeanSd,
}

impl GroupingSummary {
    pub fn of(rows: &[GroupingRow]) -> Self {
        let s = |f: fn(&GroupingRow) -> f64| MeanSd::of(rows.iter().map(f));
        GroupingSummary {
            reps: rows.len(),
            sensitivity: s(|r| r.sensitivity),
            specificity: s(|r| r.specificity),
            tau_ours: s(|r| r.tau_ours),
            tau_refit: s(|r| r.tau_refit),
            tau_krc: s(|r| r.tau_krc),
            mse_ours: s(|r| r.mse_ours),
            mse_refit: s(|r| r.mse_refit),
            mse_krc: s(|r| r.mse_krc),
            static_sensitivity: s(|r| r.static_sensitivity),
            static_specificity: s(|r| r.static_specificity),
        }
    }

    pub fn table(&self) -> String {
        let row = |name: &str, tau: MeanSd, mse: MeanSd| {
            format!(
                "{name:<10} {:>8.4} ({:.4}) {:>8.4} ({:.4})\n",
                tau.mean, tau.sd, mse.mean, mse.sd
            )
        };
        let mut out = format!("{:<10} {:>17} {:>17}\n", "method", "kendall tau", "mse");
        out += &row("ours", self.tau_ours, self.mse_ours);
        out += &row("refit", self.tau_refit, self.mse_refit);
        out += &row("krc", self.tau_krc, self.mse_krc);
        out += &format!(
            "sensitivity {:.4} specificity {:.4} (static: {:.4} / {:.4}) over {} replicates\n",
            self.sensitivity.mean,
            self.specificity.mean,
            self.static_sensitivity.mean,
            self.static_specificity.mean,
            self.reps
        );
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChangeSummary {
    pub reps: usize,
    pub exact_rate: f64,
    pub hausdorff: MeanSd,
    pub count: MeanSd,
    pub naive_exact_rate: f64,
    pub naive_hausdorff: MeanSd,
}

impl ChangeSummary {
    pub fn of(rows: &[ChangeRow]) -> Self {
        let n = rows.len() as f64;
        ChangeSummary {
            reps: rows.len(),
            exact_rate: rows.iter().filter(|r| r.exact).count() as f64 / n,
            hausdorff: MeanSd::of(rows.iter().map(|r| r.hausdorff)),
            count: MeanSd::of(rows.iter().map(|r| r.change_points.len() as f64)),
            naive_exact_rate: rows.iter().filter(|r| r.naive_exact).count() as f64 / n,
            naive_hausdorff: MeanSd::of(rows.iter().map(|r| r.naive_hausdorff)),
        }
    }

    pub fn table(&self) -> String {
        format!(
            "{:<10} {:>10} {:>17}\n{:<10} {:>10.4} {:>8.4} ({:.4})\n{:<10} {:>10.4} {:>8.4} ({:.4})\nmean detected change points {:.2} over {} replicates\n",
            "method", "exact J", "hausdorff",
            "dp", self.exact_rate, self.hausdorff.mean, self.hausdorff.sd,
            "naive", self.naive_exact_rate, self.naive_hausdorff.mean, self.naive_hausdorff.sd,
            self.count.mean, self.reps
        )
    }
}
