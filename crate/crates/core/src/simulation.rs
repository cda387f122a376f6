// SPDX-License-Identifier: MIT OR Apache-2.0

//! Synthetic dynamic Bradley-Terry data with known group structure.
//!
//! Score formulas are written in units of `1/n`: a group value `v(t)` means
//! each item of the group has raw score `v(t)/n` (plus its perturbation)
//! before the score vector is renormalized to sum to one.
//!
//! Sampling uses ChaCha8 seeded from a `u64`, so a seed reproduces the same
//! dataset on every platform.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::Matrix;
use crate::types::{ComparisonDataset, ComparisonRecord, GroupPartition, ScoreTrajectory, TimeGrid};
use crate::{Error, Result};

/// One additive term of a group score function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Term {
    Const(f64),
    /// `amp · sin(freq · π · t)`
    Sin { amp: f64, freq: f64 },
    /// `amp · atan(freq · π · t)`
    Atan { amp: f64, freq: f64 },
    /// `amp · (t - at)^power` for `t >= at`, zero before.
    PowAfter { amp: f64, at: f64, power: f64 },
}

impl Term {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Term::Const(c) => c,
            Term::Sin { amp, freq } => amp * (freq * PI * t).sin(),
            Term::Atan { amp, freq } => amp * (freq * PI * t).atan(),
            Term::PowAfter { amp, at, power } => {
                if t >= at {
                    amp * (t - at).powf(power)
                } else {
                    0.0
                }
            }
        }
    }
}

/// Score function of one group and its share of the items.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupProfile {
    pub share: f64,
    pub terms: Vec<Term>,
}

impl GroupProfile {
    pub fn new(share: f64, terms: Vec<Term>) -> Self {
        GroupProfile { share, terms }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.terms.iter().map(|term| term.eval(t)).sum()
    }
}

/// Group score functions, best group first, on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySpec {
    pub groups: Vec<GroupProfile>,
    /// Per-item perturbations are uniform on `±perturbation / n`.
    pub perturbation: f64,
    pub horizon: f64,
}

impl TrajectorySpec {
    pub fn new(groups: Vec<GroupProfile>, perturbation: f64, horizon: f64) -> Result<Self> {
        if groups.is_empty() || groups.iter().any(|g| !(g.share > 0.0)) {
            return Err(Error::invalid("every group needs a positive share"));
        }
        if !(perturbation >= 0.0) || !(horizon > 0.0) {
            return Err(Error::invalid("bad perturbation or horizon"));
        }
        Ok(TrajectorySpec {
            groups,
            perturbation,
            horizon,
        })
    }

    /// Group sizes for `n` items: `round(share · n)` for every group but the
    /// last, which takes the remainder.
    pub fn group_sizes(&self, n: usize) -> Result<Vec<usize>> {
        let total: f64 = self.groups.iter().map(|g| g.share).sum();
        let mut sizes = Vec::with_capacity(self.groups.len());
        let mut used = 0usize;
        for g in &self.groups[..self.groups.len() - 1] {
            let s = (g.share / total * n as f64).round() as usize;
            sizes.push(s);
            used += s;
        }
        if used >= n || sizes.contains(&0) {
            return Err(Error::invalid(alloc::format!(
                "{n} items are too few for {} groups",
                self.groups.len()
            )));
        }
        sizes.push(n - used);
        Ok(sizes)
    }

    /// True partition: items are numbered group by group.
    pub fn partition(&self, n: usize) -> Result<GroupPartition> {
        let sizes = self.group_sizes(n)?;
        let mut groups = Vec::with_capacity(sizes.len());
        let mut next = 0;
        for s in sizes {
            groups.push((next..next + s).collect());
            next += s;
        }
        GroupPartition::from_groups(&groups)
    }

    /// Unnormalized item scores `v_g(t)/n + pert_i`.
    fn raw_scores(&self, t: f64, labels: &[usize], pert: &[f64]) -> Vec<f64> {
        let n = labels.len() as f64;
        let values: Vec<f64> = self.groups.iter().map(|g| g.eval(t)).collect();
        labels
            .iter()
            .zip(pert)
            .map(|(&l, &p)| values[l] / n + p)
            .collect()
    }
}

/// A time segment `[start, end)` governed by one trajectory spec.
#[derive(Debug, Clone, PartialEq)]
pub struct Phase {
    pub start: f64,
    pub end: f64,
    pub spec: TrajectorySpec,
}

/// Piecewise specification whose phase boundaries are the true structure
/// change points.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasedSpec {
    pub phases: Vec<Phase>,
}

impl PhasedSpec {
    pub fn new(phases: Vec<Phase>) -> Result<Self> {
        if phases.is_empty() || phases[0].start != 0.0 {
            return Err(Error::invalid("phases must start at 0"));
        }
        if phases.windows(2).any(|w| w[0].end != w[1].start) || phases.iter().any(|p| !(p.start < p.end)) {
            return Err(Error::invalid("phases must tile the horizon"));
        }
        Ok(PhasedSpec { phases })
    }

    pub fn horizon(&self) -> f64 {
        self.phases.last().map_or(0.0, |p| p.end)
    }

    /// Interior phase boundaries.
    pub fn change_points(&self) -> Vec<f64> {
        self.phases[1..].iter().map(|p| p.start).collect()
    }

    pub fn phase_at(&self, t: f64) -> &Phase {
        self.phases
            .iter()
            .find(|p| t < p.end)
            .unwrap_or_else(|| self.phases.last().unwrap())
    }
}

/// A built-in simulation setting.
#[derive(Debug, Clone, PartialEq)]
pub enum Setting {
    /// One structure over the whole horizon.
    Grouping(TrajectorySpec),
    /// Structure changes at phase boundaries; `M` comparisons per pair are
    /// drawn inside every phase.
    Change(PhasedSpec),
}

impl Setting {
    pub fn phased(&self) -> PhasedSpec {
        match self {
            Setting::Grouping(s) => PhasedSpec {
                phases: vec![Phase {
                    start: 0.0,
                    end: s.horizon,
                    spec: s.clone(),
                }],
            },
            Setting::Change(p) => p.clone(),
        }
    }

    /// Bandwidth used with this setting in the reference experiments.
    pub fn default_bandwidth(&self) -> f64 {
        match self {
            Setting::Grouping(_) => 0.05,
            Setting::Change(_) => 0.02,
        }
    }
}

pub const SETTING_NAMES: [&str; 4] = ["grouping-1", "grouping-2", "change-1", "change-2"];

fn sin(amp: f64, freq: f64) -> Term {
    Term::Sin { amp, freq }
}

fn atan(amp: f64, freq: f64) -> Term {
    Term::Atan { amp, freq }
}

pub fn builtin_setting(name: &str) -> Result<Setting> {
    use Term::Const;
    let g = GroupProfile::new;
    let setting = match name {
        "grouping-1" => Setting::Grouping(TrajectorySpec::new(
            vec![
                g(3.0, vec![Const(2.0), sin(0.3, 6.0)]),
                g(3.0, vec![Const(1.0), sin(-0.2, 6.0)]),
                g(4.0, vec![Const(0.25), sin(-0.075, 6.0)]),
            ],
            0.01,
            1.0,
        )?),
        "grouping-2" => Setting::Grouping(TrajectorySpec::new(
            vec![
                g(3.0, vec![Const(1.9), sin(0.5, 3.0)]),
                g(3.0, vec![Const(0.1), atan(0.6, 1.0)]),
                g(4.0, vec![Const(1.0), sin(-0.375, 3.0), atan(-0.45, 1.0)]),
            ],
            0.01,
            1.0,
        )?),
        // values below are the ten-item formulas multiplied by 10
        "change-1" => {
            let outer = TrajectorySpec::new(
                vec![
                    g(3.0, vec![Const(2.0), sin(0.3, 18.0)]),
                    g(3.0, vec![Const(1.0), sin(-0.2, 18.0)]),
                    g(4.0, vec![Const(0.25), sin(-0.075, 18.0)]),
                ],
                0.0,
                1.0,
            )?;
            let middle = TrajectorySpec::new(
                vec![
                    g(1.0, vec![Const(1.5), sin(0.2, 18.0)]),
                    g(1.0, vec![Const(0.5), sin(-0.2, 18.0)]),
                ],
                0.0,
                1.0,
            )?;
            Setting::Change(PhasedSpec::new(vec![
                Phase { start: 0.0, end: 1.0 / 3.0, spec: outer.clone() },
                Phase { start: 1.0 / 3.0, end: 2.0 / 3.0, spec: middle },
                Phase { start: 2.0 / 3.0, end: 1.0, spec: outer },
            ])?)
        }
        "change-2" => {
            let first = TrajectorySpec::new(
                vec![
                    g(1.0, vec![Const(2.5), sin(0.6, 7.0)]),
                    g(4.0, vec![Const(0.625), sin(-0.15, 7.0)]),
                ],
                0.0,
                1.0,
            )?;
            let rise = Term::PowAfter { amp: 2.5, at: 0.5, power: 0.1 };
            let fall = Term::PowAfter { amp: -0.625, at: 0.5, power: 0.1 };
            let second = TrajectorySpec::new(
                vec![
                    g(1.0, vec![Const(1.5), sin(-0.4, 15.0)]),
                    g(1.0, vec![Const(0.65), rise]),
                    g(3.0, vec![Const(1.425), sin(0.2, 15.0), fall]),
                ],
                0.0,
                1.0,
            )?;
            Setting::Change(PhasedSpec::new(vec![
                Phase { start: 0.0, end: 0.5, spec: first },
                Phase { start: 0.5, end: 1.0, spec: second },
            ])?)
        }
        other => {
            return Err(Error::invalid(alloc::format!(
                "unknown setting {other:?}; expected one of {}",
                SETTING_NAMES.join(", ")
            )))
        }
    };
    Ok(setting)
}

/// Ground truth of a simulated dataset.
#[derive(Debug, Clone)]
pub struct Truth {
    pub spec: PhasedSpec,
    pub n: usize,
    /// Frozen per-item perturbation of every phase.
    pub perturbations: Vec<Vec<f64>>,
    /// True partition of every phase.
    pub partitions: Vec<GroupPartition>,
}

impl Truth {
    pub fn change_points(&self) -> Vec<f64> {
        self.spec.change_points()
    }

    fn phase_index(&self, t: f64) -> usize {
        self.spec
            .phases
            .iter()
            .position(|p| t < p.end)
            .unwrap_or(self.spec.phases.len() - 1)
    }

    pub fn partition_at(&self, t: f64) -> &GroupPartition {
        &self.partitions[self.phase_index(t)]
    }

    /// True score vector at `t`, normalized to sum to one.
    pub fn scores(&self, t: f64) -> Vec<f64> {
        let p = self.phase_index(t);
        let spec = &self.spec.phases[p].spec;
        let labels = self.partitions[p].labels();
        let mut s = spec.raw_scores(t, &labels, &self.perturbations[p]);
        let total: f64 = s.iter().sum();
        s.iter_mut().for_each(|v| *v /= total);
        s
    }

    /// Score vector at `t` without the item perturbations: items of one
    /// group share the same score.
    pub fn group_level_scores(&self, t: f64) -> Vec<f64> {
        let p = self.phase_index(t);
        let labels = self.partitions[p].labels();
        let zero = vec![0.0; self.n];
        let mut s = self.spec.phases[p].spec.raw_scores(t, &labels, &zero);
        let total: f64 = s.iter().sum();
        s.iter_mut().for_each(|v| *v /= total);
        s
    }

    pub fn trajectory(&self, grid: &TimeGrid) -> Result<ScoreTrajectory> {
        self.tabulate(grid, |t| self.scores(t))
    }

    /// Trajectory of [`Truth::group_level_scores`].
    pub fn group_level_trajectory(&self, grid: &TimeGrid) -> Result<ScoreTrajectory> {
        self.tabulate(grid, |t| self.group_level_scores(t))
    }

    fn tabulate(&self, grid: &TimeGrid, f: impl Fn(f64) -> Vec<f64>) -> Result<ScoreTrajectory> {
        let mut m = Matrix::zeros(grid.len(), self.n);
        for (k, &t) in grid.points().iter().enumerate() {
            m.row_mut(k).copy_from_slice(&f(t));
        }
        ScoreTrajectory::new(grid.clone(), m)
    }
}

#[derive(Debug, Clone)]
pub struct SimulatedData {
    pub dataset: ComparisonDataset,
    pub truth: Truth,
}

/// Restricts which simulated comparisons are kept.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SampleOptions {
    /// Keep only comparisons with time in `[start, end)`. The random stream
    /// is the same as without the window.
    pub window: Option<(f64, f64)>,
}

/// Draws `m` comparisons per unordered pair inside every phase, at uniform
/// times, with outcome 1 (favouring the higher-indexed item `j`) drawn with
/// probability `π_j / (π_i + π_j)`.
pub fn sample_dataset(setting: &Setting, n: usize, m: usize, seed: u64) -> Result<SimulatedData> {
    sample_dataset_with(setting, n, m, seed, &SampleOptions::default())
}

pub fn sample_dataset_with(
    setting: &Setting,
    n: usize,
    m: usize,
    seed: u64,
    opts: &SampleOptions,
) -> Result<SimulatedData> {
    if m == 0 {
        return Err(Error::invalid("need at least one comparison per pair"));
    }
    if n < 2 {
        return Err(Error::invalid("need at least two items"));
    }
    let spec = setting.phased();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut partitions = Vec::with_capacity(spec.phases.len());
    let mut perturbations = Vec::with_capacity(spec.phases.len());
    let mut labels = Vec::with_capacity(spec.phases.len());
    for phase in &spec.phases {
        let part = phase.spec.partition(n)?;
        let amp = phase.spec.perturbation / n as f64;
        let pert: Vec<f64> = (0..n)
            .map(|_| if amp > 0.0 { rng.random_range(-amp..amp) } else { 0.0 })
            .collect();
        labels.push(part.labels());
        partitions.push(part);
        perturbations.push(pert);
    }
    let (lo, hi) = opts.window.unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
    let mut records = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for (p, phase) in spec.phases.iter().enumerate() {
                let width = phase.end - phase.start;
                for _ in 0..m {
                    let t = phase.start + width * rng.random::<f64>();
                    let u: f64 = rng.random();
                    if t < lo || t >= hi {
                        continue;
                    }
                    let values: Vec<f64> = phase
                        .spec
                        .groups
                        .iter()
                        .map(|g| g.eval(t))
                        .collect();
                    let nf = n as f64;
                    let si = values[labels[p][i]] / nf + perturbations[p][i];
                    let sj = values[labels[p][j]] / nf + perturbations[p][j];
                    let outcome = u8::from(u < sj / (si + sj));
                    records.push(ComparisonRecord::new(i, j, t, outcome));
                }
            }
        }
    }
    let horizon = spec.horizon();
    let truth = Truth {
        spec,
        n,
        perturbations,
        partitions,
    };
    Ok(SimulatedData {
        dataset: ComparisonDataset::new(records, n, horizon, None),
        truth,
    })
}

/// Item labels `item_0 ... item_{n-1}` used when exporting simulated data.
pub fn default_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| alloc::format!("item_{i}")).collect()
}
