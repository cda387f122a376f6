// SPDX-License-Identifier: MIT OR Apache-2.0

//! Run configuration: a flat TOML file whose keys can be overridden by
//! command-line flags.

use std::path::Path;

use dynrank_core::changepoint::{CandidateSet, CvOptions, SegmentOptions};
use dynrank_core::grouping::GroupingOptions;
use dynrank_core::{KernelFamily, KernelSpec};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const DEFAULT_GAMMA1: [f64; 15] = [
    0.02, 0.04, 0.06, 0.08, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0,
];
pub const DEFAULT_GAMMA2: [f64; 15] = [
    0.002, 0.004, 0.006, 0.008, 0.01, 0.02, 0.04, 0.06, 0.08, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Epanechnikov,
    Gaussian,
}

/// Every tunable of a run. Missing keys take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub kernel: Kernel,
    /// Kernel bandwidth; when unset, 0.05 for data and the setting's own
    /// value for simulations.
    pub bandwidth: Option<f64>,
    /// Grid points for estimation and grouping.
    pub grid_points: usize,
    pub lambda_count: usize,
    pub lambda_ratio: f64,
    /// Explicit penalty path; overrides `lambda_count`/`lambda_ratio`.
    pub lambdas: Option<Vec<f64>>,
    pub epsilon: f64,
    pub c0: f64,
    pub gamma1_grid: Vec<f64>,
    pub gamma2_grid: Vec<f64>,
    /// Fixed penalties; when both are set cross-validation is skipped.
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
    /// Explicit candidate change points; overrides `candidates_uniform`.
    pub candidates: Option<Vec<f64>>,
    pub candidates_uniform: usize,
    pub folds: usize,
    pub segment_grid_points: usize,
    pub segment_min_points: usize,
    pub seed: u64,
    pub reps: usize,
    /// Items in simulations; 20 for grouping and 10 for change settings
    /// when unset.
    pub n: Option<usize>,
    /// Comparisons per pair (per phase for change settings); overrides `mh`.
    pub per_pair: Option<usize>,
    /// Comparisons per pair times bandwidth; 5 for grouping and 10 for
    /// change settings when unset.
    pub mh: Option<f64>,
    /// Time horizon of input data; inferred from the times when unset.
    pub horizon: Option<f64>,
    pub level: f64,
    /// Worker threads for replicates; 0 uses all cores.
    pub jobs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            kernel: Kernel::Epanechnikov,
            bandwidth: None,
            grid_points: 30,
            lambda_count: 50,
            lambda_ratio: 1e-4,
            lambdas: None,
            epsilon: 0.001,
            c0: 0.1,
            gamma1_grid: DEFAULT_GAMMA1.to_vec(),
            gamma2_grid: DEFAULT_GAMMA2.to_vec(),
            gamma1: None,
            gamma2: None,
            candidates: None,
            candidates_uniform: 11,
            folds: 10,
            segment_grid_points: 30,
            segment_min_points: 10,
            seed: 0,
            reps: 50,
            n: None,
            per_pair: None,
            mh: None,
            horizon: None,
            level: 0.95,
            jobs: 0,
        }
    }
}

fn positive(name: &str, v: f64) -> CliResult<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::config(format!("{name} must be positive, got {v}")))
    }
}

fn at_least_one(name: &str, v: usize) -> CliResult<()> {
    if v >= 1 {
        Ok(())
    } else {
        Err(CliError::config(format!("{name} must be at least 1")))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::config(e.message()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> CliResult<()> {
        if let Some(h) = self.bandwidth {
            positive("bandwidth", h)?;
        }
        at_least_one("grid_points", self.grid_points)?;
        at_least_one("lambda_count", self.lambda_count)?;
        positive("lambda_ratio", self.lambda_ratio)?;
        if let Some(l) = &self.lambdas {
            if l.is_empty() || l.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
                return Err(CliError::config("lambdas must be a nonempty list of nonnegative values"));
            }
        }
        positive("epsilon", self.epsilon)?;
        positive("c0", self.c0)?;
        for (name, grid) in [("gamma1_grid", &self.gamma1_grid), ("gamma2_grid", &self.gamma2_grid)] {
            if grid.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
                return Err(CliError::config(format!("{name} must hold nonnegative values")));
            }
        }
        for (name, g) in [("gamma1", self.gamma1), ("gamma2", self.gamma2)] {
            if let Some(v) = g {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(CliError::config(format!("{name} must be nonnegative, got {v}")));
                }
            }
        }
        if self.folds < 2 {
            return Err(CliError::config("folds must be at least 2"));
        }
        at_least_one("segment_grid_points", self.segment_grid_points)?;
        at_least_one("segment_min_points", self.segment_min_points)?;
        at_least_one("reps", self.reps)?;
        if self.n.is_some_and(|n| n < 2) {
            return Err(CliError::config("n must be at least 2"));
        }
        if let Some(m) = self.per_pair {
            at_least_one("per_pair", m)?;
        }
        if let Some(v) = self.mh {
            positive("mh", v)?;
        }
        if let Some(v) = self.horizon {
            positive("horizon", v)?;
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(CliError::config(format!("level must lie in (0, 1), got {}", self.level)));
        }
        Ok(())
    }

    /// Checks that the penalty search has something to search.
    pub fn validate_detect(&self) -> CliResult<()> {
        match (self.gamma1, self.gamma2) {
            (Some(_), Some(_)) => Ok(()),
            (None, None) => {
                let feasible = self
                    .gamma1_grid
                    .iter()
                    .any(|&a| self.gamma2_grid.iter().any(|&b| a > b));
                if feasible {
                    Ok(())
                } else {
                    Err(CliError::config("no penalty pair with gamma1 > gamma2 in the grids"))
                }
            }
            _ => Err(CliError::config("gamma1 and gamma2 must be given together")),
        }
    }

    pub fn kernel_spec(&self, default_bandwidth: f64) -> CliResult<KernelSpec> {
        let family = match self.kernel {
            Kernel::Epanechnikov => KernelFamily::Epanechnikov,
            Kernel::Gaussian => KernelFamily::Gaussian,
        };
        Ok(KernelSpec::new(family, self.bandwidth.unwrap_or(default_bandwidth))?)
    }

    pub fn grouping_options(&self) -> GroupingOptions {
        GroupingOptions {
            lambdas: self.lambdas.clone(),
            lambda_count: self.lambda_count,
            lambda_ratio: self.lambda_ratio,
            c0: self.c0,
            epsilon: self.epsilon,
            ..GroupingOptions::default()
        }
    }

    pub fn segment_options(&self) -> SegmentOptions {
        SegmentOptions {
            grid_points: self.segment_grid_points,
            min_points: self.segment_min_points,
            grouping: self.grouping_options(),
        }
    }

    pub fn cv_options(&self) -> CvOptions {
        CvOptions {
            folds: self.folds,
            seed: self.seed,
        }
    }

    pub fn candidate_set(&self, horizon: f64) -> CliResult<CandidateSet> {
        Ok(match &self.candidates {
            Some(c) => CandidateSet::new(c.clone(), horizon)?,
            None => CandidateSet::uniform(self.candidates_uniform, horizon)?,
        })
    }

    /// Writes the effective configuration as `config.toml` into `dir`.
    pub fn write_provenance(&self, dir: &Path) -> CliResult<()> {
        std::fs::write(dir.join("config.toml"), self.to_toml())
            .map_err(|e| CliError::config(format!("{}: {e}", dir.display())))
    }
}
