// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dynrank::config::Kernel;
use dynrank::{commands, CliError, CliResult, RunConfig};

/// Dynamic ranking groups and structure change points from timestamped
/// pairwise comparisons.
#[derive(Parser)]
#[command(name = "dynrank", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by every subcommand; flags override the config file.
#[derive(Args, Clone, Default)]
struct Common {
    /// Flat TOML config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_parser = ["epanechnikov", "gaussian"])]
    kernel: Option<String>,
    #[arg(long, global = true)]
    bandwidth: Option<f64>,
    #[arg(long, global = true)]
    grid_points: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    horizon: Option<f64>,
    /// Worker threads (0 for all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a built-in setting into comparisons.csv and truth.json.
    Simulate {
        #[arg(long)]
        setting: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        per_pair: Option<usize>,
        #[arg(long)]
        mh: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Kernel rank centrality trajectory and win-rate heat map.
    Estimate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Ranking groups (groups.json) and the group-level refit.
    Group {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Use this single penalty instead of the EBIC path.
        #[arg(long)]
        lambda: Option<f64>,
        /// Write groups.json only.
        #[arg(long)]
        no_refit: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Change points of the group structure.
    Detect {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Fixed penalties; skips cross-validation.
        #[arg(long, requires = "gamma2")]
        gamma1: Option<f64>,
        #[arg(long, requires = "gamma1")]
        gamma2: Option<f64>,
        /// Run a comparison method instead.
        #[arg(long, value_parser = ["naive"])]
        baseline: Option<String>,
        /// Candidates at k V / (U + 1), k = 1..U.
        #[arg(long)]
        candidates_uniform: Option<usize>,
        #[arg(long)]
        folds: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Pointwise confidence bands for the group-level scores.
    Uq {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// groups.json from `group`; estimated when absent.
        #[arg(long)]
        groups: Option<PathBuf>,
        #[arg(long)]
        level: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Score estimates against the truth.json of a simulated run.
    Evaluate {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        groups: Option<PathBuf>,
        #[arg(long)]
        trajectory: Option<PathBuf>,
        #[arg(long)]
        changepoints: Option<PathBuf>,
        /// Also write the metrics JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeat simulation and estimation over consecutive seeds.
    Replicate {
        #[arg(long)]
        setting: String,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        per_pair: Option<usize>,
        #[arg(long)]
        mh: Option<f64>,
        #[arg(long)]
        gamma1: Option<f64>,
        #[arg(long)]
        gamma2: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

fn config(common: &Common) -> CliResult<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(k) = &common.kernel {
        cfg.kernel = if k == "gaussian" { Kernel::Gaussian } else { Kernel::Epanechnikov };
    }
    if common.bandwidth.is_some() {
        cfg.bandwidth = common.bandwidth;
    }
    if let Some(m) = common.grid_points {
        cfg.grid_points = m;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if common.horizon.is_some() {
        cfg.horizon = common.horizon;
    }
    if let Some(j) = common.jobs {
        cfg.jobs = j;
    }
    Ok(cfg)
}

fn set<T>(slot: &mut Option<T>, v: Option<T>) {
    if v.is_some() {
        *slot = v;
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate { setting, n, per_pair, mh, out, common } => {
            let mut cfg = config(&common)?;
            set(&mut cfg.n, n);
            set(&mut cfg.per_pair, per_pair);
            set(&mut cfg.mh, mh);
            let csv = commands::simulate(&setting, &cfg, &out)?;
            println!("{}", csv.display());
        }
        Command::Estimate { input, out, common } => commands::estimate(&input, &config(&common)?, &out)?,
        Command::Group { input, out, lambda, no_refit, common } => {
            let mut cfg = config(&common)?;
            if let Some(l) = lambda {
                cfg.lambdas = Some(vec![l]);
            }
            let g = commands::group(&input, &cfg, &out, !no_refit)?;
            println!("{} groups at lambda {}", g.groups.len(), g.lambda);
        }
        Command::Detect { input, out, gamma1, gamma2, baseline, candidates_uniform, folds, common } => {
            let mut cfg = config(&common)?;
            set(&mut cfg.gamma1, gamma1);
            set(&mut cfg.gamma2, gamma2);
            if let Some(u) = candidates_uniform {
                cfg.candidates_uniform = u;
                cfg.candidates = None;
            }
            if let Some(f) = folds {
                cfg.folds = f;
            }
            let r = commands::detect(&input, &cfg, &out, baseline.is_some())?;
            let cps: Vec<String> = r.change_points.iter().map(|c| c.to_string()).collect();
            println!("change points: [{}]", cps.join(", "));
        }
        Command::Uq { input, out, groups, level, common } => {
            let mut cfg = config(&common)?;
            if let Some(l) = level {
                cfg.level = l;
            }
            commands::uq(&input, groups.as_deref(), &cfg, &out)?;
        }
        Command::Evaluate { truth, groups, trajectory, changepoints, out } => {
            let ev = commands::evaluate(&truth, groups.as_deref(), trajectory.as_deref(), changepoints.as_deref())?;
            if let Some(path) = out {
                dynrank::io::write_json(&path, &ev)?;
            }
            println!("{}", serde_json::to_string_pretty(&ev).expect("metrics serialize"));
        }
        Command::Replicate { setting, reps, n, per_pair, mh, gamma1, gamma2, out, common } => {
            let mut cfg = config(&common)?;
            if let Some(r) = reps {
                cfg.reps = r;
            }
            set(&mut cfg.n, n);
            set(&mut cfg.per_pair, per_pair);
            set(&mut cfg.mh, mh);
            set(&mut cfg.gamma1, gamma1);
            set(&mut cfg.gamma2, gamma2);
            print!("{}", commands::replicate(&setting, &cfg, &out)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &CliError) -> u8 {
    e.exit_code() as u8
}
