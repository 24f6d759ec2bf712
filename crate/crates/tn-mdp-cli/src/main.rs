use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tn_mdp::planner::PlanConfig;
use tn_mdp::walker::WalkerConfig;
use tn_mdp_cli::{run_experiment, CliError, ExperimentConfig, ExperimentKind};

/// Tensor-network experiments for finite-horizon MDPs: walker optimisation,
/// planning loops and SVD compression scans, written as plot-ready CSV.
#[derive(Parser)]
#[command(name = "tn-mdp", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Horizon T.
    #[arg(long = "T", value_name = "T")]
    horizon: Option<usize>,
    /// Gaussian noise width (0 = deterministic).
    #[arg(long)]
    sigma: Option<f64>,
    /// RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for CSV/JSON artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON config file; explicit flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Number of trajectories to sample for figure reproduction.
    #[arg(long)]
    n_sample: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Optimise the single-agent random walker and sample trajectories.
    SarlWalk(CommonArgs),
    /// Optimise the two-agent walker jointly and sample trajectory pairs.
    MarlWalk(CommonArgs),
    /// Run the model-learning planning loop on the single-agent walker.
    Plan {
        #[command(flatten)]
        common: CommonArgs,
        /// Model learning rate.
        #[arg(long)]
        alpha: Option<f64>,
        /// Action-flip exploration rate.
        #[arg(long)]
        epsilon: Option<f64>,
        /// Trajectories sampled per epoch.
        #[arg(long = "n-traj")]
        n_traj: Option<usize>,
        /// Number of learning epochs.
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Scan SVD truncation error of the two-agent joint transition tensor.
    SvdScan {
        #[command(flatten)]
        common: CommonArgs,
        /// Schmidt rank range, inclusive (e.g. 1..30).
        #[arg(long)]
        chi: Option<String>,
    },
}

fn parse_chi_range(s: &str) -> Result<Vec<usize>, CliError> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| CliError::Config(format!("chi: expected range a..b, got {s:?}")))?;
    let lo: usize = a
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("chi: bad lower bound {a:?}")))?;
    let hi: usize = b
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("chi: bad upper bound {b:?}")))?;
    if lo == 0 || hi < lo {
        return Err(CliError::Config(format!("chi: empty or invalid range {s:?}")));
    }
    Ok((lo..=hi).collect())
}

fn load_config_file(path: &PathBuf) -> Result<ExperimentConfig, CliError> {
    let body = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("config file {}: {e}", path.display())))?;
    serde_json::from_str(&body)
        .map_err(|e| CliError::Config(format!("config file {}: {e}", path.display())))
}

/// Starts from the config file if given, else from defaults, then lets
/// explicit flags override.
fn build_config(
    experiment: ExperimentKind,
    common: &CommonArgs,
    plan_overrides: Option<(Option<f64>, Option<f64>, Option<usize>, Option<usize>)>,
    chi: Option<&String>,
) -> Result<ExperimentConfig, CliError> {
    let n_agents = match experiment {
        ExperimentKind::SarlWalk | ExperimentKind::Plan => 1,
        ExperimentKind::MarlWalk | ExperimentKind::SvdScan => 2,
    };
    let default_horizon = match experiment {
        ExperimentKind::MarlWalk | ExperimentKind::SvdScan => 6,
        _ => 20,
    };
    let mut cfg = match &common.config {
        Some(path) => load_config_file(path)?,
        None => ExperimentConfig {
            experiment,
            walker: WalkerConfig {
                horizon: default_horizon,
                sigma: 0.0,
                n_agents,
                seed: 0,
            },
            plan: None,
            n_sample: 100,
            output_dir: PathBuf::from("out"),
            chi_range: None,
        },
    };
    cfg.experiment = experiment;
    cfg.walker.n_agents = n_agents;
    if let Some(t) = common.horizon {
        cfg.walker.horizon = t;
    }
    if let Some(s) = common.sigma {
        cfg.walker.sigma = s;
    }
    if let Some(seed) = common.seed {
        cfg.walker.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    if let Some(n) = common.n_sample {
        cfg.n_sample = n;
    }
    if let Some((alpha, epsilon, n_traj, epochs)) = plan_overrides {
        let mut plan = cfg.plan.unwrap_or(PlanConfig {
            alpha: 0.4,
            epsilon: 0.2,
            n_traj: 30,
            n_epochs: 10,
            seed: cfg.walker.seed,
        });
        if let Some(a) = alpha {
            plan.alpha = a;
        }
        if let Some(e) = epsilon {
            plan.epsilon = e;
        }
        if let Some(n) = n_traj {
            plan.n_traj = n;
        }
        if let Some(n) = epochs {
            plan.n_epochs = n;
        }
        if let Some(seed) = common.seed {
            plan.seed = seed;
        }
        cfg.plan = Some(plan);
    }
    if let Some(spec) = chi {
        cfg.chi_range = Some(parse_chi_range(spec)?);
    } else if experiment == ExperimentKind::SvdScan && cfg.chi_range.is_none() {
        cfg.chi_range = Some((1..=30).collect());
    }
    Ok(cfg)
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    let cfg = match &cli.command {
        Command::SarlWalk(common) => build_config(ExperimentKind::SarlWalk, common, None, None)?,
        Command::MarlWalk(common) => build_config(ExperimentKind::MarlWalk, common, None, None)?,
        Command::Plan {
            common,
            alpha,
            epsilon,
            n_traj,
            epochs,
        } => build_config(
            ExperimentKind::Plan,
            common,
            Some((*alpha, *epsilon, *n_traj, *epochs)),
            None,
        )?,
        Command::SvdScan { common, chi } => {
            build_config(ExperimentKind::SvdScan, common, None, chi.as_ref())?
        }
    };
    let summary = run_experiment(&cfg)?;
    println!(
        "{}",
        serde_json::to_string(&summary).map_err(|e| CliError::Internal(e.to_string()))?
    );
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tn-mdp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
