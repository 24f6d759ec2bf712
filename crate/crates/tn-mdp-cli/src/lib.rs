//! Experiment runner producing plot-ready data files: walker trajectories,
//! optimized-policy grids, planning curves and SVD compression scans.
//!
//! Each run writes into an output directory: `manifest.json` (config echo +
//! seed + version), experiment CSVs, and `summary.json` with the headline
//! numbers. Identical config + seed reproduces byte-identical data files.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use tn_mdp::decompose::svd_scan;
use tn_mdp::engine::{expected_return, total_probability};
use tn_mdp::fmdp::{PolicySet, Validate};
use tn_mdp::optimizer::{optimize_marl, optimize_sarl, MarlMode};
use tn_mdp::planner::{plan, PlanConfig};
use tn_mdp::walker::{
    build_marl_walker, build_sarl_walker, sample_trajectories, TrajectoryRecord, WalkerConfig,
};

/// Which experiment to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    SarlWalk,
    MarlWalk,
    Plan,
    SvdScan,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ExperimentKind::SarlWalk => "sarl-walk",
            ExperimentKind::MarlWalk => "marl-walk",
            ExperimentKind::Plan => "plan",
            ExperimentKind::SvdScan => "svd-scan",
        };
        f.write_str(s)
    }
}

fn default_n_sample() -> usize {
    100
}

/// Complete description of one experiment run. Serializable so runs can be
/// driven from a config file; command-line flags override file values.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub walker: WalkerConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<PlanConfig>,
    #[serde(default = "default_n_sample")]
    pub n_sample: usize,
    pub output_dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi_range: Option<Vec<usize>>,
}

/// Failure classes mapped to process exit codes: invalid configuration (2),
/// I/O failure (3), internal invariant violation (1).
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Internal(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "invalid config: {m}"),
            CliError::Io(m) => write!(f, "i/o failure: {m}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Internal(_) => 1,
        }
    }
}

impl From<tn_mdp::Error> for CliError {
    fn from(e: tn_mdp::Error) -> Self {
        match e {
            tn_mdp::Error::Config(m) => CliError::Config(m),
            tn_mdp::Error::Validation { .. } => CliError::Config(e.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl ExperimentConfig {
    pub fn validate(&self) -> CliResult<()> {
        self.walker
            .validate()
            .map_err(|e| CliError::Config(format!("walker: {e}")))?;
        match self.experiment {
            ExperimentKind::SarlWalk | ExperimentKind::Plan => {
                if self.walker.n_agents != 1 {
                    return Err(CliError::Config(format!(
                        "experiment {} requires n_agents = 1",
                        self.experiment
                    )));
                }
            }
            ExperimentKind::MarlWalk | ExperimentKind::SvdScan => {
                if self.walker.n_agents != 2 {
                    return Err(CliError::Config(format!(
                        "experiment {} requires n_agents = 2",
                        self.experiment
                    )));
                }
            }
        }
        if self.experiment == ExperimentKind::Plan {
            let plan = self
                .plan
                .as_ref()
                .ok_or_else(|| CliError::Config("plan experiment requires plan settings".into()))?;
            plan.validate()
                .map_err(|e| CliError::Config(format!("plan: {e}")))?;
        }
        if self.experiment == ExperimentKind::SvdScan {
            let chis = self
                .chi_range
                .as_ref()
                .ok_or_else(|| CliError::Config("svd-scan requires chi_range".into()))?;
            if chis.is_empty() || chis.iter().any(|&c| c == 0) {
                return Err(CliError::Config(
                    "chi_range must be non-empty positive integers".into(),
                ));
            }
        }
        if self.n_sample == 0 {
            return Err(CliError::Config("n_sample must be positive".into()));
        }
        Ok(())
    }
}

/// Headline numbers of a finished run, echoed into `summary.json`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Summary {
    pub experiment: ExperimentKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e_return_before: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e_return_after: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_probability: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epoch_returns_true: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_exact_chi: Option<usize>,
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}

/// Formats a float with full round-trip precision; integral values keep one
/// decimal (`1.0` not `1`), so columns stay visibly floating-point.
fn fmt_f64(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{x:.1}")
    } else {
        format!("{x}")
    }
}

fn trajectories_csv(trajectories: &[TrajectoryRecord]) -> String {
    let mut out = String::from("traj_id,agent,t,s,a,r\n");
    for (id, tr) in trajectories.iter().enumerate() {
        for (agent_ix, states) in tr.states.iter().enumerate() {
            let agent = agent_ix + 1;
            out.push_str(&format!("{id},{agent},0,{},,\n", states[0]));
            for t in 1..states.len() {
                out.push_str(&format!(
                    "{id},{agent},{t},{},{},{}\n",
                    states[t],
                    tr.actions[agent_ix][t - 1],
                    fmt_f64(tr.rewards[agent_ix][t - 1]),
                ));
            }
        }
    }
    out
}

fn objective_fraction(trajectories: &[TrajectoryRecord]) -> f64 {
    let hits = trajectories.iter().filter(|t| t.satisfied_objective).count();
    hits as f64 / trajectories.len() as f64
}

fn manifest_json(cfg: &ExperimentConfig) -> CliResult<String> {
    let m = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "seed": cfg.walker.seed,
        "config": cfg,
    });
    serde_json::to_string_pretty(&m)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Internal(e.to_string()))
}

/// Runs one experiment, writing all artifact files into `cfg.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> CliResult<Summary> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;
    write_file(&cfg.output_dir.join("manifest.json"), &manifest_json(cfg)?)?;
    let summary = match cfg.experiment {
        ExperimentKind::SarlWalk => run_sarl_walk(cfg)?,
        ExperimentKind::MarlWalk => run_marl_walk(cfg)?,
        ExperimentKind::Plan => run_plan(cfg)?,
        ExperimentKind::SvdScan => run_svd_scan(cfg)?,
    };
    let body = serde_json::to_string_pretty(&summary)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Internal(e.to_string()))?;
    write_file(&cfg.output_dir.join("summary.json"), &body)?;
    Ok(summary)
}

fn run_sarl_walk(cfg: &ExperimentConfig) -> CliResult<Summary> {
    let (spec, model, p0) = build_sarl_walker(&cfg.walker)?;
    model.ensure_valid()?;
    let uniform = PolicySet::uniform_sarl(&spec);
    let before = expected_return(&spec, &model, &uniform, &p0)?;
    let prob = total_probability(&spec, &model, &uniform, &p0)?;
    let (optimized, _) = optimize_sarl(&spec, &model, &uniform, &p0)?;
    let after = expected_return(&spec, &model, &optimized, &p0)?;
    let trajectories =
        sample_trajectories(&spec, &model, &optimized, cfg.n_sample, 0.0, cfg.walker.seed)?;
    write_file(
        &cfg.output_dir.join("trajectories.csv"),
        &trajectories_csv(&trajectories),
    )?;

    // Policy grid: probability of the "up" action per timestep and state.
    let mut grid = String::from("t,s,p_up\n");
    if let PolicySet::Sarl(ps) = &optimized {
        for (ix, pi) in ps.iter().enumerate() {
            let t = ix + 1;
            for s in 0..spec.n_states {
                grid.push_str(&format!(
                    "{t},{},{}\n",
                    spec.state_value(s),
                    fmt_f64(pi.get(&[1, s])),
                ));
            }
        }
    }
    write_file(&cfg.output_dir.join("policy.csv"), &grid)?;

    Ok(Summary {
        experiment: cfg.experiment,
        e_return_before: Some(before),
        e_return_after: Some(after),
        total_probability: Some(prob),
        objective_fraction: Some(objective_fraction(&trajectories)),
        epoch_returns_true: None,
        first_exact_chi: None,
    })
}

fn run_marl_walk(cfg: &ExperimentConfig) -> CliResult<Summary> {
    let (spec, model, p0) = build_marl_walker(&cfg.walker)?;
    model.ensure_valid()?;
    let uniform = PolicySet::uniform_joint(&spec);
    let before = expected_return(&spec, &model, &uniform, &p0)?;
    let prob = total_probability(&spec, &model, &uniform, &p0)?;
    let (optimized, _) = optimize_marl(&spec, &model, &uniform, &p0, MarlMode::Joint)?;
    let after = expected_return(&spec, &model, &optimized, &p0)?;
    let trajectories =
        sample_trajectories(&spec, &model, &optimized, cfg.n_sample, 0.0, cfg.walker.seed)?;
    write_file(
        &cfg.output_dir.join("trajectories.csv"),
        &trajectories_csv(&trajectories),
    )?;
    Ok(Summary {
        experiment: cfg.experiment,
        e_return_before: Some(before),
        e_return_after: Some(after),
        total_probability: Some(prob),
        objective_fraction: Some(objective_fraction(&trajectories)),
        epoch_returns_true: None,
        first_exact_chi: None,
    })
}

fn run_plan(cfg: &ExperimentConfig) -> CliResult<Summary> {
    let (spec, model, p0) = build_sarl_walker(&cfg.walker)?;
    model.ensure_valid()?;
    let plan_cfg = cfg.plan.as_ref().expect("checked by validate");
    let logs = plan(&spec, &model, &p0, plan_cfg)?;
    let mut csv = String::from("epoch,e_model,e_true\n");
    for log in &logs {
        csv.push_str(&format!(
            "{},{},{}\n",
            log.epoch,
            fmt_f64(log.e_return_model),
            fmt_f64(log.e_return_true),
        ));
    }
    write_file(&cfg.output_dir.join("plan.csv"), &csv)?;
    Ok(Summary {
        experiment: cfg.experiment,
        e_return_before: Some(logs[0].e_return_model),
        e_return_after: logs.last().map(|l| l.e_return_true),
        total_probability: None,
        objective_fraction: None,
        epoch_returns_true: Some(logs.iter().map(|l| l.e_return_true).collect()),
        first_exact_chi: None,
    })
}

fn run_svd_scan(cfg: &ExperimentConfig) -> CliResult<Summary> {
    let (_, model, _) = build_marl_walker(&cfg.walker)?;
    model.ensure_valid()?;
    let chis = cfg.chi_range.as_ref().expect("checked by validate");
    // All timesteps t < T share one joint tensor; scan that shared tensor.
    let records = svd_scan(&model.tensors[0], chis)?;
    let mut csv = String::from("chi,alpha,elements\n");
    for r in &records {
        csv.push_str(&format!(
            "{},{},{}\n",
            r.chi,
            fmt_f64(r.alpha),
            r.element_count
        ));
    }
    write_file(&cfg.output_dir.join("svd.csv"), &csv)?;
    let first_exact = records
        .iter()
        .filter(|r| r.alpha <= 1e-8)
        .map(|r| r.chi)
        .min();
    Ok(Summary {
        experiment: cfg.experiment,
        e_return_before: None,
        e_return_after: None,
        total_probability: None,
        objective_fraction: None,
        epoch_returns_true: None,
        first_exact_chi: first_exact,
    })
}
