//! Model-based planning: sample trajectories from the true environment with
//! ε-exploration, learn the transition tensors by convex combination with the
//! per-epoch empirical distribution, optimise the policy against the learned
//! model, and track the expected return against both models.
//!
//! The learner is granted the walker's structural knowledge that all
//! transition tensors before the final timestep are identical, so those
//! visit counts are pooled across timesteps.

use serde::{Deserialize, Serialize};

use crate::engine::expected_return;
use crate::error::{Error, Result};
use crate::fmdp::{FmdpSpec, InitialDistribution, PolicySet, TransitionModel};
use crate::optimizer::optimize_sarl;
use crate::tensor::DenseTensor;
use crate::walker::{sample_trajectories, TrajectoryRecord};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PlanConfig {
    /// Learning rate of the convex-combination model update.
    pub alpha: f64,
    /// Probability of flipping each sampled action during exploration.
    pub epsilon: f64,
    /// Trajectories sampled per epoch.
    pub n_traj: usize,
    pub n_epochs: usize,
    pub seed: u64,
}

impl PlanConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config("alpha must lie in [0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::Config("epsilon must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Expected return of the epoch's optimised policy against the learned model
/// and against the true environment. Epoch 0 is the pre-learning baseline.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub e_return_model: f64,
    pub e_return_true: f64,
}

/// The maximally uninformed model: every outcome equally likely,
/// `P(s', r | s, a) = 1 / (N_S * N_R)` for every timestep.
pub fn init_uniform_model(spec: &FmdpSpec) -> TransitionModel {
    let (ns, na, nr) = (spec.n_states, spec.n_actions, spec.n_rewards);
    let p = 1.0 / (ns * nr) as f64;
    let uniform = DenseTensor::from_fn(&[ns, nr, ns, na], |_| p);
    TransitionModel {
        tensors: vec![uniform; spec.horizon],
    }
}

/// Per-(s, a) outcome counts over (s', r).
struct Counts {
    n_outcomes: usize,
    table: Vec<f64>, // indexed (s * n_actions + a) * n_outcomes + outcome
    visits: Vec<f64>,
}

impl Counts {
    fn new(spec: &FmdpSpec) -> Self {
        let n_pairs = spec.n_states * spec.n_actions;
        let n_outcomes = spec.n_states * spec.n_rewards;
        Counts {
            n_outcomes,
            table: vec![0.0; n_pairs * n_outcomes],
            visits: vec![0.0; n_pairs],
        }
    }

    fn record(&mut self, s: usize, a: usize, sp: usize, r: usize, n_actions: usize, nr: usize) {
        let pair = s * n_actions + a;
        self.table[pair * self.n_outcomes + sp * nr + r] += 1.0;
        self.visits[pair] += 1.0;
    }

    /// Blends the empirical outcome distribution of each visited pair into
    /// the tensor: entry <- entry + alpha * (empirical - entry).
    fn blend_into(&self, tensor: &mut DenseTensor, alpha: f64, spec: &FmdpSpec) {
        let (na, nr) = (spec.n_actions, spec.n_rewards);
        for s in 0..spec.n_states {
            for a in 0..na {
                let pair = s * na + a;
                if self.visits[pair] == 0.0 {
                    continue;
                }
                for sp in 0..spec.n_states {
                    for r in 0..nr {
                        let fresh = self.table[pair * self.n_outcomes + sp * nr + r]
                            / self.visits[pair];
                        let idx = [sp, r, s, a];
                        let old = tensor.get(&idx);
                        tensor.set(&idx, old + alpha * (fresh - old));
                    }
                }
            }
        }
    }
}

/// Learns from one epoch of trajectories: visited (s, a) slices move towards
/// the current epoch's empirical outcome distribution by a factor `alpha`;
/// unvisited slices are untouched. Counts before the final timestep are
/// pooled, keeping those tensors identical.
pub fn update_model(
    spec: &FmdpSpec,
    model: &TransitionModel,
    trajectories: &[TrajectoryRecord],
    alpha: f64,
) -> Result<TransitionModel> {
    if spec.n_agents != 1 {
        return Err(Error::Config("planning is single-agent only".into()));
    }
    let horizon = spec.horizon;
    let mut shared = Counts::new(spec);
    let mut last = Counts::new(spec);
    let (na, nr) = (spec.n_actions, spec.n_rewards);
    for traj in trajectories {
        let states = &traj.states[0];
        let actions = &traj.actions[0];
        let rewards = &traj.rewards[0];
        for t in 0..horizon {
            let s = spec
                .state_index(states[t])
                .ok_or_else(|| Error::Config(format!("state {} out of range", states[t])))?;
            let sp = spec
                .state_index(states[t + 1])
                .ok_or_else(|| Error::Config(format!("state {} out of range", states[t + 1])))?;
            let a = if actions[t] < 0 { 0 } else { 1 };
            let r = spec
                .reward_index(rewards[t])
                .ok_or_else(|| Error::Config(format!("reward {} not in value set", rewards[t])))?;
            let counts = if t + 1 < horizon { &mut shared } else { &mut last };
            counts.record(s, a, sp, r, na, nr);
        }
    }
    let mut shared_tensor = model.tensors[0].clone();
    shared.blend_into(&mut shared_tensor, alpha, spec);
    let mut last_tensor = model.tensors[horizon - 1].clone();
    last.blend_into(&mut last_tensor, alpha, spec);
    let mut tensors = vec![shared_tensor; horizon - 1];
    tensors.push(last_tensor);
    Ok(TransitionModel { tensors })
}

/// Runs the planning loop against a true environment. Epoch 0 logs the
/// uniform-model, uniform-policy baseline; each subsequent epoch samples,
/// learns, optimises, and logs the pure optimised policy (exploration noise
/// is used for sampling only).
pub fn plan(
    spec: &FmdpSpec,
    true_model: &TransitionModel,
    p0: &InitialDistribution,
    cfg: &PlanConfig,
) -> Result<Vec<EpochLog>> {
    cfg.validate()?;
    let mut model = init_uniform_model(spec);
    let mut policy = PolicySet::uniform_sarl(spec);
    let mut logs = Vec::with_capacity(cfg.n_epochs + 1);
    logs.push(EpochLog {
        epoch: 0,
        e_return_model: expected_return(spec, &model, &policy, p0)?,
        e_return_true: expected_return(spec, true_model, &policy, p0)?,
    });
    for epoch in 1..=cfg.n_epochs {
        let epoch_seed = cfg.seed ^ ((epoch as u64) << 32);
        let trajs =
            sample_trajectories(spec, true_model, &policy, cfg.n_traj, cfg.epsilon, epoch_seed)?;
        model = update_model(spec, &model, &trajs, cfg.alpha)?;
        let (optimized, _) = optimize_sarl(spec, &model, &policy, p0)?;
        policy = optimized;
        logs.push(EpochLog {
            epoch,
            e_return_model: expected_return(spec, &model, &policy, p0)?,
            e_return_true: expected_return(spec, true_model, &policy, p0)?,
        });
    }
    Ok(logs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fmdp::Validate;
    use crate::walker::{build_sarl_walker, WalkerConfig};

    fn walker(horizon: usize, sigma: f64) -> (FmdpSpec, TransitionModel, InitialDistribution) {
        build_sarl_walker(&WalkerConfig {
            horizon,
            sigma,
            n_agents: 1,
            seed: 0,
        })
        .unwrap()
    }

    #[test]
    fn uniform_model_entries_and_validity() {
        let (spec, _, _) = walker(20, 0.0);
        let model = init_uniform_model(&spec);
        assert!((model.tensors[0].data()[0] - 1.0 / (41.0 * 4.0)).abs() < 1e-15);
        assert!(model.validate().is_empty());
    }

    #[test]
    fn uniform_model_walker_baseline_is_minus_fifty() {
        let (spec, _, p0) = walker(20, 0.0);
        let model = init_uniform_model(&spec);
        let policy = PolicySet::uniform_sarl(&spec);
        let e = expected_return(&spec, &model, &policy, &p0).unwrap();
        assert!((e + 50.0).abs() < 1e-9, "{e}");
    }

    fn one_traj(states: Vec<i64>, actions: Vec<i64>, rewards: Vec<f64>) -> TrajectoryRecord {
        let total = rewards.iter().sum();
        TrajectoryRecord {
            states: vec![states],
            actions: vec![actions],
            rewards: vec![rewards],
            total_return: total,
            satisfied_objective: false,
        }
    }

    #[test]
    fn alpha_zero_leaves_model_unchanged() {
        let (spec, _, _) = walker(3, 0.0);
        let model = init_uniform_model(&spec);
        let traj = one_traj(vec![0, 1, 2, 1], vec![1, 1, -1], vec![0.0, 0.0, -10.0]);
        let updated = update_model(&spec, &model, &[traj], 0.0).unwrap();
        for (a, b) in model.tensors.iter().zip(&updated.tensors) {
            assert_eq!(a.data(), b.data());
        }
    }

    #[test]
    fn alpha_one_makes_point_mass() {
        let (spec, _, _) = walker(3, 0.0);
        let model = init_uniform_model(&spec);
        let traj = one_traj(vec![0, 1, 2, 1], vec![1, 1, -1], vec![0.0, 0.0, -10.0]);
        let updated = update_model(&spec, &model, &[traj], 1.0).unwrap();
        let s0 = spec.state_index(0).unwrap();
        let s1 = spec.state_index(1).unwrap();
        let r0 = spec.reward_index(0.0).unwrap();
        // The (s=0, up) slice saw exactly one outcome: (s'=1, r=0).
        assert_eq!(updated.tensors[0].get(&[s1, r0, s0, 1]), 1.0);
        let slice_sum: f64 = (0..spec.n_states)
            .flat_map(|sp| (0..spec.n_rewards).map(move |r| (sp, r)))
            .map(|(sp, r)| updated.tensors[0].get(&[sp, r, s0, 1]))
            .sum();
        assert!((slice_sum - 1.0).abs() < 1e-12);
        assert!(updated.validate().is_empty());
    }

    #[test]
    fn partial_update_arithmetic() {
        let (spec, _, _) = walker(20, 0.0);
        let model = init_uniform_model(&spec);
        let mut states = vec![0i64; 21];
        let mut actions = vec![0i64; 20];
        let mut rewards = vec![0.0f64; 20];
        // Alternate up/down so each visited slice sees a single outcome.
        for t in 0..20 {
            let up = t % 2 == 0;
            states[t + 1] = if up { 1 } else { 0 };
            actions[t] = if up { 1 } else { -1 };
            rewards[t] = if t + 1 < 20 { 0.0 } else { 1.0 };
        }
        let updated = update_model(&spec, &model, &[one_traj(states, actions, rewards)], 0.4)
            .unwrap();
        let prior = 1.0 / (41.0 * 4.0);
        let expect = prior + 0.4 * (1.0 - prior);
        let s0 = spec.state_index(0).unwrap();
        let s1 = spec.state_index(1).unwrap();
        let r0 = spec.reward_index(0.0).unwrap();
        assert!((updated.tensors[0].get(&[s1, r0, s0, 1]) - expect).abs() < 1e-12);
    }

    #[test]
    fn shared_tensors_stay_identical() {
        let (spec, true_model, p0) = walker(4, 0.0);
        let cfg = PlanConfig {
            alpha: 0.4,
            epsilon: 0.2,
            n_traj: 10,
            n_epochs: 3,
            seed: 5,
        };
        let _ = &p0;
        let mut model = init_uniform_model(&spec);
        let policy = PolicySet::uniform_sarl(&spec);
        for epoch in 1..=cfg.n_epochs {
            let trajs = sample_trajectories(
                &spec,
                &true_model,
                &policy,
                cfg.n_traj,
                cfg.epsilon,
                cfg.seed ^ ((epoch as u64) << 32),
            )
            .unwrap();
            model = update_model(&spec, &model, &trajs, cfg.alpha).unwrap();
            for t in 1..spec.horizon - 1 {
                assert_eq!(model.tensors[0], model.tensors[t]);
            }
            assert!(model.validate().is_empty());
        }
    }

    #[test]
    fn no_trajectories_means_constant_logs() {
        let (spec, true_model, p0) = walker(3, 0.0);
        let cfg = PlanConfig {
            alpha: 0.4,
            epsilon: 0.2,
            n_traj: 0,
            n_epochs: 3,
            seed: 1,
        };
        let logs = plan(&spec, &true_model, &p0, &cfg).unwrap();
        assert_eq!(logs.len(), 4);
        for log in &logs[1..] {
            assert!((log.e_return_model - logs[1].e_return_model).abs() < 1e-12);
            assert!((log.e_return_true - logs[1].e_return_true).abs() < 1e-12);
        }
    }

    #[test]
    fn planning_learns_small_deterministic_walker() {
        let (spec, true_model, p0) = walker(4, 0.0);
        let cfg = PlanConfig {
            alpha: 0.4,
            epsilon: 0.2,
            n_traj: 30,
            n_epochs: 6,
            seed: 3,
        };
        let logs = plan(&spec, &true_model, &p0, &cfg).unwrap();
        let best = logs
            .iter()
            .map(|l| l.e_return_true)
            .fold(f64::MIN, f64::max);
        assert!((best - 1.0).abs() < 1e-9, "best true return {best}");
    }

    #[test]
    fn planning_is_deterministic_in_seed() {
        let (spec, true_model, p0) = walker(3, 1.0);
        let cfg = PlanConfig {
            alpha: 0.4,
            epsilon: 0.2,
            n_traj: 10,
            n_epochs: 3,
            seed: 42,
        };
        let a = plan(&spec, &true_model, &p0, &cfg).unwrap();
        let b = plan(&spec, &true_model, &p0, &cfg).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.e_return_model, y.e_return_model);
            assert_eq!(x.e_return_true, y.e_return_true);
        }
    }

    #[test]
    fn bad_config_is_rejected() {
        let (spec, true_model, p0) = walker(2, 0.0);
        let cfg = PlanConfig {
            alpha: 1.5,
            epsilon: 0.2,
            n_traj: 1,
            n_epochs: 1,
            seed: 0,
        };
        assert!(plan(&spec, &true_model, &p0, &cfg).is_err());
    }
}
