//! Greedy single-site policy optimisation: each policy tensor is replaced by
//! the one-hot argmax of its environment tensor, sweeping backwards through
//! time. Single-agent problems need one sweep; two-agent problems run either
//! on the fused joint policy (one sweep) or on per-agent factors (two sweeps
//! with opposite agent orders).

use crate::engine::{environment_tensor, expected_return, Chain};
use crate::error::{Error, Result};
use crate::fmdp::{FmdpSpec, InitialDistribution, PolicySet, TransitionModel};
use crate::tensor::DenseTensor;

/// Two action values within this distance count as tied.
pub const TIE_TOL: f64 = 1e-12;

/// What a sweep did: the `(timestep, agent)` sites visited, the network's
/// expected return after each update, whether the final sweep changed
/// nothing, and how many sweeps ran.
#[derive(Clone, Debug)]
pub struct SweepReport {
    pub site_order: Vec<(usize, Option<usize>)>,
    pub returns_after_each_update: Vec<f64>,
    pub converged: bool,
    pub n_sweeps: usize,
}

/// Greedy update of one policy tensor against its environment.
///
/// `z` and `pi` share axes exactly: `(a, s)`, `(a_i, s1, s2)` or
/// `(a1, a2, s1, s2)`; action axes lead. Per state column: if every action
/// value ties within [`TIE_TOL`] the column is left unchanged; otherwise the
/// column becomes the one-hot of the argmax, breaking remaining ties towards
/// the lowest action index.
pub fn greedy_update(z: &DenseTensor, pi: &DenseTensor) -> Result<DenseTensor> {
    if z.shape() != pi.shape() {
        return Err(Error::DimensionMismatch {
            tensor: "greedy_update".into(),
            detail: format!(
                "environment shape {:?}, policy shape {:?}",
                z.shape(),
                pi.shape()
            ),
        });
    }
    let n_action_axes = match z.rank() {
        2 | 3 => 1,
        4 => 2,
        r => {
            return Err(Error::DimensionMismatch {
                tensor: "greedy_update".into(),
                detail: format!("unsupported rank {r}"),
            })
        }
    };
    let n_actions: usize = z.shape()[..n_action_axes].iter().product();
    let n_states: usize = z.shape()[n_action_axes..].iter().product();
    let mut out = pi.clone();
    // Action axes lead, so entries of one state column are strided by
    // `n_states` in the flat layout.
    for s in 0..n_states {
        let value = |a: usize| z.data()[a * n_states + s];
        let vmax = (0..n_actions).map(value).fold(f64::MIN, f64::max);
        let vmin = (0..n_actions).map(value).fold(f64::MAX, f64::min);
        if vmax - vmin <= TIE_TOL {
            continue; // no action is preferable; keep the column
        }
        let best = (0..n_actions)
            .find(|&a| value(a) >= vmax - TIE_TOL)
            .expect("non-empty column");
        for a in 0..n_actions {
            out.data_mut()[a * n_states + s] = if a == best { 1.0 } else { 0.0 };
        }
    }
    Ok(out)
}

/// One backward sweep over a fused chain, updating each site greedily against
/// an environment built from cached boundaries. Returns the expected return
/// after each update and whether anything changed.
fn sweep_backward(chain: &mut Chain) -> Result<(Vec<f64>, bool)> {
    // Left boundaries only involve sites earlier than the one being updated,
    // so the pre-sweep cache stays valid as updates march backwards.
    let lefts = chain.left_boundaries()?;
    let mut right = chain.right_init();
    let mut returns = Vec::with_capacity(chain.horizon());
    let mut changed = false;
    for t in (0..chain.horizon()).rev() {
        let z = chain.environment(&lefts[t], &right, t)?;
        let updated = greedy_update(&z, &chain.policies[t])?;
        if updated.max_abs_diff(&chain.policies[t]) > 0.0 {
            changed = true;
        }
        let after = z.contract(&updated, &[(0, 0), (1, 1)])?.as_scalar();
        returns.push(after);
        chain.policies[t] = updated;
        right = chain.step_right(&right, t)?;
    }
    Ok((returns, changed))
}

/// Optimises a single-agent policy with one backward greedy sweep, which is
/// guaranteed to reach the optimal policy for the given model.
pub fn optimize_sarl(
    spec: &FmdpSpec,
    model: &TransitionModel,
    policy: &PolicySet,
    p0: &InitialDistribution,
) -> Result<(PolicySet, SweepReport)> {
    if spec.n_agents != 1 {
        return Err(Error::Config("optimize_sarl requires a single agent".into()));
    }
    let mut chain = Chain::from_inputs(spec, model, policy, p0)?;
    let (returns, _) = sweep_backward(&mut chain)?;
    let site_order = (1..=spec.horizon).rev().map(|t| (t, None)).collect();
    let report = SweepReport {
        site_order,
        returns_after_each_update: returns,
        converged: true,
        n_sweeps: 1,
    };
    Ok((PolicySet::Sarl(chain.policies), report))
}

/// Which policy representation a two-agent optimisation works on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MarlMode {
    /// One joint tensor per timestep; greedy over the joint action pair.
    Joint,
    /// Per-agent factors; two backward sweeps, visiting agents in numerical
    /// order within each timestep on the first sweep and in reverse order on
    /// the second.
    PerAgent,
}

/// Optimises a two-agent policy set.
pub fn optimize_marl(
    spec: &FmdpSpec,
    model: &TransitionModel,
    policies: &PolicySet,
    p0: &InitialDistribution,
    mode: MarlMode,
) -> Result<(PolicySet, SweepReport)> {
    if spec.n_agents != 2 {
        return Err(Error::Config("optimize_marl requires two agents".into()));
    }
    let (ns, na) = (spec.n_states, spec.n_actions);
    match mode {
        MarlMode::Joint => {
            if !matches!(policies, PolicySet::Joint(_)) {
                return Err(Error::Config("joint mode requires joint policies".into()));
            }
            let mut chain = Chain::from_inputs(spec, model, policies, p0)?;
            let (returns, _) = sweep_backward(&mut chain)?;
            let unfused = chain
                .policies
                .into_iter()
                .map(|p| p.reshape(&[na, na, ns, ns]))
                .collect::<Result<Vec<_>>>()?;
            let report = SweepReport {
                site_order: (1..=spec.horizon).rev().map(|t| (t, None)).collect(),
                returns_after_each_update: returns,
                converged: true,
                n_sweeps: 1,
            };
            Ok((PolicySet::Joint(unfused), report))
        }
        MarlMode::PerAgent => {
            let mut ps = match policies {
                PolicySet::PerAgent(ps) => ps.clone(),
                _ => {
                    return Err(Error::Config(
                        "per-agent mode requires per-agent policies".into(),
                    ))
                }
            };
            let mut site_order = Vec::new();
            let mut returns = Vec::new();
            let mut last_sweep_changed = false;
            for sweep in 0..2 {
                last_sweep_changed = false;
                for t in (1..=spec.horizon).rev() {
                    let agents: [usize; 2] = if sweep == 0 { [1, 2] } else { [2, 1] };
                    for agent in agents {
                        let current = PolicySet::PerAgent(ps.clone());
                        let env = environment_tensor(spec, model, &current, p0, t, Some(agent))?;
                        let own = &ps[t - 1][agent - 1];
                        let updated = greedy_update(&env.z, own)?;
                        if updated.max_abs_diff(own) > 0.0 {
                            last_sweep_changed = true;
                        }
                        let after = env
                            .z
                            .contract(&updated, &[(0, 0), (1, 1), (2, 2)])?
                            .as_scalar();
                        ps[t - 1][agent - 1] = updated;
                        site_order.push((t, Some(agent)));
                        returns.push(after);
                    }
                }
            }
            let report = SweepReport {
                site_order,
                returns_after_each_update: returns,
                converged: !last_sweep_changed,
                n_sweeps: 2,
            };
            Ok((PolicySet::PerAgent(ps), report))
        }
    }
}

/// Convenience wrapper evaluating the expected return of a candidate policy.
pub fn evaluate(
    spec: &FmdpSpec,
    model: &TransitionModel,
    policy: &PolicySet,
    p0: &InitialDistribution,
) -> Result<f64> {
    expected_return(spec, model, policy, p0)
}
