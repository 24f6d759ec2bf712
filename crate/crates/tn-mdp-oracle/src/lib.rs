//! Independent brute-force references used only by tests: exhaustive
//! trajectory enumeration for the expected return and exhaustive
//! deterministic-policy search for optimality.
//!
//! Nothing here touches the tensor contraction machinery — values are
//! accumulated with plain nested loops so the main library can be checked
//! against a genuinely separate implementation. This crate is compiled
//! separately and the main library does not depend on it.

pub mod instances;

use thiserror::Error;
use tn_mdp::fmdp::{FmdpSpec, InitialDistribution, PolicySet, TransitionModel};
use tn_mdp::tensor::DenseTensor;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("instance too large: {terms} terms exceeds limit {limit}")]
    InstanceTooLarge { terms: u128, limit: u128 },
    #[error("unsupported instance: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, OracleError>;

/// Outcome of a brute-force enumeration.
///
/// `n_terms` is the analytic count of enumerated objects: complete
/// trajectories for [`oracle_expected_return`], deterministic policies for
/// [`oracle_optimal_policy`]. `best_policy_return` is filled only by the
/// policy search.
#[derive(Clone, Copy, Debug)]
pub struct OracleResult {
    pub expected_return: f64,
    pub best_policy_return: Option<f64>,
    pub n_terms: u128,
}

/// Ceiling on enumerated trajectories.
pub const MAX_TRAJECTORY_TERMS: u128 = 10_000_000;
/// Ceiling on enumerated deterministic policies.
pub const MAX_POLICY_TERMS: u128 = 1 << 18;

fn trajectory_count(spec: &FmdpSpec) -> u128 {
    let ns = spec.n_states as u128;
    let na = spec.n_actions as u128;
    let nr = spec.n_rewards as u128;
    let agents = spec.n_agents as u32;
    let per_step = na.pow(agents) * ns.pow(agents) * nr.pow(agents);
    ns.pow(agents) * per_step.pow(spec.horizon as u32)
}

/// Probability of joint action `(a1, a2)` in joint state `(s1, s2)` under
/// any two-agent policy representation.
fn joint_action_prob(
    policy: &PolicySet,
    t: usize,
    a1: usize,
    a2: usize,
    s1: usize,
    s2: usize,
) -> f64 {
    match policy {
        PolicySet::Joint(ps) => ps[t].get(&[a1, a2, s1, s2]),
        PolicySet::PerAgent(ps) => {
            ps[t][0].get(&[a1, s1, s2]) * ps[t][1].get(&[a2, s1, s2])
        }
        PolicySet::Sarl(_) => unreachable!("checked by caller"),
    }
}

/// Expected return by exhaustive enumeration of every trajectory
/// `(s_0, a_1, s_1, r_1, …, a_T, s_T, r_T)`, summing probability times
/// accumulated reward.
pub fn oracle_expected_return(
    spec: &FmdpSpec,
    model: &TransitionModel,
    policy: &PolicySet,
    p0: &InitialDistribution,
) -> Result<OracleResult> {
    let terms = trajectory_count(spec);
    if terms > MAX_TRAJECTORY_TERMS {
        return Err(OracleError::InstanceTooLarge {
            terms,
            limit: MAX_TRAJECTORY_TERMS,
        });
    }
    let value = match spec.n_agents {
        1 => {
            let mut total = 0.0;
            for s0 in 0..spec.n_states {
                let p = p0.p0.get(&[s0]);
                if p != 0.0 {
                    total += p * sarl_tail(spec, model, policy, 0, s0, 0.0);
                }
            }
            total
        }
        2 => {
            let mut total = 0.0;
            for s1 in 0..spec.n_states {
                for s2 in 0..spec.n_states {
                    let p = p0.p0.get(&[s1, s2]);
                    if p != 0.0 {
                        total += p * marl_tail(spec, model, policy, 0, s1, s2, 0.0);
                    }
                }
            }
            total
        }
        n => return Err(OracleError::Unsupported(format!("{n} agents"))),
    };
    Ok(OracleResult {
        expected_return: value,
        best_policy_return: None,
        n_terms: terms,
    })
}

/// Σ over trajectory suffixes from timestep `t` (0-based) in state `s` of
/// P(suffix)·(g + rewards collected in the suffix).
fn sarl_tail(
    spec: &FmdpSpec,
    model: &TransitionModel,
    policy: &PolicySet,
    t: usize,
    s: usize,
    g: f64,
) -> f64 {
    if t == spec.horizon {
        return g;
    }
    let pi = match policy {
        PolicySet::Sarl(ps) => &ps[t],
        _ => unreachable!("checked by caller"),
    };
    let m = &model.tensors[t];
    let mut total = 0.0;
    for a in 0..spec.n_actions {
        let pa = pi.get(&[a, s]);
        if pa == 0.0 {
            continue;
        }
        for sp in 0..spec.n_states {
            for r in 0..spec.n_rewards {
                let pm = m.get(&[sp, r, s, a]);
                if pm == 0.0 {
                    continue;
                }
                total += pa
                    * pm
                    * sarl_tail(spec, model, policy, t + 1, sp, g + spec.reward_values[r]);
            }
        }
    }
    total
}

fn marl_tail(
    spec: &FmdpSpec,
    model: &TransitionModel,
    policy: &PolicySet,
    t: usize,
    s1: usize,
    s2: usize,
    g: f64,
) -> f64 {
    if t == spec.horizon {
        return g;
    }
    let m = &model.tensors[t];
    let (ns, na, nr) = (spec.n_states, spec.n_actions, spec.n_rewards);
    let mut total = 0.0;
    for a1 in 0..na {
        for a2 in 0..na {
            let pa = joint_action_prob(policy, t, a1, a2, s1, s2);
            if pa == 0.0 {
                continue;
            }
            for sp1 in 0..ns {
                for sp2 in 0..ns {
                    for r1 in 0..nr {
                        for r2 in 0..nr {
                            let pm = m.get(&[sp1, sp2, r1, r2, s1, s2, a1, a2]);
                            if pm == 0.0 {
                                continue;
                            }
                            let reward = spec.reward_values[r1] + spec.reward_values[r2];
                            total += pa
                                * pm
                                * marl_tail(spec, model, policy, t + 1, sp1, sp2, g + reward);
                        }
                    }
                }
            }
        }
    }
    total
}

/// Expected return of one deterministic policy by forward propagation of the
/// exact state distribution (plain loops, no tensor machinery).
///
/// `choice[t * n_states + s]` is the action taken in state `s` at timestep
/// `t + 1`.
fn deterministic_value(
    spec: &FmdpSpec,
    model: &TransitionModel,
    p0: &InitialDistribution,
    choice: &[usize],
) -> f64 {
    let (ns, nr) = (spec.n_states, spec.n_rewards);
    let mut dist: Vec<f64> = (0..ns).map(|s| p0.p0.get(&[s])).collect();
    let mut total = 0.0;
    for t in 0..spec.horizon {
        let m = &model.tensors[t];
        let mut next = vec![0.0; ns];
        for s in 0..ns {
            let p = dist[s];
            if p == 0.0 {
                continue;
            }
            let a = choice[t * ns + s];
            for sp in 0..ns {
                for r in 0..nr {
                    let pm = m.get(&[sp, r, s, a]);
                    if pm == 0.0 {
                        continue;
                    }
                    next[sp] += p * pm;
                    total += p * pm * spec.reward_values[r];
                }
            }
        }
        dist = next;
    }
    total
}

/// Exhaustive maximum over every deterministic single-agent policy.
///
/// Searching deterministic policies suffices for a finite-horizon MDP. Ties
/// resolve to the first policy in enumeration order (action indices counted
/// up like digits, timestep-major).
pub fn oracle_optimal_policy(
    spec: &FmdpSpec,
    model: &TransitionModel,
    p0: &InitialDistribution,
) -> Result<(PolicySet, OracleResult)> {
    if spec.n_agents != 1 {
        return Err(OracleError::Unsupported(
            "policy search is single-agent".into(),
        ));
    }
    let slots = spec.n_states * spec.horizon;
    let count = (spec.n_actions as u128)
        .checked_pow(slots as u32)
        .unwrap_or(u128::MAX);
    if count > MAX_POLICY_TERMS {
        return Err(OracleError::InstanceTooLarge {
            terms: count,
            limit: MAX_POLICY_TERMS,
        });
    }
    let mut choice = vec![0usize; slots];
    let mut best_choice = choice.clone();
    let mut best = f64::NEG_INFINITY;
    loop {
        let v = deterministic_value(spec, model, p0, &choice);
        if v > best {
            best = v;
            best_choice.copy_from_slice(&choice);
        }
        // Increment the action assignment like a base-N_A number.
        let mut pos = slots;
        loop {
            if pos == 0 {
                break;
            }
            pos -= 1;
            choice[pos] += 1;
            if choice[pos] < spec.n_actions {
                break;
            }
            choice[pos] = 0;
        }
        if choice.iter().all(|&c| c == 0) {
            break;
        }
    }
    let policies: Vec<DenseTensor> = (0..spec.horizon)
        .map(|t| {
            DenseTensor::from_fn(&[spec.n_actions, spec.n_states], |idx| {
                if best_choice[t * spec.n_states + idx[1]] == idx[0] {
                    1.0
                } else {
                    0.0
                }
            })
        })
        .collect();
    Ok((
        PolicySet::Sarl(policies),
        OracleResult {
            expected_return: best,
            best_policy_return: Some(best),
            n_terms: count,
        },
    ))
}
