//! Exact evaluation of the full network — initial distribution, policies,
//! transition tensors and the reward-summing operator chain — and the
//! single-site environment tensors used by policy optimisation.
//!
//! Everything runs over a time-ordered boundary sweep. The boundary carries
//! axes `(state, bond)`; each step folds in one policy, one transition tensor
//! and one operator site, so intermediate rank never exceeds 4 in the fused
//! chain. Two-agent problems are evaluated by fusing the joint axes into
//! single-agent-shaped indices first, which is exact (no truncation).

use crate::error::{Error, Result};
use crate::fmdp::{copy_tensor, FmdpSpec, InitialDistribution, PolicySet, TransitionModel};
use crate::mpo::build_sarl_mpo;
use crate::tensor::DenseTensor;

/// The derivative of the network's expected return with respect to one policy
/// tensor: everything except the policy at `(timestep, agent)`, contracted.
///
/// Contracting `z` with that policy over all shared axes recovers the
/// expected return of the whole network. Axes are `(a, s)` for single-agent,
/// `(a1, a2, s1, s2)` for a joint site, and `(a_i, s1, s2)` for one agent's
/// site in per-agent form.
#[derive(Clone, Debug)]
pub struct EnvironmentTensor {
    pub z: DenseTensor,
    pub timestep: usize,
    pub agent: Option<usize>,
}

/// A fused, uniformly-shaped chain: per-timestep transitions `(s', r, s, a)`,
/// policies `(a, s)`, operator sites `(bond_in, bond_out, r)` and the initial
/// state vector. Two-agent inputs arrive here with their joint axes reshaped
/// into single fused indices.
pub(crate) struct Chain {
    pub transitions: Vec<DenseTensor>,
    pub policies: Vec<DenseTensor>,
    pub sites: Vec<DenseTensor>,
    pub p0: DenseTensor,
    pub n_states: usize,
}

fn check_shape(tensor: &DenseTensor, expect: &[usize], name: &str) -> Result<()> {
    if tensor.shape() != expect {
        return Err(Error::DimensionMismatch {
            tensor: name.to_string(),
            detail: format!("shape {:?}, expected {:?}", tensor.shape(), expect),
        });
    }
    Ok(())
}

/// Fused reward values for two agents: entry `r1 * n + r2` is
/// `values[r1] + values[r2]`.
pub fn fused_reward_values(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut out = Vec::with_capacity(n * n);
    for &v1 in values {
        for &v2 in values {
            out.push(v1 + v2);
        }
    }
    out
}

/// The per-agent policies multiplied into one joint tensor
/// `(a1, a2, s1, s2)`.
pub fn joint_from_per_agent(p1: &DenseTensor, p2: &DenseTensor) -> DenseTensor {
    let (na, ns) = (p1.shape()[0], p1.shape()[1]);
    DenseTensor::from_fn(&[na, na, ns, ns], |idx| {
        p1.get(&[idx[0], idx[2], idx[3]]) * p2.get(&[idx[1], idx[2], idx[3]])
    })
}

impl Chain {
    pub fn from_inputs(
        spec: &FmdpSpec,
        model: &TransitionModel,
        policy: &PolicySet,
        p0: &InitialDistribution,
    ) -> Result<Self> {
        let t_count = model.horizon();
        if t_count != spec.horizon {
            return Err(Error::DimensionMismatch {
                tensor: "transition model".into(),
                detail: format!("{} tensors for horizon {}", t_count, spec.horizon),
            });
        }
        if policy.horizon() != spec.horizon {
            return Err(Error::DimensionMismatch {
                tensor: "policy set".into(),
                detail: format!("{} tensors for horizon {}", policy.horizon(), spec.horizon),
            });
        }
        let (ns, na, nr) = (spec.n_states, spec.n_actions, spec.n_rewards);
        match spec.n_agents {
            1 => {
                for (i, t) in model.tensors.iter().enumerate() {
                    check_shape(t, &[ns, nr, ns, na], &format!("transition[t={}]", i + 1))?;
                }
                let policies = match policy {
                    PolicySet::Sarl(ps) => {
                        for (i, p) in ps.iter().enumerate() {
                            check_shape(p, &[na, ns], &format!("policy[t={}]", i + 1))?;
                        }
                        ps.clone()
                    }
                    _ => {
                        return Err(Error::DimensionMismatch {
                            tensor: "policy set".into(),
                            detail: "single-agent spec requires single-agent policies".into(),
                        })
                    }
                };
                check_shape(&p0.p0, &[ns], "p0")?;
                let sites = build_sarl_mpo(spec.horizon, &spec.reward_values).interior_form();
                Ok(Chain {
                    transitions: model.tensors.clone(),
                    policies,
                    sites,
                    p0: p0.p0.clone(),
                    n_states: ns,
                })
            }
            2 => {
                let (fs, fa, fr) = (ns * ns, na * na, nr * nr);
                let mut transitions = Vec::with_capacity(t_count);
                for (i, t) in model.tensors.iter().enumerate() {
                    check_shape(
                        t,
                        &[ns, ns, nr, nr, ns, ns, na, na],
                        &format!("transition[t={}]", i + 1),
                    )?;
                    // Joint axis groups (s'1 s'2 | r1 r2 | s1 s2 | a1 a2) are
                    // adjacent, so fusing is a pure reshape.
                    transitions.push(t.reshape(&[fs, fr, fs, fa])?);
                }
                let policies = match policy {
                    PolicySet::Joint(ps) => {
                        let mut out = Vec::with_capacity(ps.len());
                        for (i, p) in ps.iter().enumerate() {
                            check_shape(p, &[na, na, ns, ns], &format!("policy[t={}]", i + 1))?;
                            out.push(p.reshape(&[fa, fs])?);
                        }
                        out
                    }
                    PolicySet::PerAgent(ps) => {
                        let mut out = Vec::with_capacity(ps.len());
                        for (i, [p1, p2]) in ps.iter().enumerate() {
                            check_shape(p1, &[na, ns, ns], &format!("policy[t={},agent=1]", i + 1))?;
                            check_shape(p2, &[na, ns, ns], &format!("policy[t={},agent=2]", i + 1))?;
                            out.push(joint_from_per_agent(p1, p2).reshape(&[fa, fs])?);
                        }
                        out
                    }
                    PolicySet::Sarl(_) => {
                        return Err(Error::DimensionMismatch {
                            tensor: "policy set".into(),
                            detail: "two-agent spec requires joint or per-agent policies".into(),
                        })
                    }
                };
                check_shape(&p0.p0, &[ns, ns], "p0")?;
                let fused_rv = fused_reward_values(&spec.reward_values);
                let sites = build_sarl_mpo(spec.horizon, &fused_rv).interior_form();
                Ok(Chain {
                    transitions,
                    policies,
                    sites,
                    p0: p0.p0.reshape(&[fs])?,
                    n_states: fs,
                })
            }
            n => Err(Error::Config(format!("unsupported agent count {n}"))),
        }
    }

    pub fn horizon(&self) -> usize {
        self.transitions.len()
    }

    /// Replaces every operator site with an all-ones `(1, 1, r)` site, so the
    /// chain contracts to the total probability instead of the return.
    pub fn probability_only(mut self) -> Self {
        for site in &mut self.sites {
            let nr = site.shape()[2];
            *site = DenseTensor::from_fn(&[1, 1, nr], |_| 1.0);
        }
        self
    }

    /// Boundary left of site 1: the initial distribution with a unit bond.
    pub fn left_init(&self) -> DenseTensor {
        self.p0
            .reshape(&[self.n_states, 1])
            .expect("attach unit bond")
    }

    /// Boundary right of site T: flat over the final state, unit bond.
    pub fn right_init(&self) -> DenseTensor {
        let bond = self.sites[self.horizon() - 1].shape()[1];
        DenseTensor::from_fn(&[self.n_states, bond], |_| 1.0)
    }

    /// Folds timestep `t` (0-based) into a left boundary `(state, bond)`.
    pub fn step_left(&self, boundary: &DenseTensor, t: usize) -> Result<DenseTensor> {
        let pi = &self.policies[t];
        let m = &self.transitions[t];
        let w = &self.sites[t];
        // Duplicate the state index so boundary and policy share it:
        // joint[s, b, a] = boundary[s, b] * pi[a, s].
        let delta = copy_tensor(self.n_states, 3);
        let spread = delta.contract(boundary, &[(0, 0)])?; // (s, s, b)
        let joint = spread.contract(pi, &[(0, 1)])?; // (s, b, a)
        let stepped = joint.contract(m, &[(0, 2), (2, 3)])?; // (b, s', r)
        let out = stepped.contract(w, &[(0, 0), (2, 2)])?; // (s', b_out)
        Ok(out)
    }

    /// Folds timestep `t` (0-based) into a right boundary `(state, bond)`.
    pub fn step_right(&self, boundary: &DenseTensor, t: usize) -> Result<DenseTensor> {
        let pi = &self.policies[t];
        let m = &self.transitions[t];
        let w = &self.sites[t];
        let absorbed = m.contract(boundary, &[(0, 0)])?; // (r, s, a, b_out)
        let with_site = absorbed.contract(w, &[(0, 2), (3, 1)])?; // (s, a, b_in)
        // Sum the action against the policy while keeping the state open.
        let delta = copy_tensor(self.n_states, 3);
        let spread = with_site.contract(&delta, &[(0, 0)])?; // (a, b_in, s, s)
        let closed = spread.contract(pi, &[(0, 0), (2, 1)])?; // (b_in, s)
        closed.permute(&[1, 0])
    }

    /// Environment at 0-based timestep `t` from its two boundaries: the
    /// network derivative with respect to `policies[t]`, axes `(a, s)`.
    pub fn environment(
        &self,
        left: &DenseTensor,
        right: &DenseTensor,
        t: usize,
    ) -> Result<DenseTensor> {
        let m = &self.transitions[t];
        let w = &self.sites[t];
        let absorbed = m.contract(right, &[(0, 0)])?; // (r, s, a, b_out)
        let with_site = absorbed.contract(w, &[(0, 2), (3, 1)])?; // (s, a, b_in)
        let delta = copy_tensor(self.n_states, 3);
        let spread = with_site.contract(&delta, &[(0, 0)])?; // (a, b_in, s, s)
        spread.contract(left, &[(2, 0), (1, 1)]) // (a, s)
    }

    /// Left boundaries `L[t]` for all `t = 0..=T`: `L[t]` has timesteps
    /// `1..=t` folded in.
    pub fn left_boundaries(&self) -> Result<Vec<DenseTensor>> {
        let mut out = Vec::with_capacity(self.horizon() + 1);
        out.push(self.left_init());
        for t in 0..self.horizon() {
            let next = self.step_left(&out[t], t)?;
            out.push(next);
        }
        Ok(out)
    }

    /// Right boundaries `R[t]` for all `t = 0..=T`: `R[t]` has timesteps
    /// `t+1..=T` folded in.
    #[cfg(test)]
    pub fn right_boundaries(&self) -> Result<Vec<DenseTensor>> {
        let horizon = self.horizon();
        let mut out = vec![self.right_init(); horizon + 1];
        for t in (0..horizon).rev() {
            out[t] = self.step_right(&out[t + 1], t)?;
        }
        Ok(out)
    }

    /// Full left-to-right contraction.
    pub fn evaluate(&self) -> Result<f64> {
        let mut boundary = self.left_init();
        for t in 0..self.horizon() {
            boundary = self.step_left(&boundary, t)?;
        }
        Ok(boundary.data().iter().sum())
    }

    /// Full right-to-left contraction; equals [`evaluate`] up to roundoff.
    ///
    /// [`evaluate`]: Chain::evaluate
    #[cfg(test)]
    pub fn evaluate_reverse(&self) -> Result<f64> {
        let mut boundary = self.right_init();
        for t in (0..self.horizon()).rev() {
            boundary = self.step_right(&boundary, t)?;
        }
        let closed = boundary.contract(&self.left_init(), &[(0, 0), (1, 1)])?;
        Ok(closed.as_scalar())
    }
}

/// Expected return `E(G)` of the network: algebraically equal to the sum over
/// all trajectories of probability times summed reward.
pub fn expected_return(
    spec: &FmdpSpec,
    model: &TransitionModel,
    policy: &PolicySet,
    p0: &InitialDistribution,
) -> Result<f64> {
    Chain::from_inputs(spec, model, policy, p0)?.evaluate()
}

/// Contraction of the probability-only network (rewards marginalised, no
/// return operator). Equals 1 for any valid model and policy.
pub fn total_probability(
    spec: &FmdpSpec,
    model: &TransitionModel,
    policy: &PolicySet,
    p0: &InitialDistribution,
) -> Result<f64> {
    Chain::from_inputs(spec, model, policy, p0)?
        .probability_only()
        .evaluate()
}

/// Environment tensor at 1-based timestep `t`. For two-agent inputs: with
/// `agent == None` the joint environment `(a1, a2, s1, s2)` is returned; with
/// `agent == Some(i)` the other agent's policy (per-agent sets only) is
/// absorbed, leaving `(a_i, s1, s2)`.
pub fn environment_tensor(
    spec: &FmdpSpec,
    model: &TransitionModel,
    policy: &PolicySet,
    p0: &InitialDistribution,
    t: usize,
    agent: Option<usize>,
) -> Result<EnvironmentTensor> {
    if t < 1 || t > spec.horizon {
        return Err(Error::TimestepOutOfRange {
            t,
            horizon: spec.horizon,
        });
    }
    let chain = Chain::from_inputs(spec, model, policy, p0)?;
    let mut left = chain.left_init();
    for step in 0..t - 1 {
        left = chain.step_left(&left, step)?;
    }
    let mut right = chain.right_init();
    for step in (t..chain.horizon()).rev() {
        right = chain.step_right(&right, step)?;
    }
    let z_fused = chain.environment(&left, &right, t - 1)?;
    let (ns, na) = (spec.n_states, spec.n_actions);
    let z = match (spec.n_agents, agent) {
        (1, None) => z_fused,
        (2, None) => z_fused.reshape(&[na, na, ns, ns])?,
        (2, Some(i)) if i == 1 || i == 2 => {
            let other = match policy {
                PolicySet::PerAgent(ps) => &ps[t - 1][2 - i],
                _ => {
                    return Err(Error::Config(
                        "per-agent environment requires per-agent policies".into(),
                    ))
                }
            };
            let joint = z_fused.reshape(&[na, na, ns, ns])?;
            // z_i[a_i, s1, s2] = sum_{a_other} z[a1, a2, s1, s2] *
            // pi_other(a_other | s1, s2); the state axes stay shared.
            DenseTensor::from_fn(&[na, ns, ns], |idx| {
                let (ai, s1, s2) = (idx[0], idx[1], idx[2]);
                (0..na)
                    .map(|aj| {
                        let joint_idx = if i == 1 { [ai, aj, s1, s2] } else { [aj, ai, s1, s2] };
                        joint.get(&joint_idx) * other.get(&[aj, s1, s2])
                    })
                    .sum()
            })
        }
        (1, Some(_)) => {
            return Err(Error::Config(
                "agent id given for a single-agent problem".into(),
            ))
        }
        (_, Some(i)) => return Err(Error::Config(format!("unknown agent {i}"))),
        (n, None) => return Err(Error::Config(format!("unsupported agent count {n}"))),
    };
    Ok(EnvironmentTensor { z, timestep: t, agent })
}
