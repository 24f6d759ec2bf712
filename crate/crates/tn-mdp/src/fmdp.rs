//! Finite Markov decision process data model: transition tensors, policies,
//! initial distributions, and the copy and flat tensors that wire them into a
//! network.
//!
//! All model types are immutable after construction and serialize to JSON as
//! shapes plus flat row-major data arrays.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

/// Absolute tolerance for probability normalisation checks.
pub const PROB_TOL: f64 = 1e-9;

/// Dimensions and index maps of a finite MDP.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FmdpSpec {
    pub n_states: usize,
    pub n_actions: usize,
    pub n_rewards: usize,
    pub horizon: usize,
    pub n_agents: usize,
    /// The set of reward values, sorted ascending; a reward index is a
    /// position in this list.
    pub reward_values: Vec<f64>,
    /// Semantic value of state index 0 (the walker uses -T).
    pub state_offset: i64,
}

impl FmdpSpec {
    pub fn validate_dims(&self) -> Result<()> {
        if self.n_states == 0 || self.n_actions == 0 || self.n_rewards == 0 || self.horizon == 0 {
            return Err(Error::Config("all dimensions must be at least 1".into()));
        }
        if !(self.n_agents == 1 || self.n_agents == 2) {
            return Err(Error::Config("n_agents must be 1 or 2".into()));
        }
        if self.reward_values.len() != self.n_rewards {
            return Err(Error::Config(format!(
                "reward_values has {} entries, expected {}",
                self.reward_values.len(),
                self.n_rewards
            )));
        }
        for w in self.reward_values.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::Config(
                    "reward_values must be strictly ascending (distinct)".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn reward_index(&self, r: f64) -> Option<usize> {
        self.reward_values.iter().position(|&v| v == r)
    }

    pub fn state_index(&self, s: i64) -> Option<usize> {
        let idx = s - self.state_offset;
        if idx >= 0 && (idx as usize) < self.n_states {
            Some(idx as usize)
        } else {
            None
        }
    }

    pub fn state_value(&self, idx: usize) -> i64 {
        idx as i64 + self.state_offset
    }
}

/// A constraint violated by a model tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    /// Which tensor (e.g. "transition[t=3]").
    pub tensor: String,
    /// The conditioning index, or the entry index for range violations.
    pub index: String,
    /// The observed sum (or entry value).
    pub observed: f64,
    pub kind: ViolationKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    NotNormalized,
    OutOfRange,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.kind {
            ViolationKind::NotNormalized => write!(
                f,
                "{} at {}: probabilities sum to {:.12}",
                self.tensor, self.index, self.observed
            ),
            ViolationKind::OutOfRange => write!(
                f,
                "{} at {}: entry {:.12} outside [0, 1]",
                self.tensor, self.index, self.observed
            ),
        }
    }
}

/// Anything that can report its probability-invariant violations.
pub trait Validate {
    fn validate(&self) -> Vec<Violation>;

    /// Errors out if any violation is present.
    fn ensure_valid(&self) -> Result<()> {
        let vs = self.validate();
        match vs.first() {
            None => Ok(()),
            Some(first) => Err(Error::Validation {
                count: vs.len(),
                first: first.to_string(),
            }),
        }
    }
}

/// Checks that for every conditioning multi-index (trailing `cond_axes` axes)
/// the sum over the leading outcome axes equals one, and that every entry is
/// a probability.
fn check_conditional(tensor: &DenseTensor, cond_axes: usize, name: &str) -> Vec<Violation> {
    let rank = tensor.rank();
    debug_assert!(cond_axes < rank);
    let outcome: usize = tensor.shape()[..rank - cond_axes].iter().product();
    let cond_shape = &tensor.shape()[rank - cond_axes..];
    let cond: usize = cond_shape.iter().product();
    let mut violations = Vec::new();
    // Outcome axes lead, so entries with the same conditioning index are
    // strided by `cond` in the flat layout.
    let mut sums = vec![0.0; cond];
    for (flat, &v) in tensor.data().iter().enumerate() {
        if !(0.0..=1.0 + PROB_TOL).contains(&v) {
            violations.push(Violation {
                tensor: name.to_string(),
                index: format!("flat {flat}"),
                observed: v,
                kind: ViolationKind::OutOfRange,
            });
        }
        sums[flat % cond] += v;
    }
    let _ = outcome;
    for (c, &sum) in sums.iter().enumerate() {
        if (sum - 1.0).abs() > PROB_TOL {
            let mut idx = Vec::with_capacity(cond_axes);
            let mut rem = c;
            for &d in cond_shape.iter().rev() {
                idx.push(rem % d);
                rem /= d;
            }
            idx.reverse();
            violations.push(Violation {
                tensor: name.to_string(),
                index: format!("{idx:?}"),
                observed: sum,
                kind: ViolationKind::NotNormalized,
            });
        }
    }
    violations
}

/// Per-timestep transition tensors.
///
/// Single-agent tensors are rank 4 with axes `(s_t, r_t, s_{t-1}, a_{t-1})`;
/// two-agent joint tensors are rank 8 with axes
/// `(s1_t, s2_t, r1_t, r2_t, s1_{t-1}, s2_{t-1}, a1_{t-1}, a2_{t-1})`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransitionModel {
    pub tensors: Vec<DenseTensor>,
}

impl TransitionModel {
    pub fn horizon(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_joint(&self) -> bool {
        self.tensors.first().map(|t| t.rank() == 8).unwrap_or(false)
    }
}

impl Validate for TransitionModel {
    fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (i, tensor) in self.tensors.iter().enumerate() {
            let cond_axes = match tensor.rank() {
                4 => 2,
                8 => 4,
                r => {
                    out.push(Violation {
                        tensor: format!("transition[t={}]", i + 1),
                        index: format!("rank {r}"),
                        observed: r as f64,
                        kind: ViolationKind::OutOfRange,
                    });
                    continue;
                }
            };
            out.extend(check_conditional(
                tensor,
                cond_axes,
                &format!("transition[t={}]", i + 1),
            ));
        }
        out
    }
}

/// Per-timestep policies.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum PolicySet {
    /// One tensor per timestep with axes `(a_{t-1}, s_{t-1})`.
    Sarl(Vec<DenseTensor>),
    /// One joint tensor per timestep with axes `(a1, a2, s1, s2)`.
    Joint(Vec<DenseTensor>),
    /// One tensor per agent per timestep, each with axes `(a_i, s1, s2)`.
    PerAgent(Vec<[DenseTensor; 2]>),
}

impl PolicySet {
    pub fn horizon(&self) -> usize {
        match self {
            PolicySet::Sarl(ts) | PolicySet::Joint(ts) => ts.len(),
            PolicySet::PerAgent(ts) => ts.len(),
        }
    }

    /// The uniformly random single-agent policy pi_t(a|s) = 1/N_A.
    pub fn uniform_sarl(spec: &FmdpSpec) -> Self {
        let p = 1.0 / spec.n_actions as f64;
        let t = DenseTensor::from_fn(&[spec.n_actions, spec.n_states], |_| p)
            .with_labels(&["action", "state"]);
        PolicySet::Sarl(vec![t; spec.horizon])
    }

    /// The uniformly random joint two-agent policy, 1/N_A^2 everywhere.
    pub fn uniform_joint(spec: &FmdpSpec) -> Self {
        let p = 1.0 / (spec.n_actions * spec.n_actions) as f64;
        let t = DenseTensor::from_fn(
            &[spec.n_actions, spec.n_actions, spec.n_states, spec.n_states],
            |_| p,
        );
        PolicySet::Joint(vec![t; spec.horizon])
    }

    /// Uniform per-agent two-agent policies, 1/N_A per agent.
    pub fn uniform_per_agent(spec: &FmdpSpec) -> Self {
        let p = 1.0 / spec.n_actions as f64;
        let t = DenseTensor::from_fn(&[spec.n_actions, spec.n_states, spec.n_states], |_| p);
        PolicySet::PerAgent(vec![[t.clone(), t]; spec.horizon])
    }
}

impl Validate for PolicySet {
    fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        match self {
            PolicySet::Sarl(ts) => {
                for (i, t) in ts.iter().enumerate() {
                    out.extend(check_conditional(t, 1, &format!("policy[t={}]", i + 1)));
                }
            }
            PolicySet::Joint(ts) => {
                for (i, t) in ts.iter().enumerate() {
                    out.extend(check_conditional(t, 2, &format!("policy[t={}]", i + 1)));
                }
            }
            PolicySet::PerAgent(ts) => {
                for (i, pair) in ts.iter().enumerate() {
                    for (agent, t) in pair.iter().enumerate() {
                        out.extend(check_conditional(
                            t,
                            2,
                            &format!("policy[t={},agent={}]", i + 1, agent + 1),
                        ));
                    }
                }
            }
        }
        out
    }
}

/// Distribution over initial states: rank 1 for a single agent, rank 2 joint
/// for two agents.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InitialDistribution {
    pub p0: DenseTensor,
}

impl InitialDistribution {
    /// Point mass on a single state index.
    pub fn point(n_states: usize, index: usize) -> Self {
        let p0 = DenseTensor::from_fn(&[n_states], |idx| if idx[0] == index { 1.0 } else { 0.0 })
            .with_labels(&["state"]);
        Self { p0 }
    }

    /// Joint point mass on a pair of state indices.
    pub fn point_joint(n_states: usize, i1: usize, i2: usize) -> Self {
        let p0 = DenseTensor::from_fn(&[n_states, n_states], |idx| {
            if idx[0] == i1 && idx[1] == i2 {
                1.0
            } else {
                0.0
            }
        });
        Self { p0 }
    }
}

impl Validate for InitialDistribution {
    fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut sum = 0.0;
        for (flat, &v) in self.p0.data().iter().enumerate() {
            if !(0.0..=1.0 + PROB_TOL).contains(&v) {
                out.push(Violation {
                    tensor: "p0".into(),
                    index: format!("flat {flat}"),
                    observed: v,
                    kind: ViolationKind::OutOfRange,
                });
            }
            sum += v;
        }
        if (sum - 1.0).abs() > PROB_TOL {
            out.push(Violation {
                tensor: "p0".into(),
                index: "[]".into(),
                observed: sum,
                kind: ViolationKind::NotNormalized,
            });
        }
        out
    }
}

/// Copy tensor: a multidimensional identity array that duplicates an index.
/// Entry is 1 exactly when all indices coincide.
///
/// Panics if `rank < 2`.
pub fn copy_tensor(n: usize, rank: usize) -> DenseTensor {
    assert!(rank >= 2, "copy tensor needs rank >= 2");
    DenseTensor::from_fn(&vec![n; rank], |idx| {
        if idx.iter().all(|&i| i == idx[0]) {
            1.0
        } else {
            0.0
        }
    })
}

/// Flat tensor: a vector of ones. Contracting an axis with it marginalises
/// that axis.
pub fn flat(n: usize) -> DenseTensor {
    assert!(n >= 1);
    DenseTensor::from_fn(&[n], |_| 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_spec() -> FmdpSpec {
        FmdpSpec {
            n_states: 3,
            n_actions: 2,
            n_rewards: 2,
            horizon: 2,
            n_agents: 1,
            reward_values: vec![0.0, 1.0],
            state_offset: 0,
        }
    }

    #[test]
    fn copy_tensor_diagonal() {
        let c = copy_tensor(2, 3);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    let expect = if i == j && j == k { 1.0 } else { 0.0 };
                    assert_eq!(c.get(&[i, j, k]), expect);
                }
            }
        }
    }

    #[test]
    fn copy_tensor_rank_two_is_identity() {
        let c = copy_tensor(4, 2);
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(c.get(&[i, j]), if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn copy_tensor_preserves_total_mass() {
        // Feeding a distribution into one leg and marginalising the two
        // copies gives back mass one.
        let dist = DenseTensor::vector(&[0.2, 0.5, 0.3]);
        let copied = copy_tensor(3, 3).contract(&dist, &[(0, 0)]).unwrap();
        let ones = flat(3);
        let total = copied
            .contract(&ones, &[(0, 0)])
            .unwrap()
            .contract(&ones, &[(0, 0)])
            .unwrap();
        assert!((total.as_scalar() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn copy_tensor_marginalised_to_identity() {
        let c = copy_tensor(3, 4);
        let ones = flat(3);
        let m = c
            .contract(&ones, &[(3, 0)])
            .unwrap()
            .contract(&ones, &[(2, 0)])
            .unwrap();
        assert_eq!(m, copy_tensor(3, 2));
    }

    #[test]
    fn flat_is_ones() {
        assert_eq!(flat(3).data(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn flat_marginalises_distribution_to_one() {
        let p = DenseTensor::vector(&[0.25, 0.25, 0.5]);
        let out = flat(3).contract(&p, &[(0, 0)]).unwrap();
        assert!((out.as_scalar() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank3_marginalises_to_rank2() {
        // Summing the reward axis of a rank-3 transition recovers the plain
        // Markov matrix.
        let m3 = DenseTensor::from_fn(&[2, 2, 2], |idx| match (idx[0], idx[1], idx[2]) {
            (s1, r, _s0) => {
                if s1 == 0 {
                    if r == 0 {
                        0.3
                    } else {
                        0.4
                    }
                } else if r == 0 {
                    0.1
                } else {
                    0.2
                }
            }
        });
        let m2 = m3.contract(&flat(2), &[(1, 0)]).unwrap();
        assert!((m2.get(&[0, 0]) - 0.7).abs() < 1e-12);
        assert!((m2.get(&[1, 1]) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn uniform_policy_validates_clean() {
        let spec = tiny_spec();
        let pol = PolicySet::uniform_sarl(&spec);
        assert!(pol.validate().is_empty());
    }

    #[test]
    fn unnormalised_transition_slice_reports_sum() {
        // One (s, a) slice sums to 0.9.
        let mut t = DenseTensor::zeros(&[2, 1, 2, 1]);
        t.set(&[0, 0, 0, 0], 1.0);
        t.set(&[0, 0, 1, 0], 0.9);
        let model = TransitionModel { tensors: vec![t] };
        let vs = model.validate();
        assert_eq!(vs.len(), 1);
        assert_eq!(vs[0].kind, ViolationKind::NotNormalized);
        assert!((vs[0].observed - 0.9).abs() < 1e-12);
        assert!(vs[0].index.contains('1'));
    }

    #[test]
    fn uniform_model_validates_clean() {
        let spec = tiny_spec();
        let p = 1.0 / (spec.n_states * spec.n_rewards) as f64;
        let t = DenseTensor::from_fn(
            &[spec.n_states, spec.n_rewards, spec.n_states, spec.n_actions],
            |_| p,
        );
        let model = TransitionModel {
            tensors: vec![t; spec.horizon],
        };
        assert!(model.validate().is_empty());
    }

    #[test]
    fn valid_model_marginalises_to_ones() {
        let spec = tiny_spec();
        let p = 1.0 / (spec.n_states * spec.n_rewards) as f64;
        let t = DenseTensor::from_fn(
            &[spec.n_states, spec.n_rewards, spec.n_states, spec.n_actions],
            |_| p,
        );
        let marg = t
            .contract(&flat(spec.n_states), &[(0, 0)])
            .unwrap()
            .contract(&flat(spec.n_rewards), &[(0, 0)])
            .unwrap();
        for &v in marg.data() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn initial_distribution_point_mass() {
        let p0 = InitialDistribution::point(5, 2);
        assert!(p0.validate().is_empty());
        assert_eq!(p0.p0.get(&[2]), 1.0);
    }

    #[test]
    fn out_of_range_entry_is_reported() {
        let p0 = InitialDistribution {
            p0: DenseTensor::vector(&[1.5, -0.5]),
        };
        let vs = p0.validate();
        assert!(vs.iter().any(|v| v.kind == ViolationKind::OutOfRange));
    }
}
