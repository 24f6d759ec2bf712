//! Random valid FMDP instances for cross-checking the library against the
//! brute-force oracles. All draws are seeded (ChaCha8), so instance `k` of a
//! suite is identical on every run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tn_mdp::fmdp::{FmdpSpec, InitialDistribution, PolicySet, TransitionModel};
use tn_mdp::tensor::DenseTensor;

/// A complete randomly drawn problem: spec, transition model, a stochastic
/// policy and an initial distribution, all mutually consistent.
pub struct Instance {
    pub spec: FmdpSpec,
    pub model: TransitionModel,
    pub policy: PolicySet,
    pub p0: InitialDistribution,
}

/// Dimension bounds for random instance generation (inclusive).
#[derive(Clone, Copy, Debug)]
pub struct Bounds {
    pub max_states: usize,
    pub max_actions: usize,
    pub max_rewards: usize,
    pub max_horizon: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            max_states: 3,
            max_actions: 2,
            max_rewards: 2,
            max_horizon: 3,
        }
    }
}

fn random_dist(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
    let total: f64 = v.iter().sum();
    for x in &mut v {
        *x /= total;
    }
    v
}

fn random_rewards(rng: &mut ChaCha8Rng, nr: usize) -> Vec<f64> {
    // Strictly ascending values with irregular gaps.
    let mut v = Vec::with_capacity(nr);
    let mut acc = rng.gen_range(-3.0..0.0);
    for _ in 0..nr {
        v.push(acc);
        acc += rng.gen_range(0.25..2.0);
    }
    v
}

/// A random single-agent instance. Dimensions are drawn uniformly in
/// `2..=bounds.*` (horizon in `1..=max_horizon`).
pub fn random_sarl_instance(seed: u64, bounds: Bounds) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ns = rng.gen_range(2..=bounds.max_states);
    let na = rng.gen_range(2..=bounds.max_actions);
    let nr = rng.gen_range(2..=bounds.max_rewards);
    let horizon = rng.gen_range(1..=bounds.max_horizon);
    let spec = FmdpSpec {
        n_states: ns,
        n_actions: na,
        n_rewards: nr,
        horizon,
        n_agents: 1,
        reward_values: random_rewards(&mut rng, nr),
        state_offset: 0,
    };
    let mut tensors = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let mut m = DenseTensor::zeros(&[ns, nr, ns, na]);
        for s in 0..ns {
            for a in 0..na {
                let d = random_dist(&mut rng, ns * nr);
                for (k, &p) in d.iter().enumerate() {
                    m.set(&[k / nr, k % nr, s, a], p);
                }
            }
        }
        tensors.push(m);
    }
    let mut policies = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let mut pi = DenseTensor::zeros(&[na, ns]);
        for s in 0..ns {
            let d = random_dist(&mut rng, na);
            for (a, &p) in d.iter().enumerate() {
                pi.set(&[a, s], p);
            }
        }
        policies.push(pi);
    }
    let p0 = InitialDistribution {
        p0: DenseTensor::new(vec![ns], random_dist(&mut rng, ns)).unwrap(),
    };
    Instance {
        spec,
        model: TransitionModel { tensors },
        policy: PolicySet::Sarl(policies),
        p0,
    }
}

/// A random two-agent instance with a joint stochastic policy.
pub fn random_marl_instance(seed: u64, bounds: Bounds) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ns = rng.gen_range(2..=bounds.max_states);
    let na = rng.gen_range(2..=bounds.max_actions);
    let nr = rng.gen_range(2..=bounds.max_rewards);
    let horizon = rng.gen_range(1..=bounds.max_horizon);
    let spec = FmdpSpec {
        n_states: ns,
        n_actions: na,
        n_rewards: nr,
        horizon,
        n_agents: 2,
        reward_values: random_rewards(&mut rng, nr),
        state_offset: 0,
    };
    let mut tensors = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let mut m = DenseTensor::zeros(&[ns, ns, nr, nr, ns, ns, na, na]);
        for s1 in 0..ns {
            for s2 in 0..ns {
                for a1 in 0..na {
                    for a2 in 0..na {
                        let d = random_dist(&mut rng, ns * ns * nr * nr);
                        for (k, &p) in d.iter().enumerate() {
                            let r2 = k % nr;
                            let r1 = (k / nr) % nr;
                            let sp2 = (k / (nr * nr)) % ns;
                            let sp1 = k / (nr * nr * ns);
                            m.set(&[sp1, sp2, r1, r2, s1, s2, a1, a2], p);
                        }
                    }
                }
            }
        }
        tensors.push(m);
    }
    let mut policies = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let mut pi = DenseTensor::zeros(&[na, na, ns, ns]);
        for s1 in 0..ns {
            for s2 in 0..ns {
                let d = random_dist(&mut rng, na * na);
                for (k, &p) in d.iter().enumerate() {
                    pi.set(&[k / na, k % na, s1, s2], p);
                }
            }
        }
        policies.push(pi);
    }
    let p0 = InitialDistribution {
        p0: DenseTensor::new(vec![ns, ns], random_dist(&mut rng, ns * ns)).unwrap(),
    };
    Instance {
        spec,
        model: TransitionModel { tensors },
        policy: PolicySet::Joint(policies),
        p0,
    }
}
