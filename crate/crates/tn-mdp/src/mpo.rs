//! The return operator as a matrix product: a chain of bond-dimension-2 sites
//! whose contraction with a reward distribution yields the expected sum of
//! rewards, for one agent over time or for several agents in a snaking
//! arrangement.

use crate::error::Result;
use crate::tensor::DenseTensor;

/// Which (timestep, agent) a reward axis belongs to. `agent` is `None` for
/// single-agent and fused sites.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SiteTag {
    pub timestep: usize,
    pub agent: Option<usize>,
}

/// Matrix product operator summing rewards along a chain.
///
/// A chain of length 1 is the single vector of reward values. Longer chains
/// have a rank-2 first site `(bond, reward)` equal to `[R, 1]`, rank-3
/// interior sites `(bond_in, bond_out, reward)` equal to `[[1, 0], [R, 1]]`
/// (as a 2x2 array of reward-vectors), and a rank-2 last site `(bond, reward)`
/// equal to `[1; R]`. The bond dimension stays 2 no matter how long the chain
/// grows.
#[derive(Clone, Debug)]
pub struct ReturnMpo {
    pub sites: Vec<DenseTensor>,
    pub tags: Vec<SiteTag>,
    pub n_rewards: usize,
}

fn first_site(rv: &[f64]) -> DenseTensor {
    // Row [R, 1] of reward-vectors, shape (bond, reward).
    let nr = rv.len();
    DenseTensor::from_fn(&[2, nr], |idx| if idx[0] == 0 { rv[idx[1]] } else { 1.0 })
        .with_labels(&["bond", "reward"])
}

fn interior_site(rv: &[f64]) -> DenseTensor {
    // [[1, 0], [R, 1]], shape (bond_in, bond_out, reward).
    let nr = rv.len();
    DenseTensor::from_fn(&[2, 2, nr], |idx| match (idx[0], idx[1]) {
        (0, 0) => 1.0,
        (0, 1) => 0.0,
        (1, 0) => rv[idx[2]],
        _ => 1.0,
    })
    .with_labels(&["bond_in", "bond_out", "reward"])
}

fn last_site(rv: &[f64]) -> DenseTensor {
    // Column [1; R], shape (bond, reward).
    let nr = rv.len();
    DenseTensor::from_fn(&[2, nr], |idx| if idx[0] == 0 { 1.0 } else { rv[idx[1]] })
        .with_labels(&["bond", "reward"])
}

fn build_chain(n_sites: usize, rv: &[f64], tags: Vec<SiteTag>) -> ReturnMpo {
    debug_assert_eq!(tags.len(), n_sites);
    let sites = if n_sites == 1 {
        vec![DenseTensor::vector(rv).with_labels(&["reward"])]
    } else {
        let mut sites = Vec::with_capacity(n_sites);
        sites.push(first_site(rv));
        for _ in 1..n_sites - 1 {
            sites.push(interior_site(rv));
        }
        sites.push(last_site(rv));
        sites
    };
    ReturnMpo {
        sites,
        tags,
        n_rewards: rv.len(),
    }
}

/// Chain of `horizon` sites summing one reward per timestep.
pub fn build_sarl_mpo(horizon: usize, reward_values: &[f64]) -> ReturnMpo {
    assert!(horizon >= 1);
    let tags = (1..=horizon)
        .map(|t| SiteTag {
            timestep: t,
            agent: None,
        })
        .collect();
    build_chain(horizon, reward_values, tags)
}

/// Chain of `n_agents * horizon` sites summing every agent's reward at every
/// timestep. Sites snake through the agents: timestep 1 visits agents
/// 1..n, timestep 2 visits n..1, and so on, so that consecutive sites are
/// always adjacent in the layout.
pub fn build_snake_mpo(horizon: usize, n_agents: usize, reward_values: &[f64]) -> ReturnMpo {
    assert!(horizon >= 1 && n_agents >= 1);
    if n_agents == 1 {
        return build_sarl_mpo(horizon, reward_values);
    }
    let mut tags = Vec::with_capacity(n_agents * horizon);
    for t in 1..=horizon {
        let forward = t % 2 == 1;
        for k in 0..n_agents {
            let agent = if forward { k + 1 } else { n_agents - k };
            tags.push(SiteTag {
                timestep: t,
                agent: Some(agent),
            });
        }
    }
    build_chain(n_agents * horizon, reward_values, tags)
}

/// Contracts the `n_agents` sites of each timestep into one site whose reward
/// axis is the fused product axis of length `n_rewards ^ n_agents`, ordered
/// with agent 1's reward index slowest regardless of snake direction.
///
/// With one agent this is the identity transformation.
pub fn fuse_per_timestep(mpo: &ReturnMpo, n_agents: usize) -> Result<ReturnMpo> {
    if n_agents == 1 {
        return Ok(mpo.clone());
    }
    let horizon = mpo.sites.len() / n_agents;
    debug_assert_eq!(mpo.sites.len(), horizon * n_agents);
    let nr = mpo.n_rewards;
    let fused_nr = nr.pow(n_agents as u32);
    let padded = mpo.interior_form();
    let mut sites = Vec::with_capacity(horizon);
    let mut tags = Vec::with_capacity(horizon);
    for t in 0..horizon {
        let group = &padded[t * n_agents..(t + 1) * n_agents];
        let group_tags = &mpo.tags[t * n_agents..(t + 1) * n_agents];
        // Contract along interior bonds, keeping (bond_in, bond_out) in front
        // and accumulating reward axes in snake order behind them.
        let mut acc = group[0].clone();
        for site in &group[1..] {
            let k = acc.rank() - 2; // reward axes so far
            let joined = acc.contract(site, &[(1, 0)])?;
            // (bond_in, r_1..r_k, bond_out, r_new) -> bonds first.
            let mut perm = vec![0, k + 1];
            perm.extend(1..=k);
            perm.push(k + 2);
            acc = joined.permute(&perm)?;
        }
        // Reorder reward axes from snake order to agent order 1..n.
        let mut agent_order: Vec<(usize, usize)> = group_tags
            .iter()
            .enumerate()
            .map(|(k, tag)| (tag.agent.unwrap_or(k + 1), k))
            .collect();
        agent_order.sort();
        let mut perm = vec![0, 1];
        perm.extend(agent_order.iter().map(|&(_, k)| 2 + k));
        acc = acc.permute(&perm)?;
        let (b_in, b_out) = (acc.shape()[0], acc.shape()[1]);
        acc = acc.reshape(&[b_in, b_out, fused_nr])?;
        // Strip the unit padding bonds back off the chain ends.
        let fused = if b_in == 1 && b_out == 1 {
            acc.reshape(&[fused_nr])?
        } else if b_in == 1 {
            acc.reshape(&[b_out, fused_nr])?
        } else if b_out == 1 {
            acc.reshape(&[b_in, fused_nr])?
        } else {
            acc
        };
        sites.push(fused);
        tags.push(SiteTag {
            timestep: t + 1,
            agent: None,
        });
    }
    Ok(ReturnMpo {
        sites,
        tags,
        n_rewards: fused_nr,
    })
}

impl ReturnMpo {
    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// All sites in uniform rank-3 `(bond_in, bond_out, reward)` form, with
    /// length-1 bond axes padding the chain ends. A length-1 chain becomes a
    /// single `(1, 1, reward)` site. Lets sweep code treat every site alike.
    pub fn interior_form(&self) -> Vec<DenseTensor> {
        let n = self.sites.len();
        self.sites
            .iter()
            .enumerate()
            .map(|(i, site)| {
                let padded = match site.rank() {
                    1 => {
                        let mut shape = vec![1, 1];
                        shape.extend(site.shape());
                        site.reshape(&shape).expect("pad lone site")
                    }
                    2 if i == 0 => {
                        // (bond, reward) -> (1, bond, reward)
                        let mut shape = vec![1];
                        shape.extend(site.shape());
                        site.reshape(&shape).expect("pad first site")
                    }
                    2 => {
                        // last site: (bond, reward) -> (bond, 1, reward)
                        let shape = [site.shape()[0], 1, site.shape()[1]];
                        site.reshape(&shape).expect("pad last site")
                    }
                    _ => site.clone(),
                };
                debug_assert_eq!(padded.rank(), 3);
                let _ = n;
                padded
            })
            .collect()
    }

    /// The return functional as a dense tensor over all reward axes (site
    /// order): entry at `(r_1, ..., r_k)` is the summed reward value. Only
    /// feasible at desk scale.
    pub fn functional(&self) -> DenseTensor {
        let mut acc = DenseTensor::vector(&[1.0]);
        for site in self.interior_form() {
            // acc: (bond, r_1..r_k); pair bond with the site's bond_in.
            let k = acc.rank() - 1;
            let joined = acc.contract(&site, &[(0, 0)]).expect("bond contraction");
            // (r_1..r_k, bond_out, r_new) -> (bond_out, r_1..r_k, r_new)
            let mut perm = vec![k];
            perm.extend(0..k);
            perm.push(k + 1);
            acc = joined.permute(&perm).expect("bond to front");
        }
        let shape: Vec<usize> = acc.shape()[1..].to_vec();
        acc.reshape(&shape).expect("drop unit bond")
    }

    /// Expected summed reward under a joint distribution over all reward
    /// axes (site order). Brute force; test and desk-scale use only.
    pub fn contract_with_distribution(&self, dist: &DenseTensor) -> Result<f64> {
        let g = self.functional();
        let pairs: Vec<(usize, usize)> = (0..g.rank()).map(|ax| (ax, ax)).collect();
        Ok(g.contract(dist, &pairs)?.as_scalar())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::DenseTensor;

    #[test]
    fn single_site_is_reward_vector() {
        let mpo = build_sarl_mpo(1, &[5.0]);
        assert_eq!(mpo.len(), 1);
        assert_eq!(mpo.sites[0].shape(), &[1]);
        let point = DenseTensor::vector(&[1.0]);
        assert_eq!(mpo.contract_with_distribution(&point).unwrap(), 5.0);
    }

    #[test]
    fn site_forms_match_construction() {
        let rv = [0.0, -1.0];
        let mpo = build_sarl_mpo(3, &rv);
        // First: [R, 1].
        assert_eq!(mpo.sites[0].data(), &[0.0, -1.0, 1.0, 1.0]);
        // Interior: [[1, 0], [R, 1]].
        assert_eq!(
            mpo.sites[1].data(),
            &[1.0, 1.0, 0.0, 0.0, 0.0, -1.0, 1.0, 1.0]
        );
        // Last: [1; R].
        assert_eq!(mpo.sites[2].data(), &[1.0, 1.0, 0.0, -1.0]);
    }

    #[test]
    fn functional_sums_rewards_t4() {
        let rv = [0.5, -1.0, 2.0];
        let mpo = build_sarl_mpo(4, &rv);
        let g = mpo.functional();
        assert_eq!(g.shape(), &[3, 3, 3, 3]);
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let expect = rv[i] + rv[j] + rv[k] + rv[l];
                        assert!((g.get(&[i, j, k, l]) - expect).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn uniform_pair_distribution_t2() {
        let mpo = build_sarl_mpo(2, &[0.0, 1.0]);
        let dist = DenseTensor::from_fn(&[2, 2], |_| 0.25);
        let e = mpo.contract_with_distribution(&dist).unwrap();
        assert!((e - 1.0).abs() < 1e-12);
    }

    #[test]
    fn correlated_distribution_matches_brute_force() {
        let rv = [1.0, 2.0, 4.0];
        let mpo = build_sarl_mpo(3, &rv);
        // A normalised but correlated joint distribution.
        let raw = DenseTensor::from_fn(&[3, 3, 3], |idx| (1 + idx[0] + 2 * idx[1] * idx[2]) as f64);
        let total: f64 = raw.data().iter().sum();
        let dist = raw.scale(1.0 / total);
        let mut expect = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    expect += dist.get(&[i, j, k]) * (rv[i] + rv[j] + rv[k]);
                }
            }
        }
        let got = mpo.contract_with_distribution(&dist).unwrap();
        assert!((got - expect).abs() < 1e-9);
    }

    #[test]
    fn snake_reduces_to_sarl_for_one_agent() {
        let rv = [0.0, 1.0];
        let snake = build_snake_mpo(3, 1, &rv);
        let sarl = build_sarl_mpo(3, &rv);
        assert_eq!(snake.tags, sarl.tags);
        for (a, b) in snake.sites.iter().zip(&sarl.sites) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn snake_order_two_agents_t3() {
        let mpo = build_snake_mpo(3, 2, &[0.0]);
        let order: Vec<(usize, usize)> = mpo
            .tags
            .iter()
            .map(|tag| (tag.timestep, tag.agent.unwrap()))
            .collect();
        assert_eq!(order, [(1, 1), (1, 2), (2, 2), (2, 1), (3, 1), (3, 2)]);
    }

    #[test]
    fn snake_two_agents_t1_point_mass() {
        let mpo = build_snake_mpo(1, 2, &[0.0, -1.0]);
        assert_eq!(mpo.len(), 2);
        let point = DenseTensor::from_fn(&[2, 2], |idx| {
            if idx[0] == 1 && idx[1] == 1 {
                1.0
            } else {
                0.0
            }
        });
        let e = mpo.contract_with_distribution(&point).unwrap();
        assert!((e - (-2.0)).abs() < 1e-12);
    }

    #[test]
    fn fused_interior_element_is_kronecker_sum() {
        let rv = [0.0, -1.0];
        let snake = build_snake_mpo(3, 2, &rv);
        let fused = fuse_per_timestep(&snake, 2).unwrap();
        assert_eq!(fused.len(), 3);
        let interior = &fused.sites[1];
        assert_eq!(interior.shape(), &[2, 2, 4]);
        // Element (2,1) in one-based matrix terms: R (x) 1 + 1 (x) R.
        let r = DenseTensor::vector(&rv);
        let one = DenseTensor::vector(&[1.0, 1.0]);
        let expect = r.outer(&one).add(&one.outer(&r)).unwrap();
        for i in 0..4 {
            assert!((interior.get(&[1, 0, i]) - expect.data()[i]).abs() < 1e-12);
        }
        // Element (1,2) is the zero vector, diagonal elements are ones.
        for i in 0..4 {
            assert_eq!(interior.get(&[0, 1, i]), 0.0);
            assert_eq!(interior.get(&[0, 0, i]), 1.0);
            assert_eq!(interior.get(&[1, 1, i]), 1.0);
        }
    }

    #[test]
    fn fused_equals_sarl_chain_with_summed_rewards() {
        let rv = [0.0, -1.0, 2.0];
        let nr = rv.len();
        let snake = build_snake_mpo(4, 2, &rv);
        let fused = fuse_per_timestep(&snake, 2).unwrap();
        let mut fused_rv = vec![0.0; nr * nr];
        for r1 in 0..nr {
            for r2 in 0..nr {
                fused_rv[r1 * nr + r2] = rv[r1] + rv[r2];
            }
        }
        let sarl = build_sarl_mpo(4, &fused_rv);
        for (a, b) in fused.sites.iter().zip(&sarl.sites) {
            assert!(a.max_abs_diff(b) < 1e-12);
        }
    }

    #[test]
    fn fused_expected_return_matches_unfused_on_random_joint() {
        let rv = [0.0, 1.0];
        let horizon = 3;
        let snake = build_snake_mpo(horizon, 2, &rv);
        let fused = fuse_per_timestep(&snake, 2).unwrap();
        // Correlated joint distribution over the six snake reward axes.
        let raw = DenseTensor::from_fn(&[2; 6], |idx| {
            (1 + idx.iter().enumerate().map(|(i, &v)| (i + 1) * v).sum::<usize>()) as f64
        });
        let total: f64 = raw.data().iter().sum();
        let dist = raw.scale(1.0 / total);
        let unfused = snake.contract_with_distribution(&dist).unwrap();
        // Fused axes pair (agent1, agent2) per timestep; snake order within
        // timestep 2 is (agent2, agent1), so permute before reshaping.
        let per_t = dist.permute(&[0, 1, 3, 2, 4, 5]).unwrap();
        let fused_dist = per_t.reshape(&[4, 4, 4]).unwrap();
        let got = fused.contract_with_distribution(&fused_dist).unwrap();
        assert!((got - unfused).abs() < 1e-10, "{got} vs {unfused}");
    }

    #[test]
    fn fuse_one_agent_is_identity() {
        let mpo = build_sarl_mpo(3, &[0.0, 1.0]);
        let fused = fuse_per_timestep(&mpo, 1).unwrap();
        assert_eq!(fused.tags, mpo.tags);
        for (a, b) in fused.sites.iter().zip(&mpo.sites) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn interior_form_pads_ends() {
        let mpo = build_sarl_mpo(3, &[0.0, 1.0]);
        let padded = mpo.interior_form();
        assert_eq!(padded[0].shape(), &[1, 2, 2]);
        assert_eq!(padded[1].shape(), &[2, 2, 2]);
        assert_eq!(padded[2].shape(), &[2, 1, 2]);

        let lone = build_sarl_mpo(1, &[3.0]).interior_form();
        assert_eq!(lone[0].shape(), &[1, 1, 1]);
        assert_eq!(lone[0].data(), &[3.0]);
    }

    #[test]
    fn bond_dimension_stays_two() {
        let mpo = build_snake_mpo(5, 2, &[0.0, 1.0, 2.0]);
        assert_eq!(mpo.len(), 10);
        for site in mpo.interior_form() {
            assert!(site.shape()[0] <= 2 && site.shape()[1] <= 2);
        }
    }
}
