//! SVD decomposition of joint two-agent tensors: flatten agent 1's axes
//! against agent 2's, factor, truncate to a Schmidt rank chi, and evaluate
//! the resulting three-layer network without ever materialising the joint
//! rank-8 transitions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fmdp::{copy_tensor, FmdpSpec};
use crate::mpo::build_sarl_mpo;
use crate::tensor::{svd_truncated, DenseTensor};

/// Permutation grouping a rank-8 joint transition
/// `(s1', s2', r1, r2, s1, s2, a1, a2)` into agent-1 axes then agent-2 axes.
const GROUP_BY_AGENT: [usize; 8] = [0, 2, 4, 6, 1, 3, 5, 7];
/// Inverse of [`GROUP_BY_AGENT`].
const UNGROUP: [usize; 8] = [0, 4, 1, 5, 2, 6, 3, 7];

/// A joint transition factored into per-agent halves joined by a bond of
/// length `chi`. Factor entries are generally not probabilities.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecomposedTransition {
    /// Axes `(s1', r1, s1, a1, bond)`.
    pub m1: DenseTensor,
    /// Axes `(bond, s2', r2, s2, a2)`.
    pub m2: DenseTensor,
    pub chi: usize,
    pub singular_values: Vec<f64>,
}

/// A joint policy factored into `(a1, s1, bond)` and `(bond, a2, s2)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecomposedPolicy {
    pub p1: DenseTensor,
    pub p2: DenseTensor,
    pub chi: usize,
    pub singular_values: Vec<f64>,
}

/// A joint initial distribution factored into `(s1, bond)` and `(bond, s2)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecomposedInitial {
    pub v1: DenseTensor,
    pub v2: DenseTensor,
    pub chi: usize,
    pub singular_values: Vec<f64>,
}

/// Splits truncated SVD factors symmetrically: each side absorbs the square
/// root of the singular values, so neither agent is privileged.
fn split_factors(
    mat: &DenseTensor,
    chi: usize,
) -> Result<(DenseTensor, DenseTensor, Vec<f64>)> {
    let f = svd_truncated(mat, chi)?;
    let keep = f.chi();
    let (rows, cols) = (f.u.shape()[0], f.v.shape()[1]);
    let roots: Vec<f64> = f.lambda.iter().map(|&l| l.max(0.0).sqrt()).collect();
    let mut left = f.u.clone();
    for i in 0..rows {
        for k in 0..keep {
            left.data_mut()[i * keep + k] *= roots[k];
        }
    }
    let mut right = f.v.clone();
    for k in 0..keep {
        for j in 0..cols {
            right.data_mut()[k * cols + j] *= roots[k];
        }
    }
    Ok((left, right, f.lambda))
}

/// Decomposes a rank-8 joint transition at Schmidt rank `chi`.
pub fn decompose_joint(mj: &DenseTensor, chi: usize) -> Result<DecomposedTransition> {
    if mj.rank() != 8 {
        return Err(Error::DimensionMismatch {
            tensor: "joint transition".into(),
            detail: format!("rank {}, expected 8", mj.rank()),
        });
    }
    let grouped = mj.permute(&GROUP_BY_AGENT)?;
    let half: Vec<usize> = grouped.shape()[..4].to_vec();
    let d1: usize = half.iter().product();
    let d2: usize = grouped.shape()[4..].iter().product();
    let mat = grouped.reshape(&[d1, d2])?;
    let (left, right, lambda) = split_factors(&mat, chi)?;
    let keep = lambda.len().min(chi);
    let mut m1_shape = half.clone();
    m1_shape.push(keep);
    let mut m2_shape = vec![keep];
    m2_shape.extend(&grouped.shape()[4..]);
    Ok(DecomposedTransition {
        m1: left.reshape(&m1_shape)?,
        m2: right.reshape(&m2_shape)?,
        chi: keep,
        singular_values: lambda,
    })
}

/// Decomposes a joint policy `(a1, a2, s1, s2)` at rank `chi`.
pub fn decompose_policy(joint: &DenseTensor, chi: usize) -> Result<DecomposedPolicy> {
    if joint.rank() != 4 {
        return Err(Error::DimensionMismatch {
            tensor: "joint policy".into(),
            detail: format!("rank {}, expected 4", joint.rank()),
        });
    }
    let grouped = joint.permute(&[0, 2, 1, 3])?; // (a1, s1, a2, s2)
    let (na1, ns1, na2, ns2) = (
        grouped.shape()[0],
        grouped.shape()[1],
        grouped.shape()[2],
        grouped.shape()[3],
    );
    let mat = grouped.reshape(&[na1 * ns1, na2 * ns2])?;
    let (left, right, lambda) = split_factors(&mat, chi)?;
    let keep = lambda.len().min(chi);
    Ok(DecomposedPolicy {
        p1: left.reshape(&[na1, ns1, keep])?,
        p2: right.reshape(&[keep, na2, ns2])?,
        chi: keep,
        singular_values: lambda,
    })
}

/// Decomposes a joint initial distribution `(s1, s2)` at rank `chi`.
pub fn decompose_initial(joint: &DenseTensor, chi: usize) -> Result<DecomposedInitial> {
    if joint.rank() != 2 {
        return Err(Error::NotAMatrix { rank: joint.rank() });
    }
    let (left, right, lambda) = split_factors(joint, chi)?;
    let keep = lambda.len().min(chi);
    Ok(DecomposedInitial {
        v1: left,
        v2: right,
        chi: keep,
        singular_values: lambda,
    })
}

/// Sum of absolute elementwise differences between the joint tensor and the
/// contraction of its decomposed halves.
pub fn reconstruction_error(mj: &DenseTensor, d: &DecomposedTransition) -> Result<f64> {
    let recon = d.m1.contract(&d.m2, &[(4, 0)])?.permute(&UNGROUP)?;
    if recon.shape() != mj.shape() {
        return Err(Error::DimensionMismatch {
            tensor: "reconstruction".into(),
            detail: format!("shape {:?} vs {:?}", recon.shape(), mj.shape()),
        });
    }
    Ok(recon
        .data()
        .iter()
        .zip(mj.data())
        .map(|(a, b)| (a - b).abs())
        .sum())
}

/// One point of the compression curve.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SvdScanRecord {
    pub chi: usize,
    pub alpha: f64,
    pub element_count: usize,
}

/// Reconstruction error and element counts across Schmidt ranks.
///
/// A single full SVD is taken and the per-chi reconstructions are built
/// incrementally from its rank-1 terms, so the scan costs one factorisation
/// regardless of how many ranks are probed. Output order matches the input.
pub fn svd_scan(mj: &DenseTensor, chi_values: &[usize]) -> Result<Vec<SvdScanRecord>> {
    if chi_values.is_empty() {
        return Err(Error::Config("chi_values must be non-empty".into()));
    }
    if chi_values.iter().any(|&c| c == 0) {
        return Err(Error::InvalidChi);
    }
    let grouped = mj.permute(&GROUP_BY_AGENT)?;
    let d1: usize = grouped.shape()[..4].iter().product();
    let d2: usize = grouped.shape()[4..].iter().product();
    let mat = grouped.reshape(&[d1, d2])?;
    let full = svd_truncated(&mat, d1.min(d2))?;

    let mut ordered: Vec<usize> = chi_values.to_vec();
    ordered.sort_unstable();
    ordered.dedup();

    let mut recon = vec![0.0; d1 * d2];
    let mut alphas = std::collections::HashMap::new();
    let mut done = 0usize;
    for &chi in &ordered {
        let upto = chi.min(full.chi());
        for k in done..upto {
            let lambda = full.lambda[k];
            if lambda == 0.0 {
                continue;
            }
            for i in 0..d1 {
                let w = full.u.data()[i * full.chi() + k] * lambda;
                if w == 0.0 {
                    continue;
                }
                let vrow = &full.v.data()[k * d2..(k + 1) * d2];
                let orow = &mut recon[i * d2..(i + 1) * d2];
                for (o, &vv) in orow.iter_mut().zip(vrow) {
                    *o += w * vv;
                }
            }
        }
        done = done.max(upto);
        let alpha: f64 = recon
            .iter()
            .zip(mat.data())
            .map(|(a, b)| (a - b).abs())
            .sum();
        alphas.insert(chi, alpha);
    }
    Ok(chi_values
        .iter()
        .map(|&chi| SvdScanRecord {
            chi,
            alpha: alphas[&chi],
            element_count: chi * (d1 + d2),
        })
        .collect())
}

/// Expected return of the fully decomposed two-agent network: per-agent
/// transition and policy chains coupled through their SVD bonds and through
/// copy tensors on the shared state indices, closed by the fused reward
/// operator chain. Never forms a joint rank-8 tensor.
pub fn expected_return_decomposed(
    spec: &FmdpSpec,
    transitions: &[DecomposedTransition],
    policies: &[DecomposedPolicy],
    p0: &DecomposedInitial,
) -> Result<f64> {
    if spec.n_agents != 2 {
        return Err(Error::Config("decomposed evaluation is two-agent".into()));
    }
    if transitions.len() != spec.horizon || policies.len() != spec.horizon {
        return Err(Error::DimensionMismatch {
            tensor: "decomposed chain".into(),
            detail: format!(
                "{} transitions / {} policies for horizon {}",
                transitions.len(),
                policies.len(),
                spec.horizon
            ),
        });
    }
    let ns = spec.n_states;
    let nr = spec.n_rewards;
    let fused_rv: Vec<f64> = {
        let mut v = Vec::with_capacity(nr * nr);
        for &a in &spec.reward_values {
            for &b in &spec.reward_values {
                v.push(a + b);
            }
        }
        v
    };
    // Fused operator sites with the pair reward axis split back apart.
    let sites: Vec<DenseTensor> = build_sarl_mpo(spec.horizon, &fused_rv)
        .interior_form()
        .into_iter()
        .map(|w| {
            let (bi, bo) = (w.shape()[0], w.shape()[1]);
            w.reshape(&[bi, bo, nr, nr]).expect("split pair rewards")
        })
        .collect();
    let delta = copy_tensor(ns, 3);

    // Boundary carries (s1, s2, operator bond).
    let mut boundary = p0
        .v1
        .contract(&p0.v2, &[(1, 0)])?
        .reshape(&[ns, ns, 1])?;
    for t in 0..spec.horizon {
        let d = &transitions[t];
        let p = &policies[t];
        let w = &sites[t];
        // Attach agent 1's policy factor, duplicating s1.
        let spread1 = delta.contract(&boundary, &[(0, 0)])?; // (s1, s1, s2, b)
        let x = spread1.contract(&p.p1, &[(0, 1)])?; // (s1, s2, b, a1, pb)
        // Attach agent 2's factor, duplicating s2 and closing the policy bond.
        let spread2 = x.contract(&delta, &[(1, 0)])?; // (s1, b, a1, pb, s2, s2)
        let y = spread2.contract(&p.p2, &[(4, 2), (3, 0)])?; // (s1, b, a1, s2, a2)
        // Agent 1's transition half consumes (s1, a1).
        let z1 = y.contract(&d.m1, &[(0, 2), (2, 3)])?; // (b, s2, a2, s1', r1, tb)
        // Agent 2's half consumes (s2, a2) and the transition bond.
        let z2 = z1.contract(&d.m2, &[(1, 3), (2, 4), (5, 0)])?; // (b, s1', r1, s2', r2)
        // Fold in the reward operator site.
        boundary = z2
            .contract(w, &[(0, 0), (2, 2), (4, 3)])? // (s1', s2', b')
            ;
    }
    Ok(boundary.data().iter().sum())
}
