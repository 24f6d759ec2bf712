//! Dense multidimensional arrays with contraction, outer products, reshaping
//! and truncated singular value decomposition.
//!
//! [`DenseTensor`] is the carrier for every object in the library: Markov
//! transition tensors, policies, initial distributions, reward-summing MPO
//! sites and the environment tensors produced during optimisation. Storage is
//! a flat row-major `Vec<f64>`; the last axis runs fastest. All operations are
//! pure and the summation order inside a contraction is fixed, so results are
//! bit-for-bit reproducible.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A dense n-dimensional real tensor in row-major layout.
///
/// Rank 0 is a scalar (one element, empty shape). Axis labels are optional
/// semantic tags ("state", "action", "bond", ...) carried for debuggability;
/// they never affect numerics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() || shape.iter().any(|&d| d == 0) {
            return Err(Error::ShapeDataMismatch {
                shape,
                data_len: data.len(),
            });
        }
        Ok(Self {
            shape,
            data,
            labels: None,
        })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![0.0; len],
            labels: None,
        }
    }

    pub fn scalar(value: f64) -> Self {
        Self {
            shape: Vec::new(),
            data: vec![value],
            labels: None,
        }
    }

    pub fn vector(values: &[f64]) -> Self {
        Self {
            shape: vec![values.len()],
            data: values.to_vec(),
            labels: None,
        }
    }

    /// Builds a tensor by evaluating `f` at every multi-index.
    pub fn from_fn(shape: &[usize], mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut out = Self::zeros(shape);
        let mut idx = vec![0usize; shape.len()];
        for i in 0..out.data.len() {
            out.data[i] = f(&idx);
            Self::advance(&mut idx, shape);
        }
        out
    }

    fn advance(idx: &mut [usize], shape: &[usize]) {
        for ax in (0..shape.len()).rev() {
            idx[ax] += 1;
            if idx[ax] < shape[ax] {
                return;
            }
            idx[ax] = 0;
        }
    }

    pub fn with_labels(mut self, labels: &[&str]) -> Self {
        debug_assert_eq!(labels.len(), self.shape.len());
        self.labels = Some(labels.iter().map(|s| s.to_string()).collect());
        self
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// The single value of a rank-0 tensor (or of any one-element tensor).
    pub fn as_scalar(&self) -> f64 {
        debug_assert_eq!(self.data.len(), 1);
        self.data[0]
    }

    fn strides(shape: &[usize]) -> Vec<usize> {
        let mut strides = vec![1usize; shape.len()];
        for ax in (0..shape.len().saturating_sub(1)).rev() {
            strides[ax] = strides[ax + 1] * shape[ax + 1];
        }
        strides
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.shape.len());
        let strides = Self::strides(&self.shape);
        idx.iter().zip(&strides).map(|(i, s)| i * s).sum()
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.flat_index(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let flat = self.flat_index(idx);
        self.data[flat] = value;
    }

    /// Reorders the axes so that new axis `k` is old axis `perm[k]`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        let rank = self.rank();
        let mut seen = vec![false; rank];
        if perm.len() != rank {
            return Err(Error::InvalidPermutation(perm.to_vec()));
        }
        for &p in perm {
            if p >= rank || seen[p] {
                return Err(Error::InvalidPermutation(perm.to_vec()));
            }
            seen[p] = true;
        }
        let new_shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        let old_strides = Self::strides(&self.shape);
        let gather: Vec<usize> = perm.iter().map(|&p| old_strides[p]).collect();
        let mut data = vec![0.0; self.data.len()];
        let mut idx = vec![0usize; rank];
        for slot in data.iter_mut() {
            let src: usize = idx.iter().zip(&gather).map(|(i, s)| i * s).sum();
            *slot = self.data[src];
            Self::advance(&mut idx, &new_shape);
        }
        let labels = self
            .labels
            .as_ref()
            .map(|ls| perm.iter().map(|&p| ls[p].clone()).collect());
        Ok(Self {
            shape: new_shape,
            data,
            labels,
        })
    }

    /// Row-major relabelling of the entries into a new shape.
    ///
    /// Grouping non-adjacent axes requires an explicit [`permute`] first;
    /// reshape itself never moves data. Reshape followed by the inverse
    /// reshape is the identity.
    ///
    /// [`permute`]: DenseTensor::permute
    pub fn reshape(&self, new_shape: &[usize]) -> Result<Self> {
        let new_len: usize = new_shape.iter().product();
        if new_len != self.data.len() || new_shape.iter().any(|&d| d == 0) {
            return Err(Error::ReshapeSizeMismatch {
                elements: self.data.len(),
                requested: new_shape.to_vec(),
            });
        }
        Ok(Self {
            shape: new_shape.to_vec(),
            data: self.data.clone(),
            labels: None,
        })
    }

    /// Contracts `self` with `other` over the given `(axis-of-self,
    /// axis-of-other)` pairs.
    ///
    /// The result carries the uncontracted axes of `self` (in order) followed
    /// by the uncontracted axes of `other`. Per output element the sum over
    /// the paired indices runs in a fixed row-major order.
    pub fn contract(&self, other: &Self, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut used_a = vec![false; self.rank()];
        let mut used_b = vec![false; other.rank()];
        for &(ax_a, ax_b) in pairs {
            if ax_a >= self.rank() {
                return Err(Error::AxisOutOfRange {
                    axis: ax_a,
                    rank: self.rank(),
                });
            }
            if ax_b >= other.rank() {
                return Err(Error::AxisOutOfRange {
                    axis: ax_b,
                    rank: other.rank(),
                });
            }
            if used_a[ax_a] {
                return Err(Error::DuplicateContractionAxis { axis: ax_a });
            }
            if used_b[ax_b] {
                return Err(Error::DuplicateContractionAxis { axis: ax_b });
            }
            if self.shape[ax_a] != other.shape[ax_b] {
                return Err(Error::ContractionShapeMismatch {
                    axis_a: ax_a,
                    len_a: self.shape[ax_a],
                    axis_b: ax_b,
                    len_b: other.shape[ax_b],
                });
            }
            used_a[ax_a] = true;
            used_b[ax_b] = true;
        }
        let free_a: Vec<usize> = (0..self.rank()).filter(|&ax| !used_a[ax]).collect();
        let free_b: Vec<usize> = (0..other.rank()).filter(|&ax| !used_b[ax]).collect();

        let mut perm_a = free_a.clone();
        perm_a.extend(pairs.iter().map(|&(a, _)| a));
        let mut perm_b: Vec<usize> = pairs.iter().map(|&(_, b)| b).collect();
        perm_b.extend(free_b.iter().copied());

        let a = self.permute(&perm_a)?;
        let b = other.permute(&perm_b)?;

        let m: usize = free_a.iter().map(|&ax| self.shape[ax]).product();
        let k: usize = pairs.iter().map(|&(ax, _)| self.shape[ax]).product();
        let n: usize = free_b.iter().map(|&ax| other.shape[ax]).product();

        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let row = &a.data[i * k..(i + 1) * k];
            for (kk, &av) in row.iter().enumerate() {
                if av == 0.0 {
                    continue;
                }
                let brow = &b.data[kk * n..(kk + 1) * n];
                let orow = &mut out[i * n..(i + 1) * n];
                for (o, &bv) in orow.iter_mut().zip(brow) {
                    *o += av * bv;
                }
            }
        }

        let mut shape: Vec<usize> = free_a.iter().map(|&ax| self.shape[ax]).collect();
        shape.extend(free_b.iter().map(|&ax| other.shape[ax]));
        let labels = match (&self.labels, &other.labels) {
            (Some(la), Some(lb)) => {
                let mut ls: Vec<String> = free_a.iter().map(|&ax| la[ax].clone()).collect();
                ls.extend(free_b.iter().map(|&ax| lb[ax].clone()));
                Some(ls)
            }
            _ => None,
        };
        Ok(Self {
            shape,
            data: out,
            labels,
        })
    }

    /// Tensor (outer) product: result shape is the concatenation of both
    /// shapes, entries are all pairwise products.
    pub fn outer(&self, other: &Self) -> Self {
        let mut shape = self.shape.clone();
        shape.extend(other.shape.iter().copied());
        let mut data = Vec::with_capacity(self.data.len() * other.data.len());
        for &av in &self.data {
            data.extend(other.data.iter().map(|&bv| av * bv));
        }
        Self {
            shape,
            data,
            labels: None,
        }
    }

    pub fn scale(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= factor;
        }
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::DimensionMismatch {
                tensor: "add".into(),
                detail: format!("shapes {:?} and {:?}", self.shape, other.shape),
            });
        }
        let mut out = self.clone();
        for (o, &v) in out.data.iter_mut().zip(&other.data) {
            *o += v;
        }
        out.labels = None;
        Ok(out)
    }

    /// Largest absolute elementwise difference; shapes must match.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.shape, other.shape);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Result of a (possibly truncated) singular value decomposition.
///
/// `u` has orthonormal columns, `v` orthonormal rows, and `lambda` holds the
/// retained singular values in descending order, so that the input is
/// approximated by `u * diag(lambda) * v`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SvdFactors {
    pub u: DenseTensor,
    pub lambda: Vec<f64>,
    pub v: DenseTensor,
}

impl SvdFactors {
    pub fn chi(&self) -> usize {
        self.lambda.len()
    }

    /// `u * diag(lambda) * v`.
    pub fn reconstruct(&self) -> DenseTensor {
        let (m, k) = (self.u.shape()[0], self.u.shape()[1]);
        let n = self.v.shape()[1];
        let mut data = vec![0.0; m * n];
        for i in 0..m {
            for kk in 0..k {
                let w = self.u.data()[i * k + kk] * self.lambda[kk];
                if w == 0.0 {
                    continue;
                }
                let vrow = &self.v.data()[kk * n..(kk + 1) * n];
                let orow = &mut data[i * n..(i + 1) * n];
                for (o, &vv) in orow.iter_mut().zip(vrow) {
                    *o += w * vv;
                }
            }
        }
        DenseTensor {
            shape: vec![m, n],
            data,
            labels: None,
        }
    }

    /// Reconstruction truncated to the `chi` leading singular triples.
    pub fn truncate(&self, chi: usize) -> SvdFactors {
        let keep = chi.min(self.lambda.len());
        let (m, k) = (self.u.shape()[0], self.u.shape()[1]);
        let n = self.v.shape()[1];
        let mut u = DenseTensor::zeros(&[m, keep]);
        for i in 0..m {
            for j in 0..keep {
                u.data[i * keep + j] = self.u.data[i * k + j];
            }
        }
        let v = DenseTensor::new(
            vec![keep, n],
            self.v.data[..keep * n].to_vec(),
        )
        .expect("truncated v shape");
        SvdFactors {
            u,
            lambda: self.lambda[..keep].to_vec(),
            v,
        }
    }
}

/// Truncated SVD of a rank-2 tensor, keeping the `min(chi, min(m, n))`
/// leading singular triples.
///
/// If `chi` covers the full numerical rank the factors reconstruct the input
/// (to ~1e-8 elementwise); otherwise they form the Frobenius-optimal rank-chi
/// approximation. Column signs are fixed so the largest-magnitude entry of
/// each left singular vector is positive, making the factors reproducible.
pub fn svd_truncated(m: &DenseTensor, chi: usize) -> Result<SvdFactors> {
    if chi == 0 {
        return Err(Error::InvalidChi);
    }
    if m.rank() != 2 {
        return Err(Error::NotAMatrix { rank: m.rank() });
    }
    let (rows, cols) = (m.shape()[0], m.shape()[1]);
    let mat = faer::Mat::from_fn(rows, cols, |i, j| m.data[i * cols + j]);
    let svd = mat
        .svd()
        .map_err(|_| Error::ShapeDataMismatch {
            shape: m.shape.clone(),
            data_len: m.data.len(),
        })?;
    let u = svd.U();
    let v = svd.V();
    let sv = svd.S();
    let n_sv = rows.min(cols);

    // faer returns singular values in non-increasing order; sort defensively
    // so truncation always keeps the leading triples.
    let mut order: Vec<usize> = (0..n_sv).collect();
    order.sort_by(|&i, &j| sv[j].partial_cmp(&sv[i]).unwrap().then(i.cmp(&j)));
    let keep = chi.min(n_sv);

    let mut u_out = DenseTensor::zeros(&[rows, keep]);
    let mut v_out = DenseTensor::zeros(&[keep, cols]);
    let mut lambda = Vec::with_capacity(keep);
    for (jj, &src) in order.iter().take(keep).enumerate() {
        lambda.push(sv[src]);
        let mut max_abs = 0.0;
        let mut max_val = 0.0;
        for i in 0..rows {
            let x = u[(i, src)];
            if x.abs() > max_abs {
                max_abs = x.abs();
                max_val = x;
            }
        }
        let sign = if max_val < 0.0 { -1.0 } else { 1.0 };
        for i in 0..rows {
            u_out.data[i * keep + jj] = sign * u[(i, src)];
        }
        for j in 0..cols {
            v_out.data[jj * cols + j] = sign * v[(j, src)];
        }
    }
    Ok(SvdFactors {
        u: u_out,
        lambda,
        v: v_out,
    })
}
