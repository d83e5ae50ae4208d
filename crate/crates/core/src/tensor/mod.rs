//! Dense complex tensors with named legs.
//!
//! Entries are stored row-major over the leg sequence: the last leg varies
//! fastest. Legs are always matched by id, never by position.

mod ops;
mod poly;

pub use ops::{
    apply_local_map, contract, group_legs, outer, schmidt_rank, singular_values_across,
    split_leg, svd_truncate, SvdSplit,
};
pub use poly::{poly_apply, MatrixPoly, PolyTensor};

use crate::json::{complex_to_pair, pair_to_complex};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

/// A tensor index: a unique label and its dimension.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Leg {
    pub id: String,
    pub dim: usize,
}

impl Leg {
    pub fn new(id: impl Into<String>, dim: usize) -> Self {
        Self { id: id.into(), dim }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TensorRepr", into = "TensorRepr")]
pub struct DenseTensor {
    legs: Vec<Leg>,
    data: Vec<C64>,
}

#[derive(Serialize, Deserialize)]
struct TensorRepr {
    legs: Vec<Leg>,
    data: Vec<[f64; 2]>,
}

impl TryFrom<TensorRepr> for DenseTensor {
    type Error = Error;

    fn try_from(r: TensorRepr) -> Result<Self> {
        DenseTensor::new(r.legs, r.data.into_iter().map(pair_to_complex).collect())
    }
}

impl From<DenseTensor> for TensorRepr {
    fn from(t: DenseTensor) -> Self {
        TensorRepr { data: t.data.iter().map(|c| complex_to_pair(*c)).collect(), legs: t.legs }
    }
}

pub(crate) fn check_legs(legs: &[Leg]) -> Result<()> {
    let mut seen = HashSet::new();
    for leg in legs {
        if leg.dim == 0 {
            return Err(Error::InvalidTensor(format!("leg `{}` has dimension 0", leg.id)));
        }
        if !seen.insert(leg.id.as_str()) {
            return Err(Error::DuplicateLeg(leg.id.clone()));
        }
    }
    Ok(())
}

pub(crate) fn row_major_strides(dims: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; dims.len()];
    for i in (0..dims.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * dims[i + 1];
    }
    strides
}

/// Visits every multi-index of `dims` in row-major order.
pub(crate) fn for_each_index(dims: &[usize], mut f: impl FnMut(&[usize])) {
    if dims.iter().any(|&d| d == 0) {
        return;
    }
    let mut idx = vec![0usize; dims.len()];
    loop {
        f(&idx);
        let mut pos = dims.len();
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < dims[pos] {
                break;
            }
            idx[pos] = 0;
        }
    }
}

impl DenseTensor {
    pub fn new(legs: Vec<Leg>, data: Vec<C64>) -> Result<Self> {
        check_legs(&legs)?;
        let len: usize = legs.iter().map(|l| l.dim).product();
        if data.len() != len {
            return Err(Error::InvalidTensor(format!(
                "data length {} does not match leg dimensions (expected {len})",
                data.len()
            )));
        }
        if data.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidTensor("non-finite entry".into()));
        }
        Ok(Self { legs, data })
    }

    pub fn zeros(legs: Vec<Leg>) -> Result<Self> {
        let len = legs.iter().map(|l| l.dim).product();
        Self::new(legs, vec![C64::new(0.0, 0.0); len])
    }

    /// Rank-0 tensor.
    pub fn scalar(value: C64) -> Self {
        Self { legs: Vec::new(), data: vec![value] }
    }

    pub fn from_fn(legs: Vec<Leg>, mut f: impl FnMut(&[usize]) -> C64) -> Result<Self> {
        check_legs(&legs)?;
        let dims: Vec<usize> = legs.iter().map(|l| l.dim).collect();
        let mut data = Vec::with_capacity(dims.iter().product());
        for_each_index(&dims, |idx| data.push(f(idx)));
        Self::new(legs, data)
    }

    /// Tensor that is zero except at the listed multi-indices.
    pub fn from_entries(legs: Vec<Leg>, entries: &[(&[usize], C64)]) -> Result<Self> {
        let mut t = Self::zeros(legs)?;
        for (idx, v) in entries {
            let off = t.offset(idx)?;
            t.data[off] += *v;
        }
        Ok(t)
    }

    pub fn legs(&self) -> &[Leg] {
        &self.legs
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    pub fn dims(&self) -> Vec<usize> {
        self.legs.iter().map(|l| l.dim).collect()
    }

    pub fn rank(&self) -> usize {
        self.legs.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn leg_ids(&self) -> Vec<&str> {
        self.legs.iter().map(|l| l.id.as_str()).collect()
    }

    pub fn has_leg(&self, id: &str) -> bool {
        self.legs.iter().any(|l| l.id == id)
    }

    pub fn leg_position(&self, id: &str) -> Result<usize> {
        self.legs.iter().position(|l| l.id == id).ok_or_else(|| Error::UnknownLeg(id.to_string()))
    }

    pub fn leg(&self, id: &str) -> Result<&Leg> {
        Ok(&self.legs[self.leg_position(id)?])
    }

    fn offset(&self, idx: &[usize]) -> Result<usize> {
        if idx.len() != self.legs.len() {
            return Err(Error::InvalidArgument(format!(
                "index of length {} for tensor of rank {}",
                idx.len(),
                self.legs.len()
            )));
        }
        let mut off = 0;
        for (i, leg) in idx.iter().zip(&self.legs) {
            if *i >= leg.dim {
                return Err(Error::InvalidArgument(format!("index {i} out of range for leg `{}`", leg.id)));
            }
            off = off * leg.dim + i;
        }
        Ok(off)
    }

    /// Entry at a multi-index given in leg order.
    pub fn get(&self, idx: &[usize]) -> Result<C64> {
        Ok(self.data[self.offset(idx)?])
    }

    pub fn set(&mut self, idx: &[usize], value: C64) -> Result<()> {
        let off = self.offset(idx)?;
        self.data[off] = value;
        Ok(())
    }

    pub fn relabel(mut self, from: &str, to: &str) -> Result<Self> {
        let pos = self.leg_position(from)?;
        self.legs[pos].id = to.to_string();
        check_legs(&self.legs)?;
        Ok(self)
    }

    /// Renames every leg through `f`.
    pub fn relabel_with(mut self, mut f: impl FnMut(&str) -> String) -> Result<Self> {
        for leg in &mut self.legs {
            leg.id = f(&leg.id);
        }
        check_legs(&self.legs)?;
        Ok(self)
    }

    /// Same entries with the legs reordered to `order`.
    pub fn permuted(&self, order: &[&str]) -> Result<Self> {
        if order.len() != self.legs.len() {
            return Err(Error::InvalidArgument(format!(
                "permutation lists {} legs, tensor has {}",
                order.len(),
                self.legs.len()
            )));
        }
        let positions = order.iter().map(|id| self.leg_position(id)).collect::<Result<Vec<_>>>()?;
        let mut seen = HashSet::new();
        for p in &positions {
            if !seen.insert(*p) {
                return Err(Error::DuplicateLeg(self.legs[*p].id.clone()));
            }
        }
        if positions.iter().enumerate().all(|(i, &p)| i == p) {
            return Ok(self.clone());
        }
        let old_strides = row_major_strides(&self.dims());
        let legs: Vec<Leg> = positions.iter().map(|&p| self.legs[p].clone()).collect();
        let dims: Vec<usize> = legs.iter().map(|l| l.dim).collect();
        let strides: Vec<usize> = positions.iter().map(|&p| old_strides[p]).collect();
        let mut data = Vec::with_capacity(self.data.len());
        for_each_index(&dims, |idx| {
            let off: usize = idx.iter().zip(&strides).map(|(i, s)| i * s).sum();
            data.push(self.data[off]);
        });
        Ok(Self { legs, data })
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self { legs: self.legs.clone(), data: self.data.iter().map(|x| x * c).collect() }
    }

    pub fn conj(&self) -> Self {
        Self { legs: self.legs.clone(), data: self.data.iter().map(|x| x.conj()).collect() }
    }

    /// `other` reordered to this tensor's leg order, if the signatures agree.
    fn aligned<'a>(&self, other: &'a Self) -> Result<std::borrow::Cow<'a, Self>> {
        if self.legs == other.legs {
            return Ok(std::borrow::Cow::Borrowed(other));
        }
        if !self.same_signature(other) {
            return Err(Error::DimensionMismatch(format!(
                "leg signatures differ: {:?} vs {:?}",
                self.legs, other.legs
            )));
        }
        Ok(std::borrow::Cow::Owned(other.permuted(&self.leg_ids())?))
    }

    /// True when both tensors carry the same leg ids with the same dims.
    pub fn same_signature(&self, other: &Self) -> bool {
        self.legs.len() == other.legs.len()
            && self.legs.iter().all(|l| other.legs.iter().any(|m| m == l))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let o = self.aligned(other)?;
        Ok(Self { legs: self.legs.clone(), data: self.data.iter().zip(&o.data).map(|(a, b)| a + b).collect() })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        let o = self.aligned(other)?;
        Ok(Self { legs: self.legs.clone(), data: self.data.iter().zip(&o.data).map(|(a, b)| a - b).collect() })
    }

    pub(crate) fn add_assign_aligned(&mut self, other: &Self) -> Result<()> {
        let o = self.aligned(other)?.into_owned();
        for (a, b) in self.data.iter_mut().zip(o.data) {
            *a += b;
        }
        Ok(())
    }

    /// `<self, other>`, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        let o = self.aligned(other)?;
        Ok(self.data.iter().zip(&o.data).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        let o = self.aligned(other)?;
        Ok(self.data.iter().zip(&o.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }

    /// Value of a rank-0 tensor.
    pub fn scalar_value(&self) -> Result<C64> {
        if self.legs.is_empty() {
            Ok(self.data[0])
        } else {
            Err(Error::InvalidArgument(format!("tensor of rank {} is not a scalar", self.legs.len())))
        }
    }

    /// Nonzero entries as (multi-index, value), in row-major order.
    pub fn support(&self, tol: f64) -> Vec<(Vec<usize>, C64)> {
        let mut out = Vec::new();
        let mut k = 0;
        for_each_index(&self.dims(), |idx| {
            let v = self.data[k];
            if v.norm() > tol {
                out.push((idx.to_vec(), v));
            }
            k += 1;
        });
        out
    }
}
