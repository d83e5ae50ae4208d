use super::ops::apply_local_map;
use super::{DenseTensor, Leg};
use crate::{Error, Result, C64};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// A matrix whose entries are polynomials in ε with nonnegative integer powers.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixPoly {
    rows: usize,
    cols: usize,
    terms: BTreeMap<u32, DMatrix<C64>>,
}

fn is_exact_zero(m: &DMatrix<C64>) -> bool {
    m.iter().all(|c| c.re == 0.0 && c.im == 0.0)
}

impl MatrixPoly {
    /// The zero polynomial of the given shape.
    pub fn zero(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(format!("matrix shape {rows}x{cols}")));
        }
        Ok(Self { rows, cols, terms: BTreeMap::new() })
    }

    pub fn constant(m: DMatrix<C64>) -> Result<Self> {
        Self::monomial(0, m)
    }

    pub fn monomial(exponent: u32, m: DMatrix<C64>) -> Result<Self> {
        let mut p = Self::zero(m.nrows(), m.ncols())?;
        p.add_term(exponent, m)?;
        Ok(p)
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::constant(DMatrix::identity(n, n))
    }

    pub fn from_terms(rows: usize, cols: usize, terms: impl IntoIterator<Item = (u32, DMatrix<C64>)>) -> Result<Self> {
        let mut p = Self::zero(rows, cols)?;
        for (e, m) in terms {
            p.add_term(e, m)?;
        }
        Ok(p)
    }

    /// Adds `ε^exponent · m`; terms that cancel exactly are dropped.
    pub fn add_term(&mut self, exponent: u32, m: DMatrix<C64>) -> Result<()> {
        if m.nrows() != self.rows || m.ncols() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "term of shape {}x{} in a {}x{} polynomial",
                m.nrows(),
                m.ncols(),
                self.rows,
                self.cols
            )));
        }
        if m.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidArgument("non-finite matrix entry".into()));
        }
        let entry = self.terms.entry(exponent).or_insert_with(|| DMatrix::zeros(m.nrows(), m.ncols()));
        *entry += m;
        if is_exact_zero(entry) {
            self.terms.remove(&exponent);
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn terms(&self) -> &BTreeMap<u32, DMatrix<C64>> {
        &self.terms
    }

    pub fn term(&self, exponent: u32) -> Option<&DMatrix<C64>> {
        self.terms.get(&exponent)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn min_exponent(&self) -> Option<u32> {
        self.terms.keys().next().copied()
    }

    pub fn max_exponent(&self) -> Option<u32> {
        self.terms.keys().next_back().copied()
    }

    /// Highest power of ε, or 0 for constant and zero polynomials.
    pub fn degree(&self) -> u32 {
        self.max_exponent().unwrap_or(0)
    }

    pub fn evaluate(&self, eps: C64) -> DMatrix<C64> {
        let mut out = DMatrix::zeros(self.rows, self.cols);
        for (&e, m) in &self.terms {
            out += m * eps.powu(e);
        }
        out
    }

    /// `self · other`, so `other` acts first.
    pub fn compose(&self, other: &MatrixPoly) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot compose {}x{} after {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zero(self.rows, other.cols)?;
        for (&ea, a) in &self.terms {
            for (&eb, b) in &other.terms {
                out.add_term(ea + eb, a * b)?;
            }
        }
        Ok(out)
    }

    /// Kronecker product; the row index of `self` is the more significant digit.
    pub fn kron(&self, other: &MatrixPoly) -> Result<Self> {
        let mut out = Self::zero(self.rows * other.rows, self.cols * other.cols)?;
        for (&ea, a) in &self.terms {
            for (&eb, b) in &other.terms {
                out.add_term(ea + eb, a.kronecker(b))?;
            }
        }
        Ok(out)
    }

    pub fn scaled(&self, c: C64) -> Self {
        let mut out = self.clone();
        out.terms = self.terms.iter().map(|(&e, m)| (e, m * c)).filter(|(_, m)| !is_exact_zero(m)).collect();
        out
    }

    /// Trace as a polynomial, keyed by exponent (square matrices only).
    pub fn trace(&self) -> Result<BTreeMap<u32, C64>> {
        if self.rows != self.cols {
            return Err(Error::DimensionMismatch(format!("trace of a {}x{} matrix", self.rows, self.cols)));
        }
        let mut out = BTreeMap::new();
        for (&e, m) in &self.terms {
            let t = m.trace();
            if t != C64::new(0.0, 0.0) {
                out.insert(e, t);
            }
        }
        Ok(out)
    }
}

/// A tensor whose entries are polynomials in ε, stored as one dense tensor
/// per exponent. Every term shares the same leg signature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolyRepr", into = "PolyRepr")]
pub struct PolyTensor {
    legs: Vec<Leg>,
    terms: BTreeMap<u32, DenseTensor>,
}

#[derive(Serialize, Deserialize)]
struct PolyRepr {
    legs: Vec<Leg>,
    terms: BTreeMap<u32, DenseTensor>,
}

impl TryFrom<PolyRepr> for PolyTensor {
    type Error = Error;

    fn try_from(r: PolyRepr) -> Result<Self> {
        let mut p = PolyTensor::zero(r.legs)?;
        for (e, t) in r.terms {
            p.add_term(e, &t)?;
        }
        Ok(p)
    }
}

impl From<PolyTensor> for PolyRepr {
    fn from(p: PolyTensor) -> Self {
        PolyRepr { legs: p.legs, terms: p.terms }
    }
}

impl PolyTensor {
    pub fn zero(legs: Vec<Leg>) -> Result<Self> {
        super::check_legs(&legs)?;
        Ok(Self { legs, terms: BTreeMap::new() })
    }

    pub fn constant(t: DenseTensor) -> Self {
        let legs = t.legs().to_vec();
        let mut terms = BTreeMap::new();
        if !t.is_zero() {
            terms.insert(0, t);
        }
        Self { legs, terms }
    }

    /// Adds `ε^exponent · t`, matching legs by id. Exactly cancelling terms are removed.
    pub fn add_term(&mut self, exponent: u32, t: &DenseTensor) -> Result<()> {
        let probe = DenseTensor { legs: self.legs.clone(), data: Vec::new() };
        if !probe.same_signature(t) {
            return Err(Error::DimensionMismatch(format!(
                "term legs {:?} differ from {:?}",
                t.legs(),
                self.legs
            )));
        }
        let aligned = if t.legs() == self.legs.as_slice() { t.clone() } else { t.permuted(&probe.leg_ids())? };
        match self.terms.get_mut(&exponent) {
            Some(existing) => {
                existing.add_assign_aligned(&aligned)?;
                if existing.is_zero() {
                    self.terms.remove(&exponent);
                }
            }
            None => {
                if !aligned.is_zero() {
                    self.terms.insert(exponent, aligned);
                }
            }
        }
        Ok(())
    }

    pub fn legs(&self) -> &[Leg] {
        &self.legs
    }

    pub fn terms(&self) -> &BTreeMap<u32, DenseTensor> {
        &self.terms
    }

    pub fn term(&self, exponent: u32) -> Option<&DenseTensor> {
        self.terms.get(&exponent)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn min_exponent(&self) -> Option<u32> {
        self.terms.keys().next().copied()
    }

    pub fn max_exponent(&self) -> Option<u32> {
        self.terms.keys().next_back().copied()
    }

    /// Number of stored coefficients across all terms.
    pub fn entry_count(&self) -> usize {
        self.terms.values().map(|t| t.len()).sum()
    }

    /// Exponents whose term has some entry above `tol` times the largest entry overall.
    pub fn significant_exponents(&self, tol: f64) -> Vec<u32> {
        let scale = self.terms.values().map(|t| t.max_abs()).fold(0.0, f64::max);
        self.terms.iter().filter(|(_, t)| t.max_abs() > tol * scale).map(|(&e, _)| e).collect()
    }

    pub fn evaluate(&self, eps: C64) -> Result<DenseTensor> {
        let mut out = DenseTensor::zeros(self.legs.clone())?;
        for (&e, t) in &self.terms {
            let w = eps.powu(e);
            for (o, v) in out.data.iter_mut().zip(&t.data) {
                *o += v * w;
            }
        }
        Ok(out)
    }
}

/// Expands `(⊗ A_leg(ε)) t` exactly, collecting terms by total exponent.
///
/// Legs without a map are left untouched.
pub fn poly_apply(t: &DenseTensor, maps: &[(&str, &MatrixPoly)]) -> Result<PolyTensor> {
    let mut current: BTreeMap<u32, DenseTensor> = BTreeMap::new();
    current.insert(0, t.clone());
    let mut legs = t.legs().to_vec();
    for (leg, map) in maps {
        let pos = t.leg_position(leg)?;
        if map.cols() != legs[pos].dim {
            return Err(Error::DimensionMismatch(format!(
                "map on `{leg}` has {} columns, leg dim is {}",
                map.cols(),
                legs[pos].dim
            )));
        }
        legs[pos].dim = map.rows();
        let mut next = PolyTensor::zero(legs.clone())?;
        for (&e1, term) in &current {
            for (&e2, m) in map.terms() {
                next.add_term(e1 + e2, &apply_local_map(term, leg, m)?)?;
            }
        }
        current = next.terms;
    }
    let mut out = PolyTensor::zero(legs)?;
    out.terms = current;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn diag(v: &[f64]) -> DMatrix<C64> {
        DMatrix::from_diagonal(&DVector::from_iterator(v.len(), v.iter().map(|&x| c(x))))
    }

    #[test]
    fn matrix_poly_algebra() {
        let a = MatrixPoly::from_terms(2, 2, [(0, diag(&[1.0, 0.0])), (1, diag(&[0.0, 1.0]))]).unwrap();
        let sq = a.compose(&a).unwrap();
        assert_eq!(sq.terms().len(), 2);
        assert_eq!(sq.term(2).unwrap(), &diag(&[0.0, 1.0]));
        let k = a.kron(&a).unwrap();
        assert_eq!((k.rows(), k.cols()), (4, 4));
        assert_eq!(k.evaluate(c(0.5)), diag(&[1.0, 0.5, 0.5, 0.25]));
        let mut z = a.clone();
        z.add_term(1, -diag(&[0.0, 1.0])).unwrap();
        assert_eq!(z.max_exponent(), Some(0));
        assert!(a.clone().add_term(0, DMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn constant_maps_give_single_term() {
        let t = DenseTensor::from_fn(vec![Leg::new("a", 2), Leg::new("b", 2)], |i| c((i[0] + 2 * i[1]) as f64 + 1.0)).unwrap();
        let m = MatrixPoly::constant(DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)])).unwrap();
        let p = poly_apply(&t, &[("a", &m)]).unwrap();
        assert_eq!(p.terms().len(), 1);
        let direct = apply_local_map(&t, "a", m.term(0).unwrap()).unwrap();
        assert_eq!(p.term(0).unwrap(), &direct);
    }

    #[test]
    fn ghz_under_diag_one_eps() {
        let g = DenseTensor::from_entries(
            vec![Leg::new("a", 2), Leg::new("b", 2), Leg::new("c", 2)],
            &[(&[0, 0, 0], c(1.0)), (&[1, 1, 1], c(1.0))],
        )
        .unwrap();
        let m = MatrixPoly::from_terms(2, 2, [(0, diag(&[1.0, 0.0])), (1, diag(&[0.0, 1.0]))]).unwrap();
        let p = poly_apply(&g, &[("a", &m), ("b", &m), ("c", &m)]).unwrap();
        assert_eq!(p.terms().keys().copied().collect::<Vec<_>>(), vec![0, 3]);
        let at = p.evaluate(c(0.5)).unwrap();
        assert_eq!(at.get(&[1, 1, 1]).unwrap(), c(0.125));
    }

    #[test]
    fn poly_tensor_json_round_trip() {
        let t = DenseTensor::new(vec![Leg::new("a", 2)], vec![c(1.0), c(-2.0)]).unwrap();
        let mut p = PolyTensor::constant(t.clone());
        p.add_term(3, &t.scaled(c(0.5))).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        let back: PolyTensor = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        p.add_term(3, &t.scaled(c(-0.5))).unwrap();
        assert_eq!(p.max_exponent(), Some(0));
    }
}
