//! Explicit restrictions and degenerations between small plaquettes.

mod diagonal;
mod rvb;
pub mod smith;

pub use diagonal::{
    check_cycle_vectors, cycle_orthogonal_vectors, diag_cycle_to_ghz, diag_mamu_to_ghz, mamu4_to_ghz, optimal_g,
    optimal_g_mamu, verify_ghz_equivalence, DiagonalDegeneration, GhzCheck, SolutionSet, ENUMERATION_BUDGET,
};

pub use rvb::RvbPatch;

use crate::conversions::{LocalMapFamily, PlaquetteFamily};
use crate::structures::{cycle_structure, single_edge_structure, EntanglementStructure, Plaquette};
use crate::tensor::{DenseTensor, Leg, MatrixPoly};
use crate::{Error, Result, C64};
use nalgebra::DMatrix;
use std::collections::BTreeMap;

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn real_matrix(rows: usize, cols: usize, entries: &[f64]) -> DMatrix<C64> {
    DMatrix::from_row_iterator(rows, cols, entries.iter().map(|&x| c(x)))
}

/// Vertex map `Σ_i |i⟩⟨αβ| (M_i)_{αβ}` of an MPS site, with column index `α·cols + β`.
pub fn mps_vertex_map(mats: &[DMatrix<C64>]) -> Result<DMatrix<C64>> {
    let first = mats.first().ok_or_else(|| Error::InvalidArgument("no MPS matrices".into()))?;
    let (r, cl) = first.shape();
    if mats.iter().any(|m| m.shape() != (r, cl)) {
        return Err(Error::DimensionMismatch("MPS matrices differ in shape".into()));
    }
    Ok(DMatrix::from_fn(mats.len(), r * cl, |i, col| mats[i][(col / cl, col % cl)]))
}

/// Three-site MPS representation of a tripartite tensor: `T_{ijk} = tr(M^0_i M^1_j M^2_k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MpsTriple {
    /// Bond dimensions; site `l` carries `dims[l] × dims[l+1]` matrices.
    pub dims: [usize; 3],
    pub matrices: [Vec<DMatrix<C64>>; 3],
}

impl MpsTriple {
    pub fn plaquette(&self) -> Plaquette {
        Plaquette::Mamu { dims: self.dims.to_vec() }
    }

    /// Vertex maps acting on the MaMu slots of party `l`.
    pub fn party_maps(&self) -> Result<Vec<DMatrix<C64>>> {
        self.matrices.iter().map(|m| mps_vertex_map(m)).collect()
    }

    /// As a constant family on [`single_edge_structure`] of the MaMu plaquette.
    pub fn restriction_family(&self) -> Result<(EntanglementStructure, LocalMapFamily)> {
        let structure = single_edge_structure(self.plaquette())?;
        let maps = self.party_maps()?.into_iter().enumerate().map(|(l, m)| (format!("p{l}"), m)).collect();
        Ok((structure, LocalMapFamily::constant(maps)?))
    }

    /// The tensor by direct trace evaluation, legs `p0, p1, p2`.
    pub fn contract(&self) -> Result<DenseTensor> {
        let legs = (0..3).map(|l| Leg::new(format!("p{l}"), self.matrices[l].len())).collect();
        DenseTensor::from_fn(legs, |i| {
            (&self.matrices[0][i[0]] * &self.matrices[1][i[1]] * &self.matrices[2][i[2]]).trace()
        })
    }
}

/// λ from MaMu with bonds (2, 3, 2): the first party holds the 2- and 3-dimensional bonds.
pub fn lambda_restriction_223() -> MpsTriple {
    let h = 0.5;
    let m1 = vec![
        real_matrix(2, 3, &[0.0, h, 0.0, h, 0.0, 0.0]),
        real_matrix(2, 3, &[0.0, -1.0, 0.0, 1.0, 0.0, 0.0]),
        real_matrix(2, 3, &[1.0, 0.0, 1.0, 0.0, -1.0, 0.0]),
    ];
    let m2 = vec![
        real_matrix(3, 2, &[0.0, h, h, 0.0, 0.0, 0.0]),
        real_matrix(3, 2, &[0.0, -1.0, 1.0, 0.0, 0.0, 0.0]),
        real_matrix(3, 2, &[1.0, 0.0, 0.0, -1.0, 1.0, 0.0]),
    ];
    let m3 = vec![
        real_matrix(2, 2, &[0.0, h, h, 0.0]),
        real_matrix(2, 2, &[0.0, -1.0, 1.0, 0.0]),
        real_matrix(2, 2, &[1.0, 0.0, 0.0, -1.0]),
    ];
    MpsTriple { dims: [2, 3, 2], matrices: [m1, m2, m3] }
}

/// λ from MaMu(3,3,3) with each bond carrying a spin-½ (levels 0, 1) or a
/// vacancy (level 2). Physical 0/1 puts the site in a singlet with one
/// neighbour along the cycle; physical 2 leaves both bonds vacant.
pub fn lambda_restriction_333() -> MpsTriple {
    let eps = |y: usize, x: usize| match (y, x) {
        (0, 1) => 1.0,
        (1, 0) => -1.0,
        _ => 0.0,
    };
    let site: Vec<DMatrix<C64>> = (0..3)
        .map(|x| {
            let mut m = DMatrix::zeros(3, 3);
            if x == 2 {
                m[(2, 2)] = c(1.0);
            } else {
                m[(2, x)] = c(1.0);
                for y in 0..2 {
                    m[(y, 2)] = c(eps(y, x));
                }
            }
            m
        })
        .collect();
    MpsTriple { dims: [3, 3, 3], matrices: [site.clone(), site.clone(), site] }
}

/// Degeneration of MaMu(2,2,2) to λ with `d = 2`, `e = 2`. The third party's
/// `|2⟩` matrix carries the extra `ε²/2 · I`.
pub fn lambda_degeneration_222() -> Result<PlaquetteFamily> {
    let h = 0.5;
    let parties = (0..3)
        .map(|j| {
            // rows: physical level, columns: α·2 + β
            let lin = real_matrix(3, 4, &[0.0, h, h, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
            let cst = real_matrix(3, 4, &[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, -1.0]);
            let mut terms = vec![(0, cst), (1, lin)];
            if j == 2 {
                terms.push((2, real_matrix(3, 4, &[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, h, 0.0, 0.0, h])));
            }
            MatrixPoly::from_terms(3, 4, terms)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PlaquetteFamily { parties, d: 2, e: 2 })
}

/// The expected residual of [`lambda_degeneration_222`] at order `ε⁴`:
/// `(¼|00⟩ − |11⟩) ⊗ |2⟩` on legs `p0, p1, p2`.
pub fn lambda_degeneration_residual() -> Result<DenseTensor> {
    let legs = (0..3).map(|l| Leg::new(format!("p{l}"), 3)).collect();
    DenseTensor::from_entries(legs, &[(&[0, 0, 2], c(0.25)), (&[1, 1, 2], c(-1.0))])
}

/// `ω = e^{iπ/L}`, the principal `L`-th root of −1.
fn w_phase(len: usize) -> C64 {
    C64::from_polar(1.0, std::f64::consts::PI / len as f64)
}

/// `M_0 = diag(1, ω)` and `M_1 = diag(ε, 0)` as matrix polynomials.
pub fn w_matrices(len: usize) -> Result<[MatrixPoly; 2]> {
    let m0 = MatrixPoly::constant(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), w_phase(len)])))?;
    let m1 = MatrixPoly::monomial(1, real_matrix(2, 2, &[1.0, 0.0, 0.0, 0.0]))?;
    Ok([m0, m1])
}

/// Degeneration of the cycle of `L` maximally entangled qubit pairs to `W(L)`
/// with `d = 1`, `e = L − 1`.
pub fn w_border_mps(len: usize) -> Result<(EntanglementStructure, LocalMapFamily)> {
    if len < 2 {
        return Err(Error::InvalidArgument(format!("W family needs L >= 2, got {len}")));
    }
    let structure = cycle_structure(len, 2)?;
    let [m0, m1] = w_matrices(len)?;
    let mut map = MatrixPoly::zero(2, 4)?;
    for (row, m) in [(0, &m0), (1, &m1)] {
        for (&k, mat) in m.terms() {
            let mut t = DMatrix::zeros(2, 4);
            for a in 0..2 {
                for b in 0..2 {
                    t[(row, 2 * a + b)] = mat[(a, b)];
                }
            }
            map.add_term(k, t)?;
        }
    }
    let maps = structure.vertices().iter().map(|v| (v.clone(), map.clone())).collect();
    Ok((structure, LocalMapFamily::new(maps)))
}

/// Checks `tr(M_0^L) = 0` and `tr(M_0^n M_1^m) = ε^m` for `n + m = L`, `m ≥ 1`.
pub fn check_w_traces(len: usize, tol: f64) -> Result<()> {
    let [m0, m1] = w_matrices(len)?;
    let power = |m: &MatrixPoly, p: usize| -> Result<MatrixPoly> {
        let mut acc = MatrixPoly::identity(2)?;
        for _ in 0..p {
            acc = acc.compose(m)?;
        }
        Ok(acc)
    };
    for m in 0..=len {
        let tr = power(&m0, len - m)?.compose(&power(&m1, m)?)?.trace()?;
        for (&k, &v) in &tr {
            let want = if m > 0 && k as usize == m { c(1.0) } else { c(0.0) };
            if (v - want).norm() > tol {
                return Err(Error::Certificate(format!("tr(M0^{} M1^{m}) has coefficient {v} at ε^{k}", len - m)));
            }
        }
        if m > 0 && !tr.contains_key(&(m as u32)) {
            return Err(Error::Certificate(format!("tr(M0^{} M1^{m}) lacks the ε^{m} term", len - m)));
        }
    }
    Ok(())
}

/// `ε^{-1}((|0⟩ + ε|1⟩)^{⊗L} − |0…0⟩)` on legs `v0, …, v{L-1}`; equals `W(L)` at `ε = 0`.
pub fn w_product_sample(len: usize, eps: C64) -> Result<DenseTensor> {
    if len == 0 {
        return Err(Error::InvalidArgument("W sample needs L >= 1".into()));
    }
    let legs = (0..len).map(|l| Leg::new(format!("v{l}"), 2)).collect();
    DenseTensor::from_fn(legs, |i| {
        let ones = i.iter().sum::<usize>() as i32;
        if ones == 0 {
            c(0.0)
        } else {
            eps.powi(ones - 1)
        }
    })
}

/// The constructions this module provides, by name.
pub fn catalogue() -> BTreeMap<&'static str, &'static str> {
    BTreeMap::from([
        ("w", "cycle of qubit pairs to W(L), d=1, e=L-1"),
        ("lambda-restriction-223", "MaMu(2,3,2) restricts to lambda"),
        ("lambda-restriction-333", "MaMu(3,3,3) restricts to lambda (spin-1/2 plus vacancy bonds)"),
        ("lambda-degeneration", "MaMu(2,2,2) degenerates to lambda, d=2, e=2"),
        ("mamu3-ghz", "diagonal degeneration of MaMu(k1,k2,k3) to a GHZ state"),
        ("mamu4-ghz", "diagonal degeneration of MaMu[4](k) to a GHZ state"),
    ])
}
