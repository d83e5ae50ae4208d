//! Border representation of the RVB state on a kagome patch: every triangle
//! carries MaMu(2,2,2) degenerated to λ, so `T(ε) = ε^{-dF} (⊗ A_v(ε)) Ψ`
//! is a polynomial of degree `eF` with `T(0)` the λ patch.

use super::lambda_degeneration_222;
use crate::boundary::family_sandwich;
use crate::conversions::{apply_restriction, lift_to_lattice, LiftedFamily};
use crate::structures::{kagome_lambda_structure, kagome_mamu_structure, EntanglementStructure};
use crate::tensor::DenseTensor;
use crate::{Error, Result, C64};
use nalgebra::DMatrix;
use std::collections::BTreeMap;

#[derive(Clone, Debug)]
pub struct RvbPatch {
    pub rows: usize,
    pub cols: usize,
    /// MaMu(2,2,2) resource on every triangle.
    pub resource: EntanglementStructure,
    pub lifted: LiftedFamily,
}

impl RvbPatch {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        let resource = kagome_mamu_structure(rows, cols, [2, 2, 2], [2, 2, 2])?;
        let lifted = lift_to_lattice(&lambda_degeneration_222()?, &resource)?;
        Ok(Self { rows, cols, resource, lifted })
    }

    /// Degree of `T(ε)` in ε.
    pub fn degree(&self) -> usize {
        self.lifted.e_total as usize
    }

    pub fn shift(&self) -> u32 {
        self.lifted.d_total
    }

    pub fn prefactor(&self, eps: C64) -> C64 {
        eps.powi(-(self.shift() as i32))
    }

    /// The dense λ patch.
    pub fn target(&self) -> Result<DenseTensor> {
        kagome_lambda_structure(self.rows, self.cols)?.tensor()
    }

    pub fn physical_sites(&self) -> Vec<(String, usize)> {
        self.lifted.family.maps().iter().map(|(v, m)| (v.clone(), m.rows())).collect()
    }

    /// Dense `T(ε)`.
    pub fn sample(&self, eps: C64) -> Result<DenseTensor> {
        if eps == C64::new(0.0, 0.0) {
            return Err(Error::ZeroPoint);
        }
        let t = apply_restriction(&self.resource.tensor()?, &self.lifted.family.evaluate(eps))?;
        Ok(t.scaled(self.prefactor(eps)))
    }

    /// `⟨T(ε_bra)| ⊗O_v |T(ε_ket)⟩` by boundary-MPS contraction.
    pub fn sandwich(
        &self,
        bra_eps: C64,
        ket_eps: C64,
        ops: &BTreeMap<String, DMatrix<C64>>,
        chi: Option<usize>,
    ) -> Result<C64> {
        if bra_eps == C64::new(0.0, 0.0) || ket_eps == C64::new(0.0, 0.0) {
            return Err(Error::ZeroPoint);
        }
        family_sandwich(&self.resource, &self.lifted.family, |e| self.prefactor(e), bra_eps, ket_eps, ops, chi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_triangle_patch_tends_to_lambda() {
        let p = RvbPatch::new(1, 2).unwrap();
        assert_eq!((p.shift(), p.degree()), (4, 4));
        let target = p.target().unwrap();
        let ids = target.leg_ids();
        let s = p.sample(C64::new(1e-3, 0.0)).unwrap().permuted(&ids).unwrap();
        assert!(s.sub(&target).unwrap().norm() < 1e-4 * target.norm());
        let x = C64::new(0.3, 0.2);
        let dense = p.sample(x.conj()).unwrap().inner(&p.sample(x).unwrap()).unwrap();
        let net = p.sandwich(x.conj(), x, &BTreeMap::new(), None).unwrap();
        assert!((dense - net).norm() < 1e-10 * dense.norm());
    }
}
