//! Boundary-MPS contraction of double-layer PEPS with non-uniform bond
//! dimensions, and the matching cost model.

pub mod cost;
pub mod network;
pub mod sweep;

pub use cost::{cost_exact_rvb, cost_kagome, cost_square, CostModel, ExactCost, KagomeDims};
pub use network::{
    kagome_network, random_kagome_network, random_maps, random_square_network, LatticeInfo, PepsNetwork, PepsSite, PHYS,
};
pub use sweep::{
    contract_kagome, contract_sandwich, contract_square, dense_sandwich, CategoryCounts, ContractOptions,
    ContractionReport,
};

use crate::conversions::LocalMapFamily;
use crate::structures::EntanglementStructure;
use crate::{Result, C64};
use nalgebra::DMatrix;
use std::collections::BTreeMap;

/// `⟨T(ε_bra)| (⊗ O_v) |T(ε_ket)⟩` for `T(ε) = (⊗ A_v(ε)) Ψ`, contracted as
/// a PEPS sandwich. `prefactor(ε)` multiplies `T(ε)`.
pub fn family_sandwich(
    structure: &EntanglementStructure,
    family: &LocalMapFamily,
    prefactor: impl Fn(C64) -> C64,
    bra_eps: C64,
    ket_eps: C64,
    operators: &BTreeMap<String, DMatrix<C64>>,
    chi: Option<usize>,
) -> Result<C64> {
    let ket = PepsNetwork::from_structure(structure, &family.evaluate(ket_eps))?;
    let bra = PepsNetwork::from_structure(structure, &family.evaluate(bra_eps))?;
    let opts = ContractOptions { chi, two_sided: true, operators: operators.clone() };
    let r = contract_sandwich(&ket, &bra, &opts)?;
    Ok(r.value * prefactor(bra_eps).conj() * prefactor(ket_eps))
}
