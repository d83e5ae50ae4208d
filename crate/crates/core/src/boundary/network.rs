//! PEPS networks: one tensor per site, virtual legs named by the bond they
//! belong to, and a physical leg `s`.

use crate::structures::{square_bond_structure, kagome_mamu_structure, EntanglementStructure, Plaquette, Slot};
use crate::tensor::{contract, outer, svd_truncate, DenseTensor, Leg};
use crate::{Error, Result, C64};
use nalgebra::DMatrix;
use rand::{Rng, RngExt};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// Physical leg id of every site tensor.
pub const PHYS: &str = "s";

/// Lattice shape a network was built from; used to pick the cost model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LatticeInfo {
    Square { lx: usize, ly: usize, d1: usize, d2: usize },
    /// Bond dimensions of up and down triangles, indexed by triangle bond.
    Kagome { rows: usize, cols: usize, up: [usize; 3], down: [usize; 3] },
    Generic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PepsSite {
    pub id: String,
    pub position: [f64; 2],
    pub tensor: DenseTensor,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PepsNetwork {
    sites: BTreeMap<String, PepsSite>,
    /// Bond id to its two endpoint sites.
    bonds: BTreeMap<String, [String; 2]>,
    pub lattice: LatticeInfo,
}

impl PepsNetwork {
    /// Checks that every virtual leg appears on exactly two distinct sites.
    pub fn new(sites: Vec<PepsSite>, lattice: LatticeInfo) -> Result<Self> {
        let mut owners: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let mut map = BTreeMap::new();
        for site in sites {
            site.tensor.leg(PHYS).map_err(|_| Error::NetworkMismatch(format!("site `{}` has no leg `{PHYS}`", site.id)))?;
            for leg in site.tensor.legs() {
                if leg.id != PHYS {
                    owners.entry(leg.id.clone()).or_default().push(site.id.clone());
                }
            }
            if map.insert(site.id.clone(), site).is_some() {
                return Err(Error::NetworkMismatch("duplicate site id".into()));
            }
        }
        let mut bonds = BTreeMap::new();
        for (bond, who) in owners {
            if who.len() != 2 || who[0] == who[1] {
                return Err(Error::NetworkMismatch(format!("bond `{bond}` joins {who:?}")));
            }
            let (a, b) = (&map[&who[0]], &map[&who[1]]);
            let (da, db) = (a.tensor.leg(&bond)?.dim, b.tensor.leg(&bond)?.dim);
            if da != db {
                return Err(Error::NetworkMismatch(format!("bond `{bond}` has dims {da} and {db}")));
            }
            bonds.insert(bond, [who[0].clone(), who[1].clone()]);
        }
        Ok(Self { sites: map, bonds, lattice })
    }

    pub fn sites(&self) -> &BTreeMap<String, PepsSite> {
        &self.sites
    }

    pub fn site(&self, id: &str) -> Result<&PepsSite> {
        self.sites.get(id).ok_or_else(|| Error::NetworkMismatch(format!("no site `{id}`")))
    }

    pub fn bonds(&self) -> &BTreeMap<String, [String; 2]> {
        &self.bonds
    }

    /// Neighbour across `bond` from `site`.
    pub fn across(&self, bond: &str, site: &str) -> Option<&str> {
        let [a, b] = self.bonds.get(bond)?;
        Some(if a == site { b } else { a })
    }

    pub fn bond_dim(&self, bond: &str) -> Result<usize> {
        let [a, _] = self.bonds.get(bond).ok_or_else(|| Error::UnknownLeg(bond.to_string()))?;
        Ok(self.sites[a].tensor.leg(bond)?.dim)
    }

    pub fn physical_dims(&self) -> BTreeMap<String, usize> {
        self.sites.iter().map(|(k, s)| (k.clone(), s.tensor.leg(PHYS).map(|l| l.dim).unwrap_or(1))).collect()
    }

    /// Same sites, bonds and physical dims (bond dims may differ).
    pub fn check_compatible(&self, other: &PepsNetwork) -> Result<()> {
        if self.sites.keys().ne(other.sites.keys()) || self.bonds != other.bonds {
            return Err(Error::NetworkMismatch("networks differ in sites or bonds".into()));
        }
        if self.physical_dims() != other.physical_dims() {
            return Err(Error::NetworkMismatch("physical dimensions differ".into()));
        }
        Ok(())
    }

    /// Applies single-site operators to the physical legs.
    pub fn with_operators(&self, ops: &BTreeMap<String, DMatrix<C64>>) -> Result<Self> {
        let mut out = self.clone();
        for (id, op) in ops {
            let site = out.sites.get_mut(id).ok_or_else(|| Error::NetworkMismatch(format!("operator on unknown site `{id}`")))?;
            if op.nrows() != op.ncols() {
                return Err(Error::DimensionMismatch(format!("operator on `{id}` is not square")));
            }
            site.tensor = crate::tensor::apply_local_map(&site.tensor, PHYS, op)?;
        }
        Ok(out)
    }

    /// Contracts every bond. The result has one leg per site, named by the
    /// site id, in site-id order; trivial physical legs (dim 1) are dropped.
    pub fn to_dense(&self) -> Result<DenseTensor> {
        let mut acc = DenseTensor::scalar(C64::new(1.0, 0.0));
        let mut open: BTreeSet<String> = BTreeSet::new();
        for (id, site) in &self.sites {
            let t = site.tensor.clone().relabel(PHYS, id)?;
            let pairs: Vec<(String, String)> =
                t.legs().iter().filter(|l| open.contains(&l.id)).map(|l| (l.id.clone(), l.id.clone())).collect();
            let refs: Vec<(&str, &str)> = pairs.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
            acc = if refs.is_empty() { outer(&acc, &t)? } else { contract(&acc, &t, &refs)? };
            for l in t.legs() {
                if l.id != *id && !open.remove(&l.id) {
                    open.insert(l.id.clone());
                }
            }
        }
        let order: Vec<&str> = self.sites.keys().map(String::as_str).collect();
        let acc = acc.permuted(&order)?;
        let legs: Vec<Leg> = acc.legs().iter().filter(|l| l.dim > 1).cloned().collect();
        DenseTensor::new(legs, acc.into_data())
    }

    /// Splits a site into two by an exact SVD: `legs` (bond ids, optionally
    /// the physical leg) stay on `id`; the rest moves to a new site `new_id`
    /// at `position`, joined by bond `bond`. The new site gets a trivial physical leg
    /// when the physical leg stays behind.
    pub fn split_site(&mut self, id: &str, legs: &[&str], new_id: &str, bond: &str, position: [f64; 2]) -> Result<()> {
        if self.sites.contains_key(new_id) || self.bonds.contains_key(bond) {
            return Err(Error::NetworkMismatch(format!("`{new_id}` or `{bond}` already exists")));
        }
        let site = self.site(id)?.clone();
        let keep_phys = legs.contains(&PHYS);
        let split = svd_truncate(&site.tensor, legs, usize::MAX, bond)?;
        let mut a = split.u;
        let mut b = split.sv;
        let one = DenseTensor::new(vec![Leg::new(PHYS, 1)], vec![C64::new(1.0, 0.0)])?;
        if keep_phys {
            b = outer(&b, &one)?;
        } else {
            a = outer(&a, &one)?;
        }
        let moved: Vec<String> = b.leg_ids().into_iter().filter(|l| *l != PHYS && *l != bond).map(String::from).collect();
        self.sites.insert(id.to_string(), PepsSite { tensor: a, ..site });
        self.sites.insert(new_id.to_string(), PepsSite { id: new_id.to_string(), position, tensor: b });
        for m in moved {
            if let Some(ends) = self.bonds.get_mut(&m) {
                for e in ends.iter_mut() {
                    if e == id {
                        *e = new_id.to_string();
                    }
                }
            }
        }
        self.bonds.insert(bond.to_string(), [id.to_string(), new_id.to_string()]);
        Ok(())
    }

    /// Builds the PEPS of `(⊗_v A_v) Ψ`. Maximally entangled edges become
    /// bonds named by the edge; MaMu plaquettes become their cycle of pairs,
    /// bond `t#l` joining parties `l−1` and `l`; any other plaquette becomes an
    /// extra site `t` with a trivial physical leg and bonds `t@p` to its parties.
    pub fn from_structure(structure: &EntanglementStructure, maps: &BTreeMap<String, DMatrix<C64>>) -> Result<Self> {
        let mut sites = Vec::new();
        for v in structure.vertices() {
            let a = maps.get(v).ok_or_else(|| Error::NetworkMismatch(format!("no map for vertex `{v}`")))?;
            let mut legs = vec![Leg::new(PHYS, a.nrows())];
            for Slot { edge, party } in structure.slots(v)? {
                match structure.plaquette(edge).expect("validated structure") {
                    Plaquette::MaxEntangled { dim } => legs.push(Leg::new(edge.clone(), *dim)),
                    Plaquette::Mamu { dims } => {
                        let m = dims.len();
                        legs.push(Leg::new(format!("{edge}#{party}"), dims[*party]));
                        legs.push(Leg::new(format!("{edge}#{}", (party + 1) % m), dims[(party + 1) % m]));
                    }
                    other => legs.push(Leg::new(format!("{edge}@{party}"), other.party_dims()[*party])),
                }
            }
            let cols: usize = legs[1..].iter().map(|l| l.dim).product();
            if a.ncols() != cols {
                return Err(Error::DimensionMismatch(format!("map for `{v}` has {} columns, vertex dim {cols}", a.ncols())));
            }
            let data = (0..a.nrows()).flat_map(|r| (0..cols).map(move |c| a[(r, c)])).collect();
            let position = structure.positions().get(v).copied().unwrap_or([0.0, 0.0]);
            sites.push(PepsSite { id: v.clone(), position, tensor: DenseTensor::new(legs, data)? });
        }
        for e in structure.hypergraph().edges() {
            let pl = structure.plaquette(&e.id).expect("validated structure");
            if matches!(pl, Plaquette::MaxEntangled { .. } | Plaquette::Mamu { .. }) {
                continue;
            }
            let t = crate::structures::make_plaquette(pl, &e.id)?
                .relabel_with(|id| match id.rsplit_once('.') {
                    Some((e, p)) => format!("{e}@{p}"),
                    None => id.to_string(),
                })?;
            let t = outer(&t, &DenseTensor::new(vec![Leg::new(PHYS, 1)], vec![C64::new(1.0, 0.0)])?)?;
            let pts: Vec<[f64; 2]> = e.vertices.iter().filter_map(|v| structure.positions().get(v).copied()).collect();
            let n = pts.len().max(1) as f64;
            let centroid = pts.iter().fold([0.0, 0.0], |c, p| [c[0] + p[0] / n, c[1] + p[1] / n]);
            sites.push(PepsSite { id: e.id.clone(), position: centroid, tensor: t });
        }
        Self::new(sites, LatticeInfo::Generic)
    }
}

fn random_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// Random vertex maps `d × D_v` for every vertex of `structure`.
pub fn random_maps<R: Rng>(structure: &EntanglementStructure, d: usize, rng: &mut R) -> Result<BTreeMap<String, DMatrix<C64>>> {
    structure.vertices().iter().map(|v| Ok((v.clone(), random_matrix(d, structure.vertex_dim(v)?, rng)))).collect()
}

/// Random PEPS on an `lx × ly` square lattice with bond dims `d1` (horizontal), `d2` (vertical).
pub fn random_square_network<R: Rng>(lx: usize, ly: usize, d1: usize, d2: usize, d: usize, rng: &mut R) -> Result<PepsNetwork> {
    let s = square_bond_structure(lx, ly, d1, d2)?;
    let mut net = PepsNetwork::from_structure(&s, &random_maps(&s, d, rng)?)?;
    net.lattice = LatticeInfo::Square { lx, ly, d1, d2 };
    Ok(net)
}

/// Random PEPS on a kagome patch whose triangles carry MaMu bonds `up` / `down`.
pub fn random_kagome_network<R: Rng>(
    rows: usize,
    cols: usize,
    up: [usize; 3],
    down: [usize; 3],
    d: usize,
    rng: &mut R,
) -> Result<PepsNetwork> {
    let s = kagome_mamu_structure(rows, cols, up, down)?;
    kagome_network(&s, &random_maps(&s, d, rng)?, rows, cols, up, down)
}

/// PEPS of a kagome MaMu structure under the given vertex maps.
pub fn kagome_network(
    structure: &EntanglementStructure,
    maps: &BTreeMap<String, DMatrix<C64>>,
    rows: usize,
    cols: usize,
    up: [usize; 3],
    down: [usize; 3],
) -> Result<PepsNetwork> {
    let mut net = PepsNetwork::from_structure(structure, maps)?;
    net.lattice = LatticeInfo::Kagome { rows, cols, up, down };
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conversions::apply_restriction;
    use crate::structures::{cycle_structure, single_edge_structure};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dense_matches_restriction_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for s in [
            cycle_structure(4, 2).unwrap(),
            kagome_mamu_structure(1, 2, [2, 3, 2], [2, 2, 3]).unwrap(),
            single_edge_structure(Plaquette::Lambda).unwrap(),
            crate::structures::kagome_lambda_structure(1, 2).unwrap(),
            square_bond_structure(2, 2, 2, 3).unwrap(),
        ] {
            let maps = random_maps(&s, 2, &mut rng).unwrap();
            let net = PepsNetwork::from_structure(&s, &maps).unwrap();
            let dense = net.to_dense().unwrap();
            let oracle = apply_restriction(&s.tensor().unwrap(), &maps).unwrap();
            let ids: Vec<&str> = dense.leg_ids();
            let oracle = oracle.permuted(&ids).unwrap();
            assert!(dense.max_abs_diff(&oracle).unwrap() < 1e-12);
        }
    }

    #[test]
    fn split_site_preserves_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut net = random_square_network(2, 2, 2, 2, 2, &mut rng).unwrap();
        let before = net.to_dense().unwrap();
        net.split_site("r0.c0", &["s", "h0.0"], "tip", "tip#", [0.0, 0.5]).unwrap();
        let after = net.to_dense().unwrap();
        assert!(after.max_abs_diff(&before).unwrap() < 1e-12);
        assert_eq!(net.across("v0.0", "tip"), Some("r1.c0"));
    }

    #[test]
    fn mismatched_bonds_are_rejected() {
        let t = |legs: Vec<Leg>| DenseTensor::zeros(legs).unwrap();
        let sites = vec![
            PepsSite { id: "a".into(), position: [0.0, 0.0], tensor: t(vec![Leg::new(PHYS, 2), Leg::new("x", 2)]) },
            PepsSite { id: "b".into(), position: [1.0, 0.0], tensor: t(vec![Leg::new(PHYS, 2), Leg::new("x", 3)]) },
        ];
        assert!(matches!(PepsNetwork::new(sites, LatticeInfo::Generic), Err(Error::NetworkMismatch(_))));
    }
}
