//! Plaquette states placed on the (hyper)edges of a graph, with the party
//! slots of each plaquette grouped into vertices.

mod lattices;

pub use lattices::{
    cycle_structure, kagome_lambda_structure, kagome_mamu_structure, path_structure, single_edge_structure,
    square_bond_structure, square_ghz_structure, w_state, Boundary, LatticeDescriptor, LatticeKind,
};

use crate::tensor::{group_legs, outer, DenseTensor, Leg};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};

/// Largest dense structure tensor we are willing to materialize.
pub const DENSE_ENTRY_LIMIT: usize = 1 << 26;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HyperEdge {
    pub id: String,
    pub vertices: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypergraph {
    vertices: Vec<String>,
    edges: Vec<HyperEdge>,
}

impl Hypergraph {
    pub fn new(vertices: Vec<String>, edges: Vec<HyperEdge>) -> Result<Self> {
        let vset: HashSet<&str> = vertices.iter().map(String::as_str).collect();
        if vset.len() != vertices.len() {
            return Err(Error::InvalidStructure("duplicate vertex id".into()));
        }
        let mut eids = HashSet::new();
        for e in &edges {
            if !eids.insert(e.id.as_str()) {
                return Err(Error::InvalidStructure(format!("duplicate edge id `{}`", e.id)));
            }
            if e.vertices.is_empty() {
                return Err(Error::InvalidStructure(format!("edge `{}` has no vertices", e.id)));
            }
            let mut members = HashSet::new();
            for v in &e.vertices {
                if !vset.contains(v.as_str()) {
                    return Err(Error::InvalidStructure(format!("edge `{}` references unknown vertex `{v}`", e.id)));
                }
                if !members.insert(v.as_str()) {
                    return Err(Error::InvalidStructure(format!("edge `{}` lists vertex `{v}` twice", e.id)));
                }
            }
        }
        Ok(Self { vertices, edges })
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[HyperEdge] {
        &self.edges
    }

    pub fn edge(&self, id: &str) -> Option<&HyperEdge> {
        self.edges.iter().find(|e| e.id == id)
    }

    /// Number of edges containing `v`.
    pub fn degree(&self, v: &str) -> usize {
        self.edges.iter().filter(|e| e.vertices.iter().any(|x| x == v)).count()
    }
}

/// The state placed on one edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Plaquette {
    /// `Σ_i |ii⟩` on two parties.
    MaxEntangled { dim: usize },
    /// `Σ_i |i…i⟩` on `parties` parties.
    Ghz { parties: usize, levels: usize },
    /// Cycle of maximally entangled pairs. Party `l` holds bonds `l` and
    /// `l+1 (mod m)` with local index `α·dims[l+1] + β`.
    Mamu { dims: Vec<usize> },
    /// Antisymmetric tensor on three qutrits plus `|222⟩`.
    Lambda,
    Custom { tensor: DenseTensor },
}

impl Plaquette {
    pub fn parties(&self) -> usize {
        match self {
            Plaquette::MaxEntangled { .. } => 2,
            Plaquette::Ghz { parties, .. } => *parties,
            Plaquette::Mamu { dims } => dims.len(),
            Plaquette::Lambda => 3,
            Plaquette::Custom { tensor } => tensor.rank(),
        }
    }

    /// Local dimension of each party slot.
    pub fn party_dims(&self) -> Vec<usize> {
        match self {
            Plaquette::MaxEntangled { dim } => vec![*dim; 2],
            Plaquette::Ghz { parties, levels } => vec![*levels; *parties],
            Plaquette::Mamu { dims } => (0..dims.len()).map(|l| dims[l] * dims[(l + 1) % dims.len()]).collect(),
            Plaquette::Lambda => vec![3; 3],
            Plaquette::Custom { tensor } => tensor.dims(),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = match self {
            Plaquette::MaxEntangled { dim } => *dim == 0,
            Plaquette::Ghz { parties, levels } => *parties == 0 || *levels == 0,
            Plaquette::Mamu { dims } => dims.len() < 2 || dims.contains(&0),
            Plaquette::Lambda => false,
            Plaquette::Custom { tensor } => tensor.rank() == 0,
        };
        if bad {
            Err(Error::UnsupportedPlaquette(format!("{self:?}")))
        } else {
            Ok(())
        }
    }
}

/// Leg id of party `p` of the plaquette on edge `edge`.
pub fn slot_leg(edge: &str, party: usize) -> String {
    format!("{edge}.{party}")
}

/// The plaquette tensor with legs `edge.0, edge.1, …`.
pub fn make_plaquette(plaquette: &Plaquette, edge: &str) -> Result<DenseTensor> {
    plaquette.validate()?;
    let one = C64::new(1.0, 0.0);
    let legs: Vec<Leg> =
        plaquette.party_dims().iter().enumerate().map(|(p, &d)| Leg::new(slot_leg(edge, p), d)).collect();
    match plaquette {
        Plaquette::MaxEntangled { .. } | Plaquette::Ghz { .. } => {
            DenseTensor::from_fn(legs, |i| if i.iter().all(|&x| x == i[0]) { one } else { C64::new(0.0, 0.0) })
        }
        Plaquette::Mamu { dims } => {
            let m = dims.len();
            let mut t = DenseTensor::zeros(legs)?;
            let mut idx = vec![0usize; m];
            crate::tensor::for_each_index(dims, |b| {
                for l in 0..m {
                    idx[l] = b[l] * dims[(l + 1) % m] + b[(l + 1) % m];
                }
                t.set(&idx, one).expect("index within party dims");
            });
            Ok(t)
        }
        Plaquette::Lambda => {
            let entries: [([usize; 3], f64); 7] = [
                ([0, 1, 2], 1.0),
                ([1, 2, 0], 1.0),
                ([2, 0, 1], 1.0),
                ([0, 2, 1], -1.0),
                ([2, 1, 0], -1.0),
                ([1, 0, 2], -1.0),
                ([2, 2, 2], 1.0),
            ];
            let list: Vec<(&[usize], C64)> = entries.iter().map(|(i, v)| (&i[..], C64::new(*v, 0.0))).collect();
            DenseTensor::from_entries(legs, &list)
        }
        Plaquette::Custom { tensor } => DenseTensor::new(legs, tensor.data().to_vec()),
    }
}

/// One party slot of one plaquette.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Slot {
    pub edge: String,
    pub party: usize,
}

impl Slot {
    pub fn new(edge: impl Into<String>, party: usize) -> Self {
        Self { edge: edge.into(), party }
    }

    pub fn leg(&self) -> String {
        slot_leg(&self.edge, self.party)
    }
}

/// A resource state: plaquettes on the edges of a hypergraph, grouped per vertex.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StructureRepr", into = "StructureRepr")]
pub struct EntanglementStructure {
    hypergraph: Hypergraph,
    plaquettes: BTreeMap<String, Plaquette>,
    grouping: BTreeMap<String, Vec<Slot>>,
    positions: BTreeMap<String, [f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct StructureRepr {
    vertices: Vec<String>,
    edges: Vec<HyperEdge>,
    plaquettes: BTreeMap<String, Plaquette>,
    grouping: BTreeMap<String, Vec<Slot>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    positions: BTreeMap<String, [f64; 2]>,
}

impl TryFrom<StructureRepr> for EntanglementStructure {
    type Error = Error;

    fn try_from(r: StructureRepr) -> Result<Self> {
        let g = Hypergraph::new(r.vertices, r.edges)?;
        Ok(EntanglementStructure::new(g, r.plaquettes, r.grouping)?.with_positions(r.positions))
    }
}

impl From<EntanglementStructure> for StructureRepr {
    fn from(s: EntanglementStructure) -> Self {
        StructureRepr {
            vertices: s.hypergraph.vertices,
            edges: s.hypergraph.edges,
            plaquettes: s.plaquettes,
            grouping: s.grouping,
            positions: s.positions,
        }
    }
}

impl EntanglementStructure {
    /// Validates the wiring: every party slot of every plaquette lands on
    /// exactly one vertex, that vertex belongs to the edge, and every vertex
    /// absorbs at least one slot.
    pub fn new(
        hypergraph: Hypergraph,
        plaquettes: BTreeMap<String, Plaquette>,
        grouping: BTreeMap<String, Vec<Slot>>,
    ) -> Result<Self> {
        for e in hypergraph.edges() {
            let p = plaquettes
                .get(&e.id)
                .ok_or_else(|| Error::InvalidStructure(format!("edge `{}` has no plaquette", e.id)))?;
            p.validate()?;
            if p.parties() != e.vertices.len() {
                return Err(Error::InvalidStructure(format!(
                    "plaquette on `{}` has {} parties, edge has {} vertices",
                    e.id,
                    p.parties(),
                    e.vertices.len()
                )));
            }
        }
        if let Some(extra) = plaquettes.keys().find(|k| hypergraph.edge(k).is_none()) {
            return Err(Error::InvalidStructure(format!("plaquette on unknown edge `{extra}`")));
        }
        let mut assigned = HashSet::new();
        for (v, slots) in &grouping {
            if !hypergraph.vertices().contains(v) {
                return Err(Error::InvalidStructure(format!("grouping for unknown vertex `{v}`")));
            }
            for s in slots {
                let e = hypergraph
                    .edge(&s.edge)
                    .ok_or_else(|| Error::InvalidStructure(format!("slot on unknown edge `{}`", s.edge)))?;
                if s.party >= e.vertices.len() {
                    return Err(Error::InvalidStructure(format!("edge `{}` has no party {}", s.edge, s.party)));
                }
                if e.vertices[s.party] != *v {
                    return Err(Error::InvalidStructure(format!(
                        "slot {}.{} belongs to `{}`, not `{v}`",
                        s.edge, s.party, e.vertices[s.party]
                    )));
                }
                if !assigned.insert(s.clone()) {
                    return Err(Error::InvalidStructure(format!("slot {}.{} assigned twice", s.edge, s.party)));
                }
            }
        }
        for v in hypergraph.vertices() {
            if grouping.get(v).is_none_or(|s| s.is_empty()) {
                return Err(Error::InvalidStructure(format!("vertex `{v}` absorbs no legs")));
            }
        }
        for e in hypergraph.edges() {
            for p in 0..e.vertices.len() {
                if !assigned.contains(&Slot::new(e.id.clone(), p)) {
                    return Err(Error::InvalidStructure(format!("orphan party slot {}.{p}", e.id)));
                }
            }
        }
        Ok(Self { hypergraph, plaquettes, grouping, positions: BTreeMap::new() })
    }

    /// Builds a structure with the default grouping: each vertex absorbs its
    /// slots in edge order.
    pub fn with_default_grouping(hypergraph: Hypergraph, plaquettes: BTreeMap<String, Plaquette>) -> Result<Self> {
        let mut grouping: BTreeMap<String, Vec<Slot>> = BTreeMap::new();
        for e in hypergraph.edges() {
            for (p, v) in e.vertices.iter().enumerate() {
                grouping.entry(v.clone()).or_default().push(Slot::new(e.id.clone(), p));
            }
        }
        Self::new(hypergraph, plaquettes, grouping)
    }

    pub fn with_positions(mut self, positions: BTreeMap<String, [f64; 2]>) -> Self {
        self.positions = positions;
        self
    }

    pub fn hypergraph(&self) -> &Hypergraph {
        &self.hypergraph
    }

    pub fn vertices(&self) -> &[String] {
        self.hypergraph.vertices()
    }

    pub fn plaquettes(&self) -> &BTreeMap<String, Plaquette> {
        &self.plaquettes
    }

    pub fn plaquette(&self, edge: &str) -> Option<&Plaquette> {
        self.plaquettes.get(edge)
    }

    pub fn grouping(&self) -> &BTreeMap<String, Vec<Slot>> {
        &self.grouping
    }

    pub fn slots(&self, vertex: &str) -> Result<&[Slot]> {
        self.grouping
            .get(vertex)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::InvalidStructure(format!("unknown vertex `{vertex}`")))
    }

    pub fn positions(&self) -> &BTreeMap<String, [f64; 2]> {
        &self.positions
    }

    pub fn slot_dim(&self, slot: &Slot) -> usize {
        self.plaquettes[&slot.edge].party_dims()[slot.party]
    }

    /// Dimensions of the slots absorbed by `vertex`, in grouping order.
    pub fn slot_dims(&self, vertex: &str) -> Result<Vec<usize>> {
        Ok(self.slots(vertex)?.iter().map(|s| self.slot_dim(s)).collect())
    }

    /// `D_v`, the product of the absorbed slot dimensions.
    pub fn vertex_dim(&self, vertex: &str) -> Result<usize> {
        Ok(self.slot_dims(vertex)?.iter().product())
    }

    /// `max_v D_v^{1/deg v}`.
    pub fn bond_dimension(&self) -> f64 {
        self.vertices()
            .iter()
            .map(|v| {
                let dv = self.vertex_dim(v).unwrap_or(1) as f64;
                let deg = self.hypergraph.degree(v).max(1) as f64;
                dv.powf(1.0 / deg)
            })
            .fold(0.0, f64::max)
    }

    pub fn dense_size(&self) -> usize {
        self.vertices().iter().map(|v| self.vertex_dim(v).unwrap_or(1)).fold(1usize, |a, b| a.saturating_mul(b))
    }

    /// The plaquette tensors with their slot legs still separate.
    pub fn ungrouped_tensor(&self) -> Result<DenseTensor> {
        self.check_size()?;
        let mut t = DenseTensor::scalar(C64::new(1.0, 0.0));
        for e in self.hypergraph.edges() {
            t = outer(&t, &make_plaquette(&self.plaquettes[&e.id], &e.id)?)?;
        }
        Ok(t)
    }

    fn check_size(&self) -> Result<()> {
        let n = self.dense_size();
        if n > DENSE_ENTRY_LIMIT {
            return Err(Error::BudgetExceeded(format!("dense structure has {n} entries (limit {DENSE_ENTRY_LIMIT})")));
        }
        Ok(())
    }

    /// `⊗_e Ω_e` with one leg per vertex, named by the vertex id and ordered
    /// as the hypergraph's vertices.
    pub fn tensor(&self) -> Result<DenseTensor> {
        let t = self.ungrouped_tensor()?;
        let legs: Vec<(String, Vec<String>)> = self
            .vertices()
            .iter()
            .map(|v| (v.clone(), self.grouping[v].iter().map(Slot::leg).collect()))
            .collect();
        let groups: Vec<(&str, Vec<&str>)> =
            legs.iter().map(|(v, m)| (v.as_str(), m.iter().map(String::as_str).collect())).collect();
        let refs: Vec<(&str, &[&str])> = groups.iter().map(|(v, m)| (*v, m.as_slice())).collect();
        group_legs(&t, &refs)
    }
}

/// Validates a wiring and materializes its tensor.
pub fn build_structure(
    hypergraph: Hypergraph,
    plaquettes: BTreeMap<String, Plaquette>,
    grouping: BTreeMap<String, Vec<Slot>>,
) -> Result<(EntanglementStructure, DenseTensor)> {
    let s = EntanglementStructure::new(hypergraph, plaquettes, grouping)?;
    let t = s.tensor()?;
    Ok((s, t))
}
