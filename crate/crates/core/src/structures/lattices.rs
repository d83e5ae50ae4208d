//! Canonical wirings.
//!
//! Coordinates: cycle and path vertices are `v{l}`; square lattices use
//! `r{y}.c{x}` at position `(x, y)`; kagome vertices are `r{r}.c{q}.{left|right|top}`
//! where up triangle `(r, q)` has its left corner at `(2q - r, r·√3)`.

use super::{EntanglementStructure, HyperEdge, Hypergraph, Plaquette, Slot};
use crate::tensor::{DenseTensor, Leg};
use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

fn check_size(name: &str, n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::InvalidArgument(format!("{name} must be at least {min}, got {n}")));
    }
    Ok(())
}

fn vid(l: usize) -> String {
    format!("v{l}")
}

/// Ring of `len` vertices with a maximally entangled pair of dimension `dim`
/// on every edge `e{l} = (v{l}, v{l+1})`. Vertex `v{l}` holds the pair from
/// `e{l-1}` first, then `e{l}`, so `cycle_structure(3, k)` is the MaMu tensor.
pub fn cycle_structure(len: usize, dim: usize) -> Result<EntanglementStructure> {
    check_size("cycle length", len, 2)?;
    check_size("bond dimension", dim, 1)?;
    let vertices: Vec<String> = (0..len).map(vid).collect();
    let edges = (0..len)
        .map(|l| HyperEdge { id: format!("e{l}"), vertices: vec![vid(l), vid((l + 1) % len)] })
        .collect();
    let plaquettes = (0..len).map(|l| (format!("e{l}"), Plaquette::MaxEntangled { dim })).collect();
    let grouping = (0..len)
        .map(|l| (vid(l), vec![Slot::new(format!("e{}", (l + len - 1) % len), 1), Slot::new(format!("e{l}"), 0)]))
        .collect();
    let positions = (0..len)
        .map(|l| {
            let a = 2.0 * std::f64::consts::PI * l as f64 / len as f64;
            (vid(l), [a.cos(), a.sin()])
        })
        .collect();
    Ok(EntanglementStructure::new(Hypergraph::new(vertices, edges)?, plaquettes, grouping)?.with_positions(positions))
}

/// Open chain of `len` vertices joined by maximally entangled pairs.
pub fn path_structure(len: usize, dim: usize) -> Result<EntanglementStructure> {
    check_size("path length", len, 2)?;
    check_size("bond dimension", dim, 1)?;
    let vertices: Vec<String> = (0..len).map(vid).collect();
    let edges = (0..len - 1).map(|l| HyperEdge { id: format!("e{l}"), vertices: vec![vid(l), vid(l + 1)] }).collect();
    let plaquettes = (0..len - 1).map(|l| (format!("e{l}"), Plaquette::MaxEntangled { dim })).collect();
    let positions = (0..len).map(|l| (vid(l), [l as f64, 0.0])).collect();
    Ok(EntanglementStructure::with_default_grouping(Hypergraph::new(vertices, edges)?, plaquettes)?
        .with_positions(positions))
}

/// One hyperedge `h` over vertices `p0, …, p{m-1}` carrying `plaquette`.
pub fn single_edge_structure(plaquette: Plaquette) -> Result<EntanglementStructure> {
    let m = plaquette.parties();
    check_size("party count", m, 1)?;
    let vertices: Vec<String> = (0..m).map(|p| format!("p{p}")).collect();
    let edges = vec![HyperEdge { id: "h".into(), vertices: vertices.clone() }];
    let plaquettes = BTreeMap::from([("h".to_string(), plaquette)]);
    let positions = (0..m)
        .map(|p| {
            let a = 2.0 * std::f64::consts::PI * p as f64 / m as f64;
            (format!("p{p}"), [a.cos(), a.sin()])
        })
        .collect();
    Ok(EntanglementStructure::with_default_grouping(Hypergraph::new(vertices, edges)?, plaquettes)?
        .with_positions(positions))
}

fn sq(x: usize, y: usize) -> String {
    format!("r{y}.c{x}")
}

/// `lx × ly` grid of vertices with pairs of dimension `d1` on horizontal
/// edges `h{y}.{x}` and `d2` on vertical edges `v{y}.{x}`.
pub fn square_bond_structure(lx: usize, ly: usize, d1: usize, d2: usize) -> Result<EntanglementStructure> {
    check_size("lattice width", lx, 1)?;
    check_size("lattice height", ly, 1)?;
    if lx * ly < 2 {
        return Err(Error::InvalidArgument("a square lattice needs at least two vertices".into()));
    }
    let mut vertices = Vec::new();
    let mut positions = BTreeMap::new();
    for y in 0..ly {
        for x in 0..lx {
            vertices.push(sq(x, y));
            positions.insert(sq(x, y), [x as f64, y as f64]);
        }
    }
    let mut edges = Vec::new();
    let mut plaquettes = BTreeMap::new();
    for y in 0..ly {
        for x in 0..lx {
            if x + 1 < lx {
                let id = format!("h{y}.{x}");
                edges.push(HyperEdge { id: id.clone(), vertices: vec![sq(x, y), sq(x + 1, y)] });
                plaquettes.insert(id, Plaquette::MaxEntangled { dim: d1 });
            }
            if y + 1 < ly {
                let id = format!("v{y}.{x}");
                edges.push(HyperEdge { id: id.clone(), vertices: vec![sq(x, y), sq(x, y + 1)] });
                plaquettes.insert(id, Plaquette::MaxEntangled { dim: d2 });
            }
        }
    }
    Ok(EntanglementStructure::with_default_grouping(Hypergraph::new(vertices, edges)?, plaquettes)?
        .with_positions(positions))
}

fn square_ghz_rect(lx: usize, ly: usize, k: usize) -> Result<EntanglementStructure> {
    check_size("face count", lx, 1)?;
    check_size("face count", ly, 1)?;
    check_size("GHZ level", k, 1)?;
    let mut vertices = Vec::new();
    let mut positions = BTreeMap::new();
    for y in 0..=ly {
        for x in 0..=lx {
            vertices.push(sq(x, y));
            positions.insert(sq(x, y), [x as f64, y as f64]);
        }
    }
    let mut edges = Vec::new();
    let mut plaquettes = BTreeMap::new();
    for y in 0..ly {
        for x in 0..lx {
            let id = format!("f{y}.{x}");
            // corners in cyclic order around the face
            edges.push(HyperEdge {
                id: id.clone(),
                vertices: vec![sq(x, y), sq(x + 1, y), sq(x + 1, y + 1), sq(x, y + 1)],
            });
            plaquettes.insert(id, Plaquette::Ghz { parties: 4, levels: k });
        }
    }
    Ok(EntanglementStructure::with_default_grouping(Hypergraph::new(vertices, edges)?, plaquettes)?
        .with_positions(positions))
}

/// `L × L` faces, each a four-party GHZ state of level `k` over its corners.
pub fn square_ghz_structure(l: usize, k: usize) -> Result<EntanglementStructure> {
    square_ghz_rect(l, l, k)
}

/// Triangle `(r, j)` of a kagome patch: even `j` is the up triangle of cell
/// `q = j/2`, odd `j` the down triangle between cells `q` and `q+1` whose
/// lower corner is the top of cell `q` in row `r-1`.
fn kagome_triangle(r: usize, j: usize) -> (bool, [String; 3]) {
    let ri = r as i64;
    if j % 2 == 0 {
        let q = j / 2;
        (true, [format!("r{ri}.c{q}.left"), format!("r{ri}.c{q}.right"), format!("r{ri}.c{q}.top")])
    } else {
        let q = (j - 1) / 2;
        (false, [format!("r{ri}.c{q}.right"), format!("r{ri}.c{}.left", q + 1), format!("r{}.c{q}.top", ri - 1)])
    }
}

fn kagome_position(id: &str) -> [f64; 2] {
    let parts: Vec<&str> = id.split('.').collect();
    let r: f64 = parts[0][1..].parse().expect("row index");
    let q: f64 = parts[1][1..].parse().expect("cell index");
    let s3 = 3f64.sqrt();
    let left = [2.0 * q - r, r * s3];
    match parts[2] {
        "left" => left,
        "right" => [left[0] + 1.0, left[1]],
        _ => [left[0] + 0.5, left[1] + s3 / 2.0],
    }
}

fn kagome_structure(rows: usize, cols: usize, mut plaquette: impl FnMut(bool) -> Plaquette) -> Result<EntanglementStructure> {
    check_size("kagome rows", rows, 1)?;
    check_size("kagome triangles per row", cols, 1)?;
    let mut vertices: Vec<String> = Vec::new();
    let mut edges = Vec::new();
    let mut plaquettes = BTreeMap::new();
    for r in 0..rows {
        for j in 0..cols {
            let (up, corners) = kagome_triangle(r, j);
            for c in &corners {
                if !vertices.contains(c) {
                    vertices.push(c.clone());
                }
            }
            let id = format!("t{r}.{j}");
            edges.push(HyperEdge { id: id.clone(), vertices: corners.to_vec() });
            plaquettes.insert(id, plaquette(up));
        }
    }
    let positions = vertices.iter().map(|v| (v.clone(), kagome_position(v))).collect();
    Ok(EntanglementStructure::with_default_grouping(Hypergraph::new(vertices, edges)?, plaquettes)?
        .with_positions(positions))
}

/// Kagome patch of `rows × cols` triangles (`F = rows·cols`) with a λ
/// plaquette on each. Up triangles list their corners as (left, right, top),
/// down triangles as (right of cell q, left of cell q+1, bottom corner).
pub fn kagome_lambda_structure(rows: usize, cols: usize) -> Result<EntanglementStructure> {
    kagome_structure(rows, cols, |_| Plaquette::Lambda)
}

/// Same wiring as [`kagome_lambda_structure`] with a MaMu plaquette of the
/// given bond dimensions on each up and down triangle.
pub fn kagome_mamu_structure(rows: usize, cols: usize, up: [usize; 3], down: [usize; 3]) -> Result<EntanglementStructure> {
    kagome_structure(rows, cols, |is_up| Plaquette::Mamu { dims: if is_up { up.to_vec() } else { down.to_vec() } })
}

/// `Σ_{i_1+…+i_L=1} |i_1 … i_L⟩` on legs `v0, …, v{L-1}`.
pub fn w_state(len: usize) -> Result<DenseTensor> {
    check_size("W state size", len, 1)?;
    let legs = (0..len).map(|l| Leg::new(vid(l), 2)).collect();
    DenseTensor::from_fn(legs, |i| C64::new(if i.iter().sum::<usize>() == 1 { 1.0 } else { 0.0 }, 0.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Open,
    Periodic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LatticeKind {
    Cycle { len: usize, dim: usize },
    Path { len: usize, dim: usize },
    /// Grid of vertices with pair bonds.
    SquareBonds { lx: usize, ly: usize, d1: usize, d2: usize },
    /// Grid of faces with four-party GHZ plaquettes.
    SquareGhz { lx: usize, ly: usize, k: usize },
    Kagome { rows: usize, cols: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeDescriptor {
    #[serde(flatten)]
    pub kind: LatticeKind,
    pub boundary: Boundary,
}

impl LatticeDescriptor {
    pub fn new(kind: LatticeKind) -> Self {
        let boundary = if matches!(kind, LatticeKind::Cycle { .. }) { Boundary::Periodic } else { Boundary::Open };
        Self { kind, boundary }
    }

    /// Number of plaquettes.
    pub fn faces(&self) -> usize {
        match self.kind {
            LatticeKind::Cycle { len, .. } => len,
            LatticeKind::Path { len, .. } => len.saturating_sub(1),
            LatticeKind::SquareBonds { lx, ly, .. } => (lx - 1) * ly + lx * (ly - 1),
            LatticeKind::SquareGhz { lx, ly, .. } => lx * ly,
            LatticeKind::Kagome { rows, cols } => rows * cols,
        }
    }

    /// Only cycles are periodic.
    pub fn build(&self) -> Result<EntanglementStructure> {
        let periodic = self.boundary == Boundary::Periodic;
        match (&self.kind, periodic) {
            (LatticeKind::Cycle { len, dim }, true) => cycle_structure(*len, *dim),
            (LatticeKind::Cycle { .. }, false) => {
                Err(Error::InvalidArgument("a cycle is periodic; use a path for open boundaries".into()))
            }
            (_, true) => Err(Error::InvalidArgument("periodic boundaries are supported for cycles only".into())),
            (LatticeKind::Path { len, dim }, false) => path_structure(*len, *dim),
            (LatticeKind::SquareBonds { lx, ly, d1, d2 }, false) => square_bond_structure(*lx, *ly, *d1, *d2),
            (LatticeKind::SquareGhz { lx, ly, k }, false) => square_ghz_rect(*lx, *ly, *k),
            (LatticeKind::Kagome { rows, cols }, false) => kagome_lambda_structure(*rows, *cols),
        }
    }
}
