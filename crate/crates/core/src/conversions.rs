//! Restrictions and degenerations: per-vertex map families, their
//! certificates, and the lift from one plaquette to a whole lattice.

use crate::json::{complex_to_pair, matrix_to_rows, rows_to_matrix};
use crate::structures::{EntanglementStructure, Slot};
use crate::tensor::{apply_local_map, poly_apply, DenseTensor, MatrixPoly, PolyTensor};
use crate::{Error, Result, C64};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Default cap on polynomial-term entries for symbolic lattice expansion.
pub const SYMBOLIC_BUDGET: usize = 1_000_000;

/// Default relative tolerance for leading-term checks.
pub const CERT_TOL: f64 = 1e-10;

/// One map per vertex, polynomial in ε. Degree-0 families are restrictions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FamilyRepr", into = "FamilyRepr")]
pub struct LocalMapFamily {
    maps: BTreeMap<String, MatrixPoly>,
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    exponent: u32,
    matrix: Vec<Vec<[f64; 2]>>,
}

#[derive(Serialize, Deserialize)]
#[serde(transparent)]
struct FamilyRepr(BTreeMap<String, Vec<TermRepr>>);

impl TryFrom<FamilyRepr> for LocalMapFamily {
    type Error = Error;

    fn try_from(r: FamilyRepr) -> Result<Self> {
        let mut maps = BTreeMap::new();
        for (v, terms) in r.0 {
            let first = terms
                .first()
                .ok_or_else(|| Error::InvalidArgument(format!("map for `{v}` has no terms")))?;
            let m0 = rows_to_matrix(&first.matrix)?;
            let mut p = MatrixPoly::zero(m0.nrows(), m0.ncols())?;
            for t in &terms {
                p.add_term(t.exponent, rows_to_matrix(&t.matrix)?)?;
            }
            maps.insert(v, p);
        }
        Ok(LocalMapFamily { maps })
    }
}

impl From<LocalMapFamily> for FamilyRepr {
    fn from(f: LocalMapFamily) -> Self {
        FamilyRepr(
            f.maps
                .into_iter()
                .map(|(v, p)| {
                    let mut terms: Vec<TermRepr> = p
                        .terms()
                        .iter()
                        .map(|(&exponent, m)| TermRepr { exponent, matrix: matrix_to_rows(m) })
                        .collect();
                    if terms.is_empty() {
                        terms.push(TermRepr { exponent: 0, matrix: matrix_to_rows(&DMatrix::zeros(p.rows(), p.cols())) });
                    }
                    (v, terms)
                })
                .collect(),
        )
    }
}

impl LocalMapFamily {
    pub fn new(maps: BTreeMap<String, MatrixPoly>) -> Self {
        Self { maps }
    }

    /// A restriction: every map constant in ε.
    pub fn constant(maps: BTreeMap<String, DMatrix<C64>>) -> Result<Self> {
        Ok(Self { maps: maps.into_iter().map(|(v, m)| Ok((v, MatrixPoly::constant(m)?))).collect::<Result<_>>()? })
    }

    pub fn maps(&self) -> &BTreeMap<String, MatrixPoly> {
        &self.maps
    }

    pub fn map(&self, vertex: &str) -> Option<&MatrixPoly> {
        self.maps.get(vertex)
    }

    /// Highest power of ε appearing in any single map.
    pub fn degree(&self) -> u32 {
        self.maps.values().map(MatrixPoly::degree).max().unwrap_or(0)
    }

    pub fn evaluate(&self, eps: C64) -> BTreeMap<String, DMatrix<C64>> {
        self.maps.iter().map(|(v, p)| (v.clone(), p.evaluate(eps))).collect()
    }

    /// Checks that the family has exactly one map per vertex with matching input dimension.
    pub fn check_against(&self, structure: &EntanglementStructure) -> Result<()> {
        for v in structure.vertices() {
            let m = self.maps.get(v).ok_or_else(|| Error::InvalidArgument(format!("no map for vertex `{v}`")))?;
            let dv = structure.vertex_dim(v)?;
            if m.cols() != dv {
                return Err(Error::DimensionMismatch(format!("map for `{v}` has {} columns, D_v = {dv}", m.cols())));
            }
        }
        if let Some(extra) = self.maps.keys().find(|k| !structure.vertices().contains(k)) {
            return Err(Error::InvalidArgument(format!("map for unknown vertex `{extra}`")));
        }
        Ok(())
    }

    fn as_pairs(&self) -> Vec<(&str, &MatrixPoly)> {
        self.maps.iter().map(|(v, p)| (v.as_str(), p)).collect()
    }
}

fn check_map_cover<T>(t: &DenseTensor, maps: &BTreeMap<String, T>) -> Result<()> {
    for leg in t.legs() {
        if !maps.contains_key(&leg.id) {
            return Err(Error::InvalidArgument(format!("no map for leg `{}`", leg.id)));
        }
    }
    if let Some(extra) = maps.keys().find(|k| !t.has_leg(k)) {
        return Err(Error::UnknownLeg(extra.clone()));
    }
    Ok(())
}

/// `(⊗_v A_v) ψ` with one matrix per leg of `psi`.
pub fn apply_restriction(psi: &DenseTensor, maps: &BTreeMap<String, DMatrix<C64>>) -> Result<DenseTensor> {
    check_map_cover(psi, maps)?;
    let mut out = psi.clone();
    for (v, m) in maps {
        out = apply_local_map(&out, v, m)?;
    }
    Ok(out)
}

/// Approximation degree `d`, error degree `e`, and the expansion terms of a degeneration.
#[derive(Clone, Debug, PartialEq)]
pub struct DegenerationCertificate {
    pub d: u32,
    pub e: u32,
    pub leading: DenseTensor,
    /// `leading ≈ proportionality · target`.
    pub proportionality: C64,
    pub residual_terms: BTreeMap<u32, DenseTensor>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub d: u32,
    pub e: u32,
    pub leading_norm: f64,
    pub proportionality: [f64; 2],
    pub residual_exponents: Vec<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl DegenerationCertificate {
    pub fn report(&self) -> CertificateReport {
        CertificateReport {
            d: self.d,
            e: self.e,
            leading_norm: self.leading.norm(),
            proportionality: complex_to_pair(self.proportionality),
            residual_exponents: self.residual_terms.keys().copied().collect(),
            warnings: self.warnings.clone(),
        }
    }

    /// Re-checks the internal invariants against `target`.
    pub fn verify(&self, target: &DenseTensor, tol: f64) -> Result<()> {
        if self.leading.is_zero() {
            return Err(Error::Certificate("leading term is zero".into()));
        }
        if let Some(bad) = self.residual_terms.keys().find(|&&k| k <= self.d || k > self.d + self.e) {
            return Err(Error::Certificate(format!("residual exponent {bad} outside (d, d+e]")));
        }
        if self.e > 0 && !self.residual_terms.contains_key(&(self.d + self.e)) {
            return Err(Error::Certificate("no residual at the top exponent".into()));
        }
        let diff = self.leading.sub(&target.scaled(self.proportionality))?.norm();
        if diff > tol * self.leading.norm() {
            return Err(Error::Certificate(format!("leading term deviates from target by {diff:.3e}")));
        }
        Ok(())
    }
}

/// `c` minimizing `‖leading − c·target‖`, and the relative residual.
fn proportionality(leading: &DenseTensor, target: &DenseTensor) -> Result<(C64, f64)> {
    let tt = target.norm_sqr();
    if tt == 0.0 {
        return Err(Error::InvalidArgument("target tensor is zero".into()));
    }
    let c = target.inner(leading)? / tt;
    let rel = leading.sub(&target.scaled(c))?.norm() / leading.norm();
    Ok((c, rel))
}

/// Certifies an already expanded polynomial tensor against `target`.
///
/// Terms whose largest entry is below `tol` times the largest entry overall
/// are treated as numerical zeros.
pub fn certify_poly(poly: &PolyTensor, target: &DenseTensor, tol: f64) -> Result<DegenerationCertificate> {
    let exps = poly.significant_exponents(tol);
    let (&d, &top) = match (exps.first(), exps.last()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::ZeroPolynomial),
    };
    let leading = poly.term(d).expect("significant exponent has a term").clone();
    let (c, rel) = proportionality(&leading, target)?;
    if rel > tol {
        return Err(Error::LeadingMismatch(format!(
            "term at exponent {d} is not proportional to the target (relative residual {rel:.3e})"
        )));
    }
    let residual_terms = exps[1..].iter().map(|&k| (k, poly.term(k).expect("significant term").clone())).collect();
    Ok(DegenerationCertificate { d, e: top - d, leading, proportionality: c, residual_terms, warnings: Vec::new() })
}

/// Expands `(⊗ A_v(ε)) source` and certifies its lowest order against `target`.
pub fn analyze_degeneration(
    source: &DenseTensor,
    family: &LocalMapFamily,
    target: &DenseTensor,
    tol: f64,
) -> Result<DegenerationCertificate> {
    check_map_cover(source, family.maps())?;
    let poly = poly_apply(source, &family.as_pairs())?;
    certify_poly(&poly, target, tol)
}

/// Per-party maps of a plaquette degeneration together with its degrees.
#[derive(Clone, Debug, PartialEq)]
pub struct PlaquetteFamily {
    pub parties: Vec<MatrixPoly>,
    pub d: u32,
    pub e: u32,
}

/// A lattice family with the degrees it inherits from its plaquettes:
/// `d_total = d·F` and `e_total = e·F`.
#[derive(Clone, Debug, PartialEq)]
pub struct LiftedFamily {
    pub family: LocalMapFamily,
    pub faces: usize,
    pub d_total: u32,
    pub e_total: u32,
}

impl LiftedFamily {
    /// A family certified directly on its structure (one face).
    pub fn from_certificate(family: LocalMapFamily, cert: &DegenerationCertificate) -> Self {
        Self { family, faces: 1, d_total: cert.d, e_total: cert.e }
    }
}

/// Builds each vertex map as the Kronecker product of the per-slot maps it
/// absorbs, in grouping order. Every edge must carry a plaquette whose party
/// dimensions match `plaquette`.
pub fn lift_to_lattice(plaquette: &PlaquetteFamily, structure: &EntanglementStructure) -> Result<LiftedFamily> {
    let per_edge: BTreeMap<String, &PlaquetteFamily> =
        structure.hypergraph().edges().iter().map(|e| (e.id.clone(), plaquette)).collect();
    lift_per_edge(&per_edge, structure)
}

/// Like [`lift_to_lattice`] with a possibly different plaquette family on each edge.
pub fn lift_per_edge(
    families: &BTreeMap<String, &PlaquetteFamily>,
    structure: &EntanglementStructure,
) -> Result<LiftedFamily> {
    let mut d_total = 0;
    let mut e_total = 0;
    for e in structure.hypergraph().edges() {
        let fam = families.get(&e.id).ok_or_else(|| Error::InvalidStructure(format!("no family for face `{}`", e.id)))?;
        let pl = structure.plaquette(&e.id).expect("validated structure");
        let dims = pl.party_dims();
        if fam.parties.len() != dims.len() {
            return Err(Error::InvalidStructure(format!(
                "face `{}` has {} parties, family has {}",
                e.id,
                dims.len(),
                fam.parties.len()
            )));
        }
        for (p, (m, &dim)) in fam.parties.iter().zip(&dims).enumerate() {
            if m.cols() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "slot {}.{p} has dim {dim}, map has {} columns",
                    e.id,
                    m.cols()
                )));
            }
        }
        d_total += fam.d;
        e_total += fam.e;
    }
    let mut maps = BTreeMap::new();
    for v in structure.vertices() {
        let mut acc: Option<MatrixPoly> = None;
        for Slot { edge, party } in structure.slots(v)? {
            let m = &families[edge].parties[*party];
            acc = Some(match acc {
                None => m.clone(),
                Some(a) => a.kron(m)?,
            });
        }
        maps.insert(v.clone(), acc.expect("every vertex absorbs a slot"));
    }
    Ok(LiftedFamily {
        family: LocalMapFamily::new(maps),
        faces: structure.hypergraph().edges().len(),
        d_total,
        e_total,
    })
}

/// Symbolically expands a lifted family on its structure and certifies the
/// result against `target`.
///
/// Refuses when the expansion would exceed `budget` polynomial-term entries.
/// If the actual lowest exponent differs from `d_total`, the certificate
/// carries the actual one and a warning.
pub fn certify_lift(
    lifted: &LiftedFamily,
    structure: &EntanglementStructure,
    target: &DenseTensor,
    tol: f64,
    budget: usize,
) -> Result<DegenerationCertificate> {
    lifted.family.check_against(structure)?;
    let out_entries: usize = lifted.family.maps().values().map(MatrixPoly::rows).product();
    let terms = lifted.d_total as usize + lifted.e_total as usize + 1;
    let estimate = out_entries.saturating_mul(terms).max(structure.dense_size());
    if estimate > budget {
        return Err(Error::BudgetExceeded(format!(
            "symbolic expansion needs about {estimate} entries (budget {budget}); use numeric interpolation"
        )));
    }
    let psi = structure.tensor()?;
    let mut cert = analyze_degeneration(&psi, &lifted.family, target, tol)?;
    if cert.d != lifted.d_total {
        cert.warnings.push(format!(
            "lowest exponent is {} while the faces predict {}; re-certified with the actual value",
            cert.d, lifted.d_total
        ));
    }
    if cert.d + cert.e > lifted.d_total + lifted.e_total {
        return Err(Error::Certificate(format!(
            "top exponent {} exceeds the predicted {}",
            cert.d + cert.e,
            lifted.d_total + lifted.e_total
        )));
    }
    Ok(cert)
}

/// `T(ε) = ε^{-shift} (⊗ B_v A_v(ε)) Ψ`, a polynomial of degree `degree` with `T(0) = T`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComposedFamily {
    pub family: LocalMapFamily,
    pub shift: u32,
    pub degree: u32,
}

impl ComposedFamily {
    /// Maps at ε with `ε^{-shift}` folded into the first vertex.
    pub fn evaluate(&self, eps: C64) -> Result<BTreeMap<String, DMatrix<C64>>> {
        if self.shift > 0 && eps == C64::new(0.0, 0.0) {
            return Err(Error::ZeroPoint);
        }
        let mut maps = self.family.evaluate(eps);
        if let Some(first) = maps.values_mut().next() {
            *first *= eps.powi(-(self.shift as i32));
        }
        Ok(maps)
    }

    /// `T(ε)` by dense restriction of `psi`.
    pub fn state(&self, psi: &DenseTensor, eps: C64) -> Result<DenseTensor> {
        apply_restriction(psi, &self.evaluate(eps)?)
    }
}

/// Composes a lifted family with constant maps `B_v` applied after it.
///
/// Vertices missing from `b_maps` keep their family map. Fails if `shift`
/// exceeds the certified lowest exponent.
pub fn compose_with_restriction(
    lifted: &LiftedFamily,
    b_maps: &BTreeMap<String, DMatrix<C64>>,
    shift: u32,
) -> Result<ComposedFamily> {
    if shift > lifted.d_total {
        return Err(Error::Pole(format!("shift {shift} exceeds the lowest exponent {}", lifted.d_total)));
    }
    let mut maps = BTreeMap::new();
    for (v, a) in lifted.family.maps() {
        let m = match b_maps.get(v) {
            Some(b) => MatrixPoly::constant(b.clone())?.compose(a)?,
            None => a.clone(),
        };
        maps.insert(v.clone(), m);
    }
    if let Some(extra) = b_maps.keys().find(|k| !lifted.family.maps().contains_key(*k)) {
        return Err(Error::InvalidArgument(format!("restriction map for unknown vertex `{extra}`")));
    }
    Ok(ComposedFamily {
        family: LocalMapFamily::new(maps),
        shift,
        degree: lifted.d_total + lifted.e_total - shift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::{path_structure, single_edge_structure, Plaquette};
    use crate::tensor::Leg;
    use nalgebra::DVector;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn diag_poly(lo: &[f64], hi: &[f64]) -> MatrixPoly {
        let d = |v: &[f64]| DMatrix::from_diagonal(&DVector::from_iterator(v.len(), v.iter().map(|&x| c(x))));
        MatrixPoly::from_terms(lo.len(), lo.len(), [(0, d(lo)), (1, d(hi))]).unwrap()
    }

    #[test]
    fn identity_restriction_is_noop() {
        let s = path_structure(3, 2).unwrap();
        let psi = s.tensor().unwrap();
        let maps = s.vertices().iter().map(|v| (v.clone(), DMatrix::identity(s.vertex_dim(v).unwrap(), s.vertex_dim(v).unwrap()))).collect();
        assert_eq!(apply_restriction(&psi, &maps).unwrap(), psi);
        let mut partial: BTreeMap<String, DMatrix<C64>> = maps.clone();
        partial.remove("v0");
        assert!(apply_restriction(&psi, &partial).is_err());
    }

    #[test]
    fn constant_family_certifies_degree_zero() {
        let s = single_edge_structure(Plaquette::Ghz { parties: 3, levels: 2 }).unwrap();
        let psi = s.tensor().unwrap();
        let fam = LocalMapFamily::constant(s.vertices().iter().map(|v| (v.clone(), DMatrix::identity(2, 2))).collect()).unwrap();
        let cert = analyze_degeneration(&psi, &fam, &psi, CERT_TOL).unwrap();
        assert_eq!((cert.d, cert.e), (0, 0));
        assert_eq!(cert.proportionality, c(1.0));
        cert.verify(&psi, CERT_TOL).unwrap();
    }

    #[test]
    fn ghz_under_diagonal_family() {
        // |000⟩ + ε³|111⟩: leading term at ε⁰, sole residual at ε³
        let s = single_edge_structure(Plaquette::Ghz { parties: 3, levels: 2 }).unwrap();
        let psi = s.tensor().unwrap();
        let fam = LocalMapFamily::new(s.vertices().iter().map(|v| (v.clone(), diag_poly(&[1.0, 0.0], &[0.0, 1.0]))).collect());
        let target = DenseTensor::from_entries(psi.legs().to_vec(), &[(&[0, 0, 0], c(2.0))]).unwrap();
        let cert = analyze_degeneration(&psi, &fam, &target, CERT_TOL).unwrap();
        assert_eq!((cert.d, cert.e), (0, 3));
        assert_eq!(cert.proportionality, c(0.5));
        let wrong = DenseTensor::from_entries(psi.legs().to_vec(), &[(&[1, 0, 0], c(1.0))]).unwrap();
        assert!(matches!(analyze_degeneration(&psi, &fam, &wrong, CERT_TOL), Err(Error::LeadingMismatch(_))));
    }

    #[test]
    fn zero_family_is_rejected() {
        let psi = DenseTensor::new(vec![Leg::new("a", 2)], vec![c(1.0), c(0.0)]).unwrap();
        let fam = LocalMapFamily::new(BTreeMap::from([("a".to_string(), MatrixPoly::zero(2, 2).unwrap())]));
        assert!(matches!(analyze_degeneration(&psi, &fam, &psi, CERT_TOL), Err(Error::ZeroPolynomial)));
    }

    #[test]
    fn lift_on_path_adds_degrees() {
        let s = path_structure(4, 2).unwrap();
        let plaq = PlaquetteFamily { parties: vec![diag_poly(&[1.0, 0.0], &[0.0, 1.0]); 2], d: 0, e: 2 };
        let lifted = lift_to_lattice(&plaq, &s).unwrap();
        assert_eq!((lifted.faces, lifted.d_total, lifted.e_total), (3, 0, 6));
        assert_eq!(lifted.family.map("v1").unwrap().cols(), 4);
        let psi = s.tensor().unwrap();
        let target = DenseTensor::from_fn(psi.legs().to_vec(), |i| {
            let bits = [i[0], i[1] / 2, i[1] % 2, i[2] / 2, i[2] % 2, i[3]];
            c(if bits.iter().all(|&b| b == 0) { 1.0 } else { 0.0 })
        })
        .unwrap();
        let cert = certify_lift(&lifted, &s, &target, CERT_TOL, SYMBOLIC_BUDGET).unwrap();
        assert_eq!((cert.d, cert.e), (0, 6));
        assert!(matches!(certify_lift(&lifted, &s, &target, CERT_TOL, 10), Err(Error::BudgetExceeded(_))));
    }

    #[test]
    fn compose_rejects_poles_and_folds_shift() {
        let s = path_structure(2, 2).unwrap();
        let plaq = PlaquetteFamily { parties: vec![MatrixPoly::monomial(1, DMatrix::identity(2, 2)).unwrap(); 2], d: 2, e: 0 };
        let lifted = lift_to_lattice(&plaq, &s).unwrap();
        assert!(matches!(compose_with_restriction(&lifted, &BTreeMap::new(), 3), Err(Error::Pole(_))));
        let composed = compose_with_restriction(&lifted, &BTreeMap::new(), 2).unwrap();
        assert_eq!(composed.degree, 0);
        let psi = s.tensor().unwrap();
        let t = composed.state(&psi, c(0.3)).unwrap();
        assert!(t.max_abs_diff(&psi).unwrap() < 1e-14);
    }

    #[test]
    fn family_json_round_trip() {
        let fam = LocalMapFamily::new(BTreeMap::from([("v0".to_string(), diag_poly(&[1.0, 0.0], &[0.0, 1.0]))]));
        let text = serde_json::to_string(&fam).unwrap();
        assert!(text.starts_with(r#"{"v0":[{"exponent":0,"matrix":[[[1.0,0.0],[0.0,0.0]]"#));
        let back: LocalMapFamily = serde_json::from_str(&text).unwrap();
        assert_eq!(back, fam);
    }
}
