//! Diagonal degenerations of MaMu cycles to GHZ states.
//!
//! Party `l` of MaMu[m](k_1, …, k_m) holds the index pair `(i_l, i_{l+1})`.
//! A diagonal map scales `|i_l, i_{l+1}⟩` by `ε^{p_l(i_l, i_{l+1})}`; when
//! `Σ_l p_l = ‖Σ_l c_l i_l − g‖² + const`, the lowest order keeps exactly the
//! index tuples solving `Σ_l c_l i_l = g`. Indices are 0-based throughout;
//! `g_offset` converts `g` to the 1-based convention.

use super::smith::{box_solutions, integer_rank, IntMatrix};
use crate::conversions::{analyze_degeneration, LocalMapFamily, DegenerationCertificate};
use crate::structures::{single_edge_structure, EntanglementStructure, Plaquette};
use crate::tensor::{for_each_index, schmidt_rank, DenseTensor, Leg, MatrixPoly};
use crate::{Error, Result, C64};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};

/// Largest box `Π k_l` that is enumerated exhaustively.
pub const ENUMERATION_BUDGET: usize = 10_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionSet {
    /// 0-based index tuples.
    pub solutions: Vec<Vec<usize>>,
    pub ghz_level: usize,
}

impl SolutionSet {
    fn new(mut solutions: Vec<Vec<usize>>) -> Self {
        solutions.sort();
        Self { ghz_level: solutions.len(), solutions }
    }

    /// Whether fixing the pair `(i_l, i_{l+1})` for any `l` determines the tuple.
    pub fn pairs_determine_tuples(&self) -> bool {
        let m = self.solutions.first().map_or(0, Vec::len);
        (0..m).all(|l| {
            let pairs: BTreeSet<(usize, usize)> = self.solutions.iter().map(|s| (s[l], s[(l + 1) % m])).collect();
            pairs.len() == self.solutions.len()
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalDegeneration {
    pub dims: Vec<usize>,
    /// `c_l`, one per party.
    pub vectors: Vec<Vec<i64>>,
    /// 0-based inhomogeneity.
    pub g: Vec<i64>,
    /// Add to `g` for the 1-based index convention (`Σ_l c_l`).
    pub g_offset: Vec<i64>,
    /// `exponents[l][i_l·k_{l+1} + i_{l+1}]`.
    pub exponents: Vec<Vec<u32>>,
    pub solutions: SolutionSet,
    pub d: u32,
    pub e: u32,
}

fn check_budget(dims: &[usize]) -> Result<()> {
    let size = dims.iter().try_fold(1usize, |acc, &k| acc.checked_mul(k));
    match size {
        Some(s) if s <= ENUMERATION_BUDGET => Ok(()),
        _ => Err(Error::BudgetExceeded(format!("index box {dims:?} exceeds {ENUMERATION_BUDGET} tuples"))),
    }
}

fn dot(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl DiagonalDegeneration {
    fn from_exponents(
        dims: Vec<usize>,
        vectors: Vec<Vec<i64>>,
        g: Vec<i64>,
        exponents: Vec<Vec<u32>>,
    ) -> Result<Self> {
        check_budget(&dims)?;
        let m = dims.len();
        let mut sols = Vec::new();
        let (mut lo, mut hi) = (u32::MAX, 0);
        let mut per_tuple = Vec::new();
        for_each_index(&dims, |i| {
            let total: u32 = (0..m).map(|l| exponents[l][i[l] * dims[(l + 1) % m] + i[(l + 1) % m]]).sum();
            lo = lo.min(total);
            hi = hi.max(total);
            per_tuple.push((i.to_vec(), total));
        });
        for (i, total) in per_tuple {
            if total == lo {
                let x: Vec<i64> = i.iter().map(|&v| v as i64).collect();
                let cx: Vec<i64> = (0..g.len()).map(|r| (0..m).map(|l| vectors[l][r] * x[l]).sum()).collect();
                if cx != g {
                    return Err(Error::EmptySolutionSet(format!("no index tuple in {dims:?} solves the system")));
                }
                sols.push(i);
            }
        }
        let solutions = SolutionSet::new(sols);
        let g_offset = (0..g.len()).map(|r| vectors.iter().map(|c| c[r]).sum()).collect();
        Ok(Self { dims, vectors, g, g_offset, exponents, solutions, d: lo, e: hi - lo })
    }

    pub fn plaquette(&self) -> Plaquette {
        Plaquette::Mamu { dims: self.dims.clone() }
    }

    pub fn structure(&self) -> Result<EntanglementStructure> {
        single_edge_structure(self.plaquette())
    }

    /// Diagonal map of party `l` as a matrix polynomial.
    pub fn party_map(&self, l: usize) -> Result<MatrixPoly> {
        let n = self.exponents[l].len();
        let mut by_exp: BTreeMap<u32, DMatrix<C64>> = BTreeMap::new();
        for (a, &k) in self.exponents[l].iter().enumerate() {
            by_exp.entry(k).or_insert_with(|| DMatrix::zeros(n, n))[(a, a)] = C64::new(1.0, 0.0);
        }
        MatrixPoly::from_terms(n, n, by_exp)
    }

    /// Maps on the vertices `p0, …` of [`Self::structure`].
    pub fn family(&self) -> Result<LocalMapFamily> {
        let maps = (0..self.dims.len()).map(|l| Ok((format!("p{l}"), self.party_map(l)?))).collect::<Result<_>>()?;
        Ok(LocalMapFamily::new(maps))
    }

    fn party_legs(&self) -> Vec<Leg> {
        let m = self.dims.len();
        (0..m).map(|l| Leg::new(format!("p{l}"), self.dims[l] * self.dims[(l + 1) % m])).collect()
    }

    fn local_index(&self, tuple: &[usize], l: usize) -> usize {
        let m = self.dims.len();
        tuple[l] * self.dims[(l + 1) % m] + tuple[(l + 1) % m]
    }

    /// `Σ_{solutions} ⊗_l |i_l i_{l+1}⟩`, the lowest-order term.
    pub fn leading(&self) -> Result<DenseTensor> {
        let m = self.dims.len();
        let mut t = DenseTensor::zeros(self.party_legs())?;
        for s in &self.solutions.solutions {
            let idx: Vec<usize> = (0..m).map(|l| self.local_index(s, l)).collect();
            t.set(&idx, C64::new(1.0, 0.0))?;
        }
        Ok(t)
    }

    /// Full symbolic certificate through the generic expansion.
    pub fn certify(&self, tol: f64) -> Result<DegenerationCertificate> {
        let s = self.structure()?;
        analyze_degeneration(&s.tensor()?, &self.family()?, &self.leading()?, tol)
    }

    pub fn ghz_check(&self, tol: f64) -> Result<GhzCheck> {
        verify_ghz_equivalence(&self.leading()?, self.solutions.ghz_level, tol)
    }

    /// Constant maps sending the leading term to `GHZ(level)`: solution `r < level`
    /// goes to `|r⟩` on every party and the remaining solutions are dropped.
    pub fn ghz_restriction(&self, level: usize) -> Result<BTreeMap<String, DMatrix<C64>>> {
        if level == 0 || level > self.solutions.ghz_level {
            return Err(Error::InvalidArgument(format!(
                "level {level} outside 1..={}",
                self.solutions.ghz_level
            )));
        }
        let legs = self.party_legs();
        Ok((0..self.dims.len())
            .map(|l| {
                let mut b = DMatrix::zeros(level, legs[l].dim);
                for (r, s) in self.solutions.solutions.iter().take(level).enumerate() {
                    b[(r, self.local_index(s, l))] = C64::new(1.0, 0.0);
                }
                (format!("p{l}"), b)
            })
            .collect())
    }
}

/// MaMu(k_1, k_2, k_3) with party maps `ε^{(i−g)² + 2ij}` on 1-based indices
/// `(i, j) = (i_l, i_{l+1})`. The lowest order collects the tuples with
/// `Σ i_l = g`, at exponent `2g²`.
pub fn diag_mamu_to_ghz(k: [usize; 3], g: i64) -> Result<DiagonalDegeneration> {
    if k.contains(&0) {
        return Err(Error::InvalidArgument("MaMu dimensions must be positive".into()));
    }
    let exponents = (0..3)
        .map(|l| {
            let (kl, kn) = (k[l], k[(l + 1) % 3]);
            (0..kl * kn)
                .map(|a| {
                    let (i, j) = ((a / kn) as i64 + 1, (a % kn) as i64 + 1);
                    u32::try_from((i - g).pow(2) + 2 * i * j).expect("nonnegative exponent")
                })
                .collect()
        })
        .collect();
    let deg = DiagonalDegeneration::from_exponents(k.to_vec(), vec![vec![1]; 3], vec![g - 3], exponents)?;
    if deg.d as i64 != 2 * g * g {
        return Err(Error::EmptySolutionSet(format!("no tuple in {k:?} sums to {g}")));
    }
    Ok(deg)
}

/// 1-based `g` maximizing the number of tuples with `Σ i_l = g`, and that count.
/// Ties go to the smallest `g`.
pub fn optimal_g_mamu(k: [usize; 3]) -> (i64, usize) {
    let mut best = (3, 0);
    for g in 3..=(k.iter().sum::<usize>() as i64) {
        let mut n = 0;
        for_each_index(&k, |i| {
            if i.iter().sum::<usize>() as i64 + 3 == g {
                n += 1;
            }
        });
        if n > best.1 {
            best = (g, n);
        }
    }
    best
}

/// `c_0, …, c_{m-1} ∈ ℤ^{m-2}`: row `r` of the system has `+1` on `i_0`,
/// `−1` on `i_{r+1}` and `+1` on `i_{r+2}`.
pub fn cycle_orthogonal_vectors(m: usize) -> Result<Vec<Vec<i64>>> {
    if m < 4 {
        return Err(Error::InvalidArgument(format!("cycle vectors need m >= 4, got {m}")));
    }
    let mut cols = vec![vec![0i64; m - 2]; m];
    for r in 0..m - 2 {
        cols[0][r] = 1;
        cols[r + 1][r] = -1;
        cols[r + 2][r] = 1;
    }
    check_cycle_vectors(&cols)?;
    Ok(cols)
}

/// Non-adjacent vectors are orthogonal (cyclically), and dropping any
/// adjacent pair leaves a linearly independent set.
pub fn check_cycle_vectors(vectors: &[Vec<i64>]) -> Result<()> {
    let m = vectors.len();
    for a in 0..m {
        for b in a + 1..m {
            let adjacent = b == a + 1 || (a == 0 && b == m - 1);
            if !adjacent && dot(&vectors[a], &vectors[b]) != 0 {
                return Err(Error::InvalidArgument(format!("c_{a} and c_{b} are not orthogonal")));
            }
        }
    }
    for l in 0..m {
        let rest: IntMatrix =
            (0..m).filter(|&j| j != l && j != (l + 1) % m).map(|j| vectors[j].clone()).collect();
        if integer_rank(&rest) != rest.len() {
            return Err(Error::InvalidArgument(format!("removing c_{l}, c_{} leaves a dependent set", (l + 1) % m)));
        }
    }
    Ok(())
}

/// Per-party exponents `‖c_l‖² i_l² − 2⟨c_l, g⟩ i_l + 2⟨c_l, c_{l+1}⟩ i_l i_{l+1}`,
/// each shifted to a minimum of zero. Their sum is `‖Σ c_l i_l − g‖²` up to a constant.
fn shifted_exponents(dims: &[usize], vectors: &[Vec<i64>], g: &[i64]) -> Vec<Vec<u32>> {
    let m = dims.len();
    (0..m)
        .map(|l| {
            let (c, cn) = (&vectors[l], &vectors[(l + 1) % m]);
            let kn = dims[(l + 1) % m];
            let raw: Vec<i64> = (0..dims[l] * kn)
                .map(|a| {
                    let (i, j) = ((a / kn) as i64, (a % kn) as i64);
                    dot(c, c) * i * i - 2 * dot(c, g) * i + 2 * dot(c, cn) * i * j
                })
                .collect();
            let min = *raw.iter().min().expect("nonempty box");
            raw.into_iter().map(|x| u32::try_from(x - min).expect("exponent fits")).collect()
        })
        .collect()
}

/// General-m diagonal degeneration for the system `Σ_l c_l i_l = g` (0-based).
pub fn diag_cycle_to_ghz(dims: Vec<usize>, vectors: Vec<Vec<i64>>, g: Vec<i64>) -> Result<DiagonalDegeneration> {
    let m = dims.len();
    if m < 3 || vectors.len() != m || dims.contains(&0) {
        return Err(Error::InvalidArgument("need m >= 3 positive dims and one vector per party".into()));
    }
    if vectors.iter().any(|c| c.len() != g.len()) {
        return Err(Error::DimensionMismatch("vectors and g differ in length".into()));
    }
    if m > 3 {
        check_cycle_vectors(&vectors)?;
    }
    let exponents = shifted_exponents(&dims, &vectors, &g);
    DiagonalDegeneration::from_exponents(dims, vectors, g, exponents)
}

/// MaMu[4](k) to GHZ with `g = (⌊k/2⌋, ⌊k/2⌋)`. The solution set is found
/// through the Smith form of the system and cross-checked against the
/// enumerated lowest order.
pub fn mamu4_to_ghz(k: usize) -> Result<DiagonalDegeneration> {
    if k < 2 {
        return Err(Error::InvalidArgument(format!("mamu4_to_ghz needs k >= 2, got {k}")));
    }
    let vectors = cycle_orthogonal_vectors(4)?;
    let g = vec![(k / 2) as i64; 2];
    let deg = diag_cycle_to_ghz(vec![k; 4], vectors.clone(), g.clone())?;
    let system: IntMatrix = (0..2).map(|r| vectors.iter().map(|c| c[r]).collect()).collect();
    let smith: Vec<Vec<usize>> =
        box_solutions(&system, &g, &[k; 4])?.into_iter().map(|s| s.into_iter().map(|x| x as usize).collect()).collect();
    if smith != deg.solutions.solutions {
        return Err(Error::Certificate("Smith-form solutions disagree with the lowest order".into()));
    }
    Ok(deg)
}

/// `g` (0-based) maximizing the number of box solutions of `Σ c_l i_l = g`.
/// Ties go to the lexicographically smallest `g`.
pub fn optimal_g(dims: &[usize], vectors: &[Vec<i64>]) -> Result<(Vec<i64>, usize)> {
    check_budget(dims)?;
    let m = dims.len();
    let mut hist: HashMap<Vec<i64>, usize> = HashMap::new();
    for_each_index(dims, |i| {
        let key: Vec<i64> = (0..vectors[0].len()).map(|r| (0..m).map(|l| vectors[l][r] * i[l] as i64).sum()).collect();
        *hist.entry(key).or_default() += 1;
    });
    hist.into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.cmp(&a.0)))
        .ok_or_else(|| Error::EmptySolutionSet("empty index box".into()))
}

/// Outcome of [`verify_ghz_equivalence`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GhzCheck {
    pub ok: bool,
    pub support: usize,
    /// Schmidt rank of each single-party flattening.
    pub ranks: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

/// True iff `leading` has `level` product-basis terms and each party sees
/// `level` distinct local basis vectors, so that every single-party
/// flattening has rank `level`.
pub fn verify_ghz_equivalence(leading: &DenseTensor, level: usize, tol: f64) -> Result<GhzCheck> {
    let cut = tol * leading.max_abs();
    let support = leading.support(cut);
    let mut ranks = Vec::new();
    let mut diagnostic = None;
    for (p, leg) in leading.legs().iter().enumerate() {
        let r = schmidt_rank(leading, &[leg.id.as_str()], tol)?;
        ranks.push(r);
        let distinct: BTreeSet<usize> = support.iter().map(|(i, _)| i[p]).collect();
        if diagnostic.is_none() && (r != level || distinct.len() != support.len()) {
            diagnostic = Some(format!(
                "party `{}`: flattening rank {r}, {} distinct local vectors for {} terms",
                leg.id,
                distinct.len(),
                support.len()
            ));
        }
    }
    if diagnostic.is_none() && support.len() != level {
        diagnostic = Some(format!("support has {} terms, expected {level}", support.len()));
    }
    Ok(GhzCheck { ok: diagnostic.is_none(), support: support.len(), ranks, diagnostic })
}
