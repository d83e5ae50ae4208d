//! Boundary-MPS contraction of `⟨bra|ket⟩` sandwiches.
//!
//! Sites are absorbed one at a time in order of increasing `x` (then `y`).
//! The boundary is a chain of tensors with legs `l`, `k|e`, `b|e` for every
//! open bond `e` it carries, and `r`; open bonds are kept in the order in which
//! they cross the sweep line. Absorbing a site merges the boundary tensors
//! holding its already-reached bonds, contracts the ket and the conjugated
//! bra, and, with finite `χ`, splits the result back into one tensor per open
//! bond by truncated SVDs. With `χ` unbounded the merged block is kept whole.

use super::cost::{cost_kagome, cost_square, CostModel, KagomeDims};
use super::network::{LatticeInfo, PepsNetwork, PHYS};
use crate::linalg::FlopMeter;
use crate::tensor::{contract, svd_truncate, DenseTensor, Leg};
use crate::{Error, Result, C64};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryCounts {
    pub merge: u64,
    pub absorb: u64,
    pub svd: u64,
    pub overlap: u64,
}

impl CategoryCounts {
    pub fn total(&self) -> u64 {
        self.merge + self.absorb + self.svd + self.overlap
    }

    fn max_with(&mut self, o: &CategoryCounts) {
        self.merge = self.merge.max(o.merge);
        self.absorb = self.absorb.max(o.absorb);
        self.svd = self.svd.max(o.svd);
        self.overlap = self.overlap.max(o.overlap);
    }

    fn add(&mut self, o: &CategoryCounts) {
        self.merge += o.merge;
        self.absorb += o.absorb;
        self.svd += o.svd;
        self.overlap += o.overlap;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    #[serde(with = "crate::json::complex_pair")]
    pub value: C64,
    /// Sum over all truncations of the discarded squared singular values of
    /// the normalized block.
    pub discarded_weight: f64,
    pub multiply_count: u64,
    pub counts: CategoryCounts,
    /// Largest count of each category within a single absorption step.
    pub step_max: CategoryCounts,
    pub max_bond: usize,
    /// Per-tensor bound times the number of sites, when the lattice is known.
    pub model_cost: Option<f64>,
    pub chi: Option<usize>,
    pub schedule: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContractOptions {
    /// `None` contracts exactly.
    pub chi: Option<usize>,
    /// Sweep from both ends and meet in the middle.
    pub two_sided: bool,
    /// Single-site operators applied to the ket.
    pub operators: BTreeMap<String, DMatrix<C64>>,
}

impl ContractOptions {
    pub fn exact() -> Self {
        Self { chi: None, two_sided: true, operators: BTreeMap::new() }
    }

    pub fn truncated(chi: usize) -> Self {
        Self { chi: Some(chi), ..Self::exact() }
    }
}

fn k_leg(e: &str) -> String {
    format!("k|{e}")
}

fn b_leg(e: &str) -> String {
    format!("b|{e}")
}

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

#[derive(Clone, Debug)]
struct Site {
    /// Legs `l`, then `k|e`, `b|e` per edge, then `r`.
    t: DenseTensor,
    edges: Vec<String>,
}

impl Site {
    fn canonical(t: DenseTensor, edges: Vec<String>) -> Result<Self> {
        let mut order = vec!["l".to_string()];
        for e in &edges {
            order.push(k_leg(e));
            order.push(b_leg(e));
        }
        order.push("r".into());
        let refs: Vec<&str> = order.iter().map(String::as_str).collect();
        Ok(Self { t: t.permuted(&refs)?, edges })
    }

    fn ldim(&self) -> usize {
        self.t.legs()[0].dim
    }

    fn rdim(&self) -> usize {
        self.t.legs().last().expect("site has legs").dim
    }

    /// Largest rank any cut between consecutive edges of this site could carry.
    fn cut_rank(&self) -> usize {
        let dims: Vec<usize> = self.t.legs()[1..self.t.legs().len() - 1].chunks(2).map(|p| p[0].dim * p[1].dim).collect();
        let total: usize = dims.iter().product::<usize>() * self.ldim() * self.rdim();
        let mut left = self.ldim();
        let mut best = self.rdim();
        for d in dims {
            left *= d;
            best = best.max(left.min(total / left));
        }
        best
    }
}

fn identity_block(dim: usize) -> Result<Site> {
    let t = DenseTensor::from_fn(vec![Leg::new("l", dim), Leg::new("r", dim)], |i| {
        if i[0] == i[1] {
            one()
        } else {
            C64::new(0.0, 0.0)
        }
    })?;
    Ok(Site { t, edges: Vec::new() })
}

/// `a.r` joined to `b.l`.
fn join(a: &Site, b: &Site) -> Result<Site> {
    let t = contract(&a.t.clone().relabel("r", "#")?, &b.t.clone().relabel("l", "#")?, &[("#", "#")])?;
    let mut edges = a.edges.clone();
    edges.extend(b.edges.iter().cloned());
    Ok(Site { t, edges })
}

struct Sweep<'a> {
    ket: &'a PepsNetwork,
    bra: &'a PepsNetwork,
    chi: Option<usize>,
    /// +1 sweeping left to right, −1 right to left.
    dir: f64,
    sites: Vec<Site>,
    done: HashSet<String>,
    scalar: C64,
    log_scale: f64,
    discarded: f64,
    counts: CategoryCounts,
    step_max: CategoryCounts,
    max_bond: usize,
}

impl<'a> Sweep<'a> {
    fn new(ket: &'a PepsNetwork, bra: &'a PepsNetwork, chi: Option<usize>, dir: f64) -> Self {
        Self {
            ket,
            bra,
            chi,
            dir,
            sites: Vec::new(),
            done: HashSet::new(),
            scalar: one(),
            log_scale: 0.0,
            discarded: 0.0,
            counts: CategoryCounts::default(),
            step_max: CategoryCounts::default(),
            max_bond: 1,
        }
    }

    fn pos(&self, v: &str) -> [f64; 2] {
        let p = self.ket.sites()[v].position;
        [self.dir * p[0], p[1]]
    }

    fn flat_edges(&self) -> Vec<(usize, usize, &str)> {
        self.sites
            .iter()
            .enumerate()
            .flat_map(|(i, s)| s.edges.iter().enumerate().map(move |(j, e)| (i, j, e.as_str())))
            .collect()
    }

    /// Height at which an open bond crosses the vertical line through `x`.
    fn crossing(&self, edge: &str, x: f64) -> f64 {
        let [a, b] = &self.ket.bonds()[edge];
        let (inside, outside) = if self.done.contains(a) { (a, b) } else { (b, a) };
        let (p, q) = (self.pos(inside), self.pos(outside));
        if (q[0] - p[0]).abs() < 1e-12 {
            return 0.5 * (p[1] + q[1]);
        }
        let t = ((x - p[0]) / (q[0] - p[0])).clamp(0.0, 1.0);
        p[1] + t * (q[1] - p[1])
    }

    fn absorb(&mut self, v: &str) -> Result<()> {
        let mut step = CategoryCounts::default();
        let ket_t = &self.ket.site(v)?.tensor;
        let bra_t = self.bra.site(v)?.tensor.conj();
        let me = self.pos(v);
        let mut left = Vec::new();
        let mut right = Vec::new();
        for leg in ket_t.legs().iter().filter(|l| l.id != PHYS) {
            let other = self.ket.across(&leg.id, v).expect("bond has two ends");
            if self.done.contains(other) {
                left.push(leg.id.clone());
            } else {
                right.push(leg.id.clone());
            }
        }
        let angle = |e: &String| {
            let q = self.pos(self.ket.across(e, v).expect("bond"));
            (q[1] - me[1]).atan2(q[0] - me[0])
        };
        right.sort_by(|a, b| angle(a).total_cmp(&angle(b)).then_with(|| a.cmp(b)));

        // locate the block to replace
        let flat = self.flat_edges();
        let (first, last, block, before, after);
        if left.is_empty() {
            let p = flat.iter().position(|&(_, _, e)| self.crossing(e, me[0]) > me[1]).unwrap_or(flat.len());
            let at_boundary = p == flat.len() || flat[p].1 == 0;
            if at_boundary {
                let i = if p == flat.len() { self.sites.len() } else { flat[p].0 };
                let dim = if i > 0 { self.sites[i - 1].rdim() } else { 1 };
                self.sites.insert(i, identity_block(dim)?);
                (first, last) = (i, i);
                block = self.sites[i].clone();
                (before, after) = (Vec::new(), Vec::new());
            } else {
                let (i, j, _) = flat[p];
                (first, last) = (i, i);
                block = self.sites[i].clone();
                before = block.edges[..j].to_vec();
                after = block.edges[j..].to_vec();
            }
        } else {
            let mut idx: Vec<usize> = left
                .iter()
                .map(|e| {
                    flat.iter()
                        .position(|&(_, _, f)| f == e)
                        .ok_or_else(|| Error::NetworkMismatch(format!("bond `{e}` is not on the boundary")))
                })
                .collect::<Result<_>>()?;
            idx.sort_unstable();
            if idx.windows(2).any(|w| w[1] != w[0] + 1) {
                return Err(Error::NetworkMismatch(format!("bonds of `{v}` are not adjacent on the boundary")));
            }
            (first, last) = (flat[idx[0]].0, flat[*idx.last().expect("nonempty")].0);
            let meter = FlopMeter::start();
            let mut b = self.sites[first].clone();
            for s in &self.sites[first + 1..=last] {
                b = join(&b, s)?;
            }
            step.merge += meter.elapsed();
            let off = flat.iter().position(|&(i, _, _)| i == first).expect("site has an edge");
            let (lo, hi) = (idx[0] - off, *idx.last().expect("nonempty") - off);
            before = b.edges[..lo].to_vec();
            after = b.edges[hi + 1..].to_vec();
            block = b;
        }

        // ket, then conjugated bra
        let meter = FlopMeter::start();
        let kp: Vec<(String, String)> = left.iter().map(|e| (k_leg(e), e.clone())).collect();
        let refs: Vec<(&str, &str)> = kp.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let mut t = contract(&block.t, ket_t, &refs)?;
        for e in &right {
            t = t.relabel(e, &k_leg(e))?;
        }
        t = t.relabel(PHYS, "#phys")?;
        let mut bp: Vec<(String, String)> = left.iter().map(|e| (b_leg(e), e.clone())).collect();
        bp.push(("#phys".into(), PHYS.into()));
        let refs: Vec<(&str, &str)> = bp.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        t = contract(&t, &bra_t, &refs)?;
        for e in &right {
            t = t.relabel(e, &b_leg(e))?;
        }
        step.absorb += meter.elapsed();

        let mut edges = before;
        edges.extend(right.iter().cloned());
        edges.extend(after);
        let mut block = Site::canonical(t, edges)?;
        let n = block.t.norm();
        if n > 0.0 {
            block.t = block.t.scaled(C64::new(1.0 / n, 0.0));
            self.log_scale += n.ln();
        }

        let replacement = if block.edges.is_empty() {
            let meter = FlopMeter::start();
            let out = if first > 0 {
                let merged = join(&self.sites[first - 1], &block)?;
                self.sites.splice(first - 1..=last, [merged]);
                Vec::new()
            } else if last + 1 < self.sites.len() {
                let merged = join(&block, &self.sites[last + 1])?;
                self.sites.splice(first..=last + 1, [merged]);
                Vec::new()
            } else {
                if block.ldim() != 1 || block.rdim() != 1 {
                    return Err(Error::NetworkMismatch("open boundary ends are not trivial".into()));
                }
                self.scalar *= block.t.data()[0];
                self.sites.clear();
                Vec::new()
            };
            step.merge += meter.elapsed();
            out
        } else {
            match self.chi {
                None => vec![block],
                Some(chi) => {
                    let meter = FlopMeter::start();
                    let parts = self.split(block, chi)?;
                    step.svd += meter.elapsed();
                    parts
                }
            }
        };
        if !replacement.is_empty() {
            self.sites.splice(first..=last, replacement);
        }
        self.max_bond = self.sites.iter().map(Site::cut_rank).fold(self.max_bond, usize::max);
        self.done.insert(v.to_string());
        self.counts.add(&step);
        self.step_max.max_with(&step);
        Ok(())
    }

    fn split(&mut self, block: Site, chi: usize) -> Result<Vec<Site>> {
        let n = block.edges.len();
        let mut out = Vec::with_capacity(n);
        let mut rest = block.t;
        for e in &block.edges[..n - 1] {
            let (k, b) = (k_leg(e), b_leg(e));
            let s = svd_truncate(&rest, &["l", &k, &b], chi, "#bond")?;
            self.discarded += s.discarded_weight;
            out.push(Site { t: s.u.relabel("#bond", "r")?, edges: vec![e.clone()] });
            rest = s.sv.relabel("#bond", "l")?;
        }
        out.push(Site { t: rest, edges: vec![block.edges[n - 1].clone()] });
        Ok(out)
    }

    fn edges(&self) -> Vec<String> {
        self.sites.iter().flat_map(|s| s.edges.iter().cloned()).collect()
    }

    fn chain(&self) -> Result<Option<Site>> {
        let mut it = self.sites.iter();
        let Some(first) = it.next() else { return Ok(None) };
        let mut acc = first.clone();
        for s in it {
            acc = join(&acc, s)?;
        }
        Ok(Some(acc))
    }
}

/// `⟨A|B⟩` of two boundaries carrying the same open bonds.
fn overlap(a: &Sweep, b: &Sweep) -> Result<C64> {
    let (ea, eb) = (a.edges(), b.edges());
    let (sa, sb): (HashSet<&String>, HashSet<&String>) = (ea.iter().collect(), eb.iter().collect());
    if sa != sb {
        return Err(Error::NetworkMismatch("the two boundaries do not meet".into()));
    }
    if ea.is_empty() {
        return Ok(one());
    }
    let single = |s: &Sweep| s.sites.iter().all(|x| x.edges.len() == 1);
    if ea == eb && single(a) && single(b) {
        // transfer matrix, site by site
        let mut env = DenseTensor::new(vec![Leg::new("a", 1), Leg::new("c", 1)], vec![one()])?;
        for (x, y) in a.sites.iter().zip(&b.sites) {
            let e = &x.edges[0];
            let t = contract(&env, &x.t.clone().relabel("r", "a'")?, &[("a", "l")])?;
            let (k, bb) = (k_leg(e), b_leg(e));
            let y = y.t.clone().relabel("r", "c'")?;
            env = contract(&t, &y, &[("c", "l"), (&k, &k), (&bb, &bb)])?.relabel("a'", "a")?.relabel("c'", "c")?;
        }
        return env.scalar_value().or_else(|_| Ok(env.data()[0]));
    }
    let (x, y) = (a.chain()?.expect("nonempty"), b.chain()?.expect("nonempty"));
    let mut pairs = vec![("l".to_string(), "l".to_string()), ("r".to_string(), "r".to_string())];
    for e in &ea {
        pairs.push((k_leg(e), k_leg(e)));
        pairs.push((b_leg(e), b_leg(e)));
    }
    let refs: Vec<(&str, &str)> = pairs.iter().map(|(p, q)| (p.as_str(), q.as_str())).collect();
    contract(&x.t, &y.t, &refs)?.scalar_value()
}

fn model_cost(ket: &PepsNetwork, bra: &PepsNetwork, chi: f64) -> Option<(f64, &'static str)> {
    let d = ket.physical_dims().values().copied().max().unwrap_or(1) as f64;
    let m = CostModel::new(chi, d);
    let n = ket.sites().len() as f64;
    match (&ket.lattice, &bra.lattice) {
        (LatticeInfo::Square { d1, d2, .. }, LatticeInfo::Square { d1: e1, d2: e2, .. }) => {
            let (a, b) = (((d1 * e1) as f64).sqrt(), ((d2 * e2) as f64).sqrt());
            Some((n * cost_square(&m, a, b), "square"))
        }
        (LatticeInfo::Kagome { up, down, .. }, LatticeInfo::Kagome { up: bu, down: bd, .. }) => {
            let f = |x: &[usize; 3]| x.map(|v| v as f64);
            let dims = KagomeDims { k_up: f(up), k_down: f(bu), d_up: f(down), d_down: f(bd) };
            Some((n * cost_kagome(&m, &dims), "kagome"))
        }
        _ => None,
    }
}

/// `⟨bra| (⊗ O_v) |ket⟩` by boundary-MPS contraction.
pub fn contract_sandwich(ket: &PepsNetwork, bra: &PepsNetwork, opts: &ContractOptions) -> Result<ContractionReport> {
    ket.check_compatible(bra)?;
    if opts.chi == Some(0) {
        return Err(Error::InvalidArgument("chi must be at least 1".into()));
    }
    let ket = if opts.operators.is_empty() { ket.clone() } else { ket.with_operators(&opts.operators)? };
    let meter = FlopMeter::start();
    let mut order: Vec<(&String, [f64; 2])> = ket.sites().iter().map(|(k, s)| (k, s.position)).collect();
    order.sort_by(|a, b| a.1[0].total_cmp(&b.1[0]).then(a.1[1].total_cmp(&b.1[1])).then(a.0.cmp(b.0)));
    // meet at the column boundary closest to the middle
    let split = if opts.two_sided {
        let n = order.len();
        (1..n)
            .filter(|&i| order[i].1[0] > order[i - 1].1[0] + 1e-9)
            .chain([n])
            .min_by_key(|&i| (2 * i).abs_diff(n))
            .expect("n is a candidate")
    } else {
        order.len()
    };
    let mut left = Sweep::new(&ket, bra, opts.chi, 1.0);
    for (v, _) in &order[..split] {
        left.absorb(v)?;
    }
    let mut right = Sweep::new(&ket, bra, opts.chi, -1.0);
    let mut rest: Vec<_> = order[split..].to_vec();
    rest.sort_by(|a, b| b.1[0].total_cmp(&a.1[0]).then(a.1[1].total_cmp(&b.1[1])).then(a.0.cmp(b.0)));
    for (v, _) in &rest {
        right.absorb(v)?;
    }
    let om = FlopMeter::start();
    let ov = overlap(&left, &right)?;
    let mut counts = left.counts.clone();
    counts.add(&right.counts);
    counts.overlap = om.elapsed();
    let mut step_max = left.step_max.clone();
    step_max.max_with(&right.step_max);
    step_max.overlap = counts.overlap;
    let value = ov * left.scalar * right.scalar * (left.log_scale + right.log_scale).exp();
    let max_bond = left.max_bond.max(right.max_bond);
    let chi_eff = opts.chi.map_or(max_bond, |c| c.min(max_bond)) as f64;
    let (model_cost, schedule) = match model_cost(&ket, bra, chi_eff) {
        Some((c, s)) => (Some(c), s),
        None => (None, "generic"),
    };
    Ok(ContractionReport {
        value,
        discarded_weight: left.discarded + right.discarded,
        multiply_count: meter.elapsed(),
        counts,
        step_max,
        max_bond,
        model_cost,
        chi: opts.chi,
        schedule: schedule.into(),
    })
}

/// Square-lattice sandwich; both networks must come from square lattices.
pub fn contract_square(ket: &PepsNetwork, bra: &PepsNetwork, opts: &ContractOptions) -> Result<ContractionReport> {
    if !matches!((&ket.lattice, &bra.lattice), (LatticeInfo::Square { .. }, LatticeInfo::Square { .. })) {
        return Err(Error::NetworkMismatch("contract_square needs square-lattice networks".into()));
    }
    contract_sandwich(ket, bra, opts)
}

/// Kagome sandwich; bond dimensions may differ between the two layers.
pub fn contract_kagome(ket: &PepsNetwork, bra: &PepsNetwork, opts: &ContractOptions) -> Result<ContractionReport> {
    if !matches!((&ket.lattice, &bra.lattice), (LatticeInfo::Kagome { .. }, LatticeInfo::Kagome { .. })) {
        return Err(Error::NetworkMismatch("contract_kagome needs kagome networks".into()));
    }
    contract_sandwich(ket, bra, opts)
}

/// Dense `⟨bra|(⊗ O_v)|ket⟩`, the reference for the sweeps.
pub fn dense_sandwich(ket: &PepsNetwork, bra: &PepsNetwork, ops: &BTreeMap<String, DMatrix<C64>>) -> Result<C64> {
    let k = if ops.is_empty() { ket.to_dense()? } else { ket.with_operators(ops)?.to_dense()? };
    bra.to_dense()?.inner(&k)
}
