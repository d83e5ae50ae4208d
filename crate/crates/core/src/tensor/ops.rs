use super::{check_legs, DenseTensor, Leg};
use crate::linalg::{gemm, numerical_rank, record_flops, singular_values, svd_sorted};
use crate::{Error, Result, C64};
use nalgebra::DMatrix;
use std::collections::HashSet;

/// Sums over the paired legs of `a` and `b`.
///
/// The result carries the unpaired legs of `a` followed by the unpaired legs
/// of `b`, each in their original order.
pub fn contract(a: &DenseTensor, b: &DenseTensor, pairs: &[(&str, &str)]) -> Result<DenseTensor> {
    let mut seen_a = HashSet::new();
    let mut seen_b = HashSet::new();
    for (la, lb) in pairs {
        if !seen_a.insert(*la) {
            return Err(Error::DuplicateLeg(format!("`{la}` paired twice")));
        }
        if !seen_b.insert(*lb) {
            return Err(Error::DuplicateLeg(format!("`{lb}` paired twice")));
        }
        let (da, db) = (a.leg(la)?.dim, b.leg(lb)?.dim);
        if da != db {
            return Err(Error::DimensionMismatch(format!("`{la}` has dim {da}, `{lb}` has dim {db}")));
        }
    }
    let free_a: Vec<&Leg> = a.legs().iter().filter(|l| !seen_a.contains(l.id.as_str())).collect();
    let free_b: Vec<&Leg> = b.legs().iter().filter(|l| !seen_b.contains(l.id.as_str())).collect();
    let mut out_legs: Vec<Leg> = free_a.iter().map(|l| (*l).clone()).collect();
    out_legs.extend(free_b.iter().map(|l| (*l).clone()));
    check_legs(&out_legs)?;

    let order_a: Vec<&str> = free_a.iter().map(|l| l.id.as_str()).chain(pairs.iter().map(|p| p.0)).collect();
    let order_b: Vec<&str> = pairs.iter().map(|p| p.1).chain(free_b.iter().map(|l| l.id.as_str())).collect();
    let pa = a.permuted(&order_a)?;
    let pb = b.permuted(&order_b)?;
    let m: usize = free_a.iter().map(|l| l.dim).product();
    let n: usize = free_b.iter().map(|l| l.dim).product();
    let k: usize = pairs.iter().map(|(la, _)| a.leg(la).map(|l| l.dim).unwrap_or(1)).product();
    let data = gemm(m, k, n, pa.data(), pb.data());
    DenseTensor::new(out_legs, data)
}

/// Tensor product of two tensors with disjoint leg ids.
pub fn outer(a: &DenseTensor, b: &DenseTensor) -> Result<DenseTensor> {
    contract(a, b, &[])
}

/// Merges each group of legs into a single leg.
///
/// `groups` must partition the legs of `t`. Members are flattened
/// row-major in the order they are listed; new legs appear in group order.
pub fn group_legs(t: &DenseTensor, groups: &[(&str, &[&str])]) -> Result<DenseTensor> {
    let mut order = Vec::new();
    let mut seen = HashSet::new();
    let mut legs = Vec::new();
    for (new_id, members) in groups {
        if members.is_empty() {
            return Err(Error::InvalidPartition(format!("group `{new_id}` is empty")));
        }
        let mut dim = 1;
        for m in members.iter() {
            if !seen.insert(*m) {
                return Err(Error::InvalidPartition(format!("leg `{m}` appears in two groups")));
            }
            dim *= t.leg(m).map_err(|_| Error::InvalidPartition(format!("unknown leg `{m}`")))?.dim;
            order.push(*m);
        }
        legs.push(Leg::new(*new_id, dim));
    }
    if order.len() != t.rank() {
        let missing: Vec<&str> = t.leg_ids().into_iter().filter(|id| !seen.contains(id)).collect();
        return Err(Error::InvalidPartition(format!("legs not covered: {missing:?}")));
    }
    let p = t.permuted(&order)?;
    DenseTensor::new(legs, p.into_data())
}

/// Splits one leg into several in place; inverse of [`group_legs`].
pub fn split_leg(t: &DenseTensor, leg: &str, parts: &[Leg]) -> Result<DenseTensor> {
    let pos = t.leg_position(leg)?;
    let dim: usize = parts.iter().map(|l| l.dim).product();
    if dim != t.legs()[pos].dim {
        return Err(Error::DimensionMismatch(format!(
            "parts multiply to {dim}, leg `{leg}` has dim {}",
            t.legs()[pos].dim
        )));
    }
    let mut legs = t.legs()[..pos].to_vec();
    legs.extend_from_slice(parts);
    legs.extend_from_slice(&t.legs()[pos + 1..]);
    DenseTensor::new(legs, t.data().to_vec())
}

/// Applies `m` to one leg: `out[.., r, ..] = Σ_c m[r, c] t[.., c, ..]`.
///
/// The leg keeps its id and position; its dimension becomes `m.nrows()`.
pub fn apply_local_map(t: &DenseTensor, leg: &str, m: &DMatrix<C64>) -> Result<DenseTensor> {
    let pos = t.leg_position(leg)?;
    let dims = t.dims();
    let d = dims[pos];
    if m.ncols() != d {
        return Err(Error::DimensionMismatch(format!(
            "map on `{leg}` has {} columns, leg dim is {d}",
            m.ncols()
        )));
    }
    let rows = m.nrows();
    if rows == 0 {
        return Err(Error::InvalidArgument("map with zero rows".into()));
    }
    let pre: usize = dims[..pos].iter().product();
    let post: usize = dims[pos + 1..].iter().product();
    let src = t.data();
    let zero = C64::new(0.0, 0.0);
    let mut out = vec![zero; pre * rows * post];
    for p in 0..pre {
        for c in 0..d {
            let block = &src[(p * d + c) * post..(p * d + c + 1) * post];
            for r in 0..rows {
                let coef = m[(r, c)];
                if coef == zero {
                    continue;
                }
                let dst = &mut out[(p * rows + r) * post..(p * rows + r + 1) * post];
                for (o, s) in dst.iter_mut().zip(block) {
                    *o += coef * s;
                }
            }
        }
    }
    let mut legs = t.legs().to_vec();
    legs[pos].dim = rows;
    DenseTensor::new(legs, out)
}

/// Result of [`svd_truncate`].
#[derive(Clone, Debug)]
pub struct SvdSplit {
    /// Row legs followed by the new bond leg.
    pub u: DenseTensor,
    /// The bond leg followed by the remaining legs of the input, weighted by the kept singular values.
    pub sv: DenseTensor,
    /// All singular values, descending.
    pub singular_values: Vec<f64>,
    pub kept: usize,
    /// Sum of squares of the dropped singular values.
    pub discarded_weight: f64,
}

fn bipartition<'a>(t: &'a DenseTensor, row_legs: &[&'a str]) -> Result<(Vec<&'a str>, usize, usize)> {
    if row_legs.is_empty() || row_legs.len() >= t.rank() {
        return Err(Error::InvalidPartition("row legs must be a nonempty proper subset".into()));
    }
    let mut seen = HashSet::new();
    for r in row_legs {
        t.leg(r)?;
        if !seen.insert(*r) {
            return Err(Error::DuplicateLeg(r.to_string()));
        }
    }
    let cols: Vec<&str> = t.leg_ids().into_iter().filter(|id| !seen.contains(id)).collect();
    let m: usize = row_legs.iter().map(|r| t.leg(r).map(|l| l.dim).unwrap_or(1)).product();
    let n = t.len() / m;
    Ok((cols, m, n))
}

/// Splits `t` across `row_legs | rest`, keeping at most `chi` singular values.
///
/// Singular values below `1e-14` of the largest are treated as zero and never
/// kept. Ties at the cut keep the first values in the decomposition's order.
/// Counts `kept * m * n` multiply-adds for the decomposition, or none when
/// the matrix is a single row or column.
pub fn svd_truncate(t: &DenseTensor, row_legs: &[&str], chi: usize, bond_id: &str) -> Result<SvdSplit> {
    if chi < 1 {
        return Err(Error::InvalidArgument("chi must be at least 1".into()));
    }
    let (cols, m, n) = bipartition(t, row_legs)?;
    let order: Vec<&str> = row_legs.iter().copied().chain(cols.iter().copied()).collect();
    let p = t.permuted(&order)?;
    let (u, s, vt) = svd_sorted(m, n, p.data());
    let r = s.len();
    let kept = chi.min(numerical_rank(&s, 1e-14)).max(1);
    if m > 1 && n > 1 {
        record_flops((kept * m * n) as u64);
    }
    let discarded_weight: f64 = s[kept..].iter().map(|x| x * x).sum();

    let mut u_data = Vec::with_capacity(m * kept);
    for i in 0..m {
        u_data.extend_from_slice(&u[i * r..i * r + kept]);
    }
    let mut sv_data = Vec::with_capacity(kept * n);
    for (j, sj) in s.iter().take(kept).enumerate() {
        sv_data.extend(vt[j * n..(j + 1) * n].iter().map(|v| v * sj));
    }
    let mut u_legs: Vec<Leg> = row_legs.iter().map(|id| t.leg(id).cloned()).collect::<Result<_>>()?;
    u_legs.push(Leg::new(bond_id, kept));
    let mut sv_legs = vec![Leg::new(bond_id, kept)];
    sv_legs.extend(cols.iter().map(|id| t.leg(id).cloned()).collect::<Result<Vec<_>>>()?);
    Ok(SvdSplit {
        u: DenseTensor::new(u_legs, u_data)?,
        sv: DenseTensor::new(sv_legs, sv_data)?,
        singular_values: s,
        kept,
        discarded_weight,
    })
}

/// Singular values of the `part | rest` flattening, descending.
pub fn singular_values_across(t: &DenseTensor, part: &[&str]) -> Result<Vec<f64>> {
    let (cols, m, n) = bipartition(t, part)?;
    let order: Vec<&str> = part.iter().copied().chain(cols.iter().copied()).collect();
    let p = t.permuted(&order)?;
    Ok(singular_values(m, n, p.data()))
}

/// Number of singular values of the `part | rest` flattening above
/// `tol` times the largest. The zero tensor has rank 0.
pub fn schmidt_rank(t: &DenseTensor, part: &[&str], tol: f64) -> Result<usize> {
    Ok(numerical_rank(&singular_values_across(t, part)?, tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::DEFAULT_RANK_TOL;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn omega2(x: &str, y: &str) -> DenseTensor {
        DenseTensor::from_entries(vec![Leg::new(x, 2), Leg::new(y, 2)], &[(&[0, 0], c(1.0)), (&[1, 1], c(1.0))]).unwrap()
    }

    fn ghz(ids: &[&str], k: usize) -> DenseTensor {
        let legs = ids.iter().map(|id| Leg::new(*id, k)).collect();
        DenseTensor::from_fn(legs, |i| if i.iter().all(|&x| x == i[0]) { c(1.0) } else { c(0.0) }).unwrap()
    }

    #[test]
    fn identity_contraction_relabels() {
        let id = omega2("y'", "z");
        let out = contract(&omega2("x", "y"), &id, &[("y", "y'")]).unwrap();
        assert_eq!(out, omega2("x", "z"));
    }

    #[test]
    fn outer_product_of_plus_states() {
        let plus = |id: &str| DenseTensor::new(vec![Leg::new(id, 2)], vec![c(1.0), c(1.0)]).unwrap();
        let out = outer(&plus("a"), &plus("b")).unwrap();
        assert_eq!(out.dims(), vec![2, 2]);
        assert!(out.data().iter().all(|&v| v == c(1.0)));
    }

    #[test]
    fn cycle_of_bell_pairs_closes_to_trace() {
        let ab = contract(&omega2("a0", "a1"), &omega2("b0", "b1"), &[("a1", "b0")]).unwrap();
        let closed = contract(&ab, &omega2("c0", "c1"), &[("b1", "c0"), ("a0", "c1")]).unwrap();
        let mut brute = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    brute += ((i == j) as u8 * (j == k) as u8 * (k == i) as u8) as f64;
                }
            }
        }
        assert_eq!(closed.scalar_value().unwrap(), c(brute));
        assert_eq!(brute, 2.0);
    }

    #[test]
    fn contract_rejects_bad_pairs() {
        let a = omega2("x", "y");
        let b = ghz(&["p", "q", "r"], 3);
        assert!(matches!(contract(&a, &b, &[("y", "p")]), Err(Error::DimensionMismatch(_))));
        let b2 = omega2("p", "q");
        assert!(matches!(contract(&a, &b2, &[("y", "p"), ("y", "q")]), Err(Error::DuplicateLeg(_))));
    }

    #[test]
    fn grouping_ghz4_gives_schmidt_rank_two() {
        let g = ghz(&["1", "2", "3", "4"], 2);
        let grouped = group_legs(&g, &[("A", &["1", "2"]), ("B", &["3", "4"])]).unwrap();
        assert_eq!(grouped.dims(), vec![4, 4]);
        assert_eq!(schmidt_rank(&grouped, &["A"], DEFAULT_RANK_TOL).unwrap(), 2);
        let same = group_legs(&g, &[("1", &["1"]), ("2", &["2"]), ("3", &["3"]), ("4", &["4"])]).unwrap();
        assert_eq!(same, g);
        assert!(group_legs(&g, &[("A", &["1", "2"])]).is_err());
        assert!(group_legs(&g, &[("A", &["1", "2"]), ("B", &["2", "3", "4"])]).is_err());
    }

    #[test]
    fn split_inverts_group() {
        let t = DenseTensor::from_fn(vec![Leg::new("a", 2), Leg::new("b", 3), Leg::new("c", 2)], |i| {
            C64::new(i[0] as f64, (i[1] * 2 + i[2]) as f64)
        })
        .unwrap();
        let g = group_legs(&t, &[("bc", &["b", "c"]), ("a", &["a"])]).unwrap();
        let back = split_leg(&g, "bc", &[Leg::new("b", 3), Leg::new("c", 2)]).unwrap();
        assert_eq!(back.permuted(&["a", "b", "c"]).unwrap(), t);
    }

    #[test]
    fn diagonal_map_scales_ghz_branch() {
        let g = ghz(&["a", "b", "c"], 2);
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), c(0.5)]));
        let mut out = g.clone();
        for leg in ["a", "b", "c"] {
            out = apply_local_map(&out, leg, &m).unwrap();
        }
        assert_eq!(out.get(&[0, 0, 0]).unwrap(), c(1.0));
        assert_eq!(out.get(&[1, 1, 1]).unwrap(), c(0.125));
        assert_eq!(out.norm_sqr(), 1.0 + 0.125 * 0.125);
        let bad = DMatrix::<C64>::identity(3, 3);
        assert!(apply_local_map(&g, "a", &bad).is_err());
    }

    #[test]
    fn svd_of_bell_pair() {
        let full = svd_truncate(&omega2("x", "y"), &["x"], 4, "k").unwrap();
        assert_eq!(full.kept, 2);
        assert_eq!(full.discarded_weight, 0.0);
        let back = contract(&full.u, &full.sv, &[("k", "k")]).unwrap();
        assert!(back.max_abs_diff(&omega2("x", "y")).unwrap() < 1e-12);

        let cut = svd_truncate(&omega2("x", "y"), &["x"], 1, "k").unwrap();
        assert_eq!(cut.kept, 1);
        assert!((cut.discarded_weight - 1.0).abs() < 1e-12);
        assert!(svd_truncate(&omega2("x", "y"), &["x"], 0, "k").is_err());
        assert!(svd_truncate(&omega2("x", "y"), &["x", "y"], 1, "k").is_err());
    }

    #[test]
    fn ghz_single_site_rank_is_level() {
        for k in 1..=4 {
            let g = ghz(&["a", "b", "c"], k);
            for p in ["a", "b", "c"] {
                assert_eq!(schmidt_rank(&g, &[p], DEFAULT_RANK_TOL).unwrap(), k);
            }
        }
        let z = DenseTensor::zeros(vec![Leg::new("a", 2), Leg::new("b", 2)]).unwrap();
        assert_eq!(schmidt_rank(&z, &["a"], DEFAULT_RANK_TOL).unwrap(), 0);
    }
}
