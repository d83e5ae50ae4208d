//! Exact integer linear algebra: Smith normal form and rank.

use crate::{Error, Result};

pub type IntMatrix = Vec<Vec<i64>>;

/// `U · A · V = S` with `U`, `V` unimodular and `S` diagonal, each diagonal
/// entry dividing the next.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmithForm {
    pub s: IntMatrix,
    pub u: IntMatrix,
    pub v: IntMatrix,
    pub rank: usize,
}

impl SmithForm {
    pub fn diagonal(&self) -> Vec<i64> {
        (0..self.rank).map(|i| self.s[i][i]).collect()
    }
}

fn identity(n: usize) -> IntMatrix {
    (0..n).map(|i| (0..n).map(|j| i64::from(i == j)).collect()).collect()
}

pub fn mat_mul(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    let (n, k, m) = (a.len(), b.len(), b.first().map_or(0, Vec::len));
    (0..n).map(|i| (0..m).map(|j| (0..k).map(|p| a[i][p] * b[p][j]).sum()).collect()).collect()
}

pub fn mat_vec(a: &IntMatrix, x: &[i64]) -> Vec<i64> {
    a.iter().map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

fn swap_rows(m: &mut IntMatrix, i: usize, j: usize) {
    m.swap(i, j);
}

fn swap_cols(m: &mut IntMatrix, i: usize, j: usize) {
    for row in m.iter_mut() {
        row.swap(i, j);
    }
}

/// row_i -= q · row_j
fn row_op(m: &mut IntMatrix, i: usize, j: usize, q: i64) {
    let rj = m[j].clone();
    for (x, y) in m[i].iter_mut().zip(rj) {
        *x -= q * y;
    }
}

/// col_i -= q · col_j
fn col_op(m: &mut IntMatrix, i: usize, j: usize, q: i64) {
    for row in m.iter_mut() {
        row[i] -= q * row[j];
    }
}

/// Smith normal form by repeated Euclidean row and column reduction.
pub fn smith_normal_form(a: &IntMatrix) -> Result<SmithForm> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    if rows == 0 || cols == 0 || a.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidArgument("Smith form needs a nonempty rectangular matrix".into()));
    }
    let mut s = a.clone();
    let mut u = identity(rows);
    let mut v = identity(cols);
    let mut t = 0;
    while t < rows.min(cols) {
        // pivot: smallest nonzero magnitude in the remaining block
        let mut pivot = None;
        for i in t..rows {
            for j in t..cols {
                if s[i][j] != 0 && pivot.is_none_or(|(pi, pj): (usize, usize)| s[i][j].abs() < s[pi][pj].abs()) {
                    pivot = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = pivot else { break };
        swap_rows(&mut s, t, pi);
        swap_rows(&mut u, t, pi);
        swap_cols(&mut s, t, pj);
        swap_cols(&mut v, t, pj);
        loop {
            let mut changed = false;
            for i in t + 1..rows {
                if s[i][t] != 0 {
                    let q = s[i][t].div_euclid(s[t][t]);
                    row_op(&mut s, i, t, q);
                    row_op(&mut u, i, t, q);
                    if s[i][t] != 0 {
                        swap_rows(&mut s, t, i);
                        swap_rows(&mut u, t, i);
                        changed = true;
                    }
                }
            }
            for j in t + 1..cols {
                if s[t][j] != 0 {
                    let q = s[t][j].div_euclid(s[t][t]);
                    col_op(&mut s, j, t, q);
                    col_op(&mut v, j, t, q);
                    if s[t][j] != 0 {
                        swap_cols(&mut s, t, j);
                        swap_cols(&mut v, t, j);
                        changed = true;
                    }
                }
            }
            if changed {
                continue;
            }
            // divisibility of the rest of the block by the pivot
            let bad = (t + 1..rows).flat_map(|i| (t + 1..cols).map(move |j| (i, j))).find(|&(i, j)| s[i][j] % s[t][t] != 0);
            match bad {
                Some((i, _)) => {
                    // fold row i into row t and reduce again
                    row_op(&mut s, t, i, -1);
                    row_op(&mut u, t, i, -1);
                }
                None => break,
            }
        }
        if s[t][t] < 0 {
            for x in s[t].iter_mut() {
                *x = -*x;
            }
            for x in u[t].iter_mut() {
                *x = -*x;
            }
        }
        t += 1;
    }
    let rank = (0..rows.min(cols)).filter(|&i| s[i][i] != 0).count();
    Ok(SmithForm { s, u, v, rank })
}

/// Exact rank by fraction-free elimination.
pub fn integer_rank(a: &IntMatrix) -> usize {
    let mut m: Vec<Vec<i128>> = a.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows).find(|&r| m[r][c] != 0) else { continue };
        m.swap(rank, p);
        for r in 0..rows {
            if r != rank && m[r][c] != 0 {
                let (a, b) = (m[rank][c], m[r][c]);
                for k in 0..cols {
                    m[r][k] = m[r][k] * a - m[rank][k] * b;
                }
                let g = m[r].iter().fold(0i128, |g, &x| gcd(g, x.abs()));
                if g > 1 {
                    for x in m[r].iter_mut() {
                        *x /= g;
                    }
                }
            }
        }
        rank += 1;
    }
    rank
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// All integer solutions of `A x = b` with `0 ≤ x_l < bounds[l]`, found
/// through the Smith parametrization `x = V y`.
pub fn box_solutions(a: &IntMatrix, b: &[i64], bounds: &[usize]) -> Result<Vec<Vec<i64>>> {
    let snf = smith_normal_form(a)?;
    let n = bounds.len();
    if a[0].len() != n || a.len() != b.len() {
        return Err(Error::DimensionMismatch("system and bounds disagree".into()));
    }
    let ub = mat_vec(&snf.u, b);
    let mut fixed = vec![0i64; n];
    for i in 0..snf.rank {
        if ub[i] % snf.s[i][i] != 0 {
            return Ok(Vec::new());
        }
        fixed[i] = ub[i] / snf.s[i][i];
    }
    if ub[snf.rank..].iter().any(|&x| x != 0) {
        return Ok(Vec::new());
    }
    // y = V^{-1} x; bound the free coordinates through the inverse of V.
    let vinv = unimodular_inverse(&snf.v)?;
    let free: Vec<usize> = (snf.rank..n).collect();
    let ranges: Vec<(i64, i64)> = free
        .iter()
        .map(|&j| {
            let (mut lo, mut hi) = (0i64, 0i64);
            for (l, &bound) in bounds.iter().enumerate() {
                let c = vinv[j][l] * (bound as i64 - 1);
                if c < 0 {
                    lo += c;
                } else {
                    hi += c;
                }
            }
            (lo, hi)
        })
        .collect();
    let mut out = Vec::new();
    let mut y = fixed.clone();
    enumerate_ranges(&ranges, 0, &mut |vals| {
        for (k, &j) in free.iter().enumerate() {
            y[j] = vals[k];
        }
        let x = mat_vec(&snf.v, &y);
        if x.iter().zip(bounds).all(|(&xi, &bd)| xi >= 0 && (xi as usize) < bd) {
            out.push(x);
        }
    });
    out.sort();
    Ok(out)
}

fn enumerate_ranges(ranges: &[(i64, i64)], _depth: usize, f: &mut impl FnMut(&[i64])) {
    let mut cur: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    if ranges.iter().any(|r| r.0 > r.1) {
        return;
    }
    loop {
        f(&cur);
        let mut k = ranges.len();
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            cur[k] += 1;
            if cur[k] <= ranges[k].1 {
                break;
            }
            cur[k] = ranges[k].0;
        }
    }
}

/// Inverse of a unimodular integer matrix by exact Gauss-Jordan elimination.
pub fn unimodular_inverse(m: &IntMatrix) -> Result<IntMatrix> {
    let n = m.len();
    let mut a: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let mut inv: Vec<Vec<i128>> = (0..n).map(|i| (0..n).map(|j| i128::from(i == j)).collect()).collect();
    for c in 0..n {
        // Euclid on column c below the diagonal until a unit pivot remains.
        loop {
            let nz: Vec<usize> = (c..n).filter(|&r| a[r][c] != 0).collect();
            let Some(&p) = nz.iter().min_by_key(|&&r| a[r][c].abs()) else {
                return Err(Error::InvalidArgument("matrix is singular".into()));
            };
            a.swap(c, p);
            inv.swap(c, p);
            let mut done = true;
            for r in c + 1..n {
                if a[r][c] != 0 {
                    let q = a[r][c].div_euclid(a[c][c]);
                    for k in 0..n {
                        a[r][k] -= q * a[c][k];
                        inv[r][k] -= q * inv[c][k];
                    }
                    if a[r][c] != 0 {
                        done = false;
                    }
                }
            }
            if done {
                break;
            }
        }
        if a[c][c].abs() != 1 {
            return Err(Error::InvalidArgument("matrix is not unimodular".into()));
        }
        if a[c][c] < 0 {
            for k in 0..n {
                a[c][k] = -a[c][k];
                inv[c][k] = -inv[c][k];
            }
        }
    }
    for c in (0..n).rev() {
        for r in 0..c {
            let q = a[r][c];
            if q != 0 {
                for k in 0..n {
                    a[r][k] -= q * a[c][k];
                    inv[r][k] -= q * inv[c][k];
                }
            }
        }
    }
    Ok(inv.into_iter().map(|r| r.into_iter().map(|x| x as i64).collect()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smith_form_of_small_matrices() {
        let a = vec![vec![2, 4, 4], vec![-6, 6, 12], vec![10, -4, -16]];
        let f = smith_normal_form(&a).unwrap();
        assert_eq!(f.diagonal(), vec![2, 6, 12]);
        assert_eq!(mat_mul(&mat_mul(&f.u, &a), &f.v), f.s);
        let c4 = vec![vec![1, -1, 1, 0], vec![1, 0, -1, 1]];
        let f4 = smith_normal_form(&c4).unwrap();
        assert_eq!(f4.diagonal(), vec![1, 1]);
        assert_eq!(mat_mul(&mat_mul(&f4.u, &c4), &f4.v), f4.s);
    }

    #[test]
    fn rank_and_inverse() {
        assert_eq!(integer_rank(&vec![vec![1, 2], vec![2, 4]]), 1);
        assert_eq!(integer_rank(&vec![vec![1, 2], vec![3, 4]]), 2);
        let v = vec![vec![1, 1, 0], vec![0, 1, 0], vec![2, 3, 1]];
        let inv = unimodular_inverse(&v).unwrap();
        assert_eq!(mat_mul(&v, &inv), identity(3));
    }

    #[test]
    fn box_solutions_match_brute_force() {
        let a = vec![vec![1, -1, 1, 0], vec![1, 0, -1, 1]];
        for k in 2..5usize {
            let g = (k / 2) as i64;
            let sols = box_solutions(&a, &[g, g], &[k; 4]).unwrap();
            let mut brute = Vec::new();
            for i0 in 0..k as i64 {
                for i1 in 0..k as i64 {
                    for i2 in 0..k as i64 {
                        for i3 in 0..k as i64 {
                            if i0 - i1 + i2 == g && i0 - i2 + i3 == g {
                                brute.push(vec![i0, i1, i2, i3]);
                            }
                        }
                    }
                }
            }
            assert_eq!(sols, brute);
        }
    }
}
