//! Dense kernels shared by the tensor layer: a row-major complex matrix
//! product, a sorted SVD, and the thread-local multiply-add counter that the
//! boundary-MPS cost validation reads.

use crate::C64;
use nalgebra::DMatrix;
use std::cell::Cell;

thread_local! {
    static MULTIPLY_ADDS: Cell<u64> = const { Cell::new(0) };
}

/// Total multiply-adds recorded on this thread so far.
pub fn flop_count() -> u64 {
    MULTIPLY_ADDS.with(|c| c.get())
}

pub(crate) fn record_flops(n: u64) {
    MULTIPLY_ADDS.with(|c| c.set(c.get().wrapping_add(n)));
}

/// Measures the multiply-adds performed on the current thread since creation.
#[derive(Debug, Clone, Copy)]
pub struct FlopMeter {
    start: u64,
}

impl FlopMeter {
    pub fn start() -> Self {
        Self { start: flop_count() }
    }

    pub fn elapsed(&self) -> u64 {
        flop_count() - self.start
    }
}

impl Default for FlopMeter {
    fn default() -> Self {
        Self::start()
    }
}

/// `c = a * b` for row-major `a` (m x k) and `b` (k x n).
///
/// Products with a trivial summation index (k = 1) are outer products and
/// are not counted as multiply-adds.
pub fn gemm(m: usize, k: usize, n: usize, a: &[C64], b: &[C64]) -> Vec<C64> {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    if k > 1 {
        record_flops((m * k * n) as u64);
    }
    let zero = C64::new(0.0, 0.0);
    let mut c = vec![zero; m * n];
    for i in 0..m {
        let row = &mut c[i * n..(i + 1) * n];
        for p in 0..k {
            let aip = a[i * k + p];
            if aip == zero {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (cij, bpj) in row.iter_mut().zip(brow) {
                *cij += aip * bpj;
            }
        }
    }
    c
}

/// Thin SVD of a row-major `m x n` matrix with singular values in
/// descending order. Returns `(u, s, vt)` with `u` as `m x r` and `vt` as
/// `r x n`, both row-major, `r = min(m, n)`.
pub fn svd_sorted(m: usize, n: usize, data: &[C64]) -> (Vec<C64>, Vec<f64>, Vec<C64>) {
    let mat = DMatrix::from_row_slice(m, n, data);
    let svd = mat.svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let vt = svd.v_t.expect("right singular vectors requested");
    let s = svd.singular_values;
    let r = s.len();
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).unwrap_or(std::cmp::Ordering::Equal).then(i.cmp(&j)));
    let mut u_out = Vec::with_capacity(m * r);
    for row in 0..m {
        for &col in &order {
            u_out.push(u[(row, col)]);
        }
    }
    let mut vt_out = Vec::with_capacity(r * n);
    for &row in &order {
        for col in 0..n {
            vt_out.push(vt[(row, col)]);
        }
    }
    let s_out = order.iter().map(|&i| s[i]).collect();
    (u_out, s_out, vt_out)
}

/// Singular values only, descending.
pub fn singular_values(m: usize, n: usize, data: &[C64]) -> Vec<f64> {
    let mat = DMatrix::from_row_slice(m, n, data);
    let mut s: Vec<f64> = mat.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    s
}

/// Number of singular values above `tol` times the largest one.
pub fn numerical_rank(s: &[f64], tol: f64) -> usize {
    match s.first() {
        Some(&smax) if smax > 0.0 => s.iter().filter(|&&x| x > tol * smax).count(),
        _ => 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn gemm_matches_hand_product() {
        let a = [c(1.0), c(2.0), c(3.0), c(4.0)];
        let b = [c(0.0), c(1.0), c(1.0), c(0.0)];
        assert_eq!(gemm(2, 2, 2, &a, &b), vec![c(2.0), c(1.0), c(4.0), c(3.0)]);
    }

    #[test]
    fn gemm_counts_only_real_contractions() {
        let meter = FlopMeter::start();
        gemm(3, 1, 4, &[c(1.0); 3], &[c(1.0); 4]);
        assert_eq!(meter.elapsed(), 0);
        gemm(3, 2, 4, &[c(1.0); 6], &[c(1.0); 8]);
        assert_eq!(meter.elapsed(), 24);
    }

    #[test]
    fn svd_is_sorted_and_reconstructs() {
        let data = [c(1.0), c(0.0), c(0.0), c(0.0), c(3.0), c(0.0)];
        let (u, s, vt) = svd_sorted(2, 3, &data);
        assert!((s[0] - 3.0).abs() < 1e-12 && (s[1] - 1.0).abs() < 1e-12);
        for i in 0..2 {
            for j in 0..3 {
                let v: C64 = (0..2).map(|r| u[i * 2 + r] * s[r] * vt[r * 3 + j]).sum();
                assert!((v - data[i * 3 + j]).norm() < 1e-12);
            }
        }
    }
}
