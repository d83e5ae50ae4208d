//! Analytic cost of absorbing one tensor into a boundary MPS, and of exact
//! contraction of the RVB PEPS.

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostModel {
    pub c_mm: f64,
    pub c_svd: f64,
    pub chi: f64,
    /// Physical dimension.
    pub d: f64,
}

impl CostModel {
    pub fn new(chi: f64, d: f64) -> Self {
        Self { c_mm: 1.0, c_svd: 1.0, chi, d }
    }
}

/// `(C_MM + C_SVD) χ³ D₁² D₂² + 2 C_MM χ² D₁³ D₂³ d` per absorbed tensor.
pub fn cost_square(m: &CostModel, d1: f64, d2: f64) -> f64 {
    let chi = m.chi;
    (m.c_mm + m.c_svd) * chi.powi(3) * d1 * d1 * d2 * d2 + 2.0 * m.c_mm * chi * chi * d1.powi(3) * d2.powi(3) * m.d
}

/// Bond dimensions of up (`k`) and down (`d`) triangles in the two layers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KagomeDims {
    pub k_up: [f64; 3],
    pub k_down: [f64; 3],
    pub d_up: [f64; 3],
    pub d_down: [f64; 3],
}

impl KagomeDims {
    /// Same assignment in both layers.
    pub fn symmetric(k: [f64; 3], d: [f64; 3]) -> Self {
        Self { k_up: k, k_down: k, d_up: d, d_down: d }
    }
}

/// Upper bound on absorbing one kagome tensor: the maximum over the three
/// step types, taken separately for each term.
pub fn cost_kagome(m: &CostModel, x: &KagomeDims) -> f64 {
    let (ku, kd, du, dd) = (x.k_up, x.k_down, x.d_up, x.d_down);
    // 1-based names as in the bound: K1 = k[0], …
    let (k1u, k2u, k3u) = (ku[0], ku[1], ku[2]);
    let (k1d, k2d, k3d) = (kd[0], kd[1], kd[2]);
    let (d1u, d2u, d3u) = (du[0], du[1], du[2]);
    let (d1d, d2d, d3d) = (dd[0], dd[1], dd[2]);
    let max3 = |a: f64, b: f64, c: f64| a.max(b).max(c);
    let chi = m.chi;
    let svd = max3(d1u * d1d * d2u * d2d, d3u * d3d * k2u * k2d, k1u * k1d * k3u * k3d);
    let mm3 = max3(k2u * k2d * k3u * k3d, d1u * d1d * k1u * k1d, d2u * d2d * d3u * d3d);
    let mm2 = max3(
        k2u * k2d * k3u * k3d * d1u * d2u + k2d * k3d * d1u * d1d * d2u * d2d,
        d1u * d1d * k1u * k1d * d3u * k2u + d1d * k1d * d3u * d3d * k2u * k2d,
        d2u * d2d * d3u * d3d * k1u * k3u + d2d * d3d * k1u * k1d * k3u * k3d,
    );
    m.c_svd * chi.powi(3) * svd + m.c_mm * chi.powi(3) * mm3 + m.c_mm * chi * chi * m.d * mm2
}

/// Exact contraction of a `2(L+1) × 2(L+1)` PEPS of bond `D` from both sides,
/// and the same for the `2eL+1` contractions needed with an error-degree-`eL`
/// border representation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactCost {
    pub exact: f64,
    pub degeneration: f64,
}

pub fn cost_exact_rvb(l: u32, dim: f64, d: f64, e: u32) -> ExactCost {
    let lf = f64::from(l);
    let geometric = if dim == 1.0 { lf } else { (dim.powf(4.0 * lf) - 1.0) / (dim.powi(4) - 1.0) };
    let exact = 2.0 * (lf + 1.0) * geometric * dim.powi(10) * d;
    ExactCost { exact, degeneration: exact * (2.0 * f64::from(e) * lf + 1.0) }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_example() {
        assert_eq!(cost_square(&CostModel::new(4.0, 2.0), 2.0, 2.0), 6144.0);
    }

    #[test]
    fn kagome_reduces_to_square_form() {
        // D1 = D3 <= D2, both layers alike, up and down triangles alike
        for (a, b) in [(2.0, 2.0), (2.0, 3.0), (1.0, 4.0)] {
            let dims = KagomeDims::symmetric([a, b, a], [a, b, a]);
            let m = CostModel { c_mm: 1.3, c_svd: 0.7, chi: 5.0, d: 2.0 };
            let want = (m.c_svd + m.c_mm) * m.chi.powi(3) * a * a * b * b
                + 2.0 * m.c_mm * m.chi * m.chi * a.powi(3) * b.powi(3) * m.d;
            assert!((cost_kagome(&m, &dims) - want).abs() < 1e-9 * want);
        }
    }

    #[test]
    fn exact_rvb_ratio() {
        for l in 2..=6 {
            let three = cost_exact_rvb(l, 3.0, 2.0, 2).exact;
            let two = cost_exact_rvb(l, 2.0, 2.0, 2).degeneration;
            let bound = 1.5f64.powi(4 * l as i32) / (4.0 * l as f64 + 1.0);
            assert!(three / two >= bound);
        }
    }
}
