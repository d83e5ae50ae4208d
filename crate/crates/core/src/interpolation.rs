//! Exact recovery of `T = T(0)` and of `⟨T|O|T⟩` from samples of a
//! polynomial family `T(ε)` at nonzero points, via Lagrange weights at zero.

use crate::json::{complex_to_pair, complex_vec};
use crate::tensor::DenseTensor;
use crate::{Error, Result, C64};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const DEFAULT_RADIUS: f64 = 0.7;
/// Relative mismatch allowed at the holdout point.
pub const HOLDOUT_TOL: f64 = 1e-8;
/// Lagrange weights larger than this in modulus trigger a warning.
pub const CONDITION_WARN: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    Real,
    Complex,
}

/// `γ_i = ℓ_i(0) = Π_{j≠i} x_j / (x_j − x_i)`.
pub fn lagrange_weights(points: &[C64]) -> Result<Vec<C64>> {
    check_points(points)?;
    let w = basis_at(points, C64::new(0.0, 0.0));
    let sum: C64 = w.iter().sum();
    let scale: f64 = w.iter().map(|g| g.norm()).sum::<f64>().max(1.0);
    if (sum - 1.0).norm() > 1e-12 * scale {
        return Err(Error::InvalidArgument(format!("Lagrange weights sum to {sum}, not 1")));
    }
    Ok(w)
}

fn check_points(points: &[C64]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::InsufficientPoints("no points".into()));
    }
    for (i, p) in points.iter().enumerate() {
        if *p == C64::new(0.0, 0.0) {
            return Err(Error::ZeroPoint);
        }
        if points[..i].contains(p) {
            return Err(Error::DuplicatePoint(format!("{p}")));
        }
    }
    Ok(())
}

/// Values of all Lagrange basis polynomials at `x`.
pub fn basis_at(points: &[C64], x: C64) -> Vec<C64> {
    (0..points.len())
        .map(|i| {
            let mut l = C64::new(1.0, 0.0);
            for (j, xj) in points.iter().enumerate() {
                if j != i {
                    l *= (x - xj) / (points[i] - xj);
                }
            }
            l
        })
        .collect()
}

/// Least-squares weights for the value at zero of a degree-`degree` fit.
pub fn least_squares_weights(points: &[C64], degree: usize) -> Result<Vec<C64>> {
    check_points(points)?;
    if points.len() < degree + 1 {
        return Err(Error::InsufficientPoints(format!("{} points for degree {degree}", points.len())));
    }
    let v = DMatrix::from_fn(points.len(), degree + 1, |i, k| points[i].powu(k as u32));
    let pinv = v
        .pseudo_inverse(1e-14)
        .map_err(|e| Error::InvalidArgument(format!("Vandermonde pseudo-inverse failed: {e}")))?;
    Ok(pinv.row(0).iter().copied().collect())
}

/// Symmetric Chebyshev points on `[-r, r]`, never hitting zero.
///
/// For odd counts the first `n` of the `n+1` nodes are used.
pub fn chebyshev_points(n: usize, radius: f64) -> Vec<C64> {
    let m = if n % 2 == 0 { n } else { n + 1 };
    (0..n)
        .map(|i| C64::new(radius * (std::f64::consts::PI * (2 * i + 1) as f64 / (2 * m) as f64).cos(), 0.0))
        .collect()
}

/// `r·ω^i` for the `n`-th roots of unity.
pub fn roots_of_unity(n: usize, radius: f64) -> Vec<C64> {
    (0..n).map(|i| C64::from_polar(radius, 2.0 * std::f64::consts::PI * i as f64 / n as f64)).collect()
}

/// Sample points, weights, and the degree they interpolate exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterpolationPlan {
    #[serde(with = "complex_vec")]
    pub points: Vec<C64>,
    #[serde(with = "complex_vec")]
    pub weights: Vec<C64>,
    pub degree: usize,
    /// Extra point used to detect an underestimated degree.
    #[serde(with = "crate::json::complex_pair")]
    pub holdout: C64,
}

impl InterpolationPlan {
    /// Exact interpolation through `degree + 1` given points.
    pub fn from_points(points: Vec<C64>, degree: usize, holdout: C64) -> Result<Self> {
        if points.len() != degree + 1 {
            return Err(Error::InsufficientPoints(format!(
                "degree {degree} needs {} points, got {}",
                degree + 1,
                points.len()
            )));
        }
        if points.contains(&holdout) || holdout == C64::new(0.0, 0.0) {
            return Err(Error::InvalidArgument("holdout must be a fresh nonzero point".into()));
        }
        let weights = lagrange_weights(&points)?;
        Ok(Self { points, weights, degree, holdout })
    }

    /// Default points for `mode` at radius `r`.
    pub fn new(mode: SampleMode, degree: usize, radius: f64) -> Result<Self> {
        Self::with_count(mode, degree, degree + 1, radius)
    }

    /// `count ≥ degree + 1` points; extra points give a least-squares fit.
    pub fn with_count(mode: SampleMode, degree: usize, count: usize, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
        }
        if count < degree + 1 {
            return Err(Error::InsufficientPoints(format!("{count} points for degree {degree}")));
        }
        let (points, holdout) = match mode {
            SampleMode::Real => (chebyshev_points(count, radius), C64::new(0.5377 * radius, 0.0)),
            SampleMode::Complex => {
                (roots_of_unity(count, radius), C64::from_polar(0.9 * radius, std::f64::consts::PI / count as f64))
            }
        };
        if count == degree + 1 {
            return Self::from_points(points, degree, holdout);
        }
        let weights = least_squares_weights(&points, degree)?;
        Ok(Self { points, weights, degree, holdout })
    }

    pub fn is_real(&self) -> bool {
        self.points.iter().all(|p| p.im == 0.0)
    }

    /// `Σ|γ_i|`, the amplification of per-sample errors.
    pub fn condition(&self) -> f64 {
        self.weights.iter().map(|g| g.norm()).sum()
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().map(|g| g.norm()).fold(0.0, f64::max)
    }

    pub fn warnings(&self) -> Vec<String> {
        let w = self.max_weight();
        if w > CONDITION_WARN {
            vec![format!("largest Lagrange weight {w:.3e} exceeds {CONDITION_WARN:.0e}; results may lose accuracy")]
        } else {
            Vec::new()
        }
    }

    /// Coefficients that evaluate the fitted polynomial at `x` from the samples.
    fn coefficients_at(&self, x: C64) -> Result<Vec<C64>> {
        if self.points.len() == self.degree + 1 {
            return Ok(basis_at(&self.points, x));
        }
        let v = DMatrix::from_fn(self.points.len(), self.degree + 1, |i, k| self.points[i].powu(k as u32));
        let pinv = v
            .pseudo_inverse(1e-14)
            .map_err(|e| Error::InvalidArgument(format!("Vandermonde pseudo-inverse failed: {e}")))?;
        Ok((0..self.points.len())
            .map(|i| (0..=self.degree).map(|k| x.powu(k as u32) * pinv[(k, i)]).sum())
            .collect())
    }
}

/// Runs the scalar interpolation at each candidate radius and keeps the one
/// with the smallest holdout mismatch.
///
/// Lagrange weights at zero do not depend on the radius, so the choice is
/// driven by how well the samples themselves are resolved.
pub fn tune_radius<F>(mode: SampleMode, degree: usize, candidates: &[f64], value: F) -> Result<(f64, ExpectationResult)>
where
    F: Fn(C64, C64) -> Result<C64> + Sync,
{
    let mut best: Option<(f64, ExpectationResult)> = None;
    let mut last_err = None;
    for &r in candidates {
        let plan = InterpolationPlan::new(mode, degree, r)?;
        match interpolate_scalar(&plan, &value) {
            Ok(res) => {
                if best.as_ref().is_none_or(|(_, b)| res.holdout_error < b.holdout_error) {
                    best = Some((r, res));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or_else(|| Error::InvalidArgument("no candidate radii".into())))
}

/// Thread cap from `BORDERTN_THREADS`, if set to a positive integer.
pub fn thread_limit() -> Option<usize> {
    std::env::var("BORDERTN_THREADS").ok().and_then(|s| s.trim().parse().ok()).filter(|&n: &usize| n > 0)
}

/// Evaluates `f` at every point in parallel; results come back in point order.
pub fn evaluate_all<T, F>(points: &[C64], f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(C64) -> Result<T> + Sync,
{
    let run = || points.par_iter().map(|&p| f(p)).collect::<Result<Vec<T>>>();
    match thread_limit() {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    }
}

fn weighted_tensor_sum(weights: &[C64], samples: &[DenseTensor]) -> Result<DenseTensor> {
    let mut acc = samples[0].scaled(weights[0]);
    for (w, s) in weights.iter().zip(samples).skip(1) {
        acc.add_assign_aligned(&s.scaled(*w))?;
    }
    Ok(acc)
}

/// `T` together with its summands `W_i = γ_i T(ε_i)`.
#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub state: DenseTensor,
    pub summands: Vec<DenseTensor>,
    pub plan: InterpolationPlan,
    /// Relative mismatch of the fit at the holdout point.
    pub holdout_error: f64,
}

/// `T = Σ_i γ_i T(ε_i)`, checked at the plan's holdout point.
pub fn reconstruct_state<F>(plan: &InterpolationPlan, sample: F) -> Result<Reconstruction>
where
    F: Fn(C64) -> Result<DenseTensor> + Sync,
{
    let mut all = plan.points.clone();
    all.push(plan.holdout);
    let mut samples = evaluate_all(&all, &sample)?;
    let direct = samples.pop().expect("holdout sample");
    let at_holdout = weighted_tensor_sum(&plan.coefficients_at(plan.holdout)?, &samples)?;
    let scale = samples.iter().map(DenseTensor::norm).fold(direct.norm(), f64::max);
    let holdout_error = if scale > 0.0 { at_holdout.sub(&direct)?.norm() / scale } else { 0.0 };
    if holdout_error > HOLDOUT_TOL {
        return Err(Error::DegreeUnderestimate(format!(
            "fit of degree {} misses the holdout sample by {holdout_error:.3e} (relative)",
            plan.degree
        )));
    }
    let summands: Vec<DenseTensor> = plan.weights.iter().zip(&samples).map(|(w, s)| s.scaled(*w)).collect();
    let state = weighted_tensor_sum(&vec![C64::new(1.0, 0.0); summands.len()], &summands)?;
    Ok(Reconstruction { state, summands, plan: plan.clone(), holdout_error })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpectationResult {
    #[serde(with = "crate::json::complex_pair")]
    pub value: C64,
    pub plan: InterpolationPlan,
    #[serde(with = "complex_vec")]
    pub per_point: Vec<C64>,
    pub condition: f64,
    pub max_weight: f64,
    pub holdout_error: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

fn interpolate_scalar<F>(plan: &InterpolationPlan, value: F) -> Result<ExpectationResult>
where
    F: Fn(C64, C64) -> Result<C64> + Sync,
{
    let mut all = plan.points.clone();
    all.push(plan.holdout);
    let mut per_point = evaluate_all(&all, |x| value(x.conj(), x))?;
    let direct = per_point.pop().expect("holdout sample");
    let fitted: C64 = plan.coefficients_at(plan.holdout)?.iter().zip(&per_point).map(|(c, v)| c * v).sum();
    let scale = per_point.iter().map(|v| v.norm()).fold(direct.norm(), f64::max);
    let holdout_error = if scale > 0.0 { (fitted - direct).norm() / scale } else { 0.0 };
    if holdout_error > HOLDOUT_TOL {
        return Err(Error::DegreeUnderestimate(format!(
            "fit of degree {} misses the holdout value by {holdout_error:.3e} (relative)",
            plan.degree
        )));
    }
    let value = plan.weights.iter().zip(&per_point).map(|(w, v)| w * v).sum();
    Ok(ExpectationResult {
        value,
        condition: plan.condition(),
        max_weight: plan.max_weight(),
        warnings: plan.warnings(),
        plan: plan.clone(),
        per_point,
        holdout_error,
    })
}

/// `⟨T|O|T⟩` from real samples `⟨T(ε)|O|T(ε)⟩`.
///
/// `value(bra_eps, ket_eps)` must return `⟨T(bra_eps)| O |T(ket_eps)⟩` with
/// the bra conjugated. The plan degree must cover `2·deg T`.
pub fn expectation_real<F>(plan: &InterpolationPlan, value: F) -> Result<ExpectationResult>
where
    F: Fn(C64, C64) -> Result<C64> + Sync,
{
    if !plan.is_real() {
        return Err(Error::InvalidArgument("real-mode expectation needs real sample points".into()));
    }
    interpolate_scalar(plan, value)
}

/// `⟨T|O|T⟩` from the analytic form `⟨T(ε̄)|O|T(ε)⟩` at arbitrary complex points.
pub fn expectation_complex<F>(plan: &InterpolationPlan, value: F) -> Result<ExpectationResult>
where
    F: Fn(C64, C64) -> Result<C64> + Sync,
{
    interpolate_scalar(plan, value)
}

/// Degree of `⟨T(ε̄)|O|T(ε)⟩` for a state family of degree `state_degree`.
pub fn expectation_degree(state_degree: usize) -> usize {
    2 * state_degree
}

/// Summary line used by reports.
pub fn plan_summary(plan: &InterpolationPlan) -> serde_json::Value {
    serde_json::json!({
        "degree": plan.degree,
        "points": plan.points.iter().map(|p| complex_to_pair(*p)).collect::<Vec<_>>(),
        "weights": plan.weights.iter().map(|p| complex_to_pair(*p)).collect::<Vec<_>>(),
        "condition": plan.condition(),
    })
}
