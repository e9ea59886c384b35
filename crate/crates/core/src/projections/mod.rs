//! Exact (biased) Euclidean projections used by the dual solver.
//!
//! Every routine minimizes `‖a − x‖² + rho·⟨1,x⟩²` over a polytope and
//! returns the minimizer in threshold form `x = clamp(a − t, lower, u)`,
//! together with the index partition induced by `(t, u)`.
//!
//! * [`project_knapsack`]: `⟨1,x⟩ = rhs` with fixed box bounds.
//! * [`project_topk_cone`]: `0 ≤ x_i ≤ ⟨1,x⟩/k`.
//! * [`project_topk_simplex`]: the top-k cone intersected with `⟨1,x⟩ ≤ r`.
//! * [`project_topk_box`] / [`project_capped_simplex`]: `⟨1,x⟩ ≤ r` with a
//!   fixed cap on each coordinate.

mod capped;
mod cone;
mod knapsack;

pub use capped::{project_capped_simplex, project_topk_box};
pub use cone::project_topk_cone;
pub use knapsack::{project_knapsack, project_knapsack_sorted};

use crate::error::{Error, Result};
use crate::numkit::{ensure_finite, top_sorted};

/// Absolute slack on membership tests for the projection sets.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Slack on the partition windows, relative to `max(1, ‖a‖∞)`.
pub(crate) const PARTITION_SLACK: f64 = 1e-12;

/// Which side of the thresholds a coordinate falls on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    /// `x_i = u`.
    Upper,
    /// `lower < x_i < u`.
    Middle,
    /// `x_i = lower`.
    Lower,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub x: Vec<f64>,
    /// Lower threshold (multiplier of the sum constraint).
    pub t: f64,
    /// Upper threshold (the per-coordinate cap at the optimum).
    pub u: f64,
    /// Lower bound on the coordinates; `0` except for general knapsack calls.
    pub lower: f64,
    pub partition: Vec<Part>,
    /// Set when the top-k cone search found no valid partition and fell back
    /// to zero.
    pub fallback: bool,
}

impl ProjectionResult {
    /// Builds `x = min(max(lower, a − t), u)` and tags each coordinate.
    pub fn from_thresholds(a: &[f64], lower: f64, t: f64, u: f64) -> Self {
        let mut x = Vec::with_capacity(a.len());
        let mut partition = Vec::with_capacity(a.len());
        const TAGS: [Part; 4] = [Part::Middle, Part::Upper, Part::Lower, Part::Lower];
        for &v in a {
            let shifted = v - t;
            let idx = 2 * (shifted <= lower) as usize + (shifted >= u) as usize;
            x.push(if idx >= 2 { lower } else { shifted.min(u) });
            partition.push(TAGS[idx]);
        }
        ProjectionResult {
            x,
            t,
            u,
            lower,
            partition,
            fallback: false,
        }
    }

    pub(crate) fn zero(a: &[f64]) -> Self {
        let t = a.iter().fold(0.0f64, |m, &v| m.max(v));
        Self::from_thresholds(a, 0.0, t, 0.0)
    }

    /// `min(max(lower, a − t), u)` recomputed from the stored thresholds.
    pub fn reconstruct(&self, a: &[f64]) -> Vec<f64> {
        a.iter()
            .map(|&v| (v - self.t).max(self.lower).min(self.u))
            .collect()
    }

    pub fn sum(&self) -> f64 {
        self.x.iter().sum()
    }
}

/// Parameters of the top-k simplex `Δ_k(r)` and the bias weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopKSimplexSpec {
    pub k: usize,
    pub r: f64,
    pub rho: f64,
}

impl TopKSimplexSpec {
    pub fn new(k: usize, r: f64, rho: f64) -> Result<Self> {
        let spec = TopKSimplexSpec { k, r, rho };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if !(self.r >= 0.0 && self.r.is_finite()) {
            return Err(Error::invalid(format!("r = {} must be finite and >= 0", self.r)));
        }
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return Err(Error::invalid(format!("rho = {} must be finite and >= 0", self.rho)));
        }
        Ok(())
    }
}

pub(crate) fn validate_input(a: &[f64]) -> Result<()> {
    if a.is_empty() {
        return Err(Error::invalid("cannot project an empty vector"));
    }
    ensure_finite(a, "projection input")
}

/// Biased projection onto `Δ_k(r) = { ⟨1,x⟩ ≤ r, 0 ≤ x_i ≤ ⟨1,x⟩/k }`.
///
/// Tries the zero and constant solutions first, then the knapsack problem
/// with the sum constraint active (`u = r/k`). The knapsack solution is
/// optimal iff `t + p/k − rho·r ≥ 0` with `p = Σ_i max(0, a_i − t − u)`;
/// otherwise the sum constraint is slack and the top-k cone projection is
/// returned.
pub fn project_topk_simplex(a: &[f64], spec: TopKSimplexSpec) -> Result<ProjectionResult> {
    validate_input(a)?;
    spec.validate()?;
    let TopKSimplexSpec { k, r, rho } = spec;
    let d = a.len();
    if k > d {
        return Err(Error::invalid(format!("k = {k} exceeds the dimension {d}")));
    }
    if r == 0.0 {
        return Ok(ProjectionResult::zero(a));
    }
    if d == 1 {
        // A single coordinate always equals the sum, so it sits at the cap.
        let x = (a[0] / (1.0 + rho)).clamp(0.0, r);
        if x == 0.0 {
            return Ok(ProjectionResult::zero(a));
        }
        return Ok(ProjectionResult::from_thresholds(a, 0.0, 0.0, x));
    }
    let top = top_sorted(a, k + 1);
    if top[..k].iter().sum::<f64>() <= 0.0 {
        return Ok(ProjectionResult::zero(a));
    }
    if let Some(res) = cone::constant_case(a, &top, k, rho) {
        if k as f64 * res.u <= r {
            return Ok(res);
        }
    }

    let kf = k as f64;
    let kn = project_knapsack(a, 0.0, r / kf, r)?;
    let p: f64 = a.iter().map(|&v| (v - kn.t - kn.u).max(0.0)).sum();
    let lambda = kn.t + p / kf - rho * r;
    if lambda >= 0.0 {
        return Ok(kn);
    }
    let cone = project_topk_cone(a, k, rho)?;
    // λ < 0 only by rounding when the cone optimum sits on ⟨1,x⟩ = r.
    if cone.sum() > r * (1.0 + FEASIBILITY_TOL) {
        return Ok(kn);
    }
    Ok(cone)
}

/// `x ∈ Δ_k(r)` within `tol`.
pub fn in_topk_simplex(x: &[f64], k: usize, r: f64, tol: f64) -> bool {
    let s: f64 = x.iter().sum();
    let cap = s / k as f64;
    s <= r + tol && x.iter().all(|&v| v >= -tol && v <= cap + tol)
}

/// `x ∈ { ⟨1,x⟩ ≤ r, 0 ≤ x_i ≤ upper }` within `tol`.
pub fn in_capped_simplex(x: &[f64], upper: f64, r: f64, tol: f64) -> bool {
    let s: f64 = x.iter().sum();
    s <= r + tol && x.iter().all(|&v| v >= -tol && v <= upper + tol)
}
