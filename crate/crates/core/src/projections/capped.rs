//! Biased projection onto the capped simplex
//! `{ x : ⟨1,x⟩ ≤ r, 0 ≤ x_i ≤ upper }`, objective `‖a − x‖² + rho·⟨1,x⟩²`.
//!
//! With `upper = 1/k` this is the conjugate domain of the β (averaged
//! thresholded) top-k hinge loss; the solver uses `upper = r/k` for the scaled
//! set. Optimality gives `x = clamp(a − t, 0, upper)` with `t − rho·⟨1,x⟩ ≥ 0`
//! and equality unless the sum constraint is active.

use super::knapsack::project_knapsack;
use super::{validate_input, ProjectionResult};
use crate::error::{Error, Result};

/// Capped simplex with the top-k cap `1/k`.
pub fn project_topk_box(a: &[f64], k: usize, r: f64, rho: f64) -> Result<ProjectionResult> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    project_capped_simplex(a, 1.0 / k as f64, r, rho)
}

pub fn project_capped_simplex(a: &[f64], upper: f64, r: f64, rho: f64) -> Result<ProjectionResult> {
    validate_input(a)?;
    for (name, v) in [("upper", upper), ("r", r), ("rho", rho)] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::invalid(format!("{name} = {v} must be finite and >= 0")));
        }
    }
    if r == 0.0 || upper == 0.0 {
        return Ok(ProjectionResult::zero(a));
    }
    // The sum constraint can only bind when the box allows sums above r.
    if a.len() as f64 * upper > r {
        let kn = project_knapsack(a, 0.0, upper, r)?;
        if kn.t >= rho * r {
            return Ok(kn);
        }
    }
    let t = if rho == 0.0 { 0.0 } else { inactive_sum_threshold(a, upper, rho) };
    Ok(ProjectionResult::from_thresholds(a, 0.0, t, upper))
}

fn clamped_sum(a: &[f64], t: f64, upper: f64) -> f64 {
    a.iter().map(|&v| (v - t).clamp(0.0, upper)).sum()
}

/// Root of `t = rho·Σ clamp(a_i − t, 0, upper)`. The right side is piecewise
/// linear with breakpoints `a_i − upper` and `a_i`; once the bracketing
/// segment is known, the index sets are fixed and
/// `t = (upper·|U| + Σ_M a_i) / (1/rho + |M|)`.
fn inactive_sum_threshold(a: &[f64], upper: f64, rho: f64) -> f64 {
    let mut bps: Vec<f64> = a.iter().flat_map(|&v| [v - upper, v]).collect();
    bps.sort_by(f64::total_cmp);
    let g = |t: f64| t - rho * clamped_sum(a, t, upper);
    // First breakpoint where g turns positive; g is strictly increasing.
    let hi_idx = bps.partition_point(|&t| g(t) <= 0.0);
    let lo = if hi_idx > 0 { bps[hi_idx - 1] } else { f64::NEG_INFINITY };
    let hi = bps.get(hi_idx).copied().unwrap_or(f64::INFINITY);
    let probe = match (lo.is_finite(), hi.is_finite()) {
        (true, true) => 0.5 * (lo + hi),
        (false, true) => hi - 1.0,
        (true, false) => lo + 1.0,
        (false, false) => 0.0,
    };
    let mut n_upper = 0.0;
    let mut n_mid = 0.0;
    let mut sum_mid = 0.0;
    for &v in a {
        let x = v - probe;
        if x >= upper {
            n_upper += 1.0;
        } else if x > 0.0 {
            n_mid += 1.0;
            sum_mid += v;
        }
    }
    let t = (upper * n_upper + sum_mid) / (1.0 / rho + n_mid);
    t.max(lo).min(hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{self, ConstraintSet};
    use proptest::prelude::*;

    fn assert_close(x: &[f64], y: &[f64], tol: f64) {
        for (a, b) in x.iter().zip(y) {
            assert!((a - b).abs() <= tol, "{x:?} vs {y:?}");
        }
    }

    #[test]
    fn saturated_pair() {
        let r = project_topk_box(&[10.0, 10.0, 0.0], 2, 1.0, 0.0).unwrap();
        assert_close(&r.x, &[0.5, 0.5, 0.0], 1e-15);
    }

    #[test]
    fn interior_point_unchanged() {
        let r = project_topk_box(&[0.1, 0.1], 2, 1.0, 0.0).unwrap();
        assert_close(&r.x, &[0.1, 0.1], 1e-15);
    }

    #[test]
    fn biased_ones() {
        let a = [1.0, 1.0, 1.0];
        let r = project_topk_box(&a, 2, 1.0, 1.0).unwrap();
        let o = oracle::project(&a, ConstraintSet::CappedSimplex { upper: 0.5, r: 1.0 }, 1.0).unwrap();
        assert_close(&r.x, &o, 1e-12);
        // Sum inactive: x_i = 1 − t with t = 3(1 − t) → t = 3/4.
        assert_close(&r.x, &[0.25, 0.25, 0.25], 1e-12);
    }

    #[test]
    fn no_bias_clips() {
        let r = project_capped_simplex(&[0.2, -0.4, 2.0], 0.5, 5.0, 0.0).unwrap();
        assert_close(&r.x, &[0.2, 0.0, 0.5], 0.0);
    }

    #[test]
    fn zero_radius() {
        let r = project_topk_box(&[1.0, 2.0], 1, 0.0, 1.0).unwrap();
        assert_eq!(r.x, vec![0.0, 0.0]);
    }

    proptest! {
        #[test]
        fn matches_oracle(
            a in prop::collection::vec(-2.0f64..2.0, 1..7),
            upper in 0.05f64..1.0,
            r in 0.1f64..2.5,
            rho in prop::sample::select(vec![0.0, 0.5, 1.0, 4.0]),
        ) {
            let f = project_capped_simplex(&a, upper, r, rho).unwrap();
            let o = oracle::project(&a, ConstraintSet::CappedSimplex { upper, r }, rho).unwrap();
            for (x, y) in f.x.iter().zip(&o) {
                prop_assert!((x - y).abs() <= 1e-9, "{:?} vs {:?}", f.x, o);
            }
        }
    }
}
