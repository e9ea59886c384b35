//! Biased projection onto the top-k cone
//! `{ x : 0 ≤ x_i ≤ ⟨1,x⟩ / k }`, objective `‖a − x‖² + rho·⟨1,x⟩²`.
//!
//! The optimum has the form `x = min(max(0, a − t), u)` and falls in one of
//! three cases, checked in order: zero, constant on the top `k` coordinates,
//! or a general partition of the sorted coordinates into upper (U),
//! middle (M) and lower (L) blocks whose thresholds solve a 2×2 linear system.

use super::{validate_input, ProjectionResult, PARTITION_SLACK};
use crate::error::{Error, Result};
use crate::numkit::{sorted_desc_with_index, sum_top_k};

pub fn project_topk_cone(a: &[f64], k: usize, rho: f64) -> Result<ProjectionResult> {
    validate_input(a)?;
    validate_k_rho(a.len(), k, rho)?;
    if sum_top_k(a, k)? <= 0.0 {
        return Ok(ProjectionResult::zero(a));
    }
    let (_, sorted) = sorted_desc_with_index(a);
    let top = &sorted[..(k + 1).min(sorted.len())];
    if let Some(res) = constant_case(a, top, k, rho) {
        return Ok(res);
    }
    Ok(general_case(a, &sorted, k, rho).unwrap_or_else(|| {
        log::debug!("top-k cone projection found no valid partition; returning zero");
        let mut res = ProjectionResult::zero(a);
        res.fallback = true;
        res
    }))
}

pub(super) fn validate_k_rho(d: usize, k: usize, rho: f64) -> Result<()> {
    if k == 0 || k > d {
        return Err(Error::invalid(format!("k = {k} must be in 1..={d}")));
    }
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::invalid(format!("rho = {rho} must be finite and >= 0")));
    }
    Ok(())
}

pub(super) fn slack(a: &[f64]) -> f64 {
    PARTITION_SLACK * a.iter().fold(1.0f64, |m, v| m.max(v.abs()))
}

/// U = top `k` coordinates, M = ∅: `u = Σ_{i≤k} a_[i] / (k + rho·k²)`, valid
/// iff some `t` satisfies `max_L a ≤ t ≤ min_U a − u`. `top` holds the
/// largest `min(k + 1, d)` entries in descending order.
pub(super) fn constant_case(a: &[f64], top: &[f64], k: usize, rho: f64) -> Option<ProjectionResult> {
    let kf = k as f64;
    let u = top[..k].iter().sum::<f64>() / (kf + rho * kf * kf);
    if u <= 0.0 {
        return None;
    }
    let hi = top[k - 1] - u;
    let lo = top.get(k).copied().unwrap_or(f64::NEG_INFINITY);
    if lo > hi + slack(a) {
        return None;
    }
    // Prefer t = max(0, max_L a), pulled into the window when that is not valid.
    let t = lo.max(0.0).min(hi);
    Some(ProjectionResult::from_thresholds(a, 0.0, t, u))
}

/// Exhaustive search over sorted partitions with `|U| ∈ [0, k)` ascending,
/// then `|M|` ascending subject to `k ≤ |U| + |M| ≤ d`.
fn general_case(a: &[f64], sorted: &[f64], k: usize, rho: f64) -> Option<ProjectionResult> {
    let d = sorted.len();
    let kf = k as f64;
    let eps = slack(a);
    let mut prefix = Vec::with_capacity(d + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &v in sorted {
        acc += v;
        prefix.push(acc);
    }
    for n_upper in 0..k {
        let nu = n_upper as f64;
        let sum_upper = prefix[n_upper];
        let min_upper = if n_upper > 0 { sorted[n_upper - 1] } else { f64::INFINITY };
        for n_mid in (k - n_upper)..=(d - n_upper) {
            let nm = n_mid as f64;
            let end = n_upper + n_mid;
            let sum_mid = prefix[end] - sum_upper;
            let denom = (kf - nu) * (kf - nu) + (nu + rho * kf * kf) * nm;
            let u = (nm * sum_upper + (kf - nu) * sum_mid) / denom;
            let t_prime = (nu * (1.0 + rho * kf) * sum_mid
                - (kf - nu + rho * kf * nm) * sum_upper)
                / denom;
            let t = t_prime + rho * u * kf;
            let max_mid = sorted[n_upper];
            let min_mid = sorted[end - 1];
            let max_lower = if end < d { sorted[end] } else { f64::NEG_INFINITY };
            if u >= -eps
                && max_lower <= t + eps
                && t <= min_mid + eps
                && max_mid <= t + u + eps
                && t + u <= min_upper + eps
            {
                return Some(ProjectionResult::from_thresholds(a, 0.0, t, u.max(0.0)));
            }
        }
    }
    None
}
