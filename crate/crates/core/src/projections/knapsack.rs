//! Continuous quadratic knapsack with unit weights:
//! `min ‖a − x‖²` s.t. `⟨1,x⟩ = rhs`, `lower ≤ x_i ≤ upper`.
//!
//! The solution is `x = clamp(a − t, lower, upper)` for a scalar multiplier
//! `t`. [`project_knapsack`] finds `t` by variable fixing (no sorting);
//! [`project_knapsack_sorted`] scans sorted breakpoints and serves as a
//! cross-check.

use super::{validate_input, ProjectionResult};
use crate::error::{Error, Result};

fn validate(a: &[f64], lower: f64, upper: f64, rhs: f64) -> Result<()> {
    validate_input(a)?;
    if !(lower.is_finite() && upper.is_finite() && rhs.is_finite()) || lower > upper {
        return Err(Error::invalid(format!(
            "knapsack bounds must be finite with lower <= upper, got [{lower}, {upper}]"
        )));
    }
    let d = a.len() as f64;
    let (min_sum, max_sum) = (d * lower, d * upper);
    let slack = 1e-12 * (1.0 + min_sum.abs().max(max_sum.abs()));
    if rhs < min_sum - slack || rhs > max_sum + slack {
        return Err(Error::invalid(format!(
            "knapsack right-hand side {rhs} outside the feasible range [{min_sum}, {max_sum}]"
        )));
    }
    Ok(())
}

/// Variable-fixing solver.
///
/// When the multiplier is not unique (no coordinate strictly between the
/// bounds), the largest valid `t` is returned.
pub fn project_knapsack(a: &[f64], lower: f64, upper: f64, rhs: f64) -> Result<ProjectionResult> {
    validate(a, lower, upper, rhs)?;
    let t = variable_fixing(a, lower, upper, rhs);
    Ok(finish(a, lower, upper, rhs, t))
}

/// Sort-based reference solver. Same contract as [`project_knapsack`].
pub fn project_knapsack_sorted(
    a: &[f64],
    lower: f64,
    upper: f64,
    rhs: f64,
) -> Result<ProjectionResult> {
    validate(a, lower, upper, rhs)?;
    let t = breakpoint_scan(a, lower, upper, rhs);
    Ok(finish(a, lower, upper, rhs, t))
}

fn variable_fixing(a: &[f64], lower: f64, upper: f64, rhs: f64) -> f64 {
    let mut free: Vec<f64> = a.to_vec();
    let mut remaining = rhs;
    let mut t = 0.0;
    while !free.is_empty() {
        let sum: f64 = free.iter().sum();
        t = (sum - remaining) / free.len() as f64;
        // Mass pushed back by clamping at each bound.
        let mut below = 0.0;
        let mut above = 0.0;
        for &v in &free {
            below += (lower - (v - t)).max(0.0);
            above += (v - t - upper).max(0.0);
        }
        if below == above {
            break;
        }
        let before = free.len();
        if below > above {
            // t has to grow: everything already under the lower bound stays there.
            compact(&mut free, |v| v - t > lower);
            remaining -= lower * (before - free.len()) as f64;
        } else {
            compact(&mut free, |v| v - t < upper);
            remaining -= upper * (before - free.len()) as f64;
        }
        if free.len() == before {
            break;
        }
    }
    t
}

/// Branch-free `retain`; order is preserved.
fn compact(v: &mut Vec<f64>, keep: impl Fn(f64) -> bool) {
    let mut w = 0;
    for r in 0..v.len() {
        let x = v[r];
        v[w] = x;
        w += keep(x) as usize;
    }
    v.truncate(w);
}

/// Finds `t` with `Σ clamp(a_i − t, lower, upper) = rhs` by walking the sorted
/// breakpoints `a_i − upper` and `a_i − lower` in ascending order.
fn breakpoint_scan(a: &[f64], lower: f64, upper: f64, rhs: f64) -> f64 {
    let d = a.len();
    let mut points: Vec<(f64, bool)> = Vec::with_capacity(2 * d);
    for &v in a {
        // (breakpoint, leaves-upper-bound?)
        points.push((v - upper, true));
        points.push((v - lower, false));
    }
    points.sort_by(|p, q| p.0.total_cmp(&q.0).then(q.1.cmp(&p.1)));

    // Left of every breakpoint all coordinates sit at `upper`.
    let mut n_upper = d as f64;
    let mut n_free = 0.0;
    let mut sum_free = 0.0;
    let mut n_lower = 0.0;
    let mut prev = f64::NEG_INFINITY;
    for &(bp, leaves_upper) in &points {
        // On (prev, bp) the clamped sum is linear in t.
        let at_bp = n_upper * upper + n_lower * lower + sum_free - n_free * bp;
        if at_bp <= rhs {
            if n_free > 0.0 {
                let t = (n_upper * upper + n_lower * lower + sum_free - rhs) / n_free;
                return t.max(prev).min(bp);
            }
            // Flat segment: the sum already equals rhs on all of it.
            return bp;
        }
        let v = bp + if leaves_upper { upper } else { lower };
        if leaves_upper {
            n_upper -= 1.0;
            n_free += 1.0;
            sum_free += v;
        } else {
            n_free -= 1.0;
            sum_free -= v;
            n_lower += 1.0;
        }
        prev = bp;
    }
    // All coordinates at `lower` (rhs = d·lower): any t ≥ max(a) − lower works.
    prev
}

/// Normalizes `t` (largest valid multiplier when it is not unique) and builds
/// the result.
fn finish(a: &[f64], lower: f64, upper: f64, rhs: f64, t: f64) -> ProjectionResult {
    let d = a.len() as f64;
    let t = if upper == lower || rhs >= d * upper {
        // Everything at the upper bound: largest t keeping a_i − t ≥ upper.
        a.iter().fold(f64::INFINITY, |m, &v| m.min(v - upper))
    } else if rhs <= d * lower {
        a.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v - lower))
    } else if a.iter().all(|&v| {
        let x = v - t;
        x <= lower || x >= upper
    }) {
        // Degenerate interval of multipliers: its right end is the smallest
        // a_i − upper among coordinates at the upper bound.
        let right = a
            .iter()
            .filter(|&&v| v - t >= upper)
            .fold(f64::INFINITY, |m, &v| m.min(v - upper));
        if right.is_finite() {
            right.max(t)
        } else {
            t
        }
    } else {
        t
    };
    ProjectionResult::from_thresholds(a, lower, t, upper)
}
