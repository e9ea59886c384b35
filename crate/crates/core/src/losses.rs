//! Multiclass hinge losses on the margin vector `a_j = s_j − s_y` and their
//! convex conjugates.
//!
//! With `h = a + c`, `c = 1 − e_y`:
//!
//! * α (thresholded average): `φ_k(a) = max(0, (1/k) Σ_{j≤k} h_[j])`, the
//!   top k taken over `j ≠ y`; conjugate `−⟨c,b⟩` on the top-k simplex `Δ_k`.
//! * β (average of thresholded): `φ̃_k(a) = (1/k) Σ_{j≤k} max(0, h_[j])`,
//!   conjugate `−⟨c,b⟩` on `{ ⟨1,b⟩ ≤ 1, 0 ≤ b_i ≤ 1/k }`.
//!
//! Both conjugates are restricted to `b_y = 0`, which is all the dual needs.
//!
//! For `k = 1` both reduce to the Crammer–Singer loss.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numkit::{kth_largest, sorted_desc_with_index, sum_top_k};
use crate::projections::{in_capped_simplex, in_topk_simplex};

/// Slack on conjugate-domain membership.
pub const DOMAIN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossVariant {
    Alpha,
    Beta,
}

impl LossVariant {
    pub fn tag(self) -> u8 {
        match self {
            LossVariant::Alpha => 0,
            LossVariant::Beta => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(LossVariant::Alpha),
            1 => Some(LossVariant::Beta),
            _ => None,
        }
    }
}

impl fmt::Display for LossVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossVariant::Alpha => "alpha",
            LossVariant::Beta => "beta",
        })
    }
}

impl FromStr for LossVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "alpha" => Ok(LossVariant::Alpha),
            "beta" => Ok(LossVariant::Beta),
            other => Err(Error::invalid(format!(
                "unknown loss variant {other:?}, expected alpha or beta"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LossSpec {
    pub variant: LossVariant,
    pub k: usize,
}

impl LossSpec {
    pub fn new(variant: LossVariant, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        Ok(LossSpec { variant, k })
    }

    /// Training needs `1 ≤ k < m`.
    pub fn check_classes(&self, m: usize) -> Result<()> {
        if self.k == 0 || self.k >= m {
            return Err(Error::invalid(format!(
                "k = {} must satisfy 1 <= k < m = {m}",
                self.k
            )));
        }
        Ok(())
    }
}

/// Margins relative to the ground-truth score: `a_j = s_j − s_y`, `a_y = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginVector {
    a: Vec<f64>,
    y: usize,
}

impl MarginVector {
    pub fn new(a: Vec<f64>, y: usize) -> Result<Self> {
        if y >= a.len() {
            return Err(Error::invalid(format!(
                "label index {y} out of range for {} classes",
                a.len()
            )));
        }
        if a[y] != 0.0 {
            return Err(Error::invalid("margin of the ground-truth class must be 0"));
        }
        crate::numkit::ensure_finite(&a, "margin vector")?;
        Ok(MarginVector { a, y })
    }

    pub fn from_scores(scores: &[f64], y: usize) -> Result<Self> {
        let sy = *scores.get(y).ok_or_else(|| {
            Error::invalid(format!(
                "label index {y} out of range for {} classes",
                scores.len()
            ))
        })?;
        let a = scores
            .iter()
            .enumerate()
            .map(|(j, &s)| if j == y { 0.0 } else { s - sy })
            .collect();
        Self::new(a, y)
    }

    pub fn margins(&self) -> &[f64] {
        &self.a
    }

    pub fn label(&self) -> usize {
        self.y
    }

    pub fn num_classes(&self) -> usize {
        self.a.len()
    }

    /// `a + c` with `c = 1 − e_y`.
    pub fn shifted(&self) -> Vec<f64> {
        self.a
            .iter()
            .enumerate()
            .map(|(j, &v)| if j == self.y { v } else { v + 1.0 })
            .collect()
    }

    /// `a + c` with the ground-truth coordinate dropped.
    pub fn shifted_others(&self) -> Vec<f64> {
        self.a
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != self.y)
            .map(|(_, &v)| v + 1.0)
            .collect()
    }
}

fn check_loss_k(m: usize, k: usize) -> Result<()> {
    if k == 0 || k >= m {
        return Err(Error::invalid(format!("k = {k} must satisfy 1 <= k < m = {m}")));
    }
    Ok(())
}

pub fn loss_primal(mv: &MarginVector, spec: &LossSpec) -> Result<f64> {
    check_loss_k(mv.num_classes(), spec.k)?;
    let h = mv.shifted_others();
    let k = spec.k;
    Ok(match spec.variant {
        LossVariant::Alpha => (sum_top_k(&h, k)? / k as f64).max(0.0),
        LossVariant::Beta => {
            let (_, sorted) = sorted_desc_with_index(&h);
            sorted[..k].iter().map(|v| v.max(0.0)).sum::<f64>() / k as f64
        }
    })
}

/// `−⟨c, b⟩` on the conjugate domain with `b_y = 0`, `+∞` elsewhere.
pub fn loss_conjugate(b: &[f64], y: usize, spec: &LossSpec) -> Result<f64> {
    if y >= b.len() {
        return Err(Error::invalid(format!(
            "label index {y} out of range for {} classes",
            b.len()
        )));
    }
    if spec.k == 0 || spec.k > b.len() {
        return Err(Error::invalid(format!("k = {} out of range", spec.k)));
    }
    let inside = b[y].abs() <= DOMAIN_TOL
        && match spec.variant {
            LossVariant::Alpha => in_topk_simplex(b, spec.k, 1.0, DOMAIN_TOL),
            LossVariant::Beta => in_capped_simplex(b, 1.0 / spec.k as f64, 1.0, DOMAIN_TOL),
        };
    if !inside {
        return Ok(f64::INFINITY);
    }
    let inner: f64 = b
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != y)
        .map(|(_, v)| v)
        .sum();
    Ok(-inner)
}

/// `ψ_k(a) = max(0, (a + c)_[k])`: the top-k error with margin 1. Nonconvex,
/// evaluation only.
pub fn topk_margin_loss(mv: &MarginVector, k: usize) -> Result<f64> {
    Ok(kth_largest(&mv.shifted(), k)?.max(0.0))
}

/// Top-k zero-one error: true iff the k-th largest score strictly exceeds the
/// ground-truth score. `k = m` never errs.
pub fn topk_error(scores: &[f64], y: usize, k: usize) -> Result<bool> {
    let sy = *scores
        .get(y)
        .ok_or_else(|| Error::invalid(format!("label index {y} out of range")))?;
    Ok(kth_largest(scores, k)? > sy)
}

/// `max_j { 1[j ≠ y] + s_j − s_y }`, written out directly.
pub fn crammer_singer_loss(scores: &[f64], y: usize) -> f64 {
    scores
        .iter()
        .enumerate()
        .map(|(j, &s)| if j == y { 0.0 } else { 1.0 + s - scores[y] })
        .fold(f64::NEG_INFINITY, f64::max)
}
