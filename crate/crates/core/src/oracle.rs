//! Brute-force reference solvers used to verify the fast routines.
//!
//! Nothing here shares code with [`crate::projections`] or
//! [`crate::losses`]: projections are solved by enumerating every active set
//! and solving the resulting equality-constrained quadratic in closed form,
//! and the top-k hinge loss is evaluated as a linear program over the vertices
//! of the top-k simplex. Both are exponential in the dimension and only meant
//! for small test instances.

use crate::error::{Error, Result};

/// Largest dimension accepted by [`project`] (3^10 active sets).
pub const MAX_ORACLE_DIM: usize = 10;

/// Constraint sets understood by the oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConstraintSet {
    /// `⟨1,x⟩ = rhs`, `lower ≤ x_i ≤ upper`.
    Knapsack { lower: f64, upper: f64, rhs: f64 },
    /// `0 ≤ x_i ≤ ⟨1,x⟩ / k`.
    TopKCone { k: usize },
    /// `⟨1,x⟩ ≤ r`, `0 ≤ x_i ≤ ⟨1,x⟩ / k`.
    TopKSimplex { k: usize, r: f64 },
    /// `⟨1,x⟩ ≤ r`, `0 ≤ x_i ≤ upper`.
    CappedSimplex { upper: f64, r: f64 },
}

#[derive(Clone, Copy, PartialEq)]
enum Slot {
    Lower,
    Free,
    Upper,
}

#[derive(Clone, Copy)]
struct Moments {
    n: f64,
    sum: f64,
    sum_sq: f64,
    min: f64,
    max: f64,
}

impl Default for Moments {
    fn default() -> Self {
        Moments {
            n: 0.0,
            sum: 0.0,
            sum_sq: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }
}

impl Moments {
    fn add(self, v: f64) -> Self {
        Moments {
            n: self.n + 1.0,
            sum: self.sum + v,
            sum_sq: self.sum_sq + v * v,
            min: self.min.min(v),
            max: self.max.max(v),
        }
    }

    /// `Σ (a_i − c)²` over the members.
    fn dist_sq_to(&self, c: f64) -> f64 {
        self.sum_sq - 2.0 * c * self.sum + self.n * c * c
    }
}

/// A candidate solution for one active set: `x_i` is `lower_val` on lower
/// slots, `a_i − tau` on free slots, `upper_val` on upper slots.
#[derive(Clone, Copy)]
struct Candidate {
    lower_val: f64,
    upper_val: f64,
    tau: f64,
    objective: f64,
}

struct Search<'a> {
    a: &'a [f64],
    set: ConstraintSet,
    rho: f64,
    tol: f64,
    slots: Vec<Slot>,
    scratch: Vec<f64>,
    best: Option<(f64, Vec<f64>)>,
    leaf_moments: [Moments; 3],
}

/// Exact minimizer of `‖a − x‖² + rho·⟨1,x⟩²` over `set`, by enumeration of
/// all `3^d` assignments of coordinates to {lower-active, free, upper-active}.
pub fn project(a: &[f64], set: ConstraintSet, rho: f64) -> Result<Vec<f64>> {
    let d = a.len();
    if d == 0 || d > MAX_ORACLE_DIM {
        return Err(Error::invalid(format!(
            "oracle dimension must be in 1..={MAX_ORACLE_DIM}, got {d}"
        )));
    }
    if !(rho >= 0.0) || a.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("oracle needs finite input and rho >= 0"));
    }
    match set {
        ConstraintSet::TopKCone { k } | ConstraintSet::TopKSimplex { k, .. } if k == 0 || k > d => {
            return Err(Error::invalid("oracle k out of range"));
        }
        _ => {}
    }
    let scale = a.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut search = Search {
        a,
        set,
        rho,
        tol: 1e-10 * scale,
        slots: vec![Slot::Lower; d],
        scratch: vec![0.0; d],
        best: None,
        leaf_moments: [Moments::default(); 3],
    };
    search.descend(0, Moments::default(), Moments::default(), Moments::default());
    search
        .best
        .map(|(_, x)| x)
        .ok_or_else(|| Error::invalid("oracle found no feasible point"))
}

impl Search<'_> {
    fn descend(&mut self, i: usize, lo: Moments, free: Moments, up: Moments) {
        if i == self.a.len() {
            self.leaf(lo, free, up);
            return;
        }
        let v = self.a[i];
        self.slots[i] = Slot::Lower;
        self.descend(i + 1, lo.add(v), free, up);
        self.slots[i] = Slot::Free;
        self.descend(i + 1, lo, free.add(v), up);
        self.slots[i] = Slot::Upper;
        self.descend(i + 1, lo, free, up.add(v));
    }

    fn leaf(&mut self, lo: Moments, free: Moments, up: Moments) {
        self.leaf_moments = [lo, free, up];
        let rho = self.rho;
        match self.set {
            ConstraintSet::Knapsack { lower, upper, rhs } => {
                if let Some(tau) = free_shift(free, lo.n * lower + up.n * upper, rhs, self.tol) {
                    let objective = free.n * tau * tau
                        + lo.dist_sq_to(lower)
                        + up.dist_sq_to(upper)
                        + rho * rhs * rhs;
                    self.offer(Candidate { lower_val: lower, upper_val: upper, tau, objective });
                }
            }
            ConstraintSet::TopKCone { k } => {
                self.topk_free_sum(lo, free, up, k);
            }
            ConstraintSet::TopKSimplex { k, r } => {
                self.topk_free_sum(lo, free, up, k);
                let kf = k as f64;
                let cap = r / kf;
                if let Some(tau) = free_shift(free, up.n * cap, r, self.tol) {
                    let objective = free.n * tau * tau
                        + lo.sum_sq
                        + up.dist_sq_to(cap)
                        + rho * r * r;
                    self.offer(Candidate { lower_val: 0.0, upper_val: cap, tau, objective });
                }
            }
            ConstraintSet::CappedSimplex { upper, r } => {
                // Sum constraint inactive: the multiplier of ⟨1,x⟩ = s equals rho·s.
                let s = (up.n * upper + free.sum) / (1.0 + rho * free.n);
                let tau = rho * s;
                let objective =
                    free.n * tau * tau + lo.sum_sq + up.dist_sq_to(upper) + rho * s * s;
                self.offer(Candidate { lower_val: 0.0, upper_val: upper, tau, objective });
                if let Some(tau) = free_shift(free, up.n * upper, r, self.tol) {
                    let objective =
                        free.n * tau * tau + lo.sum_sq + up.dist_sq_to(upper) + rho * r * r;
                    self.offer(Candidate { lower_val: 0.0, upper_val: upper, tau, objective });
                }
            }
        }
    }

    /// Top-k cone face with a free total `s`: minimize over `(x_F, s)` subject
    /// to `x_U = s/k` and `Σ_F x + |U|·s/k = s`. Stationarity gives the 2×2
    /// system `(|U|/k² + rho)·s − c·τ = Σ_U a / k`, `c·s + |F|·τ = Σ_F a`
    /// with `c = 1 − |U|/k`.
    fn topk_free_sum(&mut self, lo: Moments, free: Moments, up: Moments, k: usize) {
        let kf = k as f64;
        let c = 1.0 - up.n / kf;
        let alpha = up.n / (kf * kf) + self.rho;
        let rhs_s = up.sum / kf;
        let det = alpha * free.n + c * c;
        let (s, tau) = if det > 0.0 {
            (
                (rhs_s * free.n + c * free.sum) / det,
                (alpha * free.sum - c * rhs_s) / det,
            )
        } else if alpha > 0.0 {
            (rhs_s / alpha, 0.0)
        } else {
            return;
        };
        let cap = s / kf;
        let objective =
            free.n * tau * tau + lo.sum_sq + up.dist_sq_to(cap) + self.rho * s * s;
        self.offer(Candidate { lower_val: 0.0, upper_val: cap, tau, objective });
    }

    fn offer(&mut self, cand: Candidate) {
        if !cand.objective.is_finite() {
            return;
        }
        if let Some((best, _)) = &self.best {
            if cand.objective >= *best {
                return;
            }
        }
        if !self.roughly_feasible(&cand) {
            return;
        }
        for ((x, &ai), slot) in self.scratch.iter_mut().zip(self.a).zip(&self.slots) {
            *x = match slot {
                Slot::Lower => cand.lower_val,
                Slot::Free => ai - cand.tau,
                Slot::Upper => cand.upper_val,
            };
        }
        let x = &self.scratch;
        if feasible(x, self.set, self.tol) {
            // Re-evaluate on the materialized point to avoid trusting the
            // moment-based shortcut near cancellation.
            let s: f64 = x.iter().sum();
            let objective = self
                .a
                .iter()
                .zip(x)
                .map(|(a, x)| (a - x) * (a - x))
                .sum::<f64>()
                + self.rho * s * s;
            match &mut self.best {
                Some((b, bx)) if objective < *b => {
                    *b = objective;
                    bx.copy_from_slice(x);
                }
                None => self.best = Some((objective, x.clone())),
                _ => {}
            }
        }
    }
}

impl Search<'_> {
    /// Membership test from the leaf moments alone, with doubled slack so it
    /// never rejects a point the exact test would accept.
    fn roughly_feasible(&self, cand: &Candidate) -> bool {
        let [lo, free, up] = self.leaf_moments;
        let mut vmin = f64::INFINITY;
        let mut vmax = f64::NEG_INFINITY;
        for (m, v) in [(lo, cand.lower_val), (up, cand.upper_val)] {
            if m.n > 0.0 {
                vmin = vmin.min(v);
                vmax = vmax.max(v);
            }
        }
        if free.n > 0.0 {
            vmin = vmin.min(free.min - cand.tau);
            vmax = vmax.max(free.max - cand.tau);
        }
        let s = lo.n * cand.lower_val + up.n * cand.upper_val + free.sum - free.n * cand.tau;
        let tol = 2.0 * self.tol;
        match self.set {
            ConstraintSet::Knapsack { lower, upper, rhs } => {
                (s - rhs).abs() <= tol * self.a.len() as f64 && vmin >= lower - tol && vmax <= upper + tol
            }
            ConstraintSet::TopKCone { k } => vmin >= -tol && vmax <= s / k as f64 + tol,
            ConstraintSet::TopKSimplex { k, r } => {
                s <= r + tol && vmin >= -tol && vmax <= s / k as f64 + tol
            }
            ConstraintSet::CappedSimplex { upper, r } => {
                s <= r + tol && vmin >= -tol && vmax <= upper + tol
            }
        }
    }
}

/// Shift `τ` such that `Σ_F (a_i − τ) = target − fixed`; `None` if there are
/// no free coordinates and the fixed ones do not already hit the target.
fn free_shift(free: Moments, fixed: f64, target: f64, tol: f64) -> Option<f64> {
    if free.n > 0.0 {
        Some((free.sum + fixed - target) / free.n)
    } else if (fixed - target).abs() <= tol {
        Some(0.0)
    } else {
        None
    }
}

/// Membership test with absolute slack `tol`.
pub fn feasible(x: &[f64], set: ConstraintSet, tol: f64) -> bool {
    let s: f64 = x.iter().sum();
    match set {
        ConstraintSet::Knapsack { lower, upper, rhs } => {
            (s - rhs).abs() <= tol * x.len() as f64
                && x.iter().all(|&v| v >= lower - tol && v <= upper + tol)
        }
        ConstraintSet::TopKCone { k } => {
            let cap = s / k as f64;
            x.iter().all(|&v| v >= -tol && v <= cap + tol)
        }
        ConstraintSet::TopKSimplex { k, r } => {
            let cap = s / k as f64;
            s <= r + tol && x.iter().all(|&v| v >= -tol && v <= cap + tol)
        }
        ConstraintSet::CappedSimplex { upper, r } => {
            s <= r + tol && x.iter().all(|&v| v >= -tol && v <= upper + tol)
        }
    }
}

/// `max { ⟨h, v⟩ : v a vertex of Δ_k(1) }` where the vertices are `0` and the
/// uniform `1/k` vectors on every `k`-subset. Returns `NaN` for `k` out of range.
pub fn max_over_topk_simplex_vertices(h: &[f64], k: usize) -> f64 {
    if k == 0 || k > h.len() || h.len() > 20 {
        return f64::NAN;
    }
    let mut best = 0.0f64;
    let mut subset = Vec::with_capacity(k);
    for_each_subset(h.len(), k, 0, &mut subset, &mut |s| {
        let v: f64 = s.iter().map(|&j| h[j]).sum::<f64>() / k as f64;
        best = best.max(v);
    });
    best
}

/// The maximizing vertex of [`max_over_topk_simplex_vertices`].
pub fn argmax_topk_simplex_vertex(h: &[f64], k: usize) -> Vec<f64> {
    let mut best = 0.0f64;
    let mut arg = vec![0.0; h.len()];
    let mut subset = Vec::with_capacity(k);
    for_each_subset(h.len(), k, 0, &mut subset, &mut |s| {
        let v: f64 = s.iter().map(|&j| h[j]).sum::<f64>() / k as f64;
        if v > best {
            best = v;
            arg.iter_mut().for_each(|x| *x = 0.0);
            for &j in s {
                arg[j] = 1.0 / k as f64;
            }
        }
    });
    arg
}

/// Top-k hinge loss (thresholded average variant) evaluated as a linear
/// program over the vertices of the top-k simplex on the coordinates `j ≠ y`:
/// `max ⟨a + c, λ⟩`.
pub fn topk_hinge_via_vertices(a: &[f64], y: usize, k: usize) -> f64 {
    max_over_topk_simplex_vertices(&others_shifted(a, y), k)
}

/// Maximizing vertex of [`topk_hinge_via_vertices`], with `λ_y = 0`.
pub fn topk_hinge_argmax_vertex(a: &[f64], y: usize, k: usize) -> Vec<f64> {
    let mut v = argmax_topk_simplex_vertex(&others_shifted(a, y), k);
    v.insert(y, 0.0);
    v
}

fn others_shifted(a: &[f64], y: usize) -> Vec<f64> {
    a.iter()
        .enumerate()
        .filter(|&(j, _)| j != y)
        .map(|(_, &v)| v + 1.0)
        .collect()
}

fn for_each_subset(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if cur.len() == k {
        f(cur);
        return;
    }
    let need = k - cur.len();
    for j in start..=(n - need) {
        cur.push(j);
        for_each_subset(n, k, j + 1, cur, f);
        cur.pop();
    }
}
