//! Timing of the knapsack solver against the top-k simplex projection on
//! Gaussian inputs.

use std::fmt;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::projections::{project_knapsack, project_topk_simplex, TopKSimplexSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenchMethod {
    /// `{ ⟨1,x⟩ = 1, 0 ≤ x ≤ 1 }`, i.e. the standard simplex.
    Knapsack,
    /// `Δ_k(1)` with `rho = 0`.
    TopKSimplex,
}

impl BenchMethod {
    pub fn name(self) -> &'static str {
        match self {
            BenchMethod::Knapsack => "knapsack",
            BenchMethod::TopKSimplex => "topk_simplex",
        }
    }
}

impl fmt::Display for BenchMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Total wall time over all samples for one `(dim, k, method)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub dim: usize,
    pub k: usize,
    pub method: BenchMethod,
    pub seconds: f64,
}

/// Draws `samples` vectors from N(0,1) per dimension and times both methods
/// for every `k` on the same vectors. Rows come out grouped by dim, then k,
/// knapsack before top-k simplex. Single-threaded.
pub fn bench_projections(dims: &[usize], ks: &[usize], samples: usize, seed: u64) -> Result<Vec<BenchRow>> {
    if samples == 0 {
        return Err(Error::invalid("samples must be at least 1"));
    }
    if dims.is_empty() || ks.is_empty() {
        return Err(Error::invalid("need at least one dim and one k"));
    }
    for &d in dims {
        if let Some(&k) = ks.iter().find(|&&k| k == 0 || k > d) {
            return Err(Error::invalid(format!("k = {k} must be in 1..={d}")));
        }
    }
    let mut rows = Vec::with_capacity(dims.len() * ks.len() * 2);
    for &d in dims {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut totals = vec![[0.0f64; 2]; ks.len()];
        let mut a = vec![0.0; d];
        for _ in 0..samples {
            a.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
            for (slot, &k) in totals.iter_mut().zip(ks) {
                let start = Instant::now();
                std::hint::black_box(project_knapsack(&a, 0.0, 1.0, 1.0)?);
                slot[0] += start.elapsed().as_secs_f64();
                let spec = TopKSimplexSpec::new(k, 1.0, 0.0)?;
                let start = Instant::now();
                std::hint::black_box(project_topk_simplex(&a, spec)?);
                slot[1] += start.elapsed().as_secs_f64();
            }
        }
        for (t, &k) in totals.iter().zip(ks) {
            rows.push(BenchRow { dim: d, k, method: BenchMethod::Knapsack, seconds: t[0] });
            rows.push(BenchRow { dim: d, k, method: BenchMethod::TopKSimplex, seconds: t[1] });
        }
    }
    Ok(rows)
}
