//! Prox-SDCA training for the top-k multiclass SVM.
//!
//! The dual variables are stored as `A` (`m × n`, one column `a_i` per
//! example) and the primal weights as `W = X·Aᵀ` (`d × m`), kept in sync by
//! rank-1 updates. Each block update is an exact maximization that reduces to
//! a biased projection with `rho = 1` onto the conjugate domain scaled by
//! `1/(λn)`.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::io::Dataset;
use crate::losses::{loss_conjugate, loss_primal, LossSpec, LossVariant, MarginVector};
use crate::numkit::{rank1_update, DenseMatrix};
use crate::projections::{
    in_capped_simplex, in_topk_simplex, project_capped_simplex, project_topk_simplex,
    TopKSimplexSpec,
};

/// Tolerance for `⟨1, a_i⟩ = 0` and conjugate-domain membership.
pub const DUAL_FEASIBILITY_TOL: f64 = 1e-8;

pub const DEFAULT_EPSILON: f64 = 1e-3;
pub const DEFAULT_MAX_EPOCHS: usize = 300;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub loss: LossSpec,
    pub lambda: f64,
    /// Stop once the relative duality gap is at most this.
    pub epsilon: f64,
    pub max_epochs: usize,
    pub seed: u64,
}

impl SolverConfig {
    pub fn new(loss: LossSpec, lambda: f64) -> Self {
        SolverConfig {
            loss,
            lambda,
            epsilon: DEFAULT_EPSILON,
            max_epochs: DEFAULT_MAX_EPOCHS,
            seed: DEFAULT_SEED,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_max_epochs(mut self, max_epochs: usize) -> Self {
        self.max_epochs = max_epochs;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Checks the config against a problem with `m` classes.
    pub fn validate(&self, m: usize) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda = {} must be positive", self.lambda)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid(format!("epsilon = {} must be positive", self.epsilon)));
        }
        if self.max_epochs == 0 {
            return Err(Error::invalid("max_epochs must be at least 1"));
        }
        self.loss.check_classes(m)
    }
}

/// A trained linear model: one weight column per class.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    w: DenseMatrix,
    loss: LossSpec,
    lambda: f64,
    classes: Vec<f64>,
}

impl Model {
    /// `w` is `d × m`; `classes[c]` is the original label of column `c`.
    pub fn new(w: DenseMatrix, loss: LossSpec, lambda: f64, classes: Vec<f64>) -> Result<Self> {
        if w.cols() != classes.len() {
            return Err(Error::invalid(format!(
                "{} weight columns for {} classes",
                w.cols(),
                classes.len()
            )));
        }
        if !lambda.is_finite() {
            return Err(Error::invalid("lambda must be finite"));
        }
        crate::numkit::ensure_finite(&classes, "class labels")?;
        Ok(Model { w, loss, lambda, classes })
    }

    pub fn weights(&self) -> &DenseMatrix {
        &self.w
    }

    pub fn loss(&self) -> LossSpec {
        self.loss
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn classes(&self) -> &[f64] {
        &self.classes
    }

    pub fn feature_dim(&self) -> usize {
        self.w.rows()
    }

    pub fn num_classes(&self) -> usize {
        self.w.cols()
    }
}

/// Per-epoch diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub primal: f64,
    pub dual: f64,
    pub relative_gap: f64,
    /// `‖W_incremental − X·Aᵀ‖_F` before the refresh.
    pub drift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs_run: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub relative_gap: f64,
    pub wall_time: Duration,
    pub converged: bool,
    /// Example visits skipped because `‖x_i‖ = 0`.
    pub skipped: usize,
    /// Block updates where the cone projection found no valid partition.
    pub fallbacks: usize,
    pub history: Vec<EpochRecord>,
}

/// `(P − D) / max(1, |P|)`.
pub fn relative_gap(primal: f64, dual: f64) -> f64 {
    (primal - dual) / primal.abs().max(1.0)
}

/// Dual variables together with the primal weights they induce.
#[derive(Debug, Clone, PartialEq)]
pub struct DualState {
    a: DenseMatrix,
    w: DenseMatrix,
    sq_norms: Vec<f64>,
}

impl DualState {
    /// `A = 0`, `W = 0`.
    pub fn new(data: &Dataset) -> Self {
        let (d, n, m) = (data.feature_dim(), data.num_examples(), data.num_classes());
        let sq_norms = (0..n)
            .map(|i| data.example(i).iter().map(|v| v * v).sum())
            .collect();
        DualState {
            a: DenseMatrix::zeros(m, n),
            w: DenseMatrix::zeros(d, m),
            sq_norms,
        }
    }

    /// Starts from a given `A` (`m × n`), computing `W = X·Aᵀ`.
    pub fn from_dual(data: &Dataset, a: DenseMatrix) -> Result<Self> {
        if a.rows() != data.num_classes() || a.cols() != data.num_examples() {
            return Err(Error::invalid(format!(
                "dual matrix is {}x{}, expected {}x{}",
                a.rows(),
                a.cols(),
                data.num_classes(),
                data.num_examples()
            )));
        }
        let mut state = DualState::new(data);
        state.w = primal_from_dual(data, &a);
        state.a = a;
        Ok(state)
    }

    pub fn dual(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn weights(&self) -> &DenseMatrix {
        &self.w
    }

    pub fn sq_norms(&self) -> &[f64] {
        &self.sq_norms
    }

    /// Replaces `W` by a fresh `X·Aᵀ` and returns the Frobenius distance
    /// between the old and new values.
    pub fn refresh_weights(&mut self, data: &Dataset) -> f64 {
        let fresh = primal_from_dual(data, &self.a);
        let drift = fresh
            .as_slice()
            .iter()
            .zip(self.w.as_slice())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        self.w = fresh;
        drift
    }
}

/// `X·Aᵀ`: column `c` is `Σ_i A[c,i]·x_i`.
pub fn primal_from_dual(data: &Dataset, a: &DenseMatrix) -> DenseMatrix {
    let mut w = DenseMatrix::zeros(data.feature_dim(), a.rows());
    for i in 0..data.num_examples() {
        let x = data.example(i);
        for (c, &aci) in a.col(i).iter().enumerate() {
            if aci == 0.0 {
                continue;
            }
            for (wj, &xj) in w.col_mut(c).iter_mut().zip(x) {
                *wj += aci * xj;
            }
        }
    }
    w
}

fn check_shapes(w: &DenseMatrix, data: &Dataset) -> Result<()> {
    if w.rows() != data.feature_dim() || w.cols() != data.num_classes() {
        return Err(Error::invalid(format!(
            "weights are {}x{}, dataset needs {}x{}",
            w.rows(),
            w.cols(),
            data.feature_dim(),
            data.num_classes()
        )));
    }
    Ok(())
}

/// `P(W) = (1/n) Σ φ(Wᵀx_i − ⟨w_{y_i}, x_i⟩·1) + (λ/2)‖W‖_F²`.
pub fn primal_objective(w: &DenseMatrix, data: &Dataset, config: &SolverConfig) -> Result<f64> {
    check_shapes(w, data)?;
    let n = data.num_examples();
    let mut total = 0.0;
    for i in 0..n {
        let scores = w.tr_mul_vec(data.example(i));
        let mv = MarginVector::from_scores(&scores, data.labels()[i])?;
        total += loss_primal(&mv, &config.loss)?;
    }
    Ok(total / n as f64 + 0.5 * config.lambda * w.frobenius_sq())
}

/// Checks that column `a_i` lies in the dual domain: `⟨1, a_i⟩ = 0` and
/// `−λn(a_i − a_{y,i}e_y)` in the conjugate domain, up to
/// [`DUAL_FEASIBILITY_TOL`].
pub fn dual_column_feasible(a_i: &[f64], y: usize, lambda: f64, n: usize, loss: &LossSpec) -> bool {
    let sum: f64 = a_i.iter().sum();
    let scale = a_i.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    if sum.abs() > DUAL_FEASIBILITY_TOL * scale {
        return false;
    }
    let b = conjugate_argument(a_i, y, lambda, n);
    match loss.variant {
        LossVariant::Alpha => in_topk_simplex(&b, loss.k, 1.0, DUAL_FEASIBILITY_TOL),
        LossVariant::Beta => {
            in_capped_simplex(&b, 1.0 / loss.k as f64, 1.0, DUAL_FEASIBILITY_TOL)
        }
    }
}

fn conjugate_argument(a_i: &[f64], y: usize, lambda: f64, n: usize) -> Vec<f64> {
    let scale = -lambda * n as f64;
    a_i.iter()
        .enumerate()
        .map(|(j, &v)| if j == y { 0.0 } else { scale * v })
        .collect()
}

/// `D(A) = λ Σ_i a_{y_i,i} − (λ/2)‖W‖_F²`, with `W` taken from the state.
/// Fails if any column is outside the dual domain.
pub fn dual_objective(state: &DualState, data: &Dataset, config: &SolverConfig) -> Result<f64> {
    check_shapes(&state.w, data)?;
    let n = data.num_examples();
    let mut linear = 0.0;
    for i in 0..n {
        let y = data.labels()[i];
        let a_i = state.a.col(i);
        if !dual_column_feasible(a_i, y, config.lambda, n, &config.loss) {
            return Err(Error::invalid(format!(
                "dual column {i} is outside the feasible domain"
            )));
        }
        linear += a_i[y];
    }
    Ok(config.lambda * (linear - 0.5 * state.w.frobenius_sq()))
}

/// The dual written with the conjugates:
/// `−(1/n) Σ φ*(−λn(a_i − a_{y_i,i}e_{y_i})) − (λ/2) tr(A K Aᵀ)` with
/// `K = XᵀX` formed explicitly. Returns `−∞` outside the domain. Quadratic in
/// `n`; meant for checking [`dual_objective`].
pub fn dual_objective_via_conjugates(a: &DenseMatrix, data: &Dataset, config: &SolverConfig) -> Result<f64> {
    let n = data.num_examples();
    let x = data.features();
    let kernel = x.tr_mul(x)?;
    let mut conj = 0.0;
    for i in 0..n {
        let y = data.labels()[i];
        if a.col(i).iter().sum::<f64>().abs() > DUAL_FEASIBILITY_TOL {
            return Ok(f64::NEG_INFINITY);
        }
        let b = conjugate_argument(a.col(i), y, config.lambda, n);
        conj += loss_conjugate(&b, y, &config.loss)?;
    }
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            let kij = kernel.get(i, j);
            if kij != 0.0 {
                quad += kij * crate::numkit::dot(a.col(i), a.col(j));
            }
        }
    }
    Ok(-conj / n as f64 - 0.5 * config.lambda * quad)
}

/// New block `a_i` plus whether the projection had to fall back.
fn solve_block(
    loss: &LossSpec,
    lambda: f64,
    n: usize,
    xnorm: f64,
    y: usize,
    scores: &[f64],
    a_i: &[f64],
) -> Result<Option<(Vec<f64>, bool)>> {
    if !(xnorm > 0.0) {
        return Ok(None);
    }
    let m = scores.len();
    if a_i.len() != m || y >= m {
        return Err(Error::invalid(format!(
            "block of length {} with {} scores and label {y}",
            a_i.len(),
            m
        )));
    }
    let q: Vec<f64> = scores.iter().zip(a_i).map(|(s, a)| s - xnorm * a).collect();
    let shift = 1.0 - q[y];
    let b: Vec<f64> = q
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != y)
        .map(|(_, &qj)| (qj + shift) / xnorm)
        .collect();
    let r = 1.0 / (lambda * n as f64);
    let proj = match loss.variant {
        LossVariant::Alpha => project_topk_simplex(&b, TopKSimplexSpec::new(loss.k, r, 1.0)?)?,
        LossVariant::Beta => project_capped_simplex(&b, r / loss.k as f64, r, 1.0)?,
    };
    let mut out = Vec::with_capacity(m);
    let mut xs = proj.x.iter();
    let mut total = 0.0;
    for j in 0..m {
        if j == y {
            out.push(0.0);
        } else {
            let v = *xs.next().unwrap();
            total += v;
            out.push(-v);
        }
    }
    out[y] = total;
    Ok(Some((out, proj.fallback)))
}

/// Exact maximization of the dual over block `i`.
///
/// `scores` is `Wᵀx_i` for the current `W`, `xnorm = ⟨x_i, x_i⟩`. Returns
/// `None` when `xnorm ≤ 0`: such examples never affect `W` and are skipped.
pub fn sdca_update(
    loss: &LossSpec,
    lambda: f64,
    n: usize,
    xnorm: f64,
    y: usize,
    scores: &[f64],
    a_i: &[f64],
) -> Result<Option<Vec<f64>>> {
    Ok(solve_block(loss, lambda, n, xnorm, y, scores, a_i)?.map(|(a, _)| a))
}

/// Stepwise driver around a [`DualState`]; [`train`] is the usual entry point.
pub struct Solver<'a> {
    data: &'a Dataset,
    config: SolverConfig,
    state: DualState,
    rng: ChaCha8Rng,
    order: Vec<usize>,
    skipped: usize,
    fallbacks: usize,
}

impl<'a> Solver<'a> {
    pub fn new(data: &'a Dataset, config: SolverConfig) -> Result<Self> {
        config.validate(data.num_classes())?;
        if data.num_examples() == 0 {
            return Err(Error::invalid("dataset has no examples"));
        }
        if data.feature_dim() == 0 {
            return Err(Error::invalid("dataset has no features"));
        }
        Ok(Solver {
            data,
            config,
            state: DualState::new(data),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            order: (0..data.num_examples()).collect(),
            skipped: 0,
            fallbacks: 0,
        })
    }

    pub fn state(&self) -> &DualState {
        &self.state
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    /// Updates block `i` and `W`. Returns false if the example was skipped.
    pub fn update(&mut self, i: usize) -> Result<bool> {
        let x = self.data.example(i);
        let y = self.data.labels()[i];
        let xnorm = self.state.sq_norms[i];
        let scores = self.state.w.tr_mul_vec(x);
        let a_old = self.state.a.col(i);
        let Some((a_new, fallback)) = solve_block(
            &self.config.loss,
            self.config.lambda,
            self.data.num_examples(),
            xnorm,
            y,
            &scores,
            a_old,
        )?
        else {
            self.skipped += 1;
            return Ok(false);
        };
        if fallback {
            self.fallbacks += 1;
        }
        let delta: Vec<f64> = a_new.iter().zip(a_old).map(|(n, o)| n - o).collect();
        rank1_update(&mut self.state.w, x, &delta)?;
        self.state.a.col_mut(i).copy_from_slice(&a_new);
        Ok(true)
    }

    /// One pass over a fresh random permutation, then a refresh of `W` from
    /// `A` and a gap evaluation.
    pub fn run_epoch(&mut self, epoch: usize) -> Result<EpochRecord> {
        self.run_epoch_with(epoch, |_, _| {})
    }

    /// [`Solver::run_epoch`] with a callback after every block update,
    /// receiving the example index and the updated state.
    pub fn run_epoch_with(
        &mut self,
        epoch: usize,
        mut after_update: impl FnMut(usize, &DualState),
    ) -> Result<EpochRecord> {
        let mut order = std::mem::take(&mut self.order);
        order.shuffle(&mut self.rng);
        for &i in &order {
            self.update(i)?;
            after_update(i, &self.state);
        }
        self.order = order;
        let drift = self.state.refresh_weights(self.data);
        let (primal, dual) = self.objectives()?;
        Ok(EpochRecord {
            epoch,
            primal,
            dual,
            relative_gap: relative_gap(primal, dual),
            drift,
        })
    }

    pub fn skipped(&self) -> usize {
        self.skipped
    }

    pub fn fallbacks(&self) -> usize {
        self.fallbacks
    }

    pub fn objectives(&self) -> Result<(f64, f64)> {
        Ok((
            primal_objective(&self.state.w, self.data, &self.config)?,
            dual_objective(&self.state, self.data, &self.config)?,
        ))
    }

    pub fn into_model(self) -> Result<Model> {
        Model::new(
            self.state.w,
            self.config.loss,
            self.config.lambda,
            self.data.classes().to_vec(),
        )
    }
}

/// Runs epochs until the relative gap drops to `epsilon` or `max_epochs`
/// is reached. Deterministic for a fixed seed.
pub fn train(data: &Dataset, config: &SolverConfig) -> Result<(Model, TrainReport)> {
    let start = Instant::now();
    let mut solver = Solver::new(data, *config)?;
    let mut history = Vec::new();
    let mut converged = false;
    for epoch in 1..=config.max_epochs {
        let rec = solver.run_epoch(epoch)?;
        log::debug!(
            "epoch {epoch}: P = {:.6e}, D = {:.6e}, gap = {:.3e}, drift = {:.1e}",
            rec.primal,
            rec.dual,
            rec.relative_gap,
            rec.drift
        );
        history.push(rec);
        if rec.relative_gap <= config.epsilon {
            converged = true;
            break;
        }
    }
    if solver.skipped > 0 {
        log::warn!("skipped {} updates on zero-norm examples", solver.skipped);
    }
    if solver.fallbacks > 0 {
        log::warn!("{} block updates used the zero fallback", solver.fallbacks);
    }
    let last = *history.last().expect("at least one epoch");
    let report = TrainReport {
        epochs_run: history.len(),
        primal_objective: last.primal,
        dual_objective: last.dual,
        relative_gap: last.relative_gap,
        wall_time: start.elapsed(),
        converged,
        skipped: solver.skipped,
        fallbacks: solver.fallbacks,
        history,
    };
    Ok((solver.into_model()?, report))
}

/// `WᵀX`, an `m × n` score matrix.
pub fn predict_scores(model: &Model, x: &DenseMatrix) -> Result<DenseMatrix> {
    model.w.tr_mul(x)
}

/// Class indices of one score column in descending score order, ties broken
/// by lower index, truncated to `top`.
pub fn rank_classes(scores: &[f64], top: usize) -> Vec<usize> {
    let (idx, _) = crate::numkit::sorted_desc_with_index(scores);
    idx.into_iter().take(top).collect()
}

/// Top-k accuracy in percent, `100·(1 − mean err_k)`, for score columns.
pub fn topk_accuracy(scores: &DenseMatrix, labels: &[usize], k: usize) -> Result<f64> {
    if labels.len() != scores.cols() {
        return Err(Error::invalid(format!(
            "{} labels for {} score columns",
            labels.len(),
            scores.cols()
        )));
    }
    if labels.is_empty() {
        return Err(Error::invalid("no examples to evaluate"));
    }
    let mut errors = 0usize;
    for (i, &y) in labels.iter().enumerate() {
        if crate::losses::topk_error(scores.col(i), y, k)? {
            errors += 1;
        }
    }
    Ok(100.0 * (1.0 - errors as f64 / labels.len() as f64))
}
