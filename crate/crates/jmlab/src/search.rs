//! Derivative-free search over parametrized joint POVMs.
//!
//! Any stacked isometry `M: H → C^G ⊗ H` decodes to a joint POVM through
//! its row blocks, `Π_g = K_g†K_g`, with completeness holding by
//! construction, so the optimizer roams freely in parameter space and
//! every candidate is a genuine measurement. A constrained variant fixes
//! the `x` marginal to the spectral family of the first observable, so the
//! `x` output is a precise measurement at every single evaluation.
//!
//! The optimizer doubles as an adversarial test: every candidate's
//! universal-relation slacks are checked, and a negative slack aborts the
//! search; it would falsify the implementation, not the theorems.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::hash::{Hash, Hasher};

use crate::error::{Error, Result};
use crate::operators::{orthonormalize, Operator, StateVector};
use crate::povm::{Axis, JointPovm, OutcomeGrid};
use crate::process::naimark_dilate;
use crate::relations::{self, Model, RelationId};
use crate::sample;
use crate::tol::Tolerances;

/// What the search minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// `ε(A)·ε(B)`.
    NoiseProduct,
    /// `ΔA·ε(B)` over measurements whose `x` output is exactly precise
    /// for the first observable.
    EpsBGivenPreciseA,
    /// `Δx·Δy`, the product of output spreads.
    OutputSpreadProduct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    NelderMead,
    RandomRestartDescent,
}

fn default_restarts() -> usize {
    4
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchConfig {
    pub objective: Objective,
    pub optimizer: OptimizerKind,
    pub max_evals: usize,
    pub seed: u64,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
}

/// Maps a real parameter vector to a valid joint POVM.
#[derive(Debug, Clone)]
pub struct PovmParametrization {
    dim: usize,
    grid: OutcomeGrid,
    kind: ParamKind,
}

#[derive(Debug, Clone)]
enum ParamKind {
    /// Unconstrained stacked isometry over all grid points.
    Full,
    /// Per-eigenspace conditional blocks `Π(x,y) = B_x R_x(y) B_x†` with
    /// `Σ_y R_x(y) = I` on each block, so the `x` marginal equals the
    /// spectral family exactly.
    PreciseA { blocks: Vec<EigenBlock> },
}

#[derive(Debug, Clone)]
struct EigenBlock {
    /// `d × m` matrix of orthonormal eigenvectors for one eigenvalue.
    basis: DMatrix<C64>,
}

impl PovmParametrization {
    /// Unconstrained parametrization over the given grid.
    pub fn full(dim: usize, grid: OutcomeGrid) -> Self {
        Self {
            dim,
            grid,
            kind: ParamKind::Full,
        }
    }

    /// Constrained parametrization with the `x` marginal pinned to the
    /// spectral family of `a`. The grid's x axis must be `spectrum(a)`.
    pub fn precise_a(a: &Operator, grid: OutcomeGrid, tol: &Tolerances) -> Result<Self> {
        let dec = a.spectral_auto(tol)?;
        if dec.len() != grid.nx() {
            return Err(Error::DimensionMismatch {
                expected: dec.len(),
                got: grid.nx(),
                context: "constrained grid x axis",
            });
        }
        let mut blocks = Vec::with_capacity(dec.len());
        for (ev, proj) in dec.iter() {
            let nearest = grid
                .x_values()
                .iter()
                .fold(f64::INFINITY, |acc, v| acc.min((v - ev).abs()));
            if nearest > 1e-9 * (1.0 + ev.abs()) {
                return Err(Error::OutcomeNotOnGrid { x: ev, y: 0.0 });
            }
            // orthonormal eigenbasis of the block: greedy Gram-Schmidt over
            // the projector columns until the block rank is exhausted
            let rank = proj.trace().re.round() as usize;
            let mut cols: Vec<DVector<C64>> = Vec::with_capacity(rank);
            for j in 0..a.dim() {
                if cols.len() == rank {
                    break;
                }
                let mut candidate: DVector<C64> = proj.matrix().column(j).into();
                for basis_col in &cols {
                    let coeff = basis_col.dotc(&candidate);
                    candidate -= basis_col * coeff;
                }
                let norm = candidate.norm();
                if norm > 1e-6 {
                    cols.push(candidate / C64::new(norm, 0.0));
                }
            }
            if cols.len() != rank {
                return Err(Error::RankDefect {
                    context: "eigenspace basis",
                });
            }
            let mut basis = DMatrix::<C64>::zeros(a.dim(), rank);
            for (j, c) in cols.iter().enumerate() {
                basis.set_column(j, c);
            }
            blocks.push(EigenBlock { basis });
        }
        Ok(Self {
            dim: a.dim(),
            grid,
            kind: ParamKind::PreciseA { blocks },
        })
    }

    pub fn grid(&self) -> &OutcomeGrid {
        &self.grid
    }

    pub fn param_len(&self) -> usize {
        match &self.kind {
            ParamKind::Full => 2 * self.grid.len() * self.dim * self.dim,
            ParamKind::PreciseA { blocks } => blocks
                .iter()
                .map(|b| {
                    let m = b.basis.ncols();
                    2 * self.grid.ny() * m * m
                })
                .sum(),
        }
    }

    /// Deterministic decode. Orthonormalization rank failures retry with a
    /// jitter derived from the parameter bits, so equal parameter vectors
    /// always produce identical POVMs.
    pub fn decode(&self, params: &[f64], tol: &Tolerances) -> Result<JointPovm> {
        if params.len() != self.param_len() {
            return Err(Error::DimensionMismatch {
                expected: self.param_len(),
                got: params.len(),
                context: "parameter vector",
            });
        }
        match &self.kind {
            ParamKind::Full => {
                let g = self.grid.len();
                let blocks = stacked_isometry_blocks(params, g, self.dim, self.dim)?;
                let elements = blocks
                    .iter()
                    .map(|k| Operator::from_matrix(k.adjoint() * k).expect("square"))
                    .collect();
                JointPovm::new(self.dim, self.grid.clone(), elements, tol)
            }
            ParamKind::PreciseA { blocks } => {
                let ny = self.grid.ny();
                let mut elements = vec![Operator::zeros(self.dim); self.grid.len()];
                let mut offset = 0;
                for (ix, block) in blocks.iter().enumerate() {
                    let m = block.basis.ncols();
                    let len = 2 * ny * m * m;
                    let sub = &params[offset..offset + len];
                    offset += len;
                    let ks = stacked_isometry_blocks(sub, ny, m, m)?;
                    for (iy, k) in ks.iter().enumerate() {
                        let r = k.adjoint() * k;
                        let e = &block.basis * r * block.basis.adjoint();
                        elements[self.grid.flat_index(ix, iy)] =
                            Operator::from_matrix(e).expect("square");
                    }
                }
                JointPovm::new(self.dim, self.grid.clone(), elements, tol)
            }
        }
    }
}

/// Decode `params` as a perturbation of the base isometry `[I; 0; …]`
/// stacked over `g` blocks of `rows_per_block × cols`, orthonormalize, and
/// return the blocks. At zero parameters the first block is the identity:
/// the canonical base POVM puts the identity element at the first grid
/// point and zero elsewhere.
fn stacked_isometry_blocks(
    params: &[f64],
    g: usize,
    rows_per_block: usize,
    cols: usize,
) -> Result<Vec<DMatrix<C64>>> {
    let rows = g * rows_per_block;
    let build = |jitter: Option<u64>| -> Vec<DVector<C64>> {
        let mut jrng = jitter.map(ChaCha12Rng::seed_from_u64);
        (0..cols)
            .map(|c| {
                DVector::from_fn(rows, |r, _| {
                    let base = if r == c { 1.0 } else { 0.0 };
                    let idx = 2 * (r * cols + c);
                    let mut z = C64::new(base + params[idx], params[idx + 1]);
                    if let Some(rng) = jrng.as_mut() {
                        z += C64::new(
                            (rng.random::<f64>() - 0.5) * 1e-9,
                            (rng.random::<f64>() - 0.5) * 1e-9,
                        );
                    }
                    z
                })
            })
            .collect()
    };

    let mut cols_v = build(None);
    if orthonormalize(&mut cols_v, 1e-8, "POVM parametrization").is_err() {
        // deterministic jitter from the parameter bits
        let mut hasher = std::collections::hash_map::DefaultHasher::new();
        for p in params {
            p.to_bits().hash(&mut hasher);
        }
        let mut attempt = 0;
        loop {
            cols_v = build(Some(hasher.finish().wrapping_add(attempt)));
            if orthonormalize(&mut cols_v, 1e-8, "POVM parametrization").is_ok() {
                break;
            }
            attempt += 1;
            if attempt > 16 {
                return Err(Error::RankDefect {
                    context: "POVM parametrization",
                });
            }
        }
    }

    let mut blocks = Vec::with_capacity(g);
    for b in 0..g {
        let mut k = DMatrix::<C64>::zeros(rows_per_block, cols);
        for (c, col) in cols_v.iter().enumerate() {
            for r in 0..rows_per_block {
                k[(r, c)] = col[b * rows_per_block + r];
            }
        }
        blocks.push(k);
    }
    Ok(blocks)
}

/// Default outcome grid: the spectra of both observables plus one slack
/// outcome per axis (the spectral midpoint, or one mean gap beyond the
/// maximum when the midpoint is already an eigenvalue). In constrained mode
/// the x axis is exactly the spectrum of `a`.
pub fn default_grid(
    a: &Operator,
    b: &Operator,
    constrained: bool,
    tol: &Tolerances,
) -> Result<OutcomeGrid> {
    let with_slack = |values: &[f64]| -> Vec<f64> {
        let min = values[0];
        let max = values[values.len() - 1];
        let mid = 0.5 * (min + max);
        let scale = 1.0 + min.abs().max(max.abs());
        let collides = values.iter().any(|v| (v - mid).abs() <= 1e-9 * scale);
        let slack = if collides {
            let gap = if values.len() > 1 {
                (max - min) / (values.len() - 1) as f64
            } else {
                1.0
            };
            max + gap
        } else {
            mid
        };
        let mut out = values.to_vec();
        out.push(slack);
        out.sort_by(f64::total_cmp);
        out
    };
    let spec_a = a.spectral_auto(tol)?.eigenvalues().to_vec();
    let spec_b = b.spectral_auto(tol)?.eigenvalues().to_vec();
    let x_values = if constrained {
        spec_a
    } else {
        with_slack(&spec_a)
    };
    OutcomeGrid::new(x_values, with_slack(&spec_b))
}

/// One evaluation in the search trace.
#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub eval: usize,
    pub objective: f64,
    pub universal_slack: f64,
    pub generalized_slack: f64,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub best_objective: f64,
    pub best_params: Vec<f64>,
    pub best_povm: JointPovm,
    pub evals: usize,
    pub trace: Vec<TraceRow>,
}

struct Evaluator<'a> {
    parametrization: &'a PovmParametrization,
    a: &'a Operator,
    b: &'a Operator,
    psi: &'a StateVector,
    objective: Objective,
    tol: &'a Tolerances,
}

struct EvalRecord {
    objective: f64,
    universal_slack: f64,
    generalized_slack: f64,
}

impl<'a> Evaluator<'a> {
    /// Lean single-route evaluation for the optimizer hot loop. The best
    /// candidate is re-certified through the fully cross-checked relation
    /// evaluators after the search finishes.
    fn eval(&self, params: &[f64]) -> Result<EvalRecord> {
        let povm = self.parametrization.decode(params, self.tol)?;
        let ma = povm.marginal(Axis::A);
        let mb = povm.marginal(Axis::B);

        let sum_form_eps = |marginal: &crate::povm::MarginalPovm, obs: &Operator| -> Result<f64> {
            let mut eps_sq = 0.0;
            let obs_psi = obs.apply(self.psi.vector());
            for (v, e) in marginal.values().iter().zip(marginal.elements()) {
                let shifted = self.psi.vector() * C64::new(*v, 0.0) - &obs_psi;
                eps_sq += shifted.dotc(&e.apply(&shifted)).re;
            }
            crate::operators::clamped_sqrt(eps_sq, self.tol)
        };
        let eps_a = sum_form_eps(&ma, self.a)?;
        let eps_b = sum_form_eps(&mb, self.b)?;

        let n_a = &ma.moment_operator(crate::povm::MomentOrder::First) - self.a;
        let n_b = &mb.moment_operator(crate::povm::MomentOrder::First) - self.b;
        let corr_a = 0.5 * n_a.commutator(self.b)?.expectation(self.psi)?.norm();
        let corr_b = 0.5 * self.a.commutator(&n_b)?.expectation(self.psi)?.norm();
        let rhs = 0.5 * self.a.commutator(self.b)?.expectation(self.psi)?.norm();
        let da = self.a.std_dev(self.psi, self.tol)?;
        let db = self.b.std_dev(self.psi, self.tol)?;

        let universal_slack = eps_a * eps_b + corr_a + corr_b - rhs;
        let generalized_slack = eps_a * eps_b + eps_a * db + da * eps_b - rhs;
        if universal_slack < -self.tol.relation_slack {
            return Err(Error::RelationViolation {
                relation: RelationId::UniversalValid.as_str(),
                slack: universal_slack,
            });
        }
        if generalized_slack < -self.tol.relation_slack {
            return Err(Error::RelationViolation {
                relation: RelationId::GeneralizedJoint.as_str(),
                slack: generalized_slack,
            });
        }

        let objective = match self.objective {
            Objective::NoiseProduct => eps_a * eps_b,
            Objective::EpsBGivenPreciseA => {
                // the constraint is structural; a violation here is a bug
                if eps_a > self.tol.precision {
                    return Err(Error::InvalidPovm {
                        reason: format!(
                            "constrained candidate has nonzero first-axis noise {eps_a:.3e}"
                        ),
                    });
                }
                da * eps_b
            }
            Objective::OutputSpreadProduct => {
                let spread = |marginal: &crate::povm::MarginalPovm| -> Result<f64> {
                    let first = marginal
                        .moment_operator(crate::povm::MomentOrder::First)
                        .expectation_real(self.psi, self.tol)?;
                    let second = marginal
                        .moment_operator(crate::povm::MomentOrder::Second)
                        .expectation_real(self.psi, self.tol)?;
                    crate::operators::clamped_sqrt(second - first * first, self.tol)
                };
                spread(&ma)? * spread(&mb)?
            }
        };
        if !objective.is_finite() {
            return Err(Error::NonFiniteObjective);
        }
        Ok(EvalRecord {
            objective,
            universal_slack,
            generalized_slack,
        })
    }
}

/// Minimize the configured objective over the parametrized POVM family for
/// the scenario `(a, b, ψ)`.
///
/// Restarts run in parallel with seeds derived from the configured seed and
/// are merged in restart order, so the result is deterministic regardless
/// of thread scheduling. The returned trace concatenates the restart traces
/// with globally renumbered evaluation indices.
pub fn minimize(
    a: &Operator,
    b: &Operator,
    psi: &StateVector,
    cfg: &SearchConfig,
    tol: &Tolerances,
) -> Result<SearchOutcome> {
    if cfg.max_evals == 0 {
        return Err(Error::NonFiniteObjective);
    }
    let constrained = cfg.objective == Objective::EpsBGivenPreciseA;
    let grid = default_grid(a, b, constrained, tol)?;
    let parametrization = if constrained {
        PovmParametrization::precise_a(a, grid, tol)?
    } else {
        PovmParametrization::full(a.dim(), grid)
    };
    let n = parametrization.param_len();
    let restarts = cfg.restarts.max(1);
    let budget = (cfg.max_evals / restarts).max(1);

    let results: Vec<Result<RestartResult>> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let evaluator = Evaluator {
                parametrization: &parametrization,
                a,
                b,
                psi,
                objective: cfg.objective,
                tol,
            };
            let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
            rng.set_stream(r as u64);
            // the first restart explores from the canonical base point
            let start: Vec<f64> = if r == 0 {
                vec![0.0; n]
            } else {
                (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()
            };
            match cfg.optimizer {
                OptimizerKind::NelderMead => nelder_mead(&evaluator, start, budget),
                OptimizerKind::RandomRestartDescent => compass_descent(&evaluator, start, budget),
            }
        })
        .collect();

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut trace = Vec::new();
    let mut evals = 0;
    for result in results {
        let r = result?;
        for mut row in r.trace {
            row.eval = evals;
            evals += 1;
            trace.push(row);
        }
        if best
            .as_ref()
            .is_none_or(|(b_obj, _)| r.best_objective < *b_obj)
        {
            best = Some((r.best_objective, r.best_params));
        }
    }
    let (best_objective, best_params) = best.expect("at least one restart");
    let best_povm = parametrization.decode(&best_params, tol)?;
    // re-certify the winner through the fully cross-checked evaluators
    let (universal, _) = relations::eval_universal(&best_povm, a, b, psi, tol, None)?;
    let generalized = relations::eval_generalized(&best_povm, a, b, psi, tol, None)?;
    for record in [&universal, &generalized] {
        if record.slack < -tol.relation_slack {
            return Err(Error::RelationViolation {
                relation: record.name.as_str(),
                slack: record.slack,
            });
        }
    }
    Ok(SearchOutcome {
        best_objective,
        best_params,
        best_povm,
        evals,
        trace,
    })
}

struct RestartResult {
    best_objective: f64,
    best_params: Vec<f64>,
    trace: Vec<TraceRow>,
}

struct Budget {
    used: usize,
    limit: usize,
    trace: Vec<TraceRow>,
}

impl Budget {
    fn new(limit: usize) -> Self {
        Self {
            used: 0,
            limit,
            trace: Vec::new(),
        }
    }

    fn spent(&self) -> bool {
        self.used >= self.limit
    }

    fn eval(&mut self, evaluator: &Evaluator, params: &[f64]) -> Result<Option<f64>> {
        if self.spent() {
            return Ok(None);
        }
        let rec = evaluator.eval(params)?;
        self.trace.push(TraceRow {
            eval: self.used,
            objective: rec.objective,
            universal_slack: rec.universal_slack,
            generalized_slack: rec.generalized_slack,
        });
        self.used += 1;
        Ok(Some(rec.objective))
    }
}

/// Standard Nelder–Mead with adaptive simplex bookkeeping.
fn nelder_mead(evaluator: &Evaluator, start: Vec<f64>, max_evals: usize) -> Result<RestartResult> {
    let n = start.len();
    let mut budget = Budget::new(max_evals);
    let step = 0.5;

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    if let Some(f0) = budget.eval(evaluator, &start)? {
        simplex.push((start.clone(), f0));
    }
    for i in 0..n {
        if budget.spent() {
            break;
        }
        let mut p = start.clone();
        p[i] += step;
        if let Some(f) = budget.eval(evaluator, &p)? {
            simplex.push((p, f));
        }
    }
    if simplex.is_empty() {
        return Err(Error::NonFiniteObjective);
    }

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    while !budget.spent() && simplex.len() == n + 1 {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let f_best = simplex[0].1;
        let f_worst = simplex[n].1;
        if (f_worst - f_best).abs() < 1e-14 {
            break;
        }
        let mut centroid = vec![0.0; n];
        for (p, _) in simplex.iter().take(n) {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let reflect: Vec<f64> = centroid
            .iter()
            .zip(&worst.0)
            .map(|(c, w)| c + alpha * (c - w))
            .collect();
        let Some(f_r) = budget.eval(evaluator, &reflect)? else {
            break;
        };

        if f_r < simplex[0].1 {
            let expand: Vec<f64> = centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + gamma * (c - w))
                .collect();
            match budget.eval(evaluator, &expand)? {
                Some(f_e) if f_e < f_r => simplex[n] = (expand, f_e),
                Some(_) | None => simplex[n] = (reflect, f_r),
            }
        } else if f_r < simplex[n - 1].1 {
            simplex[n] = (reflect, f_r);
        } else {
            let contract: Vec<f64> = centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + rho * (w - c))
                .collect();
            match budget.eval(evaluator, &contract)? {
                Some(f_c) if f_c < worst.1 => simplex[n] = (contract, f_c),
                Some(_) => {
                    // shrink toward the best vertex
                    let best = simplex[0].0.clone();
                    for vertex in simplex.iter_mut().skip(1) {
                        let shrunk: Vec<f64> = best
                            .iter()
                            .zip(&vertex.0)
                            .map(|(b, p)| b + sigma * (p - b))
                            .collect();
                        match budget.eval(evaluator, &shrunk)? {
                            Some(f_s) => *vertex = (shrunk, f_s),
                            None => break,
                        }
                    }
                }
                None => break,
            }
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (best_params, best_objective) = simplex.swap_remove(0);
    Ok(RestartResult {
        best_objective,
        best_params,
        trace: budget.trace,
    })
}

/// Coordinate pattern search with halving steps. Slower per step than
/// Nelder–Mead but robust near the spectral kinks of noise objectives.
fn compass_descent(
    evaluator: &Evaluator,
    start: Vec<f64>,
    max_evals: usize,
) -> Result<RestartResult> {
    let n = start.len();
    let mut budget = Budget::new(max_evals);
    let mut x = start;
    let Some(mut fx) = budget.eval(evaluator, &x)? else {
        return Err(Error::NonFiniteObjective);
    };
    let mut step = 0.5;
    while !budget.spent() && step > 1e-10 {
        let mut improved = false;
        'sweep: for i in 0..n {
            for dir in [1.0, -1.0] {
                let mut y = x.clone();
                y[i] += dir * step;
                match budget.eval(evaluator, &y)? {
                    Some(fy) => {
                        if fy < fx - 1e-15 {
                            x = y;
                            fx = fy;
                            improved = true;
                        }
                    }
                    None => break 'sweep,
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok(RestartResult {
        best_objective: fx,
        best_params: x,
        trace: budget.trace,
    })
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

/// Families of scenarios a sweep can draw from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ScenarioFamily {
    /// Random joint POVMs realized through a dilation, with random
    /// Hermitian observables and states.
    RandomDilated {
        dim_min: usize,
        dim_max: usize,
        nx: usize,
        ny: usize,
    },
    /// The conjugate Pauli pair `(σx, σy)` with random input states.
    QubitConjugatePair,
    /// Clock and shift on `C^d` with random input states.
    ClockShift { d: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// Evaluate the full relation report per instance.
    Relations,
    /// Run the optimizer per instance and compare to the commutator bound.
    Search,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub family: ScenarioFamily,
    pub instances: usize,
    pub seed: u64,
    pub mode: SweepMode,
    #[serde(default)]
    pub search: Option<SearchConfig>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepOutput {
    pub mode: SweepMode,
    pub instances: usize,
    /// Relations that failed to hold (universal set only, in relations
    /// mode) or best values below the bound (search mode). Zero or the
    /// implementation is wrong.
    pub violations: usize,
    /// Most negative slack observed across all instances and relations.
    pub worst_slack: f64,
    pub csv_header: String,
    pub csv_rows: Vec<String>,
}

fn scenario_for(
    family: &ScenarioFamily,
    rng: &mut ChaCha12Rng,
    tol: &Tolerances,
) -> Result<(Operator, Operator, StateVector, Option<Model>)> {
    match family {
        ScenarioFamily::RandomDilated {
            dim_min,
            dim_max,
            nx,
            ny,
        } => {
            let dim = rng.random_range(*dim_min..=*dim_max);
            let nx = rng.random_range(1..=*nx);
            let ny = rng.random_range(1..=*ny);
            let povm = sample::random_joint_povm(dim, nx, ny, rng, tol)?;
            let process = naimark_dilate(&povm, tol, rng)?;
            let a = sample::random_hermitian(dim, rng);
            let b = sample::random_hermitian(dim, rng);
            let psi = sample::random_state(dim, rng);
            Ok((a, b, psi, Some(Model::Process(process))))
        }
        ScenarioFamily::QubitConjugatePair => {
            let a = crate::operators::fixtures::sigma_x();
            let b = crate::operators::fixtures::sigma_y();
            let psi = sample::random_state(2, rng);
            Ok((a, b, psi, None))
        }
        ScenarioFamily::ClockShift { d } => {
            let pair = crate::gallery::DiscretePair::new(*d)?;
            let psi = sample::random_state(*d, rng);
            Ok((pair.clock().clone(), pair.shift().clone(), psi, None))
        }
    }
}

/// Run a sweep. Instances use independent derived RNG streams and run in
/// parallel; rows come back in instance order, so output is deterministic
/// for a fixed seed.
pub fn run_sweep(cfg: &SweepConfig, tol: &Tolerances) -> Result<SweepOutput> {
    match cfg.mode {
        SweepMode::Relations => {
            let rows: Vec<Result<Vec<(String, f64, bool)>>> = (0..cfg.instances)
                .into_par_iter()
                .map(|i| {
                    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
                    rng.set_stream(1 + i as u64);
                    let (a, b, psi, model) = scenario_for(&cfg.family, &mut rng, tol)?;
                    let model = model.ok_or(Error::MissingModel)?;
                    let report = relations::full_report(&model, &a, &b, &psi, tol)?;
                    Ok(report
                        .records
                        .iter()
                        .map(|r| {
                            (
                                format!(
                                    "{i},{},{:.17e},{:.17e},{:.17e},{}",
                                    r.name.as_str(),
                                    r.lhs,
                                    r.rhs,
                                    r.slack,
                                    r.holds
                                ),
                                r.slack,
                                r.holds,
                            )
                        })
                        .collect())
                })
                .collect();
            let mut csv_rows = Vec::new();
            let mut violations = 0;
            let mut worst_slack = f64::INFINITY;
            for row in rows {
                for (line, slack, holds) in row? {
                    worst_slack = worst_slack.min(slack);
                    if !holds {
                        violations += 1;
                    }
                    csv_rows.push(line);
                }
            }
            Ok(SweepOutput {
                mode: cfg.mode,
                instances: cfg.instances,
                violations,
                worst_slack,
                csv_header: "instance,relation,lhs,rhs,slack,holds".into(),
                csv_rows,
            })
        }
        SweepMode::Search => {
            let search_cfg = cfg.search.clone().ok_or(Error::MissingModel)?;
            let rows: Vec<Result<(String, f64)>> = (0..cfg.instances)
                .into_par_iter()
                .map(|i| {
                    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
                    rng.set_stream(1 + i as u64);
                    let (a, b, psi, _) = scenario_for(&cfg.family, &mut rng, tol)?;
                    let mut per_instance = search_cfg.clone();
                    per_instance.seed = search_cfg.seed.wrapping_add(i as u64);
                    let outcome = minimize(&a, &b, &psi, &per_instance, tol)?;
                    let bound = 0.5 * a.commutator(&b)?.expectation(&psi)?.norm();
                    let gap = outcome.best_objective - bound;
                    Ok((
                        format!(
                            "{i},{:.17e},{:.17e},{:.17e},{}",
                            outcome.best_objective, bound, gap, outcome.evals
                        ),
                        gap,
                    ))
                })
                .collect();
            let mut csv_rows = Vec::new();
            let mut violations = 0;
            let mut worst_slack = f64::INFINITY;
            for row in rows {
                let (line, gap) = row?;
                worst_slack = worst_slack.min(gap);
                if gap < -tol.relation_slack {
                    violations += 1;
                }
                csv_rows.push(line);
            }
            Ok(SweepOutput {
                mode: cfg.mode,
                instances: cfg.instances,
                violations,
                worst_slack,
                csv_header: "instance,best_objective,bound,gap,evals".into(),
                csv_rows,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics;
    use crate::operators::fixtures::*;
    use approx::assert_abs_diff_eq;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn qubit_cfg(objective: Objective, max_evals: usize) -> SearchConfig {
        SearchConfig {
            objective,
            optimizer: OptimizerKind::NelderMead,
            max_evals,
            seed: 7,
            restarts: 4,
            tolerances: Tolerances::default(),
        }
    }

    #[test]
    fn zero_parameters_decode_to_base_povm() {
        let t = tol();
        let grid = OutcomeGrid::new(vec![-1.0, 1.0], vec![0.0, 1.0]).unwrap();
        let p = PovmParametrization::full(2, grid);
        let povm = p.decode(&vec![0.0; p.param_len()], &t).unwrap();
        assert!(
            povm.element(0, 0)
                .max_distance(&Operator::identity(2))
                .unwrap()
                < 1e-12
        );
        assert!(povm.element(1, 1).max_abs_entry() < 1e-12);
    }

    #[test]
    fn random_parameters_decode_to_valid_povms() {
        use rand::Rng;
        let t = tol();
        let grid = OutcomeGrid::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0]).unwrap();
        let p = PovmParametrization::full(3, grid);
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..20 {
            let params: Vec<f64> = (0..p.param_len())
                .map(|_| rng.random::<f64>() * 2.0 - 1.0)
                .collect();
            let povm = p.decode(&params, &t).unwrap();
            assert!(povm.validate(&t).passes);
        }
    }

    #[test]
    fn decode_is_deterministic() {
        use rand::Rng;
        let t = tol();
        let grid = OutcomeGrid::new(vec![-1.0, 1.0], vec![-1.0, 0.0, 1.0]).unwrap();
        let p = PovmParametrization::precise_a(&sigma_x(), grid, &t).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let params: Vec<f64> = (0..p.param_len())
            .map(|_| rng.random::<f64>() * 2.0 - 1.0)
            .collect();
        let a = p.decode(&params, &t).unwrap();
        let b = p.decode(&params, &t).unwrap();
        assert_eq!(a.max_element_distance(&b, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn constrained_candidates_measure_first_observable_precisely() {
        use rand::Rng;
        let t = tol();
        let grid = default_grid(&sigma_x(), &sigma_y(), true, &t).unwrap();
        assert_eq!(grid.x_values(), &[-1.0, 1.0]);
        assert_eq!(grid.y_values(), &[-1.0, 0.0, 1.0]);
        let p = PovmParametrization::precise_a(&sigma_x(), grid, &t).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for _ in 0..10 {
            let params: Vec<f64> = (0..p.param_len())
                .map(|_| rng.random::<f64>() * 2.0 - 1.0)
                .collect();
            let povm = p.decode(&params, &t).unwrap();
            let check = povm
                .marginal(Axis::A)
                .is_precise_for(&sigma_x(), &t)
                .unwrap();
            assert!(check.precise, "defect {}", check.defect);
        }
    }

    #[test]
    fn constrained_parametrization_handles_degenerate_eigenspaces() {
        use rand::Rng;
        let t = tol();
        // rank-2 eigenspace at value 1, rank-1 at value 3
        let a = Operator::diagonal(&[1.0, 1.0, 3.0]);
        let grid = OutcomeGrid::new(vec![1.0, 3.0], vec![0.0, 1.0]).unwrap();
        let p = PovmParametrization::precise_a(&a, grid, &t).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        for _ in 0..5 {
            let params: Vec<f64> = (0..p.param_len())
                .map(|_| rng.random::<f64>() * 2.0 - 1.0)
                .collect();
            let povm = p.decode(&params, &t).unwrap();
            assert!(povm.validate(&t).passes);
            let check = povm.marginal(Axis::A).is_precise_for(&a, &t).unwrap();
            assert!(check.precise, "defect {}", check.defect);
        }
    }

    #[test]
    fn qubit_anchor_search_reaches_the_bound() {
        let t = tol();
        let psi = StateVector::basis_state(2, 0);
        let cfg = qubit_cfg(Objective::EpsBGivenPreciseA, 5000);
        let outcome = minimize(&sigma_x(), &sigma_y(), &psi, &cfg, &t).unwrap();
        // the guess model proves 1.0 is attainable; demand 5%
        assert!(
            outcome.best_objective <= 1.05,
            "best {}",
            outcome.best_objective
        );
        assert!(outcome.best_objective >= 1.0 - 1e-9);
        assert!(outcome.evals <= 5000);
        // every candidate respected the universal relations
        for row in &outcome.trace {
            assert!(row.universal_slack >= -1e-9);
            assert!(row.generalized_slack >= -1e-9);
        }
    }

    #[test]
    fn search_is_deterministic_under_fixed_seed() {
        let t = tol();
        let psi = StateVector::basis_state(2, 0);
        let cfg = qubit_cfg(Objective::EpsBGivenPreciseA, 600);
        let a = minimize(&sigma_x(), &sigma_y(), &psi, &cfg, &t).unwrap();
        let b = minimize(&sigma_x(), &sigma_y(), &psi, &cfg, &t).unwrap();
        assert_eq!(a.best_objective.to_bits(), b.best_objective.to_bits());
        assert_eq!(a.evals, b.evals);
        assert_eq!(a.trace.len(), b.trace.len());
        for (x, y) in a.trace.iter().zip(b.trace.iter()) {
            assert_eq!(x.objective.to_bits(), y.objective.to_bits());
        }
    }

    #[test]
    fn commuting_pair_noise_product_reaches_zero() {
        let t = tol();
        let a = Operator::diagonal(&[-1.0, 1.0]);
        let b = Operator::diagonal(&[2.0, 5.0]);
        let psi = plus_state();
        let cfg = SearchConfig {
            objective: Objective::NoiseProduct,
            optimizer: OptimizerKind::RandomRestartDescent,
            max_evals: 60_000,
            seed: 13,
            restarts: 2,
            tolerances: Tolerances::default(),
        };
        let outcome = minimize(&a, &b, &psi, &cfg, &t).unwrap();
        assert!(
            outcome.best_objective < 1e-6,
            "best {}",
            outcome.best_objective
        );
    }

    #[test]
    fn dependent_noise_shrinks_output_spread_below_commutator() {
        let t = tol();
        let psi = StateVector::basis_state(2, 0);
        let cfg = SearchConfig {
            objective: Objective::OutputSpreadProduct,
            optimizer: OptimizerKind::NelderMead,
            max_evals: 4000,
            seed: 19,
            restarts: 4,
            tolerances: Tolerances::default(),
        };
        let outcome = minimize(&sigma_x(), &sigma_y(), &psi, &cfg, &t).unwrap();
        let full_bound = sigma_x()
            .commutator(&sigma_y())
            .unwrap()
            .expectation(&psi)
            .unwrap()
            .norm();
        // certify by direct evaluation of the found model
        let dx = metrics::output_std(&outcome.best_povm, &psi, Axis::A, &t).unwrap();
        let dy = metrics::output_std(&outcome.best_povm, &psi, Axis::B, &t).unwrap();
        assert_abs_diff_eq!(dx * dy, outcome.best_objective, epsilon = 1e-9);
        assert!(
            outcome.best_objective < full_bound - 0.5,
            "no dependent-noise exhibit: {} vs {}",
            outcome.best_objective,
            full_bound
        );
    }

    #[test]
    fn relations_sweep_has_no_violations() {
        let t = tol();
        let cfg = SweepConfig {
            family: ScenarioFamily::RandomDilated {
                dim_min: 2,
                dim_max: 3,
                nx: 2,
                ny: 2,
            },
            instances: 10,
            seed: 23,
            mode: SweepMode::Relations,
            search: None,
        };
        let out = run_sweep(&cfg, &t).unwrap();
        assert_eq!(out.violations, 0);
        assert!(out.worst_slack >= -1e-9);
        assert!(!out.csv_rows.is_empty());
    }

    #[test]
    fn search_sweep_respects_the_floor() {
        let t = tol();
        let cfg = SweepConfig {
            family: ScenarioFamily::QubitConjugatePair,
            instances: 4,
            seed: 29,
            mode: SweepMode::Search,
            search: Some(qubit_cfg(Objective::EpsBGivenPreciseA, 800)),
        };
        let out = run_sweep(&cfg, &t).unwrap();
        assert_eq!(out.violations, 0);
        assert_eq!(out.csv_rows.len(), 4);
    }

    #[test]
    fn empty_sweep_yields_header_only() {
        let t = tol();
        let cfg = SweepConfig {
            family: ScenarioFamily::ClockShift { d: 3 },
            instances: 0,
            seed: 1,
            mode: SweepMode::Relations,
            search: None,
        };
        let out = run_sweep(&cfg, &t).unwrap();
        assert!(out.csv_rows.is_empty());
        assert_eq!(out.csv_header, "instance,relation,lhs,rhs,slack,holds");
    }
}
