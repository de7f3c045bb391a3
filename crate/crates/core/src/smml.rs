//! Strict minimum message length codes for the linear regression family.
//!
//! A code is a partition `U_1..U_m` of the data space, assertions
//! `θ_1..θ_m` and coding probabilities `q_1..q_m`. Its expected two-part
//! message length is
//!
//! ```text
//! I₁ = -E[ log q̂(X) + log p_X(X | θ̂(X)) ]
//! ```
//!
//! with `X` drawn from the marginal `r` renormalised to a truncated domain.
//! For an exponential family the score `λ_i(x) = -log q_i - x·θ_i + log Z(θ_i)`
//! is affine in `x`, so the optimal partition assigns `x` to the smallest
//! `λ_i` and every cell is a convex polytope. Given the partition, `q_i` is
//! the mass of `U_i` and `θ_i` maps the `r`-centroid of `U_i` through the
//! inverse expectation map.
//!
//! [`fit_smml`] alternates these exact block minimisers on the quadrature
//! grid, so `I₁` never increases between half-steps. Message lengths are in
//! nats and exclude the constant of the data truncation.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{check_len, Error, Result};
use crate::grid::{DataGrid, TruncatedDomain};
use crate::hyperbolic::{affine_to_hyperbolic_plane, AffineFunctional, HyperbolicPlane};
use crate::model::{log_base_measure, log_partition, NaturalParam, SuffStat};
use crate::params::{theta_from_xi, ExpectationParam};

const MIN_DOMAIN_MASS: f64 = 1e-12;
const PROB_SUM_TOLERANCE: f64 = 1e-9;

/// An SMML code on a truncated domain.
#[derive(Debug, Clone, PartialEq)]
pub struct SmmlCode {
    assertions: Vec<NaturalParam>,
    coding_probs: Vec<f64>,
    domain: TruncatedDomain,
    message_length: Option<f64>,
}

impl SmmlCode {
    pub fn new(
        assertions: Vec<NaturalParam>,
        coding_probs: Vec<f64>,
        domain: TruncatedDomain,
    ) -> Result<Self> {
        if assertions.is_empty() {
            return Err(Error::InvalidArgument(
                "a code needs at least one assertion".into(),
            ));
        }
        check_len(assertions.len(), coding_probs.len())?;
        for theta in &assertions {
            check_len(domain.p(), theta.p())?;
        }
        if coding_probs.iter().any(|q| !(*q > 0.0) || !q.is_finite()) {
            return Err(Error::InvalidArgument(
                "coding probabilities must be positive".into(),
            ));
        }
        let total: f64 = coding_probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "coding probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self {
            assertions,
            coding_probs,
            domain,
            message_length: None,
        })
    }

    pub fn m(&self) -> usize {
        self.assertions.len()
    }

    pub fn p(&self) -> usize {
        self.domain.p()
    }

    pub fn assertions(&self) -> &[NaturalParam] {
        &self.assertions
    }

    pub fn coding_probs(&self) -> &[f64] {
        &self.coding_probs
    }

    pub fn domain(&self) -> &TruncatedDomain {
        &self.domain
    }

    /// `I₁` in nats, when it has been computed.
    pub fn message_length(&self) -> Option<f64> {
        self.message_length
    }

    pub fn with_message_length(mut self, value: f64) -> Self {
        self.message_length = Some(value);
        self
    }
}

/// `λ_i(x) = -log q_i - x·θ_i + log Z(θ_i)`.
pub fn lambda_score(x: &SuffStat, theta: &NaturalParam, q: f64, n: usize) -> f64 {
    -q.ln() - x.as_vector().dot(theta.as_vector()) + log_partition(theta, n)
}

/// The `x`-independent part of every `λ_i`.
struct Scores {
    thetas: Vec<DVector<f64>>,
    offsets: Vec<f64>,
}

impl Scores {
    fn new(assertions: &[NaturalParam], probs: &[f64], n: usize) -> Self {
        Self {
            thetas: assertions.iter().map(|t| t.as_vector().clone()).collect(),
            offsets: assertions
                .iter()
                .zip(probs)
                .map(|(t, q)| -q.ln() + log_partition(t, n))
                .collect(),
        }
    }

    fn lambda(&self, i: usize, x: &[f64]) -> f64 {
        let dot: f64 = self.thetas[i].iter().zip(x).map(|(a, b)| a * b).sum();
        self.offsets[i] - dot
    }

    /// Lowest index attaining `min_i λ_i(x)`, and that minimum.
    fn best(&self, x: &[f64]) -> (usize, f64) {
        let mut best = (0, self.lambda(0, x));
        for i in 1..self.thetas.len() {
            let l = self.lambda(i, x);
            if l < best.1 {
                best = (i, l);
            }
        }
        best
    }
}

/// The cell of `x`: smallest index attaining `min_i λ_i(x)`.
pub fn assign_cell(x: &SuffStat, code: &SmmlCode, n: usize) -> usize {
    let scores = Scores::new(&code.assertions, &code.coding_probs, n);
    scores.best(x.as_vector().as_slice()).0
}

fn assign_grid(grid: &DataGrid, scores: &Scores) -> Vec<usize> {
    (0..grid.len())
        .into_par_iter()
        .map(|k| scores.best(grid.point(k)).0)
        .collect()
}

/// `I₁` of an explicit (partition, assertions, probabilities) triple.
fn objective(
    grid: &DataGrid,
    n: usize,
    labels: &[usize],
    assertions: &[NaturalParam],
    probs: &[f64],
) -> f64 {
    let p = grid.dim() - 1;
    let per_cell: Vec<(DVector<f64>, f64)> = assertions
        .iter()
        .zip(probs)
        .map(|(t, q)| (t.as_vector().clone(), q.ln() - log_partition(t, n)))
        .collect();
    let terms: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let (theta, offset) = &per_cell[labels[k]];
            let dot: f64 = theta.iter().zip(grid.point(k)).map(|(a, b)| a * b).sum();
            grid.weight(k) * (offset + dot + log_base_measure(grid.gap(k), n, p))
        })
        .collect();
    // fixed summation order keeps results independent of the thread count
    -terms.iter().sum::<f64>() / grid.mass()
}

/// Wallace's weight and assertion conditions for a fixed partition.
fn solve_blocks(
    grid: &DataGrid,
    n: usize,
    labels: &[usize],
    m: usize,
) -> Result<(Vec<NaturalParam>, Vec<f64>)> {
    let dim = grid.dim();
    let mut masses = vec![0.0; m];
    let mut moments = vec![DVector::<f64>::zeros(dim); m];
    for (k, &c) in labels.iter().enumerate() {
        let w = grid.weight(k);
        masses[c] += w;
        for (acc, x) in moments[c].iter_mut().zip(grid.point(k)) {
            *acc += w * x;
        }
    }
    let mut assertions = Vec::with_capacity(m);
    for (i, (mass, moment)) in masses.iter().zip(moments).enumerate() {
        if !(*mass > 0.0) {
            return Err(Error::EmptyCell(i));
        }
        let centroid = ExpectationParam::new(moment / *mass)
            .map_err(|_| Error::Domain(format!("centroid of cell {i} left the interior of 𝒳")))?;
        assertions.push(theta_from_xi(&centroid, n));
    }
    let total: f64 = masses.iter().sum();
    let probs = masses.iter().map(|w| w / total).collect();
    Ok((assertions, probs))
}

fn grid_for(domain: &TruncatedDomain, n: usize) -> Result<DataGrid> {
    let grid = DataGrid::new(domain, n)?;
    if !(grid.mass() >= MIN_DOMAIN_MASS) {
        return Err(Error::NegligibleMass(grid.mass()));
    }
    Ok(grid)
}

/// `I₁` of `code`, in nats, by midpoint quadrature over its domain.
pub fn message_length(code: &SmmlCode, n: usize) -> Result<f64> {
    let grid = grid_for(&code.domain, n)?;
    let scores = Scores::new(&code.assertions, &code.coding_probs, n);
    let labels = assign_grid(&grid, &scores);
    Ok(objective(
        &grid,
        n,
        &labels,
        &code.assertions,
        &code.coding_probs,
    ))
}

/// Partition the grid with `code`, then reset every `q_i` to the mass of its
/// cell and every `θ_i` to the natural parameter of the cell centroid.
pub fn update_weights_and_assertions(code: &SmmlCode, n: usize) -> Result<SmmlCode> {
    let grid = grid_for(&code.domain, n)?;
    let scores = Scores::new(&code.assertions, &code.coding_probs, n);
    let labels = assign_grid(&grid, &scores);
    let (assertions, probs) = solve_blocks(&grid, n, &labels, code.m())?;
    let value = objective(&grid, n, &labels, &assertions, &probs);
    Ok(SmmlCode::new(assertions, probs, code.domain.clone())?.with_message_length(value))
}

/// Grid labels of `code` on its own domain.
pub fn grid_partition(code: &SmmlCode, n: usize) -> Result<(DataGrid, Vec<usize>)> {
    let grid = grid_for(&code.domain, n)?;
    let scores = Scores::new(&code.assertions, &code.coding_probs, n);
    let labels = assign_grid(&grid, &scores);
    Ok((grid, labels))
}

/// Pairs `(i, j)`, `i < j`, whose cells touch on the quadrature grid.
pub fn adjacent_cells(code: &SmmlCode, n: usize) -> Result<Vec<(usize, usize)>> {
    let (grid, labels) = grid_partition(code, n)?;
    let m = code.m();
    let mut touching = vec![false; m * m];
    for k in 0..grid.len() {
        for k2 in grid.forward_neighbors(k) {
            let (a, b) = (labels[k], labels[k2]);
            if a != b {
                touching[a.min(b) * m + a.max(b)] = true;
            }
        }
    }
    Ok((0..m)
        .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
        .filter(|(i, j)| touching[i * m + j])
        .collect())
}

/// Settings for [`fit_smml`].
#[derive(Debug, Clone)]
pub struct FitOptions {
    pub m: usize,
    pub domain: TruncatedDomain,
    pub restarts: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
}

impl FitOptions {
    /// 8 restarts, seed 0, `tol = 1e-9`, at most 500 iterations.
    pub fn new(m: usize, domain: TruncatedDomain) -> Self {
        Self {
            m,
            domain,
            restarts: 8,
            seed: 0,
            tol: 1e-9,
            max_iter: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HalfStepKind {
    /// Partition recomputed from the current assertions and weights.
    Assign,
    /// Weights and assertions recomputed from the current partition.
    Update,
    /// An empty cell was re-seeded; not a descent step.
    Reseed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfStep {
    pub kind: HalfStepKind,
    pub message_length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartTrace {
    pub history: Vec<HalfStep>,
    pub iterations: usize,
    pub converged: bool,
    pub abandoned: bool,
    pub reseeds: usize,
}

impl RestartTrace {
    pub fn final_message_length(&self) -> Option<f64> {
        self.history.last().map(|s| s.message_length)
    }

    /// Largest increase of `I₁` over a descent half-step (`≤ 0` means
    /// monotone). Transitions into a re-seed are skipped.
    pub fn worst_increase(&self) -> f64 {
        self.history
            .windows(2)
            .filter(|w| w[1].kind != HalfStepKind::Reseed)
            .map(|w| w[1].message_length - w[0].message_length)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct FitReport {
    pub code: SmmlCode,
    pub iterations: usize,
    pub best_restart: usize,
    pub restarts: Vec<RestartTrace>,
}

struct Lloyd<'a> {
    grid: &'a DataGrid,
    n: usize,
    m: usize,
    tol: f64,
    max_iter: usize,
}

struct RunOutcome {
    assertions: Vec<NaturalParam>,
    probs: Vec<f64>,
    trace: RestartTrace,
}

impl Lloyd<'_> {
    fn empty_cell(&self, labels: &[usize]) -> Option<usize> {
        let mut counts = vec![0usize; self.m];
        for &c in labels {
            counts[c] += 1;
        }
        counts.iter().position(|&c| c == 0)
    }

    /// Moves an empty cell's assertion onto the worst-covered grid point.
    fn reseed(
        &self,
        cell: usize,
        assertions: &mut [NaturalParam],
        probs: &mut [f64],
        labels: &[usize],
        attempt: usize,
    ) {
        let scores = Scores::new(assertions, probs, self.n);
        let mut counts = vec![0usize; self.m];
        for &c in labels {
            counts[c] += 1;
        }
        let mut ranked: Vec<(f64, usize)> = (0..self.grid.len())
            .filter(|&k| counts[labels[k]] > 1)
            .map(|k| (scores.best(self.grid.point(k)).1, k))
            .collect();
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let Some(&(_, k)) = ranked.get(attempt.min(ranked.len().saturating_sub(1))) else {
            return;
        };
        let x = ExpectationParam::from_slice(self.grid.point(k)).expect("grid points are interior");
        assertions[cell] = theta_from_xi(&x, self.n);
        probs[cell] = probs.iter().cloned().fold(0.0, f64::max);
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|q| *q /= total);
    }

    fn run_from_code(&self, mut assertions: Vec<NaturalParam>, mut probs: Vec<f64>) -> RunOutcome {
        let mut trace = RestartTrace {
            history: Vec::new(),
            iterations: 0,
            converged: false,
            abandoned: false,
            reseeds: 0,
        };
        let mut labels = assign_grid(self.grid, &Scores::new(&assertions, &probs, self.n));
        trace.history.push(HalfStep {
            kind: HalfStepKind::Assign,
            message_length: objective(self.grid, self.n, &labels, &assertions, &probs),
        });
        self.descend(&mut assertions, &mut probs, &mut labels, &mut trace);
        RunOutcome {
            assertions,
            probs,
            trace,
        }
    }

    fn run_from_partition(&self, mut labels: Vec<usize>) -> Option<RunOutcome> {
        let mut trace = RestartTrace {
            history: Vec::new(),
            iterations: 0,
            converged: false,
            abandoned: false,
            reseeds: 0,
        };
        let (mut assertions, mut probs) = solve_blocks(self.grid, self.n, &labels, self.m).ok()?;
        trace.history.push(HalfStep {
            kind: HalfStepKind::Update,
            message_length: objective(self.grid, self.n, &labels, &assertions, &probs),
        });
        labels = assign_grid(self.grid, &Scores::new(&assertions, &probs, self.n));
        trace.history.push(HalfStep {
            kind: HalfStepKind::Assign,
            message_length: objective(self.grid, self.n, &labels, &assertions, &probs),
        });
        self.descend(&mut assertions, &mut probs, &mut labels, &mut trace);
        Some(RunOutcome {
            assertions,
            probs,
            trace,
        })
    }

    fn descend(
        &self,
        assertions: &mut Vec<NaturalParam>,
        probs: &mut Vec<f64>,
        labels: &mut Vec<usize>,
        trace: &mut RestartTrace,
    ) {
        let mut reseeds_in_a_row = 0;
        while trace.iterations < self.max_iter {
            if let Some(cell) = self.empty_cell(labels) {
                if reseeds_in_a_row == 2 {
                    trace.abandoned = true;
                    return;
                }
                self.reseed(cell, assertions, probs, labels, reseeds_in_a_row);
                reseeds_in_a_row += 1;
                trace.reseeds += 1;
                *labels = assign_grid(self.grid, &Scores::new(assertions, probs, self.n));
                trace.history.push(HalfStep {
                    kind: HalfStepKind::Reseed,
                    message_length: objective(self.grid, self.n, labels, assertions, probs),
                });
                continue;
            }
            reseeds_in_a_row = 0;
            trace.iterations += 1;
            let before = trace.final_message_length().unwrap_or(f64::INFINITY);

            let (new_assertions, new_probs) = solve_blocks(self.grid, self.n, labels, self.m)
                .expect("no empty cells at this point");
            *assertions = new_assertions;
            *probs = new_probs;
            trace.history.push(HalfStep {
                kind: HalfStepKind::Update,
                message_length: objective(self.grid, self.n, labels, assertions, probs),
            });

            let new_labels = assign_grid(self.grid, &Scores::new(assertions, probs, self.n));
            let after = objective(self.grid, self.n, &new_labels, assertions, probs);
            trace.history.push(HalfStep {
                kind: HalfStepKind::Assign,
                message_length: after,
            });
            let stable = new_labels == *labels;
            *labels = new_labels;
            if stable || (before - after) <= self.tol * after.abs() {
                trace.converged = true;
                return;
            }
        }
    }

    fn random_start(&self, rng: &mut ChaCha8Rng) -> (Vec<NaturalParam>, Vec<f64>) {
        let total = self.grid.mass();
        let mut chosen: Vec<usize> = Vec::with_capacity(self.m);
        let mut guard = 0;
        while chosen.len() < self.m {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = self.grid.len() - 1;
            for (k, w) in self.grid.weights().iter().enumerate() {
                acc += w;
                if acc >= target {
                    pick = k;
                    break;
                }
            }
            guard += 1;
            if !chosen.contains(&pick) || guard > 100 * self.m {
                chosen.push(pick);
            }
        }
        let assertions = chosen
            .iter()
            .map(|&k| {
                let x = ExpectationParam::from_slice(self.grid.point(k))
                    .expect("grid points are interior");
                theta_from_xi(&x, self.n)
            })
            .collect();
        (assertions, vec![1.0 / self.m as f64; self.m])
    }

    /// Splits the heaviest cell of an `(m-1)`-cell partition in two through
    /// its centroid, along the first coordinate (or the last, if that
    /// leaves one side empty).
    fn split_partition(&self, parent: &[usize]) -> Option<Vec<usize>> {
        let dim = self.grid.dim();
        let parent_m = self.m - 1;
        let mut masses = vec![0.0; parent_m];
        let mut moments = vec![vec![0.0; dim]; parent_m];
        for (k, &c) in parent.iter().enumerate() {
            let w = self.grid.weight(k);
            masses[c] += w;
            for (acc, x) in moments[c].iter_mut().zip(self.grid.point(k)) {
                *acc += w * x;
            }
        }
        let heavy =
            (0..parent_m).fold(0, |best, i| if masses[i] > masses[best] { i } else { best });
        for axis in [0, dim - 1] {
            let cut = moments[heavy][axis] / masses[heavy];
            let labels: Vec<usize> = parent
                .iter()
                .enumerate()
                .map(|(k, &c)| {
                    if c == heavy && self.grid.point(k)[axis] >= cut {
                        parent_m
                    } else {
                        c
                    }
                })
                .collect();
            let moved = labels.iter().filter(|&&c| c == parent_m).count();
            let kept = labels.iter().filter(|&&c| c == heavy).count();
            if moved > 0 && kept > 0 {
                return Some(labels);
            }
        }
        None
    }
}

/// Fits an `m`-cell code by block-coordinate descent with restarts.
///
/// For `m > 1`, restart 0 starts from a split of the best `(m-1)`-cell code
/// (fitted with the same options) and the others from `m` grid points drawn
/// from the marginal. Each restart alternates partition and
/// weight/assertion updates until the partition stops changing, the
/// relative decrease of `I₁` falls below `tol`, or `max_iter` iterations.
/// The restart with the smallest `I₁` wins (lowest index on ties).
pub fn fit_smml(options: &FitOptions, n: usize) -> Result<FitReport> {
    if options.m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    if options.restarts == 0 {
        return Err(Error::InvalidArgument(
            "at least one restart is required".into(),
        ));
    }
    let grid = grid_for(&options.domain, n)?;
    fit_on_grid(options, n, &grid)
}

fn fit_on_grid(options: &FitOptions, n: usize, grid: &DataGrid) -> Result<FitReport> {
    let m = options.m;
    let lloyd = Lloyd {
        grid,
        n,
        m,
        tol: options.tol,
        max_iter: options.max_iter,
    };

    if m == 1 {
        let labels = vec![0; grid.len()];
        let (assertions, probs) = solve_blocks(grid, n, &labels, 1)?;
        let value = objective(grid, n, &labels, &assertions, &probs);
        let trace = RestartTrace {
            history: vec![HalfStep {
                kind: HalfStepKind::Update,
                message_length: value,
            }],
            iterations: 0,
            converged: true,
            abandoned: false,
            reseeds: 0,
        };
        let code =
            SmmlCode::new(assertions, probs, options.domain.clone())?.with_message_length(value);
        return Ok(FitReport {
            code,
            iterations: 0,
            best_restart: 0,
            restarts: vec![trace],
        });
    }

    let parent = fit_on_grid(
        &FitOptions {
            m: m - 1,
            ..options.clone()
        },
        n,
        grid,
    )?;
    let parent_labels = assign_grid(
        grid,
        &Scores::new(parent.code.assertions(), parent.code.coding_probs(), n),
    );

    let mut outcomes: Vec<Option<RunOutcome>> = Vec::with_capacity(options.restarts);
    for r in 0..options.restarts {
        let outcome = if r == 0 {
            lloyd
                .split_partition(&parent_labels)
                .and_then(|labels| lloyd.run_from_partition(labels))
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
            rng.set_stream(((m as u64) << 32) | r as u64);
            let (assertions, probs) = lloyd.random_start(&mut rng);
            Some(lloyd.run_from_code(assertions, probs))
        };
        outcomes.push(outcome);
    }

    let best = outcomes
        .iter()
        .enumerate()
        .filter_map(|(r, o)| o.as_ref().filter(|o| !o.trace.abandoned).map(|o| (r, o)))
        .min_by(|a, b| {
            let la = a.1.trace.final_message_length().unwrap_or(f64::INFINITY);
            let lb = b.1.trace.final_message_length().unwrap_or(f64::INFINITY);
            la.total_cmp(&lb).then(a.0.cmp(&b.0))
        })
        .map(|(r, _)| r)
        .ok_or(Error::EmptyCell(m - 1))?;

    let restarts: Vec<RestartTrace> = outcomes
        .iter()
        .map(|o| match o {
            Some(o) => o.trace.clone(),
            None => RestartTrace {
                history: Vec::new(),
                iterations: 0,
                converged: false,
                abandoned: true,
                reseeds: 0,
            },
        })
        .collect();
    let winner = outcomes.swap_remove(best).expect("winner exists");
    let value = winner
        .trace
        .final_message_length()
        .expect("non-empty history");
    let code = SmmlCode::new(winner.assertions, winner.probs, options.domain.clone())?
        .with_message_length(value);
    Ok(FitReport {
        code,
        iterations: winner.trace.iterations,
        best_restart: best,
        restarts,
    })
}

/// One facet inequality `a·x + b ≤ 0` of a cell, i.e. `λ_i(x) - λ_j(x) ≤ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    pub neighbor: usize,
    pub a: DVector<f64>,
    pub b: f64,
}

/// The convex polytope `U_i = {x : λ_i(x) ≤ λ_j(x) ∀j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CellPolytope {
    pub index: usize,
    pub facets: Vec<Facet>,
}

impl CellPolytope {
    pub fn contains(&self, x: &[f64], slack: f64) -> bool {
        self.facets
            .iter()
            .all(|f| f.a.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + f.b <= slack)
    }
}

pub fn cell_polytope(code: &SmmlCode, i: usize, n: usize) -> CellPolytope {
    let theta_i = &code.assertions[i];
    let log_z_i = log_partition(theta_i, n);
    let log_q_i = code.coding_probs[i].ln();
    let facets = (0..code.m())
        .filter(|&j| j != i)
        .map(|j| {
            let theta_j = &code.assertions[j];
            Facet {
                neighbor: j,
                a: theta_j.as_vector() - theta_i.as_vector(),
                b: -log_q_i + code.coding_probs[j].ln() + log_z_i - log_partition(theta_j, n),
            }
        })
        .collect();
    CellPolytope { index: i, facets }
}

/// Hyperbolic facets of one cell: `(neighbour, plane)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TessellationCell {
    pub index: usize,
    pub planes: Vec<(usize, HyperbolicPlane)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tessellation {
    pub cells: Vec<TessellationCell>,
    /// Facets `(i, j)` whose affine hyperplane misses `Ξ` (or is
    /// degenerate); they bound nothing and are left out.
    pub dropped: Vec<(usize, usize)>,
}

/// The horomap image of the code's partition: each affine facet is carried
/// to a hyperbolic hyperplane in upper half-space coordinates.
pub fn tessellation_hyperbolic(code: &SmmlCode, n: usize) -> Tessellation {
    let mut dropped = Vec::new();
    let cells = (0..code.m())
        .map(|i| {
            let poly = cell_polytope(code, i, n);
            let planes = poly
                .facets
                .into_iter()
                .filter_map(|f| {
                    let plane = AffineFunctional::new(f.a, f.b)
                        .and_then(|l| affine_to_hyperbolic_plane(&l));
                    match plane {
                        Ok(plane) => Some((f.neighbor, plane)),
                        Err(_) => {
                            dropped.push((i, f.neighbor));
                            None
                        }
                    }
                })
                .collect();
            TessellationCell { index: i, planes }
        })
        .collect();
    Tessellation { cells, dropped }
}
