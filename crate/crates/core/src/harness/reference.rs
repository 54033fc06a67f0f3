//! Reference expectations by tensor-product Gauss–Hermite collocation of fine
//! solves.

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, ObservableSpec, TimeReference};
use super::estimate::Problem;
use crate::error::{Error, Result};
use crate::observables::{ObservableField, ObservableKind};
use crate::quadrature::GaussHermite;
use crate::spectral::TorusGrid;
use crate::sum::{compensated_sum, VectorSum};

/// Largest stochastic dimension accepted for tensor-grid references.
pub const MAX_REFERENCE_DIM: usize = 4;

/// Tensor nodes whose product weight falls below this are skipped.
pub const PRUNE_THRESHOLD: f64 = 1e-14;

const CHUNK: usize = 16;

/// Product rule `⊗ gh` in `m` dimensions keeping nodes with weight
/// `>= threshold`. Returns nodes, weights renormalized to sum to one, and the
/// discarded weight before renormalization.
pub fn tensor_rule(gh: &GaussHermite, m: usize, threshold: f64) -> (Vec<Vec<f64>>, Vec<f64>, f64) {
    let mut nodes = vec![Vec::new()];
    let mut weights = vec![1.0];
    for _ in 0..m {
        let mut next_nodes = Vec::new();
        let mut next_weights = Vec::new();
        for (node, w) in nodes.iter().zip(&weights) {
            for (x, v) in gh.nodes.iter().zip(&gh.weights) {
                let mut nn = node.clone();
                nn.push(*x);
                next_nodes.push(nn);
                next_weights.push(w * v);
            }
        }
        nodes = next_nodes;
        weights = next_weights;
    }
    let mut dropped = Vec::new();
    let mut kept_nodes = Vec::new();
    let mut kept_weights = Vec::new();
    for (node, w) in nodes.into_iter().zip(weights) {
        if w >= threshold {
            kept_nodes.push(node);
            kept_weights.push(w);
        } else {
            dropped.push(w);
        }
    }
    let total = compensated_sum(&kept_weights);
    for w in &mut kept_weights {
        *w /= total;
    }
    (kept_nodes, kept_weights, compensated_sum(&dropped))
}

/// Expected `S` and `J` fields of the fine reference problem.
#[derive(Clone, Debug, Serialize)]
pub struct ReferenceSolution {
    #[serde(skip)]
    pub s: ObservableField,
    #[serde(skip)]
    pub j: ObservableField,
    pub method: TimeReference,
    pub grid: usize,
    pub tau: f64,
    /// Gauss–Hermite nodes per dimension (0 for sampled references).
    pub nodes_per_dim: usize,
    /// Number of fine solves.
    pub nodes_used: usize,
    pub dropped_weight: f64,
}

impl ReferenceSolution {
    /// `(S, J)` sampled at the nodes of `grid` (which must divide the reference grid).
    pub fn on_grid(&self, grid: &TorusGrid) -> Result<(ObservableField, ObservableField)> {
        Ok((self.s.restrict(grid)?, self.j.restrict(grid)?))
    }
}

/// Weighted sum `Σ w_i F(ξ_i)` of the field observable, reduced in node order.
pub fn collocate(problem: &Problem, nodes: &[Vec<f64>], weights: &[f64]) -> Result<Vec<f64>> {
    let len = problem.output_len();
    let partials: Vec<Vec<f64>> = nodes
        .par_chunks(CHUNK)
        .zip(weights.par_chunks(CHUNK))
        .map_init(
            || (problem.worker(), vec![0.0; len]),
            |(worker, out), (xs, ws)| {
                let mut acc = VectorSum::new(len);
                for (xi, w) in xs.iter().zip(ws) {
                    worker.observe(xi, out)?;
                    if out.iter().any(|v| !v.is_finite()) {
                        return Err(Error::NonFinite(format!("reference solve at {xi:?}")));
                    }
                    acc.add_scaled(out, *w);
                }
                Ok(acc.sum())
            },
        )
        .collect::<Result<_>>()?;
    let mut total = VectorSum::new(len);
    for p in &partials {
        total.add(p);
    }
    Ok(total.sum())
}

/// Field-observable Strang problem on `ref_grid` with steps of size `ref_tau`.
pub fn reference_problem(cfg: &ExperimentConfig) -> Result<Problem> {
    Ok(Problem::new(
        &TorusGrid::new(cfg.ref_grid)?,
        &cfg.potential()?,
        &crate::splitting::strang_scheme(),
        cfg.ref_tau,
        cfg.steps_for(cfg.ref_tau)?,
        &cfg.initial_data()?,
        ObservableSpec::Field,
    )?
    .with_fused_steps(true))
}

/// Reference `E[S]`, `E[J]` on the grid `ref_grid` with Strang steps of size
/// `ref_tau` and `ref_nodes` Gauss–Hermite nodes per dimension.
pub fn reference_solution(cfg: &ExperimentConfig) -> Result<ReferenceSolution> {
    if cfg.m > MAX_REFERENCE_DIM {
        return Err(Error::ReferenceTooLarge { m: cfg.m });
    }
    let grid = TorusGrid::new(cfg.ref_grid)?;
    let problem = reference_problem(cfg)?;
    let gh = GaussHermite::new(cfg.ref_nodes)?;
    let (nodes, weights, dropped) = tensor_rule(&gh, cfg.m, PRUNE_THRESHOLD);
    log::info!(
        "reference: {} collocation nodes, M = {}, tau = {}",
        nodes.len(),
        cfg.ref_grid,
        cfg.ref_tau
    );
    let mean = collocate(&problem, &nodes, &weights)?;
    let (s, j) = mean.split_at(grid.size());
    Ok(ReferenceSolution {
        s: ObservableField::new(&grid, s.to_vec(), ObservableKind::PositionDensity)?,
        j: ObservableField::new(&grid, j.to_vec(), ObservableKind::CurrentDensity)?,
        method: TimeReference::Collocation,
        grid: cfg.ref_grid,
        tau: cfg.ref_tau,
        nodes_per_dim: cfg.ref_nodes,
        nodes_used: nodes.len(),
        dropped_weight: dropped,
    })
}
