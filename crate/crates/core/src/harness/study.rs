//! Convergence studies over a ladder of time steps or sample counts.

use serde::Serialize;

use super::config::{ErrorMode, ExperimentConfig, ObservableSpec, SamplerKind, TimeReference};
use super::estimate::{generating_vector, mc_estimate, qmc_estimate, EstimatorResult, Problem};
use super::fit::{fit_rate, FitAxis, RateFit};
use super::reference::{reference_problem, reference_solution, ReferenceSolution};
use crate::error::{Error, Result};
use crate::lattice::{random_shifts, GeneratingVector};
use crate::observables::{l2_relative_error, nearest_node, ObservableField, ObservableKind};
use crate::spectral::{real_l2_norm, TorusGrid};

/// Relative errors of `S` and `J` at one ladder point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StudyRow {
    /// `τ` for time studies, `N` for sample studies.
    pub x: f64,
    pub err_s: f64,
    pub err_j: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Study {
    pub axis: FitAxis,
    pub error_mode: ErrorMode,
    pub rows: Vec<StudyRow>,
    pub fit_s: Option<RateFit>,
    pub fit_j: Option<RateFit>,
    /// Reasons a fit was not produced.
    pub notes: Vec<String>,
}

impl Study {
    fn finish(axis: FitAxis, error_mode: ErrorMode, rows: Vec<StudyRow>, window: usize) -> Self {
        let mut notes = Vec::new();
        let mut fit = |name: &str, pick: fn(&StudyRow) -> f64| {
            let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.x, pick(r))).collect();
            match fit_rate(&pts, Some(window), axis, None) {
                Ok(f) => Some(f),
                Err(e) => {
                    log::warn!("no rate for {name}: {e}");
                    notes.push(format!("{name}: {e}"));
                    None
                }
            }
        };
        let fit_s = fit("S", |r| r.err_s);
        let fit_j = fit("J", |r| r.err_j);
        Self {
            axis,
            error_mode,
            rows,
            fit_s,
            fit_j,
            notes,
        }
    }
}

/// Relative errors of an estimate's mean against a reference expectation.
pub fn errors_against(
    result: &EstimatorResult,
    grid: &TorusGrid,
    reference: &ReferenceSolution,
) -> Result<(f64, f64)> {
    let (ref_s, ref_j) = reference.on_grid(grid)?;
    let (s, j) = result.split(&result.mean);
    match result.observable {
        ObservableSpec::Field => {
            let s = ObservableField::new(grid, s.to_vec(), ObservableKind::PositionDensity)?;
            let j = ObservableField::new(grid, j.to_vec(), ObservableKind::CurrentDensity)?;
            Ok((
                l2_relative_error(&s, &ref_s)?,
                l2_relative_error(&j, &ref_j)?,
            ))
        }
        ObservableSpec::Point(x0) => {
            let k = nearest_node(grid, x0)?;
            let rel = |v: f64, r: f64| {
                if r == 0.0 {
                    Err(Error::Domain(
                        "reference value is zero at the evaluation point".into(),
                    ))
                } else {
                    Ok((v - r).abs() / r.abs())
                }
            };
            Ok((rel(s[0], ref_s.values()[k])?, rel(j[0], ref_j.values()[k])?))
        }
    }
}

/// RMS error of the mean estimated from the per-shift values:
/// `sqrt(mean_k ‖Q_k − ref‖²) / (√R ‖ref‖)`, or the pointwise analogue.
pub fn rms_errors_against(
    result: &EstimatorResult,
    grid: &TorusGrid,
    reference: &ReferenceSolution,
) -> Result<(f64, f64)> {
    let (ref_s, ref_j) = reference.on_grid(grid)?;
    let (ref_s, ref_j): (Vec<f64>, Vec<f64>) = match result.observable {
        ObservableSpec::Field => (ref_s.values().to_vec(), ref_j.values().to_vec()),
        ObservableSpec::Point(x0) => {
            let k = nearest_node(grid, x0)?;
            (vec![ref_s.values()[k]], vec![ref_j.values()[k]])
        }
    };
    let norm = |v: &[f64]| match result.observable {
        ObservableSpec::Field => real_l2_norm(grid, v),
        ObservableSpec::Point(_) => v[0].abs(),
    };
    let r = result.per_shift.len() as f64;
    let rms = |pick: fn(&EstimatorResult, &[f64]) -> Vec<f64>, reference: &[f64]| {
        let den = norm(reference);
        if den == 0.0 {
            return Err(Error::Domain("reference is zero".into()));
        }
        let sq: Vec<f64> = result
            .per_shift
            .iter()
            .map(|q| {
                let diff: Vec<f64> = pick(result, q)
                    .iter()
                    .zip(reference)
                    .map(|(a, b)| a - b)
                    .collect();
                norm(&diff).powi(2)
            })
            .collect();
        Ok((crate::sum::compensated_sum(&sq) / r).sqrt() / (r.sqrt() * den))
    };
    Ok((
        rms(|res, q| res.split(q).0.to_vec(), &ref_s)?,
        rms(|res, q| res.split(q).1.to_vec(), &ref_j)?,
    ))
}

/// Standard error relative to the mean: `‖SE‖/‖mean‖` in the discrete L² norm
/// for fields, `SE/|mean|` at a point.
pub fn relative_standard_errors(result: &EstimatorResult, grid: &TorusGrid) -> Result<(f64, f64)> {
    let se = result
        .std_error
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("standard errors need R >= 2".into()))?;
    let (se_s, se_j) = result.split(se);
    let (m_s, m_j) = result.split(&result.mean);
    let rel = |e: &[f64], m: &[f64]| {
        let (num, den) = match result.observable {
            ObservableSpec::Field => (real_l2_norm(grid, e), real_l2_norm(grid, m)),
            ObservableSpec::Point(_) => (e[0], m[0].abs()),
        };
        if den == 0.0 {
            Err(Error::Domain("estimated mean is zero".into()))
        } else {
            Ok(num / den)
        }
    };
    Ok((rel(se_s, m_s)?, rel(se_j, m_j)?))
}

fn estimate_with(
    cfg: &ExperimentConfig,
    problem: &Problem,
    n: usize,
    gv: Option<&GeneratingVector>,
) -> Result<EstimatorResult> {
    match cfg.sampler {
        SamplerKind::Qmc => {
            let owned;
            let gv = match gv {
                Some(g) => g,
                None => {
                    owned = generating_vector(cfg, n)?;
                    &owned
                }
            };
            qmc_estimate(problem, gv, &random_shifts(cfg.r, cfg.m, cfg.seed)?)
        }
        SamplerKind::Mc => mc_estimate(problem, n, cfg.r, cfg.seed),
    }
}

/// The study's sampler (same `N`, points, shifts and seed) applied to the fine
/// reference discretization.
pub fn sampled_reference(
    cfg: &ExperimentConfig,
    gv: Option<&GeneratingVector>,
) -> Result<ReferenceSolution> {
    let problem = reference_problem(cfg)?;
    let grid = problem.grid().clone();
    let result = estimate_with(cfg, &problem, cfg.n, gv)?;
    let (s, j) = result.split(&result.mean);
    Ok(ReferenceSolution {
        s: ObservableField::new(&grid, s.to_vec(), ObservableKind::PositionDensity)?,
        j: ObservableField::new(&grid, j.to_vec(), ObservableKind::CurrentDensity)?,
        method: TimeReference::Sampled,
        grid: cfg.ref_grid,
        tau: cfg.ref_tau,
        nodes_per_dim: 0,
        nodes_used: cfg.n * cfg.r,
        dropped_weight: 0.0,
    })
}

/// Reference for a time study as selected by `cfg.time_reference`.
pub fn time_study_reference(cfg: &ExperimentConfig) -> Result<ReferenceSolution> {
    match cfg.time_reference {
        TimeReference::Collocation => reference_solution(cfg),
        TimeReference::Sampled => {
            let gv = match cfg.sampler {
                SamplerKind::Qmc => Some(generating_vector(cfg, cfg.n)?),
                SamplerKind::Mc => None,
            };
            sampled_reference(cfg, gv.as_ref())
        }
    }
}

/// Errors against `reference` for each `τ` in `cfg.tau_ladder`, with the
/// sampler, `N`, `R` and seed held fixed.
pub fn run_time_study(cfg: &ExperimentConfig, reference: &ReferenceSolution) -> Result<Study> {
    cfg.validate()?;
    let gv = match cfg.sampler {
        SamplerKind::Qmc => Some(generating_vector(cfg, cfg.n)?),
        SamplerKind::Mc => None,
    };
    let grid = TorusGrid::new(cfg.grid)?;
    let mut rows = Vec::with_capacity(cfg.tau_ladder.len());
    for &tau in &cfg.tau_ladder {
        let step_cfg = ExperimentConfig { tau, ..cfg.clone() };
        let problem = Problem::from_config(&step_cfg)?.with_fused_steps(true);
        let result = estimate_with(&step_cfg, &problem, cfg.n, gv.as_ref())?;
        let (err_s, err_j) = errors_against(&result, &grid, reference)?;
        log::info!("tau = {tau}: err_S = {err_s:e}, err_J = {err_j:e}");
        rows.push(StudyRow {
            x: tau,
            err_s,
            err_j,
        });
    }
    Ok(Study::finish(
        FitAxis::TimeStep,
        ErrorMode::L2,
        rows,
        cfg.fit_window,
    ))
}

/// Errors for each `N` in `cfg.n_ladder` at fixed `τ` and grid: against
/// `reference` in the L² modes, or the relative standard error otherwise.
pub fn run_sample_study(
    cfg: &ExperimentConfig,
    reference: Option<&ReferenceSolution>,
) -> Result<Study> {
    cfg.validate()?;
    let grid = TorusGrid::new(cfg.grid)?;
    let problem = Problem::from_config(cfg)?.with_fused_steps(true);
    let mut rows = Vec::with_capacity(cfg.n_ladder.len());
    for &n in &cfg.n_ladder {
        let result = estimate_with(cfg, &problem, n, None)?;
        let need = || Error::Config(format!("{} error mode needs a reference", cfg.error_mode));
        let (err_s, err_j) = match cfg.error_mode {
            ErrorMode::L2 => errors_against(&result, &grid, reference.ok_or_else(need)?)?,
            ErrorMode::L2Rms => rms_errors_against(&result, &grid, reference.ok_or_else(need)?)?,
            ErrorMode::StandardError => relative_standard_errors(&result, &grid)?,
        };
        log::info!("N = {n}: err_S = {err_s:e}, err_J = {err_j:e}");
        rows.push(StudyRow {
            x: n as f64,
            err_s,
            err_j,
        });
    }
    Ok(Study::finish(
        FitAxis::Samples,
        cfg.error_mode,
        rows,
        cfg.fit_window,
    ))
}

/// Reference settings matched to the study's own `τ` and grid, so that sample
/// studies measure only the sampling error.
pub fn matched_reference_config(cfg: &ExperimentConfig) -> ExperimentConfig {
    ExperimentConfig {
        ref_tau: cfg.tau,
        ref_grid: cfg.grid,
        ..cfg.clone()
    }
}
