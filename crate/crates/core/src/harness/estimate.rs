//! Per-sample solves and the shifted-lattice / Monte Carlo estimators.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, ObservableSpec, SamplerKind};
use crate::error::{Error, Result};
use crate::lattice::{
    build_weight_spec, cbc_construct, mc_point_into, regularize_p, GaussianExpKernel,
    GeneratingVector, ShiftSet,
};
use crate::normal;
use crate::observables::{current_into, density_into, nearest_node};
use crate::potential::{check_summability, decay_sequences, infer_p, GridPotential, KLPotential};
use crate::spectral::{sample_initial, InitialData, TorusGrid};
use crate::splitting::{Propagator, SplittingScheme};
use crate::sum::{compensated_mean, VectorSum};

/// Samples per work unit. Fixed so the reduction order never depends on the
/// thread count.
const CHUNK: usize = 32;

/// One fully specified sample-solve problem: `ξ ↦ (S, J)` at time `T`.
pub struct Problem {
    grid: TorusGrid,
    potential: GridPotential,
    scheme: SplittingScheme,
    tau: f64,
    nsteps: usize,
    initial: Vec<Complex64>,
    observable: ObservableSpec,
    point: Option<usize>,
    fused: bool,
}

impl Problem {
    pub fn new(
        grid: &TorusGrid,
        potential: &KLPotential,
        scheme: &SplittingScheme,
        tau: f64,
        nsteps: usize,
        initial: &InitialData,
        observable: ObservableSpec,
    ) -> Result<Self> {
        if nsteps > 0 && !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "tau must be positive, got {tau}"
            )));
        }
        let point = match observable {
            ObservableSpec::Field => None,
            ObservableSpec::Point(x0) => Some(nearest_node(grid, x0)?),
        };
        Ok(Self {
            grid: grid.clone(),
            potential: potential.on_grid(grid)?,
            scheme: scheme.clone(),
            tau,
            nsteps,
            initial: sample_initial(grid, initial)?.into_values(),
            observable,
            point,
            fused: false,
        })
    }

    /// Problem described by `cfg` at its own `tau` and grid.
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        Self::new(
            &TorusGrid::new(cfg.grid)?,
            &cfg.potential()?,
            &cfg.scheme()?,
            cfg.tau,
            cfg.steps_for(cfg.tau)?,
            &cfg.initial_data()?,
            cfg.observable,
        )
    }

    /// Merge adjacent kinetic stages across steps (identical up to roundoff).
    pub fn with_fused_steps(mut self, fused: bool) -> Self {
        self.fused = fused;
        self
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.potential.dim()
    }

    pub fn observable(&self) -> ObservableSpec {
        self.observable
    }

    /// Length of the output vector: `[S..., J...]` for fields, `[S(x0), J(x0)]`
    /// for a point.
    pub fn output_len(&self) -> usize {
        match self.point {
            None => 2 * self.grid.size(),
            Some(_) => 2,
        }
    }

    pub fn worker(&self) -> Worker<'_> {
        let m = self.grid.size();
        Worker {
            problem: self,
            propagator: Propagator::new(&self.grid, &self.scheme, self.tau),
            psi: vec![Complex64::default(); m],
            potential: vec![0.0; m],
            work: vec![Complex64::default(); m],
            scratch: vec![Complex64::default(); self.grid.scratch_len()],
            s: vec![0.0; m],
            j: vec![0.0; m],
        }
    }
}

/// Reusable buffers for solving one sample at a time.
pub struct Worker<'a> {
    problem: &'a Problem,
    propagator: Propagator,
    psi: Vec<Complex64>,
    potential: Vec<f64>,
    work: Vec<Complex64>,
    scratch: Vec<Complex64>,
    s: Vec<f64>,
    j: Vec<f64>,
}

impl Worker<'_> {
    /// Solves to `T` for parameter `xi`; returns the final state.
    pub fn solve(&mut self, xi: &[f64]) -> Result<&[Complex64]> {
        let p = self.problem;
        p.potential.evaluate_into(xi, &mut self.potential)?;
        self.psi.copy_from_slice(&p.initial);
        if p.fused {
            self.propagator
                .evolve_fused(&mut self.psi, &self.potential, p.nsteps)?;
        } else {
            self.propagator
                .evolve(&mut self.psi, &self.potential, p.nsteps)?;
        }
        Ok(&self.psi)
    }

    /// Solves and writes the observable vector into `out`.
    pub fn observe(&mut self, xi: &[f64], out: &mut [f64]) -> Result<()> {
        self.solve(xi)?;
        let p = self.problem;
        density_into(&self.psi, &mut self.s);
        current_into(
            &p.grid,
            &self.psi,
            &mut self.work,
            &mut self.scratch,
            &mut self.j,
        );
        match p.point {
            None => {
                let m = p.grid.size();
                out[..m].copy_from_slice(&self.s);
                out[m..].copy_from_slice(&self.j);
            }
            Some(k) => {
                out[0] = self.s[k];
                out[1] = self.j[k];
            }
        }
        Ok(())
    }
}

/// Unbiased standard error of the mean of `values`:
/// `sqrt(Σ (Q_k - Q̄)² / (R (R - 1)))`.
pub fn standard_error(values: &[f64]) -> Result<f64> {
    let r = values.len();
    if r < 2 {
        return Err(Error::InvalidArgument(format!(
            "standard error needs at least 2 values, got {r}"
        )));
    }
    let mean = compensated_mean(values);
    let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    Ok((crate::sum::compensated_sum(&dev) / (r * (r - 1)) as f64).sqrt())
}

/// Per-shift (or per-batch) estimates and their summary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimatorResult {
    pub sampler: SamplerKind,
    pub n: usize,
    pub r: usize,
    pub observable: ObservableSpec,
    /// Grid size of the field layout (`[S..., J...]`), or 0 for point output.
    pub grid: usize,
    pub per_shift: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    /// Componentwise standard error; `None` when `R < 2`.
    pub std_error: Option<Vec<f64>>,
    pub clamped: usize,
}

impl EstimatorResult {
    fn from_per_shift(
        sampler: SamplerKind,
        problem: &Problem,
        n: usize,
        per_shift: Vec<Vec<f64>>,
        clamped: usize,
    ) -> Result<Self> {
        let r = per_shift.len();
        let len = problem.output_len();
        let mut mean = Vec::with_capacity(len);
        let mut se = Vec::with_capacity(len);
        let mut column = vec![0.0; r];
        for i in 0..len {
            for (c, q) in column.iter_mut().zip(&per_shift) {
                *c = q[i];
            }
            mean.push(compensated_mean(&column));
            if r >= 2 {
                se.push(standard_error(&column)?);
            }
        }
        Ok(Self {
            sampler,
            n,
            r,
            observable: problem.observable,
            grid: match problem.observable {
                ObservableSpec::Field => problem.grid.size(),
                ObservableSpec::Point(_) => 0,
            },
            per_shift,
            mean,
            std_error: (r >= 2).then_some(se),
            clamped,
        })
    }

    /// `(S, J)` parts of a vector in this result's layout.
    pub fn split<'v>(&self, v: &'v [f64]) -> (&'v [f64], &'v [f64]) {
        v.split_at(v.len() / 2)
    }
}

/// `(1/N) Σ_j F(ξ_j)` for each of `r` groups, with `point(k, j, u)` filling
/// sample `j` of group `k` and returning the number of clamped coordinates.
/// Writes sample `(group, index)` into the buffer; returns the clamp count.
type PointFn<'a> = dyn Fn(usize, usize, &mut [f64]) -> Result<usize> + Sync + 'a;

fn grouped_means(
    problem: &Problem,
    r: usize,
    n: usize,
    point: &PointFn,
) -> Result<(Vec<Vec<f64>>, usize)> {
    let len = problem.output_len();
    let m = problem.dim();
    let chunks = n.div_ceil(CHUNK);
    let mut per_shift = Vec::with_capacity(r);
    let mut clamped = 0;
    for k in 0..r {
        let partials: Vec<(Vec<f64>, usize)> = (0..chunks)
            .into_par_iter()
            .map_init(
                || (problem.worker(), vec![0.0; m], vec![0.0; len]),
                |(worker, xi, out), c| {
                    let mut acc = VectorSum::new(len);
                    let mut clamp = 0;
                    for j in c * CHUNK..((c + 1) * CHUNK).min(n) {
                        clamp += point(k, j, xi)?;
                        worker.observe(xi, out)?;
                        if out.iter().any(|v| !v.is_finite()) {
                            log::error!("non-finite observable: shift {k}, sample {j}, xi {xi:?}");
                            return Err(Error::NonFiniteObservable {
                                shift: k,
                                sample: j,
                                xi: xi.clone(),
                            });
                        }
                        acc.add(out);
                    }
                    Ok((acc.sum(), clamp))
                },
            )
            .collect::<Result<_>>()?;
        let mut total = VectorSum::new(len);
        for (partial, clamp) in &partials {
            total.add(partial);
            clamped += clamp;
        }
        let inv_n = 1.0 / n as f64;
        per_shift.push(total.sum().into_iter().map(|v| v * inv_n).collect());
    }
    Ok((per_shift, clamped))
}

/// Randomly shifted lattice estimator: for each shift `Δ_k` the equal-weight
/// average over `frac(j z / N + Δ_k)`, `j = 1..=N`, mapped through `Φ^{-1}`.
pub fn qmc_estimate(
    problem: &Problem,
    gv: &GeneratingVector,
    shifts: &ShiftSet,
) -> Result<EstimatorResult> {
    let m = problem.dim();
    if gv.dim() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: gv.dim(),
        });
    }
    if let Some(s) = shifts.shifts.iter().find(|s| s.len() != m) {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: s.len(),
        });
    }
    let n = gv.n();
    let point = |k: usize, j: usize, xi: &mut [f64]| -> Result<usize> {
        let mut u = [0.0f64; 64];
        let mut heap;
        let u: &mut [f64] = if m <= 64 {
            &mut u[..m]
        } else {
            heap = vec![0.0; m];
            &mut heap
        };
        gv.point_into(j + 1, &shifts.shifts[k], u);
        normal::map_point_into(u, xi)
    };
    let (per_shift, clamped) = grouped_means(problem, shifts.shifts.len(), n, &point)?;
    if clamped > 0 {
        log::warn!("clamped {clamped} lattice coordinates at 0 or 1");
    }
    EstimatorResult::from_per_shift(SamplerKind::Qmc, problem, n, per_shift, clamped)
}

/// Plain Monte Carlo with `r` independent batches of `n` samples; sample `j`
/// of batch `k` is stream index `k n + j`.
pub fn mc_estimate(problem: &Problem, n: usize, r: usize, seed: u64) -> Result<EstimatorResult> {
    if n == 0 || r == 0 {
        return Err(Error::InvalidArgument("N and R must be at least 1".into()));
    }
    let point = |k: usize, j: usize, xi: &mut [f64]| -> Result<usize> {
        mc_point_into(seed, (k * n + j) as u64, xi)?;
        Ok(0)
    };
    let (per_shift, _) = grouped_means(problem, r, n, &point)?;
    EstimatorResult::from_per_shift(SamplerKind::Mc, problem, n, per_shift, 0)
}

/// Generating vector for `n` points: loaded from file or built by CBC.
pub fn generating_vector(cfg: &ExperimentConfig, n: usize) -> Result<GeneratingVector> {
    if let Some(path) = cfg.generator_file(n) {
        let gv = GeneratingVector::read(&path)?;
        if gv.n() != n {
            return Err(Error::Config(format!(
                "{} holds a rule for N = {}, expected N = {n}",
                path.display(),
                gv.n()
            )));
        }
        return gv.truncate(cfg.m);
    }
    let pot = cfg.potential()?;
    let report = decay_sequences(&pot)?;
    let p = cfg
        .p
        .unwrap_or_else(|| regularize_p(infer_p(&report), cfg.delta));
    let report = check_summability(&report, p)?;
    if report.satisfied == Some(false) {
        log::warn!("decay sequence not {p}-summable; CBC weights may be poor");
    }
    let spec = build_weight_spec(&report.b, p, cfg.delta, cfg.t_final)?;
    let kernel = GaussianExpKernel::new(spec.theta.clone())?;
    Ok(cbc_construct(cfg.m, n, &spec.pod_weights(), &kernel)?.vector)
}

/// Runs the configured sampler with the configured `N` and `R`.
pub fn run_estimate(cfg: &ExperimentConfig) -> Result<EstimatorResult> {
    cfg.validate()?;
    let problem = Problem::from_config(cfg)?;
    match cfg.sampler {
        SamplerKind::Qmc => {
            let gv = generating_vector(cfg, cfg.n)?;
            let shifts = crate::lattice::random_shifts(cfg.r, cfg.m, cfg.seed)?;
            qmc_estimate(&problem, &gv, &shifts)
        }
        SamplerKind::Mc => mc_estimate(&problem, cfg.n, cfg.r, cfg.seed),
    }
}
