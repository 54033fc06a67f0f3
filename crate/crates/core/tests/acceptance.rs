//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and a
//! summary. Failures are reported, not fatal, unless `QMCTS_ACCEPTANCE_STRICT`
//! is set, in which case any failure exits nonzero. Pass criterion numbers as
//! arguments to run a subset, e.g. `cargo test --release --test acceptance -- 1 9 11`.

mod common;

use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;

use qmcts::harness::output::emit_study;
use qmcts::harness::output::{emit_estimate, write_table};
use qmcts::harness::{
    generating_vector, matched_reference_config, mc_estimate, qmc_estimate, reference_solution,
    run_sample_study, run_time_study, standard_error, time_study_reference, ErrorMode,
    ExperimentConfig, ObservableSpec, Problem, ReferenceSolution, SamplerKind, Study,
    TimeReference,
};
use qmcts::lattice::points::gcd;
use qmcts::lattice::{
    build_weight_spec, cbc_construct, random_shifts, GaussianExpKernel, KernelProvider, PodWeights,
    ProductCubeKernel,
};
use qmcts::normal::{cdf, inv_cdf};
use qmcts::observables::{current_density, position_density};
use qmcts::potential::{build_cosine_potential, decay_sequences, evaluate};
use qmcts::spectral::{discrete_l2_norm, sample_initial, InitialData, TorusGrid, WaveField};
use qmcts::splitting::{lie_scheme, propagate, strang_scheme, Propagator};
use qmcts::Complex64;

type Criterion = fn() -> qmcts::Result<Check>;

struct Check {
    pass: bool,
    detail: String,
}

impl Check {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }

    fn error(e: qmcts::Error) -> Self {
        Self::new(false, format!("error: {e}"))
    }
}

fn slope_s(study: &Study) -> Option<f64> {
    study.fit_s.as_ref().map(|f| f.slope)
}

fn slope_j(study: &Study) -> Option<f64> {
    study.fit_j.as_ref().map(|f| f.slope)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("none".into(), |s| format!("{s:.4}"))
}

fn in_band(v: Option<f64>, lo: f64, hi: f64) -> bool {
    v.is_some_and(|s| (lo..=hi).contains(&s))
}

fn rows(study: &Study) -> String {
    study
        .rows
        .iter()
        .map(|r| format!("{:.4e}:{:.3e}/{:.3e}", r.x, r.err_s, r.err_j))
        .collect::<Vec<_>>()
        .join(" ")
}

// 1. Norm drift over every step of one sample trajectory.
fn unitarity() -> qmcts::Result<Check> {
    let grid = TorusGrid::new(128)?;
    let pot = build_cosine_potential(4.5, 4, 1.0)?;
    let mut worst: f64 = 0.0;
    for xi in [[0.0; 4], [1.3, -0.4, 2.2, -1.7], [-3.0, 2.5, 0.1, 0.9]] {
        let v = evaluate(&pot, &xi, &grid)?;
        let f = sample_initial(&grid, &InitialData::Gaussian)?;
        let n0 = discrete_l2_norm(&f);
        let mut values = f.values().to_vec();
        let mut prop = Propagator::new(&grid, &strang_scheme(), 1e-3);
        for _ in 0..1000 {
            prop.evolve(&mut values, &v, 1)?;
            let n = discrete_l2_norm(&WaveField::new(&grid, values.clone())?);
            worst = worst.max((n / n0 - 1.0).abs());
        }
    }
    Ok(Check::new(
        worst < 1e-10,
        format!("max relative norm drift {worst:.2e} (< 1e-10) over 1000 steps, 3 samples"),
    ))
}

fn time_study_config(scheme: &str) -> ExperimentConfig {
    ExperimentConfig {
        m: 4,
        alpha: 4.5,
        grid: 128,
        scheme: scheme.into(),
        t_final: 1.0,
        sampler: SamplerKind::Qmc,
        n: 1 << 12,
        r: 8,
        ref_tau: 1e-4,
        ref_grid: 256,
        ref_nodes: 20,
        time_reference: TimeReference::Sampled,
        tau_ladder: vec![
            1.0 / 40.0,
            1.0 / 80.0,
            1.0 / 160.0,
            1.0 / 320.0,
            1.0 / 640.0,
        ],
        ..Default::default()
    }
}

// 2 and 3. Temporal order of Lie and Strang against the same QMC estimator
// applied to the fine discretization (the sampling error cancels).
fn temporal_order(
    scheme: &str,
    lo: f64,
    hi: f64,
    reference: &ReferenceSolution,
) -> qmcts::Result<Check> {
    let cfg = time_study_config(scheme);
    let study = run_time_study(&cfg, reference)?;
    let (s, j) = (slope_s(&study), slope_j(&study));
    Ok(Check::new(
        in_band(s, lo, hi) && in_band(j, lo, hi),
        format!(
            "{scheme}: slope S {} J {} (band [{lo}, {hi}], last {} points); tau:errS/errJ {}",
            fmt_opt(s),
            fmt_opt(j),
            cfg.fit_window,
            rows(&study)
        ),
    ))
}

fn sample_l2_config(sampler: SamplerKind) -> ExperimentConfig {
    ExperimentConfig {
        m: 4,
        alpha: 4.5,
        grid: 128,
        scheme: "strang".into(),
        tau: 1e-3,
        t_final: 1.0,
        sampler,
        r: 16,
        n_ladder: (8..=13).map(|k| 1usize << k).collect(),
        error_mode: ErrorMode::L2Rms,
        ..Default::default()
    }
}

// 4 and 5. Sample-size convergence of the RMS L² error, QMC and MC.
fn sample_rate(
    sampler: SamplerKind,
    reference: &ReferenceSolution,
    accept: impl Fn(f64) -> bool,
    band: &str,
) -> qmcts::Result<Check> {
    let cfg = sample_l2_config(sampler);
    let study = run_sample_study(&cfg, Some(reference))?;
    let s = slope_s(&study);
    Ok(Check::new(
        s.is_some_and(accept),
        format!(
            "{sampler}: slope S {} ({band}), J {}; N:errS/errJ {}",
            fmt_opt(s),
            fmt_opt(slope_j(&study)),
            rows(&study)
        ),
    ))
}

fn se_config(alpha: f64, m: usize) -> ExperimentConfig {
    ExperimentConfig {
        m,
        alpha,
        grid: 128,
        scheme: "lie".into(),
        tau: 1e-3,
        t_final: 1.0,
        sampler: SamplerKind::Qmc,
        r: 16,
        n_ladder: (8..=12).map(|k| 1usize << k).collect(),
        error_mode: ErrorMode::StandardError,
        observable: ObservableSpec::Point(PI / 4.0),
        ..Default::default()
    }
}

// 6. Standard errors nearly independent of the truncation dimension.
fn dimension_independence() -> qmcts::Result<Check> {
    let studies: Vec<(usize, Study)> = [8, 12, 16]
        .into_iter()
        .map(|m| Ok((m, run_sample_study(&se_config(4.5, m), None)?)))
        .collect::<qmcts::Result<_>>()?;
    let mut worst_ratio: f64 = 1.0;
    for i in 0..studies[0].1.rows.len() {
        let errs: Vec<f64> = studies.iter().map(|(_, s)| s.rows[i].err_s).collect();
        let max = errs.iter().copied().fold(0.0, f64::max);
        let min = errs.iter().copied().fold(f64::INFINITY, f64::min);
        worst_ratio = worst_ratio.max(max / min);
    }
    let slopes: Vec<Option<f64>> = studies.iter().map(|(_, s)| slope_s(s)).collect();
    let pass = worst_ratio <= 2.0 && slopes.iter().all(|s| s.is_some_and(|v| v >= 0.85));
    let detail = studies
        .iter()
        .zip(&slopes)
        .map(|((m, s), sl)| format!("m={m}: slope {} [{}]", fmt_opt(*sl), rows(s)))
        .collect::<Vec<_>>()
        .join("; ");
    Ok(Check::new(
        pass,
        format!("max SE ratio across m {worst_ratio:.3} (<= 2), slopes >= 0.85; {detail}"),
    ))
}

// 7. Slower decay of the expansion gives a slower QMC rate.
fn decay_sensitivity() -> qmcts::Result<Check> {
    let slow = run_sample_study(&se_config(2.25, 8), None)?;
    let fast = run_sample_study(&se_config(2.5, 8), None)?;
    let (a, b) = (slope_s(&slow), slope_s(&fast));
    let pass = in_band(a, 0.62, 0.92) && in_band(b, 0.75, 1.25) && a < b;
    Ok(Check::new(
        pass,
        format!(
            "alpha=9/4 slope {} (0.77 +- 0.15) < alpha=5/2 slope {} (1.0 +- 0.25); [{}] vs [{}]",
            fmt_opt(a),
            fmt_opt(b),
            rows(&slow),
            rows(&fast)
        ),
    ))
}

// 8. Fast CBC equals component-wise exhaustive search.
fn cbc_oracle() -> qmcts::Result<Check> {
    let pot = build_cosine_potential(4.5, 3, 1.0)?;
    let b = decay_sequences(&pot)?.b;
    let spec = build_weight_spec(&b, 0.5, 0.1, 1.0)?;
    let gaussian = GaussianExpKernel::new(spec.theta.clone())?;
    let product = PodWeights::product(vec![1.0, 0.5, 0.25], 3)?;
    let cases: [(&PodWeights, &dyn KernelProvider, &str); 2] = [
        (&spec.pod_weights(), &gaussian, "gaussian/POD"),
        (&product, &ProductCubeKernel, "cube/product"),
    ];
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for (weights, kernel, name) in cases {
        for n in [5, 8, 13] {
            for m in 1..=3 {
                let fast = cbc_construct(m, n, weights, kernel)?;
                let (z, _) = common::exhaustive_cbc(m, n, weights, kernel);
                checked += 1;
                if fast.vector.z() != &z[..] || fast.vector.z().iter().any(|&c| gcd(c, n) != 1) {
                    mismatches.push(format!(
                        "{name} m={m} N={n}: {:?} vs {z:?}",
                        fast.vector.z()
                    ));
                }
            }
        }
    }
    Ok(Check::new(
        mismatches.is_empty(),
        format!(
            "{checked} (kernel, m, N) cases, {} mismatches {}",
            mismatches.len(),
            mismatches.join("; ")
        ),
    ))
}

// 9. Round trip of the normal quantile.
fn normal_map() -> qmcts::Result<Check> {
    let n = 100_000;
    let (lo, hi) = (1e-12, 1.0 - 1e-12);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let u = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        worst = worst.max((cdf(inv_cdf(u)?) - u).abs());
    }
    let mut tail: f64 = 0.0;
    for i in 0..=1000 {
        let u = 10f64.powf(-12.0 + 11.0 * i as f64 / 1000.0);
        tail = tail.max((cdf(inv_cdf(u)?) - u).abs());
        tail = tail.max((cdf(inv_cdf(1.0 - u)?) - (1.0 - u)).abs());
    }
    Ok(Check::new(
        worst <= 1e-12 && tail <= 1e-12,
        format!(
            "max |Phi(inv_Phi(u)) - u| = {worst:.2e} on 1e5 points, {tail:.2e} on log-spaced tails"
        ),
    ))
}

// 10. Lattice estimate against a dense Monte Carlo oracle; SE formula.
fn estimator_oracles() -> qmcts::Result<Check> {
    let cfg = ExperimentConfig {
        m: 2,
        grid: 64,
        tau: 1.0 / 80.0,
        t_final: 0.25,
        scheme: "strang".into(),
        n: 64,
        r: 8,
        observable: ObservableSpec::Point(PI / 4.0),
        ..Default::default()
    };
    let problem = Problem::from_config(&cfg)?;
    let qmc = qmc_estimate(
        &problem,
        &generating_vector(&cfg, cfg.n)?,
        &random_shifts(cfg.r, cfg.m, cfg.seed)?,
    )?;
    let mc = mc_estimate(&problem, 10_000, 100, cfg.seed + 1)?;
    let (qse, mse) = (
        qmc.std_error.clone().unwrap(),
        mc.std_error.clone().unwrap(),
    );
    let mut pass = true;
    let mut detail = Vec::new();
    for (i, name) in ["S", "J"].iter().enumerate() {
        let combined = (qse[i].powi(2) + mse[i].powi(2)).sqrt();
        let z = (qmc.mean[i] - mc.mean[i]).abs() / combined;
        pass &= z <= 4.0;
        detail.push(format!(
            "{name}(pi/4): qmc {:.8} mc {:.8} |diff|/SE {z:.2}",
            qmc.mean[i], mc.mean[i]
        ));
    }
    let mut worst: f64 = 0.0;
    for values in qmc
        .per_shift
        .iter()
        .map(|q| q[0])
        .collect::<Vec<_>>()
        .windows(8)
        .chain(
            [
                vec![0.0, 2.0],
                vec![1e3, 1e3 + 1e-9, 1e3 - 3e-9, 1e3 + 2e-9],
            ]
            .iter()
            .map(|v| &v[..]),
        )
    {
        let r = values.len() as f64;
        let mean = values.iter().sum::<f64>() / r;
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        let two_pass = (ss / (r * (r - 1.0))).sqrt();
        worst = worst.max((standard_error(values)? - two_pass).abs() / two_pass);
    }
    pass &= worst <= 1e-12;
    detail.push(format!("SE formula vs two-pass: max rel diff {worst:.1e}"));
    Ok(Check::new(pass, detail.join("; ")))
}

// 11. Exact solutions.
fn exact_solutions() -> qmcts::Result<Check> {
    let grid = TorusGrid::new(64)?;
    let c = 0.7;
    let v = vec![c; 64];
    let mut worst: f64 = 0.0;
    for scheme in [lie_scheme(), strang_scheme()] {
        for k in [-5i64, -1, 0, 2, 7] {
            for (tau, n) in [(0.37, 3), (0.1, 10), (1e-3, 1000), (1.0 / 640.0, 640)] {
                let f = sample_initial(&grid, &InitialData::PlaneWave(k))?;
                let out = propagate(&f, &scheme, tau, n, &v)?;
                let t = tau * n as f64;
                let phase = -(0.5 * (k * k) as f64 + c) * t;
                for (i, val) in out.values().iter().enumerate() {
                    let exact = Complex64::from_polar(1.0, k as f64 * grid.node(i) + phase);
                    worst = worst.max((val - exact).norm());
                }
            }
        }
    }
    let mut j_err: f64 = 0.0;
    for k in [-7i64, -2, 1, 3, 10] {
        let f = sample_initial(&grid, &InitialData::PlaneWave(k))?;
        for j in current_density(&f).values() {
            j_err = j_err.max((j - k as f64).abs());
        }
    }
    let real = sample_initial(&grid, &InitialData::Gaussian)?;
    let j_real = current_density(&real)
        .values()
        .iter()
        .fold(0.0f64, |a, v| a.max(v.abs()));
    let s_ok = position_density(&real).values().iter().all(|v| *v >= 0.0);
    Ok(Check::new(
        worst <= 1e-11 && j_err <= 1e-11 && j_real <= 1e-11 && s_ok,
        format!(
            "plane-wave phase error {worst:.1e}, J(plane wave) error {j_err:.1e}, \
             |J(real)| {j_real:.1e} (all <= 1e-11)"
        ),
    ))
}

// 12. Byte-identical outputs for repeated runs.
fn determinism() -> qmcts::Result<Check> {
    let base = ExperimentConfig {
        m: 3,
        grid: 32,
        tau: 0.05,
        t_final: 0.5,
        r: 4,
        n: 32,
        n_ladder: vec![16, 32, 64],
        tau_ladder: vec![0.25, 0.125, 0.0625],
        ref_grid: 32,
        ref_tau: 0.0125,
        ref_nodes: 6,
        fit_window: 3,
        ..Default::default()
    };
    let dirs: Vec<tempfile::TempDir> = (0..2).map(|_| tempfile::tempdir().unwrap()).collect();
    let runs = |threads: usize, root: &std::path::Path| -> qmcts::Result<()> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            let se = ExperimentConfig {
                error_mode: ErrorMode::StandardError,
                ..base.clone()
            };
            let zero = std::time::Duration::ZERO;
            emit_study(
                &root.join("qmc"),
                "study-samples",
                &se,
                &run_sample_study(&se, None)?,
                zero,
            )?;
            let mc = ExperimentConfig {
                sampler: SamplerKind::Mc,
                ..se.clone()
            };
            emit_study(
                &root.join("mc"),
                "study-samples",
                &mc,
                &run_sample_study(&mc, None)?,
                zero,
            )?;
            let l2 = matched_reference_config(&base);
            let reference = reference_solution(&l2)?;
            emit_study(
                &root.join("l2"),
                "study-samples",
                &l2,
                &run_sample_study(&l2, Some(&reference))?,
                zero,
            )?;
            let reference = reference_solution(&base)?;
            emit_study(
                &root.join("time"),
                "study-time",
                &base,
                &run_time_study(&base, &reference)?,
                zero,
            )?;
            let est = qmcts::harness::run_estimate(&base)?;
            emit_estimate(&root.join("estimate"), &base, &est, zero)?;
            write_table(&root.join("estimate").join("extra.csv"), &["k"], &[])?;
            Ok(())
        })
    };
    runs(1, dirs[0].path())?;
    runs(3, dirs[1].path())?;
    let mut compared = 0;
    let mut differing = Vec::new();
    for sub in ["qmc", "mc", "l2", "time", "estimate"] {
        for entry in std::fs::read_dir(dirs[0].path().join(sub)).unwrap() {
            let name = entry.unwrap().file_name();
            if name == "timing.json" {
                continue;
            }
            let a = std::fs::read(dirs[0].path().join(sub).join(&name)).unwrap();
            let b = std::fs::read(dirs[1].path().join(sub).join(&name)).unwrap();
            compared += 1;
            if a != b {
                differing.push(format!("{sub}/{}", name.to_string_lossy()));
            }
        }
    }
    Ok(Check::new(
        differing.is_empty() && compared >= 10,
        format!(
            "{compared} CSV/JSON files compared across runs (1 vs 3 threads), differing: {:?}",
            differing
        ),
    ))
}

fn main() {
    let selected: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let wanted = |id: u32| selected.is_empty() || selected.contains(&id);
    let mut failures = 0;
    let mut report = |id: u32, name: &str, start: Instant, outcome: qmcts::Result<Check>| {
        let check = outcome.unwrap_or_else(Check::error);
        if !check.pass {
            failures += 1;
        }
        println!(
            "{} criterion {id:>2} {name} ({:.1}s): {}",
            if check.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            check.detail
        );
        std::io::stdout().flush().ok();
    };

    let cheap: [(u32, &str, Criterion); 5] = [
        (1, "unitarity", unitarity),
        (8, "cbc-vs-exhaustive", cbc_oracle),
        (9, "normal-map", normal_map),
        (11, "exact-solutions", exact_solutions),
        (12, "determinism", determinism),
    ];
    for (id, name, f) in cheap {
        if wanted(id) {
            let t = Instant::now();
            report(id, name, t, f());
        }
    }
    if wanted(10) {
        let t = Instant::now();
        report(10, "estimator-oracles", t, estimator_oracles());
    }
    if wanted(2) || wanted(3) {
        let t = Instant::now();
        match time_study_reference(&time_study_config("strang")) {
            Ok(reference) => {
                println!(
                    "     reference: {} sampled fine solves, M = 256, tau = 1e-4 ({:.1}s)",
                    reference.nodes_used,
                    t.elapsed().as_secs_f64()
                );
                if wanted(2) {
                    let t = Instant::now();
                    report(
                        2,
                        "time-order-lie",
                        t,
                        temporal_order("lie", 0.9, 1.1, &reference),
                    );
                }
                if wanted(3) {
                    let t = Instant::now();
                    report(
                        3,
                        "time-order-strang",
                        t,
                        temporal_order("strang", 1.9, 2.1, &reference),
                    );
                }
            }
            Err(e) => {
                for id in [2, 3] {
                    if wanted(id) {
                        report(
                            id,
                            "time-order",
                            t,
                            Err(qmcts::Error::Config(e.to_string())),
                        );
                    }
                }
            }
        }
    }
    if wanted(4) || wanted(5) {
        let t = Instant::now();
        match reference_solution(&matched_reference_config(&sample_l2_config(
            SamplerKind::Qmc,
        ))) {
            Ok(reference) => {
                if wanted(4) {
                    report(
                        4,
                        "qmc-rate",
                        t,
                        sample_rate(
                            SamplerKind::Qmc,
                            &reference,
                            |s| (0.87..=1.37).contains(&s) && s >= 0.85,
                            "1.12 +- 0.25 and >= 0.85",
                        ),
                    );
                }
                if wanted(5) {
                    let t = Instant::now();
                    report(
                        5,
                        "mc-rate",
                        t,
                        sample_rate(
                            SamplerKind::Mc,
                            &reference,
                            |s| (0.35..=0.65).contains(&s),
                            "0.5 +- 0.15",
                        ),
                    );
                }
            }
            Err(e) => {
                for id in [4, 5] {
                    if wanted(id) {
                        report(
                            id,
                            "sample-rate",
                            t,
                            Err(qmcts::Error::Config(e.to_string())),
                        );
                    }
                }
            }
        }
    }
    if wanted(6) {
        let t = Instant::now();
        report(6, "dimension-independence", t, dimension_independence());
    }
    if wanted(7) {
        let t = Instant::now();
        report(7, "decay-sensitivity", t, decay_sensitivity());
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        if std::env::var_os("QMCTS_ACCEPTANCE_STRICT").is_some() {
            std::process::exit(1);
        }
    } else {
        println!("all selected acceptance criteria passed");
    }
}
