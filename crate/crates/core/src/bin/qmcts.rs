use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Arg, ArgAction, ArgMatches, Command};

use qmcts::harness::config::KEYS;
use qmcts::harness::fit::{fit_rate, FitAxis};
use qmcts::harness::output::{
    emit_estimate, emit_reference, emit_study, ensure_dir, read_table, write_manifest, write_table,
};
use qmcts::harness::{
    generating_vector, matched_reference_config, reference_solution, run_estimate,
    run_sample_study, run_time_study, time_study_reference, ErrorMode, ExperimentConfig,
    ObservableSpec, Problem,
};
use qmcts::lattice::{lattice_points, mc_points, random_shifts, GeneratingVector};
use qmcts::observables::{current_density, position_density};
use qmcts::spectral::WaveField;
use qmcts::{Error, Result};

/// Environment variable selecting the number of worker threads.
const THREADS_VAR: &str = "QMCTS_THREADS";

fn cli() -> Command {
    let mut common = vec![Arg::new("config")
        .long("config")
        .short('c')
        .value_name("FILE")
        .help("key = value configuration file; flags override it")];
    for key in KEYS {
        common.push(
            Arg::new(*key)
                .long(*key)
                .value_name("VALUE")
                .help(format!("override `{key}`")),
        );
    }
    let sub = |name: &'static str, about: &'static str| {
        Command::new(name).about(about).args(common.clone())
    };
    Command::new("qmcts")
        .about(
            "Quasi-Monte Carlo time-splitting for the Schrödinger equation with a random potential",
        )
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(
            sub(
                "solve",
                "solve one sample and write the final state and observables",
            )
            .arg(
                Arg::new("xi")
                    .long("xi")
                    .value_name("LIST")
                    .help("comma-separated parameter vector (default: zeros)"),
            ),
        )
        .subcommand(
            sub(
                "cbc",
                "construct a generating vector for N points in dimension m",
            )
            .arg(
                Arg::new("out")
                    .long("out")
                    .value_name("FILE")
                    .help("output file (`-` for stdout; default <output>/z_N<N>.txt)"),
            ),
        )
        .subcommand(
            sub("points", "write lattice or Monte Carlo points as CSV")
                .arg(
                    Arg::new("shift")
                        .long("shift")
                        .value_name("K")
                        .value_parser(clap::value_parser!(usize))
                        .help("apply the K-th random shift of the seed (lattice only)"),
                )
                .arg(
                    Arg::new("normal")
                        .long("normal")
                        .action(ArgAction::SetTrue)
                        .help("map lattice points to standard normal space"),
                ),
        )
        .subcommand(sub("estimate", "estimate the expected observable"))
        .subcommand(sub(
            "study-time",
            "time-step convergence study against a fine reference (see time_reference)",
        ))
        .subcommand(sub("study-samples", "sample-size convergence study"))
        .subcommand(sub(
            "reference",
            "tensor Gauss-Hermite reference expectation (m <= 4)",
        ))
        .subcommand(
            Command::new("fit")
                .about("fit a convergence rate to a study CSV")
                .arg(Arg::new("csv").required(true).value_name("FILE"))
                .arg(
                    Arg::new("column")
                        .long("column")
                        .default_value("err_S")
                        .help("error column to fit"),
                )
                .arg(
                    Arg::new("window")
                        .long("window")
                        .value_parser(clap::value_parser!(usize))
                        .help("number of trailing rows to use (default: all)"),
                ),
        )
}

fn load_config(m: &ArgMatches) -> Result<ExperimentConfig> {
    let mut cfg = match m.get_one::<String>("config") {
        Some(path) => ExperimentConfig::from_file(Path::new(path))?,
        None => ExperimentConfig::default(),
    };
    for key in KEYS {
        if let Some(v) = m.get_one::<String>(key) {
            cfg.set(key, v)?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_xi(text: Option<&String>, m: usize) -> Result<Vec<f64>> {
    let Some(text) = text else {
        return Ok(vec![0.0; m]);
    };
    let xi = text
        .split(',')
        .map(|s| qmcts::harness::config::parse_real(s.trim()))
        .collect::<Result<Vec<_>>>()?;
    if xi.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: xi.len(),
        });
    }
    Ok(xi)
}

fn solve(m: &ArgMatches, cfg: &ExperimentConfig) -> Result<()> {
    let start = Instant::now();
    let xi = parse_xi(m.get_one("xi"), cfg.m)?;
    let problem = Problem::from_config(cfg)?;
    let grid = problem.grid().clone();
    let psi = WaveField::new(&grid, problem.worker().solve(&xi)?.to_vec())?;
    let s = position_density(&psi);
    let j = current_density(&psi);
    let rows: Vec<Vec<f64>> = (0..grid.size())
        .map(|k| {
            let v = psi.values()[k];
            vec![grid.node(k), v.re, v.im, s.values()[k], j.values()[k]]
        })
        .collect();
    ensure_dir(&cfg.output)?;
    write_table(
        &cfg.output.join("solve.csv"),
        &["x", "re", "im", "S", "J"],
        &rows,
    )?;
    write_manifest(
        &cfg.output,
        "solve",
        cfg,
        &["solve.csv".into()],
        &serde_json::json!({ "xi": xi }),
        start.elapsed(),
    )?;
    Ok(())
}

fn cbc(m: &ArgMatches, cfg: &ExperimentConfig) -> Result<()> {
    let gv = generating_vector(cfg, cfg.n)?;
    match m.get_one::<String>("out").map(String::as_str) {
        Some("-") => print!("{}", gv.to_text()),
        Some(path) => gv.write(Path::new(path))?,
        None => {
            ensure_dir(&cfg.output)?;
            let path = cfg.output.join(format!("z_N{}.txt", cfg.n));
            gv.write(&path)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn points(m: &ArgMatches, cfg: &ExperimentConfig) -> Result<()> {
    let pts = match cfg.sampler {
        qmcts::harness::SamplerKind::Qmc => {
            let gv: GeneratingVector = generating_vector(cfg, cfg.n)?;
            let shift = match m.get_one::<usize>("shift") {
                Some(&k) => random_shifts(k + 1, cfg.m, cfg.seed)?.shifts.swap_remove(k),
                None => vec![0.0; cfg.m],
            };
            let pts = lattice_points(&gv, &shift)?;
            if m.get_flag("normal") {
                qmcts::normal::map_points(&pts)?.points
            } else {
                pts
            }
        }
        qmcts::harness::SamplerKind::Mc => mc_points(cfg.n, cfg.m, cfg.seed)?,
    };
    let mut header = vec!["j".to_string()];
    header.extend((1..=cfg.m).map(|d| format!("x{d}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<f64>> = pts
        .into_iter()
        .enumerate()
        .map(|(j, p)| std::iter::once((j + 1) as f64).chain(p).collect())
        .collect();
    ensure_dir(&cfg.output)?;
    write_table(&cfg.output.join("points.csv"), &header, &rows)
}

fn fit(m: &ArgMatches) -> Result<()> {
    let path = PathBuf::from(m.get_one::<String>("csv").unwrap());
    let (header, rows) = read_table(&path)?;
    let column = m.get_one::<String>("column").unwrap();
    let idx = header
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| Error::Config(format!("no column `{column}` in {}", path.display())))?;
    let axis = match header.first().map(String::as_str) {
        Some("tau") => FitAxis::TimeStep,
        _ => FitAxis::Samples,
    };
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[idx])).collect();
    let f = fit_rate(&pts, m.get_one::<usize>("window").copied(), axis, None)?;
    println!("{}", serde_json::to_string_pretty(&f)?);
    Ok(())
}

fn run(matches: &ArgMatches) -> Result<()> {
    let (name, m) = matches.subcommand().expect("subcommand required");
    if name == "fit" {
        return fit(m);
    }
    let cfg = load_config(m)?;
    let start = Instant::now();
    match name {
        "solve" => solve(m, &cfg),
        "cbc" => cbc(m, &cfg),
        "points" => points(m, &cfg),
        "estimate" => {
            let result = run_estimate(&cfg)?;
            emit_estimate(&cfg.output, &cfg, &result, start.elapsed())
        }
        "reference" => {
            let reference = reference_solution(&cfg)?;
            emit_reference(&cfg.output, &cfg, &reference, start.elapsed())
        }
        "study-time" => {
            let reference = time_study_reference(&cfg)?;
            let study = run_time_study(&cfg, &reference)?;
            emit_study(&cfg.output, name, &cfg, &study, start.elapsed())
        }
        "study-samples" => {
            let study = match cfg.error_mode {
                ErrorMode::L2 | ErrorMode::L2Rms => {
                    let reference = reference_solution(&matched_reference_config(&cfg))?;
                    run_sample_study(&cfg, Some(&reference))?
                }
                ErrorMode::StandardError => run_sample_study(&cfg, None)?,
            };
            if let ObservableSpec::Point(x0) = cfg.observable {
                log::info!("point observable at x0 = {x0}");
            }
            emit_study(&cfg.output, name, &cfg, &study, start.elapsed())
        }
        _ => unreachable!("unknown subcommand {name}"),
    }
}

fn init_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_VAR} must be a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("cannot start {n} worker threads: {e}")))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let matches = cli().get_matches();
    match init_threads().and_then(|_| run(&matches)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
