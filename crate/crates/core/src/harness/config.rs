//! Experiment configuration: a flat `key = value` file whose keys can all be
//! overridden individually.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{build_cosine_potential, KLPotential};
use crate::spectral::{InitialData, TorusGrid};
use crate::splitting::SplittingScheme;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Qmc,
    Mc,
}

impl FromStr for SamplerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qmc" => Ok(Self::Qmc),
            "mc" => Ok(Self::Mc),
            _ => Err(Error::Config(format!("unknown sampler `{s}` (qmc | mc)"))),
        }
    }
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Qmc => "qmc",
            Self::Mc => "mc",
        })
    }
}

/// What each sample solve reports.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum ObservableSpec {
    /// `S` and `J` on every grid node.
    Field,
    /// `S(x0)` and `J(x0)`.
    Point(f64),
}

impl FromStr for ObservableSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "field" {
            return Ok(Self::Field);
        }
        let x = s.strip_prefix("point:").ok_or_else(|| {
            Error::Config(format!("unknown observable `{s}` (field | point:<x0>)"))
        })?;
        let x0 = parse_real(x)?;
        if !(-std::f64::consts::PI..std::f64::consts::PI).contains(&x0) {
            return Err(Error::Config(format!("point {x0} outside [-pi, pi)")));
        }
        Ok(Self::Point(x0))
    }
}

impl fmt::Display for ObservableSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Field => f.write_str("field"),
            Self::Point(x) => write!(f, "point:{x:?}"),
        }
    }
}

impl From<ObservableSpec> for String {
    fn from(o: ObservableSpec) -> String {
        o.to_string()
    }
}

impl TryFrom<String> for ObservableSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Error measure used by sample studies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorMode {
    /// Relative L² error of the expected fields against a reference solution.
    L2,
    /// Root-mean-square L² error of the per-shift estimates divided by `√R`,
    /// relative to the reference: an `R`-sample estimate of the RMS error of
    /// the mean that is far less noisy than a single realization.
    L2Rms,
    /// Standard error over the random shifts (or batches).
    StandardError,
}

impl FromStr for ErrorMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l2" => Ok(Self::L2),
            "l2-rms" => Ok(Self::L2Rms),
            "standard-error" | "se" => Ok(Self::StandardError),
            _ => Err(Error::Config(format!(
                "unknown error mode `{s}` (l2 | l2-rms | standard-error)"
            ))),
        }
    }
}

impl fmt::Display for ErrorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::L2 => "l2",
            Self::L2Rms => "l2-rms",
            Self::StandardError => "standard-error",
        })
    }
}

/// Reference used by time-step studies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeReference {
    /// The study's own sampler (same points and shifts) applied to the fine
    /// discretization, so the sampling error cancels in the difference.
    Sampled,
    /// Tensor Gauss–Hermite collocation of the fine discretization.
    Collocation,
}

impl FromStr for TimeReference {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sampled" => Ok(Self::Sampled),
            "collocation" | "gh" => Ok(Self::Collocation),
            _ => Err(Error::Config(format!(
                "unknown time reference `{s}` (sampled | collocation)"
            ))),
        }
    }
}

impl fmt::Display for TimeReference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Sampled => "sampled",
            Self::Collocation => "collocation",
        })
    }
}

/// Accepts plain reals plus `a/b` and `a^b`.
pub fn parse_real(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || Error::Config(format!("cannot parse `{s}` as a number"));
    let v = if let Some((a, b)) = s.split_once('/') {
        parse_real(a)? / parse_real(b)?
    } else if let Some((a, b)) = s.split_once('^') {
        parse_real(a)?.powf(parse_real(b)?)
    } else {
        s.parse::<f64>().map_err(|_| bad())?
    };
    if !v.is_finite() {
        return Err(bad());
    }
    Ok(v)
}

pub fn parse_count(s: &str) -> Result<usize> {
    let v = parse_real(s)?;
    if v < 0.0 || v.fract() != 0.0 || v > u32::MAX as f64 {
        return Err(Error::Config(format!("`{s}` is not a nonnegative integer")));
    }
    Ok(v as usize)
}

fn parse_list<T>(s: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(item)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Potential family; only `cosine` is built in.
    pub family: String,
    pub alpha: f64,
    pub m: usize,
    pub offset: f64,
    /// Grid size `M`.
    pub grid: usize,
    /// `lie`, `strang` or `custom:<path>`.
    pub scheme: String,
    pub tau: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    /// `gaussian` or `plane-wave:<k>`.
    pub initial: String,
    pub sampler: SamplerKind,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "R")]
    pub r: usize,
    pub seed: u64,
    /// `cbc` or `file:<path>`; `{N}` in the path is replaced by the point count.
    pub generator: String,
    /// Summability exponent; inferred from the decay sequence when absent.
    pub p: Option<f64>,
    pub delta: f64,
    pub observable: ObservableSpec,
    pub error_mode: ErrorMode,
    pub output: PathBuf,
    pub ref_tau: f64,
    pub ref_grid: usize,
    pub ref_nodes: usize,
    pub time_reference: TimeReference,
    pub tau_ladder: Vec<f64>,
    pub n_ladder: Vec<usize>,
    /// Number of trailing ladder points used in rate fits.
    pub fit_window: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            family: "cosine".into(),
            alpha: 4.5,
            m: 4,
            offset: 1.0,
            grid: 128,
            scheme: "strang".into(),
            tau: 1e-3,
            t_final: 1.0,
            initial: "gaussian".into(),
            sampler: SamplerKind::Qmc,
            n: 1024,
            r: 16,
            seed: 2024,
            generator: "cbc".into(),
            p: None,
            delta: 0.1,
            observable: ObservableSpec::Field,
            error_mode: ErrorMode::L2,
            output: PathBuf::from("out"),
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
            n_ladder: (8..=13).map(|k| 1usize << k).collect(),
            fit_window: 4,
        }
    }
}

pub const KEYS: &[&str] = &[
    "family",
    "alpha",
    "m",
    "offset",
    "grid",
    "scheme",
    "tau",
    "T",
    "initial",
    "sampler",
    "N",
    "R",
    "seed",
    "generator",
    "p",
    "delta",
    "observable",
    "error_mode",
    "output",
    "ref_tau",
    "ref_grid",
    "ref_nodes",
    "time_reference",
    "tau_ladder",
    "n_ladder",
    "fit_window",
];

impl ExperimentConfig {
    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "family" => self.family = value.to_string(),
            "alpha" => self.alpha = parse_real(value)?,
            "m" => self.m = parse_count(value)?,
            "offset" => self.offset = parse_real(value)?,
            "grid" | "M" => self.grid = parse_count(value)?,
            "scheme" => self.scheme = value.to_string(),
            "tau" => self.tau = parse_real(value)?,
            "T" | "t_final" => self.t_final = parse_real(value)?,
            "initial" => self.initial = value.to_string(),
            "sampler" => self.sampler = value.parse()?,
            "N" | "n" => self.n = parse_count(value)?,
            "R" | "r" => self.r = parse_count(value)?,
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| Error::Config(format!("bad seed `{value}`")))?
            }
            "generator" => self.generator = value.to_string(),
            "p" => {
                self.p = match value {
                    "" | "auto" => None,
                    v => Some(parse_real(v)?),
                }
            }
            "delta" => self.delta = parse_real(value)?,
            "observable" => self.observable = value.parse()?,
            "error_mode" => self.error_mode = value.parse()?,
            "output" => self.output = PathBuf::from(value),
            "ref_tau" => self.ref_tau = parse_real(value)?,
            "ref_grid" => self.ref_grid = parse_count(value)?,
            "ref_nodes" => self.ref_nodes = parse_count(value)?,
            "time_reference" => self.time_reference = value.parse()?,
            "tau_ladder" => self.tau_ladder = parse_list(value, parse_real)?,
            "n_ladder" => self.n_ladder = parse_list(value, parse_count)?,
            "fit_window" => self.fit_window = parse_count(value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                msg: format!("expected `key = value`, found `{line}`"),
            })?;
            self.set(k.trim(), v).map_err(|e| Error::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                msg: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text, path)?;
        Ok(cfg)
    }

    /// Flat `key = value` rendering accepted by [`apply_text`](Self::apply_text).
    pub fn to_text(&self) -> String {
        let list = |v: Vec<String>| v.join(", ");
        let mut lines = vec![
            format!("family = {}", self.family),
            format!("alpha = {:?}", self.alpha),
            format!("m = {}", self.m),
            format!("offset = {:?}", self.offset),
            format!("grid = {}", self.grid),
            format!("scheme = {}", self.scheme),
            format!("tau = {:?}", self.tau),
            format!("T = {:?}", self.t_final),
            format!("initial = {}", self.initial),
            format!("sampler = {}", self.sampler),
            format!("N = {}", self.n),
            format!("R = {}", self.r),
            format!("seed = {}", self.seed),
            format!("generator = {}", self.generator),
        ];
        lines.push(match self.p {
            Some(p) => format!("p = {p:?}"),
            None => "p = auto".into(),
        });
        lines.extend([
            format!("delta = {:?}", self.delta),
            format!("observable = {}", self.observable),
            format!("error_mode = {}", self.error_mode),
            format!("output = {}", self.output.display()),
            format!("ref_tau = {:?}", self.ref_tau),
            format!("ref_grid = {}", self.ref_grid),
            format!("ref_nodes = {}", self.ref_nodes),
            format!("time_reference = {}", self.time_reference),
            format!(
                "tau_ladder = {}",
                list(self.tau_ladder.iter().map(|t| format!("{t:?}")).collect())
            ),
            format!(
                "n_ladder = {}",
                list(self.n_ladder.iter().map(|n| n.to_string()).collect())
            ),
            format!("fit_window = {}", self.fit_window),
        ]);
        lines.join("\n") + "\n"
    }

    /// Number of steps reaching `T` with step `tau`; `T` must be a multiple of `tau`.
    pub fn steps_for(&self, tau: f64) -> Result<usize> {
        steps_for(self.t_final, tau)
    }

    pub fn validate(&self) -> Result<()> {
        if self.family != "cosine" {
            return Err(Error::Config(format!(
                "unknown potential family `{}` (cosine)",
                self.family
            )));
        }
        if !(self.alpha > 1.0) {
            return Err(Error::Config(format!(
                "alpha must exceed 1, got {}",
                self.alpha
            )));
        }
        TorusGrid::new(self.grid)?;
        self.scheme()?;
        self.steps_for(self.tau)?;
        self.initial_data()?;
        if self.n == 0 || self.r == 0 {
            return Err(Error::Config("N and R must be at least 1".into()));
        }
        if let Some(p) = self.p {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::Config(format!("p must lie in (0, 1], got {p}")));
            }
        }
        if !(self.delta > 0.0 && self.delta <= 0.5) {
            return Err(Error::Config(format!(
                "delta must lie in (0, 1/2], got {}",
                self.delta
            )));
        }
        if self.generator != "cbc" && !self.generator.starts_with("file:") {
            return Err(Error::Config(format!(
                "unknown generator source `{}` (cbc | file:<path>)",
                self.generator
            )));
        }
        if self.fit_window < 2 {
            return Err(Error::Config("fit_window must be at least 2".into()));
        }
        Ok(())
    }

    pub fn potential(&self) -> Result<KLPotential> {
        build_cosine_potential(self.alpha, self.m, self.offset)
    }

    pub fn scheme(&self) -> Result<SplittingScheme> {
        SplittingScheme::by_name(&self.scheme)
    }

    pub fn initial_data(&self) -> Result<InitialData> {
        if self.initial == "gaussian" {
            return Ok(InitialData::Gaussian);
        }
        if let Some(k) = self.initial.strip_prefix("plane-wave:") {
            let k = k
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad wavenumber in `{}`", self.initial)))?;
            return Ok(InitialData::PlaneWave(k));
        }
        Err(Error::Config(format!(
            "unknown initial data `{}` (gaussian | plane-wave:<k>)",
            self.initial
        )))
    }

    /// Generating-vector file for `n` points, if the source is a file.
    pub fn generator_file(&self, n: usize) -> Option<PathBuf> {
        self.generator
            .strip_prefix("file:")
            .map(|p| PathBuf::from(p.replace("{N}", &n.to_string())))
    }
}

pub fn steps_for(t_final: f64, tau: f64) -> Result<usize> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::Config(format!("tau must be positive, got {tau}")));
    }
    if !(t_final >= 0.0) || !t_final.is_finite() {
        return Err(Error::Config(format!(
            "T must be nonnegative, got {t_final}"
        )));
    }
    let n = (t_final / tau).round();
    if (n * tau - t_final).abs() > 1e-12 * t_final.max(1.0) {
        return Err(Error::Config(format!(
            "T = {t_final} is not an integer multiple of tau = {tau}"
        )));
    }
    Ok(n as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers() {
        assert_eq!(parse_real("1/40").unwrap(), 0.025);
        assert_eq!(parse_real("2^13").unwrap(), 8192.0);
        assert_eq!(parse_real(" 1e-3 ").unwrap(), 1e-3);
        assert!(parse_real("x").is_err());
        assert!(parse_real("1/0").is_err());
        assert_eq!(parse_count("2^10").unwrap(), 1024);
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-1").is_err());
    }

    #[test]
    fn steps() {
        assert_eq!(steps_for(1.0, 1.0 / 640.0).unwrap(), 640);
        assert_eq!(steps_for(1.0, 1e-3).unwrap(), 1000);
        assert_eq!(steps_for(0.0, 1e-3).unwrap(), 0);
        assert!(steps_for(1.0, 0.3).is_err());
        assert!(steps_for(1.0, 0.0).is_err());
    }

    #[test]
    fn text_round_trip() {
        let cfg = ExperimentConfig {
            p: Some(0.9),
            observable: ObservableSpec::Point(std::f64::consts::FRAC_PI_4),
            error_mode: ErrorMode::L2Rms,
            time_reference: TimeReference::Collocation,
            sampler: SamplerKind::Mc,
            ..Default::default()
        };
        let text = cfg.to_text();
        let mut back = ExperimentConfig::default();
        back.apply_text(&text, Path::new("cfg")).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(
            ExperimentConfig::default().to_text().lines().count(),
            KEYS.len()
        );
    }

    #[test]
    fn every_key_is_settable() {
        let defaults = ExperimentConfig::default().to_text();
        for line in defaults.lines() {
            let (k, v) = line.split_once('=').unwrap();
            let k = k.trim();
            assert!(KEYS.contains(&k), "{k}");
            ExperimentConfig::default().set(k, v).unwrap();
        }
    }

    #[test]
    fn rejects_bad_input() {
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.set("nope", "1").is_err());
        assert!(cfg.set("sampler", "sobol").is_err());
        assert!(cfg.set("observable", "point:4").is_err());
        let err = cfg
            .apply_text("m = 2\nbogus line\n", Path::new("c.txt"))
            .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        cfg = ExperimentConfig::default();
        cfg.tau = 0.3;
        assert!(cfg.validate().is_err());
        cfg = ExperimentConfig::default();
        cfg.family = "gauss".into();
        assert!(cfg.validate().is_err());
        cfg = ExperimentConfig::default();
        cfg.initial = "plane-wave:x".into();
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::default().validate().is_ok());
    }

    #[test]
    fn generator_placeholder() {
        let mut cfg = ExperimentConfig::default();
        assert_eq!(cfg.generator_file(64), None);
        cfg.generator = "file:gv/z_{N}.txt".into();
        assert_eq!(cfg.generator_file(64), Some(PathBuf::from("gv/z_64.txt")));
    }
}
