//! Operator-splitting compositions of the kinetic and potential subflows.

use std::fmt;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{
    apply_kinetic, apply_pointwise, kinetic_multipliers, potential_multipliers, TorusGrid,
    WaveField,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stage {
    /// `exp(i α τ ∂ₓ²/2)`.
    Kinetic(f64),
    /// `exp(-i β τ V)`.
    Potential(f64),
}

/// Ordered list of stages applied left to right within one time step.
#[derive(Clone, Debug, PartialEq)]
pub struct SplittingScheme {
    name: String,
    stages: Vec<Stage>,
    formal_order: u32,
}

const FRACTION_SUM_TOL: f64 = 1e-12;

impl SplittingScheme {
    /// Rejects empty stage lists, non-finite fractions, and fraction sums other than 1.
    pub fn new(name: impl Into<String>, stages: Vec<Stage>, formal_order: u32) -> Result<Self> {
        if stages.is_empty() {
            return Err(Error::InvalidArgument(
                "splitting scheme has no stages".into(),
            ));
        }
        if formal_order == 0 {
            return Err(Error::InvalidArgument(
                "formal order must be positive".into(),
            ));
        }
        let (mut kin, mut pot) = (0.0, 0.0);
        for s in &stages {
            match *s {
                Stage::Kinetic(a) if a.is_finite() => kin += a,
                Stage::Potential(b) if b.is_finite() => pot += b,
                _ => return Err(Error::NonFinite("stage fraction".into())),
            }
        }
        if (kin - 1.0).abs() > FRACTION_SUM_TOL || (pot - 1.0).abs() > FRACTION_SUM_TOL {
            return Err(Error::InvalidArgument(format!(
                "inconsistent scheme: kinetic fractions sum to {kin}, potential to {pot}"
            )));
        }
        Ok(Self {
            name: name.into(),
            stages,
            formal_order,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn formal_order(&self) -> u32 {
        self.formal_order
    }

    pub fn fraction_sums(&self) -> (f64, f64) {
        self.stages.iter().fold((0.0, 0.0), |(k, p), s| match *s {
            Stage::Kinetic(a) => (k + a, p),
            Stage::Potential(b) => (k, p + b),
        })
    }

    /// Reads a custom scheme: one `kinetic <fraction>` or `potential <fraction>` per
    /// line, optional `order <n>`; `#` starts a comment.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut stages = Vec::new();
        let mut order = 1;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let perr = |msg: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg,
            };
            let mut parts = line.split_whitespace();
            let kind = parts.next().unwrap_or_default().to_ascii_lowercase();
            let value = parts.next().ok_or_else(|| perr("missing value".into()))?;
            if parts.next().is_some() {
                return Err(perr("trailing tokens".into()));
            }
            match kind.as_str() {
                "kinetic" | "k" => stages.push(Stage::Kinetic(
                    value.parse().map_err(|e| perr(format!("{e}")))?,
                )),
                "potential" | "p" => stages.push(Stage::Potential(
                    value.parse().map_err(|e| perr(format!("{e}")))?,
                )),
                "order" => order = value.parse().map_err(|e| perr(format!("{e}")))?,
                other => return Err(perr(format!("unknown stage kind '{other}'"))),
            }
        }
        let name = format!("custom:{}", path.display());
        Self::new(name, stages, order)
    }

    /// Resolves `lie`, `strang` or `custom:<file>`.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "lie" => Ok(lie_scheme()),
            "strang" => Ok(strang_scheme()),
            _ => match name.strip_prefix("custom:") {
                Some(path) => Self::from_file(Path::new(path)),
                None => Err(Error::Config(format!("unknown scheme '{name}'"))),
            },
        }
    }
}

impl fmt::Display for SplittingScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Lie–Trotter: potential flow, then kinetic flow.
pub fn lie_scheme() -> SplittingScheme {
    SplittingScheme::new("lie", vec![Stage::Potential(1.0), Stage::Kinetic(1.0)], 1)
        .expect("lie scheme is consistent")
}

/// Strang: half kinetic, full potential, half kinetic.
pub fn strang_scheme() -> SplittingScheme {
    SplittingScheme::new(
        "strang",
        vec![
            Stage::Kinetic(0.5),
            Stage::Potential(1.0),
            Stage::Kinetic(0.5),
        ],
        2,
    )
    .expect("strang scheme is consistent")
}

/// One step of `scheme` with step size `tau` under potential `potential`.
pub fn step(
    f: &WaveField,
    scheme: &SplittingScheme,
    tau: f64,
    potential: &[f64],
) -> Result<WaveField> {
    propagate_unchecked(f, scheme, tau, 1, potential)
}

/// `nsteps` repeated applications of [`step`].
pub fn propagate(
    f: &WaveField,
    scheme: &SplittingScheme,
    tau: f64,
    nsteps: usize,
    potential: &[f64],
) -> Result<WaveField> {
    if nsteps > 0 && !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "time step must be positive, got {tau}"
        )));
    }
    propagate_unchecked(f, scheme, tau, nsteps, potential)
}

fn propagate_unchecked(
    f: &WaveField,
    scheme: &SplittingScheme,
    tau: f64,
    nsteps: usize,
    potential: &[f64],
) -> Result<WaveField> {
    if !tau.is_finite() {
        return Err(Error::NonFinite("time step".into()));
    }
    let grid = f.grid();
    let mut prop = Propagator::new(grid, scheme, tau);
    let mut out = f.clone();
    prop.evolve(out.values_mut(), potential, nsteps)?;
    Ok(out)
}

/// Precomputed kinetic multipliers for a fixed grid, scheme and step size, plus
/// FFT scratch. One per worker; reused across samples.
pub struct Propagator {
    grid: TorusGrid,
    tau: f64,
    plan: Vec<PlannedStage>,
    /// Merged last-then-first kinetic stage when both ends of the scheme are kinetic.
    seam: Option<usize>,
    kinetic: Vec<Vec<Complex64>>,
    potential_fractions: Vec<f64>,
    potential: Vec<Vec<Complex64>>,
    scratch: Vec<Complex64>,
}

#[derive(Clone, Copy)]
enum PlannedStage {
    Kinetic(usize),
    Potential(usize),
}

impl Propagator {
    pub fn new(grid: &TorusGrid, scheme: &SplittingScheme, tau: f64) -> Self {
        let mut kin_fracs: Vec<f64> = Vec::new();
        let mut pot_fracs: Vec<f64> = Vec::new();
        let mut plan = Vec::with_capacity(scheme.stages().len());
        for s in scheme.stages() {
            match *s {
                Stage::Kinetic(a) => {
                    let idx = index_of(&mut kin_fracs, a);
                    plan.push(PlannedStage::Kinetic(idx));
                }
                Stage::Potential(b) => {
                    let idx = index_of(&mut pot_fracs, b);
                    plan.push(PlannedStage::Potential(idx));
                }
            }
        }
        let seam = match (scheme.stages().first(), scheme.stages().last()) {
            (Some(Stage::Kinetic(a)), Some(Stage::Kinetic(b))) if scheme.stages().len() > 1 => {
                Some(index_of(&mut kin_fracs, a + b))
            }
            _ => None,
        };
        let kinetic = kin_fracs
            .iter()
            .map(|a| kinetic_multipliers(grid, a * tau))
            .collect();
        Self {
            grid: grid.clone(),
            tau,
            plan,
            seam,
            kinetic,
            potential: vec![Vec::new(); pot_fracs.len()],
            potential_fractions: pot_fracs,
            scratch: vec![Complex64::default(); grid.scratch_len()],
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    /// Advances `values` (physical space) by `nsteps` steps under `potential`.
    pub fn evolve(
        &mut self,
        values: &mut [Complex64],
        potential: &[f64],
        nsteps: usize,
    ) -> Result<()> {
        self.grid.check_len(values.len())?;
        self.grid.check_len(potential.len())?;
        if potential.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("potential".into()));
        }
        if nsteps == 0 {
            return Ok(());
        }
        for (mult, b) in self.potential.iter_mut().zip(&self.potential_fractions) {
            *mult = potential_multipliers(potential, b * self.tau);
        }
        for _ in 0..nsteps {
            for i in 0..self.plan.len() {
                self.apply(self.plan[i], values);
            }
        }
        Ok(())
    }

    /// Same as [`evolve`](Self::evolve) but merges the trailing kinetic stage of
    /// each step with the leading one of the next (e.g. two Strang half steps
    /// become one full kinetic step). Equal to `evolve` up to roundoff; falls
    /// back to it when the scheme does not start and end with kinetic stages.
    pub fn evolve_fused(
        &mut self,
        values: &mut [Complex64],
        potential: &[f64],
        nsteps: usize,
    ) -> Result<()> {
        let Some(seam) = self.seam else {
            return self.evolve(values, potential, nsteps);
        };
        self.grid.check_len(values.len())?;
        self.grid.check_len(potential.len())?;
        if potential.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("potential".into()));
        }
        if nsteps == 0 {
            return Ok(());
        }
        for (mult, b) in self.potential.iter_mut().zip(&self.potential_fractions) {
            *mult = potential_multipliers(potential, b * self.tau);
        }
        let last = self.plan.len() - 1;
        self.apply(self.plan[0], values);
        for n in 0..nsteps {
            for i in 1..last {
                self.apply(self.plan[i], values);
            }
            if n + 1 < nsteps {
                self.apply(PlannedStage::Kinetic(seam), values);
            } else {
                self.apply(self.plan[last], values);
            }
        }
        Ok(())
    }

    #[inline]
    fn apply(&mut self, stage: PlannedStage, values: &mut [Complex64]) {
        match stage {
            PlannedStage::Kinetic(i) => {
                apply_kinetic(&self.grid, values, &self.kinetic[i], &mut self.scratch)
            }
            PlannedStage::Potential(i) => apply_pointwise(values, &self.potential[i]),
        }
    }
}

fn index_of(list: &mut Vec<f64>, v: f64) -> usize {
    match list.iter().position(|&x| x.to_bits() == v.to_bits()) {
        Some(i) => i,
        None => {
            list.push(v);
            list.len() - 1
        }
    }
}
